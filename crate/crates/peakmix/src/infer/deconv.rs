//! Posterior genotype deconvolution.
//!
//! Candidate genotype combinations are discovered by sampling from the
//! posterior charge, but every reported probability is computed exactly by
//! propagation with hard count evidence. Sampling stops once the accumulated
//! exact mass reaches the target, which guarantees that any combination left
//! out has probability at most one minus the covered mass.

use std::collections::BTreeMap;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::infer::{CaseModel, MarkerModel};

/// One ranked genotype combination: a count vector (and dropout count) per
/// unknown contributor.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GenotypeRow {
    /// Per unknown contributor, allele counts over the reported allele set.
    pub counts: Vec<Vec<u8>>,
    /// Per unknown contributor, alleles falling outside the reported set.
    pub dropouts: Vec<u8>,
    pub probability: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GenotypeRanking {
    pub marker: String,
    /// Labels of the allele columns in each row's count vectors.
    pub allele_labels: Vec<f64>,
    pub contributors: Vec<String>,
    pub rows: Vec<GenotypeRow>,
    pub covered_mass: f64,
    pub mass_target: f64,
    /// Sampling stopped before reaching the target.
    pub stalled: bool,
    pub seen_only: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct JointRow {
    pub probability: f64,
    pub per_marker: Vec<GenotypeRow>,
}

#[derive(Clone, Debug, Serialize)]
pub struct JointRanking {
    pub markers: Vec<String>,
    pub contributors: Vec<String>,
    pub rows: Vec<JointRow>,
    pub covered_mass: f64,
    pub mass_target: f64,
    pub stalled: bool,
    pub seen_only: bool,
}

type RowKey = (Vec<Vec<u8>>, Vec<u8>);

fn row_key(
    genotypes: &[Vec<u8>],
    seen_only: bool,
    observed_alleles: &[usize],
) -> RowKey {
    if seen_only {
        let counts: Vec<Vec<u8>> = genotypes
            .iter()
            .map(|g| observed_alleles.iter().map(|&a| g[a]).collect())
            .collect();
        let dropouts: Vec<u8> = counts
            .iter()
            .map(|c: &Vec<u8>| 2 - c.iter().sum::<u8>())
            .collect();
        (counts, dropouts)
    } else {
        (genotypes.to_vec(), vec![0; genotypes.len()])
    }
}

/// Exact posterior probability of one row class by propagation: observation
/// evidence plus hard count evidence on the class-defining alleles.
fn exact_row_probability(
    model: &mut MarkerModel,
    key: &RowKey,
    seen_only: bool,
    observed_alleles: &[usize],
    ln_posterior: f64,
) -> Result<f64> {
    model.reset()?;
    model.enter_observation_evidence(|_, _| true)?;
    for (chain, counts) in key.0.iter().enumerate() {
        if seen_only {
            for (col, &a) in observed_alleles.iter().enumerate() {
                model.enter_count_evidence(chain, a, counts[col])?;
            }
        } else {
            for (a, &c) in counts.iter().enumerate() {
                model.enter_count_evidence(chain, a, c)?;
            }
        }
    }
    Ok(match model.propagate()? {
        Some(n) => (n.ln() - ln_posterior).exp(),
        None => 0.0,
    })
}

fn observed_alleles(model: &MarkerModel) -> Vec<usize> {
    (0..model.ladder.len())
        .filter(|&a| (0..model.trace_count()).any(|t| model.is_observed(t, a)))
        .collect()
}

fn sort_rows(rows: &mut [GenotypeRow]) {
    rows.sort_by(|a, b| {
        b.probability
            .partial_cmp(&a.probability)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| (&a.counts, &a.dropouts).cmp(&(&b.counts, &b.dropouts)))
    });
}

/// Rank the unknown-contributor genotypes of one marker by posterior
/// probability until `mass_target` of the mass is covered.
pub fn deconvolve(
    model: &mut MarkerModel,
    mass_target: f64,
    seen_only: bool,
    max_samples: usize,
    rng: &mut impl Rng,
) -> Result<GenotypeRanking> {
    if !(0.0..=1.0).contains(&mass_target) {
        return Err(Error::domain(format!(
            "mass target {mass_target} outside [0, 1]"
        )));
    }
    let observed = observed_alleles(model);
    let allele_labels: Vec<f64> = if seen_only {
        observed.iter().map(|&a| model.ladder.label(a)).collect()
    } else {
        model.ladder.labels().to_vec()
    };
    let contributors = model.unknown_tags().to_vec();
    if model.unknown_tags().is_empty() {
        return Ok(GenotypeRanking {
            marker: model.ladder.marker.clone(),
            allele_labels,
            contributors,
            rows: vec![GenotypeRow {
                counts: Vec::new(),
                dropouts: Vec::new(),
                probability: 1.0,
            }],
            covered_mass: 1.0,
            mass_target,
            stalled: false,
            seen_only,
        });
    }
    let ln_posterior = model
        .condition_on_observations(|_, _| true)?
        .ok_or_else(|| Error::Numeric("zero posterior mass".into()))?
        .ln();
    let sampler = model.charge().clone();
    let mut seen: BTreeMap<RowKey, f64> = BTreeMap::new();
    let mut covered = 0.0;
    let mut samples = 0usize;
    while covered < mass_target && samples < max_samples {
        samples += 1;
        let config = sampler.sample(rng).map_err(Error::Engine)?;
        let genotypes: Vec<Vec<u8>> = (0..model.unknown_tags().len())
            .map(|i| {
                (0..model.ladder.len())
                    .map(|a| config[model.network.count_node(i, a).index()] as u8)
                    .collect()
            })
            .collect();
        let key = row_key(&genotypes, seen_only, &observed);
        if seen.contains_key(&key) {
            continue;
        }
        let p = exact_row_probability(model, &key, seen_only, &observed, ln_posterior)?;
        covered += p;
        seen.insert(key, p);
    }
    let stalled = covered < mass_target;
    let mut rows: Vec<GenotypeRow> = seen
        .into_iter()
        .map(|((counts, dropouts), probability)| GenotypeRow {
            counts,
            dropouts,
            probability,
        })
        .collect();
    sort_rows(&mut rows);
    Ok(GenotypeRanking {
        marker: model.ladder.marker.clone(),
        allele_labels,
        contributors,
        rows,
        covered_mass: covered,
        mass_target,
        stalled,
        seen_only,
    })
}

/// Rank full profiles jointly across markers; per-marker class probabilities
/// are exact and memoized, and a profile's probability is their product.
pub fn deconvolve_joint(
    model: &mut CaseModel,
    mass_target: f64,
    seen_only: bool,
    max_samples: usize,
    rng: &mut impl Rng,
) -> Result<JointRanking> {
    let contributors: Vec<String> = model
        .hypothesis
        .unknown_tags()
        .into_iter()
        .map(String::from)
        .collect();
    let markers: Vec<String> = model.markers.iter().map(|m| m.ladder.marker.clone()).collect();
    if contributors.is_empty() {
        return Ok(JointRanking {
            markers,
            contributors,
            rows: vec![JointRow {
                probability: 1.0,
                per_marker: Vec::new(),
            }],
            covered_mass: 1.0,
            mass_target,
            stalled: false,
            seen_only,
        });
    }
    let mut samplers = Vec::new();
    let mut ln_posteriors = Vec::new();
    let mut observed_sets = Vec::new();
    for marker in &mut model.markers {
        let ln_post = marker
            .condition_on_observations(|_, _| true)?
            .ok_or_else(|| Error::Numeric("zero posterior mass".into()))?
            .ln();
        samplers.push(marker.charge().clone());
        ln_posteriors.push(ln_post);
        observed_sets.push(observed_alleles(marker));
    }
    let mut memo: Vec<BTreeMap<RowKey, f64>> = vec![BTreeMap::new(); model.markers.len()];
    let mut seen: BTreeMap<Vec<RowKey>, f64> = BTreeMap::new();
    let mut covered = 0.0;
    let mut samples = 0usize;
    while covered < mass_target && samples < max_samples {
        samples += 1;
        let mut profile_key = Vec::with_capacity(model.markers.len());
        for (m_idx, marker) in model.markers.iter_mut().enumerate() {
            let config = samplers[m_idx].sample(rng).map_err(Error::Engine)?;
            let genotypes: Vec<Vec<u8>> = (0..contributors.len())
                .map(|i| {
                    (0..marker.ladder.len())
                        .map(|a| config[marker.network.count_node(i, a).index()] as u8)
                        .collect()
                })
                .collect();
            profile_key.push(row_key(&genotypes, seen_only, &observed_sets[m_idx]));
        }
        if seen.contains_key(&profile_key) {
            continue;
        }
        let mut probability = 1.0;
        for (m_idx, key) in profile_key.iter().enumerate() {
            let p = match memo[m_idx].get(key) {
                Some(&p) => p,
                None => {
                    let p = exact_row_probability(
                        &mut model.markers[m_idx],
                        key,
                        seen_only,
                        &observed_sets[m_idx],
                        ln_posteriors[m_idx],
                    )?;
                    memo[m_idx].insert(key.clone(), p);
                    p
                }
            };
            probability *= p;
        }
        covered += probability;
        seen.insert(profile_key, probability);
    }
    let stalled = covered < mass_target;
    let mut rows: Vec<JointRow> = seen
        .into_iter()
        .map(|(profile_key, probability)| JointRow {
            probability,
            per_marker: profile_key
                .into_iter()
                .map(|(counts, dropouts)| GenotypeRow {
                    counts,
                    dropouts,
                    probability: f64::NAN,
                })
                .collect(),
        })
        .collect();
    // Per-marker probabilities for display.
    for row in &mut rows {
        for (m_idx, gr) in row.per_marker.iter_mut().enumerate() {
            let key = (gr.counts.clone(), gr.dropouts.clone());
            gr.probability = memo[m_idx][&key];
        }
    }
    rows.sort_by(|a, b| {
        b.probability
            .partial_cmp(&a.probability)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| {
                let ka: Vec<_> = a.per_marker.iter().map(|g| (&g.counts, &g.dropouts)).collect();
                let kb: Vec<_> = b.per_marker.iter().map(|g| (&g.counts, &g.dropouts)).collect();
                ka.cmp(&kb)
            })
    });
    Ok(JointRanking {
        markers,
        contributors,
        rows,
        covered_mass: covered,
        mass_target,
        stalled,
        seen_only,
    })
}
