//! Shared test support: brute-force oracles and case generators.
//!
//! The likelihood oracle enumerates every genotype combination of the
//! unknown contributors and sums prior times factor products directly,
//! without touching the junction-tree engine or the peak-model CPT builders.
//! Gamma-level checks use a separately coded log-gamma (Stirling series with
//! recurrence shift) and CDF (adaptive Simpson after lifting the endpoint
//! singularity), independent of the library's series/continued-fraction
//! implementation.

#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::Rng;

use peakmix::infer::{CaseData, Contributor, Hypothesis, Profile, TraceData};
use peakmix::marker::AlleleLadder;
use peakmix::peak::ModelParams;

/// Independently coded gamma routines for cross-checking the library.
pub mod oracle_gamma {
    /// Stirling series with recurrence shift; good to ~1e-13 relative.
    pub fn ln_gamma(x: f64) -> f64 {
        assert!(x > 0.0);
        let mut shift = 0.0;
        let mut z = x;
        while z < 15.0 {
            shift -= z.ln();
            z += 1.0;
        }
        let w = 1.0 / (z * z);
        let series = 1.0 / (12.0 * z)
            - w / (360.0 * z)
            + w * w / (1260.0 * z)
            - w * w * w / (1680.0 * z)
            + w * w * w * w / (1188.0 * z);
        (z - 0.5) * z.ln() - z + 0.5 * (2.0 * std::f64::consts::PI).ln() + series + shift
    }

    pub fn pdf(x: f64, shape: f64, scale: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        ((shape - 1.0) * x.ln() - x / scale - ln_gamma(shape) - shape * scale.ln()).exp()
    }

    fn simpson(_f: &impl Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }

    #[allow(clippy::too_many_arguments)]
    fn adaptive(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: usize,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(f, a, m, fa, flm, fm);
        let right = simpson(f, m, b, fm, frm, fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            adaptive(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + adaptive(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }

    fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        let m = 0.5 * (a + b);
        let fa = f(a);
        let fm = f(m);
        let fb = f(b);
        let whole = simpson(&f, a, b, fa, fm, fb);
        adaptive(&f, a, b, fa, fm, fb, whole, tol, 60)
    }

    /// Regularized lower incomplete gamma by quadrature. The endpoint
    /// singularity for small shapes is lifted with the recurrence
    /// P(s, y) = P(s+1, y) + y^s e^-y / Gamma(s+1) applied twice.
    pub fn cdf(x: f64, shape: f64, scale: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let y = x / scale;
        let boundary = (shape + 2.0 - 1.0).max(1.0);
        let tail1 = (shape * y.ln() - y - ln_gamma(shape + 1.0)).exp();
        let tail2 = ((shape + 1.0) * y.ln() - y - ln_gamma(shape + 2.0)).exp();
        let s2 = shape + 2.0;
        let integrand = |t: f64| {
            if t <= 0.0 {
                0.0
            } else {
                ((s2 - 1.0) * t.ln() - t - ln_gamma(s2)).exp()
            }
        };
        // Integrate to y, splitting at the mode for stability.
        let split = boundary.min(y);
        let p2 = integrate(integrand, 0.0, split, 1e-14)
            + if y > split {
                integrate(integrand, split, y, 1e-14)
            } else {
                0.0
            };
        (p2 + tail1 + tail2).clamp(0.0, 1.0)
    }
}

/// Critical value of the chi-square distribution by bisection on the
/// regularized gamma CDF.
pub fn chi_square_critical(df: usize, alpha: f64) -> f64 {
    let shape = df as f64 / 2.0;
    let target = 1.0 - alpha;
    let mut lo = 0.0;
    let mut hi = df as f64 + 10.0;
    while peakmix::gamma::reg_lower_gamma(shape, hi / 2.0) < target {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if peakmix::gamma::reg_lower_gamma(shape, mid / 2.0) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// All genotype count vectors (two draws) over `allele_count` alleles.
pub fn enumerate_genotypes(allele_count: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    for first in 0..allele_count {
        for second in first..allele_count {
            let mut g = vec![0u8; allele_count];
            g[first] += 1;
            g[second] += 1;
            out.push(g);
        }
    }
    out
}

/// Multinomial prior of one genotype, computed from first principles.
pub fn genotype_prior(freqs: &[f64], counts: &[u8]) -> f64 {
    let mut p = 2.0; // 2! / (1! 1!) for heterozygotes; halved below for homozygotes
    for (a, &c) in counts.iter().enumerate() {
        match c {
            0 => {}
            1 => p *= freqs[a],
            2 => p *= freqs[a] * freqs[a] / 2.0,
            _ => unreachable!(),
        }
    }
    p
}

/// All combinations of `k` genotypes (cartesian power).
pub fn enumerate_combos(genotypes: &[Vec<u8>], k: usize) -> Vec<Vec<Vec<u8>>> {
    let mut combos: Vec<Vec<Vec<u8>>> = vec![Vec::new()];
    for _ in 0..k {
        let mut next = Vec::with_capacity(combos.len() * genotypes.len());
        for combo in &combos {
            for g in genotypes {
                let mut c = combo.clone();
                c.push(g.clone());
                next.push(c);
            }
        }
        combos = next;
    }
    combos
}

/// A complete single-or-multi-trace test case with parameters.
#[derive(Clone, Debug)]
pub struct Instance {
    pub case: CaseData,
    pub hypothesis: Hypothesis,
    pub params: BTreeMap<String, ModelParams>,
}

impl Instance {
    pub fn ladder(&self, m: usize) -> &AlleleLadder {
        &self.case.ladders[m]
    }

    pub fn unknown_tags(&self) -> Vec<String> {
        self.hypothesis
            .unknown_tags()
            .into_iter()
            .map(String::from)
            .collect()
    }
}

/// Random simplex point.
pub fn random_simplex(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n)
        .map(|_| -(rng.random_range(0.0f64..1.0).max(1e-12)).ln())
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

/// Random ladder with strictly increasing integer labels and positive
/// frequencies bounded away from zero.
pub fn random_ladder(rng: &mut impl Rng, marker: &str, allele_count: usize) -> AlleleLadder {
    let labels: Vec<f64> = (0..allele_count).map(|a| 10.0 + a as f64).collect();
    let mut freqs = random_simplex(rng, allele_count);
    // Keep frequencies away from zero for numerically honest priors.
    let floor = 0.02 / allele_count as f64;
    let mut total = 0.0;
    for f in freqs.iter_mut() {
        *f = f.max(floor);
        total += *f;
    }
    freqs.iter_mut().for_each(|f| *f /= total);
    AlleleLadder::new(marker, labels, freqs).expect("random ladder is valid")
}

/// Random model parameters for one trace over the given contributor ids.
pub fn random_params(rng: &mut impl Rng, ids: &[String], threshold: f64) -> ModelParams {
    let fractions = random_simplex(rng, ids.len());
    ModelParams {
        rho: rng.random_range(2.0..25.0),
        xi: rng.random_range(0.0..0.25),
        eta: rng.random_range(15.0..50.0),
        phi: ids
            .iter()
            .cloned()
            .zip(fractions)
            .collect(),
        threshold,
    }
}

/// Random single-trace instance: `unknowns` chains, optional known
/// contributors with random profiles, and a random observed/unobserved
/// pattern with random heights.
pub fn random_instance(
    rng: &mut impl Rng,
    unknowns: usize,
    knowns: usize,
    allele_counts: &[usize],
) -> Instance {
    let threshold = 50.0;
    let mut ladders = Vec::new();
    let mut profiles: BTreeMap<String, Profile> = BTreeMap::new();
    let mut heights: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let genotype_of = |rng: &mut dyn rand::RngCore, a_count: usize| {
        let mut g = vec![0u8; a_count];
        let first = (rng.next_u64() % a_count as u64) as usize;
        let second = (rng.next_u64() % a_count as u64) as usize;
        g[first] += 1;
        g[second] += 1;
        g
    };
    for (m, &a_count) in allele_counts.iter().enumerate() {
        let marker = format!("M{}", m + 1);
        let ladder = random_ladder(rng, &marker, a_count);
        for j in 0..knowns {
            let id = format!("K{}", j + 1);
            let profile = profiles.entry(id).or_default();
            profile
                .counts
                .insert(marker.clone(), genotype_of(rng, a_count));
        }
        let row: Vec<f64> = (0..a_count)
            .map(|_| {
                if rng.random_range(0.0..1.0) < 0.5 {
                    threshold + rng.random_range(0.0f64..450.0)
                } else {
                    0.0
                }
            })
            .collect();
        heights.insert(marker.clone(), row);
        ladders.push(ladder);
    }
    let mut contributors = Vec::new();
    for j in 0..knowns {
        contributors.push(Contributor::Known(format!("K{}", j + 1)));
    }
    for i in 0..unknowns {
        contributors.push(Contributor::Unknown(format!("u{}", i + 1)));
    }
    let hypothesis = Hypothesis::new("H", contributors);
    let ids: Vec<String> = hypothesis
        .contributors
        .iter()
        .map(|c| c.id().to_string())
        .collect();
    let params = [("T1".to_string(), random_params(rng, &ids, threshold))]
        .into_iter()
        .collect();
    let case = CaseData {
        ladders,
        profiles,
        traces: vec![TraceData {
            id: "T1".to_string(),
            threshold,
            heights,
        }],
    };
    Instance {
        case,
        hypothesis,
        params,
    }
}

/// Per-allele factor: gamma density at the height for observed alleles, CDF
/// at the threshold otherwise, with the zero-shape conventions.
fn peak_oracle_factor(z: f64, lambda: f64, eta: f64, threshold: f64) -> f64 {
    if z == 0.0 {
        if lambda == 0.0 {
            1.0
        } else {
            peakmix::gamma::gamma_cdf(threshold, lambda, eta)
        }
    } else if lambda == 0.0 {
        0.0
    } else {
        peakmix::gamma::gamma_pdf(z, lambda, eta)
    }
}

fn presence_oracle_factor(z: f64, lambda: f64, eta: f64, threshold: f64) -> f64 {
    let below = if lambda == 0.0 {
        1.0
    } else {
        peakmix::gamma::gamma_cdf(threshold, lambda, eta)
    };
    if z > 0.0 {
        1.0 - below
    } else {
        below
    }
}

/// Gamma shape from scratch: counts of every contributor weighted by
/// fraction, with stutter from the next ladder position.
#[allow(clippy::too_many_arguments)]
fn oracle_shape(
    combo: &[Vec<u8>],
    unknown_tags: &[String],
    knowns: &[(String, Vec<u8>)],
    allele: usize,
    allele_count: usize,
    params: &ModelParams,
    hypothesis: &Hypothesis,
    trace: &str,
) -> f64 {
    let next = allele + 1;
    let mut total = 0.0;
    for (tag, g) in unknown_tags.iter().zip(combo) {
        if !hypothesis.includes(trace, tag) {
            continue;
        }
        let at = g[allele] as f64;
        let nxt = if next < allele_count { g[next] as f64 } else { 0.0 };
        total += ((1.0 - params.xi) * at + params.xi * nxt) * params.fraction(tag);
    }
    for (id, counts) in knowns {
        if !hypothesis.includes(trace, id) {
            continue;
        }
        let at = counts[allele] as f64;
        let nxt = if next < allele_count {
            counts[next] as f64
        } else {
            0.0
        };
        total += ((1.0 - params.xi) * at + params.xi * nxt) * params.fraction(id);
    }
    params.rho * total
}

/// Posterior table for one marker: every genotype combination with its
/// unnormalized weight (prior times all trace factors).
#[allow(clippy::needless_range_loop)]
pub fn brute_force_weights(instance: &Instance, marker: usize) -> Vec<(Vec<Vec<u8>>, f64)> {
    let ladder = instance.ladder(marker);
    let a_count = ladder.len();
    let tags = instance.unknown_tags();
    let knowns: Vec<(String, Vec<u8>)> = instance
        .hypothesis
        .known_ids()
        .into_iter()
        .map(|id| {
            (
                id.to_string(),
                instance.case.profiles[id].counts[&ladder.marker].clone(),
            )
        })
        .collect();
    let combos = enumerate_combos(&enumerate_genotypes(a_count), tags.len());
    combos
        .into_iter()
        .map(|combo| {
            let mut weight: f64 = combo
                .iter()
                .map(|g| genotype_prior(ladder.frequencies(), g))
                .product();
            for trace in &instance.case.traces {
                let params = &instance.params[&trace.id];
                let heights = trace.heights_for(&ladder.marker, a_count);
                for a in 0..a_count {
                    let lambda = oracle_shape(
                        &combo,
                        &tags,
                        &knowns,
                        a,
                        a_count,
                        params,
                        &instance.hypothesis,
                        &trace.id,
                    );
                    weight *=
                        peak_oracle_factor(heights[a], lambda, params.eta, trace.threshold);
                }
            }
            (combo, weight)
        })
        .collect()
}

/// Brute-force log-likelihood of one marker by full enumeration.
pub fn brute_force_marker_log_likelihood(instance: &Instance, marker: usize) -> f64 {
    let total: f64 = brute_force_weights(instance, marker)
        .into_iter()
        .map(|(_, w)| w)
        .sum();
    total.ln()
}

/// Brute-force case log-likelihood: the sum over markers.
pub fn brute_force_log_likelihood(instance: &Instance) -> f64 {
    (0..instance.case.ladders.len())
        .map(|m| brute_force_marker_log_likelihood(instance, m))
        .sum()
}

/// Brute-force presence-only log-likelihood of one marker.
#[allow(clippy::needless_range_loop)]
pub fn brute_force_presence_log_likelihood(instance: &Instance, marker: usize) -> f64 {
    let ladder = instance.ladder(marker);
    let a_count = ladder.len();
    let tags = instance.unknown_tags();
    let knowns: Vec<(String, Vec<u8>)> = instance
        .hypothesis
        .known_ids()
        .into_iter()
        .map(|id| {
            (
                id.to_string(),
                instance.case.profiles[id].counts[&ladder.marker].clone(),
            )
        })
        .collect();
    let combos = enumerate_combos(&enumerate_genotypes(a_count), tags.len());
    let mut total = 0.0;
    for combo in combos {
        let mut weight: f64 = combo
            .iter()
            .map(|g| genotype_prior(ladder.frequencies(), g))
            .product();
        for trace in &instance.case.traces {
            let params = &instance.params[&trace.id];
            let heights = trace.heights_for(&ladder.marker, a_count);
            for a in 0..a_count {
                let lambda = oracle_shape(
                    &combo,
                    &tags,
                    &knowns,
                    a,
                    a_count,
                    params,
                    &instance.hypothesis,
                    &trace.id,
                );
                weight *= presence_oracle_factor(heights[a], lambda, params.eta, trace.threshold);
            }
        }
        total += weight;
    }
    total.ln()
}

/// Kolmogorov-Smirnov distance against the uniform distribution.
pub fn ks_distance_uniform(sorted: &[f64]) -> f64 {
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &u)| {
            let upper = (i as f64 + 1.0) / n - u;
            let lower = u - i as f64 / n;
            upper.max(lower)
        })
        .fold(0.0, f64::max)
}

/// Approximate one-sample KS critical value at level `alpha`.
pub fn ks_critical(n: usize, alpha: f64) -> f64 {
    let c = (-0.5 * (alpha / 2.0f64).ln()).sqrt();
    let sn = (n as f64).sqrt();
    c / (sn + 0.12 + 0.11 / sn)
}
