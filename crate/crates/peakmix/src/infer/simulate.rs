//! Trace simulation.
//!
//! Unknown genotypes are drawn from the (optionally conditioned) posterior
//! charge and peak heights are then drawn per allele from the gamma model
//! given the sampled counts, censored at the detection threshold. When the
//! simulation conditions on the case's observed pattern, heights are drawn
//! from the corresponding truncated distributions instead.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::infer::{CaseModel, TraceData};
use crate::peak::{sample_height, sample_height_conditional, ModelParams};

/// Conditioning event for simulation, expressible as observation evidence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SimCondition {
    /// Simulate from the prior model.
    None,
    /// Condition genotypes and heights on the case's seen/unseen pattern.
    ObservedPattern,
}

#[derive(Clone, Debug, Serialize)]
pub struct SimulatedCase {
    /// Per unknown tag: one genotype count vector per marker (case order).
    pub genotypes: BTreeMap<String, Vec<Vec<u8>>>,
    /// Simulated peaks in the same shape as case trace data.
    pub traces: Vec<TraceData>,
    pub seed: u64,
}

/// Simulate genotypes and peak heights for every marker and trace of the
/// case model. Deterministic given the seed.
pub fn simulate_case(
    model: &mut CaseModel,
    params: &BTreeMap<String, ModelParams>,
    condition: SimCondition,
    seed: u64,
) -> Result<SimulatedCase> {
    model.bind(params)?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let tags: Vec<String> = model
        .hypothesis
        .unknown_tags()
        .into_iter()
        .map(String::from)
        .collect();
    let mut genotypes: BTreeMap<String, Vec<Vec<u8>>> = tags
        .iter()
        .map(|t| (t.clone(), Vec::with_capacity(model.markers.len())))
        .collect();
    let trace_ids = model.trace_ids.clone();
    let mut heights: Vec<BTreeMap<String, Vec<f64>>> =
        vec![BTreeMap::new(); trace_ids.len()];
    for marker in &mut model.markers {
        let conditioned = marker.condition_on_observations(|_, _| match condition {
            SimCondition::None => false,
            SimCondition::ObservedPattern => true,
        })?;
        if conditioned.is_none() {
            return Err(Error::Numeric(format!(
                "marker {}: conditioning event has zero probability",
                marker.ladder.marker
            )));
        }
        let sampled = marker.sample_genotypes(&mut rng)?;
        for (tag, g) in tags.iter().zip(&sampled) {
            genotypes.get_mut(tag).expect("tag present").push(g.clone());
        }
        for (t_idx, trace_id) in trace_ids.iter().enumerate() {
            let p = &params[trace_id];
            let threshold = marker.threshold(t_idx);
            let mut row = Vec::with_capacity(marker.ladder.len());
            for a in 0..marker.ladder.len() {
                let lambda = marker.shape_given_genotypes(a, &sampled, p);
                let z = match condition {
                    SimCondition::None => sample_height(lambda, p.eta, threshold, &mut rng),
                    SimCondition::ObservedPattern => {
                        if marker.is_observed(t_idx, a) {
                            sample_height_conditional(lambda, p.eta, threshold, true, &mut rng)?
                        } else {
                            0.0
                        }
                    }
                };
                row.push(z);
            }
            heights[t_idx].insert(marker.ladder.marker.clone(), row);
        }
    }
    let traces = trace_ids
        .iter()
        .enumerate()
        .map(|(t_idx, id)| TraceData {
            id: id.clone(),
            threshold: model.threshold(id),
            heights: std::mem::take(&mut heights[t_idx]),
        })
        .collect();
    Ok(SimulatedCase {
        genotypes,
        traces,
        seed,
    })
}
