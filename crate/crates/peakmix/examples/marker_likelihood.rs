// Exact peak-height likelihood for one marker.
//
// One unknown contributor alongside a known one; the likelihood is the
// expectation of the per-allele gamma factors over the unknown genotype,
// computed by propagation on each of the three junction trees and checked
// against direct enumeration.

use std::collections::BTreeMap;

use peakmix::infer::{CaseData, CaseModel, Contributor, Hypothesis, Profile, SlotLayout, TraceData};
use peakmix::marker::{genotype_prior, genotypes, AlleleLadder, TreeMethod};
use peakmix::peak::{peak_factor, shape, ModelParams};

fn main() {
    let ladder = AlleleLadder::new(
        "D2S1338",
        vec![16.0, 17.0, 23.0, 24.0],
        vec![0.1, 0.2, 0.3, 0.4],
    )
    .unwrap();
    let mut profiles = BTreeMap::new();
    profiles.insert(
        "K1".to_string(),
        Profile {
            counts: [("D2S1338".to_string(), vec![0, 0, 1, 1])].into_iter().collect(),
        },
    );
    let heights = vec![64.0, 96.0, 507.0, 524.0];
    let case = CaseData {
        ladders: vec![ladder.clone()],
        profiles,
        traces: vec![TraceData {
            id: "T1".into(),
            threshold: 50.0,
            heights: [("D2S1338".to_string(), heights.clone())].into_iter().collect(),
        }],
    };
    let hypothesis = Hypothesis::new(
        "Hd",
        vec![
            Contributor::Known("K1".into()),
            Contributor::Unknown("U".into()),
        ],
    );
    let params: BTreeMap<String, ModelParams> = [(
        "T1".to_string(),
        ModelParams {
            rho: 18.0,
            xi: 0.08,
            eta: 30.0,
            phi: [("K1".to_string(), 0.8), ("U".to_string(), 0.2)]
                .into_iter()
                .collect(),
            threshold: 50.0,
        },
    )]
    .into_iter()
    .collect();

    for method in [TreeMethod::Slice, TreeMethod::Triangle, TreeMethod::Optimal] {
        let mut model =
            CaseModel::build(&case, &hypothesis, method, SlotLayout::Likelihood).unwrap();
        let ln_l = model.total_log_likelihood(&params).unwrap();
        println!(
            "{:<8} tree: log10 L = {:.10}",
            method.name(),
            ln_l / std::f64::consts::LN_10
        );
    }

    // Enumeration over the unknown's ten genotypes.
    let p = &params["T1"];
    let known = [0u8, 0, 1, 1];
    let mut total = 0.0;
    for genotype in genotypes(ladder.len()) {
        let prior = genotype_prior(&ladder, &genotype);
        let mut weight = prior;
        for a in 0..ladder.len() {
            let next = |counts: &[u8]| {
                if a + 1 < counts.len() {
                    counts[a + 1] as f64
                } else {
                    0.0
                }
            };
            let lambda = shape(
                &[
                    (known[a] as f64, next(&known), 0.8),
                    (genotype[a] as f64, next(&genotype), 0.2),
                ],
                p.rho,
                p.xi,
            );
            weight *= peak_factor(heights[a], lambda, p.eta, 50.0).unwrap();
        }
        total += weight;
    }
    println!(
        "enumeration over 10 genotypes: log10 L = {:.10}",
        total.log10()
    );
}
