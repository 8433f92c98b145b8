// Simulate a mixed trace, fit two hypotheses, and report a likelihood
// ratio.
//
// The trace is generated under the "known suspect contributed" hypothesis;
// fitting both that hypothesis and the unknown-contributor alternative by
// maximum likelihood yields a positive log10 likelihood ratio.

use std::collections::BTreeMap;

use peakmix::infer::{
    likelihood_ratio, simulate_case, CaseData, CaseModel, Contributor, Hypothesis,
    OptimizerConfig, Profile, SimCondition, SlotLayout, TraceData,
};
use peakmix::marker::{AlleleLadder, TreeMethod};
use peakmix::peak::ModelParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

fn main() {
    let mut rng = ChaCha12Rng::seed_from_u64(2024);
    let mut ladders = Vec::new();
    let mut profiles: BTreeMap<String, Profile> = BTreeMap::new();
    for m in 0..10 {
        let marker = format!("M{:02}", m + 1);
        let labels: Vec<f64> = (0..6).map(|a| 10.0 + a as f64).collect();
        let raw: Vec<f64> = (0..6).map(|_| rng.random_range(0.5..2.0)).collect();
        let total: f64 = raw.iter().sum();
        let freqs: Vec<f64> = raw.iter().map(|x| x / total).collect();
        let ladder = AlleleLadder::new(&marker, labels, freqs).unwrap();
        for id in ["V", "S"] {
            let mut genotype = vec![0u8; 6];
            genotype[rng.random_range(0..6)] += 1;
            genotype[rng.random_range(0..6)] += 1;
            profiles
                .entry(id.to_string())
                .or_default()
                .counts
                .insert(marker.clone(), genotype);
        }
        ladders.push(ladder);
    }
    let case = CaseData {
        ladders,
        profiles,
        traces: vec![TraceData {
            id: "trace".into(),
            threshold: 50.0,
            heights: BTreeMap::new(),
        }],
    };
    // Victim plus suspect, 70/30.
    let generating = Hypothesis::new(
        "Hp",
        vec![Contributor::Known("V".into()), Contributor::Known("S".into())],
    );
    let truth: BTreeMap<String, ModelParams> = [(
        "trace".to_string(),
        ModelParams {
            rho: 24.0,
            xi: 0.08,
            eta: 28.0,
            phi: [("V".to_string(), 0.7), ("S".to_string(), 0.3)]
                .into_iter()
                .collect(),
            threshold: 50.0,
        },
    )]
    .into_iter()
    .collect();
    let mut generator =
        CaseModel::build(&case, &generating, TreeMethod::Optimal, SlotLayout::Likelihood).unwrap();
    let simulated = simulate_case(&mut generator, &truth, SimCondition::None, 6).unwrap();
    let observed = CaseData {
        ladders: case.ladders.clone(),
        profiles: case.profiles.clone(),
        traces: simulated.traces,
    };
    let peaks: usize = observed.traces[0]
        .heights
        .values()
        .map(|h| h.iter().filter(|&&z| z > 0.0).count())
        .sum();
    println!("simulated {peaks} peaks over 10 markers under V + S\n");

    let hp = Hypothesis::new(
        "Hp",
        vec![Contributor::Known("V".into()), Contributor::Known("S".into())],
    );
    let hd = Hypothesis::new(
        "Hd",
        vec![
            Contributor::Known("V".into()),
            Contributor::Unknown("U".into()),
        ],
    );
    let config = OptimizerConfig {
        restarts: 2,
        seed: 1,
        ..OptimizerConfig::default()
    };
    let lr = likelihood_ratio(&observed, &hp, &hd, TreeMethod::Optimal, &config).unwrap();
    for fit in [&lr.numerator, &lr.denominator] {
        let p = &fit.params["trace"];
        println!("{}: log10 L = {:.4}", fit.hypothesis, fit.log10_likelihood);
        println!(
            "    rho {:.2}  xi {:.3}  eta {:.2}  fractions {:?}",
            p.rho,
            p.xi,
            p.eta,
            p.phi
                .iter()
                .map(|(id, f)| format!("{id}:{f:.3}"))
                .collect::<Vec<_>>()
        );
    }
    println!("\nlog10 LR = {:.4}", lr.log10_lr);
}
