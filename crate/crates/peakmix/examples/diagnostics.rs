// Model-adequacy diagnostics on a simulated trace.
//
// Simulates a trace at known parameters and runs all three diagnostics at
// those parameters: probability transforms of the observed heights (close
// to uniform when the model fits), predictive intervals per allele, and the
// prequential presence monitor with its normal-approximation limits.

use std::collections::BTreeMap;

use peakmix::diag::{prediction_intervals, prequential_monitor, qq_points, ConditioningMode};
use peakmix::infer::{
    simulate_case, CaseData, CaseModel, Contributor, Hypothesis, SimCondition, SlotLayout,
    TraceData,
};
use peakmix::marker::{AlleleLadder, TreeMethod};
use peakmix::peak::ModelParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

fn main() {
    let mut rng = ChaCha12Rng::seed_from_u64(99);
    let ladders: Vec<AlleleLadder> = (0..6)
        .map(|m| {
            let labels: Vec<f64> = (0..8).map(|a| 8.0 + a as f64).collect();
            let raw: Vec<f64> = (0..8).map(|_| rng.random_range(0.5..2.0)).collect();
            let total: f64 = raw.iter().sum();
            AlleleLadder::new(
                format!("M{:02}", m + 1),
                labels,
                raw.iter().map(|x| x / total).collect(),
            )
            .unwrap()
        })
        .collect();
    let case = CaseData {
        ladders,
        profiles: BTreeMap::new(),
        traces: vec![TraceData {
            id: "T1".into(),
            threshold: 50.0,
            heights: BTreeMap::new(),
        }],
    };
    let hypothesis = Hypothesis::new("H", vec![Contributor::Unknown("U".into())]);
    let params: BTreeMap<String, ModelParams> = [(
        "T1".to_string(),
        ModelParams {
            rho: 12.0,
            xi: 0.08,
            eta: 30.0,
            phi: [("U".to_string(), 1.0)].into_iter().collect(),
            threshold: 50.0,
        },
    )]
    .into_iter()
    .collect();
    let mut generator =
        CaseModel::build(&case, &hypothesis, TreeMethod::Optimal, SlotLayout::Likelihood).unwrap();
    let simulated = simulate_case(&mut generator, &params, SimCondition::None, 4).unwrap();
    let observed = CaseData {
        ladders: case.ladders.clone(),
        profiles: BTreeMap::new(),
        traces: simulated.traces,
    };
    let mut model =
        CaseModel::build(&observed, &hypothesis, TreeMethod::Optimal, SlotLayout::Diagnostics)
            .unwrap();

    let points = qq_points(&mut model, &params, "T1", ConditioningMode::AllOthers).unwrap();
    println!("probability transforms of {} observed peaks:", points.len());
    for p in &points {
        println!(
            "  {} allele {:>4}: height {:>6.1}  u = {:.3}  position {:.3}",
            p.marker, p.allele_label, p.height, p.transform, p.position
        );
    }

    let rows = prediction_intervals(&mut model, &params, "T1", &[0.005, 0.5, 0.995]).unwrap();
    println!("\npredictive intervals (first marker):");
    for row in rows.iter().filter(|r| r.marker == "M01") {
        match &row.quantiles {
            Some(qs) => println!(
                "  allele {:>4}: P(peak) = {:.3}, median {:>6.1}, 99% band [{:>6.1}, {:>6.1}], observed {:>6.1}",
                row.allele_label,
                row.presence_probability,
                qs[1].1,
                qs[0].1,
                qs[2].1,
                row.observed
            ),
            None => println!(
                "  allele {:>4}: peak impossible under this hypothesis",
                row.allele_label
            ),
        }
    }

    let monitor = prequential_monitor(&mut model, &params, "T1").unwrap();
    let last = monitor.last().unwrap();
    let peak_steps = monitor.iter().filter(|r| r.observed).count();
    println!(
        "\nprequential monitor: {} steps ({} peaks observed)",
        monitor.len(),
        peak_steps
    );
    println!(
        "  final cumulative score {:.3} against 95%/99% limits {:.3}/{:.3}",
        last.cumulative, last.limit_95, last.limit_99
    );
    if last.cumulative <= last.limit_95 {
        println!("  the simulated trace stays inside its own model's limits, as it should");
    }
}
