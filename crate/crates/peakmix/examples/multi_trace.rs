// Two mixed traces sharing one unknown contributor.
//
// The genotype chains are shared across traces while each trace gets its
// own observation variables and parameters; with a common unknown the joint
// likelihood could not factor over traces, and setting a contributor's
// fraction to zero in one trace reproduces the model that omits it there.

use std::collections::BTreeMap;

use peakmix::infer::{CaseData, CaseModel, Contributor, Hypothesis, SlotLayout, TraceData};
use peakmix::marker::{AlleleLadder, TreeMethod};
use peakmix::peak::ModelParams;

fn main() {
    let ladder = AlleleLadder::new(
        "M1",
        vec![12.0, 13.0, 14.0],
        vec![0.25, 0.35, 0.4],
    )
    .unwrap();
    let case = CaseData {
        ladders: vec![ladder],
        profiles: BTreeMap::new(),
        traces: vec![
            TraceData {
                id: "A".into(),
                threshold: 50.0,
                heights: [("M1".to_string(), vec![310.0, 95.0, 0.0])].into_iter().collect(),
            },
            TraceData {
                id: "B".into(),
                threshold: 50.0,
                heights: [("M1".to_string(), vec![120.0, 0.0, 0.0])].into_iter().collect(),
            },
        ],
    };
    let hypothesis = Hypothesis::new("shared", vec![Contributor::Unknown("U".into())]);
    let params_for = |rho: f64, eta: f64| ModelParams {
        rho,
        xi: 0.07,
        eta,
        phi: [("U".to_string(), 1.0)].into_iter().collect(),
        threshold: 50.0,
    };
    let params: BTreeMap<String, ModelParams> = [
        ("A".to_string(), params_for(14.0, 28.0)),
        ("B".to_string(), params_for(5.0, 32.0)),
    ]
    .into_iter()
    .collect();

    let mut joint =
        CaseModel::build(&case, &hypothesis, TreeMethod::Optimal, SlotLayout::Likelihood).unwrap();
    let joint_ln = joint.total_log_likelihood(&params).unwrap();
    println!("joint log10 L (shared unknown): {:.6}", joint_ln / std::f64::consts::LN_10);

    // Pretending the traces are independent overstates the likelihood
    // because it lets the unknown take different genotypes per trace.
    let mut independent = 0.0;
    for trace in &case.traces {
        let single = CaseData {
            ladders: case.ladders.clone(),
            profiles: BTreeMap::new(),
            traces: vec![trace.clone()],
        };
        let mut model =
            CaseModel::build(&single, &hypothesis, TreeMethod::Optimal, SlotLayout::Likelihood)
                .unwrap();
        let p: BTreeMap<String, ModelParams> =
            [(trace.id.clone(), params[&trace.id].clone())].into_iter().collect();
        independent += model.total_log_likelihood(&p).unwrap();
    }
    println!(
        "sum of single-trace log10 L:    {:.6}",
        independent / std::f64::consts::LN_10
    );
    println!(
        "sharing the contributor costs {:.6} log10 units\n",
        (independent - joint_ln) / std::f64::consts::LN_10
    );

    // Posterior for the shared genotype uses both traces' peaks at once.
    joint.bind(&params).unwrap();
    let marker = &mut joint.markers[0];
    marker.condition_on_observations(|_, _| true).unwrap().unwrap();
    println!("posterior count of allele 12 for U given both traces:");
    let marginal = marker.count_marginal(0, 0).unwrap();
    for (count, p) in marginal.iter().enumerate() {
        println!("  {count} copies: {p:.4}");
    }
}
