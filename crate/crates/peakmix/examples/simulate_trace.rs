// Forward simulation of a mixed trace.
//
// Draws unknown genotypes from the population prior and censored gamma peak
// heights per allele, printing the result in the peaks.csv format the
// parsers accept.

use std::collections::BTreeMap;

use peakmix::infer::{
    simulate_case, CaseData, CaseModel, Contributor, Hypothesis, SimCondition, SlotLayout,
    TraceData,
};
use peakmix::io::write_peaks;
use peakmix::marker::{AlleleLadder, TreeMethod};
use peakmix::peak::ModelParams;

fn main() {
    let ladders = vec![
        AlleleLadder::new("D2S1338", vec![16.0, 17.0, 23.0, 24.0], vec![0.1, 0.2, 0.3, 0.4])
            .unwrap(),
        AlleleLadder::new("VWA", vec![14.0, 15.0, 16.0, 17.0], vec![0.25, 0.3, 0.25, 0.2])
            .unwrap(),
    ];
    let case = CaseData {
        ladders,
        profiles: BTreeMap::new(),
        traces: vec![TraceData {
            id: "sim".into(),
            threshold: 50.0,
            heights: BTreeMap::new(),
        }],
    };
    let hypothesis = Hypothesis::new(
        "two-unknowns",
        vec![
            Contributor::Unknown("u1".into()),
            Contributor::Unknown("u2".into()),
        ],
    );
    let params: BTreeMap<String, ModelParams> = [(
        "sim".to_string(),
        ModelParams {
            rho: 20.0,
            xi: 0.08,
            eta: 30.0,
            phi: [("u1".to_string(), 0.7), ("u2".to_string(), 0.3)]
                .into_iter()
                .collect(),
            threshold: 50.0,
        },
    )]
    .into_iter()
    .collect();
    let mut model =
        CaseModel::build(&case, &hypothesis, TreeMethod::Optimal, SlotLayout::Likelihood).unwrap();
    let simulated = simulate_case(&mut model, &params, SimCondition::None, 7).unwrap();

    println!("simulated genotypes (allele counts per marker):");
    for (tag, genotypes) in &simulated.genotypes {
        for (ladder, counts) in case.ladders.iter().zip(genotypes) {
            let alleles: Vec<String> = counts
                .iter()
                .enumerate()
                .flat_map(|(a, &c)| std::iter::repeat_n(format!("{}", ladder.label(a)), c as usize))
                .collect();
            println!("  {tag} {}: ({})", ladder.marker, alleles.join(", "));
        }
    }
    println!("\npeaks.csv:");
    print!("{}", write_peaks(&simulated.traces, &case.ladders));
}
