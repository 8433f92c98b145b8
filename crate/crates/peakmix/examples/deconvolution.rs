// Posterior genotype ranking for an unknown contributor.
//
// Conditions the genotype network on the observed peaks, then samples
// genotype combinations and computes each one's exact posterior probability
// by propagation, stopping once 99.9% of the mass is covered. Restricting
// the table to the observed alleles adds a dropout column counting alleles
// carried outside the observed set.

use std::collections::BTreeMap;

use peakmix::infer::{
    deconvolve, CaseData, CaseModel, Contributor, Hypothesis, Profile, SlotLayout, TraceData,
};
use peakmix::marker::{AlleleLadder, TreeMethod};
use peakmix::peak::ModelParams;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

fn main() {
    let ladder = AlleleLadder::new(
        "D2S1338",
        vec![16.0, 17.0, 23.0, 24.0],
        vec![0.05, 0.07, 0.11, 0.77],
    )
    .unwrap();
    let mut profiles = BTreeMap::new();
    profiles.insert(
        "K1".to_string(),
        Profile {
            counts: [("D2S1338".to_string(), vec![0, 0, 1, 1])].into_iter().collect(),
        },
    );
    let case = CaseData {
        ladders: vec![ladder],
        profiles,
        traces: vec![TraceData {
            id: "T1".into(),
            threshold: 50.0,
            heights: [("D2S1338".to_string(), vec![64.0, 96.0, 507.0, 524.0])]
                .into_iter()
                .collect(),
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
            rho: 22.0,
            xi: 0.09,
            eta: 28.0,
            phi: [("K1".to_string(), 0.85), ("U".to_string(), 0.15)]
                .into_iter()
                .collect(),
            threshold: 50.0,
        },
    )]
    .into_iter()
    .collect();
    let mut model =
        CaseModel::build(&case, &hypothesis, TreeMethod::Optimal, SlotLayout::Likelihood).unwrap();
    model.bind(&params).unwrap();
    let mut rng = ChaCha12Rng::seed_from_u64(1);
    let ranking = deconvolve(&mut model.markers[0], 0.999, true, 100_000, &mut rng).unwrap();
    println!("genotype of U given the peaks (counts over observed alleles, D = dropouts)\n");
    let labels: Vec<String> = ranking.allele_labels.iter().map(|l| format!("{l:>6}")).collect();
    println!("{}  {:>2}  {:>8}", labels.join(" "), "D", "prob");
    for row in &ranking.rows {
        let counts: Vec<String> = row.counts[0].iter().map(|c| format!("{c:>6}")).collect();
        println!(
            "{}  {:>2}  {:>8.4}",
            counts.join(" "),
            row.dropouts[0],
            row.probability
        );
    }
    println!("{:>30} total {:>8.4}", "", ranking.covered_mass);
    let best = &ranking.rows[0];
    println!(
        "\nmost probable genotype covers {:.2}% of the posterior mass",
        best.probability * 100.0
    );
}
