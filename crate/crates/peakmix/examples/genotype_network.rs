// The Markov-chain genotype representation.
//
// A genotype is two draws from the allele frequencies. Represented as a
// chain of allele counts and partial sums, the joint count law is exactly
// multinomial while every conditional involves only neighbouring alleles.

use peakmix::engine::DiscreteNetwork;
use peakmix::marker::{append_genotype_chain, genotype_prior, genotypes, AlleleLadder};

fn main() {
    let ladder = AlleleLadder::new(
        "D2S1338",
        vec![16.0, 17.0, 23.0, 24.0],
        vec![0.1, 0.2, 0.3, 0.4],
    )
    .unwrap();
    let mut net = DiscreteNetwork::new();
    let chain = append_genotype_chain(&mut net, &ladder, 0).unwrap();
    println!(
        "chain over {} alleles: {} nodes ({} counts + {} partial sums)\n",
        ladder.len(),
        net.node_count(),
        chain.counts.len(),
        chain.sums.len()
    );
    println!("genotype      chain pmf        multinomial");
    for genotype in genotypes(ladder.len()) {
        // Walk the conditional binomials along the chain.
        let mut chain_pmf = 1.0;
        let mut partial = 0usize;
        for (a, &count) in genotype.iter().enumerate() {
            let cpt = net.cpt(chain.counts[a]);
            let row = if a == 0 { 0 } else { partial };
            chain_pmf *= cpt[row * 3 + count as usize];
            partial += count as usize;
        }
        let multinomial = genotype_prior(&ladder, &genotype);
        println!("{genotype:?}  {chain_pmf:.12}   {multinomial:.12}");
        assert!((chain_pmf - multinomial).abs() < 1e-14);
    }
    println!("\nchain law equals the multinomial pmf for every genotype");
}
