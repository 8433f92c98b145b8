// Junction-tree total sizes of the genotype representations.
//
// Prints the closed-form total (and compressed) sizes as the number of
// unknown contributors grows, for a marker with 25 allelic types and three
// auxiliary variables per allele. The slice tree is the simplest
// construction, the triangle tree splits each slice, and the optimal tree
// further splits the upper cliques per contributor; the allele-pair row
// shows the single-node-per-genotype alternative for comparison.

use peakmix::marker::{compressed_slice_size, total_size, TreeMethod};

fn main() {
    let (alleles, slots) = (25u64, 3u64);
    println!("total sizes for A = {alleles}, N = {slots} auxiliary variables per allele\n");
    println!(
        "{:>2}  {:>16} {:>16} {:>16} {:>20} {:>18}",
        "k", "slice", "triangle", "optimal", "allele-pair", "compressed slice"
    );
    for k in 1..=6u64 {
        let row = |method| total_size(method, alleles, k, slots).unwrap();
        println!(
            "{k:>2}  {:>16} {:>16} {:>16} {:>20} {:>18}",
            row(TreeMethod::Slice),
            row(TreeMethod::Triangle),
            row(TreeMethod::Optimal),
            row(TreeMethod::AllelePair),
            compressed_slice_size(alleles, k, slots).unwrap(),
        );
    }
    println!(
        "\nsingle-precision storage of the optimal tree at k = 6: {:.1} GB",
        total_size(TreeMethod::Optimal, alleles, 6, slots).unwrap() as f64 * 4.0 / 1e9
    );
}
