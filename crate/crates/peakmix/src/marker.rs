//! Per-marker genotype networks and their junction trees.
//!
//! The genotype of an unknown contributor is a multinomial draw of two
//! alleles. It is represented as a Markov chain over the allele ladder: the
//! count at allele `a` given the partial sum so far is binomial in the two
//! remaining draws with the renormalized tail frequency, and the partial sums
//! are deterministic adders. Observation variables attach per allele with the
//! counts at the allele and its stutter source (the next ladder position) as
//! parents.
//!
//! Three explicit triangulations are provided, trading clique count against
//! clique width, together with closed-form total sizes used to pick a
//! representation before any table is allocated.

use serde::Serialize;

use crate::engine::{AuxVariableSpec, CliqueTreeSpec, DiscreteNetwork, NodeId};
use crate::error::{Error, Result};

/// Ordered allele labels and population frequencies for one marker.
#[derive(Clone, Debug, PartialEq)]
pub struct AlleleLadder {
    pub marker: String,
    labels: Vec<f64>,
    frequencies: Vec<f64>,
}

impl AlleleLadder {
    pub fn new(marker: impl Into<String>, labels: Vec<f64>, frequencies: Vec<f64>) -> Result<Self> {
        let marker = marker.into();
        if labels.len() != frequencies.len() || labels.is_empty() {
            return Err(Error::domain(format!(
                "marker {marker}: ladder needs matching, nonempty label and frequency lists"
            )));
        }
        if labels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::domain(format!(
                "marker {marker}: allele labels must be strictly increasing"
            )));
        }
        if frequencies.iter().any(|&q| q.is_nan() || q <= 0.0) {
            return Err(Error::domain(format!(
                "marker {marker}: every allele frequency must be positive"
            )));
        }
        let sum: f64 = frequencies.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::domain(format!(
                "marker {marker}: allele frequencies sum to {sum}, expected 1"
            )));
        }
        Ok(AlleleLadder {
            marker,
            labels,
            frequencies,
        })
    }

    /// Uniform ladder with integer labels, handy for sizing experiments.
    pub fn uniform(marker: impl Into<String>, allele_count: usize) -> Self {
        let labels = (0..allele_count).map(|a| a as f64 + 1.0).collect();
        let q = 1.0 / allele_count as f64;
        AlleleLadder::new(marker, labels, vec![q; allele_count]).expect("uniform ladder is valid")
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn frequency(&self, allele: usize) -> f64 {
        self.frequencies[allele]
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn label(&self, allele: usize) -> f64 {
        self.labels[allele]
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn index_of(&self, label: f64) -> Option<usize> {
        self.labels.iter().position(|&l| l == label)
    }

    fn tail_sum(&self, allele: usize) -> f64 {
        self.frequencies[allele..].iter().sum()
    }
}

/// Node handles for one contributor's genotype chain.
#[derive(Clone, Debug)]
pub struct GenotypeChain {
    pub contributor: usize,
    /// Allele-count nodes, states {0, 1, 2}.
    pub counts: Vec<NodeId>,
    /// Partial-sum nodes, states {0, 1, 2}.
    pub sums: Vec<NodeId>,
}

fn binomial_row(p: f64, remaining: usize) -> [f64; 3] {
    match remaining {
        0 => [1.0, 0.0, 0.0],
        1 => [1.0 - p, p, 0.0],
        _ => [(1.0 - p) * (1.0 - p), 2.0 * p * (1.0 - p), p * p],
    }
}

/// Append one genotype chain to the network. The joint law of the count
/// nodes is exactly multinomial in two draws from the ladder frequencies.
pub fn append_genotype_chain(
    net: &mut DiscreteNetwork,
    ladder: &AlleleLadder,
    contributor: usize,
) -> Result<GenotypeChain> {
    let allele_count = ladder.len();
    let mut counts = Vec::with_capacity(allele_count);
    let mut sums = Vec::with_capacity(allele_count);
    // First allele: counts are binomial in both draws, and the first partial
    // sum copies the count.
    let p1 = ladder.frequency(0) / ladder.tail_sum(0);
    let row = binomial_row(p1, 2);
    let n0 = net.add_root(row.to_vec()).map_err(Error::Engine)?;
    counts.push(n0);
    let identity = vec![
        1.0, 0.0, 0.0, //
        0.0, 1.0, 0.0, //
        0.0, 0.0, 1.0,
    ];
    let s0 = net.add_node(3, &[n0], identity).map_err(Error::Engine)?;
    sums.push(s0);
    for a in 1..allele_count {
        let p = ladder.frequency(a) / ladder.tail_sum(a);
        // Count given the previous partial sum: binomial in the remaining draws.
        let mut cpt = Vec::with_capacity(9);
        for prev_sum in 0..3usize {
            cpt.extend_from_slice(&binomial_row(p, 2 - prev_sum));
        }
        let n = net
            .add_node(3, &[sums[a - 1]], cpt)
            .map_err(Error::Engine)?;
        counts.push(n);
        // Partial sum: deterministic adder, capped at two (unreachable rows).
        let mut cpt = Vec::with_capacity(27);
        for prev_sum in 0..3usize {
            for count in 0..3usize {
                let mut row = [0.0; 3];
                row[(prev_sum + count).min(2)] = 1.0;
                cpt.extend_from_slice(&row);
            }
        }
        let s = net
            .add_node(3, &[sums[a - 1], n], cpt)
            .map_err(Error::Engine)?;
        sums.push(s);
    }
    Ok(GenotypeChain {
        contributor,
        counts,
        sums,
    })
}

/// Junction-tree construction methods.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TreeMethod {
    Slice,
    Triangle,
    Optimal,
    AllelePair,
}

impl TreeMethod {
    pub fn name(&self) -> &'static str {
        match self {
            TreeMethod::Slice => "slice",
            TreeMethod::Triangle => "triangle",
            TreeMethod::Optimal => "optimal",
            TreeMethod::AllelePair => "allele-pair",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "slice" => Ok(TreeMethod::Slice),
            "triangle" => Ok(TreeMethod::Triangle),
            "optimal" => Ok(TreeMethod::Optimal),
            "allele-pair" => Ok(TreeMethod::AllelePair),
            other => Err(Error::domain(format!("unknown tree method '{other}'"))),
        }
    }
}

/// A constructed tree along with the method actually used (the optimal
/// construction falls back to the triangle tree for fewer than three
/// alleles).
#[derive(Clone, Debug)]
pub struct TreeBuild {
    pub spec: CliqueTreeSpec,
    pub used: TreeMethod,
}

/// The per-marker network: genotype chains for the unknown contributors and
/// declared observation slots per allele, CPTs of the slots bound later.
#[derive(Clone, Debug)]
pub struct MarkerNetwork {
    pub net: DiscreteNetwork,
    allele_count: usize,
    unknowns: usize,
    slots_per_allele: usize,
    chains: Vec<GenotypeChain>,
    /// `[allele][slot]` observation nodes.
    slot_nodes: Vec<Vec<NodeId>>,
}

impl MarkerNetwork {
    /// Build the chains and attach `slots_per_allele` neutral observation
    /// variables per allele. Slot parents are the counts at the allele and at
    /// its stutter source for every unknown contributor; the last allele has
    /// only its own counts.
    pub fn build(ladder: &AlleleLadder, unknowns: usize, slots_per_allele: usize) -> Result<Self> {
        let allele_count = ladder.len();
        let mut net = DiscreteNetwork::new();
        let mut chains = Vec::with_capacity(unknowns);
        for i in 0..unknowns {
            chains.push(append_genotype_chain(&mut net, ladder, i)?);
        }
        let mut slot_nodes = Vec::with_capacity(allele_count);
        for a in 0..allele_count {
            let parents = slot_parent_list(&chains, a, allele_count);
            let rows = 3usize.pow(parents.len() as u32);
            let mut slots = Vec::with_capacity(slots_per_allele);
            for _ in 0..slots_per_allele {
                let id = net
                    .attach_aux_variable(&AuxVariableSpec {
                        parents: parents.clone(),
                        factor: vec![1.0; rows],
                        scale: 2.0,
                    })
                    .map_err(Error::Engine)?;
                slots.push(id);
            }
            slot_nodes.push(slots);
        }
        Ok(MarkerNetwork {
            net,
            allele_count,
            unknowns,
            slots_per_allele,
            chains,
            slot_nodes,
        })
    }

    pub fn allele_count(&self) -> usize {
        self.allele_count
    }

    pub fn unknowns(&self) -> usize {
        self.unknowns
    }

    pub fn slots_per_allele(&self) -> usize {
        self.slots_per_allele
    }

    pub fn chain(&self, contributor: usize) -> &GenotypeChain {
        &self.chains[contributor]
    }

    pub fn count_node(&self, contributor: usize, allele: usize) -> NodeId {
        self.chains[contributor].counts[allele]
    }

    pub fn slot(&self, allele: usize, slot: usize) -> NodeId {
        self.slot_nodes[allele][slot]
    }

    /// Number of parent configurations of an allele's slots.
    pub fn slot_rows(&self, allele: usize) -> usize {
        if allele + 1 < self.allele_count {
            3usize.pow(2 * self.unknowns as u32)
        } else {
            3usize.pow(self.unknowns as u32)
        }
    }

    /// Per-contributor counts `(at allele, at next allele)` for one parent
    /// configuration index of an allele's slots. Configurations enumerate the
    /// parent list in odometer order, last parent fastest.
    pub fn slot_config_counts(&self, allele: usize, row: usize) -> Vec<(u8, u8)> {
        let k = self.unknowns;
        let has_next = allele + 1 < self.allele_count;
        let digits = if has_next { 2 * k } else { k };
        let mut states = vec![0u8; digits];
        let mut r = row;
        for d in (0..digits).rev() {
            states[d] = (r % 3) as u8;
            r /= 3;
        }
        (0..k)
            .map(|i| {
                let at = states[i];
                let next = if has_next { states[k + i] } else { 0 };
                (at, next)
            })
            .collect()
    }

    pub fn build_tree(&self, method: TreeMethod) -> Result<TreeBuild> {
        match method {
            TreeMethod::Slice => Ok(TreeBuild {
                spec: self.slice_tree(),
                used: TreeMethod::Slice,
            }),
            TreeMethod::Triangle => Ok(TreeBuild {
                spec: self.triangle_tree(),
                used: TreeMethod::Triangle,
            }),
            TreeMethod::Optimal => Ok(self.optimal_tree()),
            TreeMethod::AllelePair => Err(Error::domain(
                "allele-pair networks are sized but not constructed",
            )),
        }
    }

    /// One clique per pair of adjacent alleles holding both sums and both
    /// counts of every contributor.
    pub fn slice_tree(&self) -> CliqueTreeSpec {
        let a_count = self.allele_count;
        let k = self.unknowns;
        let mut cliques: Vec<Vec<NodeId>> = Vec::new();
        let mut edges: Vec<(usize, usize)> = Vec::new();
        if k > 0 {
            if a_count == 1 {
                let mut c = Vec::new();
                for chain in &self.chains {
                    c.push(chain.sums[0]);
                    c.push(chain.counts[0]);
                }
                cliques.push(c);
            } else {
                for a in 0..a_count - 1 {
                    let mut c = Vec::new();
                    for chain in &self.chains {
                        c.push(chain.sums[a]);
                        c.push(chain.sums[a + 1]);
                        c.push(chain.counts[a]);
                        c.push(chain.counts[a + 1]);
                    }
                    cliques.push(c);
                    if a > 0 {
                        edges.push((a - 1, a));
                    }
                }
            }
        }
        self.attach_aux_cliques(&mut cliques, &mut edges, |a| {
            // Slots of allele a join the slice covering (a, a+1); the last
            // allele's slots chain onto the previous allele's slots.
            a.min(a_count.saturating_sub(2))
        });
        CliqueTreeSpec::new(cliques, edges)
    }

    /// Each slice split into a lower clique (sum, count, next count) and an
    /// upper clique (sum, next sum, next count).
    pub fn triangle_tree(&self) -> CliqueTreeSpec {
        let a_count = self.allele_count;
        let k = self.unknowns;
        if k == 0 || a_count == 1 {
            return self.slice_tree();
        }
        let mut cliques: Vec<Vec<NodeId>> = Vec::new();
        let mut edges: Vec<(usize, usize)> = Vec::new();
        for a in 0..a_count - 1 {
            let mut lower = Vec::new();
            let mut upper = Vec::new();
            for chain in &self.chains {
                lower.push(chain.sums[a]);
                lower.push(chain.counts[a]);
                lower.push(chain.counts[a + 1]);
                upper.push(chain.sums[a]);
                upper.push(chain.sums[a + 1]);
                upper.push(chain.counts[a + 1]);
            }
            let lower_idx = cliques.len();
            cliques.push(lower);
            cliques.push(upper);
            edges.push((lower_idx, lower_idx + 1));
            if a > 0 {
                edges.push((lower_idx - 1, lower_idx));
            }
        }
        self.attach_aux_cliques(&mut cliques, &mut edges, |a| {
            // Lower clique of slice a contains the slot parents.
            2 * a.min(a_count - 2)
        });
        CliqueTreeSpec::new(cliques, edges)
    }

    /// The triangle tree with every upper clique further split per
    /// contributor. Falls back to the triangle tree for fewer than three
    /// alleles.
    pub fn optimal_tree(&self) -> TreeBuild {
        let a_count = self.allele_count;
        let k = self.unknowns;
        if a_count < 3 || k == 0 {
            return TreeBuild {
                spec: self.triangle_tree(),
                used: TreeMethod::Triangle,
            };
        }
        let mut cliques: Vec<Vec<NodeId>> = Vec::new();
        let mut edges: Vec<(usize, usize)> = Vec::new();
        let mut lower_index = vec![0usize; a_count - 1];
        #[allow(clippy::needless_range_loop)]
        for a in 0..a_count - 1 {
            let mut lower = Vec::new();
            for chain in &self.chains {
                lower.push(chain.sums[a]);
                lower.push(chain.counts[a]);
                lower.push(chain.counts[a + 1]);
            }
            let lower_idx = cliques.len();
            lower_index[a] = lower_idx;
            cliques.push(lower);
            // Upper split: contributor j keeps its full triangle, earlier
            // contributors reduce to the later pair, later ones to (sum, next
            // count).
            for j in 0..k {
                let mut upper = Vec::new();
                for (i, chain) in self.chains.iter().enumerate() {
                    if i < j {
                        upper.push(chain.sums[a + 1]);
                        upper.push(chain.counts[a + 1]);
                    } else if i == j {
                        upper.push(chain.sums[a]);
                        upper.push(chain.sums[a + 1]);
                        upper.push(chain.counts[a + 1]);
                    } else {
                        upper.push(chain.sums[a]);
                        upper.push(chain.counts[a + 1]);
                    }
                }
                let idx = cliques.len();
                cliques.push(upper);
                edges.push((idx - 1, idx));
            }
            if a > 0 {
                // Bridge from the previous allele's last upper split.
                edges.push((lower_idx - 1, lower_idx));
            }
        }
        self.attach_aux_cliques(&mut cliques, &mut edges, |a| {
            lower_index[a.min(a_count - 2)]
        });
        TreeBuild {
            spec: CliqueTreeSpec::new(cliques, edges),
            used: TreeMethod::Optimal,
        }
    }

    /// Append one clique per (allele, slot) with the slot and its parents,
    /// wired to the chain clique chosen by `anchor` for alleles with a next
    /// allele; the last allele's slots attach to the previous allele's slots
    /// (or to the anchor when there is only one allele).
    fn attach_aux_cliques(
        &self,
        cliques: &mut Vec<Vec<NodeId>>,
        edges: &mut Vec<(usize, usize)>,
        anchor: impl Fn(usize) -> usize,
    ) {
        let a_count = self.allele_count;
        let mut previous_slot_clique: Vec<usize> = Vec::new();
        for a in 0..a_count {
            let mut current = Vec::with_capacity(self.slots_per_allele);
            for (s, &slot) in self.slot_nodes[a].iter().enumerate() {
                let mut c = vec![slot];
                c.extend(self.net.parents(slot).iter().cloned());
                let idx = cliques.len();
                cliques.push(c);
                if cliques.len() == 1 {
                    // First clique overall (k = 0): nothing to attach to yet.
                } else if a + 1 == a_count && a > 0 {
                    edges.push((previous_slot_clique[s], idx));
                } else if idx > 0 {
                    edges.push((anchor(a), idx));
                }
                current.push(idx);
            }
            previous_slot_clique = current;
        }
        // For k = 0 the anchor indices above are meaningless; rebuild edges
        // as a simple chain over all cliques.
        if self.unknowns == 0 {
            edges.clear();
            for i in 1..cliques.len() {
                edges.push((i - 1, i));
            }
        }
    }
}

fn slot_parent_list(chains: &[GenotypeChain], allele: usize, allele_count: usize) -> Vec<NodeId> {
    let mut parents = Vec::new();
    for chain in chains {
        parents.push(chain.counts[allele]);
    }
    if allele + 1 < allele_count {
        for chain in chains {
            parents.push(chain.counts[allele + 1]);
        }
    }
    parents
}

fn pow_u128(base: u64, exp: u64) -> u128 {
    (base as u128).pow(exp as u32)
}

fn to_u64(v: u128, what: &str) -> Result<u64> {
    u64::try_from(v).map_err(|_| Error::Numeric(format!("{what} overflows 64 bits")))
}

/// State-space contribution of `slots` observation variables per allele:
/// one clique (binary slot times its parents) plus one parent-set separator
/// per slot.
fn aux_size(allele_count: u64, unknowns: u64, slots: u64) -> u128 {
    3 * slots as u128
        * ((allele_count as u128 - 1) * pow_u128(3, 2 * unknowns) + pow_u128(3, unknowns))
}

/// Closed-form total size (cliques plus separators) of the junction tree
/// built by `method`, for `allele_count >= 2`, `unknowns >= 1`, `slots >= 1`.
pub fn total_size(method: TreeMethod, allele_count: u64, unknowns: u64, slots: u64) -> Result<u64> {
    if allele_count < 2 || unknowns < 1 || slots < 1 {
        return Err(Error::domain(format!(
            "total size formulas need at least 2 alleles, 1 unknown and 1 slot, got A={allele_count}, k={unknowns}, N={slots}"
        )));
    }
    let a = allele_count as u128;
    let k = unknowns;
    let aux = aux_size(allele_count, unknowns, slots);
    let v = match method {
        TreeMethod::Slice => (a - 1) * pow_u128(3, 4 * k) + (a - 2) * pow_u128(3, 2 * k) + aux,
        TreeMethod::Triangle => {
            2 * (a - 1) * pow_u128(3, 3 * k) + (2 * (a - 1) - 1) * pow_u128(3, 2 * k) + aux
        }
        TreeMethod::Optimal => {
            (a - 1) * pow_u128(3, 3 * k)
                + ((4 * k as u128 + 1) * (a - 1) - 1) * pow_u128(3, 2 * k)
                + aux
        }
        TreeMethod::AllelePair => {
            (3 * slots as u128 * a - 1) * pow_u128(allele_count * (allele_count + 1) / 2, k)
        }
    };
    to_u64(v, "total size")
}

/// Closed-form stored size of the compressed slice tree (genotype support
/// only; observation cliques counted at twice their parent support).
/// Requires at least three alleles.
pub fn compressed_slice_size(allele_count: u64, unknowns: u64, slots: u64) -> Result<u64> {
    if allele_count < 3 {
        return Err(Error::domain(format!(
            "compressed slice size needs at least 3 alleles, got {allele_count}"
        )));
    }
    if unknowns < 1 || slots < 1 {
        return Err(Error::domain(
            "compressed slice size needs at least 1 unknown and 1 slot",
        ));
    }
    let a = allele_count as u128;
    let n = slots as u128;
    let v = (a - 3) * pow_u128(10, unknowns)
        + (3 * n * (a - 1) + a) * pow_u128(6, unknowns)
        + 3 * n * pow_u128(3, unknowns);
    to_u64(v, "compressed slice size")
}

/// Total stored cells after compressing a neutral charge on the constructed
/// tree, using a uniform ladder. This is the measured counterpart of
/// [`compressed_slice_size`].
pub fn measured_compressed_size(
    method: TreeMethod,
    allele_count: usize,
    unknowns: usize,
    slots: usize,
) -> Result<u64> {
    let ladder = AlleleLadder::uniform("sizing", allele_count);
    let network = MarkerNetwork::build(&ladder, unknowns, slots)?;
    let built = network.build_tree(method)?;
    let mut charge =
        crate::engine::Charge::initialize(&network.net, &built.spec).map_err(Error::Engine)?;
    charge.propagate().map_err(Error::Engine)?;
    charge.compress().map_err(Error::Engine)
}

/// One row of the sizing table emitted by the `treesize` command.
#[derive(Clone, Debug, Serialize)]
pub struct TreeSizeReport {
    pub method: String,
    pub allele_count: u64,
    pub unknowns: u64,
    pub slots: u64,
    pub total_size: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compressed_size: Option<u64>,
}

/// All genotype count vectors (sum two) over `allele_count` alleles, in
/// lexicographic order.
pub fn genotypes(allele_count: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::with_capacity(allele_count * (allele_count + 1) / 2);
    for first in 0..allele_count {
        for second in first..allele_count {
            let mut counts = vec![0u8; allele_count];
            counts[first] += 1;
            counts[second] += 1;
            out.push(counts);
        }
    }
    out.sort();
    out
}

/// Multinomial prior probability of a genotype count vector under the ladder
/// frequencies.
pub fn genotype_prior(ladder: &AlleleLadder, counts: &[u8]) -> f64 {
    debug_assert_eq!(counts.iter().map(|&c| c as u32).sum::<u32>(), 2);
    let mut p = 1.0;
    let mut denom = 1.0;
    for (a, &c) in counts.iter().enumerate() {
        for _ in 0..c {
            p *= ladder.frequency(a);
        }
        if c == 2 {
            denom = 2.0;
        }
    }
    2.0 * p / denom
}
