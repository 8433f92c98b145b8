//! Charges and probability propagation.
//!
//! A charge holds one potential table per clique and per separator of a
//! clique tree, representing the unnormalised function
//! `g(x) = exp(log_scale) * prod_C zeta_C / prod_S zeta_S`. Propagation brings
//! the charge on canonical form where every potential is the corresponding
//! marginal; the normalising constant is read off a separator with minimal
//! state space. Potentials are rescaled during message passing, with factored
//! magnitudes accumulated in the `log_scale` register, so that per-marker
//! likelihood factors cannot underflow.

use std::sync::Arc;

use rand::Rng;

use crate::engine::network::{DiscreteNetwork, NodeId};
use crate::engine::spec::CliqueTreeSpec;
use crate::engine::table::{state_of, strides, Potential};
use crate::error::EngineError;
use crate::num::Scaled;

/// Storage tuning for charges.
#[derive(Clone, Copy, Debug)]
pub struct ChargeConfig {
    /// Tables at least this large are built sparse from the start.
    pub dense_cutoff: u64,
    /// Hard cap on a single table's logical size.
    pub max_cells: u64,
}

impl Default for ChargeConfig {
    fn default() -> Self {
        ChargeConfig {
            dense_cutoff: 4096,
            max_cells: 1 << 24,
        }
    }
}

/// Projection of one variable shared between a table and a smaller space.
#[derive(Clone, Debug)]
struct ProjTerm {
    table_stride: u64,
    card: u64,
    target_stride: u64,
}

#[inline]
fn project(idx: u64, terms: &[ProjTerm]) -> u64 {
    let mut out = 0;
    for t in terms {
        out += state_of(idx, t.table_stride, t.card) * t.target_stride;
    }
    out
}

#[derive(Clone, Debug)]
struct EdgeInfo {
    a: usize,
    b: usize,
    sep_len: u64,
    /// Projection from clique `a` (resp. `b`) cells onto separator indices.
    proj_a: Vec<ProjTerm>,
    proj_b: Vec<ProjTerm>,
}

/// One message-passing step: `child` sends to `parent` across `edge`.
#[derive(Clone, Copy, Debug)]
struct Step {
    child: usize,
    parent: usize,
    edge: usize,
}

#[derive(Clone, Debug)]
struct NodeSlot {
    home: usize,
    stride: u64,
    card: u64,
}

#[derive(Clone, Debug)]
struct CptBinding {
    /// Maps clique cells to CPT entries (family variables, node state last).
    terms: Vec<ProjTerm>,
}

#[derive(Debug)]
struct Structure {
    clique_vars: Vec<Vec<NodeId>>,
    clique_cards: Vec<Vec<usize>>,
    clique_len: Vec<u64>,
    clique_strides: Vec<Vec<u64>>,
    sep_vars: Vec<Vec<NodeId>>,
    edges: Vec<EdgeInfo>,
    /// Leaves-to-root schedule; distribution runs it in reverse.
    collect: Vec<Step>,
    node_slot: Vec<NodeSlot>,
    cpt_bindings: Vec<CptBinding>,
    /// Per clique, the nodes whose CPTs multiply into it.
    assigned: Vec<Vec<usize>>,
    /// Edge whose separator has minimal state space (first on ties).
    norm_edge: Option<usize>,
    node_states: Vec<usize>,
}

/// A clique-tree charge: potentials plus evidence and scale bookkeeping.
#[derive(Clone, Debug)]
pub struct Charge {
    structure: Arc<Structure>,
    cliques: Vec<Potential>,
    seps: Vec<Potential>,
    /// Snapshot of the CPT tables used to (re)initialize potentials.
    cpts: Vec<Vec<f64>>,
    /// Entered likelihood vectors: (node, vector as given, log-scale factored out).
    evidence: Vec<(NodeId, Vec<f64>, f64)>,
    log_scale: f64,
    canonical: bool,
}

impl Charge {
    /// Multiply every CPT into one clique containing its family; separators
    /// start at one.
    pub fn initialize(net: &DiscreteNetwork, spec: &CliqueTreeSpec) -> Result<Self, EngineError> {
        Charge::initialize_with(net, spec, ChargeConfig::default())
    }

    pub fn initialize_with(
        net: &DiscreteNetwork,
        spec: &CliqueTreeSpec,
        config: ChargeConfig,
    ) -> Result<Self, EngineError> {
        spec.validate(net).map_err(EngineError::InvalidTree)?;
        let structure = Arc::new(build_structure(net, spec, &config)?);
        let cpts: Vec<Vec<f64>> = net.node_ids().map(|v| net.cpt(v).to_vec()).collect();
        let mut charge = Charge {
            cliques: Vec::new(),
            seps: Vec::new(),
            structure,
            cpts,
            evidence: Vec::new(),
            log_scale: 0.0,
            canonical: false,
        };
        charge.build_potentials(config.dense_cutoff);
        Ok(charge)
    }

    fn build_potentials(&mut self, dense_cutoff: u64) {
        let s = &self.structure;
        let mut cliques = Vec::with_capacity(s.clique_vars.len());
        for c in 0..s.clique_vars.len() {
            let len = s.clique_len[c];
            if len < dense_cutoff {
                let mut values = vec![0.0f64; len as usize];
                for (idx, slot) in values.iter_mut().enumerate() {
                    *slot = self.cell_product(c, idx as u64);
                }
                cliques.push(Potential::Dense(values));
            } else {
                let mut entries = Vec::new();
                for idx in 0..len {
                    let v = self.cell_product(c, idx);
                    if v > 0.0 {
                        entries.push((idx, v));
                    }
                }
                cliques.push(Potential::Sparse { len, entries });
            }
        }
        self.cliques = cliques;
        self.seps = s
            .edges
            .iter()
            .map(|e| Potential::constant_dense(e.sep_len, 1.0))
            .collect();
    }

    /// Product of the CPT entries assigned to clique `c` at cell `idx`.
    fn cell_product(&self, c: usize, idx: u64) -> f64 {
        let s = &self.structure;
        let mut p = 1.0;
        for &node in &s.assigned[c] {
            let binding = &s.cpt_bindings[node];
            let cpt_idx = project(idx, &binding.terms);
            p *= self.cpts[node][cpt_idx as usize];
        }
        p
    }

    /// Recompute potentials from the (possibly updated) network CPTs over the
    /// current storage support, clearing evidence and scale.
    ///
    /// Cells dropped by earlier compression stay dropped, so rebinding CPTs
    /// must not enlarge the support beyond what the charge was compressed
    /// under.
    pub fn reset_from(&mut self, net: &DiscreteNetwork) -> Result<(), EngineError> {
        let s = self.structure.clone();
        if net.node_count() != s.node_states.len() {
            return Err(EngineError::StructureMismatch);
        }
        for v in net.node_ids() {
            if net.states(v) != s.node_states[v.0] {
                return Err(EngineError::StructureMismatch);
            }
        }
        self.cpts = net.node_ids().map(|v| net.cpt(v).to_vec()).collect();
        for c in 0..self.cliques.len() {
            let mut values: Vec<(u64, f64)> = Vec::new();
            self.cliques[c].for_each(|idx, _| values.push((idx, 0.0)));
            for entry in values.iter_mut() {
                entry.1 = self.cell_product(c, entry.0);
            }
            let mut i = 0;
            self.cliques[c].for_each_mut(|_, x| {
                *x = values[i].1;
                i += 1;
            });
        }
        for sep in &mut self.seps {
            sep.fill(1.0);
        }
        self.evidence.clear();
        self.log_scale = 0.0;
        self.canonical = false;
        Ok(())
    }

    /// Multiply a likelihood vector into one clique containing the node.
    ///
    /// The vector's maximum is factored out into the log-scale register.
    /// All-zero vectors are accepted; propagation then reports impossible
    /// evidence.
    pub fn enter_evidence(&mut self, node: NodeId, weights: &[f64]) -> Result<(), EngineError> {
        let s = self.structure.clone();
        if node.0 >= s.node_slot.len() {
            return Err(EngineError::NodeNotFound(node.0));
        }
        let slot = &s.node_slot[node.0];
        if weights.len() as u64 != slot.card {
            return Err(EngineError::EvidenceLength {
                node: node.0,
                got: weights.len(),
                expected: slot.card as usize,
            });
        }
        if weights.iter().any(|&w| w.is_nan() || w < 0.0) {
            return Err(EngineError::NegativeEvidence(node.0));
        }
        let m = weights.iter().cloned().fold(0.0f64, f64::max);
        let (scaled, contribution): (Vec<f64>, f64) = if m > 0.0 {
            (weights.iter().map(|&w| w / m).collect(), m.ln())
        } else {
            (weights.to_vec(), 0.0)
        };
        let (stride, card) = (slot.stride, slot.card);
        self.cliques[slot.home].for_each_mut(|idx, x| {
            *x *= scaled[state_of(idx, stride, card) as usize];
        });
        self.log_scale += contribution;
        self.evidence.push((node, weights.to_vec(), contribution));
        self.canonical = false;
        Ok(())
    }

    /// Remove all evidence entered on a node.
    ///
    /// Strictly positive vectors are retracted by dividing them back out of
    /// the clique they were entered into (with 0/0 taken as 0); vectors with
    /// zero entries force a reinitialisation from the stored CPTs because
    /// division cannot restore zeroed cells.
    pub fn retract_evidence(&mut self, node: NodeId) -> Result<(), EngineError> {
        let records: Vec<usize> = self
            .evidence
            .iter()
            .enumerate()
            .filter(|(_, (v, _, _))| *v == node)
            .map(|(i, _)| i)
            .collect();
        if records.is_empty() {
            return Err(EngineError::NoEvidence(node.0));
        }
        let all_positive = records
            .iter()
            .all(|&i| self.evidence[i].1.iter().all(|&w| w > 0.0));
        if all_positive {
            let s = self.structure.clone();
            let slot = &s.node_slot[node.0];
            let (stride, card) = (slot.stride, slot.card);
            for &i in records.iter().rev() {
                let (_, weights, contribution) = self.evidence.remove(i);
                let m = weights.iter().cloned().fold(0.0f64, f64::max);
                let scaled: Vec<f64> = weights.iter().map(|&w| w / m).collect();
                self.cliques[slot.home].for_each_mut(|idx, x| {
                    let w = scaled[state_of(idx, stride, card) as usize];
                    *x = if *x == 0.0 { 0.0 } else { *x / w };
                });
                self.log_scale -= contribution;
            }
        } else {
            let keep: Vec<(NodeId, Vec<f64>)> = self
                .evidence
                .iter()
                .filter(|(v, _, _)| *v != node)
                .map(|(v, w, _)| (*v, w.clone()))
                .collect();
            self.reinitialize_potentials();
            self.evidence.clear();
            self.log_scale = 0.0;
            for (v, w) in keep {
                self.enter_evidence(v, &w)?;
            }
        }
        self.canonical = false;
        Ok(())
    }

    fn reinitialize_potentials(&mut self) {
        for c in 0..self.cliques.len() {
            let mut values: Vec<(u64, f64)> = Vec::new();
            self.cliques[c].for_each(|idx, _| values.push((idx, 0.0)));
            for entry in values.iter_mut() {
                entry.1 = self.cell_product(c, entry.0);
            }
            let mut i = 0;
            self.cliques[c].for_each_mut(|_, x| {
                *x = values[i].1;
                i += 1;
            });
        }
        for sep in &mut self.seps {
            sep.fill(1.0);
        }
    }

    /// Two-phase propagation to canonical form.
    ///
    /// Returns `N = sum_x g(x)` including all entered evidence, read off a
    /// separator with minimal state space (the first such in edge order).
    /// A zero charge is reported as [`EngineError::ImpossibleEvidence`].
    pub fn propagate(&mut self) -> Result<Scaled, EngineError> {
        let s = self.structure.clone();
        let mut msg: Vec<f64> = Vec::new();
        // Collect toward the root, factoring each message's mass into the
        // log-scale register to keep mantissas near one.
        for step in &s.collect {
            let edge = &s.edges[step.edge];
            let proj_child = if edge.a == step.child {
                &edge.proj_a
            } else {
                debug_assert_eq!(edge.b, step.child);
                &edge.proj_b
            };
            let proj_parent = if edge.a == step.parent {
                &edge.proj_a
            } else {
                &edge.proj_b
            };
            msg.clear();
            msg.resize(edge.sep_len as usize, 0.0);
            self.cliques[step.child].for_each(|idx, x| {
                msg[project(idx, proj_child) as usize] += x;
            });
            let mass: f64 = msg.iter().sum();
            if mass <= 0.0 {
                self.canonical = false;
                return Err(EngineError::ImpossibleEvidence);
            }
            let inv = 1.0 / mass;
            msg.iter_mut().for_each(|x| *x *= inv);
            self.cliques[step.child].scale(inv);
            self.log_scale += mass.ln();
            let ratio: Vec<f64> = {
                let old = &self.seps[step.edge];
                msg.iter()
                    .enumerate()
                    .map(|(i, &new)| {
                        let o = old.get(i as u64);
                        if o == 0.0 {
                            0.0
                        } else {
                            new / o
                        }
                    })
                    .collect()
            };
            self.cliques[step.parent].for_each_mut(|idx, x| {
                *x *= ratio[project(idx, proj_parent) as usize];
            });
            let msg_ref = &msg;
            self.seps[step.edge].for_each_mut(|idx, x| *x = msg_ref[idx as usize]);
        }
        // The root now holds the full marginal; a zero total means the
        // charge vanishes everywhere.
        if self.cliques[0].sum() <= 0.0 {
            self.canonical = false;
            return Err(EngineError::ImpossibleEvidence);
        }
        // Distribute from the root.
        for step in s.collect.iter().rev() {
            let edge = &s.edges[step.edge];
            let proj_child = if edge.a == step.child {
                &edge.proj_a
            } else {
                &edge.proj_b
            };
            let proj_parent = if edge.a == step.parent {
                &edge.proj_a
            } else {
                &edge.proj_b
            };
            msg.clear();
            msg.resize(edge.sep_len as usize, 0.0);
            self.cliques[step.parent].for_each(|idx, x| {
                msg[project(idx, proj_parent) as usize] += x;
            });
            let ratio: Vec<f64> = {
                let old = &self.seps[step.edge];
                msg.iter()
                    .enumerate()
                    .map(|(i, &new)| {
                        let o = old.get(i as u64);
                        if o == 0.0 {
                            0.0
                        } else {
                            new / o
                        }
                    })
                    .collect()
            };
            self.cliques[step.child].for_each_mut(|idx, x| {
                *x *= ratio[project(idx, proj_child) as usize];
            });
            let msg_ref = &msg;
            self.seps[step.edge].for_each_mut(|idx, x| *x = msg_ref[idx as usize]);
        }
        // After both phases every potential is a marginal of the same scaled
        // charge; read the total off a separator with minimal state space
        // (first in edge order on ties), falling back to the root clique for
        // a single-clique tree.
        let exponent = self.log_scale;
        let mantissa = match s.norm_edge {
            Some(e) => self.seps[e].sum(),
            None => self.cliques[0].sum(),
        };
        if mantissa <= 0.0 {
            self.canonical = false;
            return Err(EngineError::ImpossibleEvidence);
        }
        // Normalise so every potential is a marginal of the conditional
        // distribution; the total stays in the register.
        let inv = 1.0 / mantissa;
        for c in &mut self.cliques {
            c.scale(inv);
        }
        for sep in &mut self.seps {
            sep.scale(inv);
        }
        self.log_scale += mantissa.ln();
        self.canonical = true;
        Ok(Scaled::new(mantissa, exponent))
    }

    pub fn is_canonical(&self) -> bool {
        self.canonical
    }

    /// Normalized marginal over a node set contained in a single clique,
    /// laid out in the order given (last node fastest).
    pub fn marginal(&self, nodes: &[NodeId]) -> Result<Vec<f64>, EngineError> {
        if !self.canonical {
            return Err(EngineError::NotCanonical);
        }
        let s = &self.structure;
        let clique = (0..s.clique_vars.len())
            .find(|&c| nodes.iter().all(|v| s.clique_vars[c].contains(v)))
            .ok_or(EngineError::NoCoveringClique)?;
        let cards: Vec<usize> = nodes.iter().map(|&v| s.node_states[v.0]).collect();
        let out_strides = strides(&cards);
        let terms: Vec<ProjTerm> = nodes
            .iter()
            .enumerate()
            .map(|(j, v)| {
                let pos = s.clique_vars[clique].iter().position(|u| u == v).unwrap();
                ProjTerm {
                    table_stride: s.clique_strides[clique][pos],
                    card: s.clique_cards[clique][pos] as u64,
                    target_stride: out_strides[j],
                }
            })
            .collect();
        let len: u64 = cards.iter().map(|&c| c as u64).product();
        let mut out = vec![0.0f64; len as usize];
        self.cliques[clique].for_each(|idx, x| {
            out[project(idx, &terms) as usize] += x;
        });
        let total: f64 = out.iter().sum();
        if total <= 0.0 {
            return Err(EngineError::ImpossibleEvidence);
        }
        out.iter_mut().for_each(|x| *x /= total);
        Ok(out)
    }

    /// Draw one full configuration from the canonical charge.
    pub fn sample(&self, rng: &mut impl Rng) -> Result<Vec<usize>, EngineError> {
        if !self.canonical {
            return Err(EngineError::NotCanonical);
        }
        let s = &self.structure;
        let mut assignment: Vec<Option<usize>> = vec![None; s.node_states.len()];
        self.sample_clique(0, rng, &mut assignment, None)?;
        // Reversed collect order runs root-to-leaves.
        for step in s.collect.iter().rev() {
            self.sample_clique(step.child, rng, &mut assignment, Some(step))?;
        }
        Ok(assignment.into_iter().map(|a| a.unwrap_or(0)).collect())
    }

    fn sample_clique(
        &self,
        clique: usize,
        rng: &mut impl Rng,
        assignment: &mut [Option<usize>],
        via: Option<&Step>,
    ) -> Result<(), EngineError> {
        let s = &self.structure;
        // Condition on the separator states fixed by the already-sampled parent.
        let sep_filter: Option<(u64, &Vec<ProjTerm>)> = via.map(|step| {
            let edge = &s.edges[step.edge];
            let proj_child = if edge.a == step.child {
                &edge.proj_a
            } else {
                &edge.proj_b
            };
            let mut sep_idx = 0u64;
            for (j, &v) in s.sep_vars[step.edge].iter().enumerate() {
                let state = assignment[v.0].expect("separator variable sampled") as u64;
                // Separator strides: same order as sep_vars, last fastest.
                let sep_strides = strides(
                    &s.sep_vars[step.edge]
                        .iter()
                        .map(|&u| s.node_states[u.0])
                        .collect::<Vec<_>>(),
                );
                sep_idx += state * sep_strides[j];
            }
            (sep_idx, proj_child)
        });
        let mut total = 0.0;
        self.cliques[clique].for_each(|idx, x| {
            if let Some((sep_idx, proj)) = &sep_filter {
                if project(idx, proj) != *sep_idx {
                    return;
                }
            }
            total += x;
        });
        if total <= 0.0 {
            return Err(EngineError::ImpossibleEvidence);
        }
        let target = rng.random_range(0.0..1.0) * total;
        let mut acc = 0.0;
        let mut chosen: Option<u64> = None;
        self.cliques[clique].for_each(|idx, x| {
            if chosen.is_some() {
                return;
            }
            if let Some((sep_idx, proj)) = &sep_filter {
                if project(idx, proj) != *sep_idx {
                    return;
                }
            }
            acc += x;
            if acc >= target {
                chosen = Some(idx);
            }
        });
        let cell = chosen.unwrap_or_else(|| {
            // Fallback to the last admissible cell under rounding.
            let mut last = 0;
            self.cliques[clique].for_each(|idx, x| {
                if x > 0.0 {
                    if let Some((sep_idx, proj)) = &sep_filter {
                        if project(idx, proj) != *sep_idx {
                            return;
                        }
                    }
                    last = idx;
                }
            });
            last
        });
        for (pos, &v) in s.clique_vars[clique].iter().enumerate() {
            let state = state_of(cell, s.clique_strides[clique][pos], s.clique_cards[clique][pos] as u64);
            assignment[v.0] = Some(state as usize);
        }
        Ok(())
    }

    /// Drop zero cells everywhere and switch to sparse storage. Returns the
    /// stored total size afterwards. Requires one completed propagation so
    /// that zero cells are exactly the zero-probability configurations.
    pub fn compress(&mut self) -> Result<u64, EngineError> {
        if !self.canonical {
            return Err(EngineError::NotCanonical);
        }
        let mut total = 0u64;
        for c in &mut self.cliques {
            total += c.compress() as u64;
        }
        for sep in &mut self.seps {
            total += sep.compress() as u64;
        }
        Ok(total)
    }

    /// Number of stored cells across all potentials.
    pub fn stored_size(&self) -> u64 {
        self.cliques.iter().map(|c| c.stored() as u64).sum::<u64>()
            + self.seps.iter().map(|s| s.stored() as u64).sum::<u64>()
    }

    /// Strictly positive cells in one clique's table.
    pub fn clique_support(&self, clique: usize) -> usize {
        self.cliques[clique].support()
    }

    /// Strictly positive cells in one separator's table (by edge index).
    pub fn separator_support(&self, edge: usize) -> usize {
        self.seps[edge].support()
    }

    pub fn clique_count(&self) -> usize {
        self.cliques.len()
    }

    pub fn edge_count(&self) -> usize {
        self.seps.len()
    }

    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }
}

fn build_structure(
    net: &DiscreteNetwork,
    spec: &CliqueTreeSpec,
    config: &ChargeConfig,
) -> Result<Structure, EngineError> {
    let n = spec.cliques.len();
    let node_states: Vec<usize> = net.node_ids().map(|v| net.states(v)).collect();
    let clique_vars = spec.cliques.clone();
    let clique_cards: Vec<Vec<usize>> = clique_vars
        .iter()
        .map(|c| c.iter().map(|&v| node_states[v.0]).collect())
        .collect();
    let clique_len: Vec<u64> = clique_cards
        .iter()
        .map(|cards| cards.iter().map(|&c| c as u64).product())
        .collect();
    for &len in &clique_len {
        if len > config.max_cells {
            return Err(EngineError::StateSpaceTooLarge(len));
        }
    }
    let clique_strides: Vec<Vec<u64>> = clique_cards.iter().map(|c| strides(c)).collect();

    let mut sep_vars = Vec::with_capacity(spec.edges.len());
    let mut edges = Vec::with_capacity(spec.edges.len());
    for (e, &(a, b)) in spec.edges.iter().enumerate() {
        let sep = spec.separator(e);
        let sep_cards: Vec<usize> = sep.iter().map(|&v| node_states[v.0]).collect();
        let sep_strides = strides(&sep_cards);
        let sep_len: u64 = sep_cards.iter().map(|&c| c as u64).product();
        let proj_for = |clique: usize| -> Vec<ProjTerm> {
            sep.iter()
                .enumerate()
                .map(|(j, v)| {
                    let pos = clique_vars[clique].iter().position(|u| u == v).unwrap();
                    ProjTerm {
                        table_stride: clique_strides[clique][pos],
                        card: clique_cards[clique][pos] as u64,
                        target_stride: sep_strides[j],
                    }
                })
                .collect()
        };
        edges.push(EdgeInfo {
            a,
            b,
            sep_len,
            proj_a: proj_for(a),
            proj_b: proj_for(b),
        });
        sep_vars.push(sep);
    }

    // Breadth-first rooting at clique 0; collect runs the order reversed.
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (e, &(a, b)) in spec.edges.iter().enumerate() {
        adj[a].push((b, e));
        adj[b].push((a, e));
    }
    let mut order = Vec::with_capacity(n);
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut visited = vec![false; n];
    let mut queue = std::collections::VecDeque::new();
    if n > 0 {
        queue.push_back(0usize);
        visited[0] = true;
    }
    while let Some(c) = queue.pop_front() {
        order.push(c);
        for &(d, e) in &adj[c] {
            if !visited[d] {
                visited[d] = true;
                parent[d] = Some((c, e));
                queue.push_back(d);
            }
        }
    }
    let collect: Vec<Step> = order
        .iter()
        .rev()
        .filter_map(|&c| {
            parent[c].map(|(p, e)| Step {
                child: c,
                parent: p,
                edge: e,
            })
        })
        .collect();

    // Evidence home: first clique containing the node.
    let mut node_slot = Vec::with_capacity(node_states.len());
    for v in net.node_ids() {
        let home = (0..n)
            .find(|&c| clique_vars[c].contains(&v))
            .ok_or(EngineError::FamilyNotCovered(v.0))?;
        let pos = clique_vars[home].iter().position(|u| *u == v).unwrap();
        node_slot.push(NodeSlot {
            home,
            stride: clique_strides[home][pos],
            card: clique_cards[home][pos] as u64,
        });
    }

    // CPT assignment: first clique containing the whole family.
    let mut cpt_bindings = Vec::with_capacity(node_states.len());
    let mut assigned: Vec<Vec<usize>> = vec![Vec::new(); n];
    for v in net.node_ids() {
        let family = net.family(v);
        let clique = (0..n)
            .find(|&c| family.iter().all(|u| clique_vars[c].contains(u)))
            .ok_or(EngineError::FamilyNotCovered(v.0))?;
        // CPT layout: parents in declared order, then the node, last fastest.
        let mut fam_vars: Vec<NodeId> = net.parents(v).to_vec();
        fam_vars.push(v);
        let fam_cards: Vec<usize> = fam_vars.iter().map(|&u| node_states[u.0]).collect();
        let fam_strides = strides(&fam_cards);
        let terms: Vec<ProjTerm> = fam_vars
            .iter()
            .enumerate()
            .map(|(j, u)| {
                let pos = clique_vars[clique].iter().position(|w| w == u).unwrap();
                ProjTerm {
                    table_stride: clique_strides[clique][pos],
                    card: clique_cards[clique][pos] as u64,
                    target_stride: fam_strides[j],
                }
            })
            .collect();
        assigned[clique].push(v.0);
        cpt_bindings.push(CptBinding { terms });
    }

    let norm_edge = edges
        .iter()
        .enumerate()
        .min_by_key(|(_, e)| e.sep_len)
        .map(|(i, _)| i);

    Ok(Structure {
        clique_vars,
        clique_cards,
        clique_len,
        clique_strides,
        sep_vars,
        edges,
        collect,
        node_slot,
        cpt_bindings,
        assigned,
        norm_edge,
        node_states,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::network::AuxVariableSpec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn chain_net() -> (DiscreteNetwork, CliqueTreeSpec) {
        let mut net = DiscreteNetwork::new();
        let a = net.add_root(vec![0.4, 0.6]).unwrap();
        let b = net.add_node(2, &[a], vec![0.9, 0.1, 0.2, 0.8]).unwrap();
        let c = net.add_node(3, &[b], vec![0.5, 0.3, 0.2, 0.1, 0.1, 0.8]).unwrap();
        let spec = CliqueTreeSpec::new(vec![vec![a, b], vec![b, c]], vec![(0, 1)]);
        (net, spec)
    }

    #[test]
    fn no_evidence_norm_is_one() {
        let (net, spec) = chain_net();
        let mut charge = Charge::initialize(&net, &spec).unwrap();
        let n = charge.propagate().unwrap();
        assert!((n.ln()).abs() < 1e-12);
    }

    #[test]
    fn bernoulli_clique_table_is_prior() {
        let mut net = DiscreteNetwork::new();
        let x = net.add_root(vec![0.7, 0.3]).unwrap();
        let spec = CliqueTreeSpec::new(vec![vec![x]], vec![]);
        let mut charge = Charge::initialize(&net, &spec).unwrap();
        charge.propagate().unwrap();
        let m = charge.marginal(&[x]).unwrap();
        assert!((m[0] - 0.7).abs() < 1e-15 && (m[1] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn all_ones_evidence_keeps_norm() {
        let (net, spec) = chain_net();
        let mut charge = Charge::initialize(&net, &spec).unwrap();
        charge.enter_evidence(NodeId(1), &[1.0, 1.0]).unwrap();
        let n = charge.propagate().unwrap();
        assert!(n.ln().abs() < 1e-12);
    }

    #[test]
    fn zero_evidence_reports_impossible() {
        let (net, spec) = chain_net();
        let mut charge = Charge::initialize(&net, &spec).unwrap();
        charge.enter_evidence(NodeId(0), &[0.0, 0.0]).unwrap();
        assert!(matches!(
            charge.propagate(),
            Err(EngineError::ImpossibleEvidence)
        ));
    }

    #[test]
    fn hard_evidence_gives_degenerate_posterior() {
        let (net, spec) = chain_net();
        let mut charge = Charge::initialize(&net, &spec).unwrap();
        charge.enter_evidence(NodeId(0), &[0.0, 1.0]).unwrap();
        charge.propagate().unwrap();
        let m = charge.marginal(&[NodeId(0)]).unwrap();
        assert_eq!(m[0], 0.0);
        assert!((m[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn propagation_matches_enumeration_and_is_idempotent() {
        let (net, spec) = chain_net();
        let mut charge = Charge::initialize(&net, &spec).unwrap();
        let ev0 = [0.3, 0.9];
        let ev2 = [1.0, 0.2, 0.5];
        charge.enter_evidence(NodeId(0), &ev0).unwrap();
        charge.enter_evidence(NodeId(2), &ev2).unwrap();
        let n = charge.propagate().unwrap();
        let mut expected = 0.0;
        net.for_each_joint(|cfg, p| {
            expected += p * ev0[cfg[0]] * ev2[cfg[2]];
        });
        assert!((n.ln() - expected.ln()).abs() < 1e-12);
        let before = charge.marginal(&[NodeId(1)]).unwrap();
        let n2 = charge.propagate().unwrap();
        assert!((n2.ln() - n.ln()).abs() < 1e-12);
        let after = charge.marginal(&[NodeId(1)]).unwrap();
        for (a, b) in before.iter().zip(&after) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn local_consistency_after_propagation() {
        let (net, spec) = chain_net();
        let mut charge = Charge::initialize(&net, &spec).unwrap();
        charge.enter_evidence(NodeId(2), &[0.1, 0.7, 0.4]).unwrap();
        charge.propagate().unwrap();
        // Clique {a,b} marginalized to {b} must equal the separator, which in
        // turn equals clique {b,c} marginalized to {b}.
        let m_ab = charge.marginal(&[NodeId(1)]).unwrap();
        let m_bc = charge.marginal(&[NodeId(1), NodeId(2)]).unwrap();
        let m_b_from_bc: Vec<f64> = (0..2).map(|s| (0..3).map(|t| m_bc[s * 3 + t]).sum()).collect();
        for (a, b) in m_ab.iter().zip(&m_b_from_bc) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn retraction_restores_queries() {
        let (net, spec) = chain_net();
        let mut charge = Charge::initialize(&net, &spec).unwrap();
        charge.propagate().unwrap();
        let base = charge.marginal(&[NodeId(2)]).unwrap();

        // Strictly positive evidence: division path.
        charge.enter_evidence(NodeId(0), &[0.5, 2.0]).unwrap();
        charge.propagate().unwrap();
        charge.retract_evidence(NodeId(0)).unwrap();
        charge.propagate().unwrap();
        let back = charge.marginal(&[NodeId(2)]).unwrap();
        for (a, b) in base.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }

        // Evidence with zeros: reinitialisation path.
        charge.enter_evidence(NodeId(0), &[0.0, 1.0]).unwrap();
        charge.propagate().unwrap();
        charge.retract_evidence(NodeId(0)).unwrap();
        charge.propagate().unwrap();
        let back = charge.marginal(&[NodeId(2)]).unwrap();
        for (a, b) in base.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn compression_is_transparent() {
        let mut net = DiscreteNetwork::new();
        let a = net.add_root(vec![0.5, 0.5, 0.0]).unwrap(); // structural zero
        let b = net
            .add_node(2, &[a], vec![0.9, 0.1, 0.2, 0.8, 1.0, 0.0])
            .unwrap();
        let spec = CliqueTreeSpec::new(vec![vec![a, b]], vec![]);
        let mut charge = Charge::initialize(&net, &spec).unwrap();
        charge.propagate().unwrap();
        let m_before = charge.marginal(&[b]).unwrap();
        let stored = charge.compress().unwrap();
        assert_eq!(stored, 4); // 6-cell table minus two zero rows
        let m_after = charge.marginal(&[b]).unwrap();
        for (x, y) in m_before.iter().zip(&m_after) {
            assert!((x - y).abs() < 1e-15);
        }
        // Still propagates and answers after compression.
        charge.enter_evidence(b, &[0.0, 1.0]).unwrap();
        let n = charge.propagate().unwrap();
        let mut expected = 0.0;
        net.for_each_joint(|cfg, p| {
            if cfg[1] == 1 {
                expected += p;
            }
        });
        assert!((n.ln() - expected.ln()).abs() < 1e-12);
    }

    #[test]
    fn fully_positive_compression_keeps_size() {
        let (net, spec) = chain_net();
        let mut charge = Charge::initialize(&net, &spec).unwrap();
        let dense_size = charge.stored_size();
        charge.propagate().unwrap();
        let stored = charge.compress().unwrap();
        assert_eq!(stored, dense_size);
    }

    #[test]
    fn sampling_is_deterministic_and_respects_hard_evidence() {
        let (net, spec) = chain_net();
        let mut charge = Charge::initialize(&net, &spec).unwrap();
        charge.enter_evidence(NodeId(0), &[0.0, 1.0]).unwrap();
        charge.enter_evidence(NodeId(1), &[1.0, 0.0]).unwrap();
        charge.enter_evidence(NodeId(2), &[0.0, 0.0, 1.0]).unwrap();
        charge.propagate().unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let s = charge.sample(&mut rng).unwrap();
        assert_eq!(s, vec![1, 0, 2]);
        let mut rng2 = ChaCha12Rng::seed_from_u64(7);
        assert_eq!(charge.sample(&mut rng2).unwrap(), s);
    }

    #[test]
    fn sample_frequency_close_to_marginal() {
        let mut net = DiscreteNetwork::new();
        let x = net.add_root(vec![0.7, 0.3]).unwrap();
        let spec = CliqueTreeSpec::new(vec![vec![x]], vec![]);
        let mut charge = Charge::initialize(&net, &spec).unwrap();
        charge.propagate().unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let n = 100_000;
        let mut ones = 0usize;
        for _ in 0..n {
            if charge.sample(&mut rng).unwrap()[0] == 1 {
                ones += 1;
            }
        }
        let freq = ones as f64 / n as f64;
        // 3-sigma binomial bound around 0.3.
        assert!((freq - 0.3).abs() < 3.0 * (0.3f64 * 0.7 / n as f64).sqrt() + 1e-9);
    }

    #[test]
    fn aux_expectation_via_evidence() {
        // X ~ Bernoulli(0.5), h(x) = x, k = 1: expectation 0.5.
        let mut net = DiscreteNetwork::new();
        let x = net.add_root(vec![0.5, 0.5]).unwrap();
        let y = net
            .attach_aux_variable(&AuxVariableSpec {
                parents: vec![x],
                factor: vec![0.0, 1.0],
                scale: 1.0,
            })
            .unwrap();
        let spec = CliqueTreeSpec::new(vec![vec![x, y]], vec![]);
        let mut charge = Charge::initialize(&net, &spec).unwrap();
        let n1 = charge.propagate().unwrap();
        charge.enter_evidence(y, &[0.0, 1.0]).unwrap();
        let n2 = charge.propagate().unwrap();
        assert!((n2.ln_ratio(&n1).exp() - 0.5).abs() < 1e-12);
    }
}
