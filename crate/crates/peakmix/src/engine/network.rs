//! Discrete Bayesian networks with auxiliary-variable extension.
//!
//! A network is an append-only list of finite-state nodes; parents must
//! already exist when a node is added, so the graph is acyclic by
//! construction. Auxiliary variables are binary children that encode a scaled
//! nonnegative factor `h_B / k_B` over their parent set, turning expectations
//! of factor products into propagation probabilities.

use crate::engine::table::{advance, space_size};
use crate::error::EngineError;

pub(crate) const CPT_ROW_TOL: f64 = 1e-12;

/// Identifier of a node within one network.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

impl NodeId {
    pub fn index(&self) -> usize {
        self.0
    }
}

impl std::fmt::Display for NodeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Debug)]
struct NodeInfo {
    states: usize,
    parents: Vec<NodeId>,
    /// P(node | parents): one row of `states` probabilities per parent
    /// configuration, rows in odometer order over the parents.
    cpt: Vec<f64>,
    aux: bool,
}

/// A scaled factor to be attached as a binary auxiliary child.
///
/// `factor` holds the nonnegative values `h_B(x_B)` in odometer order over
/// the parent configurations; `scale` is the constant `k_B` with
/// `h_B / k_B` in `[0, 1]` everywhere.
#[derive(Clone, Debug)]
pub struct AuxVariableSpec {
    pub parents: Vec<NodeId>,
    pub factor: Vec<f64>,
    pub scale: f64,
}

impl AuxVariableSpec {
    /// Build a spec with the default scaling constant `max_x h(x)`.
    pub fn with_max_scale(parents: Vec<NodeId>, factor: Vec<f64>) -> Self {
        let scale = factor.iter().cloned().fold(0.0f64, f64::max);
        AuxVariableSpec {
            parents,
            factor,
            scale,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct DiscreteNetwork {
    nodes: Vec<NodeInfo>,
}

impl DiscreteNetwork {
    pub fn new() -> Self {
        DiscreteNetwork { nodes: Vec::new() }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn states(&self, v: NodeId) -> usize {
        self.nodes[v.0].states
    }

    pub fn parents(&self, v: NodeId) -> &[NodeId] {
        &self.nodes[v.0].parents
    }

    pub fn cpt(&self, v: NodeId) -> &[f64] {
        &self.nodes[v.0].cpt
    }

    pub fn is_aux(&self, v: NodeId) -> bool {
        self.nodes[v.0].aux
    }

    /// The node together with its parents.
    pub fn family(&self, v: NodeId) -> Vec<NodeId> {
        let mut fam = vec![v];
        fam.extend_from_slice(&self.nodes[v.0].parents);
        fam
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.nodes.len()).map(NodeId)
    }

    fn check_parents(&self, parents: &[NodeId]) -> Result<(), EngineError> {
        for &p in parents {
            if p.0 >= self.nodes.len() {
                return Err(EngineError::NodeNotFound(p.0));
            }
            if self.nodes[p.0].aux {
                return Err(EngineError::AuxParent(p.0));
            }
        }
        Ok(())
    }

    fn check_cpt(&self, node: usize, states: usize, parents: &[NodeId], cpt: &[f64]) -> Result<(), EngineError> {
        let parent_cards: Vec<usize> = parents.iter().map(|&p| self.nodes[p.0].states).collect();
        let rows = space_size(&parent_cards);
        if cpt.len() as u64 != rows * states as u64 {
            return Err(EngineError::InvalidCpt {
                node,
                detail: format!(
                    "table has {} entries, expected {}",
                    cpt.len(),
                    rows * states as u64
                ),
            });
        }
        for (r, row) in cpt.chunks(states).enumerate() {
            let mut sum = 0.0;
            for &x in row {
                if x.is_nan() || x < 0.0 {
                    return Err(EngineError::InvalidCpt {
                        node,
                        detail: format!("negative or NaN entry in row {r}"),
                    });
                }
                sum += x;
            }
            if (sum - 1.0).abs() > CPT_ROW_TOL {
                return Err(EngineError::InvalidCpt {
                    node,
                    detail: format!("row {r} sums to {sum}, expected 1"),
                });
            }
        }
        Ok(())
    }

    /// Append a node with the given state count, parents and CPT.
    pub fn add_node(
        &mut self,
        states: usize,
        parents: &[NodeId],
        cpt: Vec<f64>,
    ) -> Result<NodeId, EngineError> {
        let id = self.nodes.len();
        if states == 0 {
            return Err(EngineError::InvalidCpt {
                node: id,
                detail: "node must have at least one state".into(),
            });
        }
        self.check_parents(parents)?;
        self.check_cpt(id, states, parents, &cpt)?;
        self.nodes.push(NodeInfo {
            states,
            parents: parents.to_vec(),
            cpt,
            aux: false,
        });
        Ok(NodeId(id))
    }

    /// Append a root node with the given marginal distribution.
    pub fn add_root(&mut self, distribution: Vec<f64>) -> Result<NodeId, EngineError> {
        let states = distribution.len();
        self.add_node(states, &[], distribution)
    }

    /// Replace a node's CPT; the parent set and state count are unchanged.
    pub fn set_cpt(&mut self, v: NodeId, cpt: Vec<f64>) -> Result<(), EngineError> {
        if v.0 >= self.nodes.len() {
            return Err(EngineError::NodeNotFound(v.0));
        }
        let states = self.nodes[v.0].states;
        let parents = self.nodes[v.0].parents.clone();
        self.check_cpt(v.0, states, &parents, &cpt)?;
        self.nodes[v.0].cpt = cpt;
        Ok(())
    }

    /// Attach a binary auxiliary child encoding `P(Y=1 | x_B) = h(x_B)/k`.
    ///
    /// Rejects negative factor values, nonpositive scales and scalings with
    /// `h/k > 1` somewhere.
    pub fn attach_aux_variable(&mut self, spec: &AuxVariableSpec) -> Result<NodeId, EngineError> {
        self.check_parents(&spec.parents)?;
        let parent_cards: Vec<usize> = spec
            .parents
            .iter()
            .map(|&p| self.nodes[p.0].states)
            .collect();
        let rows = space_size(&parent_cards);
        if spec.factor.len() as u64 != rows {
            return Err(EngineError::InvalidFactor(format!(
                "factor has {} entries, expected {} parent configurations",
                spec.factor.len(),
                rows
            )));
        }
        if spec.scale.is_nan() || spec.scale <= 0.0 {
            return Err(EngineError::InvalidFactor(format!(
                "scaling constant must be positive, got {}",
                spec.scale
            )));
        }
        let mut cpt = Vec::with_capacity(spec.factor.len() * 2);
        for (i, &h) in spec.factor.iter().enumerate() {
            if h.is_nan() || h < 0.0 {
                return Err(EngineError::InvalidFactor(format!(
                    "negative or NaN factor value at configuration {i}"
                )));
            }
            let p = h / spec.scale;
            if p > 1.0 + CPT_ROW_TOL {
                return Err(EngineError::InvalidFactor(format!(
                    "h/k = {p} exceeds 1 at configuration {i}"
                )));
            }
            let p = p.min(1.0);
            cpt.push(1.0 - p);
            cpt.push(p);
        }
        let id = self.nodes.len();
        self.nodes.push(NodeInfo {
            states: 2,
            parents: spec.parents.clone(),
            cpt,
            aux: true,
        });
        Ok(NodeId(id))
    }

    /// Rebind the factor of an existing auxiliary node.
    pub fn set_aux_factor(&mut self, v: NodeId, factor: &[f64], scale: f64) -> Result<(), EngineError> {
        if v.0 >= self.nodes.len() {
            return Err(EngineError::NodeNotFound(v.0));
        }
        if !self.nodes[v.0].aux {
            return Err(EngineError::InvalidFactor(format!(
                "node {} is not an auxiliary variable",
                v.0
            )));
        }
        let spec = AuxVariableSpec {
            parents: self.nodes[v.0].parents.clone(),
            factor: factor.to_vec(),
            scale,
        };
        // Re-run the attach validation, then swap the table in place.
        let parent_cards: Vec<usize> = spec
            .parents
            .iter()
            .map(|&p| self.nodes[p.0].states)
            .collect();
        if factor.len() as u64 != space_size(&parent_cards) {
            return Err(EngineError::InvalidFactor(format!(
                "factor has {} entries, expected {} parent configurations",
                factor.len(),
                space_size(&parent_cards)
            )));
        }
        if scale.is_nan() || scale <= 0.0 {
            return Err(EngineError::InvalidFactor(format!(
                "scaling constant must be positive, got {scale}"
            )));
        }
        let mut cpt = Vec::with_capacity(factor.len() * 2);
        for (i, &h) in factor.iter().enumerate() {
            if h.is_nan() || h < 0.0 {
                return Err(EngineError::InvalidFactor(format!(
                    "negative or NaN factor value at configuration {i}"
                )));
            }
            let p = h / scale;
            if p > 1.0 + CPT_ROW_TOL {
                return Err(EngineError::InvalidFactor(format!(
                    "h/k = {p} exceeds 1 at configuration {i}"
                )));
            }
            let p = p.min(1.0);
            cpt.push(1.0 - p);
            cpt.push(p);
        }
        self.nodes[v.0].cpt = cpt;
        Ok(())
    }

    /// Exhaustive joint probability of a full configuration; intended for
    /// small networks and tests.
    pub fn joint_probability(&self, config: &[usize]) -> f64 {
        let mut p = 1.0;
        for (v, info) in self.nodes.iter().enumerate() {
            let mut row = 0u64;
            for &parent in &info.parents {
                row = row * self.nodes[parent.0].states as u64 + config[parent.0] as u64;
            }
            p *= info.cpt[row as usize * info.states + config[v]];
        }
        p
    }

    /// Iterate over all joint configurations, calling `f(config, probability)`.
    pub fn for_each_joint(&self, mut f: impl FnMut(&[usize], f64)) {
        let cards: Vec<usize> = self.nodes.iter().map(|n| n.states).collect();
        if cards.is_empty() {
            return;
        }
        let mut cfg = vec![0usize; cards.len()];
        loop {
            f(&cfg, self.joint_probability(&cfg));
            if !advance(&mut cfg, &cards) {
                break;
            }
        }
    }
}
