//! Clique tree specifications.
//!
//! Triangulations are supplied explicitly as a list of cliques and tree
//! edges; the engine only validates them. Separators are derived as pairwise
//! intersections of neighbouring cliques.

use crate::engine::network::{DiscreteNetwork, NodeId};
use std::collections::HashSet;

/// An explicit clique tree over the nodes of a network.
#[derive(Clone, Debug)]
pub struct CliqueTreeSpec {
    pub cliques: Vec<Vec<NodeId>>,
    pub edges: Vec<(usize, usize)>,
}

/// First violation found when validating a clique tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TreeViolation {
    EmptyClique(usize),
    DuplicateNode { clique: usize, node: NodeId },
    UnknownNode { clique: usize, node: NodeId },
    EdgeOutOfRange(usize, usize),
    NotATree(String),
    RunningIntersection(NodeId),
    FamilyNotCovered(NodeId),
}

impl std::fmt::Display for TreeViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TreeViolation::EmptyClique(i) => write!(f, "clique {i} is empty"),
            TreeViolation::DuplicateNode { clique, node } => {
                write!(f, "clique {clique} lists node {node} twice")
            }
            TreeViolation::UnknownNode { clique, node } => {
                write!(f, "clique {clique} references unknown node {node}")
            }
            TreeViolation::EdgeOutOfRange(a, b) => {
                write!(f, "edge ({a}, {b}) references a missing clique")
            }
            TreeViolation::NotATree(why) => write!(f, "edges do not form a tree: {why}"),
            TreeViolation::RunningIntersection(v) => write!(
                f,
                "cliques containing node {v} do not induce a connected subtree"
            ),
            TreeViolation::FamilyNotCovered(v) => {
                write!(f, "no clique contains the family of node {v}")
            }
        }
    }
}

impl CliqueTreeSpec {
    pub fn new(cliques: Vec<Vec<NodeId>>, edges: Vec<(usize, usize)>) -> Self {
        CliqueTreeSpec { cliques, edges }
    }

    /// Separator of an edge: the sorted intersection of its endpoints.
    pub fn separator(&self, edge: usize) -> Vec<NodeId> {
        let (a, b) = self.edges[edge];
        let in_b: HashSet<NodeId> = self.cliques[b].iter().cloned().collect();
        let mut sep: Vec<NodeId> = self.cliques[a]
            .iter()
            .cloned()
            .filter(|v| in_b.contains(v))
            .collect();
        sep.sort();
        sep
    }

    /// Sum of clique and separator state-space sizes.
    pub fn total_size(&self, net: &DiscreteNetwork) -> u64 {
        let clique_sum: u64 = self
            .cliques
            .iter()
            .map(|c| c.iter().map(|&v| net.states(v) as u64).product::<u64>())
            .sum();
        let sep_sum: u64 = (0..self.edges.len())
            .map(|e| {
                self.separator(e)
                    .iter()
                    .map(|&v| net.states(v) as u64)
                    .product::<u64>()
            })
            .sum();
        clique_sum + sep_sum
    }

    /// Check tree-ness, running intersection and family coverage, reporting
    /// the first violation found.
    pub fn validate(&self, net: &DiscreteNetwork) -> Result<(), TreeViolation> {
        let n = self.cliques.len();
        for (i, clique) in self.cliques.iter().enumerate() {
            if clique.is_empty() {
                return Err(TreeViolation::EmptyClique(i));
            }
            let mut seen = HashSet::new();
            for &v in clique {
                if v.0 >= net.node_count() {
                    return Err(TreeViolation::UnknownNode { clique: i, node: v });
                }
                if !seen.insert(v) {
                    return Err(TreeViolation::DuplicateNode { clique: i, node: v });
                }
            }
        }
        for &(a, b) in &self.edges {
            if a >= n || b >= n {
                return Err(TreeViolation::EdgeOutOfRange(a, b));
            }
        }
        if n > 0 && self.edges.len() != n - 1 {
            return Err(TreeViolation::NotATree(format!(
                "{} cliques need {} edges, found {}",
                n,
                n - 1,
                self.edges.len()
            )));
        }
        // Connectivity: with n-1 edges, connected implies acyclic.
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        if n > 0 {
            let mut visited = vec![false; n];
            let mut stack = vec![0usize];
            visited[0] = true;
            while let Some(c) = stack.pop() {
                for &d in &adj[c] {
                    if !visited[d] {
                        visited[d] = true;
                        stack.push(d);
                    }
                }
            }
            if visited.iter().any(|&v| !v) {
                return Err(TreeViolation::NotATree("graph is disconnected".into()));
            }
        }
        // Running intersection: cliques containing each node form a subtree.
        for v in net.node_ids() {
            let holders: Vec<usize> = (0..n)
                .filter(|&i| self.cliques[i].contains(&v))
                .collect();
            if holders.len() <= 1 {
                continue;
            }
            let holder_set: HashSet<usize> = holders.iter().cloned().collect();
            let mut visited = HashSet::new();
            let mut stack = vec![holders[0]];
            visited.insert(holders[0]);
            while let Some(c) = stack.pop() {
                for &d in &adj[c] {
                    if holder_set.contains(&d) && visited.insert(d) {
                        stack.push(d);
                    }
                }
            }
            if visited.len() != holders.len() {
                return Err(TreeViolation::RunningIntersection(v));
            }
        }
        // Family coverage.
        for v in net.node_ids() {
            let family = net.family(v);
            let covered = self.cliques.iter().any(|c| {
                let set: HashSet<NodeId> = c.iter().cloned().collect();
                family.iter().all(|u| set.contains(u))
            });
            if !covered {
                return Err(TreeViolation::FamilyNotCovered(v));
            }
        }
        Ok(())
    }
}
