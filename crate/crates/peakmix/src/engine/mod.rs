//! Generic exact inference for discrete Bayesian networks.
//!
//! Junction trees are supplied as explicit clique specifications and
//! validated rather than searched for. Expectations of nonnegative factor
//! products are computed by attaching binary auxiliary children and
//! propagating likelihood evidence: with evidence `k_B` on `Y_B = 1` the
//! ratio of normalising constants after and before propagation equals
//! `E[prod_B h_B(X_B)]`.

mod charge;
mod network;
mod spec;
pub(crate) mod table;

pub use charge::{Charge, ChargeConfig};
pub use network::{AuxVariableSpec, DiscreteNetwork, NodeId};
pub use spec::{CliqueTreeSpec, TreeViolation};

use crate::error::EngineError;
use crate::num::Scaled;

/// Expectation of `prod_{B in subset} h_B(X_B)` by auxiliary-variable
/// propagation over a single-clique tree.
///
/// `include` selects the subset of specs entering the product; an empty
/// subset yields 1. Returns `(N2 / N1) * prod k_B` carried in scaled form.
/// Intended for small networks; larger models should build a purpose-made
/// tree and drive a [`Charge`] directly.
pub fn expectation_of_product(
    net: &DiscreteNetwork,
    specs: &[AuxVariableSpec],
    include: &[bool],
) -> Result<Scaled, EngineError> {
    assert_eq!(specs.len(), include.len());
    let mut extended = net.clone();
    let mut aux_ids = Vec::with_capacity(specs.len());
    for spec in specs {
        aux_ids.push(extended.attach_aux_variable(spec)?);
    }
    let all: Vec<NodeId> = extended.node_ids().collect();
    let tree = CliqueTreeSpec::new(vec![all], vec![]);
    let mut charge = Charge::initialize(&extended, &tree)?;
    let n1 = charge.propagate()?;
    for (i, &y) in aux_ids.iter().enumerate() {
        if include[i] {
            charge.enter_evidence(y, &[0.0, specs[i].scale])?;
        }
    }
    match charge.propagate() {
        Ok(n2) => Ok(Scaled::new(
            n2.mantissa / n1.mantissa,
            n2.exponent - n1.exponent,
        )),
        Err(EngineError::ImpossibleEvidence) => Ok(Scaled::zero()),
        Err(e) => Err(e),
    }
}
