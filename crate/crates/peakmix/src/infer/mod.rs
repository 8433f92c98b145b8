//! Case-level inference: likelihoods, posteriors and hypothesis comparison.
//!
//! A hypothesis names the contributors to each trace; known contributors
//! enter the gamma shapes as fixed count offsets while each unknown
//! contributor gets a genotype chain per marker. Markers are independent, so
//! the case likelihood is a sum of per-marker terms, each computed as a
//! normalizing-constant ratio on that marker's junction tree: observation
//! evidence `(0, k_a)` for seen alleles and `(1, 0)` for unseen ones turns
//! the propagation constant into the expectation of the peak-height factors
//! over the unknown genotypes.

mod deconv;
mod optim;
mod simulate;

pub use deconv::{deconvolve, deconvolve_joint, GenotypeRanking, GenotypeRow, JointRanking, JointRow};
pub use optim::{
    likelihood_ratio, maximize_likelihood, FitResult, LrResult, OptimizerConfig, StandardError,
};
pub use simulate::{simulate_case, SimCondition, SimulatedCase};

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::engine::{Charge, NodeId};
use crate::error::{EngineError, Error, Result};
use crate::marker::{AlleleLadder, MarkerNetwork, TreeMethod};
use crate::num::Scaled;
use crate::peak::{build_aux_cpts, shape, ModelParams};

/// A contributor in a hypothesis roster.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Contributor {
    /// Genotyped individual, identified by profile id.
    Known(String),
    /// Unknown individual, identified by a distinct tag.
    Unknown(String),
}

impl Contributor {
    pub fn id(&self) -> &str {
        match self {
            Contributor::Known(id) | Contributor::Unknown(id) => id,
        }
    }
}

/// A contributor roster with optional per-trace inclusion lists.
#[derive(Clone, Debug, PartialEq)]
pub struct Hypothesis {
    pub name: String,
    pub contributors: Vec<Contributor>,
    /// Trace id to included contributor ids; traces not listed include all.
    pub inclusion: BTreeMap<String, Vec<String>>,
}

impl Hypothesis {
    pub fn new(name: impl Into<String>, contributors: Vec<Contributor>) -> Self {
        Hypothesis {
            name: name.into(),
            contributors,
            inclusion: BTreeMap::new(),
        }
    }

    pub fn unknown_tags(&self) -> Vec<&str> {
        self.contributors
            .iter()
            .filter_map(|c| match c {
                Contributor::Unknown(tag) => Some(tag.as_str()),
                _ => None,
            })
            .collect()
    }

    pub fn known_ids(&self) -> Vec<&str> {
        self.contributors
            .iter()
            .filter_map(|c| match c {
                Contributor::Known(id) => Some(id.as_str()),
                _ => None,
            })
            .collect()
    }

    pub fn includes(&self, trace: &str, contributor: &str) -> bool {
        match self.inclusion.get(trace) {
            Some(list) => list.iter().any(|c| c == contributor),
            None => true,
        }
    }

    /// Contributor ids included in a trace, in roster order.
    pub fn included_ids(&self, trace: &str) -> Vec<String> {
        self.contributors
            .iter()
            .map(|c| c.id().to_string())
            .filter(|id| self.includes(trace, id))
            .collect()
    }

    pub fn validate(&self, traces: &[String]) -> Result<()> {
        if self.contributors.is_empty() {
            return Err(Error::domain(format!(
                "hypothesis {}: needs at least one contributor",
                self.name
            )));
        }
        let mut ids = std::collections::BTreeSet::new();
        for c in &self.contributors {
            if !ids.insert(c.id().to_string()) {
                return Err(Error::domain(format!(
                    "hypothesis {}: contributor id '{}' appears twice",
                    self.name,
                    c.id()
                )));
            }
        }
        for (trace, list) in &self.inclusion {
            if !traces.iter().any(|t| t == trace) {
                return Err(Error::domain(format!(
                    "hypothesis {}: inclusion list names unknown trace '{trace}'",
                    self.name
                )));
            }
            for id in list {
                if !ids.contains(id) {
                    return Err(Error::domain(format!(
                        "hypothesis {}: trace '{trace}' references contributor '{id}' absent from the roster",
                        self.name
                    )));
                }
            }
        }
        for trace in traces {
            if self.included_ids(trace).is_empty() {
                return Err(Error::domain(format!(
                    "hypothesis {}: trace '{trace}' has no contributors",
                    self.name
                )));
            }
        }
        Ok(())
    }
}

/// Genotype of one individual: per marker, allele counts over the ladder.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Profile {
    pub counts: BTreeMap<String, Vec<u8>>,
}

/// Peaks of one trace: per marker, heights over the ladder (zero means
/// unobserved); markers without peaks may be absent.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct TraceData {
    pub id: String,
    pub threshold: f64,
    pub heights: BTreeMap<String, Vec<f64>>,
}

impl TraceData {
    pub fn heights_for(&self, marker: &str, allele_count: usize) -> Vec<f64> {
        self.heights
            .get(marker)
            .cloned()
            .unwrap_or_else(|| vec![0.0; allele_count])
    }
}

/// Parsed case inputs: allele ladders, known profiles and trace peaks.
#[derive(Clone, Debug, Default)]
pub struct CaseData {
    pub ladders: Vec<AlleleLadder>,
    pub profiles: BTreeMap<String, Profile>,
    pub traces: Vec<TraceData>,
}

impl CaseData {
    pub fn marker_names(&self) -> Vec<String> {
        self.ladders.iter().map(|l| l.marker.clone()).collect()
    }

    pub fn trace_ids(&self) -> Vec<String> {
        self.traces.iter().map(|t| t.id.clone()).collect()
    }

    pub fn ladder(&self, marker: &str) -> Option<&AlleleLadder> {
        self.ladders.iter().find(|l| l.marker == marker)
    }

    pub fn validate(&self) -> Result<()> {
        if self.ladders.is_empty() {
            return Err(Error::domain("case has no markers"));
        }
        for trace in &self.traces {
            if trace.threshold.is_nan() || trace.threshold <= 0.0 {
                return Err(Error::domain(format!(
                    "trace {}: detection threshold must be positive",
                    trace.id
                )));
            }
            for (marker, heights) in &trace.heights {
                let ladder = self.ladder(marker).ok_or_else(|| {
                    Error::domain(format!(
                        "trace {}: peaks reference marker '{marker}' absent from the frequency table",
                        trace.id
                    ))
                })?;
                if heights.len() != ladder.len() {
                    return Err(Error::domain(format!(
                        "trace {}: marker {marker} has {} height entries for {} alleles",
                        trace.id,
                        heights.len(),
                        ladder.len()
                    )));
                }
                for (a, &z) in heights.iter().enumerate() {
                    if z > 0.0 && z < trace.threshold {
                        return Err(Error::domain(format!(
                            "trace {}: marker {marker} allele {} has height {z} strictly between 0 and the threshold {}",
                            trace.id,
                            ladder.label(a),
                            trace.threshold
                        )));
                    }
                }
            }
        }
        for (id, profile) in &self.profiles {
            for ladder in &self.ladders {
                if let Some(counts) = profile.counts.get(&ladder.marker) {
                    if counts.len() != ladder.len() {
                        return Err(Error::domain(format!(
                            "profile {id}: marker {} has {} count entries for {} alleles",
                            ladder.marker,
                            counts.len(),
                            ladder.len()
                        )));
                    }
                    let total: u32 = counts.iter().map(|&c| c as u32).sum();
                    if total != 2 {
                        return Err(Error::domain(format!(
                            "profile {id}: marker {} counts sum to {total}, expected 2",
                            ladder.marker
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Per-trace binding data inside one marker model.
#[derive(Clone, Debug)]
struct TraceBinding {
    id: String,
    threshold: f64,
    heights: Vec<f64>,
}

/// Auxiliary-slot layout per allele: an observation and a presence slot per
/// trace, plus a query slot per trace when diagnostics are needed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SlotLayout {
    Likelihood,
    Diagnostics,
}

impl SlotLayout {
    fn per_trace(&self) -> usize {
        match self {
            SlotLayout::Likelihood => 2,
            SlotLayout::Diagnostics => 3,
        }
    }
}

/// One marker's network, junction tree and bound observation model.
#[derive(Clone, Debug)]
pub struct MarkerModel {
    pub ladder: AlleleLadder,
    pub network: MarkerNetwork,
    charge: Charge,
    traces: Vec<TraceBinding>,
    knowns: Vec<(String, Vec<u8>)>,
    unknown_tags: Vec<String>,
    layout: SlotLayout,
    /// ln k per (trace, allele) from the latest bind; zero for unobserved.
    ln_k: Vec<Vec<f64>>,
    /// Set when an observed peak has vanishing density for every
    /// configuration under the bound parameters.
    impossible: bool,
    bound: bool,
}

impl MarkerModel {
    fn new(
        ladder: AlleleLadder,
        unknown_tags: Vec<String>,
        knowns: Vec<(String, Vec<u8>)>,
        traces: Vec<TraceBinding>,
        method: TreeMethod,
        layout: SlotLayout,
    ) -> Result<Self> {
        let slots = layout.per_trace() * traces.len();
        let network = MarkerNetwork::build(&ladder, unknown_tags.len(), slots)?;
        let built = network.build_tree(method)?;
        let mut charge = Charge::initialize(&network.net, &built.spec).map_err(Error::Engine)?;
        // One neutral propagation fixes the structural support, then the
        // charge is compressed; later parameter bindings recompute potentials
        // over that support only.
        charge.propagate().map_err(Error::Engine)?;
        charge.compress().map_err(Error::Engine)?;
        let ln_k = traces.iter().map(|t| vec![0.0; t.heights.len()]).collect();
        Ok(MarkerModel {
            ladder,
            network,
            charge,
            traces,
            knowns,
            unknown_tags,
            layout,
            ln_k,
            impossible: false,
            bound: false,
        })
    }

    pub fn trace_count(&self) -> usize {
        self.traces.len()
    }

    pub fn trace_id(&self, trace: usize) -> &str {
        &self.traces[trace].id
    }

    pub fn threshold(&self, trace: usize) -> f64 {
        self.traces[trace].threshold
    }

    pub fn height(&self, trace: usize, allele: usize) -> f64 {
        self.traces[trace].heights[allele]
    }

    pub fn is_observed(&self, trace: usize, allele: usize) -> bool {
        self.traces[trace].heights[allele] > 0.0
    }

    pub fn unknown_tags(&self) -> &[String] {
        &self.unknown_tags
    }

    pub fn observation_slot(&self, trace: usize, allele: usize) -> NodeId {
        self.network.slot(allele, trace * self.layout.per_trace())
    }

    pub fn presence_slot(&self, trace: usize, allele: usize) -> NodeId {
        self.network.slot(allele, trace * self.layout.per_trace() + 1)
    }

    pub fn query_slot(&self, trace: usize, allele: usize) -> NodeId {
        debug_assert_eq!(self.layout, SlotLayout::Diagnostics);
        self.network.slot(allele, trace * self.layout.per_trace() + 2)
    }

    /// Gamma shapes for every slot parent configuration of one allele under
    /// one trace's parameters.
    fn lambda_table(&self, allele: usize, params: &ModelParams) -> Vec<f64> {
        let rows = self.network.slot_rows(allele);
        let next = allele + 1;
        let known_contribs: Vec<(f64, f64, f64)> = self
            .knowns
            .iter()
            .map(|(id, counts)| {
                let at = counts[allele] as f64;
                let nxt = if next < counts.len() {
                    counts[next] as f64
                } else {
                    0.0
                };
                (at, nxt, params.fraction(id))
            })
            .collect();
        (0..rows)
            .map(|row| {
                let mut contribs = known_contribs.clone();
                for (i, (at, nxt)) in self
                    .network
                    .slot_config_counts(allele, row)
                    .into_iter()
                    .enumerate()
                {
                    contribs.push((
                        at as f64,
                        nxt as f64,
                        params.fraction(&self.unknown_tags[i]),
                    ));
                }
                shape(&contribs, params.rho, params.xi)
            })
            .collect()
    }

    /// Gamma shape at one allele for fixed unknown genotypes (count vectors
    /// per chain) plus the known-contributor offsets.
    pub fn shape_given_genotypes(
        &self,
        allele: usize,
        genotypes: &[Vec<u8>],
        params: &ModelParams,
    ) -> f64 {
        let next = allele + 1;
        let mut contribs: Vec<(f64, f64, f64)> = self
            .knowns
            .iter()
            .map(|(id, counts)| {
                let at = counts[allele] as f64;
                let nxt = if next < counts.len() {
                    counts[next] as f64
                } else {
                    0.0
                };
                (at, nxt, params.fraction(id))
            })
            .collect();
        for (i, g) in genotypes.iter().enumerate() {
            let at = g[allele] as f64;
            let nxt = if next < g.len() { g[next] as f64 } else { 0.0 };
            contribs.push((at, nxt, params.fraction(&self.unknown_tags[i])));
        }
        shape(&contribs, params.rho, params.xi)
    }

    /// Bind one parameter set per trace to the observation and presence
    /// slots. Query slots keep their previous table until a height is bound.
    pub fn bind(&mut self, params: &BTreeMap<String, ModelParams>) -> Result<()> {
        self.impossible = false;
        for t in 0..self.traces.len() {
            let trace_id = self.traces[t].id.clone();
            let p = params.get(&trace_id).ok_or_else(|| {
                Error::domain(format!("no model parameters for trace '{trace_id}'"))
            })?;
            for a in 0..self.ladder.len() {
                let lambdas = self.lambda_table(a, p);
                let z = self.traces[t].heights[a];
                let bundle = build_aux_cpts(&lambdas, z, p.eta, self.traces[t].threshold, &[])?;
                if bundle.observed && bundle.ln_scale == f64::NEG_INFINITY {
                    // Every configuration has vanishing density: the observed
                    // peak is impossible under these parameters.
                    self.impossible = true;
                    self.ln_k[t][a] = f64::NEG_INFINITY;
                    continue;
                }
                self.ln_k[t][a] = bundle.ln_scale;
                // CPT columns are set from the tail-consistent pairs so that
                // a tiny below-threshold probability survives instead of
                // collapsing to 1 - (1 - tiny) = 0.
                let observation_cpt: Vec<f64> = if bundle.observed {
                    bundle
                        .above
                        .iter()
                        .flat_map(|&p| [1.0 - p, p])
                        .collect()
                } else {
                    bundle
                        .below
                        .iter()
                        .zip(&bundle.presence)
                        .flat_map(|(&b, &p)| [b, p])
                        .collect()
                };
                self.network
                    .net
                    .set_cpt(self.observation_slot(t, a), observation_cpt)
                    .map_err(Error::Engine)?;
                let presence_cpt: Vec<f64> = bundle
                    .below
                    .iter()
                    .zip(&bundle.presence)
                    .flat_map(|(&b, &p)| [b, p])
                    .collect();
                self.network
                    .net
                    .set_cpt(self.presence_slot(t, a), presence_cpt)
                    .map_err(Error::Engine)?;
            }
        }
        self.bound = true;
        self.reset()
    }

    /// Bind one query slot to evaluate `P(height <= z | counts)`.
    pub fn bind_query(
        &mut self,
        trace: usize,
        allele: usize,
        z: f64,
        params: &ModelParams,
    ) -> Result<()> {
        let lambdas = self.lambda_table(allele, params);
        let cdf: Vec<f64> = lambdas
            .iter()
            .map(|&l| {
                if l == 0.0 {
                    1.0
                } else {
                    crate::gamma::gamma_cdf(z, l, params.eta)
                }
            })
            .collect();
        self.network
            .net
            .set_aux_factor(self.query_slot(trace, allele), &cdf, 1.0)
            .map_err(Error::Engine)
    }

    /// Recompute the charge potentials from the current network tables,
    /// clearing all evidence.
    pub fn reset(&mut self) -> Result<()> {
        self.charge
            .reset_from(&self.network.net)
            .map_err(Error::Engine)
    }

    /// Enter observation evidence for every (trace, allele) selected by the
    /// filter; returns the summed log scaling constants of observed alleles
    /// entered.
    pub fn enter_observation_evidence(
        &mut self,
        select: impl Fn(usize, usize) -> bool,
    ) -> Result<f64> {
        let mut ln_k_total = 0.0;
        for t in 0..self.traces.len() {
            for a in 0..self.ladder.len() {
                if !select(t, a) {
                    continue;
                }
                let slot = self.observation_slot(t, a);
                if self.is_observed(t, a) {
                    ln_k_total += self.ln_k[t][a];
                    self.charge
                        .enter_evidence(slot, &[0.0, 1.0])
                        .map_err(Error::Engine)?;
                } else {
                    self.charge
                        .enter_evidence(slot, &[1.0, 0.0])
                        .map_err(Error::Engine)?;
                }
            }
        }
        Ok(ln_k_total)
    }

    /// Enter presence evidence (peak seen or not) for selected positions.
    pub fn enter_presence_evidence(
        &mut self,
        select: impl Fn(usize, usize) -> bool,
    ) -> Result<()> {
        for t in 0..self.traces.len() {
            for a in 0..self.ladder.len() {
                if !select(t, a) {
                    continue;
                }
                let slot = self.presence_slot(t, a);
                let vec = if self.is_observed(t, a) {
                    [0.0, 1.0]
                } else {
                    [1.0, 0.0]
                };
                self.charge
                    .enter_evidence(slot, &vec)
                    .map_err(Error::Engine)?;
            }
        }
        Ok(())
    }

    /// Pin one unknown contributor's count at one allele.
    pub fn enter_count_evidence(&mut self, chain: usize, allele: usize, count: u8) -> Result<()> {
        let mut vec = [0.0, 0.0, 0.0];
        vec[count as usize] = 1.0;
        self.charge
            .enter_evidence(self.network.count_node(chain, allele), &vec)
            .map_err(Error::Engine)
    }

    /// Retract all observation evidence of one position.
    pub fn retract_observation(&mut self, trace: usize, allele: usize) -> Result<()> {
        self.charge
            .retract_evidence(self.observation_slot(trace, allele))
            .map_err(Error::Engine)
    }

    /// Propagate; `None` encodes a vanishing normalizing constant.
    pub fn propagate(&mut self) -> Result<Option<Scaled>> {
        match self.charge.propagate() {
            Ok(n) => Ok(Some(n)),
            Err(EngineError::ImpossibleEvidence) => Ok(None),
            Err(e) => Err(Error::Engine(e)),
        }
    }

    pub fn charge(&self) -> &Charge {
        &self.charge
    }

    /// Posterior marginal of one unknown contributor's count at one allele.
    pub fn count_marginal(&self, chain: usize, allele: usize) -> Result<Vec<f64>> {
        self.charge
            .marginal(&[self.network.count_node(chain, allele)])
            .map_err(Error::Engine)
    }

    fn slot_probability(&self, slot: NodeId) -> Result<f64> {
        let m = self.charge.marginal(&[slot]).map_err(Error::Engine)?;
        Ok(m[1])
    }

    /// Posterior P(peak above threshold) at a presence slot.
    pub fn presence_probability(&self, trace: usize, allele: usize) -> Result<f64> {
        self.slot_probability(self.presence_slot(trace, allele))
    }

    /// Posterior P(height <= bound query) at a query slot.
    pub fn query_probability(&self, trace: usize, allele: usize) -> Result<f64> {
        self.slot_probability(self.query_slot(trace, allele))
    }

    /// Posterior P(observation = above threshold) at an observation slot.
    pub fn observation_probability(&self, trace: usize, allele: usize) -> Result<f64> {
        self.slot_probability(self.observation_slot(trace, allele))
    }

    /// Natural-log likelihood of the bound observations for this marker.
    pub fn log_likelihood(&mut self) -> Result<f64> {
        if !self.bound {
            return Err(Error::domain("marker model has no bound parameters"));
        }
        if self.impossible {
            return Ok(f64::NEG_INFINITY);
        }
        self.reset()?;
        let ln_k = self.enter_observation_evidence(|_, _| true)?;
        match self.propagate()? {
            Some(n) => Ok(n.ln() + ln_k),
            None => Ok(f64::NEG_INFINITY),
        }
    }

    /// Natural-log likelihood using only peak presence and absence.
    pub fn presence_log_likelihood(&mut self) -> Result<f64> {
        if !self.bound {
            return Err(Error::domain("marker model has no bound parameters"));
        }
        self.reset()?;
        self.enter_presence_evidence(|_, _| true)?;
        match self.propagate()? {
            Some(n) => Ok(n.ln()),
            None => Ok(f64::NEG_INFINITY),
        }
    }

    /// Condition the charge on observation evidence for the selected
    /// positions and propagate, leaving it canonical for posterior queries.
    /// Returns `None` for zero posterior mass.
    pub fn condition_on_observations(
        &mut self,
        select: impl Fn(usize, usize) -> bool,
    ) -> Result<Option<Scaled>> {
        self.reset()?;
        self.enter_observation_evidence(select)?;
        self.propagate()
    }

    /// Sample unknown-contributor genotypes (count vectors per chain) from
    /// the canonical charge.
    pub fn sample_genotypes(&self, rng: &mut impl rand::Rng) -> Result<Vec<Vec<u8>>> {
        let config = self.charge.sample(rng).map_err(Error::Engine)?;
        Ok((0..self.unknown_tags.len())
            .map(|i| {
                (0..self.ladder.len())
                    .map(|a| config[self.network.count_node(i, a).index()] as u8)
                    .collect()
            })
            .collect())
    }
}

/// A full case under one hypothesis: one model per marker.
#[derive(Debug)]
pub struct CaseModel {
    pub hypothesis: Hypothesis,
    pub markers: Vec<MarkerModel>,
    pub trace_ids: Vec<String>,
    thresholds: BTreeMap<String, f64>,
}

impl CaseModel {
    pub fn build(
        case: &CaseData,
        hypothesis: &Hypothesis,
        method: TreeMethod,
        layout: SlotLayout,
    ) -> Result<Self> {
        case.validate()?;
        let trace_ids = case.trace_ids();
        hypothesis.validate(&trace_ids)?;
        // Known contributors must be fully profiled over the case markers.
        for id in hypothesis.known_ids() {
            let profile = case.profiles.get(id).ok_or_else(|| {
                Error::domain(format!(
                    "hypothesis {}: no profile for known contributor '{id}'",
                    hypothesis.name
                ))
            })?;
            for ladder in &case.ladders {
                if !profile.counts.contains_key(&ladder.marker) {
                    return Err(Error::domain(format!(
                        "profile {id}: missing genotype for marker {}",
                        ladder.marker
                    )));
                }
            }
        }
        let unknown_tags: Vec<String> = hypothesis
            .unknown_tags()
            .into_iter()
            .map(String::from)
            .collect();
        let mut markers = Vec::with_capacity(case.ladders.len());
        for ladder in &case.ladders {
            let knowns: Vec<(String, Vec<u8>)> = hypothesis
                .known_ids()
                .into_iter()
                .map(|id| {
                    (
                        id.to_string(),
                        case.profiles[id].counts[&ladder.marker].clone(),
                    )
                })
                .collect();
            let traces: Vec<TraceBinding> = case
                .traces
                .iter()
                .map(|t| TraceBinding {
                    id: t.id.clone(),
                    threshold: t.threshold,
                    heights: t.heights_for(&ladder.marker, ladder.len()),
                })
                .collect();
            markers.push(MarkerModel::new(
                ladder.clone(),
                unknown_tags.clone(),
                knowns,
                traces,
                method,
                layout,
            )?);
        }
        let thresholds = case
            .traces
            .iter()
            .map(|t| (t.id.clone(), t.threshold))
            .collect();
        Ok(CaseModel {
            hypothesis: hypothesis.clone(),
            markers,
            trace_ids,
            thresholds,
        })
    }

    pub fn threshold(&self, trace: &str) -> f64 {
        self.thresholds[trace]
    }

    /// Validate a parameter map against the hypothesis: one entry per trace,
    /// fractions over exactly the included contributors.
    pub fn check_params(&self, params: &BTreeMap<String, ModelParams>) -> Result<()> {
        for trace in &self.trace_ids {
            let p = params
                .get(trace)
                .ok_or_else(|| Error::domain(format!("no model parameters for trace '{trace}'")))?;
            p.validate()?;
            let included = self.hypothesis.included_ids(trace);
            for id in p.phi.keys() {
                if !included.iter().any(|c| c == id) {
                    return Err(Error::domain(format!(
                        "trace {trace}: fraction given for '{id}' which does not contribute"
                    )));
                }
            }
            for id in &included {
                if !p.phi.contains_key(id) {
                    return Err(Error::domain(format!(
                        "trace {trace}: no fraction for contributor '{id}'"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Bind parameters to every marker.
    pub fn bind(&mut self, params: &BTreeMap<String, ModelParams>) -> Result<()> {
        self.check_params(params)?;
        for marker in &mut self.markers {
            marker.bind(params)?;
        }
        Ok(())
    }

    /// Case log-likelihood (natural log): the sum over markers, evaluated in
    /// parallel but reduced in fixed marker order.
    pub fn total_log_likelihood(&mut self, params: &BTreeMap<String, ModelParams>) -> Result<f64> {
        self.bind(params)?;
        let per_marker: Vec<Result<f64>> = self
            .markers
            .par_iter_mut()
            .map(|m| m.log_likelihood())
            .collect();
        let mut total = 0.0;
        for r in per_marker {
            total += r?;
        }
        Ok(total)
    }

    /// Per-marker natural-log likelihoods.
    pub fn marker_log_likelihoods(
        &mut self,
        params: &BTreeMap<String, ModelParams>,
    ) -> Result<Vec<(String, f64)>> {
        self.bind(params)?;
        self.markers
            .iter_mut()
            .map(|m| Ok((m.ladder.marker.clone(), m.log_likelihood()?)))
            .collect()
    }

    /// Case log-likelihood using only presence/absence of peaks.
    pub fn presence_total_log_likelihood(
        &mut self,
        params: &BTreeMap<String, ModelParams>,
    ) -> Result<f64> {
        self.bind(params)?;
        let per_marker: Vec<Result<f64>> = self
            .markers
            .par_iter_mut()
            .map(|m| m.presence_log_likelihood())
            .collect();
        let mut total = 0.0;
        for r in per_marker {
            total += r?;
        }
        Ok(total)
    }
}
