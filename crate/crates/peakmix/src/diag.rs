//! Model-adequacy diagnostics.
//!
//! Three tools assess how well fitted parameters describe a trace: the
//! probability transform of each observed peak height under its conditional
//! distribution (uniform when the model is adequate, shown as a QQ plot),
//! predictive intervals per allele obtained by numerically inverting the
//! conditional distribution function, and a prequential monitor that scores
//! the predicted presence or absence of each peak sequentially with
//! martingale-based calibration limits.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::infer::{CaseModel, MarkerModel};
use crate::peak::ModelParams;

/// Which peaks the conditional distribution of an allele conditions on,
/// within the diagnosed trace. Evidence from other traces is always
/// included, since it informs the shared genotypes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ConditioningMode {
    /// No conditioning inside the diagnosed trace.
    Marginal,
    /// All other alleles of the diagnosed trace.
    AllOthers,
    /// Only alleles strictly before the one under evaluation.
    Preceding,
}

impl ConditioningMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "marginal" => Ok(ConditioningMode::Marginal),
            "all-others" => Ok(ConditioningMode::AllOthers),
            "preceding" => Ok(ConditioningMode::Preceding),
            other => Err(Error::domain(format!(
                "unknown conditioning mode '{other}'"
            ))),
        }
    }

    fn selects(&self, diagnosed: usize, allele: usize, trace: usize, b: usize) -> bool {
        if trace != diagnosed {
            return true;
        }
        match self {
            ConditioningMode::Marginal => false,
            ConditioningMode::AllOthers => b != allele,
            ConditioningMode::Preceding => b < allele,
        }
    }
}

/// One probability transform for a QQ plot.
#[derive(Clone, Debug, Serialize)]
pub struct QqPoint {
    pub marker: String,
    pub trace: String,
    pub allele_label: f64,
    pub height: f64,
    /// P(Z <= z | Z >= C, conditioning); uniform under the model.
    pub transform: f64,
    /// Plotting position (i - 0.5) / n after sorting by transform.
    pub position: f64,
}

/// Predictive summary for one allele.
#[derive(Clone, Debug, Serialize)]
pub struct PredictionRow {
    pub marker: String,
    pub trace: String,
    pub allele_label: f64,
    pub observed: f64,
    /// P(peak above threshold | all other peaks of the trace).
    pub presence_probability: f64,
    /// (level, height) pairs of the conditional distribution given presence;
    /// absent when the peak cannot occur.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quantiles: Option<Vec<(f64, f64)>>,
}

/// One step of the prequential presence monitor.
#[derive(Clone, Debug, Serialize)]
pub struct MonitorRow {
    pub step: usize,
    pub marker: String,
    pub allele_label: f64,
    pub observed: bool,
    /// Predicted presence probability given all preceding peaks.
    pub presence_probability: f64,
    /// Logarithmic score of the realized outcome.
    pub score: f64,
    pub expected: f64,
    pub variance: f64,
    /// Cumulative score adjusted for incremental expectations.
    pub cumulative: f64,
    /// Cumulative adjusted score divided by the root cumulative variance.
    pub normalized: f64,
    pub limit_95: f64,
    pub limit_99: f64,
}

const Q95: f64 = 1.6448536269514722;
const Q99: f64 = 2.3263478740408408;

/// Evaluate `P(Z_a <= z | Z_a >= C, conditioning)` for one allele of the
/// diagnosed trace by binding a query variable at `z` and reading posterior
/// slot marginals.
pub fn conditional_peak_cdf(
    model: &mut MarkerModel,
    params: &ModelParams,
    trace: usize,
    allele: usize,
    z: f64,
    mode: ConditioningMode,
) -> Result<f64> {
    let threshold = model.threshold(trace);
    if z < threshold {
        return Err(Error::domain(format!(
            "query height {z} lies below the detection threshold {threshold}"
        )));
    }
    model.bind_query(trace, allele, z, params)?;
    model
        .condition_on_observations(|t, b| mode.selects(trace, allele, t, b))?
        .ok_or_else(|| Error::Numeric("conditioning event has zero probability".into()))?;
    let cdf_at_z = model.query_probability(trace, allele)?;
    let presence = model.presence_probability(trace, allele)?;
    if presence <= 0.0 {
        return Err(Error::Numeric(
            "conditional presence probability is zero".into(),
        ));
    }
    Ok(((cdf_at_z - (1.0 - presence)) / presence).clamp(0.0, 1.0))
}

/// Probability transforms of every observed peak of one trace, sorted with
/// plotting positions attached.
pub fn qq_points(
    model: &mut CaseModel,
    params: &std::collections::BTreeMap<String, ModelParams>,
    trace_id: &str,
    mode: ConditioningMode,
) -> Result<Vec<QqPoint>> {
    model.bind(params)?;
    let trace = model
        .trace_ids
        .iter()
        .position(|t| t == trace_id)
        .ok_or_else(|| Error::domain(format!("unknown trace '{trace_id}'")))?;
    let p = &params[trace_id];
    let mut points = Vec::new();
    for marker in &mut model.markers {
        let observed: Vec<usize> = (0..marker.ladder.len())
            .filter(|&a| marker.is_observed(trace, a))
            .collect();
        if observed.is_empty() {
            continue;
        }
        for &a in &observed {
            let z = marker.height(trace, a);
            marker.bind_query(trace, a, z, p)?;
        }
        match mode {
            ConditioningMode::AllOthers => {
                // Enter all evidence once, then answer each allele by
                // retracting its own observation.
                marker
                    .condition_on_observations(|_, _| true)?
                    .ok_or_else(|| {
                        Error::Numeric("conditioning event has zero probability".into())
                    })?;
                for &a in &observed {
                    marker.retract_observation(trace, a)?;
                    marker.propagate()?.ok_or_else(|| {
                        Error::Numeric("conditioning event has zero probability".into())
                    })?;
                    let cdf_at_z = marker.query_probability(trace, a)?;
                    let presence = marker.presence_probability(trace, a)?;
                    if presence <= 0.0 {
                        return Err(Error::Numeric(
                            "conditional presence probability is zero".into(),
                        ));
                    }
                    points.push(QqPoint {
                        marker: marker.ladder.marker.clone(),
                        trace: trace_id.to_string(),
                        allele_label: marker.ladder.label(a),
                        height: marker.height(trace, a),
                        transform: ((cdf_at_z - (1.0 - presence)) / presence).clamp(0.0, 1.0),
                        position: 0.0,
                    });
                    marker.enter_observation_evidence(|t, b| t == trace && b == a)?;
                }
            }
            ConditioningMode::Marginal | ConditioningMode::Preceding => {
                for &a in &observed {
                    let u =
                        conditional_peak_cdf(marker, p, trace, a, marker.height(trace, a), mode)?;
                    points.push(QqPoint {
                        marker: marker.ladder.marker.clone(),
                        trace: trace_id.to_string(),
                        allele_label: marker.ladder.label(a),
                        height: marker.height(trace, a),
                        transform: u,
                        position: 0.0,
                    });
                }
            }
        }
    }
    points.sort_by(|a, b| {
        a.transform
            .partial_cmp(&b.transform)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let n = points.len() as f64;
    for (i, point) in points.iter_mut().enumerate() {
        point.position = (i as f64 + 0.5) / n;
    }
    Ok(points)
}

/// Per-allele presence probabilities and predictive quantiles given all
/// other peaks of the trace.
pub fn prediction_intervals(
    model: &mut CaseModel,
    params: &std::collections::BTreeMap<String, ModelParams>,
    trace_id: &str,
    levels: &[f64],
) -> Result<Vec<PredictionRow>> {
    for &level in levels {
        if !(0.0 < level && level < 1.0) {
            return Err(Error::domain(format!(
                "quantile level {level} outside (0, 1)"
            )));
        }
    }
    model.bind(params)?;
    let trace = model
        .trace_ids
        .iter()
        .position(|t| t == trace_id)
        .ok_or_else(|| Error::domain(format!("unknown trace '{trace_id}'")))?;
    let p = params[trace_id].clone();
    let mut rows = Vec::new();
    for marker in &mut model.markers {
        let threshold = marker.threshold(trace);
        for a in 0..marker.ladder.len() {
            marker
                .condition_on_observations(|t, b| {
                    ConditioningMode::AllOthers.selects(trace, a, t, b)
                })?
                .ok_or_else(|| {
                    Error::Numeric("conditioning event has zero probability".into())
                })?;
            let presence = marker.presence_probability(trace, a)?;
            let quantiles = if presence > 0.0 {
                let mut qs = Vec::with_capacity(levels.len());
                for &level in levels {
                    qs.push((
                        level,
                        invert_conditional_cdf(marker, &p, trace, a, level, threshold)?,
                    ));
                }
                Some(qs)
            } else {
                None
            };
            rows.push(PredictionRow {
                marker: marker.ladder.marker.clone(),
                trace: trace_id.to_string(),
                allele_label: marker.ladder.label(a),
                observed: marker.height(trace, a),
                presence_probability: presence,
                quantiles,
            });
        }
    }
    Ok(rows)
}

/// Bisection on the conditional CDF: bracket by doubling above the
/// threshold, then bisect until the probability error is below 1e-8.
fn invert_conditional_cdf(
    marker: &mut MarkerModel,
    params: &ModelParams,
    trace: usize,
    allele: usize,
    level: f64,
    threshold: f64,
) -> Result<f64> {
    let mode = ConditioningMode::AllOthers;
    let mut lo = threshold;
    let mut hi = (threshold * 2.0).max(2.0 * params.rho * params.eta);
    let mut guard = 0;
    while conditional_peak_cdf(marker, params, trace, allele, hi, mode)? < level {
        hi *= 2.0;
        guard += 1;
        if guard > 200 {
            return Err(Error::Numeric("quantile bracket expansion failed".into()));
        }
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        let u = conditional_peak_cdf(marker, params, trace, allele, mid, mode)?;
        if (u - level).abs() <= 1e-8 {
            return Ok(mid);
        }
        if u < level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Closed-form expectation of the logarithmic presence score.
pub fn score_expectation(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -p * p.ln() - (1.0 - p) * (1.0 - p).ln()
    }
}

/// Closed-form variance of the logarithmic presence score.
pub fn score_variance(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        let d = p.ln() - (1.0 - p).ln();
        p * (1.0 - p) * d * d
    }
}

/// Sequential presence monitor over (marker, allele) in case order. Each
/// step predicts presence of the next peak given all preceding peaks of the
/// diagnosed trace, scores the realized outcome logarithmically, and
/// accumulates the expectation-adjusted score with normal-approximation
/// limits.
pub fn prequential_monitor(
    model: &mut CaseModel,
    params: &std::collections::BTreeMap<String, ModelParams>,
    trace_id: &str,
) -> Result<Vec<MonitorRow>> {
    model.bind(params)?;
    let trace = model
        .trace_ids
        .iter()
        .position(|t| t == trace_id)
        .ok_or_else(|| Error::domain(format!("unknown trace '{trace_id}'")))?;
    let mut rows = Vec::new();
    let mut cumulative = 0.0;
    let mut cum_var = 0.0;
    let mut score_sum = 0.0;
    let mut expected_sum = 0.0;
    let mut step = 0usize;
    for marker in &mut model.markers {
        // Other traces' evidence informs the shared genotypes throughout.
        marker.reset()?;
        marker.enter_observation_evidence(|t, _| t != trace)?;
        for a in 0..marker.ladder.len() {
            marker.propagate()?.ok_or_else(|| {
                Error::Numeric("conditioning event has zero probability".into())
            })?;
            let p = marker.presence_probability(trace, a)?;
            let observed = marker.is_observed(trace, a);
            let degenerate = p <= 0.0 || p >= 1.0;
            let score = if degenerate {
                0.0
            } else if observed {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            };
            let expected = score_expectation(p);
            let variance = score_variance(p);
            cumulative += score - expected;
            cum_var += variance;
            score_sum += score;
            expected_sum += expected;
            let normalized = if cum_var > 0.0 {
                (score_sum - expected_sum) / cum_var.sqrt()
            } else {
                0.0
            };
            step += 1;
            rows.push(MonitorRow {
                step,
                marker: marker.ladder.marker.clone(),
                allele_label: marker.ladder.label(a),
                observed,
                presence_probability: p,
                score,
                expected,
                variance,
                cumulative,
                normalized,
                limit_95: Q95 * cum_var.sqrt(),
                limit_99: Q99 * cum_var.sqrt(),
            });
            marker.enter_observation_evidence(|t, b| t == trace && b == a)?;
        }
    }
    Ok(rows)
}
