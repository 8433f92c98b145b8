//! Maximum likelihood estimation by derivative-free simplex search.
//!
//! The likelihood is maximized in unconstrained coordinates: log for the
//! amplification and scale parameters, logit for the stutter proportion, and
//! additive log-ratio for the mixture fractions of each trace. Label symmetry
//! between unknown contributors is broken by penalizing increasing fraction
//! sequences. The search runs Nelder-Mead from a data-driven start plus a
//! fixed number of seeded random restarts and polishes the best point.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::infer::{CaseData, CaseModel, Hypothesis, SlotLayout};
use crate::marker::TreeMethod;
use crate::peak::ModelParams;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct OptimizerConfig {
    /// Random restarts in addition to the data-driven start.
    pub restarts: usize,
    /// Iteration cap per simplex run.
    pub max_iter: usize,
    /// Convergence: spread of log-likelihood values across the simplex.
    pub tolerance: f64,
    pub seed: u64,
    /// Standard deviation of restart perturbations (transformed scale).
    pub perturbation: f64,
    /// Initial simplex step (transformed scale).
    pub initial_step: f64,
    /// Compute standard errors from a central-difference Hessian.
    pub compute_se: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            restarts: 5,
            max_iter: 2000,
            tolerance: 1e-8,
            seed: 0,
            perturbation: 0.6,
            initial_step: 0.4,
            compute_se: false,
        }
    }
}

/// One estimated parameter with its delta-method standard error.
#[derive(Clone, Debug, Serialize)]
pub struct StandardError {
    pub trace: String,
    pub parameter: String,
    pub estimate: f64,
    pub se: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FitResult {
    pub hypothesis: String,
    pub params: BTreeMap<String, ModelParams>,
    pub log10_likelihood: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub restarts: usize,
    pub final_spread: f64,
    pub converged: bool,
    /// Any transformed coordinate ran to the edge of the search range.
    pub boundary: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub standard_errors: Option<Vec<StandardError>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct LrResult {
    pub log10_lr: f64,
    pub numerator: FitResult,
    pub denominator: FitResult,
}

/// Layout of the packed parameter vector.
struct ParamSpace {
    traces: Vec<TraceLayout>,
}

struct TraceLayout {
    id: String,
    /// Included contributors in roster order, with unknown flags.
    contributors: Vec<(String, bool)>,
    threshold: f64,
}

impl ParamSpace {
    fn for_model(model: &CaseModel) -> Self {
        let traces = model
            .trace_ids
            .iter()
            .map(|id| {
                let unknowns: std::collections::BTreeSet<&str> =
                    model.hypothesis.unknown_tags().into_iter().collect();
                let contributors = model
                    .hypothesis
                    .included_ids(id)
                    .into_iter()
                    .map(|c| {
                        let unknown = unknowns.contains(c.as_str());
                        (c, unknown)
                    })
                    .collect();
                TraceLayout {
                    id: id.clone(),
                    contributors,
                    threshold: model.threshold(id),
                }
            })
            .collect();
        ParamSpace { traces }
    }

    fn dim(&self) -> usize {
        self.traces
            .iter()
            .map(|t| 3 + t.contributors.len().saturating_sub(1))
            .sum()
    }

    fn unpack(&self, x: &[f64]) -> BTreeMap<String, ModelParams> {
        let mut out = BTreeMap::new();
        let mut offset = 0;
        for trace in &self.traces {
            let m = trace.contributors.len();
            let rho = x[offset].clamp(-40.0, 40.0).exp();
            let xi = logistic(x[offset + 1]);
            let eta = x[offset + 2].clamp(-40.0, 40.0).exp();
            let raw = &x[offset + 3..offset + 3 + (m - 1)];
            let phi_values = inverse_alr(raw);
            let phi: BTreeMap<String, f64> = trace
                .contributors
                .iter()
                .zip(&phi_values)
                .map(|((id, _), &f)| (id.clone(), f))
                .collect();
            out.insert(
                trace.id.clone(),
                ModelParams {
                    rho,
                    xi,
                    eta,
                    phi,
                    threshold: trace.threshold,
                },
            );
            offset += 3 + (m - 1);
        }
        out
    }

    fn pack(&self, params: &BTreeMap<String, ModelParams>) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.dim());
        for trace in &self.traces {
            let p = &params[&trace.id];
            x.push(p.rho.ln());
            x.push(logit(p.xi.clamp(1e-6, 1.0 - 1e-6)));
            x.push(p.eta.ln());
            let m = trace.contributors.len();
            let last = p.phi[&trace.contributors[m - 1].0].max(1e-12);
            for (id, _) in &trace.contributors[..m - 1] {
                x.push((p.phi[id].max(1e-12) / last).ln());
            }
        }
        x
    }

    /// Penalty breaking unknown-label symmetry: fractions of unknown
    /// contributors must be non-increasing in roster order.
    fn symmetry_penalty(&self, params: &BTreeMap<String, ModelParams>) -> f64 {
        let mut penalty = 0.0;
        for trace in &self.traces {
            let p = &params[&trace.id];
            let unknown_fractions: Vec<f64> = trace
                .contributors
                .iter()
                .filter(|(_, unknown)| *unknown)
                .map(|(id, _)| p.phi[id])
                .collect();
            for w in unknown_fractions.windows(2) {
                let excess = (w[1] - w[0]).max(0.0);
                penalty += 1e4 * excess * excess;
            }
        }
        penalty
    }
}

fn logistic(x: f64) -> f64 {
    let v = 1.0 / (1.0 + (-x.clamp(-40.0, 40.0)).exp());
    v.min(1.0 - 1e-12)
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Map additive log-ratios to the simplex (last coordinate is the
/// reference).
fn inverse_alr(raw: &[f64]) -> Vec<f64> {
    let max = raw.iter().cloned().fold(0.0f64, f64::max);
    let mut values: Vec<f64> = raw.iter().map(|&y| ((y - max).clamp(-600.0, 0.0)).exp()).collect();
    values.push((-max).clamp(-600.0, 0.0).exp());
    let total: f64 = values.iter().sum();
    values.iter_mut().for_each(|v| *v /= total);
    values
}

struct SimplexOutcome {
    x: Vec<f64>,
    value: f64,
    iterations: usize,
    evaluations: usize,
    spread: f64,
    converged: bool,
}

/// Standard Nelder-Mead minimization.
fn nelder_mead(
    f: &mut impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    step: f64,
    tolerance: f64,
    max_iter: usize,
) -> SimplexOutcome {
    let dim = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| -> f64 {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    let v0 = eval(x0, &mut evals);
    simplex.push((x0.to_vec(), v0));
    for i in 0..dim {
        let mut xi = x0.to_vec();
        xi[i] += step;
        let vi = eval(&xi, &mut evals);
        simplex.push((xi, vi));
    }
    let mut iterations = 0usize;
    let mut spread = f64::INFINITY;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
        let best = simplex[0].1;
        let worst = simplex[dim].1;
        spread = if best.is_finite() && worst.is_finite() {
            worst - best
        } else {
            f64::INFINITY
        };
        if spread < tolerance {
            converged = true;
            break;
        }
        // Centroid of all but the worst point.
        let mut centroid = vec![0.0; dim];
        for (x, _) in &simplex[..dim] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / dim as f64;
            }
        }
        let worst_x = simplex[dim].0.clone();
        let reflect: Vec<f64> = centroid
            .iter()
            .zip(&worst_x)
            .map(|(c, w)| c + (c - w))
            .collect();
        let v_reflect = eval(&reflect, &mut evals);
        if v_reflect < simplex[0].1 {
            let expand: Vec<f64> = centroid
                .iter()
                .zip(&worst_x)
                .map(|(c, w)| c + 2.0 * (c - w))
                .collect();
            let v_expand = eval(&expand, &mut evals);
            simplex[dim] = if v_expand < v_reflect {
                (expand, v_expand)
            } else {
                (reflect, v_reflect)
            };
        } else if v_reflect < simplex[dim - 1].1 {
            simplex[dim] = (reflect, v_reflect);
        } else {
            let contract: Vec<f64> = if v_reflect < simplex[dim].1 {
                centroid
                    .iter()
                    .zip(&reflect)
                    .map(|(c, r)| c + 0.5 * (r - c))
                    .collect()
            } else {
                centroid
                    .iter()
                    .zip(&worst_x)
                    .map(|(c, w)| c + 0.5 * (w - c))
                    .collect()
            };
            let v_contract = eval(&contract, &mut evals);
            if v_contract < simplex[dim].1.min(v_reflect) {
                simplex[dim] = (contract, v_contract);
            } else {
                // Shrink toward the best point.
                let best_x = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let shrunk: Vec<f64> = best_x
                        .iter()
                        .zip(&entry.0)
                        .map(|(b, x)| b + 0.5 * (x - b))
                        .collect();
                    let v = eval(&shrunk, &mut evals);
                    *entry = (shrunk, v);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
    SimplexOutcome {
        x: simplex[0].0.clone(),
        value: simplex[0].1,
        iterations,
        evaluations: evals,
        spread,
        converged,
    }
}

/// Data-driven starting parameters: uniform fractions, moderate stutter, and
/// a scale matched to the mean observed peak height.
fn initial_params(model: &CaseModel, space: &ParamSpace) -> BTreeMap<String, ModelParams> {
    let mut out = BTreeMap::new();
    for (t_idx, trace) in space.traces.iter().enumerate() {
        let mut total = 0.0;
        let mut count = 0usize;
        for marker in &model.markers {
            for a in 0..marker.ladder.len() {
                let z = marker.height(t_idx, a);
                if z > 0.0 {
                    total += z;
                    count += 1;
                }
            }
        }
        let mean_height = if count > 0 { total / count as f64 } else { 200.0 };
        let m = trace.contributors.len() as f64;
        let rho = 10.0;
        let eta = (mean_height * m / rho / 1.3).max(1.0);
        let phi: BTreeMap<String, f64> = trace
            .contributors
            .iter()
            .map(|(id, _)| (id.clone(), 1.0 / m))
            .collect();
        out.insert(
            trace.id.clone(),
            ModelParams {
                rho,
                xi: 0.05,
                eta,
                phi,
                threshold: trace.threshold,
            },
        );
    }
    out
}

/// Maximize the case log-likelihood over the model parameters.
pub fn maximize_likelihood(model: &mut CaseModel, config: &OptimizerConfig) -> Result<FitResult> {
    let space = ParamSpace::for_model(model);
    let x0 = space.pack(&initial_params(model, &space));
    let mut objective = |x: &[f64]| -> f64 {
        let params = space.unpack(x);
        match model.total_log_likelihood(&params) {
            Ok(ln_l) => -ln_l + space.symmetry_penalty(&params),
            Err(_) => f64::INFINITY,
        }
    };
    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
    let noise = Normal::new(0.0, config.perturbation)
        .map_err(|e| Error::Numeric(format!("invalid perturbation: {e}")))?;
    let mut starts = vec![x0.clone()];
    for _ in 0..config.restarts {
        starts.push(
            x0.iter()
                .map(|&v| v + noise.sample(&mut rng))
                .collect::<Vec<f64>>(),
        );
    }
    let mut best: Option<SimplexOutcome> = None;
    let mut total_iterations = 0usize;
    let mut total_evaluations = 0usize;
    for start in &starts {
        let outcome = nelder_mead(
            &mut objective,
            start,
            config.initial_step,
            config.tolerance,
            config.max_iter,
        );
        total_iterations += outcome.iterations;
        total_evaluations += outcome.evaluations;
        if best.as_ref().is_none_or(|b| outcome.value < b.value) {
            best = Some(outcome);
        }
    }
    let best = best.expect("at least one start");
    // Polish from the best point with a tighter simplex.
    let polish = nelder_mead(
        &mut objective,
        &best.x,
        config.initial_step * 0.1,
        config.tolerance,
        config.max_iter,
    );
    total_iterations += polish.iterations;
    total_evaluations += polish.evaluations;
    let winner = if polish.value <= best.value { polish } else { best };
    let params = space.unpack(&winner.x);
    // A case without a single observed peak is maximized on the boundary
    // (vanishing amplification); the surface is flat there, so detect it
    // structurally rather than from the coordinates.
    let has_peaks = model.markers.iter().any(|m| {
        (0..m.trace_count()).any(|t| (0..m.ladder.len()).any(|a| m.is_observed(t, a)))
    });
    let boundary =
        winner.x.iter().any(|&v| v.abs() > 25.0) || !winner.value.is_finite() || !has_peaks;
    let log10_likelihood = -winner.value / std::f64::consts::LN_10;
    let standard_errors = if config.compute_se && winner.value.is_finite() {
        standard_errors(model, &space, &winner.x)
    } else {
        None
    };
    Ok(FitResult {
        hypothesis: model.hypothesis.name.clone(),
        params,
        log10_likelihood,
        iterations: total_iterations,
        evaluations: total_evaluations,
        restarts: config.restarts,
        final_spread: winner.spread,
        converged: winner.converged,
        boundary,
        standard_errors,
    })
}

/// Likelihood ratio between two hypotheses, each fitted by maximum
/// likelihood on its own model.
pub fn likelihood_ratio(
    case: &CaseData,
    numerator: &Hypothesis,
    denominator: &Hypothesis,
    method: TreeMethod,
    config: &OptimizerConfig,
) -> Result<LrResult> {
    let mut model_num = CaseModel::build(case, numerator, method, SlotLayout::Likelihood)?;
    let fit_num = maximize_likelihood(&mut model_num, config)?;
    let mut model_den = CaseModel::build(case, denominator, method, SlotLayout::Likelihood)?;
    let fit_den = maximize_likelihood(&mut model_den, config)?;
    Ok(LrResult {
        log10_lr: fit_num.log10_likelihood - fit_den.log10_likelihood,
        numerator: fit_num,
        denominator: fit_den,
    })
}

/// Delta-method standard errors from a central-difference Hessian of the
/// log-likelihood in transformed coordinates. Returns `None` when the
/// observed information is singular.
fn standard_errors(
    model: &mut CaseModel,
    space: &ParamSpace,
    x: &[f64],
) -> Option<Vec<StandardError>> {
    let dim = x.len();
    let h = 1e-4;
    let mut ln_l = |x: &[f64]| -> f64 {
        let params = space.unpack(x);
        model.total_log_likelihood(&params).unwrap_or(f64::NEG_INFINITY)
    };
    // Observed information: negative Hessian of the log-likelihood.
    let mut info = vec![vec![0.0; dim]; dim];
    let base = ln_l(x);
    if !base.is_finite() {
        return None;
    }
    for i in 0..dim {
        for j in i..dim {
            let mut xm = x.to_vec();
            let v = if i == j {
                xm[i] = x[i] + h;
                let fp = ln_l(&xm);
                xm[i] = x[i] - h;
                let fm = ln_l(&xm);
                (fp - 2.0 * base + fm) / (h * h)
            } else {
                xm[i] = x[i] + h;
                xm[j] = x[j] + h;
                let fpp = ln_l(&xm);
                xm[j] = x[j] - h;
                let fpm = ln_l(&xm);
                xm[i] = x[i] - h;
                xm[j] = x[j] + h;
                let fmp = ln_l(&xm);
                xm[j] = x[j] - h;
                let fmm = ln_l(&xm);
                (fpp - fpm - fmp + fmm) / (4.0 * h * h)
            };
            if !v.is_finite() {
                return None;
            }
            info[i][j] = -v;
            info[j][i] = -v;
        }
    }
    let cov = invert(&info)?;
    // Natural parameters and their numerical Jacobian rows.
    let natural = |x: &[f64]| -> Vec<(String, String, f64)> {
        let params = space.unpack(x);
        let mut list = Vec::new();
        for trace in &space.traces {
            let p = &params[&trace.id];
            list.push((trace.id.clone(), "rho".to_string(), p.rho));
            list.push((trace.id.clone(), "xi".to_string(), p.xi));
            list.push((trace.id.clone(), "eta".to_string(), p.eta));
            for (id, _) in &trace.contributors {
                list.push((trace.id.clone(), format!("phi[{id}]"), p.phi[id]));
            }
        }
        list
    };
    let values = natural(x);
    let mut jac = vec![vec![0.0; dim]; values.len()];
    for i in 0..dim {
        let mut xp = x.to_vec();
        xp[i] += h;
        let vp = natural(&xp);
        let mut xmv = x.to_vec();
        xmv[i] -= h;
        let vm = natural(&xmv);
        for (r, row) in jac.iter_mut().enumerate() {
            row[i] = (vp[r].2 - vm[r].2) / (2.0 * h);
        }
    }
    let mut out = Vec::with_capacity(values.len());
    for (r, (trace, name, estimate)) in values.into_iter().enumerate() {
        let mut var = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                var += jac[r][i] * cov[i][j] * jac[r][j];
            }
        }
        out.push(StandardError {
            trace,
            parameter: name,
            estimate,
            se: if var > 0.0 { var.sqrt() } else { f64::NAN },
        });
    }
    Some(out)
}

/// Gauss-Jordan inverse with partial pivoting; `None` when singular.
#[allow(clippy::needless_range_loop)]
fn invert(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            m[i][col]
                .abs()
                .partial_cmp(&m[j][col].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if m[pivot][col].abs() < 1e-12 {
            return None;
        }
        m.swap(col, pivot);
        let p = m[col][col];
        for v in m[col].iter_mut() {
            *v /= p;
        }
        for row in 0..n {
            if row != col {
                let factor = m[row][col];
                if factor != 0.0 {
                    let src = m[col].clone();
                    for (v, s) in m[row].iter_mut().zip(&src) {
                        *v -= factor * s;
                    }
                }
            }
        }
    }
    Some(m.into_iter().map(|row| row[n..].to_vec()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alr_roundtrip() {
        let phi = inverse_alr(&[0.7, -0.3]);
        assert_eq!(phi.len(), 3);
        assert!((phi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(phi.iter().all(|&p| p > 0.0));
        // Recover the ratios.
        assert!(((phi[0] / phi[2]).ln() - 0.7).abs() < 1e-12);
        assert!(((phi[1] / phi[2]).ln() + 0.3).abs() < 1e-12);
    }

    #[test]
    fn nelder_mead_minimizes_quadratic() {
        let mut f = |x: &[f64]| (x[0] - 1.5).powi(2) + 3.0 * (x[1] + 0.5).powi(2);
        let outcome = nelder_mead(&mut f, &[0.0, 0.0], 0.5, 1e-12, 1000);
        assert!(outcome.converged);
        assert!((outcome.x[0] - 1.5).abs() < 1e-5);
        assert!((outcome.x[1] + 0.5).abs() < 1e-5);
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn invert_matches_identity() {
        let a = vec![vec![4.0, 1.0], vec![1.0, 3.0]];
        let inv = invert(&a).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let mut sum = 0.0;
                for k in 0..2 {
                    sum += a[i][k] * inv[k][j];
                }
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((sum - expected).abs() < 1e-12);
            }
        }
        assert!(invert(&[vec![1.0, 2.0], vec![2.0, 4.0]]).is_none());
    }
}
