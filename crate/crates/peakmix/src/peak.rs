//! Gamma peak-height observation model.
//!
//! Peak heights are gamma distributed with a shape that aggregates allele
//! counts across contributors, weighted by mixture fractions and adjusted
//! for stutter: counts of the allele itself contribute with weight `1 - xi`,
//! counts of the next allele with weight `xi`. Heights below the detection
//! threshold are censored to zero, so an unobserved allele contributes the
//! CDF at the threshold and an observed peak contributes the density at its
//! height. A zero shape is the degenerate distribution at zero.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gamma::{gamma_cdf, ln_gamma_pdf};

/// Peak-height model parameters for one trace.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelParams {
    /// Amplification level; scales all gamma shapes.
    pub rho: f64,
    /// Mean stutter proportion in `[0, 1)`.
    pub xi: f64,
    /// Gamma scale parameter (height units).
    pub eta: f64,
    /// Mixture fraction per contributor id; sums to one.
    pub phi: BTreeMap<String, f64>,
    /// Detection threshold in height units.
    pub threshold: f64,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if self.rho.is_nan() || self.rho <= 0.0 {
            return Err(Error::domain(format!("rho must be positive, got {}", self.rho)));
        }
        if self.eta.is_nan() || self.eta <= 0.0 {
            return Err(Error::domain(format!("eta must be positive, got {}", self.eta)));
        }
        if !(0.0..1.0).contains(&self.xi) {
            return Err(Error::domain(format!("xi must lie in [0, 1), got {}", self.xi)));
        }
        if self.threshold.is_nan() || self.threshold <= 0.0 {
            return Err(Error::domain(format!(
                "detection threshold must be positive, got {}",
                self.threshold
            )));
        }
        let mut sum = 0.0;
        for (id, &f) in &self.phi {
            if f.is_nan() || f < 0.0 {
                return Err(Error::domain(format!("fraction of {id} is negative")));
            }
            sum += f;
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::domain(format!(
                "mixture fractions sum to {sum}, expected 1"
            )));
        }
        Ok(())
    }

    pub fn fraction(&self, contributor: &str) -> f64 {
        self.phi.get(contributor).copied().unwrap_or(0.0)
    }
}

/// One observed allele position: height zero encodes "below threshold".
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PeakObservation {
    pub allele: usize,
    pub height: f64,
}

/// Gamma shape at one allele from per-contributor counts.
///
/// Each entry is `(count_at_allele, count_at_next_allele, fraction)`; the
/// count at the position past the ladder end is zero by convention.
pub fn shape(contributions: &[(f64, f64, f64)], rho: f64, xi: f64) -> f64 {
    let mut total = 0.0;
    for &(at, next, fraction) in contributions {
        total += ((1.0 - xi) * at + xi * next) * fraction;
    }
    rho * total
}

/// Log gamma density of an observed peak; `-inf` when the shape is zero.
pub fn ln_observed_density(z: f64, lambda: f64, eta: f64) -> f64 {
    if lambda == 0.0 {
        f64::NEG_INFINITY
    } else {
        ln_gamma_pdf(z, lambda, eta)
    }
}

/// Probability that the height falls below the threshold; one when the shape
/// is zero.
pub fn below_threshold_prob(lambda: f64, eta: f64, threshold: f64) -> f64 {
    if lambda == 0.0 {
        1.0
    } else {
        gamma_cdf(threshold, lambda, eta)
    }
}

/// The per-allele likelihood factor: density at `z` for observed peaks,
/// CDF at the threshold for unobserved ones. Heights strictly between zero
/// and the threshold are malformed.
pub fn peak_factor(z: f64, lambda: f64, eta: f64, threshold: f64) -> Result<f64> {
    if z > 0.0 && z < threshold {
        return Err(Error::domain(format!(
            "peak height {z} lies strictly between 0 and the threshold {threshold}"
        )));
    }
    if z == 0.0 {
        Ok(below_threshold_prob(lambda, eta, threshold))
    } else if lambda == 0.0 {
        Ok(0.0)
    } else {
        Ok(ln_observed_density(z, lambda, eta).exp())
    }
}

/// Observation tables for one allele's auxiliary variables, indexed by the
/// caller's parent-configuration order.
///
/// The below/above pairs are computed tail-consistently, so a vanishing tail
/// is carried exactly rather than as `1 - (1 - tiny)`.
#[derive(Clone, Debug)]
pub struct AuxCptBundle {
    pub observed: bool,
    pub height: f64,
    /// P(peak above threshold | config) for the observation variable. For an
    /// observed allele this is the scaled density `h / k`; the scaling
    /// constant is carried as `ln_scale = ln k` (zero for unobserved alleles,
    /// `-inf` when the density vanishes for every configuration).
    pub above: Vec<f64>,
    pub ln_scale: f64,
    /// P(height below threshold | config) = G(C).
    pub below: Vec<f64>,
    /// P(peak above threshold | config) = 1 - G(C) for the presence variable.
    pub presence: Vec<f64>,
    /// Per query height: P(height <= query | config).
    pub cdf_at: Vec<Vec<f64>>,
    pub query_heights: Vec<f64>,
}

/// Build the observation, presence and CDF tables for one allele given the
/// gamma shapes of all parent configurations.
///
/// The observation table uses the scaling constant `k = max_config h`, so all
/// entries lie in `[0, 1]`; the presence tables carry both gamma tails at the
/// threshold and the CDF tables evaluate `G` at each query height.
pub fn build_aux_cpts(
    lambdas: &[f64],
    height: f64,
    eta: f64,
    threshold: f64,
    query_heights: &[f64],
) -> Result<AuxCptBundle> {
    if height > 0.0 && height < threshold {
        return Err(Error::domain(format!(
            "peak height {height} lies strictly between 0 and the threshold {threshold}"
        )));
    }
    let observed = height > 0.0;
    let mut below = Vec::with_capacity(lambdas.len());
    let mut presence = Vec::with_capacity(lambdas.len());
    for &l in lambdas {
        let (b, a) = if l == 0.0 {
            (1.0, 0.0)
        } else {
            crate::gamma::gamma_tail_pair(threshold, l, eta)
        };
        below.push(b);
        presence.push(a);
    }
    let (above, ln_scale) = if observed {
        let ln_h: Vec<f64> = lambdas
            .iter()
            .map(|&l| ln_observed_density(height, l, eta))
            .collect();
        let ln_k = ln_h.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if ln_k == f64::NEG_INFINITY {
            (vec![0.0; lambdas.len()], f64::NEG_INFINITY)
        } else {
            (
                ln_h.iter().map(|&lh| (lh - ln_k).exp().min(1.0)).collect(),
                ln_k,
            )
        }
    } else {
        // The observation variable still means "peak above threshold".
        (presence.clone(), 0.0)
    };
    let cdf_at: Vec<Vec<f64>> = query_heights
        .iter()
        .map(|&q| {
            lambdas
                .iter()
                .map(|&l| {
                    if l == 0.0 {
                        1.0
                    } else {
                        gamma_cdf(q, l, eta)
                    }
                })
                .collect()
        })
        .collect();
    Ok(AuxCptBundle {
        observed,
        height,
        above,
        ln_scale,
        below,
        presence,
        cdf_at,
        query_heights: query_heights.to_vec(),
    })
}

/// Draw a censored peak height: `H ~ Gamma(lambda, eta)` truncated to zero
/// below the threshold; identically zero when the shape is zero.
pub fn sample_height(lambda: f64, eta: f64, threshold: f64, rng: &mut impl Rng) -> f64 {
    if lambda == 0.0 {
        return 0.0;
    }
    let h = Gamma::new(lambda, eta)
        .expect("valid gamma parameters")
        .sample(rng);
    if h >= threshold {
        h
    } else {
        0.0
    }
}

/// Draw a latent height conditioned on falling on the given side of the
/// threshold, by inverse-CDF sampling.
pub fn sample_height_conditional(
    lambda: f64,
    eta: f64,
    threshold: f64,
    above: bool,
    rng: &mut impl Rng,
) -> Result<f64> {
    if lambda == 0.0 {
        return if above {
            Err(Error::domain(
                "cannot condition on a peak from a zero-shape distribution",
            ))
        } else {
            Ok(0.0)
        };
    }
    let g_c = gamma_cdf(threshold, lambda, eta);
    let u: f64 = rng.random_range(0.0..1.0);
    let p = if above {
        g_c + u * (1.0 - g_c)
    } else {
        return Ok(0.0); // censored to zero anyway
    };
    crate::gamma::gamma_quantile(lambda, eta, p.min(1.0 - 1e-15))
        .map_err(|e| Error::Numeric(format!("truncated height sampling failed: {e}")))
}
