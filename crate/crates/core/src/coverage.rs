//! SIR coverage of the typical receiver under Rayleigh fading and rate
//! coverage mixed over the serving-cell load law.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::load::{LoadError, LoadModel, Pmf};
use crate::numerics::{integrate, Domain, QuadratureConfig, QuadratureError};
use crate::processes::NetworkParams;

/// Tail mass above which a rate-coverage result carries a warning.
pub const TAIL_WARNING: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum CoverageError {
    #[error("invalid rate query: {0}")]
    Query(String),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Load(#[from] LoadError),
}

/// Rate threshold `T` (bits/s), bandwidth `B` (Hz), path-loss exponent and
/// the load truncation order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateQuery {
    pub rate_threshold_t: f64,
    pub bandwidth_b: f64,
    pub pathloss_alpha: f64,
    pub m_max: usize,
}

impl RateQuery {
    pub fn new(rate_threshold_t: f64, params: &NetworkParams, m_max: usize) -> Self {
        Self {
            rate_threshold_t,
            bandwidth_b: params.bandwidth,
            pathloss_alpha: params.alpha,
            m_max,
        }
    }

    pub fn validate(&self) -> Result<(), CoverageError> {
        if !(self.rate_threshold_t >= 0.0) || !self.rate_threshold_t.is_finite() {
            return Err(CoverageError::Query(format!("T must be >= 0, got {}", self.rate_threshold_t)));
        }
        if !(self.bandwidth_b > 0.0) || !self.bandwidth_b.is_finite() {
            return Err(CoverageError::Query(format!("B must be > 0, got {}", self.bandwidth_b)));
        }
        if !(self.pathloss_alpha > 2.0) {
            return Err(CoverageError::Query(format!("alpha must be > 2, got {}", self.pathloss_alpha)));
        }
        if self.m_max < 1 {
            return Err(CoverageError::Query("m_max must be >= 1".into()));
        }
        Ok(())
    }

    /// `2^{T m / B} - 1`, infinite once it overflows.
    pub fn sir_threshold(&self, m: usize) -> f64 {
        (self.rate_threshold_t * m as f64 / self.bandwidth_b * LN_2).exp_m1()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateCoverage {
    pub value: f64,
    /// Load mass beyond `m_max`; the true value lies in `[value, value + tail_mass]`.
    pub tail_mass: f64,
    pub warning: Option<String>,
}

/// `2 int_1^inf beta t / (beta + t^alpha) dt`, the interference term after
/// `y = r t`.
fn interference_factor(alpha: f64, beta: f64, cfg: &QuadratureConfig) -> Result<f64, QuadratureError> {
    let r = integrate(
        |t| beta * t / (beta + t.powf(alpha)),
        Domain::SemiInfinite(1.0),
        cfg,
    )?;
    Ok(2.0 * r.value)
}

/// `P(SIR > beta)` for the nearest-station receiver in an
/// interference-limited PPP network with Rayleigh fading.
pub fn coverage_probability(
    lambda_b: f64,
    alpha: f64,
    beta: f64,
    cfg: &QuadratureConfig,
) -> Result<f64, QuadratureError> {
    if beta == 0.0 {
        return Ok(1.0);
    }
    if beta.is_infinite() {
        return Ok(0.0);
    }
    let rho = interference_factor(alpha, beta, cfg)?;
    let outer = integrate(
        |r| {
            let area = lambda_b * PI * r * r;
            2.0 * PI * lambda_b * r * (-area * (1.0 + rho)).exp()
        },
        Domain::SemiInfinite(0.0),
        &cfg.with_tail_scale(1.0 / lambda_b.sqrt()),
    )?;
    Ok(outer.value)
}

/// `sum_{m >= 1} P(M = m) P(SIR > 2^{T m / B} - 1)` for a given load law.
pub fn rate_coverage_with_pmf(
    pmf: &Pmf,
    lambda_b: f64,
    query: &RateQuery,
    cfg: &QuadratureConfig,
) -> Result<RateCoverage, CoverageError> {
    query.validate()?;
    let mut value = 0.0;
    for (m, &p) in pmf.probs.iter().enumerate().skip(1) {
        if p == 0.0 {
            continue;
        }
        value += p * coverage_probability(lambda_b, query.pathloss_alpha, query.sir_threshold(m), cfg)?;
    }
    let tail_mass = pmf.tail_mass.max(0.0);
    let warning = (tail_mass > TAIL_WARNING).then(|| {
        format!("load tail mass {tail_mass:.3e} beyond m_max = {} exceeds {TAIL_WARNING:e}", pmf.m_max())
    });
    if let Some(w) = &warning {
        log::warn!("{w}");
    }
    Ok(RateCoverage {
        value: value.clamp(0.0, 1.0),
        tail_mass,
        warning,
    })
}

pub fn rate_coverage(params: &NetworkParams, query: &RateQuery) -> Result<RateCoverage, CoverageError> {
    query.validate()?;
    let model = LoadModel::standard(*params)?;
    let pmf = model.pmf_tagged(query.m_max)?;
    rate_coverage_with_pmf(&pmf, params.lambda_b, query, &model.cfg)
}
