//! Laplace transforms of the total road length inside a cell and the load
//! PMFs derived from them.
//!
//! Every PMF is computed conditionally: given the mixing variable (cell
//! perimeter, equal-area disc radius, origin chord) the transform is
//! `exp(h(s))` with derivatives of `h` known in closed form up to a 1D
//! integral. The scaled derivative recurrence in
//! [`crate::numerics::exp_series_coefficients`] turns those into the
//! conditional PMF `(-lambda_v)^m / m! d^m/ds^m exp(h)` at `s = lambda_v`,
//! which is then mixed over the density of the conditioning variable.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

use crate::laws::CellLaws;
use crate::numerics::{
    exp_series_coefficients, integrate, integrate_vec, try_integrate, try_integrate_vec, Domain,
    QuadratureConfig, QuadratureError,
};
use crate::processes::{NetworkParams, ParamError};

/// Default truncation order of the load PMFs.
pub const DEFAULT_M_MAX: usize = 96;

/// Entries more negative than this are reported as numerical failures.
pub const NEGATIVE_MASS_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error("quadrature failed: {0}")]
    Quadrature(#[from] QuadratureError),
    #[error("negative probability {value:e} at m = {m}")]
    NegativeMass { m: usize, value: f64 },
    #[error("m_max must be at least {min}, got {got}")]
    Order { min: usize, got: usize },
}

/// Truncated PMF `p_0..p_{m_max}` with the remaining mass kept explicitly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pmf {
    pub probs: Vec<f64>,
    pub tail_mass: f64,
}

impl Pmf {
    /// `tail_mass` is whatever `probs` leaves of unit mass.
    pub fn from_probs(probs: Vec<f64>) -> Self {
        let total: f64 = probs.iter().sum();
        Self {
            probs,
            tail_mass: 1.0 - total,
        }
    }

    /// Empirical law of integer samples; exact count ratios, no tail.
    pub fn from_counts(counts: &[u64]) -> Self {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Self {
                probs: vec![],
                tail_mass: 1.0,
            };
        }
        Self {
            probs: counts.iter().map(|&c| c as f64 / total as f64).collect(),
            tail_mass: 0.0,
        }
    }

    pub fn from_samples(samples: &[u64]) -> Self {
        let max = samples.iter().copied().max().unwrap_or(0) as usize;
        let mut counts = vec![0u64; max + 1];
        for &s in samples {
            counts[s as usize] += 1;
        }
        Self::from_counts(&counts)
    }

    pub fn m_max(&self) -> usize {
        self.probs.len().saturating_sub(1)
    }

    pub fn get(&self, m: usize) -> f64 {
        self.probs.get(m).copied().unwrap_or(0.0)
    }

    /// Mean over the represented support (the tail is not included).
    pub fn mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(m, p)| m as f64 * p).sum()
    }

    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.probs
            .iter()
            .enumerate()
            .map(|(m, p)| (m as f64 - mean).powi(2) * p)
            .sum()
    }

    pub fn pgf(&self, z: f64) -> f64 {
        self.probs.iter().rev().fold(0.0, |acc, p| acc * z + p)
    }

    /// Total variation distance. Mass beyond the shorter support is
    /// compared in aggregate against the other law's tail.
    pub fn total_variation(&self, other: &Pmf) -> f64 {
        let n = self.probs.len().min(other.probs.len());
        let mut d: f64 = (0..n).map(|m| (self.probs[m] - other.probs[m]).abs()).sum();
        let rest_self: f64 = self.probs[n..].iter().sum::<f64>() + self.tail_mass;
        let rest_other: f64 = other.probs[n..].iter().sum::<f64>() + other.tail_mass;
        d += (rest_self - rest_other).abs();
        0.5 * d
    }

    pub fn check(&self) -> Result<(), LoadError> {
        for (m, &p) in self.probs.iter().enumerate() {
            if !(-NEGATIVE_MASS_TOLERANCE..=1.0 + NEGATIVE_MASS_TOLERANCE).contains(&p) {
                return Err(LoadError::NegativeMass { m, value: p });
            }
        }
        if self.tail_mass < -NEGATIVE_MASS_TOLERANCE {
            return Err(LoadError::NegativeMass {
                m: self.probs.len(),
                value: self.tail_mass,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TypicalMethod {
    /// Perimeter mixing with i.i.d. chords.
    Exact,
    /// Equal-area disc.
    Disc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChordLawKind {
    TypicalExact,
    TypicalDisc,
    ZeroDisc,
}

/// Poisson probabilities `P(j; x)` for `j = 0..out.len()`.
pub fn poisson_pmf_into(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    if x <= 0.0 {
        out.iter_mut().for_each(|v| *v = 0.0);
        out[0] = 1.0;
        return;
    }
    if x < 500.0 {
        let mut p = (-x).exp();
        out[0] = p;
        for (j, v) in out.iter_mut().enumerate().skip(1) {
            p *= x / j as f64;
            *v = p;
        }
    } else {
        let lx = x.ln();
        for (j, v) in out.iter_mut().enumerate() {
            *v = (-x + j as f64 * lx - ln_gamma(j as f64 + 1.0)).exp();
        }
    }
}

/// Load laws at one parameter point.
#[derive(Debug, Clone)]
pub struct LoadModel {
    pub params: NetworkParams,
    pub laws: CellLaws,
    pub cfg: QuadratureConfig,
}

impl LoadModel {
    pub fn new(params: NetworkParams, laws: CellLaws, cfg: QuadratureConfig) -> Result<Self, LoadError> {
        params.validate()?;
        cfg.validate()?;
        Ok(Self { params, laws, cfg })
    }

    /// Uses the process-wide chord table and default tolerances.
    pub fn standard(params: NetworkParams) -> Result<Self, LoadError> {
        params.validate()?;
        Self::new(params, CellLaws::standard(params.lambda_b), QuadratureConfig::default())
    }

    fn length_cfg(&self) -> QuadratureConfig {
        self.cfg.with_tail_scale(self.params.length_scale())
    }

    /// `f_C` rescaled by the table's own mass so that `L_C(0) = 1`.
    fn chord_density(&self, c: f64) -> f64 {
        self.laws.chord_pdf(c) / self.laws.chord.table().total_mass()
    }

    /// `c f_C(c) / E[C]` with the mean taken from the same table.
    fn origin_density(&self, c: f64) -> f64 {
        c * self.laws.chord_pdf(c) / self.laws.chord.mean()
    }

    /// `f_{R_z}` divided by its mass under the area fit (`lambda_b E[Z]`,
    /// which the fitted constants put slightly above one).
    fn zero_radius_density(&self, r: f64) -> f64 {
        self.laws.radius_zero_pdf(r) / self.laws.shape.area.moment(1.0)
    }

    /// `int f(c) dc` over the chord support, one panel per table cell.
    fn chord_integral_vec<F>(&self, dim: usize, mut f: F, cfg: &QuadratureConfig) -> Result<Vec<f64>, QuadratureError>
    where
        F: FnMut(f64, &mut [f64]),
    {
        let mut total = vec![0.0; dim];
        for w in self.laws.chord.breakpoints().windows(2) {
            let r = integrate_vec(&mut f, dim, Domain::Finite(w[0], w[1]), cfg)?;
            total.iter_mut().zip(r.values).for_each(|(t, v)| *t += v);
        }
        Ok(total)
    }

    fn chord_integral<F: FnMut(f64) -> f64>(&self, mut f: F) -> Result<f64, QuadratureError> {
        Ok(self.chord_integral_vec(1, |c, out| out[0] = f(c), &self.cfg)?[0])
    }

    /// `L_C(s) = E[exp(-s C)]` for the chord of a line crossing the typical
    /// cell.
    pub fn laplace_chord(&self, s: f64) -> Result<f64, LoadError> {
        Ok(self.chord_integral(|c| (-s * c).exp() * self.chord_density(c))?)
    }

    /// `E[exp(-s C0)]` for the length-biased chord through a covered point.
    pub fn laplace_chord_origin(&self, s: f64) -> Result<f64, LoadError> {
        Ok(self.chord_integral(|c| (-s * c).exp() * self.origin_density(c))?)
    }

    /// `int Pois(j; x c) f_C(c) dc` for `j = 0..=m`: per-chord count law of
    /// users when each road carries a density-`x` 1D PPP.
    pub fn chord_count_law(&self, x: f64, m: usize) -> Result<Vec<f64>, LoadError> {
        Ok(self.chord_integral_vec(
            m + 1,
            |c, out| {
                poisson_pmf_into(x * c, out);
                let f = self.chord_density(c);
                out.iter_mut().for_each(|v| *v *= f);
            },
            &self.cfg,
        )?)
    }

    /// `int_0^{pi/2} Pois(j; 2 x r cos u) cos u du` for `j = 0..=m`, i.e. the
    /// disc kernel after `rho = r sin u`.
    fn disc_count_law(&self, x: f64, r: f64, m: usize) -> Result<Vec<f64>, QuadratureError> {
        let inner_cfg = QuadratureConfig {
            rel_tol: self.cfg.rel_tol * 0.1,
            abs_tol: self.cfg.abs_tol * 0.1,
            ..self.cfg
        };
        Ok(integrate_vec(
            |u, out| {
                let cu = u.cos();
                poisson_pmf_into(2.0 * x * r * cu, out);
                out.iter_mut().for_each(|v| *v *= cu);
            },
            m + 1,
            Domain::Finite(0.0, FRAC_PI_2),
            &inner_cfg,
        )?
        .values)
    }

    /// Exponent `h(s) = -2 pi lambda_l int_0^r (1 - exp(-2 s sqrt(r^2 - rho^2))) d rho`.
    fn disc_exponent(&self, s: f64, r: f64) -> Result<f64, QuadratureError> {
        let a0 = self.disc_count_law(s, r, 0)?[0];
        Ok(-2.0 * PI * self.params.lambda_l() * r * (1.0 - a0))
    }

    /// Conditional load PMF in a disc of radius `r`, optionally with an
    /// extra road segment of length `c0`, as scaled derivatives of
    /// `exp(h)` at `s = lambda_v`.
    fn disc_conditional(&self, r: f64, disc_law: &[f64], c0: f64) -> Vec<f64> {
        let weight = 2.0 * PI * self.params.lambda_l() * r;
        let mut log_p0 = -weight * (1.0 - disc_law[0]);
        let mut b: Vec<f64> = disc_law[1..].iter().map(|a| weight * a).collect();
        if c0 > 0.0 && !b.is_empty() {
            // -s c0 in h contributes -c0 to h' only
            let extra = self.params.lambda_v * c0;
            b[0] += extra;
            log_p0 -= extra;
        } else if c0 > 0.0 {
            log_p0 -= self.params.lambda_v * c0;
        }
        exp_series_coefficients(log_p0, &b)
    }

    pub fn laplace_w_typical_exact(&self, s: f64) -> Result<f64, LoadError> {
        let lc = self.laplace_chord(s)?;
        let lambda_l = self.params.lambda_l();
        let r = integrate(
            |u| (-lambda_l * u * (1.0 - lc)).exp() * self.laws.perimeter_pdf(u),
            Domain::SemiInfinite(0.0),
            &self.length_cfg(),
        )?;
        Ok(r.value)
    }

    pub fn laplace_w_typical_disc(&self, s: f64) -> Result<f64, LoadError> {
        let r = try_integrate(
            |r| Ok(self.disc_exponent(s, r)?.exp() * self.laws.radius_typical_pdf(r)),
            Domain::SemiInfinite(0.0),
            &self.length_cfg(),
        )?;
        Ok(r.value)
    }

    /// Transform of the road length in the zero cell excluding the road
    /// through the origin.
    pub fn laplace_c1(&self, s: f64) -> Result<f64, LoadError> {
        let r = try_integrate(
            |r| Ok(self.disc_exponent(s, r)?.exp() * self.zero_radius_density(r)),
            Domain::SemiInfinite(0.0),
            &self.length_cfg(),
        )?;
        Ok(r.value)
    }

    /// `L_W(s) = L_{C0}(s) L_{C1}(s)` for the zero cell.
    pub fn laplace_w_zero(&self, s: f64) -> Result<f64, LoadError> {
        Ok(self.laplace_chord_origin(s)? * self.laplace_c1(s)?)
    }

    pub fn laplace(&self, kind: ChordLawKind, s: f64) -> Result<f64, LoadError> {
        match kind {
            ChordLawKind::TypicalExact => self.laplace_w_typical_exact(s),
            ChordLawKind::TypicalDisc => self.laplace_w_typical_disc(s),
            ChordLawKind::ZeroDisc => self.laplace_w_zero(s),
        }
    }

    /// Probability generating function of the typical load,
    /// `L_W(lambda_v (1 - z))`.
    pub fn pgf_typical(&self, z: f64, method: TypicalMethod) -> Result<f64, LoadError> {
        let s = self.params.lambda_v * (1.0 - z);
        match method {
            TypicalMethod::Exact => self.laplace_w_typical_exact(s),
            TypicalMethod::Disc => self.laplace_w_typical_disc(s),
        }
    }

    /// Generating function of the tagged load, `z L_W(lambda_v (1 - z))`
    /// for the zero cell.
    pub fn pgf_tagged(&self, z: f64) -> Result<f64, LoadError> {
        Ok(z * self.laplace_w_zero(self.params.lambda_v * (1.0 - z))?)
    }

    /// Load PMF of the typical base station, `p_0..p_{m_max}`.
    pub fn pmf_typical(&self, m_max: usize, method: TypicalMethod) -> Result<Pmf, LoadError> {
        let lambda_v = self.params.lambda_v;
        let lambda_l = self.params.lambda_l();
        if lambda_v == 0.0 {
            return Ok(point_mass(0, m_max));
        }
        let values = match method {
            TypicalMethod::Exact => {
                // per-road count law is shared by every perimeter value
                let chord = self.chord_count_law(lambda_v, m_max)?;
                let miss = 1.0 - chord[0];
                integrate_vec(
                    |u, out| {
                        let f = self.laws.perimeter_pdf(u);
                        if f == 0.0 {
                            out.iter_mut().for_each(|v| *v = 0.0);
                            return;
                        }
                        let b: Vec<f64> = chord[1..].iter().map(|beta| lambda_l * u * beta).collect();
                        let cond = exp_series_coefficients(-lambda_l * u * miss, &b);
                        for (o, p) in out.iter_mut().zip(cond) {
                            *o = p * f;
                        }
                    },
                    m_max + 1,
                    Domain::SemiInfinite(0.0),
                    &self.length_cfg(),
                )?
                .values
            }
            TypicalMethod::Disc => {
                try_integrate_vec(
                    |r, out| {
                        let f = self.laws.radius_typical_pdf(r);
                        if f == 0.0 {
                            out.iter_mut().for_each(|v| *v = 0.0);
                            return Ok(());
                        }
                        let law = self.disc_count_law(lambda_v, r, m_max)?;
                        for (o, p) in out.iter_mut().zip(self.disc_conditional(r, &law, 0.0)) {
                            *o = p * f;
                        }
                        Ok(())
                    },
                    m_max + 1,
                    Domain::SemiInfinite(0.0),
                    &self.length_cfg(),
                )?
                .values
            }
        };
        finish_pmf(values)
    }

    /// Tagged-cell PMF straight from the joint conditional transform
    /// `exp(-s c0 + h(s; r_z))`, mixed over `c0` inside the `r_z` integral.
    /// Much slower than [`Self::pmf_tagged`]; kept as a cross-check.
    pub fn pmf_tagged_nested(&self, m_max: usize) -> Result<Pmf, LoadError> {
        if m_max < 1 {
            return Err(LoadError::Order { min: 1, got: m_max });
        }
        let lambda_v = self.params.lambda_v;
        let order = m_max - 1;
        let chord_domain = Domain::Finite(0.0, self.laws.chord.support_max());
        let inner_cfg = self.cfg;
        let values = try_integrate_vec(
            |r, out| {
                let f = self.zero_radius_density(r);
                if f == 0.0 {
                    out.iter_mut().for_each(|v| *v = 0.0);
                    return Ok(());
                }
                let law = self.disc_count_law(lambda_v, r, order)?;
                let mixed = integrate_vec(
                    |c0, acc| {
                        let g = self.origin_density(c0);
                        if g == 0.0 {
                            acc.iter_mut().for_each(|v| *v = 0.0);
                            return;
                        }
                        for (a, p) in acc.iter_mut().zip(self.disc_conditional(r, &law, c0)) {
                            *a = p * g;
                        }
                    },
                    order + 1,
                    chord_domain,
                    &inner_cfg,
                )?;
                for (o, p) in out.iter_mut().zip(mixed.values) {
                    *o = p * f;
                }
                Ok(())
            },
            order + 1,
            Domain::SemiInfinite(0.0),
            &self.length_cfg(),
        )?
        .values;
        let mut probs = Vec::with_capacity(m_max + 1);
        probs.push(0.0);
        probs.extend(values);
        finish_pmf(probs)
    }

    /// Load PMF of the base station serving a typical vehicle, counting
    /// that vehicle: `p_0 = 0` and `p_{m+1}` comes from derivative order `m`.
    ///
    /// The transform factorizes into the origin road and the rest of the
    /// zero cell, so the two count laws are mixed separately and convolved.
    pub fn pmf_tagged(&self, m_max: usize) -> Result<Pmf, LoadError> {
        if m_max < 1 {
            return Err(LoadError::Order { min: 1, got: m_max });
        }
        let order = m_max - 1;
        let lambda_v = self.params.lambda_v;
        if lambda_v == 0.0 {
            return Ok(point_mass(1, m_max));
        }
        let origin_road = self.chord_integral_vec(
            order + 1,
            |c0, out| {
                poisson_pmf_into(lambda_v * c0, out);
                let g = self.origin_density(c0);
                out.iter_mut().for_each(|v| *v *= g);
            },
            &self.cfg,
        )?;
        let others = try_integrate_vec(
            |r, out| {
                let f = self.zero_radius_density(r);
                if f == 0.0 {
                    out.iter_mut().for_each(|v| *v = 0.0);
                    return Ok(());
                }
                let law = self.disc_count_law(lambda_v, r, order)?;
                for (o, p) in out.iter_mut().zip(self.disc_conditional(r, &law, 0.0)) {
                    *o = p * f;
                }
                Ok(())
            },
            order + 1,
            Domain::SemiInfinite(0.0),
            &self.length_cfg(),
        )?
        .values;
        let mut probs = vec![0.0; m_max + 1];
        for m in 0..=order {
            probs[m + 1] = (0..=m).map(|k| origin_road[k] * others[m - k]).sum();
        }
        finish_pmf(probs)
    }
}

fn point_mass(at: usize, m_max: usize) -> Pmf {
    let mut probs = vec![0.0; m_max + 1];
    probs[at] = 1.0;
    Pmf { probs, tail_mass: 0.0 }
}

fn finish_pmf(mut probs: Vec<f64>) -> Result<Pmf, LoadError> {
    for (m, p) in probs.iter_mut().enumerate() {
        if *p < -NEGATIVE_MASS_TOLERANCE || !p.is_finite() {
            return Err(LoadError::NegativeMass { m, value: *p });
        }
        if *p < 0.0 {
            *p = 0.0;
        }
    }
    let pmf = Pmf::from_probs(probs);
    pmf.check()?;
    Ok(pmf)
}

pub fn laplace_w_typical_exact(params: &NetworkParams, s: f64) -> Result<f64, LoadError> {
    LoadModel::standard(*params)?.laplace_w_typical_exact(s)
}

pub fn laplace_w_typical_disc(params: &NetworkParams, s: f64) -> Result<f64, LoadError> {
    LoadModel::standard(*params)?.laplace_w_typical_disc(s)
}

pub fn laplace_w_zero(params: &NetworkParams, s: f64) -> Result<f64, LoadError> {
    LoadModel::standard(*params)?.laplace_w_zero(s)
}

pub fn pmf_typical(params: &NetworkParams, m_max: usize, method: TypicalMethod) -> Result<Pmf, LoadError> {
    LoadModel::standard(*params)?.pmf_typical(m_max, method)
}

pub fn pmf_tagged(params: &NetworkParams, m_max: usize) -> Result<Pmf, LoadError> {
    LoadModel::standard(*params)?.pmf_tagged(m_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn poisson_pmf_small_and_large_mean() {
        let mut out = vec![0.0; 5];
        poisson_pmf_into(0.0, &mut out);
        assert_eq!(out, vec![1.0, 0.0, 0.0, 0.0, 0.0]);
        poisson_pmf_into(2.0, &mut out);
        assert_relative_eq!(out[3], (-2.0f64).exp() * 8.0 / 6.0, max_relative = 1e-14);
        let mut big = vec![0.0; 1200];
        poisson_pmf_into(1000.0, &mut big);
        let sum: f64 = big.iter().sum();
        assert_relative_eq!(sum, 1.0, max_relative = 1e-6);
    }

    #[test]
    fn pmf_helpers() {
        let p = Pmf::from_samples(&[0, 1, 1, 3]);
        assert_eq!(p.probs, vec![0.25, 0.5, 0.0, 0.25]);
        assert_eq!(p.tail_mass, 0.0);
        assert_relative_eq!(p.mean(), 1.25);
        assert_relative_eq!(p.pgf(1.0), 1.0);
        assert_relative_eq!(p.pgf(0.0), 0.25);
        let q = Pmf::from_probs(vec![0.25, 0.5]);
        assert_relative_eq!(q.tail_mass, 0.25);
        // beyond the short support: 0.25 (p) vs tail 0.25 (q)
        assert_relative_eq!(p.total_variation(&q), 0.0);
        assert_relative_eq!(p.total_variation(&p), 0.0);
        let r = Pmf::from_probs(vec![1.0]);
        assert_relative_eq!(p.total_variation(&r), 0.75);
    }

    #[test]
    fn negative_entries_rejected() {
        assert!(Pmf::from_probs(vec![1.1, -0.1]).check().is_err());
        assert!(finish_pmf(vec![0.5, -1e-12, 0.5]).is_ok());
        assert!(finish_pmf(vec![0.5, -1e-6, 0.5]).is_err());
    }

    fn model() -> LoadModel {
        LoadModel::standard(NetworkParams::default()).unwrap()
    }

    #[test]
    fn transforms_at_zero_are_one() {
        let m = model();
        for kind in [ChordLawKind::TypicalExact, ChordLawKind::TypicalDisc, ChordLawKind::ZeroDisc] {
            assert_relative_eq!(m.laplace(kind, 0.0).unwrap(), 1.0, epsilon = 1e-5);
        }
    }

    #[test]
    fn disc_transform_nonincreasing_and_convex() {
        let m = model();
        let vals: Vec<f64> = (0..50)
            .map(|i| m.laplace_w_typical_disc(8.0 * i as f64 / 49.0).unwrap())
            .collect();
        for w in vals.windows(3) {
            assert!(w[1] <= w[0] + 1e-12);
            assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-9);
        }
    }

    #[test]
    fn mean_road_length_from_slope() {
        let m = model();
        let h = 1e-4;
        // E[W] = mu_l / lambda_b
        for kind in [ChordLawKind::TypicalExact, ChordLawKind::TypicalDisc] {
            let slope = (m.laplace(kind, 0.0).unwrap() - m.laplace(kind, h).unwrap()) / h;
            assert_relative_eq!(slope, 5.0, max_relative = 0.01);
        }
        // zero cell: E[C0] + mu_l E[Z'] with E[Z'] = E[Z^2] / E[Z]
        let area = m.laws.shape.area;
        let e_c0 = m.chord_integral(|c| c * m.laws.chord_origin_pdf(c)).unwrap();
        let expected = e_c0 + 5.0 * area.moment(2.0) / area.moment(1.0);
        let slope = (m.laplace_w_zero(0.0).unwrap() - m.laplace_w_zero(h).unwrap()) / h;
        assert_relative_eq!(slope, expected, max_relative = 0.01);
    }

    #[test]
    fn zero_cell_carries_more_road() {
        let m = model();
        for i in 1..=16 {
            let s = 0.5 * i as f64;
            assert!(m.laplace_w_zero(s).unwrap() <= m.laplace_w_typical_disc(s).unwrap());
        }
    }

    #[test]
    fn no_vehicles_no_load() {
        let m = LoadModel::standard(NetworkParams {
            lambda_v: 0.0,
            ..Default::default()
        })
        .unwrap();
        for method in [TypicalMethod::Exact, TypicalMethod::Disc] {
            let p = m.pmf_typical(8, method).unwrap();
            assert_eq!(p.probs[0], 1.0);
            assert!(p.probs[1..].iter().all(|&v| v == 0.0));
        }
        let t = m.pmf_tagged(8).unwrap();
        assert_eq!(t.probs[0], 0.0);
        assert_relative_eq!(t.probs[1], 1.0, epsilon = 1e-6);
    }

    #[test]
    fn mean_load_is_ten() {
        let m = model();
        for method in [TypicalMethod::Exact, TypicalMethod::Disc] {
            let p = m.pmf_typical(DEFAULT_M_MAX, method).unwrap();
            assert_relative_eq!(p.mean(), 10.0, max_relative = 0.02);
            assert!(p.tail_mass < 1e-4);
        }
    }

    #[test]
    fn pmf_matches_generating_function() {
        let m = model();
        let typical = m.pmf_typical(DEFAULT_M_MAX, TypicalMethod::Disc).unwrap();
        let tagged = m.pmf_tagged(DEFAULT_M_MAX).unwrap();
        for z in [0.25, 0.5, 0.75] {
            assert_relative_eq!(typical.pgf(z), m.pgf_typical(z, TypicalMethod::Disc).unwrap(), epsilon = 1e-3);
            assert_relative_eq!(tagged.pgf(z), m.pgf_tagged(z).unwrap(), epsilon = 1e-3);
        }
    }

    #[test]
    fn tagged_load_exceeds_typical_plus_one() {
        let m = model();
        let typical = m.pmf_typical(DEFAULT_M_MAX, TypicalMethod::Disc).unwrap();
        let tagged = m.pmf_tagged(DEFAULT_M_MAX).unwrap();
        assert_eq!(tagged.probs[0], 0.0);
        assert!(tagged.mean() > typical.mean() + 1.0);
        assert!(tagged.tail_mass < 1e-4);
    }

    #[test]
    fn repeated_runs_bit_identical() {
        let a = model().pmf_typical(32, TypicalMethod::Disc).unwrap();
        let b = model().pmf_typical(32, TypicalMethod::Disc).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn tagged_needs_order_one() {
        assert!(matches!(model().pmf_tagged(0), Err(LoadError::Order { min: 1, got: 0 })));
    }
}
