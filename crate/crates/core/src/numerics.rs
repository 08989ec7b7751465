//! Adaptive Gauss-Kronrod quadrature over finite and semi-infinite intervals,
//! plus the recurrences that turn derivatives of an exponent `h` into
//! derivatives (or scaled Taylor coefficients) of `exp(h)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

/// Tolerances and limits for [`integrate`] and friends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    /// Length scale `L` of the map `x = a + L t / (1 - t)` used for
    /// semi-infinite domains. Should be of the order of the integrand's
    /// decay length.
    pub infinite_tail_cut: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-12,
            max_subdivisions: 2000,
            infinite_tail_cut: 1.0,
        }
    }
}

impl QuadratureConfig {
    pub fn with_tail_scale(mut self, scale: f64) -> Self {
        self.infinite_tail_cut = scale;
        self
    }

    pub fn with_tolerances(mut self, rel_tol: f64, abs_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }

    pub fn validate(&self) -> Result<(), QuadratureError> {
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) {
            return Err(QuadratureError::InvalidConfig("tolerances must be positive"));
        }
        if self.max_subdivisions < 1 {
            return Err(QuadratureError::InvalidConfig("max_subdivisions must be at least 1"));
        }
        if !(self.infinite_tail_cut > 0.0) || !self.infinite_tail_cut.is_finite() {
            return Err(QuadratureError::InvalidConfig("infinite_tail_cut must be positive"));
        }
        Ok(())
    }
}

/// Integration domain. `SemiInfinite(a)` is `[a, +inf)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Finite(f64, f64),
    SemiInfinite(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("quadrature did not converge after {subdivisions} subdivisions: estimate {estimate:e}, error bound {error:e}")]
    NotConverged {
        estimate: f64,
        error: f64,
        subdivisions: usize,
    },
    #[error("integrand returned a non-finite value at x = {abscissa}")]
    NonFinite { abscissa: f64 },
    #[error("invalid quadrature configuration: {0}")]
    InvalidConfig(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub abs_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VecIntegral {
    pub values: Vec<f64>,
    /// L1 norm of the per-component error estimates.
    pub abs_error: f64,
}

// Kronrod 15-point abscissae and weights, with the embedded 7-point Gauss
// rule on the odd-indexed nodes (QUADPACK qk15 tables).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

struct Segment {
    lo: f64,
    hi: f64,
    values: Vec<f64>,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Integrand in the unit variable `t`, after any change of variables.
struct Mapped<F> {
    f: F,
    domain: Domain,
    scale: f64,
    dim: usize,
    scratch: Vec<f64>,
}

impl<F> Mapped<F>
where
    F: FnMut(f64, &mut [f64]) -> Result<(), QuadratureError>,
{
    fn eval(&mut self, t: f64, out: &mut [f64]) -> Result<(), QuadratureError> {
        match self.domain {
            Domain::Finite(..) => {
                (self.f)(t, out)?;
                check_finite(t, out)
            }
            Domain::SemiInfinite(a) => {
                let one_minus = 1.0 - t;
                let x = a + self.scale * t / one_minus;
                if !x.is_finite() {
                    out.iter_mut().for_each(|v| *v = 0.0);
                    return Ok(());
                }
                let jac = self.scale / (one_minus * one_minus);
                self.scratch.resize(self.dim, 0.0);
                let mut scratch = std::mem::take(&mut self.scratch);
                (self.f)(x, &mut scratch)?;
                check_finite(x, &scratch)?;
                for (o, s) in out.iter_mut().zip(&scratch) {
                    // a decayed integrand times a huge Jacobian near t = 1
                    *o = if *s == 0.0 { 0.0 } else { s * jac };
                }
                self.scratch = scratch;
                check_finite(x, out)
            }
        }
    }

    fn unit_bounds(&self) -> (f64, f64) {
        match self.domain {
            Domain::Finite(a, b) => (a, b),
            Domain::SemiInfinite(_) => (0.0, 1.0),
        }
    }
}

fn check_finite(x: f64, values: &[f64]) -> Result<(), QuadratureError> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(QuadratureError::NonFinite { abscissa: x })
    }
}

fn kronrod_segment<F>(
    mapped: &mut Mapped<F>,
    lo: f64,
    hi: f64,
    buf: &mut [f64],
) -> Result<Segment, QuadratureError>
where
    F: FnMut(f64, &mut [f64]) -> Result<(), QuadratureError>,
{
    let dim = mapped.dim;
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut kron = vec![0.0; dim];
    let mut gauss = vec![0.0; dim];

    mapped.eval(center, buf)?;
    for j in 0..dim {
        kron[j] = WGK[7] * buf[j];
        gauss[j] = WG[3] * buf[j];
    }
    for i in 0..7 {
        let dx = half * XGK[i];
        for x in [center - dx, center + dx] {
            mapped.eval(x, buf)?;
            for j in 0..dim {
                kron[j] += WGK[i] * buf[j];
                if i % 2 == 1 {
                    gauss[j] += WG[i / 2] * buf[j];
                }
            }
        }
    }
    let mut error = 0.0;
    for j in 0..dim {
        kron[j] *= half;
        gauss[j] *= half;
        error += (kron[j] - gauss[j]).abs();
    }
    Ok(Segment {
        lo,
        hi,
        values: kron,
        error,
    })
}

/// Adaptive integration of a vector-valued integrand that may itself fail
/// (typically because it runs a nested quadrature).
///
/// The error criterion is on the L1 norm over components:
/// `sum_j err_j <= max(abs_tol, rel_tol * sum_j |I_j|)`.
pub fn try_integrate_vec<F>(
    f: F,
    dim: usize,
    domain: Domain,
    cfg: &QuadratureConfig,
) -> Result<VecIntegral, QuadratureError>
where
    F: FnMut(f64, &mut [f64]) -> Result<(), QuadratureError>,
{
    cfg.validate()?;
    if let Domain::Finite(a, b) = domain {
        if a == b {
            return Ok(VecIntegral {
                values: vec![0.0; dim],
                abs_error: 0.0,
            });
        }
        if a > b {
            let mut r = try_integrate_vec(f, dim, Domain::Finite(b, a), cfg)?;
            r.values.iter_mut().for_each(|v| *v = -*v);
            return Ok(r);
        }
    }
    let mut mapped = Mapped {
        f,
        domain,
        scale: cfg.infinite_tail_cut,
        dim,
        scratch: vec![0.0; dim],
    };
    let mut buf = vec![0.0; dim];
    let (lo, hi) = mapped.unit_bounds();
    let first = kronrod_segment(&mut mapped, lo, hi, &mut buf)?;

    let mut total = first.values.clone();
    let mut total_err = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(first);
    let mut subdivisions = 0;

    loop {
        let norm: f64 = total.iter().map(|v| v.abs()).sum();
        if total_err <= cfg.abs_tol.max(cfg.rel_tol * norm) {
            break;
        }
        if subdivisions >= cfg.max_subdivisions {
            return Err(QuadratureError::NotConverged {
                estimate: if dim == 1 { total[0] } else { norm },
                error: total_err,
                subdivisions,
            });
        }
        let worst = heap.pop().expect("heap never empties");
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            // interval exhausted at machine precision; accept what we have
            heap.push(worst);
            return Err(QuadratureError::NotConverged {
                estimate: if dim == 1 { total[0] } else { norm },
                error: total_err,
                subdivisions,
            });
        }
        let left = kronrod_segment(&mut mapped, worst.lo, mid, &mut buf)?;
        let right = kronrod_segment(&mut mapped, mid, worst.hi, &mut buf)?;
        for j in 0..dim {
            total[j] += left.values[j] + right.values[j] - worst.values[j];
        }
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        subdivisions += 1;

        // re-sum periodically so the running totals do not drift
        if subdivisions % 64 == 0 {
            total.iter_mut().for_each(|v| *v = 0.0);
            total_err = 0.0;
            for seg in heap.iter() {
                for j in 0..dim {
                    total[j] += seg.values[j];
                }
                total_err += seg.error;
            }
        }
    }

    // final deterministic summation in interval order
    let mut segs: Vec<Segment> = heap.into_vec();
    segs.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    let mut values = vec![0.0; dim];
    let mut abs_error = 0.0;
    for seg in &segs {
        for j in 0..dim {
            values[j] += seg.values[j];
        }
        abs_error += seg.error;
    }
    Ok(VecIntegral { values, abs_error })
}

/// Vector-valued integrand that cannot fail.
pub fn integrate_vec<F>(
    mut f: F,
    dim: usize,
    domain: Domain,
    cfg: &QuadratureConfig,
) -> Result<VecIntegral, QuadratureError>
where
    F: FnMut(f64, &mut [f64]),
{
    try_integrate_vec(
        |x, out| {
            f(x, out);
            Ok(())
        },
        dim,
        domain,
        cfg,
    )
}

/// Scalar integrand that may fail (nested quadrature).
pub fn try_integrate<F>(
    mut f: F,
    domain: Domain,
    cfg: &QuadratureConfig,
) -> Result<Integral, QuadratureError>
where
    F: FnMut(f64) -> Result<f64, QuadratureError>,
{
    let r = try_integrate_vec(
        |x, out| {
            out[0] = f(x)?;
            Ok(())
        },
        1,
        domain,
        cfg,
    )?;
    Ok(Integral {
        value: r.values[0],
        abs_error: r.abs_error,
    })
}

/// Integrates `f` over `domain`, returning the value and an error estimate
/// no larger than `max(abs_tol, rel_tol * |I|)`.
pub fn integrate<F>(mut f: F, domain: Domain, cfg: &QuadratureConfig) -> Result<Integral, QuadratureError>
where
    F: FnMut(f64) -> f64,
{
    try_integrate(|x| Ok(f(x)), domain, cfg)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DerivativeError {
    #[error("derivative of order {order} overflowed; evaluate in the log domain (scaled coefficients) instead")]
    Overflow { order: usize },
    #[error("exp(h) must be positive and finite, got {0}")]
    InvalidBase(f64),
    #[error("non-finite derivative of h at order {0}")]
    NonFiniteInput(usize),
}

/// Derivatives `h^(1)..h^(m)` of an exponent together with `exp(h)` at the
/// same point.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpDerivativeStack {
    pub h_derivs: Vec<f64>,
    pub g0: f64,
}

impl ExpDerivativeStack {
    pub fn new(h_derivs: Vec<f64>, g0: f64) -> Result<Self, DerivativeError> {
        if !(g0 > 0.0) || !g0.is_finite() {
            return Err(DerivativeError::InvalidBase(g0));
        }
        if let Some(k) = h_derivs.iter().position(|v| !v.is_finite()) {
            return Err(DerivativeError::NonFiniteInput(k + 1));
        }
        Ok(Self { h_derivs, g0 })
    }

    pub fn order(&self) -> usize {
        self.h_derivs.len()
    }

    pub fn derivatives(&self) -> Result<Vec<f64>, DerivativeError> {
        exp_composition_derivatives(&self.h_derivs, self.g0)
    }
}

/// Derivatives `G^(0)..G^(m)` of `G = exp(h)` from `h^(1)..h^(m)` and
/// `g0 = exp(h)`, using
/// `G^(m) = sum_{k=0}^{m-1} C(m-1, k) h^(k+1) G^(m-1-k)`.
pub fn exp_composition_derivatives(h_derivs: &[f64], g0: f64) -> Result<Vec<f64>, DerivativeError> {
    let stack_ok = g0 > 0.0 && g0.is_finite();
    if !stack_ok {
        return Err(DerivativeError::InvalidBase(g0));
    }
    if let Some(k) = h_derivs.iter().position(|v| !v.is_finite()) {
        return Err(DerivativeError::NonFiniteInput(k + 1));
    }
    let m = h_derivs.len();
    let mut out = Vec::with_capacity(m + 1);
    out.push(g0);
    // binomial row C(n-1, .) built incrementally
    let mut row: Vec<f64> = vec![1.0];
    for n in 1..=m {
        if n > 1 {
            let mut next = vec![1.0; n];
            for k in 1..n - 1 {
                next[k] = row[k - 1] + row[k];
            }
            row = next;
        }
        let mut acc = 0.0;
        for k in 0..n {
            acc += row[k] * h_derivs[k] * out[n - 1 - k];
        }
        if !acc.is_finite() {
            return Err(DerivativeError::Overflow { order: n });
        }
        out.push(acc);
    }
    Ok(out)
}

/// Taylor coefficients of `exp(H(z))` where `H(z) = log_c0 + sum_j b_j z^j`.
///
/// `b[j - 1]` holds `b_j`. With `b_j = (-x)^j h^(j)(s) / j!` the output is
/// `(-x)^m G^(m)(s) / m!` for `G = exp(h)`, i.e. the same quantity as
/// [`exp_composition_derivatives`] with the factorials and signs folded in.
/// The recurrence `c_m = (1/m) sum_{j=1}^m j b_j c_{m-j}` runs on a
/// rescaled copy so neither `exp(log_c0)` nor large partial values overflow.
pub fn exp_series_coefficients(log_c0: f64, b: &[f64]) -> Vec<f64> {
    const RESCALE_AT: f64 = 1e250;
    let m = b.len();
    let mut c = Vec::with_capacity(m + 1);
    c.push(1.0);
    let mut log_scale = 0.0;
    for n in 1..=m {
        let mut acc = 0.0;
        for j in 1..=n {
            acc += j as f64 * b[j - 1] * c[n - j];
        }
        acc /= n as f64;
        c.push(acc);
        if acc.abs() > RESCALE_AT {
            c.iter_mut().for_each(|v| *v /= RESCALE_AT);
            log_scale += RESCALE_AT.ln();
        }
    }
    let shift = log_c0 + log_scale;
    c.into_iter()
        .map(|v| {
            if v == 0.0 {
                0.0
            } else {
                v.signum() * (v.abs().ln() + shift).exp()
            }
        })
        .collect()
}
