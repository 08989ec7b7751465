//! Densities of Poisson-Voronoi cell statistics: the generalized-gamma area
//! and perimeter fits, the chord-length law of a line crossing a cell, and
//! the size-biased variants seen from a point that is known to be covered.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock};

use rayon::prelude::*;
use statrs::function::gamma::{gamma_lr, ln_gamma};
use thiserror::Error;

use crate::numerics::{try_integrate, integrate, Domain, QuadratureConfig, QuadratureError};

/// Shape constants `(a, b, c)` of the typical-cell area fit (scaled area).
pub const AREA_FIT: (f64, f64, f64) = (1.07950, 3.03226, 3.31122);
/// Shape constants `(a, b, c)` of the typical-cell perimeter fit (scaled
/// perimeter `sqrt(lambda_b) u / 4`).
pub const PERIMETER_FIT: (f64, f64, f64) = (2.33609, 2.97006, 7.58060);

/// Environment variable naming a directory for the chord-law table cache.
pub const CACHE_DIR_ENV: &str = "PLCP_LOAD_CACHE_DIR";

/// `g(a, b, c, x) = a b^{c/a} / Gamma(c/a) x^{c-1} exp(-b x^a)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralizedGamma {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    kernel_rate: f64,
    log_norm: f64,
}

impl GeneralizedGamma {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        assert!(a > 0.0 && b > 0.0 && c > 0.0, "generalized gamma needs a, b, c > 0");
        let log_norm = a.ln() + (c / a) * b.ln() - ln_gamma(c / a);
        Self {
            a,
            b,
            c,
            kernel_rate: b,
            log_norm,
        }
    }

    pub fn from_fit(fit: (f64, f64, f64)) -> Self {
        Self::new(fit.0, fit.1, fit.2)
    }

    /// Test hook: scales the rate inside `exp(-b x^a)` but keeps the
    /// normalizing constant, as a mistyped constant would.
    pub fn with_perturbed_kernel(mut self, factor: f64) -> Self {
        self.kernel_rate = self.b * factor;
        self
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        if x == 0.0 {
            return match self.c.partial_cmp(&1.0) {
                Some(std::cmp::Ordering::Greater) => 0.0,
                Some(std::cmp::Ordering::Equal) => self.log_norm.exp(),
                _ => f64::INFINITY,
            };
        }
        (self.log_norm + (self.c - 1.0) * x.ln() - self.kernel_rate * x.powf(self.a)).exp()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            gamma_lr(self.c / self.a, self.b * x.powf(self.a))
        }
    }

    /// `E[X^k]` in closed form.
    pub fn moment(&self, k: f64) -> f64 {
        (ln_gamma((self.c + k) / self.a) - ln_gamma(self.c / self.a) - (k / self.a) * self.b.ln()).exp()
    }
}

pub fn gen_gamma_pdf(p: &GeneralizedGamma, x: f64) -> f64 {
    p.pdf(x)
}

/// Area and perimeter laws of the typical cell at density `lambda_b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellShapeLaws {
    pub lambda_b: f64,
    pub area: GeneralizedGamma,
    pub perimeter: GeneralizedGamma,
}

impl CellShapeLaws {
    pub fn new(lambda_b: f64) -> Self {
        Self {
            lambda_b,
            area: GeneralizedGamma::from_fit(AREA_FIT),
            perimeter: GeneralizedGamma::from_fit(PERIMETER_FIT),
        }
    }

    /// `f_U(u) = sqrt(lambda_b)/4 g(.., sqrt(lambda_b) u / 4)`.
    pub fn perimeter_pdf(&self, u: f64) -> f64 {
        let s = self.lambda_b.sqrt() / 4.0;
        s * self.perimeter.pdf(s * u)
    }

    pub fn perimeter_cdf(&self, u: f64) -> f64 {
        self.perimeter.cdf(self.lambda_b.sqrt() * u / 4.0)
    }

    /// `f_Z(z) = lambda_b g(.., lambda_b z)`.
    pub fn area_pdf(&self, z: f64) -> f64 {
        self.lambda_b * self.area.pdf(self.lambda_b * z)
    }

    pub fn area_cdf(&self, z: f64) -> f64 {
        self.area.cdf(self.lambda_b * z)
    }

    /// Area-biased law of the zero cell, `lambda_b z f_Z(z)`.
    pub fn area_biased_pdf(&self, z: f64) -> f64 {
        self.lambda_b * z * self.area_pdf(z)
    }

    /// Radius of the equal-area disc of the typical cell,
    /// `2 pi r f_Z(pi r^2)`.
    pub fn radius_typical_pdf(&self, r: f64) -> f64 {
        2.0 * PI * r * self.area_pdf(PI * r * r)
    }

    pub fn radius_typical_cdf(&self, r: f64) -> f64 {
        self.area_cdf(PI * r * r)
    }

    /// Radius of the equal-area disc of the zero cell,
    /// `2 pi^2 lambda_b r^3 f_Z(pi r^2)`.
    pub fn radius_zero_pdf(&self, r: f64) -> f64 {
        2.0 * PI * PI * self.lambda_b * r.powi(3) * self.area_pdf(PI * r * r)
    }
}

pub fn perimeter_pdf(lambda_b: f64, u: f64) -> f64 {
    CellShapeLaws::new(lambda_b).perimeter_pdf(u)
}

pub fn area_pdf(lambda_b: f64, z: f64) -> f64 {
    CellShapeLaws::new(lambda_b).area_pdf(z)
}

/// `K` and its first two `c`-derivatives for a nucleus at polar position
/// `(tau, alpha)` relative to one chord endpoint, the other endpoint at
/// distance `c` along the line. `K` is the area of the union of the two
/// discs centred at the endpoints whose boundaries pass through the nucleus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChordKernel {
    pub k: f64,
    pub dk: f64,
    pub d2k: f64,
}

fn segment_shape(phi: f64) -> f64 {
    phi - 0.5 * (2.0 * phi).sin()
}

pub fn chord_kernel(tau: f64, alpha: f64, c: f64) -> ChordKernel {
    let (sin_a, cos_a) = alpha.sin_cos();
    let q = c - tau * cos_a;
    let d_sq = q * q + tau * tau * sin_a * sin_a;
    let cos_phi = if d_sq > 0.0 && c > 0.0 {
        ((2.0 * c * c - 2.0 * tau * c * cos_a) / (2.0 * c * d_sq.sqrt())).clamp(-1.0, 1.0)
    } else {
        -cos_a
    };
    let phi = cos_phi.acos();
    let s_phi = segment_shape(phi);
    let k = 2.0 * PI * tau * tau - 2.0 * PI * tau * c * cos_a - tau * tau * segment_shape(alpha) + PI * c * c
        - d_sq * s_phi;
    // dS/dphi = 2 sin^2 phi and dphi/dc = -tau sin(alpha) / D collapse to
    // these two forms.
    let cubic = if d_sq > 0.0 {
        2.0 * (tau * sin_a).powi(3) / d_sq
    } else {
        0.0
    };
    let dk = 2.0 * q * (PI - s_phi) + cubic;
    let d2k = 2.0 * (PI - s_phi);
    ChordKernel { k, dk, d2k }
}

/// Chord-length density of a line crossing a typical cell, evaluated by
/// direct double quadrature over the nucleus position.
pub fn chord_pdf(lambda_b: f64, c: f64, cfg: &QuadratureConfig) -> Result<f64, QuadratureError> {
    if c <= 0.0 {
        return Ok(0.0);
    }
    let inner_cfg = QuadratureConfig {
        rel_tol: cfg.rel_tol * 0.1,
        abs_tol: cfg.abs_tol * 0.1,
        ..*cfg
    };
    let outer_cfg = cfg.with_tail_scale(1.0 / lambda_b.sqrt());
    let outer = try_integrate(
        |tau| {
            let inner = integrate(
                |alpha| {
                    let kern = chord_kernel(tau, alpha, c);
                    let e = (-lambda_b * kern.k).exp();
                    if e == 0.0 {
                        return 0.0;
                    }
                    tau * (lambda_b * kern.dk * kern.dk - kern.d2k) * e
                },
                Domain::Finite(0.0, PI),
                &inner_cfg,
            )?;
            Ok(inner.value)
        },
        Domain::SemiInfinite(0.0),
        &outer_cfg,
    )?;
    Ok(0.5 * PI * lambda_b.powf(1.5) * outer.value)
}

#[derive(Debug, Error)]
pub enum TableError {
    #[error("chord table I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("chord table parse error on line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// Monotone cubic (Fritsch-Carlson) interpolant.
#[derive(Debug, Clone, PartialEq)]
struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    slope: Vec<f64>,
}

impl Pchip {
    fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        let n = x.len();
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut slope = vec![0.0; n];
        slope[0] = delta[0];
        slope[n - 1] = delta[n - 2];
        for i in 1..n - 1 {
            if delta[i - 1] * delta[i] > 0.0 {
                let w1 = 2.0 * h[i] + h[i - 1];
                let w2 = h[i] + 2.0 * h[i - 1];
                slope[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
            }
        }
        Self { x, y, slope }
    }

    fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        let i = self.x.partition_point(|&v| v <= t).clamp(1, n - 1) - 1;
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.y[i] + h10 * h * self.slope[i] + h01 * self.y[i + 1] + h11 * h * self.slope[i + 1]
    }
}

// 5-point Gauss-Legendre on [-1, 1]; exact for the cubic pieces times c.
const GL5_X: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GL5_W: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// Tabulated chord-length law in scaled units `c sqrt(lambda_b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChordLawTable {
    pub grid: Vec<f64>,
    pub pdf_values: Vec<f64>,
    pub cdf_values: Vec<f64>,
    pub mean: f64,
    interp: Pchip,
}

impl ChordLawTable {
    pub const GRID_POINTS: usize = 512;
    pub const GRID_MIN: f64 = 1e-3;
    pub const GRID_MAX: f64 = 8.0;

    pub fn log_grid(n: usize, lo: f64, hi: f64) -> Vec<f64> {
        let (l0, l1) = (lo.ln(), hi.ln());
        (0..n)
            .map(|i| (l0 + (l1 - l0) * i as f64 / (n - 1) as f64).exp())
            .collect()
    }

    /// Evaluates the double integral at every grid point (in parallel).
    pub fn build(cfg: &QuadratureConfig) -> Result<Self, QuadratureError> {
        Self::build_on(Self::log_grid(Self::GRID_POINTS, Self::GRID_MIN, Self::GRID_MAX), cfg)
    }

    pub fn build_on(grid: Vec<f64>, cfg: &QuadratureConfig) -> Result<Self, QuadratureError> {
        let pdf: Result<Vec<f64>, _> = grid.par_iter().map(|&c| chord_pdf(1.0, c, cfg)).collect();
        let pdf: Vec<f64> = pdf?.into_iter().map(|v| v.max(0.0)).collect();
        Ok(Self::from_pdf(grid, pdf))
    }

    /// Builds the interpolant and integrates it for the CDF and the mean.
    /// Below the first node the density is held constant.
    pub fn from_pdf(grid: Vec<f64>, pdf_values: Vec<f64>) -> Self {
        let interp = Pchip::new(grid.clone(), pdf_values.clone());
        let mut cdf_values = Vec::with_capacity(grid.len());
        let mut acc = pdf_values[0] * grid[0];
        let mut mean = 0.5 * pdf_values[0] * grid[0] * grid[0];
        cdf_values.push(acc);
        for w in grid.windows(2) {
            let (a, b) = (w[0], w[1]);
            let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
            for (x, wt) in GL5_X.iter().zip(GL5_W) {
                let t = mid + half * x;
                let f = interp.eval(t).max(0.0);
                acc += half * wt * f;
                mean += half * wt * t * f;
            }
            cdf_values.push(acc);
        }
        Self {
            grid,
            pdf_values,
            cdf_values,
            mean,
            interp,
        }
    }

    pub fn max_scaled(&self) -> f64 {
        *self.grid.last().expect("non-empty grid")
    }

    pub fn pdf_scaled(&self, x: f64) -> f64 {
        if x < 0.0 || x > self.max_scaled() {
            0.0
        } else if x <= self.grid[0] {
            self.pdf_values[0]
        } else {
            self.interp.eval(x).max(0.0)
        }
    }

    pub fn cdf_scaled(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x <= self.grid[0] {
            return self.pdf_values[0] * x;
        }
        if x >= self.max_scaled() {
            return *self.cdf_values.last().expect("non-empty");
        }
        let i = self.grid.partition_point(|&v| v <= x) - 1;
        let (a, b) = (self.grid[i], x);
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        let mut acc = self.cdf_values[i];
        for (gx, wt) in GL5_X.iter().zip(GL5_W) {
            acc += half * wt * self.interp.eval(mid + half * gx).max(0.0);
        }
        acc
    }

    pub fn total_mass(&self) -> f64 {
        *self.cdf_values.last().expect("non-empty")
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("c_scaled,pdf,cdf\n");
        for i in 0..self.grid.len() {
            let _ = writeln!(s, "{},{},{}", self.grid[i], self.pdf_values[i], self.cdf_values[i]);
        }
        s
    }

    /// Reads `c_scaled,pdf,cdf`; the CDF column is recomputed from the pdf.
    pub fn from_csv(text: &str) -> Result<Self, TableError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == "c_scaled,pdf,cdf" => {}
            _ => {
                return Err(TableError::Parse {
                    line: 1,
                    reason: "expected header c_scaled,pdf,cdf".into(),
                })
            }
        }
        let mut grid = Vec::new();
        let mut pdf = Vec::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 3 {
                return Err(TableError::Parse {
                    line: i + 1,
                    reason: format!("expected 3 columns, got {}", cols.len()),
                });
            }
            let parse = |s: &str| {
                s.trim().parse::<f64>().map_err(|e| TableError::Parse {
                    line: i + 1,
                    reason: e.to_string(),
                })
            };
            let c = parse(cols[0])?;
            let p = parse(cols[1])?;
            if grid.last().is_some_and(|&last| c <= last) || !(p >= 0.0) {
                return Err(TableError::Parse {
                    line: i + 1,
                    reason: "grid must increase and pdf must be non-negative".into(),
                });
            }
            grid.push(c);
            pdf.push(p);
        }
        if grid.len() < 3 {
            return Err(TableError::Parse {
                line: 0,
                reason: "table needs at least 3 rows".into(),
            });
        }
        Ok(Self::from_pdf(grid, pdf))
    }

    pub fn cache_path(dir: &Path) -> PathBuf {
        dir.join(format!("chord_law_n{}_v1.csv", Self::GRID_POINTS))
    }

    /// Reads the table from `dir` if present, otherwise builds and writes it.
    pub fn load_or_build(dir: &Path, cfg: &QuadratureConfig) -> Result<Self, TableError> {
        let path = Self::cache_path(dir);
        if let Ok(text) = std::fs::read_to_string(&path) {
            match Self::from_csv(&text) {
                Ok(t) => return Ok(t),
                Err(e) => log::warn!("ignoring unreadable chord table cache {}: {e}", path.display()),
            }
        }
        let table = Self::build(cfg)?;
        std::fs::create_dir_all(dir)?;
        std::fs::write(&path, table.to_csv())?;
        Ok(table)
    }

    /// Process-wide table at the default tolerances, cached on disk when
    /// `PLCP_LOAD_CACHE_DIR` is set.
    pub fn standard() -> Arc<ChordLawTable> {
        static TABLE: OnceLock<Arc<ChordLawTable>> = OnceLock::new();
        TABLE
            .get_or_init(|| {
                let cfg = QuadratureConfig::default();
                let table = match std::env::var_os(CACHE_DIR_ENV) {
                    Some(dir) => Self::load_or_build(Path::new(&dir), &cfg).unwrap_or_else(|e| {
                        log::warn!("chord table cache unavailable ({e}); building in memory");
                        Self::build(&cfg).expect("chord law quadrature")
                    }),
                    None => Self::build(&cfg).expect("chord law quadrature"),
                };
                Arc::new(table)
            })
            .clone()
    }
}

/// Chord-length law at a given `lambda_b`, from the scale-free table.
#[derive(Debug, Clone)]
pub struct ChordLaw {
    pub lambda_b: f64,
    table: Arc<ChordLawTable>,
}

impl ChordLaw {
    pub fn new(lambda_b: f64, table: Arc<ChordLawTable>) -> Self {
        Self { lambda_b, table }
    }

    pub fn standard(lambda_b: f64) -> Self {
        Self::new(lambda_b, ChordLawTable::standard())
    }

    pub fn table(&self) -> &ChordLawTable {
        &self.table
    }

    pub fn pdf(&self, c: f64) -> f64 {
        let s = self.lambda_b.sqrt();
        s * self.table.pdf_scaled(s * c)
    }

    pub fn cdf(&self, c: f64) -> f64 {
        self.table.cdf_scaled(self.lambda_b.sqrt() * c)
    }

    pub fn mean(&self) -> f64 {
        self.table.mean / self.lambda_b.sqrt()
    }

    /// `0` followed by the table nodes in chord units. The interpolant is
    /// only piecewise smooth, so integrals over the law should split here.
    pub fn breakpoints(&self) -> Vec<f64> {
        let s = self.lambda_b.sqrt();
        std::iter::once(0.0).chain(self.table.grid.iter().map(|g| g / s)).collect()
    }

    /// Chords beyond this length carry no tabulated mass.
    pub fn support_max(&self) -> f64 {
        self.table.max_scaled() / self.lambda_b.sqrt()
    }
}

/// Every density the load laws need, at one base-station density.
#[derive(Debug, Clone)]
pub struct CellLaws {
    pub shape: CellShapeLaws,
    pub chord: ChordLaw,
}

impl CellLaws {
    pub fn new(lambda_b: f64, table: Arc<ChordLawTable>) -> Self {
        Self {
            shape: CellShapeLaws::new(lambda_b),
            chord: ChordLaw::new(lambda_b, table),
        }
    }

    pub fn standard(lambda_b: f64) -> Self {
        Self::new(lambda_b, ChordLawTable::standard())
    }

    pub fn lambda_b(&self) -> f64 {
        self.shape.lambda_b
    }

    pub fn chord_pdf(&self, c: f64) -> f64 {
        self.chord.pdf(c)
    }

    /// Length-biased chord through a covered point:
    /// `(4 sqrt(lambda_b) / pi) c f_C(c)`.
    pub fn chord_origin_pdf(&self, c: f64) -> f64 {
        4.0 * self.lambda_b().sqrt() / PI * c * self.chord.pdf(c)
    }

    pub fn perimeter_pdf(&self, u: f64) -> f64 {
        self.shape.perimeter_pdf(u)
    }

    pub fn area_pdf(&self, z: f64) -> f64 {
        self.shape.area_pdf(z)
    }

    pub fn area_biased_pdf(&self, z: f64) -> f64 {
        self.shape.area_biased_pdf(z)
    }

    pub fn radius_typical_pdf(&self, r: f64) -> f64 {
        self.shape.radius_typical_pdf(r)
    }

    pub fn radius_zero_pdf(&self, r: f64) -> f64 {
        self.shape.radius_zero_pdf(r)
    }

    /// The four biased densities as one bundle.
    pub fn biased_laws(&self) -> BiasedLaws<'_> {
        BiasedLaws { laws: self }
    }
}

/// `f_{C0}`, `f_{Z'}`, `f_{R_t}` and `f_{R_z}`.
#[derive(Debug, Clone, Copy)]
pub struct BiasedLaws<'a> {
    laws: &'a CellLaws,
}

impl BiasedLaws<'_> {
    pub fn chord_origin(&self, c: f64) -> f64 {
        self.laws.chord_origin_pdf(c)
    }
    pub fn area_zero(&self, z: f64) -> f64 {
        self.laws.area_biased_pdf(z)
    }
    pub fn radius_typical(&self, r: f64) -> f64 {
        self.laws.radius_typical_pdf(r)
    }
    pub fn radius_zero(&self, r: f64) -> f64 {
        self.laws.radius_zero_pdf(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn semi(scale: f64) -> QuadratureConfig {
        QuadratureConfig::default().with_tail_scale(scale)
    }

    #[test]
    fn exponential_special_case() {
        let g = GeneralizedGamma::new(1.0, 1.0, 1.0);
        assert_relative_eq!(g.pdf(0.5), (-0.5f64).exp(), epsilon = 1e-12);
        assert!((g.pdf(0.5) - 0.60653).abs() < 1e-5);
        assert_relative_eq!(g.cdf(0.5), 1.0 - (-0.5f64).exp(), epsilon = 1e-12);
    }

    #[test]
    fn area_fit_normalized_with_unit_mean() {
        let g = GeneralizedGamma::from_fit(AREA_FIT);
        let cfg = semi(1.0);
        let norm = integrate(|x| g.pdf(x), Domain::SemiInfinite(0.0), &cfg).unwrap();
        assert_relative_eq!(norm.value, 1.0, epsilon = 1e-8);
        let mean = integrate(|x| x * g.pdf(x), Domain::SemiInfinite(0.0), &cfg).unwrap();
        assert_relative_eq!(mean.value, 1.0, max_relative = 5e-3);
        assert_relative_eq!(mean.value, g.moment(1.0), max_relative = 1e-8);
    }

    #[test]
    fn shape_laws_normalize_and_scale() {
        for lambda_b in [0.5, 1.0, 4.0] {
            let laws = CellShapeLaws::new(lambda_b);
            let ls = 1.0 / f64::sqrt(lambda_b);
            let cfg = semi(ls);
            let fu = integrate(|u| laws.perimeter_pdf(u), Domain::SemiInfinite(0.0), &cfg).unwrap();
            assert_relative_eq!(fu.value, 1.0, epsilon = 1e-6);
            let eu = integrate(|u| u * laws.perimeter_pdf(u), Domain::SemiInfinite(0.0), &cfg).unwrap();
            assert_relative_eq!(eu.value, 4.0 * ls, max_relative = 0.01);
            let cfg_a = semi(ls * ls);
            let fz = integrate(|z| laws.area_pdf(z), Domain::SemiInfinite(0.0), &cfg_a).unwrap();
            assert_relative_eq!(fz.value, 1.0, epsilon = 1e-6);
            let fzb = integrate(|z| laws.area_biased_pdf(z), Domain::SemiInfinite(0.0), &cfg_a).unwrap();
            assert_relative_eq!(fzb.value, 1.0, max_relative = 5e-3);
            let frt = integrate(|r| laws.radius_typical_pdf(r), Domain::SemiInfinite(0.0), &cfg).unwrap();
            assert_relative_eq!(frt.value, 1.0, epsilon = 1e-6);
            let frz = integrate(|r| laws.radius_zero_pdf(r), Domain::SemiInfinite(0.0), &cfg).unwrap();
            assert_relative_eq!(frz.value, 1.0, max_relative = 2e-3);
            // scale invariance against the unit-density law
            let unit = CellShapeLaws::new(1.0);
            let s = lambda_b.sqrt();
            for x in [0.3, 1.0, 2.2] {
                assert_relative_eq!(laws.perimeter_pdf(x / s), s * unit.perimeter_pdf(x), max_relative = 1e-12);
                assert_relative_eq!(laws.area_pdf(x / lambda_b), lambda_b * unit.area_pdf(x), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn perturbed_kernel_breaks_normalization() {
        let g = GeneralizedGamma::from_fit(PERIMETER_FIT).with_perturbed_kernel(1.05);
        let norm = integrate(|x| g.pdf(x), Domain::SemiInfinite(0.0), &semi(1.0)).unwrap();
        assert!((norm.value - 1.0).abs() > 1e-2);
    }

    #[test]
    fn kernel_derivatives_match_finite_differences() {
        let h = 1e-5;
        for &(tau, alpha, c) in &[
            (0.7, 1.1, 0.9),
            (1.3, 0.2, 0.4),
            (0.2, 2.8, 1.7),
            (2.5, 1.6, 0.05),
            (0.9, 0.01, 0.85),
        ] {
            let k = chord_kernel(tau, alpha, c);
            let kp = chord_kernel(tau, alpha, c + h).k;
            let km = chord_kernel(tau, alpha, c - h).k;
            let d1 = (kp - km) / (2.0 * h);
            let d2 = (kp - 2.0 * k.k + km) / (h * h);
            assert_relative_eq!(k.dk, d1, max_relative = 1e-6, epsilon = 1e-8);
            assert_relative_eq!(k.d2k, d2, max_relative = 1e-4, epsilon = 1e-4);
        }
    }

    #[test]
    fn kernel_is_union_of_two_discs() {
        // nucleus straight above the midpoint: equal radii, symmetric lens
        let c = 1.0;
        let tau = 1.0;
        let alpha = PI / 3.0; // equilateral: nucleus at distance 1 from both ends
        let k = chord_kernel(tau, alpha, c).k;
        // two unit discs with centres 1 apart: union = 2 pi - lens
        let lens = 2.0 * (0.5f64).acos() - 0.5 * 3f64.sqrt();
        assert_relative_eq!(k, 2.0 * PI - lens, max_relative = 1e-12);
    }

    #[test]
    fn chord_pdf_scale_law() {
        let cfg = QuadratureConfig::default();
        for c in [0.3, 0.9] {
            let lambda_b: f64 = 4.0;
            let direct = chord_pdf(lambda_b, c, &cfg).unwrap();
            let scaled = lambda_b.sqrt() * chord_pdf(1.0, lambda_b.sqrt() * c, &cfg).unwrap();
            assert_relative_eq!(direct, scaled, max_relative = 1e-6);
        }
    }

    #[test]
    fn pchip_reproduces_linear_data() {
        let x: Vec<f64> = (0..10).map(|i| i as f64 * 0.5).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let p = Pchip::new(x, y);
        for t in [0.1, 1.33, 4.4] {
            assert_relative_eq!(p.eval(t), 2.0 * t + 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn table_from_known_density() {
        // exponential density on a log grid: cdf and mean should match
        let grid = ChordLawTable::log_grid(400, 1e-3, 30.0);
        let pdf: Vec<f64> = grid.iter().map(|c| (-c).exp()).collect();
        let t = ChordLawTable::from_pdf(grid, pdf);
        assert_relative_eq!(t.total_mass(), 1.0, epsilon = 1e-6);
        assert_relative_eq!(t.mean, 1.0, epsilon = 1e-5);
        assert_relative_eq!(t.cdf_scaled(1.0), 1.0 - (-1.0f64).exp(), epsilon = 1e-6);
        let back = ChordLawTable::from_csv(&t.to_csv()).unwrap();
        assert_eq!(back.grid, t.grid);
        assert_eq!(back.pdf_values, t.pdf_values);
    }

    #[test]
    fn csv_errors() {
        assert!(ChordLawTable::from_csv("nope\n").is_err());
        assert!(ChordLawTable::from_csv("c_scaled,pdf,cdf\n1,2\n").is_err());
        assert!(ChordLawTable::from_csv("c_scaled,pdf,cdf\n1,0.1,0\n0.5,0.1,0\n2,0.1,0\n").is_err());
    }
}
