//! Command-line front end: analytic and simulated load tables, rate
//! coverage, and the validation suite.
//!
//! Units: lengths km, base-station density km^-2, road density km^-1,
//! vehicle density per road km^-1, bandwidth Hz, rates bits/s.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::coverage::{coverage_probability, rate_coverage_with_pmf, CoverageError, RateQuery};
use crate::laws::CellLaws;
use crate::load::{LoadError, LoadModel, Pmf, TypicalMethod, DEFAULT_M_MAX};
use crate::montecarlo::{
    simulate_cells, simulate_rate_coverage, simulate_tagged_load, simulate_typical_load, SimReport,
};
use crate::numerics::{integrate, Domain, QuadratureConfig, QuadratureError};
use crate::processes::{NetworkParams, ParamError, RngSeed};
use crate::stats::ks_statistic;
use crate::tessellation::Window;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Tail mass above which the CLI warns that `--m-max` is too small.
pub const TAIL_WARN: f64 = 1e-4;

const DEFAULT_SEED: u64 = 7;
const DEFAULT_VALIDATE_SAMPLES: u64 = 100_000;
const DEFAULT_THRESHOLDS: [f64; 6] = [0.0, 1e5, 3e5, 5e5, 1e6, 2e6];

#[derive(Debug, Parser)]
#[command(
    name = "plcp-load",
    version,
    about = "Load of base stations serving vehicular users: analytic PMFs, Monte-Carlo checks and rate coverage"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load PMF of the typical base station.
    PmfTypical {
        #[command(flatten)]
        run: RunArgs,
        /// Also evaluate the perimeter-mixing law (p_analytic_exact).
        #[arg(long)]
        exact: bool,
    },
    /// Load PMF of the base station serving a typical vehicle.
    PmfTagged {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Rate coverage of a typical vehicle at the given thresholds.
    RateCoverage {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Runs the density, moment, chord-law, PMF and coverage checks.
    Validate {
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// JSON file with run settings; flags given on the command line win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Base-station density (km^-2).
    #[arg(long)]
    pub lambda_b: Option<f64>,
    /// Road density, mean road length per unit area (km^-1).
    #[arg(long)]
    pub mu_l: Option<f64>,
    /// Vehicle density on each road (km^-1).
    #[arg(long)]
    pub lambda_v: Option<f64>,
    /// Path-loss exponent (> 2).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Bandwidth (Hz).
    #[arg(long)]
    pub bandwidth: Option<f64>,
    /// Largest load value tabulated.
    #[arg(long)]
    pub m_max: Option<usize>,
    /// Monte-Carlo replications; 0 skips the simulation.
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Exit with status 1 if an analytic-vs-simulation check fails.
    #[arg(long)]
    pub validate: bool,
    /// Rate thresholds T (bits/s), comma separated.
    #[arg(long, value_delimiter = ',')]
    pub thresholds: Option<Vec<f64>>,
    /// Per-replication CSV dump of the simulation.
    #[arg(long)]
    pub raw_out: Option<PathBuf>,
    /// Test hook: scales the rate of the perimeter-law kernel without
    /// renormalizing it.
    #[arg(long, hide = true)]
    pub perturb_perimeter: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Every setting of a run; also the schema of `--config` files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub lambda_b: f64,
    pub mu_l: f64,
    pub lambda_v: f64,
    pub alpha: f64,
    pub bandwidth: f64,
    pub m_max: usize,
    pub samples: Option<u64>,
    pub seed: u64,
    pub thresholds: Vec<f64>,
    pub format: Format,
    pub output_path: Option<PathBuf>,
    pub tolerances: Tolerances,
}

impl Default for RunConfig {
    fn default() -> Self {
        let p = NetworkParams::default();
        Self {
            lambda_b: p.lambda_b,
            mu_l: p.mu_l,
            lambda_v: p.lambda_v,
            alpha: p.alpha,
            bandwidth: p.bandwidth,
            m_max: DEFAULT_M_MAX,
            samples: None,
            seed: DEFAULT_SEED,
            thresholds: DEFAULT_THRESHOLDS.to_vec(),
            format: Format::Csv,
            output_path: None,
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub tv_typical: f64,
    pub tv_exact_disc: f64,
    pub tv_tagged: f64,
    pub rate_coverage: f64,
    pub normalization: f64,
    pub mean_area: f64,
    pub mean_perimeter: f64,
    pub mean_chord: f64,
    pub mean_load: f64,
    pub chord_ks: f64,
    pub coverage_point: f64,
    pub pgf: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tv_typical: 0.02,
            tv_exact_disc: 0.03,
            tv_tagged: 0.03,
            rate_coverage: 0.03,
            normalization: 2e-3,
            mean_area: 5e-3,
            mean_perimeter: 0.01,
            mean_chord: 5e-3,
            mean_load: 0.02,
            chord_ks: 0.015,
            coverage_point: 1e-3,
            pgf: 1e-3,
        }
    }
}

impl RunConfig {
    pub fn params(&self) -> Result<NetworkParams, ParamError> {
        let p = NetworkParams {
            lambda_b: self.lambda_b,
            mu_l: self.mu_l,
            lambda_v: self.lambda_v,
            alpha: self.alpha,
            bandwidth: self.bandwidth,
            ..NetworkParams::default()
        };
        p.validate()?;
        Ok(p)
    }

    fn from_args(args: &RunArgs) -> Result<Self, CliError> {
        let mut cfg = match &args.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
                serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
            }
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = args.$f.clone() { cfg.$f = v; })* };
        }
        set!(lambda_b, mu_l, lambda_v, alpha, bandwidth, m_max, seed, thresholds, format);
        if args.samples.is_some() {
            cfg.samples = args.samples;
        }
        if args.out.is_some() {
            cfg.output_path = args.out.clone();
        }
        cfg.params()?;
        if cfg.m_max < 1 {
            return Err(CliError::Usage("--m-max must be at least 1".into()));
        }
        if cfg.thresholds.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
            return Err(CliError::Usage("thresholds must be finite and >= 0".into()));
        }
        Ok(cfg)
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),
}

impl From<ParamError> for CliError {
    fn from(e: ParamError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<LoadError> for CliError {
    fn from(e: LoadError) -> Self {
        match e {
            LoadError::Params(p) => p.into(),
            LoadError::Order { .. } => CliError::Usage(e.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<QuadratureError> for CliError {
    fn from(e: QuadratureError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<CoverageError> for CliError {
    fn from(e: CoverageError) -> Self {
        match e {
            CoverageError::Query(q) => CliError::Usage(q),
            CoverageError::Load(l) => l.into(),
            CoverageError::Quadrature(q) => q.into(),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Numerical(_) | CliError::Io(_) => EXIT_NUMERICAL,
        }
    }
}

/// One named check with its measured value and tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `measured <= tolerance`.
    pub fn at_most(name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            tolerance,
            pass: measured <= tolerance,
        }
    }
}

/// A rendered result: metadata, columns, rows and checks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub params: NetworkParams,
    pub seed: u64,
    pub samples: u64,
    pub m_max: usize,
    pub tail_mass: Option<f64>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    pub checks: Vec<Check>,
}

impl Table {
    fn new(command: &str, cfg: &RunConfig, params: NetworkParams, samples: u64) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            params,
            seed: cfg.seed,
            samples,
            m_max: cfg.m_max,
            tail_mass: None,
            columns: Vec::new(),
            rows: Vec::new(),
            checks: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(self).expect("serializable table");
                s.push('\n');
                s
            }
            Format::Csv => self.to_csv(),
        }
    }

    fn to_csv(&self) -> String {
        let p = &self.params;
        let mut s = String::new();
        let _ = writeln!(s, "# tool: {} {}", self.tool, self.version);
        let _ = writeln!(s, "# command: {}", self.command);
        let _ = writeln!(
            s,
            "# params: lambda_b={} mu_l={} lambda_v={} alpha={} bandwidth={}",
            p.lambda_b, p.mu_l, p.lambda_v, p.alpha, p.bandwidth
        );
        let _ = writeln!(s, "# seed: {} samples: {} m_max: {}", self.seed, self.samples, self.m_max);
        if let Some(t) = self.tail_mass {
            let _ = writeln!(s, "# tail_mass: {}", num(t));
        }
        for c in &self.checks {
            let _ = writeln!(
                s,
                "# check: {} measured={} tolerance={} pass={}",
                c.name,
                num(c.measured),
                num(c.tolerance),
                c.pass
            );
        }
        let _ = writeln!(s, "{}", self.columns.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(csv_cell).collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        s
    }
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

fn num(x: f64) -> Value {
    json!(x)
}

fn warn_tail(tail: f64, what: &str) {
    if tail >= TAIL_WARN {
        log::warn!("{what}: tail mass {tail:.3e} beyond --m-max; raise --m-max");
    }
}

fn model(params: NetworkParams, args: &RunArgs) -> Result<LoadModel, CliError> {
    let mut laws = CellLaws::standard(params.lambda_b);
    if let Some(f) = args.perturb_perimeter {
        laws.shape.perimeter = laws.shape.perimeter.with_perturbed_kernel(f);
    }
    Ok(LoadModel::new(params, laws, QuadratureConfig::default())?)
}

fn dump_raw(report: &SimReport, path: &Option<PathBuf>) -> Result<(), CliError> {
    if let Some(p) = path {
        let mut buf = Vec::new();
        report.write_raw_csv(&mut buf)?;
        fs::write(p, buf)?;
    }
    Ok(())
}

/// Rows `m = 0..=last`, where `last` is the largest `m` with mass in any column.
fn pmf_rows(columns: &[&Pmf]) -> usize {
    let len = columns.iter().map(|p| p.probs.len()).max().unwrap_or(1);
    (0..len)
        .rev()
        .find(|&m| columns.iter().any(|p| p.get(m) > 0.0))
        .unwrap_or(0)
}

pub fn cmd_pmf_typical(args: &RunArgs, exact: bool) -> Result<Table, CliError> {
    let cfg = RunConfig::from_args(args)?;
    let params = cfg.params()?;
    let samples = cfg.samples.unwrap_or(0);
    let m = model(params, args)?;
    let disc = m.pmf_typical(cfg.m_max, TypicalMethod::Disc)?;
    warn_tail(disc.tail_mass, "disc PMF");
    let exact_pmf = if exact {
        let e = m.pmf_typical(cfg.m_max, TypicalMethod::Exact)?;
        warn_tail(e.tail_mass, "exact PMF");
        Some(e)
    } else {
        None
    };
    let sim = (samples > 0).then(|| simulate_typical_load(&params, samples, RngSeed::new(cfg.seed, 0)));
    if let Some(r) = &sim {
        dump_raw(r, &args.raw_out)?;
    }

    let mut t = Table::new("pmf-typical", &cfg, params, samples);
    t.tail_mass = Some(disc.tail_mass);
    t.columns.push("m".into());
    if exact_pmf.is_some() {
        t.columns.push("p_analytic_exact".into());
    }
    t.columns.push("p_analytic_disc".into());
    if sim.is_some() {
        t.columns.extend(["p_empirical".into(), "abs_diff".into()]);
    }
    let mut cols: Vec<&Pmf> = vec![&disc];
    cols.extend(exact_pmf.as_ref());
    cols.extend(sim.as_ref().map(|r| &r.empirical_pmf));
    for mm in 0..=pmf_rows(&cols).min(cfg.m_max) {
        let mut row = vec![json!(mm)];
        if let Some(e) = &exact_pmf {
            row.push(num(e.get(mm)));
        }
        row.push(num(disc.get(mm)));
        if let Some(r) = &sim {
            let pe = r.empirical_pmf.get(mm);
            row.extend([num(pe), num((disc.get(mm) - pe).abs())]);
        }
        t.rows.push(row);
    }
    if args.validate {
        if let Some(r) = &sim {
            t.checks.push(Check::at_most(
                "tv_disc_empirical",
                disc.total_variation(&r.empirical_pmf),
                cfg.tolerances.tv_typical,
            ));
        }
        if let Some(e) = &exact_pmf {
            t.checks.push(Check::at_most(
                "tv_exact_disc",
                e.total_variation(&disc),
                cfg.tolerances.tv_exact_disc,
            ));
        }
    }
    Ok(t)
}

pub fn cmd_pmf_tagged(args: &RunArgs) -> Result<Table, CliError> {
    let cfg = RunConfig::from_args(args)?;
    let params = cfg.params()?;
    let samples = cfg.samples.unwrap_or(0);
    let m = model(params, args)?;
    let pmf = m.pmf_tagged(cfg.m_max)?;
    warn_tail(pmf.tail_mass, "tagged PMF");
    let sim = (samples > 0).then(|| simulate_tagged_load(&params, samples, RngSeed::new(cfg.seed, 0)));
    if let Some(r) = &sim {
        dump_raw(r, &args.raw_out)?;
    }

    let mut t = Table::new("pmf-tagged", &cfg, params, samples);
    t.tail_mass = Some(pmf.tail_mass);
    t.columns.extend(["m".into(), "p_analytic_disc".into()]);
    if sim.is_some() {
        t.columns.extend(["p_empirical".into(), "abs_diff".into()]);
    }
    let mut cols: Vec<&Pmf> = vec![&pmf];
    cols.extend(sim.as_ref().map(|r| &r.empirical_pmf));
    for mm in 0..=pmf_rows(&cols).min(cfg.m_max) {
        let mut row = vec![json!(mm), num(pmf.get(mm))];
        if let Some(r) = &sim {
            let pe = r.empirical_pmf.get(mm);
            row.extend([num(pe), num((pmf.get(mm) - pe).abs())]);
        }
        t.rows.push(row);
    }
    if args.validate {
        if let Some(r) = &sim {
            t.checks.push(Check::at_most(
                "tv_tagged_empirical",
                pmf.total_variation(&r.empirical_pmf),
                cfg.tolerances.tv_tagged,
            ));
            t.checks.push(Check::at_most("p0_empirical", r.empirical_pmf.get(0), 0.0));
        }
        t.checks.push(Check::at_most("p0_analytic", pmf.get(0), 0.0));
    }
    Ok(t)
}

pub fn cmd_rate_coverage(args: &RunArgs) -> Result<Table, CliError> {
    let cfg = RunConfig::from_args(args)?;
    let params = cfg.params()?;
    let samples = cfg.samples.unwrap_or(0);
    let m = model(params, args)?;
    let pmf = m.pmf_tagged(cfg.m_max)?;
    warn_tail(pmf.tail_mass, "tagged PMF");
    let query = |t: f64| RateQuery::new(t, &params, cfg.m_max);
    let analytic: Vec<f64> = cfg
        .thresholds
        .iter()
        .map(|&t| Ok(rate_coverage_with_pmf(&pmf, params.lambda_b, &query(t), &m.cfg)?.value))
        .collect::<Result<_, CliError>>()?;

    let mut order: Vec<usize> = (0..analytic.len()).collect();
    order.sort_by(|&a, &b| cfg.thresholds[a].total_cmp(&cfg.thresholds[b]));
    for w in order.windows(2) {
        if analytic[w[1]] > analytic[w[0]] + 1e-9 {
            return Err(CliError::Numerical(format!(
                "rate coverage increases between T = {} and T = {}",
                cfg.thresholds[w[0]], cfg.thresholds[w[1]]
            )));
        }
    }

    let sim = (samples > 0).then(|| simulate_rate_coverage(&params, &query(0.0), samples, RngSeed::new(cfg.seed, 0)));
    if let Some(r) = &sim {
        dump_raw(r, &args.raw_out)?;
    }
    let mut t = Table::new("rate-coverage", &cfg, params, samples);
    t.tail_mass = Some(pmf.tail_mass);
    t.columns.extend(["T_bps".into(), "Rc_analytic".into()]);
    if sim.is_some() {
        t.columns.push("Rc_empirical".into());
    }
    t.columns.push("tail_mass".into());
    for (i, &thr) in cfg.thresholds.iter().enumerate() {
        let mut row = vec![num(thr), num(analytic[i])];
        if let Some(r) = &sim {
            let e = r.rate_coverage(thr).unwrap_or(f64::NAN);
            row.push(num(e));
            if args.validate {
                t.checks.push(Check::at_most(
                    format!("rate_coverage_T{thr}"),
                    (analytic[i] - e).abs(),
                    cfg.tolerances.rate_coverage,
                ));
            }
        }
        row.push(num(pmf.tail_mass));
        t.rows.push(row);
    }
    Ok(t)
}

fn mass(f: impl Fn(f64) -> f64, lo: f64, scale: f64) -> Result<f64, QuadratureError> {
    let cfg = QuadratureConfig::default().with_tail_scale(scale);
    Ok(integrate(f, Domain::SemiInfinite(lo), &cfg)?.value)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// The full check suite. Simulation checks run when `samples > 0`.
pub fn cmd_validate(args: &RunArgs) -> Result<Table, CliError> {
    let cfg = RunConfig::from_args(args)?;
    let params = cfg.params()?;
    let samples = cfg.samples.unwrap_or(DEFAULT_VALIDATE_SAMPLES);
    let tol = cfg.tolerances;
    let m = model(params, args)?;
    let laws = &m.laws;
    let lb = params.lambda_b;
    let ls = params.length_scale();
    let mut checks = Vec::new();

    let chord = laws.chord.table().total_mass();
    let densities: [(&str, f64); 7] = [
        ("norm_chord", chord),
        ("norm_perimeter", mass(|u| laws.perimeter_pdf(u), 0.0, ls)?),
        ("norm_area", mass(|z| laws.area_pdf(z), 0.0, 1.0 / lb)?),
        (
            "norm_chord_origin",
            4.0 * lb.sqrt() / PI * laws.chord.mean(),
        ),
        ("norm_area_biased", mass(|z| laws.area_biased_pdf(z), 0.0, 1.0 / lb)?),
        ("norm_radius_typical", mass(|r| laws.radius_typical_pdf(r), 0.0, ls)?),
        ("norm_radius_zero", mass(|r| laws.radius_zero_pdf(r), 0.0, ls)?),
    ];
    for (name, v) in densities {
        checks.push(Check::at_most(name, (v - 1.0).abs(), tol.normalization));
    }
    let mean_area = mass(|z| z * laws.area_pdf(z), 0.0, 1.0 / lb)?;
    checks.push(Check::at_most("mean_area", rel(mean_area, 1.0 / lb), tol.mean_area));
    let mean_perimeter = mass(|u| u * laws.perimeter_pdf(u), 0.0, ls)?;
    checks.push(Check::at_most("mean_perimeter", rel(mean_perimeter, 4.0 * ls), tol.mean_perimeter));
    checks.push(Check::at_most(
        "mean_chord",
        rel(laws.chord.mean(), PI / 4.0 * ls),
        tol.mean_chord,
    ));
    let qcfg = QuadratureConfig::default();
    checks.push(Check::at_most(
        "coverage_alpha4_beta1",
        (coverage_probability(lb, 4.0, 1.0, &qcfg)? - 1.0 / (1.0 + PI / 4.0)).abs(),
        tol.coverage_point,
    ));

    let disc = m.pmf_typical(cfg.m_max, TypicalMethod::Disc)?;
    let tagged = m.pmf_tagged(cfg.m_max)?;
    let mean_load = params.lambda_v * params.mu_l / lb;
    checks.push(Check::at_most("mean_load_analytic", rel(disc.mean(), mean_load), tol.mean_load));
    for z in [0.25, 0.5, 0.75] {
        checks.push(Check::at_most(
            format!("pgf_typical_z{z}"),
            (disc.pgf(z) - m.pgf_typical(z, TypicalMethod::Disc)?).abs(),
            tol.pgf,
        ));
        checks.push(Check::at_most(
            format!("pgf_tagged_z{z}"),
            (tagged.pgf(z) - m.pgf_tagged(z)?).abs(),
            tol.pgf,
        ));
    }
    checks.push(Check::at_most("p0_tagged_analytic", tagged.get(0), 0.0));

    if samples > 0 {
        let seed = RngSeed::new(cfg.seed, 0);
        let typical = simulate_typical_load(&params, samples, seed);
        checks.push(Check::at_most(
            "tv_typical_disc_empirical",
            disc.total_variation(&typical.empirical_pmf),
            tol.tv_typical,
        ));
        checks.push(Check::at_most("mean_load_empirical", rel(typical.mean, mean_load), tol.mean_load));
        let zero = simulate_tagged_load(&params, samples, seed.stream(1 << 40));
        checks.push(Check::at_most(
            "tv_tagged_empirical",
            tagged.total_variation(&zero.empirical_pmf),
            tol.tv_tagged,
        ));
        checks.push(Check::at_most("p0_tagged_empirical", zero.empirical_pmf.get(0), 0.0));
        let cells = simulate_cells(&params, samples, seed.stream(2 << 40), false, &Window::default());
        let chords: Vec<f64> = cells
            .iter()
            .filter(|c| !c.truncated)
            .flat_map(|c| c.chords.iter().copied())
            .take(samples as usize)
            .collect();
        checks.push(Check::at_most(
            "chord_ks",
            ks_statistic(&chords, |c| laws.chord.cdf(c)),
            tol.chord_ks,
        ));
    }

    let mut t = Table::new("validate", &cfg, params, samples);
    t.columns = ["name", "measured", "tolerance", "pass"].map(String::from).to_vec();
    t.rows = checks
        .iter()
        .map(|c| vec![json!(c.name), num(c.measured), num(c.tolerance), json!(c.pass)])
        .collect();
    t.checks = checks;
    Ok(t)
}

fn write_output(text: &str, path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run_args(cmd: &Command) -> &RunArgs {
    match cmd {
        Command::PmfTypical { run, .. }
        | Command::PmfTagged { run }
        | Command::RateCoverage { run }
        | Command::Validate { run } => run,
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let args = run_args(&cli.command).clone();
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread pool already initialized: {e}");
        }
    }
    let result = match &cli.command {
        Command::PmfTypical { run, exact } => cmd_pmf_typical(run, *exact),
        Command::PmfTagged { run } => cmd_pmf_tagged(run),
        Command::RateCoverage { run } => cmd_rate_coverage(run),
        Command::Validate { run } => cmd_validate(run),
    };
    let table = match result {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let cfg = match RunConfig::from_args(&args) {
        Ok(c) => c,
        Err(e) => return e.exit_code(),
    };
    if let Err(e) = write_output(&table.render(cfg.format), cfg.output_path.as_deref()) {
        eprintln!("error: {e}");
        return e.exit_code();
    }
    for c in table.checks.iter().filter(|c| !c.pass) {
        eprintln!("check failed: {} measured {} > tolerance {}", c.name, c.measured, c.tolerance);
    }
    if table.passed() {
        EXIT_OK
    } else {
        EXIT_VALIDATION
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("plcp-load").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn flags_override_defaults() {
        let cli = parse(&["pmf-tagged", "--lambda-b", "2", "--thresholds", "1,2,3", "--format", "json"]);
        let cfg = RunConfig::from_args(run_args(&cli.command)).unwrap();
        assert_eq!(cfg.lambda_b, 2.0);
        assert_eq!(cfg.mu_l, 5.0);
        assert_eq!(cfg.thresholds, vec![1.0, 2.0, 3.0]);
        assert_eq!(cfg.format, Format::Json);
    }

    #[test]
    fn bad_params_are_usage_errors() {
        let cli = parse(&["pmf-typical", "--alpha", "1.5"]);
        let err = RunConfig::from_args(run_args(&cli.command)).unwrap_err();
        assert_eq!(err.exit_code(), EXIT_USAGE);
    }

    #[test]
    fn config_rejects_unknown_keys() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"lambda_b": 1.0, "colour": 3}"#).is_err());
        let c: RunConfig = serde_json::from_str(r#"{"mu_l": 3.0}"#).unwrap();
        assert_eq!(c.mu_l, 3.0);
        assert_eq!(c.lambda_v, 2.0);
    }

    #[test]
    fn csv_cells() {
        assert_eq!(csv_cell(&json!(3)), "3");
        assert_eq!(csv_cell(&json!(0.5)), "0.5");
        assert_eq!(csv_cell(&json!(true)), "true");
        assert_eq!(csv_cell(&json!("a")), "a");
    }
}
