//! Monte-Carlo estimators for the load, chord and coverage laws.
//!
//! Replication `i` draws from stream `seed.stream_id + i` of `seed.seed`, so
//! a report depends only on `(params, n, seed)` and not on how rayon
//! schedules the work. Results are collected in replication order.

use std::io::{self, Write};

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coverage::RateQuery;
use crate::geometry::{Line, Point2};
use crate::load::Pmf;
use crate::processes::{poisson_count, sample_palm_plcp_line, sample_plp_disc, sample_ppp_disc, NetworkParams, RngSeed};
use crate::tessellation::{typical_cell, zero_cell, zero_cell_from_points, CellSample, Window};

/// Interference window radius in units of `1 / sqrt(lambda_b)`.
pub const INTERFERENCE_WINDOW: f64 = 15.0;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    pub window: Window,
    /// Keep every chord length (per intersecting line).
    pub keep_chords: bool,
}

/// One kept replication.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Replication {
    pub index: u64,
    pub load: u64,
    /// Total road length inside the cell.
    pub road_length: f64,
    pub sir: Option<f64>,
    pub rate_bps: Option<f64>,
}

impl Replication {
    pub fn sir_db(&self) -> Option<f64> {
        self.sir.map(|s| 10.0 * s.log10())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub n_replications: u64,
    pub n_discarded_truncated: u64,
    pub empirical_pmf: Pmf,
    pub mean: f64,
    pub variance: f64,
    pub chord_samples: Option<Vec<f64>>,
    pub sir_rate_samples: Option<Vec<f64>>,
    pub seed: RngSeed,
    pub records: Vec<Replication>,
}

impl SimReport {
    fn from_records(n: u64, seed: RngSeed, outcomes: Vec<Outcome>, keep_chords: bool) -> Self {
        let mut discarded = 0;
        let mut records = Vec::with_capacity(outcomes.len());
        let mut chords = keep_chords.then(Vec::new);
        for o in outcomes {
            match o {
                Outcome::Truncated => discarded += 1,
                Outcome::Kept(rec, cs) => {
                    if let Some(all) = chords.as_mut() {
                        all.extend(cs);
                    }
                    records.push(rec);
                }
            }
        }
        if discarded > 0 {
            log::info!("discarded {discarded} of {n} truncated replications");
        }
        let loads: Vec<u64> = records.iter().map(|r| r.load).collect();
        let xs: Vec<f64> = loads.iter().map(|&l| l as f64).collect();
        let rates: Vec<f64> = records.iter().filter_map(|r| r.rate_bps).collect();
        Self {
            n_replications: n,
            n_discarded_truncated: discarded,
            empirical_pmf: Pmf::from_samples(&loads),
            mean: crate::stats::mean(&xs),
            variance: crate::stats::variance(&xs),
            chord_samples: chords,
            sir_rate_samples: (!rates.is_empty()).then_some(rates),
            seed,
            records,
        }
    }

    pub fn road_lengths(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.road_length).collect()
    }

    /// Fraction of kept replications whose rate exceeds `t`.
    pub fn rate_coverage(&self, t: f64) -> Option<f64> {
        let rates = self.sir_rate_samples.as_ref()?;
        Some(rates.iter().filter(|&&r| r > t).count() as f64 / rates.len() as f64)
    }

    /// Fraction of kept replications with SIR above `beta`, ignoring load.
    pub fn sir_coverage(&self, beta: f64) -> Option<f64> {
        let sirs: Vec<f64> = self.records.iter().filter_map(|r| r.sir).collect();
        if sirs.is_empty() {
            return None;
        }
        Some(sirs.iter().filter(|&&s| s > beta).count() as f64 / sirs.len() as f64)
    }

    /// CSV `replication,load`, or `replication,sir_db,load,rate_bps` for
    /// coverage runs.
    pub fn write_raw_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        if self.sir_rate_samples.is_some() {
            writeln!(out, "replication,sir_db,load,rate_bps")?;
            for r in &self.records {
                writeln!(
                    out,
                    "{},{},{},{}",
                    r.index,
                    r.sir_db().unwrap_or(f64::NAN),
                    r.load,
                    r.rate_bps.unwrap_or(f64::NAN)
                )?;
            }
        } else {
            writeln!(out, "replication,load")?;
            for r in &self.records {
                writeln!(out, "{},{}", r.index, r.load)?;
            }
        }
        Ok(())
    }
}

enum Outcome {
    Truncated,
    Kept(Replication, Vec<f64>),
}

fn replication_seed(seed: RngSeed, i: u64) -> RngSeed {
    seed.stream(seed.stream_id.wrapping_add(i))
}

/// Chords of `lines` through the cell and the users drawn on them.
fn users_on_roads<R: Rng + ?Sized>(
    cell: &CellSample,
    lines: &[Line],
    lambda_v: f64,
    rng: &mut R,
) -> (u64, f64, Vec<f64>) {
    let mut users = 0;
    let mut total = 0.0;
    let mut chords = Vec::new();
    for line in lines {
        let c = cell.cell.chord_length(line);
        if c > 0.0 {
            users += poisson_count(lambda_v * c, rng);
            total += c;
            chords.push(c);
        }
    }
    (users, total, chords)
}

/// Road lines that can hit the cell: the PLP over the smallest
/// origin-centred disc containing it.
fn roads_for<R: Rng + ?Sized>(cell: &CellSample, params: &NetworkParams, rng: &mut R) -> Vec<Line> {
    let reach = cell.cell.max_distance_from(Point2::ORIGIN);
    sample_plp_disc(params, reach, rng)
}

fn run<F>(n: u64, seed: RngSeed, keep_chords: bool, rep: F) -> SimReport
where
    F: Fn(u64, &mut rand_chacha::ChaCha8Rng) -> Outcome + Sync,
{
    let outcomes: Vec<Outcome> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = replication_seed(seed, i).rng();
            rep(i, &mut rng)
        })
        .collect();
    SimReport::from_records(n, seed, outcomes, keep_chords)
}

pub fn simulate_typical_load_with(params: &NetworkParams, n: u64, seed: RngSeed, opts: &SimOptions) -> SimReport {
    run(n, seed, opts.keep_chords, |i, rng| {
        let cell = typical_cell(params, &opts.window, rng);
        if cell.truncated {
            return Outcome::Truncated;
        }
        let lines = roads_for(&cell, params, rng);
        let (load, w, chords) = users_on_roads(&cell, &lines, params.lambda_v, rng);
        Outcome::Kept(
            Replication {
                index: i,
                load,
                road_length: w,
                sir: None,
                rate_bps: None,
            },
            chords,
        )
    })
}

/// Users in the typical cell: Voronoi cell of a base station at the origin,
/// roads from the PLP, Poisson users on each chord.
pub fn simulate_typical_load(params: &NetworkParams, n: u64, seed: RngSeed) -> SimReport {
    simulate_typical_load_with(params, n, seed, &SimOptions::default())
}

pub fn simulate_tagged_load_with(params: &NetworkParams, n: u64, seed: RngSeed, opts: &SimOptions) -> SimReport {
    run(n, seed, opts.keep_chords, |i, rng| {
        let cell = zero_cell(params, &opts.window, rng);
        if cell.truncated {
            return Outcome::Truncated;
        }
        let (load, w, chords) = tagged_users(&cell, params, rng);
        Outcome::Kept(
            Replication {
                index: i,
                load,
                road_length: w,
                sir: None,
                rate_bps: None,
            },
            chords,
        )
    })
}

/// Users in the zero cell under the Palm view of a vehicle at the origin:
/// the PLP plus a road through the origin, plus the vehicle itself.
fn tagged_users<R: Rng + ?Sized>(cell: &CellSample, params: &NetworkParams, rng: &mut R) -> (u64, f64, Vec<f64>) {
    let mut lines = roads_for(cell, params, rng);
    lines.push(sample_palm_plcp_line(rng));
    let (users, w, chords) = users_on_roads(cell, &lines, params.lambda_v, rng);
    (users + 1, w, chords)
}

/// Load of the base station serving a typical vehicle, counting it.
pub fn simulate_tagged_load(params: &NetworkParams, n: u64, seed: RngSeed) -> SimReport {
    simulate_tagged_load_with(params, n, seed, &SimOptions::default())
}

/// Rate of a typical vehicle: nearest-station association, unit-mean
/// exponential fading on every link, interference from all other stations
/// within the interference window, and the load of the same replication's
/// zero cell. The zero cell is cut from the same base-station sample.
pub fn simulate_rate_coverage(params: &NetworkParams, query: &RateQuery, n: u64, seed: RngSeed) -> SimReport {
    let window = Window {
        k: INTERFERENCE_WINDOW,
        ..Window::default()
    };
    let alpha = query.pathloss_alpha;
    run(n, seed, false, |i, rng| {
        let radius = window.radius(params);
        let pts = loop {
            let pts = sample_ppp_disc(params.lambda_b, radius, Point2::ORIGIN, rng);
            if !pts.is_empty() {
                break pts;
            }
        };
        let cell = zero_cell_from_points(&pts, params, &window).expect("non-empty sample");
        if cell.truncated {
            return Outcome::Truncated;
        }
        let mut signal = 0.0;
        let mut interference = 0.0;
        for p in &pts {
            let h: f64 = Exp1.sample(rng);
            let g = h * p.norm().powf(-alpha);
            if *p == cell.nucleus {
                signal = g;
            } else {
                interference += g;
            }
        }
        let sir = if interference > 0.0 {
            signal / interference
        } else {
            f64::INFINITY
        };
        let (load, w, _) = tagged_users(&cell, params, rng);
        let rate = query.bandwidth_b / load as f64 * sir.ln_1p() / std::f64::consts::LN_2;
        Outcome::Kept(
            Replication {
                index: i,
                load,
                road_length: w,
                sir: Some(sir),
                rate_bps: Some(rate),
            },
            Vec::new(),
        )
    })
}

/// Shape and road statistics of one simulated cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub area: f64,
    pub perimeter: f64,
    pub chords: Vec<f64>,
    pub truncated: bool,
}

impl CellStats {
    pub fn road_length(&self) -> f64 {
        self.chords.iter().sum()
    }
}

/// Area, perimeter and road chords of `n` typical (or zero) cells.
pub fn simulate_cells(params: &NetworkParams, n: u64, seed: RngSeed, zero: bool, window: &Window) -> Vec<CellStats> {
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = replication_seed(seed, i).rng();
            let cell = if zero {
                zero_cell(params, window, &mut rng)
            } else {
                typical_cell(params, window, &mut rng)
            };
            let lines = roads_for(&cell, params, &mut rng);
            let chords = crate::tessellation::cell_chords(&cell, &lines);
            CellStats {
                area: cell.cell.area(),
                perimeter: cell.cell.perimeter(),
                chords,
                truncated: cell.truncated,
            }
        })
        .collect()
}
