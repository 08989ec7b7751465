//! Network parameters and seeded samplers for the base-station PPP, the
//! Poisson line process, vehicles on roads and the typical road.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{ConvexPolygon, Line, Point2};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("{name} must be {requirement}, got {value}")]
    OutOfRange {
        name: &'static str,
        requirement: &'static str,
        value: f64,
    },
}

/// All intensities and radio constants. Lengths in km, densities per km or
/// per km², bandwidth in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkParams {
    /// Base-station density (km⁻²).
    pub lambda_b: f64,
    /// Road line density: mean road length per unit area (km⁻¹).
    pub mu_l: f64,
    /// Vehicle density along each road (km⁻¹).
    pub lambda_v: f64,
    pub alpha: f64,
    /// Hz.
    pub bandwidth: f64,
    pub tx_power: f64,
}

impl Default for NetworkParams {
    fn default() -> Self {
        Self {
            lambda_b: 1.0,
            mu_l: 5.0,
            lambda_v: 2.0,
            alpha: 4.0,
            bandwidth: 10e6,
            tx_power: 1.0,
        }
    }
}

fn check(name: &'static str, value: f64, ok: bool, requirement: &'static str) -> Result<(), ParamError> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(ParamError::OutOfRange {
            name,
            requirement,
            value,
        })
    }
}

impl NetworkParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        check("lambda_b", self.lambda_b, self.lambda_b > 0.0, "> 0")?;
        check("mu_l", self.mu_l, self.mu_l > 0.0, "> 0")?;
        check("lambda_v", self.lambda_v, self.lambda_v >= 0.0, ">= 0")?;
        check("alpha", self.alpha, self.alpha > 2.0, "> 2")?;
        check("bandwidth", self.bandwidth, self.bandwidth > 0.0, "> 0")?;
        check("tx_power", self.tx_power, self.tx_power > 0.0, "> 0")?;
        Ok(())
    }

    /// Intensity of the line process in representation space, `mu_l / pi`.
    pub fn lambda_l(&self) -> f64 {
        self.mu_l / PI
    }

    /// Natural length unit `1 / sqrt(lambda_b)`.
    pub fn length_scale(&self) -> f64 {
        1.0 / self.lambda_b.sqrt()
    }
}

/// Identifies one reproducible random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSeed {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngSeed {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Same seed, different stream.
    pub fn stream(self, stream_id: u64) -> Self {
        Self { stream_id, ..self }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// Poisson variate; zero for a non-positive mean.
pub fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if !(mean > 0.0) {
        return 0;
    }
    let d = Poisson::new(mean).expect("positive finite mean");
    d.sample(rng) as u64
}

/// Homogeneous PPP restricted to a disc.
pub fn sample_ppp_disc<R: Rng + ?Sized>(density: f64, radius: f64, center: Point2, rng: &mut R) -> Vec<Point2> {
    let n = poisson_count(density * PI * radius * radius, rng);
    (0..n)
        .map(|_| {
            let r = radius * rng.random::<f64>().sqrt();
            let t = TAU * rng.random::<f64>();
            center + Point2::from_polar(r, t)
        })
        .collect()
}

/// Lines of the PLP hitting the disc of radius `radius` about the origin.
pub fn sample_plp_disc<R: Rng + ?Sized>(params: &NetworkParams, radius: f64, rng: &mut R) -> Vec<Line> {
    let n = poisson_count(TAU * params.lambda_l() * radius, rng);
    (0..n)
        .map(|_| {
            let rho = radius * rng.random::<f64>();
            let theta = TAU * rng.random::<f64>();
            Line::new(rho, theta)
        })
        .collect()
}

/// 1D PPP of density `lambda_v` on `line ∩ poly`.
pub fn sample_vehicles_on_chord<R: Rng + ?Sized>(
    line: &Line,
    poly: &ConvexPolygon,
    lambda_v: f64,
    rng: &mut R,
) -> Vec<Point2> {
    let Some((a, b)) = poly.chord_segment(line) else {
        return Vec::new();
    };
    let n = poisson_count(lambda_v * a.dist(b), rng);
    (0..n)
        .map(|_| {
            let t: f64 = rng.random();
            a + (b - a) * t
        })
        .collect()
}

/// The extra road through the origin seen by a typical vehicle.
pub fn sample_palm_plcp_line<R: Rng + ?Sized>(rng: &mut R) -> Line {
    Line {
        rho: 0.0,
        theta: TAU * rng.random::<f64>(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn rng(stream: u64) -> ChaCha8Rng {
        RngSeed::new(42, stream).rng()
    }

    #[test]
    fn params_validation() {
        assert!(NetworkParams::default().validate().is_ok());
        let bad = NetworkParams {
            alpha: 2.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = NetworkParams {
            lambda_b: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let ok = NetworkParams {
            lambda_v: 0.0,
            ..Default::default()
        };
        assert!(ok.validate().is_ok());
        assert_eq!(NetworkParams::default().lambda_l(), 5.0 / PI);
    }

    #[test]
    fn zero_density_is_empty() {
        assert!(sample_ppp_disc(0.0, 10.0, Point2::ORIGIN, &mut rng(0)).is_empty());
    }

    #[test]
    fn ppp_points_inside_disc() {
        let c = Point2::new(3.0, -1.0);
        let pts = sample_ppp_disc(2.0, 4.0, c, &mut rng(1));
        assert!(!pts.is_empty());
        assert!(pts.iter().all(|p| p.dist(c) <= 4.0));
    }

    #[test]
    fn ppp_mean_count() {
        let mut r = rng(2);
        let n = 10_000;
        let mean_expect = PI * 100.0;
        let total: usize = (0..n)
            .map(|_| sample_ppp_disc(1.0, 10.0, Point2::ORIGIN, &mut r).len())
            .sum();
        let mean = total as f64 / n as f64;
        let sigma = (mean_expect / n as f64).sqrt();
        assert!((mean - mean_expect).abs() < 3.0 * sigma, "{mean}");
    }

    #[test]
    fn plp_mean_count() {
        let p = NetworkParams::default();
        let mut r = rng(3);
        let n = 20_000;
        let total: usize = (0..n).map(|_| sample_plp_disc(&p, 2.0, &mut r).len()).sum();
        let mean = total as f64 / n as f64;
        assert!((mean - 20.0).abs() < 3.0 * (20.0 / n as f64).sqrt(), "{mean}");
    }

    #[test]
    fn plp_tiny_disc_is_empty() {
        let p = NetworkParams::default();
        let mut r = rng(4);
        let hits = (0..1000).filter(|_| !sample_plp_disc(&p, 1e-9, &mut r).is_empty()).count();
        assert_eq!(hits, 0);
    }

    #[test]
    fn plp_length_density_matches_mu() {
        // total chord length inside the disc per unit area is mu_l
        let p = NetworkParams::default();
        let radius = 2.0;
        let mut r = rng(5);
        let n = 100_000;
        let mut total = 0.0;
        for _ in 0..n {
            for l in sample_plp_disc(&p, radius, &mut r) {
                total += 2.0 * (radius * radius - l.rho * l.rho).max(0.0).sqrt();
            }
        }
        let density = total / (n as f64 * PI * radius * radius);
        assert_relative_eq!(density, p.mu_l, max_relative = 0.02);
    }

    #[test]
    fn vehicles_on_chord() {
        let sq = ConvexPolygon::rectangle(Point2::new(0.0, 0.0), Point2::new(3.0, 1.0)).unwrap();
        let line = Line::new(0.5, PI / 2.0); // y = 0.5, chord 3 km
        let mut r = rng(6);
        let n = 20_000;
        let mut total = 0usize;
        for _ in 0..n {
            let pts = sample_vehicles_on_chord(&line, &sq, 2.0, &mut r);
            for p in &pts {
                assert!(line.distance(*p) < 1e-9);
                assert!(sq.contains(*p));
            }
            total += pts.len();
        }
        let mean = total as f64 / n as f64;
        assert!((mean - 6.0).abs() < 3.0 * (6.0 / n as f64).sqrt(), "{mean}");

        let miss = Line::new(10.0, 0.0);
        assert!(sample_vehicles_on_chord(&miss, &sq, 2.0, &mut r).is_empty());
    }

    #[test]
    fn palm_line_through_origin_uniform_angle() {
        let mut r = rng(7);
        let mut thetas: Vec<f64> = (0..10_000)
            .map(|_| {
                let l = sample_palm_plcp_line(&mut r);
                assert!(l.distance(Point2::ORIGIN) <= 1e-12);
                l.theta
            })
            .collect();
        thetas.sort_by(f64::total_cmp);
        let d = crate::stats::ks_statistic_sorted(&thetas, |t| t / TAU);
        let p = crate::stats::kolmogorov_p_value(d, thetas.len());
        assert!(p > 0.01, "KS p = {p}");

        let cell = ConvexPolygon::regular(6, 1.0, Point2::ORIGIN).unwrap();
        assert!(cell.chord_length(&sample_palm_plcp_line(&mut r)) > 0.0);
    }

    #[test]
    fn streams_reproducible_and_distinct() {
        let a: Vec<f64> = (0..5).map(|_| RngSeed::new(1, 9).rng().random()).collect();
        let b: Vec<f64> = (0..5).map(|_| RngSeed::new(1, 9).rng().random()).collect();
        assert_eq!(a, b);
        let x: f64 = RngSeed::new(1, 9).rng().random();
        let y: f64 = RngSeed::new(1, 10).rng().random();
        assert_ne!(x, y);
    }

    #[test]
    fn superposition_count_moments() {
        let mut r = rng(8);
        let n = 10_000;
        let (d1, d2, radius) = (0.7, 1.1, 3.0);
        let counts: Vec<f64> = (0..n)
            .map(|_| {
                let mut a = sample_ppp_disc(d1, radius, Point2::ORIGIN, &mut r);
                a.extend(sample_ppp_disc(d2, radius, Point2::ORIGIN, &mut r));
                a.len() as f64
            })
            .collect();
        let mean = counts.iter().sum::<f64>() / n as f64;
        let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let expect = (d1 + d2) * PI * radius * radius;
        assert!((mean - expect).abs() < 4.0 * (expect / n as f64).sqrt());
        // Poisson: variance equals mean
        assert_relative_eq!(var, expect, max_relative = 0.05);
    }
}
