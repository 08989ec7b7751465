//! The typical Voronoi cell (base station at the origin, Palm view) and the
//! zero cell (cell covering the origin) built by bisector clipping.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{ConvexPolygon, HalfPlane, Line, Point2};
use crate::processes::{sample_ppp_disc, NetworkParams};

/// Simulation window in units of `1 / sqrt(lambda_b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    /// Window radius multiplier.
    pub k: f64,
    /// Guard-zone width multiplier; cells reaching into it are truncated.
    pub guard: f64,
}

impl Default for Window {
    fn default() -> Self {
        Self { k: 12.0, guard: 2.0 }
    }
}

impl Window {
    pub fn radius(&self, params: &NetworkParams) -> f64 {
        self.k * params.length_scale()
    }

    pub fn safe_radius(&self, params: &NetworkParams) -> f64 {
        (self.k - self.guard) * params.length_scale()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CellKind {
    Typical,
    Zero,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellSample {
    pub cell: ConvexPolygon,
    pub nucleus: Point2,
    pub kind: CellKind,
    /// The cell reaches the window's guard zone and may be clipped by the
    /// window instead of by neighbors.
    pub truncated: bool,
    /// Empty base-station draws that had to be repeated (zero cell only).
    pub empty_resamples: u32,
}

/// Voronoi cell of `nucleus` among `others`, clipped to `bound`.
///
/// `others` must be sorted by distance from `nucleus`. Clipping stops once
/// the next point is farther than twice the cell's current circumradius,
/// since its bisector can no longer reach the cell.
pub fn voronoi_cell(nucleus: Point2, others: &[Point2], bound: ConvexPolygon) -> ConvexPolygon {
    let mut cell = bound;
    let mut reach = cell.max_distance_from(nucleus);
    for &p in others {
        let d = p.dist(nucleus);
        if d == 0.0 {
            continue;
        }
        if d >= 2.0 * reach {
            break;
        }
        if let Some(next) = cell.clip(&HalfPlane::bisector(nucleus, p)) {
            reach = next.max_distance_from(nucleus);
            cell = next;
        }
    }
    cell
}

fn sort_by_distance(points: &mut [Point2], from: Point2) {
    points.sort_by(|a, b| a.dist(from).total_cmp(&b.dist(from)));
}

fn window_square(params: &NetworkParams, window: &Window) -> ConvexPolygon {
    ConvexPolygon::square(Point2::ORIGIN, window.radius(params)).expect("positive window")
}

fn is_truncated(cell: &ConvexPolygon, params: &NetworkParams, window: &Window) -> bool {
    cell.max_distance_from(Point2::ORIGIN) >= window.safe_radius(params)
}

/// Typical cell: a base station at the origin added to the PPP sampled in
/// the window disc.
pub fn typical_cell<R: Rng + ?Sized>(params: &NetworkParams, window: &Window, rng: &mut R) -> CellSample {
    let mut pts = sample_ppp_disc(params.lambda_b, window.radius(params), Point2::ORIGIN, rng);
    sort_by_distance(&mut pts, Point2::ORIGIN);
    let cell = voronoi_cell(Point2::ORIGIN, &pts, window_square(params, window));
    let truncated = is_truncated(&cell, params, window);
    CellSample {
        cell,
        nucleus: Point2::ORIGIN,
        kind: CellKind::Typical,
        truncated,
        empty_resamples: 0,
    }
}

/// Zero cell from an existing base-station sample of the window disc.
/// Returns `None` for an empty sample.
pub fn zero_cell_from_points(points: &[Point2], params: &NetworkParams, window: &Window) -> Option<CellSample> {
    let nearest = points
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.norm_sq().total_cmp(&b.1.norm_sq()))?
        .0;
    let nucleus = points[nearest];
    let mut others: Vec<Point2> = points
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != nearest)
        .map(|(_, p)| *p)
        .collect();
    sort_by_distance(&mut others, nucleus);
    let cell = voronoi_cell(nucleus, &others, window_square(params, window));
    let truncated = is_truncated(&cell, params, window);
    Some(CellSample {
        cell,
        nucleus,
        kind: CellKind::Zero,
        truncated,
        empty_resamples: 0,
    })
}

/// Zero cell: the cell of the base station nearest to the origin.
pub fn zero_cell<R: Rng + ?Sized>(params: &NetworkParams, window: &Window, rng: &mut R) -> CellSample {
    let mut empty = 0u32;
    loop {
        let pts = sample_ppp_disc(params.lambda_b, window.radius(params), Point2::ORIGIN, rng);
        if let Some(mut sample) = zero_cell_from_points(&pts, params, window) {
            sample.empty_resamples = empty;
            return sample;
        }
        empty += 1;
    }
}

/// Nonzero chord lengths of `lines` through the cell.
pub fn cell_chords(cell: &CellSample, lines: &[Line]) -> Vec<f64> {
    lines
        .iter()
        .map(|l| cell.cell.chord_length(l))
        .filter(|&c| c > 0.0)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::processes::RngSeed;

    #[test]
    fn cell_of_square_lattice_point() {
        let mut others = vec![
            Point2::new(1.0, 0.0),
            Point2::new(-1.0, 0.0),
            Point2::new(0.0, 1.0),
            Point2::new(0.0, -1.0),
            Point2::new(1.0, 1.0),
            Point2::new(5.0, 5.0),
        ];
        sort_by_distance(&mut others, Point2::ORIGIN);
        let bound = ConvexPolygon::square(Point2::ORIGIN, 10.0).unwrap();
        let cell = voronoi_cell(Point2::ORIGIN, &others, bound);
        assert!((cell.area() - 1.0).abs() < 1e-12);
        assert!((cell.perimeter() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn early_stop_matches_full_clip() {
        let params = NetworkParams::default();
        let mut rng = RngSeed::new(3, 0).rng();
        for _ in 0..50 {
            let mut pts = sample_ppp_disc(1.0, 8.0, Point2::ORIGIN, &mut rng);
            sort_by_distance(&mut pts, Point2::ORIGIN);
            let bound = window_square(&params, &Window { k: 8.0, guard: 2.0 });
            let fast = voronoi_cell(Point2::ORIGIN, &pts, bound.clone());
            let mut slow = bound;
            for p in &pts {
                slow = slow.clip(&HalfPlane::bisector(Point2::ORIGIN, *p)).unwrap();
            }
            assert!((fast.area() - slow.area()).abs() < 1e-12);
        }
    }

    #[test]
    fn typical_cells_contain_nucleus() {
        let params = NetworkParams::default();
        let mut rng = RngSeed::new(11, 0).rng();
        for _ in 0..200 {
            let c = typical_cell(&params, &Window::default(), &mut rng);
            assert_eq!(c.nucleus, Point2::ORIGIN);
            assert!(c.cell.contains_strictly(Point2::ORIGIN));
            assert!(!c.truncated);
        }
    }

    #[test]
    fn zero_cells_cover_origin() {
        let params = NetworkParams {
            lambda_b: 3.0,
            ..Default::default()
        };
        let mut rng = RngSeed::new(12, 0).rng();
        for _ in 0..200 {
            let c = zero_cell(&params, &Window::default(), &mut rng);
            assert!(c.cell.contains(Point2::ORIGIN));
            assert!(c.cell.contains_strictly(c.nucleus));
            assert_eq!(c.kind, CellKind::Zero);
        }
    }

    #[test]
    fn tiny_window_flags_truncation() {
        let params = NetworkParams::default();
        let w = Window { k: 2.0, guard: 1.0 };
        let mut rng = RngSeed::new(13, 0).rng();
        let flagged = (0..100).filter(|_| typical_cell(&params, &w, &mut rng).truncated).count();
        assert!(flagged > 10);
    }

    #[test]
    fn zero_cell_needs_points() {
        assert!(zero_cell_from_points(&[], &NetworkParams::default(), &Window::default()).is_none());
    }

    #[test]
    fn no_lines_no_chords() {
        let params = NetworkParams::default();
        let mut rng = RngSeed::new(14, 0).rng();
        let c = typical_cell(&params, &Window::default(), &mut rng);
        assert!(cell_chords(&c, &[]).is_empty());
        let through = Line::new(0.0, 0.3);
        assert_eq!(cell_chords(&c, &[through, Line::new(1e3, 0.0)]).len(), 1);
    }

    #[test]
    fn same_seed_same_cell() {
        let params = NetworkParams::default();
        let a = typical_cell(&params, &Window::default(), &mut RngSeed::new(5, 77).rng());
        let b = typical_cell(&params, &Window::default(), &mut RngSeed::new(5, 77).rng());
        assert_eq!(a, b);
    }
}
