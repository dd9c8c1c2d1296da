//! Approximate fixed points by mesh refinement.
//!
//! At each mesh size m the solver path-follows to a fully labeled cell (or to
//! an exactly fixed lattice vertex), takes the cell barycenter as the
//! candidate, and certifies it: the labels pin every coordinate of the
//! anchor vertex to its image within a small multiple of the cell variation
//! ε, so the l1 residual is below 2n(n+1)ε. Since ε shrinks with the mesh for
//! a continuous map, doubling m until the measured sup-norm residual drops
//! under the tolerance must terminate. The per-level candidates form a Cauchy
//! sequence, which `extract_cauchy` summarizes from the trace.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::labeling::{SimplexMap, DEFAULT_TOL_FIX};
use crate::simplex_grid::{exact_barycenter, BaryPoint, LatticeVertex};
use crate::sperner_search::{is_fully_labeled, walk_to_fully_labeled, MapSource, WalkOutcome};

/// Stop once the sup-norm residual at the candidate is at or below this.
pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-6;

/// Give up once the mesh parameter would exceed this.
pub const DEFAULT_M_MAX: u32 = 1 << 23;

/// Relative inflation applied to the cell variation so that bound checks
/// performed in floating point cannot fail on rounding alone.
const EPS_INFLATION: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct SolverConfig {
    /// Accept a candidate when `‖f(x) - x‖_inf <= residual_tol`.
    pub residual_tol: f64,
    /// First mesh parameter tried; each level doubles it.
    pub m_first: u32,
    /// Refinement budget: levels stop once doubling would pass this.
    pub m_max: u32,
    /// Vertex-labeling tolerance for declaring an exact fixed-point hit.
    pub tol_fix: f64,
}

impl Default for SolverConfig {
    fn default() -> SolverConfig {
        SolverConfig {
            residual_tol: DEFAULT_RESIDUAL_TOL,
            m_first: 2,
            m_max: DEFAULT_M_MAX,
            tol_fix: DEFAULT_TOL_FIX,
        }
    }
}

/// Distance from x to its image, in both norms used by the certificates.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Residual {
    pub linf: f64,
    pub l1: f64,
}

pub fn residual(f: &dyn SimplexMap, x: &BaryPoint) -> Result<Residual> {
    let fx = f.eval(x)?;
    Ok(Residual {
        linf: x.linf_dist(&fx),
        l1: x.l1_dist(&fx),
    })
}

/// Fully labeled cell backing a candidate.
#[derive(Debug, Clone, Serialize)]
pub struct CellWitness {
    pub m: u32,
    pub vertices: Vec<LatticeVertex>,
    pub labels: Vec<u8>,
}

/// An accepted approximate fixed point. `witness` is absent when the point
/// is an exactly fixed lattice vertex found during labeling.
#[derive(Debug, Clone, Serialize)]
pub struct ApproxFixedPoint {
    pub point: BaryPoint,
    pub residual: Residual,
    pub witness: Option<CellWitness>,
}

/// Largest pairwise variation over the cell, in points and in images:
/// `max_{i,j} max(‖x_i - x_j‖_inf, ‖f(x_i) - f(x_j)‖_inf)`, inflated by one
/// part in 10^12 (see `EPS_INFLATION`). This is the ε the certificates use.
pub fn cell_epsilon(points: &[BaryPoint], values: &[BaryPoint]) -> f64 {
    let mut eps = 0.0f64;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            eps = eps.max(points[i].linf_dist(&points[j]));
            eps = eps.max(values[i].linf_dist(&values[j]));
        }
    }
    eps * (1.0 + EPS_INFLATION)
}

/// One certified inequality; `holds` means lhs < rhs.
#[derive(Debug, Clone, Serialize)]
pub struct BoundCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Residual certificate for a fully labeled cell, anchored at its label-0
/// vertex x0 with image y0 = f(x0):
///
/// - `gap_anchor`:      y0_0 < x0_0                      (label 0 at x0)
/// - `coord_lower_i`:   y0_i - 2ε < x0_i        (i != 0) (label i nearby)
/// - `coord_upper_i`:   x0_i < y0_i + 2·max(1, n-1)·ε    (coordinate sums)
/// - `anchor_window`:   |x0_0 - y0_0| < 2nε
/// - `l1_residual`:     Σ_k |x0_k - y0_k| < 2n(n+1)ε
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub epsilon: f64,
    pub anchor: BaryPoint,
    pub checks: Vec<BoundCheck>,
    pub l1_residual: f64,
    pub l1_bound: f64,
}

impl BoundReport {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }

    pub fn first_violation(&self) -> Option<&BoundCheck> {
        self.checks.iter().find(|c| !c.holds)
    }
}

/// Evaluates the certificate inequalities on a fully labeled cell.
pub fn verify_residual_bound(
    f: &dyn SimplexMap,
    m: u32,
    vertices: &[LatticeVertex],
    labels: &[u8],
) -> Result<BoundReport> {
    let n = f.dim();
    if !is_fully_labeled(n, labels) {
        return Err(Error::NotFullyLabeled);
    }
    let points: Vec<BaryPoint> = vertices.iter().map(|v| v.to_bary(m)).collect();
    let values = points
        .iter()
        .map(|p| f.eval(p))
        .collect::<Result<Vec<_>>>()?;
    let eps = cell_epsilon(&points, &values);

    let anchor_pos = labels
        .iter()
        .position(|&l| l == 0)
        .expect("fully labeled cell has a label-0 vertex");
    let x0 = points[anchor_pos].coords();
    let y0 = values[anchor_pos].coords();
    let nf = n as f64;
    let upper_factor = 2.0 * 1.0f64.max(nf - 1.0);

    let mut checks = Vec::with_capacity(2 * n + 3);
    let push = |name: String, lhs: f64, rhs: f64, checks: &mut Vec<BoundCheck>| {
        checks.push(BoundCheck {
            name,
            lhs,
            rhs,
            holds: lhs < rhs,
        });
    };
    push("gap_anchor".into(), y0[0], x0[0], &mut checks);
    for i in 1..=n {
        push(
            format!("coord_lower_{i}"),
            y0[i] - 2.0 * eps,
            x0[i],
            &mut checks,
        );
    }
    for i in 1..=n {
        push(
            format!("coord_upper_{i}"),
            x0[i],
            y0[i] + upper_factor * eps,
            &mut checks,
        );
    }
    push(
        "anchor_window".into(),
        (x0[0] - y0[0]).abs(),
        2.0 * nf * eps,
        &mut checks,
    );
    let l1: f64 = x0.iter().zip(y0).map(|(a, b)| (a - b).abs()).sum();
    let l1_bound = 2.0 * nf * (nf + 1.0) * eps;
    push("l1_residual".into(), l1, l1_bound, &mut checks);

    Ok(BoundReport {
        epsilon: eps,
        anchor: points[anchor_pos].clone(),
        checks,
        l1_residual: l1,
        l1_bound,
    })
}

/// One refinement level of a solve. For an exact hit `epsilon` and
/// `residual_bound` are recorded as 0.
#[derive(Debug, Clone, Serialize)]
pub struct LevelRecord {
    pub m: u32,
    pub mesh: f64,
    pub epsilon: f64,
    pub residual_linf: f64,
    pub residual_bound: f64,
    pub candidate: BaryPoint,
    pub walk_steps: u64,
    pub map_evals: u64,
}

/// Result of a successful solve.
#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub fixpoint: ApproxFixedPoint,
    pub trace: Vec<LevelRecord>,
    pub exact_hit: bool,
    pub bound_reports: Vec<BoundReport>,
}

/// Doubles the mesh until a candidate meets the residual tolerance. Each
/// level walks door-to-door without materializing the grid, certifies the
/// fully labeled cell it reaches, and records the trace. Exactly fixed
/// lattice vertices short-circuit the level.
pub fn solve(f: &dyn SimplexMap, cfg: &SolverConfig) -> Result<SolveReport> {
    if f.dim() == 0 {
        return Err(Error::DegenerateDimension);
    }
    if cfg.residual_tol.is_nan() || cfg.residual_tol <= 0.0 {
        return Err(Error::InvalidInput("residual_tol must be positive".into()));
    }
    if cfg.m_first == 0 || cfg.m_first > cfg.m_max {
        return Err(Error::InvalidInput(format!(
            "mesh schedule must satisfy 1 <= m_first <= m_max (got {} and {})",
            cfg.m_first, cfg.m_max
        )));
    }

    let mut trace = Vec::new();
    let mut bound_reports = Vec::new();
    let mut best: Option<ApproxFixedPoint> = None;
    let mut m = cfg.m_first;
    loop {
        let mut src = MapSource {
            f,
            m,
            tol_fix: cfg.tol_fix,
            evals: 0,
        };
        let (outcome, stats) = walk_to_fully_labeled(&mut src, None)?;
        let evals = src.evals;
        match outcome {
            WalkOutcome::Hit(hit) => {
                let res = residual(f, &hit.point)?;
                trace.push(LevelRecord {
                    m,
                    mesh: 1.0 / f64::from(m),
                    epsilon: 0.0,
                    residual_linf: res.linf,
                    residual_bound: 0.0,
                    candidate: hit.point.clone(),
                    walk_steps: stats.steps,
                    map_evals: evals,
                });
                let fixpoint = ApproxFixedPoint {
                    point: hit.point,
                    residual: res,
                    witness: None,
                };
                return Ok(SolveReport {
                    fixpoint,
                    trace,
                    exact_hit: true,
                    bound_reports,
                });
            }
            WalkOutcome::FullyLabeled(cell) => {
                let vertices = cell.lattice_vertices();
                let report = verify_residual_bound(f, m, &vertices, &cell.labels)?;
                if let Some(bad) = report.first_violation() {
                    return Err(Error::BoundViolated(format!(
                        "{} failed at m={m}: {} !< {}",
                        bad.name, bad.lhs, bad.rhs
                    )));
                }
                let candidate = exact_barycenter(m, &vertices);
                let res = residual(f, &candidate)?;
                trace.push(LevelRecord {
                    m,
                    mesh: 1.0 / f64::from(m),
                    epsilon: report.epsilon,
                    residual_linf: res.linf,
                    residual_bound: report.l1_bound,
                    candidate: candidate.clone(),
                    walk_steps: stats.steps,
                    map_evals: evals,
                });
                bound_reports.push(report);
                let fixpoint = ApproxFixedPoint {
                    point: candidate,
                    residual: res,
                    witness: Some(CellWitness {
                        m,
                        vertices,
                        labels: cell.labels.clone(),
                    }),
                };
                if res.linf <= cfg.residual_tol {
                    return Ok(SolveReport {
                        fixpoint,
                        trace,
                        exact_hit: false,
                        bound_reports,
                    });
                }
                if best.as_ref().is_none_or(|b| res.linf < b.residual.linf) {
                    best = Some(fixpoint);
                }
            }
        }
        match m.checked_mul(2) {
            Some(next) if next <= cfg.m_max => m = next,
            _ => {
                let best = best.expect("at least one level recorded");
                return Err(Error::NotConverged {
                    residual: best.residual.linf,
                    m_final: m,
                    best: Box::new(best),
                });
            }
        }
    }
}

/// Cauchy summary of the solve trace: sup-norm distances between successive
/// candidates, the start of their non-increasing tail, the fitted constant C
/// with d_j <= C / 2^j, and whether the last jump fits inside twice the mesh
/// of its coarser level (the geometric-decay signature). `non_contracting`
/// flags traces whose final jump exceeds that.
#[derive(Debug, Clone, Serialize)]
pub struct CauchyReport {
    pub distances: Vec<f64>,
    pub monotone_tail_start: Option<usize>,
    pub geometric_c: f64,
    pub final_within_mesh: bool,
    pub non_contracting: bool,
}

pub fn extract_cauchy(trace: &[LevelRecord]) -> CauchyReport {
    let distances: Vec<f64> = trace
        .windows(2)
        .map(|w| w[0].candidate.linf_dist(&w[1].candidate))
        .collect();
    let monotone_tail_start = if distances.is_empty() {
        None
    } else {
        let mut start = distances.len() - 1;
        while start > 0 && distances[start - 1] >= distances[start] {
            start -= 1;
        }
        Some(start)
    };
    let geometric_c = distances
        .iter()
        .enumerate()
        .map(|(j, d)| d * f64::powi(2.0, j as i32))
        .fold(0.0, f64::max);
    let final_within_mesh = match distances.last() {
        None => true,
        Some(&d) => d <= 2.0 * trace[trace.len() - 2].mesh,
    };
    CauchyReport {
        distances,
        monotone_tail_start,
        geometric_c,
        final_within_mesh,
        non_contracting: !final_within_mesh,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labeling::{label_grid, GridLabeling};
    use crate::maps::{Constant, Poly1d, Rotation};
    use crate::simplex_grid::build_grid;
    use crate::sperner_search::enumerate_fully_labeled;
    use std::sync::Arc;

    fn constant(coords: Vec<f64>) -> Constant {
        Constant::new(BaryPoint::new(coords).unwrap())
    }

    #[test]
    fn residual_of_rotation_at_corner() {
        let rot = Rotation::new(2);
        let x = BaryPoint::new(vec![1.0, 0.0, 0.0]).unwrap();
        let r = residual(&rot, &x).unwrap();
        assert_eq!(r.linf, 1.0);
        assert_eq!(r.l1, 2.0);
    }

    #[test]
    fn epsilon_of_a_segment_under_a_constant_map() {
        let pts = vec![
            BaryPoint::new(vec![1.0, 0.0]).unwrap(),
            BaryPoint::new(vec![0.5, 0.5]).unwrap(),
        ];
        let c = BaryPoint::new(vec![0.3, 0.7]).unwrap();
        let eps = cell_epsilon(&pts, &[c.clone(), c]);
        assert!((eps - 0.5).abs() < 1e-12);
    }

    #[test]
    fn bound_holds_on_every_fully_labeled_cell() {
        let grid = Arc::new(build_grid(2, 4).unwrap());
        let rot = Rotation::new(2);
        let lg = match label_grid(&grid, &rot, DEFAULT_TOL_FIX).unwrap() {
            GridLabeling::Complete(lg) => lg,
            GridLabeling::Hit(_) => panic!("m=4 has no rotation-fixed vertex"),
        };
        let full = enumerate_fully_labeled(&lg).unwrap().fully_labeled;
        assert!(!full.is_empty());
        for id in full {
            let cell = &grid.cells[id];
            let labels: Vec<u8> = cell
                .vertices
                .iter()
                .map(|v| lg.label_of(v).unwrap())
                .collect();
            let report = verify_residual_bound(&rot, 4, &cell.vertices, &labels).unwrap();
            assert!(
                report.all_hold(),
                "cell {id}: {:?}",
                report.first_violation()
            );
            assert!(report.l1_residual < report.l1_bound);
        }
    }

    #[test]
    fn bound_rejects_non_full_cells() {
        let grid = Arc::new(build_grid(2, 2).unwrap());
        let rot = Rotation::new(2);
        let cell = &grid.cells[0];
        let err = verify_residual_bound(&rot, 2, &cell.vertices, &[0, 0, 1]).unwrap_err();
        assert!(matches!(err, Error::NotFullyLabeled));
    }

    /// Independent root for (1 + t^2)/3 = t by bisection; the sign change on
    /// [0, 1/2] brackets the smaller root of t^2 - 3t + 1.
    fn poly_root_by_bisection() -> f64 {
        let g = |t: f64| (1.0 + t * t) / 3.0 - t;
        let (mut lo, mut hi) = (0.0f64, 0.5f64);
        assert!(g(lo) > 0.0 && g(hi) < 0.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn bisection_oracle_is_frozen() {
        // (3 - sqrt(5)) / 2, the fixed point of t -> (1 + t^2)/3 in [0, 1].
        assert!((poly_root_by_bisection() - 0.381_966_011_250_105_1).abs() < 1e-12);
    }

    #[test]
    fn solve_polynomial_map_matches_bisection() {
        let f = Poly1d::new(vec![1.0 / 3.0, 0.0, 1.0 / 3.0]).unwrap();
        let cfg = SolverConfig {
            residual_tol: 1e-7,
            ..SolverConfig::default()
        };
        let report = solve(&f, &cfg).unwrap();
        assert!(report.fixpoint.residual.linf <= 1e-7);
        // |t - t*| <= residual / (1 - p'(t*)) with p'(t*) ~ 0.255.
        let t = report.fixpoint.point.coords()[1];
        assert!(
            (t - poly_root_by_bisection()).abs() < 1e-6,
            "solver candidate t = {t}"
        );
    }

    #[test]
    fn solve_rotation_converges_to_barycenter() {
        let rot = Rotation::new(2);
        let cfg = SolverConfig {
            residual_tol: 1e-6,
            ..SolverConfig::default()
        };
        let report = solve(&rot, &cfg).unwrap();
        assert!(report.fixpoint.residual.linf <= 1e-6);
        let b = BaryPoint::new(vec![1.0 / 3.0; 3]).unwrap();
        assert!(report.fixpoint.point.linf_dist(&b) <= 2e-6);
        // Trace is one record per level, meshes halving.
        for w in report.trace.windows(2) {
            assert_eq!(w[1].m, 2 * w[0].m);
        }
    }

    #[test]
    fn solve_constant_map_converges_to_target() {
        let c = constant(vec![0.2, 0.3, 0.5]);
        let cfg = SolverConfig {
            residual_tol: 1e-6,
            ..SolverConfig::default()
        };
        let report = solve(&c, &cfg).unwrap();
        assert!(report.fixpoint.point.linf_dist(c.point()) <= 1e-6);
        assert!(!report.exact_hit);
    }

    #[test]
    fn solve_hits_exact_vertex_fixed_points() {
        // At m divisible by 3 the barycenter is a lattice vertex fixed by the
        // rotation, so labeling stops with a hit.
        let rot = Rotation::new(2);
        let cfg = SolverConfig {
            m_first: 3,
            ..SolverConfig::default()
        };
        let report = solve(&rot, &cfg).unwrap();
        assert!(report.exact_hit);
        assert_eq!(report.trace.len(), 1);
        let b = BaryPoint::new(vec![1.0 / 3.0; 3]).unwrap();
        assert_eq!(report.fixpoint.point.linf_dist(&b), 0.0);
        assert!(report.fixpoint.witness.is_none());
    }

    #[test]
    fn solve_one_dimensional_swap_hits_midpoint() {
        let swap = Rotation::new(1);
        let report = solve(&swap, &SolverConfig::default()).unwrap();
        assert!(report.exact_hit, "midpoint is a lattice vertex at even m");
        assert_eq!(report.fixpoint.point.coords(), &[0.5, 0.5]);
    }

    #[test]
    fn solve_reports_budget_exhaustion() {
        let c = constant(vec![0.2, 0.3, 0.5]);
        let cfg = SolverConfig {
            residual_tol: 1e-13,
            m_max: 16,
            ..SolverConfig::default()
        };
        let err = solve(&c, &cfg).unwrap_err();
        match err {
            Error::NotConverged {
                residual,
                m_final,
                best,
            } => {
                assert_eq!(m_final, 16);
                assert!(residual > 1e-13 && residual < 0.2);
                assert!(best.witness.is_some());
            }
            other => panic!("expected NotConverged, got {other}"),
        }
    }

    #[test]
    fn solve_rejects_bad_config() {
        let rot = Rotation::new(2);
        let bad_tol = SolverConfig {
            residual_tol: 0.0,
            ..SolverConfig::default()
        };
        assert!(matches!(solve(&rot, &bad_tol), Err(Error::InvalidInput(_))));
        let bad_schedule = SolverConfig {
            m_first: 64,
            m_max: 4,
            ..SolverConfig::default()
        };
        assert!(matches!(
            solve(&rot, &bad_schedule),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn solve_in_three_dimensions() {
        let c = constant(vec![0.1, 0.2, 0.3, 0.4]);
        let cfg = SolverConfig {
            residual_tol: 1e-3,
            ..SolverConfig::default()
        };
        let report = solve(&c, &cfg).unwrap();
        assert!(report.fixpoint.point.linf_dist(c.point()) <= 1e-3);
    }

    #[test]
    fn walk_cost_grows_linearly_with_mesh() {
        // Path length (and so evaluation count) should scale like the mesh
        // parameter, not the cell count.
        let rot = Rotation::new(2);
        let cfg = SolverConfig {
            residual_tol: 1e-4,
            m_first: 512,
            m_max: 512,
            ..SolverConfig::default()
        };
        match solve(&rot, &cfg) {
            Ok(report) => {
                assert!(
                    report.trace[0].walk_steps < 50 * 512,
                    "{:?}",
                    report.trace[0]
                );
            }
            Err(Error::NotConverged { best, .. }) => {
                assert!(best.residual.linf < 1e-2);
            }
            Err(other) => panic!("unexpected error {other}"),
        }
    }

    fn record(m: u32, coords: Vec<f64>) -> LevelRecord {
        LevelRecord {
            m,
            mesh: 1.0 / f64::from(m),
            epsilon: 0.0,
            residual_linf: 0.0,
            residual_bound: 0.0,
            candidate: BaryPoint::new(coords).unwrap(),
            walk_steps: 0,
            map_evals: 0,
        }
    }

    #[test]
    fn cauchy_summary_of_a_contracting_trace() {
        let trace = vec![
            record(2, vec![0.5, 0.5]),
            record(4, vec![0.4, 0.6]),
            record(8, vec![0.35, 0.65]),
            record(16, vec![0.34, 0.66]),
        ];
        let rep = extract_cauchy(&trace);
        assert_eq!(rep.distances.len(), 3);
        assert!((rep.distances[0] - 0.1).abs() < 1e-12);
        assert_eq!(rep.monotone_tail_start, Some(0));
        assert!((rep.geometric_c - 0.1).abs() < 1e-12);
        // Last jump 0.01 against twice the m=8 mesh (0.25).
        assert!(rep.final_within_mesh);
        assert!(!rep.non_contracting);
    }

    #[test]
    fn cauchy_summary_flags_non_contraction() {
        let trace = vec![
            record(32, vec![0.30, 0.70]),
            record(64, vec![0.40, 0.60]),
            record(128, vec![0.10, 0.90]),
        ];
        let rep = extract_cauchy(&trace);
        assert_eq!(rep.monotone_tail_start, Some(1));
        // Final jump 0.3 exceeds twice the m=64 mesh.
        assert!(!rep.final_within_mesh);
        assert!(rep.non_contracting);
    }

    #[test]
    fn cauchy_summary_of_single_level_trace() {
        let rep = extract_cauchy(&[record(2, vec![0.5, 0.5])]);
        assert!(rep.distances.is_empty());
        assert_eq!(rep.monotone_tail_start, None);
        assert!(rep.final_within_mesh);
        assert!(!rep.non_contracting);
    }

    #[test]
    fn solve_trace_is_cauchy_for_the_constant_map() {
        let c = constant(vec![0.2, 0.3, 0.5]);
        let cfg = SolverConfig {
            residual_tol: 1e-6,
            ..SolverConfig::default()
        };
        let report = solve(&c, &cfg).unwrap();
        let cauchy = extract_cauchy(&report.trace);
        assert!(cauchy.final_within_mesh, "{:?}", cauchy.distances);
        assert!(cauchy.geometric_c.is_finite());
    }
}
