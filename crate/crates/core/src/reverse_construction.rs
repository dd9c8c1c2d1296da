//! From labels back to fixed points: the piecewise linear witness map.
//!
//! A conforming labeling induces a PL self-map of the simplex: each grid
//! vertex with label l moves its l-th coordinate down by τ and every other
//! coordinate up by τ/n, and the map extends by convex combination over each
//! cell. Inside a cell the image satisfies
//!
//!   f_i(z) - z_i = (1 + 1/n) τ (1/(n+1) - L_i),
//!
//! where L_i is the λ-mass carried by vertices labeled i. Consequently a cell
//! missing label i has f_i(z) - z_i = τ/n > 0 everywhere (no fixed point can
//! hide there), and a cell has an exact fixed point precisely when every
//! label occurs once - at the barycenter, where all masses equal 1/(n+1).
//! Running the mesh-refinement solver on this map therefore recovers a fully
//! labeled cell of the original grid from a fixed-point computation alone.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fixpoint_solver::{solve, SolveReport, SolverConfig};
use crate::labeling::{validate_sperner, LabeledGrid, SimplexMap};
use crate::simplex_grid::{locate_point, BaryPoint, LatticeVertex};
use crate::sperner_search::is_fully_labeled;

/// Piecewise linear map built from a labeled grid. Exact fixed points are the
/// barycenters of the fully labeled cells.
pub struct PLMap {
    labeled: LabeledGrid,
    tau: f64,
    /// Image of each grid vertex, indexed like `labeled.grid.vertices`.
    vertex_images: Vec<BaryPoint>,
}

impl PLMap {
    pub fn labeled(&self) -> &LabeledGrid {
        &self.labeled
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn image_of(&self, v: &LatticeVertex) -> Option<&BaryPoint> {
        self.labeled
            .grid
            .vertex_id(v)
            .map(|id| &self.vertex_images[id])
    }

    /// Evaluates the PL extension: locates z, then convexly combines the
    /// images of the containing cell's vertices with z's weights.
    pub fn eval_pl(&self, z: &BaryPoint) -> Result<BaryPoint> {
        let grid = &self.labeled.grid;
        let (cell_id, weights) = locate_point(grid, z)?;
        let cell = &grid.cells[cell_id];
        let mut out = vec![0.0f64; grid.n + 1];
        for (v, &w) in cell.vertices.iter().zip(&weights) {
            let id = grid.vertex_id(v).expect("cell vertex in grid");
            for (o, &c) in out.iter_mut().zip(self.vertex_images[id].coords()) {
                *o += w * c;
            }
        }
        BaryPoint::new(out)
    }
}

impl SimplexMap for PLMap {
    fn dim(&self) -> usize {
        self.labeled.grid.n
    }

    fn name(&self) -> String {
        format!(
            "pl_from_labels(m={}, tau={})",
            self.labeled.grid.m, self.tau
        )
    }

    fn eval_raw(&self, x: &[f64]) -> Vec<f64> {
        // Callers reach this through `eval`, which guarantees a valid point.
        let z = BaryPoint::new(x.to_vec()).expect("eval_raw input on the simplex");
        self.eval_pl(&z)
            .expect("PL evaluation on the simplex")
            .coords()
            .to_vec()
    }
}

/// Largest admissible τ: the smallest labeled coordinate over all vertices.
fn max_tau(lg: &LabeledGrid) -> f64 {
    let m = lg.grid.m;
    let min_k = lg
        .grid
        .vertices
        .iter()
        .zip(&lg.labels)
        .map(|(v, &l)| v.0[l as usize])
        .min()
        .expect("grid has vertices");
    f64::from(min_k) / f64::from(m)
}

/// Builds the PL map for a conforming labeling. With `tau = None` the offset
/// defaults to half the largest admissible value; an explicit τ must satisfy
/// 0 < τ < min_v x^v_{label(v)} so every image stays inside the simplex.
pub fn build_pl_map(lg: LabeledGrid, tau: Option<f64>) -> Result<PLMap> {
    let violations = validate_sperner(&lg);
    if !violations.is_empty() {
        return Err(Error::NonconformingLabeling(violations));
    }
    let limit = max_tau(&lg);
    let tau = tau.unwrap_or(0.5 * limit);
    if tau.is_nan() || tau <= 0.0 {
        return Err(Error::TauNotPositive(tau));
    }
    if tau >= limit {
        return Err(Error::TauTooLarge { tau, max: limit });
    }
    let n = lg.grid.n as f64;
    let m = lg.grid.m;
    let vertex_images = lg
        .grid
        .vertices
        .iter()
        .zip(&lg.labels)
        .map(|(v, &l)| {
            let x = v.to_bary(m);
            let coords: Vec<f64> = x
                .coords()
                .iter()
                .enumerate()
                .map(|(j, &xj)| {
                    if j == l as usize {
                        xj - tau
                    } else {
                        xj + tau / n
                    }
                })
                .collect();
            BaryPoint::new(coords).expect("vertex image stays on the simplex")
        })
        .collect();
    Ok(PLMap {
        labeled: lg,
        tau,
        vertex_images,
    })
}

/// Exact fixed point of the PL map within one cell: the barycenter when the
/// cell is fully labeled, nothing otherwise (a duplicated label forces some
/// zero-mass label i with f_i > z_i throughout the cell).
pub fn pl_fixpoint_exact(pl: &PLMap, cell_id: usize) -> Option<BaryPoint> {
    let grid = &pl.labeled.grid;
    let cell = grid.cells.get(cell_id)?;
    let labels: Vec<u8> = cell
        .vertices
        .iter()
        .map(|v| pl.labeled.label_of(v).expect("cell vertex in grid"))
        .collect();
    if is_fully_labeled(grid.n, &labels) {
        Some(cell.barycenter(grid.m))
    } else {
        None
    }
}

/// A fully labeled cell recovered from a fixed-point computation.
#[derive(Debug, Clone, Serialize)]
pub struct ReverseReport {
    pub cell_id: usize,
    pub vertices: Vec<LatticeVertex>,
    pub labels: Vec<u8>,
    pub fixpoint: BaryPoint,
    pub solve: SolveReport,
}

/// Runs the mesh-refinement solver on the PL map and reads a fully labeled
/// cell off the result. The inner meshes are multiples of the grid's own m
/// (so refined cells nest inside original cells), and the tolerance is capped
/// at τ/(8n): any point with residual below τ/n must lie in a cell carrying
/// every label, because a missing label i would force f_i(z) - z_i = τ/n.
pub fn fully_labeled_from_fixpoint(pl: &PLMap, cfg: &SolverConfig) -> Result<ReverseReport> {
    let grid = &pl.labeled.grid;
    let n = grid.n;
    let inner = SolverConfig {
        residual_tol: cfg.residual_tol.min(pl.tau / (8.0 * n as f64)),
        m_first: grid.m,
        m_max: cfg.m_max.max(grid.m),
        tol_fix: cfg.tol_fix,
    };
    let solve_report = solve(pl, &inner)?;
    let point = solve_report.fixpoint.point.clone();
    let (cell_id, _) = locate_point(grid, &point)?;
    let cell = &grid.cells[cell_id];
    let labels: Vec<u8> = cell
        .vertices
        .iter()
        .map(|v| pl.labeled.label_of(v).expect("cell vertex in grid"))
        .collect();
    if !is_fully_labeled(n, &labels) {
        return Err(Error::NotFullyLabeled);
    }
    Ok(ReverseReport {
        cell_id,
        vertices: cell.vertices.clone(),
        labels,
        fixpoint: point,
        solve: solve_report,
    })
}
