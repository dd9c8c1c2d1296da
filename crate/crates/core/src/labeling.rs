//! Sperner labelings of grid vertices.
//!
//! A labeling assigns each grid vertex a label in {0, ..., n} subject to the
//! boundary rules: the corner with k_i = m gets label i; a vertex on a face
//! (some coordinates zero) must avoid the labels of its zero coordinates;
//! interior vertices are unconstrained.
//!
//! Labels can come from an explicit assignment (file, random generator) or be
//! induced by a continuous self-map f of the simplex via the gap rule: pick
//! the coordinate maximizing x_k - f_k(x) (ties to the smallest index). Since
//! the gaps sum to zero the maximizer has a strictly positive gap, which makes
//! map-induced labelings conform automatically. A vertex where no gap exceeds
//! `tol_fix` is already an approximate fixed point and short-circuits the
//! whole computation as a `FixedPointHit`.

use std::fmt;
use std::sync::Arc;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::simplex_grid::{BaryPoint, Grid, LatticeVertex};

/// Default early-exit threshold for map-induced labelings.
pub const DEFAULT_TOL_FIX: f64 = 1e-12;

/// A continuous self-map of the standard n-simplex in barycentric coordinates.
///
/// Implementations must be pure: repeated evaluation at the same point yields
/// identical output. `eval` checks the output against the simplex invariants
/// on every call and reports violations as hard errors.
pub trait SimplexMap: Send + Sync {
    /// Simplex dimension n; valid inputs and outputs have n+1 coordinates.
    fn dim(&self) -> usize;

    fn name(&self) -> String;

    /// Raw evaluation; output is validated by `eval`.
    fn eval_raw(&self, x: &[f64]) -> Vec<f64>;

    fn eval(&self, x: &BaryPoint) -> Result<BaryPoint> {
        if x.dim() != self.dim() {
            return Err(Error::InvalidInput(format!(
                "map '{}' expects dimension {}, point has dimension {}",
                self.name(),
                self.dim(),
                x.dim()
            )));
        }
        let out = self.eval_raw(x.coords());
        if out.len() != self.dim() + 1 {
            return Err(Error::MapRangeViolation {
                map: self.name(),
                detail: format!("output has {} coordinates", out.len()),
            });
        }
        BaryPoint::new(out).map_err(|e| Error::MapRangeViolation {
            map: self.name(),
            detail: e.to_string(),
        })
    }
}

/// A vertex whose image is indistinguishable from itself: max-norm residual
/// at most the `tol_fix` in force when it was found.
#[derive(Debug, Clone, Serialize)]
pub struct FixedPointHit {
    pub point: BaryPoint,
    pub residual: f64,
}

/// Outcome of labeling a single vertex from a map.
#[derive(Debug, Clone)]
pub enum LabelOutcome {
    Label(u8),
    Hit(FixedPointHit),
}

/// Labels x by the largest gap x_k - f_k(x), smallest index on ties.
///
/// Returns a `FixedPointHit` when the max-norm residual is at most `tol_fix`
/// or no gap is strictly positive (the two coincide up to rounding; both mean
/// the vertex is numerically fixed).
pub fn label_vertex(f: &dyn SimplexMap, x: &BaryPoint, tol_fix: f64) -> Result<LabelOutcome> {
    let fx = f.eval(x)?;
    let residual = x.linf_dist(&fx);
    let mut best = 0usize;
    let mut best_gap = f64::NEG_INFINITY;
    for (k, (xk, fk)) in x.coords().iter().zip(fx.coords()).enumerate() {
        let gap = xk - fk;
        if gap > best_gap {
            best_gap = gap;
            best = k;
        }
    }
    if residual <= tol_fix || best_gap <= 0.0 {
        return Ok(LabelOutcome::Hit(FixedPointHit {
            point: x.clone(),
            residual,
        }));
    }
    Ok(LabelOutcome::Label(best as u8))
}

/// Where a vertex label came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleTag {
    /// Corner of the simplex: label forced to the index carrying all mass.
    Corner,
    /// On a proper face: label restricted away from the zero coordinates.
    Face,
    /// Interior vertex: label unconstrained.
    Interior,
    /// Supplied explicitly (file or caller).
    Explicit,
}

/// A grid together with one label per vertex (indexed like `grid.vertices`).
#[derive(Debug, Clone)]
pub struct LabeledGrid {
    pub grid: Arc<Grid>,
    pub labels: Vec<u8>,
    pub provenance: Vec<RuleTag>,
}

impl LabeledGrid {
    /// Builds a labeling from an arbitrary per-vertex function; provenance is
    /// marked explicit. Labels are range-checked, nothing else.
    pub fn from_fn<F: FnMut(&LatticeVertex) -> u8>(
        grid: Arc<Grid>,
        mut f: F,
    ) -> Result<LabeledGrid> {
        let labels: Vec<u8> = grid.vertices.iter().map(&mut f).collect();
        if let Some((v, &l)) = grid
            .vertices
            .iter()
            .zip(&labels)
            .find(|(_, &l)| l as usize > grid.n)
        {
            return Err(Error::InvalidInput(format!(
                "label {l} at vertex {v} out of range 0..={}",
                grid.n
            )));
        }
        let provenance = vec![RuleTag::Explicit; labels.len()];
        Ok(LabeledGrid {
            grid,
            labels,
            provenance,
        })
    }

    pub fn label_of(&self, v: &LatticeVertex) -> Option<u8> {
        self.grid.vertex_id(v).map(|i| self.labels[i])
    }
}

/// Result of labeling a whole grid from a map.
#[derive(Debug, Clone)]
pub enum GridLabeling {
    Complete(LabeledGrid),
    /// Labeling stopped early: some vertex is already numerically fixed.
    Hit(FixedPointHit),
}

fn geometric_tag(v: &LatticeVertex, m: u32) -> RuleTag {
    if v.0.contains(&m) {
        RuleTag::Corner
    } else if v.0.contains(&0) {
        RuleTag::Face
    } else {
        RuleTag::Interior
    }
}

/// Labels every vertex from the map, in lexicographic vertex order, stopping
/// at the first `FixedPointHit`.
pub fn label_grid(grid: &Arc<Grid>, f: &dyn SimplexMap, tol_fix: f64) -> Result<GridLabeling> {
    let mut labels = Vec::with_capacity(grid.vertices.len());
    let mut provenance = Vec::with_capacity(grid.vertices.len());
    for v in &grid.vertices {
        match label_vertex(f, &v.to_bary(grid.m), tol_fix)? {
            LabelOutcome::Hit(hit) => return Ok(GridLabeling::Hit(hit)),
            LabelOutcome::Label(l) => {
                labels.push(l);
                provenance.push(geometric_tag(v, grid.m));
            }
        }
    }
    Ok(GridLabeling::Complete(LabeledGrid {
        grid: Arc::clone(grid),
        labels,
        provenance,
    }))
}

/// Which labeling rule a vertex breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolatedRule {
    /// Label exceeds n.
    LabelRange,
    /// Corner with k_i = m must be labeled i.
    CornerLabel,
    /// Face vertices must avoid labels of zero coordinates.
    FaceLabel,
}

#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub vertex: LatticeVertex,
    pub label: u8,
    pub rule: ViolatedRule,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rule = match self.rule {
            ViolatedRule::LabelRange => "label out of range",
            ViolatedRule::CornerLabel => "corner label must match its coordinate",
            ViolatedRule::FaceLabel => "face label must avoid zero coordinates",
        };
        write!(f, "vertex {} labeled {}: {}", self.vertex, self.label, rule)
    }
}

/// Checks every vertex against the labeling rules; empty result means the
/// labeling conforms.
pub fn validate_sperner(lg: &LabeledGrid) -> Vec<Violation> {
    let mut out = Vec::new();
    let m = lg.grid.m;
    for (v, &label) in lg.grid.vertices.iter().zip(&lg.labels) {
        if label as usize > lg.grid.n {
            out.push(Violation {
                vertex: v.clone(),
                label,
                rule: ViolatedRule::LabelRange,
            });
            continue;
        }
        if let Some(i) = v.0.iter().position(|&k| k == m) {
            if label as usize != i {
                out.push(Violation {
                    vertex: v.clone(),
                    label,
                    rule: ViolatedRule::CornerLabel,
                });
            }
            continue;
        }
        if v.0[label as usize] == 0 {
            out.push(Violation {
                vertex: v.clone(),
                label,
                rule: ViolatedRule::FaceLabel,
            });
        }
    }
    out
}

/// Deterministic seeded labeling: corners forced, face vertices uniform over
/// their allowed labels, interior vertices uniform over everything. Conforms
/// by construction.
pub fn random_labeling(grid: &Arc<Grid>, seed: u64) -> LabeledGrid {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = grid.m;
    let mut labels = Vec::with_capacity(grid.vertices.len());
    let mut provenance = Vec::with_capacity(grid.vertices.len());
    for v in &grid.vertices {
        let tag = geometric_tag(v, m);
        let label = match tag {
            RuleTag::Corner => v.0.iter().position(|&k| k == m).unwrap() as u8,
            RuleTag::Face => {
                let allowed: Vec<u8> = (0..=grid.n as u8)
                    .filter(|&l| v.0[l as usize] != 0)
                    .collect();
                allowed[rng.random_range(0..allowed.len())]
            }
            RuleTag::Interior => rng.random_range(0..=grid.n as u8),
            RuleTag::Explicit => unreachable!(),
        };
        labels.push(label);
        provenance.push(tag);
    }
    LabeledGrid {
        grid: Arc::clone(grid),
        labels,
        provenance,
    }
}
