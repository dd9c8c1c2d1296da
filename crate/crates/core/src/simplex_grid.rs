//! Edgewise subdivision of the standard n-simplex.
//!
//! Purpose: provide the triangulated grid everything else runs on. The
//! standard simplex is the set of barycentric points x in R^{n+1} with
//! nonnegative entries summing to 1. At mesh parameter m the grid vertices
//! are the lattice points k/m (k integer, sum m) and the cells are the m^n
//! simplices of the edgewise (Kuhn/Freudenthal) subdivision.
//!
//! Internally a cell is described in "staircase" coordinates: mapping
//! s_j = m * (x_j + x_{j+1} + ... + x_n) for j = 1..n sends the simplex onto
//! the region m >= s_1 >= s_2 >= ... >= s_n >= 0, and the subdivision becomes
//! the standard alcove triangulation of that region. A cell is a pair
//! (base, steps): an integer base point plus an order in which each of the n
//! staircase coordinates is incremented once. In lattice coordinates the step
//! for coordinate c moves one unit of mass from entry c-1 to entry c, so every
//! cell edge has max-norm length exactly 1/m.
//!
//! Cell ids are the rank in lexicographic order of (base vertex in lattice
//! coordinates, step sequence), which fixes a deterministic ordering used by
//! enumeration, path following and point location tie-breaks.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::error::{Error, Result};

/// A point of the simplex in barycentric coordinates (n+1 entries, each
/// nonnegative, summing to 1 after normalization at construction).
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct BaryPoint(Vec<f64>);

impl BaryPoint {
    /// Validates and normalizes raw coordinates.
    ///
    /// Entries below -1e-9 are rejected as outside the simplex; entries in
    /// [-1e-9, 0) are clamped to 0. The sum must be within 1e-9 of 1 and is
    /// divided out so the stored sum is 1 to machine precision.
    pub fn new(coords: Vec<f64>) -> Result<BaryPoint> {
        if coords.len() < 2 {
            return Err(Error::InvalidBaryPoint(format!(
                "need at least 2 coordinates, got {}",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidBaryPoint("non-finite coordinate".into()));
        }
        if let Some(c) = coords.iter().find(|&&c| c < -1e-9) {
            return Err(Error::PointOutsideSimplex(format!(
                "coordinate {c} is negative"
            )));
        }
        let mut coords: Vec<f64> = coords.into_iter().map(|c| c.max(0.0)).collect();
        let sum: f64 = coords.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidBaryPoint(format!(
                "coordinates sum to {sum}, expected 1"
            )));
        }
        for c in &mut coords {
            *c /= sum;
        }
        Ok(BaryPoint(coords))
    }

    /// The lattice point k/m.
    pub fn from_lattice(m: u32, v: &LatticeVertex) -> BaryPoint {
        let m = f64::from(m);
        BaryPoint(v.0.iter().map(|&k| f64::from(k) / m).collect())
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    /// Simplex dimension n (one less than the coordinate count).
    pub fn dim(&self) -> usize {
        self.0.len() - 1
    }

    pub fn linf_dist(&self, other: &BaryPoint) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn l1_dist(&self, other: &BaryPoint) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .sum()
    }
}

/// A grid vertex in lattice coordinates: nonnegative integers summing to m.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct LatticeVertex(pub Vec<u32>);

impl LatticeVertex {
    pub fn to_bary(&self, m: u32) -> BaryPoint {
        BaryPoint::from_lattice(m, self)
    }
}

impl std::fmt::Display for LatticeVertex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|k| k.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// One simplex of the subdivision. `vertices` is the chain v^0..v^n where
/// v^j arises from v^{j-1} by the step for coordinate `steps[j-1]` (one unit
/// of mass moves from lattice entry c-1 to entry c).
#[derive(Debug, Clone, Serialize)]
pub struct Cell {
    pub id: usize,
    pub vertices: Vec<LatticeVertex>,
    pub steps: Vec<u8>,
}

impl Cell {
    /// Barycenter as an exact average of the lattice vertices.
    pub fn barycenter(&self, m: u32) -> BaryPoint {
        exact_barycenter(m, &self.vertices)
    }

    /// Max-norm diameter of the cell in barycentric coordinates.
    pub fn diameter(&self, m: u32) -> f64 {
        let pts: Vec<BaryPoint> = self.vertices.iter().map(|v| v.to_bary(m)).collect();
        let mut d = 0.0f64;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                d = d.max(pts[i].linf_dist(&pts[j]));
            }
        }
        d
    }
}

/// Average of lattice vertices at mesh m, computed from integer sums so the
/// same vertex set always yields bit-identical coordinates.
pub fn exact_barycenter(m: u32, vertices: &[LatticeVertex]) -> BaryPoint {
    let dim = vertices[0].0.len();
    let denom = (vertices.len() as f64) * f64::from(m);
    let mut sums = vec![0u64; dim];
    for v in vertices {
        for (s, &k) in sums.iter_mut().zip(&v.0) {
            *s += u64::from(k);
        }
    }
    BaryPoint(sums.into_iter().map(|s| s as f64 / denom).collect())
}

/// Key identifying a cell combinatorially: (base vertex lattice coords, steps).
pub type CellKey = (Vec<u32>, Vec<u8>);

/// Sorted list of the n lattice vertices spanning a facet.
pub type FacetKey = Vec<LatticeVertex>;

/// The full subdivision at mesh m: all lattice vertices (lexicographic order)
/// and all m^n cells (id order), plus the facet-to-cells incidence map.
#[derive(Debug, Clone)]
pub struct Grid {
    pub n: usize,
    pub m: u32,
    pub vertices: Vec<LatticeVertex>,
    pub cells: Vec<Cell>,
    vertex_index: HashMap<LatticeVertex, usize>,
    cell_index: HashMap<CellKey, usize>,
    facets: BTreeMap<FacetKey, Vec<usize>>,
}

impl Grid {
    pub fn vertex_id(&self, v: &LatticeVertex) -> Option<usize> {
        self.vertex_index.get(v).copied()
    }

    pub fn cell_id(&self, key: &CellKey) -> Option<usize> {
        self.cell_index.get(key).copied()
    }

    /// Facet incidence: each facet maps to the 1 or 2 cells containing it.
    pub fn facet_adjacency(&self) -> &BTreeMap<FacetKey, Vec<usize>> {
        &self.facets
    }
}

/// Builds the edgewise subdivision of the n-simplex at mesh parameter m.
pub fn build_grid(n: usize, m: u32) -> Result<Grid> {
    if n == 0 {
        return Err(Error::DegenerateDimension);
    }
    if m == 0 {
        return Err(Error::InvalidMesh);
    }

    let mut vertices = Vec::new();
    let mut cursor = Some(first_composition(n, m));
    while let Some(k) = cursor {
        cursor = next_composition(&k);
        vertices.push(LatticeVertex(k));
    }
    let vertex_index: HashMap<LatticeVertex, usize> = vertices
        .iter()
        .enumerate()
        .map(|(i, v)| (v.clone(), i))
        .collect();

    let mut cells = Vec::new();
    let mut cell_index = HashMap::new();
    for_each_cell(n, m, |base, steps| {
        let id = cells.len();
        let vertices = chain_vertices(base, steps);
        cell_index.insert((base.to_vec(), steps.to_vec()), id);
        cells.push(Cell {
            id,
            vertices,
            steps: steps.to_vec(),
        });
    });

    let mut facets: BTreeMap<FacetKey, Vec<usize>> = BTreeMap::new();
    for cell in &cells {
        for omit in 0..cell.vertices.len() {
            let mut key: FacetKey = cell
                .vertices
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != omit)
                .map(|(_, v)| v.clone())
                .collect();
            key.sort();
            facets.entry(key).or_default().push(cell.id);
        }
    }

    Ok(Grid {
        n,
        m,
        vertices,
        cells,
        vertex_index,
        cell_index,
        facets,
    })
}

/// Lex-smallest composition of m into n+1 parts: (0, ..., 0, m).
pub(crate) fn first_composition(n: usize, m: u32) -> Vec<u32> {
    let mut k = vec![0u32; n + 1];
    k[n] = m;
    k
}

/// Successor in lexicographic order over compositions, or None at the end.
pub(crate) fn next_composition(k: &[u32]) -> Option<Vec<u32>> {
    let n = k.len() - 1;
    // Rightmost position (excluding the last) whose tail still carries mass.
    let mut i = n;
    let mut tail = 0u32;
    while i > 0 {
        tail += k[i];
        if tail > 0 {
            i -= 1;
            break;
        }
        i -= 1;
    }
    if tail == 0 {
        return None;
    }
    let mut next = k[..=i].to_vec();
    next[i] += 1;
    next.resize(n + 1, 0);
    next[n] = tail - 1;
    Some(next)
}

/// Expands (base, steps) into the vertex chain v^0..v^n.
pub(crate) fn chain_vertices(base: &[u32], steps: &[u8]) -> Vec<LatticeVertex> {
    let mut out = Vec::with_capacity(steps.len() + 1);
    let mut cur: Vec<u32> = base.to_vec();
    out.push(LatticeVertex(cur.clone()));
    for &c in steps {
        let c = c as usize;
        cur[c - 1] -= 1;
        cur[c] += 1;
        out.push(LatticeVertex(cur.clone()));
    }
    out
}

/// Visits every cell of the dimension-n grid at mesh m in id order:
/// lexicographic on (base vertex, step sequence).
pub(crate) fn for_each_cell<F: FnMut(&[u32], &[u8])>(n: usize, m: u32, mut visit: F) {
    let mut cursor = Some(first_composition(n, m));
    let mut steps = Vec::with_capacity(n);
    while let Some(base) = cursor {
        cursor = next_composition(&base);
        let mut work = base.clone();
        visit_chains(&mut work, &base, &mut steps, 0, &mut visit);
    }
}

/// All step sequences valid from one base vertex, in lexicographic order.
pub(crate) fn chains_for_base(base: &[u32]) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut work = base.to_vec();
    let mut steps = Vec::new();
    visit_chains(&mut work, base, &mut steps, 0, &mut |_, s: &[u8]| {
        out.push(s.to_vec())
    });
    out
}

fn visit_chains<F: FnMut(&[u32], &[u8])>(
    cur: &mut [u32],
    base: &[u32],
    steps: &mut Vec<u8>,
    used: u32,
    visit: &mut F,
) {
    let n = cur.len() - 1;
    if steps.len() == n {
        visit(base, steps);
        return;
    }
    for c in 1..=n {
        if used & (1 << c) != 0 || cur[c - 1] == 0 {
            continue;
        }
        cur[c - 1] -= 1;
        cur[c] += 1;
        steps.push(c as u8);
        visit_chains(cur, base, steps, used | (1 << c), visit);
        steps.pop();
        cur[c - 1] += 1;
        cur[c] -= 1;
    }
}

/// Staircase coordinates of a lattice vertex: s_j = k_j + k_{j+1} + ... + k_n
/// for j = 1..n.
#[cfg(test)]
pub(crate) fn lattice_to_stair(k: &[u32]) -> Vec<i64> {
    let n = k.len() - 1;
    let mut s = vec![0i64; n];
    let mut acc = 0i64;
    for j in (1..=n).rev() {
        acc += i64::from(k[j]);
        s[j - 1] = acc;
    }
    s
}

/// Inverse of `lattice_to_stair` given the mesh parameter.
pub(crate) fn stair_to_lattice(m: u32, s: &[i64]) -> Vec<u32> {
    let n = s.len();
    let mut k = vec![0u32; n + 1];
    k[0] = (i64::from(m) - s[0]) as u32;
    for j in 1..n {
        k[j] = (s[j - 1] - s[j]) as u32;
    }
    k[n] = s[n - 1] as u32;
    k
}

/// Locates the cell containing z and its barycentric weights with respect to
/// the cell's vertex chain.
///
/// Weights are clamped to 0 when they fall in [-1e-12, 0). Points on shared
/// facets resolve to the smallest cell id. The weights reconstruct z within
/// 1e-10 in the max norm.
pub fn locate_point(grid: &Grid, z: &BaryPoint) -> Result<(usize, Vec<f64>)> {
    if z.coords().len() != grid.n + 1 {
        return Err(Error::InvalidInput(format!(
            "point has {} coordinates, grid expects {}",
            z.coords().len(),
            grid.n + 1
        )));
    }
    if let Some(c) = z.coords().iter().find(|&&c| c < -1e-9) {
        return Err(Error::PointOutsideSimplex(format!(
            "coordinate {c} is negative"
        )));
    }
    let n = grid.n;
    let m = f64::from(grid.m);

    // Staircase coordinates of z, scaled by m.
    let mut s = vec![0.0f64; n];
    let mut acc = 0.0;
    for j in (1..=n).rev() {
        acc += z.coords()[j];
        s[j - 1] = acc * m;
    }

    // Candidate integer bases per coordinate, in descending order so that the
    // induced base vertices come out in ascending lattice-lex order.
    const TIE_EPS: f64 = 1e-9;
    let mut options: Vec<Vec<i64>> = Vec::with_capacity(n);
    for &sj in &s {
        let lo = sj.floor() as i64;
        let rounded = sj.round();
        let mut opt = Vec::new();
        if (sj - rounded).abs() <= TIE_EPS {
            let r = rounded as i64;
            opt.push(r);
            opt.push(r - 1);
        } else {
            opt.push(lo);
        }
        opt.retain(|&b| (0..i64::from(grid.m)).contains(&b));
        opt.sort_unstable_by(|a, b| b.cmp(a));
        if opt.is_empty() {
            return Err(Error::PointOutsideSimplex(format!(
                "staircase coordinate {sj} outside [0, m]"
            )));
        }
        options.push(opt);
    }

    let mut choice = vec![0usize; n];
    loop {
        let base_s: Vec<i64> = choice.iter().zip(&options).map(|(&i, o)| o[i]).collect();
        if let Some(hit) = try_base(grid, &s, &base_s) {
            return Ok(hit);
        }
        // Advance the odometer over base candidates.
        let mut pos = n;
        loop {
            if pos == 0 {
                return Err(Error::InvalidInput(
                    "no containing cell found (point location failure)".into(),
                ));
            }
            pos -= 1;
            if choice[pos] + 1 < options[pos].len() {
                choice[pos] += 1;
                for c in choice.iter_mut().skip(pos + 1) {
                    *c = 0;
                }
                break;
            }
        }
    }
}

/// Tries one candidate base: searches step orders in lexicographic order for
/// one whose weights are admissible, returning the first hit.
fn try_base(grid: &Grid, s: &[f64], base_s: &[i64]) -> Option<(usize, Vec<f64>)> {
    let n = grid.n;
    let phi: Vec<f64> = s
        .iter()
        .zip(base_s)
        .map(|(&sj, &bj)| sj - bj as f64)
        .collect();
    if phi.iter().any(|&p| !(-1e-12..=1.0 + 1e-12).contains(&p)) {
        return None;
    }
    let base_k = stair_to_lattice_checked(grid.m, base_s)?;

    let mut steps: Vec<u8> = Vec::with_capacity(n);
    let mut cur = base_k.clone();
    if search_steps(&phi, &mut cur, &mut steps, 0, 1.0) {
        let mut lambda = Vec::with_capacity(n + 1);
        let mut prev = 1.0;
        for &c in &steps {
            let p = phi[c as usize - 1];
            lambda.push(clamp_weight(prev - p));
            prev = p;
        }
        lambda.push(clamp_weight(prev));
        let id = grid.cell_id(&(base_k, steps))?;
        return Some((id, lambda));
    }
    None
}

fn clamp_weight(w: f64) -> f64 {
    if (-1e-12..0.0).contains(&w) {
        0.0
    } else {
        w
    }
}

fn stair_to_lattice_checked(m: u32, s: &[i64]) -> Option<Vec<u32>> {
    let n = s.len();
    if s[0] > i64::from(m) || s[n - 1] < 0 {
        return None;
    }
    for j in 1..n {
        if s[j - 1] < s[j] {
            return None;
        }
    }
    Some(stair_to_lattice(m, s))
}

/// Depth-first search over step orders: each chosen coordinate must be (within
/// tolerance) a maximum of the remaining fractional parts, so the weight
/// vector stays nonnegative, and the chain must stay inside the lattice.
fn search_steps(
    phi: &[f64],
    cur: &mut Vec<u32>,
    steps: &mut Vec<u8>,
    used: u32,
    prev: f64,
) -> bool {
    let n = phi.len();
    if steps.len() == n {
        return true;
    }
    let max_remaining = phi
        .iter()
        .enumerate()
        .filter(|(c, _)| used & (1 << (c + 1)) == 0)
        .map(|(_, &p)| p)
        .fold(f64::NEG_INFINITY, f64::max);
    for c in 1..=n {
        if used & (1 << c) != 0 || cur[c - 1] == 0 {
            continue;
        }
        let p = phi[c - 1];
        if p > prev + 1e-12 || p < max_remaining - 1e-12 {
            continue;
        }
        cur[c - 1] -= 1;
        cur[c] += 1;
        steps.push(c as u8);
        if search_steps(phi, cur, steps, used | (1 << c), p) {
            return true;
        }
        steps.pop();
        cur[c - 1] += 1;
        cur[c] -= 1;
    }
    false
}
