//! Fully labeled cells: enumeration, parity, and path following.
//!
//! A facet is a "door" when its n vertex labels are exactly {0, ..., n-1}.
//! Each cell has 0, 1 or 2 doors, and exactly 1 precisely when it is fully
//! labeled. Adding an OUTSIDE node joined to the boundary doors (which can
//! only lie on the face x_n = 0) turns door-sharing into a graph whose
//! non-OUTSIDE nodes have degree at most 2. Components are paths and cycles,
//! so following doors from OUTSIDE must end in a degree-1 node: a fully
//! labeled cell. Counting door edges also yields the parity statement (an odd
//! number of fully labeled cells) via the handshaking lemma.
//!
//! The walk itself never materializes the grid: cells are advanced by
//! reflection (pivot) rules on the (base, steps) representation, labels are
//! produced by a `LabelSource` (stored labels, or a map evaluated on demand),
//! and each step touches exactly one new vertex. `enumerate_fully_labeled`
//! and `build_dual_graph` do materialize, which is fine at the mesh sizes
//! where exhaustive statements are wanted.

use std::collections::{HashMap, HashSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::labeling::{
    label_vertex, validate_sperner, FixedPointHit, LabelOutcome, LabeledGrid, SimplexMap,
};
use crate::simplex_grid::{
    chain_vertices, chains_for_base, first_composition, next_composition, BaryPoint, CellKey,
    LatticeVertex,
};

/// True iff the n+1 labels are exactly {0, ..., n}, one each. With n = 0 this
/// encodes the 0-dimensional base case: the single point labeled 0 is itself
/// the fully labeled simplex.
pub fn is_fully_labeled(n: usize, labels: &[u8]) -> bool {
    if labels.len() != n + 1 {
        return false;
    }
    let mut seen = vec![false; n + 1];
    for &l in labels {
        let l = l as usize;
        if l > n || seen[l] {
            return false;
        }
        seen[l] = true;
    }
    true
}

/// True iff the n labels are exactly {0, ..., n-1}: the facet is a door.
pub(crate) fn is_door(n: usize, labels: &[u8]) -> bool {
    if labels.len() != n {
        return false;
    }
    let mut seen = vec![false; n];
    for &l in labels {
        let l = l as usize;
        if l >= n || seen[l] {
            return false;
        }
        seen[l] = true;
    }
    true
}

/// Minimal undirected graph: node count plus an edge list (loops allowed and
/// counted twice in the degree).
#[derive(Debug, Clone)]
pub struct UndirectedGraph {
    pub num_nodes: usize,
    pub edges: Vec<(usize, usize)>,
}

/// Degree-sum identity and the handshake corollary: sum of degrees is twice
/// the edge count, so the number of odd-degree nodes is even.
pub fn check_handshake(g: &UndirectedGraph) -> bool {
    let mut deg = vec![0usize; g.num_nodes];
    for &(a, b) in &g.edges {
        deg[a] += 1;
        deg[b] += 1;
    }
    let total: usize = deg.iter().sum();
    total == 2 * g.edges.len() && deg.iter().filter(|&&d| d % 2 == 1).count() % 2 == 0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DualNode {
    Outside,
    Cell(usize),
}

/// Door-sharing graph over cells plus the OUTSIDE node.
#[derive(Debug, Clone, Serialize)]
pub struct DualGraph {
    pub num_cells: usize,
    pub edges: Vec<(DualNode, DualNode)>,
}

impl DualGraph {
    pub fn degree(&self, node: DualNode) -> usize {
        self.edges
            .iter()
            .map(|&(a, b)| usize::from(a == node) + usize::from(b == node))
            .sum()
    }

    pub fn outside_degree(&self) -> usize {
        self.degree(DualNode::Outside)
    }

    /// Relabels nodes 0..num_cells for cells, num_cells for OUTSIDE.
    pub fn to_undirected(&self) -> UndirectedGraph {
        let idx = |n: DualNode| match n {
            DualNode::Outside => self.num_cells,
            DualNode::Cell(id) => id,
        };
        UndirectedGraph {
            num_nodes: self.num_cells + 1,
            edges: self.edges.iter().map(|&(a, b)| (idx(a), idx(b))).collect(),
        }
    }
}

fn conforming(lg: &LabeledGrid) -> Result<()> {
    let violations = validate_sperner(lg);
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Error::NonconformingLabeling(violations))
    }
}

/// Builds the dual graph of a conforming labeling: one edge per interior
/// door, one OUTSIDE edge per boundary door (always on the face x_n = 0).
pub fn build_dual_graph(lg: &LabeledGrid) -> Result<DualGraph> {
    conforming(lg)?;
    let n = lg.grid.n;
    let mut edges = Vec::new();
    for (facet, cells) in lg.grid.facet_adjacency() {
        let labels: Vec<u8> = facet
            .iter()
            .map(|v| lg.label_of(v).expect("facet vertex in grid"))
            .collect();
        if !is_door(n, &labels) {
            continue;
        }
        match cells.as_slice() {
            [a] => {
                debug_assert!(
                    facet.iter().all(|v| v.0[n] == 0),
                    "boundary door off the distinguished face"
                );
                edges.push((DualNode::Outside, DualNode::Cell(*a)));
            }
            [a, b] => edges.push((DualNode::Cell(*a.min(b)), DualNode::Cell(*a.max(b)))),
            _ => unreachable!("facet shared by more than two cells"),
        }
    }
    Ok(DualGraph {
        num_cells: lg.grid.cells.len(),
        edges,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Odd,
    Even,
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchResult {
    pub fully_labeled: Vec<usize>,
    pub count_parity: Parity,
    pub paths: Vec<Vec<DualNode>>,
}

/// Scans every cell of a conforming labeling for the full label set.
pub fn enumerate_fully_labeled(lg: &LabeledGrid) -> Result<SearchResult> {
    conforming(lg)?;
    let n = lg.grid.n;
    let mut fully_labeled = Vec::new();
    for cell in &lg.grid.cells {
        let labels: Vec<u8> = cell
            .vertices
            .iter()
            .map(|v| lg.label_of(v).expect("cell vertex in grid"))
            .collect();
        if is_fully_labeled(n, &labels) {
            fully_labeled.push(cell.id);
        }
    }
    let count_parity = if fully_labeled.len() % 2 == 1 {
        Parity::Odd
    } else {
        Parity::Even
    };
    Ok(SearchResult {
        fully_labeled,
        count_parity,
        paths: Vec::new(),
    })
}

/// Follows doors from OUTSIDE (boundary doors in ascending cell-id order) to
/// the first fully labeled cell. Returns its id and the node path taken.
pub fn path_follow(lg: &LabeledGrid) -> Result<(usize, Vec<DualNode>)> {
    conforming(lg)?;
    let mut src = GridSource { lg };
    let mut trace = Vec::new();
    let (outcome, _) = walk_to_fully_labeled(&mut src, Some(&mut trace))?;
    match outcome {
        WalkOutcome::FullyLabeled(cell) => {
            let id = lg
                .grid
                .cell_id(&cell.key())
                .ok_or_else(|| Error::InvalidInput("walked to a cell outside the grid".into()))?;
            let nodes = trace
                .into_iter()
                .map(|node| match node {
                    WalkNode::Outside => Ok(DualNode::Outside),
                    WalkNode::Cell(key) => lg
                        .grid
                        .cell_id(&key)
                        .map(DualNode::Cell)
                        .ok_or_else(|| Error::InvalidInput("path cell outside the grid".into())),
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((id, nodes))
        }
        WalkOutcome::Hit(_) => Err(Error::InvalidInput(
            "stored labels cannot produce a fixed-point hit".into(),
        )),
    }
}

// ---------------------------------------------------------------------------
// Walker engine (shared with the solver).

/// One label answer; map-backed sources may instead surface a fixed vertex.
pub(crate) enum SourceLabel {
    Label(u8),
    Hit(FixedPointHit),
}

pub(crate) trait LabelSource {
    fn n(&self) -> usize;
    fn m(&self) -> u32;
    fn label(&mut self, k: &[u32]) -> Result<SourceLabel>;
}

pub(crate) struct GridSource<'a> {
    pub lg: &'a LabeledGrid,
}

impl LabelSource for GridSource<'_> {
    fn n(&self) -> usize {
        self.lg.grid.n
    }

    fn m(&self) -> u32 {
        self.lg.grid.m
    }

    fn label(&mut self, k: &[u32]) -> Result<SourceLabel> {
        self.lg
            .grid
            .vertex_id(&LatticeVertex(k.to_vec()))
            .map(|i| SourceLabel::Label(self.lg.labels[i]))
            .ok_or_else(|| Error::InvalidInput(format!("vertex {k:?} not in grid")))
    }
}

/// Labels on demand from a map, with the fixed-point early exit.
pub(crate) struct MapSource<'a> {
    pub f: &'a dyn SimplexMap,
    pub m: u32,
    pub tol_fix: f64,
    pub evals: u64,
}

impl LabelSource for MapSource<'_> {
    fn n(&self) -> usize {
        self.f.dim()
    }

    fn m(&self) -> u32 {
        self.m
    }

    fn label(&mut self, k: &[u32]) -> Result<SourceLabel> {
        self.evals += 1;
        let x = BaryPoint::from_lattice(self.m, &LatticeVertex(k.to_vec()));
        Ok(match label_vertex(self.f, &x, self.tol_fix)? {
            LabelOutcome::Label(l) => SourceLabel::Label(l),
            LabelOutcome::Hit(hit) => SourceLabel::Hit(hit),
        })
    }
}

/// Current simplex of the walk, in chain form, plus its vertex labels.
#[derive(Debug, Clone)]
pub(crate) struct WalkCell {
    pub base: Vec<u32>,
    pub steps: Vec<u8>,
    pub vertices: Vec<Vec<u32>>,
    pub labels: Vec<u8>,
}

impl WalkCell {
    pub fn key(&self) -> CellKey {
        (self.base.clone(), self.steps.clone())
    }

    pub fn lattice_vertices(&self) -> Vec<LatticeVertex> {
        self.vertices
            .iter()
            .map(|v| LatticeVertex(v.clone()))
            .collect()
    }
}

pub(crate) enum WalkOutcome {
    FullyLabeled(WalkCell),
    Hit(FixedPointHit),
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct WalkStats {
    pub steps: u64,
    pub doors_tried: u64,
}

pub(crate) enum WalkNode {
    Outside,
    Cell(CellKey),
}

enum Doors {
    FullyLabeled,
    Two(usize, usize),
    None,
}

fn door_positions(n: usize, labels: &[u8]) -> Doors {
    let mut counts = vec![0u8; n + 1];
    for &l in labels {
        counts[l as usize] += 1;
    }
    if counts.iter().all(|&c| c == 1) {
        return Doors::FullyLabeled;
    }
    if counts[n] == 0 {
        let dups: Vec<usize> = (0..n).filter(|&d| counts[d] == 2).collect();
        if dups.len() == 1 && counts[..n].iter().all(|&c| c == 1 || c == 2) {
            let d = dups[0] as u8;
            let mut it = labels.iter().enumerate().filter(|(_, &l)| l == d);
            let a = it.next().unwrap().0;
            let b = it.next().unwrap().0;
            return Doors::Two(a, b);
        }
    }
    Doors::None
}

enum PivotResult {
    Moved { new_pos: usize },
    Boundary,
}

/// Reflects the cell through the facet opposite vertex j. The chain rules:
/// dropping v^0 appends the first step at the end, dropping v^n prepends the
/// last step at the base, dropping an inner vertex swaps adjacent steps. A
/// pivot whose new vertex would leave the lattice is a boundary facet.
fn pivot(cell: &mut WalkCell, j: usize) -> PivotResult {
    let n = cell.steps.len();
    if j == 0 {
        let c = cell.steps[0] as usize;
        if cell.vertices[n][c - 1] == 0 {
            return PivotResult::Boundary;
        }
        let mut w = cell.vertices[n].clone();
        w[c - 1] -= 1;
        w[c] += 1;
        cell.vertices.remove(0);
        cell.vertices.push(w);
        cell.steps.rotate_left(1);
        cell.base = cell.vertices[0].clone();
        cell.labels.remove(0);
        cell.labels.push(0); // placeholder; caller fills the new label
        PivotResult::Moved { new_pos: n }
    } else if j == n {
        let c = *cell.steps.last().unwrap() as usize;
        if cell.vertices[0][c] == 0 {
            return PivotResult::Boundary;
        }
        let mut u = cell.vertices[0].clone();
        u[c - 1] += 1;
        u[c] -= 1;
        cell.vertices.pop();
        cell.vertices.insert(0, u.clone());
        cell.steps.rotate_right(1);
        cell.base = u;
        cell.labels.pop();
        cell.labels.insert(0, 0);
        PivotResult::Moved { new_pos: 0 }
    } else {
        let c_next = cell.steps[j] as usize;
        if cell.vertices[j - 1][c_next - 1] == 0 {
            return PivotResult::Boundary;
        }
        let mut w = cell.vertices[j - 1].clone();
        w[c_next - 1] -= 1;
        w[c_next] += 1;
        cell.steps.swap(j - 1, j);
        cell.vertices[j] = w;
        PivotResult::Moved { new_pos: j }
    }
}

enum ScanItem {
    Door {
        face_key: CellKey,
        facet_labels: Vec<u8>,
    },
    Hit(FixedPointHit),
    End,
}

/// Iterates the boundary cells on the face x_n = 0 of the full grid, in
/// ascending cell-id order, testing each boundary facet for door-ness. The
/// face restriction of the grid is the (n-1)-dimensional grid at the same m,
/// and its cell order matches the parent order, so the doors come out in
/// ascending parent cell id.
struct BoundaryScan {
    n: usize,
    done: bool,
    face_base: Option<Vec<u32>>,
    face_sigmas: Vec<Vec<u8>>,
    sigma_idx: usize,
    memo: HashMap<Vec<u32>, u8>,
}

impl BoundaryScan {
    fn new(n: usize, m: u32) -> BoundaryScan {
        let face_base = if n >= 2 {
            Some(first_composition(n - 1, m))
        } else {
            None
        };
        let face_sigmas = face_base
            .as_deref()
            .map(chains_for_base)
            .unwrap_or_default();
        BoundaryScan {
            n,
            done: false,
            face_base,
            face_sigmas,
            sigma_idx: 0,
            memo: HashMap::new(),
        }
    }

    fn next_face_cell(&mut self) -> Option<(Vec<u32>, Vec<u8>)> {
        loop {
            let base = self.face_base.as_ref()?;
            if self.sigma_idx < self.face_sigmas.len() {
                self.sigma_idx += 1;
                return Some((base.clone(), self.face_sigmas[self.sigma_idx - 1].clone()));
            }
            self.face_base = next_composition(base);
            self.face_sigmas = self
                .face_base
                .as_deref()
                .map(chains_for_base)
                .unwrap_or_default();
            self.sigma_idx = 0;
        }
    }

    fn label_at(&mut self, src: &mut dyn LabelSource, k: Vec<u32>) -> Result<SourceLabel> {
        if let Some(&l) = self.memo.get(&k) {
            return Ok(SourceLabel::Label(l));
        }
        let out = src.label(&k)?;
        if let SourceLabel::Label(l) = out {
            if self.memo.len() > 300_000 {
                self.memo.clear();
            }
            self.memo.insert(k, l);
        }
        Ok(out)
    }

    fn next(&mut self, src: &mut dyn LabelSource) -> Result<ScanItem> {
        let m = src.m();
        if self.n == 1 {
            // The distinguished face is the single vertex (m, 0); its label
            // is 0 by the corner rule, so it is always a door.
            if self.done {
                return Ok(ScanItem::End);
            }
            self.done = true;
            return Ok(match src.label(&[m, 0])? {
                SourceLabel::Hit(hit) => ScanItem::Hit(hit),
                SourceLabel::Label(0) => ScanItem::Door {
                    face_key: (vec![m], Vec::new()),
                    facet_labels: vec![0],
                },
                SourceLabel::Label(_) => ScanItem::End,
            });
        }
        'cells: while let Some((fbase, fsteps)) = self.next_face_cell() {
            let chain = chain_vertices(&fbase, &fsteps);
            let mut labels = Vec::with_capacity(self.n);
            for v in chain {
                let mut k = v.0;
                k.push(0);
                match self.label_at(src, k)? {
                    SourceLabel::Hit(hit) => return Ok(ScanItem::Hit(hit)),
                    SourceLabel::Label(l) => labels.push(l),
                }
            }
            if !is_door(self.n, &labels) {
                continue 'cells;
            }
            return Ok(ScanItem::Door {
                face_key: (fbase, fsteps),
                facet_labels: labels,
            });
        }
        Ok(ScanItem::End)
    }
}

/// Identifies the boundary door the walk exits through: only facets on the
/// face x_n = 0 qualify, which forces the dropped vertex to be v^n with the
/// final step n and a base ending in 0.
fn exit_face_key(cell: &WalkCell, j_out: usize) -> Result<CellKey> {
    let n = cell.steps.len();
    let on_face = j_out == n
        && cell.steps[n - 1] as usize == n
        && cell.base[n] == 0
        && cell.vertices[..n].iter().all(|v| v[n] == 0);
    if !on_face {
        return Err(Error::InvalidInput(
            "path exited the simplex off the distinguished face".into(),
        ));
    }
    let mut fbase = cell.base.clone();
    fbase.pop();
    Ok((fbase, cell.steps[..n - 1].to_vec()))
}

/// Core path-following loop. Starts at the lowest-id unused boundary door,
/// pivots through the unique other door of each cell, returns to OUTSIDE when
/// the path exits the boundary, and stops at a fully labeled cell or at a
/// fixed-point hit from the label source.
pub(crate) fn walk_to_fully_labeled(
    src: &mut dyn LabelSource,
    mut trace: Option<&mut Vec<WalkNode>>,
) -> Result<(WalkOutcome, WalkStats)> {
    let n = src.n();
    let mut stats = WalkStats::default();
    let mut used_doors: HashSet<CellKey> = HashSet::new();
    let mut scan = BoundaryScan::new(n, src.m());
    if let Some(t) = trace.as_deref_mut() {
        t.push(WalkNode::Outside);
    }
    'outer: loop {
        let (face_key, facet_labels) = loop {
            match scan.next(src)? {
                ScanItem::Hit(hit) => return Ok((WalkOutcome::Hit(hit), stats)),
                ScanItem::End => return Err(Error::NoBoundaryDoor),
                ScanItem::Door {
                    face_key,
                    facet_labels,
                } => {
                    if !used_doors.contains(&face_key) {
                        break (face_key, facet_labels);
                    }
                }
            }
        };
        stats.doors_tried += 1;
        used_doors.insert(face_key.clone());

        let (face_base, face_steps) = face_key;
        let mut base = face_base;
        base.push(0);
        let mut steps = face_steps;
        steps.push(n as u8);
        let vertices: Vec<Vec<u32>> = chain_vertices(&base, &steps)
            .into_iter()
            .map(|v| v.0)
            .collect();
        let mut labels = facet_labels;
        match src.label(&vertices[n])? {
            SourceLabel::Hit(hit) => return Ok((WalkOutcome::Hit(hit), stats)),
            SourceLabel::Label(l) => labels.push(l),
        }
        let mut cell = WalkCell {
            base,
            steps,
            vertices,
            labels,
        };
        let mut j_in = n;
        if let Some(t) = trace.as_deref_mut() {
            t.push(WalkNode::Cell(cell.key()));
        }

        loop {
            stats.steps += 1;
            match door_positions(n, &cell.labels) {
                Doors::FullyLabeled => return Ok((WalkOutcome::FullyLabeled(cell), stats)),
                Doors::None => {
                    return Err(Error::InvalidInput(
                        "entered a cell with no door (nonconforming labels?)".into(),
                    ))
                }
                Doors::Two(a, b) => {
                    let j_out = if a == j_in { b } else { a };
                    if a != j_in && b != j_in {
                        return Err(Error::InvalidInput(
                            "entry facet is not a door (nonconforming labels?)".into(),
                        ));
                    }
                    match pivot(&mut cell, j_out) {
                        PivotResult::Boundary => {
                            let key = exit_face_key(&cell, j_out)?;
                            used_doors.insert(key);
                            if let Some(t) = trace.as_deref_mut() {
                                t.push(WalkNode::Outside);
                            }
                            continue 'outer;
                        }
                        PivotResult::Moved { new_pos } => {
                            match src.label(&cell.vertices[new_pos])? {
                                SourceLabel::Hit(hit) => return Ok((WalkOutcome::Hit(hit), stats)),
                                SourceLabel::Label(l) => cell.labels[new_pos] = l,
                            }
                            j_in = new_pos;
                            if let Some(t) = trace.as_deref_mut() {
                                t.push(WalkNode::Cell(cell.key()));
                            }
                        }
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labeling::{label_grid, random_labeling, GridLabeling, DEFAULT_TOL_FIX};
    use crate::maps::Rotation;
    use crate::simplex_grid::{build_grid, Grid};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn grid(n: usize, m: u32) -> Arc<Grid> {
        Arc::new(build_grid(n, m).unwrap())
    }

    /// Labels a 1-dimensional grid by position t = k_1 / m (index 0 is t=0).
    fn labels_1d(g: &Arc<Grid>, by_t: &[u8]) -> LabeledGrid {
        LabeledGrid::from_fn(Arc::clone(g), |v| by_t[v.0[1] as usize]).unwrap()
    }

    #[test]
    fn fully_labeled_predicate() {
        assert!(is_fully_labeled(2, &[2, 0, 1]));
        assert!(!is_fully_labeled(2, &[0, 0, 1]));
        assert!(!is_fully_labeled(2, &[0, 1]));
        assert!(!is_fully_labeled(1, &[0, 2]));
        // 0-dimensional base case: one point labeled 0.
        assert!(is_fully_labeled(0, &[0]));
    }

    #[test]
    fn handshake_on_fixed_graphs() {
        let triangle = UndirectedGraph {
            num_nodes: 3,
            edges: vec![(0, 1), (1, 2), (2, 0)],
        };
        assert!(check_handshake(&triangle));
        let path = UndirectedGraph {
            num_nodes: 3,
            edges: vec![(0, 1), (1, 2)],
        };
        assert!(check_handshake(&path));
        let loop_graph = UndirectedGraph {
            num_nodes: 2,
            edges: vec![(0, 0), (0, 1)],
        };
        assert!(check_handshake(&loop_graph));
    }

    #[test]
    fn handshake_on_random_graphs() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..500 {
            let nodes = rng.random_range(1..40usize);
            let edges = (0..rng.random_range(0..80usize))
                .map(|_| (rng.random_range(0..nodes), rng.random_range(0..nodes)))
                .collect();
            let g = UndirectedGraph {
                num_nodes: nodes,
                edges,
            };
            assert!(check_handshake(&g));
        }
    }

    #[test]
    fn enumerate_1d_examples() {
        // t-labels (0,1,1) at m=2: one fully labeled segment.
        let g = grid(1, 2);
        let lg = labels_1d(&g, &[0, 1, 1]);
        let res = enumerate_fully_labeled(&lg).unwrap();
        assert_eq!(res.fully_labeled.len(), 1);
        assert_eq!(res.count_parity, Parity::Odd);
        // The fully labeled segment is [0, 1/2].
        let cell = &lg.grid.cells[res.fully_labeled[0]];
        let mut vs: Vec<Vec<u32>> = cell.vertices.iter().map(|v| v.0.clone()).collect();
        vs.sort();
        assert_eq!(vs, vec![vec![1, 1], vec![2, 0]]);

        // t-labels (0,0,1,0,1) at m=4: three switches, three fully labeled.
        let g = grid(1, 4);
        let lg = labels_1d(&g, &[0, 0, 1, 0, 1]);
        let res = enumerate_fully_labeled(&lg).unwrap();
        assert_eq!(res.fully_labeled.len(), 3);
        assert_eq!(res.count_parity, Parity::Odd);
    }

    #[test]
    fn enumerate_rejects_nonconforming() {
        let g = grid(1, 2);
        let lg = LabeledGrid::from_fn(Arc::clone(&g), |_| 0).unwrap();
        assert!(matches!(
            enumerate_fully_labeled(&lg),
            Err(Error::NonconformingLabeling(_))
        ));
    }

    #[test]
    fn parity_is_odd_for_random_labelings() {
        let g = grid(2, 4);
        for seed in 0..200u64 {
            let lg = random_labeling(&g, seed);
            let res = enumerate_fully_labeled(&lg).unwrap();
            assert_eq!(res.count_parity, Parity::Odd, "seed {seed}");
        }
    }

    #[test]
    fn dual_graph_structure() {
        let g = grid(1, 2);
        let lg = labels_1d(&g, &[0, 1, 1]);
        let dual = build_dual_graph(&lg).unwrap();
        assert_eq!(dual.outside_degree(), 1);
        // The fully labeled segment has degree 1.
        let res = enumerate_fully_labeled(&lg).unwrap();
        assert_eq!(dual.degree(DualNode::Cell(res.fully_labeled[0])), 1);
    }

    #[test]
    fn dual_graph_invariants_on_random_labelings() {
        for (n, m) in [(1usize, 6u32), (2, 4), (3, 3)] {
            let g = grid(n, m);
            for seed in 0..40u64 {
                let lg = random_labeling(&g, seed);
                let dual = build_dual_graph(&lg).unwrap();
                let full: HashSet<usize> = enumerate_fully_labeled(&lg)
                    .unwrap()
                    .fully_labeled
                    .into_iter()
                    .collect();
                for id in 0..dual.num_cells {
                    let d = dual.degree(DualNode::Cell(id));
                    assert!(d <= 2, "cell {id} degree {d}");
                    assert_eq!(d == 1, full.contains(&id), "cell {id}");
                }
                // OUTSIDE has odd degree, and the handshake identity holds.
                assert_eq!(dual.outside_degree() % 2, 1, "(n={n}, m={m}, seed={seed})");
                assert!(check_handshake(&dual.to_undirected()));
                let odd = (0..dual.num_cells)
                    .filter(|&id| dual.degree(DualNode::Cell(id)) % 2 == 1)
                    .count()
                    + dual.outside_degree() % 2;
                assert_eq!(odd % 2, 0);
            }
        }
    }

    #[test]
    fn boundary_doors_match_face_restriction() {
        // Doors on the face x_n = 0 are exactly the fully labeled cells of
        // the induced (n-1)-dimensional labeling, and their count is odd.
        for (n, m) in [(2usize, 4u32), (3, 3)] {
            let g = grid(n, m);
            let sub = grid(n - 1, m);
            for seed in 0..25u64 {
                let lg = random_labeling(&g, seed);
                let sub_lg = LabeledGrid::from_fn(Arc::clone(&sub), |v| {
                    let mut k = v.0.clone();
                    k.push(0);
                    lg.label_of(&LatticeVertex(k)).unwrap()
                })
                .unwrap();
                let doors = build_dual_graph(&lg).unwrap().outside_degree();
                let sub_full = enumerate_fully_labeled(&sub_lg)
                    .unwrap()
                    .fully_labeled
                    .len();
                assert_eq!(doors, sub_full, "(n={n}, m={m}, seed={seed})");
                assert_eq!(doors % 2, 1);
            }
        }
    }

    #[test]
    fn path_follow_1d_example() {
        let g = grid(1, 2);
        let lg = labels_1d(&g, &[0, 1, 1]);
        let (id, path) = path_follow(&lg).unwrap();
        let cell = &lg.grid.cells[id];
        let mut vs: Vec<Vec<u32>> = cell.vertices.iter().map(|v| v.0.clone()).collect();
        vs.sort();
        assert_eq!(
            vs,
            vec![vec![1, 1], vec![2, 0]],
            "expected the segment [0, 1/2]"
        );
        assert!(matches!(path.first(), Some(DualNode::Outside)));
        assert!(matches!(path.last(), Some(DualNode::Cell(i)) if *i == id));
    }

    #[test]
    fn path_follow_lands_in_enumeration() {
        for (n, m) in [(1usize, 5u32), (2, 4), (3, 2)] {
            let g = grid(n, m);
            for seed in 0..200u64 {
                let lg = random_labeling(&g, seed);
                let full: HashSet<usize> = enumerate_fully_labeled(&lg)
                    .unwrap()
                    .fully_labeled
                    .into_iter()
                    .collect();
                let (id, path) = path_follow(&lg).unwrap();
                assert!(full.contains(&id), "(n={n}, m={m}, seed={seed})");
                // Path length is bounded by the cell count plus OUTSIDE visits.
                assert!(path.len() <= 2 * lg.grid.cells.len() + 2);
            }
        }
    }

    #[test]
    fn path_follow_on_map_labeling_terminates() {
        let g = grid(2, 8);
        let rot = Rotation::new(2);
        let lg = match label_grid(&g, &rot, DEFAULT_TOL_FIX).unwrap() {
            GridLabeling::Complete(lg) => lg,
            GridLabeling::Hit(_) => panic!("no lattice vertex of m=8 is rotation-fixed"),
        };
        let (id, path) = path_follow(&lg).unwrap();
        assert!(path.len() <= lg.grid.cells.len() + 2);
        let full = enumerate_fully_labeled(&lg).unwrap().fully_labeled;
        assert!(full.contains(&id));
    }

    #[test]
    fn walker_agrees_with_dual_graph_start() {
        // The walk's first cell is the lowest-id boundary door of the dual.
        let g = grid(2, 5);
        for seed in [3u64, 17, 40] {
            let lg = random_labeling(&g, seed);
            let dual = build_dual_graph(&lg).unwrap();
            let mut boundary: Vec<usize> = dual
                .edges
                .iter()
                .filter_map(|&(a, b)| match (a, b) {
                    (DualNode::Outside, DualNode::Cell(id)) => Some(id),
                    (DualNode::Cell(id), DualNode::Outside) => Some(id),
                    _ => None,
                })
                .collect();
            boundary.sort_unstable();
            let (_, path) = path_follow(&lg).unwrap();
            match path[1] {
                DualNode::Cell(first) => assert_eq!(first, boundary[0], "seed {seed}"),
                DualNode::Outside => panic!("path must enter a cell first"),
            }
        }
    }
}
