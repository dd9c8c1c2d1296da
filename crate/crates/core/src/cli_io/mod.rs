//! Command plumbing shared by the CLI binary and the Python bindings.
//!
//! This layer turns textual flag values into maps and labelings, runs the
//! library pipelines, and assembles [`RunReport`]s that serialize to
//! canonical JSON (see [`json`]): keys sorted, floats at 17 significant
//! digits, so two runs with the same inputs emit identical bytes except for
//! the `timing_ms` field.
//!
//! Exit codes follow the drivers' second return value: 0 for success, 2 when
//! the refinement budget runs out ([`crate::Error::NotConverged`]); callers
//! map every other error to 1.

pub mod json;
pub mod labels;
pub mod svg;

pub use json::to_canonical_json;
pub use labels::{parse_label_file, write_label_file};
pub use svg::render_svg;

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::fixpoint_solver::{extract_cauchy, solve, SolverConfig};
use crate::labeling::{
    label_grid, random_labeling, GridLabeling, LabeledGrid, SimplexMap, DEFAULT_TOL_FIX,
};
use crate::maps::{AffineStochastic, Constant, Poly1d, Rotation};
use crate::reverse_construction::{build_pl_map, pl_fixpoint_exact};
use crate::simplex_grid::{build_grid, BaryPoint};
use crate::sperner_search::{
    build_dual_graph, check_handshake, enumerate_fully_labeled, path_follow, DualNode, Parity,
};

/// Report schema version, bumped on layout changes.
pub const REPORT_VERSION: &str = "1";

/// Flag values shared by all subcommands, before interpretation.
#[derive(Debug, Clone, Default)]
pub struct MapSourceArgs {
    pub n: Option<usize>,
    pub m: Option<u32>,
    pub function: Option<String>,
    pub point: Option<String>,
    pub coeffs: Option<String>,
    pub matrix: Option<String>,
    pub labels: Option<PathBuf>,
    pub random: Option<u64>,
    pub tau: Option<f64>,
}

/// A fully interpreted map description; serializes into the report config.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FunctionSpec {
    Rotation { n: usize },
    Constant { point: Vec<f64> },
    AffineStochastic { matrix: Vec<Vec<f64>> },
    Poly1d { coeffs: Vec<f64> },
    PlFromLabels { labels: PathBuf, tau: Option<f64> },
}

fn parse_f64_list(text: &str, flag: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::InvalidInput(format!("{flag}: '{t}' is not a number")))
        })
        .collect()
}

fn parse_matrix(text: &str) -> Result<Vec<Vec<f64>>> {
    text.split(';')
        .map(|row| parse_f64_list(row, "--matrix"))
        .collect()
}

fn require<T: Clone>(opt: &Option<T>, flag: &str, function: &str) -> Result<T> {
    opt.clone()
        .ok_or_else(|| Error::InvalidInput(format!("--fn {function} needs {flag}")))
}

impl FunctionSpec {
    /// Interprets `--fn` plus its companion flags.
    pub fn from_args(a: &MapSourceArgs) -> Result<FunctionSpec> {
        let name = a
            .function
            .as_deref()
            .ok_or_else(|| Error::InvalidInput("missing --fn <map>".into()))?;
        match name {
            "rotation" => Ok(FunctionSpec::Rotation {
                n: require(&a.n, "--n", name)?,
            }),
            "constant" => Ok(FunctionSpec::Constant {
                point: parse_f64_list(&require(&a.point, "--point", name)?, "--point")?,
            }),
            "affine_stochastic" => Ok(FunctionSpec::AffineStochastic {
                matrix: parse_matrix(&require(&a.matrix, "--matrix", name)?)?,
            }),
            "poly1d" => Ok(FunctionSpec::Poly1d {
                coeffs: parse_f64_list(&require(&a.coeffs, "--coeffs", name)?, "--coeffs")?,
            }),
            "pl_from_labels" => Ok(FunctionSpec::PlFromLabels {
                labels: require(&a.labels, "--labels", name)?,
                tau: a.tau,
            }),
            other => Err(Error::InvalidInput(format!(
                "unknown function '{other}' (expected rotation, constant, \
                 affine_stochastic, poly1d or pl_from_labels)"
            ))),
        }
    }

    /// Constructs the map this spec describes.
    pub fn build(&self) -> Result<Box<dyn SimplexMap>> {
        match self {
            FunctionSpec::Rotation { n } => {
                if *n == 0 {
                    return Err(Error::DegenerateDimension);
                }
                Ok(Box::new(Rotation::new(*n)))
            }
            FunctionSpec::Constant { point } => {
                Ok(Box::new(Constant::new(BaryPoint::new(point.clone())?)))
            }
            FunctionSpec::AffineStochastic { matrix } => {
                Ok(Box::new(AffineStochastic::new(matrix.clone())?))
            }
            FunctionSpec::Poly1d { coeffs } => Ok(Box::new(Poly1d::new(coeffs.clone())?)),
            FunctionSpec::PlFromLabels { labels, tau } => {
                let lg = read_label_file(labels)?;
                Ok(Box::new(build_pl_map(lg, *tau)?))
            }
        }
    }
}

fn read_label_file(path: &Path) -> Result<LabeledGrid> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::InvalidInput(format!("cannot read label file {}: {e}", path.display()))
    })?;
    parse_label_file(&text)
}

fn check_dim(map: &dyn SimplexMap, a: &MapSourceArgs) -> Result<()> {
    if let Some(n) = a.n {
        if n != map.dim() {
            return Err(Error::InvalidInput(format!(
                "--n {n} disagrees with {} which fixes n={}",
                map.name(),
                map.dim()
            )));
        }
    }
    Ok(())
}

/// Where a labeling comes from: a file, a seeded generator, or a map.
#[derive(Debug, Clone)]
pub enum LabelingSource {
    File(PathBuf),
    Random { n: usize, m: u32, seed: u64 },
    Map { spec: FunctionSpec, m: u32 },
}

/// A resolved labeling; map-induced labelings may instead stop on an exact
/// fixed vertex, which is a legitimate terminal outcome, not an error.
#[derive(Debug, Clone)]
pub enum ResolvedLabels {
    Grid(LabeledGrid),
    Hit(crate::labeling::FixedPointHit),
}

impl LabelingSource {
    /// Picks exactly one of `--labels`, `--random`, `--fn`.
    pub fn from_args(a: &MapSourceArgs) -> Result<LabelingSource> {
        let given = usize::from(a.labels.is_some())
            + usize::from(a.random.is_some())
            + usize::from(a.function.is_some());
        if given != 1 {
            return Err(Error::InvalidInput(
                "give exactly one labeling source: --labels <file>, --random <seed>, \
                 or --fn <map>"
                    .into(),
            ));
        }
        if let Some(path) = &a.labels {
            return Ok(LabelingSource::File(path.clone()));
        }
        if let Some(seed) = a.random {
            let n =
                a.n.ok_or_else(|| Error::InvalidInput("--random needs --n".into()))?;
            let m =
                a.m.ok_or_else(|| Error::InvalidInput("--random needs --m".into()))?;
            return Ok(LabelingSource::Random { n, m, seed });
        }
        let spec = FunctionSpec::from_args(a)?;
        let m =
            a.m.ok_or_else(|| Error::InvalidInput("labeling from --fn needs --m".into()))?;
        Ok(LabelingSource::Map { spec, m })
    }

    /// Produces the labeling plus a JSON description for the report config.
    pub fn resolve(&self, a: &MapSourceArgs) -> Result<(ResolvedLabels, Value)> {
        match self {
            LabelingSource::File(path) => {
                let lg = read_label_file(path)?;
                let desc = json!({
                    "kind": "file",
                    "path": path,
                    "n": lg.grid.n,
                    "m": lg.grid.m,
                });
                Ok((ResolvedLabels::Grid(lg), desc))
            }
            LabelingSource::Random { n, m, seed } => {
                let grid = Arc::new(build_grid(*n, *m)?);
                let lg = random_labeling(&grid, *seed);
                let desc = json!({"kind": "random", "n": n, "m": m, "seed": seed});
                Ok((ResolvedLabels::Grid(lg), desc))
            }
            LabelingSource::Map { spec, m } => {
                let map = spec.build()?;
                check_dim(map.as_ref(), a)?;
                let grid = Arc::new(build_grid(map.dim(), *m)?);
                let desc = json!({"kind": "map", "function": spec, "m": m});
                match label_grid(&grid, map.as_ref(), DEFAULT_TOL_FIX)? {
                    GridLabeling::Complete(lg) => Ok((ResolvedLabels::Grid(lg), desc)),
                    GridLabeling::Hit(hit) => Ok((ResolvedLabels::Hit(hit), desc)),
                }
            }
        }
    }
}

/// The JSON document every subcommand prints. `timing_ms` is the only field
/// excluded from byte-for-byte determinism.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub version: String,
    pub command: String,
    pub config: Value,
    pub result: Value,
    pub trace: Value,
    pub checks: Value,
    pub timing_ms: f64,
}

fn make_report(
    command: &str,
    config: Value,
    result: Value,
    trace: Value,
    checks: Value,
    started: Instant,
) -> RunReport {
    RunReport {
        version: REPORT_VERSION.into(),
        command: command.into(),
        config,
        result,
        trace,
        checks,
        timing_ms: started.elapsed().as_secs_f64() * 1e3,
    }
}

fn solver_config(a: &MapSourceArgs, tol: Option<f64>, m_max: Option<u32>) -> SolverConfig {
    let mut cfg = SolverConfig::default();
    if let Some(t) = tol {
        cfg.residual_tol = t;
    }
    if let Some(mm) = m_max {
        cfg.m_max = mm;
    }
    if let Some(mf) = a.m {
        cfg.m_first = mf;
    }
    cfg
}

/// `solve`: approximate a fixed point of `--fn` by mesh refinement.
pub fn cmd_solve(
    a: &MapSourceArgs,
    tol: Option<f64>,
    m_max: Option<u32>,
) -> Result<(RunReport, i32)> {
    let started = Instant::now();
    let spec = FunctionSpec::from_args(a)?;
    let map = spec.build()?;
    check_dim(map.as_ref(), a)?;
    let cfg = solver_config(a, tol, m_max);
    let config = json!({"function": spec, "solver": cfg});
    match solve(map.as_ref(), &cfg) {
        Ok(rep) => {
            let cauchy = extract_cauchy(&rep.trace);
            let result = json!({
                "converged": true,
                "exact_hit": rep.exact_hit,
                "point": rep.fixpoint.point,
                "residual": rep.fixpoint.residual,
                "witness": rep.fixpoint.witness,
            });
            let checks = json!({
                "bounds": rep.bound_reports,
                "cauchy": cauchy,
            });
            let trace = json!(rep.trace);
            Ok((
                make_report("solve", config, result, trace, checks, started),
                0,
            ))
        }
        Err(Error::NotConverged {
            residual,
            m_final,
            best,
        }) => {
            let result = json!({
                "converged": false,
                "exact_hit": false,
                "m_final": m_final,
                "point": best.point,
                "residual": best.residual,
                "residual_linf": residual,
                "witness": best.witness,
            });
            Ok((
                make_report("solve", config, result, json!([]), json!({}), started),
                2,
            ))
        }
        Err(e) => Err(e),
    }
}

/// `sperner`: enumerate fully labeled cells, check parity and handshake,
/// and follow the door path from OUTSIDE.
pub fn cmd_sperner(a: &MapSourceArgs) -> Result<(RunReport, i32)> {
    let started = Instant::now();
    let source = LabelingSource::from_args(a)?;
    let (resolved, desc) = source.resolve(a)?;
    let config = json!({"labels": desc});
    let lg = match resolved {
        ResolvedLabels::Hit(hit) => {
            let result = json!({
                "exact_hit": hit,
                "labeling_complete": false,
            });
            return Ok((
                make_report("sperner", config, result, json!([]), json!({}), started),
                0,
            ));
        }
        ResolvedLabels::Grid(lg) => lg,
    };

    let search = enumerate_fully_labeled(&lg)?;
    let dual = build_dual_graph(&lg)?;
    let handshake = check_handshake(&dual.to_undirected());
    let (path_cell, path) = path_follow(&lg)?;

    let mut histogram = std::collections::BTreeMap::<usize, usize>::new();
    for id in 0..dual.num_cells {
        *histogram
            .entry(dual.degree(DualNode::Cell(id)))
            .or_default() += 1;
    }
    let histogram: std::collections::BTreeMap<String, usize> = histogram
        .into_iter()
        .map(|(d, c)| (d.to_string(), c))
        .collect();

    let fully_labeled: Vec<Value> = search
        .fully_labeled
        .iter()
        .map(|&id| {
            let cell = &lg.grid.cells[id];
            let labels: Vec<u8> = cell
                .vertices
                .iter()
                .map(|v| lg.label_of(v).expect("cell vertex in grid"))
                .collect();
            json!({"cell": id, "vertices": cell.vertices, "labels": labels})
        })
        .collect();

    let result = json!({
        "cells": lg.grid.cells.len(),
        "fully_labeled": fully_labeled,
        "fully_labeled_count": search.fully_labeled.len(),
        "labeling_complete": true,
        "parity": search.count_parity,
        "path": path,
        "path_cell": path_cell,
    });
    let checks = json!({
        "degree_histogram": histogram,
        "handshake": handshake,
        "outside_degree": dual.outside_degree(),
        "parity_odd": search.count_parity == Parity::Odd,
        "path_lands_on_fully_labeled": search.fully_labeled.contains(&path_cell),
    });
    Ok((
        make_report("sperner", config, result, json!([]), checks, started),
        0,
    ))
}

/// `reverse`: build the piecewise-linear map of a labeling, find its fixed
/// point by solving, and confirm the located cell is fully labeled.
pub fn cmd_reverse(
    a: &MapSourceArgs,
    tol: Option<f64>,
    m_max: Option<u32>,
) -> Result<(RunReport, i32)> {
    let started = Instant::now();
    let source = LabelingSource::from_args(a)?;
    let (resolved, desc) = source.resolve(a)?;
    let lg = match resolved {
        ResolvedLabels::Grid(lg) => lg,
        ResolvedLabels::Hit(_) => {
            return Err(Error::InvalidInput(
                "map labeling stopped on an exact fixed vertex; reverse needs a \
                 complete labeling"
                    .into(),
            ))
        }
    };
    let pl = build_pl_map(lg, a.tau)?;
    let cfg = solver_config(a, tol, m_max);
    let config = json!({"labels": desc, "solver": cfg, "tau": pl.tau()});

    match crate::reverse_construction::fully_labeled_from_fixpoint(&pl, &cfg) {
        Ok(rev) => {
            let enumeration = enumerate_fully_labeled(pl.labeled())?;
            let agreement = enumeration.fully_labeled.contains(&rev.cell_id);
            let exact = pl_fixpoint_exact(&pl, rev.cell_id);
            let exact_residual = match &exact {
                Some(p) => Some(pl.eval_pl(p)?.linf_dist(p)),
                None => None,
            };
            let result = json!({
                "agreement": agreement,
                "cell": rev.cell_id,
                "exact_fixpoint": exact,
                "exact_residual_linf": exact_residual,
                "fixpoint": rev.fixpoint,
                "fully_labeled": true,
                "labels": rev.labels,
                "tau": pl.tau(),
                "vertices": rev.vertices,
            });
            let checks = json!({
                "agreement": agreement,
                "bounds": rev.solve.bound_reports,
                "exact_residual_small": exact_residual.is_some_and(|r| r <= 1e-12),
            });
            let trace = json!(rev.solve.trace);
            Ok((
                make_report("reverse", config, result, trace, checks, started),
                0,
            ))
        }
        Err(Error::NotConverged {
            residual,
            m_final,
            best,
        }) => {
            let result = json!({
                "converged": false,
                "m_final": m_final,
                "point": best.point,
                "residual_linf": residual,
            });
            Ok((
                make_report("reverse", config, result, json!([]), json!({}), started),
                2,
            ))
        }
        Err(e) => Err(e),
    }
}

/// `render`: draw a 2-dimensional labeling as SVG and write it to `out`.
pub fn cmd_render(a: &MapSourceArgs, out: &Path) -> Result<(RunReport, i32)> {
    let started = Instant::now();
    let source = LabelingSource::from_args(a)?;
    let (resolved, desc) = source.resolve(a)?;
    let lg = match resolved {
        ResolvedLabels::Grid(lg) => lg,
        ResolvedLabels::Hit(_) => {
            return Err(Error::InvalidInput(
                "map labeling stopped on an exact fixed vertex; render needs a \
                 complete labeling"
                    .into(),
            ))
        }
    };
    let svg_text = render_svg(&lg)?;
    std::fs::write(out, &svg_text)
        .map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", out.display())))?;
    let search = enumerate_fully_labeled(&lg)?;
    let config = json!({"labels": desc});
    let result = json!({
        "bytes": svg_text.len(),
        "cells": lg.grid.cells.len(),
        "fully_labeled_count": search.fully_labeled.len(),
        "svg_path": out,
    });
    Ok((
        make_report("render", config, result, json!([]), json!({}), started),
        0,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args() -> MapSourceArgs {
        MapSourceArgs::default()
    }

    #[test]
    fn function_specs_parse_and_build() {
        let mut a = args();
        a.function = Some("rotation".into());
        a.n = Some(2);
        let map = FunctionSpec::from_args(&a).unwrap().build().unwrap();
        assert_eq!(map.dim(), 2);

        let mut a = args();
        a.function = Some("constant".into());
        a.point = Some("0.2, 0.3, 0.5".into());
        let map = FunctionSpec::from_args(&a).unwrap().build().unwrap();
        assert_eq!(map.dim(), 2);

        let mut a = args();
        a.function = Some("poly1d".into());
        a.coeffs = Some("0.5,0,0.25".into());
        let map = FunctionSpec::from_args(&a).unwrap().build().unwrap();
        assert_eq!(map.dim(), 1);

        let mut a = args();
        a.function = Some("affine_stochastic".into());
        a.matrix = Some("0.5,0.25;0.5,0.75".into());
        let map = FunctionSpec::from_args(&a).unwrap().build().unwrap();
        assert_eq!(map.dim(), 1);
    }

    #[test]
    fn missing_flags_name_the_culprit() {
        let mut a = args();
        a.function = Some("rotation".into());
        let err = FunctionSpec::from_args(&a).unwrap_err().to_string();
        assert!(err.contains("--n"));

        let mut a = args();
        a.function = Some("spiral".into());
        let err = FunctionSpec::from_args(&a).unwrap_err().to_string();
        assert!(err.contains("unknown function 'spiral'"));

        let err = LabelingSource::from_args(&args()).unwrap_err().to_string();
        assert!(err.contains("exactly one labeling source"));
    }

    #[test]
    fn dimension_flag_must_agree_with_the_map() {
        let mut a = args();
        a.function = Some("poly1d".into());
        a.coeffs = Some("0.5".into());
        a.n = Some(2);
        let err = cmd_solve(&a, None, None).unwrap_err().to_string();
        assert!(err.contains("--n 2"));
    }

    #[test]
    fn solve_driver_reports_convergence() {
        let mut a = args();
        a.function = Some("rotation".into());
        a.n = Some(2);
        let (report, code) = cmd_solve(&a, Some(1e-6), None).unwrap();
        assert_eq!(code, 0);
        assert_eq!(report.command, "solve");
        assert_eq!(report.result["converged"], json!(true));
        let text = to_canonical_json(&report).unwrap();
        assert!(text.contains("\"converged\": true"));
    }

    #[test]
    fn solve_driver_signals_budget_exhaustion_with_code_2() {
        let mut a = args();
        a.function = Some("constant".into());
        a.point = Some("0.2,0.3,0.5".into());
        let (report, code) = cmd_solve(&a, Some(1e-13), Some(8)).unwrap();
        assert_eq!(code, 2);
        assert_eq!(report.result["converged"], json!(false));
        assert_eq!(report.result["m_final"], json!(8));
    }

    #[test]
    fn sperner_driver_summarizes_a_random_labeling() {
        let mut a = args();
        a.random = Some(42);
        a.n = Some(2);
        a.m = Some(5);
        let (report, code) = cmd_sperner(&a).unwrap();
        assert_eq!(code, 0);
        assert_eq!(report.checks["handshake"], json!(true));
        assert_eq!(report.checks["parity_odd"], json!(true));
        assert_eq!(report.checks["path_lands_on_fully_labeled"], json!(true));
        let count = report.result["fully_labeled_count"].as_u64().unwrap();
        assert_eq!(count % 2, 1);
    }

    #[test]
    fn sperner_driver_reports_exact_hits_from_map_labelings() {
        // The cyclic shift fixes the barycenter, a lattice vertex at m = 3.
        let mut a = args();
        a.function = Some("rotation".into());
        a.n = Some(2);
        a.m = Some(3);
        let (report, code) = cmd_sperner(&a).unwrap();
        assert_eq!(code, 0);
        assert_eq!(report.result["labeling_complete"], json!(false));
        assert!(report.result["exact_hit"].is_object());
    }

    #[test]
    fn reverse_driver_confirms_agreement() {
        let mut a = args();
        a.random = Some(7);
        a.n = Some(2);
        a.m = Some(4);
        let (report, code) = cmd_reverse(&a, None, None).unwrap();
        assert_eq!(code, 0);
        assert_eq!(report.checks["agreement"], json!(true));
        assert_eq!(report.checks["exact_residual_small"], json!(true));
    }

    #[test]
    fn render_driver_writes_the_file() {
        let dir = std::env::temp_dir().join("sperner-fixpoint-render-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("out.svg");
        let mut a = args();
        a.random = Some(3);
        a.n = Some(2);
        a.m = Some(3);
        let (report, code) = cmd_render(&a, &path).unwrap();
        assert_eq!(code, 0);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("<?xml"));
        assert_eq!(report.result["bytes"], json!(text.len()));
        std::fs::remove_file(&path).unwrap();
    }

    #[test]
    fn reports_serialize_identically_modulo_timing() {
        let mut a = args();
        a.random = Some(42);
        a.n = Some(2);
        a.m = Some(5);
        let (mut r1, _) = cmd_sperner(&a).unwrap();
        let (mut r2, _) = cmd_sperner(&a).unwrap();
        r1.timing_ms = 0.0;
        r2.timing_ms = 0.0;
        assert_eq!(
            to_canonical_json(&r1).unwrap(),
            to_canonical_json(&r2).unwrap()
        );
    }
}
