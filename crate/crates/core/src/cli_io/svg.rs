//! Deterministic SVG rendering of labeled grids on the 2-simplex.
//!
//! The simplex is drawn as an equilateral triangle with a 1000-unit edge:
//! corner e0 bottom-left, e1 bottom-right, e2 top. Fully labeled cells are
//! shaded, door facets (label set {0, 1}) are drawn thick, and each lattice
//! vertex shows its label as colored text. All coordinates are emitted with
//! three decimals and every container is iterated in a fixed order, so the
//! same labeling always renders to the same bytes.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::labeling::{validate_sperner, LabeledGrid};
use crate::simplex_grid::LatticeVertex;
use crate::sperner_search::{is_door, is_fully_labeled};

const EDGE: f64 = 1000.0;
const HEIGHT: f64 = 866.025_403_784_438_6; // EDGE * sqrt(3) / 2
const PAD: f64 = 50.0;

fn project(v: &LatticeVertex, m: u32) -> (f64, f64) {
    let m = f64::from(m);
    let x1 = f64::from(v.0[1]) / m;
    let x2 = f64::from(v.0[2]) / m;
    (EDGE * x1 + EDGE / 2.0 * x2, HEIGHT * (1.0 - x2))
}

const LABEL_COLORS: [&str; 3] = ["#1d3557", "#2a9d8f", "#b5179e"];
const FILL_FULL: &str = "#f6bd60";
const STROKE_GRID: &str = "#9aa3af";
const STROKE_DOOR: &str = "#d62828";

/// Renders a conforming 2-dimensional labeling to SVG text.
pub fn render_svg(lg: &LabeledGrid) -> Result<String> {
    let n = lg.grid.n;
    if n != 2 {
        return Err(Error::InvalidInput(format!(
            "rendering draws the 2-simplex only; got n={n}"
        )));
    }
    let violations = validate_sperner(lg);
    if !violations.is_empty() {
        return Err(Error::NonconformingLabeling(violations));
    }
    let m = lg.grid.m;

    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{:.3} {:.3} {:.3} {:.3}\">",
        -PAD,
        -PAD,
        EDGE + 2.0 * PAD,
        HEIGHT + 2.0 * PAD
    );

    // Shade fully labeled cells first so edges draw on top of the fill.
    for cell in &lg.grid.cells {
        let labels: Vec<u8> = cell
            .vertices
            .iter()
            .map(|v| lg.label_of(v).expect("cell vertex is a grid vertex"))
            .collect();
        if !is_fully_labeled(n, &labels) {
            continue;
        }
        let points: Vec<String> = cell
            .vertices
            .iter()
            .map(|v| {
                let (x, y) = project(v, m);
                format!("{x:.3},{y:.3}")
            })
            .collect();
        let _ = writeln!(
            out,
            "  <polygon points=\"{}\" fill=\"{FILL_FULL}\" stroke=\"none\"/>",
            points.join(" ")
        );
    }

    // Facet edges, doors last so their stroke overlays the grid stroke.
    let mut doors = Vec::new();
    for facet in lg.grid.facet_adjacency().keys() {
        let labels: Vec<u8> = facet
            .iter()
            .map(|v| lg.label_of(v).expect("facet vertex is a grid vertex"))
            .collect();
        let (xa, ya) = project(&facet[0], m);
        let (xb, yb) = project(&facet[1], m);
        let line = format!("x1=\"{xa:.3}\" y1=\"{ya:.3}\" x2=\"{xb:.3}\" y2=\"{yb:.3}\"");
        if is_door(n, &labels) {
            doors.push(line);
        } else {
            let _ = writeln!(
                out,
                "  <line {line} stroke=\"{STROKE_GRID}\" stroke-width=\"1.5\"/>"
            );
        }
    }
    for line in doors {
        let _ = writeln!(
            out,
            "  <line {line} stroke=\"{STROKE_DOOR}\" stroke-width=\"5\"/>"
        );
    }

    // Vertex labels as text, sized to the cell edge length.
    let font = (350.0 / f64::from(m)).clamp(10.0, 60.0);
    for (v, &label) in lg.grid.vertices.iter().zip(&lg.labels) {
        let (x, y) = project(v, m);
        let color = LABEL_COLORS[usize::from(label)];
        let _ = writeln!(
            out,
            "  <text x=\"{x:.3}\" y=\"{y:.3}\" font-size=\"{font:.3}\" \
             font-family=\"sans-serif\" text-anchor=\"middle\" \
             dominant-baseline=\"central\" fill=\"{color}\">{label}</text>"
        );
    }

    out.push_str("</svg>\n");
    Ok(out)
}
