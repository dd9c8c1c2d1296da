//! Plain-text labeling files.
//!
//! One line per lattice vertex: the n+1 integer coordinates, a colon, and
//! the vertex label, e.g. `2 0 1 : 0` for a vertex of a mesh-3 grid on the
//! 2-simplex. Blank lines and `#` comments are skipped, vertices may appear
//! in any order, and the dimension and mesh are inferred from the first data
//! line. Every grid vertex must appear exactly once.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::labeling::LabeledGrid;
use crate::simplex_grid::{build_grid, LatticeVertex};

/// Parses a label file, inferring `n` and `m` from the first data line.
pub fn parse_label_file(text: &str) -> Result<LabeledGrid> {
    let mut entries: Vec<(usize, Vec<u32>, u8)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (coord_part, label_part) = line.split_once(':').ok_or_else(|| {
            Error::InvalidInput(format!(
                "line {line_no}: expected 'k_0 k_1 ... k_n : label', got '{line}'"
            ))
        })?;
        let coords = coord_part
            .split_whitespace()
            .map(|tok| {
                tok.parse::<u32>().map_err(|_| {
                    Error::InvalidInput(format!(
                        "line {line_no}: coordinate '{tok}' is not a nonnegative integer"
                    ))
                })
            })
            .collect::<Result<Vec<u32>>>()?;
        let label_tok = label_part.trim();
        let label = label_tok.parse::<u8>().map_err(|_| {
            Error::InvalidInput(format!(
                "line {line_no}: label '{label_tok}' is not an integer"
            ))
        })?;
        if coords.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "line {line_no}: a vertex needs at least 2 coordinates"
            )));
        }
        entries.push((line_no, coords, label));
    }
    let Some((first_line, first_coords, _)) = entries.first() else {
        return Err(Error::InvalidInput("label file has no data lines".into()));
    };
    let n = first_coords.len() - 1;
    let m: u32 = first_coords.iter().sum();
    if m == 0 {
        return Err(Error::InvalidInput(format!(
            "line {first_line}: coordinates sum to 0; the mesh must be at least 1"
        )));
    }

    let grid = Arc::new(build_grid(n, m)?);
    let mut assigned: Vec<Option<(usize, u8)>> = vec![None; grid.vertices.len()];
    for (line_no, coords, label) in entries {
        if coords.len() != n + 1 {
            return Err(Error::InvalidInput(format!(
                "line {line_no}: expected {} coordinates (line 1 fixes n={n}), got {}",
                n + 1,
                coords.len()
            )));
        }
        let sum: u32 = coords.iter().sum();
        if sum != m {
            return Err(Error::InvalidInput(format!(
                "line {line_no}: coordinates sum to {sum}, but line 1 fixes the mesh m={m}"
            )));
        }
        if usize::from(label) > n {
            return Err(Error::InvalidInput(format!(
                "line {line_no}: label {label} out of range 0..={n}"
            )));
        }
        let v = LatticeVertex(coords);
        let id = grid
            .vertex_id(&v)
            .ok_or_else(|| Error::InvalidInput(format!("line {line_no}: unknown vertex {v}")))?;
        if let Some((prev_line, _)) = assigned[id] {
            return Err(Error::InvalidInput(format!(
                "line {line_no}: vertex {v} already labeled on line {prev_line}"
            )));
        }
        assigned[id] = Some((line_no, label));
    }
    if let Some(missing) = assigned.iter().position(Option::is_none) {
        let total = assigned.iter().filter(|a| a.is_none()).count();
        return Err(Error::InvalidInput(format!(
            "{total} of {} vertices have no label (first missing: {})",
            grid.vertices.len(),
            grid.vertices[missing]
        )));
    }

    let labels: Vec<u8> = assigned
        .iter()
        .map(|a| a.expect("checked above").1)
        .collect();
    let lookup = grid.clone();
    LabeledGrid::from_fn(grid, |v| labels[lookup.vertex_id(v).expect("grid vertex")])
}

/// Renders a labeling in the file format that [`parse_label_file`] reads.
pub fn write_label_file(lg: &LabeledGrid) -> String {
    let mut out = format!(
        "# mesh-{} grid on the {}-simplex: coordinates : label\n",
        lg.grid.m, lg.grid.n
    );
    for (v, &label) in lg.grid.vertices.iter().zip(&lg.labels) {
        let coords: Vec<String> = v.0.iter().map(u32::to_string).collect();
        out.push_str(&coords.join(" "));
        out.push_str(&format!(" : {label}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labeling::random_labeling;

    #[test]
    fn round_trip_preserves_every_label() {
        let grid = Arc::new(build_grid(2, 3).unwrap());
        let lg = random_labeling(&grid, 7);
        let text = write_label_file(&lg);
        let back = parse_label_file(&text).unwrap();
        assert_eq!(back.grid.n, 2);
        assert_eq!(back.grid.m, 3);
        assert_eq!(back.labels, lg.labels);
    }

    #[test]
    fn comments_blanks_and_order_are_free() {
        let text = "\n# a comment\n  1 1 : 1\n2 0 : 0\n\n0 2 : 1\n";
        let lg = parse_label_file(text).unwrap();
        assert_eq!(lg.grid.n, 1);
        assert_eq!(lg.grid.m, 2);
        assert_eq!(lg.label_of(&LatticeVertex(vec![2, 0])), Some(0));
        assert_eq!(lg.label_of(&LatticeVertex(vec![1, 1])), Some(1));
        assert_eq!(lg.label_of(&LatticeVertex(vec![0, 2])), Some(1));
    }

    fn err_of(text: &str) -> String {
        parse_label_file(text).unwrap_err().to_string()
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        assert!(err_of("2 0 0\n").contains("line 1"));
        assert!(err_of("2 0 : 0\n1 x : 1\n").contains("line 2"));
        assert!(err_of("2 0 : 0\n1 1 : 9\n").contains("out of range"));
        assert!(err_of("2 0 : 0\n1 1 1 : 1\n").contains("expected 2 coordinates"));
        assert!(err_of("2 0 : 0\n1 2 : 1\n").contains("sum to 3"));
        let dup = err_of("2 0 : 0\n1 1 : 1\n1 1 : 0\n");
        assert!(dup.contains("line 3") && dup.contains("already labeled on line 2"));
        assert!(err_of("2 0 : 0\n").contains("no label"));
        assert!(err_of("").contains("no data lines"));
        assert!(err_of("0 0 : 0\n").contains("mesh must be at least 1"));
    }
}
