//! Built-in self-maps of the simplex.
//!
//! These cover the cases the CLI exposes and the test suite leans on: a
//! coordinate rotation (fixed point at the barycenter), a constant map, an
//! affine map given by a column-stochastic matrix, a 1-dimensional polynomial
//! in the parameterization x = (1-t, t), the identity, and a closure wrapper
//! for ad-hoc maps.

use crate::error::{Error, Result};
use crate::labeling::SimplexMap;
use crate::simplex_grid::BaryPoint;

/// Cyclic coordinate shift (x_0, ..., x_n) -> (x_n, x_0, ..., x_{n-1}).
/// Unique fixed point: the barycenter.
#[derive(Debug, Clone)]
pub struct Rotation {
    n: usize,
}

impl Rotation {
    pub fn new(n: usize) -> Rotation {
        Rotation { n }
    }
}

impl SimplexMap for Rotation {
    fn dim(&self) -> usize {
        self.n
    }

    fn name(&self) -> String {
        "rotation".into()
    }

    fn eval_raw(&self, x: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(x.len());
        out.push(x[x.len() - 1]);
        out.extend_from_slice(&x[..x.len() - 1]);
        out
    }
}

/// Constant map x -> c.
#[derive(Debug, Clone)]
pub struct Constant {
    c: BaryPoint,
}

impl Constant {
    pub fn new(c: BaryPoint) -> Constant {
        Constant { c }
    }

    pub fn point(&self) -> &BaryPoint {
        &self.c
    }
}

impl SimplexMap for Constant {
    fn dim(&self) -> usize {
        self.c.dim()
    }

    fn name(&self) -> String {
        "constant".into()
    }

    fn eval_raw(&self, _x: &[f64]) -> Vec<f64> {
        self.c.coords().to_vec()
    }
}

/// Identity map; every point is fixed.
#[derive(Debug, Clone)]
pub struct Identity {
    n: usize,
}

impl Identity {
    pub fn new(n: usize) -> Identity {
        Identity { n }
    }
}

impl SimplexMap for Identity {
    fn dim(&self) -> usize {
        self.n
    }

    fn name(&self) -> String {
        "identity".into()
    }

    fn eval_raw(&self, x: &[f64]) -> Vec<f64> {
        x.to_vec()
    }
}

/// Affine map f(x) = A x with A column-stochastic, so each column is itself a
/// point of the simplex and the simplex maps into itself.
#[derive(Debug, Clone)]
pub struct AffineStochastic {
    matrix: Vec<Vec<f64>>,
}

impl AffineStochastic {
    /// Validates shape, nonnegativity and column sums (within 1e-9).
    pub fn new(matrix: Vec<Vec<f64>>) -> Result<AffineStochastic> {
        let d = matrix.len();
        if d < 2 {
            return Err(Error::InvalidInput("matrix must be at least 2x2".into()));
        }
        if matrix.iter().any(|row| row.len() != d) {
            return Err(Error::InvalidInput("matrix must be square".into()));
        }
        for col in 0..d {
            let mut sum = 0.0;
            for row in &matrix {
                if row[col] < -1e-12 {
                    return Err(Error::InvalidInput(format!(
                        "matrix entry {} is negative",
                        row[col]
                    )));
                }
                sum += row[col];
            }
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidInput(format!(
                    "column {col} sums to {sum}, expected 1"
                )));
            }
        }
        Ok(AffineStochastic { matrix })
    }
}

impl SimplexMap for AffineStochastic {
    fn dim(&self) -> usize {
        self.matrix.len() - 1
    }

    fn name(&self) -> String {
        "affine_stochastic".into()
    }

    fn eval_raw(&self, x: &[f64]) -> Vec<f64> {
        self.matrix
            .iter()
            .map(|row| row.iter().zip(x).map(|(a, xi)| a * xi).sum())
            .collect()
    }
}

/// Polynomial self-map of the 1-simplex: t -> p(t) in the parameterization
/// x = (1-t, t), i.e. f(x) = (1 - p(x_1), p(x_1)).
#[derive(Debug, Clone)]
pub struct Poly1d {
    coeffs: Vec<f64>,
}

impl Poly1d {
    /// Checks p on a dense grid of sample points: every sample must lie in
    /// [0, 1] up to 1e-9. Between samples the excursion is bounded by
    /// sup|p'| over the gap, and evaluation clamps the value to [0, 1], so an
    /// accepted polynomial acts as a continuous self-map of [0, 1] that
    /// agrees with p wherever p is in range (which keeps boundary-touching
    /// maps such as t^2 admissible).
    pub fn new(coeffs: Vec<f64>) -> Result<Poly1d> {
        if coeffs.is_empty() {
            return Err(Error::InvalidInput("polynomial needs coefficients".into()));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("non-finite coefficient".into()));
        }
        let p = Poly1d { coeffs };
        let samples = 4096usize;
        for i in 0..=samples {
            let t = i as f64 / samples as f64;
            let v = p.horner(t);
            if !(-1e-9..=1.0 + 1e-9).contains(&v) {
                return Err(Error::InvalidInput(format!(
                    "polynomial leaves [0,1] near t={t} (p(t)={v})"
                )));
            }
        }
        Ok(p)
    }

    fn horner(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, a| acc * t + a)
    }
}

impl SimplexMap for Poly1d {
    fn dim(&self) -> usize {
        1
    }

    fn name(&self) -> String {
        "poly1d".into()
    }

    fn eval_raw(&self, x: &[f64]) -> Vec<f64> {
        let p = self.horner(x[1]).clamp(0.0, 1.0);
        vec![1.0 - p, p]
    }
}

/// Closure-backed map for tests and embeddings.
pub struct FnMap<F> {
    n: usize,
    name: String,
    f: F,
}

impl<F: Fn(&[f64]) -> Vec<f64> + Send + Sync> FnMap<F> {
    pub fn new(n: usize, name: &str, f: F) -> FnMap<F> {
        FnMap {
            n,
            name: name.into(),
            f,
        }
    }
}

impl<F: Fn(&[f64]) -> Vec<f64> + Send + Sync> SimplexMap for FnMap<F> {
    fn dim(&self) -> usize {
        self.n
    }

    fn name(&self) -> String {
        self.name.clone()
    }

    fn eval_raw(&self, x: &[f64]) -> Vec<f64> {
        (self.f)(x)
    }
}
