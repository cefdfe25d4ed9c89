use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use super::{Element, HamiltonAlgebra, Operator, OperatorAlgebra};

/// Dimension of `{x : f α x = 0 for all f}` inside the Hermitian operators.
#[derive(Debug, Clone, Serialize)]
pub struct CenterReport {
    pub dim: usize,
    pub center_dimension: usize,
    /// The unit spans the center (the algebra is central).
    pub central: bool,
    pub smallest_nonzero_singular_value: f64,
}

/// Real orthonormal basis of the `dim x dim` Hermitian matrices.
pub(crate) fn hermitian_basis(dim: usize) -> Vec<Operator> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(dim * dim);
    for i in 0..dim {
        out.push(Operator::matrix_unit(dim, i, i));
        for j in (i + 1)..dim {
            let mut s = DMatrix::zeros(dim, dim);
            s[(i, j)] = Complex64::new(r, 0.0);
            s[(j, i)] = Complex64::new(r, 0.0);
            out.push(Operator::from_parts(s, true));
            let mut a = DMatrix::zeros(dim, dim);
            a[(i, j)] = Complex64::new(0.0, -r);
            a[(j, i)] = Complex64::new(0.0, r);
            out.push(Operator::from_parts(a, true));
        }
    }
    out
}

/// Computes the center of the full matrix realization by the null space of
/// `x ↦ (b α x)_b` over a Hermitian basis.
pub fn center_dimension(alg: &OperatorAlgebra, rel_tol: f64) -> CenterReport {
    let d = alg.dim();
    let basis = hermitian_basis(d);
    let n = basis.len();
    let rows = n * d * d * 2;
    let mut map = DMatrix::<f64>::zeros(rows, n);
    for (col, x) in basis.iter().enumerate() {
        let mut row = 0;
        for b in &basis {
            let v = alg.alpha(b, x).expect("basis shapes match");
            for z in v.matrix().iter() {
                map[(row, col)] = z.re;
                map[(row + 1, col)] = z.im;
                row += 2;
            }
        }
    }
    let sv = map.singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let null = sv.iter().filter(|s| **s <= rel_tol * max).count();
    let smallest_nonzero = sv.iter().cloned().filter(|s| *s > rel_tol * max).fold(f64::INFINITY, f64::min);
    let unit_in_kernel = basis.iter().all(|b| alg.alpha(b, &alg.unit()).map(|v| v.norm() == 0.0).unwrap_or(false));
    CenterReport {
        dim: d,
        center_dimension: null,
        central: null == 1 && unit_in_kernel,
        smallest_nonzero_singular_value: smallest_nonzero,
    }
}
