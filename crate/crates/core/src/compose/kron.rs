use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::Composable;
use crate::algebra::centrality::hermitian_basis;
use crate::algebra::operator::{matrix_from_entries, row_major_entries};
#[cfg(test)]
use crate::algebra::HamiltonAlgebra;
use crate::algebra::{ComplexElement, Element, Operator, OperatorAlgebra};
use crate::error::{shape_err, Result};

/// An element of the quantum⊗quantum tensor space, stored as its Kronecker matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct KroneckerElement {
    left_dim: usize,
    right_dim: usize,
    op: Operator,
}

impl KroneckerElement {
    pub fn new(left_dim: usize, right_dim: usize, op: Operator) -> Result<Self> {
        if op.dim() != left_dim * right_dim {
            return Err(shape_err("kronecker dimension", op.dim(), left_dim * right_dim));
        }
        Ok(KroneckerElement { left_dim, right_dim, op })
    }

    pub fn simple(f: &Operator, g: &Operator) -> Self {
        KroneckerElement { left_dim: f.dim(), right_dim: g.dim(), op: f.kron(g) }
    }

    pub fn zeros(left_dim: usize, right_dim: usize) -> Self {
        KroneckerElement { left_dim, right_dim, op: Operator::zeros(left_dim * right_dim) }
    }

    pub fn left_dim(&self) -> usize {
        self.left_dim
    }

    pub fn right_dim(&self) -> usize {
        self.right_dim
    }

    pub fn operator(&self) -> &Operator {
        &self.op
    }

    fn with_op(&self, op: Operator) -> Self {
        KroneckerElement { left_dim: self.left_dim, right_dim: self.right_dim, op }
    }

    /// Splits into `Σ_k B_k ⊗ C_k` over a Hermitian orthonormal basis `B_k` of
    /// the left factor; `C_k` is Hermitian whenever the element is.
    pub fn hermitian_decomposition(&self) -> Vec<(Operator, Operator)> {
        let (d1, d2) = (self.left_dim, self.right_dim);
        let m = self.op.matrix();
        let zero = Complex64::new(0.0, 0.0);
        hermitian_basis(d1)
            .into_iter()
            .filter_map(|b| {
                let mut c = DMatrix::<Complex64>::zeros(d2, d2);
                for i in 0..d1 {
                    for j in 0..d1 {
                        let w = b.matrix()[(i, j)].conj();
                        if w != zero {
                            c += m.view((i * d2, j * d2), (d2, d2)) * w;
                        }
                    }
                }
                if c.iter().all(|z| *z == zero) {
                    None
                } else {
                    Some((b, Operator::from_parts(c, self.op.is_flagged_hermitian())))
                }
            })
            .collect()
    }

    fn same_shape(&self, other: &Self) {
        assert!(self.left_dim == other.left_dim && self.right_dim == other.right_dim, "kronecker shape mismatch");
    }
}

impl Element for KroneckerElement {
    fn add(&self, other: &Self) -> Self {
        self.same_shape(other);
        self.with_op(self.op.add(&other.op))
    }

    fn sub(&self, other: &Self) -> Self {
        self.same_shape(other);
        self.with_op(self.op.sub(&other.op))
    }

    fn scale(&self, k: f64) -> Self {
        self.with_op(self.op.scale(k))
    }

    fn norm(&self) -> f64 {
        self.op.norm()
    }
}

impl ComplexElement for KroneckerElement {
    fn scale_complex(&self, z: Complex64) -> Self {
        self.with_op(self.op.scale_complex(z))
    }
}

#[derive(Serialize, Deserialize)]
struct KronRepr {
    kind: String,
    left_dim: usize,
    right_dim: usize,
    hermitian: bool,
    entries: Vec<[f64; 2]>,
}

impl Serialize for KroneckerElement {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        KronRepr {
            kind: "kronecker".into(),
            left_dim: self.left_dim,
            right_dim: self.right_dim,
            hermitian: self.op.is_flagged_hermitian(),
            entries: row_major_entries(self.op.matrix()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for KroneckerElement {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let r = KronRepr::deserialize(d)?;
        if r.kind != "kronecker" {
            return Err(D::Error::custom(format!("expected kind kronecker, got {}", r.kind)));
        }
        let m = matrix_from_entries(r.left_dim * r.right_dim, &r.entries)
            .ok_or_else(|| D::Error::custom("entry count does not match dims"))?;
        Ok(KroneckerElement { left_dim: r.left_dim, right_dim: r.right_dim, op: Operator::from_parts(m, r.hermitian) })
    }
}

impl Composable<OperatorAlgebra> for OperatorAlgebra {
    type Tensor = KroneckerElement;

    fn tensor(&self, _right: &OperatorAlgebra, f: &Operator, g: &Operator) -> KroneckerElement {
        KroneckerElement::simple(f, g)
    }

    fn decompose(&self, _right: &OperatorAlgebra, u: &KroneckerElement) -> Vec<(Operator, Operator)> {
        u.hermitian_decomposition()
    }

    fn tensor_zero(&self, right: &OperatorAlgebra) -> KroneckerElement {
        KroneckerElement::zeros(self.dim(), right.dim())
    }

    fn check_tensor(&self, right: &OperatorAlgebra, u: &KroneckerElement) -> Result<()> {
        if u.left_dim != self.dim() || u.right_dim != right.dim() {
            return Err(shape_err("kronecker factor dims", (u.left_dim, u.right_dim), (self.dim(), right.dim())));
        }
        Ok(())
    }
}
