use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::Composable;
use crate::algebra::operator::{matrix_from_entries, row_major_entries};
use crate::algebra::{ComplexElement, Element, Monomial, Operator, OperatorAlgebra, PhasePoly, PhaseSpaceAlgebra};
use crate::error::{shape_err, Result};

type Mat = DMatrix<Complex64>;

/// A polynomial in classical canonical pairs whose coefficients are complex
/// matrices: an operator-valued phase-space function `Σ X_m x^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridElement {
    dim: usize,
    num_pairs: usize,
    parts: BTreeMap<Monomial, Mat>,
    hermitian: bool,
}

fn is_zero_matrix(m: &Mat) -> bool {
    m.iter().all(|z| z.re == 0.0 && z.im == 0.0)
}

impl HybridElement {
    pub fn zero(dim: usize, num_pairs: usize) -> Self {
        HybridElement { dim, num_pairs, parts: BTreeMap::new(), hermitian: true }
    }

    /// `X ⊗ poly`.
    pub fn simple(x: &Operator, poly: &PhasePoly) -> Self {
        let mut out = HybridElement::zero(x.dim(), poly.num_pairs());
        out.hermitian = x.is_flagged_hermitian();
        for (e, c) in poly.terms() {
            out.accumulate(e.clone(), x.matrix() * Complex64::new(*c, 0.0));
        }
        out.prune();
        out
    }

    /// Builds from `(exponents, matrix)` parts; the flag is set only if every
    /// coefficient is Hermitian to `1e-12` relative.
    pub fn from_parts(dim: usize, num_pairs: usize, parts: impl IntoIterator<Item = (Monomial, Mat)>) -> Result<Self> {
        let mut out = HybridElement::zero(dim, num_pairs);
        for (e, m) in parts {
            if e.len() != 2 * num_pairs {
                return Err(shape_err("exponent vector length", e.len(), 2 * num_pairs));
            }
            if m.nrows() != dim || m.ncols() != dim {
                return Err(shape_err("coefficient matrix", (m.nrows(), m.ncols()), dim));
            }
            out.accumulate(e, m);
        }
        out.prune();
        out.hermitian = out.parts.values().all(|m| (m - m.adjoint()).norm() <= 1e-12 * m.norm().max(1.0));
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_pairs(&self) -> usize {
        self.num_pairs
    }

    pub fn parts(&self) -> &BTreeMap<Monomial, Mat> {
        &self.parts
    }

    pub fn coefficient(&self, exponents: &[u32]) -> Option<&Mat> {
        self.parts.get(exponents)
    }

    pub fn is_flagged_hermitian(&self) -> bool {
        self.hermitian
    }

    /// `sqrt(Σ_m ‖X_m - X_m†‖²)`.
    pub fn hermiticity_defect(&self) -> f64 {
        self.parts.values().map(|m| (m - m.adjoint()).norm_squared()).sum::<f64>().sqrt()
    }

    /// Re-derives the Hermitian flag from the coefficients (`1e-12` relative).
    pub fn refresh_flag(mut self) -> Self {
        self.hermitian = self.parts.values().all(|m| (m - m.adjoint()).norm() <= 1e-12 * m.norm().max(1.0));
        self
    }

    pub(crate) fn with_flag(mut self, hermitian: bool) -> Self {
        self.hermitian = hermitian;
        self
    }

    fn accumulate(&mut self, e: Monomial, m: Mat) {
        match self.parts.get_mut(&e) {
            Some(existing) => *existing += m,
            None => {
                self.parts.insert(e, m);
            }
        }
    }

    fn prune(&mut self) {
        self.parts.retain(|_, m| !is_zero_matrix(m));
    }

    pub(crate) fn check_shape(&self, other: &HybridElement) -> Result<()> {
        if self.dim != other.dim || self.num_pairs != other.num_pairs {
            return Err(shape_err("hybrid shape", (self.dim, self.num_pairs), (other.dim, other.num_pairs)));
        }
        Ok(())
    }

    /// Sums `coeff(A, B) · {monomial product}` over every pair of parts.
    fn pairwise<F>(&self, other: &HybridElement, mut term: F) -> Result<HybridElement>
    where
        F: FnMut(&Monomial, &Mat, &Monomial, &Mat) -> Vec<(Monomial, Mat)>,
    {
        self.check_shape(other)?;
        let mut out = HybridElement::zero(self.dim, self.num_pairs);
        for (ea, a) in &self.parts {
            for (eb, b) in &other.parts {
                for (e, m) in term(ea, a, eb, b) {
                    out.accumulate(e, m);
                }
            }
        }
        out.prune();
        out.hermitian = false;
        Ok(out)
    }

    /// Pointwise product `U(x) V(x)` (matrix product, operand order kept).
    pub fn mul(&self, other: &HybridElement) -> Result<HybridElement> {
        self.pairwise(other, |ea, a, eb, b| vec![(add_exps(ea, eb), a * b)])
    }

    /// Pointwise `(UV - VU)/(iħ)`.
    pub fn commutator_bracket(&self, other: &HybridElement, hbar: f64) -> Result<HybridElement> {
        let k = Complex64::new(0.0, -1.0 / hbar);
        let out = self.pairwise(other, |ea, a, eb, b| vec![(add_exps(ea, eb), (a * b - b * a) * k)])?;
        Ok(out.with_flag(self.hermitian && other.hermitian))
    }

    /// Pointwise `(UV + VU)/2`.
    pub fn anticommutator_bracket(&self, other: &HybridElement) -> Result<HybridElement> {
        let half = Complex64::new(0.5, 0.0);
        let out = self.pairwise(other, |ea, a, eb, b| vec![(add_exps(ea, eb), (a * b + b * a) * half)])?;
        Ok(out.with_flag(self.hermitian && other.hermitian))
    }

    /// `Σ_k ∂U/∂x_k ∂V/∂p_k - ∂U/∂p_k ∂V/∂x_k`, coefficient matrices multiplied
    /// in the written order (U's coefficient on the left).
    pub fn poisson_ordered(&self, other: &HybridElement) -> Result<HybridElement> {
        let n = self.num_pairs;
        self.pairwise(other, |ea, a, eb, b| {
            let pb = PhasePoly::monomial(n, ea.clone(), 1.0)
                .poisson(&PhasePoly::monomial(n, eb.clone(), 1.0))
                .expect("same pair count");
            if pb.is_empty() {
                return Vec::new();
            }
            let ab = a * b;
            pb.terms().iter().map(|(e, c)| (e.clone(), &ab * Complex64::new(*c, 0.0))).collect()
        })
    }

    fn same_shape(&self, other: &Self) {
        assert!(self.dim == other.dim && self.num_pairs == other.num_pairs, "hybrid shape mismatch");
    }

    fn map_parts(&self, f: impl Fn(&Mat) -> Mat, hermitian: bool) -> Self {
        let mut out = HybridElement {
            dim: self.dim,
            num_pairs: self.num_pairs,
            parts: self.parts.iter().map(|(e, m)| (e.clone(), f(m))).collect(),
            hermitian,
        };
        out.prune();
        out
    }
}

pub(crate) fn add_exps(a: &[u32], b: &[u32]) -> Monomial {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

impl Element for HybridElement {
    fn add(&self, other: &Self) -> Self {
        self.same_shape(other);
        let mut out = self.clone();
        for (e, m) in &other.parts {
            out.accumulate(e.clone(), m.clone());
        }
        out.prune();
        out.hermitian = self.hermitian && other.hermitian;
        out
    }

    fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    fn scale(&self, k: f64) -> Self {
        self.map_parts(|m| m * Complex64::new(k, 0.0), self.hermitian)
    }

    fn norm(&self) -> f64 {
        self.parts.values().map(|m| m.norm_squared()).sum::<f64>().sqrt()
    }
}

impl ComplexElement for HybridElement {
    fn scale_complex(&self, z: Complex64) -> Self {
        self.map_parts(|m| m * z, self.hermitian && z.im == 0.0)
    }
}

#[derive(Serialize, Deserialize)]
struct PartRepr {
    exponents: Monomial,
    entries: Vec<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
struct HybridRepr {
    kind: String,
    dim: usize,
    num_pairs: usize,
    hermitian: bool,
    parts: Vec<PartRepr>,
}

impl Serialize for HybridElement {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        HybridRepr {
            kind: "hybrid".into(),
            dim: self.dim,
            num_pairs: self.num_pairs,
            hermitian: self.hermitian,
            parts: self
                .parts
                .iter()
                .map(|(e, m)| PartRepr { exponents: e.clone(), entries: row_major_entries(m) })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for HybridElement {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let r = HybridRepr::deserialize(d)?;
        if r.kind != "hybrid" {
            return Err(D::Error::custom(format!("expected kind hybrid, got {}", r.kind)));
        }
        let mut parts = Vec::with_capacity(r.parts.len());
        for p in r.parts {
            let m = matrix_from_entries(r.dim, &p.entries)
                .ok_or_else(|| D::Error::custom("entry count does not match dim"))?;
            parts.push((p.exponents, m));
        }
        let out = HybridElement::from_parts(r.dim, r.num_pairs, parts).map_err(D::Error::custom)?;
        Ok(out.with_flag(r.hermitian))
    }
}

impl Composable<PhaseSpaceAlgebra> for OperatorAlgebra {
    type Tensor = HybridElement;

    fn tensor(&self, _right: &PhaseSpaceAlgebra, f: &Operator, g: &PhasePoly) -> HybridElement {
        HybridElement::simple(f, g)
    }

    fn decompose(&self, right: &PhaseSpaceAlgebra, u: &HybridElement) -> Vec<(Operator, PhasePoly)> {
        u.parts
            .iter()
            .map(|(e, m)| {
                (Operator::from_parts(m.clone(), u.hermitian), PhasePoly::monomial(right.num_pairs(), e.clone(), 1.0))
            })
            .collect()
    }

    fn tensor_zero(&self, right: &PhaseSpaceAlgebra) -> HybridElement {
        HybridElement::zero(self.dim(), right.num_pairs())
    }

    fn check_tensor(&self, right: &PhaseSpaceAlgebra, u: &HybridElement) -> Result<()> {
        if u.dim != self.dim() || u.num_pairs != right.num_pairs() {
            return Err(shape_err("hybrid shape", (u.dim, u.num_pairs), (self.dim(), right.num_pairs())));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::pauli;

    #[test]
    fn simple_tensors() {
        let e = HybridElement::simple(&pauli::z(), &PhasePoly::constant(1, 1.0));
        assert_eq!(e.parts().len(), 1);
        assert_eq!(e.coefficient(&[0, 0]).unwrap(), pauli::z().matrix());

        let xp = PhasePoly::monomial(1, vec![1, 1], 1.0);
        let u = HybridElement::simple(&pauli::x(), &xp);
        assert_eq!(u.coefficient(&[1, 1]).unwrap(), pauli::x().matrix());
        assert!(u.is_flagged_hermitian());
    }

    #[test]
    fn poisson_keeps_operand_order() {
        let x = HybridElement::simple(&pauli::x(), &PhasePoly::x(1, 0));
        let y = HybridElement::simple(&pauli::y(), &PhasePoly::p(1, 0));
        // {X x, Y p} = XY {x,p} = XY
        let pb = x.poisson_ordered(&y).unwrap();
        let xy = pauli::x().matmul(&pauli::y()).unwrap();
        assert_eq!(pb.coefficient(&[0, 0]).unwrap(), xy.matrix());
        let pb_rev = y.poisson_ordered(&x).unwrap();
        let yx = pauli::y().matmul(&pauli::x()).unwrap();
        assert_eq!(pb_rev.coefficient(&[0, 0]).unwrap(), &(-yx.matrix()));
    }

    #[test]
    fn json_round_trip_and_shape_errors() {
        let u = HybridElement::simple(&pauli::y(), &PhasePoly::x(1, 0));
        let s = serde_json::to_string(&u).unwrap();
        let back: HybridElement = serde_json::from_str(&s).unwrap();
        assert_eq!(back, u);
        let v = HybridElement::simple(&pauli::y(), &PhasePoly::x(2, 0));
        assert!(u.mul(&v).is_err());
    }
}
