use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{AlgebraDescriptor, ComplexElement, Element, HamiltonAlgebra, QuantumConstant};
use crate::error::{shape_err, AlgebraError, Result};

const HERMITIAN_TOL: f64 = 1e-12;

/// A finite-dimensional complex matrix, optionally flagged as self-adjoint.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    m: DMatrix<Complex64>,
    hermitian: bool,
}

impl Operator {
    /// Wraps a square matrix without asserting self-adjointness.
    pub fn new(m: DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() == 0 || m.nrows() != m.ncols() {
            return Err(AlgebraError::Shape(format!(
                "operator must be square with dim >= 1, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(Operator { m, hermitian: false })
    }

    /// Wraps a matrix that must equal its conjugate transpose.
    pub fn hermitian(m: DMatrix<Complex64>) -> Result<Self> {
        let mut op = Operator::new(m)?;
        let scale = op.m.norm().max(1.0);
        let skew = (&op.m - op.m.adjoint()).norm();
        if skew > HERMITIAN_TOL * scale {
            return Err(AlgebraError::InvalidParameter(format!("matrix is not Hermitian (‖M - M†‖ = {skew:e})")));
        }
        op.hermitian = true;
        Ok(op)
    }

    pub(crate) fn from_parts(m: DMatrix<Complex64>, hermitian: bool) -> Self {
        Operator { m, hermitian }
    }

    pub fn identity(dim: usize) -> Self {
        Operator { m: DMatrix::identity(dim, dim), hermitian: true }
    }

    pub fn zeros(dim: usize) -> Self {
        Operator { m: DMatrix::zeros(dim, dim), hermitian: true }
    }

    /// Matrix unit `E_ij`.
    pub fn matrix_unit(dim: usize, i: usize, j: usize) -> Self {
        let mut m = DMatrix::zeros(dim, dim);
        m[(i, j)] = Complex64::new(1.0, 0.0);
        Operator { m, hermitian: i == j }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.m
    }

    pub fn is_flagged_hermitian(&self) -> bool {
        self.hermitian
    }

    /// `‖M - M†‖_F`.
    pub fn hermiticity_defect(&self) -> f64 {
        (&self.m - self.m.adjoint()).norm()
    }

    pub fn adjoint(&self) -> Self {
        Operator { m: self.m.adjoint(), hermitian: self.hermitian }
    }

    /// Plain matrix product.
    pub fn matmul(&self, other: &Operator) -> Result<Operator> {
        self.check_dim(other)?;
        Ok(Operator { m: &self.m * &other.m, hermitian: false })
    }

    pub fn kron(&self, other: &Operator) -> Operator {
        Operator { m: self.m.kronecker(&other.m), hermitian: self.hermitian && other.hermitian }
    }

    pub(crate) fn check_dim(&self, other: &Operator) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(shape_err("operator dimension", self.dim(), other.dim()));
        }
        Ok(())
    }
}

impl Element for Operator {
    fn add(&self, other: &Self) -> Self {
        Operator { m: &self.m + &other.m, hermitian: self.hermitian && other.hermitian }
    }

    fn sub(&self, other: &Self) -> Self {
        Operator { m: &self.m - &other.m, hermitian: self.hermitian && other.hermitian }
    }

    fn scale(&self, k: f64) -> Self {
        Operator { m: self.m.map(|z| z * k), hermitian: self.hermitian }
    }

    fn norm(&self) -> f64 {
        self.m.norm()
    }
}

impl ComplexElement for Operator {
    fn scale_complex(&self, z: Complex64) -> Self {
        Operator { m: self.m.map(|w| w * z), hermitian: self.hermitian && z.im == 0.0 }
    }
}

#[derive(Serialize, Deserialize)]
struct OperatorRepr {
    kind: String,
    dim: usize,
    hermitian: bool,
    entries: Vec<[f64; 2]>,
}

pub(crate) fn row_major_entries(m: &DMatrix<Complex64>) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            out.push([z.re, z.im]);
        }
    }
    out
}

pub(crate) fn matrix_from_entries(dim: usize, entries: &[[f64; 2]]) -> Option<DMatrix<Complex64>> {
    if entries.len() != dim * dim {
        return None;
    }
    Some(DMatrix::from_row_iterator(dim, dim, entries.iter().map(|[re, im]| Complex64::new(*re, *im))))
}

impl Serialize for Operator {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        OperatorRepr {
            kind: "operator".into(),
            dim: self.dim(),
            hermitian: self.hermitian,
            entries: row_major_entries(&self.m),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Operator {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let repr = OperatorRepr::deserialize(d)?;
        if repr.kind != "operator" {
            return Err(D::Error::custom(format!("expected kind operator, got {}", repr.kind)));
        }
        let m = matrix_from_entries(repr.dim, &repr.entries)
            .ok_or_else(|| D::Error::custom("entry count does not match dim"))?;
        Ok(Operator { m, hermitian: repr.hermitian })
    }
}

/// Pauli matrices.
pub mod pauli {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    pub fn x() -> Operator {
        Operator::from_parts(DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]), true)
    }

    pub fn y() -> Operator {
        Operator::from_parts(DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]), true)
    }

    pub fn z() -> Operator {
        Operator::from_parts(DMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]), true)
    }
}

/// Hermitian `dim x dim` matrices with `σ = (fg+gf)/2` and `α = (fg-gf)/(iħ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorAlgebra {
    dim: usize,
    constant: QuantumConstant,
}

impl OperatorAlgebra {
    pub fn new(dim: usize, hbar: f64) -> Result<Self> {
        Self::with_constant(dim, QuantumConstant::from_hbar(hbar)?)
    }

    pub fn with_constant(dim: usize, constant: QuantumConstant) -> Result<Self> {
        if dim == 0 {
            return Err(AlgebraError::InvalidAlgebra("operator dimension must be >= 1".into()));
        }
        if constant.a() <= 0.0 {
            return Err(AlgebraError::InvalidAlgebra("operator realization requires a > 0 (hbar > 0)".into()));
        }
        Ok(OperatorAlgebra { dim, constant })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn check(&self, f: &Operator, g: &Operator) -> Result<()> {
        if f.dim() != self.dim {
            return Err(shape_err("operator dimension", f.dim(), self.dim));
        }
        f.check_dim(g)
    }
}

impl HamiltonAlgebra for OperatorAlgebra {
    type Element = Operator;

    fn constant(&self) -> QuantumConstant {
        self.constant
    }

    fn sigma(&self, f: &Operator, g: &Operator) -> Result<Operator> {
        self.check(f, g)?;
        let fg = &f.m * &g.m;
        let gf = &g.m * &f.m;
        Ok(Operator { m: (fg + gf) * Complex64::new(0.5, 0.0), hermitian: f.hermitian && g.hermitian })
    }

    fn alpha(&self, f: &Operator, g: &Operator) -> Result<Operator> {
        self.check(f, g)?;
        let hbar = self.constant.hbar();
        let fg = &f.m * &g.m;
        let gf = &g.m * &f.m;
        // 1/(iħ) = -i/ħ
        Ok(Operator { m: (fg - gf) * Complex64::new(0.0, -1.0 / hbar), hermitian: f.hermitian && g.hermitian })
    }

    fn tau(&self, f: &Operator, g: &Operator) -> Result<Operator> {
        self.check(f, g)?;
        Ok(Operator { m: &f.m * &g.m, hermitian: false })
    }

    fn unit(&self) -> Operator {
        Operator::identity(self.dim)
    }

    fn zero(&self) -> Operator {
        Operator::zeros(self.dim)
    }

    fn random_element<R: Rng + ?Sized>(&self, rng: &mut R) -> Operator {
        let d = self.dim;
        let raw = DMatrix::from_fn(d, d, |_, _| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
        let m = (&raw + raw.adjoint()) * Complex64::new(0.5, 0.0);
        Operator { m, hermitian: true }
    }

    fn descriptor(&self) -> AlgebraDescriptor {
        AlgebraDescriptor::Operator { dim: self.dim, a: self.constant.a(), hbar: self.constant.hbar() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{associator_sigma, derive_products_from_tau, trial_rng};

    fn close(a: &Operator, b: &Operator, tol: f64) -> bool {
        a.sub(b).norm() <= tol * (1.0 + a.norm().max(b.norm()))
    }

    // 2x2 products written out by hand.
    fn mul2(a: [[Complex64; 2]; 2], b: [[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
        let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    out[i][j] += a[i][k] * b[k][j];
                }
            }
        }
        out
    }

    fn arr(op: &Operator) -> [[Complex64; 2]; 2] {
        let m = op.matrix();
        [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]
    }

    #[test]
    fn pauli_products_match_hand_arithmetic() {
        let alg = OperatorAlgebra::new(2, 2.0).unwrap();
        let (x, y) = (pauli::x(), pauli::y());
        let xy = mul2(arr(&x), arr(&y));
        let yx = mul2(arr(&y), arr(&x));
        let mut anti = [[Complex64::new(0.0, 0.0); 2]; 2];
        let mut comm = anti;
        for i in 0..2 {
            for j in 0..2 {
                anti[i][j] = (xy[i][j] + yx[i][j]) * 0.5;
                comm[i][j] = (xy[i][j] - yx[i][j]) / Complex64::new(0.0, 2.0);
            }
        }
        assert!(anti.iter().flatten().all(|z| z.norm() == 0.0));
        assert_eq!(comm, arr(&pauli::z()));

        let sigma = alg.sigma(&x, &y).unwrap();
        assert_eq!(sigma.norm(), 0.0);
        let alpha = alg.alpha(&x, &y).unwrap();
        assert!(close(&alpha, &pauli::z(), 1e-15));
        assert!(alpha.is_flagged_hermitian());
    }

    #[test]
    fn unit_and_self_bracket() {
        let alg = OperatorAlgebra::new(4, 1.0).unwrap();
        let mut rng = trial_rng(7, 0);
        let f = alg.random_element(&mut rng);
        assert!(close(&alg.sigma(&alg.unit(), &f).unwrap(), &f, 1e-15));
        assert_eq!(alg.alpha(&f, &f).unwrap().norm(), 0.0);
        assert_eq!(alg.alpha(&f, &alg.unit()).unwrap().norm(), 0.0);
        let z = alg.zero();
        assert_eq!(alg.sigma(&z, &f).unwrap().norm(), 0.0);
    }

    #[test]
    fn tau_is_matrix_product_and_associative() {
        let alg = OperatorAlgebra::new(3, 0.7).unwrap();
        let mut rng = trial_rng(3, 1);
        let (f, g, h) = (alg.random_element(&mut rng), alg.random_element(&mut rng), alg.random_element(&mut rng));
        let t = alg.tau(&f, &g).unwrap();
        assert!(close(&t, &f.matmul(&g).unwrap(), 1e-15));
        // sigma + (i ħ/2) alpha
        let split =
            alg.sigma(&f, &g).unwrap().add(&alg.alpha(&f, &g).unwrap().scale_complex(Complex64::new(0.0, 0.35)));
        assert!(close(&t, &split, 1e-14));
        let lhs = alg.tau(&alg.tau(&f, &g).unwrap(), &h).unwrap();
        let rhs = alg.tau(&f, &alg.tau(&g, &h).unwrap()).unwrap();
        let s = 1.0 + f.norm() * g.norm() * h.norm();
        assert!(lhs.sub(&rhs).norm() <= 1e-12 * s);
    }

    #[test]
    fn products_recovered_from_tau() {
        let alg = OperatorAlgebra::new(2, 2.0).unwrap();
        let (s, a) = derive_products_from_tau(&alg, &pauli::x(), &pauli::y()).unwrap();
        assert!(s.norm() < 1e-15);
        assert!(close(&a, &pauli::z(), 1e-15));

        let alg = OperatorAlgebra::new(5, 1.3).unwrap();
        let mut rng = trial_rng(11, 0);
        let (f, g) = (alg.random_element(&mut rng), alg.random_element(&mut rng));
        let (s, a) = derive_products_from_tau(&alg, &f, &g).unwrap();
        assert!(close(&s, &alg.sigma(&f, &g).unwrap(), 1e-12));
        assert!(close(&a, &alg.alpha(&f, &g).unwrap(), 1e-12));
        let (s, a) = derive_products_from_tau(&alg, &f, &f).unwrap();
        assert!(close(&s, &alg.sigma(&f, &f).unwrap(), 1e-12));
        assert_eq!(a.norm(), 0.0);
    }

    #[test]
    fn canonical_relation_on_paulis() {
        let alg = OperatorAlgebra::new(2, 2.0).unwrap();
        let (x, y, z) = (pauli::x(), pauli::y(), pauli::z());
        let lhs = associator_sigma(&alg, &x, &y, &z).unwrap();
        let rhs = alg.alpha(&alg.alpha(&x, &z).unwrap(), &y).unwrap();
        assert!(close(&lhs, &rhs, 1e-15));
    }

    #[test]
    fn random_elements_are_deterministic_and_hermitian() {
        let alg = OperatorAlgebra::new(4, 1.0).unwrap();
        let a = alg.random_element(&mut trial_rng(5, 2));
        let b = alg.random_element(&mut trial_rng(5, 2));
        let c = alg.random_element(&mut trial_rng(6, 2));
        assert_eq!(a, b);
        assert!(a.hermiticity_defect() <= 1e-15);
        assert_ne!(a.norm(), c.norm());
    }

    #[test]
    fn rejects_bad_shapes_and_constants() {
        assert!(matches!(OperatorAlgebra::new(0, 1.0), Err(AlgebraError::InvalidAlgebra(_))));
        assert!(matches!(OperatorAlgebra::new(2, 0.0), Err(AlgebraError::InvalidAlgebra(_))));
        assert!(OperatorAlgebra::new(2, -1.0).is_err());
        let alg = OperatorAlgebra::new(2, 1.0).unwrap();
        let big = Operator::identity(3);
        assert!(matches!(alg.sigma(&big, &big), Err(AlgebraError::Shape(_))));
        assert!(matches!(alg.alpha(&pauli::x(), &big), Err(AlgebraError::Shape(_))));
        let bad = DMatrix::from_row_slice(
            2,
            2,
            &[Complex64::new(0., 0.), Complex64::new(1., 0.), Complex64::new(0., 0.), Complex64::new(0., 0.)],
        );
        assert!(Operator::hermitian(bad).is_err());
    }

    #[test]
    fn json_form_is_row_major_pairs() {
        let v = serde_json::to_value(pauli::y()).unwrap();
        assert_eq!(v["kind"], "operator");
        assert_eq!(v["dim"], 2);
        assert_eq!(v["entries"][1], serde_json::json!([0.0, -1.0]));
        let back: Operator = serde_json::from_value(v).unwrap();
        assert_eq!(back, pauli::y());
    }
}
