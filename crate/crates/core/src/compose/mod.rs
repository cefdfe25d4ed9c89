//! Tensor-product composition of two Hamilton algebras.
//!
//! For simple tensors the composed products are
//!
//! ```text
//! σ12 = σ1⊗σ2 - sqrt(a1 a2) α1⊗α2
//! α12 = sqrt(a1/a12) α1⊗σ2 + sqrt(a2/a12) σ1⊗α2
//! τ12 = τ1⊗τ2
//! ```
//!
//! each applied after the switching map and extended bilinearly. Tensor
//! elements live in a canonical form (Kronecker matrix, matrix-coefficient
//! polynomial, or a polynomial over the joint variables) and are decomposed
//! into simple tensors on demand.

mod classical;
mod hybrid;
mod kron;

pub use hybrid::HybridElement;
pub use kron::KroneckerElement;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{
    AlgebraDescriptor, Element, HamiltonAlgebra, OperatorAlgebra, PhaseSpaceAlgebra, QuantumConstant,
};
use crate::error::{AlgebraError, Result};

/// A left algebra that knows how to form tensors with `R`.
pub trait Composable<R: HamiltonAlgebra>: HamiltonAlgebra {
    type Tensor: Element;

    fn tensor(&self, right: &R, f: &Self::Element, g: &R::Element) -> Self::Tensor;

    /// Writes `u` as a finite sum of simple tensors.
    fn decompose(&self, right: &R, u: &Self::Tensor) -> Vec<(Self::Element, R::Element)>;

    fn tensor_zero(&self, right: &R) -> Self::Tensor;

    fn check_tensor(&self, right: &R, u: &Self::Tensor) -> Result<()>;
}

/// `(f1⊗f2)⊗(g1⊗g2) ↦ (f1⊗g1)⊗(f2⊗g2)`, extended over sums of simple tensors.
pub fn switching_map<A: Clone, B: Clone>(u: &[(A, B)], v: &[(A, B)]) -> Vec<((A, A), (B, B))> {
    let mut out = Vec::with_capacity(u.len() * v.len());
    for (f1, f2) in u {
        for (g1, g2) in v {
            out.push(((f1.clone(), g1.clone()), (f2.clone(), g2.clone())));
        }
    }
    out
}

/// Inverse pairing of [`switching_map`] on a single term.
pub fn unswitch<A, B>(term: ((A, A), (B, B))) -> ((A, B), (A, B)) {
    let ((f1, g1), (f2, g2)) = term;
    ((f1, f2), (g1, g2))
}

/// Scalars multiplying the component products in the composition laws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompositionCoefficients {
    /// `sqrt(a1 a2)` in front of `α1⊗α2` in σ12.
    pub sigma_cross: f64,
    /// `sqrt(a1/a12)` in front of `α1⊗σ2` in α12.
    pub alpha_left: f64,
    /// `sqrt(a2/a12)` in front of `σ1⊗α2` in α12.
    pub alpha_right: f64,
}

impl CompositionCoefficients {
    pub fn new(a1: f64, a2: f64, a12: f64) -> Result<Self> {
        for (name, v) in [("a1", a1), ("a2", a2), ("a12", a12)] {
            if !v.is_finite() || v < 0.0 {
                return Err(AlgebraError::InvalidComposition(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if a12 == 0.0 && (a1 > 0.0 || a2 > 0.0) {
            return Err(AlgebraError::InvalidComposition(
                "a12 = 0 admits no composed bracket when either component is quantum".into(),
            ));
        }
        // Two classical components compose with unit coefficients (the a = 0 limit
        // of the equal-constant law).
        let ratio = |a: f64| if a == a12 { 1.0 } else { (a / a12).sqrt() };
        Ok(CompositionCoefficients { sigma_cross: (a1 * a2).sqrt(), alpha_left: ratio(a1), alpha_right: ratio(a2) })
    }
}

/// Deliberate corruptions used to show the identity checks are not vacuous.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompositionFault {
    /// Multiply α12 by a constant.
    AlphaScale(f64),
    /// Use `α1⊗α2` in place of `α1⊗σ2`, which is symmetric under exchange.
    SymmetricCrossTerm,
}

impl std::fmt::Display for CompositionFault {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CompositionFault::AlphaScale(k) => write!(f, "alpha_scale({k})"),
            CompositionFault::SymmetricCrossTerm => f.write_str("symmetric_cross_term"),
        }
    }
}

/// The tensor product of two Hamilton algebras with constant `a12`.
#[derive(Debug, Clone)]
pub struct ComposedAlgebra<L, R> {
    left: L,
    right: R,
    a12: QuantumConstant,
    coeffs: CompositionCoefficients,
    max_terms: usize,
    fault: Option<CompositionFault>,
}

impl<L, R> ComposedAlgebra<L, R>
where
    R: HamiltonAlgebra,
    L: Composable<R>,
{
    pub const DEFAULT_MAX_TERMS: usize = 3;

    pub fn new(left: L, right: R, a12: f64) -> Result<Self> {
        let a12 = QuantumConstant::new(a12).map_err(|e| AlgebraError::InvalidComposition(e.to_string()))?;
        let coeffs = CompositionCoefficients::new(left.constant().a(), right.constant().a(), a12.a())?;
        Ok(ComposedAlgebra { left, right, a12, coeffs, max_terms: Self::DEFAULT_MAX_TERMS, fault: None })
    }

    /// Caps the number of simple tensors summed by `random_element`.
    pub fn with_max_terms(mut self, max_terms: usize) -> Self {
        self.max_terms = max_terms.max(1);
        self
    }

    /// Installs a deliberate fault in α12 (mutation testing only).
    pub fn with_fault(mut self, fault: CompositionFault) -> Self {
        self.fault = Some(fault);
        self
    }

    pub fn left(&self) -> &L {
        &self.left
    }

    pub fn right(&self) -> &R {
        &self.right
    }

    pub fn a12(&self) -> QuantumConstant {
        self.a12
    }

    pub fn coefficients(&self) -> CompositionCoefficients {
        self.coeffs
    }

    pub fn max_terms(&self) -> usize {
        self.max_terms
    }

    pub fn simple_tensor(&self, f: &L::Element, g: &R::Element) -> L::Tensor {
        self.left.tensor(&self.right, f, g)
    }

    pub fn decompose(&self, u: &L::Tensor) -> Vec<(L::Element, R::Element)> {
        self.left.decompose(&self.right, u)
    }

    fn fold_switched<F>(&self, u: &L::Tensor, v: &L::Tensor, term: F) -> Result<L::Tensor>
    where
        F: Fn(&L::Element, &L::Element, &R::Element, &R::Element) -> Result<Option<L::Tensor>>,
    {
        self.left.check_tensor(&self.right, u)?;
        self.left.check_tensor(&self.right, v)?;
        let du = self.decompose(u);
        let dv = self.decompose(v);
        let mut acc = self.left.tensor_zero(&self.right);
        for ((f1, g1), (f2, g2)) in switching_map(&du, &dv) {
            if let Some(t) = term(&f1, &g1, &f2, &g2)? {
                acc = acc.add(&t);
            }
        }
        Ok(acc)
    }

    fn sigma_term(
        &self,
        f1: &L::Element,
        g1: &L::Element,
        f2: &R::Element,
        g2: &R::Element,
        cross: f64,
    ) -> Result<L::Tensor> {
        let (l, r) = (&self.left, &self.right);
        let mut t = l.tensor(r, &l.sigma(f1, g1)?, &r.sigma(f2, g2)?);
        if cross != 0.0 {
            let c = l.tensor(r, &l.alpha(f1, g1)?, &r.alpha(f2, g2)?);
            t = t.sub(&c.scale(cross));
        }
        Ok(t)
    }

    fn alpha_term(
        &self,
        f1: &L::Element,
        g1: &L::Element,
        f2: &R::Element,
        g2: &R::Element,
        left_coeff: f64,
        right_coeff: f64,
    ) -> Result<Option<L::Tensor>> {
        let (l, r) = (&self.left, &self.right);
        let mut acc: Option<L::Tensor> = None;
        if left_coeff != 0.0 {
            let second = match self.fault {
                Some(CompositionFault::SymmetricCrossTerm) => r.alpha(f2, g2)?,
                _ => r.sigma(f2, g2)?,
            };
            acc = Some(l.tensor(r, &l.alpha(f1, g1)?, &second).scale(left_coeff));
        }
        if right_coeff != 0.0 {
            let t = l.tensor(r, &l.sigma(f1, g1)?, &r.alpha(f2, g2)?).scale(right_coeff);
            acc = Some(match acc {
                Some(a) => a.add(&t),
                None => t,
            });
        }
        Ok(acc)
    }

    /// σ12 computed from the component products on simple tensors.
    pub fn sigma12(&self, u: &L::Tensor, v: &L::Tensor) -> Result<L::Tensor> {
        let cross = self.coeffs.sigma_cross;
        self.fold_switched(u, v, |f1, g1, f2, g2| self.sigma_term(f1, g1, f2, g2, cross).map(Some))
    }

    /// α12 computed from the component products on simple tensors.
    pub fn alpha12(&self, u: &L::Tensor, v: &L::Tensor) -> Result<L::Tensor> {
        let CompositionCoefficients { alpha_left, alpha_right, .. } = self.coeffs;
        let out =
            self.fold_switched(u, v, |f1, g1, f2, g2| self.alpha_term(f1, g1, f2, g2, alpha_left, alpha_right))?;
        Ok(match self.fault {
            Some(CompositionFault::AlphaScale(k)) => out.scale(k),
            _ => out,
        })
    }

    /// τ12 = (τ1⊗τ2)∘S.
    pub fn tau12(&self, u: &L::Tensor, v: &L::Tensor) -> Result<L::Tensor> {
        let (l, r) = (&self.left, &self.right);
        self.fold_switched(u, v, |f1, g1, f2, g2| Ok(Some(l.tensor(r, &l.tau(f1, g1)?, &r.tau(f2, g2)?))))
    }

    /// Equal-constant fast path: σ1⊗σ2 - a α1⊗α2 and α1⊗σ2 + σ1⊗α2.
    pub fn equal_constant_compose(&self, u: &L::Tensor, v: &L::Tensor) -> Result<(L::Tensor, L::Tensor)> {
        let (a1, a2, a) = (self.left.constant().a(), self.right.constant().a(), self.a12.a());
        if a1 != a || a2 != a {
            return Err(AlgebraError::Misuse(format!(
                "equal-constant composition needs a1 = a2 = a12, got ({a1}, {a2}, {a})"
            )));
        }
        let sigma = self.fold_switched(u, v, |f1, g1, f2, g2| self.sigma_term(f1, g1, f2, g2, a).map(Some))?;
        let alpha = self.fold_switched(u, v, |f1, g1, f2, g2| self.alpha_term(f1, g1, f2, g2, 1.0, 1.0))?;
        Ok((sigma, alpha))
    }
}

impl ComposedAlgebra<OperatorAlgebra, PhaseSpaceAlgebra> {
    /// Quantum⊗classical with the default `a12 = a1`.
    pub fn hybrid(quantum: OperatorAlgebra, classical: PhaseSpaceAlgebra) -> Result<Self> {
        let a12 = quantum.constant().a();
        Self::new(quantum, classical, a12)
    }
}

impl<L, R> HamiltonAlgebra for ComposedAlgebra<L, R>
where
    R: HamiltonAlgebra,
    L: Composable<R>,
{
    type Element = L::Tensor;

    fn constant(&self) -> QuantumConstant {
        self.a12
    }

    fn sigma(&self, f: &L::Tensor, g: &L::Tensor) -> Result<L::Tensor> {
        self.sigma12(f, g)
    }

    fn alpha(&self, f: &L::Tensor, g: &L::Tensor) -> Result<L::Tensor> {
        self.alpha12(f, g)
    }

    fn tau(&self, f: &L::Tensor, g: &L::Tensor) -> Result<L::Tensor> {
        self.tau12(f, g)
    }

    fn unit(&self) -> L::Tensor {
        self.simple_tensor(&self.left.unit(), &self.right.unit())
    }

    fn zero(&self) -> L::Tensor {
        self.left.tensor_zero(&self.right)
    }

    fn random_element<G: Rng + ?Sized>(&self, rng: &mut G) -> L::Tensor {
        let terms = rng.random_range(1..=self.max_terms);
        let mut acc = self.zero();
        for _ in 0..terms {
            let f = self.left.random_element(rng);
            let g = self.right.random_element(rng);
            acc = acc.add(&self.simple_tensor(&f, &g));
        }
        acc
    }

    fn descriptor(&self) -> AlgebraDescriptor {
        let base = AlgebraDescriptor::Composed {
            left: Box::new(self.left.descriptor()),
            right: Box::new(self.right.descriptor()),
            a12: self.a12.a(),
            max_terms: self.max_terms,
        };
        match self.fault {
            None => base,
            Some(f) => AlgebraDescriptor::Corrupted { inner: Box::new(base), fault: f.to_string() },
        }
    }
}
