//! Hamilton algebras: a symmetric product `sigma`, an antisymmetric product
//! `alpha` and a quantum constant `a` tying the two together.

pub(crate) mod centrality;
pub(crate) mod operator;
pub(crate) mod poly;

pub use centrality::{center_dimension, CenterReport};
pub use operator::{pauli, Operator, OperatorAlgebra};
pub use poly::{Monomial, PhasePoly, PhaseSpaceAlgebra};

use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{AlgebraError, Result};

/// Deterministic generator used for every randomized draw in the crate.
pub type TrialRng = ChaCha8Rng;

/// Generator for trial `stream` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, stream: u64) -> TrialRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// The quantum constant `a = hbar^2 / 4`. Zero marks a classical algebra.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantumConstant {
    a: f64,
    hbar: f64,
}

impl QuantumConstant {
    pub const CLASSICAL: QuantumConstant = QuantumConstant { a: 0.0, hbar: 0.0 };

    pub fn new(a: f64) -> Result<Self> {
        if !a.is_finite() || a < 0.0 {
            return Err(AlgebraError::InvalidParameter(format!(
                "quantum constant must be finite and non-negative, got {a}"
            )));
        }
        Ok(QuantumConstant { a, hbar: 2.0 * a.sqrt() })
    }

    pub fn from_hbar(hbar: f64) -> Result<Self> {
        if !hbar.is_finite() || hbar < 0.0 {
            return Err(AlgebraError::InvalidParameter(format!("hbar must be finite and non-negative, got {hbar}")));
        }
        Ok(QuantumConstant { a: hbar * hbar / 4.0, hbar })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn is_classical(&self) -> bool {
        self.a == 0.0
    }
}

/// Vector-space operations shared by every element type.
pub trait Element: Clone + fmt::Debug + Send + Sync + Serialize {
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn scale(&self, k: f64) -> Self;
    /// Frobenius norm for matrices, coefficient l2 norm for polynomials.
    fn norm(&self) -> f64;

    fn is_zero(&self) -> bool {
        self.norm() == 0.0
    }
}

/// Elements of the complexified (envelope) space.
pub trait ComplexElement: Element {
    fn scale_complex(&self, z: Complex64) -> Self;
}

/// Serializable description of an algebra, embedded in reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "realization", rename_all = "snake_case")]
pub enum AlgebraDescriptor {
    Operator { dim: usize, a: f64, hbar: f64 },
    PhaseSpace { num_pairs: usize, max_random_degree: u32, a: f64 },
    Composed { left: Box<AlgebraDescriptor>, right: Box<AlgebraDescriptor>, a12: f64, max_terms: usize },
    Corrupted { inner: Box<AlgebraDescriptor>, fault: String },
}

/// A concrete Hamilton algebra realization.
///
/// `tau` is the associative envelope product `sigma + sqrt(-a) alpha`; it
/// accepts complexified elements and its results carry no Hermitian flag.
pub trait HamiltonAlgebra: Send + Sync {
    type Element: Element;

    fn constant(&self) -> QuantumConstant;
    fn sigma(&self, f: &Self::Element, g: &Self::Element) -> Result<Self::Element>;
    fn alpha(&self, f: &Self::Element, g: &Self::Element) -> Result<Self::Element>;
    fn tau(&self, f: &Self::Element, g: &Self::Element) -> Result<Self::Element>;
    fn unit(&self) -> Self::Element;
    fn zero(&self) -> Self::Element;
    fn random_element<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::Element;
    fn descriptor(&self) -> AlgebraDescriptor;
}

/// `(f σ g) σ h - f σ (g σ h)`.
pub fn associator_sigma<A: HamiltonAlgebra>(
    alg: &A,
    f: &A::Element,
    g: &A::Element,
    h: &A::Element,
) -> Result<A::Element> {
    let left = alg.sigma(&alg.sigma(f, g)?, h)?;
    let right = alg.sigma(f, &alg.sigma(g, h)?)?;
    Ok(left.sub(&right))
}

/// Recovers `(sigma, alpha)` as the symmetric and antisymmetric parts of `tau`.
pub fn derive_products_from_tau<A>(alg: &A, f: &A::Element, g: &A::Element) -> Result<(A::Element, A::Element)>
where
    A: HamiltonAlgebra,
    A::Element: ComplexElement,
{
    let a = alg.constant().a();
    if a <= 0.0 {
        return Err(AlgebraError::InvalidAlgebra("products cannot be recovered from tau when a = 0".into()));
    }
    let fg = alg.tau(f, g)?;
    let gf = alg.tau(g, f)?;
    let sigma = fg.add(&gf).scale(0.5);
    // 1 / (2 sqrt(-a)) = -i / (2 sqrt(a))
    let alpha = fg.sub(&gf).scale_complex(Complex64::new(0.0, -0.5 / a.sqrt()));
    Ok((sigma, alpha))
}

/// `‖diff‖ / (1 + Π‖argᵢ‖)`.
pub fn relative_defect(diff_norm: f64, arg_norms: &[f64]) -> f64 {
    diff_norm / (1.0 + arg_norms.iter().product::<f64>())
}
