//! Randomized defect measurement for the Hamilton-algebra identities.
//!
//! Every defect is relative: `‖LHS - RHS‖ / (1 + Π‖argᵢ‖)`, one factor per
//! multilinear slot. Trials draw their inputs from independent RNG streams,
//! so reports are bit-identical across runs and execution modes.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{
    associator_sigma, relative_defect, trial_rng, AlgebraDescriptor, Element, HamiltonAlgebra, QuantumConstant,
};
use crate::compose::{Composable, ComposedAlgebra};
use crate::error::{AlgebraError, Result};
use crate::par::{map_indexed, Execution};

pub const DEFAULT_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_TRIALS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdentityId {
    Antisymmetry,
    Jacobi,
    Symmetry,
    Derivation,
    CanonicalRelation,
    Jordan,
    TauAssociativity,
}

impl IdentityId {
    pub const ALL: [IdentityId; 7] = [
        IdentityId::Antisymmetry,
        IdentityId::Jacobi,
        IdentityId::Symmetry,
        IdentityId::Derivation,
        IdentityId::CanonicalRelation,
        IdentityId::Jordan,
        IdentityId::TauAssociativity,
    ];

    /// The five defining identities of a Hamilton algebra.
    pub const DEFINING: [IdentityId; 5] = [
        IdentityId::Antisymmetry,
        IdentityId::Jacobi,
        IdentityId::Symmetry,
        IdentityId::Derivation,
        IdentityId::CanonicalRelation,
    ];

    pub fn arity(self) -> usize {
        match self {
            IdentityId::Antisymmetry | IdentityId::Symmetry | IdentityId::Jordan => 2,
            _ => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            IdentityId::Antisymmetry => "antisymmetry",
            IdentityId::Jacobi => "jacobi",
            IdentityId::Symmetry => "symmetry",
            IdentityId::Derivation => "derivation",
            IdentityId::CanonicalRelation => "canonical_relation",
            IdentityId::Jordan => "jordan",
            IdentityId::TauAssociativity => "tau_associativity",
        }
    }
}

impl std::fmt::Display for IdentityId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub identity: IdentityId,
    pub trials: usize,
    pub tolerance: f64,
    pub seed: u64,
}

impl IdentityCheck {
    pub fn new(identity: IdentityId, trials: usize, tolerance: f64, seed: u64) -> Result<Self> {
        if trials == 0 {
            return Err(AlgebraError::InvalidParameter("trials must be >= 1".into()));
        }
        if !(tolerance > 0.0 && tolerance.is_finite()) {
            return Err(AlgebraError::InvalidParameter(format!("tolerance must be positive, got {tolerance}")));
        }
        Ok(IdentityCheck { identity, trials, tolerance, seed })
    }
}

/// Outcome of one identity check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub identity: IdentityId,
    pub trials: usize,
    pub tolerance: f64,
    pub seed: u64,
    pub max_relative_defect: f64,
    pub mean_relative_defect: f64,
    pub worst_trial: usize,
    /// Inputs of the worst trial in the element JSON schema.
    pub worst_witness: Vec<serde_json::Value>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub algebra: AlgebraDescriptor,
    pub checks: Vec<CheckReport>,
    pub passed: bool,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

impl VerificationReport {
    pub fn new(algebra: AlgebraDescriptor, checks: Vec<CheckReport>) -> Self {
        let passed = checks.iter().all(|c| c.passed);
        let timestamp =
            std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        VerificationReport { algebra, checks, passed, timestamp }
    }

    pub fn check(&self, id: IdentityId) -> Option<&CheckReport> {
        self.checks.iter().find(|c| c.identity == id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub trials: usize,
    pub tolerance: f64,
    pub seed: u64,
    pub execution: Execution,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig { trials: DEFAULT_TRIALS, tolerance: DEFAULT_TOLERANCE, seed: 0, execution: Execution::default() }
    }
}

impl SuiteConfig {
    pub fn check(&self, identity: IdentityId) -> Result<IdentityCheck> {
        IdentityCheck::new(identity, self.trials, self.tolerance, self.seed)
    }
}

/// Relative defect of `identity` at the given inputs (`args.len() == arity`).
pub fn identity_defect<A: HamiltonAlgebra>(alg: &A, identity: IdentityId, args: &[A::Element]) -> Result<f64> {
    if args.len() != identity.arity() {
        return Err(AlgebraError::Misuse(format!("{identity} takes {} arguments", identity.arity())));
    }
    let n: Vec<f64> = args.iter().map(Element::norm).collect();
    let s = |f: &A::Element, g: &A::Element| alg.sigma(f, g);
    let a = |f: &A::Element, g: &A::Element| alg.alpha(f, g);
    let d = match identity {
        IdentityId::Antisymmetry => {
            let (f, g) = (&args[0], &args[1]);
            relative_defect(a(f, g)?.add(&a(g, f)?).norm(), &n)
        }
        IdentityId::Symmetry => {
            let (f, g) = (&args[0], &args[1]);
            relative_defect(s(f, g)?.sub(&s(g, f)?).norm(), &n)
        }
        IdentityId::Jacobi => {
            let (f, g, h) = (&args[0], &args[1], &args[2]);
            let sum = a(f, &a(g, h)?)?.add(&a(g, &a(h, f)?)?).add(&a(h, &a(f, g)?)?);
            relative_defect(sum.norm(), &n)
        }
        IdentityId::Derivation => {
            let (f, g, h) = (&args[0], &args[1], &args[2]);
            let lhs = a(f, &s(g, h)?)?;
            let rhs = s(&a(f, g)?, h)?.add(&s(g, &a(f, h)?)?);
            relative_defect(lhs.sub(&rhs).norm(), &n)
        }
        IdentityId::CanonicalRelation => {
            let (f, g, h) = (&args[0], &args[1], &args[2]);
            let lhs = associator_sigma(alg, f, g, h)?;
            let k = alg.constant().a();
            let diff = if k == 0.0 { lhs } else { lhs.sub(&a(&a(f, h)?, g)?.scale(k)) };
            relative_defect(diff.norm(), &n)
        }
        IdentityId::Jordan => {
            let (f, g) = (&args[0], &args[1]);
            let ff = s(f, f)?;
            let lhs = s(&ff, &s(g, f)?)?;
            let rhs = s(&s(&ff, g)?, f)?;
            relative_defect(lhs.sub(&rhs).norm(), &[n[0], n[0], n[0], n[1]])
        }
        IdentityId::TauAssociativity => {
            let (f, g, h) = (&args[0], &args[1], &args[2]);
            let t = |x: &A::Element, y: &A::Element| alg.tau(x, y);
            relative_defect(t(&t(f, g)?, h)?.sub(&t(f, &t(g, h)?)?).norm(), &n)
        }
    };
    Ok(d)
}

fn draw<A: HamiltonAlgebra>(alg: &A, arity: usize, seed: u64, trial: usize) -> Vec<A::Element> {
    let mut rng = trial_rng(seed, trial as u64);
    (0..arity).map(|_| alg.random_element(&mut rng)).collect()
}

/// Runs one identity over `check.trials` random input tuples.
pub fn check_identity<A: HamiltonAlgebra>(alg: &A, check: &IdentityCheck, exec: Execution) -> Result<CheckReport> {
    let arity = check.identity.arity();
    let defects =
        map_indexed(exec, check.trials, |i| identity_defect(alg, check.identity, &draw(alg, arity, check.seed, i)))
            .into_iter()
            .collect::<Result<Vec<f64>>>()?;
    let (mut worst, mut max) = (0, f64::NEG_INFINITY);
    for (i, d) in defects.iter().enumerate() {
        // NaN counts as worst.
        if d.is_nan() || *d > max {
            worst = i;
            max = *d;
            if d.is_nan() {
                break;
            }
        }
    }
    let mean = defects.iter().sum::<f64>() / defects.len() as f64;
    let worst_witness = draw(alg, arity, check.seed, worst)
        .iter()
        .map(|e| serde_json::to_value(e).unwrap_or(serde_json::Value::Null))
        .collect();
    Ok(CheckReport {
        identity: check.identity,
        trials: check.trials,
        tolerance: check.tolerance,
        seed: check.seed,
        max_relative_defect: max,
        mean_relative_defect: mean,
        worst_trial: worst,
        worst_witness,
        passed: max <= check.tolerance,
    })
}

/// Runs all seven checks; the report passes iff every check does.
pub fn run_axiom_suite<A: HamiltonAlgebra>(alg: &A, cfg: &SuiteConfig) -> Result<VerificationReport> {
    run_checks(alg, &IdentityId::ALL, cfg)
}

pub fn run_checks<A: HamiltonAlgebra>(alg: &A, ids: &[IdentityId], cfg: &SuiteConfig) -> Result<VerificationReport> {
    let checks =
        ids.iter().map(|id| check_identity(alg, &cfg.check(*id)?, cfg.execution)).collect::<Result<Vec<_>>>()?;
    Ok(VerificationReport::new(alg.descriptor(), checks))
}

/// Checks `identity` for a composed algebra on random simple tensors and two-term sums.
pub fn check_composed<L, R>(c: &ComposedAlgebra<L, R>, identity: IdentityId, cfg: &SuiteConfig) -> Result<CheckReport>
where
    L: Composable<R> + Clone,
    R: HamiltonAlgebra + Clone,
{
    let restricted = c.clone().with_max_terms(2);
    check_identity(&restricted, &cfg.check(identity)?, cfg.execution)
}

/// Wraps an algebra and multiplies its α by a constant.
#[derive(Debug, Clone)]
pub struct ScaledAlpha<A> {
    inner: A,
    factor: f64,
}

impl<A: HamiltonAlgebra> ScaledAlpha<A> {
    pub fn new(inner: A, factor: f64) -> Self {
        ScaledAlpha { inner, factor }
    }

    pub fn inner(&self) -> &A {
        &self.inner
    }
}

impl<A: HamiltonAlgebra> HamiltonAlgebra for ScaledAlpha<A> {
    type Element = A::Element;

    fn constant(&self) -> QuantumConstant {
        self.inner.constant()
    }

    fn sigma(&self, f: &A::Element, g: &A::Element) -> Result<A::Element> {
        self.inner.sigma(f, g)
    }

    fn alpha(&self, f: &A::Element, g: &A::Element) -> Result<A::Element> {
        Ok(self.inner.alpha(f, g)?.scale(self.factor))
    }

    fn tau(&self, f: &A::Element, g: &A::Element) -> Result<A::Element> {
        self.inner.tau(f, g)
    }

    fn unit(&self) -> A::Element {
        self.inner.unit()
    }

    fn zero(&self) -> A::Element {
        self.inner.zero()
    }

    fn random_element<G: Rng + ?Sized>(&self, rng: &mut G) -> A::Element {
        self.inner.random_element(rng)
    }

    fn descriptor(&self) -> AlgebraDescriptor {
        AlgebraDescriptor::Corrupted {
            inner: Box::new(self.inner.descriptor()),
            fault: format!("alpha_scale({})", self.factor),
        }
    }
}

#[cfg(test)]
#[path = "identities_tests.rs"]
mod tests;
