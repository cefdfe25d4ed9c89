//! Restriction of the composed products to one component, and the resulting
//! constraint on the composed constant `a12`.
//!
//! Restricting `α12` to `A1 ⊗ e` yields `sqrt(a1/a12) α1 ⊗ e`; the factor is
//! measured here by a least-squares fit, with the closed form used only as
//! the expected value. The requirement that both factors equal one forces
//! `a1 = a2 = a12`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::algebra::{trial_rng, Element, HamiltonAlgebra, Operator, OperatorAlgebra, QuantumConstant};
use crate::compose::{ComposedAlgebra, KroneckerElement};
use crate::error::{AlgebraError, Result};
use crate::par::{map_slice, Execution};

/// Both components quantum.
pub type QuantumPair = ComposedAlgebra<OperatorAlgebra, OperatorAlgebra>;

pub const DEFAULT_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_PAIRS: usize = 8;
const FIT_RESIDUAL: f64 = 1e-10;
const MAX_RESAMPLES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RestrictedProduct {
    Alpha,
    Sigma,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RestrictionOptions {
    pub pairs: usize,
    pub seed: u64,
    pub tolerance: f64,
}

impl Default for RestrictionOptions {
    fn default() -> Self {
        RestrictionOptions { pairs: DEFAULT_PAIRS, seed: 0, tolerance: DEFAULT_TOLERANCE }
    }
}

impl RestrictionOptions {
    fn validate(&self) -> Result<()> {
        if self.pairs == 0 {
            return Err(AlgebraError::InvalidParameter("pairs must be >= 1".into()));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(AlgebraError::InvalidParameter(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RestrictionResult {
    pub component: Component,
    pub product: RestrictedProduct,
    pub measured_factor: f64,
    pub expected_factor: f64,
    /// Fit residual relative to `1 + Σ‖result‖`.
    pub residual: f64,
    pub satisfies_requirement: bool,
}

fn embed(c: &QuantumPair, component: Component, f: &Operator) -> KroneckerElement {
    match component {
        Component::Left => KroneckerElement::simple(f, &Operator::identity(c.right().dim())),
        Component::Right => KroneckerElement::simple(&Operator::identity(c.left().dim()), f),
    }
}

fn component_algebra(c: &QuantumPair, component: Component) -> &OperatorAlgebra {
    match component {
        Component::Left => c.left(),
        Component::Right => c.right(),
    }
}

fn inner(a: &KroneckerElement, b: &KroneckerElement) -> f64 {
    a.operator().matrix().dotc(b.operator().matrix()).re
}

fn restrict(
    c: &QuantumPair,
    component: Component,
    product: RestrictedProduct,
    opts: &RestrictionOptions,
) -> Result<RestrictionResult> {
    opts.validate()?;
    let comp = component_algebra(c, component);
    let a_k = comp.constant().a();
    let a12 = c.a12().a();
    if a12 <= 0.0 {
        return Err(AlgebraError::InvalidComposition("restriction requires a12 > 0".into()));
    }
    let expected_factor = match product {
        RestrictedProduct::Alpha => (a_k / a12).sqrt(),
        RestrictedProduct::Sigma => 1.0,
    };
    let stream_base = match component {
        Component::Left => 0,
        Component::Right => 1 << 32,
    };
    let (mut tt, mut tr, mut rr_norm) = (0.0, 0.0, 0.0);
    let mut fitted = Vec::with_capacity(opts.pairs);
    for i in 0..opts.pairs {
        let mut rng = trial_rng(opts.seed, stream_base + i as u64);
        let mut drawn = None;
        for _ in 0..MAX_RESAMPLES {
            let (f, g) = (comp.random_element(&mut rng), comp.random_element(&mut rng));
            let base = match product {
                RestrictedProduct::Alpha => comp.alpha(&f, &g)?,
                RestrictedProduct::Sigma => comp.sigma(&f, &g)?,
            };
            if base.norm() > 1e-12 * (1.0 + f.norm() * g.norm()) {
                drawn = Some((f, g, base));
                break;
            }
        }
        let (f, g, base) = drawn.ok_or_else(|| {
            AlgebraError::InvalidParameter(format!("component of dimension {} has a vanishing product", comp.dim()))
        })?;
        let (u, v) = (embed(c, component, &f), embed(c, component, &g));
        let r = match product {
            RestrictedProduct::Alpha => c.alpha12(&u, &v)?,
            RestrictedProduct::Sigma => c.sigma12(&u, &v)?,
        };
        let t = embed(c, component, &base);
        tt += inner(&t, &t);
        tr += inner(&t, &r);
        rr_norm += r.norm();
        fitted.push((t, r));
    }
    let lambda = tr / tt;
    let resid: f64 = fitted.iter().map(|(t, r)| r.sub(&t.scale(lambda)).norm()).sum();
    let residual = resid / (1.0 + rr_norm);
    if residual > FIT_RESIDUAL {
        return Err(AlgebraError::InternalConsistency(format!(
            "restricted product is not proportional to the component product (residual {residual:e})"
        )));
    }
    Ok(RestrictionResult {
        component,
        product,
        measured_factor: lambda,
        expected_factor,
        residual,
        satisfies_requirement: (lambda - 1.0).abs() <= opts.tolerance,
    })
}

/// Fits `α12(f⊗e, g⊗e) ≈ λ α(f,g)⊗e` (or the right-sided analogue).
pub fn restrict_alpha(c: &QuantumPair, component: Component, opts: &RestrictionOptions) -> Result<RestrictionResult> {
    restrict(c, component, RestrictedProduct::Alpha, opts)
}

/// Same fit for `σ12`; the expected factor is 1 for every constant.
pub fn restrict_sigma(c: &QuantumPair, component: Component, opts: &RestrictionOptions) -> Result<RestrictionResult> {
    restrict(c, component, RestrictedProduct::Sigma, opts)
}

/// Max relative defect of `τ12(f⊗e, g⊗e) = τ(f,g)⊗e` over random pairs.
pub fn tau_restriction_defect(c: &QuantumPair, component: Component, opts: &RestrictionOptions) -> Result<f64> {
    opts.validate()?;
    let comp = component_algebra(c, component);
    let mut worst = 0.0f64;
    for i in 0..opts.pairs {
        let mut rng = trial_rng(opts.seed, i as u64);
        let (f, g) = (comp.random_element(&mut rng), comp.random_element(&mut rng));
        let lhs = c.tau12(&embed(c, component, &f), &embed(c, component, &g))?;
        let rhs = embed(c, component, &comp.tau(&f, &g)?);
        worst = worst.max(crate::algebra::relative_defect(lhs.sub(&rhs).norm(), &[f.norm(), g.norm()]));
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniquenessOptions {
    pub left_dim: usize,
    pub right_dim: usize,
    pub pairs: usize,
    pub seed: u64,
    pub tolerance: f64,
}

impl Default for UniquenessOptions {
    fn default() -> Self {
        UniquenessOptions { left_dim: 2, right_dim: 2, pairs: DEFAULT_PAIRS, seed: 0, tolerance: DEFAULT_TOLERANCE }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub a1: f64,
    pub a2: f64,
    pub a12: f64,
    pub tolerance: f64,
    pub left: RestrictionResult,
    pub right: RestrictionResult,
    pub passed: bool,
}

/// Passes iff both measured `α12` restriction factors equal one within tolerance.
pub fn uniqueness_check(a1: f64, a2: f64, a12: f64, opts: &UniquenessOptions) -> Result<Verdict> {
    for (name, v) in [("a1", a1), ("a2", a2), ("a12", a12)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(AlgebraError::InvalidParameter(format!("{name} must be positive and finite, got {v}")));
        }
    }
    let left = OperatorAlgebra::with_constant(opts.left_dim, QuantumConstant::new(a1)?)?;
    let right = OperatorAlgebra::with_constant(opts.right_dim, QuantumConstant::new(a2)?)?;
    let c = ComposedAlgebra::new(left, right, a12)?;
    let ropts = RestrictionOptions { pairs: opts.pairs, seed: opts.seed, tolerance: opts.tolerance };
    let l = restrict_alpha(&c, Component::Left, &ropts)?;
    let r = restrict_alpha(&c, Component::Right, &ropts)?;
    Ok(Verdict {
        a1,
        a2,
        a12,
        tolerance: opts.tolerance,
        passed: l.satisfies_requirement && r.satisfies_requirement,
        left: l,
        right: r,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanTable {
    pub options: UniquenessOptions,
    pub verdicts: Vec<Verdict>,
}

impl ScanTable {
    pub fn pass_set(&self) -> Vec<(f64, f64, f64)> {
        self.verdicts.iter().filter(|v| v.passed).map(|v| (v.a1, v.a2, v.a12)).collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let io = |e: csv::Error| AlgebraError::InvalidParameter(format!("csv write failed: {e}"));
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["a1", "a2", "a12", "left_factor", "left_expected", "right_factor", "right_expected", "passed"])
            .map_err(io)?;
        for v in &self.verdicts {
            let f = |x: f64| format!("{x:.16e}");
            w.write_record([
                f(v.a1),
                f(v.a2),
                f(v.a12),
                f(v.left.measured_factor),
                f(v.left.expected_factor),
                f(v.right.measured_factor),
                f(v.right.expected_factor),
                v.passed.to_string(),
            ])
            .map_err(io)?;
        }
        w.flush().map_err(|e| AlgebraError::InvalidParameter(format!("csv write failed: {e}")))?;
        Ok(())
    }
}

/// One verdict per triple, in input order.
pub fn scan_constants(grid: &[(f64, f64, f64)], opts: &UniquenessOptions, exec: Execution) -> Result<ScanTable> {
    let verdicts = map_slice(exec, grid, |&(a1, a2, a12)| uniqueness_check(a1, a2, a12, opts))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(ScanTable { options: *opts, verdicts })
}

/// Parses `lo:hi:n` (log-spaced, endpoints exact) or a comma-separated list.
pub fn parse_axis(axis: &str) -> Result<Vec<f64>> {
    let bad = |why: &str| AlgebraError::InvalidParameter(format!("grid `{axis}`: {why}"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad("not a number"));
    let values = if axis.contains(':') {
        let parts: Vec<&str> = axis.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("expected lo:hi:n"));
        }
        let (lo, hi) = (num(parts[0])?, num(parts[1])?);
        let n: usize = parts[2].trim().parse().map_err(|_| bad("n must be a positive integer"))?;
        if n == 0 {
            return Err(bad("n must be >= 1"));
        }
        if n == 1 {
            vec![lo]
        } else {
            (0..n)
                .map(|k| match k {
                    0 => lo,
                    k if k + 1 == n => hi,
                    k => lo * (hi / lo).powf(k as f64 / (n - 1) as f64),
                })
                .collect()
        }
    } else {
        axis.split(',').map(num).collect::<Result<Vec<_>>>()?
    };
    if values.is_empty() || values.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(bad("values must be positive and finite"));
    }
    Ok(values)
}

/// All triples `(a1, a2, a12)` drawn from `axis`.
pub fn cube(axis: &[f64]) -> Vec<(f64, f64, f64)> {
    let mut out = Vec::with_capacity(axis.len().pow(3));
    for &a1 in axis {
        for &a2 in axis {
            for &a12 in axis {
                out.push((a1, a2, a12));
            }
        }
    }
    out
}
