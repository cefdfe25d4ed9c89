use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{AlgebraDescriptor, Element, HamiltonAlgebra, QuantumConstant};
use crate::error::{shape_err, AlgebraError, Result};

/// Exponents over `(x1, p1, x2, p2, ...)`.
pub type Monomial = Vec<u32>;

/// Exact sparse polynomial with real coefficients in canonical pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoly {
    num_pairs: usize,
    terms: BTreeMap<Monomial, f64>,
}

pub(crate) fn x_index(k: usize) -> usize {
    2 * k
}

pub(crate) fn p_index(k: usize) -> usize {
    2 * k + 1
}

impl PhasePoly {
    pub fn zero(num_pairs: usize) -> Self {
        PhasePoly { num_pairs, terms: BTreeMap::new() }
    }

    pub fn constant(num_pairs: usize, c: f64) -> Self {
        Self::monomial(num_pairs, vec![0; 2 * num_pairs], c)
    }

    pub fn monomial(num_pairs: usize, exponents: Monomial, coeff: f64) -> Self {
        assert_eq!(exponents.len(), 2 * num_pairs, "exponent vector length");
        let mut poly = PhasePoly::zero(num_pairs);
        if coeff != 0.0 {
            poly.terms.insert(exponents, coeff);
        }
        poly
    }

    /// Position `x_k` (zero-based pair index).
    pub fn x(num_pairs: usize, k: usize) -> Self {
        let mut e = vec![0; 2 * num_pairs];
        e[x_index(k)] = 1;
        Self::monomial(num_pairs, e, 1.0)
    }

    /// Momentum `p_k` (zero-based pair index).
    pub fn p(num_pairs: usize, k: usize) -> Self {
        let mut e = vec![0; 2 * num_pairs];
        e[p_index(k)] = 1;
        Self::monomial(num_pairs, e, 1.0)
    }

    /// Builds from `(exponents, coeff)` pairs, summing duplicates.
    pub fn from_terms(num_pairs: usize, terms: impl IntoIterator<Item = (Monomial, f64)>) -> Result<Self> {
        let mut poly = PhasePoly::zero(num_pairs);
        for (e, c) in terms {
            if e.len() != 2 * num_pairs {
                return Err(shape_err("exponent vector length", e.len(), 2 * num_pairs));
            }
            if !c.is_finite() {
                return Err(AlgebraError::InvalidParameter(format!("non-finite coefficient {c}")));
            }
            poly.accumulate(e, c);
        }
        poly.prune();
        Ok(poly)
    }

    pub fn num_pairs(&self) -> usize {
        self.num_pairs
    }

    pub fn terms(&self) -> &BTreeMap<Monomial, f64> {
        &self.terms
    }

    pub fn coeff(&self, exponents: &[u32]) -> f64 {
        self.terms.get(exponents).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.iter().sum()).max()
    }

    fn accumulate(&mut self, e: Monomial, c: f64) {
        *self.terms.entry(e).or_insert(0.0) += c;
    }

    fn prune(&mut self) {
        self.terms.retain(|_, c| *c != 0.0);
    }

    pub(crate) fn check_pairs(&self, other: &PhasePoly) -> Result<()> {
        if self.num_pairs != other.num_pairs {
            return Err(shape_err("canonical pair count", self.num_pairs, other.num_pairs));
        }
        Ok(())
    }

    pub fn try_mul(&self, other: &PhasePoly) -> Result<PhasePoly> {
        self.check_pairs(other)?;
        let mut out = PhasePoly::zero(self.num_pairs);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Monomial = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.accumulate(e, ca * cb);
            }
        }
        out.prune();
        Ok(out)
    }

    /// `Σ_k ∂f/∂x_k ∂g/∂p_k - ∂f/∂p_k ∂g/∂x_k`.
    pub fn poisson(&self, other: &PhasePoly) -> Result<PhasePoly> {
        self.check_pairs(other)?;
        let mut out = PhasePoly::zero(self.num_pairs);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                for k in 0..self.num_pairs {
                    let (xi, pi) = (x_index(k), p_index(k));
                    if ea[xi] > 0 && eb[pi] > 0 {
                        let mut e: Monomial = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                        e[xi] -= 1;
                        e[pi] -= 1;
                        out.accumulate(e, ca * cb * f64::from(ea[xi]) * f64::from(eb[pi]));
                    }
                    if ea[pi] > 0 && eb[xi] > 0 {
                        let mut e: Monomial = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                        e[xi] -= 1;
                        e[pi] -= 1;
                        out.accumulate(e, -ca * cb * f64::from(ea[pi]) * f64::from(eb[xi]));
                    }
                }
            }
        }
        out.prune();
        Ok(out)
    }

    /// Partial derivative with respect to variable slot `var`.
    pub fn derivative(&self, var: usize) -> PhasePoly {
        let mut out = PhasePoly::zero(self.num_pairs);
        for (e, c) in &self.terms {
            if e[var] > 0 {
                let mut d = e.clone();
                d[var] -= 1;
                out.accumulate(d, c * f64::from(e[var]));
            }
        }
        out.prune();
        out
    }

    /// Polynomial in the disjoint union of both variable sets.
    pub fn tensor(&self, other: &PhasePoly) -> PhasePoly {
        let mut out = PhasePoly::zero(self.num_pairs + other.num_pairs);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let mut e = ea.clone();
                e.extend_from_slice(eb);
                out.accumulate(e, ca * cb);
            }
        }
        out.prune();
        out
    }

    /// Splits each monomial into its first `left_pairs` pairs and the rest.
    pub fn split_terms(&self, left_pairs: usize) -> Vec<(PhasePoly, PhasePoly)> {
        let right_pairs = self.num_pairs - left_pairs;
        self.terms
            .iter()
            .map(|(e, c)| {
                let (l, r) = e.split_at(2 * left_pairs);
                (PhasePoly::monomial(left_pairs, l.to_vec(), *c), PhasePoly::monomial(right_pairs, r.to_vec(), 1.0))
            })
            .collect()
    }
}

impl Element for PhasePoly {
    fn add(&self, other: &Self) -> Self {
        assert_eq!(self.num_pairs, other.num_pairs, "canonical pair count");
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.accumulate(e.clone(), *c);
        }
        out.prune();
        out
    }

    fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    fn scale(&self, k: f64) -> Self {
        let mut out = PhasePoly {
            num_pairs: self.num_pairs,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c * k)).collect(),
        };
        out.prune();
        out
    }

    fn norm(&self) -> f64 {
        self.terms.values().map(|c| c * c).sum::<f64>().sqrt()
    }
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    exponents: Monomial,
    coeff: f64,
}

#[derive(Serialize, Deserialize)]
struct PolyRepr {
    kind: String,
    num_pairs: usize,
    terms: Vec<TermRepr>,
}

impl Serialize for PhasePoly {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PolyRepr {
            kind: "polynomial".into(),
            num_pairs: self.num_pairs,
            terms: self.terms.iter().map(|(e, c)| TermRepr { exponents: e.clone(), coeff: *c }).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PhasePoly {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let repr = PolyRepr::deserialize(d)?;
        if repr.kind != "polynomial" {
            return Err(D::Error::custom(format!("expected kind polynomial, got {}", repr.kind)));
        }
        PhasePoly::from_terms(repr.num_pairs, repr.terms.into_iter().map(|t| (t.exponents, t.coeff)))
            .map_err(D::Error::custom)
    }
}

/// All exponent vectors over `vars` variables with total degree `<= max_degree`.
pub(crate) fn monomials_up_to(vars: usize, max_degree: u32) -> Vec<Monomial> {
    fn rec(prefix: &mut Monomial, vars: usize, remaining: u32, out: &mut Vec<Monomial>) {
        if prefix.len() == vars {
            out.push(prefix.clone());
            return;
        }
        for d in 0..=remaining {
            prefix.push(d);
            rec(prefix, vars, remaining - d, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(vars), vars, max_degree, &mut out);
    out
}

/// Phase-space polynomials with pointwise product and Poisson bracket (a = 0).
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpaceAlgebra {
    num_pairs: usize,
    max_random_degree: u32,
}

impl PhaseSpaceAlgebra {
    pub const DEFAULT_DEGREE: u32 = 3;

    pub fn new(num_pairs: usize, max_random_degree: u32) -> Result<Self> {
        if num_pairs == 0 {
            return Err(AlgebraError::InvalidAlgebra("phase space needs at least one canonical pair".into()));
        }
        Ok(PhaseSpaceAlgebra { num_pairs, max_random_degree })
    }

    pub fn num_pairs(&self) -> usize {
        self.num_pairs
    }

    pub fn max_random_degree(&self) -> u32 {
        self.max_random_degree
    }

    fn check(&self, f: &PhasePoly, g: &PhasePoly) -> Result<()> {
        if f.num_pairs != self.num_pairs {
            return Err(shape_err("canonical pair count", f.num_pairs, self.num_pairs));
        }
        f.check_pairs(g)
    }
}

impl HamiltonAlgebra for PhaseSpaceAlgebra {
    type Element = PhasePoly;

    fn constant(&self) -> QuantumConstant {
        QuantumConstant::CLASSICAL
    }

    fn sigma(&self, f: &PhasePoly, g: &PhasePoly) -> Result<PhasePoly> {
        self.check(f, g)?;
        f.try_mul(g)
    }

    fn alpha(&self, f: &PhasePoly, g: &PhasePoly) -> Result<PhasePoly> {
        self.check(f, g)?;
        f.poisson(g)
    }

    fn tau(&self, f: &PhasePoly, g: &PhasePoly) -> Result<PhasePoly> {
        self.sigma(f, g)
    }

    fn unit(&self) -> PhasePoly {
        PhasePoly::constant(self.num_pairs, 1.0)
    }

    fn zero(&self) -> PhasePoly {
        PhasePoly::zero(self.num_pairs)
    }

    fn random_element<R: Rng + ?Sized>(&self, rng: &mut R) -> PhasePoly {
        let mut poly = PhasePoly::zero(self.num_pairs);
        for e in monomials_up_to(2 * self.num_pairs, self.max_random_degree) {
            let c: f64 = rng.random_range(-1.0..=1.0);
            poly.accumulate(e, c);
        }
        poly.prune();
        poly
    }

    fn descriptor(&self) -> AlgebraDescriptor {
        AlgebraDescriptor::PhaseSpace { num_pairs: self.num_pairs, max_random_degree: self.max_random_degree, a: 0.0 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{associator_sigma, trial_rng};
    use proptest::prelude::*;

    #[test]
    fn canonical_pair_products() {
        let alg = PhaseSpaceAlgebra::new(1, 3).unwrap();
        let (x, p) = (PhasePoly::x(1, 0), PhasePoly::p(1, 0));
        assert_eq!(alg.sigma(&x, &p).unwrap(), PhasePoly::monomial(1, vec![1, 1], 1.0));
        assert_eq!(alg.alpha(&x, &p).unwrap(), PhasePoly::constant(1, 1.0));
        assert_eq!(alg.alpha(&p, &x).unwrap(), PhasePoly::constant(1, -1.0));
        assert_eq!(alg.tau(&x, &p).unwrap(), alg.sigma(&x, &p).unwrap());
    }

    #[test]
    fn poisson_of_quadratic() {
        // ∂x(x²p)·∂p(p²) - ∂p(x²p)·∂x(p²) = 2xp·2p
        let f = PhasePoly::monomial(1, vec![2, 1], 1.0);
        let g = PhasePoly::monomial(1, vec![0, 2], 1.0);
        assert_eq!(f.poisson(&g).unwrap(), PhasePoly::monomial(1, vec![1, 2], 4.0));
    }

    #[test]
    fn zero_coefficients_are_dropped() {
        let x = PhasePoly::x(2, 1);
        assert!(x.sub(&x).is_empty());
        let p = PhasePoly::from_terms(1, vec![(vec![1, 0], 2.0), (vec![1, 0], -2.0)]).unwrap();
        assert!(p.is_empty());
        assert_eq!(p.degree(), None);
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let alg = PhaseSpaceAlgebra::new(1, 2).unwrap();
        assert!(matches!(alg.sigma(&PhasePoly::x(1, 0), &PhasePoly::x(2, 0)), Err(AlgebraError::Shape(_))));
        assert!(PhaseSpaceAlgebra::new(0, 2).is_err());
        assert!(PhasePoly::from_terms(1, vec![(vec![1], 1.0)]).is_err());
    }

    #[test]
    fn random_degree_cap_and_determinism() {
        let alg = PhaseSpaceAlgebra::new(2, 3).unwrap();
        let f = alg.random_element(&mut trial_rng(1, 0));
        assert_eq!(f, alg.random_element(&mut trial_rng(1, 0)));
        assert!(f.degree().unwrap() <= 3);
        assert_eq!(f.len(), 35);
        assert!(f.terms().values().all(|c| (-1.0..=1.0).contains(c)));
    }

    #[test]
    fn associator_vanishes() {
        let alg = PhaseSpaceAlgebra::new(2, 2).unwrap();
        let mut rng = trial_rng(4, 4);
        let (f, g, h) = (alg.random_element(&mut rng), alg.random_element(&mut rng), alg.random_element(&mut rng));
        let d = associator_sigma(&alg, &f, &g, &h).unwrap();
        assert!(d.norm() <= 1e-12 * (1.0 + f.norm() * g.norm() * h.norm()));
    }

    #[test]
    fn tensor_and_split_are_inverse() {
        let f = PhasePoly::from_terms(1, vec![(vec![1, 0], 2.0), (vec![0, 2], -1.0)]).unwrap();
        let g = PhasePoly::from_terms(1, vec![(vec![0, 1], 3.0)]).unwrap();
        let t = f.tensor(&g);
        assert_eq!(t.num_pairs(), 2);
        let back = t.split_terms(1).into_iter().fold(PhasePoly::zero(2), |acc, (l, r)| acc.add(&l.tensor(&r)));
        assert_eq!(back, t);
    }

    fn small_poly() -> impl Strategy<Value = PhasePoly> {
        proptest::collection::vec((0u32..3, 0u32..3, -4i32..5), 0..5).prop_map(|ts| {
            PhasePoly::from_terms(1, ts.into_iter().map(|(a, b, c)| (vec![a, b], f64::from(c)))).unwrap()
        })
    }

    proptest! {
        // Integer coefficients keep every product exact.
        #[test]
        fn poisson_degree_bound_and_antisymmetry(f in small_poly(), g in small_poly()) {
            let fg = f.poisson(&g).unwrap();
            prop_assert_eq!(fg.add(&g.poisson(&f).unwrap()), PhasePoly::zero(1));
            if let (Some(df), Some(dg), Some(d)) = (f.degree(), g.degree(), fg.degree()) {
                prop_assert!(d + 2 <= df + dg);
            }
        }

        #[test]
        fn json_round_trip(f in small_poly()) {
            let s = serde_json::to_string(&f).unwrap();
            let back: PhasePoly = serde_json::from_str(&s).unwrap();
            prop_assert_eq!(back, f);
        }
    }
}
