//! Published mixed quantum-classical brackets on operator-valued phase-space
//! functions, and measurement of which bracket desiderata each one violates.
//!
//! The desiderata are antisymmetry, the Jacobi identity in the form
//! `((A,B),C) + ((B,C),A) + ((C,A),B) = 0`, and the derivation rule
//! `(A,BC) = (A,B)C + B(A,C)` where `BC` is the pointwise matrix product.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{relative_defect, trial_rng, Element, HamiltonAlgebra, OperatorAlgebra, PhaseSpaceAlgebra};
use crate::compose::{Composable, HybridElement};
use crate::error::{AlgebraError, Result};
use crate::par::{find_first, map_indexed, Execution};

/// Relative defect above which a violation counts as found.
pub const VIOLATION_THRESHOLD: f64 = 1e-6;
/// Relative defect below which a property counts as satisfied.
pub const PASS_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum MixedBracketKind {
    BoucherTraschen,
    Aleksandrov,
    Anderson,
    #[serde(alias = "hybrid_paper")]
    #[value(alias = "hybrid_paper")]
    Hybrid,
}

impl MixedBracketKind {
    pub const ALL: [MixedBracketKind; 4] = [
        MixedBracketKind::BoucherTraschen,
        MixedBracketKind::Aleksandrov,
        MixedBracketKind::Anderson,
        MixedBracketKind::Hybrid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MixedBracketKind::BoucherTraschen => "boucher_traschen",
            MixedBracketKind::Aleksandrov => "aleksandrov",
            MixedBracketKind::Anderson => "anderson",
            MixedBracketKind::Hybrid => "hybrid",
        }
    }

    /// How the bracket is extended beyond what its defining formula fixes.
    pub fn interpretation(self) -> &'static str {
        match self {
            MixedBracketKind::BoucherTraschen => {
                "defined on simple products Xx, Yy as xy[X,Y]- + {x,y}[X,Y]+ and extended bilinearly"
            }
            MixedBracketKind::Aleksandrov => {
                "[U,V]- + (1/2)({U,V}_P - {V,U}_P), Poisson coefficients multiplied in written operand order"
            }
            MixedBracketKind::Anderson => {
                "[U,V]- + {U,V}_P with coefficient matrices multiplied left to right (ordering is an interpretation)"
            }
            MixedBracketKind::Hybrid => "alpha12 of quantum(a) x classical with a12 = a: [X,Y]- xy",
        }
    }
}

impl std::fmt::Display for MixedBracketKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Shape and constant of the random hybrid inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridSetting {
    pub dim: usize,
    pub num_pairs: usize,
    pub max_degree: u32,
    pub hbar: f64,
}

impl Default for HybridSetting {
    fn default() -> Self {
        HybridSetting { dim: 2, num_pairs: 1, max_degree: 2, hbar: 2.0 }
    }
}

impl HybridSetting {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.num_pairs == 0 {
            return Err(AlgebraError::InvalidParameter("dim and num_pairs must be >= 1".into()));
        }
        if !(self.hbar > 0.0 && self.hbar.is_finite()) {
            return Err(AlgebraError::InvalidParameter(format!("hbar must be positive, got {}", self.hbar)));
        }
        Ok(())
    }

    fn algebras(&self) -> Result<(OperatorAlgebra, PhaseSpaceAlgebra)> {
        self.validate()?;
        Ok((OperatorAlgebra::new(self.dim, self.hbar)?, PhaseSpaceAlgebra::new(self.num_pairs, self.max_degree)?))
    }

    /// Every monomial up to `max_degree` with an independent random Hermitian coefficient.
    pub fn random_element<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<HybridElement> {
        let (q, c) = self.algebras()?;
        let mut acc = HybridElement::zero(self.dim, self.num_pairs);
        for e in crate::algebra::poly::monomials_up_to(2 * self.num_pairs, self.max_degree) {
            let x = q.random_element(rng);
            let m = crate::algebra::PhasePoly::monomial(self.num_pairs, e, 1.0);
            acc = acc.add(&q.tensor(&c, &x, &m));
        }
        Ok(acc)
    }
}

/// Evaluates the chosen bracket.
pub fn mixed_bracket(kind: MixedBracketKind, u: &HybridElement, v: &HybridElement, hbar: f64) -> Result<HybridElement> {
    u.check_shape(v)?;
    if hbar.is_nan() || hbar <= 0.0 {
        return Err(AlgebraError::InvalidParameter(format!("hbar must be positive, got {hbar}")));
    }
    let out = match kind {
        MixedBracketKind::Hybrid => u.commutator_bracket(v, hbar)?,
        MixedBracketKind::BoucherTraschen => boucher_traschen(u, v, hbar)?,
        MixedBracketKind::Aleksandrov => {
            let sym = u.poisson_ordered(v)?.sub(&v.poisson_ordered(u)?).scale(0.5);
            u.commutator_bracket(v, hbar)?.add(&sym)
        }
        MixedBracketKind::Anderson => u.commutator_bracket(v, hbar)?.add(&u.poisson_ordered(v)?),
    };
    Ok(out.refresh_flag())
}

fn boucher_traschen(u: &HybridElement, v: &HybridElement, hbar: f64) -> Result<HybridElement> {
    let n = u.num_pairs();
    let mut acc = HybridElement::zero(u.dim(), n);
    for (ea, a) in u.parts() {
        let xa = crate::algebra::PhasePoly::monomial(n, ea.clone(), 1.0);
        let ua = HybridElement::from_parts(u.dim(), n, [(ea.clone(), a.clone())])?;
        for (eb, b) in v.parts() {
            let xb = crate::algebra::PhasePoly::monomial(n, eb.clone(), 1.0);
            let ub = HybridElement::from_parts(u.dim(), n, [(eb.clone(), b.clone())])?;
            // xy[X,Y]-  (the monomial product rides along in commutator_bracket)
            acc = acc.add(&ua.commutator_bracket(&ub, hbar)?);
            // {x,y}_P [X,Y]+
            let pb = xa.poisson(&xb)?;
            if !pb.is_empty() {
                let zero = vec![0; 2 * n];
                let ua0 = HybridElement::from_parts(u.dim(), n, [(zero.clone(), a.clone())])?;
                let ub0 = HybridElement::from_parts(u.dim(), n, [(zero, b.clone())])?;
                let anti = ua0.anticommutator_bracket(&ub0)?;
                for (e, c) in pb.terms() {
                    let m = crate::algebra::PhasePoly::monomial(n, e.clone(), *c);
                    for coeff in anti.parts().values() {
                        let op = crate::algebra::Operator::from_parts(coeff.clone(), false);
                        acc = acc.add(&HybridElement::simple(&op, &m));
                    }
                }
            }
        }
    }
    Ok(acc)
}

/// Which bracket desideratum a defect or witness refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Desideratum {
    Antisymmetry,
    Jacobi,
    Derivation,
}

/// Relative defect of one desideratum at `args` (2 inputs for antisymmetry, 3 otherwise).
pub fn desideratum_defect(
    kind: MixedBracketKind,
    which: Desideratum,
    args: &[HybridElement],
    hbar: f64,
) -> Result<f64> {
    let br = |x: &HybridElement, y: &HybridElement| mixed_bracket(kind, x, y, hbar);
    let n: Vec<f64> = args.iter().map(Element::norm).collect();
    let need = if which == Desideratum::Antisymmetry { 2 } else { 3 };
    if args.len() < need {
        return Err(AlgebraError::Misuse(format!("{which:?} needs {need} inputs")));
    }
    let (a, b) = (&args[0], &args[1]);
    Ok(match which {
        Desideratum::Antisymmetry => relative_defect(br(a, b)?.add(&br(b, a)?).norm(), &n[..2]),
        Desideratum::Jacobi => {
            let c = &args[2];
            let sum = br(&br(a, b)?, c)?.add(&br(&br(b, c)?, a)?).add(&br(&br(c, a)?, b)?);
            relative_defect(sum.norm(), &n[..3])
        }
        Desideratum::Derivation => {
            let c = &args[2];
            let lhs = br(a, &b.mul(c)?)?;
            let rhs = br(a, b)?.mul(c)?.add(&b.mul(&br(a, c)?)?);
            relative_defect(lhs.sub(&rhs).norm(), &n[..3])
        }
    })
}

/// Worst inputs found for one desideratum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub kind: MixedBracketKind,
    pub desideratum: Desideratum,
    pub trial: usize,
    pub seed: u64,
    pub relative_defect: f64,
    pub inputs: Vec<serde_json::Value>,
}

impl Witness {
    pub fn decode_inputs(&self) -> Result<Vec<HybridElement>> {
        self.inputs
            .iter()
            .map(|v| serde_json::from_value(v.clone()).map_err(|e| AlgebraError::InvalidParameter(e.to_string())))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefectTriple {
    pub kind: MixedBracketKind,
    pub interpretation: String,
    pub setting: HybridSetting,
    pub trials: usize,
    pub seed: u64,
    pub antisymmetry_defect: f64,
    pub jacobi_defect: f64,
    pub derivation_defect: f64,
    pub witnesses: Vec<Witness>,
}

impl DefectTriple {
    /// True when the defects match what is known about the bracket: the
    /// hybrid bracket satisfies everything, Boucher-Traschen and Aleksandrov
    /// are antisymmetric but break Jacobi, Anderson is not antisymmetric.
    pub fn expected_pattern_confirmed(&self) -> bool {
        let ok = |d: f64| d <= PASS_TOLERANCE;
        let broken = |d: f64| d > VIOLATION_THRESHOLD;
        match self.kind {
            MixedBracketKind::Hybrid => {
                ok(self.antisymmetry_defect) && ok(self.jacobi_defect) && ok(self.derivation_defect)
            }
            MixedBracketKind::BoucherTraschen | MixedBracketKind::Aleksandrov => {
                ok(self.antisymmetry_defect) && broken(self.jacobi_defect)
            }
            MixedBracketKind::Anderson => broken(self.antisymmetry_defect),
        }
    }
}

fn draw(setting: &HybridSetting, seed: u64, trial: usize) -> Result<[HybridElement; 3]> {
    let mut rng = trial_rng(seed, trial as u64);
    Ok([setting.random_element(&mut rng)?, setting.random_element(&mut rng)?, setting.random_element(&mut rng)?])
}

fn to_json(args: &[HybridElement]) -> Vec<serde_json::Value> {
    args.iter().map(|a| serde_json::to_value(a).unwrap_or(serde_json::Value::Null)).collect()
}

const DESIDERATA: [Desideratum; 3] = [Desideratum::Antisymmetry, Desideratum::Jacobi, Desideratum::Derivation];

/// Max relative defects over `trials` random triples, with the worst inputs.
pub fn measure_defects(
    kind: MixedBracketKind,
    setting: &HybridSetting,
    trials: usize,
    seed: u64,
    exec: Execution,
) -> Result<DefectTriple> {
    setting.validate()?;
    if trials == 0 {
        return Err(AlgebraError::InvalidParameter("trials must be >= 1".into()));
    }
    let per_trial = map_indexed(exec, trials, |i| -> Result<[f64; 3]> {
        let args = draw(setting, seed, i)?;
        let mut out = [0.0; 3];
        for (slot, which) in out.iter_mut().zip(DESIDERATA) {
            *slot = desideratum_defect(kind, which, &args, setting.hbar)?;
        }
        Ok(out)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let mut maxima = [0.0f64; 3];
    let mut witnesses = Vec::with_capacity(3);
    for (slot, which) in DESIDERATA.iter().enumerate() {
        let (worst, max) = per_trial.iter().enumerate().fold((0, f64::NEG_INFINITY), |(wi, wm), (i, d)| {
            if d[slot] > wm {
                (i, d[slot])
            } else {
                (wi, wm)
            }
        });
        maxima[slot] = max;
        let args = draw(setting, seed, worst)?;
        let used = if *which == Desideratum::Antisymmetry { 2 } else { 3 };
        witnesses.push(Witness {
            kind,
            desideratum: *which,
            trial: worst,
            seed,
            relative_defect: max,
            inputs: to_json(&args[..used]),
        });
    }
    Ok(DefectTriple {
        kind,
        interpretation: kind.interpretation().to_string(),
        setting: *setting,
        trials,
        seed,
        antisymmetry_defect: maxima[0],
        jacobi_defect: maxima[1],
        derivation_defect: maxima[2],
        witnesses,
    })
}

/// First trial (lowest index) whose defect exceeds [`VIOLATION_THRESHOLD`].
pub fn find_witness(
    kind: MixedBracketKind,
    which: Desideratum,
    setting: &HybridSetting,
    budget: usize,
    seed: u64,
    exec: Execution,
) -> Result<Option<Witness>> {
    setting.validate()?;
    if budget == 0 {
        return Err(AlgebraError::InvalidParameter("budget must be >= 1".into()));
    }
    let found = find_first(exec, budget, |i| {
        let args = draw(setting, seed, i).ok()?;
        let d = desideratum_defect(kind, which, &args, setting.hbar).ok()?;
        (d > VIOLATION_THRESHOLD).then_some((d, args))
    });
    Ok(found.map(|(trial, (d, args))| {
        let used = if which == Desideratum::Antisymmetry { 2 } else { 3 };
        Witness { kind, desideratum: which, trial, seed, relative_defect: d, inputs: to_json(&args[..used]) }
    }))
}

pub fn find_jacobi_witness(
    kind: MixedBracketKind,
    setting: &HybridSetting,
    budget: usize,
    seed: u64,
    exec: Execution,
) -> Result<Option<Witness>> {
    find_witness(kind, Desideratum::Jacobi, setting, budget, seed, exec)
}

/// Defects over `trials` triples plus a first-violation search of `budget`
/// triples for each desideratum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BracketSurvey {
    pub defects: DefectTriple,
    pub budget: usize,
    pub antisymmetry_witness: Option<Witness>,
    pub jacobi_witness: Option<Witness>,
    pub derivation_witness: Option<Witness>,
    pub expected_pattern_confirmed: bool,
}

pub fn survey(
    kind: MixedBracketKind,
    setting: &HybridSetting,
    trials: usize,
    budget: usize,
    seed: u64,
    exec: Execution,
) -> Result<BracketSurvey> {
    let defects = measure_defects(kind, setting, trials, seed, exec)?;
    let search = |which| find_witness(kind, which, setting, budget, seed, exec);
    let antisymmetry_witness = search(Desideratum::Antisymmetry)?;
    let jacobi_witness = search(Desideratum::Jacobi)?;
    let derivation_witness = search(Desideratum::Derivation)?;
    let witnesses_fit = match kind {
        MixedBracketKind::Hybrid => {
            antisymmetry_witness.is_none() && jacobi_witness.is_none() && derivation_witness.is_none()
        }
        MixedBracketKind::BoucherTraschen | MixedBracketKind::Aleksandrov => {
            antisymmetry_witness.is_none() && jacobi_witness.is_some()
        }
        MixedBracketKind::Anderson => antisymmetry_witness.is_some(),
    };
    Ok(BracketSurvey {
        expected_pattern_confirmed: witnesses_fit && defects.expected_pattern_confirmed(),
        defects,
        budget,
        antisymmetry_witness,
        jacobi_witness,
        derivation_witness,
    })
}
