//! Heisenberg-picture evolution of two free particles coupled by
//! `g(t) p1 x2`, with the apparatus (particle 2) either quantum or classical.
//!
//! Observables live in the span of `(p1, x1, p2, x2, 1)`. The equations of
//! motion are derived by applying the composed bracket `ḟ = α12(f, h)` to each
//! basis element, with component products evaluated on Weyl symbols.

use std::io::Write;

use nalgebra::{Matrix5, RowVector5};
use serde::{Deserialize, Serialize};

use crate::algebra::{trial_rng, Element, OperatorAlgebra, PhasePoly, PhaseSpaceAlgebra, QuantumConstant};
use crate::brackets::HybridSetting;
use crate::compose::{Composable, ComposedAlgebra, CompositionCoefficients, HybridElement};
use crate::error::{AlgebraError, Result};
use crate::par::{map_indexed, Execution};

/// Basis order of an observable's coefficient vector.
pub const BASIS: [&str; 5] = ["p1", "x1", "p2", "x2", "1"];
/// Observables tracked along a trajectory (the first four basis elements).
pub const TRACKED: [&str; 4] = ["p1", "x1", "p2", "x2"];

const P1: usize = 0;
const X1: usize = 1;
const P2: usize = 2;
const X2: usize = 3;
const ONE: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Regime {
    #[serde(alias = "qq")]
    #[value(alias = "qq")]
    QuantumQuantum,
    #[serde(alias = "qc")]
    #[value(alias = "qc")]
    QuantumClassical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementConfig {
    pub m1: f64,
    pub m2: f64,
    pub g0: f64,
    pub t0: f64,
    pub dt: f64,
    pub hbar: f64,
    pub regime: Regime,
}

impl Default for MeasurementConfig {
    fn default() -> Self {
        MeasurementConfig { m1: 1.0, m2: 1.0, g0: 0.7, t0: 0.0, dt: 1.3, hbar: 1.0, regime: Regime::QuantumQuantum }
    }
}

impl MeasurementConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(AlgebraError::InvalidParameter(format!("{name} must be positive and finite, got {v}")))
            }
        };
        pos("m1", self.m1)?;
        pos("m2", self.m2)?;
        pos("dt", self.dt)?;
        pos("hbar", self.hbar)?;
        if !self.g0.is_finite() || !self.t0.is_finite() {
            return Err(AlgebraError::InvalidParameter("g0 and t0 must be finite".into()));
        }
        Ok(())
    }

    /// `g0` on `[t0, t0 + dt)`, zero elsewhere.
    pub fn coupling(&self, t: f64) -> f64 {
        if t >= self.t0 && t < self.t0 + self.dt {
            self.g0
        } else {
            0.0
        }
    }

    fn constants(&self) -> Result<(f64, f64, f64)> {
        let a = QuantumConstant::from_hbar(self.hbar)?.a();
        Ok(match self.regime {
            Regime::QuantumQuantum => (a, a, a),
            Regime::QuantumClassical => (a, 0.0, a),
        })
    }
}

/// One term `left ⊗ right` of the Hamiltonian, multiplied by `g(t)` when `coupled`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianTerm {
    pub label: String,
    pub left: PhasePoly,
    pub right: PhasePoly,
    pub coupled: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hamiltonian {
    pub m1: f64,
    pub m2: f64,
    pub g0: f64,
    pub t0: f64,
    pub dt: f64,
    pub terms: Vec<HamiltonianTerm>,
}

impl Hamiltonian {
    /// Simple tensors making up `h(t)`.
    pub fn at(&self, t: f64) -> Vec<(PhasePoly, PhasePoly)> {
        let g = if t >= self.t0 && t < self.t0 + self.dt { self.g0 } else { 0.0 };
        self.terms
            .iter()
            .map(|term| (if term.coupled { term.left.scale(g) } else { term.left.clone() }, term.right.clone()))
            .collect()
    }
}

pub fn build_hamiltonian(cfg: &MeasurementConfig) -> Result<Hamiltonian> {
    cfg.validate()?;
    let p = PhasePoly::p(1, 0);
    let one = PhasePoly::constant(1, 1.0);
    let kinetic = |m: f64| PhasePoly::monomial(1, vec![0, 2], 1.0 / (2.0 * m));
    Ok(Hamiltonian {
        m1: cfg.m1,
        m2: cfg.m2,
        g0: cfg.g0,
        t0: cfg.t0,
        dt: cfg.dt,
        terms: vec![
            HamiltonianTerm {
                label: "p1^2/2m1 (x) I2".into(),
                left: kinetic(cfg.m1),
                right: one.clone(),
                coupled: false,
            },
            HamiltonianTerm { label: "I1 (x) p2^2/2m2".into(), left: one, right: kinetic(cfg.m2), coupled: false },
            HamiltonianTerm { label: "g(t) p1 (x) x2".into(), left: p, right: PhasePoly::x(1, 0), coupled: true },
        ],
    })
}

// Component products on Weyl symbols. The pointwise product is the exact
// symmetric operator product when either factor has degree <= 1, the Poisson
// bracket is the exact commutator bracket when either has degree <= 2.
fn component_sigma(u: &PhasePoly, v: &PhasePoly, quantum: bool) -> Result<PhasePoly> {
    if quantum && u.degree().unwrap_or(0) > 1 && v.degree().unwrap_or(0) > 1 {
        return Err(AlgebraError::Unsupported("symmetric product of two symbols of degree > 1".into()));
    }
    u.try_mul(v)
}

fn component_alpha(u: &PhasePoly, v: &PhasePoly, quantum: bool) -> Result<PhasePoly> {
    if quantum && u.degree().unwrap_or(0) > 2 && v.degree().unwrap_or(0) > 2 {
        return Err(AlgebraError::Unsupported("bracket of two symbols of degree > 2".into()));
    }
    u.poisson(v)
}

fn basis_tensor(i: usize) -> (PhasePoly, PhasePoly) {
    let one = PhasePoly::constant(1, 1.0);
    match i {
        P1 => (PhasePoly::p(1, 0), one),
        X1 => (PhasePoly::x(1, 0), one),
        P2 => (one, PhasePoly::p(1, 0)),
        X2 => (one, PhasePoly::x(1, 0)),
        _ => (one.clone(), one),
    }
}

/// Reads a joint polynomial in `(x1, p1, x2, p2)` as a basis vector.
fn to_basis(poly: &PhasePoly) -> Result<RowVector5<f64>> {
    let mut row = RowVector5::zeros();
    for (e, c) in poly.terms() {
        let slot = match e.as_slice() {
            [0, 0, 0, 0] => ONE,
            [1, 0, 0, 0] => X1,
            [0, 1, 0, 0] => P1,
            [0, 0, 1, 0] => X2,
            [0, 0, 0, 1] => P2,
            _ => {
                return Err(AlgebraError::InternalConsistency(format!(
                    "equations of motion leave the linear span: monomial {e:?}"
                )))
            }
        };
        row[slot] += c;
    }
    Ok(row)
}

/// `α12(f, h)` for simple-tensor lists, via the composition law.
fn composed_alpha(
    coeffs: &CompositionCoefficients,
    f: &[(PhasePoly, PhasePoly)],
    h: &[(PhasePoly, PhasePoly)],
    right_quantum: bool,
) -> Result<PhasePoly> {
    let mut acc = PhasePoly::zero(2);
    for (f1, f2) in f {
        for (h1, h2) in h {
            if coeffs.alpha_left != 0.0 {
                let l = component_alpha(f1, h1, true)?;
                let r = component_sigma(f2, h2, right_quantum)?;
                acc = acc.add(&l.tensor(&r).scale(coeffs.alpha_left));
            }
            if coeffs.alpha_right != 0.0 {
                let l = component_sigma(f1, h1, true)?;
                let r = component_alpha(f2, h2, right_quantum)?;
                acc = acc.add(&l.tensor(&r).scale(coeffs.alpha_right));
            }
        }
    }
    Ok(acc)
}

/// Generator `G` with `ḃ_i = Σ_j G[i][j] b_j`, derived from `ḃ = α12(b, h(t))`.
pub fn eom_generator(cfg: &MeasurementConfig, t: f64) -> Result<Matrix5<f64>> {
    let h = build_hamiltonian(cfg)?.at(t);
    let (a1, a2, a12) = cfg.constants()?;
    let coeffs = CompositionCoefficients::new(a1, a2, a12)?;
    let right_quantum = cfg.regime == Regime::QuantumQuantum;
    let mut g = Matrix5::zeros();
    for i in 0..ONE {
        let deriv = composed_alpha(&coeffs, &[basis_tensor(i)], &h, right_quantum)?;
        g.set_row(i, &to_basis(&deriv)?);
    }
    Ok(g)
}

/// `exp(G s)` as a finite sum; fails unless `G^5 = 0`.
pub fn segment_propagator(g: &Matrix5<f64>, s: f64) -> Result<Matrix5<f64>> {
    let gs = g * s;
    let mut term = Matrix5::identity();
    let mut sum = Matrix5::identity();
    for k in 1..=4 {
        term = term * gs / k as f64;
        sum += term;
    }
    if (g.pow(5)).norm() > 0.0 {
        return Err(AlgebraError::InternalConsistency("generator is not nilpotent".into()));
    }
    Ok(sum)
}

/// Sample times and, per sample, the tracked observables in the initial basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub config: MeasurementConfig,
    pub times: Vec<f64>,
    /// `values[k][i]` is observable `TRACKED[i]` at `times[k]` over `BASIS`.
    pub values: Vec<[[f64; 5]; 4]>,
}

impl Trajectory {
    pub fn final_row(&self, observable: usize) -> [f64; 5] {
        self.values.last().map(|v| v[observable]).unwrap_or_default()
    }

    /// Writes `t` and one column per (observable, basis element), 17 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let io = |e: csv::Error| AlgebraError::InvalidParameter(format!("csv write failed: {e}"));
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        for o in TRACKED {
            header.extend(BASIS.iter().map(|b| format!("{o}_{b}")));
        }
        w.write_record(&header).map_err(io)?;
        for (t, rows) in self.times.iter().zip(&self.values) {
            let mut rec = vec![format!("{t:.16e}")];
            rec.extend(rows.iter().flatten().map(|v| format!("{v:.16e}")));
            w.write_record(&rec).map_err(io)?;
        }
        w.flush().map_err(|e| AlgebraError::InvalidParameter(format!("csv write failed: {e}")))?;
        Ok(())
    }
}

fn check_sampling(t_end: f64, n_samples: usize) -> Result<()> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(AlgebraError::InvalidParameter(format!("t_end must be positive, got {t_end}")));
    }
    if n_samples < 2 {
        return Err(AlgebraError::InvalidParameter(format!("n_samples must be >= 2, got {n_samples}")));
    }
    Ok(())
}

fn sample_times(t_end: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| if k + 1 == n { t_end } else { t_end * k as f64 / (n - 1) as f64 }).collect()
}

/// Splits `[from, to]` at the window edges.
fn segments(cfg: &MeasurementConfig, from: f64, to: f64) -> Vec<(f64, f64)> {
    let mut cuts = vec![from];
    for edge in [cfg.t0, cfg.t0 + cfg.dt] {
        if edge > from && edge < to {
            cuts.push(edge);
        }
    }
    cuts.push(to);
    cuts.windows(2).map(|w| (w[0], w[1])).collect()
}

fn rows(m: &Matrix5<f64>) -> [[f64; 5]; 4] {
    let mut out = [[0.0; 5]; 4];
    for (i, r) in out.iter_mut().enumerate() {
        for (j, v) in r.iter_mut().enumerate() {
            *v = m[(i, j)];
        }
    }
    out
}

/// Exact or approximate `exp(G s)` for one constant-coupling piece.
type StepFn = dyn Fn(&Matrix5<f64>, f64) -> Result<Matrix5<f64>>;

/// Advances `m` from `from` to `to` with `step` applied on each constant-coupling segment.
fn propagate(cfg: &MeasurementConfig, m: Matrix5<f64>, from: f64, to: f64, step: &StepFn) -> Result<Matrix5<f64>> {
    let mut m = m;
    for (a, b) in segments(cfg, from, to) {
        let g = eom_generator(cfg, 0.5 * (a + b))?;
        m = step(&g, b - a)? * m;
    }
    Ok(m)
}

fn evolve_with(cfg: &MeasurementConfig, t_end: f64, n_samples: usize, step: &StepFn) -> Result<Trajectory> {
    cfg.validate()?;
    check_sampling(t_end, n_samples)?;
    let times = sample_times(t_end, n_samples);
    let mut m = Matrix5::identity();
    let mut values = vec![rows(&m)];
    for w in times.windows(2) {
        m = propagate(cfg, m, w[0], w[1], step)?;
        values.push(rows(&m));
    }
    Ok(Trajectory { config: *cfg, times, values })
}

/// Exact evolution from `t = 0`, sampled at `n_samples` evenly spaced times.
pub fn evolve(cfg: &MeasurementConfig, t_end: f64, n_samples: usize) -> Result<Trajectory> {
    evolve_with(cfg, t_end, n_samples, &segment_propagator)
}

/// Classical RK4 with `substeps` steps per constant-coupling piece.
pub fn evolve_rk4(cfg: &MeasurementConfig, t_end: f64, n_samples: usize, substeps: usize) -> Result<Trajectory> {
    if substeps == 0 {
        return Err(AlgebraError::InvalidParameter("substeps must be >= 1".into()));
    }
    let step = move |g: &Matrix5<f64>, s: f64| -> Result<Matrix5<f64>> {
        let h = s / substeps as f64;
        let mut m = Matrix5::identity();
        for _ in 0..substeps {
            let k1 = g * m;
            let k2 = g * (m + k1 * (h / 2.0));
            let k3 = g * (m + k2 * (h / 2.0));
            let k4 = g * (m + k3 * h);
            m += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
        Ok(m)
    };
    evolve_with(cfg, t_end, n_samples, &step)
}

/// `‖p2(t_end) − p2(0)‖` over the basis coefficients.
pub fn back_reaction_gap_at(cfg: &MeasurementConfig, t_end: f64) -> Result<f64> {
    let traj = evolve(cfg, t_end, 2)?;
    let end = traj.final_row(P2);
    let start = traj.values[0][P2];
    Ok(end.iter().zip(start).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
}

/// Gap once the coupling window has closed (evaluated at `t0 + dt`).
pub fn back_reaction_gap(cfg: &MeasurementConfig) -> Result<f64> {
    cfg.validate()?;
    let end = cfg.t0 + cfg.dt;
    if end <= 0.0 {
        return Ok(0.0);
    }
    back_reaction_gap_at(cfg, end)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreezingReport {
    pub hamiltonians: usize,
    pub observables_per_hamiltonian: usize,
    pub seed: u64,
    pub max_derivative_norm: f64,
    pub worst_hamiltonian: usize,
}

/// Derivative `α12(e ⊗ f, h)` of pure-classical observables under random
/// hybrid Hamiltonians `h` (quantum dim `setting.dim`, one canonical pair).
pub fn freezing_check(
    setting: &HybridSetting,
    hamiltonians: usize,
    seed: u64,
    exec: Execution,
) -> Result<FreezingReport> {
    setting.validate()?;
    if hamiltonians == 0 {
        return Err(AlgebraError::InvalidParameter("hamiltonians must be >= 1".into()));
    }
    const OBSERVABLES: usize = 4;
    let q = OperatorAlgebra::new(setting.dim, setting.hbar)?;
    let c = PhaseSpaceAlgebra::new(setting.num_pairs, setting.max_degree)?;
    let alg = ComposedAlgebra::hybrid(q.clone(), c.clone())?;
    let unit = crate::algebra::Operator::identity(setting.dim);
    let norms = map_indexed(exec, hamiltonians, |i| -> Result<f64> {
        let mut rng = trial_rng(seed, i as u64);
        let h = setting.random_element(&mut rng)?;
        let mut obs: Vec<PhasePoly> = vec![PhasePoly::x(setting.num_pairs, 0), PhasePoly::p(setting.num_pairs, 0)];
        while obs.len() < OBSERVABLES {
            obs.push(crate::algebra::HamiltonAlgebra::random_element(&c, &mut rng));
        }
        let mut worst = 0.0f64;
        for f in &obs {
            let u: HybridElement = q.tensor(&c, &unit, f);
            worst = worst.max(alg.alpha12(&u, &h)?.norm());
        }
        Ok(worst)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let (worst_hamiltonian, max_derivative_norm) =
        norms.iter().enumerate().fold((0, 0.0), |(wi, wm), (i, &n)| if n > wm { (i, n) } else { (wi, wm) });
    Ok(FreezingReport {
        hamiltonians,
        observables_per_hamiltonian: OBSERVABLES,
        seed,
        max_derivative_norm,
        worst_hamiltonian,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qc() -> MeasurementConfig {
        MeasurementConfig { regime: Regime::QuantumClassical, ..MeasurementConfig::default() }
    }

    #[test]
    fn generator_rows() {
        let cfg = MeasurementConfig { m1: 2.0, m2: 5.0, ..MeasurementConfig::default() };
        let g = eom_generator(&cfg, 0.5).unwrap();
        let expect = Matrix5::from_row_slice(&[
            0.0, 0.0, 0.0, 0.0, 0.0, //
            0.5, 0.0, 0.0, 0.7, 0.0, //
            -0.7, 0.0, 0.0, 0.0, 0.0, //
            0.0, 0.0, 0.2, 0.0, 0.0, //
            0.0, 0.0, 0.0, 0.0, 0.0,
        ]);
        assert!((g - expect).norm() < 1e-15, "{g}");

        let g = eom_generator(&MeasurementConfig { m1: 2.0, m2: 5.0, ..qc() }, 0.5).unwrap();
        assert_eq!(g.row(P2).norm(), 0.0);
        assert_eq!(g.row(X2).norm(), 0.0);
        assert!((g[(X1, X2)] - 0.7).abs() < 1e-15);
        assert!((g[(X1, P1)] - 0.5).abs() < 1e-15);

        let outside = eom_generator(&cfg, 3.0).unwrap();
        assert_eq!(outside[(P2, P1)], 0.0);
        assert_eq!(outside[(X1, X2)], 0.0);
    }

    #[test]
    fn nilpotent_of_index_four() {
        let g = eom_generator(&MeasurementConfig::default(), 0.1).unwrap();
        assert!(g.pow(3).norm() > 0.0);
        assert_eq!(g.pow(4).norm(), 0.0);
    }

    #[test]
    fn momentum_transfer() {
        let cfg = MeasurementConfig::default();
        let traj = evolve(&cfg, 2.0, 21).unwrap();
        let p2 = traj.final_row(P2);
        assert!((p2[P1] + 0.91).abs() <= 1e-12);
        assert!((p2[P2] - 1.0).abs() <= 1e-15);
        assert!((back_reaction_gap(&cfg).unwrap() - 0.91).abs() <= 1e-12);
        assert!((back_reaction_gap_at(&cfg, 2.0).unwrap() - 0.91).abs() <= 1e-12);
        for v in &traj.values {
            assert_eq!(v[P1], [1.0, 0.0, 0.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn classical_apparatus_is_frozen() {
        let traj = evolve(&qc(), 2.0, 21).unwrap();
        for v in &traj.values {
            assert_eq!(v[P2], [0.0, 0.0, 1.0, 0.0, 0.0]);
            assert_eq!(v[X2], [0.0, 0.0, 0.0, 1.0, 0.0]);
        }
        assert!(back_reaction_gap(&qc()).unwrap() <= 1e-12);
        // forward action: x1 picks up g0 Δt x2
        assert!((traj.final_row(X1)[X2] - 0.91).abs() < 1e-12);
    }

    #[test]
    fn free_particle() {
        let cfg = MeasurementConfig { g0: 0.0, m1: 4.0, ..MeasurementConfig::default() };
        let traj = evolve(&cfg, 2.0, 5).unwrap();
        for (t, v) in traj.times.iter().zip(&traj.values) {
            assert!((v[X1][P1] - t / 4.0).abs() < 1e-15);
            assert_eq!(v[X1][X1], 1.0);
        }
        assert_eq!(back_reaction_gap(&cfg).unwrap(), 0.0);
    }

    #[test]
    fn chained_steps_and_rk4_agree() {
        let cfg = MeasurementConfig { t0: 0.3, m2: 1.7, ..MeasurementConfig::default() };
        let one = evolve(&cfg, 2.0, 2).unwrap();
        let many = evolve(&cfg, 2.0, 7).unwrap();
        let rk = evolve_rk4(&cfg, 2.0, 2, 3).unwrap();
        for i in 0..4 {
            for j in 0..5 {
                assert!((one.final_row(i)[j] - many.final_row(i)[j]).abs() < 1e-13);
                assert!((one.final_row(i)[j] - rk.final_row(i)[j]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn hamiltonian_json_round_trip() {
        let h = build_hamiltonian(&MeasurementConfig::default()).unwrap();
        let back: Hamiltonian = serde_json::from_str(&serde_json::to_string(&h).unwrap()).unwrap();
        assert_eq!(h, back);
        assert_eq!(h.terms.len(), 3);
        assert!((h.terms[0].left.coeff(&[0, 2]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn invalid_inputs() {
        assert!(evolve(&MeasurementConfig::default(), 0.0, 5).is_err());
        assert!(evolve(&MeasurementConfig::default(), 1.0, 1).is_err());
        assert!(build_hamiltonian(&MeasurementConfig { dt: 0.0, ..MeasurementConfig::default() }).is_err());
        assert!(build_hamiltonian(&MeasurementConfig { m1: -1.0, ..MeasurementConfig::default() }).is_err());
    }

    #[test]
    fn freezing_for_random_hamiltonians() {
        let r = freezing_check(&HybridSetting::default(), 10, 0, Execution::default()).unwrap();
        assert!(r.max_derivative_norm <= 1e-12);
    }

    #[test]
    fn csv_layout() {
        let traj = evolve(&MeasurementConfig::default(), 2.0, 3).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].starts_with("t,p1_p1,p1_x1"));
        assert_eq!(lines[0].split(',').count(), 21);
        assert!(lines[3].starts_with("2.0000000000000000e0,"));
    }
}
