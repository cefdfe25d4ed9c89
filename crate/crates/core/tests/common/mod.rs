#![allow(dead_code)]

//! Test-only oracles built without the library's element types.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde_json::Value;

type Mat = DMatrix<Complex64>;

/// Operator-valued polynomial kept as an unmerged list of terms.
#[derive(Clone, Debug)]
pub struct Expansion {
    pub dim: usize,
    pub pairs: usize,
    pub terms: Vec<(Vec<u32>, Mat)>,
}

impl Expansion {
    /// Reads the `kind: "hybrid"` JSON form directly.
    pub fn from_json(v: &Value) -> Expansion {
        assert_eq!(v["kind"], "hybrid");
        let dim = v["dim"].as_u64().unwrap() as usize;
        let pairs = v["num_pairs"].as_u64().unwrap() as usize;
        let terms = v["parts"]
            .as_array()
            .unwrap()
            .iter()
            .map(|p| {
                let e: Vec<u32> =
                    p["exponents"].as_array().unwrap().iter().map(|x| x.as_u64().unwrap() as u32).collect();
                let flat: Vec<Complex64> = p["entries"]
                    .as_array()
                    .unwrap()
                    .iter()
                    .map(|z| Complex64::new(z[0].as_f64().unwrap(), z[1].as_f64().unwrap()))
                    .collect();
                (e, DMatrix::from_row_slice(dim, dim, &flat))
            })
            .collect();
        Expansion { dim, pairs, terms }
    }

    fn empty(&self) -> Expansion {
        Expansion { dim: self.dim, pairs: self.pairs, terms: Vec::new() }
    }

    pub fn plus(&self, o: &Expansion) -> Expansion {
        let mut t = self.terms.clone();
        t.extend(o.terms.iter().cloned());
        Expansion { terms: t, ..self.empty() }
    }

    pub fn times(&self, k: f64) -> Expansion {
        Expansion {
            terms: self.terms.iter().map(|(e, m)| (e.clone(), m * Complex64::new(k, 0.0))).collect(),
            ..self.empty()
        }
    }

    pub fn norm(&self) -> f64 {
        let mut merged: BTreeMap<Vec<u32>, Mat> = BTreeMap::new();
        for (e, m) in &self.terms {
            merged.entry(e.clone()).and_modify(|acc| *acc += m).or_insert_with(|| m.clone());
        }
        merged.values().map(|m| m.iter().map(|z| z.norm_sqr()).sum::<f64>()).sum::<f64>().sqrt()
    }

    /// `Σ_{i,j} f(e_i, A_i, e_j, B_j)` over all term pairs.
    fn expand(&self, o: &Expansion, f: impl Fn(&[u32], &Mat, &[u32], &Mat) -> Vec<(Vec<u32>, Mat)>) -> Expansion {
        let mut t = Vec::new();
        for (ea, a) in &self.terms {
            for (eb, b) in &o.terms {
                t.extend(f(ea, a, eb, b));
            }
        }
        Expansion { terms: t, ..self.empty() }
    }

    pub fn product(&self, o: &Expansion) -> Expansion {
        self.expand(o, |ea, a, eb, b| vec![(sum(ea, eb), a * b)])
    }
}

fn sum(a: &[u32], b: &[u32]) -> Vec<u32> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// `∂/∂var` of the monomial with exponents `e`: (coefficient, exponents).
fn d(e: &[u32], var: usize) -> Option<(f64, Vec<u32>)> {
    if e[var] == 0 {
        return None;
    }
    let mut out = e.to_vec();
    out[var] -= 1;
    Some((e[var] as f64, out))
}

/// Poisson bracket of two monomials, variables ordered `(x1, p1, x2, p2, ...)`.
pub fn monomial_poisson(a: &[u32], b: &[u32], pairs: usize) -> Vec<(f64, Vec<u32>)> {
    let mut out = Vec::new();
    for k in 0..pairs {
        let (x, p) = (2 * k, 2 * k + 1);
        if let (Some((ca, ea)), Some((cb, eb))) = (d(a, x), d(b, p)) {
            out.push((ca * cb, sum(&ea, &eb)));
        }
        if let (Some((ca, ea)), Some((cb, eb))) = (d(a, p), d(b, x)) {
            out.push((-ca * cb, sum(&ea, &eb)));
        }
    }
    out
}

fn scaled(m: &Mat, k: f64) -> Mat {
    m * Complex64::new(k, 0.0)
}

/// Mixed brackets written out from their defining formulas.
pub fn bracket(kind: &str, u: &Expansion, v: &Expansion, hbar: f64) -> Expansion {
    let pairs = u.pairs;
    let comm = |a: &Mat, b: &Mat| (a * b - b * a) * Complex64::new(0.0, -1.0 / hbar);
    u.expand(v, |ea, a, eb, b| {
        let mut out = vec![(sum(ea, eb), comm(a, b))];
        let pb_ab = monomial_poisson(ea, eb, pairs);
        match kind {
            "hybrid" => {}
            "boucher_traschen" => {
                let anti = (a * b + b * a) * Complex64::new(0.5, 0.0);
                out.extend(pb_ab.into_iter().map(|(c, e)| (e, scaled(&anti, c))));
            }
            "aleksandrov" => {
                let (ab, ba) = (a * b, b * a);
                out.extend(pb_ab.into_iter().map(|(c, e)| (e, scaled(&ab, 0.5 * c))));
                out.extend(monomial_poisson(eb, ea, pairs).into_iter().map(|(c, e)| (e, scaled(&ba, -0.5 * c))));
            }
            "anderson" => {
                let ab = a * b;
                out.extend(pb_ab.into_iter().map(|(c, e)| (e, scaled(&ab, c))));
            }
            other => panic!("unknown bracket {other}"),
        }
        out
    })
}

/// Relative defect of `desideratum` recomputed from witness inputs.
pub fn replay_defect(kind: &str, desideratum: &str, inputs: &[Value], hbar: f64) -> f64 {
    let xs: Vec<Expansion> = inputs.iter().map(Expansion::from_json).collect();
    let br = |a: &Expansion, b: &Expansion| bracket(kind, a, b, hbar);
    let norms: f64 = xs.iter().map(Expansion::norm).product();
    let diff = match desideratum {
        "antisymmetry" => br(&xs[0], &xs[1]).plus(&br(&xs[1], &xs[0])),
        "jacobi" => {
            let (a, b, c) = (&xs[0], &xs[1], &xs[2]);
            br(&br(a, b), c).plus(&br(&br(b, c), a)).plus(&br(&br(c, a), b))
        }
        "derivation" => {
            let (a, b, c) = (&xs[0], &xs[1], &xs[2]);
            let lhs = br(a, &b.product(c));
            lhs.plus(&br(a, b).product(c).times(-1.0)).plus(&b.product(&br(a, c)).times(-1.0))
        }
        other => panic!("unknown desideratum {other}"),
    };
    diff.norm() / (1.0 + norms)
}

pub fn schema() -> Value {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/schema/report.schema.json");
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Schema violations of `doc`, rendered as strings.
pub fn schema_errors(doc: &Value) -> Vec<String> {
    let schema = schema();
    let validator = jsonschema::validator_for(&schema).expect("schema compiles");
    validator.iter_errors(doc).map(|e| format!("{} at {}", e, e.instance_path)).collect()
}
