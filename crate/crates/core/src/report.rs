//! Structured command reports with JSON and table renderings.

use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::mesh::Integral;

/// Version of the JSON layout.
pub const SCHEMA: u32 = 1;

/// The sign and normalisation conventions every number in a report depends
/// on. Reports carry its SHA-256 so results computed under different
/// conventions cannot be mixed up silently.
pub const CONVENTIONS: &str = "\
frames: e_b = e_a g_ab, components s_a = g_ab s_b
connections: theta_b = g^-1 theta_a g + g^-1 dg, curvature K = d theta + theta ^ theta
frame-parallel connection: theta = -dS S^-1
chern forms: c^q = (i/2pi)^q times the sum of principal q-minors of K
bott forms: (1/2)(F(theta0, theta1) - F(theta1, theta0)), F the fibre integral over [0,1] with 16-point Gauss-Legendre
cech differential: D(w0, w1, w01) = (dw0, dw1, w1 - w0 - dw01)
collating map: rho0 w0 + rho1 w1 - drho0 ^ w01
honeycomb integral: int_R0 w0 + int_R1 w1 - int_R01 w01 with R01 = boundary of R1
orientation: dx ^ dy = (i/2) dz ^ dzbar positive, links counterclockwise, spheres outward
bochner-martinelli index: minus the integral of the pulled back kernel over the outward sphere
";

/// Hex SHA-256 of [`CONVENTIONS`].
pub fn conventions_hash() -> String {
    hex::encode(Sha256::digest(CONVENTIONS.as_bytes()))
}

/// One pass/fail judgement, with the measured quantity and its bound when
/// the judgement is numeric.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub value: Option<f64>,
    pub limit: Option<f64>,
    pub pass: bool,
}

impl Verdict {
    /// Passes when `value < limit`.
    pub fn below(name: impl Into<String>, value: f64, limit: f64) -> Verdict {
        Verdict {
            name: name.into(),
            value: Some(value),
            limit: Some(limit),
            pass: value < limit,
        }
    }

    pub fn holds(name: impl Into<String>, pass: bool) -> Verdict {
        Verdict {
            name: name.into(),
            value: None,
            limit: None,
            pass,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Flags {
    pub tol: f64,
    pub quad_tol: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub schema: u32,
    pub command: Vec<String>,
    pub scene: Option<String>,
    pub flags: Flags,
    pub conventions: String,
    pub results: Value,
    pub verdicts: Vec<Verdict>,
    pub pass: bool,
}

impl Report {
    pub fn new(command: Vec<String>, scene: Option<String>, flags: Flags, results: Value, verdicts: Vec<Verdict>) -> Report {
        Report {
            schema: SCHEMA,
            command,
            scene,
            flags,
            conventions: conventions_hash(),
            results,
            pass: verdicts.iter().all(|v| v.pass),
            verdicts,
        }
    }

    /// Pretty JSON; object keys come out sorted.
    pub fn to_json(&self) -> String {
        let v = serde_json::to_value(self).expect("reports hold plain data");
        let mut s = serde_json::to_string_pretty(&v).expect("values serialize");
        s.push('\n');
        s
    }

    /// The number at a dot-separated path such as `results.locals.0.value.re`.
    pub fn lookup(&self, path: &str) -> Option<f64> {
        let v = serde_json::to_value(self).ok()?;
        let mut cur = &v;
        for seg in path.split('.') {
            cur = match cur {
                Value::Object(m) => m.get(seg)?,
                Value::Array(a) => a.get(seg.parse::<usize>().ok()?)?,
                _ => return None,
            };
        }
        cur.as_f64()
    }

    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            1
        }
    }

    /// Human-readable rendering: flattened results followed by the verdicts.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("command      {}\n", self.command.join(" ")));
        if let Some(s) = &self.scene {
            out.push_str(&format!("scene        {s}\n"));
        }
        out.push_str(&format!(
            "flags        tol={:e} quad-tol={:e} seed={:#x}\n",
            self.flags.tol, self.flags.quad_tol, self.flags.seed
        ));
        out.push_str(&format!("conventions  {}\n\n", &self.conventions[..16]));
        let mut rows = Vec::new();
        flatten("", &self.results, &mut rows);
        let width = rows.iter().map(|(k, _)| k.chars().count()).max().unwrap_or(0);
        for (k, v) in &rows {
            out.push_str(&format!("{k:<width$}  {v}\n"));
        }
        out.push('\n');
        let width = self.verdicts.iter().map(|v| v.name.chars().count()).max().unwrap_or(0);
        for v in &self.verdicts {
            let status = if v.pass { "PASS" } else { "FAIL" };
            let numbers = match (v.value, v.limit) {
                (Some(x), Some(l)) => format!("{x:.3e} < {l:.1e}"),
                (Some(x), None) if x.fract() == 0.0 && x.abs() < 1e15 => format!("{x}"),
                (Some(x), None) => format!("{x:.6e}"),
                _ => String::new(),
            };
            out.push_str(&format!("{status}  {:<width$}  {numbers}\n", v.name));
        }
        out.push_str(&format!("\n{}\n", if self.pass { "PASS" } else { "FAIL" }));
        out
    }
}

/// Leaves of a JSON value as `(dotted path, rendered value)`; long arrays of
/// objects are summarised by their length.
fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let join = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                flatten(&join(k), x, out);
            }
        }
        Value::Array(a) if a.iter().all(|x| !x.is_object() && !x.is_array()) => {
            let items: Vec<String> = a.iter().map(render_scalar).collect();
            out.push((prefix.to_string(), format!("[{}]", items.join(", "))));
        }
        Value::Array(a) if a.len() > 8 => out.push((prefix.to_string(), format!("[{} entries, see --json]", a.len()))),
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                flatten(&join(&i.to_string()), x, out);
            }
        }
        x => out.push((prefix.to_string(), render_scalar(x))),
    }
}

fn render_scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Number(n) => match n.as_f64() {
            Some(x) if n.is_f64() => {
                let s = format!("{x:.12}");
                let s = s.trim_end_matches('0').trim_end_matches('.');
                if s == "-0" { "0".to_string() } else { s.to_string() }
            }
            _ => n.to_string(),
        },
        other => other.to_string(),
    }
}

pub fn complex_value(z: Complex64) -> Value {
    json!({ "re": z.re, "im": z.im })
}

pub fn integral_value(i: &Integral) -> Value {
    json!({ "re": i.value.re, "im": i.value.im, "error": i.error })
}

pub fn point_value(p: &[Complex64]) -> Value {
    Value::Array(p.iter().map(|z| json!([z.re, z.im])).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup_follows_objects_and_arrays() {
        let r = Report::new(
            vec!["x".into()],
            None,
            Flags { tol: 1e-6, quad_tol: 1e-9, seed: 1 },
            json!({ "locals": [{ "value": { "re": 1.5 } }] }),
            vec![Verdict::below("small", 0.1, 1.0)],
        );
        assert_eq!(r.lookup("results.locals.0.value.re"), Some(1.5));
        assert_eq!(r.lookup("results.locals.1.value.re"), None);
        assert!(r.pass);
        assert_eq!(r.exit_code(), 0);
        assert!(r.to_table().contains("locals.0.value.re"));
    }

    #[test]
    fn json_is_stable_and_sorted() {
        let r = Report::new(vec![], None, Flags { tol: 1e-6, quad_tol: 1e-9, seed: 7 }, json!({ "b": 1, "a": 2 }), vec![]);
        let s = r.to_json();
        assert_eq!(s, r.clone().to_json());
        assert!(s.find("\"a\"").unwrap() < s.find("\"b\"").unwrap());
        assert_eq!(conventions_hash().len(), 64);
    }
}
