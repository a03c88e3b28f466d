//! Acceptance run: one line per criterion, exit status 1 if any fails.
//!
//! Every expected value is produced here by an oracle that does not go
//! through the code under test: winding numbers by summing argument
//! increments, residues by the periodic trapezoid rule, areas in closed
//! form, and the cusp obstruction by a separate exact elimination.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};

use extcw::cechderham::{CechCochain, ChartForms};
use extcw::checks::{bott_suite, cech_suite, planar_cech_setup, planar_square, random_form, stokes_suite, PLANAR_DISK_CENTER};
use extcw::cli::run_args;
use extcw::extendability::{cusp_form, cusp_map, sweep, Membership};
use extcw::fields::{parse_expr, Expr};
use extcw::forms::Form;
use extcw::geometry::{honeycomb_from_marks, sphere_chain, BumpProfile};
use extcw::report::Report;
use extcw::residues::{bm_index, camacho_sad, FoliationGerm};
use extcw::scene::{packaged, Scene};
use extcw::{geometry::link_of_point, seeded_rng, DEFAULT_SEED};

fn c(x: f64, y: f64) -> Complex64 {
    Complex64::new(x, y)
}

fn scene_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenes").join(name)
}

fn run(args: &[&str]) -> Result<Report, String> {
    let mut argv = vec!["extcw"];
    argv.extend_from_slice(args);
    run_args(argv).map(|(_, r)| r).map_err(|e| e.to_string())
}

/// Winding number of `f` around `|z − p| = r`, by summing principal
/// arguments of successive ratios.
fn winding(f: &dyn Fn(Complex64) -> Complex64, p: Complex64, r: f64) -> f64 {
    let n = 4096;
    let mut total = 0.0;
    let mut prev = f(p + r);
    for k in 1..=n {
        let z = p + Complex64::from_polar(r, 2.0 * PI * k as f64 / n as f64);
        let cur = f(z);
        total += (cur / prev).arg();
        prev = cur;
    }
    total / (2.0 * PI)
}

/// `(1/2πi)∮ g dy` over `|y| = r` by the trapezoid rule, which converges
/// geometrically for integrands analytic near the circle.
fn trapezoid_residue(g: &dyn Fn(Complex64) -> Complex64, r: f64) -> Complex64 {
    let n = 512;
    let mut acc = c(0.0, 0.0);
    for k in 0..n {
        let e = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64);
        // dy = i y dθ
        acc += g(e * r) * c(0.0, 1.0) * e * r;
    }
    acc * (2.0 * PI / n as f64) / c(0.0, 2.0 * PI)
}

fn eval1(e: &Expr, z: Complex64) -> Complex64 {
    e.eval(&[z], &[]).expect("finite on the contour")
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn criterion_1() -> Result<Outcome, String> {
    let mut lines = Vec::new();
    let mut pass = true;
    for d in -2i64..=3 {
        let file = packaged::p1_od_file_name(d);
        let path = scene_path(&file);
        let scene = Scene::load(&path).map_err(|e| e.to_string())?;
        let g = scene.bundle.as_ref().unwrap().transition(0, 1).unwrap().get(0, 0).clone();
        // the degree of O(d) is the winding number of its transition function
        let oracle = winding(&|z| eval1(&g, z), c(0.0, 0.0), 1.0).round();
        let start = Instant::now();
        let r = run(&["--scene", path.to_str().unwrap(), "chern", "--q", "1"])?;
        let elapsed = start.elapsed();
        let got = r.lookup("results.integral.re").ok_or("no integral")?;
        let ok = (got - oracle).abs() < 1e-6 && elapsed < Duration::from_secs(5);
        pass &= ok;
        lines.push(format!("d={d}: {got:.9} vs {oracle} in {:.2}s", elapsed.as_secs_f64()));
    }
    Ok(outcome(pass, lines.join("; ")))
}

fn criterion_2() -> Result<Outcome, String> {
    let path = scene_path("tp1_vector_field.json");
    let scene = Scene::load(&path).map_err(|e| e.to_string())?;
    // Poincaré–Hopf: the local index of z ∂/∂z at each zero is the winding
    // number of its component in the chart frame, and the total is the
    // degree of Tℙ¹, the winding number of its transition function.
    let sections = scene.sections.as_ref().unwrap();
    let local_oracle: Vec<f64> = [0usize, 1]
        .iter()
        .map(|chart| {
            let s = sections.on(*chart).unwrap()[0][0].clone();
            winding(&|z| eval1(&s, z), c(0.0, 0.0), 0.1).round()
        })
        .collect();
    let g = scene.bundle.as_ref().unwrap().transition(0, 1).unwrap().get(0, 0).clone();
    let global_oracle = winding(&|z| eval1(&g, z), c(0.0, 0.0), 1.0).round();
    let r = run(&["--scene", path.to_str().unwrap(), "verify", "residue-theorem", "--q", "1"])?;
    let l0 = r.lookup("results.locals.0.value.re").ok_or("no local 0")?;
    let l1 = r.lookup("results.locals.1.value.re").ok_or("no local 1")?;
    let global = r.lookup("results.global.re").ok_or("no global")?;
    let discrepancy = r.lookup("results.discrepancy").ok_or("no discrepancy")?;
    let pass = (l0 - local_oracle[0]).abs() < 1e-3
        && (l1 - local_oracle[1]).abs() < 1e-3
        && (global - global_oracle).abs() < 1e-6
        && discrepancy < 1e-6
        && local_oracle.iter().sum::<f64>() == global_oracle;
    Ok(outcome(
        pass,
        format!("locals ({l0:.6}, {l1:.6}) vs {local_oracle:?}, global {global:.9} vs {global_oracle}, discrepancy {discrepancy:.2e}"),
    ))
}

fn criterion_3() -> Result<Outcome, String> {
    let s = bott_suite(5, 50, DEFAULT_SEED, 1e-7).map_err(|e| e.to_string())?;
    let antisymmetric = s.cases.iter().all(|c| c.antisymmetric);
    let ranks: Vec<usize> = s.cases.iter().map(|c| c.rank).collect();
    Ok(outcome(
        s.pass && antisymmetric && s.pairs == 5 && s.points == 50,
        format!("{} pair/degree cases (ranks {ranks:?}), worst residual {:.2e}, antisymmetric {antisymmetric}", s.cases.len(), s.worst),
    ))
}

fn criterion_4() -> Result<Outcome, String> {
    let start = Instant::now();
    let s = stokes_suite(30, DEFAULT_SEED, 1e-8).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    Ok(outcome(
        s.passed == 30 && elapsed < Duration::from_secs(10),
        format!("{}/30 within 1e-8 (worst {:.2e}) in {:.2}s", s.passed, s.worst, elapsed.as_secs_f64()),
    ))
}

/// `∫∫_{[−2,2]²} x² dx dy`.
const SQUARE_SECOND_MOMENT: f64 = 64.0 / 3.0;

fn criterion_5() -> Result<Outcome, String> {
    let tol = 1e-9;
    let s = cech_suite(DEFAULT_SEED, tol).map_err(|e| e.to_string())?;
    let mut detail: Vec<String> = s.checks.iter().map(|c| format!("{} {:.1e}", c.name, c.worst)).collect();
    // closed-form oracle: P(x² dx∧dy) plus D of a cochain supported inside
    // the covering disk integrates to ∫ x² over the square for every radius
    let (atlas, cov, _) = planar_cech_setup(BumpProfile::Quadratic).map_err(|e| e.to_string())?;
    let area = Form::parse("re(z1)^2*i/2*dz1^dzbar1", 0, 1).map_err(|e| e.to_string())?;
    let mut rng = seeded_rng(DEFAULT_SEED ^ 5);
    let beta = CechCochain::new(
        1,
        &cov,
        [(0, Form::zero(0, 1, 1))].into_iter().collect(),
        vec![random_form(&mut rng, 0, 1, 1, 2)],
        vec![random_form(&mut rng, 0, 1, 0, 2)],
    )
    .and_then(|b| b.apply_d())
    .map_err(|e| e.to_string())?;
    let global: ChartForms = [(0, area)].into_iter().collect();
    let p = CechCochain::restrict_global(&global, &cov).map_err(|e| e.to_string())?;
    let sum = CechCochain::new(
        2,
        &cov,
        [(0, p.outer[&0].try_add(&beta.outer[&0]).unwrap())].into_iter().collect(),
        vec![p.disks[0].try_add(&beta.disks[0]).unwrap()],
        vec![p.overlap[0].try_add(&beta.overlap[0]).unwrap()],
    )
    .map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for radius in [0.5, 0.7, 0.9] {
        let h = honeycomb_from_marks(&atlas, &cov, &[(0, PLANAR_DISK_CENTER)], radius).map_err(|e| e.to_string())?;
        let v = sum.honeycomb_integrate(&planar_square(), &h, tol * 0.1).map_err(|e| e.to_string())?.value;
        worst = worst.max((v - SQUARE_SECOND_MOMENT).norm());
    }
    detail.push(format!("closed-form honeycomb check {worst:.1e}"));
    Ok(outcome(s.pass && worst < 2.0 * tol, detail.join("; ")))
}

fn criterion_6() -> Result<Outcome, String> {
    let mut pass = true;
    let mut lines = Vec::new();
    for k in 1..=3i64 {
        let f = Expr::var(0).powi(k);
        let mut per_radius = Vec::new();
        for r in [0.5, 1.0, 2.0] {
            let oracle = winding(&|z| eval1(&f, z), c(0.0, 0.0), r).round() as i64;
            let circle = sphere_chain(&[c(0.0, 0.0)], r, 16).map_err(|e| e.to_string())?;
            let got = bm_index(&[f.clone()], &circle, 1e-10).map_err(|e| e.to_string())?;
            pass &= got.index == oracle && oracle == k && got.residual < 1e-3;
            per_radius.push(got.index);
        }
        lines.push(format!("z^{k}: {per_radius:?}"));
    }
    let mut per_radius = Vec::new();
    let mut worst: f64 = 0.0;
    for r in [0.5, 1.0, 2.0] {
        let sphere = sphere_chain(&[c(0.0, 0.0), c(0.0, 0.0)], r, 2).map_err(|e| e.to_string())?;
        let got = bm_index(&[Expr::var(0), Expr::var(1)], &sphere, 1e-8).map_err(|e| e.to_string())?;
        // the identity has degree one
        pass &= got.index == 1 && got.residual < 1e-3;
        worst = worst.max(got.residual);
        per_radius.push(got.index);
    }
    lines.push(format!("identity on S³: {per_radius:?} (residual {worst:.1e})"));
    Ok(outcome(pass, lines.join("; ")))
}

fn criterion_7() -> Result<Outcome, String> {
    let cases = [("3", "2*z2"), ("1", "z2*(1 + z2)"), ("1", "1 + z2")];
    let mut pass = true;
    let mut lines = Vec::new();
    for (a, b) in cases {
        let (ea, eb) = (parse_expr(a).unwrap(), parse_expr(b).unwrap());
        let germ = FoliationGerm::new(ea.clone(), eb.clone()).map_err(|e| e.to_string())?;
        // the quotient a(0, y)/b(0, y), evaluated independently
        let g = |y: Complex64| {
            let p = [c(0.0, 0.0), y];
            ea.eval(&p, &[]).unwrap() / eb.eval(&p, &[]).unwrap()
        };
        let mut values = Vec::new();
        for r in [0.3, 0.5, 0.7] {
            let oracle = trapezoid_residue(&g, r);
            let link = link_of_point(c(0.0, 0.0), r, 16).map_err(|e| e.to_string())?;
            let got = camacho_sad(&germ, &link, 1e-12).map_err(|e| e.to_string())?.value;
            pass &= (got - oracle).norm() < 1e-8;
            values.push(got.re);
        }
        let spread = values.iter().fold(0.0f64, |m, v| m.max((v - values[0]).abs()));
        pass &= spread < 2e-8;
        lines.push(format!("({a}, {b}) → {:.10}", values[1]));
    }
    let r = run(&["--scene", scene_path("linear_foliation.json").to_str().unwrap(), "residue", "camacho-sad"])?;
    let packaged = r.lookup("results.residue.re").ok_or("no residue")?;
    pass &= (packaged - 1.5).abs() < 1e-8;
    lines.push(format!("packaged scene {packaged:.10}"));
    Ok(outcome(pass, lines.join("; ")))
}

/// Independent exact elimination for the cusp: the first truncation degree
/// at which `6/11 z¹¹ + 7/12 z¹²` stops being a polynomial in `z⁵` and
/// `z⁶ + z⁷` without constant term, matched in degrees `1..=N`.
fn brute_force_first_infeasible(max_degree: usize) -> Option<usize> {
    let h = |k: usize| match k {
        11 => BigRational::new(BigInt::from(6), BigInt::from(11)),
        12 => BigRational::new(BigInt::from(7), BigInt::from(12)),
        _ => BigRational::zero(),
    };
    let binomial = |n: usize, k: usize| -> BigRational {
        let mut acc = BigInt::one();
        for i in 0..k {
            acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
        }
        BigRational::from_integer(acc)
    };
    (1..=max_degree).find(|&n| {
        // columns: (z⁵)^a (z⁶ + z⁷)^b = Σ_j C(b, j) z^{5a + 6b + j}
        let mut cols = Vec::new();
        for a in 0..=n / 5 {
            for b in 0..=(n - 5 * a) / 6 {
                if a + b > 0 {
                    cols.push((a, b));
                }
            }
        }
        let mut rows: Vec<Vec<BigRational>> = (1..=n)
            .map(|k| {
                let mut row: Vec<BigRational> = cols
                    .iter()
                    .map(|&(a, b)| {
                        let base = 5 * a + 6 * b;
                        if k >= base && k - base <= b { binomial(b, k - base) } else { BigRational::zero() }
                    })
                    .collect();
                row.push(h(k));
                row
            })
            .collect();
        // row reduction; inconsistent iff a row reduces to (0 … 0 | nonzero)
        let m = cols.len();
        let mut pivot_row = 0;
        for col in 0..m {
            let Some(p) = (pivot_row..rows.len()).find(|&r| !rows[r][col].is_zero()) else { continue };
            rows.swap(pivot_row, p);
            let inv = BigRational::one() / rows[pivot_row][col].clone();
            for x in rows[pivot_row].iter_mut() {
                *x = x.clone() * inv.clone();
            }
            for r in 0..rows.len() {
                if r != pivot_row && !rows[r][col].is_zero() {
                    let f = rows[r][col].clone();
                    let pr = rows[pivot_row].clone();
                    for (x, y) in rows[r].iter_mut().zip(pr) {
                        *x = x.clone() - f.clone() * y;
                    }
                }
            }
            pivot_row += 1;
        }
        rows.iter().any(|r| r[..m].iter().all(Zero::is_zero) && !r[m].is_zero())
    })
}

fn criterion_8() -> Result<Outcome, String> {
    let oracle = brute_force_first_infeasible(20).ok_or("oracle found no obstruction up to 20")?;
    let r = run(&["extendability", "bloom-herrera", "--max-degree", "20"])?;
    let reported = r.lookup("results.obstruction_degree").ok_or("no obstruction degree")? as usize;
    let infeasible = r.results["status"] == "INFEASIBLE";
    // certificates of every feasible truncation reproduce h exactly
    let runs = sweep(&cusp_form(), &cusp_map(), 1..=20).map_err(|e| e.to_string())?;
    let mut feasible = 0;
    let mut exact = true;
    for run in &runs {
        if let Membership::Feasible { certificate } = &run.membership {
            feasible += 1;
            exact &= run.residual.as_ref().is_some_and(|s| s.is_zero());
            exact &= certificate_matches_h(certificate, run.n);
        }
    }
    Ok(outcome(
        infeasible && reported == oracle && oracle == 13 && exact && r.pass,
        format!("INFEASIBLE at {reported}, brute force {oracle}, {feasible} feasible truncations with exact certificates"),
    ))
}

/// Recomputes `Σ c_ab (z⁵)^a (z⁶ + z⁷)^b` with integer binomials and compares
/// it with `6/11 z¹¹ + 7/12 z¹²` in degrees `1..=n`.
fn certificate_matches_h(certificate: &BTreeMap<Vec<u32>, extcw::fields::CRational>, n: usize) -> bool {
    let mut series = vec![(BigRational::zero(), BigRational::zero()); n + 1];
    for (e, coeff) in certificate {
        let (a, b) = (e[0] as usize, e[1] as usize);
        let mut binom = BigInt::one();
        for j in 0..=b {
            let k = 5 * a + 6 * b + j;
            if k <= n {
                let w = BigRational::from_integer(binom.clone());
                series[k].0 = series[k].0.clone() + coeff.re.clone() * w.clone();
                series[k].1 = series[k].1.clone() + coeff.im.clone() * w;
            }
            binom = binom * BigInt::from(b - j) / BigInt::from(j + 1);
        }
    }
    (1..=n).all(|k| {
        let want = match k {
            11 => BigRational::new(BigInt::from(6), BigInt::from(11)),
            12 => BigRational::new(BigInt::from(7), BigInt::from(12)),
            _ => BigRational::zero(),
        };
        series[k].0 == want && series[k].1.is_zero()
    })
}

/// The whole command suite as separate processes, twice.
fn criterion_9() -> Result<Outcome, String> {
    let p = |n: &str| scene_path(n).to_str().unwrap().to_string();
    let mut suite: Vec<Vec<String>> = Vec::new();
    for d in -2i64..=3 {
        suite.push(vec!["--scene".into(), p(&packaged::p1_od_file_name(d)), "chern".into(), "--q".into(), "1".into()]);
    }
    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    suite.push(vec!["--scene".into(), p("tp1_vector_field.json"), "verify".into(), "residue-theorem".into(), "--q".into(), "1".into()]);
    suite.push(vec!["--scene".into(), p("tp1_vector_field.json"), "bott-diff".into(), "--from".into(), "frame".into(), "--to".into(), "nabla".into()]);
    suite.push(vec!["--scene".into(), p("linear_foliation.json"), "residue".into(), "camacho-sad".into()]);
    suite.push(vec!["--scene".into(), p("torus_area.json"), "chern".into()]);
    suite.push(s(&["verify", "bott"]));
    suite.push(s(&["verify", "stokes", "--trials", "30"]));
    suite.push(s(&["cech", "verify"]));
    suite.push(s(&["residue", "index", "--map", "z1^3"]));
    suite.push(s(&["residue", "index", "--map", "z1", "--map", "z2"]));
    suite.push(s(&["extendability", "bloom-herrera", "--max-degree", "20"]));
    let run_all = || -> Result<Vec<Vec<u8>>, String> {
        suite
            .iter()
            .map(|args| {
                let out = Command::new(env!("CARGO_BIN_EXE_extcw"))
                    .arg("--json")
                    .args(args)
                    .output()
                    .map_err(|e| e.to_string())?;
                if !out.status.success() {
                    return Err(format!("{args:?} exited with {:?}", out.status.code()));
                }
                Ok(out.stdout)
            })
            .collect()
    };
    let first = run_all()?;
    let second = run_all()?;
    let identical = first.iter().zip(&second).filter(|(a, b)| a == b).count();
    let bytes: usize = first.iter().map(Vec::len).sum();
    Ok(outcome(
        identical == suite.len(),
        format!("{identical}/{} reports byte-identical ({bytes} bytes per run)", suite.len()),
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Result<Outcome, String>); 9] = [
        ("degree of O(d) on the projective line", criterion_1),
        ("residue theorem for z d/dz on the projective line", criterion_2),
        ("Bott difference identity", criterion_3),
        ("Stokes on random triangles", criterion_4),
        ("Cech-de Rham identities and honeycomb integration", criterion_5),
        ("Bochner-Martinelli indices", criterion_6),
        ("Camacho-Sad residues", criterion_7),
        ("cusp obstruction to extendability", criterion_8),
        ("deterministic reports", criterion_9),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (status, detail) = match check() {
            Ok(o) => (if o.pass { "PASS" } else { "FAIL" }, o.detail),
            Err(e) => ("FAIL", format!("error: {e}")),
        };
        if status == "FAIL" {
            failures += 1;
        }
        println!("criterion {} {status}  {name} [{:.1}s]: {detail}", i + 1, start.elapsed().as_secs_f64());
    }
    if failures == 0 {
        println!("acceptance: all 9 criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failures} of 9 criteria fail");
        ExitCode::FAILURE
    }
}
