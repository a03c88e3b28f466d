//! Randomised property suites: Stokes on triangles, the Bott difference
//! identity, and the Čech–de Rham identities on a planar covering.
//!
//! Every suite draws its inputs from a seeded generator, so a fixed seed
//! reproduces the same cases and the same numbers.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bundles::FormMatrix;
use crate::cechderham::{max_difference, CechCochain, ChartForms};
use crate::chernweil::{bott_difference, chern_form};
use crate::fields::{Expr, Slot};
use crate::forms::{ChartId, CompiledForm, Covector, Form, Tangent};
use crate::geometry::{build_partition_of_unity, honeycomb_from_marks, Atlas, BumpProfile, Chart, CoverDisk, Covering, PartitionOfUnity, Region};
use crate::mesh::clip::{clip_simplex, PolarCell, Radius, Side};
use crate::mesh::{stokes_check, Chain, Simplex};
use crate::{seeded_rng, Error};

fn c(x: f64, y: f64) -> Complex64 {
    Complex64::new(x, y)
}

/// A small nonzero rational, possibly with an imaginary part.
fn random_coefficient(rng: &mut ChaCha8Rng) -> Expr {
    let part = |rng: &mut ChaCha8Rng| {
        let p = rng.gen_range(1..=4) * if rng.gen_bool(0.5) { 1 } else { -1 };
        Expr::ratio(p, rng.gen_range(1..=3))
    };
    let re = part(rng);
    if rng.gen_bool(0.5) {
        &re + &(&Expr::imag_unit() * &part(rng))
    } else {
        re
    }
}

/// Random polynomial in `z_i, z̄_i` of total degree at most `max_degree`.
pub fn random_polynomial(rng: &mut ChaCha8Rng, dim: usize, max_degree: u32) -> Expr {
    let mut exps: Vec<Vec<u32>> = vec![vec![]];
    for _ in 0..2 * dim {
        exps = exps
            .into_iter()
            .flat_map(|e| {
                let used: u32 = e.iter().sum();
                (0..=max_degree - used).map(move |k| {
                    let mut e = e.clone();
                    e.push(k);
                    e
                })
            })
            .collect();
    }
    let mut terms = Vec::new();
    for e in &exps {
        if !rng.gen_bool(0.5) {
            continue;
        }
        let mut factors = vec![random_coefficient(rng)];
        for i in 0..dim {
            factors.push(Expr::var(i).powi(e[2 * i] as i64));
            factors.push(Expr::conj_var(i).powi(e[2 * i + 1] as i64));
        }
        terms.push(Expr::product(factors));
    }
    if terms.is_empty() {
        terms.push(random_coefficient(rng));
    }
    Expr::sum(terms)
}

/// Random `k`-form with polynomial coefficients, `k ≤ 2`, on a chart of dimension `dim`.
pub fn random_form(rng: &mut ChaCha8Rng, chart: ChartId, dim: usize, degree: usize, max_degree: u32) -> Form {
    let covectors: Vec<Covector> = (0..dim).flat_map(|i| [Covector::Dz(i), Covector::Dzbar(i)]).collect();
    let mut out = Form::zero(chart, dim, degree);
    let mut pick = |out: &mut Form, covs: &[Covector]| {
        let f = Form::monomial(chart, dim, random_polynomial(rng, dim, max_degree), covs);
        *out = out.try_add(&f).expect("same chart and degree");
    };
    match degree {
        0 => pick(&mut out, &[]),
        1 => {
            for cv in &covectors {
                pick(&mut out, &[*cv]);
            }
        }
        2 => {
            for (i, a) in covectors.iter().enumerate() {
                for b in &covectors[i + 1..] {
                    pick(&mut out, &[*a, *b]);
                }
            }
        }
        _ => panic!("random forms are generated in degree ≤ 2"),
    }
    out
}

/// Largest value of `f` on `k`-tuples of real coordinate directions at `z`.
pub fn coordinate_norm(f: &CompiledForm, z: &[Complex64], scratch: &mut Vec<Slot>) -> Result<f64, Error> {
    let n = f.dim();
    let basis: Vec<Tangent> = (0..2 * n)
        .map(|j| {
            let mut v = vec![c(0.0, 0.0); n];
            v[j / 2] = if j % 2 == 0 { c(1.0, 0.0) } else { c(0.0, 1.0) };
            Tangent::real(&v)
        })
        .collect();
    let k = f.degree();
    let mut worst: f64 = 0.0;
    let mut idx: Vec<usize> = (0..k).collect();
    if k > 2 * n {
        return Ok(0.0);
    }
    loop {
        let vs: Vec<Tangent> = idx.iter().map(|&i| basis[i].clone()).collect();
        worst = worst.max(f.evaluate(z, &[], &vs, scratch)?.norm());
        // next k-subset in lexicographic order
        let mut i = k;
        loop {
            if i == 0 {
                return Ok(worst);
            }
            i -= 1;
            if idx[i] < 2 * n - k + i {
                idx[i] += 1;
                for j in i + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
        if k == 0 {
            return Ok(worst);
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StokesCase {
    pub trial: usize,
    pub triangle: [[f64; 2]; 3],
    pub interior: [f64; 2],
    pub boundary: [f64; 2],
    pub difference: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct StokesSuite {
    pub trials: usize,
    pub tol: f64,
    pub passed: usize,
    pub worst: f64,
    pub cases: Vec<StokesCase>,
    pub pass: bool,
}

/// `∫_Δ dω = ∫_{∂Δ} ω` for random cubic 1-forms over random plane triangles.
pub fn stokes_suite(trials: usize, seed: u64, tol: f64) -> Result<StokesSuite, Error> {
    let mut rng = seeded_rng(seed);
    let mut cases = Vec::with_capacity(trials);
    for trial in 0..trials {
        let tri = loop {
            let p: Vec<Complex64> = (0..3).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let area = ((p[1] - p[0]).conj() * (p[2] - p[0])).im / 2.0;
            if area.abs() > 0.05 {
                break p;
            }
        };
        let omega = random_form(&mut rng, 0, 1, 1, 3);
        let chain = Chain::from_simplices([Simplex::planar(0, &tri)]);
        let r = stokes_check(&omega, &chain, tol)?;
        cases.push(StokesCase {
            trial,
            triangle: [[tri[0].re, tri[0].im], [tri[1].re, tri[1].im], [tri[2].re, tri[2].im]],
            interior: [r.interior.value.re, r.interior.value.im],
            boundary: [r.boundary.value.re, r.boundary.value.im],
            difference: r.difference,
            pass: r.pass,
        });
    }
    let passed = cases.iter().filter(|c| c.pass).count();
    let worst = cases.iter().map(|c| c.difference).fold(0.0, f64::max);
    Ok(StokesSuite {
        trials,
        tol,
        passed,
        worst,
        pass: passed == trials,
        cases,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct BottCase {
    pub pair: usize,
    pub rank: usize,
    pub q: usize,
    /// `max ‖d bott(∇₀,∇₁) − (c(∇₁) − c(∇₀))‖` over the sample points.
    pub identity_residual: f64,
    /// Whether `bott(∇₁,∇₀) = −bott(∇₀,∇₁)` held bit for bit at every sample.
    pub antisymmetric: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct BottSuite {
    pub pairs: usize,
    pub points: usize,
    pub tol: f64,
    pub worst: f64,
    pub cases: Vec<BottCase>,
    pub pass: bool,
}

/// Random connection matrix of rank `rank` on a two-dimensional chart.
fn random_connection(rng: &mut ChaCha8Rng, rank: usize) -> Result<FormMatrix, Error> {
    let rows = (0..rank)
        .map(|_| (0..rank).map(|_| random_form(rng, 0, 2, 1, 1)).collect())
        .collect();
    FormMatrix::from_rows(rows)
}

/// The difference identity and antisymmetry of Bott forms on random pairs of
/// connections of rank one and two over a two-dimensional chart.
pub fn bott_suite(pairs: usize, points: usize, seed: u64, tol: f64) -> Result<BottSuite, Error> {
    let mut rng = seeded_rng(seed);
    let mut cases = Vec::new();
    for pair in 0..pairs {
        let rank = 1 + pair % 2;
        let t0 = random_connection(&mut rng, rank)?;
        let t1 = random_connection(&mut rng, rank)?;
        let samples: Vec<Vec<Complex64>> = (0..points)
            .map(|_| (0..2).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect())
            .collect();
        let probe: Vec<Tangent> = (0..2 * rank - 1)
            .map(|_| Tangent::real(&[c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)), c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))]))
            .collect();
        for q in 1..=rank {
            let b = bott_difference(&t0, &t1, q)?;
            let back = b.swapped().compile();
            let defect = b.form().d().try_sub(&chern_form(&t1, q)?.try_sub(&chern_form(&t0, q)?)?)?.compile();
            let b = b.compile();
            let scratch = &mut Vec::new();
            let mut residual: f64 = 0.0;
            let mut antisymmetric = true;
            for z in &samples {
                residual = residual.max(coordinate_norm(&defect, z, scratch)?);
                let v = &probe[..2 * q - 1];
                antisymmetric &= back.evaluate(z, v, scratch)? == -b.evaluate(z, v, scratch)?;
            }
            cases.push(BottCase {
                pair,
                rank,
                q,
                identity_residual: residual,
                antisymmetric,
                pass: residual < tol && antisymmetric,
            });
        }
    }
    let worst = cases.iter().map(|c| c.identity_residual).fold(0.0, f64::max);
    Ok(BottSuite {
        pairs,
        points,
        tol,
        worst,
        pass: cases.iter().all(|c| c.pass),
        cases,
    })
}

/// Centre of the disk in the planar Čech setup.
pub const PLANAR_DISK_CENTER: Complex64 = Complex64::new(0.1, 0.0);

/// The plane with one covering disk at `0.1` (`r_in = 0.3`, `r_out = 1.2`)
/// forming `V₁`, and the partition of unity with the given profile.
pub fn planar_cech_setup(profile: BumpProfile) -> Result<(Atlas, Covering, PartitionOfUnity), Error> {
    let atlas = Atlas::new(vec![Chart::new(0, vec![Region::Plane])?])?;
    let cov = Covering::new(
        &atlas,
        vec![CoverDisk { chart: 0, center: vec![PLANAR_DISK_CENTER], r_in: 0.3, r_out: 1.2 }],
        1,
        vec![],
    )?;
    let pou = build_partition_of_unity(&atlas, &cov, profile)?;
    Ok((atlas, cov, pou))
}

/// The square `[−2,2]²` as four triangles fanned from the origin.
pub fn planar_square() -> Chain {
    let v = [c(-2.0, -2.0), c(2.0, -2.0), c(2.0, 2.0), c(-2.0, 2.0)];
    Chain::from_simplices((0..4).map(|k| Simplex::planar(0, &[c(0.0, 0.0), v[k], v[(k + 1) % 4]])))
}

/// `∫ ω` over the square for a form that may only be piecewise smooth across
/// the two covering circles: the square is cut along `|z − 0.1| = 1.2` and
/// the inside is integrated as a disk plus an annulus, so every cell sees a
/// smooth integrand.
fn square_integral_split_at_covering(chart_forms: &ChartForms, tol: f64) -> Result<Complex64, Error> {
    let form = chart_forms
        .get(&0)
        .ok_or_else(|| Error::Missing("form on chart 0".into()))?
        .compile();
    let (r_in, r_out) = (0.3, 1.2);
    let mut total = Complex64::new(0.0, 0.0);
    for (w, s) in &planar_square().terms {
        for (side, piece) in clip_simplex(s, PLANAR_DISK_CENTER, r_out)? {
            if side == Side::Outside {
                total += piece.integrate(&form, tol)?.value * *w as f64;
            }
        }
    }
    let disk = PolarCell::disk(0, PLANAR_DISK_CENTER, r_in);
    let annulus = PolarCell { lo: Radius::Circle(r_in), hi: Radius::Circle(r_out), ..disk.clone() };
    total += disk.integrate(&form, tol)?.value + annulus.integrate(&form, tol)?.value;
    Ok(total)
}

fn random_cochain(rng: &mut ChaCha8Rng, cov: &Covering, degree: usize) -> Result<CechCochain, Error> {
    let outer: ChartForms = [(0, random_form(rng, 0, 1, degree, 2))].into_iter().collect();
    let disk = random_form(rng, 0, 1, degree, 2);
    let overlap = if degree == 0 {
        Form::zero(0, 1, 0)
    } else {
        random_form(rng, 0, 1, degree - 1, 2)
    };
    CechCochain::new(degree, cov, outer, vec![disk], vec![overlap])
}

fn sample_points(rng: &mut ChaCha8Rng, count: usize) -> BTreeMap<ChartId, Vec<Vec<Complex64>>> {
    let pts = (0..count)
        .map(|_| vec![c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))])
        .collect();
    [(0, pts)].into_iter().collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct CechCheck {
    pub name: String,
    pub cases: usize,
    pub worst: f64,
    pub tol: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct HoneycombCase {
    pub cochain: usize,
    /// `∫ φ(c)` with the quadratic and the quartic profile.
    pub direct: Vec<[f64; 2]>,
    /// Honeycomb integrals for radii 0.5, 0.7 and 0.9.
    pub honeycomb: Vec<[f64; 2]>,
    pub spread: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CechSuite {
    pub checks: Vec<CechCheck>,
    pub honeycomb_cases: Vec<HoneycombCase>,
    pub pass: bool,
}

pub const HONEYCOMB_RADII: [f64; 3] = [0.5, 0.7, 0.9];

/// `D∘D = 0`, `φ∘P = id`, and honeycomb integrals of closed cochains against
/// `∫ φ(c)` across honeycomb radii and bump profiles.
pub fn cech_suite(seed: u64, tol: f64) -> Result<CechSuite, Error> {
    let mut rng = seeded_rng(seed);
    let (atlas, cov, pou) = planar_cech_setup(BumpProfile::Quadratic)?;
    let (_, _, pou4) = planar_cech_setup(BumpProfile::Quartic)?;

    let mut dd_worst: f64 = 0.0;
    for k in 0..30 {
        let cch = random_cochain(&mut rng, &cov, k % 2)?;
        let pts = sample_points(&mut rng, 20);
        dd_worst = dd_worst.max(cch.apply_d()?.apply_d()?.max_sampled(&pts)?);
    }

    let mut pr_worst: f64 = 0.0;
    for k in 0..10 {
        let w: ChartForms = [(0, random_form(&mut rng, 0, 1, k % 3, 2))].into_iter().collect();
        let back = CechCochain::restrict_global(&w, &cov)?.collate(&atlas, &cov, &pou)?;
        pr_worst = pr_worst.max(max_difference(&w, &back, &sample_points(&mut rng, 50))?);
    }

    let chain = planar_square();
    let quad_tol = tol * 0.1;
    let honeycombs = HONEYCOMB_RADII
        .iter()
        .map(|&r| honeycomb_from_marks(&atlas, &cov, &[(0, PLANAR_DISK_CENTER)], r))
        .collect::<Result<Vec<_>, _>>()?;
    let mut cases = Vec::new();
    let mut closed_worst: f64 = 0.0;
    let mut agree_worst: f64 = 0.0;
    for k in 0..10 {
        // D(α) + P(ω) is closed for any 1-cochain α and global 2-form ω
        let alpha = random_cochain(&mut rng, &cov, 1)?.apply_d()?;
        let omega: ChartForms = [(0, random_form(&mut rng, 0, 1, 2, 2))].into_iter().collect();
        let p = CechCochain::restrict_global(&omega, &cov)?;
        let add = |a: &Form, b: &Form| a.try_add(b);
        let cch = CechCochain::new(
            2,
            &cov,
            [(0, add(&alpha.outer[&0], &p.outer[&0])?)].into_iter().collect(),
            vec![add(&alpha.disks[0], &p.disks[0])?],
            vec![add(&alpha.overlap[0], &p.overlap[0])?],
        )?;
        closed_worst = closed_worst.max(cch.apply_d()?.max_sampled(&sample_points(&mut rng, 20))?);
        let direct = [&pou, &pou4]
            .iter()
            .map(|p| square_integral_split_at_covering(&cch.collate(&atlas, &cov, p)?, quad_tol))
            .collect::<Result<Vec<_>, _>>()?;
        let hc = honeycombs
            .iter()
            .map(|h| cch.honeycomb_integrate(&chain, h, quad_tol).map(|i| i.value))
            .collect::<Result<Vec<_>, _>>()?;
        let all: Vec<Complex64> = direct.iter().chain(&hc).copied().collect();
        let spread = all
            .iter()
            .flat_map(|a| all.iter().map(move |b| (a - b).norm()))
            .fold(0.0, f64::max);
        agree_worst = agree_worst.max(spread);
        let pair = |z: &Complex64| [z.re, z.im];
        cases.push(HoneycombCase {
            cochain: k,
            direct: direct.iter().map(pair).collect(),
            honeycomb: hc.iter().map(pair).collect(),
            spread,
        });
    }

    let check = |name: &str, cases: usize, worst: f64, tol: f64| CechCheck {
        name: name.into(),
        cases,
        worst,
        tol,
        pass: worst < tol,
    };
    let checks = vec![
        check("D∘D = 0", 30, dd_worst, tol),
        check("φ∘P = id", 10 * 50, pr_worst, tol),
        check("closed cochains are D-closed", 10, closed_worst, tol),
        check("honeycomb = ∫φ(c) across radii and profiles", 10, agree_worst, 2.0 * tol),
    ];
    Ok(CechSuite {
        pass: checks.iter().all(|c| c.pass),
        checks,
        honeycomb_cases: cases,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_pass_with_small_sizes() {
        let s = stokes_suite(5, 3, 1e-8).unwrap();
        assert!(s.pass, "{s:?}");
        let b = bott_suite(2, 5, 3, 1e-7).unwrap();
        assert!(b.pass, "{b:?}");
        assert_eq!(b.cases.len(), 3);
    }

    #[test]
    fn coordinate_norm_sees_every_component() {
        let f = Form::parse("dz1^dzbar2", 0, 2).unwrap().compile();
        assert!(coordinate_norm(&f, &[c(0.0, 0.0), c(0.0, 0.0)], &mut Vec::new()).unwrap() > 0.9);
        let g = Form::parse("z1", 0, 1).unwrap().compile();
        assert_eq!(coordinate_norm(&g, &[c(0.5, 0.0)], &mut Vec::new()).unwrap(), 0.5);
    }

    #[test]
    fn split_integral_matches_plain_quadrature() {
        let (atlas, cov, pou) = planar_cech_setup(BumpProfile::Quartic).unwrap();
        let mut rng = seeded_rng(5);
        let w0 = random_form(&mut rng, 0, 1, 2, 1);
        let w01 = random_form(&mut rng, 0, 1, 1, 1);
        let w1 = w0.try_add(&w01.d()).unwrap();
        let cch = CechCochain::new(2, &cov, [(0, w0)].into_iter().collect(), vec![w1], vec![w01]).unwrap();
        let phi = cch.collate(&atlas, &cov, &pou).unwrap();
        let split = square_integral_split_at_covering(&phi, 1e-11).unwrap();
        let plain = crate::cechderham::integrate_chart_forms(&planar_square(), &phi, 1e-9).unwrap().value;
        assert!((split - plain).norm() < 1e-8, "{split} vs {plain}");
    }

    #[test]
    fn random_forms_have_requested_degree() {
        let mut rng = seeded_rng(1);
        for k in 0..3 {
            let f = random_form(&mut rng, 0, 1, k, 2);
            assert_eq!(f.degree(), k);
        }
    }
}
