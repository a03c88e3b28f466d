//! Localized characteristic numbers: Bochner–Martinelli indices of maps to
//! `ℂ^m`, Camacho–Sad residues of foliations along an invariant curve, and
//! the comparison of point residues with the global Chern number.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::bundles::{frame_connection, glue_by_partition, Bundle, Connection, ExprMatrix, FormMatrix, SectionTuple};
use crate::chernweil::{bott_difference, chern_form, chern_forms};
use crate::fields::{Expr, Substitution};
use crate::forms::{ChartId, ChartMap, Covector, Form};
use crate::geometry::{build_partition_of_unity, honeycomb_from_marks, Atlas, BumpProfile, CoverDisk, Covering};
use crate::mesh::clip::{ArcCell, PolarCell};
use crate::mesh::{Chain, Integral, Triangulation};
use crate::Error;

/// Largest distance from an integer accepted as an index.
pub const INTEGER_TOLERANCE: f64 = 1e-3;

/// `β_m = (m−1)!/(2πi)^m · (−1)^{m(m−1)/2}/‖z‖^{2m} · Σ_h conj(Θ_h)∧Θ` on
/// chart 0 of `ℂ^m`, where `Θ = dz₁∧…∧dz_m` and
/// `Θ_h = (−1)^h z_h dz₁∧…∧dẑ_h∧…∧dz_m`.
///
/// For `m = 1` this is `−dz/(2πi z)`: integrated over a counterclockwise
/// circle around the origin it gives `−1`.
pub fn bochner_martinelli_kernel(m: usize) -> Result<Form, Error> {
    if m == 0 {
        return Err(Error::Argument("the Bochner–Martinelli kernel needs m ≥ 1".into()));
    }
    let factorial: f64 = (1..m).map(|k| k as f64).product();
    let sign = if (m * (m - 1) / 2) % 2 == 0 { 1.0 } else { -1.0 };
    let two_pi_i = Complex64::new(0.0, 2.0 * PI);
    let constant = Complex64::new(factorial * sign, 0.0) / two_pi_i.powu(m as u32);
    let norm2 = Expr::sum((0..m).map(|i| &Expr::var(i) * &Expr::conj_var(i)));
    let scale = &Expr::float(constant) * &norm2.powi(-(m as i64));
    let mut beta = Form::zero(0, m, 2 * m - 1);
    for h in 0..m {
        // h is 0-based, so (−1)^h in 1-based indexing is (−1)^{h+1}
        let coeff = if h % 2 == 0 { -Expr::conj_var(h) } else { Expr::conj_var(h) };
        let covs: Vec<Covector> = (0..m)
            .filter(|j| *j != h)
            .map(Covector::Dzbar)
            .chain((0..m).map(Covector::Dz))
            .collect();
        beta = beta.try_add(&Form::monomial(0, m, &coeff * &scale, &covs))?;
    }
    Ok(beta)
}

/// Result of a Bochner–Martinelli index computation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BmIndex {
    pub index: i64,
    /// The oriented integral whose nearest integer is `index`.
    pub integral: Integral,
    pub residual: f64,
}

/// Index of a map `f: ℂ^m → ℂ^m` at the zeros enclosed by `sphere`.
///
/// The sphere chain is oriented as the boundary of the ball. Integrating
/// `f*β_m` over it produces the negative of the index (see the `m = 1`
/// remark on [`bochner_martinelli_kernel`]), so the index is read off the
/// oppositely oriented sphere.
pub fn bm_index(f: &[Expr], sphere: &Chain, tol: f64) -> Result<BmIndex, Error> {
    let m = f.len();
    let Some((_, first)) = sphere.terms.first() else {
        return Err(Error::Argument("empty sphere chain".into()));
    };
    if sphere.dim() != Some(2 * m - 1) || first.target_dim != m {
        return Err(Error::Dimension(format!("a map to ℂ^{m} needs a {}-dimensional sphere in ℂ^{m}", 2 * m - 1)));
    }
    if let Some(bad) = f.iter().find(|e| !e.is_structurally_holomorphic(m)) {
        return Err(Error::NotHolomorphic(format!("map component {bad}")));
    }
    let kernel = bochner_martinelli_kernel(m)?;
    let pulled = kernel.pullback(&ChartMap::new(first.chart, m, 0, f.to_vec()))?;
    let integral = sphere
        .integrate(&pulled, tol)
        .map_err(|e| match e {
            Error::Pole(msg) => Error::Pole(format!("the map vanishes on the sphere chain ({msg})")),
            other => other,
        })?
        .scale(-1.0);
    let v = integral.value;
    let index = v.re.round();
    let residual = (v - Complex64::new(index, 0.0)).norm();
    if residual > INTEGER_TOLERANCE {
        return Err(Error::NotInteger(format!("Bochner–Martinelli integral {v} is {residual:.3e} away from {index}")));
    }
    Ok(BmIndex {
        index: index as i64,
        integral,
        residual,
    })
}

/// Germ of the foliation `a(h,y)·h ∂/∂h + b(h,y) ∂/∂y` with invariant
/// curve `{h = 0}`; variables are `z1 = h`, `z2 = y`.
#[derive(Clone, Debug)]
pub struct FoliationGerm {
    pub a: Expr,
    pub b: Expr,
}

impl FoliationGerm {
    pub fn new(a: Expr, b: Expr) -> Result<FoliationGerm, Error> {
        for (name, e) in [("a", &a), ("b", &b)] {
            if !e.is_structurally_holomorphic(2) || e.var_extent() > 2 {
                return Err(Error::NotHolomorphic(format!("foliation coefficient {name} = {e}")));
            }
        }
        let g = FoliationGerm { a, b };
        if g.restricted().1.is_zero() {
            return Err(Error::Argument("b(0, y) vanishes identically, so {h = 0} is not a leaf closure".into()));
        }
        Ok(g)
    }

    /// `(a(0,y), b(0,y))` as fields in the single variable `y = z1`.
    pub fn restricted(&self) -> (Expr, Expr) {
        let sub = Substitution::vars(vec![Expr::zero(), Expr::var(0)]);
        (self.a.substitute(&sub), self.b.substitute(&sub))
    }

    /// `a(0,y)/b(0,y) dy` on a one-dimensional chart.
    pub fn residue_form(&self, chart: ChartId) -> Form {
        let (a, b) = self.restricted();
        Form::dz(chart, 1, 0).scale(&(&a * &b.recip()))
    }
}

/// `(1/2πi) ∮_{link} a(0,y)/b(0,y) dy`.
///
/// The link is any closed 1-chain in the `y`-line, so curves supplied by
/// the caller work as well as circles from `link_of_point`.
pub fn camacho_sad(germ: &FoliationGerm, link: &Chain, tol: f64) -> Result<Integral, Error> {
    let Some((_, first)) = link.terms.first() else {
        return Err(Error::Argument("empty link".into()));
    };
    if link.dim() != Some(1) || first.target_dim != 1 {
        return Err(Error::Dimension("the link must be a 1-chain in the y-line".into()));
    }
    let form = germ.residue_form(first.chart);
    let r = link.integrate(&form, tol * 2.0 * PI).map_err(|e| match e {
        Error::Pole(msg) => Error::Pole(format!("a/b has a pole on the link ({msg})")),
        other => other,
    })?;
    let k = 1.0 / (2.0 * PI);
    Ok(Integral {
        value: r.value * Complex64::new(0.0, -k),
        error: r.error * k,
        cells: r.cells,
    })
}

/// Everything needed to compare point residues with the global integral.
#[derive(Clone, Debug)]
pub struct ResidueProblem {
    pub atlas: Atlas,
    pub bundle: Bundle,
    pub sections: SectionTuple,
    pub triangulation: Triangulation,
    pub options: ResidueOptions,
}

#[derive(Clone, Debug)]
pub struct ResidueOptions {
    /// Radius of the disks where the partition of unity is constant.
    pub r_in: f64,
    /// Radius of the covering disks.
    pub r_out: f64,
    /// Radius of the singular honeycomb cells.
    pub honeycomb_radius: f64,
    pub profile: BumpProfile,
    /// Disk centres; the located singular points are used when absent.
    pub marks: Option<Vec<(ChartId, Complex64)>>,
    /// Grid size for the search of singular points.
    pub search_samples: usize,
    /// Quadrature tolerance.
    pub quad_tol: f64,
}

impl Default for ResidueOptions {
    fn default() -> Self {
        ResidueOptions {
            r_in: 0.2,
            r_out: 0.6,
            honeycomb_radius: 0.4,
            profile: BumpProfile::Quadratic,
            marks: None,
            search_samples: 12,
            quad_tol: 1e-9,
        }
    }
}

/// Residue at one singular cell.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalResidue {
    pub chart: ChartId,
    pub center: Complex64,
    /// Singular points of the sections inside this cell.
    pub points: Vec<Complex64>,
    pub value: Integral,
    pub nearest: i64,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResidueReport {
    pub q: usize,
    pub locals: Vec<LocalResidue>,
    pub global: Integral,
    pub discrepancy: f64,
    pub integral_locals: bool,
    pub pass: bool,
}

impl ResidueReport {
    pub fn local_sum(&self) -> Complex64 {
        self.locals.iter().map(|l| l.value.value).sum()
    }
}

/// Located singular points, each on the first chart (by id) that contains it.
pub fn located_singular_points(atlas: &Atlas, sections: &SectionTuple, samples: usize) -> Result<Vec<(ChartId, Complex64)>, Error> {
    let mut found: Vec<(ChartId, Complex64)> = Vec::new();
    for chart in sections.per_chart.keys() {
        for p in crate::bundles::singular_locus(atlas, sections, *chart, samples)? {
            let seen = found.iter().any(|(c, q)| {
                atlas
                    .map_point(*chart, *c, &p)
                    .is_some_and(|v| (v[0] - q).norm() < 1e-6 * (1.0 + q.norm()))
            });
            if !seen {
                found.push((*chart, p[0]));
            }
        }
    }
    Ok(found)
}

/// Compares `Σ_ν (∫_{R_ν} c^q(∇₁) − ∮_{∂R_ν} c^q(∇₀,∇₁))` with
/// `∫_X c^q(∇)` for a glued connection `∇`.
///
/// `∇₀` makes the sections parallel and is used away from the singular
/// points; around point `ν`, `∇₁` is trivial in the frame of the chart
/// hosting the disk. Only top-degree classes on curves are supported, so
/// the sections must form a full frame off their singular points.
pub fn residue_theorem_check(problem: &ResidueProblem, q: usize, tol: f64) -> Result<ResidueReport, Error> {
    let ResidueProblem {
        atlas,
        bundle,
        sections,
        triangulation,
        options,
    } = problem;
    if let Some(c) = atlas.charts.iter().find(|c| c.dim != 1) {
        return Err(Error::Dimension(format!("residue theorem check needs curves; chart {} has dimension {}", c.id, c.dim)));
    }
    let e = bundle.rank;
    if sections.rank != e || q != e + 1 - sections.r || q != 1 {
        return Err(Error::Argument(format!(
            "on a curve the top class is q = 1, which needs a full frame of {e} sections; got r = {} and q = {q}",
            sections.r
        )));
    }
    if sections.per_chart.is_empty() {
        return Err(Error::Missing("sections".into()));
    }
    for s in sections.per_chart.values().flatten().flatten() {
        if !s.is_structurally_holomorphic(1) {
            return Err(Error::NotHolomorphic(format!("section component {s}")));
        }
    }
    triangulation
        .check_coherent()
        .map_err(|e| Error::Geometry(format!("the scene is not compact: {e}")))?;

    let points = located_singular_points(atlas, sections, options.search_samples)?;
    let marks = options.marks.clone().unwrap_or_else(|| points.clone());
    let radius = options.honeycomb_radius;
    // every singular point must sit well inside exactly one cell
    let mut members: Vec<Vec<Complex64>> = vec![Vec::new(); marks.len()];
    for (pc, p) in &points {
        let mut host = None;
        for (nu, (mc, m)) in marks.iter().enumerate() {
            let Some(v) = (if pc == mc { Some(vec![*p]) } else { atlas.map_point(*pc, *mc, &[*p]) }) else { continue };
            let d = (v[0] - m).norm();
            if d <= radius * 1.1 && d >= radius * 0.9 {
                return Err(Error::Geometry(format!("singular point {p} on chart {pc} is within 0.1·radius of a honeycomb interface")));
            }
            if d < radius * 0.9 {
                host = Some(nu);
            }
        }
        match host {
            Some(nu) => members[nu].push(*p),
            None => return Err(Error::Geometry(format!("singular point {p} on chart {pc} lies outside every honeycomb disk"))),
        }
    }

    let disks: Vec<CoverDisk> = marks
        .iter()
        .map(|(c, m)| CoverDisk {
            chart: *c,
            center: vec![*m],
            r_in: options.r_in,
            r_out: options.r_out,
        })
        .collect();
    let z = points.iter().map(|(c, p)| (*c, vec![*p])).collect();
    let cov = Covering::new(atlas, disks, 1, z)?;
    let pou = build_partition_of_unity(atlas, &cov, options.profile)?;
    let honeycomb = honeycomb_from_marks(atlas, &cov, &marks, radius)?;

    // ∇₀ on every chart: frame-parallel where sections are given, transported elsewhere
    let mut theta0: BTreeMap<ChartId, FormMatrix> = BTreeMap::new();
    for (c, s) in &sections.per_chart {
        theta0.insert(*c, frame_connection(&ExprMatrix::from_columns(s)?, *c, 1));
    }
    let (base, base_theta) = theta0.iter().next().map(|(c, t)| (*c, t.clone())).expect("nonempty");
    for chart in &atlas.charts {
        if !theta0.contains_key(&chart.id) && atlas.transition(base, chart.id).is_some() {
            theta0.insert(chart.id, bundle.transport(atlas, &base_theta, chart.id)?);
        }
    }

    let qt = options.quad_tol;
    let mut locals = Vec::new();
    for (nu, d) in honeycomb.disks.iter().enumerate() {
        let t0 = theta0
            .get(&d.chart)
            .ok_or_else(|| Error::Missing(format!("connection on chart {}", d.chart)))?;
        let t1 = FormMatrix::zero(d.chart, 1, e, 1);
        let inside = PolarCell::disk(d.chart, d.center, d.radius).integrate(&chern_form(&t1, q)?.compile(), qt)?;
        let bott = bott_difference(t0, &t1, q)?.into_form();
        let rim = ArcCell::circle(d.chart, d.center, d.radius).integrate(&bott.compile(), qt)?;
        let value = inside.add(rim.scale(-1.0));
        let nearest = value.value.re.round();
        locals.push(LocalResidue {
            chart: d.chart,
            center: d.center,
            points: members[nu].clone(),
            residual: (value.value - Complex64::new(nearest, 0.0)).norm(),
            nearest: nearest as i64,
            value,
        });
    }

    // glued connection ρ₀∇₀ + Σ_ν χ_ν∇₁,ν on each chart
    let nabla0 = Connection::new(e, theta0)?;
    let flat: Vec<Connection> = honeycomb
        .disks
        .iter()
        .map(|d| Connection::new(e, [(d.chart, FormMatrix::zero(d.chart, 1, e, 1))].into_iter().collect()))
        .collect::<Result<_, _>>()?;
    let glued = glue_by_partition(atlas, bundle, &cov, &pou, &nabla0, &flat)?;
    let chern = chern_forms(&glued, q)?;
    let global = triangulation.integrate_fundamental_class(&|c| chern.get(&c).cloned(), qt)?;

    let sum: Complex64 = locals.iter().map(|l| l.value.value).sum();
    let discrepancy = (global.value - sum).norm();
    let integral_locals = locals.iter().all(|l| l.residual < INTEGER_TOLERANCE);
    Ok(ResidueReport {
        q,
        pass: discrepancy < tol && integral_locals,
        locals,
        global,
        discrepancy,
        integral_locals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::parse_expr;
    use crate::forms::Tangent;
    use crate::geometry::{link_of_point, sphere_chain};
    use crate::models::{line_bundle, projective_line, projective_line_triangulation, tangent_bundle};

    fn c(x: f64, y: f64) -> Complex64 {
        Complex64::new(x, y)
    }

    fn ex(s: &str) -> Expr {
        parse_expr(s).unwrap()
    }

    #[test]
    fn kernel_in_one_variable() {
        let b = bochner_martinelli_kernel(1).unwrap();
        let z = c(0.3, -0.7);
        let got = b.evaluate(&[z], &[], &[Tangent::d_dz(0, 1)]).unwrap();
        let want = -1.0 / (Complex64::new(0.0, 2.0 * PI) * z);
        assert!((got - want).norm() < 1e-14);
        assert!(matches!(b.evaluate(&[c(0.0, 0.0)], &[], &[Tangent::d_dz(0, 1)]), Err(Error::Pole(_))));
        assert!(bochner_martinelli_kernel(0).is_err());
    }

    #[test]
    fn kernel_is_closed() {
        let db = bochner_martinelli_kernel(2).unwrap().d();
        let mut rng = crate::seeded_rng(3);
        use rand::Rng;
        for _ in 0..20 {
            let p: Vec<Complex64> = (0..2).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let vs: Vec<Tangent> = (0..4)
                .map(|j| {
                    let mut v = vec![c(0.0, 0.0); 2];
                    v[j / 2] = if j % 2 == 0 { c(1.0, 0.0) } else { c(0.0, 1.0) };
                    Tangent::real(&v)
                })
                .collect();
            assert!(db.evaluate(&p, &[], &vs).unwrap().norm() < 1e-12);
        }
    }

    #[test]
    fn winding_numbers() {
        let circle = link_of_point(c(0.0, 0.0), 1.0, 16).unwrap();
        for k in 1..=3 {
            let r = bm_index(&[ex(&format!("z1^{k}"))], &circle, 1e-10).unwrap();
            assert_eq!(r.index, k);
        }
        assert_eq!(bm_index(&[ex("1 + 0*z1")], &circle, 1e-10).unwrap().index, 0);
        // multiplicativity: index of f·g is the sum of indices
        let f = ex("z1 - 0.2");
        let g = ex("(z1 + 0.3*i)^2");
        let fg = bm_index(&[&f * &g], &circle, 1e-10).unwrap().index;
        assert_eq!(fg, bm_index(&[f], &circle, 1e-10).unwrap().index + bm_index(&[g], &circle, 1e-10).unwrap().index);
        // a zero on the circle is reported
        assert!(bm_index(&[ex("z1 - 1")], &circle, 1e-10).is_err());
    }

    #[test]
    fn identity_on_the_three_sphere() {
        let s = sphere_chain(&[c(0.0, 0.0), c(0.0, 0.0)], 1.0, 2).unwrap();
        let r = bm_index(&[ex("z1"), ex("z2")], &s, 1e-7).unwrap();
        assert_eq!(r.index, 1, "{:?}", r.integral);
    }

    #[test]
    fn camacho_sad_examples() {
        let link = link_of_point(c(0.0, 0.0), 0.5, 16).unwrap();
        let g = FoliationGerm::new(ex("3 + 0*z1"), ex("2*z2")).unwrap();
        assert!((camacho_sad(&g, &link, 1e-12).unwrap().value - c(1.5, 0.0)).norm() < 1e-8);
        let g = FoliationGerm::new(ex("1 + 0*z1"), ex("z2*(1 + z2)")).unwrap();
        assert!((camacho_sad(&g, &link, 1e-12).unwrap().value - c(1.0, 0.0)).norm() < 1e-8);
        let g = FoliationGerm::new(ex("z1 + z2^2"), ex("1 + z2")).unwrap();
        assert!(camacho_sad(&g, &link, 1e-12).unwrap().value.norm() < 1e-8);
        assert!(FoliationGerm::new(ex("1 + 0*z1"), ex("z1*z2")).is_err());
        assert!(FoliationGerm::new(ex("conj(z1)"), ex("z2")).is_err());
    }

    fn p1_problem(bundle: Bundle, s0: &str, s1: &str) -> ResidueProblem {
        let atlas = projective_line();
        let sections = SectionTuple::new(1, [(0, vec![vec![ex(s0)]]), (1, vec![vec![ex(s1)]])].into_iter().collect()).unwrap();
        assert!(sections.check_compatibility(&atlas, &bundle, 10, 1).unwrap() < 1e-12);
        ResidueProblem {
            atlas,
            bundle,
            sections,
            triangulation: projective_line_triangulation().unwrap(),
            options: ResidueOptions::default(),
        }
    }

    #[test]
    fn tangent_bundle_of_the_projective_line() {
        let atlas = projective_line();
        let p = p1_problem(tangent_bundle(&atlas).unwrap(), "z1", "-z1");
        let r = residue_theorem_check(&p, 1, 1e-6).unwrap();
        assert_eq!(r.locals.len(), 2);
        for l in &r.locals {
            assert_eq!(l.nearest, 1);
            assert!(l.residual < 1e-6, "{l:?}");
        }
        assert!((r.global.value - c(2.0, 0.0)).norm() < 1e-6, "{:?}", r.global);
        assert!(r.pass);
    }

    #[test]
    fn line_bundles_with_one_or_no_zero() {
        let atlas = projective_line();
        let p = p1_problem(line_bundle(&atlas, 3).unwrap(), "z1^3", "1 + 0*z1");
        let r = residue_theorem_check(&p, 1, 1e-6).unwrap();
        assert_eq!(r.locals.len(), 1);
        assert_eq!(r.locals[0].nearest, 3);
        assert!((r.global.value - c(3.0, 0.0)).norm() < 1e-6);
        let p = p1_problem(line_bundle(&atlas, 0).unwrap(), "1 + 0*z1", "1 + 0*z1");
        let r = residue_theorem_check(&p, 1, 1e-6).unwrap();
        assert!(r.locals.is_empty());
        assert!(r.global.value.norm() < 1e-6);
    }
}
