//! Parametrized simplices, chains and triangulations, and integration of
//! forms over them.

pub mod clip;
pub mod quadrature;

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;

use crate::fields::{DVar, Expr, Slot, Substitution, Tape};
use crate::forms::{ChartId, CompiledForm, Form};
use crate::Error;
pub use quadrature::{adaptive_cube, duffy, GaussLegendre, Integral, DEFAULT_BUDGET, DEFAULT_TOL};

/// Reference domain of a parametrization.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reference {
    /// `{x_j ≥ 0, Σ x_j ≤ 1}`.
    Simplex,
    /// `[0, 1]^k`.
    Cube,
}

/// A smooth map from a reference domain into a chart.
pub trait Parametrization: Send + Sync {
    fn dim(&self) -> usize;
    fn chart(&self) -> ChartId;
    fn reference(&self) -> Reference;
    /// Writes the image point and the `dim()` partial derivatives.
    fn eval(&self, x: &[f64], point: &mut [Complex64], tangents: &mut [Vec<Complex64>]) -> Result<(), Error>;
    /// Dimension of the target chart.
    fn target_dim(&self) -> usize;
}

/// Identifies a vertex for boundary cancellation and incidence checks.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VertexKey {
    Id(usize),
    Coords(ChartId, Vec<(u64, u64)>),
}

impl VertexKey {
    pub fn of_point(chart: ChartId, p: &[Complex64]) -> VertexKey {
        let canon = |x: f64| if x == 0.0 { 0 } else { x.to_bits() };
        VertexKey::Coords(chart, p.iter().map(|c| (canon(c.re), canon(c.im))).collect())
    }
}

/// A curved parametrization given by symbolic components in `t_1..t_k`.
#[derive(Clone, Debug)]
pub struct CurvedMap {
    pub components: Vec<Expr>,
    tape: Arc<Tape>,
    k: usize,
}

impl CurvedMap {
    pub fn new(components: Vec<Expr>, k: usize) -> CurvedMap {
        let mut outs = components.clone();
        for j in 0..k {
            for c in &components {
                outs.push(c.diff(DVar::T(j)));
            }
        }
        CurvedMap {
            tape: Arc::new(Tape::compile(&outs)),
            components,
            k,
        }
    }

    fn eval(&self, x: &[f64], point: &mut [Complex64], tangents: &mut [Vec<Complex64>]) -> Result<(), Error> {
        let n = self.components.len();
        let mut out = vec![Complex64::new(0.0, 0.0); n * (self.k + 1)];
        let mut scratch: Vec<Slot> = Vec::new();
        self.tape.eval_into(&[], x, &mut scratch, &mut out)?;
        point.copy_from_slice(&out[..n]);
        for j in 0..self.k {
            tangents[j].copy_from_slice(&out[n * (j + 1)..n * (j + 2)]);
        }
        Ok(())
    }

    /// Composes with an affine map of parameter space `s ↦ a + Σ s_j b_j`.
    fn compose_affine(&self, base: &[f64], dirs: &[Vec<f64>]) -> CurvedMap {
        let k2 = dirs.len();
        let params: Vec<Expr> = (0..self.k)
            .map(|i| {
                Expr::sum(
                    std::iter::once(Expr::real(base[i]))
                        .chain((0..k2).map(|j| &Expr::param(j) * &Expr::real(dirs[j][i]))),
                )
            })
            .collect();
        let sub = Substitution::params(params);
        CurvedMap::new(self.components.iter().map(|c| c.substitute(&sub)).collect(), k2)
    }
}

#[derive(Clone, Debug)]
pub enum Shape {
    /// Vertices `P_0..P_k` in chart coordinates.
    Affine(Vec<Vec<Complex64>>),
    Curved(CurvedMap),
}

/// An oriented, parametrized `k`-simplex in a chart.
#[derive(Clone, Debug)]
pub struct Simplex {
    pub chart: ChartId,
    pub dim: usize,
    pub target_dim: usize,
    pub shape: Shape,
    /// Orientation relative to the parametrization, `±1`.
    pub sign: i32,
    pub vertices: Vec<VertexKey>,
}

impl Simplex {
    /// Affine simplex with vertices given in order.
    pub fn affine(chart: ChartId, vertices: Vec<Vec<Complex64>>) -> Result<Simplex, Error> {
        if vertices.is_empty() {
            return Err(Error::Dimension("a simplex needs at least one vertex".into()));
        }
        let n = vertices[0].len();
        if vertices.iter().any(|v| v.len() != n) {
            return Err(Error::Dimension("vertices of different dimension".into()));
        }
        let k = vertices.len() - 1;
        if k > 2 * n {
            return Err(Error::Dimension(format!("{k}-simplex in complex dimension {n}")));
        }
        let keys = vertices.iter().map(|v| VertexKey::of_point(chart, v)).collect();
        Ok(Simplex {
            chart,
            dim: k,
            target_dim: n,
            shape: Shape::Affine(vertices),
            sign: 1,
            vertices: keys,
        })
    }

    /// Planar affine simplex from complex vertices.
    pub fn planar(chart: ChartId, vertices: &[Complex64]) -> Simplex {
        Simplex::affine(chart, vertices.iter().map(|v| vec![*v]).collect()).expect("planar simplex")
    }

    /// Curved simplex with components in `t_1..t_k` on the standard simplex.
    pub fn curved(chart: ChartId, k: usize, components: Vec<Expr>, vertices: Vec<VertexKey>) -> Result<Simplex, Error> {
        if vertices.len() != k + 1 {
            return Err(Error::Dimension(format!("{} vertex keys for a {k}-simplex", vertices.len())));
        }
        let n = components.len();
        if components.iter().any(|c| c.var_extent() > 0 || c.param_extent() > k) {
            return Err(Error::Dimension("curved simplex components may only use t1..tk".into()));
        }
        Ok(Simplex {
            chart,
            dim: k,
            target_dim: n,
            shape: Shape::Curved(CurvedMap::new(components, k)),
            sign: 1,
            vertices,
        })
    }

    pub fn with_vertex_ids(mut self, ids: &[usize]) -> Simplex {
        assert_eq!(ids.len(), self.dim + 1);
        self.vertices = ids.iter().map(|i| VertexKey::Id(*i)).collect();
        self
    }

    pub fn with_sign(mut self, sign: i32) -> Simplex {
        self.sign = sign;
        self
    }

    pub fn reversed(&self) -> Simplex {
        let mut s = self.clone();
        s.sign = -s.sign;
        s
    }

    /// Image of a point of the standard simplex.
    pub fn point(&self, x: &[f64]) -> Result<Vec<Complex64>, Error> {
        let mut p = vec![Complex64::new(0.0, 0.0); self.target_dim];
        let mut tg = vec![vec![Complex64::new(0.0, 0.0); self.target_dim]; self.dim];
        Parametrization::eval(self, x, &mut p, &mut tg)?;
        Ok(p)
    }

    /// The `i`-th face, with the parametrization's induced orientation
    /// folded into the returned sign `(−1)^i · sign`.
    pub fn face(&self, i: usize) -> Simplex {
        assert!(self.dim >= 1 && i <= self.dim);
        let sign = if i % 2 == 0 { self.sign } else { -self.sign };
        let vertices: Vec<VertexKey> = self
            .vertices
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, v)| v.clone())
            .collect();
        let shape = match &self.shape {
            Shape::Affine(vs) => Shape::Affine(
                vs.iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, v)| v.clone())
                    .collect(),
            ),
            Shape::Curved(m) => {
                // standard-simplex vertices e_0 = 0, e_j = unit vector j
                let k = self.dim;
                let unit = |j: usize| -> Vec<f64> {
                    let mut v = vec![0.0; k];
                    if j > 0 {
                        v[j - 1] = 1.0;
                    }
                    v
                };
                let face_vertices: Vec<Vec<f64>> = (0..=k).filter(|j| *j != i).map(unit).collect();
                let base = face_vertices[0].clone();
                let dirs: Vec<Vec<f64>> = face_vertices[1..]
                    .iter()
                    .map(|v| v.iter().zip(&base).map(|(a, b)| a - b).collect())
                    .collect();
                Shape::Curved(m.compose_affine(&base, &dirs))
            }
        };
        Simplex {
            chart: self.chart,
            dim: self.dim - 1,
            target_dim: self.target_dim,
            shape,
            sign,
            vertices,
        }
    }

    /// Splits at the midpoint of the edge between vertices `a` and `b`.
    pub fn bisect(&self, a: usize, b: usize) -> (Simplex, Simplex) {
        assert!(a != b && a <= self.dim && b <= self.dim);
        let k = self.dim;
        let unit = |j: usize| -> Vec<f64> {
            let mut v = vec![0.0; k];
            if j > 0 {
                v[j - 1] = 1.0;
            }
            v
        };
        let mid: Vec<f64> = unit(a).iter().zip(unit(b)).map(|(x, y)| 0.5 * (x + y)).collect();
        let mut halves = Vec::new();
        for replaced in [a, b] {
            let verts: Vec<Vec<f64>> = (0..=k).map(|j| if j == replaced { mid.clone() } else { unit(j) }).collect();
            let shape = match &self.shape {
                Shape::Affine(vs) => {
                    let mut out = vs.clone();
                    out[replaced] = vs[a].iter().zip(&vs[b]).map(|(x, y)| (x + y) * 0.5).collect();
                    Shape::Affine(out)
                }
                Shape::Curved(m) => {
                    let base = verts[0].clone();
                    let dirs = verts[1..]
                        .iter()
                        .map(|v| v.iter().zip(&base).map(|(p, q)| p - q).collect())
                        .collect::<Vec<Vec<f64>>>();
                    Shape::Curved(m.compose_affine(&base, &dirs))
                }
            };
            let mut vertices = self.vertices.clone();
            vertices[replaced] = VertexKey::Coords(usize::MAX, vec![(replaced as u64, halves.len() as u64)]);
            halves.push(Simplex {
                chart: self.chart,
                dim: k,
                target_dim: self.target_dim,
                shape,
                sign: self.sign,
                vertices,
            });
        }
        let second = halves.pop().unwrap();
        (halves.pop().unwrap(), second)
    }
}

impl Parametrization for Simplex {
    fn dim(&self) -> usize {
        self.dim
    }

    fn chart(&self) -> ChartId {
        self.chart
    }

    fn reference(&self) -> Reference {
        Reference::Simplex
    }

    fn target_dim(&self) -> usize {
        self.target_dim
    }

    fn eval(&self, x: &[f64], point: &mut [Complex64], tangents: &mut [Vec<Complex64>]) -> Result<(), Error> {
        match &self.shape {
            Shape::Affine(vs) => {
                let p0 = &vs[0];
                for i in 0..self.target_dim {
                    let mut acc = p0[i];
                    for j in 0..self.dim {
                        let d = vs[j + 1][i] - p0[i];
                        acc += d * x[j];
                        tangents[j][i] = d;
                    }
                    point[i] = acc;
                }
                Ok(())
            }
            Shape::Curved(m) => m.eval(x, point, tangents),
        }
    }
}

/// Integrates a compiled `k`-form over a `k`-dimensional parametrization.
pub fn integrate_param(
    form: &CompiledForm,
    p: &dyn Parametrization,
    sign: f64,
    tol: f64,
    budget: usize,
) -> Result<Integral, Error> {
    let k = p.dim();
    if form.degree() != k {
        return Err(Error::Dimension(format!(
            "integrating a {}-form over a {k}-dimensional cell",
            form.degree()
        )));
    }
    if form.dim() != p.target_dim() {
        return Err(Error::Dimension(format!(
            "form on a {}-dimensional chart, cell in dimension {}",
            form.dim(),
            p.target_dim()
        )));
    }
    let n = p.target_dim();
    let mut x = vec![0.0; k];
    let mut point = vec![Complex64::new(0.0, 0.0); n];
    let mut tangents = vec![vec![Complex64::new(0.0, 0.0); n]; k];
    let mut scratch = Vec::new();
    let reference = p.reference();
    let r = adaptive_cube(k, tol, budget, |u| {
        let jac = match reference {
            Reference::Simplex => duffy(u, &mut x),
            Reference::Cube => {
                x.copy_from_slice(u);
                1.0
            }
        };
        if jac == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        p.eval(&x, &mut point, &mut tangents)?;
        let v = form.evaluate_real(&point, &tangents, &mut scratch)?;
        Ok(v * jac)
    })?;
    Ok(r.scale(sign))
}

/// `∫_Δ ω` by adaptive Gauss–Legendre cubature.
pub fn integrate_over_simplex(form: &Form, s: &Simplex, tol: f64) -> Result<Integral, Error> {
    if form.chart() != s.chart {
        return Err(Error::ChartMismatch(form.chart(), s.chart));
    }
    integrate_param(&form.compile(), s, s.sign as f64, tol, DEFAULT_BUDGET)
}

/// A formal integer combination of simplices of equal dimension.
#[derive(Clone, Debug, Default)]
pub struct Chain {
    pub terms: Vec<(i64, Simplex)>,
}

fn canonical_key(s: &Simplex) -> (ChartId, Vec<VertexKey>, i32) {
    let mut idx: Vec<usize> = (0..s.vertices.len()).collect();
    idx.sort_by(|a, b| s.vertices[*a].cmp(&s.vertices[*b]));
    let mut inversions = 0;
    for i in 0..idx.len() {
        for j in i + 1..idx.len() {
            if idx[i] > idx[j] {
                inversions += 1;
            }
        }
    }
    let parity = if inversions % 2 == 0 { 1 } else { -1 };
    let chart = match s.vertices.first() {
        Some(VertexKey::Id(_)) => usize::MAX,
        _ => s.chart,
    };
    (chart, idx.iter().map(|i| s.vertices[*i].clone()).collect(), parity * s.sign)
}

impl Chain {
    pub fn new() -> Chain {
        Chain { terms: Vec::new() }
    }

    pub fn from_simplices(simplices: impl IntoIterator<Item = Simplex>) -> Chain {
        Chain {
            terms: simplices.into_iter().map(|s| (1, s)).collect(),
        }
    }

    pub fn push(&mut self, weight: i64, s: Simplex) {
        self.terms.push((weight, s));
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn dim(&self) -> Option<usize> {
        self.terms.first().map(|(_, s)| s.dim)
    }

    pub fn neg(&self) -> Chain {
        Chain {
            terms: self.terms.iter().map(|(w, s)| (-w, s.clone())).collect(),
        }
    }

    pub fn concat(&self, o: &Chain) -> Chain {
        let mut terms = self.terms.clone();
        terms.extend(o.terms.iter().cloned());
        Chain { terms }
    }

    /// Merges simplices with the same vertex set, dropping those whose weights cancel.
    pub fn reduce(&self) -> Chain {
        let mut order: Vec<(ChartId, Vec<VertexKey>)> = Vec::new();
        let mut acc: BTreeMap<(ChartId, Vec<VertexKey>), (i64, Simplex, i32)> = BTreeMap::new();
        for (w, s) in &self.terms {
            let (chart, key, orient) = canonical_key(s);
            let k = (chart, key);
            match acc.get_mut(&k) {
                Some((tw, _, o0)) => *tw += w * (orient * *o0) as i64,
                None => {
                    order.push(k.clone());
                    acc.insert(k, (*w, s.clone(), orient));
                }
            }
        }
        let terms = order
            .into_iter()
            .filter_map(|k| {
                let (w, s, _) = acc.remove(&k).unwrap();
                (w != 0).then_some((w, s))
            })
            .collect();
        Chain { terms }
    }

    /// Simplicial boundary, reduced.
    pub fn boundary(&self) -> Result<Chain, Error> {
        let mut out = Chain::new();
        for (w, s) in &self.terms {
            if s.dim == 0 {
                return Err(Error::Dimension("boundary of a 0-chain".into()));
            }
            for i in 0..=s.dim {
                out.push(*w, s.face(i));
            }
        }
        Ok(out.reduce())
    }

    /// `∫_C ω`, summed in chain order.
    pub fn integrate(&self, form: &Form, tol: f64) -> Result<Integral, Error> {
        let compiled = form.compile();
        let per = if self.terms.is_empty() { tol } else { tol / self.terms.len() as f64 };
        let mut total = Integral::zero();
        for (w, s) in &self.terms {
            if s.chart != form.chart() {
                return Err(Error::ChartMismatch(form.chart(), s.chart));
            }
            let r = integrate_param(&compiled, s, s.sign as f64, per, DEFAULT_BUDGET)?;
            total = total.add(r.scale(*w as f64));
        }
        Ok(total)
    }
}

/// Outcome of a Stokes comparison.
#[derive(Clone, Copy, Debug)]
pub struct StokesReport {
    pub interior: Integral,
    pub boundary: Integral,
    pub difference: f64,
    pub pass: bool,
}

/// Compares `∫_C dω` with `∫_{∂C} ω`.
pub fn stokes_check(form: &Form, chain: &Chain, tol: f64) -> Result<StokesReport, Error> {
    if chain.dim() != Some(form.degree() + 1) {
        return Err(Error::Dimension("stokes check needs deg ω = dim C − 1".into()));
    }
    let quad_tol = (tol * 0.01).max(1e-14);
    let interior = chain.integrate(&form.d(), quad_tol)?;
    let boundary = chain.boundary()?.integrate(form, quad_tol)?;
    let difference = (interior.value - boundary.value).norm();
    Ok(StokesReport {
        interior,
        boundary,
        difference,
        pass: difference < tol,
    })
}

/// A coherently oriented set of top-dimensional simplices, possibly on several charts.
#[derive(Clone, Debug)]
pub struct Triangulation {
    pub simplices: Vec<Simplex>,
}

impl Triangulation {
    pub fn new(simplices: Vec<Simplex>) -> Triangulation {
        Triangulation { simplices }
    }

    pub fn chain(&self) -> Chain {
        Chain::from_simplices(self.simplices.iter().cloned())
    }

    /// Every codimension-one face must occur exactly twice with opposite
    /// induced orientations, so the boundary is empty.
    pub fn check_coherent(&self) -> Result<(), Error> {
        let mut seen: BTreeMap<(ChartId, Vec<VertexKey>), Vec<(usize, i32)>> = BTreeMap::new();
        for (idx, s) in self.simplices.iter().enumerate() {
            for i in 0..=s.dim {
                let (chart, key, orient) = canonical_key(&s.face(i));
                seen.entry((chart, key)).or_default().push((idx, orient));
            }
        }
        for ((_, key), uses) in &seen {
            let ok = uses.len() == 2 && uses[0].1 == -uses[1].1;
            if !ok {
                return Err(Error::Invariant(format!(
                    "triangulation is not coherently oriented: face {key:?} used by simplices {:?}",
                    uses
                )));
            }
        }
        Ok(())
    }

    /// `∫_X ω = Σ_Δ ∫_Δ ω`, where `forms` gives the top-degree form on each chart.
    pub fn integrate_fundamental_class(
        &self,
        forms: &dyn Fn(ChartId) -> Option<Form>,
        tol: f64,
    ) -> Result<Integral, Error> {
        self.check_coherent()?;
        let mut compiled: BTreeMap<ChartId, CompiledForm> = BTreeMap::new();
        let per = tol / self.simplices.len().max(1) as f64;
        let mut total = Integral::zero();
        for s in &self.simplices {
            if !compiled.contains_key(&s.chart) {
                let f = forms(s.chart).ok_or_else(|| Error::Missing(format!("no form on chart {}", s.chart)))?;
                compiled.insert(s.chart, f.compile());
            }
            let r = integrate_param(&compiled[&s.chart], s, s.sign as f64, per, DEFAULT_BUDGET)?;
            total = total.add(r);
        }
        Ok(total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::link_of_point;

    fn c(x: f64, y: f64) -> Complex64 {
        Complex64::new(x, y)
    }

    #[test]
    fn segment_and_triangle_integrals() {
        let seg = Simplex::planar(0, &[c(0.0, 0.0), c(1.0, 0.0)]);
        // dx = (dz + dzbar)/2
        let dx = Form::parse("1/2*dz1 + 1/2*dzbar1", 0, 1).unwrap();
        let r = integrate_over_simplex(&dx, &seg, 1e-12).unwrap();
        assert!((r.value - c(1.0, 0.0)).norm() < 1e-14);
        let tri = Simplex::planar(0, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0)]);
        let area = Form::parse("dz1^dzbar1", 0, 1).unwrap();
        let r = integrate_over_simplex(&area, &tri, 1e-12).unwrap();
        assert!((r.value - c(0.0, -1.0)).norm() < 1e-14);
        assert_eq!(integrate_over_simplex(&area, &tri.reversed(), 1e-12).unwrap().value, -r.value);
    }

    #[test]
    fn circle_integral_of_dz_over_z() {
        let chain = link_of_point(c(0.0, 0.0), 1.0, 16).unwrap();
        let w = Form::parse("z1^(-1)*dz1", 0, 1).unwrap();
        let r = chain.integrate(&w, 1e-11).unwrap();
        assert!((r.value - c(0.0, 2.0 * std::f64::consts::PI)).norm() < 1e-8);
    }

    #[test]
    fn boundary_of_boundary_vanishes() {
        let seg = Chain::from_simplices([Simplex::planar(0, &[c(0.0, 0.0), c(1.0, 0.0)])]);
        let b = seg.boundary().unwrap();
        assert_eq!(b.len(), 2);
        let tri = Chain::from_simplices([Simplex::planar(0, &[c(0.0, 0.0), c(1.0, 0.2), c(0.3, 1.0)])]);
        assert_eq!(tri.boundary().unwrap().len(), 3);
        assert!(tri.boundary().unwrap().boundary().unwrap().is_empty());
        assert!(link_of_point(c(0.5, 0.5), 2.0, 8).unwrap().boundary().unwrap().is_empty());
    }

    #[test]
    fn stokes_on_a_triangle() {
        let tri = Chain::from_simplices([Simplex::planar(0, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0)])]);
        let w = Form::parse("z1*dzbar1", 0, 1).unwrap();
        let rep = stokes_check(&w, &tri, 1e-8).unwrap();
        assert!(rep.pass, "{rep:?}");
        // dz∧dz̄ = −2i dx∧dy over a triangle of area 1/2
        assert!((rep.interior.value - c(0.0, -1.0)).norm() < 1e-12, "{rep:?}");
    }

    #[test]
    fn curved_faces_match_affine_faces() {
        let s = Simplex::curved(
            0,
            2,
            vec![crate::fields::parse_expr("1 + t1 + i*t2").unwrap()],
            vec![VertexKey::Id(0), VertexKey::Id(1), VertexKey::Id(2)],
        )
        .unwrap();
        let a = Simplex::planar(0, &[c(1.0, 0.0), c(2.0, 0.0), c(1.0, 1.0)]);
        let w = Form::parse("z1^2*dz1 + conj(z1)*dzbar1", 0, 1).unwrap();
        for i in 0..3 {
            let x = integrate_over_simplex(&w, &s.face(i), 1e-12).unwrap().value;
            let y = integrate_over_simplex(&w, &a.face(i), 1e-12).unwrap().value;
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn subdivision_preserves_integrals() {
        let tri = Simplex::planar(0, &[c(0.0, 0.0), c(1.0, 0.3), c(0.2, 1.0)]);
        let w = Form::parse("exp(z1)*conj(z1)*dz1^dzbar1", 0, 1).unwrap();
        let whole = integrate_over_simplex(&w, &tri, 1e-12).unwrap().value;
        let (a, b) = tri.bisect(0, 2);
        let parts = integrate_over_simplex(&w, &a, 1e-12).unwrap().value + integrate_over_simplex(&w, &b, 1e-12).unwrap().value;
        assert!((whole - parts).norm() < 2e-12);
    }
}
