//! Vector bundles given by transition matrices, sections and frames,
//! connection matrices and their curvature.
//!
//! Frames transform as `e_β = e_α g_{αβ}`, with `g_{αβ}` written in the
//! coordinates of chart `α`. Sections therefore satisfy `s_α = g_{αβ} s_β`,
//! connection matrices are defined by `∇e = eθ` and change by
//! `θ_β = g⁻¹θ_α g + g⁻¹dg`, and the curvature is `K = dθ + θ∧θ`.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::fields::{DVar, Expr, Substitution, Tape};
use crate::forms::{ChartId, ChartMap, Form, Tangent};
use crate::geometry::{Atlas, Covering, PartitionOfUnity};
use crate::Error;

/// Permutations of `0..n` with their signs.
pub(crate) fn permutations(n: usize) -> Vec<(Vec<usize>, i32)> {
    fn go(prefix: &mut Vec<usize>, used: &mut Vec<bool>, sign: i32, out: &mut Vec<(Vec<usize>, i32)>) {
        let n = used.len();
        if prefix.len() == n {
            out.push((prefix.clone(), sign));
            return;
        }
        let mut skipped = 0;
        for j in 0..n {
            if used[j] {
                continue;
            }
            used[j] = true;
            prefix.push(j);
            // moving j in front of the `skipped` smaller unused indices
            go(prefix, used, if skipped % 2 == 0 { sign } else { -sign }, out);
            prefix.pop();
            used[j] = false;
            skipped += 1;
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut vec![false; n], 1, &mut out);
    out
}

/// Square matrix of scalar fields, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ExprMatrix {
    n: usize,
    entries: Vec<Expr>,
}

impl ExprMatrix {
    pub fn identity(n: usize) -> ExprMatrix {
        let entries = (0..n * n)
            .map(|k| if k / n == k % n { Expr::one() } else { Expr::zero() })
            .collect();
        ExprMatrix { n, entries }
    }

    pub fn scalar(e: Expr) -> ExprMatrix {
        ExprMatrix { n: 1, entries: vec![e] }
    }

    pub fn from_rows(rows: Vec<Vec<Expr>>) -> Result<ExprMatrix, Error> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension("matrix must be square and nonempty".into()));
        }
        Ok(ExprMatrix {
            n,
            entries: rows.into_iter().flatten().collect(),
        })
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vec<Expr>]) -> Result<ExprMatrix, Error> {
        let n = cols.len();
        if n == 0 || cols.iter().any(|c| c.len() != n) {
            return Err(Error::Dimension("frame must have as many vectors as the rank".into()));
        }
        let entries = (0..n * n).map(|k| cols[k % n][k / n].clone()).collect();
        Ok(ExprMatrix { n, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &Expr {
        &self.entries[i * self.n + j]
    }

    pub fn entries(&self) -> &[Expr] {
        &self.entries
    }

    pub fn map(&self, f: impl Fn(&Expr) -> Expr) -> ExprMatrix {
        ExprMatrix {
            n: self.n,
            entries: self.entries.iter().map(f).collect(),
        }
    }

    pub fn mul(&self, o: &ExprMatrix) -> ExprMatrix {
        let n = self.n;
        let entries = (0..n * n)
            .map(|k| {
                let (i, j) = (k / n, k % n);
                Expr::sum((0..n).map(|l| self.get(i, l) * o.get(l, j)))
            })
            .collect();
        ExprMatrix { n, entries }
    }

    pub fn det(&self) -> Expr {
        let n = self.n;
        Expr::sum(permutations(n).into_iter().map(|(p, s)| {
            let prod = Expr::product((0..n).map(|i| self.get(i, p[i]).clone()));
            if s < 0 {
                -prod
            } else {
                prod
            }
        }))
    }

    fn cofactor(&self, i: usize, j: usize) -> Expr {
        let n = self.n;
        if n == 1 {
            return Expr::one();
        }
        let rows: Vec<Vec<Expr>> = (0..n)
            .filter(|r| *r != i)
            .map(|r| (0..n).filter(|c| *c != j).map(|c| self.get(r, c).clone()).collect())
            .collect();
        let m = ExprMatrix::from_rows(rows).expect("minor").det();
        if (i + j) % 2 == 0 {
            m
        } else {
            -m
        }
    }

    /// Inverse by the adjugate formula.
    pub fn inverse(&self) -> ExprMatrix {
        let n = self.n;
        let inv_det = self.det().recip();
        let entries = (0..n * n)
            .map(|k| &self.cofactor(k % n, k / n) * &inv_det)
            .collect();
        ExprMatrix { n, entries }
    }

    pub fn substitute(&self, sub: &Substitution) -> ExprMatrix {
        self.map(|e| e.substitute(sub))
    }

    pub fn eval(&self, z: &[Complex64]) -> Result<Vec<Complex64>, Error> {
        Tape::compile(&self.entries).eval(z, &[])
    }

    /// `dg` as a matrix of 1-forms.
    pub fn d(&self, chart: ChartId, dim: usize) -> FormMatrix {
        FormMatrix {
            n: self.n,
            entries: self.entries.iter().map(|e| Form::scalar(chart, dim, e.clone()).d()).collect(),
        }
    }
}

/// Square matrix of forms of a common degree on one chart.
#[derive(Clone, Debug)]
pub struct FormMatrix {
    n: usize,
    entries: Vec<Form>,
}

impl FormMatrix {
    pub fn zero(chart: ChartId, dim: usize, n: usize, degree: usize) -> FormMatrix {
        FormMatrix {
            n,
            entries: vec![Form::zero(chart, dim, degree); n * n],
        }
    }

    pub fn from_rows(rows: Vec<Vec<Form>>) -> Result<FormMatrix, Error> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension("form matrix must be square and nonempty".into()));
        }
        let entries: Vec<Form> = rows.into_iter().flatten().collect();
        let (c, d, deg) = (entries[0].chart(), entries[0].dim(), entries[0].degree());
        if entries.iter().any(|f| f.chart() != c || f.dim() != d || f.degree() != deg) {
            return Err(Error::Dimension("form matrix entries must share chart and degree".into()));
        }
        Ok(FormMatrix { n, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn chart(&self) -> ChartId {
        self.entries[0].chart()
    }

    pub fn dim(&self) -> usize {
        self.entries[0].dim()
    }

    pub fn degree(&self) -> usize {
        self.entries[0].degree()
    }

    pub fn get(&self, i: usize, j: usize) -> &Form {
        &self.entries[i * self.n + j]
    }

    pub fn entries(&self) -> &[Form] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Form::is_zero)
    }

    pub fn map(&self, f: impl Fn(&Form) -> Form) -> FormMatrix {
        FormMatrix {
            n: self.n,
            entries: self.entries.iter().map(f).collect(),
        }
    }

    pub fn try_add(&self, o: &FormMatrix) -> Result<FormMatrix, Error> {
        let entries = self
            .entries
            .iter()
            .zip(&o.entries)
            .map(|(a, b)| a.try_add(b))
            .collect::<Result<_, _>>()?;
        Ok(FormMatrix { n: self.n, entries })
    }

    pub fn try_sub(&self, o: &FormMatrix) -> Result<FormMatrix, Error> {
        self.try_add(&o.neg())
    }

    pub fn neg(&self) -> FormMatrix {
        self.map(Form::neg)
    }

    pub fn scale(&self, f: &Expr) -> FormMatrix {
        self.map(|w| w.scale(f))
    }

    /// `(A ∧ B)_{ik} = Σ_j A_{ij} ∧ B_{jk}`.
    pub fn wedge(&self, o: &FormMatrix) -> Result<FormMatrix, Error> {
        let n = self.n;
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for k in 0..n {
                let mut acc = Form::zero(self.chart(), self.dim(), self.degree() + o.degree());
                for j in 0..n {
                    acc = acc.try_add(&self.get(i, j).wedge(o.get(j, k))?)?;
                }
                entries.push(acc);
            }
        }
        Ok(FormMatrix { n, entries })
    }

    pub fn d(&self) -> FormMatrix {
        self.map(Form::d)
    }

    /// `g · A`.
    pub fn left_mul(&self, g: &ExprMatrix) -> FormMatrix {
        let n = self.n;
        let entries = (0..n * n)
            .map(|k| {
                let (i, j) = (k / n, k % n);
                (0..n).fold(Form::zero(self.chart(), self.dim(), self.degree()), |acc, l| {
                    acc.try_add(&self.get(l, j).scale(g.get(i, l))).expect("same chart")
                })
            })
            .collect();
        FormMatrix { n, entries }
    }

    /// `A · g`.
    pub fn right_mul(&self, g: &ExprMatrix) -> FormMatrix {
        let n = self.n;
        let entries = (0..n * n)
            .map(|k| {
                let (i, j) = (k / n, k % n);
                (0..n).fold(Form::zero(self.chart(), self.dim(), self.degree()), |acc, l| {
                    acc.try_add(&self.get(i, l).scale(g.get(l, j))).expect("same chart")
                })
            })
            .collect();
        FormMatrix { n, entries }
    }

    pub fn pullback(&self, map: &ChartMap) -> Result<FormMatrix, Error> {
        let entries = self.entries.iter().map(|f| f.pullback(map)).collect::<Result<_, _>>()?;
        Ok(FormMatrix { n: self.n, entries })
    }

    /// Largest entrywise difference at a point on the given tangent vectors.
    pub fn max_difference(&self, o: &FormMatrix, z: &[Complex64], vectors: &[Tangent]) -> Result<f64, Error> {
        let mut worst: f64 = 0.0;
        for (a, b) in self.entries.iter().zip(&o.entries) {
            let x = a.evaluate(z, &[], vectors)?;
            let y = b.evaluate(z, &[], vectors)?;
            worst = worst.max((x - y).norm());
        }
        Ok(worst)
    }
}

/// `K = dθ + θ∧θ`.
pub fn curvature(theta: &FormMatrix) -> FormMatrix {
    theta
        .d()
        .try_add(&theta.wedge(theta).expect("same chart"))
        .expect("same chart")
}

/// `g⁻¹θg + g⁻¹dg`, everything on the chart of `theta`.
pub fn gauge(theta: &FormMatrix, g: &ExprMatrix) -> FormMatrix {
    let gi = g.inverse();
    theta
        .right_mul(g)
        .left_mul(&gi)
        .try_add(&g.d(theta.chart(), theta.dim()).left_mul(&gi))
        .expect("same chart")
}

/// Connection matrix of the connection that makes the frame `S` parallel:
/// `θ = −dS·S⁻¹`.
pub fn frame_connection(frame: &ExprMatrix, chart: ChartId, dim: usize) -> FormMatrix {
    frame.d(chart, dim).right_mul(&frame.inverse()).neg()
}

/// Vector bundle of rank `e` given by holomorphic transition matrices.
#[derive(Clone, Debug)]
pub struct Bundle {
    pub rank: usize,
    transitions: BTreeMap<(ChartId, ChartId), ExprMatrix>,
}

impl Bundle {
    /// Each entry `(α, β, g_{αβ})` is in the coordinates of `α`; missing
    /// reverse transitions are filled in as inverses.
    pub fn new(atlas: &Atlas, rank: usize, given: Vec<(ChartId, ChartId, ExprMatrix)>) -> Result<Bundle, Error> {
        let mut transitions = BTreeMap::new();
        for (a, b, g) in given {
            if g.n() != rank {
                return Err(Error::Dimension(format!("transition {a} -> {b} is not {rank}x{rank}")));
            }
            let dim = atlas.chart(a)?.dim;
            if let Some(bad) = g.entries().iter().find(|e| !e.is_structurally_holomorphic(dim)) {
                return Err(Error::NotHolomorphic(format!("bundle transition {a} -> {b}: {bad}")));
            }
            transitions.insert((a, b), g);
        }
        let keys: Vec<(ChartId, ChartId)> = transitions.keys().copied().collect();
        for (a, b) in keys {
            if transitions.contains_key(&(b, a)) {
                continue;
            }
            let map = atlas
                .transition(b, a)
                .ok_or_else(|| Error::Missing(format!("chart transition {b} -> {a}")))?;
            let inv = transitions[&(a, b)].inverse().substitute(&Substitution::vars(map.components));
            transitions.insert((b, a), inv);
        }
        Ok(Bundle { rank, transitions })
    }

    /// The trivial bundle of rank `e`.
    pub fn trivial(atlas: &Atlas, rank: usize) -> Bundle {
        let mut transitions = BTreeMap::new();
        for m in atlas.transitions() {
            transitions.insert((m.source, m.target), ExprMatrix::identity(rank));
        }
        Bundle { rank, transitions }
    }

    /// `g_{αβ}`; the identity when `α = β`.
    pub fn transition(&self, a: ChartId, b: ChartId) -> Option<ExprMatrix> {
        if a == b {
            return Some(ExprMatrix::identity(self.rank));
        }
        self.transitions.get(&(a, b)).cloned()
    }

    /// Checks invertibility and `g_{αγ} = g_{αβ}·(g_{βγ} ∘ φ_{αβ})` at samples.
    pub fn check(&self, atlas: &Atlas, samples: usize, seed: u64, tol: f64) -> Result<(), Error> {
        let n = atlas.charts.len();
        for a in 0..n {
            for b in 0..n {
                let Some(gab) = self.transition(a, b) else { continue };
                let det = Tape::compile(&[gab.det()]);
                for p in atlas.sample_overlap(a, &[b], samples, seed) {
                    let v = det.eval(&p, &[])?[0];
                    if v.norm() < 1e-12 {
                        return Err(Error::Invariant(format!("bundle transition {a} -> {b} is singular at {p:?}")));
                    }
                }
                for c in 0..n {
                    let (Some(gbc), Some(gac), Some(phi)) = (self.transition(b, c), self.transition(a, c), atlas.transition(a, b))
                    else {
                        continue;
                    };
                    let lhs = gab.mul(&gbc.substitute(&Substitution::vars(phi.components)));
                    let t1 = Tape::compile(lhs.entries());
                    let t2 = Tape::compile(gac.entries());
                    for p in atlas.sample_overlap(a, &[b, c], samples, seed) {
                        let x = t1.eval(&p, &[])?;
                        let y = t2.eval(&p, &[])?;
                        let res = x.iter().zip(&y).map(|(u, v)| (u - v).norm()).fold(0.0, f64::max);
                        if res > tol * (1.0 + y.iter().map(|v| v.norm()).fold(0.0, f64::max)) {
                            return Err(Error::Invariant(format!(
                                "bundle cocycle fails for charts ({a}, {b}, {c}) at {p:?}: residual {res:.3e}"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Expresses a connection matrix given on chart `a` on chart `b`.
    pub fn transport(&self, atlas: &Atlas, theta: &FormMatrix, b: ChartId) -> Result<FormMatrix, Error> {
        let a = theta.chart();
        if a == b {
            return Ok(theta.clone());
        }
        let g = self
            .transition(a, b)
            .ok_or_else(|| Error::Missing(format!("bundle transition {a} -> {b}")))?;
        let back = atlas
            .transition(b, a)
            .ok_or_else(|| Error::Missing(format!("chart transition {b} -> {a}")))?;
        gauge(theta, &g).pullback(&back)
    }
}

/// Connection matrices chart by chart.
#[derive(Clone, Debug)]
pub struct Connection {
    pub rank: usize,
    pub forms: BTreeMap<ChartId, FormMatrix>,
}

impl Connection {
    pub fn new(rank: usize, forms: BTreeMap<ChartId, FormMatrix>) -> Result<Connection, Error> {
        for (c, m) in &forms {
            if m.n() != rank || m.degree() != 1 || m.chart() != *c {
                return Err(Error::Dimension(format!("connection matrix on chart {c} must be {rank}x{rank} of 1-forms")));
            }
        }
        Ok(Connection { rank, forms })
    }

    /// `θ = 0` on every chart.
    pub fn zero(atlas: &Atlas, rank: usize) -> Connection {
        let forms = atlas
            .charts
            .iter()
            .map(|c| (c.id, FormMatrix::zero(c.id, c.dim, rank, 1)))
            .collect();
        Connection { rank, forms }
    }

    /// The connection that is trivial in the frame of chart `base`, written on every chart.
    pub fn chart_trivial(atlas: &Atlas, bundle: &Bundle, base: ChartId) -> Result<Connection, Error> {
        let chart = atlas.chart(base)?;
        let zero = FormMatrix::zero(base, chart.dim, bundle.rank, 1);
        let mut forms = BTreeMap::new();
        for c in &atlas.charts {
            if c.id == base || bundle.transition(base, c.id).is_some() {
                forms.insert(c.id, bundle.transport(atlas, &zero, c.id)?);
            }
        }
        Connection::new(bundle.rank, forms)
    }

    pub fn on(&self, chart: ChartId) -> Option<&FormMatrix> {
        self.forms.get(&chart)
    }

    pub fn curvature(&self) -> BTreeMap<ChartId, FormMatrix> {
        self.forms.iter().map(|(c, t)| (*c, curvature(t))).collect()
    }

    /// Largest violation of `θ_β = g⁻¹θ_α g + g⁻¹dg` over sampled overlap points.
    pub fn check_compatibility(&self, atlas: &Atlas, bundle: &Bundle, samples: usize, seed: u64) -> Result<f64, Error> {
        let mut worst: f64 = 0.0;
        for (a, ta) in &self.forms {
            for (b, tb) in &self.forms {
                if a == b || atlas.transition(*b, *a).is_none() {
                    continue;
                }
                let moved = bundle.transport(atlas, ta, *b)?;
                let dim = tb.dim();
                for p in atlas.sample_overlap(*b, &[*a], samples, seed) {
                    for i in 0..dim {
                        for v in [Tangent::d_dz(i, dim), Tangent::d_dzbar(i, dim)] {
                            worst = worst.max(moved.max_difference(tb, &p, std::slice::from_ref(&v))?);
                        }
                    }
                }
            }
        }
        Ok(worst)
    }
}

/// `Σ_j ρ_j θ_j` on one chart.
pub fn glue(parts: &[(Expr, FormMatrix)]) -> Result<FormMatrix, Error> {
    let first = &parts
        .first()
        .ok_or_else(|| Error::Argument("nothing to glue".into()))?
        .1;
    let mut acc = FormMatrix::zero(first.chart(), first.dim(), first.n(), first.degree());
    for (rho, theta) in parts {
        if rho.is_zero() {
            continue;
        }
        acc = acc.try_add(&theta.scale(rho))?;
    }
    Ok(acc)
}

/// `ρ_outer ∇_outer + Σ_ν χ_ν ∇_ν` on every chart where `outer` is given,
/// with `∇_ν` taken on the chart of covering disk `ν` and carried over by
/// the bundle transitions wherever `χ_ν` is not identically zero.
pub fn glue_by_partition(
    atlas: &Atlas,
    bundle: &Bundle,
    cov: &Covering,
    pou: &PartitionOfUnity,
    outer: &Connection,
    disks: &[Connection],
) -> Result<Connection, Error> {
    if disks.len() != cov.disks.len() {
        return Err(Error::Dimension(format!("{} disk connections for {} covering disks", disks.len(), cov.disks.len())));
    }
    let outer_index = 1 - cov.inner;
    let mut forms = BTreeMap::new();
    for (a, t) in &outer.forms {
        let mut parts = vec![(pou.rho(*a, outer_index), t.clone())];
        for (nu, (d, conn)) in cov.disks.iter().zip(disks).enumerate() {
            let chi = pou.rho_disk(*a, nu);
            if chi.is_zero() {
                continue;
            }
            let local = conn
                .on(d.chart)
                .ok_or_else(|| Error::Missing(format!("connection for disk {nu} on chart {}", d.chart)))?;
            parts.push((chi, bundle.transport(atlas, local, *a)?));
        }
        forms.insert(*a, glue(&parts)?);
    }
    Connection::new(bundle.rank, forms)
}

/// An ordered `r`-tuple of sections, by chart; `vectors[k]` holds the `e`
/// components of section `k`.
#[derive(Clone, Debug)]
pub struct SectionTuple {
    pub rank: usize,
    pub r: usize,
    pub per_chart: BTreeMap<ChartId, Vec<Vec<Expr>>>,
}

impl SectionTuple {
    pub fn new(rank: usize, per_chart: BTreeMap<ChartId, Vec<Vec<Expr>>>) -> Result<SectionTuple, Error> {
        let r = per_chart.values().next().map(Vec::len).unwrap_or(0);
        if r == 0 || r > rank {
            return Err(Error::Dimension(format!("an r-section needs 1 ≤ r ≤ {rank}")));
        }
        for (c, v) in &per_chart {
            if v.len() != r || v.iter().any(|s| s.len() != rank) {
                return Err(Error::Dimension(format!("sections on chart {c} must be {r} vectors of length {rank}")));
            }
        }
        Ok(SectionTuple { rank, r, per_chart })
    }

    pub fn on(&self, chart: ChartId) -> Option<&Vec<Vec<Expr>>> {
        self.per_chart.get(&chart)
    }

    /// Largest violation of `s_α = g_{αβ} s_β` at sampled overlap points.
    pub fn check_compatibility(&self, atlas: &Atlas, bundle: &Bundle, samples: usize, seed: u64) -> Result<f64, Error> {
        let mut worst: f64 = 0.0;
        for (a, sa) in &self.per_chart {
            for (b, sb) in &self.per_chart {
                let (Some(g), Some(phi)) = (bundle.transition(*a, *b), atlas.transition(*a, *b)) else { continue };
                if a == b {
                    continue;
                }
                let sub = Substitution::vars(phi.components.clone());
                let mut lhs = Vec::new();
                let mut rhs = Vec::new();
                for k in 0..self.r {
                    for i in 0..self.rank {
                        lhs.push(sa[k][i].clone());
                        rhs.push(Expr::sum((0..self.rank).map(|j| g.get(i, j) * &sb[k][j].substitute(&sub))));
                    }
                }
                let (t1, t2) = (Tape::compile(&lhs), Tape::compile(&rhs));
                for p in atlas.sample_overlap(*a, &[*b], samples, seed) {
                    let x = t1.eval(&p, &[])?;
                    let y = t2.eval(&p, &[])?;
                    worst = worst.max(x.iter().zip(&y).map(|(u, v)| (u - v).norm()).fold(0.0, f64::max));
                }
            }
        }
        Ok(worst)
    }

    /// All `r×r` minors of the `e×r` matrix of components on `chart`.
    pub fn minors(&self, chart: ChartId) -> Result<Vec<Expr>, Error> {
        let s = self.on(chart).ok_or_else(|| Error::Missing(format!("sections on chart {chart}")))?;
        let mut out = Vec::new();
        for rows in subsets(self.rank, self.r) {
            let m = ExprMatrix::from_rows(rows.iter().map(|i| (0..self.r).map(|k| s[k][*i].clone()).collect()).collect())?;
            out.push(m.det());
        }
        Ok(out)
    }

    /// Completes the sections on `chart` to a full frame with constant
    /// standard basis vectors, chosen so the frame is invertible at
    /// `points`. Returns the frame matrix and the indices added.
    pub fn complete(&self, chart: ChartId, points: &[Vec<Complex64>]) -> Result<(ExprMatrix, Vec<usize>), Error> {
        let s = self.on(chart).ok_or_else(|| Error::Missing(format!("sections on chart {chart}")))?;
        for extra in subsets(self.rank, self.rank - self.r) {
            let mut cols = s.clone();
            for &i in &extra {
                cols.push((0..self.rank).map(|j| if j == i { Expr::one() } else { Expr::zero() }).collect());
            }
            let m = ExprMatrix::from_columns(&cols)?;
            let det = Tape::compile(&[m.det()]);
            let ok = points
                .iter()
                .all(|p| det.eval(p, &[]).map(|v| v[0].norm() > 1e-9).unwrap_or(false));
            if ok {
                return Ok((m, extra));
            }
        }
        Err(Error::SingularFrame(format!("no constant completion of the sections on chart {chart} is invertible at the sample points")))
    }
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Newton limits closer than this are taken to be the same singular point.
const ROOT_MERGE: f64 = 1e-3;

/// Points of `chart` where the sections fail to be linearly independent,
/// found by damped Gauss–Newton on the minors from a grid of starting points.
pub fn singular_locus(atlas: &Atlas, sections: &SectionTuple, chart: ChartId, samples: usize) -> Result<Vec<Vec<Complex64>>, Error> {
    let ch = atlas.chart(chart)?;
    let n = ch.dim;
    let minors = sections.minors(chart)?;
    let k = minors.len();
    let mut outs = minors.clone();
    for i in 0..n {
        for m in &minors {
            outs.push(m.diff(DVar::Z(i)));
            outs.push(m.diff(DVar::Zbar(i)));
        }
    }
    let tape = Tape::compile(&outs);
    let starts: Vec<Vec<Complex64>> = if n == 1 {
        let (c, h) = match ch.domain[0] {
            crate::geometry::Region::Disk { center, radius } => (center, radius),
            crate::geometry::Region::Annulus { center, outer, .. } => (center, outer),
            crate::geometry::Region::Plane => (Complex64::new(0.0, 0.0), 3.0),
        };
        let g = samples.max(2);
        (0..g * g)
            .map(|idx| {
                let (a, b) = ((idx % g) as f64 + 0.5, (idx / g) as f64 + 0.5);
                vec![c + Complex64::new(-h + 2.0 * h * a / g as f64, -h + 2.0 * h * b / g as f64)]
            })
            .filter(|p| ch.contains(p))
            .collect()
    } else {
        let mut rng = crate::seeded_rng(crate::DEFAULT_SEED);
        (0..samples * samples).map(|_| ch.sample(&mut rng)).collect()
    };
    let mut clusters: Vec<(Vec<Complex64>, f64)> = Vec::new();
    let limit = samples.max(8);
    for start in starts {
        let Some(root) = newton(&tape, k, n, start) else { continue };
        if !ch.contains(&root) {
            continue;
        }
        // Newton stalls at distance ~ε^{1/k} from a root of multiplicity k,
        // so nearby limits are merged and averaged
        if let Some(i) = clusters.iter().position(|c| dist(&c.0, &root) < ROOT_MERGE) {
            let (sum, count) = &mut clusters[i];
            *count += 1.0;
            for (s, r) in sum.iter_mut().zip(&root) {
                *s += (r - *s) / *count;
            }
            continue;
        }
        clusters.push((root, 1.0));
        if clusters.len() > limit {
            return Err(Error::NonIsolated(format!(
                "more than {limit} distinct singular points of the sections on chart {chart}"
            )));
        }
    }
    let mut roots: Vec<Vec<Complex64>> = clusters.into_iter().map(|(r, _)| r).collect();
    roots.sort_by(|a, b| {
        a.iter()
            .flat_map(|c| [c.re, c.im])
            .zip(b.iter().flat_map(|c| [c.re, c.im]))
            .map(|(x, y)| x.total_cmp(&y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(roots)
}

fn dist(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

/// Levenberg-damped Gauss–Newton in real coordinates; `None` unless the
/// residual drops below `1e-10`.
fn newton(tape: &Tape, k: usize, n: usize, mut z: Vec<Complex64>) -> Option<Vec<Complex64>> {
    let m = 2 * n;
    for _ in 0..60 {
        let v = tape.eval(&z, &[]).ok()?;
        let res: Vec<f64> = v[..k].iter().flat_map(|c| [c.re, c.im]).collect();
        let norm = res.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-12 {
            return Some(z);
        }
        // columns: ∂/∂x_i = f_z + f_zbar, ∂/∂y_i = i(f_z − f_zbar)
        let mut jac = vec![0.0; 2 * k * m];
        for i in 0..n {
            for r in 0..k {
                let fz = v[k + 2 * (i * k + r)];
                let fzb = v[k + 2 * (i * k + r) + 1];
                let dx = fz + fzb;
                let dy = Complex64::new(0.0, 1.0) * (fz - fzb);
                for (row, val) in [(2 * r, (dx.re, dy.re)), (2 * r + 1, (dx.im, dy.im))] {
                    jac[row * m + 2 * i] = val.0;
                    jac[row * m + 2 * i + 1] = val.1;
                }
            }
        }
        let mut a = vec![0.0; m * m];
        let mut g = vec![0.0; m];
        for row in 0..2 * k {
            for p in 0..m {
                g[p] += jac[row * m + p] * res[row];
                for q in 0..m {
                    a[p * m + q] += jac[row * m + p] * jac[row * m + q];
                }
            }
        }
        let scale = (0..m).map(|p| a[p * m + p]).fold(0.0, f64::max).max(1e-300);
        for p in 0..m {
            a[p * m + p] += 1e-14 * scale;
        }
        let step = solve(&mut a, &mut g, m)?;
        for i in 0..n {
            z[i] -= Complex64::new(step[2 * i], step[2 * i + 1]);
        }
        if !z.iter().all(|c| c.re.is_finite() && c.im.is_finite()) {
            return None;
        }
    }
    let v = tape.eval(&z, &[]).ok()?;
    let norm = v[..k].iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    (norm < 1e-10).then_some(z)
}

/// Gaussian elimination with partial pivoting on a small dense system.
fn solve(a: &mut [f64], b: &mut [f64], m: usize) -> Option<Vec<f64>> {
    for col in 0..m {
        let piv = (col..m).max_by(|x, y| a[x * m + col].abs().total_cmp(&a[y * m + col].abs()))?;
        if a[piv * m + col] == 0.0 {
            return None;
        }
        for j in 0..m {
            a.swap(col * m + j, piv * m + j);
        }
        b.swap(col, piv);
        for row in col + 1..m {
            let f = a[row * m + col] / a[col * m + col];
            for j in col..m {
                a[row * m + j] -= f * a[col * m + j];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; m];
    for row in (0..m).rev() {
        let s: f64 = (row + 1..m).map(|j| a[row * m + j] * x[j]).sum();
        x[row] = (b[row] - s) / a[row * m + row];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::parse_expr;
    use crate::geometry::{Chart, Region};

    fn e(s: &str) -> Expr {
        parse_expr(s).unwrap()
    }

    fn c(x: f64, y: f64) -> Complex64 {
        Complex64::new(x, y)
    }

    fn disk_atlas() -> Atlas {
        Atlas::new(vec![Chart::new(0, vec![Region::Disk { center: c(0.0, 0.0), radius: 2.0 }]).unwrap()]).unwrap()
    }

    #[test]
    fn permutation_signs() {
        let p = permutations(3);
        assert_eq!(p.len(), 6);
        for (perm, s) in p {
            let inv = (0..3).flat_map(|i| (i + 1..3).map(move |j| (i, j))).filter(|&(i, j)| perm[i] > perm[j]).count();
            assert_eq!(s, if inv % 2 == 0 { 1 } else { -1 });
        }
    }

    #[test]
    fn matrix_inverse() {
        let m = ExprMatrix::from_rows(vec![vec![e("z1"), e("1")], vec![e("2"), e("z1^2 + 3")]]).unwrap();
        let id = m.mul(&m.inverse());
        let v = id.eval(&[c(0.7, -0.2)]).unwrap();
        for (k, x) in v.iter().enumerate() {
            let want = if k % 3 == 0 { 1.0 } else { 0.0 };
            assert!((x - c(want, 0.0)).norm() < 1e-13);
        }
    }

    #[test]
    fn frame_z_gives_minus_dz_over_z() {
        let theta = frame_connection(&ExprMatrix::scalar(e("z1")), 0, 1);
        let want = Form::parse("-z1^(-1)*dz1", 0, 1).unwrap();
        let v = Tangent::d_dz(0, 1);
        let p = [c(0.3, 0.4)];
        let x = theta.get(0, 0).evaluate(&p, &[], std::slice::from_ref(&v)).unwrap();
        assert!((x - want.evaluate(&p, &[], &[v]).unwrap()).norm() < 1e-14);
        // and the frame is parallel: gauge by the frame gives zero
        let back = gauge(&theta, &ExprMatrix::scalar(e("z1")));
        assert!(back.max_difference(&FormMatrix::zero(0, 1, 1, 1), &p, &[Tangent::d_dz(0, 1)]).unwrap() < 1e-14);
    }

    #[test]
    fn holomorphic_rank_one_connection_is_flat() {
        let theta = FormMatrix::from_rows(vec![vec![Form::parse("(z1^2 + 3)*dz1", 0, 1).unwrap()]]).unwrap();
        assert!(curvature(&theta).is_zero());
    }

    #[test]
    fn gauge_covariance_of_curvature() {
        let theta = FormMatrix::from_rows(vec![
            vec![Form::parse("conj(z1)*dz1", 0, 1).unwrap(), Form::parse("z1*dzbar1", 0, 1).unwrap()],
            vec![Form::parse("dz1 + z1*dzbar1", 0, 1).unwrap(), Form::parse("z1^2*dz1", 0, 1).unwrap()],
        ])
        .unwrap();
        let g = ExprMatrix::from_rows(vec![vec![e("1 + z1"), e("z1^2")], vec![e("2"), e("3 - z1")]]).unwrap();
        let k = curvature(&theta);
        let k2 = curvature(&gauge(&theta, &g));
        let expect = k.right_mul(&g).left_mul(&g.inverse());
        let vs = [Tangent::real(&[c(1.0, 0.0)]), Tangent::real(&[c(0.0, 1.0)])];
        for p in [c(0.1, 0.2), c(-0.4, 0.3), c(0.5, -0.5)] {
            assert!(k2.max_difference(&expect, &[p], &vs).unwrap() < 1e-8);
        }
    }

    #[test]
    fn bianchi_identity_in_two_variables() {
        let f = |src: &str| Form::parse(src, 0, 2).unwrap();
        let theta = FormMatrix::from_rows(vec![
            vec![f("conj(z2)*dz1 + z1*dzbar2"), f("z1*z2*dzbar1")],
            vec![f("dz2 + conj(z1)*dzbar1"), f("z2^2*dz1 - dzbar2")],
        ])
        .unwrap();
        let k = curvature(&theta);
        let bianchi = k
            .d()
            .try_sub(&k.wedge(&theta).unwrap())
            .unwrap()
            .try_add(&theta.wedge(&k).unwrap())
            .unwrap();
        let zero = FormMatrix::zero(0, 2, 2, 3);
        let vs = [
            Tangent::real(&[c(1.0, 0.0), c(0.0, 0.0)]),
            Tangent::real(&[c(0.0, 1.0), c(1.0, 0.0)]),
            Tangent::real(&[c(0.3, 0.0), c(0.0, 1.0)]),
        ];
        for p in [[c(0.1, 0.2), c(0.3, -0.1)], [c(-0.5, 0.4), c(0.2, 0.7)]] {
            assert!(bianchi.max_difference(&zero, &p, &vs).unwrap() < 1e-8);
        }
    }

    #[test]
    fn singular_locus_finds_roots() {
        let atlas = disk_atlas();
        let s = |expr: &str| SectionTuple::new(1, [(0, vec![vec![e(expr)]])].into_iter().collect()).unwrap();
        let roots = singular_locus(&atlas, &s("z1"), 0, 12).unwrap();
        assert_eq!(roots.len(), 1);
        assert!(roots[0][0].norm() < 1e-10);
        assert!(singular_locus(&atlas, &s("1"), 0, 12).unwrap().is_empty());
        let roots = singular_locus(&atlas, &s("z1*(z1 - 1)"), 0, 12).unwrap();
        assert_eq!(roots.len(), 2);
        assert!((roots[0][0]).norm() < 1e-10 && (roots[1][0] - c(1.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn non_isolated_zeros_are_reported() {
        let d = Region::Disk { center: c(0.0, 0.0), radius: 1.0 };
        let atlas = Atlas::new(vec![Chart::new(0, vec![d.clone(), d]).unwrap()]).unwrap();
        let s = SectionTuple::new(1, [(0, vec![vec![e("z1")]])].into_iter().collect()).unwrap();
        assert!(matches!(singular_locus(&atlas, &s, 0, 6), Err(Error::NonIsolated(_))));
    }

    #[test]
    fn frame_completion() {
        let s = SectionTuple::new(2, [(0, vec![vec![e("1"), e("z1")]])].into_iter().collect()).unwrap();
        let (m, extra) = s.complete(0, &[vec![c(0.0, 0.0)], vec![c(0.5, 0.1)]]).unwrap();
        assert_eq!(extra, vec![1]);
        assert_eq!(m.n(), 2);
        let s = SectionTuple::new(2, [(0, vec![vec![e("0"), e("z1")]])].into_iter().collect()).unwrap();
        assert!(s.complete(0, &[vec![c(0.0, 0.0)]]).is_err());
    }
}
