//! The two-set Čech–de Rham complex.
//!
//! A covering here is `{V_outer, V_inner}`, where `V_inner` is a union of
//! disjoint disks. A cochain stores its `V_outer` component chart by chart
//! and its `V_inner` and overlap components disk by disk, on the chart of
//! each disk. The differential is
//! `D(ω₀, ω₁, ω₀₁) = (dω₀, dω₁, ω₁ − ω₀ − dω₀₁)`, and the collating map
//! `ρ₀ω₀ + ρ₁ω₁ − dρ₀∧ω₀₁` is a chain map for it.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::fields::Expr;
use crate::forms::{ChartId, CompiledForm, Form, Tangent};
use crate::geometry::{Atlas, Covering, Honeycomb, PartitionOfUnity};
use crate::mesh::clip::{clip_simplex, Piece, Side};
use crate::mesh::{integrate_param, Chain, Integral, DEFAULT_BUDGET};
use crate::Error;

/// A form given on each chart.
pub type ChartForms = BTreeMap<ChartId, Form>;

#[derive(Clone, Debug)]
pub struct CechCochain {
    pub degree: usize,
    /// Index (0 or 1) of the set made of disks.
    pub inner: usize,
    pub outer: ChartForms,
    pub disks: Vec<Form>,
    pub overlap: Vec<Form>,
}

impl CechCochain {
    pub fn new(degree: usize, cov: &Covering, outer: ChartForms, disks: Vec<Form>, overlap: Vec<Form>) -> Result<CechCochain, Error> {
        if disks.len() != cov.disks.len() || overlap.len() != cov.disks.len() {
            return Err(Error::Dimension(format!("cochain needs one form per covering disk ({})", cov.disks.len())));
        }
        for (c, f) in &outer {
            if f.chart() != *c || f.degree() != degree {
                return Err(Error::Dimension(format!("outer component on chart {c} must be a {degree}-form")));
            }
        }
        for (nu, d) in cov.disks.iter().enumerate() {
            if disks[nu].chart() != d.chart || overlap[nu].chart() != d.chart {
                return Err(Error::ChartMismatch(d.chart, disks[nu].chart()));
            }
            if disks[nu].degree() != degree || (degree > 0 && overlap[nu].degree() != degree - 1) {
                return Err(Error::Dimension(format!("cochain components around disk {nu} have the wrong degree")));
            }
        }
        Ok(CechCochain {
            degree,
            inner: cov.inner,
            outer,
            disks,
            overlap,
        })
    }

    pub fn zero(degree: usize, atlas: &Atlas, cov: &Covering) -> CechCochain {
        let outer = atlas.charts.iter().map(|c| (c.id, Form::zero(c.id, c.dim, degree))).collect();
        let disk_zero = |deg: usize| {
            cov.disks
                .iter()
                .map(|d| Form::zero(d.chart, d.center.len(), deg))
                .collect::<Vec<_>>()
        };
        CechCochain {
            degree,
            inner: cov.inner,
            outer,
            disks: disk_zero(degree),
            overlap: disk_zero(degree.saturating_sub(1)),
        }
    }

    /// `P(ω) = (ω|V₀, ω|V₁, 0)`.
    pub fn restrict_global(global: &ChartForms, cov: &Covering) -> Result<CechCochain, Error> {
        let degree = global
            .values()
            .next()
            .map(Form::degree)
            .ok_or_else(|| Error::Missing("global form has no charts".into()))?;
        let mut disks = Vec::new();
        let mut overlap = Vec::new();
        for d in &cov.disks {
            let f = global
                .get(&d.chart)
                .ok_or_else(|| Error::Missing(format!("global form on chart {}", d.chart)))?;
            disks.push(f.clone());
            overlap.push(Form::zero(d.chart, f.dim(), degree.saturating_sub(1)));
        }
        CechCochain::new(degree, cov, global.clone(), disks, overlap)
    }

    /// `(ω₀, ω₁)` restricted to disk `nu`, on the disk's chart.
    fn pair_on_disk(&self, nu: usize) -> Result<(Form, Form), Error> {
        let chart = self.disks[nu].chart();
        let outer = self
            .outer
            .get(&chart)
            .ok_or_else(|| Error::Missing(format!("outer component on chart {chart}")))?
            .clone();
        let inner = self.disks[nu].clone();
        Ok(if self.inner == 1 { (outer, inner) } else { (inner, outer) })
    }

    /// `D = δ + (−1)^deg d` in the convention `(dω₀, dω₁, ω₁ − ω₀ − dω₀₁)`.
    pub fn apply_d(&self) -> Result<CechCochain, Error> {
        let outer = self.outer.iter().map(|(c, f)| (*c, f.d())).collect();
        let disks = self.disks.iter().map(Form::d).collect();
        let mut overlap = Vec::new();
        for nu in 0..self.disks.len() {
            let (w0, w1) = self.pair_on_disk(nu)?;
            overlap.push(w1.try_sub(&w0)?.try_sub(&self.overlap[nu].d())?);
        }
        Ok(CechCochain {
            degree: self.degree + 1,
            inner: self.inner,
            outer,
            disks,
            overlap,
        })
    }

    /// `φ(c) = ρ₀ω₀ + ρ₁ω₁ − dρ₀∧ω₀₁`, chart by chart.
    ///
    /// Disk components are carried to other charts through the transition
    /// maps; they only enter multiplied by fields supported near the disk.
    pub fn collate(&self, atlas: &Atlas, cov: &Covering, pou: &PartitionOfUnity) -> Result<ChartForms, Error> {
        let outer_index = 1 - self.inner;
        // −dρ₀ = Σ_ν dρ_ν when the disks form V₁, and −Σ_ν dρ_ν when they form V₀
        let overlap_sign = if self.inner == 1 { Expr::one() } else { Expr::int(-1) };
        let mut out = BTreeMap::new();
        for chart in &atlas.charts {
            let a = chart.id;
            let mut acc = Form::zero(a, chart.dim, self.degree);
            if let Some(w) = self.outer.get(&a) {
                acc = acc.try_add(&w.scale(&pou.rho(a, outer_index)))?;
            }
            for (nu, d) in cov.disks.iter().enumerate() {
                let rho = pou.rho_disk(a, nu);
                if rho.is_zero() {
                    continue;
                }
                let Some(map) = atlas.transition(a, d.chart) else { continue };
                let w1 = self.disks[nu].pullback(&map)?;
                acc = acc.try_add(&w1.scale(&rho))?;
                if self.degree > 0 {
                    let w01 = self.overlap[nu].pullback(&map)?;
                    let drho = Form::scalar(a, chart.dim, rho).d();
                    acc = acc.try_add(&drho.wedge(&w01)?.scale(&overlap_sign))?;
                }
            }
            out.insert(a, acc);
        }
        Ok(out)
    }

    /// Largest component value at the given points of each chart, evaluated
    /// on real coordinate vectors; the zero test used for `D∘D` and `D(c) = 0`.
    pub fn max_sampled(&self, points: &BTreeMap<ChartId, Vec<Vec<Complex64>>>) -> Result<f64, Error> {
        let mut worst: f64 = 0.0;
        let mut probe = |f: &Form, pts: &[Vec<Complex64>]| -> Result<(), Error> {
            for p in pts {
                worst = worst.max(sample_norm(f, p)?);
            }
            Ok(())
        };
        for (c, f) in &self.outer {
            if let Some(pts) = points.get(c) {
                probe(f, pts)?;
            }
        }
        for f in self.disks.iter().chain(&self.overlap) {
            if let Some(pts) = points.get(&f.chart()) {
                probe(f, pts)?;
            }
        }
        Ok(worst)
    }

    /// `∫_{Δ∩R₀} ω₀ + ∫_{Δ∩R₁} ω₁ − ∫_{Δ∩R_{(1,0)}} ω₀₁` over a 2-chain on
    /// one-dimensional charts.
    ///
    /// Every simplex meeting honeycomb disk `ν` must live on that disk's
    /// chart; a simplex may meet at most one disk.
    pub fn honeycomb_integrate(&self, chain: &Chain, h: &Honeycomb, tol: f64) -> Result<Integral, Error> {
        if chain.dim() != Some(self.degree) {
            return Err(Error::Dimension(format!(
                "honeycomb integration of a {}-cochain over a chain of dimension {:?}",
                self.degree,
                chain.dim()
            )));
        }
        if self.degree != 2 {
            return Err(Error::Dimension("honeycomb integration is implemented for 2-chains".into()));
        }
        if h.disks.len() != self.disks.len() {
            return Err(Error::Dimension("honeycomb and cochain have different numbers of disks".into()));
        }
        let mut compiled_outer: BTreeMap<ChartId, CompiledForm> = BTreeMap::new();
        let compiled_disks: Vec<CompiledForm> = self.disks.iter().map(Form::compile).collect();
        let compiled_overlap: Vec<CompiledForm> = self.overlap.iter().map(Form::compile).collect();
        let interface = -(h.interface_sign() as f64);
        let per = tol / chain.len().max(1) as f64;
        let mut total = Integral::zero();
        for (idx, (w, s)) in chain.terms.iter().enumerate() {
            let mut hit: Option<(usize, Vec<(Side, Piece)>)> = None;
            for (nu, d) in h.disks.iter().enumerate() {
                if d.chart != s.chart {
                    continue;
                }
                let pieces = clip_simplex(s, d.center, d.radius)?;
                if matches!(pieces[..], [(Side::Outside, Piece::Whole(_))]) || pieces.is_empty() {
                    continue;
                }
                if hit.is_some() {
                    return Err(Error::Clipping {
                        simplex: format!("#{idx} {:?}", s.vertices),
                        msg: "simplex meets more than one honeycomb disk".into(),
                    });
                }
                hit = Some((nu, pieces));
            }
            let mut outer_form = || -> Result<CompiledForm, Error> {
                if let Some(f) = compiled_outer.get(&s.chart) {
                    return Ok(f.clone());
                }
                let f = self
                    .outer
                    .get(&s.chart)
                    .ok_or_else(|| Error::Missing(format!("outer component on chart {}", s.chart)))?
                    .compile();
                compiled_outer.insert(s.chart, f.clone());
                Ok(f)
            };
            let mut part = Integral::zero();
            match hit {
                None => {
                    let f = outer_form()?;
                    part = integrate_param(&f, s, s.sign as f64, per, DEFAULT_BUDGET)?;
                }
                Some((nu, pieces)) => {
                    let f_out = outer_form()?;
                    let n = pieces.len().max(1) as f64;
                    for (side, piece) in pieces {
                        let f = match side {
                            Side::Inside => &compiled_disks[nu],
                            Side::Outside => &f_out,
                        };
                        part = part.add(piece.integrate(f, per / (2.0 * n))?);
                        if let (Side::Inside, Piece::Polar(p)) = (side, &piece) {
                            if let Some(arc) = p.outer_arc() {
                                part = part.add(arc.integrate(&compiled_overlap[nu], per / (2.0 * n))?.scale(interface));
                            }
                        }
                    }
                }
            }
            total = total.add(part.scale(*w as f64));
        }
        Ok(total)
    }
}

fn sample_norm(f: &Form, p: &[Complex64]) -> Result<f64, Error> {
    let n = f.dim();
    let k = f.degree();
    if k == 0 {
        return Ok(f.evaluate(p, &[], &[])?.norm());
    }
    // all increasing k-tuples of real coordinate directions
    let dirs: Vec<Tangent> = (0..2 * n)
        .map(|j| {
            let mut v = vec![Complex64::new(0.0, 0.0); n];
            v[j / 2] = if j % 2 == 0 { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 1.0) };
            Tangent::real(&v)
        })
        .collect();
    let mut worst: f64 = 0.0;
    let mut idx: Vec<usize> = (0..k).collect();
    if k > 2 * n {
        return Ok(0.0);
    }
    loop {
        let vs: Vec<Tangent> = idx.iter().map(|i| dirs[*i].clone()).collect();
        worst = worst.max(f.evaluate(p, &[], &vs)?.norm());
        // next combination
        let mut i = k;
        while i > 0 && idx[i - 1] == 2 * n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
    Ok(worst)
}

/// Largest difference of two chart-wise forms at sample points.
pub fn max_difference(a: &ChartForms, b: &ChartForms, points: &BTreeMap<ChartId, Vec<Vec<Complex64>>>) -> Result<f64, Error> {
    let mut worst: f64 = 0.0;
    for (c, pts) in points {
        let (Some(x), Some(y)) = (a.get(c), b.get(c)) else { continue };
        let diff = x.try_sub(y)?;
        for p in pts {
            worst = worst.max(sample_norm(&diff, p)?);
        }
    }
    Ok(worst)
}

/// `∫_C ω` for a chain whose simplices may sit on several charts.
pub fn integrate_chart_forms(chain: &Chain, forms: &ChartForms, tol: f64) -> Result<Integral, Error> {
    let per = tol / chain.len().max(1) as f64;
    let mut compiled: BTreeMap<ChartId, CompiledForm> = BTreeMap::new();
    let mut total = Integral::zero();
    for (w, s) in &chain.terms {
        if !compiled.contains_key(&s.chart) {
            let f = forms
                .get(&s.chart)
                .ok_or_else(|| Error::Missing(format!("form on chart {}", s.chart)))?;
            compiled.insert(s.chart, f.compile());
        }
        let r = integrate_param(&compiled[&s.chart], s, s.sign as f64, per, DEFAULT_BUDGET)?;
        total = total.add(r.scale(*w as f64));
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_partition_of_unity, honeycomb_from_marks, BumpProfile, Chart, CoverDisk, Region};
    use crate::mesh::Simplex;

    fn c(x: f64, y: f64) -> Complex64 {
        Complex64::new(x, y)
    }

    fn setup() -> (Atlas, Covering, PartitionOfUnity) {
        let atlas = Atlas::new(vec![Chart::new(0, vec![Region::Plane]).unwrap()]).unwrap();
        let cov = Covering::new(
            &atlas,
            vec![CoverDisk { chart: 0, center: vec![c(0.1, 0.0)], r_in: 0.3, r_out: 1.2 }],
            1,
            vec![],
        )
        .unwrap();
        let pou = build_partition_of_unity(&atlas, &cov, BumpProfile::Quadratic).unwrap();
        (atlas, cov, pou)
    }

    fn square() -> Chain {
        let v = [c(-2.0, -2.0), c(2.0, -2.0), c(2.0, 2.0), c(-2.0, 2.0)];
        let o = c(0.0, 0.0);
        Chain::from_simplices((0..4).map(|k| Simplex::planar(0, &[o, v[k], v[(k + 1) % 4]])))
    }

    fn f(src: &str) -> Form {
        Form::parse(src, 0, 1).unwrap()
    }

    #[test]
    fn d_squared_vanishes() {
        let (_, cov, _) = setup();
        let cch = CechCochain::new(
            1,
            &cov,
            [(0, f("z1*conj(z1)*dz1 + z1^3*dzbar1"))].into_iter().collect(),
            vec![f("conj(z1)^2*dzbar1")],
            vec![f("z1*conj(z1)^2")],
        )
        .unwrap();
        let dd = cch.apply_d().unwrap().apply_d().unwrap();
        let pts = [(0, vec![vec![c(0.5, 0.2)], vec![c(-0.3, 0.9)]])].into_iter().collect();
        assert!(dd.max_sampled(&pts).unwrap() < 1e-12);
    }

    #[test]
    fn collate_after_restrict_is_identity() {
        let (atlas, cov, pou) = setup();
        let w: ChartForms = [(0, f("(z1^2 + conj(z1))*dz1 - exp(z1)*dzbar1"))].into_iter().collect();
        let back = CechCochain::restrict_global(&w, &cov).unwrap().collate(&atlas, &cov, &pou).unwrap();
        let pts = [(0, vec![vec![c(0.5, 0.2)], vec![c(0.1, 0.0)], vec![c(1.0, -0.3)]])].into_iter().collect();
        assert!(max_difference(&w, &back, &pts).unwrap() < 1e-12);
    }

    #[test]
    fn honeycomb_matches_collated_integral() {
        let (atlas, cov, pou) = setup();
        let h = honeycomb_from_marks(&atlas, &cov, &[(0, c(0.1, 0.0))], 0.7).unwrap();
        let w0 = Form::parse("(1 + z1*conj(z1))*dz1^dzbar1", 0, 1).unwrap();
        let w01 = f("z1^2*conj(z1)*dz1 + dzbar1");
        let w1 = w0.try_add(&w01.d()).unwrap();
        let cch = CechCochain::new(2, &cov, [(0, w0)].into_iter().collect(), vec![w1], vec![w01]).unwrap();
        let closed = cch.apply_d().unwrap();
        let pts = [(0, vec![vec![c(0.5, 0.2)]])].into_iter().collect();
        assert!(closed.max_sampled(&pts).unwrap() < 1e-12);
        let chain = square();
        let hc = cch.honeycomb_integrate(&chain, &h, 1e-10).unwrap().value;
        let direct = integrate_chart_forms(&chain, &cch.collate(&atlas, &cov, &pou).unwrap(), 1e-10).unwrap().value;
        assert!((hc - direct).norm() < 2e-9, "{hc} vs {direct}");
    }
}
