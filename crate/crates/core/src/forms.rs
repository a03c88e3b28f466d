//! Exterior forms with symbolic coefficients.
//!
//! A [`Form`] on an `n`-dimensional chart is a linear combination of basis
//! monomials `dz_I ∧ dz̄_J ∧ dt_K`, stored as bit masks. Bits `0..n` are the
//! `dz_i`, bits `n..2n` the `dz̄_i`, and bits `2n..` the differentials of
//! the real parameters `t_k`. The basis order is the bit order, so the
//! canonical monomial is the one with increasing bits.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use crate::fields::{parse_form_terms, DVar, DiffAtom, Expr, Slot, Substitution, Tape};
use crate::Error;

/// Index of a chart inside a scene.
pub type ChartId = usize;

/// A basis covector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Covector {
    Dz(usize),
    Dzbar(usize),
    Dt(usize),
}

impl fmt::Display for Covector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Covector::Dz(i) => write!(f, "dz{}", i + 1),
            Covector::Dzbar(i) => write!(f, "dzbar{}", i + 1),
            Covector::Dt(i) => write!(f, "dt{}", i + 1),
        }
    }
}

fn bit_of(c: Covector, n: usize) -> u32 {
    match c {
        Covector::Dz(i) => i as u32,
        Covector::Dzbar(i) => (n + i) as u32,
        Covector::Dt(k) => (2 * n + k) as u32,
    }
}

fn covector_of(bit: u32, n: usize) -> Covector {
    let b = bit as usize;
    if b < n {
        Covector::Dz(b)
    } else if b < 2 * n {
        Covector::Dzbar(b - n)
    } else {
        Covector::Dt(b - 2 * n)
    }
}

fn bits(mask: u64) -> impl Iterator<Item = u32> {
    let mut m = mask;
    std::iter::from_fn(move || {
        if m == 0 {
            None
        } else {
            let b = m.trailing_zeros();
            m &= m - 1;
            Some(b)
        }
    })
}

/// Sign of `e_a ∧ e_b` relative to the sorted monomial, or `None` if they share a covector.
fn wedge_sign(a: u64, b: u64) -> Option<i64> {
    if a & b != 0 {
        return None;
    }
    let mut inversions = 0u32;
    for y in bits(b) {
        inversions += (a >> y).count_ones();
    }
    Some(if inversions % 2 == 0 { 1 } else { -1 })
}

/// A tangent vector, complexified: `dz_i(v) = hol[i]`, `dz̄_i(v) = anti[i]`, `dt_k(v) = t[k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tangent {
    pub hol: Vec<Complex64>,
    pub anti: Vec<Complex64>,
    pub t: Vec<f64>,
}

impl Tangent {
    /// A real tangent vector of `ℂⁿ` given by its complex components.
    pub fn real(v: &[Complex64]) -> Tangent {
        Tangent {
            hol: v.to_vec(),
            anti: v.iter().map(|c| c.conj()).collect(),
            t: Vec::new(),
        }
    }

    /// A real tangent vector of `ℂⁿ × ℝᵏ`.
    pub fn real_with_params(v: &[Complex64], t: &[f64]) -> Tangent {
        let mut out = Tangent::real(v);
        out.t = t.to_vec();
        out
    }

    /// `∂/∂z_i` in dimension `n`.
    pub fn d_dz(i: usize, n: usize) -> Tangent {
        let mut hol = vec![Complex64::new(0.0, 0.0); n];
        hol[i] = Complex64::new(1.0, 0.0);
        Tangent {
            hol,
            anti: vec![Complex64::new(0.0, 0.0); n],
            t: Vec::new(),
        }
    }

    /// `∂/∂z̄_i` in dimension `n`.
    pub fn d_dzbar(i: usize, n: usize) -> Tangent {
        let mut anti = vec![Complex64::new(0.0, 0.0); n];
        anti[i] = Complex64::new(1.0, 0.0);
        Tangent {
            hol: vec![Complex64::new(0.0, 0.0); n],
            anti,
            t: Vec::new(),
        }
    }

    fn pair(&self, c: Covector) -> Complex64 {
        match c {
            Covector::Dz(i) => self.hol.get(i).copied().unwrap_or_default(),
            Covector::Dzbar(i) => self.anti.get(i).copied().unwrap_or_default(),
            Covector::Dt(k) => Complex64::new(self.t.get(k).copied().unwrap_or(0.0), 0.0),
        }
    }
}

/// Determinant by Gaussian elimination with partial pivoting.
pub(crate) fn det(m: &mut [Complex64], k: usize) -> Complex64 {
    match k {
        0 => return Complex64::new(1.0, 0.0),
        1 => return m[0],
        2 => return m[0] * m[3] - m[1] * m[2],
        _ => {}
    }
    let mut acc = Complex64::new(1.0, 0.0);
    for col in 0..k {
        let mut piv = col;
        for r in col + 1..k {
            if m[r * k + col].norm() > m[piv * k + col].norm() {
                piv = r;
            }
        }
        if m[piv * k + col].norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if piv != col {
            for c in 0..k {
                m.swap(piv * k + c, col * k + c);
            }
            acc = -acc;
        }
        let p = m[col * k + col];
        acc *= p;
        for r in col + 1..k {
            let f = m[r * k + col] / p;
            if f.norm() != 0.0 {
                for c in col..k {
                    let v = m[col * k + c];
                    m[r * k + c] -= f * v;
                }
            }
        }
    }
    acc
}

/// A homogeneous differential form on one chart.
#[derive(Clone, Debug, PartialEq)]
pub struct Form {
    chart: ChartId,
    dim: usize,
    degree: usize,
    terms: BTreeMap<u64, Expr>,
}

impl Form {
    pub fn zero(chart: ChartId, dim: usize, degree: usize) -> Form {
        Form {
            chart,
            dim,
            degree,
            terms: BTreeMap::new(),
        }
    }

    pub fn scalar(chart: ChartId, dim: usize, f: Expr) -> Form {
        let mut out = Form::zero(chart, dim, 0);
        if !f.is_zero() {
            out.terms.insert(0, f);
        }
        out
    }

    /// `coeff · c_1 ∧ … ∧ c_k`, covectors in any order.
    pub fn monomial(chart: ChartId, dim: usize, coeff: Expr, covectors: &[Covector]) -> Form {
        let mut mask = 0u64;
        let mut sign = 1i64;
        for &c in covectors {
            let b = 1u64 << bit_of(c, dim);
            match wedge_sign(mask, b) {
                Some(s) => {
                    sign *= s;
                    mask |= b;
                }
                None => return Form::zero(chart, dim, covectors.len()),
            }
        }
        let mut out = Form::zero(chart, dim, covectors.len());
        let c = if sign < 0 { -coeff } else { coeff };
        if !c.is_zero() {
            out.terms.insert(mask, c);
        }
        out
    }

    pub fn dz(chart: ChartId, dim: usize, i: usize) -> Form {
        Form::monomial(chart, dim, Expr::one(), &[Covector::Dz(i)])
    }

    pub fn dzbar(chart: ChartId, dim: usize, i: usize) -> Form {
        Form::monomial(chart, dim, Expr::one(), &[Covector::Dzbar(i)])
    }

    pub fn dt(chart: ChartId, dim: usize, k: usize) -> Form {
        Form::monomial(chart, dim, Expr::one(), &[Covector::Dt(k)])
    }

    /// Parses `coeff * dz1^dzbar2 + …`.
    pub fn parse(src: &str, chart: ChartId, dim: usize) -> Result<Form, Error> {
        let terms = parse_form_terms(src)?;
        let degree = terms
            .iter()
            .filter(|t| !t.coeff.is_zero())
            .map(|t| t.atoms.len())
            .max()
            .unwrap_or(0);
        let mut out = Form::zero(chart, dim, degree);
        for t in terms {
            if t.coeff.is_zero() {
                continue;
            }
            if t.atoms.len() != degree {
                return Err(Error::Parse {
                    pos: 0,
                    msg: format!("form '{src}' mixes degrees {} and {degree}", t.atoms.len()),
                });
            }
            let covs: Vec<Covector> = t
                .atoms
                .iter()
                .map(|a| match *a {
                    DiffAtom::Dz(i) => Covector::Dz(i),
                    DiffAtom::Dzbar(i) => Covector::Dzbar(i),
                    DiffAtom::Dt(k) => Covector::Dt(k),
                })
                .collect();
            for c in &covs {
                if let Covector::Dz(i) | Covector::Dzbar(i) = c {
                    if *i >= dim {
                        return Err(Error::Dimension(format!(
                            "form '{src}' uses dz{} on a chart of dimension {dim}",
                            i + 1
                        )));
                    }
                }
            }
            let e = t.coeff.var_extent();
            if e > dim {
                return Err(Error::Dimension(format!(
                    "form '{src}' uses z{e} on a chart of dimension {dim}"
                )));
            }
            out.add_assign(&Form::monomial(chart, dim, t.coeff, &covs));
        }
        Ok(out)
    }

    pub fn chart(&self) -> ChartId {
        self.chart
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    /// The terms as `(coefficient, covectors in canonical order)`.
    pub fn terms(&self) -> impl Iterator<Item = (&Expr, Vec<Covector>)> + '_ {
        self.terms
            .iter()
            .map(move |(m, e)| (e, bits(*m).map(|b| covector_of(b, self.dim)).collect()))
    }

    /// Coefficient of a canonical monomial.
    pub fn coefficient(&self, covectors: &[Covector]) -> Expr {
        let probe = Form::monomial(self.chart, self.dim, Expr::one(), covectors);
        match probe.terms.iter().next() {
            Some((m, s)) => match self.terms.get(m) {
                Some(c) => c * s,
                None => Expr::zero(),
            },
            None => Expr::zero(),
        }
    }

    /// The degree-0 coefficient.
    pub fn as_scalar(&self) -> Option<Expr> {
        if self.degree == 0 {
            Some(self.terms.get(&0).cloned().unwrap_or_else(Expr::zero))
        } else {
            None
        }
    }

    /// Same form re-labelled as living on another chart of the same dimension.
    pub fn on_chart(mut self, chart: ChartId) -> Form {
        self.chart = chart;
        self
    }

    fn check_same(&self, o: &Form) -> Result<(), Error> {
        if self.chart != o.chart {
            return Err(Error::ChartMismatch(self.chart, o.chart));
        }
        if self.dim != o.dim {
            return Err(Error::Dimension(format!("chart dimensions {} and {}", self.dim, o.dim)));
        }
        Ok(())
    }

    fn insert_add(&mut self, mask: u64, c: Expr) {
        match self.terms.get_mut(&mask) {
            Some(acc) => {
                let s = &*acc + &c;
                if s.is_zero() {
                    self.terms.remove(&mask);
                } else {
                    *acc = s;
                }
            }
            None => {
                if !c.is_zero() {
                    self.terms.insert(mask, c);
                }
            }
        }
    }

    fn add_assign(&mut self, o: &Form) {
        if o.is_zero() {
            return;
        }
        if self.is_zero() {
            self.degree = o.degree;
        }
        assert_eq!(self.degree, o.degree, "adding forms of different degree");
        for (m, c) in &o.terms {
            self.insert_add(*m, c.clone());
        }
    }

    /// Sum of two forms of the same degree on the same chart.
    pub fn try_add(&self, o: &Form) -> Result<Form, Error> {
        self.check_same(o)?;
        if !self.is_zero() && !o.is_zero() && self.degree != o.degree {
            return Err(Error::Dimension(format!(
                "adding forms of degree {} and {}",
                self.degree, o.degree
            )));
        }
        let mut out = self.clone();
        out.add_assign(o);
        Ok(out)
    }

    pub fn try_sub(&self, o: &Form) -> Result<Form, Error> {
        self.try_add(&o.neg())
    }

    pub fn neg(&self) -> Form {
        self.map_coeffs(|c| -c)
    }

    /// Multiplies every coefficient by a scalar field.
    pub fn scale(&self, f: &Expr) -> Form {
        self.map_coeffs(|c| c * f)
    }

    /// Applies `g` to every coefficient, dropping those that become zero.
    pub fn map_coeffs(&self, mut g: impl FnMut(&Expr) -> Expr) -> Form {
        let mut out = Form::zero(self.chart, self.dim, self.degree);
        for (m, c) in &self.terms {
            let v = g(c);
            if !v.is_zero() {
                out.terms.insert(*m, v);
            }
        }
        out
    }

    /// Exterior product.
    pub fn wedge(&self, o: &Form) -> Result<Form, Error> {
        self.check_same(o)?;
        let mut out = Form::zero(self.chart, self.dim, self.degree + o.degree);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &o.terms {
                if let Some(s) = wedge_sign(*ma, *mb) {
                    let c = ca * cb;
                    out.insert_add(ma | mb, if s < 0 { -c } else { c });
                }
            }
        }
        Ok(out)
    }

    /// Exterior derivative `d = Σ ∂/∂z_i dz_i + ∂/∂z̄_i dz̄_i + ∂/∂t_k dt_k`.
    pub fn d(&self) -> Form {
        let n = self.dim;
        let mut k = 0;
        for (m, c) in &self.terms {
            k = k.max(c.param_extent());
            let top = 64 - m.leading_zeros() as usize;
            k = k.max(top.saturating_sub(2 * n));
        }
        let mut out = Form::zero(self.chart, n, self.degree + 1);
        for (m, c) in &self.terms {
            let vars = (0..n)
                .map(|i| (DVar::Z(i), Covector::Dz(i)))
                .chain((0..n).map(|i| (DVar::Zbar(i), Covector::Dzbar(i))))
                .chain((0..k).map(|j| (DVar::T(j), Covector::Dt(j))));
            for (v, cov) in vars {
                let b = 1u64 << bit_of(cov, n);
                let Some(s) = wedge_sign(b, *m) else { continue };
                let dc = c.diff(v);
                if dc.is_zero() {
                    continue;
                }
                out.insert_add(b | m, if s < 0 { -dc } else { dc });
            }
        }
        out
    }

    /// Writes the form as `dt_k ∧ α + β` and returns `(α, β)`.
    pub fn split_dt(&self, k: usize) -> (Form, Form) {
        let b = 1u64 << bit_of(Covector::Dt(k), self.dim);
        let mut alpha = Form::zero(self.chart, self.dim, self.degree.saturating_sub(1));
        let mut beta = Form::zero(self.chart, self.dim, self.degree);
        for (m, c) in &self.terms {
            if m & b != 0 {
                let rest = m & !b;
                let s = wedge_sign(b, rest).expect("disjoint");
                alpha.insert_add(rest, if s < 0 { -c.clone() } else { c.clone() });
            } else {
                beta.insert_add(*m, c.clone());
            }
        }
        (alpha, beta)
    }

    /// Expands every coefficient; see [`Expr::expand`].
    pub fn expand(&self) -> Form {
        self.map_coeffs(|c| c.expand())
    }

    /// Substitutes coordinates and parameters in the coefficients only.
    pub fn substitute_coeffs(&self, sub: &Substitution) -> Form {
        self.map_coeffs(|c| c.substitute(sub))
    }

    /// True when every coefficient is `∂/∂z̄`-free and no `dz̄` appears.
    pub fn is_holomorphic(&self) -> bool {
        self.terms.iter().all(|(m, c)| {
            bits(*m).all(|b| !matches!(covector_of(b, self.dim), Covector::Dzbar(_)))
                && c.is_structurally_holomorphic(self.dim)
        })
    }

    /// Complex conjugate form.
    pub fn conj(&self) -> Form {
        let n = self.dim;
        let mut out = Form::zero(self.chart, n, self.degree);
        for (m, c) in &self.terms {
            let covs: Vec<Covector> = bits(*m)
                .map(|b| match covector_of(b, n) {
                    Covector::Dz(i) => Covector::Dzbar(i),
                    Covector::Dzbar(i) => Covector::Dz(i),
                    t => t,
                })
                .collect();
            out.add_assign(&Form::monomial(self.chart, n, c.conj(), &covs));
        }
        out
    }

    /// Fully antisymmetric multilinear value at a point.
    pub fn evaluate(&self, z: &[Complex64], t: &[f64], vectors: &[Tangent]) -> Result<Complex64, Error> {
        self.compile().evaluate(z, t, vectors, &mut Vec::new())
    }

    pub fn compile(&self) -> CompiledForm {
        let exprs: Vec<Expr> = self.terms.values().cloned().collect();
        CompiledForm {
            dim: self.dim,
            degree: self.degree,
            masks: self.terms.keys().map(|m| bits(*m).map(|b| covector_of(b, self.dim)).collect()).collect(),
            tape: Tape::compile(&exprs),
        }
    }

    /// Pulls back through `map`, whose target chart must be this form's chart.
    pub fn pullback(&self, map: &ChartMap) -> Result<Form, Error> {
        if map.target != self.chart {
            return Err(Error::ChartMismatch(map.target, self.chart));
        }
        if map.components.len() != self.dim {
            return Err(Error::Dimension(format!(
                "map has {} components, form lives in dimension {}",
                map.components.len(),
                self.dim
            )));
        }
        let (src, m) = (map.source, map.source_dim);
        let sub = Substitution::vars(map.components.clone());
        let one_forms: Vec<Form> = (0..self.dim)
            .map(|j| {
                let f = &map.components[j];
                let mut w = Form::zero(src, m, 1);
                for i in 0..m {
                    w.add_assign(&Form::dz(src, m, i).scale(&f.diff(DVar::Z(i))));
                    w.add_assign(&Form::dzbar(src, m, i).scale(&f.diff(DVar::Zbar(i))));
                }
                w
            })
            .collect();
        let conj_forms: Vec<Form> = one_forms.iter().map(|w| w.conj()).collect();
        let mut out = Form::zero(src, m, self.degree);
        for (mask, c) in &self.terms {
            let mut acc = Form::scalar(src, m, c.substitute(&sub));
            for b in bits(*mask) {
                let factor = match covector_of(b, self.dim) {
                    Covector::Dz(j) => one_forms[j].clone(),
                    Covector::Dzbar(j) => conj_forms[j].clone(),
                    Covector::Dt(k) => Form::dt(src, m, k),
                };
                acc = acc.wedge(&factor)?;
            }
            out.add_assign(&acc);
        }
        out.degree = self.degree;
        Ok(out)
    }
}

/// A form compiled for repeated numerical evaluation.
#[derive(Clone, Debug)]
pub struct CompiledForm {
    dim: usize,
    degree: usize,
    masks: Vec<Vec<Covector>>,
    tape: Tape,
}

impl CompiledForm {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Value on real tangent vectors given by their complex components.
    pub fn evaluate_real(
        &self,
        z: &[Complex64],
        vectors: &[Vec<Complex64>],
        scratch: &mut Vec<Slot>,
    ) -> Result<Complex64, Error> {
        if vectors.len() != self.degree {
            return Err(Error::Dimension(format!(
                "{} vectors supplied to a {}-form",
                vectors.len(),
                self.degree
            )));
        }
        let mut coeffs = [Complex64::new(0.0, 0.0); 16];
        let mut heap;
        let coeffs: &mut [Complex64] = if self.masks.len() <= 16 {
            &mut coeffs[..self.masks.len()]
        } else {
            heap = vec![Complex64::new(0.0, 0.0); self.masks.len()];
            &mut heap
        };
        self.tape.eval_into(z, &[], scratch, coeffs)?;
        let k = self.degree;
        let mut acc = Complex64::new(0.0, 0.0);
        let mut mat = [Complex64::new(0.0, 0.0); 36];
        for (covs, c) in self.masks.iter().zip(coeffs.iter()) {
            if c.re == 0.0 && c.im == 0.0 {
                continue;
            }
            for (r, cov) in covs.iter().enumerate() {
                for (s, v) in vectors.iter().enumerate() {
                    mat[r * k + s] = match *cov {
                        Covector::Dz(i) => v[i],
                        Covector::Dzbar(i) => v[i].conj(),
                        Covector::Dt(_) => Complex64::new(0.0, 0.0),
                    };
                }
            }
            acc += c * det(&mut mat[..k * k], k);
        }
        Ok(acc)
    }

    pub fn evaluate(
        &self,
        z: &[Complex64],
        t: &[f64],
        vectors: &[Tangent],
        scratch: &mut Vec<Slot>,
    ) -> Result<Complex64, Error> {
        if vectors.len() != self.degree {
            return Err(Error::Dimension(format!(
                "{} vectors supplied to a {}-form",
                vectors.len(),
                self.degree
            )));
        }
        let mut coeffs = vec![Complex64::new(0.0, 0.0); self.masks.len()];
        self.tape.eval_into(z, t, scratch, &mut coeffs)?;
        let k = self.degree;
        let mut acc = Complex64::new(0.0, 0.0);
        let mut mat = Vec::with_capacity(k * k);
        for (covs, c) in self.masks.iter().zip(&coeffs) {
            if c.re == 0.0 && c.im == 0.0 {
                continue;
            }
            mat.clear();
            for cov in covs {
                for v in vectors {
                    mat.push(v.pair(*cov));
                }
            }
            acc += c * det(&mut mat, k);
        }
        Ok(acc)
    }
}

/// A smooth map between charts given by component fields in the source coordinates.
#[derive(Clone, Debug)]
pub struct ChartMap {
    pub source: ChartId,
    pub source_dim: usize,
    pub target: ChartId,
    pub components: Vec<Expr>,
}

impl ChartMap {
    pub fn new(source: ChartId, source_dim: usize, target: ChartId, components: Vec<Expr>) -> ChartMap {
        ChartMap {
            source,
            source_dim,
            target,
            components,
        }
    }

    pub fn identity(chart: ChartId, dim: usize) -> ChartMap {
        ChartMap::new(chart, dim, chart, (0..dim).map(Expr::var).collect())
    }

    /// `self ∘ inner`: first `inner`, then `self`.
    pub fn compose(&self, inner: &ChartMap) -> Result<ChartMap, Error> {
        if inner.target != self.source {
            return Err(Error::ChartMismatch(inner.target, self.source));
        }
        if inner.components.len() != self.source_dim {
            return Err(Error::Dimension("composition of maps with mismatched dimensions".into()));
        }
        let sub = Substitution::vars(inner.components.clone());
        Ok(ChartMap::new(
            inner.source,
            inner.source_dim,
            self.target,
            self.components.iter().map(|c| c.substitute(&sub)).collect(),
        ))
    }

    pub fn eval(&self, z: &[Complex64]) -> Result<Vec<Complex64>, Error> {
        Tape::compile(&self.components).eval(z, &[])
    }
}

impl fmt::Display for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (j, (m, c)) in self.terms.iter().enumerate() {
            if j > 0 {
                write!(f, " + ")?;
            }
            if *m == 0 {
                write!(f, "{c}")?;
                continue;
            }
            if c.is_one() {
                write!(f, "1")?;
            } else {
                write!(f, "({c})")?;
            }
            write!(f, "*")?;
            for (k, b) in bits(*m).enumerate() {
                if k > 0 {
                    write!(f, "^")?;
                }
                write!(f, "{}", covector_of(b, self.dim))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(x: f64, y: f64) -> Complex64 {
        Complex64::new(x, y)
    }

    fn rand_c(rng: &mut ChaCha8Rng) -> Complex64 {
        c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn wedge_signs_and_repeats() {
        let dz = Form::dz(0, 1, 0);
        let dzb = Form::dzbar(0, 1, 0);
        assert!(dz.wedge(&dz).unwrap().is_zero());
        let a = dz.wedge(&dzb).unwrap();
        let b = dzb.wedge(&dz).unwrap();
        assert_eq!(a, b.neg());
    }

    #[test]
    fn dz_wedge_dzbar_on_real_frame() {
        let f = Form::parse("dz1^dzbar1", 0, 1).unwrap();
        let v = f
            .evaluate(&[c(0.3, 0.1)], &[], &[Tangent::real(&[c(1.0, 0.0)]), Tangent::real(&[c(0.0, 1.0)])])
            .unwrap();
        assert!((v - c(0.0, -2.0)).norm() < 1e-15);
        let dz = Form::dz(0, 1, 0);
        assert_eq!(dz.evaluate(&[c(0.0, 0.0)], &[], &[Tangent::d_dz(0, 1)]).unwrap(), c(1.0, 0.0));
        assert_eq!(dz.evaluate(&[c(0.0, 0.0)], &[], &[Tangent::d_dzbar(0, 1)]).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn wedge_matches_antisymmetrised_tensor() {
        // (z1 dz1) ∧ (z2 dz2) at (1, 2) on two random real vectors
        let a = Form::parse("z1*dz1", 0, 2).unwrap();
        let b = Form::parse("z2*dz2", 0, 2).unwrap();
        let w = a.wedge(&b).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = [c(1.0, 0.0), c(2.0, 0.0)];
        for _ in 0..5 {
            let u = [rand_c(&mut rng), rand_c(&mut rng)];
            let v = [rand_c(&mut rng), rand_c(&mut rng)];
            let oracle = p[0] * p[1] * (u[0] * v[1] - v[0] * u[1]);
            let got = w.evaluate(&p, &[], &[Tangent::real(&u), Tangent::real(&v)]).unwrap();
            assert!((got - oracle).norm() < 1e-14);
        }
    }

    #[test]
    fn d_of_bloom_herrera_form() {
        let w = Form::parse("z1*dz2", 0, 2).unwrap();
        assert_eq!(w.d(), Form::parse("dz1^dz2", 0, 2).unwrap());
        assert!(Form::scalar(0, 2, Expr::int(5)).d().is_zero());
    }

    #[test]
    fn pullback_through_the_cusp_map() {
        let w = Form::parse("z1*dz2", 0, 2).unwrap();
        let f = ChartMap::new(
            1,
            1,
            0,
            vec![
                crate::fields::parse_expr("z1^5").unwrap(),
                crate::fields::parse_expr("z1^6 + z1^7").unwrap(),
            ],
        );
        let got = w.pullback(&f).unwrap().expand();
        assert_eq!(got, Form::parse("(6*z1^10 + 7*z1^11)*dz1", 1, 1).unwrap());
        let id = ChartMap::identity(0, 2);
        assert_eq!(w.pullback(&id).unwrap(), w);
    }

    #[test]
    fn split_dt_recovers_the_form() {
        let f = Form::parse("z1*dz1^dt1 + conj(z1)*dzbar1^dz1 + t1*dt1^dzbar1", 0, 1).unwrap();
        let (alpha, beta) = f.split_dt(0);
        let back = Form::dt(0, 1, 0).wedge(&alpha).unwrap().try_add(&beta).unwrap();
        assert_eq!(back, f);
        assert_eq!(beta.n_terms(), 1);
    }

    #[test]
    fn display_round_trips() {
        let f = Form::parse("(1/2)*z1*dz1^dzbar2 - i*conj(z2)^2*dzbar1^dz2", 0, 2).unwrap();
        assert_eq!(Form::parse(&f.to_string(), 0, 2).unwrap(), f);
    }

    #[test]
    fn chart_mismatch_is_reported() {
        let a = Form::dz(0, 1, 0);
        let b = Form::dz(1, 1, 0);
        assert!(matches!(a.wedge(&b), Err(Error::ChartMismatch(0, 1))));
    }
}
