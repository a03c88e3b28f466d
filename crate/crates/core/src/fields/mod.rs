//! Symbolic scalar fields on chart domains.
//!
//! An [`Expr`] is an immutable, hash-consed-by-structure expression tree
//! over chart coordinates `z_i`, their conjugates, real parameters `t_k`
//! (simplex coordinates, the fibre coordinate of a family of connections),
//! exact complex-rational or floating constants, `+`, `×`, integer powers,
//! `exp`, the bump primitive, and real/imaginary-part extraction.
//!
//! Conjugation is pushed to the leaves at construction time, so
//! `conj(conj(f))` is structurally `f`. Sums and products are flattened,
//! like terms are merged and operands are kept in a canonical order; zero
//! detection is purely structural.

mod constant;
mod eval;
mod parse;

pub use constant::{CRational, Constant};
pub use eval::{Slot, Tape};
pub use parse::{parse_expr, parse_form_terms, DiffAtom, FormTermSyntax};

use std::cmp::Ordering;
use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64;

/// The bump primitive `B(t) = exp(1/(t²−1))` for `|t| < 1`, else `0`.
pub fn bump_value(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        (1.0 / (t * t - 1.0)).exp()
    }
}

/// Differentiation variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DVar {
    /// Wirtinger `∂/∂z_i`.
    Z(usize),
    /// Wirtinger `∂/∂z̄_i`.
    Zbar(usize),
    /// Real `∂/∂t_k`.
    T(usize),
}

#[derive(Clone, Debug)]
pub enum Kind {
    Const(Constant),
    Var(usize),
    ConjVar(usize),
    Param(usize),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Pow(Expr, i64),
    Exp(Expr),
    /// `B(Re t)`.
    Bump(Expr),
    Re(Expr),
    Im(Expr),
}

#[derive(Debug)]
struct Node {
    kind: Kind,
    hash: u64,
}

/// A symbolic scalar field. Cheap to clone.
#[derive(Clone, Debug)]
pub struct Expr(Arc<Node>);

fn node_hash(kind: &Kind) -> u64 {
    let mut h = DefaultHasher::new();
    match kind {
        Kind::Const(c) => {
            0u8.hash(&mut h);
            c.hash(&mut h);
        }
        Kind::Var(i) => {
            1u8.hash(&mut h);
            i.hash(&mut h);
        }
        Kind::ConjVar(i) => {
            2u8.hash(&mut h);
            i.hash(&mut h);
        }
        Kind::Param(i) => {
            3u8.hash(&mut h);
            i.hash(&mut h);
        }
        Kind::Add(v) => {
            4u8.hash(&mut h);
            for e in v {
                e.0.hash.hash(&mut h);
            }
        }
        Kind::Mul(v) => {
            5u8.hash(&mut h);
            for e in v {
                e.0.hash.hash(&mut h);
            }
        }
        Kind::Pow(b, n) => {
            6u8.hash(&mut h);
            b.0.hash.hash(&mut h);
            n.hash(&mut h);
        }
        Kind::Exp(a) => {
            7u8.hash(&mut h);
            a.0.hash.hash(&mut h);
        }
        Kind::Bump(a) => {
            8u8.hash(&mut h);
            a.0.hash.hash(&mut h);
        }
        Kind::Re(a) => {
            9u8.hash(&mut h);
            a.0.hash.hash(&mut h);
        }
        Kind::Im(a) => {
            10u8.hash(&mut h);
            a.0.hash.hash(&mut h);
        }
    }
    h.finish()
}

fn kind_tag(k: &Kind) -> u8 {
    match k {
        Kind::Const(_) => 0,
        Kind::Var(_) => 1,
        Kind::ConjVar(_) => 2,
        Kind::Param(_) => 3,
        Kind::Add(_) => 4,
        Kind::Mul(_) => 5,
        Kind::Pow(..) => 6,
        Kind::Exp(_) => 7,
        Kind::Bump(_) => 8,
        Kind::Re(_) => 9,
        Kind::Im(_) => 10,
    }
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        if Arc::ptr_eq(&self.0, &other.0) {
            return true;
        }
        if self.0.hash != other.0.hash {
            return false;
        }
        match (&self.0.kind, &other.0.kind) {
            (Kind::Const(a), Kind::Const(b)) => a == b,
            (Kind::Var(a), Kind::Var(b)) => a == b,
            (Kind::ConjVar(a), Kind::ConjVar(b)) => a == b,
            (Kind::Param(a), Kind::Param(b)) => a == b,
            (Kind::Add(a), Kind::Add(b)) | (Kind::Mul(a), Kind::Mul(b)) => a == b,
            (Kind::Pow(a, n), Kind::Pow(b, m)) => n == m && a == b,
            (Kind::Exp(a), Kind::Exp(b))
            | (Kind::Bump(a), Kind::Bump(b))
            | (Kind::Re(a), Kind::Re(b))
            | (Kind::Im(a), Kind::Im(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for Expr {}

impl Hash for Expr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.hash.hash(state);
    }
}

fn structural_cmp(a: &Expr, b: &Expr) -> Ordering {
    if a == b {
        return Ordering::Equal;
    }
    let ta = kind_tag(&a.0.kind);
    let tb = kind_tag(&b.0.kind);
    if ta != tb {
        return ta.cmp(&tb);
    }
    match (&a.0.kind, &b.0.kind) {
        (Kind::Const(x), Kind::Const(y)) => format!("{x}").cmp(&format!("{y}")),
        (Kind::Var(x), Kind::Var(y))
        | (Kind::ConjVar(x), Kind::ConjVar(y))
        | (Kind::Param(x), Kind::Param(y)) => x.cmp(y),
        (Kind::Add(x), Kind::Add(y)) | (Kind::Mul(x), Kind::Mul(y)) => {
            for (p, q) in x.iter().zip(y.iter()) {
                let c = structural_cmp(p, q);
                if c != Ordering::Equal {
                    return c;
                }
            }
            x.len().cmp(&y.len())
        }
        (Kind::Pow(x, n), Kind::Pow(y, m)) => n.cmp(m).then_with(|| structural_cmp(x, y)),
        (Kind::Exp(x), Kind::Exp(y))
        | (Kind::Bump(x), Kind::Bump(y))
        | (Kind::Re(x), Kind::Re(y))
        | (Kind::Im(x), Kind::Im(y)) => structural_cmp(x, y),
        _ => Ordering::Equal,
    }
}

/// Canonical operand order: constants first, then by hash, ties broken structurally.
fn canonical_cmp(a: &Expr, b: &Expr) -> Ordering {
    let ca = matches!(a.0.kind, Kind::Const(_));
    let cb = matches!(b.0.kind, Kind::Const(_));
    cb.cmp(&ca)
        .then_with(|| a.0.hash.cmp(&b.0.hash))
        .then_with(|| structural_cmp(a, b))
}

impl Expr {
    fn from_kind(kind: Kind) -> Expr {
        let hash = node_hash(&kind);
        Expr(Arc::new(Node { kind, hash }))
    }

    pub fn kind(&self) -> &Kind {
        &self.0.kind
    }

    pub(crate) fn node_id(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    pub fn constant(c: Constant) -> Expr {
        Expr::from_kind(Kind::Const(c))
    }

    pub fn exact(c: CRational) -> Expr {
        Expr::constant(Constant::Exact(c))
    }

    pub fn float(c: Complex64) -> Expr {
        Expr::constant(Constant::Float(c))
    }

    pub fn real(x: f64) -> Expr {
        Expr::float(Complex64::new(x, 0.0))
    }

    pub fn int(n: i64) -> Expr {
        Expr::exact(CRational::from_integer(n))
    }

    pub fn ratio(p: i64, q: i64) -> Expr {
        Expr::exact(CRational::from_ratio(p, q))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn imag_unit() -> Expr {
        Expr::exact(CRational::i())
    }

    /// Coordinate `z_{i+1}` (zero-based index).
    pub fn var(i: usize) -> Expr {
        Expr::from_kind(Kind::Var(i))
    }

    pub fn conj_var(i: usize) -> Expr {
        Expr::from_kind(Kind::ConjVar(i))
    }

    /// Real parameter `t_{k+1}` (zero-based index).
    pub fn param(k: usize) -> Expr {
        Expr::from_kind(Kind::Param(k))
    }

    pub fn as_constant(&self) -> Option<&Constant> {
        match &self.0.kind {
            Kind::Const(c) => Some(c),
            _ => None,
        }
    }

    /// Structural zero test.
    pub fn is_zero(&self) -> bool {
        matches!(&self.0.kind, Kind::Const(c) if c.is_zero())
    }

    pub fn is_one(&self) -> bool {
        matches!(&self.0.kind, Kind::Const(c) if c.is_one())
    }

    /// Sum with flattening, constant folding and like-term merging.
    pub fn sum<I: IntoIterator<Item = Expr>>(items: I) -> Expr {
        let mut constant = Constant::zero();
        let mut order: Vec<Expr> = Vec::new();
        let mut coeffs: HashMap<Expr, Constant> = HashMap::new();
        let mut push = |e: Expr, constant: &mut Constant| match &e.0.kind {
            Kind::Const(c) => *constant = constant.add(c),
            _ => {
                let (c, rest) = e.split_coefficient();
                match coeffs.get_mut(&rest) {
                    Some(acc) => *acc = acc.add(&c),
                    None => {
                        order.push(rest.clone());
                        coeffs.insert(rest, c);
                    }
                }
            }
        };
        for item in items {
            match &item.0.kind {
                Kind::Add(terms) => {
                    for t in terms {
                        push(t.clone(), &mut constant);
                    }
                }
                _ => push(item, &mut constant),
            }
        }
        let mut terms: Vec<Expr> = Vec::with_capacity(order.len() + 1);
        for rest in order {
            let c = &coeffs[&rest];
            if c.is_zero() {
                continue;
            }
            terms.push(rest.scaled_raw(c));
        }
        if !constant.is_zero() {
            terms.push(Expr::constant(constant));
        }
        match terms.len() {
            0 => Expr::zero(),
            1 => terms.pop().unwrap(),
            _ => {
                terms.sort_by(canonical_cmp);
                Expr::from_kind(Kind::Add(terms))
            }
        }
    }

    /// Splits `c·rest` into its constant coefficient and remainder.
    fn split_coefficient(&self) -> (Constant, Expr) {
        if let Kind::Mul(fs) = &self.0.kind {
            if let Kind::Const(c) = &fs[0].0.kind {
                let rest: Vec<Expr> = fs[1..].to_vec();
                let rest = if rest.len() == 1 {
                    rest.into_iter().next().unwrap()
                } else {
                    Expr::from_kind(Kind::Mul(rest))
                };
                return (c.clone(), rest);
            }
        }
        (Constant::one(), self.clone())
    }

    /// `c·self` for a non-constant, coefficient-free `self`.
    fn scaled_raw(&self, c: &Constant) -> Expr {
        if c.is_one() {
            return self.clone();
        }
        let mut fs = vec![Expr::constant(c.clone())];
        match &self.0.kind {
            Kind::Mul(inner) => fs.extend(inner.iter().cloned()),
            _ => fs.push(self.clone()),
        }
        Expr::from_kind(Kind::Mul(fs))
    }

    /// Product with flattening, constant folding and exponent merging.
    pub fn product<I: IntoIterator<Item = Expr>>(items: I) -> Expr {
        let mut constant = Constant::one();
        let mut order: Vec<Expr> = Vec::new();
        let mut exps: HashMap<Expr, i64> = HashMap::new();
        let mut push = |e: &Expr, constant: &mut Constant| match &e.0.kind {
            Kind::Const(c) => *constant = constant.mul(c),
            Kind::Pow(b, n) => {
                if let Some(acc) = exps.get_mut(b) {
                    *acc += n;
                } else {
                    order.push(b.clone());
                    exps.insert(b.clone(), *n);
                }
            }
            _ => {
                if let Some(acc) = exps.get_mut(e) {
                    *acc += 1;
                } else {
                    order.push(e.clone());
                    exps.insert(e.clone(), 1);
                }
            }
        };
        for item in items {
            match &item.0.kind {
                Kind::Mul(fs) => {
                    for f in fs {
                        push(f, &mut constant);
                    }
                }
                _ => push(&item, &mut constant),
            }
        }
        if constant.is_zero() {
            return Expr::zero();
        }
        let mut factors: Vec<Expr> = Vec::with_capacity(order.len() + 1);
        for base in order {
            let n = exps[&base];
            match n {
                0 => {}
                1 => factors.push(base),
                _ => factors.push(Expr::from_kind(Kind::Pow(base, n))),
            }
        }
        if factors.is_empty() {
            return Expr::constant(constant);
        }
        if !constant.is_one() {
            factors.push(Expr::constant(constant));
        }
        if factors.len() == 1 {
            return factors.pop().unwrap();
        }
        factors.sort_by(canonical_cmp);
        Expr::from_kind(Kind::Mul(factors))
    }

    pub fn powi(&self, n: i64) -> Expr {
        if n == 0 {
            return Expr::one();
        }
        if n == 1 {
            return self.clone();
        }
        match &self.0.kind {
            Kind::Const(c) => match c.powi(n) {
                Some(v) => Expr::constant(v),
                None => Expr::from_kind(Kind::Pow(self.clone(), n)),
            },
            Kind::Pow(b, m) => b.powi(m * n),
            Kind::Mul(fs) => Expr::product(fs.iter().map(|f| f.powi(n))),
            Kind::Exp(a) => (a * &Expr::int(n)).exp(),
            _ => Expr::from_kind(Kind::Pow(self.clone(), n)),
        }
    }

    pub fn recip(&self) -> Expr {
        self.powi(-1)
    }

    pub fn exp(&self) -> Expr {
        match &self.0.kind {
            Kind::Const(c) if c.is_zero() => Expr::one(),
            Kind::Const(c) => Expr::float(c.to_complex().exp()),
            _ => Expr::from_kind(Kind::Exp(self.clone())),
        }
    }

    /// The bump primitive applied to `Re(self)`.
    pub fn bump(&self) -> Expr {
        match &self.0.kind {
            Kind::Const(c) => {
                let t = c.to_complex().re;
                if t.abs() >= 1.0 {
                    Expr::zero()
                } else {
                    Expr::real(bump_value(t))
                }
            }
            Kind::Re(a) => a.bump(),
            _ => Expr::from_kind(Kind::Bump(self.clone())),
        }
    }

    /// True when the field is real-valued by construction.
    pub fn is_structurally_real(&self) -> bool {
        match &self.0.kind {
            Kind::Const(c) => c.is_real(),
            Kind::Param(_) | Kind::Bump(_) | Kind::Re(_) | Kind::Im(_) => true,
            Kind::Add(v) | Kind::Mul(v) => v.iter().all(|e| e.is_structurally_real()),
            Kind::Pow(b, _) => b.is_structurally_real(),
            Kind::Exp(a) => a.is_structurally_real(),
            Kind::Var(_) | Kind::ConjVar(_) => false,
        }
    }

    pub fn re(&self) -> Expr {
        match &self.0.kind {
            Kind::Const(c) => Expr::float(Complex64::new(c.to_complex().re, 0.0)).normalize_exact(c, true),
            _ if self.is_structurally_real() => self.clone(),
            _ => Expr::from_kind(Kind::Re(self.clone())),
        }
    }

    pub fn im(&self) -> Expr {
        match &self.0.kind {
            Kind::Const(c) => Expr::float(Complex64::new(c.to_complex().im, 0.0)).normalize_exact(c, false),
            _ if self.is_structurally_real() => Expr::zero(),
            _ => Expr::from_kind(Kind::Im(self.clone())),
        }
    }

    fn normalize_exact(self, c: &Constant, real_part: bool) -> Expr {
        match c {
            Constant::Exact(r) => {
                if real_part {
                    Expr::exact(CRational::real(r.re.clone()))
                } else {
                    Expr::exact(CRational::real(r.im.clone()))
                }
            }
            Constant::Float(_) => self,
        }
    }

    /// Complex conjugate, pushed down to the leaves.
    pub fn conj(&self) -> Expr {
        let mut memo = HashMap::new();
        self.conj_memo(&mut memo)
    }

    fn conj_memo(&self, memo: &mut HashMap<usize, Expr>) -> Expr {
        if let Some(e) = memo.get(&self.node_id()) {
            return e.clone();
        }
        let out = match &self.0.kind {
            Kind::Const(c) => Expr::constant(c.conj()),
            Kind::Var(i) => Expr::conj_var(*i),
            Kind::ConjVar(i) => Expr::var(*i),
            Kind::Param(_) | Kind::Bump(_) | Kind::Re(_) | Kind::Im(_) => self.clone(),
            Kind::Add(v) => Expr::sum(v.iter().map(|e| e.conj_memo(memo))),
            Kind::Mul(v) => Expr::product(v.iter().map(|e| e.conj_memo(memo))),
            Kind::Pow(b, n) => b.conj_memo(memo).powi(*n),
            Kind::Exp(a) => a.conj_memo(memo).exp(),
        };
        memo.insert(self.node_id(), out.clone());
        out
    }

    /// Exact symbolic derivative.
    pub fn diff(&self, v: DVar) -> Expr {
        let mut memo = HashMap::new();
        self.diff_memo(v, &mut memo)
    }

    fn diff_memo(&self, v: DVar, memo: &mut HashMap<(usize, DVar), Expr>) -> Expr {
        let key = (self.node_id(), v);
        if let Some(e) = memo.get(&key) {
            return e.clone();
        }
        let out = match &self.0.kind {
            Kind::Const(_) => Expr::zero(),
            Kind::Var(i) => {
                if v == DVar::Z(*i) {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Kind::ConjVar(i) => {
                if v == DVar::Zbar(*i) {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Kind::Param(k) => {
                if v == DVar::T(*k) {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Kind::Add(terms) => Expr::sum(terms.iter().map(|t| t.diff_memo(v, memo))),
            Kind::Mul(fs) => {
                let mut parts = Vec::new();
                for (j, f) in fs.iter().enumerate() {
                    let df = f.diff_memo(v, memo);
                    if df.is_zero() {
                        continue;
                    }
                    let mut factors: Vec<Expr> = fs
                        .iter()
                        .enumerate()
                        .filter(|(k, _)| *k != j)
                        .map(|(_, e)| e.clone())
                        .collect();
                    factors.push(df);
                    parts.push(Expr::product(factors));
                }
                Expr::sum(parts)
            }
            Kind::Pow(b, n) => {
                let db = b.diff_memo(v, memo);
                if db.is_zero() {
                    Expr::zero()
                } else {
                    Expr::product([Expr::int(*n), b.powi(n - 1), db])
                }
            }
            Kind::Exp(a) => {
                let da = a.diff_memo(v, memo);
                if da.is_zero() {
                    Expr::zero()
                } else {
                    Expr::product([self.clone(), da])
                }
            }
            Kind::Re(a) => a.re_derivative(v, memo, true),
            Kind::Im(a) => a.re_derivative(v, memo, false),
            Kind::Bump(a) => {
                // B'(s) = B(s)·(−2s)/(s²−1)², s = Re(a)
                let s = a.re();
                let ds = match s.kind() {
                    Kind::Re(inner) => inner.re_derivative(v, memo, true),
                    _ => s.diff_memo(v, memo),
                };
                if ds.is_zero() {
                    Expr::zero()
                } else {
                    let denom = (&s.powi(2) - &Expr::one()).powi(-2);
                    Expr::product([self.clone(), Expr::int(-2), s, denom, ds])
                }
            }
        };
        memo.insert(key, out.clone());
        out
    }

    /// Derivative of `Re(self)` (or `Im(self)` when `real_part` is false).
    fn re_derivative(&self, v: DVar, memo: &mut HashMap<(usize, DVar), Expr>, real_part: bool) -> Expr {
        match v {
            DVar::T(_) => {
                let d = self.diff_memo(v, memo);
                if real_part {
                    d.re()
                } else {
                    d.im()
                }
            }
            DVar::Z(i) | DVar::Zbar(i) => {
                let other = match v {
                    DVar::Z(_) => DVar::Zbar(i),
                    _ => DVar::Z(i),
                };
                let d = self.diff_memo(v, memo);
                let dc = self.diff_memo(other, memo).conj();
                if real_part {
                    &(&d + &dc) * &Expr::ratio(1, 2)
                } else {
                    // (d − conj(∂_other f)) / (2i) = −i/2 · (d − dc)
                    &(&d - &dc) * &Expr::exact(CRational::new(
                        num_rational::BigRational::from_integer(0.into()),
                        num_rational::BigRational::new((-1).into(), 2.into()),
                    ))
                }
            }
        }
    }

    /// Substitutes coordinates and parameters. `conj(z_i)` is replaced by
    /// the conjugate of the replacement for `z_i`.
    pub fn substitute(&self, sub: &Substitution) -> Expr {
        let mut memo = HashMap::new();
        let mut conj_cache: HashMap<usize, Expr> = HashMap::new();
        self.subst_memo(sub, &mut memo, &mut conj_cache)
    }

    fn subst_memo(
        &self,
        sub: &Substitution,
        memo: &mut HashMap<usize, Expr>,
        conj_cache: &mut HashMap<usize, Expr>,
    ) -> Expr {
        if let Some(e) = memo.get(&self.node_id()) {
            return e.clone();
        }
        let out = match &self.0.kind {
            Kind::Const(_) => self.clone(),
            Kind::Var(i) => match sub.vars.get(*i).and_then(|o| o.as_ref()) {
                Some(e) => e.clone(),
                None => self.clone(),
            },
            Kind::ConjVar(i) => match sub.vars.get(*i).and_then(|o| o.as_ref()) {
                Some(e) => conj_cache.entry(*i).or_insert_with(|| e.conj()).clone(),
                None => self.clone(),
            },
            Kind::Param(k) => match sub.params.get(*k).and_then(|o| o.as_ref()) {
                Some(e) => e.clone(),
                None => self.clone(),
            },
            Kind::Add(v) => Expr::sum(v.iter().map(|e| e.subst_memo(sub, memo, conj_cache))),
            Kind::Mul(v) => Expr::product(v.iter().map(|e| e.subst_memo(sub, memo, conj_cache))),
            Kind::Pow(b, n) => b.subst_memo(sub, memo, conj_cache).powi(*n),
            Kind::Exp(a) => a.subst_memo(sub, memo, conj_cache).exp(),
            Kind::Bump(a) => a.subst_memo(sub, memo, conj_cache).bump(),
            Kind::Re(a) => a.subst_memo(sub, memo, conj_cache).re(),
            Kind::Im(a) => a.subst_memo(sub, memo, conj_cache).im(),
        };
        memo.insert(self.node_id(), out.clone());
        out
    }

    /// Writes a rational expression as `numerator / denominator` with
    /// both parts free of negative powers. Non-rational nodes (`exp`,
    /// `bump`, `re`, `im`) are kept whole inside the numerator.
    pub fn as_fraction(&self) -> (Expr, Expr) {
        match &self.0.kind {
            Kind::Add(v) => {
                let parts: Vec<(Expr, Expr)> = v.iter().map(|e| e.as_fraction()).collect();
                if parts.iter().all(|(_, d)| d.is_one()) {
                    return (self.clone(), Expr::one());
                }
                let den = Expr::product(parts.iter().map(|(_, d)| d.clone()));
                let num = Expr::sum(parts.iter().enumerate().map(|(i, (n, _))| {
                    Expr::product(
                        std::iter::once(n.clone()).chain(
                            parts
                                .iter()
                                .enumerate()
                                .filter(|(j, _)| *j != i)
                                .map(|(_, (_, d))| d.clone()),
                        ),
                    )
                }));
                (num, den)
            }
            Kind::Mul(v) => {
                let parts: Vec<(Expr, Expr)> = v.iter().map(|e| e.as_fraction()).collect();
                (
                    Expr::product(parts.iter().map(|(n, _)| n.clone())),
                    Expr::product(parts.iter().map(|(_, d)| d.clone())),
                )
            }
            Kind::Pow(b, n) => {
                let (bn, bd) = b.as_fraction();
                if *n >= 0 {
                    (bn.powi(*n), bd.powi(*n))
                } else {
                    (bd.powi(-n), bn.powi(-n))
                }
            }
            _ => (self.clone(), Expr::one()),
        }
    }

    /// Distributes products and positive powers over sums, recursively.
    pub fn expand(&self) -> Expr {
        let mut memo = HashMap::new();
        self.expand_memo(&mut memo)
    }

    fn expand_memo(&self, memo: &mut HashMap<usize, Expr>) -> Expr {
        if let Some(e) = memo.get(&self.node_id()) {
            return e.clone();
        }
        fn distribute(a: &Expr, b: &Expr) -> Expr {
            let ta: Vec<Expr> = match a.kind() {
                Kind::Add(v) => v.clone(),
                _ => vec![a.clone()],
            };
            let tb: Vec<Expr> = match b.kind() {
                Kind::Add(v) => v.clone(),
                _ => vec![b.clone()],
            };
            Expr::sum(ta.iter().flat_map(|x| tb.iter().map(move |y| x * y)))
        }
        let out = match &self.0.kind {
            Kind::Const(_) | Kind::Var(_) | Kind::ConjVar(_) | Kind::Param(_) => self.clone(),
            Kind::Add(v) => Expr::sum(v.iter().map(|e| e.expand_memo(memo))),
            Kind::Mul(v) => {
                let mut acc = Expr::one();
                for f in v {
                    acc = distribute(&acc, &f.expand_memo(memo));
                }
                acc
            }
            Kind::Pow(b, n) => {
                let be = b.expand_memo(memo);
                if *n > 0 && matches!(be.kind(), Kind::Add(_)) {
                    let mut acc = Expr::one();
                    for _ in 0..*n {
                        acc = distribute(&acc, &be);
                    }
                    acc
                } else {
                    be.powi(*n)
                }
            }
            Kind::Exp(a) => a.expand_memo(memo).exp(),
            Kind::Bump(a) => a.expand_memo(memo).bump(),
            Kind::Re(a) => a.expand_memo(memo).re(),
            Kind::Im(a) => a.expand_memo(memo).im(),
        };
        memo.insert(self.node_id(), out.clone());
        out
    }

    /// True when `∂/∂z̄_i` vanishes structurally for every `i < dim`.
    pub fn is_structurally_holomorphic(&self, dim: usize) -> bool {
        (0..dim).all(|i| self.diff(DVar::Zbar(i)).is_zero())
    }

    /// Largest coordinate index used plus one.
    pub fn var_extent(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |e| {
            if let Kind::Var(i) | Kind::ConjVar(i) = e.kind() {
                n = n.max(i + 1);
            }
        });
        n
    }

    /// Largest parameter index used plus one.
    pub fn param_extent(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |e| {
            if let Kind::Param(k) = e.kind() {
                n = n.max(k + 1);
            }
        });
        n
    }

    fn visit(&self, f: &mut dyn FnMut(&Expr)) {
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![self.clone()];
        while let Some(e) = stack.pop() {
            if !seen.insert(e.node_id()) {
                continue;
            }
            f(&e);
            match e.kind() {
                Kind::Add(v) | Kind::Mul(v) => stack.extend(v.iter().cloned()),
                Kind::Pow(b, _) => stack.push(b.clone()),
                Kind::Exp(a) | Kind::Bump(a) | Kind::Re(a) | Kind::Im(a) => stack.push(a.clone()),
                _ => {}
            }
        }
    }

    /// Number of distinct nodes in the expression DAG.
    pub fn dag_size(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_| n += 1);
        n
    }

    /// Evaluates at a point; convenience wrapper that compiles a one-off tape.
    pub fn eval(&self, z: &[Complex64], t: &[f64]) -> Result<Complex64, crate::Error> {
        let tape = Tape::compile(std::slice::from_ref(self));
        let mut out = [Complex64::new(0.0, 0.0)];
        tape.eval_into(z, t, &mut Vec::new(), &mut out)?;
        Ok(out[0])
    }
}

/// Replacement values for coordinates and parameters.
#[derive(Clone, Debug, Default)]
pub struct Substitution {
    pub vars: Vec<Option<Expr>>,
    pub params: Vec<Option<Expr>>,
}

impl Substitution {
    pub fn vars(vars: Vec<Expr>) -> Self {
        Substitution {
            vars: vars.into_iter().map(Some).collect(),
            params: Vec::new(),
        }
    }

    pub fn params(params: Vec<Expr>) -> Self {
        Substitution {
            vars: Vec::new(),
            params: params.into_iter().map(Some).collect(),
        }
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $body:expr) => {
        impl $tr<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                let f: fn(&Expr, &Expr) -> Expr = $body;
                f(self, rhs)
            }
        }
        impl $tr<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                (&self).$method(rhs)
            }
        }
        impl $tr<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                self.$method(&rhs)
            }
        }
    };
}

binop!(Add, add, |a, b| Expr::sum([a.clone(), b.clone()]));
binop!(Sub, sub, |a, b| Expr::sum([a.clone(), -b]));
binop!(Mul, mul, |a, b| Expr::product([a.clone(), b.clone()]));
binop!(Div, div, |a, b| Expr::product([a.clone(), b.recip()]));

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::product([Expr::int(-1), self.clone()])
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -&self
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0.kind {
            Kind::Const(c) => write!(f, "{c}"),
            Kind::Var(i) => write!(f, "z{}", i + 1),
            Kind::ConjVar(i) => write!(f, "conj(z{})", i + 1),
            Kind::Param(k) => write!(f, "t{}", k + 1),
            Kind::Add(v) => {
                write!(f, "(")?;
                for (j, e) in v.iter().enumerate() {
                    if j > 0 {
                        write!(f, " + ")?;
                    }
                    write!(f, "{e}")?;
                }
                write!(f, ")")
            }
            Kind::Mul(v) => {
                for (j, e) in v.iter().enumerate() {
                    if j > 0 {
                        write!(f, "*")?;
                    }
                    write!(f, "{e}")?;
                }
                Ok(())
            }
            Kind::Pow(b, n) => match b.kind() {
                Kind::Var(_) | Kind::ConjVar(_) | Kind::Param(_) | Kind::Add(_) => write!(f, "{b}^({n})"),
                _ => write!(f, "({b})^({n})"),
            },
            Kind::Exp(a) => write!(f, "exp({a})"),
            Kind::Bump(a) => write!(f, "bump({a})"),
            Kind::Re(a) => write!(f, "re({a})"),
            Kind::Im(a) => write!(f, "im({a})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z(i: usize) -> Expr {
        Expr::var(i)
    }

    fn c(x: f64, y: f64) -> Complex64 {
        Complex64::new(x, y)
    }

    #[test]
    fn like_terms_merge_and_cancel() {
        let a = &z(0) * &z(1);
        let e = &(&a + &a) - &(&Expr::int(2) * &a);
        assert!(e.is_zero());
        let p = &z(0) * &z(0).recip();
        assert!(p.is_one());
    }

    #[test]
    fn conjugation_is_an_involution() {
        let f = &(&z(0) * &Expr::imag_unit()) + &(&z(1).conj() * &Expr::ratio(3, 2)).exp();
        assert_eq!(f.conj().conj(), f);
        assert_ne!(f.conj(), f);
    }

    #[test]
    fn wirtinger_derivatives_of_basic_fields() {
        let f = &z(0) * &z(0).conj(); // |z|^2
        assert_eq!(f.diff(DVar::Z(0)), z(0).conj());
        assert_eq!(f.diff(DVar::Zbar(0)), z(0));
        assert!(z(0).powi(5).diff(DVar::Zbar(0)).is_zero());
        let re = z(0).re();
        let d = re.diff(DVar::Z(0));
        assert!((d.eval(&[c(0.3, 0.7)], &[]).unwrap() - c(0.5, 0.0)).norm() < 1e-15);
        let im = z(0).im();
        let d = im.diff(DVar::Z(0)).eval(&[c(0.3, 0.7)], &[]).unwrap();
        assert!((d - c(0.0, -0.5)).norm() < 1e-15);
    }

    #[test]
    fn bump_derivative_matches_finite_difference() {
        let b = (&z(0).re() * &Expr::ratio(1, 2)).bump();
        let db = b.diff(DVar::Z(0));
        let dbb = b.diff(DVar::Zbar(0));
        let p = c(0.9, 0.2);
        let h = 1e-5;
        let fx = (b.eval(&[p + c(h, 0.0)], &[]).unwrap() - b.eval(&[p - c(h, 0.0)], &[]).unwrap()) / (2.0 * h);
        let fy = (b.eval(&[p + c(0.0, h)], &[]).unwrap() - b.eval(&[p - c(0.0, h)], &[]).unwrap()) / (2.0 * h);
        let dz = (fx - c(0.0, 1.0) * fy) * 0.5;
        let dzb = (fx + c(0.0, 1.0) * fy) * 0.5;
        let got = db.eval(&[p], &[]).unwrap();
        assert!((got - dz).norm() < 1e-6 * (1.0 + dz.norm()), "{got} vs {dz}");
        assert!((dbb.eval(&[p], &[]).unwrap() - dzb).norm() < 1e-6 * (1.0 + dzb.norm()));
        // outside the support everything is flat, including the derivative
        assert_eq!(db.eval(&[c(2.5, 0.0)], &[]).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn substitution_conjugates_replacements() {
        let f = &z(0) + &z(0).conj();
        let g = f.substitute(&Substitution::vars(vec![&z(0) * &Expr::imag_unit()]));
        let v = g.eval(&[c(1.0, 2.0)], &[]).unwrap();
        // iz + conj(iz) = 2 Re(iz) = -2 Im z
        assert!((v - c(-4.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn pole_is_reported() {
        let f = z(0).recip();
        assert!(f.eval(&[c(0.0, 0.0)], &[]).is_err());
    }
}
