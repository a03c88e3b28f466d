//! Exact complex-rational and floating complex constants.

use std::fmt;
use std::hash::{Hash, Hasher};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// A complex number `re + i·im` with arbitrary-precision rational parts.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CRational {
    pub re: BigRational,
    pub im: BigRational,
}

impl CRational {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        CRational { re, im }
    }

    pub fn from_integer(n: i64) -> Self {
        CRational::new(BigRational::from_integer(BigInt::from(n)), BigRational::zero())
    }

    pub fn from_ratio(p: i64, q: i64) -> Self {
        CRational::new(
            BigRational::new(BigInt::from(p), BigInt::from(q)),
            BigRational::zero(),
        )
    }

    pub fn real(re: BigRational) -> Self {
        CRational::new(re, BigRational::zero())
    }

    pub fn i() -> Self {
        CRational::new(BigRational::zero(), BigRational::one())
    }

    pub fn zero() -> Self {
        CRational::from_integer(0)
    }

    pub fn one() -> Self {
        CRational::from_integer(1)
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.re.is_one() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn add(&self, o: &CRational) -> CRational {
        CRational::new(&self.re + &o.re, &self.im + &o.im)
    }

    pub fn sub(&self, o: &CRational) -> CRational {
        CRational::new(&self.re - &o.re, &self.im - &o.im)
    }

    pub fn mul(&self, o: &CRational) -> CRational {
        CRational::new(
            &self.re * &o.re - &self.im * &o.im,
            &self.re * &o.im + &self.im * &o.re,
        )
    }

    pub fn neg(&self) -> CRational {
        CRational::new(-&self.re, -&self.im)
    }

    pub fn conj(&self) -> CRational {
        CRational::new(self.re.clone(), -&self.im)
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(&self) -> Option<CRational> {
        if self.is_zero() {
            return None;
        }
        let norm = &self.re * &self.re + &self.im * &self.im;
        Some(CRational::new(&self.re / &norm, -&self.im / &norm))
    }

    pub fn div(&self, o: &CRational) -> Option<CRational> {
        o.inv().map(|inv| self.mul(&inv))
    }

    pub fn powi(&self, n: i64) -> Option<CRational> {
        let base = if n < 0 { self.inv()? } else { self.clone() };
        let mut e = n.unsigned_abs();
        let mut acc = CRational::one();
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&sq);
            }
            sq = sq.mul(&sq);
            e >>= 1;
        }
        Some(acc)
    }

    pub fn to_complex(&self) -> Complex64 {
        Complex64::new(
            self.re.to_f64().unwrap_or(f64::NAN),
            self.im.to_f64().unwrap_or(f64::NAN),
        )
    }
}

fn fmt_rational(r: &BigRational, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if r.denom().is_one() {
        if r.is_negative() {
            write!(f, "({})", r.numer())
        } else {
            write!(f, "{}", r.numer())
        }
    } else {
        write!(f, "({}/{})", r.numer(), r.denom())
    }
}

impl fmt::Display for CRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.re.is_zero(), self.im.is_zero()) {
            (_, true) => fmt_rational(&self.re, f),
            (true, false) => {
                fmt_rational(&self.im, f)?;
                write!(f, "*i")
            }
            (false, false) => {
                write!(f, "(")?;
                fmt_rational(&self.re, f)?;
                write!(f, "+")?;
                fmt_rational(&self.im, f)?;
                write!(f, "*i)")
            }
        }
    }
}

/// A constant appearing in an expression tree.
///
/// Exact constants stay exact under `+`, `×` and integer powers; any
/// operation involving a `Float` produces a `Float`.
#[derive(Clone, Debug)]
pub enum Constant {
    Exact(CRational),
    Float(Complex64),
}

fn canon_bits(x: f64) -> u64 {
    if x == 0.0 {
        0
    } else {
        x.to_bits()
    }
}

impl PartialEq for Constant {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Constant::Exact(a), Constant::Exact(b)) => a == b,
            (Constant::Float(a), Constant::Float(b)) => {
                canon_bits(a.re) == canon_bits(b.re) && canon_bits(a.im) == canon_bits(b.im)
            }
            _ => false,
        }
    }
}

impl Eq for Constant {}

impl Hash for Constant {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match self {
            Constant::Exact(c) => {
                0u8.hash(state);
                c.hash(state);
            }
            Constant::Float(c) => {
                1u8.hash(state);
                canon_bits(c.re).hash(state);
                canon_bits(c.im).hash(state);
            }
        }
    }
}

impl Constant {
    pub fn zero() -> Self {
        Constant::Exact(CRational::zero())
    }

    pub fn one() -> Self {
        Constant::Exact(CRational::one())
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Constant::Exact(c) => c.is_zero(),
            Constant::Float(c) => c.re == 0.0 && c.im == 0.0,
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            Constant::Exact(c) => c.is_one(),
            Constant::Float(c) => c.re == 1.0 && c.im == 0.0,
        }
    }

    pub fn to_complex(&self) -> Complex64 {
        match self {
            Constant::Exact(c) => c.to_complex(),
            Constant::Float(c) => *c,
        }
    }

    pub fn add(&self, o: &Constant) -> Constant {
        match (self, o) {
            (Constant::Exact(a), Constant::Exact(b)) => Constant::Exact(a.add(b)),
            _ => Constant::Float(self.to_complex() + o.to_complex()),
        }
    }

    pub fn mul(&self, o: &Constant) -> Constant {
        match (self, o) {
            (Constant::Exact(a), Constant::Exact(b)) => Constant::Exact(a.mul(b)),
            _ => Constant::Float(self.to_complex() * o.to_complex()),
        }
    }

    pub fn neg(&self) -> Constant {
        match self {
            Constant::Exact(a) => Constant::Exact(a.neg()),
            Constant::Float(a) => Constant::Float(-a),
        }
    }

    pub fn conj(&self) -> Constant {
        match self {
            Constant::Exact(a) => Constant::Exact(a.conj()),
            Constant::Float(a) => Constant::Float(a.conj()),
        }
    }

    /// Integer power; `None` when raising zero to a negative power.
    pub fn powi(&self, n: i64) -> Option<Constant> {
        match self {
            Constant::Exact(a) => a.powi(n).map(Constant::Exact),
            Constant::Float(a) => {
                if n < 0 && a.re == 0.0 && a.im == 0.0 {
                    None
                } else {
                    Some(Constant::Float(a.powi(n as i32)))
                }
            }
        }
    }

    pub fn is_real(&self) -> bool {
        match self {
            Constant::Exact(a) => a.is_real(),
            Constant::Float(a) => a.im == 0.0,
        }
    }
}

impl fmt::Display for Constant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constant::Exact(c) => write!(f, "{c}"),
            Constant::Float(c) => {
                if c.im == 0.0 {
                    if c.re < 0.0 {
                        write!(f, "({:?})", c.re)
                    } else {
                        write!(f, "{:?}", c.re)
                    }
                } else if c.re == 0.0 {
                    write!(f, "({:?})*i", c.im)
                } else {
                    write!(f, "({:?}+({:?})*i)", c.re, c.im)
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_arithmetic_is_exact() {
        let a = CRational::from_ratio(6, 11);
        let b = CRational::from_ratio(7, 12);
        let d = b.sub(&a);
        assert_eq!(d, CRational::from_ratio(5, 132));
        let i = CRational::i();
        assert_eq!(i.mul(&i), CRational::from_integer(-1));
        assert_eq!(i.inv().unwrap(), i.neg());
        assert_eq!(CRational::from_integer(2).powi(-3).unwrap(), CRational::from_ratio(1, 8));
        assert!(CRational::zero().powi(-1).is_none());
    }

    #[test]
    fn float_contaminates() {
        let c = Constant::Exact(CRational::from_integer(2)).mul(&Constant::Float(Complex64::new(0.5, 0.0)));
        assert!(matches!(c, Constant::Float(_)));
        assert!(c.is_one());
    }
}
