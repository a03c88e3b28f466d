//! Compiled evaluation of several fields at once.
//!
//! Shared subexpressions are evaluated once. Each slot carries a *flat*
//! flag marking values that vanish identically near the evaluation point
//! because a bump factor is outside its support; a product with a flat
//! factor is exactly zero even if another factor blows up there.

use std::collections::HashMap;

use num_complex::Complex64;

use super::{bump_value, Expr, Kind};
use crate::Error;

#[derive(Clone, Debug)]
enum Op {
    Const(Complex64),
    Var(usize),
    ConjVar(usize),
    Param(usize),
    Add(Vec<usize>),
    Mul(Vec<usize>),
    Pow(usize, i64),
    Exp(usize),
    Bump(usize),
    Re(usize),
    Im(usize),
}

/// A straight-line program evaluating a list of fields.
#[derive(Clone, Debug)]
pub struct Tape {
    ops: Vec<Op>,
    outputs: Vec<usize>,
    n_vars: usize,
    n_params: usize,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Slot {
    value: Complex64,
    flat: bool,
}

fn powi(x: Complex64, n: i64) -> Complex64 {
    let mut e = n.unsigned_abs();
    let mut acc = Complex64::new(1.0, 0.0);
    let mut sq = x;
    while e > 0 {
        if e & 1 == 1 {
            acc *= sq;
        }
        e >>= 1;
        if e > 0 {
            sq *= sq;
        }
    }
    if n < 0 {
        Complex64::new(1.0, 0.0) / acc
    } else {
        acc
    }
}

impl Tape {
    pub fn compile(exprs: &[Expr]) -> Tape {
        let mut ops = Vec::new();
        let mut by_ptr: HashMap<usize, usize> = HashMap::new();
        let mut by_value: HashMap<Expr, usize> = HashMap::new();
        let mut n_vars = 0;
        let mut n_params = 0;
        let outputs = exprs
            .iter()
            .map(|e| {
                n_vars = n_vars.max(e.var_extent());
                n_params = n_params.max(e.param_extent());
                Self::emit(e, &mut ops, &mut by_ptr, &mut by_value)
            })
            .collect();
        Tape {
            ops,
            outputs,
            n_vars,
            n_params,
        }
    }

    fn emit(
        e: &Expr,
        ops: &mut Vec<Op>,
        by_ptr: &mut HashMap<usize, usize>,
        by_value: &mut HashMap<Expr, usize>,
    ) -> usize {
        if let Some(&i) = by_ptr.get(&e.node_id()) {
            return i;
        }
        if let Some(&i) = by_value.get(e) {
            by_ptr.insert(e.node_id(), i);
            return i;
        }
        let op = match e.kind() {
            Kind::Const(c) => Op::Const(c.to_complex()),
            Kind::Var(i) => Op::Var(*i),
            Kind::ConjVar(i) => Op::ConjVar(*i),
            Kind::Param(k) => Op::Param(*k),
            Kind::Add(v) => Op::Add(v.iter().map(|x| Self::emit(x, ops, by_ptr, by_value)).collect()),
            Kind::Mul(v) => Op::Mul(v.iter().map(|x| Self::emit(x, ops, by_ptr, by_value)).collect()),
            Kind::Pow(b, n) => Op::Pow(Self::emit(b, ops, by_ptr, by_value), *n),
            Kind::Exp(a) => Op::Exp(Self::emit(a, ops, by_ptr, by_value)),
            Kind::Bump(a) => Op::Bump(Self::emit(a, ops, by_ptr, by_value)),
            Kind::Re(a) => Op::Re(Self::emit(a, ops, by_ptr, by_value)),
            Kind::Im(a) => Op::Im(Self::emit(a, ops, by_ptr, by_value)),
        };
        ops.push(op);
        let idx = ops.len() - 1;
        by_ptr.insert(e.node_id(), idx);
        by_value.insert(e.clone(), idx);
        idx
    }

    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }

    /// Number of coordinates the tape reads.
    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    /// Evaluates every output. `scratch` is reused between calls.
    pub fn eval_into(
        &self,
        z: &[Complex64],
        t: &[f64],
        scratch: &mut Vec<Slot>,
        out: &mut [Complex64],
    ) -> Result<(), Error> {
        if z.len() < self.n_vars || t.len() < self.n_params {
            return Err(Error::Dimension(format!(
                "field needs {} coordinates and {} parameters, got {} and {}",
                self.n_vars,
                self.n_params,
                z.len(),
                t.len()
            )));
        }
        scratch.clear();
        scratch.reserve(self.ops.len());
        let zero = Complex64::new(0.0, 0.0);
        for op in &self.ops {
            let slot = match op {
                Op::Const(c) => Slot { value: *c, flat: false },
                Op::Var(i) => Slot { value: z[*i], flat: false },
                Op::ConjVar(i) => Slot { value: z[*i].conj(), flat: false },
                Op::Param(k) => Slot { value: Complex64::new(t[*k], 0.0), flat: false },
                Op::Add(v) => {
                    let mut acc = zero;
                    let mut flat = true;
                    for &j in v {
                        let s = scratch[j];
                        if !s.flat {
                            flat = false;
                            acc += s.value;
                        }
                    }
                    Slot { value: acc, flat }
                }
                Op::Mul(v) => {
                    if v.iter().any(|&j| scratch[j].flat) {
                        Slot { value: zero, flat: true }
                    } else {
                        let mut acc = Complex64::new(1.0, 0.0);
                        for &j in v {
                            acc *= scratch[j].value;
                        }
                        Slot { value: acc, flat: false }
                    }
                }
                Op::Pow(b, n) => {
                    let s = scratch[*b];
                    if s.flat && *n > 0 {
                        Slot { value: zero, flat: true }
                    } else {
                        Slot { value: powi(s.value, *n), flat: false }
                    }
                }
                Op::Exp(a) => Slot { value: scratch[*a].value.exp(), flat: false },
                Op::Bump(a) => {
                    let s = scratch[*a].value.re;
                    if s.abs() >= 1.0 {
                        Slot { value: zero, flat: true }
                    } else {
                        Slot { value: Complex64::new(bump_value(s), 0.0), flat: false }
                    }
                }
                Op::Re(a) => {
                    let s = scratch[*a];
                    Slot { value: Complex64::new(s.value.re, 0.0), flat: s.flat }
                }
                Op::Im(a) => {
                    let s = scratch[*a];
                    Slot { value: Complex64::new(s.value.im, 0.0), flat: s.flat }
                }
            };
            scratch.push(slot);
        }
        for (o, &idx) in out.iter_mut().zip(&self.outputs) {
            let v = scratch[idx].value;
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::Pole(format!("non-finite value at z = {z:?}, t = {t:?}")));
            }
            *o = v;
        }
        Ok(())
    }

    /// Allocating convenience wrapper around [`Tape::eval_into`].
    pub fn eval(&self, z: &[Complex64], t: &[f64]) -> Result<Vec<Complex64>, Error> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.outputs.len()];
        self.eval_into(z, t, &mut Vec::new(), &mut out)?;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shared_subexpressions_are_emitted_once() {
        let z = Expr::var(0);
        let a = (&z * &z).exp();
        let tape = Tape::compile(&[&a + &Expr::one(), &a * &z]);
        let n_exp = tape.ops.iter().filter(|o| matches!(o, Op::Exp(_))).count();
        assert_eq!(n_exp, 1);
        let v = tape.eval(&[Complex64::new(0.5, 0.0)], &[]).unwrap();
        assert!((v[0].re - (0.25f64.exp() + 1.0)).abs() < 1e-15);
    }

    #[test]
    fn flat_factor_kills_a_pole() {
        let z = Expr::var(0);
        let f = &(&z * &Expr::int(2)).re().bump() * &z.recip();
        let tape = Tape::compile(&[f]);
        assert_eq!(tape.eval(&[Complex64::new(0.0, 0.0)], &[]).is_err(), true);
        let tape2 = Tape::compile(&[&(&(&z.re() - &Expr::int(3))).bump() * &z.recip()]);
        assert_eq!(tape2.eval(&[Complex64::new(0.0, 0.0)], &[]).unwrap()[0], Complex64::new(0.0, 0.0));
    }
}
