//! Chern forms of connections and Bott difference forms between two
//! connections on the same bundle.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::bundles::{curvature, permutations, Connection, FormMatrix};
use crate::fields::{Expr, Slot, Substitution};
use crate::forms::{ChartId, CompiledForm, Form, Tangent};
use crate::mesh::GaussLegendre;
use crate::Error;

/// `(i/2π)^q`.
pub fn chern_normalization(q: usize) -> Expr {
    Expr::float(Complex64::new(0.0, 1.0 / (2.0 * PI))).powi(q as i64)
}

/// Determinant of a matrix of even forms by the Leibniz formula.
fn even_det(k: &FormMatrix, idx: &[usize]) -> Result<Form, Error> {
    let m = idx.len();
    let deg = k.degree() * m;
    let mut acc = Form::zero(k.chart(), k.dim(), deg);
    for (p, s) in permutations(m) {
        let mut term = Form::scalar(k.chart(), k.dim(), Expr::one());
        for i in 0..m {
            term = term.wedge(k.get(idx[i], idx[p[i]]))?;
            if term.is_zero() {
                break;
            }
        }
        if term.is_zero() {
            continue;
        }
        acc = if s < 0 { acc.try_sub(&term)? } else { acc.try_add(&term)? };
    }
    Ok(acc)
}

/// `c^q = (i/2π)^q Σ_q(K)`, the sum of the principal `q×q` minors of the
/// curvature matrix.
pub fn chern_form_of_curvature(k: &FormMatrix, q: usize) -> Result<Form, Error> {
    let n = k.n();
    if q == 0 {
        return Ok(Form::scalar(k.chart(), k.dim(), Expr::one()));
    }
    let mut acc = Form::zero(k.chart(), k.dim(), 2 * q);
    if q > n {
        return Ok(acc);
    }
    let mut stack: Vec<Vec<usize>> = vec![vec![]];
    while let Some(cur) = stack.pop() {
        if cur.len() == q {
            acc = acc.try_add(&even_det(k, &cur)?)?;
            continue;
        }
        let start = cur.last().map_or(0, |l| l + 1);
        for i in (start..n).rev() {
            let mut next = cur.clone();
            next.push(i);
            stack.push(next);
        }
    }
    Ok(acc.scale(&chern_normalization(q)))
}

/// `c^q(∇)` on one chart.
pub fn chern_form(theta: &FormMatrix, q: usize) -> Result<Form, Error> {
    chern_form_of_curvature(&curvature(theta), q)
}

/// `c^q(∇)` on every chart where the connection is given.
pub fn chern_forms(conn: &Connection, q: usize) -> Result<BTreeMap<ChartId, Form>, Error> {
    conn.forms
        .iter()
        .map(|(c, t)| Ok((*c, chern_form(t, q)?)))
        .collect()
}

/// Fibre integral over `[0, 1]` of the `dς`-component of `c^q` of the family
/// `(1 − ς)θ₀ + ςθ₁`.
fn fibre_integral(theta0: &FormMatrix, theta1: &FormMatrix, q: usize) -> Result<Form, Error> {
    if theta0.chart() != theta1.chart() {
        return Err(Error::ChartMismatch(theta0.chart(), theta1.chart()));
    }
    let uses_params = |m: &FormMatrix| m.entries().iter().any(|f| f.terms().any(|(c, _)| c.param_extent() > 0));
    if uses_params(theta0) || uses_params(theta1) {
        return Err(Error::Argument("connection forms may not depend on parameters".into()));
    }
    let s = Expr::param(0);
    let family = theta0.try_add(&theta1.try_sub(theta0)?.scale(&s))?;
    let total = chern_form(&family, q)?;
    let (alpha, _) = total.split_dt(0);
    let rule = GaussLegendre::order16();
    let mut acc = Form::zero(theta0.chart(), theta0.dim(), alpha.degree());
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        let at = alpha.substitute_coeffs(&Substitution::params(vec![Expr::real(*x)]));
        acc = acc.try_add(&at.scale(&Expr::real(*w)))?;
    }
    Ok(acc)
}

/// Bott difference form `c^q(∇₀, ∇₁)`, with `d c^q(∇₀,∇₁) = c^q(∇₁) − c^q(∇₀)`.
///
/// It is stored as `½(F(θ₀,θ₁) − F(θ₁,θ₀))` where `F` is the fibre
/// integral; both halves are kept so that swapping the arguments negates
/// sampled values bit for bit.
#[derive(Clone, Debug)]
pub struct DifferenceForm {
    pub q: usize,
    forward: Form,
    backward: Form,
    form: Form,
}

impl DifferenceForm {
    pub fn new(theta0: &FormMatrix, theta1: &FormMatrix, q: usize) -> Result<DifferenceForm, Error> {
        let forward = fibre_integral(theta0, theta1, q)?;
        let backward = fibre_integral(theta1, theta0, q)?;
        DifferenceForm::from_halves(q, forward, backward)
    }

    fn from_halves(q: usize, forward: Form, backward: Form) -> Result<DifferenceForm, Error> {
        let form = forward.try_sub(&backward)?.scale(&Expr::ratio(1, 2));
        Ok(DifferenceForm {
            q,
            forward,
            backward,
            form,
        })
    }

    /// `c^q(∇₁, ∇₀)`.
    pub fn swapped(&self) -> DifferenceForm {
        DifferenceForm::from_halves(self.q, self.backward.clone(), self.forward.clone()).expect("same chart")
    }

    pub fn form(&self) -> &Form {
        &self.form
    }

    pub fn into_form(self) -> Form {
        self.form
    }

    /// Sampled value, computed as `½(F − B)` in floating point.
    pub fn evaluate(&self, z: &[Complex64], vectors: &[Tangent]) -> Result<Complex64, Error> {
        self.compile().evaluate(z, vectors, &mut Vec::new())
    }

    pub fn compile(&self) -> CompiledDifference {
        CompiledDifference {
            forward: self.forward.compile(),
            backward: self.backward.compile(),
        }
    }
}

/// Both halves of a difference form, compiled for repeated sampling.
#[derive(Clone, Debug)]
pub struct CompiledDifference {
    forward: CompiledForm,
    backward: CompiledForm,
}

impl CompiledDifference {
    pub fn evaluate(&self, z: &[Complex64], vectors: &[Tangent], scratch: &mut Vec<Slot>) -> Result<Complex64, Error> {
        let f = self.forward.evaluate(z, &[], vectors, scratch)?;
        let b = self.backward.evaluate(z, &[], vectors, scratch)?;
        Ok((f - b) * 0.5)
    }
}

/// Convenience wrapper for `DifferenceForm::new`.
pub fn bott_difference(theta0: &FormMatrix, theta1: &FormMatrix, q: usize) -> Result<DifferenceForm, Error> {
    DifferenceForm::new(theta0, theta1, q)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64, y: f64) -> Complex64 {
        Complex64::new(x, y)
    }

    fn m1(src: &str) -> FormMatrix {
        FormMatrix::from_rows(vec![vec![Form::parse(src, 0, 1).unwrap()]]).unwrap()
    }

    #[test]
    fn rank_one_chern_form_is_normalized_d_theta() {
        let theta = m1("conj(z1)*dz1");
        let c1 = chern_form(&theta, 1).unwrap();
        let want = theta.get(0, 0).d().scale(&chern_normalization(1));
        let vs = [Tangent::real(&[c(1.0, 0.0)]), Tangent::real(&[c(0.0, 1.0)])];
        let p = [c(0.3, 0.1)];
        assert!((c1.evaluate(&p, &[], &vs).unwrap() - want.evaluate(&p, &[], &vs).unwrap()).norm() < 1e-15);
        assert!(chern_form(&theta, 2).unwrap().is_zero());
        assert_eq!(chern_form(&theta, 0).unwrap().as_scalar(), Some(Expr::one()));
        assert!(chern_form(&FormMatrix::zero(0, 1, 2, 1), 1).unwrap().is_zero());
    }

    #[test]
    fn rank_one_bott_form_is_the_difference_of_connections() {
        let t0 = m1("conj(z1)*dz1");
        let t1 = m1("z1^2*dzbar1 + dz1");
        let b = bott_difference(&t0, &t1, 1).unwrap();
        let want = t1.get(0, 0).try_sub(t0.get(0, 0)).unwrap().scale(&chern_normalization(1));
        for v in [Tangent::d_dz(0, 1), Tangent::d_dzbar(0, 1)] {
            let p = [c(0.4, -0.2)];
            let x = b.evaluate(&p, std::slice::from_ref(&v)).unwrap();
            let y = want.evaluate(&p, &[], &[v]).unwrap();
            assert!((x - y).norm() < 1e-14);
        }
        assert!(bott_difference(&t0, &t0, 1).unwrap().form().evaluate(&[c(0.1, 0.1)], &[], &[Tangent::d_dz(0, 1)]).unwrap().norm() < 1e-15);
    }

    #[test]
    fn bott_identity_rank_two() {
        let f = |s: &str| Form::parse(s, 0, 1).unwrap();
        let t0 = FormMatrix::from_rows(vec![vec![f("z1*dzbar1"), f("dz1")], vec![f("conj(z1)*dz1"), f("z1*dz1")]]).unwrap();
        let t1 = FormMatrix::from_rows(vec![vec![f("dzbar1"), f("z1^2*dz1")], vec![f("z1*dzbar1"), f("conj(z1)^2*dz1")]]).unwrap();
        let b = bott_difference(&t0, &t1, 1).unwrap();
        let lhs = b.form().d();
        let rhs = chern_form(&t1, 1).unwrap().try_sub(&chern_form(&t0, 1).unwrap()).unwrap();
        let vs = [Tangent::real(&[c(1.0, 0.0)]), Tangent::real(&[c(0.0, 1.0)])];
        for p in [c(0.2, 0.3), c(-0.6, 0.1)] {
            let x = lhs.evaluate(&[p], &[], &vs).unwrap();
            let y = rhs.evaluate(&[p], &[], &vs).unwrap();
            assert!((x - y).norm() < 1e-10, "{x} vs {y}");
            let v = [Tangent::real(&[c(0.3, 0.8)])];
            assert_eq!(b.swapped().evaluate(&[p], &v).unwrap(), -b.evaluate(&[p], &v).unwrap());
        }
    }
}
