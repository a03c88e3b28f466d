//! Truncated power series over the complex rationals and the linear
//! algebra deciding whether a one-variable series is a power series in the
//! components of a parametrization.
//!
//! For the cusp `z ↦ (z⁵, z⁶ + z⁷)` and the ambient form `z₁ dz₂`, the
//! primitive of the pulled back form is not such a series. An ambient
//! primitive would have to pull back to it up to a constant, so the class
//! of `z₁ dz₂` in extendable cohomology is nonzero. The converse direction
//! is never claimed: a feasible system at some truncation proves nothing.

use std::collections::BTreeMap;
use std::fmt;

use crate::fields::CRational;
use crate::Error;

/// `Σ_{k ≤ N} c_k z^k` with exact coefficients; zero coefficients are not stored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruncatedSeries {
    pub n: usize,
    coeffs: BTreeMap<usize, CRational>,
}

impl TruncatedSeries {
    pub fn zero(n: usize) -> TruncatedSeries {
        TruncatedSeries { n, coeffs: BTreeMap::new() }
    }

    pub fn one(n: usize) -> TruncatedSeries {
        TruncatedSeries::monomial(CRational::one(), 0, n)
    }

    /// `c·z^k`, or zero when `k > n`.
    pub fn monomial(c: CRational, k: usize, n: usize) -> TruncatedSeries {
        let mut s = TruncatedSeries::zero(n);
        s.set(k, c);
        s
    }

    /// From `(degree, coefficient)` pairs; repeated degrees add up.
    pub fn from_terms(terms: impl IntoIterator<Item = (usize, CRational)>, n: usize) -> TruncatedSeries {
        let mut s = TruncatedSeries::zero(n);
        for (k, c) in terms {
            let sum = s.coeff(k).add(&c);
            s.set(k, sum);
        }
        s
    }

    fn set(&mut self, k: usize, c: CRational) {
        if k > self.n {
            return;
        }
        if c.is_zero() {
            self.coeffs.remove(&k);
        } else {
            self.coeffs.insert(k, c);
        }
    }

    pub fn coeff(&self, k: usize) -> CRational {
        self.coeffs.get(&k).cloned().unwrap_or_else(CRational::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (usize, &CRational)> {
        self.coeffs.iter().map(|(k, c)| (*k, c))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Lowest degree with a nonzero coefficient.
    pub fn order(&self) -> Option<usize> {
        self.coeffs.keys().next().copied()
    }

    pub fn max_degree(&self) -> Option<usize> {
        self.coeffs.keys().next_back().copied()
    }

    pub fn truncate(&self, n: usize) -> TruncatedSeries {
        TruncatedSeries::from_terms(self.coeffs.iter().map(|(k, c)| (*k, c.clone())), n.min(self.n))
    }

    pub fn add(&self, o: &TruncatedSeries) -> TruncatedSeries {
        let n = self.n.min(o.n);
        TruncatedSeries::from_terms(self.terms().chain(o.terms()).map(|(k, c)| (k, c.clone())), n)
    }

    pub fn sub(&self, o: &TruncatedSeries) -> TruncatedSeries {
        self.add(&o.scale(&CRational::from_integer(-1)))
    }

    pub fn scale(&self, c: &CRational) -> TruncatedSeries {
        TruncatedSeries::from_terms(self.terms().map(|(k, x)| (k, x.mul(c))), self.n)
    }

    pub fn mul(&self, o: &TruncatedSeries) -> TruncatedSeries {
        let n = self.n.min(o.n);
        let mut out = TruncatedSeries::zero(n);
        for (i, a) in self.terms() {
            for (j, b) in o.terms() {
                if i + j > n {
                    break;
                }
                let sum = out.coeff(i + j).add(&a.mul(b));
                out.set(i + j, sum);
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> TruncatedSeries {
        (0..e).fold(TruncatedSeries::one(self.n), |acc, _| acc.mul(self))
    }

    /// `d/dz`.
    pub fn derivative(&self) -> TruncatedSeries {
        TruncatedSeries::from_terms(
            self.terms()
                .filter(|(k, _)| *k > 0)
                .map(|(k, c)| (k - 1, c.mul(&CRational::from_integer(k as i64)))),
            self.n.saturating_sub(1),
        )
    }
}

impl fmt::Display for TruncatedSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0 + O(z^{})", self.n + 1);
        }
        for (idx, (k, c)) in self.terms().enumerate() {
            if idx > 0 {
                write!(f, " + ")?;
            }
            match k {
                0 => write!(f, "{c}")?,
                1 => write!(f, "{c}*z")?,
                _ => write!(f, "{c}*z^{k}")?,
            }
        }
        write!(f, " + O(z^{})", self.n + 1)
    }
}

/// A polynomial map `ℂ → ℂ^m`, `z ↦ (f₁(z), …, f_m(z))`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeriesMap {
    pub components: Vec<BTreeMap<usize, CRational>>,
}

impl SeriesMap {
    /// Components given as lists of `(degree, integer coefficient)`.
    pub fn from_integer_terms(components: &[&[(usize, i64)]]) -> SeriesMap {
        SeriesMap {
            components: components
                .iter()
                .map(|terms| terms.iter().map(|(k, c)| (*k, CRational::from_integer(*c))).collect())
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, i: usize, n: usize) -> TruncatedSeries {
        TruncatedSeries::from_terms(self.components[i].iter().map(|(k, c)| (*k, c.clone())), n)
    }

    /// Vanishing order of each component at 0.
    pub fn orders(&self) -> Vec<Option<usize>> {
        self.components
            .iter()
            .map(|c| c.iter().find(|(_, v)| !v.is_zero()).map(|(k, _)| *k))
            .collect()
    }
}

/// The series of `f₁^{a₁}⋯f_m^{a_m}` modulo `z^{n+1}`.
pub fn pullback_series(exponents: &[u32], f: &SeriesMap, n: usize) -> Result<TruncatedSeries, Error> {
    if exponents.len() != f.dim() {
        return Err(Error::Dimension(format!("{} exponents for a map to ℂ^{}", exponents.len(), f.dim())));
    }
    Ok(exponents
        .iter()
        .enumerate()
        .fold(TruncatedSeries::one(n), |acc, (i, e)| acc.mul(&f.component(i, n).pow(*e))))
}

/// A holomorphic polynomial 1-form `Σ c · z^a dz_j` on `ℂ^m`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AmbientOneForm {
    pub dim: usize,
    /// `(coefficient, exponent vector, index j of dz_j)`.
    pub terms: Vec<(CRational, Vec<u32>, usize)>,
}

impl AmbientOneForm {
    /// `z^a dz_j`.
    pub fn monomial(dim: usize, exponents: Vec<u32>, j: usize) -> AmbientOneForm {
        AmbientOneForm {
            dim,
            terms: vec![(CRational::one(), exponents, j)],
        }
    }

    /// The coefficient of `dz` in `f*ω`, modulo `z^{n+1}`.
    pub fn pullback(&self, f: &SeriesMap, n: usize) -> Result<TruncatedSeries, Error> {
        if f.dim() != self.dim {
            return Err(Error::Dimension(format!("form on ℂ^{} pulled back by a map to ℂ^{}", self.dim, f.dim())));
        }
        let mut acc = TruncatedSeries::zero(n);
        for (c, a, j) in &self.terms {
            if a.len() != self.dim || *j >= self.dim {
                return Err(Error::Dimension("malformed ambient 1-form term".into()));
            }
            let g = pullback_series(a, f, n)?;
            let dfj = f.component(*j, n + 1).derivative().truncate(n);
            acc = acc.add(&g.mul(&dfj).scale(c));
        }
        Ok(acc)
    }
}

/// Primitive with zero constant term of `Σ c_k z^k dz`, where `k` may be
/// negative in the input.
///
/// A `z⁻¹` term has no power series primitive and is reported as
/// logarithmic; lower powers would need negative powers in the result.
pub fn primitive_1d(coeffs: &BTreeMap<i64, CRational>, n: usize) -> Result<TruncatedSeries, Error> {
    let mut out = TruncatedSeries::zero(n);
    for (k, c) in coeffs {
        if c.is_zero() {
            continue;
        }
        match *k {
            -1 => return Err(Error::Logarithmic(format!("the term {c}*z^(-1) dz integrates to a logarithm"))),
            k if k < -1 => return Err(Error::Argument(format!("the term {c}*z^({k}) dz has no power series primitive"))),
            k => {
                let e = (k + 1) as usize;
                let v = c.div(&CRational::from_integer(k + 1)).expect("nonzero");
                out = out.add(&TruncatedSeries::monomial(v, e, n));
            }
        }
    }
    Ok(out)
}

/// Primitive of a truncated series, truncated at `n`.
pub fn primitive_series(g: &TruncatedSeries, n: usize) -> TruncatedSeries {
    let coeffs = g.terms().map(|(k, c)| (k as i64, c.clone())).collect();
    primitive_1d(&coeffs, n).expect("no negative powers")
}

/// Outcome of the truncated membership test.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Membership {
    /// `h − const = Σ c_a f^a` modulo `z^{N+1}`, with the coefficients.
    Feasible { certificate: BTreeMap<Vec<u32>, CRational> },
    /// Matching degrees `1..=degree` is already impossible.
    Infeasible { degree: usize },
}

impl Membership {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Membership::Feasible { .. })
    }
}

/// Exponent vectors `a ≠ 0` with `Σ a_i ord(f_i) ≤ n`, in lexicographic order.
fn generator_monomials(f: &SeriesMap, n: usize) -> Result<Vec<Vec<u32>>, Error> {
    let orders = f.orders();
    if orders.iter().any(|o| matches!(o, Some(0))) {
        return Err(Error::Argument("map components must vanish at the origin".into()));
    }
    let mut out = Vec::new();
    fn go(i: usize, left: usize, orders: &[Option<usize>], cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if i == orders.len() {
            if cur.iter().any(|e| *e > 0) {
                out.push(cur.clone());
            }
            return;
        }
        match orders[i] {
            // a zero component only contributes through exponent 0
            None => {
                cur.push(0);
                go(i + 1, left, orders, cur, out);
                cur.pop();
            }
            Some(o) => {
                for e in 0..=left / o {
                    cur.push(e as u32);
                    go(i + 1, left - e * o, orders, cur, out);
                    cur.pop();
                }
            }
        }
    }
    go(0, n, &orders, &mut Vec::new(), &mut out);
    Ok(out)
}

/// Decides whether `h` agrees modulo `z^{n+1}` and constants with a
/// polynomial in the components of `f`.
///
/// Gaussian elimination over the complex rationals, one degree at a time,
/// so an inconsistency is reported at the lowest degree where it appears.
pub fn subalgebra_membership(h: &TruncatedSeries, f: &SeriesMap, n: usize) -> Result<Membership, Error> {
    if h.max_degree().is_some_and(|d| d > n) {
        return Err(Error::Argument(format!("truncation degree {n} is below the degree of h")));
    }
    let gens = generator_monomials(f, n)?;
    let columns: Vec<TruncatedSeries> = gens.iter().map(|a| pullback_series(a, f, n)).collect::<Result<_, _>>()?;
    let m = gens.len();
    // echelon rows: (pivot column, coefficients, right-hand side)
    let mut rows: Vec<(usize, Vec<CRational>, CRational)> = Vec::new();
    for k in 1..=n {
        let mut row: Vec<CRational> = columns.iter().map(|c| c.coeff(k)).collect();
        let mut rhs = h.coeff(k);
        for (p, prow, prhs) in &rows {
            if row[*p].is_zero() {
                continue;
            }
            let factor = row[*p].clone();
            for j in 0..m {
                if !prow[j].is_zero() {
                    row[j] = row[j].sub(&factor.mul(&prow[j]));
                }
            }
            rhs = rhs.sub(&factor.mul(prhs));
        }
        match row.iter().position(|x| !x.is_zero()) {
            None if rhs.is_zero() => {}
            None => return Ok(Membership::Infeasible { degree: k }),
            Some(p) => {
                let inv = row[p].inv().expect("nonzero pivot");
                for x in row.iter_mut() {
                    *x = x.mul(&inv);
                }
                rhs = rhs.mul(&inv);
                // keep earlier rows reduced in the new pivot column
                for (_, prow, prhs) in rows.iter_mut() {
                    if prow[p].is_zero() {
                        continue;
                    }
                    let factor = prow[p].clone();
                    for j in 0..m {
                        if !row[j].is_zero() {
                            prow[j] = prow[j].sub(&factor.mul(&row[j]));
                        }
                    }
                    *prhs = prhs.sub(&factor.mul(&rhs));
                }
                rows.push((p, row, rhs));
            }
        }
    }
    // reduced echelon form: free unknowns are set to zero
    let mut certificate = BTreeMap::new();
    for (p, _, rhs) in rows {
        if !rhs.is_zero() {
            certificate.insert(gens[p].clone(), rhs);
        }
    }
    Ok(Membership::Feasible { certificate })
}

/// `h − Σ c_a f^a` with the constant term dropped; identically zero for a
/// valid certificate.
pub fn certificate_residual(h: &TruncatedSeries, f: &SeriesMap, certificate: &BTreeMap<Vec<u32>, CRational>, n: usize) -> Result<TruncatedSeries, Error> {
    let mut acc = h.truncate(n);
    for (a, c) in certificate {
        acc = acc.sub(&pullback_series(a, f, n)?.scale(c));
    }
    Ok(TruncatedSeries::from_terms(acc.terms().filter(|(k, _)| *k > 0).map(|(k, c)| (k, c.clone())), n))
}

/// The cusp `z ↦ (z⁵, z⁶ + z⁷)`.
pub fn cusp_map() -> SeriesMap {
    SeriesMap::from_integer_terms(&[&[(5, 1)], &[(6, 1), (7, 1)]])
}

/// The ambient form `z₁ dz₂`.
pub fn cusp_form() -> AmbientOneForm {
    AmbientOneForm::monomial(2, vec![1, 0], 1)
}

/// Result of the obstruction pipeline at one truncation degree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObstructionReport {
    pub n: usize,
    /// Primitive of the pulled back form.
    pub h: TruncatedSeries,
    pub membership: Membership,
    /// Exact residual of the certificate when feasible.
    pub residual: Option<TruncatedSeries>,
}

impl ObstructionReport {
    /// An inconsistent system shows the class of the form is nonzero.
    pub fn obstruction_degree(&self) -> Option<usize> {
        match self.membership {
            Membership::Infeasible { degree } => Some(degree),
            Membership::Feasible { .. } => None,
        }
    }
}

/// Pullback, primitive and membership test for a given form and map.
pub fn obstruction(omega: &AmbientOneForm, f: &SeriesMap, n: usize) -> Result<ObstructionReport, Error> {
    let g = omega.pullback(f, n.saturating_sub(1))?;
    let h = primitive_series(&g, n);
    let membership = subalgebra_membership(&h, f, n)?;
    let residual = match &membership {
        Membership::Feasible { certificate } => Some(certificate_residual(&h, f, certificate, n)?),
        Membership::Infeasible { .. } => None,
    };
    Ok(ObstructionReport { n, h, membership, residual })
}

/// The obstruction pipeline for `z₁ dz₂` on the cusp.
pub fn bloom_herrera_certificate(n: usize) -> Result<ObstructionReport, Error> {
    obstruction(&cusp_form(), &cusp_map(), n)
}

/// Runs the pipeline for every truncation degree in `degrees`.
pub fn sweep(omega: &AmbientOneForm, f: &SeriesMap, degrees: impl IntoIterator<Item = usize>) -> Result<Vec<ObstructionReport>, Error> {
    degrees.into_iter().map(|n| obstruction(omega, f, n)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(p: i64, d: i64) -> CRational {
        CRational::from_ratio(p, d)
    }

    #[test]
    fn generator_series() {
        let f = cusp_map();
        assert_eq!(pullback_series(&[1, 0], &f, 20).unwrap(), TruncatedSeries::monomial(q(1, 1), 5, 20));
        assert_eq!(pullback_series(&[0, 1], &f, 20).unwrap(), TruncatedSeries::from_terms([(6, q(1, 1)), (7, q(1, 1))], 20));
        assert_eq!(pullback_series(&[1, 1], &f, 13).unwrap(), TruncatedSeries::from_terms([(11, q(1, 1)), (12, q(1, 1))], 13));
    }

    #[test]
    fn primitives() {
        let g: BTreeMap<i64, CRational> = [(10, q(6, 1)), (11, q(7, 1))].into_iter().collect();
        assert_eq!(primitive_1d(&g, 20).unwrap(), TruncatedSeries::from_terms([(11, q(6, 11)), (12, q(7, 12))], 20));
        assert!(primitive_1d(&BTreeMap::new(), 5).unwrap().is_zero());
        let log: BTreeMap<i64, CRational> = [(-1, q(1, 1))].into_iter().collect();
        assert!(matches!(primitive_1d(&log, 5), Err(Error::Logarithmic(_))));
        assert_eq!(cusp_form().pullback(&cusp_map(), 19).unwrap(), TruncatedSeries::from_terms([(10, q(6, 1)), (11, q(7, 1))], 19));
    }

    #[test]
    fn generators_are_members() {
        let f = cusp_map();
        let u = pullback_series(&[1, 0], &f, 20).unwrap();
        match subalgebra_membership(&u, &f, 20).unwrap() {
            Membership::Feasible { certificate } => assert_eq!(certificate, [(vec![1, 0], q(1, 1))].into_iter().collect()),
            other => panic!("{other:?}"),
        }
        let v = pullback_series(&[0, 1], &f, 20).unwrap();
        match subalgebra_membership(&v, &f, 20).unwrap() {
            Membership::Feasible { certificate } => assert_eq!(certificate, [(vec![0, 1], q(1, 1))].into_iter().collect()),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn cusp_obstruction_appears_at_thirteen() {
        let feasible = bloom_herrera_certificate(12).unwrap();
        assert!(feasible.membership.is_feasible());
        assert!(feasible.residual.unwrap().is_zero());
        assert_eq!(bloom_herrera_certificate(20).unwrap().obstruction_degree(), Some(13));
    }

    #[test]
    fn exact_forms_and_smooth_curves_have_no_obstruction() {
        let dz2 = AmbientOneForm::monomial(2, vec![0, 0], 1);
        let r = obstruction(&dz2, &cusp_map(), 20).unwrap();
        assert!(r.membership.is_feasible() && r.residual.unwrap().is_zero());
        let line = SeriesMap::from_integer_terms(&[&[(1, 1)], &[]]);
        let r = obstruction(&cusp_form(), &line, 20).unwrap();
        assert!(r.membership.is_feasible());
        let h = TruncatedSeries::from_terms([(3, q(2, 7)), (9, q(-1, 1))], 20);
        assert!(subalgebra_membership(&h, &line, 20).unwrap().is_feasible());
    }
}
