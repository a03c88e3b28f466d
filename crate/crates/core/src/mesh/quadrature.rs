//! Gauss–Legendre rules and adaptive cubature on the unit cube.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::Error;

/// Default absolute tolerance for cubature.
pub const DEFAULT_TOL: f64 = 1e-9;
/// Default cap on the number of leaf cells.
pub const DEFAULT_BUDGET: usize = 1 << 16;

/// Gauss–Legendre nodes and weights on `[0, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Computes the `n`-point rule by Newton iteration on `P_n`.
    pub fn new(n: usize) -> GaussLegendre {
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                let pn = if n == 0 { 1.0 } else if n == 1 { x } else { p1 };
                let pm = if n == 1 { 1.0 } else { p0 };
                dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
                let dx = pn / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = 0.5 * (1.0 - x);
            nodes[n - 1 - i] = 0.5 * (1.0 + x);
            weights[i] = 0.5 * w;
            weights[n - 1 - i] = 0.5 * w;
        }
        GaussLegendre { nodes, weights }
    }

    /// The shared order-8 rule.
    pub fn order8() -> &'static GaussLegendre {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| GaussLegendre::new(8))
    }

    /// The shared order-16 rule.
    pub fn order16() -> &'static GaussLegendre {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| GaussLegendre::new(16))
    }
}

/// Result of a cubature.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Integral {
    pub value: Complex64,
    pub error: f64,
    pub cells: usize,
}

impl Integral {
    pub fn zero() -> Integral {
        Integral::default()
    }

    pub fn add(self, o: Integral) -> Integral {
        Integral {
            value: self.value + o.value,
            error: self.error + o.error,
            cells: self.cells + o.cells,
        }
    }

    pub fn scale(self, s: f64) -> Integral {
        Integral {
            value: self.value * s,
            error: self.error * s.abs(),
            cells: self.cells,
        }
    }
}

struct Cell {
    lo: Vec<f64>,
    size: f64,
    fine: Complex64,
    err: f64,
    seq: usize,
}

impl PartialEq for Cell {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Cell {}
impl PartialOrd for Cell {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Cell {
    fn cmp(&self, o: &Self) -> Ordering {
        self.err.total_cmp(&o.err).then_with(|| o.seq.cmp(&self.seq))
    }
}

/// Tensor Gauss–Legendre on one axis-aligned cube.
fn tensor_rule<F>(f: &mut F, lo: &[f64], size: f64, rule: &GaussLegendre, u: &mut [f64]) -> Result<Complex64, Error>
where
    F: FnMut(&[f64]) -> Result<Complex64, Error>,
{
    let k = lo.len();
    let m = rule.nodes.len();
    let total = m.pow(k as u32);
    let mut acc = Complex64::new(0.0, 0.0);
    let vol = size.powi(k as i32);
    for idx in 0..total {
        let mut r = idx;
        let mut w = vol;
        for j in 0..k {
            let a = r % m;
            r /= m;
            u[j] = lo[j] + size * rule.nodes[a];
            w *= rule.weights[a];
        }
        acc += f(u)? * w;
    }
    Ok(acc)
}

fn children(lo: &[f64], size: f64) -> Vec<Vec<f64>> {
    let k = lo.len();
    let h = size / 2.0;
    (0..1usize << k)
        .map(|mask| (0..k).map(|j| lo[j] + if mask >> j & 1 == 1 { h } else { 0.0 }).collect())
        .collect()
}

/// Globally adaptive dyadic cubature of `f` over `[0,1]^k`.
///
/// Each cell is estimated by the order-8 tensor rule and by the sum of the
/// same rule on its `2^k` children; the difference is the error estimate.
/// The worst cell is refined until the summed estimate drops below `tol`.
pub fn adaptive_cube<F>(k: usize, tol: f64, budget: usize, mut f: F) -> Result<Integral, Error>
where
    F: FnMut(&[f64]) -> Result<Complex64, Error>,
{
    let rule = GaussLegendre::order8();
    let mut u = vec![0.0; k];
    if k == 0 {
        return Ok(Integral {
            value: f(&u)?,
            error: 0.0,
            cells: 1,
        });
    }
    let mut seq = 0usize;
    let mut make = |lo: Vec<f64>, size: f64, coarse: Complex64, f: &mut F, u: &mut [f64]| -> Result<Cell, Error> {
        let mut fine = Complex64::new(0.0, 0.0);
        for c in children(&lo, size) {
            fine += tensor_rule(f, &c, size / 2.0, rule, u)?;
        }
        seq += 1;
        Ok(Cell {
            err: (fine - coarse).norm(),
            lo,
            size,
            fine,
            seq,
        })
    };
    let root_lo = vec![0.0; k];
    let coarse = tensor_rule(&mut f, &root_lo, 1.0, rule, &mut u)?;
    let root = make(root_lo, 1.0, coarse, &mut f, &mut u)?;
    let mut heap = BinaryHeap::new();
    let mut total_err = root.err;
    heap.push(root);
    let mut leaves = 1usize;
    let fan = 1usize << k;
    while total_err > tol {
        if leaves + fan - 1 > budget {
            return Err(Error::Quadrature {
                estimate: total_err,
                cells: leaves,
            });
        }
        let cell = heap.pop().expect("nonempty heap");
        total_err -= cell.err;
        let h = cell.size / 2.0;
        for c in children(&cell.lo, cell.size) {
            let coarse = tensor_rule(&mut f, &c, h, rule, &mut u)?;
            let child = make(c, h, coarse, &mut f, &mut u)?;
            total_err += child.err;
            heap.push(child);
        }
        leaves += fan - 1;
        if total_err < 0.0 {
            total_err = heap.iter().map(|c| c.err).sum();
        }
    }
    // deterministic summation order: by creation sequence
    let mut cells: Vec<Cell> = heap.into_vec();
    cells.sort_by_key(|c| c.seq);
    let value = cells.iter().fold(Complex64::new(0.0, 0.0), |a, c| a + c.fine);
    let error = cells.iter().map(|c| c.err).sum();
    Ok(Integral {
        value,
        error,
        cells: leaves,
    })
}

/// Collapsed (Duffy) map from the unit cube onto the standard simplex
/// `{x_j ≥ 0, Σ x_j ≤ 1}`; returns the Jacobian determinant.
pub fn duffy(u: &[f64], x: &mut [f64]) -> f64 {
    let k = u.len();
    let mut remaining = 1.0;
    let mut jac = 1.0;
    for j in 0..k {
        x[j] = remaining * u[j];
        jac *= remaining;
        remaining *= 1.0 - u[j];
    }
    jac
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rules_integrate_polynomials_exactly() {
        for (rule, deg) in [(GaussLegendre::new(8), 15), (GaussLegendre::new(16), 31)] {
            for p in 0..=deg {
                let s: f64 = rule.nodes.iter().zip(&rule.weights).map(|(x, w)| w * x.powi(p)).sum();
                assert!((s - 1.0 / (p as f64 + 1.0)).abs() < 1e-14, "degree {p}");
            }
        }
    }

    #[test]
    fn adaptive_cube_handles_a_kink() {
        let r = adaptive_cube(2, 1e-10, DEFAULT_BUDGET, |u| {
            Ok(Complex64::new((u[0] - 0.3).abs() * u[1], 0.0))
        })
        .unwrap();
        let exact = 0.5 * (0.3f64.powi(2) / 2.0 + 0.7f64.powi(2) / 2.0);
        assert!((r.value.re - exact).abs() < 1e-10);
    }

    #[test]
    fn duffy_covers_the_simplex_with_unit_mass() {
        for k in 1..=3 {
            let r = adaptive_cube(k, 1e-12, DEFAULT_BUDGET, |u| {
                let mut x = vec![0.0; k];
                Ok(Complex64::new(duffy(u, &mut x), 0.0))
            })
            .unwrap();
            let fact: f64 = (1..=k).map(|j| j as f64).product();
            assert!((r.value.re - 1.0 / fact).abs() < 1e-12);
        }
    }

    #[test]
    fn budget_exhaustion_is_an_error() {
        let r = adaptive_cube(1, 1e-14, 8, |u| Ok(Complex64::new(u[0].sqrt().sin() / (u[0] + 1e-9).sqrt(), 0.0)));
        assert!(matches!(r, Err(Error::Quadrature { .. })));
    }
}
