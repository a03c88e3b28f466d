//! Ready-made compact models: the projective line with its two standard
//! charts and a torus, together with coherent triangulations and the
//! usual line bundles.

use num_complex::Complex64;

use crate::bundles::{Bundle, ExprMatrix};
use crate::fields::Expr;
use crate::forms::ChartMap;
use crate::geometry::{Atlas, Chart, Region};
use crate::mesh::{Simplex, Triangulation, VertexKey};
use crate::Error;

/// Radius of both chart disks of the projective line.
pub const P1_CHART_RADIUS: f64 = 1.5;
/// Half-width of the chart-1 square that is triangulated as a fan.
const P1_INNER_HALF_WIDTH: f64 = 0.45;

/// `ℙ¹` with coordinates `z` (chart 0) and `w = 1/z` (chart 1), each on
/// the disk of radius 1.5.
pub fn projective_line() -> Atlas {
    let disk = Region::Disk { center: Complex64::new(0.0, 0.0), radius: P1_CHART_RADIUS };
    let charts = vec![Chart::new(0, vec![disk.clone()]).expect("disk chart"), Chart::new(1, vec![disk]).expect("disk chart")];
    let mut atlas = Atlas::new(charts).expect("chart ids 0 and 1");
    let inv = Expr::var(0).recip();
    atlas.add_transition(ChartMap::new(0, 1, 1, vec![inv.clone()])).expect("holomorphic");
    atlas.add_transition(ChartMap::new(1, 1, 0, vec![inv])).expect("holomorphic");
    atlas
}

/// `O(d)` on `ℙ¹`: `e₁ = e₀ z^d`.
pub fn line_bundle(atlas: &Atlas, d: i64) -> Result<Bundle, Error> {
    Bundle::new(atlas, 1, vec![(0, 1, ExprMatrix::scalar(Expr::var(0).powi(d)))])
}

/// `Tℙ¹` in the frames `∂/∂z`, `∂/∂w`: `∂/∂w = −z² ∂/∂z`.
pub fn tangent_bundle(atlas: &Atlas) -> Result<Bundle, Error> {
    Bundle::new(atlas, 1, vec![(0, 1, ExprMatrix::scalar(-Expr::var(0).powi(2)))])
}

fn c(x: f64, y: f64) -> Complex64 {
    Complex64::new(x, y)
}

/// The eight points `(1,0), (1,1), (0,1), …` walking once around `[−1,1]²`.
fn square_ring() -> [Complex64; 8] {
    [c(1.0, 0.0), c(1.0, 1.0), c(0.0, 1.0), c(-1.0, 1.0), c(-1.0, 0.0), c(-1.0, -1.0), c(0.0, -1.0), c(1.0, -1.0)]
}

/// Coherent triangulation of `ℙ¹`.
///
/// Chart 0 carries the square `[−1,1]²` as a fan of eight triangles. Chart 1
/// carries the small square `[−0.45,0.45]²` as a fan and a ring of sixteen
/// curved triangles that blend the small square into the image of the big
/// square under `w = 1/z`, so the two halves share their boundary exactly.
pub fn projective_line_triangulation() -> Result<Triangulation, Error> {
    let ring = square_ring();
    let mut simplices = Vec::new();
    // ids: 0 = z origin, 1..=8 = big square, 9 = w origin, 10..=17 = small square
    for k in 0..8 {
        let j = (k + 1) % 8;
        simplices.push(Simplex::planar(0, &[c(0.0, 0.0), ring[k], ring[j]]).with_vertex_ids(&[0, 1 + k, 1 + j]));
        let q = |i: usize| ring[i] * P1_INNER_HALF_WIDTH;
        simplices.push(Simplex::planar(1, &[c(0.0, 0.0), q(k), q(j)]).with_vertex_ids(&[9, 10 + k, 10 + j]));
    }
    let (s, u) = (Expr::param(0), Expr::param(1));
    for j in 0..8 {
        let j1 = (j + 1) % 8;
        // 1/P_m points in the direction of P_{−m}, so the inner edge Q_j → Q_{j+1}
        // faces the outer edge 1/P_{−j} → 1/P_{−j−1}
        let (m0, m1) = ((8 - j) % 8, (15 - j) % 8);
        let (qa, qb) = (ring[j] * P1_INNER_HALF_WIDTH, ring[j1] * P1_INNER_HALF_WIDTH);
        let (pa, pb) = (ring[m0], ring[m1]);
        // blend(s, u) = (1 − u)(Q_j + s(Q_{j+1} − Q_j)) + u / (P_{m0} + s(P_{m1} − P_{m0}))
        let blend = |sv: &Expr, uv: &Expr| -> Expr {
            let inner = &Expr::float(qa) + &(sv * &Expr::float(qb - qa));
            let outer = (&Expr::float(pa) + &(sv * &Expr::float(pb - pa))).recip();
            &(&(&Expr::one() - uv) * &inner) + &(uv * &outer)
        };
        let ids = [10 + j, 10 + j1, 1 + m1, 1 + m0];
        // corners in (s, u); taken clockwise because (∂s, ∂u) is negatively oriented in w
        let corners = [[(0.0, 0.0), (1.0, 1.0), (1.0, 0.0)], [(0.0, 0.0), (0.0, 1.0), (1.0, 1.0)]];
        let corner_ids = [[ids[0], ids[2], ids[1]], [ids[0], ids[3], ids[2]]];
        for (cs, cid) in corners.iter().zip(corner_ids) {
            let coord = |axis: usize| -> Expr {
                let pick = |p: (f64, f64)| if axis == 0 { p.0 } else { p.1 };
                Expr::sum([
                    Expr::real(pick(cs[0])),
                    &s * &Expr::real(pick(cs[1]) - pick(cs[0])),
                    &u * &Expr::real(pick(cs[2]) - pick(cs[0])),
                ])
            };
            let comp = blend(&coord(0), &coord(1));
            simplices.push(Simplex::curved(1, 2, vec![comp], cid.iter().map(|i| VertexKey::Id(*i)).collect())?);
        }
    }
    Ok(Triangulation::new(simplices))
}

/// Square torus `ℂ/(ℤ + iℤ)` on one chart: an `n × n` grid on `[0,1]²`
/// whose vertex ids wrap around, two triangles per cell.
pub fn torus_triangulation(n: usize) -> Result<Triangulation, Error> {
    if n < 3 {
        return Err(Error::Argument("a torus grid needs at least 3 cells per side".into()));
    }
    let h = 1.0 / n as f64;
    let id = |i: usize, j: usize| (i % n) + n * (j % n);
    let pt = |i: usize, j: usize| c(i as f64 * h, j as f64 * h);
    let mut simplices = Vec::new();
    for j in 0..n {
        for i in 0..n {
            simplices.push(Simplex::planar(0, &[pt(i, j), pt(i + 1, j), pt(i + 1, j + 1)]).with_vertex_ids(&[id(i, j), id(i + 1, j), id(i + 1, j + 1)]));
            simplices.push(Simplex::planar(0, &[pt(i, j), pt(i + 1, j + 1), pt(i, j + 1)]).with_vertex_ids(&[id(i, j), id(i + 1, j + 1), id(i, j + 1)]));
        }
    }
    Ok(Triangulation::new(simplices))
}

/// The torus as an atlas with a single chart on the whole plane.
pub fn torus_atlas() -> Atlas {
    Atlas::new(vec![Chart::new(0, vec![Region::Plane]).expect("plane chart")]).expect("one chart")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::Form;

    #[test]
    fn projective_line_triangulation_is_closed_and_matches_across_charts() {
        let atlas = projective_line();
        atlas.check_cocycles(20, 7, 1e-9).unwrap();
        let t = projective_line_triangulation().unwrap();
        t.check_coherent().unwrap();
        assert_eq!(t.simplices.len(), 32);
        // shared vertices agree through w = 1/z
        for s in t.simplices.iter().filter(|s| s.chart == 1 && matches!(s.shape, crate::mesh::Shape::Curved(_))) {
            for (k, x) in [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]].iter().enumerate() {
                let crate::mesh::VertexKey::Id(id) = s.vertices[k] else { panic!() };
                let w = s.point(x).unwrap()[0];
                let want = if id >= 10 {
                    square_ring()[id - 10] * P1_INNER_HALF_WIDTH
                } else {
                    square_ring()[id - 1].inv()
                };
                assert!((w - want).norm() < 1e-12, "vertex {id}: {w} vs {want}");
            }
        }
    }

    #[test]
    fn fubini_study_area_is_one() {
        // (i/2π) dz∧dz̄/(1+|z|²)² integrates to 1 over ℙ¹
        let t = projective_line_triangulation().unwrap();
        let w = |chart| Form::parse("i/(2*pi)*(1 + z1*conj(z1))^(-2)*dz1^dzbar1", chart, 1).ok();
        let total = t.integrate_fundamental_class(&w, 1e-10).unwrap().value;
        assert!((total - c(1.0, 0.0)).norm() < 1e-8, "{total}");
    }

    #[test]
    fn torus_area() {
        let t = torus_triangulation(4).unwrap();
        let area = Form::parse("i/2*dz1^dzbar1", 0, 1).unwrap();
        let v = t.integrate_fundamental_class(&|_| Some(area.clone()), 1e-12).unwrap().value;
        assert!((v - c(1.0, 0.0)).norm() < 1e-12);
    }
}
