//! Splitting planar triangles along a circle.
//!
//! A triangle is written as a signed sum of fan triangles `(c, a, b)` over
//! its edges, where `c` is the disk center. In polar coordinates about `c`
//! each fan triangle is `{θ_a ≤ θ ≤ θ_b, 0 ≤ ρ ≤ d / cos(θ − φ)}`, so the
//! parts inside and outside the circle `ρ = r` are again polar cells with
//! exact curved boundaries.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::{integrate_param, Integral, Parametrization, Reference, Shape, Simplex, DEFAULT_BUDGET};
use crate::forms::{ChartId, CompiledForm};
use crate::Error;

const TANGENCY: f64 = 1e-12;

/// Radial bound of a polar cell, as a function of the angle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Radius {
    Zero,
    Circle(f64),
    /// The line at distance `d` from the center with normal direction `φ`.
    Line { d: f64, phi: f64 },
}

impl Radius {
    fn eval(&self, theta: f64) -> (f64, f64) {
        match *self {
            Radius::Zero => (0.0, 0.0),
            Radius::Circle(r) => (r, 0.0),
            Radius::Line { d, phi } => {
                let (s, c) = (theta - phi).sin_cos();
                (d / c, d * s / (c * c))
            }
        }
    }
}

/// `{c + ρ e^{iθ} : θ₀ ≤ θ ≤ θ₀ + Δθ, lo(θ) ≤ ρ ≤ hi(θ)}` with a sign relative
/// to the standard orientation of the plane.
#[derive(Clone, Debug, PartialEq)]
pub struct PolarCell {
    pub chart: ChartId,
    pub center: Complex64,
    pub theta0: f64,
    pub dtheta: f64,
    pub lo: Radius,
    pub hi: Radius,
    pub sign: i32,
}

impl Parametrization for PolarCell {
    fn dim(&self) -> usize {
        2
    }

    fn chart(&self) -> ChartId {
        self.chart
    }

    fn reference(&self) -> Reference {
        Reference::Cube
    }

    fn target_dim(&self) -> usize {
        1
    }

    fn eval(&self, x: &[f64], point: &mut [Complex64], tangents: &mut [Vec<Complex64>]) -> Result<(), Error> {
        let theta = self.theta0 + x[0] * self.dtheta;
        let (r0, dr0) = self.lo.eval(theta);
        let (r1, dr1) = self.hi.eval(theta);
        let rho = r0 + x[1] * (r1 - r0);
        let drho = dr0 + x[1] * (dr1 - dr0);
        let e = Complex64::from_polar(1.0, theta);
        point[0] = self.center + e * rho;
        tangents[0][0] = e * Complex64::new(drho, rho) * self.dtheta;
        tangents[1][0] = e * (r1 - r0);
        Ok(())
    }
}

impl PolarCell {
    /// The whole disk `|z − center| ≤ radius`, positively oriented.
    pub fn disk(chart: ChartId, center: Complex64, radius: f64) -> PolarCell {
        PolarCell {
            chart,
            center,
            theta0: 0.0,
            dtheta: 2.0 * PI,
            lo: Radius::Zero,
            hi: Radius::Circle(radius),
            sign: 1,
        }
    }

    /// The part of the circle bounding the cell from outside, when the
    /// cell reaches a circle, traversed counterclockwise and carrying the
    /// cell's sign.
    pub fn outer_arc(&self) -> Option<ArcCell> {
        match self.hi {
            Radius::Circle(radius) => Some(ArcCell {
                chart: self.chart,
                center: self.center,
                radius,
                theta0: self.theta0,
                dtheta: self.dtheta,
                sign: self.sign,
            }),
            _ => None,
        }
    }

    /// `∫ ω` over the cell with its sign applied.
    pub fn integrate(&self, form: &CompiledForm, tol: f64) -> Result<Integral, Error> {
        // (∂θ, ∂ρ) is a negatively oriented frame of the plane
        integrate_param(form, self, -(self.sign as f64), tol, DEFAULT_BUDGET)
    }
}

/// Counterclockwise arc `center + radius·e^{iθ}`, `θ₀ ≤ θ ≤ θ₀ + Δθ`.
#[derive(Clone, Debug, PartialEq)]
pub struct ArcCell {
    pub chart: ChartId,
    pub center: Complex64,
    pub radius: f64,
    pub theta0: f64,
    pub dtheta: f64,
    pub sign: i32,
}

impl Parametrization for ArcCell {
    fn dim(&self) -> usize {
        1
    }

    fn chart(&self) -> ChartId {
        self.chart
    }

    fn reference(&self) -> Reference {
        Reference::Cube
    }

    fn target_dim(&self) -> usize {
        1
    }

    fn eval(&self, x: &[f64], point: &mut [Complex64], tangents: &mut [Vec<Complex64>]) -> Result<(), Error> {
        let e = Complex64::from_polar(self.radius, self.theta0 + x[0] * self.dtheta);
        point[0] = self.center + e;
        tangents[0][0] = Complex64::new(0.0, self.dtheta) * e;
        Ok(())
    }
}

impl ArcCell {
    /// The full counterclockwise circle.
    pub fn circle(chart: ChartId, center: Complex64, radius: f64) -> ArcCell {
        ArcCell {
            chart,
            center,
            radius,
            theta0: 0.0,
            dtheta: 2.0 * PI,
            sign: 1,
        }
    }

    pub fn integrate(&self, form: &CompiledForm, tol: f64) -> Result<Integral, Error> {
        integrate_param(form, self, self.sign as f64, tol, DEFAULT_BUDGET)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Inside,
    Outside,
}

/// A piece of a clipped simplex.
#[derive(Clone, Debug)]
pub enum Piece {
    Whole(Simplex),
    Polar(PolarCell),
}

impl Piece {
    pub fn integrate(&self, form: &CompiledForm, tol: f64) -> Result<Integral, Error> {
        match self {
            Piece::Whole(s) => integrate_param(form, s, s.sign as f64, tol, DEFAULT_BUDGET),
            Piece::Polar(p) => p.integrate(form, tol),
        }
    }
}

fn cross(a: Complex64, b: Complex64) -> f64 {
    a.re * b.im - a.im * b.re
}

fn segment_distance(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let ab = b - a;
    let t = ((p - a).re * ab.re + (p - a).im * ab.im) / ab.norm_sqr();
    (p - (a + ab * t.clamp(0.0, 1.0))).norm()
}

/// Splits a 2-simplex on a one-dimensional chart along `|z − center| = radius`.
///
/// Simplices that do not meet the open disk come back whole on the outside;
/// simplices inside the closed disk come back whole on the inside. Curved
/// simplices are accepted only when they stay clear of the circle.
pub fn clip_simplex(s: &Simplex, center: Complex64, radius: f64) -> Result<Vec<(Side, Piece)>, Error> {
    if s.dim != 2 || s.target_dim != 1 {
        return Err(Error::Clipping {
            simplex: format!("{:?}", s.vertices),
            msg: "only triangles on one-dimensional charts can be clipped".into(),
        });
    }
    let verts = match &s.shape {
        Shape::Affine(vs) => [vs[0][0], vs[1][0], vs[2][0]],
        Shape::Curved(_) => return clip_curved(s, center, radius),
    };
    let area = cross(verts[1] - verts[0], verts[2] - verts[0]);
    if area.abs() < TANGENCY {
        return Ok(Vec::new());
    }
    let dmin = if [0, 1, 2].iter().all(|&i| {
        let (a, b) = (verts[i], verts[(i + 1) % 3]);
        cross(b - a, center - a) * area.signum() >= 0.0
    }) {
        0.0
    } else {
        (0..3)
            .map(|i| segment_distance(center, verts[i], verts[(i + 1) % 3]))
            .fold(f64::INFINITY, f64::min)
    };
    if dmin >= radius - TANGENCY {
        return Ok(vec![(Side::Outside, Piece::Whole(s.clone()))]);
    }
    if verts.iter().all(|v| (v - center).norm() <= radius + TANGENCY) {
        return Ok(vec![(Side::Inside, Piece::Whole(s.clone()))]);
    }
    // orientation of the simplex relative to the plane
    let orient = s.sign * area.signum() as i32;
    let ccw = if area > 0.0 { verts } else { [verts[0], verts[2], verts[1]] };
    let mut out = Vec::new();
    for i in 0..3 {
        let (a, b) = (ccw[i], ccw[(i + 1) % 3]);
        fan_triangle(s.chart, center, radius, a, b, orient, &mut out);
    }
    Ok(out)
}

/// Pieces of the fan triangle `(c, a, b)`, signed by its orientation.
fn fan_triangle(chart: ChartId, c: Complex64, r: f64, a: Complex64, b: Complex64, orient: i32, out: &mut Vec<(Side, Piece)>) {
    let fan = cross(a - c, b - c);
    let scale = (a - c).norm().max((b - c).norm()).max(1.0);
    if fan.abs() < TANGENCY * scale * scale {
        return;
    }
    let (a, b, sign) = if fan > 0.0 { (a, b, orient) } else { (b, a, -orient) };
    let ta = (a - c).arg();
    let mut delta = (b - c).arg() - ta;
    if delta <= 0.0 {
        delta += 2.0 * PI;
    }
    // outward unit normal of the edge a → b, seen from c
    let edge = b - a;
    let normal = Complex64::new(edge.im, -edge.re) / edge.norm();
    let d = ((a - c) * normal.conj()).re;
    let phi = normal.arg();
    let line = Radius::Line { d, phi };
    let mut cuts = vec![0.0, delta];
    if d < r - TANGENCY {
        let half = (d / r).acos();
        for t in [phi - half, phi + half] {
            let rel = (t - ta).rem_euclid(2.0 * PI);
            if rel > TANGENCY && rel < delta - TANGENCY {
                cuts.push(rel);
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    for w in cuts.windows(2) {
        let (t0, t1) = (ta + w[0], ta + w[1]);
        if t1 - t0 < TANGENCY {
            continue;
        }
        let mid = 0.5 * (t0 + t1);
        let cell = |lo, hi| PolarCell {
            chart,
            center: c,
            theta0: t0,
            dtheta: t1 - t0,
            lo,
            hi,
            sign,
        };
        if line.eval(mid).0 <= r {
            out.push((Side::Inside, Piece::Polar(cell(Radius::Zero, line))));
        } else {
            out.push((Side::Inside, Piece::Polar(cell(Radius::Zero, Radius::Circle(r)))));
            out.push((Side::Outside, Piece::Polar(cell(Radius::Circle(r), line))));
        }
    }
}

fn clip_curved(s: &Simplex, center: Complex64, radius: f64) -> Result<Vec<(Side, Piece)>, Error> {
    let n = 24;
    let mut inside = 0usize;
    let mut outside = 0usize;
    for i in 0..=n {
        for j in 0..=(n - i) {
            let p = s.point(&[i as f64 / n as f64, j as f64 / n as f64])?[0];
            if (p - center).norm() < radius {
                inside += 1;
            } else {
                outside += 1;
            }
        }
    }
    match (inside, outside) {
        (0, _) => Ok(vec![(Side::Outside, Piece::Whole(s.clone()))]),
        (_, 0) => Ok(vec![(Side::Inside, Piece::Whole(s.clone()))]),
        _ => Err(Error::Clipping {
            simplex: format!("{:?}", s.vertices),
            msg: "curved simplex crosses a circle".into(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::Form;

    fn c(x: f64, y: f64) -> Complex64 {
        Complex64::new(x, y)
    }

    fn split(s: &Simplex, center: Complex64, r: f64, w: &Form) -> (Complex64, Complex64) {
        let f = w.compile();
        let mut acc = (c(0.0, 0.0), c(0.0, 0.0));
        for (side, piece) in clip_simplex(s, center, r).unwrap() {
            let v = piece.integrate(&f, 1e-13).unwrap().value;
            match side {
                Side::Inside => acc.0 += v,
                Side::Outside => acc.1 += v,
            }
        }
        acc
    }

    #[test]
    fn pieces_add_up_to_the_whole() {
        let w = Form::parse("(1 + z1*conj(z1)^2)*dz1^dzbar1", 0, 1).unwrap();
        let tri = Simplex::planar(0, &[c(-0.3, -0.2), c(1.1, 0.1), c(0.2, 0.9)]);
        let whole = crate::mesh::integrate_over_simplex(&w, &tri, 1e-13).unwrap().value;
        for (center, r) in [(c(0.1, 0.1), 0.3), (c(0.0, 0.0), 0.5), (c(1.1, 0.1), 0.4), (c(-1.0, 0.0), 0.9)] {
            for s in [tri.clone(), tri.reversed(), Simplex::planar(0, &[c(-0.3, -0.2), c(0.2, 0.9), c(1.1, 0.1)])] {
                let (a, b) = split(&s, center, r, &w);
                let expect = crate::mesh::integrate_over_simplex(&w, &s, 1e-13).unwrap().value;
                assert!((a + b - expect).norm() < 1e-10, "{center} {r}: {} vs {expect}", a + b);
                assert!(expect.norm() > 0.0 && (expect - whole).norm() < 1e-10 || (expect + whole).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn disk_area_inside_a_triangle() {
        // -2i dx∧dy = dz∧dzbar, so ∫ dz∧dzbar over the disk is −2i·πr²
        let w = Form::parse("dz1^dzbar1", 0, 1).unwrap();
        let tri = Simplex::planar(0, &[c(-2.0, -2.0), c(3.0, -2.0), c(0.0, 3.0)]);
        let (inside, _) = split(&tri, c(0.2, 0.1), 0.7, &w);
        assert!((inside - c(0.0, -2.0 * PI * 0.49)).norm() < 1e-11);
        let disk = PolarCell::disk(0, c(0.2, 0.1), 0.7).integrate(&w.compile(), 1e-12).unwrap().value;
        assert!((disk - inside).norm() < 1e-11);
    }

    #[test]
    fn arcs_of_the_pieces_trace_the_circle() {
        // ∮ conj(z) dz over the circle of radius r around 0 is 2πi r²
        let w = Form::parse("conj(z1)*dz1", 0, 1).unwrap().compile();
        let tri = Simplex::planar(0, &[c(-2.0, -2.0), c(3.0, -2.0), c(0.0, 3.0)]);
        let mut total = c(0.0, 0.0);
        for (side, piece) in clip_simplex(&tri, c(0.0, 0.0), 0.5).unwrap() {
            if let (Side::Inside, Piece::Polar(p)) = (side, piece) {
                if let Some(arc) = p.outer_arc() {
                    total += arc.integrate(&w, 1e-13).unwrap().value;
                }
            }
        }
        assert!((total - c(0.0, 2.0 * PI * 0.25)).norm() < 1e-11);
        let full = ArcCell::circle(0, c(0.0, 0.0), 0.5).integrate(&w, 1e-13).unwrap().value;
        assert!((full - total).norm() < 1e-11);
    }

    #[test]
    fn far_and_curved_simplices() {
        let tri = Simplex::planar(0, &[c(2.0, 0.0), c(3.0, 0.0), c(2.0, 1.0)]);
        let pieces = clip_simplex(&tri, c(0.0, 0.0), 1.0).unwrap();
        assert!(matches!(pieces[..], [(Side::Outside, Piece::Whole(_))]));
        let curved = Simplex::curved(
            0,
            2,
            vec![crate::fields::parse_expr("t1 + i*t2").unwrap()],
            vec![crate::mesh::VertexKey::Id(0), crate::mesh::VertexKey::Id(1), crate::mesh::VertexKey::Id(2)],
        )
        .unwrap();
        assert!(matches!(clip_simplex(&curved, c(0.5, 0.2), 0.1), Err(Error::Clipping { .. })));
    }
}
