//! Charts, transition maps, two-set coverings adapted to a set of marked
//! points, partitions of unity and honeycomb cell systems.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use crate::fields::{Expr, Substitution, Tape};
use crate::forms::{ChartId, ChartMap};
use crate::mesh::{Chain, Simplex, VertexKey};
use crate::{seeded_rng, Error};

/// One factor of a product domain in `ℂⁿ`.
#[derive(Clone, Debug, PartialEq)]
pub enum Region {
    Plane,
    Disk { center: Complex64, radius: f64 },
    Annulus { center: Complex64, inner: f64, outer: f64 },
}

impl Region {
    pub fn contains(&self, z: Complex64) -> bool {
        match *self {
            Region::Plane => z.re.is_finite() && z.im.is_finite(),
            Region::Disk { center, radius } => (z - center).norm() < radius,
            Region::Annulus { center, inner, outer } => {
                let r = (z - center).norm();
                r > inner && r < outer
            }
        }
    }

    /// Square `(center, half-width)` used for rejection sampling.
    fn bounding_box(&self) -> (Complex64, f64) {
        match *self {
            Region::Plane => (Complex64::new(0.0, 0.0), 3.0),
            Region::Disk { center, radius } => (center, radius),
            Region::Annulus { center, outer, .. } => (center, outer),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Chart {
    pub id: ChartId,
    pub dim: usize,
    pub domain: Vec<Region>,
    pub singular_points: Vec<Vec<Complex64>>,
}

impl Chart {
    pub fn new(id: ChartId, domain: Vec<Region>) -> Result<Chart, Error> {
        if domain.is_empty() {
            return Err(Error::Geometry(format!("chart {id} has dimension 0")));
        }
        for r in &domain {
            match *r {
                Region::Disk { radius, .. } if radius <= 0.0 => {
                    return Err(Error::Geometry(format!("chart {id} has an empty disk factor")))
                }
                Region::Annulus { inner, outer, .. } if inner >= outer || outer <= 0.0 => {
                    return Err(Error::Geometry(format!("chart {id} has an empty annulus factor")))
                }
                _ => {}
            }
        }
        Ok(Chart {
            id,
            dim: domain.len(),
            domain,
            singular_points: Vec::new(),
        })
    }

    pub fn contains(&self, p: &[Complex64]) -> bool {
        p.len() == self.dim && self.domain.iter().zip(p).all(|(r, z)| r.contains(*z))
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<Complex64> {
        loop {
            let p: Vec<Complex64> = self
                .domain
                .iter()
                .map(|r| {
                    let (c, h) = r.bounding_box();
                    c + Complex64::new(rng.gen_range(-h..h), rng.gen_range(-h..h))
                })
                .collect();
            if self.contains(&p) {
                return p;
            }
        }
    }
}

/// Charts and holomorphic transition maps between them.
#[derive(Clone, Debug, Default)]
pub struct Atlas {
    pub charts: Vec<Chart>,
    transitions: BTreeMap<(ChartId, ChartId), ChartMap>,
}

impl Atlas {
    pub fn new(charts: Vec<Chart>) -> Result<Atlas, Error> {
        for (i, c) in charts.iter().enumerate() {
            if c.id != i {
                return Err(Error::Geometry(format!("chart ids must be 0..{}, found {}", charts.len(), c.id)));
            }
        }
        Ok(Atlas {
            charts,
            transitions: BTreeMap::new(),
        })
    }

    pub fn chart(&self, id: ChartId) -> Result<&Chart, Error> {
        self.charts
            .get(id)
            .ok_or_else(|| Error::Invariant(format!("unknown chart {id}")))
    }

    /// Registers `source → target`; components must be holomorphic.
    pub fn add_transition(&mut self, map: ChartMap) -> Result<(), Error> {
        let src = self.chart(map.source)?.dim;
        let tgt = self.chart(map.target)?.dim;
        if map.source_dim != src || map.components.len() != tgt {
            return Err(Error::Dimension(format!(
                "transition {} -> {} has the wrong number of components",
                map.source, map.target
            )));
        }
        for (i, c) in map.components.iter().enumerate() {
            if !c.is_structurally_holomorphic(src) {
                return Err(Error::NotHolomorphic(format!(
                    "component {} of transition {} -> {}: {c}",
                    i + 1,
                    map.source,
                    map.target
                )));
            }
        }
        self.transitions.insert((map.source, map.target), map);
        Ok(())
    }

    /// Transition `a → b`; the identity when `a == b`.
    pub fn transition(&self, a: ChartId, b: ChartId) -> Option<ChartMap> {
        if a == b {
            return self.charts.get(a).map(|c| ChartMap::identity(a, c.dim));
        }
        self.transitions.get(&(a, b)).cloned()
    }

    pub fn transitions(&self) -> impl Iterator<Item = &ChartMap> {
        self.transitions.values()
    }

    /// Maps a point of chart `a` to chart `b`, if the transition is defined there.
    pub fn map_point(&self, a: ChartId, b: ChartId, p: &[Complex64]) -> Option<Vec<Complex64>> {
        let m = self.transition(a, b)?;
        let q = m.eval(p).ok()?;
        self.charts.get(b).filter(|c| c.contains(&q)).map(|_| q)
    }

    /// Up to `count` points of chart `a` lying in the overlap with every chart in `others`.
    pub fn sample_overlap(&self, a: ChartId, others: &[ChartId], count: usize, seed: u64) -> Vec<Vec<Complex64>> {
        let mut rng = seeded_rng(seed);
        let mut out = Vec::new();
        let Ok(chart) = self.chart(a) else { return out };
        for _ in 0..count * 200 {
            if out.len() == count {
                break;
            }
            let p = chart.sample(&mut rng);
            if others.iter().all(|b| self.map_point(a, *b, &p).is_some()) {
                out.push(p);
            }
        }
        out
    }

    /// Checks `g_{bc} ∘ g_{ab} = g_{ac}` (including `c = a`) at sampled overlap points.
    pub fn check_cocycles(&self, samples: usize, seed: u64, tol: f64) -> Result<(), Error> {
        let n = self.charts.len();
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if a == b || b == c {
                        continue;
                    }
                    let (Some(ab), Some(bc), Some(ac)) =
                        (self.transition(a, b), self.transition(b, c), self.transition(a, c))
                    else {
                        continue;
                    };
                    let composed = bc.compose(&ab)?;
                    let t1 = Tape::compile(&composed.components);
                    let t2 = Tape::compile(&ac.components);
                    for p in self.sample_overlap(a, &[b, c], samples, seed) {
                        let (Ok(x), Ok(y)) = (t1.eval(&p, &[]), t2.eval(&p, &[])) else { continue };
                        let res: f64 = x.iter().zip(&y).map(|(u, v)| (u - v).norm()).fold(0.0, f64::max);
                        let scale = 1.0 + y.iter().map(|v| v.norm()).fold(0.0, f64::max);
                        if res > tol * scale {
                            return Err(Error::Invariant(format!(
                                "cocycle condition fails for charts ({a}, {b}, {c}) at {p:?}: residual {res:.3e}"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// A ball `|z − center| < r_out` on one chart, with an inner radius `r_in`
/// where the partition of unity is already constant.
#[derive(Clone, Debug, PartialEq)]
pub struct CoverDisk {
    pub chart: ChartId,
    pub center: Vec<Complex64>,
    pub r_in: f64,
    pub r_out: f64,
}

/// Two-set covering: one set is the union of the disks (radius `r_out`),
/// the other the complement of the closed `r_in` disks.
#[derive(Clone, Debug)]
pub struct Covering {
    pub disks: Vec<CoverDisk>,
    /// Which of `V₀`, `V₁` is the union of disks.
    pub inner: usize,
    /// Optional marked set `Z`, as points on charts.
    pub z: Vec<(ChartId, Vec<Complex64>)>,
}

impl Covering {
    pub fn new(atlas: &Atlas, disks: Vec<CoverDisk>, inner: usize, z: Vec<(ChartId, Vec<Complex64>)>) -> Result<Covering, Error> {
        if inner > 1 {
            return Err(Error::Geometry("covering index must be 0 or 1".into()));
        }
        for d in &disks {
            let chart = atlas.chart(d.chart)?;
            if d.center.len() != chart.dim {
                return Err(Error::Dimension(format!("disk center has {} coordinates on a {}-dimensional chart", d.center.len(), chart.dim)));
            }
            if !(d.r_in > 0.0 && d.r_in < d.r_out) {
                return Err(Error::DegenerateOverlap(format!("r_in = {} must be positive and below r_out = {}", d.r_in, d.r_out)));
            }
        }
        for (i, a) in disks.iter().enumerate() {
            for b in &disks[i + 1..] {
                if let Some(cb) = atlas.map_point(b.chart, a.chart, &b.center) {
                    let dist = dist(&a.center, &cb);
                    if dist <= a.r_out + b.r_out {
                        return Err(Error::Geometry(format!(
                            "covering disks around {:?} and {:?} overlap",
                            a.center, b.center
                        )));
                    }
                }
            }
        }
        let cov = Covering { disks, inner, z };
        for (chart, p) in &cov.z {
            let in0 = cov.contains(atlas, 0, *chart, p);
            let in1 = cov.contains(atlas, 1, *chart, p);
            if in0 == in1 {
                return Err(Error::Geometry(format!(
                    "covering is not adapted: marked point {p:?} lies in {} of the two sets",
                    if in0 { "both" } else { "neither" }
                )));
            }
        }
        Ok(cov)
    }

    /// Distance-based membership test for `V_j`.
    pub fn contains(&self, atlas: &Atlas, j: usize, chart: ChartId, p: &[Complex64]) -> bool {
        let mut in_some_outer_disk = false;
        let mut in_some_inner_closed = false;
        for d in &self.disks {
            let Some(q) = (if d.chart == chart { Some(p.to_vec()) } else { atlas.map_point(chart, d.chart, p) }) else {
                continue;
            };
            let r = dist(&q, &d.center);
            in_some_outer_disk |= r < d.r_out;
            in_some_inner_closed |= r <= d.r_in;
        }
        if j == self.inner {
            in_some_outer_disk
        } else {
            !in_some_inner_closed
        }
    }

    /// The index `j(Z)` with `Z ⊂ V_{j(Z)}`, when `Z` is present.
    pub fn adapted_index(&self) -> Option<usize> {
        if self.z.is_empty() {
            None
        } else {
            Some(self.inner)
        }
    }
}

fn dist(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

/// Radial profile of the partition of unity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum BumpProfile {
    /// Transition driven by `|z − p|²`.
    Quadratic,
    /// Transition driven by `|z − p|⁴`.
    Quartic,
}

/// `ρ₀, ρ₁` on every chart.
#[derive(Clone, Debug)]
pub struct PartitionOfUnity {
    pub profile: BumpProfile,
    fields: BTreeMap<ChartId, [Expr; 2]>,
    per_disk: BTreeMap<ChartId, Vec<Expr>>,
}

impl PartitionOfUnity {
    pub fn rho(&self, chart: ChartId, j: usize) -> Expr {
        self.fields.get(&chart).map(|f| f[j].clone()).unwrap_or_else(Expr::zero)
    }

    /// The summand of `ρ_inner` belonging to covering disk `nu`, on `chart`.
    pub fn rho_disk(&self, chart: ChartId, nu: usize) -> Expr {
        self.per_disk
            .get(&chart)
            .and_then(|v| v.get(nu).cloned())
            .unwrap_or_else(Expr::zero)
    }

    pub fn charts(&self) -> impl Iterator<Item = ChartId> + '_ {
        self.fields.keys().copied()
    }
}

/// Squared distance to `center` written as `S / T` with `T` free of poles
/// where the map is finite, so the transported field stays finite at
/// points the transition sends to infinity.
fn squared_distance_fraction(components: &[Expr], center: &[Complex64]) -> (Expr, Expr) {
    let fr: Vec<(Expr, Expr)> = components.iter().map(|c| c.as_fraction()).collect();
    let abs2 = |e: &Expr| e * &e.conj();
    let dens: Vec<Expr> = fr.iter().map(|(_, d)| abs2(d)).collect();
    let t = Expr::product(dens.iter().cloned());
    let s = Expr::sum(fr.iter().enumerate().map(|(i, (n, d))| {
        let diff = n - &(d * &Expr::float(center[i]));
        Expr::product(
            std::iter::once(abs2(&diff)).chain(dens.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, e)| e.clone())),
        )
    }));
    (s, t)
}

/// Smooth fields `(χ, 1 − χ)` with `χ` equal to 1 on the closed `r_in`
/// ball and 0 outside the `r_out` ball.
///
/// With `σ` the (possibly squared) squared distance, the Möbius coordinate
/// `u = A(σ − a)/(σ + c)` sends `σ = a` to 0, `σ = c` to 1 and `σ = ∞` to
/// `A`. The field is `N/(N + M)` with `N = Σ_{k≥0} B(u + k)`, which
/// vanishes exactly for `u ≥ 1`, and `M = Σ_{k≥1} B(u − k)`, which vanishes
/// exactly for `u ≤ 0`.
fn disk_field(s: &Expr, t: &Expr, r_in: f64, r_out: f64, profile: BumpProfile) -> (Expr, Expr) {
    let (s, t, a, c) = match profile {
        BumpProfile::Quadratic => (s.clone(), t.clone(), r_in * r_in, r_out * r_out),
        BumpProfile::Quartic => (s.powi(2), t.powi(2), r_in.powi(4), r_out.powi(4)),
    };
    let big_a = 2.0 * c / (c - a);
    let u = Expr::product([
        Expr::real(big_a),
        &s - &(&t * &Expr::real(a)),
        (&s + &(&t * &Expr::real(c))).recip(),
    ]);
    let u_min = -big_a * a / c;
    let n_terms = (-u_min).ceil() as i64 + 1;
    let m_terms = big_a.ceil() as i64 + 1;
    let n = Expr::sum((0..=n_terms).map(|k| (&u + &Expr::int(k)).bump()));
    let m = Expr::sum((1..=m_terms).map(|k| (&u - &Expr::int(k)).bump()));
    let inv = (&n + &m).recip();
    (&n * &inv, &m * &inv)
}

/// Builds `ρ₀, ρ₁` with `ρ_inner = Σ_ν χ_ν` and `ρ_outer = Π_ν (1 − χ_ν)`.
///
/// The disks are disjoint, so the product equals `1 − ρ_inner`; written as
/// a product it vanishes exactly, not up to rounding, inside every inner
/// disk, where forms it multiplies may have poles.
pub fn build_partition_of_unity(atlas: &Atlas, cov: &Covering, profile: BumpProfile) -> Result<PartitionOfUnity, Error> {
    let mut fields = BTreeMap::new();
    let mut per_disk = BTreeMap::new();
    for chart in &atlas.charts {
        let mut parts = Vec::new();
        let mut complements = Vec::new();
        for d in &cov.disks {
            if !(d.r_in < d.r_out) {
                return Err(Error::DegenerateOverlap(format!("r_in = {} ≥ r_out = {}", d.r_in, d.r_out)));
            }
            let Some(map) = atlas.transition(chart.id, d.chart) else {
                parts.push(Expr::zero());
                continue;
            };
            let (s, t) = if chart.id == d.chart {
                let s = Expr::sum((0..chart.dim).map(|i| {
                    let diff = &Expr::var(i) - &Expr::float(d.center[i]);
                    &diff * &diff.conj()
                }));
                (s, Expr::one())
            } else {
                squared_distance_fraction(&map.components, &d.center)
            };
            let (inside, outside) = disk_field(&s, &t, d.r_in, d.r_out, profile);
            parts.push(inside);
            complements.push(outside);
        }
        let inner = Expr::sum(parts.iter().cloned());
        let outer = Expr::product(complements);
        let pair = if cov.inner == 0 { [inner, outer] } else { [outer, inner] };
        fields.insert(chart.id, pair);
        per_disk.insert(chart.id, parts);
    }
    Ok(PartitionOfUnity { profile, fields, per_disk })
}

/// One singular cell: a closed disk with its boundary circle as interface.
#[derive(Clone, Debug, PartialEq)]
pub struct HoneycombDisk {
    pub chart: ChartId,
    pub center: Complex64,
    pub radius: f64,
}

/// One regular cell and disjoint singular disks.
///
/// The singular cells belong to the set `V_inner` of the covering. The
/// interface of disk `ν` is stored as its counterclockwise boundary circle;
/// `R_{(1,0)}` is `interface_sign` times that circle and `R_{(0,1)}` its negative.
#[derive(Clone, Debug)]
pub struct Honeycomb {
    pub disks: Vec<HoneycombDisk>,
    pub inner: usize,
}

impl Honeycomb {
    /// Orientation of `R_{(1,0)}` relative to the counterclockwise circles:
    /// `R_{(1,0)} = ∂R₁`, which is the circles themselves when the disks are
    /// `R₁` and the reversed circles when they are `R₀`.
    pub fn interface_sign(&self) -> i32 {
        if self.inner == 1 {
            1
        } else {
            -1
        }
    }

    /// Index of the disk containing `p` on `chart`, if any.
    pub fn disk_containing(&self, atlas: &Atlas, chart: ChartId, p: Complex64) -> Option<usize> {
        self.disks.iter().position(|d| {
            let q = if d.chart == chart {
                Some(p)
            } else {
                atlas.map_point(chart, d.chart, &[p]).map(|v| v[0])
            };
            q.is_some_and(|q| (q - d.center).norm() <= d.radius)
        })
    }

    /// Cell index (0 or 1) of a point not on an interface.
    pub fn cell_of(&self, atlas: &Atlas, chart: ChartId, p: Complex64) -> usize {
        if self.disk_containing(atlas, chart, p).is_some() {
            self.inner
        } else {
            1 - self.inner
        }
    }

    /// Interface circles, counterclockwise, one per disk.
    pub fn interfaces(&self, segments: usize) -> Result<Vec<Chain>, Error> {
        self.disks
            .iter()
            .map(|d| link_of_point_on(d.chart, d.center, d.radius, segments))
            .collect()
    }
}

/// Disks of radius `radius` around the marks, checked against the covering.
pub fn honeycomb_from_marks(
    atlas: &Atlas,
    cov: &Covering,
    marks: &[(ChartId, Complex64)],
    radius: f64,
) -> Result<Honeycomb, Error> {
    if radius <= 0.0 {
        return Err(Error::Geometry("honeycomb radius must be positive".into()));
    }
    for (i, (ca, pa)) in marks.iter().enumerate() {
        if atlas.chart(*ca)?.dim != 1 {
            return Err(Error::Geometry("honeycomb disks are supported on one-dimensional charts only".into()));
        }
        for (cb, pb) in &marks[i + 1..] {
            let q = if ca == cb { Some(*pb) } else { atlas.map_point(*cb, *ca, &[*pb]).map(|v| v[0]) };
            if let Some(q) = q {
                if (q - pa).norm() <= 2.0 * radius {
                    return Err(Error::Geometry(format!("honeycomb disks around {pa} and {pb} overlap")));
                }
            }
        }
        // the closed disk must lie in V_inner and swallow the closed r_in disk
        let host = cov.disks.get(i).filter(|d| d.chart == *ca && (d.center[0] - pa).norm() < d.r_out);
        match host {
            Some(d) => {
                let off = (d.center[0] - pa).norm();
                if off + radius >= d.r_out {
                    return Err(Error::Geometry(format!(
                        "honeycomb disk around {pa} escapes its covering set (radius {radius}, outer radius {})",
                        d.r_out
                    )));
                }
                if off + d.r_in >= radius {
                    return Err(Error::Geometry(format!(
                        "honeycomb disk around {pa} does not contain the inner covering disk (radius {radius}, inner radius {})",
                        d.r_in
                    )));
                }
            }
            None => {
                return Err(Error::Geometry(format!("honeycomb disk around {pa} escapes its covering set")));
            }
        }
    }
    if marks.len() != cov.disks.len() {
        return Err(Error::Geometry(format!(
            "{} honeycomb disks for {} covering disks",
            marks.len(),
            cov.disks.len()
        )));
    }
    Ok(Honeycomb {
        disks: marks
            .iter()
            .map(|(c, p)| HoneycombDisk {
                chart: *c,
                center: *p,
                radius,
            })
            .collect(),
        inner: cov.inner,
    })
}

/// Counterclockwise circle `|y − p| = radius` on chart 0 as a closed chain.
pub fn link_of_point(p: Complex64, radius: f64, segments: usize) -> Result<Chain, Error> {
    link_of_point_on(0, p, radius, segments)
}

/// Counterclockwise circle on a given chart, split into `segments` arcs.
pub fn link_of_point_on(chart: ChartId, p: Complex64, radius: f64, segments: usize) -> Result<Chain, Error> {
    if radius <= 0.0 {
        return Err(Error::Geometry("link radius must be positive".into()));
    }
    if segments < 8 {
        return Err(Error::Geometry("a link needs at least 8 segments".into()));
    }
    let key = |k: usize| VertexKey::Coords(chart, vec![(p.re.to_bits(), p.im.to_bits()), (radius.to_bits(), (k % segments) as u64)]);
    let step = 2.0 * PI / segments as f64;
    let mut chain = Chain::new();
    for k in 0..segments {
        // p + r·exp(i·step·(k + t))
        let phase = Expr::sum([Expr::real(step * k as f64), &Expr::param(0) * &Expr::real(step)]);
        let comp = &Expr::float(p) + &(&Expr::real(radius) * &(&phase * &Expr::imag_unit()).exp());
        chain.push(1, Simplex::curved(chart, 1, vec![comp], vec![key(k), key(k + 1)])?);
    }
    Ok(chain)
}

/// Sphere `‖z − center‖ = radius` in `ℂ^m`, oriented as the boundary of
/// the ball, for `m ∈ {1, 2}`. For `m = 2` Hopf coordinates
/// `(η, α, β) ↦ (R cos η e^{iα}, R sin η e^{iβ})` are split into boxes and
/// each box into six tetrahedra whose orientation signs are fixed
/// numerically against the outward normal.
pub fn sphere_chain(center: &[Complex64], radius: f64, divisions: usize) -> Result<Chain, Error> {
    match center.len() {
        1 => link_of_point(center[0], radius, divisions.max(8)),
        2 => hopf_sphere(center, radius, divisions.max(2)),
        m => Err(Error::Dimension(format!("sphere chains are available for m ≤ 2, got m = {m}"))),
    }
}

fn hopf_sphere(center: &[Complex64], radius: f64, d: usize) -> Result<Chain, Error> {
    let (de, da, db) = (d, 2 * d, 2 * d);
    let h = [PI / 2.0 / de as f64, 2.0 * PI / da as f64, 2.0 * PI / db as f64];
    let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut chain = Chain::new();
    let mut id = 0usize;
    for ie in 0..de {
        for ia in 0..da {
            for ib in 0..db {
                let lo = [ie as f64 * h[0], ia as f64 * h[1], ib as f64 * h[2]];
                for perm in perms {
                    let mut verts = vec![lo];
                    let mut cur = lo;
                    for &axis in &perm {
                        cur[axis] += h[axis];
                        verts.push(cur);
                    }
                    // coordinates (η, α, β) as affine functions of t1..t3
                    let coord = |axis: usize| -> Expr {
                        Expr::sum(
                            std::iter::once(Expr::real(verts[0][axis])).chain(
                                (0..3).map(|j| &Expr::param(j) * &Expr::real(verts[j + 1][axis] - verts[0][axis])),
                            ),
                        )
                    };
                    let (eta, alpha, beta) = (coord(0), coord(1), coord(2));
                    let e_eta = (&eta * &Expr::imag_unit()).exp();
                    let z1 = &Expr::float(center[0]) + &Expr::product([Expr::real(radius), e_eta.re(), (&alpha * &Expr::imag_unit()).exp()]);
                    let z2 = &Expr::float(center[1]) + &Expr::product([Expr::real(radius), e_eta.im(), (&beta * &Expr::imag_unit()).exp()]);
                    let keys = (0..4).map(|k| VertexKey::Id(id * 4 + k)).collect();
                    id += 1;
                    let s = Simplex::curved(0, 3, vec![z1, z2], keys)?;
                    let sign = outward_sign(&s, center)?;
                    chain.push(1, s.with_sign(sign));
                }
            }
        }
    }
    Ok(chain)
}

/// `+1` when (outward normal, tangents) is positively oriented in `ℝ⁴`.
fn outward_sign(s: &Simplex, center: &[Complex64]) -> Result<i32, Error> {
    use crate::mesh::Parametrization;
    let x = [0.25, 0.25, 0.25];
    let mut p = vec![Complex64::new(0.0, 0.0); 2];
    let mut tg = vec![vec![Complex64::new(0.0, 0.0); 2]; 3];
    s.eval(&x, &mut p, &mut tg)?;
    let real4 = |v: &[Complex64]| [v[0].re, v[0].im, v[1].re, v[1].im];
    let normal: Vec<Complex64> = p.iter().zip(center).map(|(a, b)| a - b).collect();
    let rows = [real4(&normal), real4(&tg[0]), real4(&tg[1]), real4(&tg[2])];
    let mut m: Vec<Complex64> = rows.iter().flatten().map(|x| Complex64::new(*x, 0.0)).collect();
    let det = crate::forms::det(&mut m, 4).re;
    if det.abs() < 1e-14 {
        return Err(Error::Geometry("degenerate tetrahedron in sphere chain".into()));
    }
    Ok(if det > 0.0 { 1 } else { -1 })
}

/// Substitutes the transition `from → to` into a field given on `to`.
pub fn transport_field(atlas: &Atlas, f: &Expr, from: ChartId, to: ChartId) -> Option<Expr> {
    let m = atlas.transition(from, to)?;
    Some(f.substitute(&Substitution::vars(m.components)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::parse_expr;
    use crate::forms::Form;
    use rand::SeedableRng;

    fn c(x: f64, y: f64) -> Complex64 {
        Complex64::new(x, y)
    }

    fn plane() -> Atlas {
        Atlas::new(vec![Chart::new(0, vec![Region::Plane]).unwrap()]).unwrap()
    }

    fn p1() -> Atlas {
        let d = Region::Disk { center: c(0.0, 0.0), radius: 1.5 };
        let mut a = Atlas::new(vec![Chart::new(0, vec![d.clone()]).unwrap(), Chart::new(1, vec![d]).unwrap()]).unwrap();
        a.add_transition(ChartMap::new(0, 1, 1, vec![parse_expr("z1^(-1)").unwrap()])).unwrap();
        a.add_transition(ChartMap::new(1, 1, 0, vec![parse_expr("z1^(-1)").unwrap()])).unwrap();
        a
    }

    fn annulus_cover(atlas: &Atlas) -> Covering {
        let disk = CoverDisk { chart: 0, center: vec![c(0.0, 0.0)], r_in: 1.0, r_out: 2.0 };
        Covering::new(atlas, vec![disk], 0, vec![]).unwrap()
    }

    #[test]
    fn partition_is_constant_off_the_overlap() {
        let atlas = plane();
        let cov = annulus_cover(&atlas);
        for profile in [BumpProfile::Quadratic, BumpProfile::Quartic] {
            let pou = build_partition_of_unity(&atlas, &cov, profile).unwrap();
            let r0 = pou.rho(0, 0);
            let r1 = pou.rho(0, 1);
            assert_eq!(r0.eval(&[c(0.5, 0.0)], &[]).unwrap(), c(1.0, 0.0));
            assert_eq!(r1.eval(&[c(3.0, 0.0)], &[]).unwrap(), c(1.0, 0.0));
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
            for _ in 0..100 {
                let r = rng.gen_range(1.0..2.0);
                let th = rng.gen_range(0.0..2.0 * PI);
                let p = [Complex64::from_polar(r, th)];
                let s = r0.eval(&p, &[]).unwrap() + r1.eval(&p, &[]).unwrap();
                assert!((s - c(1.0, 0.0)).norm() < 1e-12);
            }
            let d = Form::scalar(0, 1, r0.clone()).d();
            for p in [c(0.9, 0.0), c(0.0, 2.1), c(-1.5, 0.4)] {
                let v = d.evaluate(&[p], &[], &[crate::forms::Tangent::real(&[c(1.0, 0.0)])]).unwrap();
                if p.norm() < 1.0 || p.norm() > 2.0 {
                    assert_eq!(v, c(0.0, 0.0));
                } else {
                    assert!(v.norm() > 0.0);
                }
            }
        }
    }

    #[test]
    fn partition_derivatives_match_finite_differences() {
        let atlas = plane();
        let cov = annulus_cover(&atlas);
        let pou = build_partition_of_unity(&atlas, &cov, BumpProfile::Quadratic).unwrap();
        let r = pou.rho(0, 0);
        let dz = r.diff(crate::fields::DVar::Z(0));
        let p = c(1.1, 0.7);
        let h = 1e-5;
        let f = |q: Complex64| r.eval(&[q], &[]).unwrap();
        let fx = (f(p + c(h, 0.0)) - f(p - c(h, 0.0))) / (2.0 * h);
        let fy = (f(p + c(0.0, h)) - f(p - c(0.0, h))) / (2.0 * h);
        let fd = (fx - c(0.0, 1.0) * fy) * 0.5;
        let got = dz.eval(&[p], &[]).unwrap();
        assert!((got - fd).norm() < 1e-5 * (1.0 + fd.norm()), "{got} vs {fd}");
    }

    #[test]
    fn transported_disk_field_is_finite_at_infinity() {
        let atlas = p1();
        let disk = CoverDisk { chart: 0, center: vec![c(0.0, 0.0)], r_in: 0.2, r_out: 0.6 };
        let cov = Covering::new(&atlas, vec![disk], 1, vec![(0, vec![c(0.0, 0.0)])]).unwrap();
        let pou = build_partition_of_unity(&atlas, &cov, BumpProfile::Quadratic).unwrap();
        // on chart 1 the disk around z = 0 is far away from w = 0
        assert_eq!(pou.rho(1, 1).eval(&[c(0.0, 0.0)], &[]).unwrap(), c(0.0, 0.0));
        // and the two charts agree on the overlap
        for w in [c(1.0 / 0.3, 0.0), c(0.5, 1.2)] {
            let z = c(1.0, 0.0) / w;
            let a = pou.rho(1, 1).eval(&[w], &[]).unwrap();
            let b = pou.rho(0, 1).eval(&[z], &[]).unwrap();
            assert!((a - b).norm() < 1e-12);
        }
        atlas.check_cocycles(20, crate::DEFAULT_SEED, 1e-9).unwrap();
    }

    #[test]
    fn degenerate_overlap_is_rejected() {
        let atlas = plane();
        let disk = CoverDisk { chart: 0, center: vec![c(0.0, 0.0)], r_in: 2.0, r_out: 1.0 };
        assert!(matches!(Covering::new(&atlas, vec![disk], 0, vec![]), Err(Error::DegenerateOverlap(_))));
    }

    #[test]
    fn honeycomb_marks() {
        let atlas = plane();
        let disks = vec![
            CoverDisk { chart: 0, center: vec![c(0.0, 0.0)], r_in: 0.5, r_out: 1.5 },
            CoverDisk { chart: 0, center: vec![c(5.0, 0.0)], r_in: 0.5, r_out: 1.5 },
        ];
        let cov = Covering::new(&atlas, disks, 1, vec![]).unwrap();
        let h = honeycomb_from_marks(&atlas, &cov, &[(0, c(0.0, 0.0)), (0, c(5.0, 0.0))], 1.0).unwrap();
        assert_eq!(h.interfaces(16).unwrap().len(), 2);
        assert_eq!(h.interface_sign(), 1);
        assert!(honeycomb_from_marks(&atlas, &cov, &[(0, c(0.0, 0.0)), (0, c(1.0, 0.0))], 1.0).is_err());
        assert!(honeycomb_from_marks(&atlas, &cov, &[(0, c(0.0, 0.0)), (0, c(5.0, 0.0))], 1.6).is_err());
        // each sample lies in exactly one open cell
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let p = c(rng.gen_range(-3.0..8.0), rng.gen_range(-3.0..3.0));
            let in_disks = h.disks.iter().filter(|d| (p - d.center).norm() < d.radius).count();
            assert!(in_disks <= 1);
            assert_eq!(h.cell_of(&atlas, 0, p) == 1, in_disks == 1);
        }
    }

    #[test]
    fn link_orientation() {
        let chain = link_of_point(c(0.0, 0.0), 1.0, 12).unwrap();
        let w = Form::parse("z1^(-1)*dz1", 0, 1).unwrap();
        let a = chain.integrate(&w, 1e-11).unwrap().value;
        let b = chain.neg().integrate(&w, 1e-11).unwrap().value;
        assert!((a - c(0.0, 2.0 * PI)).norm() < 1e-8);
        assert_eq!(a, -b);
    }

    #[test]
    fn cocycle_violation_is_named() {
        let d = Region::Disk { center: c(0.0, 0.0), radius: 1.5 };
        let mut a = Atlas::new(vec![Chart::new(0, vec![d.clone()]).unwrap(), Chart::new(1, vec![d]).unwrap()]).unwrap();
        a.add_transition(ChartMap::new(0, 1, 1, vec![parse_expr("z1^(-1)").unwrap()])).unwrap();
        a.add_transition(ChartMap::new(1, 1, 0, vec![parse_expr("2*z1^(-1)").unwrap()])).unwrap();
        assert!(matches!(a.check_cocycles(20, 1, 1e-9), Err(Error::Invariant(_))));
    }
}
