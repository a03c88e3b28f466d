//! JSON scene files: charts, transitions, bundles, sections, connections,
//! coverings, honeycombs, triangulations and foliations, with the sampled
//! checks run at load time, plus builders for the packaged scenes.

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bundles::{frame_connection, glue_by_partition, Bundle, Connection, ExprMatrix, FormMatrix, SectionTuple};
use crate::fields::{parse_expr, Expr};
use crate::forms::{ChartId, ChartMap, Form};
use crate::geometry::{build_partition_of_unity, link_of_point_on, Atlas, BumpProfile, Chart, CoverDisk, Covering, PartitionOfUnity, Region};
use crate::mesh::{Chain, Shape, Simplex, Triangulation, VertexKey};
use crate::residues::{FoliationGerm, ResidueOptions, ResidueProblem};
use crate::Error;

/// Samples used by the load-time checks.
const LOAD_SAMPLES: usize = 20;
const LOAD_TOL: f64 = 1e-9;

/// `[re, im]`.
pub type ComplexSpec = [f64; 2];

fn cx(p: ComplexSpec) -> Complex64 {
    Complex64::new(p[0], p[1])
}

fn spec(z: Complex64) -> ComplexSpec {
    [z.re, z.im]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionSpec {
    Plane,
    Disk { center: ComplexSpec, radius: f64 },
    Annulus { center: ComplexSpec, inner: f64, outer: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartSpec {
    pub id: ChartId,
    pub domain: Vec<RegionSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionSpec {
    pub source: ChartId,
    pub target: ChartId,
    pub components: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BundleTransitionSpec {
    pub source: ChartId,
    pub target: ChartId,
    /// Rows of `g_{source,target}` in source coordinates.
    pub matrix: Vec<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BundleSpec {
    pub rank: usize,
    pub transitions: Vec<BundleTransitionSpec>,
}

/// How a connection is specified.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConnectionSpec {
    /// Trivial in the frame of one chart, written on every chart.
    TrivialIn { chart: ChartId },
    /// Makes the scene's sections parallel, on the charts where they are given.
    Sections,
    /// Explicit connection matrices of 1-forms, keyed by chart id.
    Forms { forms: BTreeMap<String, Vec<Vec<String>>> },
    /// `ρ_outer ∇_outer + Σ_ν χ_ν ∇_ν` with the scene's covering.
    Glued { outer: Box<ConnectionSpec>, disks: Vec<ConnectionSpec> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverDiskSpec {
    pub chart: ChartId,
    pub center: Vec<ComplexSpec>,
    pub r_in: f64,
    pub r_out: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoveringSpec {
    /// Which of the two sets is the union of the disks.
    pub inner: usize,
    pub disks: Vec<CoverDiskSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkSpec {
    pub chart: ChartId,
    pub point: ComplexSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HoneycombSpec {
    pub radius: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub marks: Option<Vec<MarkSpec>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimplexSpec {
    pub chart: ChartId,
    /// Shared vertex ids; coordinates are used as keys when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ids: Option<Vec<usize>>,
    /// Affine vertices.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertices: Option<Vec<Vec<ComplexSpec>>>,
    /// Components in `t1..tk` on the standard simplex.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub components: Option<Vec<String>>,
    /// Dimension of a curved simplex.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub sign: i32,
}

fn one() -> i32 {
    1
}

fn is_one(s: &i32) -> bool {
    *s == 1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkSpec {
    /// Counterclockwise circle in the `y`-line.
    Circle { center: ComplexSpec, radius: f64, segments: usize },
    /// A closed curve `y(t1)`, `t1 ∈ [0, 1]`.
    Curve { component: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoliationSpec {
    pub a: String,
    pub b: String,
    pub link: LinkSpec,
}

/// A self-check: run `args` on the scene and compare the number at `path`
/// (dot-separated, into the JSON report) with `value`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpectedCheck {
    pub args: Vec<String>,
    pub path: String,
    pub value: f64,
    pub tol: f64,
}

/// The on-disk scene format.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SceneFile {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub charts: Vec<ChartSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub transitions: Vec<TransitionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bundle: Option<BundleSpec>,
    /// Chart id → list of sections, each a list of `rank` components.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sections: Option<BTreeMap<String, Vec<Vec<String>>>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub connections: BTreeMap<String, ConnectionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covering: Option<CoveringSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partition: Option<BumpProfileSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub honeycomb: Option<HoneycombSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub triangulation: Option<Vec<SimplexSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub foliation: Option<FoliationSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub expected: Vec<ExpectedCheck>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BumpProfileSpec {
    Quadratic,
    Quartic,
}

impl From<BumpProfileSpec> for BumpProfile {
    fn from(p: BumpProfileSpec) -> BumpProfile {
        match p {
            BumpProfileSpec::Quadratic => BumpProfile::Quadratic,
            BumpProfileSpec::Quartic => BumpProfile::Quartic,
        }
    }
}

/// A validated scene.
#[derive(Clone, Debug)]
pub struct Scene {
    pub file: SceneFile,
    pub atlas: Atlas,
    pub bundle: Option<Bundle>,
    pub sections: Option<SectionTuple>,
    pub covering: Option<Covering>,
    pub partition: Option<PartitionOfUnity>,
    pub connections: BTreeMap<String, Connection>,
    pub triangulation: Option<Triangulation>,
    pub foliation: Option<(FoliationGerm, Chain)>,
}

fn expr(s: &str, what: &str) -> Result<Expr, Error> {
    parse_expr(s).map_err(|e| match e {
        Error::Parse { pos, msg } => Error::Parse { pos, msg: format!("{msg} (in {what}: {s:?})") },
        other => other,
    })
}

fn chart_key(k: &str) -> Result<ChartId, Error> {
    k.parse()
        .map_err(|_| Error::Argument(format!("chart key {k:?} is not a chart id")))
}

impl Scene {
    pub fn load(path: impl AsRef<Path>) -> Result<Scene, Error> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Argument(format!("cannot read scene {}: {e}", path.display())))?;
        Scene::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Scene, Error> {
        let file: SceneFile = serde_json::from_str(text)?;
        Scene::from_file(file)
    }

    pub fn from_file(file: SceneFile) -> Result<Scene, Error> {
        let seed = crate::DEFAULT_SEED;
        let charts = file
            .charts
            .iter()
            .map(|c| {
                let domain = c
                    .domain
                    .iter()
                    .map(|r| match *r {
                        RegionSpec::Plane => Region::Plane,
                        RegionSpec::Disk { center, radius } => Region::Disk { center: cx(center), radius },
                        RegionSpec::Annulus { center, inner, outer } => Region::Annulus { center: cx(center), inner, outer },
                    })
                    .collect();
                Chart::new(c.id, domain)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut atlas = Atlas::new(charts)?;
        for t in &file.transitions {
            let comps = t
                .components
                .iter()
                .map(|s| expr(s, &format!("transition {} -> {}", t.source, t.target)))
                .collect::<Result<_, _>>()?;
            let dim = atlas.chart(t.source)?.dim;
            atlas.add_transition(ChartMap::new(t.source, dim, t.target, comps))?;
        }
        atlas.check_cocycles(LOAD_SAMPLES, seed, LOAD_TOL)?;

        let bundle = match &file.bundle {
            None => None,
            Some(b) => {
                let mut given = Vec::new();
                for t in &b.transitions {
                    let what = format!("bundle transition {} -> {}", t.source, t.target);
                    let rows = t
                        .matrix
                        .iter()
                        .map(|r| r.iter().map(|s| expr(s, &what)).collect::<Result<Vec<_>, _>>())
                        .collect::<Result<Vec<_>, _>>()?;
                    given.push((t.source, t.target, ExprMatrix::from_rows(rows)?));
                }
                let bundle = Bundle::new(&atlas, b.rank, given)?;
                bundle.check(&atlas, LOAD_SAMPLES, seed, LOAD_TOL)?;
                Some(bundle)
            }
        };

        let sections = match (&file.sections, &bundle) {
            (None, _) => None,
            (Some(_), None) => return Err(Error::Missing("sections need a bundle".into())),
            (Some(s), Some(bundle)) => {
                let mut per_chart = BTreeMap::new();
                for (k, list) in s {
                    let chart = chart_key(k)?;
                    let what = format!("sections on chart {chart}");
                    let parsed = list
                        .iter()
                        .map(|v| v.iter().map(|c| expr(c, &what)).collect::<Result<Vec<_>, _>>())
                        .collect::<Result<Vec<_>, _>>()?;
                    per_chart.insert(chart, parsed);
                }
                let st = SectionTuple::new(bundle.rank, per_chart)?;
                let worst = st.check_compatibility(&atlas, bundle, LOAD_SAMPLES, seed)?;
                if worst > 1e-8 {
                    return Err(Error::Invariant(format!("sections are not compatible with the bundle transitions (residual {worst:.3e})")));
                }
                Some(st)
            }
        };

        let covering = match &file.covering {
            None => None,
            Some(c) => {
                let disks = c
                    .disks
                    .iter()
                    .map(|d| CoverDisk {
                        chart: d.chart,
                        center: d.center.iter().copied().map(cx).collect(),
                        r_in: d.r_in,
                        r_out: d.r_out,
                    })
                    .collect();
                Some(Covering::new(&atlas, disks, c.inner, vec![])?)
            }
        };
        let profile: BumpProfile = file.partition.unwrap_or(BumpProfileSpec::Quadratic).into();
        let partition = match &covering {
            Some(cov) => Some(build_partition_of_unity(&atlas, cov, profile)?),
            None => None,
        };

        let mut scene = Scene {
            atlas,
            bundle,
            sections,
            covering,
            partition,
            connections: BTreeMap::new(),
            triangulation: None,
            foliation: None,
            file: SceneFile::default(),
        };
        for (name, spec) in &file.connections {
            let conn = scene.build_connection(spec, name)?;
            if let Some(bundle) = &scene.bundle {
                let worst = conn.check_compatibility(&scene.atlas, bundle, LOAD_SAMPLES, seed)?;
                if worst > 1e-7 {
                    return Err(Error::Invariant(format!("connection {name:?} violates the gauge rule (residual {worst:.3e})")));
                }
            }
            scene.connections.insert(name.clone(), conn);
        }

        if let Some(list) = &file.triangulation {
            let simplices = list.iter().enumerate().map(|(i, s)| build_simplex(i, s)).collect::<Result<Vec<_>, _>>()?;
            for s in &simplices {
                let dim = scene.atlas.chart(s.chart)?.dim;
                if s.target_dim != dim {
                    return Err(Error::Dimension(format!("simplex on chart {} has {} components", s.chart, s.target_dim)));
                }
            }
            let t = Triangulation::new(simplices);
            t.check_coherent()?;
            scene.triangulation = Some(t);
        }

        if let Some(f) = &file.foliation {
            let germ = FoliationGerm::new(expr(&f.a, "foliation a")?, expr(&f.b, "foliation b")?)?;
            let link = match &f.link {
                LinkSpec::Circle { center, radius, segments } => link_of_point_on(0, cx(*center), *radius, *segments)?,
                LinkSpec::Curve { component } => {
                    let y = expr(component, "link curve")?;
                    let keys = vec![VertexKey::Id(0), VertexKey::Id(0)];
                    Chain::from_simplices([Simplex::curved(0, 1, vec![y], keys)?])
                }
            };
            scene.foliation = Some((germ, link));
        }
        scene.file = file;
        Ok(scene)
    }

    fn build_connection(&self, spec: &ConnectionSpec, name: &str) -> Result<Connection, Error> {
        let bundle = self
            .bundle
            .as_ref()
            .ok_or_else(|| Error::Missing(format!("connection {name:?} needs a bundle")))?;
        match spec {
            ConnectionSpec::TrivialIn { chart } => Connection::chart_trivial(&self.atlas, bundle, *chart),
            ConnectionSpec::Sections => {
                let s = self
                    .sections
                    .as_ref()
                    .ok_or_else(|| Error::Missing(format!("connection {name:?} needs sections")))?;
                if s.r != bundle.rank {
                    return Err(Error::Argument(format!("connection {name:?} needs a full frame of sections")));
                }
                let mut forms = BTreeMap::new();
                for (c, v) in &s.per_chart {
                    let dim = self.atlas.chart(*c)?.dim;
                    forms.insert(*c, frame_connection(&ExprMatrix::from_columns(v)?, *c, dim));
                }
                Connection::new(bundle.rank, forms)
            }
            ConnectionSpec::Forms { forms } => {
                let mut out = BTreeMap::new();
                for (k, rows) in forms {
                    let chart = chart_key(k)?;
                    let dim = self.atlas.chart(chart)?.dim;
                    let m = rows
                        .iter()
                        .map(|r| r.iter().map(|s| Form::parse(s, chart, dim)).collect::<Result<Vec<_>, _>>())
                        .collect::<Result<Vec<_>, _>>()?;
                    out.insert(chart, FormMatrix::from_rows(m)?);
                }
                Connection::new(bundle.rank, out)
            }
            ConnectionSpec::Glued { outer, disks } => {
                let (cov, pou) = self
                    .covering
                    .as_ref()
                    .zip(self.partition.as_ref())
                    .ok_or_else(|| Error::Missing(format!("glued connection {name:?} needs a covering")))?;
                let outer = self.build_connection(outer, name)?;
                let disks = disks.iter().map(|d| self.build_connection(d, name)).collect::<Result<Vec<_>, _>>()?;
                glue_by_partition(&self.atlas, bundle, cov, pou, &outer, &disks)
            }
        }
    }

    pub fn connection(&self, name: &str) -> Result<&Connection, Error> {
        self.connections.get(name).ok_or_else(|| {
            let known: Vec<&String> = self.connections.keys().collect();
            Error::Missing(format!("connection {name:?} is not in the scene (available: {known:?})"))
        })
    }

    pub fn triangulation(&self) -> Result<&Triangulation, Error> {
        self.triangulation
            .as_ref()
            .ok_or_else(|| Error::Missing("triangulation required".into()))
    }

    /// The residue-theorem inputs, with covering radii and marks taken
    /// from the scene when present.
    pub fn residue_problem(&self, quad_tol: f64) -> Result<ResidueProblem, Error> {
        let triangulation = self.triangulation()?.clone();
        let bundle = self.bundle.clone().ok_or_else(|| Error::Missing("bundle required".into()))?;
        let sections = self.sections.clone().ok_or_else(|| Error::Missing("sections required".into()))?;
        let mut options = ResidueOptions {
            quad_tol,
            profile: self.file.partition.unwrap_or(BumpProfileSpec::Quadratic).into(),
            ..ResidueOptions::default()
        };
        if let Some(c) = &self.file.covering {
            if let Some(d) = c.disks.first() {
                options.r_in = d.r_in;
                options.r_out = d.r_out;
            }
            options.marks = Some(c.disks.iter().map(|d| (d.chart, cx(d.center[0]))).collect());
        }
        if let Some(h) = &self.file.honeycomb {
            options.honeycomb_radius = h.radius;
            if let Some(m) = &h.marks {
                options.marks = Some(m.iter().map(|m| (m.chart, cx(m.point))).collect());
            }
        }
        Ok(ResidueProblem {
            atlas: self.atlas.clone(),
            bundle,
            sections,
            triangulation,
            options,
        })
    }
}

fn build_simplex(idx: usize, s: &SimplexSpec) -> Result<Simplex, Error> {
    let simplex = match (&s.vertices, &s.components) {
        (Some(v), None) => Simplex::affine(s.chart, v.iter().map(|p| p.iter().copied().map(cx).collect()).collect())?,
        (None, Some(c)) => {
            let k = s
                .dim
                .ok_or_else(|| Error::Missing(format!("curved simplex #{idx} needs its dimension")))?;
            let comps = c
                .iter()
                .map(|e| expr(e, &format!("simplex #{idx}")))
                .collect::<Result<Vec<_>, _>>()?;
            let ids = s
                .ids
                .as_ref()
                .ok_or_else(|| Error::Missing(format!("curved simplex #{idx} needs vertex ids")))?;
            Simplex::curved(s.chart, k, comps, ids.iter().map(|i| VertexKey::Id(*i)).collect())?
        }
        _ => return Err(Error::Argument(format!("simplex #{idx} needs exactly one of vertices and components"))),
    };
    let simplex = match &s.ids {
        Some(ids) if ids.len() != simplex.dim + 1 => {
            return Err(Error::Dimension(format!("simplex #{idx} has {} ids for {} vertices", ids.len(), simplex.dim + 1)))
        }
        Some(ids) => simplex.with_vertex_ids(ids),
        None => simplex,
    };
    Ok(simplex.with_sign(s.sign))
}

/// The scene-file form of a simplex.
pub fn simplex_spec(s: &Simplex) -> SimplexSpec {
    let ids = s
        .vertices
        .iter()
        .map(|k| match k {
            VertexKey::Id(i) => Some(*i),
            VertexKey::Coords(..) => None,
        })
        .collect::<Option<Vec<_>>>();
    match &s.shape {
        Shape::Affine(v) => SimplexSpec {
            chart: s.chart,
            ids,
            vertices: Some(v.iter().map(|p| p.iter().copied().map(spec).collect()).collect()),
            components: None,
            dim: None,
            sign: s.sign,
        },
        Shape::Curved(m) => SimplexSpec {
            chart: s.chart,
            ids,
            vertices: None,
            components: Some(m.components.iter().map(|e| e.to_string()).collect()),
            dim: Some(s.dim),
            sign: s.sign,
        },
    }
}

/// Builders for the scenes shipped in `scenes/`.
pub mod packaged {
    use super::*;
    use crate::models::{projective_line_triangulation, torus_triangulation, P1_CHART_RADIUS};

    fn p1_base(name: &str, description: &str) -> SceneFile {
        let disk = RegionSpec::Disk { center: [0.0, 0.0], radius: P1_CHART_RADIUS };
        SceneFile {
            name: name.into(),
            description: description.into(),
            charts: vec![ChartSpec { id: 0, domain: vec![disk.clone()] }, ChartSpec { id: 1, domain: vec![disk] }],
            transitions: vec![
                TransitionSpec { source: 0, target: 1, components: vec!["z1^(-1)".into()] },
                TransitionSpec { source: 1, target: 0, components: vec!["z1^(-1)".into()] },
            ],
            triangulation: Some(projective_line_triangulation().expect("fixed model").simplices.iter().map(simplex_spec).collect()),
            ..SceneFile::default()
        }
    }

    fn disk_at_origin(chart: ChartId) -> CoverDiskSpec {
        CoverDiskSpec { chart, center: vec![[0.0, 0.0]], r_in: 0.2, r_out: 0.6 }
    }

    fn check(args: &[&str], path: &str, value: f64, tol: f64) -> ExpectedCheck {
        ExpectedCheck {
            args: args.iter().map(|s| s.to_string()).collect(),
            path: path.into(),
            value,
            tol,
        }
    }

    /// File name of the `O(d)` scene.
    pub fn p1_od_file_name(d: i64) -> String {
        match d {
            3 => "p1_od.json".into(),
            d if d < 0 => format!("p1_od_minus{}.json", -d),
            d => format!("p1_od_{d}.json"),
        }
    }

    /// `O(d)` on `ℙ¹` with the connection glued from the two chart frames,
    /// and the section `z^d` when `d ≥ 0`.
    pub fn p1_od(d: i64) -> SceneFile {
        let mut f = p1_base(
            &format!("p1_od_{d}"),
            &format!("The line bundle O({d}) on the projective line, e1 = e0 z^{d}."),
        );
        f.bundle = Some(BundleSpec {
            rank: 1,
            transitions: vec![BundleTransitionSpec { source: 0, target: 1, matrix: vec![vec![format!("z1^({d})")]] }],
        });
        f.covering = Some(CoveringSpec { inner: 1, disks: vec![disk_at_origin(0)] });
        f.honeycomb = Some(HoneycombSpec { radius: 0.4, marks: None });
        f.connections.insert(
            "nabla".into(),
            ConnectionSpec::Glued {
                outer: Box::new(ConnectionSpec::TrivialIn { chart: 1 }),
                disks: vec![ConnectionSpec::TrivialIn { chart: 0 }],
            },
        );
        f.connections.insert("trivial0".into(), ConnectionSpec::TrivialIn { chart: 0 });
        f.connections.insert("trivial1".into(), ConnectionSpec::TrivialIn { chart: 1 });
        f.expected.push(check(&["chern", "--q", "1"], "results.integral.re", d as f64, 1e-6));
        f.expected.push(check(&["bott-diff", "--from", "trivial1", "--to", "nabla"], "results.identity_residual", 0.0, 1e-7));
        if d >= 0 {
            f.sections = Some(
                [("0".to_string(), vec![vec![format!("z1^{d}")]]), ("1".to_string(), vec![vec!["1".to_string()]])]
                    .into_iter()
                    .collect(),
            );
            // the residue check needs a zero to put a disk around
            if d > 0 {
                f.expected.push(check(&["verify", "residue-theorem", "--q", "1"], "results.global.re", d as f64, 1e-6));
            }
        }
        f
    }

    /// `Tℙ¹` with the vector field `z ∂/∂z`, zero at both poles.
    pub fn tp1_vector_field() -> SceneFile {
        let mut f = p1_base(
            "tp1_vector_field",
            "Tangent bundle of the projective line with the vector field z d/dz, vanishing at 0 and at infinity.",
        );
        f.bundle = Some(BundleSpec {
            rank: 1,
            transitions: vec![BundleTransitionSpec { source: 0, target: 1, matrix: vec![vec!["-z1^2".into()]] }],
        });
        f.sections = Some(
            [("0".to_string(), vec![vec!["z1".to_string()]]), ("1".to_string(), vec![vec!["-z1".to_string()]])]
                .into_iter()
                .collect(),
        );
        f.covering = Some(CoveringSpec { inner: 1, disks: vec![disk_at_origin(0), disk_at_origin(1)] });
        f.honeycomb = Some(HoneycombSpec { radius: 0.4, marks: None });
        f.connections.insert(
            "nabla".into(),
            ConnectionSpec::Glued {
                outer: Box::new(ConnectionSpec::Sections),
                disks: vec![ConnectionSpec::TrivialIn { chart: 0 }, ConnectionSpec::TrivialIn { chart: 1 }],
            },
        );
        f.connections.insert("frame".into(), ConnectionSpec::Sections);
        f.expected = vec![
            check(&["chern", "--q", "1"], "results.integral.re", 2.0, 1e-6),
            check(&["bott-diff", "--from", "frame", "--to", "nabla"], "results.identity_residual", 0.0, 1e-7),
            check(&["verify", "residue-theorem", "--q", "1"], "results.global.re", 2.0, 1e-6),
            check(&["verify", "residue-theorem", "--q", "1"], "results.locals.0.value.re", 1.0, 1e-3),
            check(&["verify", "residue-theorem", "--q", "1"], "results.locals.1.value.re", 1.0, 1e-3),
            check(&["verify", "residue-theorem", "--q", "1"], "results.discrepancy", 0.0, 1e-6),
        ];
        f
    }

    /// The foliation `λ h ∂/∂h + μ y ∂/∂y` near the origin of `ℂ²`.
    pub fn linear_foliation() -> SceneFile {
        SceneFile {
            name: "linear_foliation".into(),
            description: "Linear foliation 3 h d/dh + 2 y d/dy with invariant curve h = 0; Camacho-Sad residue 3/2.".into(),
            charts: vec![ChartSpec { id: 0, domain: vec![RegionSpec::Plane, RegionSpec::Plane] }],
            foliation: Some(FoliationSpec {
                a: "3".into(),
                b: "2*z2".into(),
                link: LinkSpec::Circle { center: [0.0, 0.0], radius: 0.5, segments: 16 },
            }),
            expected: vec![check(&["residue", "camacho-sad"], "results.residue.re", 1.5, 1e-8)],
            ..SceneFile::default()
        }
    }

    /// Marker scene for the cusp obstruction; the data is built in.
    pub fn bloom_herrera() -> SceneFile {
        SceneFile {
            name: "bloom_herrera".into(),
            description: "Cusp z -> (z^5, z^6 + z^7) with the ambient form z1 dz2; the truncated membership test fails first at degree 13.".into(),
            charts: vec![ChartSpec { id: 0, domain: vec![RegionSpec::Plane, RegionSpec::Plane] }],
            expected: vec![check(&["extendability", "bloom-herrera", "--max-degree", "20"], "results.obstruction_degree", 13.0, 0.0)],
            ..SceneFile::default()
        }
    }

    /// The square torus with its flat area form.
    pub fn torus_area() -> SceneFile {
        SceneFile {
            name: "torus_area".into(),
            description: "Square torus C/(Z + iZ) on one chart; the area form (i/2) dz^dzbar integrates to 1.".into(),
            charts: vec![ChartSpec { id: 0, domain: vec![RegionSpec::Plane] }],
            bundle: Some(BundleSpec { rank: 1, transitions: vec![] }),
            connections: [(
                "nabla".to_string(),
                ConnectionSpec::Forms {
                    // dθ = π dz∧dz̄, so c¹ = (i/2π)·π dz∧dz̄ = (i/2) dz∧dz̄, the area form
                    forms: [("0".to_string(), vec![vec!["pi*z1*dzbar1".to_string()]])].into_iter().collect(),
                },
            )]
            .into_iter()
            .collect(),
            triangulation: Some(torus_triangulation(4).expect("fixed model").simplices.iter().map(simplex_spec).collect()),
            expected: vec![check(&["chern", "--q", "1"], "results.integral.re", 1.0, 1e-9)],
            ..SceneFile::default()
        }
    }

    /// Every packaged scene with its file name.
    pub fn all() -> Vec<(String, SceneFile)> {
        let mut out: Vec<(String, SceneFile)> = (-2..=3).map(|d| (p1_od_file_name(d), p1_od(d))).collect();
        out.push(("tp1_vector_field.json".into(), tp1_vector_field()));
        out.push(("linear_foliation.json".into(), linear_foliation()));
        out.push(("bloom_herrera.json".into(), bloom_herrera()));
        out.push(("torus_area.json".into(), torus_area()));
        out
    }

    /// Pretty JSON with a trailing newline, as written to disk.
    pub fn render(f: &SceneFile) -> String {
        let mut s = serde_json::to_string_pretty(f).expect("serializable");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn od_scene_loads() {
        let s = Scene::from_json(&packaged::render(&packaged::p1_od(3))).unwrap();
        assert_eq!(s.atlas.charts.len(), 2);
        assert!(s.triangulation.is_some());
        assert!(s.connection("nabla").is_ok());
        assert!(s.connection("other").is_err());
    }

    #[test]
    fn cocycle_violation_is_named() {
        let mut f = packaged::p1_od(1);
        f.transitions[1].components = vec!["2*z1^(-1)".into()];
        let err = Scene::from_file(f).unwrap_err();
        assert!(matches!(err, Error::Invariant(ref m) if m.contains("cocycle")), "{err}");
    }

    #[test]
    fn missing_sections_are_reported() {
        let s = Scene::from_file(packaged::linear_foliation()).unwrap();
        assert!(matches!(s.triangulation(), Err(Error::Missing(ref m)) if m == "triangulation required"));
        assert!(s.residue_problem(1e-9).is_err());
    }

    #[test]
    fn torus_scene_has_a_closed_triangulation() {
        let s = Scene::from_file(packaged::torus_area()).unwrap();
        s.triangulation().unwrap().check_coherent().unwrap();
    }
}
