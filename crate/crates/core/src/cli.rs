//! Command-line front end: argument parsing, dispatch to the library, and
//! report assembly. The `extcw` binary is a thin wrapper around [`run`].

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::checks::{bott_suite, cech_suite, coordinate_norm, stokes_suite};
use crate::chernweil::{bott_difference, chern_forms};
use crate::extendability::{bloom_herrera_certificate, cusp_form, cusp_map, sweep, Membership, ObstructionReport};
use crate::fields::{parse_expr, Expr};
use crate::forms::{ChartId, Form};
use crate::geometry::{link_of_point_on, sphere_chain, Atlas};
use crate::report::{complex_value, integral_value, point_value, Flags, Report, Verdict};
use crate::residues::{bm_index, camacho_sad, residue_theorem_check, FoliationGerm, INTEGER_TOLERANCE};
use crate::scene::Scene;
use crate::{seeded_rng, Error};

/// Bound for `‖d c^q‖` at sample points.
const CLOSEDNESS_TOL: f64 = 1e-8;
/// Bound for the sampled difference identity of Bott forms.
const DIFFERENCE_TOL: f64 = 1e-7;

fn parse_seed(s: &str) -> Result<u64, String> {
    let s = s.trim();
    let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    };
    parsed.map_err(|e| format!("invalid seed {s:?}: {e}"))
}

#[derive(Debug, Parser)]
#[command(name = "extcw", version, about = "Chern-Weil forms, Cech-de Rham integration and localized residues on chart-based complex models")]
pub struct Cli {
    /// Acceptance tolerance for reported verdicts.
    #[arg(long, global = true, default_value_t = 1e-6)]
    pub tol: f64,
    /// Absolute tolerance handed to the adaptive quadrature.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub quad_tol: f64,
    /// Seed for sample points and random suites (decimal or 0x-hex).
    #[arg(long, global = true, default_value = "0x5EED", value_parser = parse_seed)]
    pub seed: u64,
    /// Scene file.
    #[arg(long, global = true)]
    pub scene: Option<PathBuf>,
    /// Emit the JSON report.
    #[arg(long, global = true, conflicts_with = "table")]
    pub json: bool,
    /// Emit the human-readable table (the default).
    #[arg(long, global = true)]
    pub table: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Chern forms of a scene connection, sampled, and integrated over the
    /// fundamental class when the degree is top.
    Chern {
        #[arg(long, default_value_t = 1)]
        q: usize,
        #[arg(long, default_value = "nabla")]
        connection: String,
        /// Sample points per chart.
        #[arg(long, default_value_t = 3)]
        samples: usize,
    },
    /// Bott difference form of two scene connections with the sampled
    /// identity `d bott = c(to) − c(from)`.
    BottDiff {
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[arg(long, default_value_t = 1)]
        q: usize,
        #[arg(long, default_value_t = 50)]
        samples: usize,
    },
    /// Two-set Čech–de Rham complex.
    Cech {
        #[command(subcommand)]
        action: CechAction,
    },
    /// Indices and residues.
    Residue {
        #[command(subcommand)]
        action: ResidueAction,
    },
    /// Property suites and the residue theorem.
    Verify {
        #[command(subcommand)]
        action: VerifyAction,
    },
    /// Extendable-form obstructions.
    Extendability {
        #[command(subcommand)]
        action: ExtendabilityAction,
    },
    /// Runs the `expected` block embedded in the scene.
    Selfcheck,
}

#[derive(Debug, Subcommand)]
pub enum CechAction {
    /// D∘D = 0, φ∘P = id and honeycomb integrals on a planar covering.
    Verify,
}

#[derive(Debug, Subcommand)]
pub enum ResidueAction {
    /// Bochner–Martinelli index of a map ℂ^m → ℂ^m over a sphere, m ≤ 2.
    Index(IndexArgs),
    /// Camacho–Sad residue of the scene foliation, or of `--a`/`--b` given directly.
    CamachoSad(CamachoSadArgs),
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    /// Component of the map, once per coordinate.
    #[arg(long = "map", required = true)]
    pub map: Vec<String>,
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    /// Centre coordinates, `re,im` once per coordinate; the origin by default.
    #[arg(long = "center")]
    pub center: Vec<String>,
    /// Segments of the circle (m = 1) or boxes per Hopf angle (m = 2).
    #[arg(long)]
    pub divisions: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CamachoSadArgs {
    #[arg(long, requires = "b")]
    pub a: Option<String>,
    #[arg(long, requires = "a")]
    pub b: Option<String>,
    /// Radius of the circle link when `--a`/`--b` are given.
    #[arg(long, default_value_t = 0.5)]
    pub radius: f64,
    #[arg(long, default_value_t = 16)]
    pub segments: usize,
}

#[derive(Debug, Subcommand)]
pub enum VerifyAction {
    /// Localised residues against the global Chern number.
    ResidueTheorem {
        #[arg(long, default_value_t = 1)]
        q: usize,
    },
    /// Stokes on random triangles.
    Stokes {
        #[arg(long, default_value_t = 30)]
        trials: usize,
    },
    /// Difference identity of Bott forms on random connection pairs.
    Bott {
        #[arg(long, default_value_t = 5)]
        pairs: usize,
        #[arg(long, default_value_t = 50)]
        points: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum ExtendabilityAction {
    /// z₁dz₂ on the cusp (z⁵, z⁶ + z⁷): truncated membership of its primitive.
    BloomHerrera {
        #[arg(long, default_value_t = 20)]
        max_degree: usize,
    },
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run_args<I, T>(argv: I) -> Result<(Cli, Report), Error>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| Error::Argument(e.to_string()))?;
    let report = run(&cli)?;
    Ok((cli, report))
}

/// Runs a parsed command line.
pub fn run(cli: &Cli) -> Result<Report, Error> {
    let scene = match &cli.scene {
        Some(p) => Some(Scene::load(p)?),
        None => None,
    };
    run_with_scene(cli, scene.as_ref(), cli.scene.as_deref())
}

fn command_echo(cli: &Cli) -> Vec<String> {
    let mut words: Vec<String> = match &cli.command {
        Command::Chern { q, connection, samples } => vec!["chern".into(), format!("--q={q}"), format!("--connection={connection}"), format!("--samples={samples}")],
        Command::BottDiff { from, to, q, samples } => vec!["bott-diff".into(), format!("--from={from}"), format!("--to={to}"), format!("--q={q}"), format!("--samples={samples}")],
        Command::Cech { action: CechAction::Verify } => vec!["cech".into(), "verify".into()],
        Command::Residue { action: ResidueAction::Index(a) } => {
            let mut w = vec!["residue".into(), "index".into()];
            w.extend(a.map.iter().map(|m| format!("--map={m}")));
            w.extend(a.center.iter().map(|c| format!("--center={c}")));
            w.push(format!("--radius={}", a.radius));
            if let Some(d) = a.divisions {
                w.push(format!("--divisions={d}"));
            }
            w
        }
        Command::Residue { action: ResidueAction::CamachoSad(a) } => {
            let mut w = vec!["residue".into(), "camacho-sad".into()];
            if let (Some(x), Some(y)) = (&a.a, &a.b) {
                w.extend([format!("--a={x}"), format!("--b={y}"), format!("--radius={}", a.radius), format!("--segments={}", a.segments)]);
            }
            w
        }
        Command::Verify { action: VerifyAction::ResidueTheorem { q } } => vec!["verify".into(), "residue-theorem".into(), format!("--q={q}")],
        Command::Verify { action: VerifyAction::Stokes { trials } } => vec!["verify".into(), "stokes".into(), format!("--trials={trials}")],
        Command::Verify { action: VerifyAction::Bott { pairs, points } } => vec!["verify".into(), "bott".into(), format!("--pairs={pairs}"), format!("--points={points}")],
        Command::Extendability { action: ExtendabilityAction::BloomHerrera { max_degree } } => {
            vec!["extendability".into(), "bloom-herrera".into(), format!("--max-degree={max_degree}")]
        }
        Command::Selfcheck => vec!["selfcheck".into()],
    };
    words.insert(0, "extcw".into());
    words
}

fn need<'a>(scene: Option<&'a Scene>, what: &str) -> Result<&'a Scene, Error> {
    scene.ok_or_else(|| Error::Missing(format!("{what} needs a scene (--scene FILE)")))
}

/// Runs a command against an already loaded scene. `path` is only echoed.
pub fn run_with_scene(cli: &Cli, scene: Option<&Scene>, path: Option<&Path>) -> Result<Report, Error> {
    let flags = Flags { tol: cli.tol, quad_tol: cli.quad_tol, seed: cli.seed };
    let (results, verdicts) = match &cli.command {
        Command::Chern { q, connection, samples } => chern(need(scene, "chern")?, *q, connection, *samples, &flags)?,
        Command::BottDiff { from, to, q, samples } => bott_diff(need(scene, "bott-diff")?, from, to, *q, *samples, &flags)?,
        Command::Cech { action: CechAction::Verify } => {
            let s = cech_suite(flags.seed, flags.quad_tol)?;
            let verdicts = s.checks.iter().map(|c| Verdict::below(c.name.clone(), c.worst, c.tol)).collect();
            (serde_json::to_value(&s)?, verdicts)
        }
        Command::Residue { action: ResidueAction::Index(a) } => index(a, &flags)?,
        Command::Residue { action: ResidueAction::CamachoSad(a) } => camacho_sad_command(scene, a, &flags)?,
        Command::Verify { action: VerifyAction::ResidueTheorem { q } } => residue_theorem(need(scene, "verify residue-theorem")?, *q, &flags)?,
        Command::Verify { action: VerifyAction::Stokes { trials } } => {
            let tol = 1e-8;
            let s = stokes_suite(*trials, flags.seed, tol)?;
            let verdicts = vec![
                Verdict::holds(format!("{}/{} triangles pass", s.passed, s.trials), s.pass),
                Verdict::below("largest |∫dω − ∫∂ω|", s.worst, tol),
            ];
            (serde_json::to_value(&s)?, verdicts)
        }
        Command::Verify { action: VerifyAction::Bott { pairs, points } } => {
            let s = bott_suite(*pairs, *points, flags.seed, DIFFERENCE_TOL)?;
            let verdicts = vec![
                Verdict::below("largest |d bott − (c₁ − c₀)|", s.worst, DIFFERENCE_TOL),
                Verdict::holds("bott(∇₁,∇₀) = −bott(∇₀,∇₁) exactly", s.cases.iter().all(|c| c.antisymmetric)),
            ];
            (serde_json::to_value(&s)?, verdicts)
        }
        Command::Extendability { action: ExtendabilityAction::BloomHerrera { max_degree } } => bloom_herrera(*max_degree)?,
        Command::Selfcheck => selfcheck(need(scene, "selfcheck")?, path, &flags)?,
    };
    let scene_name = scene.map(|s| s.file.name.clone());
    Ok(Report::new(command_echo(cli), scene_name, flags, results, verdicts))
}

type Outcome = (Value, Vec<Verdict>);

fn sample_points(atlas: &Atlas, per_chart: usize, seed: u64) -> BTreeMap<ChartId, Vec<Vec<Complex64>>> {
    let mut rng = seeded_rng(seed);
    atlas
        .charts
        .iter()
        .map(|c| (c.id, (0..per_chart).map(|_| c.sample(&mut rng)).collect()))
        .collect()
}

/// Coefficients of `f` at `z`, keyed by the wedge monomial.
fn sampled_coefficients(f: &Form, z: &[Complex64]) -> Result<Value, Error> {
    let mut out = serde_json::Map::new();
    for (coeff, covs) in f.terms() {
        let key = if covs.is_empty() {
            "1".to_string()
        } else {
            covs.iter().map(|c| c.to_string()).collect::<Vec<_>>().join("^")
        };
        out.insert(key, complex_value(coeff.eval(z, &[])?));
    }
    Ok(Value::Object(out))
}

fn nearest_integer_distance(x: Complex64) -> f64 {
    Complex64::new(x.re - x.re.round(), x.im).norm()
}

fn chern(scene: &Scene, q: usize, name: &str, samples: usize, flags: &Flags) -> Result<Outcome, Error> {
    let conn = scene.connection(name)?;
    let forms = chern_forms(conn, q)?;
    let points = sample_points(&scene.atlas, samples, flags.seed);
    let mut charts = serde_json::Map::new();
    let mut closed: f64 = 0.0;
    for (chart, f) in &forms {
        let df = f.d().compile();
        let mut sampled = Vec::new();
        for z in points.get(chart).into_iter().flatten() {
            closed = closed.max(coordinate_norm(&df, z, &mut Vec::new())?);
            sampled.push(json!({ "point": point_value(z), "coefficients": sampled_coefficients(f, z)? }));
        }
        charts.insert(chart.to_string(), json!({ "form": f.to_string(), "samples": sampled }));
    }
    let mut results = json!({ "q": q, "connection": name, "charts": charts });
    let mut verdicts = vec![Verdict::below("d c^q vanishes at samples", closed, CLOSEDNESS_TOL)];
    let top = scene.atlas.charts.iter().all(|c| c.dim == q);
    if let (Some(t), true) = (&scene.triangulation, top) {
        let integral = t.integrate_fundamental_class(&|c| forms.get(&c).cloned(), flags.quad_tol)?;
        results["integral"] = integral_value(&integral);
        verdicts.push(Verdict::below("quadrature error estimate", integral.error, flags.tol));
        verdicts.push(Verdict::below("integral is an integer", nearest_integer_distance(integral.value), flags.tol));
    }
    Ok((results, verdicts))
}

fn bott_diff(scene: &Scene, from: &str, to: &str, q: usize, samples: usize, flags: &Flags) -> Result<Outcome, Error> {
    let (c0, c1) = (scene.connection(from)?, scene.connection(to)?);
    let points = sample_points(&scene.atlas, samples, flags.seed);
    let mut charts = serde_json::Map::new();
    let mut residual: f64 = 0.0;
    let mut antisymmetric = true;
    let mut rng = seeded_rng(flags.seed ^ 0xB077);
    for (chart, t0) in &c0.forms {
        let Some(t1) = c1.on(*chart) else { continue };
        let b = bott_difference(t0, t1, q)?;
        let ch0 = crate::chernweil::chern_form(t0, q)?;
        let ch1 = crate::chernweil::chern_form(t1, q)?;
        let defect = b.form().d().try_sub(&ch1.try_sub(&ch0)?)?.compile();
        let (fwd, back) = (b.compile(), b.swapped().compile());
        let dim = scene.atlas.chart(*chart)?.dim;
        let scratch = &mut Vec::new();
        let mut sampled = Vec::new();
        for z in points.get(chart).into_iter().flatten() {
            residual = residual.max(coordinate_norm(&defect, z, scratch)?);
            let probe: Vec<_> = (0..2 * q - 1)
                .map(|_| {
                    use rand::Rng;
                    let v: Vec<Complex64> = (0..dim).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
                    crate::forms::Tangent::real(&v)
                })
                .collect();
            antisymmetric &= back.evaluate(z, &probe, scratch)? == -fwd.evaluate(z, &probe, scratch)?;
            if sampled.len() < 3 {
                sampled.push(json!({ "point": point_value(z), "coefficients": sampled_coefficients(b.form(), z)? }));
            }
        }
        charts.insert(chart.to_string(), json!({ "form": b.form().to_string(), "samples": sampled }));
    }
    let results = json!({ "q": q, "from": from, "to": to, "charts": charts, "identity_residual": residual });
    let verdicts = vec![
        Verdict::below("d bott(∇₀,∇₁) = c(∇₁) − c(∇₀) at samples", residual, DIFFERENCE_TOL),
        Verdict::holds("bott(∇₁,∇₀) = −bott(∇₀,∇₁) exactly", antisymmetric),
    ];
    Ok((results, verdicts))
}

fn parse_complex(s: &str) -> Result<Complex64, Error> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |p: &str| p.parse::<f64>().map_err(|_| Error::Argument(format!("centre coordinate {s:?} is not `re,im`")));
    match parts[..] {
        [re] => Ok(Complex64::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
        _ => Err(Error::Argument(format!("centre coordinate {s:?} is not `re,im`"))),
    }
}

fn index(a: &IndexArgs, flags: &Flags) -> Result<Outcome, Error> {
    let m = a.map.len();
    let f = a.map.iter().map(|s| parse_expr(s)).collect::<Result<Vec<Expr>, _>>()?;
    let center = if a.center.is_empty() {
        vec![Complex64::new(0.0, 0.0); m]
    } else if a.center.len() == m {
        a.center.iter().map(|s| parse_complex(s)).collect::<Result<_, _>>()?
    } else {
        return Err(Error::Dimension(format!("{} centre coordinates for a map with {m} components", a.center.len())));
    };
    let divisions = a.divisions.unwrap_or(if m == 1 { 16 } else { 2 });
    let sphere = sphere_chain(&center, a.radius, divisions)?;
    let r = bm_index(&f, &sphere, flags.quad_tol)?;
    let results = json!({
        "m": m,
        "map": a.map,
        "center": point_value(&center),
        "radius": a.radius,
        "divisions": divisions,
        "index": r.index,
        "integral": integral_value(&r.integral),
        "residual": r.residual,
    });
    Ok((results, vec![Verdict::below("distance of the integral from an integer", r.residual, INTEGER_TOLERANCE)]))
}

fn camacho_sad_command(scene: Option<&Scene>, a: &CamachoSadArgs, flags: &Flags) -> Result<Outcome, Error> {
    let (germ, link, a_src, b_src) = match (&a.a, &a.b, scene) {
        (Some(x), Some(y), _) => {
            let germ = FoliationGerm::new(parse_expr(x)?, parse_expr(y)?)?;
            let link = link_of_point_on(0, Complex64::new(0.0, 0.0), a.radius, a.segments)?;
            (germ, link, x.clone(), y.clone())
        }
        (_, _, Some(s)) => {
            let (germ, link) = s
                .foliation
                .clone()
                .ok_or_else(|| Error::Missing("foliation required".into()))?;
            let f = s.file.foliation.as_ref().expect("loaded with the foliation");
            (germ, link, f.a.clone(), f.b.clone())
        }
        _ => return Err(Error::Missing("residue camacho-sad needs a scene with a foliation or --a and --b".into())),
    };
    let r = camacho_sad(&germ, &link, flags.quad_tol)?;
    let (ra, rb) = germ.restricted();
    let results = json!({
        "a": a_src,
        "b": b_src,
        "integrand": format!("({ra})/({rb}) dy"),
        "residue": integral_value(&r),
    });
    Ok((results, vec![Verdict::below("quadrature error estimate", r.error, flags.tol)]))
}

fn residue_theorem(scene: &Scene, q: usize, flags: &Flags) -> Result<Outcome, Error> {
    let problem = scene.residue_problem(flags.quad_tol)?;
    let r = residue_theorem_check(&problem, q, flags.tol)?;
    let locals: Vec<Value> = r
        .locals
        .iter()
        .map(|l| {
            json!({
                "chart": l.chart,
                "center": [l.center.re, l.center.im],
                "points": l.points.iter().map(|p| [p.re, p.im]).collect::<Vec<_>>(),
                "value": integral_value(&l.value),
                "nearest": l.nearest,
                "residual": l.residual,
            })
        })
        .collect();
    let sum = r.local_sum();
    let results = json!({
        "q": q,
        "locals": locals,
        "local_sum": complex_value(sum),
        "global": integral_value(&r.global),
        "discrepancy": r.discrepancy,
    });
    let mut verdicts: Vec<Verdict> = r
        .locals
        .iter()
        .map(|l| Verdict::below(format!("local residue on chart {} at {} is an integer", l.chart, l.center), l.residual, INTEGER_TOLERANCE))
        .collect();
    verdicts.push(Verdict::below("global Chern number is an integer", nearest_integer_distance(r.global.value), flags.tol));
    verdicts.push(Verdict::below("|global − Σ local|", r.discrepancy, flags.tol));
    Ok((results, verdicts))
}

fn membership_value(r: &ObstructionReport) -> Value {
    match &r.membership {
        Membership::Feasible { certificate } => {
            let cert: serde_json::Map<String, Value> = certificate
                .iter()
                .map(|(a, c)| (a.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(","), Value::String(c.to_string())))
                .collect();
            json!({
                "n": r.n,
                "status": "FEASIBLE",
                "certificate": cert,
                "certificate_residual_zero": r.residual.as_ref().is_some_and(|s| s.is_zero()),
            })
        }
        Membership::Infeasible { degree } => json!({ "n": r.n, "status": "INFEASIBLE", "obstruction_degree": degree }),
    }
}

fn bloom_herrera(max_degree: usize) -> Result<Outcome, Error> {
    if max_degree < 1 {
        return Err(Error::Argument("--max-degree must be positive".into()));
    }
    let main = bloom_herrera_certificate(max_degree)?;
    let runs = sweep(&cusp_form(), &cusp_map(), 1..=max_degree)?;
    let first_infeasible = runs.iter().find(|r| !r.membership.is_feasible()).map(|r| r.n);
    let monotone = runs.windows(2).all(|w| w[0].membership.is_feasible() || !w[1].membership.is_feasible());
    let exact = runs
        .iter()
        .filter_map(|r| r.residual.as_ref())
        .all(|s| s.is_zero());
    let found = main.obstruction_degree();
    let results = json!({
        "form": "z1 dz2",
        "map": "z -> (z^5, z^6 + z^7)",
        "max_degree": max_degree,
        "primitive": main.h.to_string(),
        "status": if found.is_some() { "INFEASIBLE" } else { "FEASIBLE" },
        "obstruction_degree": found,
        "sweep": runs.iter().map(membership_value).collect::<Vec<_>>(),
        "sweep_first_infeasible": first_infeasible,
        "conclusion": match found {
            Some(_) => "obstruction found: the primitive is not a truncated power series in z^5 and z^6 + z^7, so the extendable class of z1 dz2 is nonzero",
            None => "no obstruction up to this degree; the membership condition is only necessary, so nothing is concluded",
        },
    });
    let verdicts = vec![
        Verdict::holds("obstruction found", found.is_some()),
        Verdict::holds("sweep confirms the obstruction degree", found.is_some() && found == first_infeasible),
        Verdict::holds("feasibility is monotone in the truncation degree", monotone),
        Verdict::holds("feasible certificates reproduce h exactly", exact),
    ];
    Ok((results, verdicts))
}

fn selfcheck(scene: &Scene, path: Option<&Path>, flags: &Flags) -> Result<Outcome, Error> {
    if scene.file.expected.is_empty() {
        return Err(Error::Missing(format!("scene {:?} has no expected block", scene.file.name)));
    }
    let mut rows = Vec::new();
    let mut verdicts = Vec::new();
    for e in &scene.file.expected {
        let mut argv = vec![
            "extcw".to_string(),
            format!("--tol={:e}", flags.tol),
            format!("--quad-tol={:e}", flags.quad_tol),
            format!("--seed={}", flags.seed),
        ];
        argv.extend(e.args.iter().cloned());
        let sub = Cli::try_parse_from(&argv).map_err(|err| Error::Argument(format!("expected block {:?}: {err}", e.args)))?;
        let report = run_with_scene(&sub, Some(scene), path)?;
        let got = report.lookup(&e.path);
        let pass = got.is_some_and(|v| (v - e.value).abs() <= e.tol);
        let label = format!("{} → {}", e.args.join(" "), e.path);
        verdicts.push(Verdict {
            name: format!("{label} = {} ± {:e}", e.value, e.tol),
            value: got,
            limit: None,
            pass,
        });
        rows.push(json!({ "args": e.args, "path": e.path, "expected": e.value, "tol": e.tol, "value": got, "pass": pass }));
    }
    Ok((json!({ "checks": rows }), verdicts))
}
