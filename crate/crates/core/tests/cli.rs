use std::path::PathBuf;
use std::process::Command;

use extcw::cli::run_args;
use extcw::scene::{packaged, Scene};
use extcw::Error;

fn scene_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenes").join(name)
}

fn extcw(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_extcw")).args(args).output().expect("binary runs");
    (
        out.status.code().expect("exit code"),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn packaged_files_match_their_builders() {
    for (name, file) in packaged::all() {
        let on_disk = std::fs::read_to_string(scene_path(&name)).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(on_disk, packaged::render(&file), "{name} is stale; rerun the generate_scenes example");
    }
}

#[test]
fn every_packaged_scene_passes_its_expected_block() {
    for (name, _) in packaged::all() {
        let path = scene_path(&name);
        let (_, report) = run_args(["extcw", "--scene", path.to_str().unwrap(), "selfcheck"]).unwrap();
        assert!(report.pass, "{name}:\n{}", report.to_table());
    }
}

#[test]
fn p1_scene_has_two_charts_and_a_power_transition() {
    let scene = Scene::load(scene_path("p1_od.json")).unwrap();
    assert_eq!(scene.atlas.charts.len(), 2);
    let g = scene.bundle.as_ref().unwrap().transition(0, 1).unwrap();
    let at_two = g.get(0, 0).eval(&[num_complex::Complex64::new(2.0, 0.0)], &[]).unwrap();
    assert_eq!(at_two, num_complex::Complex64::new(8.0, 0.0));
}

#[test]
fn cocycle_violations_are_named_at_load() {
    let text = std::fs::read_to_string(scene_path("p1_od_1.json")).unwrap();
    let broken = text.replacen("\"z1^(-1)\"", "\"z1^(-1) + z1\"", 1);
    assert_ne!(text, broken);
    let dir = std::env::temp_dir().join(format!("extcw-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("broken.json");
    std::fs::write(&path, &broken).unwrap();
    let err = Scene::load(&path).unwrap_err();
    assert!(matches!(err, Error::Invariant(ref m) if m.contains("cocycle")), "{err}");
    let (code, _, stderr) = extcw(&["--scene", path.to_str().unwrap(), "chern"]);
    assert_eq!(code, 2);
    assert!(stderr.contains("cocycle"), "{stderr}");
}

#[test]
fn residue_theorem_without_triangulation_is_an_input_error() {
    let path = scene_path("linear_foliation.json");
    let (code, _, stderr) = extcw(&["--scene", path.to_str().unwrap(), "verify", "residue-theorem", "--q", "1"]);
    assert_eq!(code, 2);
    assert!(stderr.contains("triangulation required"), "{stderr}");
}

#[test]
fn exit_codes_follow_verdicts() {
    let path = scene_path("p1_od.json");
    let p = path.to_str().unwrap();
    let (code, stdout, _) = extcw(&["--scene", p, "chern", "--q", "1"]);
    assert_eq!(code, 0, "{stdout}");
    assert!(stdout.trim_end().ends_with("PASS"));
    // the quadrature cannot certify an error estimate this small
    let (code, stdout, _) = extcw(&["--scene", p, "--tol", "1e-30", "chern", "--q", "1"]);
    assert_eq!(code, 1, "{stdout}");
    let (code, _, _) = extcw(&["residue", "index", "--map", "conj(z1)"]);
    assert_eq!(code, 2);
    let (code, _, _) = extcw(&["no-such-command"]);
    assert_eq!(code, 2);
}

#[test]
fn json_reports_carry_schema_and_conventions() {
    let (code, stdout, _) = extcw(&["--json", "verify", "stokes", "--trials", "5"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["conventions"].as_str().unwrap(), extcw::report::conventions_hash());
    assert_eq!(v["results"]["passed"], 5);
    assert_eq!(v["flags"]["seed"], 0x5EED);
}

#[test]
fn camacho_sad_on_the_packaged_foliation() {
    let path = scene_path("linear_foliation.json");
    let (_, report) = run_args(["extcw", "--scene", path.to_str().unwrap(), "residue", "camacho-sad"]).unwrap();
    assert!((report.lookup("results.residue.re").unwrap() - 1.5).abs() < 1e-8);
}

#[test]
fn bott_difference_between_chart_connections() {
    let path = scene_path("p1_od_2.json");
    let (_, report) = run_args(["extcw", "--scene", path.to_str().unwrap(), "bott-diff", "--from", "trivial0", "--to", "trivial1"]).unwrap();
    assert!(report.pass, "{}", report.to_table());
    let err = run_args(["extcw", "--scene", path.to_str().unwrap(), "bott-diff", "--from", "nope", "--to", "nabla"]).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}
