//! Čech–de Rham cochains on a two-set covering: the differential, the
//! collating map and honeycomb integration.

use extcw::cechderham::{integrate_chart_forms, CechCochain, ChartForms};
use extcw::checks::{cech_suite, planar_cech_setup, planar_square, PLANAR_DISK_CENTER};
use extcw::forms::Form;
use extcw::geometry::{honeycomb_from_marks, BumpProfile};
use extcw::DEFAULT_SEED;

fn main() -> Result<(), extcw::Error> {
    let (atlas, cov, pou) = planar_cech_setup(BumpProfile::Quadratic)?;
    let global: ChartForms = [(0, Form::parse("(1 + z1*conj(z1))*i/2*dz1^dzbar1", 0, 1)?)].into_iter().collect();
    let restricted = CechCochain::restrict_global(&global, &cov)?;
    // perturb by an exact cochain D(β): the class and its integrals do not move
    let beta = CechCochain::new(
        1,
        &cov,
        [(0, Form::parse("z1*conj(z1)*dz1", 0, 1)?)].into_iter().collect(),
        vec![Form::parse("conj(z1)*dzbar1", 0, 1)?],
        vec![Form::parse("z1^2*conj(z1)", 0, 1)?],
    )?;
    let cochain = {
        let d = beta.apply_d()?;
        CechCochain::new(
            2,
            &cov,
            [(0, restricted.outer[&0].try_add(&d.outer[&0])?)].into_iter().collect(),
            vec![restricted.disks[0].try_add(&d.disks[0])?],
            vec![restricted.overlap[0].try_add(&d.overlap[0])?],
        )?
    };
    let square = planar_square();
    let direct = integrate_chart_forms(&square, &cochain.collate(&atlas, &cov, &pou)?, 1e-10)?;
    println!("∫ φ(c) over the square = {:.10}", direct.value);
    for radius in [0.5, 0.7, 0.9] {
        let h = honeycomb_from_marks(&atlas, &cov, &[(0, PLANAR_DISK_CENTER)], radius)?;
        println!("honeycomb radius {radius}: {:.10}", cochain.honeycomb_integrate(&square, &h, 1e-10)?.value);
    }

    let suite = cech_suite(DEFAULT_SEED, 1e-9)?;
    for check in &suite.checks {
        println!("{}: {} cases, worst {:.1e}, {}", check.name, check.cases, check.worst, if check.pass { "pass" } else { "FAIL" });
    }
    Ok(())
}
