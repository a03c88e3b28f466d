//! Stokes' theorem on planar and curved triangles, then the seeded suite.

use extcw::checks::stokes_suite;
use extcw::fields::parse_expr;
use extcw::forms::Form;
use extcw::mesh::{stokes_check, Chain, Simplex, VertexKey};
use extcw::DEFAULT_SEED;
use num_complex::Complex64;

fn main() -> Result<(), extcw::Error> {
    let c = Complex64::new;
    let omega = Form::parse("conj(z1)^2*dz1 + z1*conj(z1)*dzbar1", 0, 1)?;
    let flat = Chain::from_simplices([Simplex::planar(0, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0)])]);
    let r = stokes_check(&omega, &flat, 1e-10)?;
    println!("planar: ∫dω = {:.12}, ∫∂ω = {:.12}", r.interior.value, r.boundary.value);

    // a triangle with one side bent: x(s, t) = s + i t + 0.3 s t
    let bent = parse_expr("t1 + i*t2 + 0.3*t1*t2")?;
    let keys = [c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0)].map(|p| VertexKey::of_point(0, &[p]));
    let curved = Chain::from_simplices([Simplex::curved(0, 2, vec![bent], keys.to_vec())?]);
    let r = stokes_check(&omega, &curved, 1e-10)?;
    println!("curved: ∫dω = {:.12}, ∫∂ω = {:.12}", r.interior.value, r.boundary.value);

    let suite = stokes_suite(30, DEFAULT_SEED, 1e-8)?;
    println!("random suite: {}/{} pass, worst difference {:.2e}", suite.passed, suite.trials, suite.worst);
    Ok(())
}
