//! Building, differentiating and evaluating differential forms.

use extcw::fields::{parse_expr, DVar};
use extcw::forms::{Form, Tangent};
use num_complex::Complex64;

fn main() -> Result<(), extcw::Error> {
    // ω = z̄₁ z₂ dz₁ on a two-dimensional chart
    let omega = Form::parse("conj(z1)*z2*dz1", 0, 2)?;
    let d_omega = omega.d();
    println!("ω   = {omega}");
    println!("dω  = {d_omega}");
    println!("ddω = {}", if d_omega.d().is_zero() { "0".to_string() } else { d_omega.d().to_string() });

    let eta = Form::parse("dzbar2", 0, 2)?;
    let wedge = omega.wedge(&eta)?;
    println!("ω∧dz̄₂ = {wedge}");

    let z = [Complex64::new(0.5, -0.25), Complex64::new(1.0, 2.0)];
    let u = Tangent::real(&[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
    let v = Tangent::real(&[Complex64::new(0.0, 0.0), Complex64::new(0.0, 1.0)]);
    println!("dω(u, v) at {z:?} = {}", d_omega.evaluate(&z, &[], &[u, v])?);

    let f = parse_expr("z1^2*conj(z1)")?;
    println!("∂f/∂z₁ = {}, ∂f/∂z̄₁ = {}", f.diff(DVar::Z(0)), f.diff(DVar::Zbar(0)));
    Ok(())
}
