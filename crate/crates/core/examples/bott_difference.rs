//! The Bott difference form of two connections and the transgression
//! identity d Δ = c(θ₁) − c(θ₀).

use extcw::bundles::FormMatrix;
use extcw::checks::bott_suite;
use extcw::chernweil::{bott_difference, chern_form};
use extcw::forms::{Form, Tangent};
use extcw::DEFAULT_SEED;
use num_complex::Complex64;

fn main() -> Result<(), extcw::Error> {
    let theta0 = FormMatrix::from_rows(vec![vec![Form::parse("conj(z1)*dz1", 0, 2)?]])?;
    let theta1 = FormMatrix::from_rows(vec![vec![Form::parse("z2*conj(z2)*dz2 + conj(z1)*z1*dz1", 0, 2)?]])?;
    let delta = bott_difference(&theta0, &theta1, 1)?;
    println!("Δ = {}", delta.form());
    let lhs = delta.form().d();
    let rhs = chern_form(&theta1, 1)?.try_sub(&chern_form(&theta0, 1)?)?;
    let z = [Complex64::new(0.3, 0.1), Complex64::new(-0.2, 0.4)];
    let basis = |k: usize, imag: bool| {
        let mut v = [Complex64::new(0.0, 0.0); 2];
        v[k] = if imag { Complex64::new(0.0, 1.0) } else { Complex64::new(1.0, 0.0) };
        Tangent::real(&v)
    };
    let (u, v) = (basis(0, false), basis(0, true));
    let (a, b) = (lhs.evaluate(&z, &[], &[u.clone(), v.clone()])?, rhs.evaluate(&z, &[], &[u, v])?);
    println!("dΔ(∂x, ∂y) = {a:.12}\nc₁ difference = {b:.12}");

    let suite = bott_suite(5, 50, DEFAULT_SEED, 1e-7)?;
    for case in &suite.cases {
        println!("pair {} rank {} q {}: residual {:.2e}, antisymmetric {}", case.pair, case.rank, case.q, case.identity_residual, case.antisymmetric);
    }
    Ok(())
}
