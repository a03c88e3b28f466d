//! Local indices of holomorphic maps from the Bochner–Martinelli kernel.

use extcw::fields::parse_expr;
use extcw::geometry::sphere_chain;
use extcw::residues::bm_index;
use num_complex::Complex64;

fn main() -> Result<(), extcw::Error> {
    let origin = Complex64::new(0.0, 0.0);
    for map in ["z1", "z1^2", "z1^3", "z1*(z1 - 0.3)", "exp(z1) - 1"] {
        let f = parse_expr(map)?;
        let circle = sphere_chain(&[origin], 1.0, 16)?;
        let r = bm_index(&[f], &circle, 1e-10)?;
        println!("{map:>14} on |z| = 1: index {} (integral {:.10})", r.index, r.integral.value);
    }
    // in two variables the kernel lives on the three-sphere
    for (a, b) in [("z1", "z2"), ("z1", "z2^2"), ("z1^2", "z2^3")] {
        let sphere = sphere_chain(&[origin, origin], 1.0, 2)?;
        let r = bm_index(&[parse_expr(a)?, parse_expr(b)?], &sphere, 1e-8)?;
        println!("({a}, {b}) on S³: index {} (residual {:.1e})", r.index, r.residual);
    }
    Ok(())
}
