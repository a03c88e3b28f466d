//! Camacho–Sad indices of the invariant curve {h = 0} for foliations
//! generated by a(h, y) h ∂/∂h + b(h, y) ∂/∂y.

use extcw::fields::parse_expr;
use extcw::geometry::link_of_point;
use extcw::residues::{camacho_sad, FoliationGerm};
use num_complex::Complex64;

fn main() -> Result<(), extcw::Error> {
    let origin = Complex64::new(0.0, 0.0);
    for (a, b) in [("3", "2*z2"), ("1", "z2*(1 + z2)"), ("z1 + 2", "z2 + z2^2"), ("1", "1 + z2")] {
        let germ = FoliationGerm::new(parse_expr(a)?, parse_expr(b)?)?;
        let (ra, rb) = germ.restricted();
        print!("a = {a}, b = {b}: a/b on the leaf in y = ({ra})/({rb}); index");
        for radius in [0.3, 0.5, 0.7] {
            let link = link_of_point(origin, radius, 16)?;
            print!(" {:.10}", camacho_sad(&germ, &link, 1e-12)?.value.re);
        }
        println!();
    }
    Ok(())
}
