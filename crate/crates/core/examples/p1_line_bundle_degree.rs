//! Degrees of the line bundles O(d) on the projective line as integrals of
//! the first Chern form of a glued connection.

use std::collections::BTreeMap;

use extcw::bundles::{glue_by_partition, Connection};
use extcw::chernweil::chern_forms;
use extcw::geometry::{build_partition_of_unity, BumpProfile, CoverDisk, Covering};
use extcw::models::{line_bundle, projective_line, projective_line_triangulation};
use num_complex::Complex64;

fn main() -> Result<(), extcw::Error> {
    let atlas = projective_line();
    let triangulation = projective_line_triangulation()?;
    let disk = CoverDisk { chart: 0, center: vec![Complex64::new(0.0, 0.0)], r_in: 0.2, r_out: 0.6 };
    let cov = Covering::new(&atlas, vec![disk], 1, vec![])?;
    let pou = build_partition_of_unity(&atlas, &cov, BumpProfile::Quadratic)?;
    for d in -2..=3 {
        let bundle = line_bundle(&atlas, d)?;
        // flat near z = 0 in one frame and flat near z = ∞ in the other
        let near_zero = Connection::chart_trivial(&atlas, &bundle, 0)?;
        let near_infinity = Connection::chart_trivial(&atlas, &bundle, 1)?;
        let nabla = glue_by_partition(&atlas, &bundle, &cov, &pou, &near_infinity, &[near_zero])?;
        let c1: BTreeMap<_, _> = chern_forms(&nabla, 1)?;
        let degree = triangulation.integrate_fundamental_class(&|chart| c1.get(&chart).cloned(), 1e-9)?;
        println!("deg O({d:>2}) = {:>+.9} (quadrature error {:.1e})", degree.value.re, degree.error);
    }
    Ok(())
}
