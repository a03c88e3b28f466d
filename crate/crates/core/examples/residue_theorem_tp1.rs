//! Residues of the vector field z ∂/∂z on the projective line: one at each
//! pole, summing to the Euler characteristic, compared with the integral of
//! the first Chern form of the tangent bundle.

use extcw::residues::residue_theorem_check;
use extcw::scene::{packaged, Scene};

fn main() -> Result<(), extcw::Error> {
    let scene = Scene::from_file(packaged::tp1_vector_field())?;
    let problem = scene.residue_problem(1e-9)?;
    let report = residue_theorem_check(&problem, 1, 1e-6)?;
    for local in &report.locals {
        println!(
            "chart {} cell at {}: residue {:.9} (nearest integer {}, zeros {:?})",
            local.chart, local.center, local.value.value, local.nearest, local.points
        );
    }
    println!("sum of residues  {:.9}", report.local_sum());
    println!("∫ c₁(Tℙ¹)        {:.9}", report.global.value);
    println!("discrepancy      {:.2e}", report.discrepancy);
    Ok(())
}
