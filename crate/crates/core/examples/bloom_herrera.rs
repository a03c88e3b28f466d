//! The form z₁ dz₂ restricted to the cusp t ↦ (t⁵, t⁶ + t⁷) is closed but
//! has no holomorphic primitive coming from the ambient space. Exact
//! elimination over the rationals finds the first truncation degree at
//! which the primitive leaves the subalgebra generated by the map.

use extcw::extendability::{bloom_herrera_certificate, Membership};

fn main() -> Result<(), extcw::Error> {
    for n in 10..=14 {
        let report = bloom_herrera_certificate(n)?;
        match &report.membership {
            Membership::Feasible { certificate } => {
                let terms: Vec<String> = certificate.iter().map(|(e, c)| format!("({c})·x^{}y^{}", e[0], e[1])).collect();
                println!("n = {n}: h = {} lies in the subalgebra, h = {}", report.h, if terms.is_empty() { "0".into() } else { terms.join(" + ") });
            }
            Membership::Infeasible { degree } => {
                println!("n = {n}: h = {} is not a pullback; obstruction in degree {degree}", report.h);
            }
        }
    }
    Ok(())
}
