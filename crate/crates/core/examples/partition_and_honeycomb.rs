//! A two-set covering of the plane, its partition of unity and a honeycomb
//! system adapted to it.

use extcw::checks::{planar_cech_setup, PLANAR_DISK_CENTER};
use extcw::geometry::{honeycomb_from_marks, BumpProfile};

fn main() -> Result<(), extcw::Error> {
    for profile in [BumpProfile::Quadratic, BumpProfile::Quartic] {
        let (atlas, cov, pou) = planar_cech_setup(profile)?;
        let disk = &cov.disks[0];
        println!("{profile:?}: disk at {:?}, r_in {}, r_out {}", disk.center, disk.r_in, disk.r_out);
        let (rho0, rho1) = (pou.rho(0, 0), pou.rho(0, 1));
        for r in [0.0, 0.3, 0.6, 0.9, 1.2, 1.5] {
            let z = [PLANAR_DISK_CENTER + r];
            let (a, b) = (rho0.eval(&z, &[])?, rho1.eval(&z, &[])?);
            println!("  |z − p| = {r:.1}: ρ₀ = {:.4}, ρ₁ = {:.4}, sum {:.1}", a.re, b.re, (a + b).re);
        }
        let h = honeycomb_from_marks(&atlas, &cov, &[(0, PLANAR_DISK_CENTER)], 0.7)?;
        for probe in [0.0, 0.5, 1.0] {
            let p = PLANAR_DISK_CENTER + probe;
            println!("  cell of {p}: {}", h.cell_of(&atlas, 0, p));
        }
        println!("  interface sign {}", h.interface_sign());
    }
    Ok(())
}
