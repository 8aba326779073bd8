//! Bakry-Émery eigenvalues of a weighted smoothed cone and the automatic decay profile.

use weighted_sobolev::manifold::{admissibility_check, required_envelope, Density, ModelManifold, Warp};
use weighted_sobolev::volume::geometric_radii;

fn main() -> weighted_sobolev::error::Result<()> {
    let m = ModelManifold::new(
        3,
        Warp::SmoothedCone { c: 0.5, r_s: 1.0 },
        Density::LogPoly { beta: 1.0, r_w: 1.0 },
    )?;
    let alpha = 1.0;
    println!("{:>10} {:>14} {:>14} {:>14}", "r", "radial", "tangential", "λ_min");
    for r in geometric_radii(0.01, 100.0, 9) {
        let be = m.be_ricci(alpha, r)?;
        println!(
            "{r:>10.4} {:>14.6e} {:>14.6e} {:>14.6e}",
            be.radial_eigen,
            be.tangential_eigen,
            m.lambda_min(alpha, r)?
        );
    }

    let env = required_envelope(&m, alpha, 1e4, 1500)?;
    let moments = env.moments(1e-10)?;
    println!("\nenvelope: b0 = {:.6}, b1 = {:.6}", moments.b0, moments.b1);
    let rep = admissibility_check(&m, alpha, &env, 1e4, 1e-8)?;
    println!("admissibility: {} {:?}", rep.verdict, rep.constants);
    Ok(())
}
