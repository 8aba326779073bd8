//! Isoperimetric form of the inequality, alongside the f ≡ 1 Sobolev check it must agree with.

use weighted_sobolev::manifold::{Density, ModelManifold, Warp};
use weighted_sobolev::setup::{certify, ProfileChoice, Tolerances};
use weighted_sobolev::sobolev::{verify_isoperimetric_with_avr, verify_sobolev_with_avr, RadialDomain, RadialFunction};
use weighted_sobolev::volume::avr;

fn main() -> weighted_sobolev::error::Result<()> {
    let m = ModelManifold::new(
        4,
        Warp::SmoothedCone { c: 0.8, r_s: 2.0 },
        Density::LogPoly { beta: 0.5, r_w: 1.0 },
    )?;
    let setup = certify(&m, 0.5, &ProfileChoice::Auto, 1e4, Tolerances::default())?;
    let est = avr(&setup, 1e4)?;
    for radius in [0.5, 1.0, 2.0, 4.0] {
        let d = RadialDomain::Ball { radius };
        let iso = verify_isoperimetric_with_avr(&setup, &d, &est)?;
        let sob = verify_sobolev_with_avr(&setup, &d, &RadialFunction::Constant { c: 1.0 }, &est)?;
        println!(
            "{:<10} |∂Ω|_w = {:>12.6}  bound = {:>12.6}  {}  (Sobolev with f ≡ 1: {})",
            d.label(),
            iso.lhs_boundary,
            iso.rhs,
            iso.verdict,
            sob.verdict
        );
    }
    Ok(())
}
