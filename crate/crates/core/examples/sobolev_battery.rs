//! Sobolev inequality on a grid of domains and radial functions, with both verdicts.

use weighted_sobolev::manifold::{Density, ModelManifold, Warp};
use weighted_sobolev::setup::{certify, ProfileChoice, Tolerances};
use weighted_sobolev::sobolev::{verify_sobolev_with_avr, RadialDomain, RadialFunction};
use weighted_sobolev::volume::avr;

fn main() -> weighted_sobolev::error::Result<()> {
    let m = ModelManifold::new(
        3,
        Warp::SmoothedCone { c: 0.5, r_s: 1.0 },
        Density::LogPoly { beta: 1.0, r_w: 1.0 },
    )?;
    let setup = certify(&m, 1.0, &ProfileChoice::Auto, 1e4, Tolerances::default())?;
    let est = avr(&setup, 1e4)?;
    println!(
        "V_alpha in [{:.6}, {:.6}] (estimate, upper)\n",
        est.estimate, est.upper_bound
    );

    let domains = [
        RadialDomain::Ball { radius: 1.0 },
        RadialDomain::Ball { radius: 3.0 },
        RadialDomain::Annulus { inner: 0.5, outer: 2.0 },
    ];
    let functions = [
        RadialFunction::Constant { c: 1.0 },
        RadialFunction::PowerBump { c: 1.0, k: 2.0 },
        RadialFunction::Poly {
            c0: 2.0,
            c1: -0.3,
            c2: 0.05,
        },
    ];
    println!(
        "{:<16} {:<18} {:>12} {:>12} {:>8} {:>8}",
        "domain", "f", "lhs", "rhs", "sound", "sharp"
    );
    for d in &domains {
        for f in &functions {
            let rep = verify_sobolev_with_avr(&setup, d, f, &est)?;
            println!(
                "{:<16} {:<18} {:>12.6} {:>12.6} {:>8} {:>8}",
                d.label(),
                f.label(),
                rep.lhs_total(),
                rep.rhs,
                rep.verdict.to_string(),
                rep.sharp_verdict.to_string()
            );
        }
    }
    Ok(())
}
