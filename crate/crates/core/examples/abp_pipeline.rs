//! The ABP pipeline on one ball: normalize f, solve the Neumann problem, check the
//! Laplacian bound on U = {|u'| < 1}, push the ball through the radial transport.

use weighted_sobolev::abp::{
    constant_chain_check, laplacian_bound_check, normalize_f, solve_neumann_radial, transport_diagnostics,
    transport_is_strict,
};
use weighted_sobolev::manifold::{Density, ModelManifold, Warp};
use weighted_sobolev::setup::{certify, ProfileChoice, Tolerances};
use weighted_sobolev::sobolev::{RadialDomain, RadialFunction};

fn main() -> weighted_sobolev::error::Result<()> {
    let m = ModelManifold::new(
        3,
        Warp::SmoothedCone { c: 0.5, r_s: 1.0 },
        Density::LogPoly { beta: 1.0, r_w: 1.0 },
    )?;
    let setup = certify(&m, 1.0, &ProfileChoice::Auto, 1e3, Tolerances::default())?;
    let ball = RadialDomain::Ball { radius: 1.5 };
    let f = RadialFunction::PowerBump { c: 1.0, k: 1.0 };

    let kappa = normalize_f(&setup, &ball, &f)?;
    let sol = solve_neumann_radial(&setup, &ball, &f.scaled(kappa))?;
    println!("κ = {kappa:.6}");
    println!(
        "u'(R) - 1 = {:.2e}, first-integral residual {:.2e}",
        sol.flux_residual, sol.first_integral_residual
    );
    for i in (0..sol.u.len()).step_by(80) {
        println!(
            "  r = {:.3}: u = {:.6}, u' = {:.6}, u'' = {:.6}",
            sol.grid()[i],
            sol.u.values()[i],
            sol.du()[i],
            sol.ddu[i]
        );
    }

    let lap = laplacian_bound_check(&setup, &sol);
    println!("Laplacian bound on U: {} (slack {:.3e})", lap.verdict, lap.worst_slack);

    let strict = transport_is_strict(&setup, &sol.f);
    for r in [0.5, 1.0, 2.0] {
        let d = transport_diagnostics(&setup, &sol, r)?;
        let rep = d.report(1e-8, strict);
        println!(
            "transport r = {r}: {} (relative slack {:.3e}), image volume {:.6}",
            rep.verdict,
            rep.worst_slack,
            d.image_volume(&setup)
        );
    }
    let chain = constant_chain_check(&setup, &sol, 1.0, 10)?;
    println!("constant chain: {} (slack {:.3e})", chain.verdict, chain.worst_slack);
    Ok(())
}
