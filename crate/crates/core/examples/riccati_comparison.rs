//! Riccati comparison: a log-derivative g with g' + g² ≤ G stays below ψ'/ψ.
//! Also the two bounds on the fundamental pair (ψ₁, ψ₂) used by the transport estimate.

use weighted_sobolev::func::ScalarFn;
use weighted_sobolev::odecmp::{
    log_derivative, psi1_growth_check, psi_ratio_bound_check, riccati_compare, solve_psi_pair,
};

fn main() -> weighted_sobolev::error::Result<()> {
    let big_g = ScalarFn::new(|s| 1.0 / (1.0 + s * s));
    let small = ScalarFn::new(|s| 0.5 / (1.0 + s * s));
    let r = 6.0;

    // g = ψ̃'/ψ̃ for ψ̃'' = G̃ψ̃ satisfies g' + g² = G̃ ≤ G
    let pair = solve_psi_pair(&small, r, 1e-12)?;
    let g = log_derivative(&pair.psi1, &small)?;
    let rep = riccati_compare(&g, &big_g, 1.0, r, 1e-8)?;
    println!(
        "riccati: {} max(g - ψ'/ψ) = {:.3e}",
        rep.verdict, rep.constants["max_g_minus_ratio"]
    );

    let pair = solve_psi_pair(&big_g, r, 1e-12)?;
    println!("wronskian drift {:.2e}", pair.wronskian_drift());
    // ∫ 1/(1+s²) = π/2 and ∫ s/(1+s²) diverges, so only the ratio bound applies globally
    let total = std::f64::consts::FRAC_PI_2;
    let rep = psi_ratio_bound_check(&big_g, total, r, 1e-9)?;
    println!(
        "ψ₂/ψ₁({r}) = {:.6} ≤ {:.6}: {}",
        rep.constants["ratio"], rep.constants["bound"], rep.verdict
    );

    let bump = ScalarFn::constant(1.0).truncated(1.0); // ∫τΛ = 1/2
    let rep = psi1_growth_check(&bump, 10.0, 0.5, 1e-9)?;
    println!(
        "ψ₁(t) ≤ t e^(1/2) on [0, 10]: {} (slack {:.3e})",
        rep.verdict, rep.worst_slack
    );
    Ok(())
}
