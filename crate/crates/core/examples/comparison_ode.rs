//! The comparison function h'' = λh against closed forms and its a-priori bounds.

use weighted_sobolev::func::ScalarFn;
use weighted_sobolev::odecmp::{solve_h, solve_h_with};
use weighted_sobolev::profiles::DecayProfile;

fn main() -> weighted_sobolev::error::Result<()> {
    // λ ≡ 1 gives h = sinh t (not admissible on [0, ∞), fine on a window)
    let sol = solve_h_with(&ScalarFn::constant(1.0), None, 5.0, 1e-11, &[1.0, 2.0, 3.0, 4.0, 5.0])?;
    println!("λ ≡ 1:");
    for t in [1.0, 2.0, 3.0, 4.0, 5.0] {
        let (h, _) = sol.eval(t);
        println!("  t = {t}: h = {h:.12}, sinh t = {:.12}", f64::sinh(t));
    }

    let p = DecayProfile::exponential(0.5, 1.0)?;
    let b0 = p.moments(1e-10)?.b0;
    let sol = solve_h(&p, 50.0, 1e-11)?;
    let (t, h, dh) = sol.h.last();
    println!("\nλ = 0.5 e^-s, b0 = {b0:.6}:");
    println!("  h({t}) = {h:.6} in [{t}, {:.6}]", t * b0.exp());
    println!("  h'({t}) = {dh:.8} in [{:.6}, {:.6}]", 1.0 + b0, 1.0 + b0 * b0.exp());
    println!("  bounds report: {}", sol.bounds_report(1e-8).verdict);
    Ok(())
}
