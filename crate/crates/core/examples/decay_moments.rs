//! Moments of the built-in decay profiles, and what happens with a divergent one.

use weighted_sobolev::profiles::DecayProfile;

fn main() -> weighted_sobolev::error::Result<()> {
    let profiles = [
        DecayProfile::exponential(1.0, 1.0)?,
        DecayProfile::power_law(0.8, 1.0, 3.0)?,
        DecayProfile::linear_bump(0.5, 2.0)?,
        DecayProfile::sampled(vec![0.0, 1.0, 2.0, 5.0, 10.0], vec![1.0, 0.5, 0.2, 0.02, 0.002])?,
    ];
    println!(
        "{:<12} {:>14} {:>14} {:>10}",
        "family", "b0 = ∫sλ", "b1 = ∫λ", "err bound"
    );
    for p in &profiles {
        let m = p.moments(1e-10)?;
        println!(
            "{:<12} {:>14.10} {:>14.10} {:>10.1e}",
            p.family_name(),
            m.b0,
            m.b1,
            m.abs_error_bound
        );
    }

    // λ = (1+s)^-2 is integrable but s·λ is not
    let divergent = DecayProfile::power_law(1.0, 1.0, 2.0)?;
    match divergent.check_admissible() {
        Ok(()) => println!("unexpectedly admissible"),
        Err(e) => println!("power_law p=2: {e}"),
    }
    Ok(())
}
