//! Run reduced versions of the three verification suites from code.
//!
//! The command-line tool runs them at full size: `chacon-lab verify all`.

use chacon_lab::cocycle::CocycleSpec;
use chacon_lab::verify::{
    verify_joining, verify_poisson, verify_suspension, JoiningParams, PoissonParams, SuspensionParams, BUNDLED_SPEC,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let poisson = verify_poisson(&PoissonParams::default())?;
    for t in poisson.tests() {
        println!("{:<36} p = {:.3e} {}", t.name, t.p_value, if t.passed { "pass" } else { "FAIL" });
    }

    let spec = CocycleSpec::from_json(BUNDLED_SPEC)?;
    let suspension = verify_suspension(
        &SuspensionParams { samples: 200, min_uncensored: 100, ..SuspensionParams::default() },
        &spec,
    )?;
    for c in &suspension.conjugacy {
        println!(
            "k = {}: {} exact conjugacy checks, {} failures, censored {:.1}%",
            c.k,
            c.conjugacy.checked,
            c.conjugacy.failures,
            100.0 * c.censored_fraction
        );
    }

    let joining = verify_joining(&JoiningParams { samples: 1000, ..JoiningParams::default() })?;
    println!(
        "joining: dependence p = {:.2e}, copied fraction {:.3} (expected {:.3})",
        joining.dependence.p_value, joining.copied_fraction.estimate, joining.copied_fraction.expected
    );
    Ok(())
}
