//! Check the two generation conditions for a group cocycle over the Chacon
//! towers, with integer certificates.
//!
//! cargo run --example cocycle_conditions -- specs/zero_z2.json

use chacon_lab::cocycle::{check_conditions, sufficient_scan_depth, CocycleSpec, SpacerSlot};
use chacon_lab::group::FinAbGroup;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = match std::env::args().nth(1) {
        Some(path) => CocycleSpec::load(path.as_ref())?,
        None => {
            // indicator of the middle spacer added at stage 2, valued in Z/2
            let g = FinAbGroup::cyclic(2);
            let one = g.elem(&[1])?;
            CocycleSpec::indicator(g, one, 2, SpacerSlot::Middle)?
        }
    };

    println!("{:>3} {:>7} {:>8} {:>8} {:>8}", "n", "h_n", "f_n", "g_n1", "g_n2");
    for row in spec.derived_sequence(6) {
        println!(
            "{:>3} {:>7} {:>8?} {:>8?} {:>8?}",
            row.n,
            row.height,
            row.f.coords(),
            row.g1.coords(),
            row.g2.coords()
        );
    }

    let n_scan = sufficient_scan_depth(&spec);
    let report = check_conditions(&spec, n_scan, spec.zero_beyond() + 1)?;
    println!("condition (i) holds: {}", report.condition_i.holds);
    for r in &report.condition_ii {
        println!(
            "condition (ii) at n = {}: holds {}, certificate {:?}",
            r.n,
            r.holds && r.verified,
            r.certificate.as_ref().map(|c| c.iter().map(|x| x.to_string()).collect::<Vec<_>>())
        );
    }
    Ok(())
}
