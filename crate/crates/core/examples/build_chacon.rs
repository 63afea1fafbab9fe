//! Build the first towers of the infinite Chacon transformation, follow an
//! orbit and export the system as JSON.
//!
//! cargo run --example build_chacon -- 4

use chacon_lab::chacon::{ChaconSystem, SystemExport};
use chacon_lab::rational::Rational;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n_max: u32 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(4);
    let system = ChaconSystem::build(n_max)?;

    for tower in system.towers() {
        println!(
            "tower {}: height {:>6}, level width {:>6}, mass {}",
            tower.order(),
            tower.height(),
            tower.level_width(),
            tower.mass()
        );
    }

    let orbit = system.orbit(Rational::ZERO, 7)?;
    println!("orbit of 0: {}", orbit.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" -> "));

    let x = Rational::new(1, 2);
    let (level, offset) = system.locate(x, 2)?;
    println!("{x} sits on level {level} of tower 2 at offset {offset}");

    let pieces = system.translation_pieces();
    println!("T is a translation on {} maximal intervals", pieces.len());

    if n_max <= 2 {
        println!("{}", serde_json::to_string_pretty(&SystemExport::from(&system))?);
    }
    Ok(())
}
