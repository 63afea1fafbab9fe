//! Sample unit-intensity Poisson configurations with exact positions,
//! superpose two of them and split off the first atoms.

use chacon_lab::rational::{Interval, Rational};
use chacon_lab::rng::RngSpec;
use chacon_lab::suspension::{distinguish_k, recombine, sample_poisson, superpose};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let window = Interval::new(Rational::ZERO, Rational::integer(10)).unwrap();
    let a = sample_poisson(window, &mut RngSpec::new(7, 0).rng());
    let b = sample_poisson(window, &mut RngSpec::new(7, 1).rng());
    println!("a has {} atoms, b has {}", a.len(), b.len());
    for atom in a.atoms().iter().take(3) {
        println!("  id {} at {:.6} (exactly {})", atom.id, atom.pos.to_f64(), atom.pos);
    }

    let both = superpose(&a, &b)?;
    let from_b = both.provenance.iter().filter(|p| p.part == 1).count();
    println!("superposition: {} atoms, {} of them from b", both.config.len(), from_b);

    let split = distinguish_k(&a, 2)?;
    println!(
        "first two atoms {:.4}, {:.4}; remainder has {} atoms",
        split.points[0].pos.to_f64(),
        split.points[1].pos.to_f64(),
        split.remainder.len()
    );
    assert_eq!(recombine(&split)?, a);

    let mean_t1 = (0..5000)
        .filter_map(|i| sample_poisson(window, &mut RngSpec::new(8, i).rng()).t(1))
        .map(|t| t.to_f64())
        .sum::<f64>()
        / 5000.0;
    println!("mean first atom over 5000 draws: {mean_t1:.4} (Exp(1) mean is 1)");
    Ok(())
}
