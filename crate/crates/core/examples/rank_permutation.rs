//! Push a Poisson configuration through the Chacon map, read the rank
//! permutation off the atom ids, and find the first time the lowest ranks
//! come back.

use chacon_lab::chacon::ChaconSystem;
use chacon_lab::rng::RngSpec;
use chacon_lab::suspension::{psi_iter, push_forward, return_time_n_k, sample_poisson, CensorReport};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let system = ChaconSystem::build(5)?;
    let config = sample_poisson(system.covered(), &mut RngSpec::new(3, 0).rng());
    println!("{} atoms on [0, {})", config.len(), system.covered().hi());

    match push_forward(&system, &config) {
        Ok(step) => println!("one step: {:?}", Vec::<usize>::from(step.perm)),
        Err(c) => println!("censored: {c}"),
    }
    if let Ok(five) = psi_iter(&system, &config, 5) {
        println!("five steps: {:?}", Vec::<usize>::from(five.perm));
    }

    for k in [1, 2, 3] {
        let mut report = CensorReport::default();
        let mut times = Vec::new();
        for i in 0..400 {
            let c = sample_poisson(system.covered(), &mut RngSpec::new(4, i).rng());
            let r = return_time_n_k(&system, &c, k, 10_000);
            if let Ok(r) = &r {
                times.push(r.n);
            }
            report.record(&r);
        }
        times.sort_unstable();
        println!(
            "k = {k}: censored {:.1}%, median return {}, max {}",
            100.0 * report.censored_fraction(),
            times.get(times.len() / 2).copied().unwrap_or(0),
            times.last().copied().unwrap_or(0)
        );
    }
    Ok(())
}
