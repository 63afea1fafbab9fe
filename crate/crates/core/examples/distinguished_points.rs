//! Split off k distinguished points, run the induced map on the ordered
//! set, and compare with the k-th rank return of the pushforward.

use chacon_lab::chacon::ChaconSystem;
use chacon_lab::rng::RngSpec;
use chacon_lab::suspension::{distinguish_k, induced_advance, recombine, return_time_n_k, sample_poisson};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let system = ChaconSystem::build(5)?;
    let k = 2;
    let (mut agree, mut censored) = (0, 0);
    for i in 0..300 {
        let config = sample_poisson(system.covered(), &mut RngSpec::new(11, i).rng());
        let Ok(split) = distinguish_k(&config, k) else { continue };
        match (induced_advance(&system, &split, 10_000), return_time_n_k(&system, &config, k, 10_000)) {
            (Ok((m, returned)), Ok(direct)) => {
                assert_eq!(m, direct.n);
                assert_eq!(recombine(&returned)?, direct.config);
                agree += 1;
                if agree == 1 {
                    println!("first sample: M = N = {m}");
                }
            }
            _ => censored += 1,
        }
    }
    println!("{agree} samples agree exactly, {censored} censored");
    Ok(())
}
