//! Carry group-valued marks along the Poisson suspension of the Chacon map
//! and compute the accumulated cocycle on the first atoms at their return.

use chacon_lab::chacon::ChaconSystem;
use chacon_lab::cocycle::CocycleSpec;
use chacon_lab::group::GroupElem;
use chacon_lab::rng::RngSpec;
use chacon_lab::suspension::{phi_k_vector, sample_poisson, skew_apply_group, MarkedConfig};
use chacon_lab::verify::BUNDLED_SPEC;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let system = ChaconSystem::build(5)?;
    let spec = CocycleSpec::from_json(BUNDLED_SPEC)?;
    let g = spec.group().clone();

    let config = sample_poisson(system.covered(), &mut RngSpec::new(5, 0).rng());
    let mut rng = RngSpec::new(5, 1).rng();
    let marks: Vec<GroupElem> = (0..config.len()).map(|_| g.sample_haar(&mut rng)).collect();
    let mut marked = MarkedConfig::new(config.clone(), marks)?;

    let show = |m: &MarkedConfig<GroupElem>| m.marks().iter().take(8).map(|g| g.coords()[0]).collect::<Vec<_>>();
    println!("marks at ranks 1..8: {:?}", show(&marked));
    for step in 1..=3 {
        marked = skew_apply_group(&system, &spec, &marked)?;
        println!("after step {step}:        {:?}", show(&marked));
    }

    for k in [1, 2] {
        match phi_k_vector(&system, &spec, &config, k, 10_000) {
            Ok(v) => println!(
                "k = {k}: return time {}, accumulated values {:?}",
                v.n,
                v.values.iter().map(|g| g.coords().to_vec()).collect::<Vec<_>>()
            ),
            Err(c) => println!("k = {k}: censored ({c})"),
        }
    }
    Ok(())
}
