//! The coupled-marks joining over x -> x + 1: copy the mark of the first
//! atom of the other configuration falling in each gap, or draw fresh.

use chacon_lab::joining::{
    advance_joint, couple_marks, sample_biconfig, shift_cocycle, FreshKey, MarkLaw, Provenance, SampleRecord,
};
use chacon_lab::rng::RngSpec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = RngSpec::new(2, 0).rng();
    let omega1 = sample_biconfig(4, 1.0, &mut rng).config;
    let omega2 = sample_biconfig(4, 1.0, &mut rng).config;
    let law = MarkLaw::uniform(2);
    let sample = couple_marks(&omega1, &omega2, &law, &mut rng, FreshKey { seed: 2, sample: 0 })?;

    for (slot, prov) in sample.provenance2.iter().enumerate() {
        let n = sample.omega2.index_of_slot(slot);
        let how = match prov {
            Provenance::Copied(l) => format!("copied from index {l}"),
            Provenance::Fresh => "fresh".to_string(),
            Provenance::Excluded => "excluded (gap not observed)".to_string(),
        };
        println!("n = {n:>3}: mark {:?}, {how}", sample.marks2[slot]);
    }
    println!("shift exponents: {} and {}", shift_cocycle(&omega1), shift_cocycle(&omega2));

    let (advanced, exits) = advance_joint(&sample);
    println!("after one step: {} copied, {} excluded, exits {:?}", advanced.copied(), advanced.excluded(), exits);
    println!("{}", serde_json::to_string(&SampleRecord::from(&advanced))?);
    Ok(())
}
