// Turn polygon classes into a label matrix that says which endmembers each
// superpixel may contain.

use std::collections::{BTreeMap, BTreeSet};

use spmlda::supervision::build_tau;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Six superpixels. Polygons tagged "asphalt" cover superpixel 0, "metal"
    // covers 1. Endmembers 0 and 1 are tied to those classes; endmembers 2..4
    // stay free everywhere.
    let regions = BTreeMap::from([
        ("asphalt".to_string(), BTreeSet::from([0])),
        ("metal".to_string(), BTreeSet::from([1])),
    ]);
    let classes = BTreeMap::from([("asphalt".to_string(), 0), ("metal".to_string(), 1)]);
    let tau = build_tau(6, 5, &regions, &classes)?.with_names(
        ["asphalt", "metal", "free_a", "free_b", "free_c"]
            .map(String::from)
            .to_vec(),
    )?;

    for j in 0..tau.n_superpixels() {
        let allowed: Vec<u8> = tau.column(j).iter().map(|&b| b as u8).collect();
        println!("superpixel {j}: {allowed:?}");
    }
    println!("supervised endmembers: {:?}", tau.supervised_endmembers());
    Ok(())
}
