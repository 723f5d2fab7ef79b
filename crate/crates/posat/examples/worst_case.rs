//! Worst-case price of satisficing across indifference levels, on the
//! two-route instance with one constant and one congestible road.
//!
//! Run with: cargo run --example worst_case

use posat::analysis::{posat_curve, SearchOptions};
use posat::instance::gen_example1;

fn main() -> posat::Result<()> {
    let instance = gen_example1(1.0)?;
    let grid = [0.0, 0.25, 0.5, 0.75, 1.0, 1.25];
    let opts = SearchOptions { starts: 4, seed: 1, ..Default::default() };

    println!("{:>6} {:>10} {:>10} {:>10}", "kappa", "posat", "zeta", "simple");
    for (kappa, row) in posat_curve(&instance, &grid, &opts)? {
        match row {
            Ok(row) => println!(
                "{kappa:>6.2} {:>10.6} {:>10.6} {:>10.6}",
                row.posat, row.zeta, row.simple_bound
            ),
            Err(err) => println!("{kappa:>6.2} failed: {err}"),
        }
    }
    Ok(())
}
