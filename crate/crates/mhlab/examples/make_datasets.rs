//! Regenerates the shipped datasets under data/. The seeds are fixed so
//! the files are reproducible; a test compares the committed files
//! against these exact generator calls.
//!
//! Seed 110 was picked (first seed under 200) so the 123-count Poisson
//! sample has mean exactly 1, matching the nominal rate.

use mhlab::mixture::{generate_poisson, MixtureData};
use mhlab::particle::{generate_lgss, save_series, LgssParams};
use mhlab::stream::RngStream;

pub const MIXTURE_SEED: u64 = 110;
pub const LGSS_SEED: u64 = 2024;

pub fn lgss_params() -> LgssParams {
    LgssParams {
        phi: 0.9,
        state_noise_var: 0.25,
        emission_coeff: 1.0,
        emission_noise_var: 1.0,
        init_mean: 0.0,
        init_var: 1.0,
    }
}

fn main() {
    let counts =
        generate_poisson(1.0, 123, &mut RngStream::new(MIXTURE_SEED)).expect("valid rate");
    let mean = counts.iter().sum::<u64>() as f64 / counts.len() as f64;
    MixtureData::from_observations(counts)
        .expect("nonempty sample")
        .save("data/poisson123.txt")
        .expect("writable data dir");
    println!("data/poisson123.txt: 123 Poisson(1) counts, mean {mean}");

    let series = generate_lgss(lgss_params(), 20, &mut RngStream::new(LGSS_SEED))
        .expect("valid parameters");
    save_series(&series, "data/lgss_t20.txt").expect("writable data dir");
    println!("data/lgss_t20.txt: 20 linear-Gaussian observations");
}
