//! Shared fixtures for the benchmarks.

use ncfield::{Coordinate, ModeSet, ModeState};
use num_complex::Complex64;

/// A deterministic state with the reality pairing, filled from a
/// linear congruential sequence.
pub fn fixture_state(seed: u64, n_max: u32) -> ModeState {
    let modes = ModeSet::new(n_max).expect("n_max >= 1");
    let mut state = ModeState::zeros(2, modes);
    let mut x = seed;
    let mut next = || {
        x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((x >> 11) as f64 / (1u64 << 53) as f64) - 0.5
    };
    for n in modes.nonnegative() {
        let im = if n.value() == 0 { 0.0 } else { 1.0 };
        for i in 0..2 {
            state
                .set_pair(Coordinate::q(i, n.value()), Complex64::new(next(), im * next()))
                .expect("paired");
            state
                .set_pair(Coordinate::p(i, n.value()), Complex64::new(next(), im * next()))
                .expect("paired");
        }
    }
    state
}
