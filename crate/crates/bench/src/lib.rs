//! Fixtures shared by the benchmarks.

use lightspan::{build_ubg, generate_uniform_square, UnitBallGraph};

/// Unit ball graph on `n` seeded points at the density of 100 points in a
/// 5x5 square.
pub fn fixture(n: usize, seed: u64) -> UnitBallGraph {
    let side = 5.0 * (n as f64 / 100.0).sqrt();
    let ps = generate_uniform_square(n, side, seed).expect("valid fixture parameters");
    build_ubg(&ps, 1.0).expect("planar fixture")
}
