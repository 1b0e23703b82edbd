//! Fixtures shared by the benchmarks.

use sgim_core::environment::Environment;
use sgim_core::memory::{Memory, StrategyTag};
use sgim_core::rng;

/// A memory of `n` random policies executed on `env`.
pub fn filled_memory(env: &mut Environment, n: usize, seed: u64) -> Memory {
    let mut r = rng::stream(seed, 0);
    let mut m = Memory::new();
    for _ in 0..n {
        let p = Environment::random_policy(&mut r);
        let o = env.execute(&p);
        m.push(p, o, StrategyTag::Autonomous);
    }
    m
}
