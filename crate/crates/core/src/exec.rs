//! Trial execution: data-parallel over trials with the `parallel` feature,
//! a plain loop otherwise. Results always come back in trial order, and
//! every trial draws from its own seeded stream, so the outcome does not
//! depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// `Parallel` if the crate was built with rayon, else `Sequential`.
    pub fn available(self) -> Self {
        if cfg!(feature = "parallel") {
            self
        } else {
            Execution::Sequential
        }
    }
}

/// Independent generator for `trial` under `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// `f(0), f(1), ..., f(trials - 1)`, in order.
pub fn run_trials<T, F>(exec: Execution, trials: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec.available() {
        Execution::Sequential => (0..trials).map(f).collect(),
        Execution::Parallel => parallel(trials, f),
    }
}

#[cfg(feature = "parallel")]
fn parallel<T: Send, F: Fn(usize) -> T + Sync + Send>(trials: usize, f: F) -> Vec<T> {
    use rayon::prelude::*;
    (0..trials).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn parallel<T: Send, F: Fn(usize) -> T + Sync + Send>(trials: usize, f: F) -> Vec<T> {
    (0..trials).map(f).collect()
}
