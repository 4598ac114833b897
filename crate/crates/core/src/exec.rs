//! Sequential or rayon-backed evaluation of independent work items.
//!
//! With the `parallel` feature (default) candidate evaluations fan out over
//! the rayon pool; without it, or under [`Execution::Sequential`], they run
//! in order on the calling thread. Results always come back in input order,
//! so reductions over them are deterministic either way.
//!
//! `GEOMATCH_THREADS` caps the pool size; `0` or unset means rayon's default
//! and `1` forces sequential evaluation.

use std::cell::Cell;
use std::sync::OnceLock;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    Parallel,
}

thread_local! {
    static OVERRIDE: Cell<Option<Execution>> = const { Cell::new(None) };
}

fn env_threads() -> usize {
    static THREADS: OnceLock<usize> = OnceLock::new();
    *THREADS.get_or_init(|| {
        let n = std::env::var("GEOMATCH_THREADS")
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .unwrap_or(0);
        #[cfg(feature = "parallel")]
        if n > 1 {
            // fails harmlessly if the global pool already exists
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        n
    })
}

/// The mode used by the current thread.
pub fn current() -> Execution {
    if let Some(mode) = OVERRIDE.with(Cell::get) {
        return mode;
    }
    if cfg!(feature = "parallel") && env_threads() != 1 {
        Execution::Parallel
    } else {
        Execution::Sequential
    }
}

/// Runs `f` with `mode` in effect on this thread.
pub fn with_execution<R>(mode: Execution, f: impl FnOnce() -> R) -> R {
    let previous = OVERRIDE.with(|c| c.replace(Some(mode)));
    let out = f();
    OVERRIDE.with(|c| c.set(previous));
    out
}

/// Maps `f` over `items` with per-worker state from `init`, preserving order.
pub(crate) fn map_init<T, S, R, I, F>(items: &[T], init: I, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, &T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if current() == Execution::Parallel {
        use rayon::prelude::*;
        return items.par_iter().map_init(&init, |s, x| f(s, x)).collect();
    }
    let mut state = init();
    items.iter().map(|x| f(&mut state, x)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_modes_agree_and_keep_order() {
        let items: Vec<u64> = (0..1000).collect();
        let seq = with_execution(Execution::Sequential, || {
            map_init(&items, || 3u64, |s, x| x * *s)
        });
        let par = with_execution(Execution::Parallel, || map_init(&items, || 3u64, |s, x| x * *s));
        assert_eq!(seq, par);
        assert_eq!(seq[999], 2997);
    }

    #[test]
    fn override_is_scoped() {
        let before = current();
        with_execution(Execution::Sequential, || {
            assert_eq!(current(), Execution::Sequential)
        });
        assert_eq!(current(), before);
    }
}
