//! Order-preserving data parallelism, serial when the `parallel` feature is off.

use std::env;

/// Caps the worker pool at `CARNOT_THREADS` if set. Safe to call repeatedly;
/// only the first call before any parallel work has an effect.
pub fn configure_threads() {
    #[cfg(feature = "parallel")]
    if let Some(n) = env::var("CARNOT_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = env::var_os("CARNOT_THREADS");
}

/// `(0..len).map(f).collect()`, evaluated in parallel when available.
pub(crate) fn map_range<T: Send>(len: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..len).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..len).map(f).collect()
    }
}

/// Like [`map_range`], with per-worker scratch state from `init`.
pub(crate) fn map_range_with<S, T: Send>(
    len: usize,
    init: impl Fn() -> S + Sync + Send,
    f: impl Fn(&mut S, usize) -> T + Sync + Send,
) -> Vec<T> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..len).into_par_iter().map_init(init, f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let mut state = init();
        (0..len).map(|i| f(&mut state, i)).collect()
    }
}
