//! Deterministic data-parallel helpers.
//!
//! Work is split into contiguous index chunks and results are concatenated
//! in chunk order, so every output is identical regardless of how many
//! worker threads run. `TYPICLUST_THREADS` caps the worker count.

/// Worker count: `TYPICLUST_THREADS` when set to a positive integer,
/// otherwise all available cores.
pub fn thread_count() -> usize {
    match std::env::var("TYPICLUST_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        Some(n) if n >= 1 => n,
        _ => std::thread::available_parallelism().map_or(1, |n| n.get()),
    }
}

/// Maps `f` over `0..n`, index order preserved in the output.
pub fn parallel_map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let workers = thread_count().min(n.max(1));
    if workers <= 1 || n < 64 {
        return (0..n).map(f).collect();
    }
    let chunk = n.div_ceil(workers);
    let mut parts: Vec<Vec<T>> = Vec::with_capacity(workers);
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let f = &f;
                let start = w * chunk;
                let end = ((w + 1) * chunk).min(n);
                scope.spawn(move || (start..end).map(f).collect::<Vec<T>>())
            })
            .collect();
        for handle in handles {
            parts.push(handle.join().expect("parallel worker panicked"));
        }
    });
    parts.into_iter().flatten().collect()
}
