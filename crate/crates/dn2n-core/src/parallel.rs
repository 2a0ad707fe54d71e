//! Deterministic fork-join helper.
//!
//! Work items are split into contiguous index chunks, one per worker; results
//! are returned in input order so any floating-point reduction the caller
//! performs is bit-identical for every thread count.

/// Applies `f` to `0..n` and collects results in index order, using at most
/// `threads` OS threads. `threads <= 1` runs inline.
pub fn par_map<R, F>(threads: usize, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync,
{
    if threads <= 1 || n <= 1 {
        return (0..n).map(f).collect();
    }
    let workers = threads.min(n);
    let chunk = n.div_ceil(workers);
    let mut out: Vec<Vec<R>> = Vec::with_capacity(workers);
    std::thread::scope(|scope| {
        let mut handles = Vec::with_capacity(workers);
        for w in 0..workers {
            let lo = w * chunk;
            let hi = ((w + 1) * chunk).min(n);
            let f = &f;
            handles.push(scope.spawn(move || (lo..hi).map(f).collect::<Vec<R>>()));
        }
        for h in handles {
            out.push(h.join().expect("worker panicked"));
        }
    });
    out.into_iter().flatten().collect()
}

/// Resolves a requested worker count: explicit value, else the
/// `DN2N_THREADS` environment variable, else available parallelism.
pub fn resolve_threads(requested: Option<usize>) -> usize {
    if let Some(t) = requested {
        return t.max(1);
    }
    if let Ok(v) = std::env::var("DN2N_THREADS") {
        if let Ok(t) = v.trim().parse::<usize>() {
            return t.max(1);
        }
    }
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_preserved_for_any_thread_count() {
        let sq = |i: usize| (i * i) as u64;
        let serial = par_map(1, 37, sq);
        for threads in [2, 3, 8] {
            assert_eq!(par_map(threads, 37, sq), serial);
        }
    }

    #[test]
    fn reduction_is_bit_identical_across_thread_counts() {
        let item = |i: usize| {
            let mut acc = 0.0f64;
            for k in 0..100 {
                acc += ((i * 31 + k) as f64).sin();
            }
            acc
        };
        let reduce = |v: Vec<f64>| v.into_iter().fold(0.0f64, |a, b| a + b);
        let one = reduce(par_map(1, 23, item));
        let four = reduce(par_map(4, 23, item));
        assert_eq!(one.to_bits(), four.to_bits());
    }
}
