//! Batch execution: map a worker over many independent inputs, in parallel
//! when the `parallel` feature is enabled and sequentially otherwise.
//! Results always come back in input order, so output is identical either
//! way.

#[cfg(feature = "parallel")]
pub fn map_batch<I, O, F>(inputs: Vec<I>, worker: F) -> Vec<O>
where
    I: Send,
    O: Send,
    F: Fn(I) -> O + Sync + Send,
{
    use rayon::prelude::*;
    inputs.into_par_iter().map(worker).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_batch<I, O, F>(inputs: Vec<I>, worker: F) -> Vec<O>
where
    I: Send,
    O: Send,
    F: Fn(I) -> O + Sync + Send,
{
    inputs.into_iter().map(worker).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_input_order() {
        let out = map_batch((0..64).collect(), |x: u64| x * x);
        let expected: Vec<u64> = (0..64).map(|x| x * x).collect();
        assert_eq!(out, expected);
    }
}
