use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::seed;

/// Shuffles `items` and deals them into `k` folds whose sizes differ by at
/// most one; the first `len % k` folds get the extra element.
pub fn kfold_split<T: Clone>(items: &[T], k: usize, seed: u64) -> Result<Vec<Vec<T>>> {
    if k < 2 || k > items.len() {
        return Err(Error::config(format!(
            "k = {k} outside [2, {}]",
            items.len()
        )));
    }
    let mut shuffled = items.to_vec();
    shuffled.shuffle(&mut seed::stream(seed, "kfold", 0));
    let (base, extra) = (items.len() / k, items.len() % k);
    let mut rest = shuffled.into_iter();
    Ok((0..k)
        .map(|i| rest.by_ref().take(base + usize::from(i < extra)).collect())
        .collect())
}
