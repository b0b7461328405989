use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::seed::rng_from_seed;

pub const MIN_SPLIT_SIZE: usize = 8;

/// A random partition of `0..n` into four blocks whose sizes differ by at most one.
///
/// Block roles: `blocks[0]` fits the mean, `blocks[1]` the variance and the
/// residual distribution, `blocks[2]` hosts the bootstrap refits and
/// `blocks[3]` is held out for calibration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    blocks: [Vec<usize>; 4],
}

impl SplitIndices {
    pub fn block(&self, k: usize) -> &[usize] {
        &self.blocks[k]
    }

    pub fn blocks(&self) -> &[Vec<usize>; 4] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Shuffles `0..n` and cuts it into blocks of size `ceil(n/4)` then `floor(n/4)`.
/// Indices within each block are sorted.
pub fn split_indices(n: usize, seed: u64) -> Result<SplitIndices> {
    if n < MIN_SPLIT_SIZE {
        return Err(Error::SampleTooSmall {
            n,
            min: MIN_SPLIT_SIZE,
        });
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng_from_seed(seed));
    let (base, extra) = (n / 4, n % 4);
    let mut blocks: [Vec<usize>; 4] = Default::default();
    let mut start = 0;
    for (k, block) in blocks.iter_mut().enumerate() {
        let size = base + usize::from(k < extra);
        *block = perm[start..start + size].to_vec();
        block.sort_unstable();
        start += size;
    }
    Ok(SplitIndices { blocks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    #[test]
    fn forced_sizes() {
        let s = split_indices(8, 0).unwrap();
        assert!(s.blocks().iter().all(|b| b.len() == 2));
        let mut sizes: Vec<usize> = split_indices(10, 3).unwrap().blocks().iter().map(Vec::len).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![2, 2, 3, 3]);
    }

    #[test]
    fn too_small() {
        assert!(matches!(split_indices(7, 0), Err(Error::SampleTooSmall { n: 7, min: 8 })));
    }

    proptest! {
        #[test]
        fn partition_invariants(n in 8usize..2000, seed in any::<u64>()) {
            let s = split_indices(n, seed).unwrap();
            let mut union = BTreeSet::new();
            for b in s.blocks() {
                prop_assert!(b.len() == n / 4 || b.len() == n.div_ceil(4));
                for &i in b {
                    prop_assert!(union.insert(i), "index {} repeated", i);
                }
            }
            prop_assert_eq!(union, (0..n).collect::<BTreeSet<_>>());
            prop_assert_eq!(s.clone(), split_indices(n, seed).unwrap());
        }
    }
}
