use std::collections::BTreeMap;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::{substream, Stream};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Sequence-level stratified split. Within each label stratum the indices
/// are shuffled and then dealt round-robin onto the folds, continuing the
/// deal position across strata so fold sizes differ by at most one.
pub fn kfold_split(labels: &[Option<usize>], k: usize, seed: u64) -> Result<Vec<Fold>> {
    if k < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {k}")));
    }
    if labels.len() < k {
        return Err(Error::Config(format!("{} sequences cannot fill {k} folds", labels.len())));
    }
    let mut strata: BTreeMap<Option<usize>, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        strata.entry(l).or_default().push(i);
    }
    let mut rng = substream(seed, Stream::Split);
    let mut tests = vec![Vec::new(); k];
    let mut next = 0;
    for members in strata.values_mut() {
        members.shuffle(&mut rng);
        for &i in members.iter() {
            tests[next].push(i);
            next = (next + 1) % k;
        }
    }
    Ok(tests
        .into_iter()
        .map(|mut test| {
            test.sort_unstable();
            let train = (0..labels.len()).filter(|i| test.binary_search(i).is_err()).collect();
            Fold { train, test }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_into_five() {
        let labels: Vec<_> = (0..10).map(|i| Some(i % 2)).collect();
        let folds = kfold_split(&labels, 5, 1).unwrap();
        assert_eq!(folds.len(), 5);
        assert!(folds.iter().all(|f| f.test.len() == 2 && f.train.len() == 8));
    }

    #[test]
    fn too_few_sequences() {
        assert!(kfold_split(&[Some(0); 3], 5, 0).is_err());
        assert!(kfold_split(&[Some(0); 3], 1, 0).is_err());
    }
}
