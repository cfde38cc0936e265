use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::rng::{keyed_rng, TAG_SPLIT};
use crate::error::{Error, Result};
use crate::types::LabelVector;

/// Disjoint sample indices per split, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Per-class partition into train/val/test.
///
/// Each class receives `round(n·f_train)` training and `round(n·f_val)`
/// validation samples and the rest go to test, so every split is within one
/// sample of its exact share. Which samples land where is a seeded shuffle
/// per class. Classes absent from `labels` are skipped; present classes need
/// at least 3 samples.
pub fn stratified_split(labels: &LabelVector, fractions: [f64; 3], seed: u64) -> Result<SplitIndices> {
    if fractions.iter().any(|f| !(0.0..=1.0).contains(f)) || (fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::BadFractions(format!(
            "{fractions:?} must be in [0, 1] and sum to 1"
        )));
    }
    let mut by_class = vec![Vec::new(); labels.num_classes()];
    for (i, &l) in labels.as_slice().iter().enumerate() {
        by_class[l].push(i);
    }
    let mut out = SplitIndices {
        train: Vec::new(),
        val: Vec::new(),
        test: Vec::new(),
    };
    for (class, mut members) in by_class.into_iter().enumerate() {
        let n = members.len();
        if n == 0 {
            continue;
        }
        if n < 3 {
            return Err(Error::SmallClass { class, count: n });
        }
        let n_train = (n as f64 * fractions[0]).round() as usize;
        let n_val = ((n as f64 * fractions[1]).round() as usize).min(n - n_train);
        members.shuffle(&mut keyed_rng(seed, &[TAG_SPLIT, class as u64]));
        out.train.extend_from_slice(&members[..n_train]);
        out.val.extend_from_slice(&members[n_train..n_train + n_val]);
        out.test.extend_from_slice(&members[n_train + n_val..]);
    }
    out.train.sort_unstable();
    out.val.sort_unstable();
    out.test.sort_unstable();
    Ok(out)
}
