//! Stratified train/test split.

use rand::seq::SliceRandom;

use super::ClassLabel;
use crate::error::{Error, Result};
use crate::sampler::SeedSpec;

/// Splits per class with a seeded shuffle; each class contributes
/// `round(n·train_fraction)` rows to the training side. Both sides keep the
/// input order.
pub fn split<T: Clone>(
    rows: &[T],
    label: impl Fn(&T) -> ClassLabel,
    train_fraction: f64,
    seed: SeedSpec,
) -> Result<(Vec<T>, Vec<T>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!("train fraction {train_fraction} outside (0, 1)")));
    }
    let mut in_train = vec![false; rows.len()];
    for class in ClassLabel::ALL {
        let mut idx: Vec<usize> = (0..rows.len()).filter(|&i| label(&rows[i]) == class).collect();
        if idx.is_empty() {
            continue;
        }
        if idx.len() < 2 {
            return Err(Error::InvalidArgument(format!("class {class} has a single row and cannot be split")));
        }
        let mut rng = seed.derive(class.index() as u64).rng();
        idx.shuffle(&mut rng);
        let n_train = ((idx.len() as f64 * train_fraction).round() as usize).clamp(1, idx.len() - 1);
        for &i in &idx[..n_train] {
            in_train[i] = true;
        }
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (row, t) in rows.iter().zip(in_train) {
        if t {
            train.push(row.clone());
        } else {
            test.push(row.clone());
        }
    }
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows() -> Vec<(usize, ClassLabel)> {
        (0..30).map(|i| (i, ClassLabel::ALL[i % 3])).collect()
    }

    #[test]
    fn stratified_sizes_and_partition() {
        let r = rows();
        let (train, test) = split(&r, |x| x.1, 0.8, SeedSpec::new(1, 0)).unwrap();
        assert_eq!(train.len(), 24);
        assert_eq!(test.len(), 6);
        for c in ClassLabel::ALL {
            assert_eq!(train.iter().filter(|x| x.1 == c).count(), 8);
        }
        let mut all: Vec<usize> = train.iter().chain(&test).map(|x| x.0).collect();
        all.sort();
        assert_eq!(all, (0..30).collect::<Vec<_>>());
    }

    #[test]
    fn deterministic_and_validated() {
        let r = rows();
        let a = split(&r, |x| x.1, 0.7, SeedSpec::new(5, 0)).unwrap();
        let b = split(&r, |x| x.1, 0.7, SeedSpec::new(5, 0)).unwrap();
        assert_eq!(a, b);
        assert!(split(&r, |x| x.1, 1.0, SeedSpec::new(5, 0)).is_err());
        let single = vec![(0, ClassLabel::Sep), (1, ClassLabel::Npt), (2, ClassLabel::Npt)];
        assert!(split(&single, |x| x.1, 0.5, SeedSpec::new(5, 0)).is_err());
    }
}
