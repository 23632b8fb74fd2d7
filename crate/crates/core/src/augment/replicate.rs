use rand::seq::index::sample;
use rand::Rng;

use crate::data::{class_counts, FeatureRecord, Provenance};
use crate::error::{Error, Result};

/// Balances classes by replication: the original set followed by, per class,
/// whole copies plus a uniformly drawn remainder up to the majority count.
pub fn oversample_replicate<R: Rng + ?Sized>(
    train_set: &[FeatureRecord],
    num_classes: usize,
    rng: &mut R,
) -> Result<Vec<FeatureRecord>> {
    let counts = class_counts(train_set, num_classes);
    if let Some(class) = counts.iter().position(|&c| c == 0) {
        return Err(Error::ClassTooSmall {
            class,
            available: 0,
            required: 1,
        });
    }
    let target = counts.iter().copied().max().unwrap_or(0);
    let mut out = train_set.to_vec();
    for (class, &have) in counts.iter().enumerate() {
        let members: Vec<&FeatureRecord> = train_set.iter().filter(|r| r.label == class).collect();
        let replica = |r: &FeatureRecord| FeatureRecord {
            provenance: Provenance::Replicated,
            ..r.clone()
        };
        let need = target - have;
        for _ in 0..need / have {
            out.extend(members.iter().map(|r| replica(r)));
        }
        let mut rest = sample(rng, have, need % have).into_vec();
        rest.sort_unstable();
        out.extend(rest.into_iter().map(|i| replica(members[i])));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Partition, Sample};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn set(counts: &[usize]) -> Vec<FeatureRecord> {
        counts
            .iter()
            .enumerate()
            .flat_map(|(k, &n)| (0..n).map(move |i| FeatureRecord::real(Sample::Static(vec![k as f64, i as f64]), k, Partition::Train)))
            .collect()
    }

    #[test]
    fn reference_counts_balance() {
        let original = set(&[161, 75, 15, 32]);
        let out = oversample_replicate(&original, 4, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(class_counts(&out, 4), vec![161; 4]);
        assert_eq!(out.len(), 644);
        for r in &out[original.len()..] {
            assert_eq!(r.provenance, Provenance::Replicated);
            assert!(original.iter().any(|o| o.payload == r.payload && o.label == r.label));
        }
    }

    #[test]
    fn balanced_is_identity() {
        let original = set(&[5, 5, 5]);
        assert_eq!(oversample_replicate(&original, 3, &mut ChaCha8Rng::seed_from_u64(0)).unwrap(), original);
    }

    #[test]
    fn empty_class_errors() {
        assert!(oversample_replicate(&set(&[3, 0]), 2, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }
}
