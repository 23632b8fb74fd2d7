use rand::Rng;

use crate::data::{class_counts, FeatureRecord, Partition, Provenance, Sample};
use crate::error::{Error, Result};

pub const DEFAULT_K_NEIGHBORS: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct SmoteSample {
    pub record: FeatureRecord,
    /// Index of the seed example in the input set.
    pub base: usize,
    /// Index of the neighbor it was interpolated towards.
    pub neighbor: usize,
    pub lambda: f64,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `x + λ (x_nn − x)`.
pub(crate) fn interpolate(x: &[f64], nn: &[f64], lambda: f64) -> Vec<f64> {
    x.iter().zip(nn).map(|(a, b)| a + lambda * (b - a)).collect()
}

/// SMOTE: raises every class to `target` examples (default: the majority count)
/// with `x + λ (x_nn − x)`, `x` uniform over the class, `x_nn` uniform over its
/// `k` nearest same-class neighbors and `λ ~ U[0, 1]`. Static vectors only.
pub fn smote<R: Rng + ?Sized>(
    train_set: &[FeatureRecord],
    num_classes: usize,
    k: usize,
    target: Option<usize>,
    rng: &mut R,
) -> Result<Vec<SmoteSample>> {
    if k == 0 {
        return Err(Error::config("SMOTE needs at least one neighbor"));
    }
    for r in train_set {
        r.payload.as_static()?;
    }
    let counts = class_counts(train_set, num_classes);
    let target = target.unwrap_or_else(|| counts.iter().copied().max().unwrap_or(0));
    let mut out = Vec::new();
    for (class, &have) in counts.iter().enumerate() {
        if have >= target {
            continue;
        }
        if have < k + 1 {
            return Err(Error::ClassTooSmall {
                class,
                available: have,
                required: k + 1,
            });
        }
        let members: Vec<usize> = (0..train_set.len()).filter(|&i| train_set[i].label == class).collect();
        let neighbors: Vec<Vec<usize>> = members
            .iter()
            .map(|&i| {
                let x = train_set[i].payload.values();
                let mut d: Vec<(f64, usize)> = members
                    .iter()
                    .filter(|&&j| j != i)
                    .map(|&j| (sq_dist(x, train_set[j].payload.values()), j))
                    .collect();
                d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                d.into_iter().take(k).map(|(_, j)| j).collect()
            })
            .collect();
        for _ in have..target {
            let pick = rng.random_range(0..members.len());
            let base = members[pick];
            let neighbor = neighbors[pick][rng.random_range(0..k)];
            let lambda: f64 = rng.random();
            let v = interpolate(train_set[base].payload.values(), train_set[neighbor].payload.values(), lambda);
            out.push(SmoteSample {
                record: FeatureRecord {
                    payload: Sample::Static(v),
                    label: class,
                    partition: Partition::Train,
                    provenance: Provenance::Smote,
                    group: None,
                },
                base,
                neighbor,
                lambda,
            });
        }
    }
    Ok(out)
}
