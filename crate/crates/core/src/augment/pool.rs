use std::path::Path;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{FeatureRecord, Partition, Provenance, Sample};
use crate::error::{Error, Result};
use crate::gan::{GanMode, ScganModel};
use crate::io::write_frames;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Unchecked,
    Kept,
    /// Dropped; holds the discriminator's argmax.
    Rejected { predicted: usize },
}

impl Verdict {
    fn label(self) -> String {
        match self {
            Verdict::Unchecked => "unchecked".into(),
            Verdict::Kept => "kept".into(),
            Verdict::Rejected { predicted } => format!("rejected:{predicted}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoolEntry {
    pub payload: Sample,
    /// Conditioning class (for sgan, the discriminator's most likely real class).
    pub class: usize,
    /// Index of the generating model in the member slice.
    pub member: usize,
    pub verdict: Verdict,
}

impl PoolEntry {
    pub fn into_record(self, partition: Partition) -> FeatureRecord {
        FeatureRecord {
            payload: self.payload,
            label: self.class,
            partition,
            provenance: Provenance::Generated { member: self.member },
            group: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SynthPool {
    pub entries: Vec<PoolEntry>,
}

impl SynthPool {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn class_counts(&self, num_classes: usize) -> Vec<usize> {
        let mut c = vec![0; num_classes];
        for e in &self.entries {
            if e.class < num_classes {
                c[e.class] += 1;
            }
        }
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolSource {
    Mono,
    Ensemble,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentPlan {
    /// Samples added per class.
    pub per_class: usize,
    pub source: PoolSource,
    pub seed: u64,
}

/// Draws `per_member_per_class` samples for every (member, class) pair, members
/// outermost. All entries start unchecked.
pub fn synthesize_pool<R: Rng + ?Sized>(
    members: &[&ScganModel],
    per_member_per_class: usize,
    rng: &mut R,
) -> Result<SynthPool> {
    let mut entries = Vec::new();
    for (member, model) in members.iter().enumerate() {
        for class in 0..model.num_classes() {
            for _ in 0..per_member_per_class {
                let payload = model.sample(class, rng)?;
                let class = match model.mode() {
                    GanMode::Sgan => model.real_class(&payload)?,
                    GanMode::Scgan | GanMode::Cgan => class,
                };
                entries.push(PoolEntry {
                    payload,
                    class,
                    member,
                    verdict: Verdict::Unchecked,
                });
            }
        }
    }
    Ok(SynthPool { entries })
}

/// Records each entry's verdict from its own member's discriminator.
pub fn judge_pool(pool: &SynthPool, members: &[&ScganModel]) -> Result<SynthPool> {
    let entries = pool
        .entries
        .iter()
        .map(|e| {
            let model = members.get(e.member).ok_or(Error::IndexOutOfRange {
                context: "pool member",
                index: e.member,
                len: members.len(),
            })?;
            let (predicted, keep) = model.verdict(&e.payload, e.class)?;
            Ok(PoolEntry {
                verdict: if keep { Verdict::Kept } else { Verdict::Rejected { predicted } },
                ..e.clone()
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SynthPool { entries })
}

/// Keeps the entries their generating member's discriminator recognizes as the
/// conditioning class.
pub fn filter_by_discriminator(pool: &SynthPool, members: &[&ScganModel]) -> Result<SynthPool> {
    let mut judged = judge_pool(pool, members)?;
    judged.entries.retain(|e| e.verdict == Verdict::Kept);
    Ok(judged)
}

/// Exactly `m` entries per class, drawn uniformly without replacement and
/// returned class by class.
pub fn select_balanced<R: Rng + ?Sized>(
    pool: &SynthPool,
    num_classes: usize,
    m: usize,
    rng: &mut R,
) -> Result<Vec<PoolEntry>> {
    let mut by_class: Vec<Vec<&PoolEntry>> = vec![Vec::new(); num_classes];
    for e in &pool.entries {
        if e.class >= num_classes {
            return Err(Error::IndexOutOfRange {
                context: "pool class",
                index: e.class,
                len: num_classes,
            });
        }
        by_class[e.class].push(e);
    }
    if m == 0 {
        return Ok(Vec::new());
    }
    for (class, entries) in by_class.iter().enumerate() {
        if entries.len() < m {
            return Err(Error::InsufficientPool {
                class,
                available: entries.len(),
                requested: m,
            });
        }
    }
    let mut out = Vec::with_capacity(m * num_classes);
    for entries in &by_class {
        let mut idx = sample(rng, entries.len(), m).into_vec();
        idx.sort_unstable();
        out.extend(idx.into_iter().map(|i| entries[i].clone()));
    }
    Ok(out)
}

/// Synthesizes and filters until every class has `m` survivors (at most
/// `1 + extra_rounds` rounds of `pool_factor · m` draws per class), then
/// selects `m` per class as training records.
pub fn draw_balanced<R: Rng + ?Sized>(
    members: &[&ScganModel],
    m: usize,
    pool_factor: usize,
    extra_rounds: usize,
    rng: &mut R,
) -> Result<Vec<FeatureRecord>> {
    let Some(first) = members.first() else {
        return Err(Error::EmptyInput("pool members"));
    };
    if m == 0 {
        return Ok(Vec::new());
    }
    let k = first.num_classes();
    let per_member = (pool_factor.max(1) * m).div_ceil(members.len());
    let mut pool = SynthPool::default();
    for _ in 0..=extra_rounds {
        let fresh = synthesize_pool(members, per_member, rng)?;
        pool.entries.extend(filter_by_discriminator(&fresh, members)?.entries);
        if pool.class_counts(k).iter().all(|&c| c >= m) {
            break;
        }
    }
    Ok(select_balanced(&pool, k, m, rng)?
        .into_iter()
        .map(|e| e.into_record(Partition::Train))
        .collect())
}

/// `original ∪ extra`, keeping each record's provenance.
pub fn merge(original: &[FeatureRecord], extra: &[FeatureRecord]) -> Result<Vec<FeatureRecord>> {
    if let Some(first) = original.first().or(extra.first()) {
        for r in original.iter().chain(extra) {
            if r.payload.kind() != first.payload.kind() {
                return Err(Error::WrongDataKind {
                    expected: first.payload.kind().name(),
                    found: r.payload.kind().name(),
                });
            }
            if r.payload.feature_dim() != first.payload.feature_dim() {
                return Err(Error::dims("merged feature width", first.payload.feature_dim(), r.payload.feature_dim()));
            }
        }
    }
    Ok(original.iter().chain(extra).cloned().collect())
}

#[derive(Serialize)]
struct PoolMeta {
    class: usize,
    member: usize,
    verdict: Verdict,
}

/// Static pools go to CSV (`class,member,verdict,v0..`); sequence pools to the
/// framed binary container.
pub fn write_pool(path: impl AsRef<Path>, pool: &SynthPool) -> Result<()> {
    match pool.entries.first().map(|e| &e.payload) {
        Some(Sample::Sequence(_)) => {
            let frames = pool
                .entries
                .iter()
                .map(|e| {
                    Ok((
                        PoolMeta {
                            class: e.class,
                            member: e.member,
                            verdict: e.verdict,
                        },
                        e.payload.as_sequence()?,
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            write_frames(path, &frames)
        }
        _ => {
            let dim = pool.entries.first().map_or(0, |e| e.payload.feature_dim());
            let mut w = csv::Writer::from_path(path.as_ref())?;
            let mut header = vec!["class".to_string(), "member".into(), "verdict".into()];
            header.extend((0..dim).map(|i| format!("v{i}")));
            w.write_record(&header)?;
            for e in &pool.entries {
                let mut row = vec![e.class.to_string(), e.member.to_string(), e.verdict.label()];
                row.extend(e.payload.as_static()?.iter().map(|v| v.to_string()));
                w.write_record(&row)?;
            }
            w.flush()?;
            Ok(())
        }
    }
}
