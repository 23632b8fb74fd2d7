use std::fs;
use std::io::Write;
use std::path::Path;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodebookMethod {
    KMeans,
    Random,
}

impl CodebookMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            CodebookMethod::KMeans => "kmeans",
            CodebookMethod::Random => "random",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "kmeans" => Some(CodebookMethod::KMeans),
            "random" => Some(CodebookMethod::Random),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    /// One codeword per row.
    pub codewords: DenseMatrix,
    pub method: CodebookMethod,
}

impl Codebook {
    pub fn size(&self) -> usize {
        self.codewords.rows()
    }

    pub fn dim(&self) -> usize {
        self.codewords.cols()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub codebook: Codebook,
    /// Inertia after each assignment step.
    pub inertia_history: Vec<f64>,
}

const MAX_ITERATIONS: usize = 100;
const REL_TOLERANCE: f64 = 1e-6;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn check(frames: &DenseMatrix, s: usize) -> Result<()> {
    if s == 0 {
        return Err(Error::config("codebook size must be at least 1"));
    }
    if s > frames.rows() {
        return Err(Error::config(format!(
            "codebook size {s} exceeds the {} available frames",
            frames.rows()
        )));
    }
    Ok(())
}

fn nearest(frame: &[f64], centers: &DenseMatrix) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centers.row_iter().enumerate() {
        let d = sq_dist(frame, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

fn plus_plus<R: Rng + ?Sized>(frames: &DenseMatrix, s: usize, rng: &mut R) -> DenseMatrix {
    let d = frames.cols();
    let mut centers = DenseMatrix::zeros(s, d);
    let first = rng.random_range(0..frames.rows());
    centers.row_mut(0).copy_from_slice(frames.row(first));
    let mut dist: Vec<f64> = frames.row_iter().map(|f| sq_dist(f, frames.row(first))).collect();
    for k in 1..s {
        let total: f64 = dist.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut idx = dist.len() - 1;
            for (i, &w) in dist.iter().enumerate() {
                acc += w;
                if acc > target && w > 0.0 {
                    idx = i;
                    break;
                }
            }
            idx
        } else {
            rng.random_range(0..frames.rows())
        };
        centers.row_mut(k).copy_from_slice(frames.row(pick));
        for (i, f) in frames.row_iter().enumerate() {
            dist[i] = dist[i].min(sq_dist(f, frames.row(pick)));
        }
    }
    centers
}

/// k-means++ seeding followed by Lloyd iterations (at most 100, stopping when the
/// relative inertia change drops below 1e-6). Empty clusters keep their centroid.
pub fn kmeans<R: Rng + ?Sized>(frames: &DenseMatrix, s: usize, rng: &mut R) -> Result<KMeansFit> {
    check(frames, s)?;
    let d = frames.cols();
    let mut centers = plus_plus(frames, s, rng);
    let mut history = Vec::new();
    let mut assign = vec![0usize; frames.rows()];
    for _ in 0..MAX_ITERATIONS {
        let mut inertia = 0.0;
        for (i, f) in frames.row_iter().enumerate() {
            let (k, dist) = nearest(f, &centers);
            assign[i] = k;
            inertia += dist;
        }
        let done = history
            .last()
            .is_some_and(|&prev: &f64| prev - inertia <= REL_TOLERANCE * prev.max(f64::MIN_POSITIVE));
        history.push(inertia);
        if done {
            break;
        }
        let mut sums = DenseMatrix::zeros(s, d);
        let mut counts = vec![0usize; s];
        for (i, f) in frames.row_iter().enumerate() {
            counts[assign[i]] += 1;
            for (acc, v) in sums.row_mut(assign[i]).iter_mut().zip(f) {
                *acc += v;
            }
        }
        for k in 0..s {
            if counts[k] > 0 {
                let n = counts[k] as f64;
                for (c, v) in centers.row_mut(k).iter_mut().zip(sums.row(k)) {
                    *c = v / n;
                }
            }
        }
    }
    Ok(KMeansFit {
        codebook: Codebook {
            codewords: centers,
            method: CodebookMethod::KMeans,
        },
        inertia_history: history,
    })
}

pub fn build_codebook<R: Rng + ?Sized>(
    frames: &DenseMatrix,
    s: usize,
    method: CodebookMethod,
    rng: &mut R,
) -> Result<Codebook> {
    match method {
        CodebookMethod::KMeans => Ok(kmeans(frames, s, rng)?.codebook),
        CodebookMethod::Random => {
            check(frames, s)?;
            let mut values = Vec::with_capacity(s * frames.cols());
            for i in sample(rng, frames.rows(), s) {
                values.extend_from_slice(frames.row(i));
            }
            Ok(Codebook {
                codewords: DenseMatrix::from_vec(s, frames.cols(), values)?,
                method,
            })
        }
    }
}

/// Header line `# method=<m>,size=<S>,dim=<d>` followed by one codeword per row.
pub fn write_codebook_csv(path: impl AsRef<Path>, codebook: &Codebook) -> Result<()> {
    let mut out = fs::File::create(path.as_ref())?;
    writeln!(
        out,
        "# method={},size={},dim={}",
        codebook.method.as_str(),
        codebook.size(),
        codebook.dim()
    )?;
    for row in codebook.codewords.row_iter() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn read_codebook_csv(path: impl AsRef<Path>) -> Result<Codebook> {
    let path = path.as_ref();
    let malformed = |reason: String| Error::Malformed {
        path: path.to_path_buf(),
        reason,
    };
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .and_then(|l| l.strip_prefix("# "))
        .ok_or_else(|| malformed("missing header line".into()))?;
    let mut method = None;
    let mut size = None;
    let mut dim = None;
    for field in header.split(',') {
        match field.split_once('=') {
            Some(("method", v)) => method = CodebookMethod::parse(v),
            Some(("size", v)) => size = v.parse::<usize>().ok(),
            Some(("dim", v)) => dim = v.parse::<usize>().ok(),
            _ => return Err(malformed(format!("bad header field {field:?}"))),
        }
    }
    let (method, size, dim) = match (method, size, dim) {
        (Some(m), Some(s), Some(d)) => (m, s, d),
        _ => return Err(malformed("incomplete header".into())),
    };
    let mut values = Vec::with_capacity(size * dim);
    for (i, line) in lines.filter(|l| !l.trim().is_empty()).enumerate() {
        let row: Vec<f64> = line
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| malformed(format!("row {i}: {e}")))?;
        if row.len() != dim {
            return Err(malformed(format!("row {i} has {} values, expected {dim}", row.len())));
        }
        values.extend(row);
    }
    if values.len() != size * dim || size == 0 {
        return Err(malformed(format!("expected {size} codewords")));
    }
    Ok(Codebook {
        codewords: DenseMatrix::from_vec(size, dim, values)?,
        method,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn blobs(rng: &mut ChaCha8Rng) -> DenseMatrix {
        let n = Normal::new(0.0, 0.3).unwrap();
        let mut rows = Vec::new();
        for c in [[0.0, 0.0], [5.0, 5.0]] {
            for _ in 0..200 {
                rows.push(vec![c[0] + n.sample(rng), c[1] + n.sample(rng)]);
            }
        }
        DenseMatrix::from_rows(&rows).unwrap()
    }

    #[test]
    fn kmeans_finds_blob_means() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let frames = blobs(&mut rng);
        let mut means = [[0.0; 2]; 2];
        for (i, f) in frames.row_iter().enumerate() {
            means[i / 200][0] += f[0] / 200.0;
            means[i / 200][1] += f[1] / 200.0;
        }
        let fit = kmeans(&frames, 2, &mut rng).unwrap();
        for m in means {
            let close = fit
                .codebook
                .codewords
                .row_iter()
                .any(|c| (c[0] - m[0]).abs() < 0.1 && (c[1] - m[1]).abs() < 0.1);
            assert!(close);
        }
    }

    #[test]
    fn inertia_never_increases() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let frames = DenseMatrix::random_normal(300, 3, 1.0, &mut rng);
        let fit = kmeans(&frames, 12, &mut rng).unwrap();
        assert!(fit.inertia_history.len() > 1);
        for w in fit.inertia_history.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
    }

    #[test]
    fn random_full_size_is_a_permutation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let frames = DenseMatrix::from_rows(&(0..9).map(|i| vec![i as f64, -(i as f64)]).collect::<Vec<_>>()).unwrap();
        let cb = build_codebook(&frames, 9, CodebookMethod::Random, &mut rng).unwrap();
        let mut firsts: Vec<f64> = cb.codewords.row_iter().map(|r| r[0]).collect();
        firsts.sort_by(f64::total_cmp);
        assert_eq!(firsts, (0..9).map(|i| i as f64).collect::<Vec<_>>());
    }

    #[test]
    fn oversized_codebook_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let frames = DenseMatrix::zeros(3, 2);
        assert!(build_codebook(&frames, 4, CodebookMethod::KMeans, &mut rng).is_err());
        assert!(build_codebook(&frames, 4, CodebookMethod::Random, &mut rng).is_err());
    }

    #[test]
    fn deterministic_per_seed() {
        let frames = DenseMatrix::random_normal(100, 4, 1.0, &mut ChaCha8Rng::seed_from_u64(1));
        let a = build_codebook(&frames, 5, CodebookMethod::KMeans, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = build_codebook(&frames, 5, CodebookMethod::KMeans, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn csv_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let cb = Codebook {
            codewords: DenseMatrix::random_normal(4, 3, 1.0, &mut rng),
            method: CodebookMethod::KMeans,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cb.csv");
        write_codebook_csv(&path, &cb).unwrap();
        assert_eq!(read_codebook_csv(&path).unwrap(), cb);
        fs::write(&path, "1,2\n").unwrap();
        assert!(matches!(read_codebook_csv(&path), Err(Error::Malformed { .. })));
    }
}
