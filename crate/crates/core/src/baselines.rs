//! Classical curve matchers used as comparison points.

use crate::error::{Error, Result};
use crate::evaluation::Scorer;
use crate::features::EdgeVector;
use crate::physics::derive_seed;

pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Input(format!("length mismatch: {} vs {}", a.len(), b.len())));
    }
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(Error::Input("cosine similarity of a zero vector".into()));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// Unconstrained DTW with absolute-difference local cost. The path starts at
/// (0, 0), ends at (n-1, m-1) and advances by one of (1,0), (0,1), (1,1).
pub fn dtw_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Input("dtw of an empty sequence".into()));
    }
    let m = b.len();
    // two rolling rows of the cumulative cost table
    let mut prev = vec![f64::INFINITY; m];
    let mut cur = vec![f64::INFINITY; m];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            let cost = (x - y).abs();
            let best = match (i, j) {
                (0, 0) => 0.0,
                (0, _) => cur[j - 1],
                (_, 0) => prev[0],
                _ => prev[j].min(cur[j - 1]).min(prev[j - 1]),
            };
            cur[j] = cost + best;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[m - 1])
}

/// Stateless uniform score in (0, 1) keyed on (seed, target id, candidate
/// id). It ignores the edge data, which makes it a stand-in for unguided
/// manual search.
#[derive(Clone, Debug)]
pub struct RandomScorer {
    pub seed: u64,
}

impl RandomScorer {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn draw(&self, target_id: &str, candidate_id: &str) -> f64 {
        let key = derive_seed(fnv1a(target_id.as_bytes()), fnv1a(candidate_id.as_bytes()), self.seed);
        // 53 random mantissa bits, shifted off zero
        ((key >> 11) as f64 + 0.5) / (1u64 << 53) as f64
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(0xcbf2_9ce4_8422_2325, |h, &b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

impl Scorer for RandomScorer {
    fn name(&self) -> &str {
        "random"
    }

    fn score(&self, target: &EdgeVector, candidate: &EdgeVector) -> f64 {
        self.draw(&target.source_fragment_id, &candidate.source_fragment_id)
    }
}

/// Cosine similarity; a zero (perfectly flat) edge scores 0.
#[derive(Clone, Copy, Debug, Default)]
pub struct CosineScorer;

impl Scorer for CosineScorer {
    fn name(&self) -> &str {
        "cosine"
    }

    fn score(&self, target: &EdgeVector, candidate: &EdgeVector) -> f64 {
        cosine_similarity(&target.values, &candidate.values).unwrap_or(0.0)
    }

    fn confidence(&self, score: f64) -> f64 {
        ((1.0 + score) / 2.0).clamp(0.0, 1.0)
    }
}

/// Negated DTW distance, so larger is better.
#[derive(Clone, Copy, Debug, Default)]
pub struct DtwScorer;

impl Scorer for DtwScorer {
    fn name(&self) -> &str {
        "dtw"
    }

    fn score(&self, target: &EdgeVector, candidate: &EdgeVector) -> f64 {
        dtw_distance(&target.values, &candidate.values).map(|d| -d).unwrap_or(f64::NEG_INFINITY)
    }

    /// `exp(-distance)`, the same transform the matcher applies.
    fn confidence(&self, score: f64) -> f64 {
        score.exp()
    }
}
