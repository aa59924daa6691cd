//! Top-k ranking protocol over upper/lower candidate pools.
//!
//! Every fragment that has a true complement is used as a target once. Its
//! pool is the full opposite group, interference fragments included, and
//! Top-k accuracy is the share of targets whose complement lands within the
//! first `k` ranks. Both directions (upper to lower, lower to upper) count,
//! so the reported accuracy is their average.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datastore::{DatasetManifest, Fragment, Group};
use crate::error::{Error, Result};
use crate::features::EdgeVector;

pub const DEFAULT_KS: [usize; 6] = [1, 5, 10, 20, 50, 100];

/// Similarity between a target edge and a candidate edge; larger is better.
pub trait Scorer: Sync {
    fn name(&self) -> &str;

    fn score(&self, target: &EdgeVector, candidate: &EdgeVector) -> f64;

    /// Maps a score onto [0, 1] for display; must preserve order.
    fn confidence(&self, score: f64) -> f64 {
        score
    }

    /// Scores a whole pool; override when per-target setup can be shared.
    fn score_pool(&self, target: &EdgeVector, pool: &[EdgeVector]) -> Vec<f64> {
        pool.iter().map(|c| self.score(target, c)).collect()
    }
}

impl<S: Scorer + ?Sized> Scorer for &S {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn score(&self, target: &EdgeVector, candidate: &EdgeVector) -> f64 {
        (**self).score(target, candidate)
    }
    fn confidence(&self, score: f64) -> f64 {
        (**self).confidence(score)
    }
    fn score_pool(&self, target: &EdgeVector, pool: &[EdgeVector]) -> Vec<f64> {
        (**self).score_pool(target, pool)
    }
}

/// Scores 1 for the true complement and 0 for everything else.
pub struct OracleScorer {
    complements: HashMap<String, String>,
}

impl OracleScorer {
    pub fn new(dataset: &DatasetManifest) -> Self {
        let complements = dataset
            .complements()
            .into_iter()
            .map(|(a, b)| (a.to_owned(), b.to_owned()))
            .collect();
        Self { complements }
    }
}

impl Scorer for OracleScorer {
    fn name(&self) -> &str {
        "oracle"
    }

    fn score(&self, target: &EdgeVector, candidate: &EdgeVector) -> f64 {
        let hit = self.complements.get(&target.source_fragment_id) == Some(&candidate.source_fragment_id);
        if hit {
            1.0
        } else {
            0.0
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub candidate_id: String,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub target_id: String,
    pub entries: Vec<RankedEntry>,
    /// 1-based rank of the true complement, if it is in the pool.
    pub rank_of_truth: Option<usize>,
}

/// Descending score, ties by ascending candidate id. NaN sorts last.
fn rank_order(a: &RankedEntry, b: &RankedEntry) -> Ordering {
    let key = |s: f64| if s.is_nan() { f64::NEG_INFINITY } else { s };
    key(b.score)
        .partial_cmp(&key(a.score))
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.candidate_id.cmp(&b.candidate_id))
}

/// Ranks pre-extracted candidate edges for one target edge.
pub fn rank_edges<S: Scorer + ?Sized>(
    target: &EdgeVector,
    pool: &[EdgeVector],
    scorer: &S,
    truth: Option<&str>,
) -> RankedList {
    let scores = scorer.score_pool(target, pool);
    let mut entries: Vec<RankedEntry> = pool
        .iter()
        .zip(scores)
        .map(|(c, score)| RankedEntry { candidate_id: c.source_fragment_id.clone(), score })
        .collect();
    entries.sort_by(rank_order);
    let rank_of_truth = truth.and_then(|t| entries.iter().position(|e| e.candidate_id == t).map(|p| p + 1));
    RankedList { target_id: target.source_fragment_id.clone(), entries, rank_of_truth }
}

/// Ranks `pool` for `target`. All pool members must be in the opposite
/// group, and `truth` names the complement when it is known.
pub fn rank_candidates<S: Scorer + ?Sized>(
    target: &Fragment,
    pool: &[Fragment],
    scorer: &S,
    truth: Option<&str>,
) -> Result<RankedList> {
    if pool.is_empty() {
        return Err(Error::Input("empty candidate pool".into()));
    }
    if let Some(bad) = pool.iter().find(|c| c.group == target.group) {
        return Err(Error::Protocol(format!(
            "candidate {:?} is in the same group ({}) as target {:?}",
            bad.id,
            bad.group.as_str(),
            target.id
        )));
    }
    let t = EdgeVector::from_fragment(target)?;
    let edges = pool.iter().map(EdgeVector::from_fragment).collect::<Result<Vec<_>>>()?;
    Ok(rank_edges(&t, &edges, scorer, truth))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopKReport {
    pub method: String,
    pub dataset: String,
    pub ks: Vec<usize>,
    /// Percentages, aligned with `ks`.
    pub accuracy: Vec<f64>,
    pub upper_pool: usize,
    pub lower_pool: usize,
    pub targets: usize,
    /// 1-based rank of the complement for each target, in target order.
    pub ranks: Vec<usize>,
}

impl TopKReport {
    pub fn accuracy_at(&self, k: usize) -> Option<f64> {
        self.ks.iter().position(|&x| x == k).map(|i| self.accuracy[i])
    }
}

impl fmt::Display for TopKReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:<10}", self.method)?;
        for (k, a) in self.ks.iter().zip(&self.accuracy) {
            write!(f, "  top{k:<3} {a:6.2}%")?;
        }
        write!(f, "  (pools {}u/{}l)", self.upper_pool, self.lower_pool)
    }
}

/// Edge vectors for every fragment, split by group and kept in manifest order.
pub struct EdgeTable {
    pub upper: Vec<EdgeVector>,
    pub lower: Vec<EdgeVector>,
}

impl EdgeTable {
    pub fn new(dataset: &DatasetManifest) -> Result<Self> {
        let extract = |g: Group| {
            dataset
                .fragments_in(g)
                .map(EdgeVector::from_fragment)
                .collect::<Result<Vec<_>>>()
        };
        Ok(Self { upper: extract(Group::Upper)?, lower: extract(Group::Lower)? })
    }

    pub fn group(&self, g: Group) -> &[EdgeVector] {
        match g {
            Group::Upper => &self.upper,
            Group::Lower => &self.lower,
        }
    }

    pub fn all(&self) -> impl Iterator<Item = &EdgeVector> {
        self.upper.iter().chain(&self.lower)
    }
}

pub fn evaluate_topk<S: Scorer + ?Sized>(dataset: &DatasetManifest, scorer: &S, ks: &[usize]) -> Result<TopKReport> {
    let table = EdgeTable::new(dataset)?;
    evaluate_topk_with(dataset, &table, scorer, ks)
}

/// As [`evaluate_topk`], reusing already-extracted edges.
pub fn evaluate_topk_with<S: Scorer + ?Sized>(
    dataset: &DatasetManifest,
    table: &EdgeTable,
    scorer: &S,
    ks: &[usize],
) -> Result<TopKReport> {
    if dataset.ground_truth.is_empty() {
        return Err(Error::Input(format!("dataset {:?} has no ground-truth pairs", dataset.name)));
    }
    let index: HashMap<&str, (Group, usize)> = [Group::Upper, Group::Lower]
        .into_iter()
        .flat_map(|g| {
            table.group(g).iter().enumerate().map(move |(i, e)| (e.source_fragment_id.as_str(), (g, i)))
        })
        .collect();

    // upper->lower for every pair, then lower->upper
    let mut jobs = Vec::with_capacity(2 * dataset.ground_truth.len());
    for (from, to) in [(Group::Upper, Group::Lower), (Group::Lower, Group::Upper)] {
        for gt in &dataset.ground_truth {
            let (target, truth) = match from {
                Group::Upper => (&gt.upper_id, &gt.lower_id),
                Group::Lower => (&gt.lower_id, &gt.upper_id),
            };
            let (_, ti) = index[target.as_str()];
            jobs.push((&table.group(from)[ti], to, truth.as_str()));
        }
    }

    let ranks: Vec<usize> = jobs
        .par_iter()
        .map(|&(target, to, truth)| {
            let list = rank_edges(target, table.group(to), scorer, Some(truth));
            list.rank_of_truth.expect("complement is always in the opposite pool")
        })
        .collect();

    let n = ranks.len() as f64;
    let accuracy = ks
        .iter()
        .map(|&k| 100.0 * ranks.iter().filter(|&&r| r <= k).count() as f64 / n)
        .collect();
    Ok(TopKReport {
        method: scorer.name().to_owned(),
        dataset: dataset.name.clone(),
        ks: ks.to_vec(),
        accuracy,
        upper_pool: table.upper.len(),
        lower_pool: table.lower.len(),
        targets: ranks.len(),
        ranks,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarityMatrix {
    pub method: String,
    pub upper_ids: Vec<String>,
    pub lower_ids: Vec<String>,
    /// `values[i][j] = score(upper_i, lower_j)`; the diagonal holds true pairs.
    pub values: Vec<Vec<f64>>,
    /// Mean of the diagonal minus mean of the off-diagonal entries.
    pub contrast: f64,
}

/// Scores every upper edge of the ground-truth pairs against every lower
/// edge, in ground-truth order.
pub fn similarity_matrix<S: Scorer + ?Sized>(dataset: &DatasetManifest, scorer: &S) -> Result<SimilarityMatrix> {
    let n = dataset.ground_truth.len();
    if n < 2 {
        return Err(Error::Input("similarity matrix needs at least 2 pairs".into()));
    }
    let edge = |id: &str| {
        let f = dataset.fragment(id).ok_or_else(|| Error::NotFound(id.to_owned()))?;
        EdgeVector::from_fragment(f)
    };
    let uppers = dataset.ground_truth.iter().map(|gt| edge(&gt.upper_id)).collect::<Result<Vec<_>>>()?;
    let lowers = dataset.ground_truth.iter().map(|gt| edge(&gt.lower_id)).collect::<Result<Vec<_>>>()?;
    let values: Vec<Vec<f64>> = uppers.par_iter().map(|u| scorer.score_pool(u, &lowers)).collect();

    let diag: f64 = (0..n).map(|i| values[i][i]).sum();
    let total: f64 = values.iter().flatten().sum();
    let contrast = diag / n as f64 - (total - diag) / (n * n - n) as f64;
    Ok(SimilarityMatrix {
        method: scorer.name().to_owned(),
        upper_ids: uppers.into_iter().map(|e| e.source_fragment_id).collect(),
        lower_ids: lowers.into_iter().map(|e| e.source_fragment_id).collect(),
        values,
        contrast,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub interference: usize,
    pub report: TopKReport,
}

/// Re-runs Top-k as the first `counts[i]` interference fragments of
/// `dataset` join the pools.
pub fn interference_sweep<S: Scorer + ?Sized>(
    dataset: &DatasetManifest,
    counts: &[usize],
    scorer: &S,
    ks: &[usize],
) -> Result<Vec<SweepPoint>> {
    if counts.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Input("interference counts must be non-decreasing".into()));
    }
    let available = dataset.interference().count();
    if let Some(&c) = counts.iter().find(|&&c| c > available) {
        return Err(Error::Input(format!("requested {c} interference fragments, dataset has {available}")));
    }
    counts
        .iter()
        .map(|&c| {
            let subset = dataset.with_interference_limit(c);
            Ok(SweepPoint { interference: c, report: evaluate_topk(&subset, scorer, ks)? })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::RandomScorer;
    use crate::physics::{generate_dataset, PhysicsParams};

    fn frag(id: &str, group: Group, edge: Vec<f64>) -> Fragment {
        Fragment { id: id.into(), group, edge, provenance: None }
    }

    struct ExactMatch;
    impl Scorer for ExactMatch {
        fn name(&self) -> &str {
            "exact"
        }
        fn score(&self, t: &EdgeVector, c: &EdgeVector) -> f64 {
            if t.values == c.values {
                1.0
            } else {
                0.0
            }
        }
    }

    #[test]
    fn single_candidate_ranks_first() {
        let t = frag("u", Group::Upper, vec![0.0, 1.0, 0.0]);
        let pool = vec![frag("l", Group::Lower, vec![0.0, 1.0, 0.0])];
        let list = rank_candidates(&t, &pool, &RandomScorer::new(0), Some("l")).unwrap();
        assert_eq!(list.rank_of_truth, Some(1));
    }

    #[test]
    fn protocol_and_empty_pool_errors() {
        let t = frag("u", Group::Upper, vec![0.0, 1.0]);
        let same = vec![frag("u2", Group::Upper, vec![0.0, 1.0])];
        assert!(matches!(rank_candidates(&t, &same, &RandomScorer::new(0), None), Err(Error::Protocol(_))));
        assert!(matches!(rank_candidates(&t, &[], &RandomScorer::new(0), None), Err(Error::Input(_))));
    }

    #[test]
    fn exact_match_finds_uncorroded_complement() {
        let params = PhysicsParams { corrosion_steps: 0, ..Default::default() };
        let ds = generate_dataset(&params, 10, 0, 3).unwrap();
        let pool: Vec<Fragment> = ds.fragments_in(Group::Lower).cloned().collect();
        for gt in &ds.ground_truth {
            let target = ds.fragment(&gt.upper_id).unwrap();
            let list = rank_candidates(target, &pool, &ExactMatch, Some(&gt.lower_id)).unwrap();
            assert_eq!(list.rank_of_truth, Some(1));
        }
    }

    #[test]
    fn random_order_matches_independent_sort() {
        let t = frag("t", Group::Lower, vec![0.0, 2.0, 1.0]);
        let pool: Vec<Fragment> = (0..5).map(|i| frag(&format!("c{i}"), Group::Upper, vec![i as f64, 0.0])).collect();
        let scorer = RandomScorer::new(17);
        let list = rank_candidates(&t, &pool, &scorer, None).unwrap();

        let mut expected: Vec<(f64, String)> = pool.iter().map(|c| (scorer.draw("t", &c.id), c.id.clone())).collect();
        expected.sort_by(|a, b| b.0.total_cmp(&a.0));
        let got: Vec<(f64, String)> = list.entries.iter().map(|e| (e.score, e.candidate_id.clone())).collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn ties_break_by_candidate_id() {
        struct Flat;
        impl Scorer for Flat {
            fn name(&self) -> &str {
                "flat"
            }
            fn score(&self, _: &EdgeVector, _: &EdgeVector) -> f64 {
                0.5
            }
        }
        let t = frag("t", Group::Upper, vec![0.0, 1.0]);
        let pool: Vec<Fragment> = ["c", "a", "b"].iter().map(|id| frag(id, Group::Lower, vec![0.0, 1.0])).collect();
        let list = rank_candidates(&t, &pool, &Flat, Some("b")).unwrap();
        let ids: Vec<&str> = list.entries.iter().map(|e| e.candidate_id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "c"]);
        assert_eq!(list.rank_of_truth, Some(2));
    }

    #[test]
    fn oracle_scores_full_marks() {
        let ds = generate_dataset(&PhysicsParams::default(), 20, 7, 2).unwrap();
        let report = evaluate_topk(&ds, &OracleScorer::new(&ds), &DEFAULT_KS).unwrap();
        assert!(report.accuracy.iter().all(|&a| a == 100.0));
        assert_eq!(report.targets, 40);
        assert_eq!((report.upper_pool, report.lower_pool), (24, 23));

        let m = similarity_matrix(&ds, &OracleScorer::new(&ds)).unwrap();
        assert_eq!(m.contrast, 1.0);
        assert_eq!(m.values[3][3], 1.0);
        assert_eq!(m.values[3][4], 0.0);
    }

    #[test]
    fn accuracy_is_monotone_and_complete_at_pool_size() {
        let ds = generate_dataset(&PhysicsParams::default(), 30, 0, 4).unwrap();
        let report = evaluate_topk(&ds, &RandomScorer::new(9), &[1, 5, 10, 20, 30]).unwrap();
        assert!(report.accuracy.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(report.accuracy_at(30), Some(100.0));
        assert!(report.ranks.iter().all(|&r| (1..=30).contains(&r)));
    }

    #[test]
    fn sweep_at_zero_equals_base_eval() {
        let ds = generate_dataset(&PhysicsParams::default(), 20, 40, 4).unwrap();
        let scorer = RandomScorer::new(1);
        let sweep = interference_sweep(&ds, &[0, 20, 40], &scorer, &DEFAULT_KS).unwrap();
        let base = evaluate_topk(&ds.with_interference_limit(0), &scorer, &DEFAULT_KS).unwrap();
        assert_eq!(sweep[0].report.accuracy, base.accuracy);
        assert_eq!(sweep[2].report.upper_pool + sweep[2].report.lower_pool, 80);
        assert!(interference_sweep(&ds, &[20, 0], &scorer, &DEFAULT_KS).is_err());
        assert!(interference_sweep(&ds, &[41], &scorer, &DEFAULT_KS).is_err());
    }
}
