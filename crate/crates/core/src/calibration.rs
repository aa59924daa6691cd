//! Genetic-algorithm calibration of the physics parameters.
//!
//! A candidate parameter set is scored by generating edges with it, pooling
//! them with a reference edge set, projecting the union onto its top two
//! principal directions and measuring how well the two sources separate with
//! the silhouette coefficient. A score near zero means the generated edges
//! are indistinguishable from the reference; the GA minimizes `|silhouette|`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{extract_edge_vector, EdgeRole, EdgeVector, EDGE_DIM};
use crate::physics::{derive_seed, generate_pair, PhysicsParams};

const PCA_MAX_ITERS: usize = 200;
const PCA_TOL: f64 = 1e-9;
/// Eigenvalues below this fraction of the total variance count as zero.
const PCA_RANK_TOL: f64 = 1e-12;

/// Projects `points` onto their top two principal directions.
///
/// Power iteration with deflation on the sample covariance. The start
/// vector is fixed, so the projection is deterministic.
pub fn pca_2d<T: AsRef<[f64]>>(points: &[T]) -> Result<Vec<[f64; 2]>> {
    if points.len() < 3 {
        return Err(Error::Input(format!("pca needs at least 3 points, got {}", points.len())));
    }
    let d = points[0].as_ref().len();
    if d < 2 || points.iter().any(|p| p.as_ref().len() != d) {
        return Err(Error::Input("pca points must share a dimension >= 2".into()));
    }
    let n = points.len() as f64;
    let mut mean = vec![0.0; d];
    for p in points {
        for (m, x) in mean.iter_mut().zip(p.as_ref()) {
            *m += x / n;
        }
    }
    let centered: Vec<Vec<f64>> =
        points.iter().map(|p| p.as_ref().iter().zip(&mean).map(|(x, m)| x - m).collect()).collect();

    let mut cov = vec![0.0; d * d];
    for c in &centered {
        for i in 0..d {
            let ci = c[i];
            for j in i..d {
                cov[i * d + j] += ci * c[j];
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            let v = cov[i * d + j] / (n - 1.0);
            cov[i * d + j] = v;
            cov[j * d + i] = v;
        }
    }
    let trace: f64 = (0..d).map(|i| cov[i * d + i]).sum();
    if trace.is_nan() || trace <= 0.0 {
        return Err(Error::Degenerate("all points coincide".into()));
    }

    let mut axes: Vec<Vec<f64>> = Vec::with_capacity(2);
    for _ in 0..2 {
        let (lambda, v) = power_iteration(&cov, d, &axes);
        if lambda <= PCA_RANK_TOL * trace {
            return Err(Error::Degenerate(format!("fewer than 2 nonzero principal components (lambda = {lambda:e})")));
        }
        for i in 0..d {
            for j in 0..d {
                cov[i * d + j] -= lambda * v[i] * v[j];
            }
        }
        axes.push(v);
    }

    Ok(centered
        .iter()
        .map(|c| {
            let dot = |a: &[f64]| a.iter().zip(c).map(|(x, y)| x * y).sum::<f64>();
            [dot(&axes[0]), dot(&axes[1])]
        })
        .collect())
}

fn power_iteration(m: &[f64], d: usize, found: &[Vec<f64>]) -> (f64, Vec<f64>) {
    // fixed, non-symmetric start so no principal direction is orthogonal to it
    let mut v: Vec<f64> = (0..d).map(|i| 1.0 + 0.5 * ((i * 7919) % 13) as f64 / 13.0).collect();
    let orthonormalize = |v: &mut Vec<f64>| {
        for u in found {
            let p: f64 = u.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(u).for_each(|(x, y)| *x -= p * y);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        norm
    };
    orthonormalize(&mut v);
    let mut w = vec![0.0; d];
    for _ in 0..PCA_MAX_ITERS {
        for i in 0..d {
            w[i] = m[i * d..(i + 1) * d].iter().zip(&v).map(|(a, b)| a * b).sum();
        }
        if orthonormalize(&mut w) == 0.0 {
            break;
        }
        let delta = w.iter().zip(&v).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        std::mem::swap(&mut v, &mut w);
        if delta < PCA_TOL {
            break;
        }
    }
    let lambda: f64 = (0..d).map(|i| v[i] * m[i * d..(i + 1) * d].iter().zip(&v).map(|(a, b)| a * b).sum::<f64>()).sum();
    (lambda, v)
}

/// Mean silhouette coefficient for a two-way labelling, Euclidean distance.
pub fn silhouette(points: &[[f64; 2]], labels: &[bool]) -> Result<f64> {
    if points.len() != labels.len() {
        return Err(Error::Input("points and labels differ in length".into()));
    }
    let ones = labels.iter().filter(|&&l| l).count();
    let zeros = labels.len() - ones;
    if ones < 2 || zeros < 2 {
        return Err(Error::Input(format!("silhouette needs >= 2 points per cluster, got {zeros} and {ones}")));
    }
    let dist = |a: &[f64; 2], b: &[f64; 2]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
    let total: f64 = points
        .par_iter()
        .zip(labels)
        .enumerate()
        .map(|(i, (p, &li))| {
            let (mut own, mut other) = (0.0, 0.0);
            for (j, (q, &lj)) in points.iter().zip(labels).enumerate() {
                if i == j {
                    continue;
                }
                if lj == li {
                    own += dist(p, q);
                } else {
                    other += dist(p, q);
                }
            }
            let (own_n, other_n) = if li { (ones - 1, zeros) } else { (zeros - 1, ones) };
            let a = own / own_n as f64;
            let b = other / other_n as f64;
            let denom = a.max(b);
            if denom > 0.0 {
                (b - a) / denom
            } else {
                0.0
            }
        })
        .sum();
    Ok(total / points.len() as f64)
}

/// Per-gene search range. Genes, in order: theta_max, sigma_theta, rho,
/// beta, base_rate, exposure_rate, corrosion_steps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneBounds {
    pub lower: [f64; 7],
    pub upper: [f64; 7],
}

impl Default for GeneBounds {
    fn default() -> Self {
        Self {
            lower: [0.2, 0.05, 0.0, 0.0, 0.0, 0.0, 0.0],
            upper: [1.45, 1.0, 0.95, 0.3, 0.1, 0.45, 40.0],
        }
    }
}

impl GeneBounds {
    pub fn range(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }

    pub fn contains(&self, g: &Genome) -> bool {
        g.genes.iter().enumerate().all(|(i, &x)| x >= self.lower[i] && x <= self.upper[i])
    }

    fn clamp(&self, i: usize, x: f64) -> f64 {
        x.clamp(self.lower[i], self.upper[i])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Genome {
    pub genes: [f64; 7],
}

impl Genome {
    pub fn from_params(p: &PhysicsParams) -> Self {
        Self {
            genes: [
                p.theta_max,
                p.sigma_theta,
                p.rho,
                p.beta,
                p.base_rate,
                p.exposure_rate,
                p.corrosion_steps as f64,
            ],
        }
    }

    /// Overlays the genes on `base`; the step count is rounded.
    pub fn decode(&self, base: &PhysicsParams) -> PhysicsParams {
        let g = &self.genes;
        PhysicsParams {
            theta_max: g[0],
            sigma_theta: g[1],
            rho: g[2],
            beta: g[3],
            base_rate: g[4],
            exposure_rate: g[5],
            corrosion_steps: g[6].round().max(0.0) as u32,
            ..base.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceSet {
    pub edges: Vec<EdgeVector>,
}

impl ReferenceSet {
    pub fn new(edges: Vec<EdgeVector>) -> Result<Self> {
        if edges.is_empty() {
            return Err(Error::Input("reference set is empty".into()));
        }
        if let Some(e) = edges.iter().find(|e| e.values.len() != EDGE_DIM) {
            return Err(Error::Input(format!("reference edge {:?} is not {EDGE_DIM}-d", e.source_fragment_id)));
        }
        Ok(Self { edges })
    }

    /// Every fragment edge in a manifest.
    pub fn from_manifest(m: &crate::datastore::DatasetManifest) -> Result<Self> {
        Self::new(m.fragments.iter().map(EdgeVector::from_fragment).collect::<Result<_>>()?)
    }

    /// `count` edges from `params`, one per simulated slip, alternating the
    /// upper and lower side.
    pub fn synthetic(params: &PhysicsParams, count: usize, seed: u64) -> Result<Self> {
        Self::new(synthetic_edges(params, count, seed)?)
    }
}

const FITNESS_STREAM: u64 = 3;

fn synthetic_edges(params: &PhysicsParams, count: usize, seed: u64) -> Result<Vec<EdgeVector>> {
    (0..count)
        .map(|i| {
            let pair = generate_pair(params, derive_seed(seed, FITNESS_STREAM, i as u64))?;
            let (edge, role) = if i % 2 == 0 {
                (&pair.upper_edge, EdgeRole::UpperBottom)
            } else {
                (&pair.lower_edge, EdgeRole::LowerTop)
            };
            let mut v = extract_edge_vector(edge, role)?;
            v.source_fragment_id = format!("gen{i}");
            Ok(v)
        })
        .collect()
}

/// Absolute silhouette between `m_samples` edges generated from the genome
/// and the reference set, in PCA-2 space. Lower is better.
pub fn fitness(genome: &Genome, base: &PhysicsParams, reference: &ReferenceSet, m_samples: usize, seed: u64) -> Result<f64> {
    if m_samples < 3 {
        return Err(Error::Input(format!("m_samples must be >= 3, got {m_samples}")));
    }
    let params = genome.decode(base);
    params.validate()?;
    let generated = synthetic_edges(&params, m_samples, seed)?;
    let pooled: Vec<&[f64]> =
        generated.iter().chain(&reference.edges).map(|e| e.values.as_slice()).collect();
    let labels: Vec<bool> = (0..pooled.len()).map(|i| i < generated.len()).collect();
    let projected = match pca_2d(&pooled) {
        Ok(p) => p,
        // everything flat: nothing to tell apart
        Err(Error::Degenerate(_)) => return Ok(0.0),
        Err(e) => return Err(e),
    };
    Ok(silhouette(&projected, &labels)?.abs())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    pub pop_size: usize,
    pub generations: usize,
    pub tournament_k: usize,
    pub crossover_rate: f64,
    /// Mutation standard deviation as a fraction of each gene's range.
    pub mutation_sigma: f64,
    pub mutation_rate: f64,
    pub elitism: usize,
    /// Generated edges per fitness evaluation.
    pub m_samples: usize,
    pub seed: u64,
    pub bounds: GeneBounds,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            pop_size: 24,
            generations: 30,
            tournament_k: 3,
            crossover_rate: 0.9,
            mutation_sigma: 0.1,
            mutation_rate: 0.2,
            elitism: 1,
            m_samples: 200,
            seed: 0,
            bounds: GeneBounds::default(),
        }
    }
}

impl GaConfig {
    fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Input(m.into()));
        if self.pop_size < 4 {
            return fail("pop_size must be >= 4");
        }
        if self.generations < 1 {
            return fail("generations must be >= 1");
        }
        if self.tournament_k < 1 || self.tournament_k > self.pop_size {
            return fail("tournament_k must lie in [1, pop_size]");
        }
        if self.elitism >= self.pop_size {
            return fail("elitism must be smaller than pop_size");
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) || !(0.0..=1.0).contains(&self.mutation_rate) {
            return fail("rates must lie in [0, 1]");
        }
        if self.mutation_sigma.is_nan() || self.mutation_sigma < 0.0 {
            return fail("mutation_sigma must be >= 0");
        }
        if self.bounds.lower.iter().zip(&self.bounds.upper).any(|(l, u)| l.partial_cmp(u).is_none_or(|o| o.is_gt())) {
            return fail("gene bounds must satisfy lower <= upper");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub best: Genome,
    pub best_fitness: f64,
    /// Best fitness after each generation (entry 0 is the initial population).
    pub history: Vec<f64>,
    pub params: PhysicsParams,
}

/// Runs the GA from a uniformly random population.
pub fn calibrate(reference: &ReferenceSet, base: &PhysicsParams, config: &GaConfig) -> Result<CalibrationResult> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let b = &config.bounds;
    let population: Vec<Genome> = (0..config.pop_size)
        .map(|_| Genome { genes: std::array::from_fn(|i| b.lower[i] + rng.gen::<f64>() * b.range(i)) })
        .collect();
    calibrate_from(population, reference, base, config, &mut rng)
}

/// Runs the GA from a given initial population.
pub fn calibrate_from(
    mut population: Vec<Genome>,
    reference: &ReferenceSet,
    base: &PhysicsParams,
    config: &GaConfig,
    rng: &mut ChaCha8Rng,
) -> Result<CalibrationResult> {
    config.validate()?;
    if population.len() != config.pop_size {
        return Err(Error::Input(format!("population has {} genomes, pop_size is {}", population.len(), config.pop_size)));
    }
    let b = &config.bounds;
    if let Some(g) = population.iter().find(|g| !b.contains(g)) {
        return Err(Error::Input(format!("initial genome {:?} is out of bounds", g.genes)));
    }
    // one fitness seed for the whole run keeps scores comparable across generations
    let fitness_seed = derive_seed(config.seed, FITNESS_STREAM, u64::MAX);
    let evaluate = |pop: &[Genome]| -> Result<Vec<f64>> {
        pop.par_iter().map(|g| fitness(g, base, reference, config.m_samples, fitness_seed)).collect()
    };

    let mut scores = evaluate(&population)?;
    let mut history = vec![scores.iter().copied().fold(f64::INFINITY, f64::min)];

    for _ in 0..config.generations {
        let mut ranked: Vec<usize> = (0..population.len()).collect();
        ranked.sort_by(|&i, &j| scores[i].total_cmp(&scores[j]).then(i.cmp(&j)));

        let mut next: Vec<Genome> = ranked[..config.elitism].iter().map(|&i| population[i].clone()).collect();
        let elite_scores: Vec<f64> = ranked[..config.elitism].iter().map(|&i| scores[i]).collect();

        while next.len() < config.pop_size {
            let p1 = &population[tournament(&scores, config.tournament_k, rng)];
            let p2 = &population[tournament(&scores, config.tournament_k, rng)];
            let (mut c1, mut c2) = if rng.gen::<f64>() < config.crossover_rate {
                blend_crossover(p1, p2, b, rng)
            } else {
                (p1.clone(), p2.clone())
            };
            mutate(&mut c1, config, rng);
            mutate(&mut c2, config, rng);
            next.push(c1);
            if next.len() < config.pop_size {
                next.push(c2);
            }
        }

        let fresh = evaluate(&next[config.elitism..])?;
        scores = elite_scores.into_iter().chain(fresh).collect();
        population = next;
        history.push(scores.iter().copied().fold(f64::INFINITY, f64::min));
    }

    let best_idx = (0..population.len()).min_by(|&i, &j| scores[i].total_cmp(&scores[j]).then(i.cmp(&j))).unwrap();
    let best = population[best_idx].clone();
    Ok(CalibrationResult { params: best.decode(base), best, best_fitness: scores[best_idx], history })
}

fn tournament(scores: &[f64], k: usize, rng: &mut ChaCha8Rng) -> usize {
    (0..k)
        .map(|_| rng.gen_range(0..scores.len()))
        .min_by(|&i, &j| scores[i].total_cmp(&scores[j]).then(i.cmp(&j)))
        .unwrap()
}

/// BLX-0.5: each child gene is uniform on the parents' interval widened by
/// half its length on both sides, then clamped.
fn blend_crossover(a: &Genome, b: &Genome, bounds: &GeneBounds, rng: &mut ChaCha8Rng) -> (Genome, Genome) {
    const ALPHA: f64 = 0.5;
    let mut child = || Genome {
        genes: std::array::from_fn(|i| {
            let (lo, hi) = (a.genes[i].min(b.genes[i]), a.genes[i].max(b.genes[i]));
            let span = hi - lo;
            let x = lo - ALPHA * span + rng.gen::<f64>() * (1.0 + 2.0 * ALPHA) * span;
            bounds.clamp(i, x)
        }),
    };
    (child(), child())
}

fn mutate(g: &mut Genome, config: &GaConfig, rng: &mut ChaCha8Rng) {
    let b = &config.bounds;
    for i in 0..g.genes.len() {
        if rng.gen::<f64>() < config.mutation_rate {
            let sigma = config.mutation_sigma * b.range(i);
            if sigma > 0.0 {
                let step: f64 = Normal::new(0.0, sigma).expect("finite sigma").sample(rng);
                g.genes[i] = b.clamp(i, g.genes[i] + step);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, SymmetricEigen};

    fn pairwise(points: &[[f64; 2]]) -> Vec<f64> {
        let mut out = Vec::new();
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                out.push(((points[i][0] - points[j][0]).powi(2) + (points[i][1] - points[j][1]).powi(2)).sqrt());
            }
        }
        out
    }

    #[test]
    fn planar_points_keep_their_distances() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let planar: Vec<[f64; 2]> = (0..12).map(|_| [rng.gen_range(-5.0..5.0), rng.gen_range(-1.0..1.0)]).collect();
        let embedded: Vec<Vec<f64>> = planar
            .iter()
            .map(|p| {
                let mut v = vec![0.0; 64];
                v[3] = p[0];
                v[40] = p[1];
                v
            })
            .collect();
        let proj = pca_2d(&embedded).unwrap();
        for (a, b) in pairwise(&proj).iter().zip(pairwise(&planar)) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn matches_dense_eigensolver() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pts: Vec<Vec<f64>> = (0..10).map(|_| (0..64).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let proj = pca_2d(&pts).unwrap();

        let x = DMatrix::from_fn(10, 64, |i, j| pts[i][j]);
        let mean = x.row_mean();
        let centered = DMatrix::from_fn(10, 64, |i, j| x[(i, j)] - mean[j]);
        let cov = centered.transpose() * &centered / 9.0;
        let eig = SymmetricEigen::new(cov);
        let mut order: Vec<usize> = (0..64).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let oracle: Vec<[f64; 2]> = (0..10)
            .map(|i| {
                let row = centered.row(i);
                [row.dot(&eig.eigenvectors.column(order[0]).transpose()), row.dot(&eig.eigenvectors.column(order[1]).transpose())]
            })
            .collect();
        for (a, b) in pairwise(&proj).iter().zip(pairwise(&oracle)) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn identical_points_are_degenerate() {
        let pts = vec![vec![1.0; 64]; 5];
        assert!(matches!(pca_2d(&pts), Err(Error::Degenerate(_))));
        // collinear: only one nonzero component
        let line: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64; 64]).collect();
        assert!(matches!(pca_2d(&line), Err(Error::Degenerate(_))));
        assert!(pca_2d(&pts[..2]).is_err());
    }

    #[test]
    fn silhouette_hand_example() {
        let pts = [[0.0, 0.0], [1.0, 0.0], [10.0, 0.0], [11.0, 0.0]];
        let s = silhouette(&pts, &[true, true, false, false]).unwrap();
        let want = ((10.5 - 1.0) / 10.5 + (9.5 - 1.0) / 9.5) / 2.0;
        assert!((s - want).abs() < 1e-12);
        assert!((s - 0.9).abs() < 1e-3);
    }

    #[test]
    fn silhouette_of_interleaved_sets_is_near_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let base: Vec<[f64; 2]> = (0..100).map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
        let pts: Vec<[f64; 2]> = base.iter().chain(&base).copied().collect();
        let labels: Vec<bool> = (0..200).map(|i| i < 100).collect();
        let s = silhouette(&pts, &labels).unwrap();
        assert!(s.abs() < 0.05, "{s}");
    }

    #[test]
    fn silhouette_errors() {
        let pts = [[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]];
        assert!(silhouette(&pts, &[true, true, true]).is_err());
        assert!(silhouette(&pts, &[true, false, false]).is_err());
    }

    #[test]
    fn self_fitness_is_near_zero() {
        let params = PhysicsParams::default();
        let reference = ReferenceSet::synthetic(&params, 200, 77).unwrap();
        let genome = Genome::from_params(&params);
        // same seed stream: identical point sets
        let same = fitness(&genome, &params, &reference, 200, 77).unwrap();
        assert!(same < 0.1, "{same}");
        // fresh draws from the same distribution
        let fresh = fitness(&genome, &params, &reference, 200, 5).unwrap();
        assert!(fresh < 0.1, "{fresh}");
        assert_eq!(fresh, fitness(&genome, &params, &reference, 200, 5).unwrap());
    }

    #[test]
    fn uncorroded_vs_heavily_corroded_separates() {
        // worn flat: the reference collapses onto the PCA origin
        let heavy = PhysicsParams { exposure_rate: 0.45, corrosion_steps: 200, ..PhysicsParams::default() };
        let reference = ReferenceSet::synthetic(&heavy, 200, 1).unwrap();
        let mut genome = Genome::from_params(&heavy);
        genome.genes[6] = 0.0;
        let f = fitness(&genome, &heavy, &reference, 200, 2).unwrap();
        assert!(f > 0.3, "{f}");
        assert!(f <= 1.0);
    }

    #[test]
    fn fixed_point_population_stays_put() {
        let params = PhysicsParams::default();
        let reference = ReferenceSet::synthetic(&params, 60, 1).unwrap();
        let g = Genome::from_params(&params);
        let config = GaConfig { pop_size: 6, generations: 3, mutation_sigma: 0.0, m_samples: 60, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = calibrate_from(vec![g.clone(); 6], &reference, &params, &config, &mut rng).unwrap();
        assert_eq!(out.best, g);
        assert!(out.history.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn short_run_is_monotone_and_in_bounds() {
        let hidden = PhysicsParams { sigma_theta: 0.3, rho: 0.7, ..PhysicsParams::default() };
        let reference = ReferenceSet::synthetic(&hidden, 80, 9).unwrap();
        let config = GaConfig { pop_size: 8, generations: 4, m_samples: 80, seed: 3, ..Default::default() };
        let out = calibrate(&reference, &PhysicsParams::default(), &config).unwrap();
        assert_eq!(out.history.len(), 5);
        assert!(out.history.windows(2).all(|w| w[1] <= w[0]));
        assert!(config.bounds.contains(&out.best));
        assert_eq!(out, calibrate(&reference, &PhysicsParams::default(), &config).unwrap());
        assert!(calibrate(&reference, &PhysicsParams::default(), &GaConfig { pop_size: 3, ..config }).is_err());
    }
}
