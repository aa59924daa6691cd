//! Transverse fracture across discrete fiber bundles, followed by
//! exposure-driven corrosion of both fracture edges.
//!
//! A slip is modelled as `n_fibers` vertical bundles of width `w`. The crack
//! crosses them left to right; bundle `i` breaks at height `h[i]`, reached
//! from `h[i-1]` along a fracture angle `theta[i]`. The angle distribution is
//! shaped by the stress field left at the previous break endpoint: it
//! persists the previous angle (`rho`) and is pulled back toward the initial
//! crack plane (`beta`).
//!
//! Corrosion then removes material fastest where an edge protrudes past its
//! neighbours. Exposure is the sum of the positive height differences to the
//! adjacent fibers, so flat stretches only lose the uniform base rate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::datastore::{DatasetManifest, Fragment, FragmentProvenance, GroundTruthPair, Group};
use crate::error::{Error, Result};

/// Rejection attempts before a truncated-normal draw is clamped to the bound.
const MAX_REJECTIONS: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicsParams {
    pub n_fibers: usize,
    /// Width of one fiber bundle, in length units.
    pub fiber_width: f64,
    /// Bound on |theta| per fiber, radians.
    pub theta_max: f64,
    pub sigma_theta: f64,
    /// Persistence of the previous fiber's fracture angle, in [0, 1).
    pub rho: f64,
    /// Mean-reversion toward the initial crack plane, per length unit.
    pub beta: f64,
    pub base_rate: f64,
    pub exposure_rate: f64,
    pub corrosion_steps: u32,
    pub seed: u64,
}

impl Default for PhysicsParams {
    fn default() -> Self {
        Self {
            n_fibers: 64,
            fiber_width: 1.0,
            theta_max: 1.2,
            sigma_theta: 0.5,
            rho: 0.5,
            beta: 0.04,
            base_rate: 0.02,
            exposure_rate: 0.2,
            corrosion_steps: 20,
            seed: 0,
        }
    }
}

impl PhysicsParams {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::ParamDomain(msg));
        if self.n_fibers < 2 {
            return fail(format!("n_fibers must be >= 2, got {}", self.n_fibers));
        }
        if !(self.fiber_width > 0.0 && self.fiber_width.is_finite()) {
            return fail(format!("fiber_width must be > 0, got {}", self.fiber_width));
        }
        if !(self.theta_max > 0.0 && self.theta_max < std::f64::consts::FRAC_PI_2) {
            return fail(format!("theta_max must lie in (0, pi/2), got {}", self.theta_max));
        }
        if !(self.sigma_theta > 0.0 && self.sigma_theta.is_finite()) {
            return fail(format!("sigma_theta must be > 0, got {}", self.sigma_theta));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return fail(format!("rho must lie in [0, 1), got {}", self.rho));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return fail(format!("beta must be >= 0, got {}", self.beta));
        }
        if !(self.base_rate >= 0.0 && self.base_rate.is_finite()) {
            return fail(format!("base_rate must be >= 0, got {}", self.base_rate));
        }
        if !(self.exposure_rate >= 0.0 && self.exposure_rate.is_finite()) {
            return fail(format!("exposure_rate must be >= 0, got {}", self.exposure_rate));
        }
        Ok(())
    }

    /// Largest height change a single fiber step can produce.
    pub fn max_step(&self) -> f64 {
        self.fiber_width * self.theta_max.tan()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FractureCurve {
    pub heights: Vec<f64>,
    pub angles: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FragmentPair {
    pub pair_id: String,
    /// Bottom edge of the upper fragment.
    pub upper_edge: Vec<f64>,
    /// Top edge of the lower fragment.
    pub lower_edge: Vec<f64>,
    pub provenance: PhysicsParams,
}

/// Draws the crack path across all fibers.
pub fn simulate_fracture<R: Rng + ?Sized>(params: &PhysicsParams, rng: &mut R) -> Result<FractureCurve> {
    params.validate()?;
    let n = params.n_fibers;
    let noise = Normal::new(0.0, params.sigma_theta)
        .map_err(|e| Error::ParamDomain(format!("sigma_theta: {e}")))?;

    let mut heights = Vec::with_capacity(n);
    let mut angles = Vec::with_capacity(n);
    angles.push(truncated_draw(0.0, &noise, params.theta_max, rng));
    heights.push(0.0);

    for i in 1..n {
        let mean = params.rho * angles[i - 1] - params.beta * heights[i - 1];
        let theta = truncated_draw(mean, &noise, params.theta_max, rng);
        angles.push(theta);
        heights.push(heights[i - 1] + params.fiber_width * theta.tan());
    }
    Ok(FractureCurve { heights, angles })
}

fn truncated_draw<R: Rng + ?Sized>(mean: f64, noise: &Normal<f64>, bound: f64, rng: &mut R) -> f64 {
    let mut last = mean;
    for _ in 0..MAX_REJECTIONS {
        last = mean + noise.sample(rng);
        if last.abs() <= bound {
            return last;
        }
    }
    last.clamp(-bound, bound)
}

/// Exposure of each fiber on an edge whose protrusions point toward
/// `+height` (`sign = 1`) or `-height` (`sign = -1`).
fn exposure(edge: &[f64], sign: f64) -> Vec<f64> {
    let relu = |x: f64| x.max(0.0);
    let n = edge.len();
    (0..n)
        .map(|i| {
            let mut e = 0.0;
            if i > 0 {
                e += relu(sign * (edge[i] - edge[i - 1]));
            }
            if i + 1 < n {
                e += relu(sign * (edge[i] - edge[i + 1]));
            }
            e
        })
        .collect()
}

/// One synchronous corrosion step on a lower fragment's top edge.
pub fn corrode_lower_step(edge: &mut [f64], base_rate: f64, exposure_rate: f64) {
    let exp = exposure(edge, 1.0);
    for (g, e) in edge.iter_mut().zip(exp) {
        *g -= base_rate + exposure_rate * e;
    }
}

/// One synchronous corrosion step on an upper fragment's bottom edge.
pub fn corrode_upper_step(edge: &mut [f64], base_rate: f64, exposure_rate: f64) {
    let exp = exposure(edge, -1.0);
    for (u, e) in edge.iter_mut().zip(exp) {
        *u += base_rate + exposure_rate * e;
    }
}

/// Runs `params.corrosion_steps` steps on both edges of the pair.
pub fn corrode_pair(pair: &FragmentPair, params: &PhysicsParams) -> Result<FragmentPair> {
    params.validate()?;
    if pair.upper_edge.len() != pair.lower_edge.len() {
        return Err(Error::Input(format!(
            "edge lengths differ: upper {}, lower {}",
            pair.upper_edge.len(),
            pair.lower_edge.len()
        )));
    }
    let mut out = pair.clone();
    for _ in 0..params.corrosion_steps {
        corrode_upper_step(&mut out.upper_edge, params.base_rate, params.exposure_rate);
        corrode_lower_step(&mut out.lower_edge, params.base_rate, params.exposure_rate);
    }
    Ok(out)
}

/// Fractures one slip and corrodes both resulting edges.
pub fn generate_pair(params: &PhysicsParams, seed: u64) -> Result<FragmentPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let curve = simulate_fracture(params, &mut rng)?;
    let provenance = PhysicsParams { seed, ..params.clone() };
    let fresh = FragmentPair {
        pair_id: format!("{seed:016x}"),
        upper_edge: curve.heights.clone(),
        lower_edge: curve.heights,
        provenance,
    };
    corrode_pair(&fresh, params)
}

/// Mixes a base seed with a stream tag and index (splitmix64 finaliser), so
/// every pair in every dataset gets its own independent RNG stream.
pub fn derive_seed(base: u64, stream: u64, index: u64) -> u64 {
    let mut z = base
        ^ stream.wrapping_mul(0xD1B5_4A32_D192_ED03)
        ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const PAIR_STREAM: u64 = 1;
const INTERFERENCE_STREAM: u64 = 2;

/// Builds a manifest of `n_pairs` true pairs plus `n_interference` unpaired
/// fragments. Interference fragments alternate between the upper and lower
/// group, starting with upper.
pub fn generate_dataset(
    params: &PhysicsParams,
    n_pairs: usize,
    n_interference: usize,
    seed: u64,
) -> Result<DatasetManifest> {
    params.validate()?;
    if n_pairs == 0 {
        return Err(Error::Input("n_pairs must be >= 1".into()));
    }
    let mut fragments = Vec::with_capacity(2 * n_pairs + n_interference);
    let mut ground_truth = Vec::with_capacity(n_pairs);

    for i in 0..n_pairs {
        let pair_seed = derive_seed(seed, PAIR_STREAM, i as u64);
        let pair = generate_pair(params, pair_seed)?;
        let pair_id = format!("P{i:05}");
        let upper_id = format!("{pair_id}-U");
        let lower_id = format!("{pair_id}-L");
        let provenance = FragmentProvenance { seed: pair_seed, source_pair: pair_id };
        fragments.push(Fragment {
            id: upper_id.clone(),
            group: Group::Upper,
            edge: pair.upper_edge,
            provenance: Some(provenance.clone()),
        });
        fragments.push(Fragment {
            id: lower_id.clone(),
            group: Group::Lower,
            edge: pair.lower_edge,
            provenance: Some(provenance),
        });
        ground_truth.push(GroundTruthPair { upper_id, lower_id });
    }

    for j in 0..n_interference {
        let pair_seed = derive_seed(seed, INTERFERENCE_STREAM, j as u64);
        let pair = generate_pair(params, pair_seed)?;
        let source_pair = format!("X{j:05}");
        let (group, edge, suffix) = if j % 2 == 0 {
            (Group::Upper, pair.upper_edge, "U")
        } else {
            (Group::Lower, pair.lower_edge, "L")
        };
        fragments.push(Fragment {
            id: format!("{source_pair}-{suffix}"),
            group,
            edge,
            provenance: Some(FragmentProvenance { seed: pair_seed, source_pair }),
        });
    }

    let manifest = DatasetManifest::new(
        format!("synthetic-{n_pairs}p-{n_interference}i-s{seed}"),
        Some(PhysicsParams { seed, ..params.clone() }),
        fragments,
        ground_truth,
    );
    manifest.validate()?;
    Ok(manifest)
}
