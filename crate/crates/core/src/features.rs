//! Fixed-length edge descriptors.

use serde::{Deserialize, Serialize};

use crate::datastore::{Fragment, Group};
use crate::error::{Error, Result};

pub const EDGE_DIM: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeRole {
    /// Bottom edge of an upper fragment.
    UpperBottom,
    /// Top edge of a lower fragment.
    LowerTop,
}

impl From<Group> for EdgeRole {
    fn from(g: Group) -> Self {
        match g {
            Group::Upper => EdgeRole::UpperBottom,
            Group::Lower => EdgeRole::LowerTop,
        }
    }
}

/// A fracture edge resampled to [`EDGE_DIM`] points and mean-centered.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeVector {
    pub values: Vec<f64>,
    pub source_fragment_id: String,
    pub role: EdgeRole,
}

impl AsRef<[f64]> for EdgeVector {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

impl EdgeVector {
    pub fn from_fragment(fragment: &Fragment) -> Result<Self> {
        let mut v = extract_edge_vector(&fragment.edge, fragment.group.into())?;
        v.source_fragment_id = fragment.id.clone();
        Ok(v)
    }
}

/// Linear interpolation of `edge` at `n` evenly spaced positions spanning
/// the first to the last sample.
pub fn resample(edge: &[f64], n: usize) -> Vec<f64> {
    let last = (edge.len() - 1) as f64;
    (0..n)
        .map(|j| {
            let t = if n == 1 { 0.0 } else { j as f64 * last / (n - 1) as f64 };
            let lo = (t.floor() as usize).min(edge.len() - 2);
            let frac = t - lo as f64;
            edge[lo] + frac * (edge[lo + 1] - edge[lo])
        })
        .collect()
}

/// Resamples to 64 points and subtracts the mean.
///
/// Both roles are taken in the shared height coordinate without flipping, so
/// the two edges of an uncorroded pair give identical vectors. Amplitude is
/// kept; only the offset is removed.
pub fn extract_edge_vector(edge: &[f64], role: EdgeRole) -> Result<EdgeVector> {
    if edge.len() < 2 {
        return Err(Error::Input(format!("edge needs at least 2 samples, got {}", edge.len())));
    }
    if edge.iter().any(|h| !h.is_finite()) {
        return Err(Error::Input("edge contains a non-finite height".into()));
    }
    let mut values = resample(edge, EDGE_DIM);
    let mean = values.iter().sum::<f64>() / EDGE_DIM as f64;
    values.iter_mut().for_each(|v| *v -= mean);
    Ok(EdgeVector { values, source_fragment_id: String::new(), role })
}
