use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{parse_error, write_atomically};
use crate::error::{Error, Result};
use crate::physics::PhysicsParams;

pub const MANIFEST_FORMAT: &str = "slipforge-manifest";
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    Upper,
    Lower,
}

impl Group {
    pub fn opposite(self) -> Group {
        match self {
            Group::Upper => Group::Lower,
            Group::Lower => Group::Upper,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Group::Upper => "upper",
            Group::Lower => "lower",
        }
    }
}

impl std::str::FromStr for Group {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "upper" => Ok(Group::Upper),
            "lower" => Ok(Group::Lower),
            other => Err(Error::Input(format!("unknown group {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FragmentProvenance {
    pub seed: u64,
    pub source_pair: String,
}

/// One fragment with a single fracture edge.
///
/// For an upper fragment `edge` is its bottom edge; for a lower fragment it
/// is its top edge. Both are measured in the same height coordinate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fragment {
    pub id: String,
    pub group: Group,
    pub edge: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<FragmentProvenance>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruthPair {
    pub upper_id: String,
    pub lower_id: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub name: String,
    /// Generation parameters; `params.seed` is the dataset seed.
    pub params: Option<PhysicsParams>,
    pub fragments: Vec<Fragment>,
    pub ground_truth: Vec<GroundTruthPair>,
}

impl DatasetManifest {
    pub fn new(
        name: String,
        params: Option<PhysicsParams>,
        fragments: Vec<Fragment>,
        ground_truth: Vec<GroundTruthPair>,
    ) -> Self {
        Self { format_version: MANIFEST_VERSION, name, params, fragments, ground_truth }
    }

    pub fn validate(&self) -> Result<()> {
        let mut groups = HashMap::with_capacity(self.fragments.len());
        for f in &self.fragments {
            if groups.insert(f.id.as_str(), f.group).is_some() {
                return Err(Error::Invariant(format!("duplicate fragment id {:?}", f.id)));
            }
            if f.edge.len() < 2 {
                return Err(Error::Invariant(format!("fragment {:?} has fewer than 2 edge samples", f.id)));
            }
            if f.edge.iter().any(|h| !h.is_finite()) {
                return Err(Error::Invariant(format!("fragment {:?} has a non-finite height", f.id)));
            }
        }
        let mut paired = HashSet::new();
        for gt in &self.ground_truth {
            for (id, want) in [(&gt.upper_id, Group::Upper), (&gt.lower_id, Group::Lower)] {
                match groups.get(id.as_str()) {
                    None => return Err(Error::Invariant(format!("ground-truth id {id:?} not in fragments"))),
                    Some(&g) if g != want => {
                        return Err(Error::Invariant(format!(
                            "ground-truth id {id:?} is in group {}, expected {}",
                            g.as_str(),
                            want.as_str()
                        )))
                    }
                    _ => {}
                }
                if !paired.insert(id.as_str()) {
                    return Err(Error::Invariant(format!("fragment {id:?} appears in two ground-truth pairs")));
                }
            }
        }
        Ok(())
    }

    pub fn fragment(&self, id: &str) -> Option<&Fragment> {
        self.fragments.iter().find(|f| f.id == id)
    }

    pub fn fragments_in(&self, group: Group) -> impl Iterator<Item = &Fragment> {
        self.fragments.iter().filter(move |f| f.group == group)
    }

    /// Maps every paired fragment id to its true complement.
    pub fn complements(&self) -> HashMap<&str, &str> {
        let mut map = HashMap::with_capacity(2 * self.ground_truth.len());
        for gt in &self.ground_truth {
            map.insert(gt.upper_id.as_str(), gt.lower_id.as_str());
            map.insert(gt.lower_id.as_str(), gt.upper_id.as_str());
        }
        map
    }

    /// Fragments that belong to no ground-truth pair, in manifest order.
    pub fn interference(&self) -> impl Iterator<Item = &Fragment> {
        let paired: HashSet<&str> = self
            .ground_truth
            .iter()
            .flat_map(|gt| [gt.upper_id.as_str(), gt.lower_id.as_str()])
            .collect();
        self.fragments.iter().filter(move |f| !paired.contains(f.id.as_str()))
    }

    /// Keeps all true pairs and the first `count` interference fragments.
    pub fn with_interference_limit(&self, count: usize) -> DatasetManifest {
        let complements = self.complements();
        let mut kept = 0;
        let fragments = self
            .fragments
            .iter()
            .filter(|f| {
                if complements.contains_key(f.id.as_str()) {
                    true
                } else if kept < count {
                    kept += 1;
                    true
                } else {
                    false
                }
            })
            .cloned()
            .collect();
        DatasetManifest {
            format_version: self.format_version,
            name: format!("{}[interference={}]", self.name, count.min(kept)),
            params: self.params.clone(),
            fragments,
            ground_truth: self.ground_truth.clone(),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Line {
    Header {
        format: String,
        format_version: u32,
        name: String,
        #[serde(default)]
        params: Option<PhysicsParams>,
    },
    Fragment(Fragment),
    Pair(GroundTruthPair),
}

pub fn save_manifest(path: impl AsRef<Path>, manifest: &DatasetManifest) -> Result<()> {
    manifest.validate()?;
    let mut body = String::new();
    let header = Line::Header {
        format: MANIFEST_FORMAT.into(),
        format_version: manifest.format_version,
        name: manifest.name.clone(),
        params: manifest.params.clone(),
    };
    let encode = |line: &Line| serde_json::to_string(line).map_err(|e| Error::Input(e.to_string()));
    writeln!(body, "{}", encode(&header)?).unwrap();
    for f in &manifest.fragments {
        writeln!(body, "{}", encode(&Line::Fragment(f.clone()))?).unwrap();
    }
    for gt in &manifest.ground_truth {
        writeln!(body, "{}", encode(&Line::Pair(gt.clone()))?).unwrap();
    }
    write_atomically(path.as_ref(), body.as_bytes())
}

/// Parses the whole file before returning; a bad line anywhere fails the
/// load with nothing partially applied.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());

    let (_, first) = lines.next().ok_or_else(|| parse_error(path, 1, "empty manifest"))?;
    let header: serde_json::Value = serde_json::from_str(first).map_err(|e| parse_error(path, 1, e))?;
    if header.get("format").and_then(|f| f.as_str()) != Some(MANIFEST_FORMAT) {
        return Err(parse_error(path, 1, format!("not a {MANIFEST_FORMAT} document")));
    }
    let version = header.get("format_version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
    if version != MANIFEST_VERSION {
        return Err(Error::Version { found: version, expected: MANIFEST_VERSION });
    }
    let (name, params) = match serde_json::from_value(header).map_err(|e| parse_error(path, 1, e))? {
        Line::Header { name, params, .. } => (name, params),
        _ => return Err(parse_error(path, 1, "first line must be the header")),
    };

    let mut fragments = Vec::new();
    let mut ground_truth = Vec::new();
    for (i, raw) in lines {
        match serde_json::from_str::<Line>(raw).map_err(|e| parse_error(path, i + 1, e))? {
            Line::Header { .. } => return Err(parse_error(path, i + 1, "duplicate header")),
            Line::Fragment(f) => fragments.push(f),
            Line::Pair(p) => ground_truth.push(p),
        }
    }
    let manifest = DatasetManifest { format_version: version, name, params, fragments, ground_truth };
    manifest.validate()?;
    Ok(manifest)
}
