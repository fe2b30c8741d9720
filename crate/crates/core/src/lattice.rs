//! Layer grids and the per-layer attribute policies laid over them.
//!
//! A layer is addressed by a 1-based coordinate in a box `n_1 x ... x n_k`.
//! Each layer carries a conjunctive policy, and a layer that dominates
//! another componentwise must demand a superset of its attributes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Labels starting with this prefix are reserved for tree structure.
pub const RESERVED_PREFIX: &str = "!";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LatticeError {
    #[error("dimensions must be a nonempty list of sizes >= 1")]
    InvalidDims,
    #[error("coordinate {coord} lies outside dimensions {dims}")]
    OutOfBounds { coord: String, dims: String },
    #[error("malformed coordinate `{0}`")]
    BadCoord(String),
    #[error("no policy given for layer {0}")]
    MissingLayer(String),
    #[error("attribute labels must be nonempty")]
    EmptyAttribute,
    #[error("attribute `{0}` uses the reserved prefix `!`")]
    ReservedPrefix(String),
    #[error("invalid lattice:\n{0}")]
    Violations(ViolationReport),
    #[error("policy document: {0}")]
    Document(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Dimensions(Vec<usize>);

impl Dimensions {
    pub fn new(sizes: Vec<usize>) -> Result<Self, LatticeError> {
        if sizes.is_empty() || sizes.contains(&0) {
            return Err(LatticeError::InvalidDims);
        }
        Ok(Dimensions(sizes))
    }

    pub fn sizes(&self) -> &[usize] {
        &self.0
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    pub fn layer_count(&self) -> usize {
        self.0.iter().product()
    }

    /// Number of distance groups, `sum(n_i - 1) + 1`.
    pub fn group_count(&self) -> usize {
        self.0.iter().map(|n| n - 1).sum::<usize>() + 1
    }

    pub fn base(&self) -> LayerCoord {
        LayerCoord(vec![1; self.rank()])
    }

    pub fn top(&self) -> LayerCoord {
        LayerCoord(self.0.clone())
    }

    pub fn contains(&self, c: &LayerCoord) -> bool {
        c.0.len() == self.0.len() && c.0.iter().zip(&self.0).all(|(&x, &n)| x >= 1 && x <= n)
    }

    pub fn check(&self, c: &LayerCoord) -> Result<(), LatticeError> {
        if self.contains(c) {
            Ok(())
        } else {
            Err(LatticeError::OutOfBounds {
                coord: c.to_string(),
                dims: self.to_string(),
            })
        }
    }

    /// Every coordinate of the box in lexicographic order.
    pub fn coords(&self) -> Vec<LayerCoord> {
        let mut out = Vec::with_capacity(self.layer_count());
        let mut cur = vec![1; self.rank()];
        loop {
            out.push(LayerCoord(cur.clone()));
            let mut i = self.rank();
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                if cur[i] < self.0[i] {
                    cur[i] += 1;
                    break;
                }
                cur[i] = 1;
            }
        }
    }

    /// Groups `G_1 .. G_D` by L1 distance from the base, members in
    /// lexicographic order.
    pub fn groups(&self) -> Vec<Vec<LayerCoord>> {
        let mut groups = vec![Vec::new(); self.group_count()];
        for c in self.coords() {
            groups[c.group() - 1].push(c);
        }
        groups
    }

    /// Immediate predecessors of `c`; the base is its own referee.
    pub fn referees(&self, c: &LayerCoord) -> Vec<LayerCoord> {
        let mut out: Vec<LayerCoord> = (0..c.0.len())
            .filter(|&i| c.0[i] > 1)
            .map(|i| {
                let mut p = c.0.clone();
                p[i] -= 1;
                LayerCoord(p)
            })
            .collect();
        if out.is_empty() {
            out.push(c.clone());
        }
        out.sort();
        out
    }
}

impl TryFrom<Vec<usize>> for Dimensions {
    type Error = LatticeError;
    fn try_from(v: Vec<usize>) -> Result<Self, LatticeError> {
        Dimensions::new(v)
    }
}

impl From<Dimensions> for Vec<usize> {
    fn from(d: Dimensions) -> Vec<usize> {
        d.0
    }
}

impl fmt::Display for Dimensions {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|n| n.to_string()).collect();
        f.write_str(&parts.join("x"))
    }
}

impl FromStr for Dimensions {
    type Err = LatticeError;
    /// Accepts `2x3`, `2,3` or `2×3`.
    fn from_str(s: &str) -> Result<Self, LatticeError> {
        let sizes = s
            .split(['x', ',', '×'])
            .map(|p| {
                p.trim()
                    .parse::<usize>()
                    .map_err(|_| LatticeError::InvalidDims)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Dimensions::new(sizes)
    }
}

/// A 1-based layer coordinate. Ordering is lexicographic.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LayerCoord(Vec<usize>);

impl LayerCoord {
    pub fn new(coords: Vec<usize>) -> Result<Self, LatticeError> {
        if coords.is_empty() || coords.contains(&0) {
            return Err(LatticeError::BadCoord(format!("{coords:?}")));
        }
        Ok(LayerCoord(coords))
    }

    pub fn coords(&self) -> &[usize] {
        &self.0
    }

    /// Index of the distance group holding this layer (1-based).
    pub fn group(&self) -> usize {
        self.0.iter().map(|c| c - 1).sum::<usize>() + 1
    }

    pub fn is_base(&self) -> bool {
        self.0.iter().all(|&c| c == 1)
    }

    /// Componentwise `self <= other`.
    pub fn dominated_by(&self, other: &LayerCoord) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// `1_2_1`, used in file names.
    pub fn file_suffix(&self) -> String {
        let parts: Vec<String> = self.0.iter().map(|n| n.to_string()).collect();
        parts.join("_")
    }
}

impl fmt::Display for LayerCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|n| n.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for LayerCoord {
    type Err = LatticeError;
    fn from_str(s: &str) -> Result<Self, LatticeError> {
        let coords = s
            .split([',', '_'])
            .map(|p| p.trim().parse::<usize>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| LatticeError::BadCoord(s.to_string()))?;
        LayerCoord::new(coords).map_err(|_| LatticeError::BadCoord(s.to_string()))
    }
}

impl Serialize for LayerCoord {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for LayerCoord {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// An attribute label. Ordering is bytewise.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct Attribute(String);

impl Attribute {
    /// A user-facing label; rejects empty and reserved labels.
    pub fn new(label: impl Into<String>) -> Result<Self, LatticeError> {
        let label = label.into();
        if label.is_empty() {
            return Err(LatticeError::EmptyAttribute);
        }
        if label.starts_with(RESERVED_PREFIX) {
            return Err(LatticeError::ReservedPrefix(label));
        }
        Ok(Attribute(label))
    }

    /// Any nonempty label, reserved or not. Used when loading keys and trees.
    pub fn any(label: impl Into<String>) -> Result<Self, LatticeError> {
        let label = label.into();
        if label.is_empty() {
            return Err(LatticeError::EmptyAttribute);
        }
        Ok(Attribute(label))
    }

    pub(crate) fn structural(label: String) -> Self {
        debug_assert!(label.starts_with(RESERVED_PREFIX));
        Attribute(label)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_structural(&self) -> bool {
        self.0.starts_with(RESERVED_PREFIX)
    }
}

impl<'de> Deserialize<'de> for Attribute {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Attribute::any(s).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for Attribute {
    type Err = LatticeError;
    fn from_str(s: &str) -> Result<Self, LatticeError> {
        Attribute::new(s)
    }
}

/// Conjunction of attributes.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AccessPolicy(BTreeSet<Attribute>);

impl AccessPolicy {
    pub fn new<I: IntoIterator<Item = Attribute>>(attrs: I) -> Self {
        AccessPolicy(attrs.into_iter().collect())
    }

    /// Parses user labels, rejecting reserved ones.
    pub fn parse<I, S>(labels: I) -> Result<Self, LatticeError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        labels
            .into_iter()
            .map(Attribute::new)
            .collect::<Result<BTreeSet<_>, _>>()
            .map(AccessPolicy)
    }

    pub fn attrs(&self) -> &BTreeSet<Attribute> {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = &Attribute> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, a: &Attribute) -> bool {
        self.0.contains(a)
    }

    pub fn is_subset(&self, other: &AccessPolicy) -> bool {
        self.0.is_subset(&other.0)
    }

    /// Whether an attribute set satisfies this conjunction.
    pub fn satisfied_by(&self, attrs: &BTreeSet<Attribute>) -> bool {
        self.0.is_subset(attrs)
    }

    pub fn intersection(&self, other: &AccessPolicy) -> AccessPolicy {
        AccessPolicy(self.0.intersection(&other.0).cloned().collect())
    }

    pub fn union(&self, other: &AccessPolicy) -> AccessPolicy {
        AccessPolicy(self.0.union(&other.0).cloned().collect())
    }

    pub fn difference(&self, other: &AccessPolicy) -> AccessPolicy {
        AccessPolicy(self.0.difference(&other.0).cloned().collect())
    }
}

impl FromIterator<Attribute> for AccessPolicy {
    fn from_iter<I: IntoIterator<Item = Attribute>>(iter: I) -> Self {
        AccessPolicy(iter.into_iter().collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// `lower <= upper` but `P_lower` has attributes missing from `P_upper`.
    NotContained {
        lower: LayerCoord,
        upper: LayerCoord,
        missing: Vec<Attribute>,
    },
    EmptyBase,
    /// The layer adds nothing over its referees.
    NoRefinement {
        coord: LayerCoord,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NotContained {
                lower,
                upper,
                missing,
            } => {
                let m: Vec<&str> = missing.iter().map(|a| a.as_str()).collect();
                write!(
                    f,
                    "P({lower}) is not contained in P({upper}): missing {}",
                    m.join(", ")
                )
            }
            Violation::EmptyBase => f.write_str("base layer policy is empty"),
            Violation::NoRefinement { coord } => write!(
                f,
                "P({coord}) requires nothing beyond its referees' policies"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ViolationReport(pub Vec<Violation>);

impl fmt::Display for ViolationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "  - {v}")?;
        }
        Ok(())
    }
}

/// Checks containment, a nonempty base, and strict refinement over referees.
/// Every violation is collected; none short-circuits.
pub fn validate_lattice(
    dims: &Dimensions,
    policies: &BTreeMap<LayerCoord, AccessPolicy>,
) -> Result<(), LatticeError> {
    let coords = dims.coords();
    for c in &coords {
        if !policies.contains_key(c) {
            return Err(LatticeError::MissingLayer(c.to_string()));
        }
    }
    for c in policies.keys() {
        dims.check(c)?;
    }

    let mut report = Vec::new();
    if policies[&dims.base()].is_empty() {
        report.push(Violation::EmptyBase);
    }
    for lower in &coords {
        for upper in &coords {
            if lower != upper && lower.dominated_by(upper) {
                let missing: Vec<Attribute> = policies[lower]
                    .difference(&policies[upper])
                    .iter()
                    .cloned()
                    .collect();
                if !missing.is_empty() {
                    report.push(Violation::NotContained {
                        lower: lower.clone(),
                        upper: upper.clone(),
                        missing,
                    });
                }
            }
        }
    }
    for c in coords.iter().filter(|c| !c.is_base()) {
        let covered = dims
            .referees(c)
            .iter()
            .fold(AccessPolicy::default(), |acc, r| acc.union(&policies[r]));
        if policies[c].difference(&covered).is_empty() {
            report.push(Violation::NoRefinement { coord: c.clone() });
        }
    }

    if report.is_empty() {
        Ok(())
    } else {
        Err(LatticeError::Violations(ViolationReport(report)))
    }
}

/// A validated policy lattice. Construction is the only way in, so every
/// value of this type satisfies the containment rules.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyLattice {
    dims: Dimensions,
    policies: BTreeMap<LayerCoord, AccessPolicy>,
}

impl PolicyLattice {
    pub fn new(
        dims: Dimensions,
        policies: BTreeMap<LayerCoord, AccessPolicy>,
    ) -> Result<Self, LatticeError> {
        validate_lattice(&dims, &policies)?;
        Ok(PolicyLattice { dims, policies })
    }

    pub fn dims(&self) -> &Dimensions {
        &self.dims
    }

    pub fn policy(&self, c: &LayerCoord) -> &AccessPolicy {
        &self.policies[c]
    }

    pub fn policies(&self) -> &BTreeMap<LayerCoord, AccessPolicy> {
        &self.policies
    }

    pub fn coords(&self) -> impl Iterator<Item = &LayerCoord> {
        self.policies.keys()
    }

    /// `I_d`: attributes shared by every member of group `d`.
    pub fn common_policy(&self, d: usize) -> Option<AccessPolicy> {
        let groups = self.dims.groups();
        let members = groups.get(d.checked_sub(1)?)?;
        let mut it = members.iter().map(|c| &self.policies[c]);
        let first = it.next()?.clone();
        Some(it.fold(first, |acc, p| acc.intersection(p)))
    }

    /// `U_d`: attributes used by any member of group `d`. Informational only.
    pub fn union_policy(&self, d: usize) -> Option<AccessPolicy> {
        let groups = self.dims.groups();
        let members = groups.get(d.checked_sub(1)?)?;
        Some(members.iter().fold(AccessPolicy::default(), |acc, c| {
            acc.union(&self.policies[c])
        }))
    }

    /// Every attribute appearing anywhere in the lattice.
    pub fn alphabet(&self) -> BTreeSet<Attribute> {
        self.policies
            .values()
            .flat_map(|p| p.iter().cloned())
            .collect()
    }

    /// Layers whose policy `attrs` satisfies.
    pub fn accessible(&self, attrs: &BTreeSet<Attribute>) -> BTreeSet<LayerCoord> {
        self.policies
            .iter()
            .filter(|(_, p)| p.satisfied_by(attrs))
            .map(|(c, _)| c.clone())
            .collect()
    }

    /// Leaf count of encrypting every layer separately, `sum |P_c|`.
    pub fn naive_leaf_count(&self) -> usize {
        self.policies.values().map(AccessPolicy::len).sum()
    }

    pub fn to_document(&self) -> PolicyDocument {
        PolicyDocument {
            dims: self.dims.sizes().to_vec(),
            layers: self
                .policies
                .iter()
                .map(|(c, p)| {
                    (
                        c.to_string(),
                        p.iter().map(|a| a.as_str().to_string()).collect(),
                    )
                })
                .collect(),
        }
    }

    pub fn from_document(doc: &PolicyDocument) -> Result<Self, LatticeError> {
        let dims = Dimensions::new(doc.dims.clone())?;
        let mut policies = BTreeMap::new();
        for (key, labels) in &doc.layers {
            let c: LayerCoord = key.parse()?;
            dims.check(&c)?;
            let p = AccessPolicy::parse(labels.iter().cloned())?;
            if policies.insert(c, p).is_some() {
                return Err(LatticeError::Document(format!("layer `{key}` given twice")));
            }
        }
        PolicyLattice::new(dims, policies)
    }

    pub fn from_json(text: &str) -> Result<Self, LatticeError> {
        let doc: PolicyDocument =
            serde_json::from_str(text).map_err(|e| LatticeError::Document(e.to_string()))?;
        Self::from_document(&doc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("policy document serializes")
    }
}

/// On-disk form: `{"dims": [2, 3], "layers": {"1,1": ["a"], ...}}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyDocument {
    pub dims: Vec<usize>,
    pub layers: BTreeMap<String, Vec<String>>,
}
