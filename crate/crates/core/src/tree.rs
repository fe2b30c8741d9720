//! Threshold access trees with one key node per layer.
//!
//! Layout for `D >= 2` groups:
//!
//! ```text
//! root      = AND(R_base, OR(!grp:1, M_1))
//! M_d       = AND(level_{d+1}, Q_d)        Q_d over I_{d+1} \ I_d, dropped when empty
//! level_d   = OR(gate_d, M_d)              2 <= d < D
//! level_D   = gate_D
//! gate_d    = 1-of-|G_d| over guard(c), c in G_d
//! guard(c)  = AND(V_c, P_c \ I_d)          just V_c when the difference is empty
//! V_c       = AND(R_c, !key:c)
//! ```
//!
//! `R_base` is an AND over the base policy. Every other `R_c` is a sealed
//! node: it has no attribute and no ciphertext components, so its value is
//! only reachable by interpolating downward from the root. A user who knows
//! `root` and holds `I_1`, `Q_1 .. Q_{d-1}` and `P_c \ I_d` walks down to
//! `R_c`; those sets union to exactly `P_c`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rand_core::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{AccessPolicy, Attribute, Dimensions, LayerCoord, PolicyLattice};
use crate::pairing::Scalar;
use crate::poly::Polynomial;

pub type NodeId = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TreeError {
    #[error("malformed tree: {0}")]
    Malformed(String),
}

fn malformed(msg: impl Into<String>) -> TreeError {
    TreeError::Malformed(msg.into())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeKind {
    Leaf(Attribute),
    Gate {
        threshold: usize,
        children: Vec<NodeId>,
    },
    /// Key node with no attribute below it.
    Sealed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
    pub parent: Option<NodeId>,
    /// 1-based position among the parent's children; 0 for the root.
    pub index: usize,
    pub key: Option<LayerCoord>,
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        matches!(self.kind, NodeKind::Leaf(_))
    }

    pub fn attribute(&self) -> Option<&Attribute> {
        match &self.kind {
            NodeKind::Leaf(a) => Some(a),
            _ => None,
        }
    }

    pub fn children(&self) -> &[NodeId] {
        match &self.kind {
            NodeKind::Gate { children, .. } => children,
            _ => &[],
        }
    }

    pub fn threshold(&self) -> usize {
        match &self.kind {
            NodeKind::Gate { threshold, .. } => *threshold,
            _ => 1,
        }
    }
}

/// Attributes every key for a given shape carries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructuralAttributes {
    pub escapes: Vec<Attribute>,
    pub uniqueness: Vec<Attribute>,
}

impl StructuralAttributes {
    pub fn all(&self) -> impl Iterator<Item = &Attribute> {
        self.escapes.iter().chain(&self.uniqueness)
    }
}

pub fn escape_attribute(d: usize) -> Attribute {
    Attribute::structural(format!("!grp:{d}"))
}

pub fn uniqueness_attribute(c: &LayerCoord) -> Attribute {
    Attribute::structural(format!("!key:{c}"))
}

/// One escape leaf when there is more than one group, plus a uniqueness
/// leaf per non-base layer.
pub fn structural_attributes(dims: &Dimensions) -> StructuralAttributes {
    let escapes = if dims.group_count() > 1 {
        vec![escape_attribute(1)]
    } else {
        Vec::new()
    };
    let uniqueness = dims
        .coords()
        .iter()
        .filter(|c| !c.is_base())
        .map(uniqueness_attribute)
        .collect();
    StructuralAttributes {
        escapes,
        uniqueness,
    }
}

enum Shape {
    Leaf(Attribute),
    Gate {
        threshold: usize,
        children: Vec<Shape>,
        key: Option<LayerCoord>,
    },
    Sealed(LayerCoord),
}

impl Shape {
    fn and(children: Vec<Shape>) -> Shape {
        Shape::Gate {
            threshold: children.len(),
            children,
            key: None,
        }
    }

    fn or(children: Vec<Shape>) -> Shape {
        Shape::Gate {
            threshold: 1,
            children,
            key: None,
        }
    }

    fn all_of(policy: &AccessPolicy, key: Option<LayerCoord>) -> Shape {
        Shape::Gate {
            threshold: policy.len(),
            children: policy.iter().cloned().map(Shape::Leaf).collect(),
            key,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccessTree {
    dims: Dimensions,
    nodes: Vec<Node>,
    key_nodes: BTreeMap<LayerCoord, NodeId>,
}

/// Builds the tree for a validated lattice. Pure: equal lattices give equal
/// trees.
pub fn build_tree(lat: &PolicyLattice) -> AccessTree {
    let dims = lat.dims();
    let base = dims.base();
    let r_base = Shape::all_of(lat.policy(&base), Some(base));
    let groups = dims.groups();
    let depth = groups.len();

    let shape = if depth == 1 {
        r_base
    } else {
        let common: Vec<AccessPolicy> = (1..=depth)
            .map(|d| lat.common_policy(d).expect("group in range"))
            .collect();
        let guard = |c: &LayerCoord| {
            let v = Shape::and(vec![
                Shape::Sealed(c.clone()),
                Shape::Leaf(uniqueness_attribute(c)),
            ]);
            let own = lat.policy(c).difference(&common[c.group() - 1]);
            if own.is_empty() {
                v
            } else {
                let mut children = vec![v];
                children.extend(own.iter().cloned().map(Shape::Leaf));
                Shape::and(children)
            }
        };
        let group_gate = |d: usize| Shape::or(groups[d - 1].iter().map(guard).collect());

        // Holds level_D first, then M_{d+1} on each later pass.
        let mut m = group_gate(depth);
        for d in (1..depth).rev() {
            let q = common[d].difference(&common[d - 1]);
            let upper = if d + 1 == depth {
                m
            } else {
                Shape::or(vec![group_gate(d + 1), m])
            };
            m = if q.is_empty() {
                upper
            } else {
                Shape::and(vec![upper, Shape::all_of(&q, None)])
            };
        }
        Shape::and(vec![
            r_base,
            Shape::or(vec![Shape::Leaf(escape_attribute(1)), m]),
        ])
    };

    let mut tree = AccessTree {
        dims: dims.clone(),
        nodes: Vec::new(),
        key_nodes: BTreeMap::new(),
    };
    tree.flatten(shape, None, 0);
    tree
}

impl AccessTree {
    fn flatten(&mut self, shape: Shape, parent: Option<NodeId>, index: usize) -> NodeId {
        let id = self.nodes.len();
        let (kind, key, children) = match shape {
            Shape::Leaf(a) => (NodeKind::Leaf(a), None, Vec::new()),
            Shape::Sealed(c) => (NodeKind::Sealed, Some(c), Vec::new()),
            Shape::Gate {
                threshold,
                children,
                key,
            } => (
                NodeKind::Gate {
                    threshold,
                    children: Vec::new(),
                },
                key,
                children,
            ),
        };
        if let Some(c) = &key {
            self.key_nodes.insert(c.clone(), id);
        }
        self.nodes.push(Node {
            id,
            kind,
            parent,
            index,
            key,
        });
        let ids: Vec<NodeId> = children
            .into_iter()
            .enumerate()
            .map(|(i, child)| self.flatten(child, Some(id), i + 1))
            .collect();
        if let NodeKind::Gate { children, .. } = &mut self.nodes[id].kind {
            *children = ids;
        }
        id
    }

    pub fn dims(&self) -> &Dimensions {
        &self.dims
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    /// Nodes in preorder; a node's id is its position.
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn key_nodes(&self) -> &BTreeMap<LayerCoord, NodeId> {
        &self.key_nodes
    }

    pub fn leaves(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(|n| n.is_leaf())
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves().count()
    }

    pub fn structural_attributes(&self) -> StructuralAttributes {
        structural_attributes(&self.dims)
    }

    /// Which nodes an attribute set satisfies by ordinary threshold semantics.
    pub fn satisfiable(&self, attrs: &BTreeSet<Attribute>) -> Vec<bool> {
        let mut sat = vec![false; self.nodes.len()];
        for node in self.nodes.iter().rev() {
            sat[node.id] = match &node.kind {
                NodeKind::Leaf(a) => attrs.contains(a),
                NodeKind::Sealed => false,
                NodeKind::Gate {
                    threshold,
                    children,
                } => children.iter().filter(|&&c| sat[c]).count() >= *threshold,
            };
        }
        sat
    }

    /// Nodes whose share a holder of `attrs` can reconstruct: those satisfied
    /// from below, plus the children of a reconstructible gate once all but
    /// one of its threshold are satisfied from below.
    pub fn reachable(&self, attrs: &BTreeSet<Attribute>) -> Vec<bool> {
        let sat = self.satisfiable(attrs);
        let mut known = sat.clone();
        for node in &self.nodes {
            if !known[node.id] {
                continue;
            }
            if let NodeKind::Gate {
                threshold,
                children,
            } = &node.kind
            {
                let below = children.iter().filter(|&&c| sat[c]).count();
                if below + 1 >= *threshold {
                    for &c in children {
                        known[c] = true;
                    }
                }
            }
        }
        known
    }

    /// Layers whose key node and the root are both reconstructible.
    pub fn satisfied_key_nodes(&self, attrs: &BTreeSet<Attribute>) -> BTreeSet<LayerCoord> {
        let known = self.reachable(attrs);
        if !known[self.root()] {
            return BTreeSet::new();
        }
        self.key_nodes
            .iter()
            .filter(|(_, &id)| known[id])
            .map(|(c, _)| c.clone())
            .collect()
    }

    /// Picks a random secret and shares it down the tree.
    pub fn assign_shares<R: RngCore + CryptoRng + ?Sized>(&self, rng: &mut R) -> ShareAssignment {
        let s = Scalar::random(rng);
        self.assign_shares_with_secret(s, rng)
    }

    pub fn assign_shares_with_secret<R: RngCore + CryptoRng + ?Sized>(
        &self,
        s: Scalar,
        rng: &mut R,
    ) -> ShareAssignment {
        let mut shares = vec![Scalar::ZERO; self.nodes.len()];
        shares[self.root()] = s;
        for node in &self.nodes {
            if let NodeKind::Gate {
                threshold,
                children,
            } = &node.kind
            {
                let q = Polynomial::random(shares[node.id], threshold - 1, rng);
                for &c in children {
                    shares[c] = q.eval(Scalar::from_u64(self.nodes[c].index as u64));
                }
            }
        }
        ShareAssignment { secret: s, shares }
    }

    pub fn to_document(&self) -> TreeDocument {
        TreeDocument {
            dims: self.dims.clone(),
            nodes: self
                .nodes
                .iter()
                .map(|n| NodeRecord {
                    id: n.id,
                    kind: match n.kind {
                        NodeKind::Leaf(_) => RecordKind::Leaf,
                        NodeKind::Gate { .. } => RecordKind::Gate,
                        NodeKind::Sealed => RecordKind::Sealed,
                    },
                    threshold: match n.kind {
                        NodeKind::Gate { threshold, .. } => Some(threshold),
                        _ => None,
                    },
                    children: n.children().to_vec(),
                    attribute: n.attribute().cloned(),
                    key: n.key.clone(),
                })
                .collect(),
        }
    }

    /// Rebuilds a tree from its serialized form, checking that it is a
    /// well-formed preorder arena with one key node per layer.
    pub fn from_document(doc: &TreeDocument) -> Result<Self, TreeError> {
        let n = doc.nodes.len();
        if n == 0 {
            return Err(malformed("no nodes"));
        }
        let mut parent: Vec<Option<(NodeId, usize)>> = vec![None; n];
        for (pos, rec) in doc.nodes.iter().enumerate() {
            if rec.id != pos {
                return Err(malformed(format!("node {pos} has id {}", rec.id)));
            }
            for (i, &c) in rec.children.iter().enumerate() {
                if c <= pos || c >= n {
                    return Err(malformed(format!("node {pos} has bad child {c}")));
                }
                if parent[c].replace((pos, i + 1)).is_some() {
                    return Err(malformed(format!("node {c} has two parents")));
                }
            }
        }
        if let Some(orphan) = (1..n).find(|&i| parent[i].is_none()) {
            return Err(malformed(format!("node {orphan} is detached")));
        }

        let mut nodes = Vec::with_capacity(n);
        let mut key_nodes = BTreeMap::new();
        for rec in &doc.nodes {
            let kind = match rec.kind {
                RecordKind::Leaf => {
                    if !rec.children.is_empty() || rec.threshold.is_some() || rec.key.is_some() {
                        return Err(malformed(format!("leaf {} has gate fields", rec.id)));
                    }
                    NodeKind::Leaf(
                        rec.attribute
                            .clone()
                            .ok_or_else(|| malformed(format!("leaf {} lacks attribute", rec.id)))?,
                    )
                }
                RecordKind::Sealed => {
                    if !rec.children.is_empty() || rec.attribute.is_some() || rec.key.is_none() {
                        return Err(malformed(format!("sealed node {} is malformed", rec.id)));
                    }
                    NodeKind::Sealed
                }
                RecordKind::Gate => {
                    let k = rec.threshold.unwrap_or(0);
                    if k == 0 || k > rec.children.len() || rec.attribute.is_some() {
                        return Err(malformed(format!("gate {} has threshold {k}", rec.id)));
                    }
                    NodeKind::Gate {
                        threshold: k,
                        children: rec.children.clone(),
                    }
                }
            };
            if let Some(c) = &rec.key {
                if !doc.dims.contains(c) || key_nodes.insert(c.clone(), rec.id).is_some() {
                    return Err(malformed(format!("bad key node marker {c}")));
                }
            }
            let (p, index) = match parent[rec.id] {
                Some((p, i)) => (Some(p), i),
                None => (None, 0),
            };
            nodes.push(Node {
                id: rec.id,
                kind,
                parent: p,
                index,
                key: rec.key.clone(),
            });
        }
        if key_nodes.len() != doc.dims.layer_count() {
            return Err(malformed("key nodes do not cover every layer"));
        }
        Ok(AccessTree {
            dims: doc.dims.clone(),
            nodes,
            key_nodes,
        })
    }

    /// Indented outline, one node per line.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        self.render_node(self.root(), 0, &mut out);
        out
    }

    fn render_node(&self, id: NodeId, depth: usize, out: &mut String) {
        let node = &self.nodes[id];
        let pad = "  ".repeat(depth);
        let key = node
            .key
            .as_ref()
            .map(|c| format!("  [key {c}]"))
            .unwrap_or_default();
        let _ = match &node.kind {
            NodeKind::Leaf(a) => writeln!(out, "{pad}{a}"),
            NodeKind::Sealed => writeln!(out, "{pad}(sealed){key}"),
            NodeKind::Gate {
                threshold,
                children,
            } => writeln!(out, "{pad}{}{key}", gate_label(*threshold, children.len())),
        };
        for &c in node.children() {
            self.render_node(c, depth + 1, out);
        }
    }

    /// Graphviz description.
    pub fn render_dot(&self) -> String {
        let mut out = String::from("digraph access_tree {\n  node [fontname=\"monospace\"];\n");
        for node in &self.nodes {
            let (label, shape) = match &node.kind {
                NodeKind::Leaf(a) => (a.to_string(), "box"),
                NodeKind::Sealed => ("sealed".to_string(), "point"),
                NodeKind::Gate {
                    threshold,
                    children,
                } => (gate_label(*threshold, children.len()), "ellipse"),
            };
            let (label, extra) = match &node.key {
                Some(c) => (format!("{label}\\nkey {c}"), ", peripheries=2"),
                None => (label, ""),
            };
            let label = label.replace('"', "\\\"");
            let _ = writeln!(
                out,
                "  n{} [label=\"{label}\", shape={shape}{extra}];",
                node.id
            );
            for &c in node.children() {
                let _ = writeln!(out, "  n{} -> n{c};", node.id);
            }
        }
        out.push_str("}\n");
        out
    }
}

fn gate_label(k: usize, n: usize) -> String {
    if k == n {
        format!("AND {k}/{n}")
    } else if k == 1 {
        format!("OR 1/{n}")
    } else {
        format!("{k}-of-{n}")
    }
}

/// The secret `s` and every node's share `p_x(0)`, indexed by node id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShareAssignment {
    pub secret: Scalar,
    pub shares: Vec<Scalar>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordKind {
    Leaf,
    Gate,
    Sealed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: NodeId,
    pub kind: RecordKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<NodeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attribute: Option<Attribute>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key: Option<LayerCoord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeDocument {
    pub dims: Dimensions,
    pub nodes: Vec<NodeRecord>,
}
