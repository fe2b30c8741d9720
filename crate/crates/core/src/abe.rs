//! Multi-message ciphertext-policy ABE over an access tree.
//!
//! One ciphertext carries a message per layer. Each message is blinded by
//! `e(g,g)^{alpha (p_R + s)}` where `p_R` is the share at that layer's key
//! node, so recovering it needs both the root and the key node.

use std::collections::{BTreeMap, BTreeSet};

use rand_core::{CryptoRng, RngCore};
use thiserror::Error;

use crate::lattice::{
    AccessPolicy, Attribute, Dimensions, LatticeError, LayerCoord, PolicyLattice,
};
use crate::pairing::{Pairing, PairingError, Scalar};
use crate::poly::{lagrange_at_zero, lagrange_coefficients};
use crate::tree::{
    build_tree, structural_attributes, AccessTree, NodeId, NodeKind, ShareAssignment,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AbeError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Pairing(#[from] PairingError),
    #[error("no message supplied for layer {0}")]
    MissingMessage(LayerCoord),
    #[error("message supplied for unknown layer {0}")]
    UnknownLayer(LayerCoord),
    #[error("key has no component for attribute `{0}`")]
    MissingComponent(Attribute),
    #[error("node {0} is not a leaf")]
    NotALeaf(NodeId),
    #[error("interpolation needs {need} child values, got {got}")]
    TooFewChildren { need: usize, got: usize },
    #[error("attribute `{0}` is not held by the delegating key")]
    NotSubset(Attribute),
    #[error("key was issued for {key} layers, ciphertext covers {ciphertext}")]
    StructureMismatch { key: String, ciphertext: String },
    #[error("malformed ciphertext: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PublicKey<P: Pairing> {
    pub group: P,
    pub g: P::G0,
    /// `g^beta`
    pub h: P::G0,
    /// `g^{1/beta}`
    pub f: P::G0,
    /// `e(g,g)^alpha`
    pub egg_alpha: P::G1,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MasterKey<P: Pairing> {
    pub beta: Scalar,
    /// `g^alpha`
    pub g_alpha: P::G0,
}

/// `(D_i, D_i') = (g^r H(a)^{r_i}, g^{r_i})`
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeComponent<P: Pairing> {
    pub d: P::G0,
    pub d_prime: P::G0,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserKey<P: Pairing> {
    /// `g^{(alpha + r)/beta}`
    pub d: P::G0,
    pub components: BTreeMap<Attribute, AttributeComponent<P>>,
    pub dims: Dimensions,
}

impl<P: Pairing> UserKey<P> {
    pub fn attributes(&self) -> BTreeSet<Attribute> {
        self.components.keys().cloned().collect()
    }
}

/// `(E, E') = (g^{p}, H(a)^{p})` for a leaf with share `p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeafComponent<P: Pairing> {
    pub e: P::G0,
    pub e_prime: P::G0,
}

/// `(C~, C) = (m e(g,g)^{alpha (p_R + s)}, h^{p_R + s})`
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerComponent<P: Pairing> {
    pub c_tilde: P::G1,
    pub c: P::G0,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ciphertext<P: Pairing> {
    tree: AccessTree,
    leaves: BTreeMap<NodeId, LeafComponent<P>>,
    layers: BTreeMap<LayerCoord, LayerComponent<P>>,
}

impl<P: Pairing> Ciphertext<P> {
    /// Assembles a ciphertext, checking that components cover exactly the
    /// tree's leaves and layers.
    pub fn from_parts(
        tree: AccessTree,
        leaves: BTreeMap<NodeId, LeafComponent<P>>,
        layers: BTreeMap<LayerCoord, LayerComponent<P>>,
    ) -> Result<Self, AbeError> {
        let leaf_ids: BTreeSet<NodeId> = tree.leaves().map(|n| n.id).collect();
        if leaf_ids != leaves.keys().copied().collect() {
            return Err(AbeError::Malformed(
                "leaf components do not match the tree".into(),
            ));
        }
        if !tree.key_nodes().keys().eq(layers.keys()) {
            return Err(AbeError::Malformed(
                "layer components do not match the tree".into(),
            ));
        }
        Ok(Ciphertext {
            tree,
            leaves,
            layers,
        })
    }

    pub fn tree(&self) -> &AccessTree {
        &self.tree
    }

    pub fn leaves(&self) -> &BTreeMap<NodeId, LeafComponent<P>> {
        &self.leaves
    }

    pub fn layers(&self) -> &BTreeMap<LayerCoord, LayerComponent<P>> {
        &self.layers
    }
}

pub fn setup<P: Pairing, R: RngCore + CryptoRng + ?Sized>(
    group: P,
    rng: &mut R,
) -> (PublicKey<P>, MasterKey<P>) {
    let alpha = Scalar::random(rng);
    let beta = Scalar::random_nonzero(rng);
    setup_with(group, alpha, beta)
}

/// Deterministic setup from chosen exponents. `beta` must be nonzero.
pub fn setup_with<P: Pairing>(
    group: P,
    alpha: Scalar,
    beta: Scalar,
) -> (PublicKey<P>, MasterKey<P>) {
    let beta_inv = beta.invert().expect("beta must be nonzero");
    let g = group.generator();
    let pk = PublicKey {
        h: group.g0_pow(&g, &beta),
        f: group.g0_pow(&g, &beta_inv),
        egg_alpha: group.g1_pow(&group.pair(&g, &g), &alpha),
        g: g.clone(),
        group: group.clone(),
    };
    let mk = MasterKey {
        beta,
        g_alpha: group.g0_pow(&g, &alpha),
    };
    (pk, mk)
}

fn hash_attr<P: Pairing>(group: &P, a: &Attribute) -> Result<P::G0, AbeError> {
    Ok(group.hash_to_g0(a.as_str().as_bytes())?)
}

/// Issues a key for `attrs` plus every structural attribute of `dims`.
pub fn keygen<P: Pairing, R: RngCore + CryptoRng + ?Sized>(
    pk: &PublicKey<P>,
    mk: &MasterKey<P>,
    attrs: &AccessPolicy,
    dims: &Dimensions,
    rng: &mut R,
) -> Result<UserKey<P>, AbeError> {
    if let Some(a) = attrs.iter().find(|a| a.is_structural()) {
        return Err(LatticeError::ReservedPrefix(a.to_string()).into());
    }
    let group = &pk.group;
    let r = Scalar::random(rng);
    let beta_inv = mk.beta.invert().expect("beta is nonzero");
    let g_r = group.g0_pow(&pk.g, &r);
    let d = group.g0_pow(&group.g0_mul(&mk.g_alpha, &g_r), &beta_inv);

    let structural = structural_attributes(dims);
    let mut components = BTreeMap::new();
    for a in attrs.iter().chain(structural.all()) {
        let r_i = Scalar::random(rng);
        let h = hash_attr(group, a)?;
        components.insert(
            a.clone(),
            AttributeComponent {
                d: group.g0_mul(&g_r, &group.g0_pow(&h, &r_i)),
                d_prime: group.g0_pow(&pk.g, &r_i),
            },
        );
    }
    Ok(UserKey {
        d,
        components,
        dims: dims.clone(),
    })
}

/// Encrypts one message per layer under the lattice's tree.
pub fn encrypt<P: Pairing, R: RngCore + CryptoRng + ?Sized>(
    pk: &PublicKey<P>,
    lat: &PolicyLattice,
    messages: &BTreeMap<LayerCoord, P::G1>,
    rng: &mut R,
) -> Result<Ciphertext<P>, AbeError> {
    check_messages(lat.dims(), messages)?;
    let tree = build_tree(lat);
    let shares = tree.assign_shares(rng);
    encrypt_with_shares(pk, tree, &shares, messages)
}

fn check_messages<G>(
    dims: &Dimensions,
    messages: &BTreeMap<LayerCoord, G>,
) -> Result<(), AbeError> {
    for c in dims.coords() {
        if !messages.contains_key(&c) {
            return Err(AbeError::MissingMessage(c));
        }
    }
    if let Some(c) = messages.keys().find(|c| !dims.contains(c)) {
        return Err(AbeError::UnknownLayer(c.clone()));
    }
    Ok(())
}

/// The deterministic half of [`encrypt`]: components from a fixed share
/// assignment.
pub fn encrypt_with_shares<P: Pairing>(
    pk: &PublicKey<P>,
    tree: AccessTree,
    shares: &ShareAssignment,
    messages: &BTreeMap<LayerCoord, P::G1>,
) -> Result<Ciphertext<P>, AbeError> {
    check_messages(tree.dims(), messages)?;
    let group = &pk.group;
    let mut hashes: BTreeMap<&Attribute, P::G0> = BTreeMap::new();
    let mut leaves = BTreeMap::new();
    for node in tree.leaves() {
        let a = node.attribute().expect("leaf");
        if !hashes.contains_key(a) {
            hashes.insert(a, hash_attr(group, a)?);
        }
        let p = &shares.shares[node.id];
        leaves.insert(
            node.id,
            LeafComponent {
                e: group.g0_pow(&pk.g, p),
                e_prime: group.g0_pow(&hashes[a], p),
            },
        );
    }
    let mut layers = BTreeMap::new();
    for (c, &id) in tree.key_nodes() {
        let t = shares.shares[id] + shares.secret;
        layers.insert(
            c.clone(),
            LayerComponent {
                c_tilde: group.g1_mul(&messages[c], &group.g1_pow(&pk.egg_alpha, &t)),
                c: group.g0_pow(&pk.h, &t),
            },
        );
    }
    Ciphertext::from_parts(tree, leaves, layers)
}

/// `F = e(D_i, E) / e(D_i', E') = e(g,g)^{r p}` at one leaf.
pub fn decrypt_leaf<P: Pairing>(
    pk: &PublicKey<P>,
    uk: &UserKey<P>,
    ct: &Ciphertext<P>,
    leaf: NodeId,
) -> Result<P::G1, AbeError> {
    let node = ct.tree.nodes().get(leaf).ok_or(AbeError::NotALeaf(leaf))?;
    let a = node.attribute().ok_or(AbeError::NotALeaf(leaf))?;
    let k = uk
        .components
        .get(a)
        .ok_or_else(|| AbeError::MissingComponent(a.clone()))?;
    let e = &ct.leaves[&leaf];
    let group = &pk.group;
    Ok(group.g1_div(&group.pair(&k.d, &e.e), &group.pair(&k.d_prime, &e.e_prime)))
}

/// Recombines child values `(index, F_z)` at zero using the `threshold`
/// lowest indices.
pub fn interpolate_gate<P: Pairing>(
    group: &P,
    children: &[(usize, P::G1)],
    threshold: usize,
) -> Result<P::G1, AbeError> {
    if children.len() < threshold {
        return Err(AbeError::TooFewChildren {
            need: threshold,
            got: children.len(),
        });
    }
    let mut picked: Vec<&(usize, P::G1)> = children.iter().collect();
    picked.sort_by_key(|(i, _)| *i);
    picked.truncate(threshold);
    let idx: Vec<usize> = picked.iter().map(|(i, _)| *i).collect();
    let w = lagrange_at_zero(&idx);
    Ok(picked
        .iter()
        .zip(&w)
        .fold(group.g1_identity(), |acc, ((_, v), l)| {
            group.g1_mul(&acc, &group.g1_pow(v, l))
        }))
}

struct Evaluator<'a, P: Pairing> {
    pk: &'a PublicKey<P>,
    uk: &'a UserKey<P>,
    ct: &'a Ciphertext<P>,
    sat: Vec<bool>,
    memo: Vec<Option<P::G1>>,
}

impl<P: Pairing> Evaluator<'_, P> {
    fn satisfied_children(&self, id: NodeId) -> Vec<NodeId> {
        self.ct
            .tree
            .node(id)
            .children()
            .iter()
            .copied()
            .filter(|&c| self.sat[c])
            .collect()
    }

    /// Value of a node known to be reachable. Satisfied nodes are computed
    /// from below; the rest from their parent and satisfied siblings.
    fn value(&mut self, id: NodeId) -> Result<P::G1, AbeError> {
        if let Some(v) = &self.memo[id] {
            return Ok(v.clone());
        }
        let tree = &self.ct.tree;
        let node = tree.node(id);
        let v = if self.sat[id] {
            match &node.kind {
                NodeKind::Leaf(_) => decrypt_leaf(self.pk, self.uk, self.ct, id)?,
                NodeKind::Sealed => unreachable!("sealed nodes are never satisfied from below"),
                NodeKind::Gate { threshold, .. } => {
                    let k = *threshold;
                    let mut vals = Vec::with_capacity(k);
                    for c in self.satisfied_children(id).into_iter().take(k) {
                        vals.push((tree.node(c).index, self.value(c)?));
                    }
                    interpolate_gate(&self.pk.group, &vals, k)?
                }
            }
        } else {
            let parent = node
                .parent
                .ok_or_else(|| AbeError::Malformed("root is not satisfied".into()))?;
            let k = tree.node(parent).threshold();
            let siblings: Vec<NodeId> = self
                .satisfied_children(parent)
                .into_iter()
                .take(k - 1)
                .collect();
            if siblings.len() + 1 < k {
                return Err(AbeError::TooFewChildren {
                    need: k - 1,
                    got: siblings.len(),
                });
            }
            let mut xs = vec![Scalar::ZERO];
            let mut ys = vec![self.value(parent)?];
            for s in siblings {
                xs.push(Scalar::from_u64(tree.node(s).index as u64));
                ys.push(self.value(s)?);
            }
            let w = lagrange_coefficients(&xs, Scalar::from_u64(node.index as u64));
            let group = &self.pk.group;
            ys.iter().zip(&w).fold(group.g1_identity(), |acc, (y, l)| {
                group.g1_mul(&acc, &group.g1_pow(y, l))
            })
        };
        self.memo[id] = Some(v.clone());
        Ok(v)
    }
}

/// Recovers the message of every layer the key is entitled to.
pub fn decrypt<P: Pairing>(
    pk: &PublicKey<P>,
    uk: &UserKey<P>,
    ct: &Ciphertext<P>,
) -> Result<BTreeMap<LayerCoord, P::G1>, AbeError> {
    let tree = &ct.tree;
    let attrs = uk.attributes();
    if tree
        .structural_attributes()
        .all()
        .any(|a| !attrs.contains(a))
    {
        return Err(AbeError::StructureMismatch {
            key: uk.dims.to_string(),
            ciphertext: tree.dims().to_string(),
        });
    }
    let layers = tree.satisfied_key_nodes(&attrs);
    if layers.is_empty() {
        return Ok(BTreeMap::new());
    }
    let mut ev = Evaluator {
        pk,
        uk,
        ct,
        sat: tree.satisfiable(&attrs),
        memo: vec![None; tree.nodes().len()],
    };
    let group = &pk.group;
    let f_root = ev.value(tree.root())?;
    let mut out = BTreeMap::new();
    for c in layers {
        let f_r = ev.value(tree.key_nodes()[&c])?;
        let k = group.g1_mul(&f_r, &f_root);
        let comp = &ct.layers[&c];
        let blind = group.g1_div(&group.pair(&comp.c, &uk.d), &k);
        out.insert(c, group.g1_div(&comp.c_tilde, &blind));
    }
    Ok(out)
}

/// Derives a key for a subset of `uk`'s attributes. Structural attributes
/// are always kept.
pub fn delegate<P: Pairing, R: RngCore + CryptoRng + ?Sized>(
    pk: &PublicKey<P>,
    uk: &UserKey<P>,
    subset: &BTreeSet<Attribute>,
    rng: &mut R,
) -> Result<UserKey<P>, AbeError> {
    if let Some(a) = subset.iter().find(|a| !uk.components.contains_key(*a)) {
        return Err(AbeError::NotSubset(a.clone()));
    }
    let group = &pk.group;
    let r_t = Scalar::random(rng);
    let g_rt = group.g0_pow(&pk.g, &r_t);
    let d = group.g0_mul(&uk.d, &group.g0_pow(&pk.f, &r_t));
    let mut components = BTreeMap::new();
    for (a, k) in &uk.components {
        if !subset.contains(a) && !a.is_structural() {
            continue;
        }
        let r_i = Scalar::random(rng);
        let h = hash_attr(group, a)?;
        components.insert(
            a.clone(),
            AttributeComponent {
                d: group.g0_mul(&group.g0_mul(&k.d, &g_rt), &group.g0_pow(&h, &r_i)),
                d_prime: group.g0_mul(&k.d_prime, &group.g0_pow(&pk.g, &r_i)),
            },
        );
    }
    Ok(UserKey {
        d,
        components,
        dims: uk.dims.clone(),
    })
}
