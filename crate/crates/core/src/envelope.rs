//! Text envelopes for keys and ciphertexts.
//!
//! ```json
//! {"format": "scpabe", "version": 1, "role": "pk", "group": {...}, "body": {...}}
//! ```
//!
//! Group elements in the body are standard base64 of their canonical
//! encodings. The group descriptor must match the provider used to load.

use std::collections::BTreeMap;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine as _;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::abe::{
    AbeError, AttributeComponent, Ciphertext, LayerComponent, LeafComponent, MasterKey, PublicKey,
    UserKey,
};
use crate::lattice::{Attribute, Dimensions, LayerCoord};
use crate::pairing::{GroupDescriptor, Pairing, PairingError, ProviderId, Scalar};
use crate::tree::{AccessTree, NodeId, TreeDocument, TreeError};

pub const FORMAT: &str = "scpabe";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum EnvelopeError {
    #[error("not a valid envelope: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unknown format `{0}`")]
    Format(String),
    #[error("unsupported version {0}")]
    Version(u32),
    #[error("expected a `{expected}` envelope, found `{found}`")]
    Role { expected: Role, found: Role },
    #[error("field `{field}`: {source}")]
    Element { field: String, source: PairingError },
    #[error("field `{0}` is not valid base64")]
    Base64(String),
    #[error(transparent)]
    Group(PairingError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Abe(#[from] AbeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Pk,
    Mk,
    Sk,
    Ct,
}

impl std::fmt::Display for Role {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Role::Pk => "pk",
            Role::Mk => "mk",
            Role::Sk => "sk",
            Role::Ct => "ct",
        })
    }
}

/// Envelope fields other than the body.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Header {
    pub format: String,
    pub version: u32,
    pub role: Role,
    pub group: GroupDescriptor,
}

#[derive(Serialize, Deserialize)]
struct Envelope<B> {
    #[serde(flatten)]
    header: Header,
    body: B,
}

/// Reads and checks the header without decoding the body.
pub fn read_header(text: &str) -> Result<Header, EnvelopeError> {
    #[derive(Deserialize)]
    struct Peek {
        #[serde(flatten)]
        header: Header,
    }
    let peek: Peek = serde_json::from_str(text)?;
    let h = peek.header;
    if h.format != FORMAT {
        return Err(EnvelopeError::Format(h.format));
    }
    if h.version != VERSION {
        return Err(EnvelopeError::Version(h.version));
    }
    Ok(h)
}

/// Provider named in an envelope's header.
pub fn provider_of(text: &str) -> Result<ProviderId, EnvelopeError> {
    Ok(read_header(text)?.group.provider)
}

fn wrap<P: Pairing, B: Serialize>(group: &P, role: Role, body: B) -> String {
    let env = Envelope {
        header: Header {
            format: FORMAT.into(),
            version: VERSION,
            role,
            group: group.descriptor(),
        },
        body,
    };
    serde_json::to_string_pretty(&env).expect("envelope serializes")
}

fn unwrap<P: Pairing, B: DeserializeOwned>(
    group: &P,
    role: Role,
    text: &str,
) -> Result<B, EnvelopeError> {
    let header = read_header(text)?;
    if header.role != role {
        return Err(EnvelopeError::Role {
            expected: role,
            found: header.role,
        });
    }
    group
        .descriptor()
        .ensure_matches(&header.group)
        .map_err(EnvelopeError::Group)?;
    let env: Envelope<B> = serde_json::from_str(text)?;
    Ok(env.body)
}

fn b64(bytes: &[u8]) -> String {
    B64.encode(bytes)
}

fn unb64(field: &str, s: &str) -> Result<Vec<u8>, EnvelopeError> {
    B64.decode(s)
        .map_err(|_| EnvelopeError::Base64(field.into()))
}

fn g0<P: Pairing>(group: &P, field: &str, s: &str) -> Result<P::G0, EnvelopeError> {
    group
        .decode_g0(&unb64(field, s)?)
        .map_err(|source| EnvelopeError::Element {
            field: field.into(),
            source,
        })
}

fn g1<P: Pairing>(group: &P, field: &str, s: &str) -> Result<P::G1, EnvelopeError> {
    group
        .decode_g1(&unb64(field, s)?)
        .map_err(|source| EnvelopeError::Element {
            field: field.into(),
            source,
        })
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PkBody {
    g: String,
    h: String,
    f: String,
    egg_alpha: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MkBody {
    beta: String,
    g_alpha: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PairBody {
    d: String,
    d_prime: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SkBody {
    dims: Dimensions,
    d: String,
    components: BTreeMap<Attribute, PairBody>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LeafBody {
    e: String,
    e_prime: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerBody {
    c_tilde: String,
    c: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CtBody {
    tree: TreeDocument,
    leaves: BTreeMap<NodeId, LeafBody>,
    layers: BTreeMap<LayerCoord, LayerBody>,
}

pub fn encode_public_key<P: Pairing>(pk: &PublicKey<P>) -> String {
    let g = &pk.group;
    wrap(
        g,
        Role::Pk,
        PkBody {
            g: b64(&g.encode_g0(&pk.g)),
            h: b64(&g.encode_g0(&pk.h)),
            f: b64(&g.encode_g0(&pk.f)),
            egg_alpha: b64(&g.encode_g1(&pk.egg_alpha)),
        },
    )
}

pub fn decode_public_key<P: Pairing>(group: P, text: &str) -> Result<PublicKey<P>, EnvelopeError> {
    let b: PkBody = unwrap(&group, Role::Pk, text)?;
    Ok(PublicKey {
        g: g0(&group, "g", &b.g)?,
        h: g0(&group, "h", &b.h)?,
        f: g0(&group, "f", &b.f)?,
        egg_alpha: g1(&group, "egg_alpha", &b.egg_alpha)?,
        group,
    })
}

pub fn encode_master_key<P: Pairing>(group: &P, mk: &MasterKey<P>) -> String {
    wrap(
        group,
        Role::Mk,
        MkBody {
            beta: b64(&mk.beta.to_bytes()),
            g_alpha: b64(&group.encode_g0(&mk.g_alpha)),
        },
    )
}

pub fn decode_master_key<P: Pairing>(group: &P, text: &str) -> Result<MasterKey<P>, EnvelopeError> {
    let b: MkBody = unwrap(group, Role::Mk, text)?;
    let beta =
        Scalar::from_bytes(&unb64("beta", &b.beta)?).map_err(|source| EnvelopeError::Element {
            field: "beta".into(),
            source,
        })?;
    if beta.is_zero() {
        return Err(EnvelopeError::Element {
            field: "beta".into(),
            source: PairingError::NonCanonical,
        });
    }
    Ok(MasterKey {
        beta,
        g_alpha: g0(group, "g_alpha", &b.g_alpha)?,
    })
}

pub fn encode_user_key<P: Pairing>(group: &P, uk: &UserKey<P>) -> String {
    wrap(
        group,
        Role::Sk,
        SkBody {
            dims: uk.dims.clone(),
            d: b64(&group.encode_g0(&uk.d)),
            components: uk
                .components
                .iter()
                .map(|(a, k)| {
                    (
                        a.clone(),
                        PairBody {
                            d: b64(&group.encode_g0(&k.d)),
                            d_prime: b64(&group.encode_g0(&k.d_prime)),
                        },
                    )
                })
                .collect(),
        },
    )
}

pub fn decode_user_key<P: Pairing>(group: &P, text: &str) -> Result<UserKey<P>, EnvelopeError> {
    let b: SkBody = unwrap(group, Role::Sk, text)?;
    let mut components = BTreeMap::new();
    for (a, k) in b.components {
        let field = format!("components.{a}");
        components.insert(
            a,
            AttributeComponent {
                d: g0(group, &field, &k.d)?,
                d_prime: g0(group, &field, &k.d_prime)?,
            },
        );
    }
    Ok(UserKey {
        d: g0(group, "d", &b.d)?,
        components,
        dims: b.dims,
    })
}

pub fn encode_ciphertext<P: Pairing>(group: &P, ct: &Ciphertext<P>) -> String {
    wrap(
        group,
        Role::Ct,
        CtBody {
            tree: ct.tree().to_document(),
            leaves: ct
                .leaves()
                .iter()
                .map(|(id, l)| {
                    (
                        *id,
                        LeafBody {
                            e: b64(&group.encode_g0(&l.e)),
                            e_prime: b64(&group.encode_g0(&l.e_prime)),
                        },
                    )
                })
                .collect(),
            layers: ct
                .layers()
                .iter()
                .map(|(c, l)| {
                    (
                        c.clone(),
                        LayerBody {
                            c_tilde: b64(&group.encode_g1(&l.c_tilde)),
                            c: b64(&group.encode_g0(&l.c)),
                        },
                    )
                })
                .collect(),
        },
    )
}

pub fn decode_ciphertext<P: Pairing>(
    group: &P,
    text: &str,
) -> Result<Ciphertext<P>, EnvelopeError> {
    let b: CtBody = unwrap(group, Role::Ct, text)?;
    let tree = AccessTree::from_document(&b.tree)?;
    let mut leaves = BTreeMap::new();
    for (id, l) in b.leaves {
        let field = format!("leaves.{id}");
        leaves.insert(
            id,
            LeafComponent {
                e: g0(group, &field, &l.e)?,
                e_prime: g0(group, &field, &l.e_prime)?,
            },
        );
    }
    let mut layers = BTreeMap::new();
    for (c, l) in b.layers {
        let field = format!("layers.{c}");
        layers.insert(
            c,
            LayerComponent {
                c_tilde: g1(group, &field, &l.c_tilde)?,
                c: g0(group, &field, &l.c)?,
            },
        );
    }
    Ok(Ciphertext::from_parts(tree, leaves, layers)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abe::{encrypt, keygen, setup};
    use crate::lattice::{AccessPolicy, PolicyLattice};
    use crate::pairing::{Transparent, TypeA};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn lattice() -> PolicyLattice {
        PolicyLattice::from_json(
            r#"{"dims":[2,2],"layers":{"1,1":["a"],"1,2":["a","x"],"2,1":["a","y"],"2,2":["a","x","y","z"]}}"#,
        )
        .unwrap()
    }

    fn round_trip<P: Pairing>(group: P) {
        let mut rng = ChaCha20Rng::seed_from_u64(21);
        let (pk, mk) = setup(group.clone(), &mut rng);
        let lat = lattice();
        let attrs = AccessPolicy::parse(["a", "x"]).unwrap();
        let uk = keygen(&pk, &mk, &attrs, lat.dims(), &mut rng).unwrap();
        let msgs = lat
            .coords()
            .map(|c| (c.clone(), group.random_g1(&mut rng)))
            .collect();
        let ct = encrypt(&pk, &lat, &msgs, &mut rng).unwrap();

        let text = encode_public_key(&pk);
        assert_eq!(read_header(&text).unwrap().role, Role::Pk);
        assert_eq!(decode_public_key(group.clone(), &text).unwrap(), pk);
        let text = encode_master_key(&group, &mk);
        assert_eq!(decode_master_key(&group, &text).unwrap(), mk);
        let text = encode_user_key(&group, &uk);
        assert_eq!(decode_user_key(&group, &text).unwrap(), uk);
        let text = encode_ciphertext(&group, &ct);
        assert_eq!(decode_ciphertext(&group, &text).unwrap(), ct);
        assert!(matches!(
            decode_user_key(&group, &text),
            Err(EnvelopeError::Role {
                expected: Role::Sk,
                found: Role::Ct
            })
        ));
    }

    #[test]
    fn transparent_round_trip() {
        round_trip(Transparent);
    }

    #[test]
    fn type_a_round_trip() {
        round_trip(TypeA);
    }

    #[test]
    fn foreign_provider_is_rejected() {
        let mut rng = ChaCha20Rng::seed_from_u64(22);
        let (pk, _) = setup(Transparent, &mut rng);
        let text = encode_public_key(&pk);
        assert_eq!(provider_of(&text).unwrap(), ProviderId::Transparent);
        assert!(matches!(
            decode_public_key(TypeA, &text),
            Err(EnvelopeError::Group(PairingError::ProviderMismatch { .. }))
        ));
    }

    #[test]
    fn unknown_version_is_rejected() {
        let mut rng = ChaCha20Rng::seed_from_u64(23);
        let (pk, _) = setup(Transparent, &mut rng);
        let text = encode_public_key(&pk).replace("\"version\": 1", "\"version\": 2");
        assert!(matches!(
            decode_public_key(Transparent, &text),
            Err(EnvelopeError::Version(2))
        ));
    }

    #[test]
    fn damaged_element_is_rejected() {
        let mut rng = ChaCha20Rng::seed_from_u64(24);
        let (pk, _) = setup(TypeA, &mut rng);
        let mut v: serde_json::Value = serde_json::from_str(&encode_public_key(&pk)).unwrap();
        let mut bytes = B64.decode(v["body"]["h"].as_str().unwrap()).unwrap();
        bytes[20] ^= 1;
        v["body"]["h"] = B64.encode(&bytes).into();
        assert!(matches!(
            decode_public_key(TypeA, &v.to_string()),
            Err(EnvelopeError::Element { .. })
        ));
    }
}
