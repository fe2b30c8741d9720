//! Layered media packages.
//!
//! Every layer gets a random `m_c` in G1. Its content key is
//! HKDF-SHA256 over the element's encoding, and the payload is sealed with
//! ChaCha20-Poly1305. All `m_c` travel in one ciphertext inside the
//! manifest. Each record's associated data binds the manifest digest and
//! the layer coordinate, so records cannot be swapped between layers or
//! packages.
//!
//! On disk a package is a directory holding `manifest` and one
//! `layer-<c1>_<c2>...` file per layer containing `nonce || ciphertext || tag`.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io;
use std::path::Path;

use chacha20poly1305::aead::{Aead, KeyInit, Payload};
use chacha20poly1305::{ChaCha20Poly1305, Key, Nonce};
use hkdf::Hkdf;
use rand_core::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::abe::{decrypt, encrypt, AbeError, PublicKey, UserKey};
use crate::envelope::{decode_ciphertext, encode_ciphertext, read_header, EnvelopeError};
use crate::lattice::{LatticeError, LayerCoord, PolicyDocument, PolicyLattice};
use crate::pairing::Pairing;

pub const MANIFEST_FORMAT: &str = "scpabe-package";
pub const MANIFEST_VERSION: u32 = 1;
pub const KDF_ID: &str = "HKDF-SHA256";
pub const AEAD_ID: &str = "ChaCha20-Poly1305";
pub const NONCE_BYTES: usize = 12;
pub const TAG_BYTES: usize = 16;
pub const MANIFEST_FILE: &str = "manifest";

const KEY_LABEL: &[u8] = b"scpabe/content-key/v1";

#[derive(Debug, Error)]
pub enum VaultError {
    #[error("layer {0} supplied more than once")]
    DuplicateLayer(LayerCoord),
    #[error("no payload supplied for layer {0}")]
    MissingLayer(LayerCoord),
    #[error("payload supplied for unknown layer {0}")]
    UnknownLayer(LayerCoord),
    #[error("record for layer {0} is truncated")]
    Truncated(LayerCoord),
    #[error("manifest: {0}")]
    Manifest(String),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Abe(#[from] AbeError),
    #[error(transparent)]
    Envelope(#[from] EnvelopeError),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> VaultError + '_ {
    move |source| VaultError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// 256-bit content key for a wrapped element.
pub fn derive_content_key<P: Pairing>(group: &P, m: &P::G1) -> [u8; 32] {
    let mut ikm = KEY_LABEL.to_vec();
    ikm.extend_from_slice(&group.encode_g1(m));
    let hk = Hkdf::<Sha256>::new(None, &ikm);
    let mut okm = [0u8; 32];
    hk.expand(b"layer payload", &mut okm)
        .expect("32 bytes is a valid HKDF-SHA256 output length");
    okm
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub kdf: String,
    pub aead: String,
    pub policy: PolicyDocument,
    /// Ciphertext envelope, embedded as JSON.
    pub ciphertext: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SealedLayer {
    pub nonce: [u8; NONCE_BYTES],
    /// Ciphertext followed by the tag.
    pub sealed: Vec<u8>,
}

impl SealedLayer {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.nonce.to_vec();
        out.extend_from_slice(&self.sealed);
        out
    }

    pub fn from_bytes(coord: &LayerCoord, bytes: &[u8]) -> Result<Self, VaultError> {
        if bytes.len() < NONCE_BYTES + TAG_BYTES {
            return Err(VaultError::Truncated(coord.clone()));
        }
        let mut nonce = [0u8; NONCE_BYTES];
        nonce.copy_from_slice(&bytes[..NONCE_BYTES]);
        Ok(SealedLayer {
            nonce,
            sealed: bytes[NONCE_BYTES..].to_vec(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MediaPackage {
    /// Manifest exactly as stored; its digest is bound into every record.
    pub manifest_bytes: Vec<u8>,
    pub records: BTreeMap<LayerCoord, SealedLayer>,
}

fn layer_aad(manifest_bytes: &[u8], c: &LayerCoord) -> Vec<u8> {
    let mut aad = Sha256::digest(manifest_bytes).to_vec();
    aad.extend_from_slice(c.to_string().as_bytes());
    aad
}

pub fn layer_file_name(c: &LayerCoord) -> String {
    format!("layer-{}", c.file_suffix())
}

/// Seals every layer and wraps the per-layer keys in one ciphertext.
pub fn package<P: Pairing, R: RngCore + CryptoRng + ?Sized>(
    pk: &PublicKey<P>,
    lat: &PolicyLattice,
    layers: Vec<(LayerCoord, Vec<u8>)>,
    rng: &mut R,
) -> Result<MediaPackage, VaultError> {
    let mut payloads = BTreeMap::new();
    for (c, bytes) in layers {
        if !lat.dims().contains(&c) {
            return Err(VaultError::UnknownLayer(c));
        }
        if payloads.contains_key(&c) {
            return Err(VaultError::DuplicateLayer(c));
        }
        payloads.insert(c, bytes);
    }
    if let Some(c) = lat.coords().find(|c| !payloads.contains_key(*c)) {
        return Err(VaultError::MissingLayer(c.clone()));
    }

    let group = &pk.group;
    let messages: BTreeMap<LayerCoord, P::G1> = lat
        .coords()
        .map(|c| (c.clone(), group.random_g1(rng)))
        .collect();
    let ct = encrypt(pk, lat, &messages, rng)?;
    let manifest = Manifest {
        format: MANIFEST_FORMAT.into(),
        version: MANIFEST_VERSION,
        kdf: KDF_ID.into(),
        aead: AEAD_ID.into(),
        policy: lat.to_document(),
        ciphertext: serde_json::from_str(&encode_ciphertext(group, &ct)).expect("envelope is JSON"),
    };
    let manifest_bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");

    let mut used = BTreeSet::new();
    let mut records = BTreeMap::new();
    for (c, payload) in payloads {
        let key = derive_content_key(group, &messages[&c]);
        let cipher = ChaCha20Poly1305::new(Key::from_slice(&key));
        let mut nonce = [0u8; NONCE_BYTES];
        loop {
            rng.fill_bytes(&mut nonce);
            if used.insert(nonce) {
                break;
            }
        }
        let aad = layer_aad(&manifest_bytes, &c);
        let sealed = cipher
            .encrypt(
                Nonce::from_slice(&nonce),
                Payload {
                    msg: &payload,
                    aad: &aad,
                },
            )
            .expect("in-memory encryption does not fail");
        records.insert(c, SealedLayer { nonce, sealed });
    }
    Ok(MediaPackage {
        manifest_bytes,
        records,
    })
}

/// Result of opening a package.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Unpacked {
    pub layers: BTreeMap<LayerCoord, Vec<u8>>,
    /// Layers the key is entitled to whose records failed authentication.
    pub tampered: BTreeSet<LayerCoord>,
}

pub fn parse_manifest(bytes: &[u8]) -> Result<Manifest, VaultError> {
    let m: Manifest =
        serde_json::from_slice(bytes).map_err(|e| VaultError::Manifest(e.to_string()))?;
    if m.format != MANIFEST_FORMAT {
        return Err(VaultError::Manifest(format!(
            "unknown format `{}`",
            m.format
        )));
    }
    if m.version != MANIFEST_VERSION {
        return Err(VaultError::Manifest(format!(
            "unsupported version {}",
            m.version
        )));
    }
    if m.kdf != KDF_ID || m.aead != AEAD_ID {
        return Err(VaultError::Manifest(format!(
            "unsupported algorithms {} / {}",
            m.kdf, m.aead
        )));
    }
    Ok(m)
}

/// Opens every layer the key is entitled to.
pub fn unpackage<P: Pairing>(
    pk: &PublicKey<P>,
    uk: &UserKey<P>,
    pkg: &MediaPackage,
) -> Result<Unpacked, VaultError> {
    let manifest = parse_manifest(&pkg.manifest_bytes)?;
    let lat = PolicyLattice::from_document(&manifest.policy)?;
    let ct_text = manifest.ciphertext.to_string();
    read_header(&ct_text)?;
    let ct = decode_ciphertext(&pk.group, &ct_text)?;
    if ct.tree().dims() != lat.dims() {
        return Err(VaultError::Manifest(
            "ciphertext and policy disagree on layers".into(),
        ));
    }
    let record_coords: BTreeSet<&LayerCoord> = pkg.records.keys().collect();
    if !lat.coords().eq(record_coords.iter().copied()) {
        return Err(VaultError::Manifest(
            "records do not match the policy's layers".into(),
        ));
    }

    let mut out = Unpacked::default();
    for (c, m) in decrypt(pk, uk, &ct)? {
        let rec = &pkg.records[&c];
        let key = derive_content_key(&pk.group, &m);
        let cipher = ChaCha20Poly1305::new(Key::from_slice(&key));
        let aad = layer_aad(&pkg.manifest_bytes, &c);
        match cipher.decrypt(
            Nonce::from_slice(&rec.nonce),
            Payload {
                msg: &rec.sealed,
                aad: &aad,
            },
        ) {
            Ok(bytes) => {
                out.layers.insert(c, bytes);
            }
            Err(_) => {
                out.tampered.insert(c);
            }
        }
    }
    Ok(out)
}

impl MediaPackage {
    pub fn manifest(&self) -> Result<Manifest, VaultError> {
        parse_manifest(&self.manifest_bytes)
    }

    /// Writes records first and the manifest last.
    pub fn write_dir(&self, dir: &Path) -> Result<(), VaultError> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        for (c, rec) in &self.records {
            let path = dir.join(layer_file_name(c));
            write_atomic(&path, &rec.to_bytes())?;
        }
        write_atomic(&dir.join(MANIFEST_FILE), &self.manifest_bytes)
    }

    pub fn read_dir(dir: &Path) -> Result<Self, VaultError> {
        let mpath = dir.join(MANIFEST_FILE);
        let manifest_bytes = fs::read(&mpath).map_err(io_err(&mpath))?;
        let manifest = parse_manifest(&manifest_bytes)?;
        let dims = crate::lattice::Dimensions::new(manifest.policy.dims.clone())?;
        let mut records = BTreeMap::new();
        for c in dims.coords() {
            let path = dir.join(layer_file_name(&c));
            let bytes = fs::read(&path).map_err(io_err(&path))?;
            let rec = SealedLayer::from_bytes(&c, &bytes)?;
            records.insert(c, rec);
        }
        Ok(MediaPackage {
            manifest_bytes,
            records,
        })
    }
}

/// Writes through a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), VaultError> {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    fs::write(&tmp, bytes).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}
