//! Symmetric bilinear groups `e: G0 x G0 -> G1` of prime order.
//!
//! Two instantiations share one scalar field:
//!
//! * [`TypeA`] — the supersingular curve `y^2 = x^3 + x` over a 512-bit prime
//!   field with embedding degree 2, paired with the reduced Tate pairing and
//!   the distortion map `(x, y) -> (-x, i*y)`.
//! * [`Transparent`] — every element is represented by its discrete log, so
//!   pairing is multiplication of exponents. Useless for secrecy, exact for
//!   checking algebra.

mod scalar;
mod transparent;
mod type_a;

use std::fmt;

use rand_core::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use scalar::{Scalar, ORDER, ORDER_BITS, SCALAR_BYTES};
pub use transparent::{Transparent, TransparentG0, TransparentG1};
pub use type_a::{TypeA, TypeAG0, TypeAG1};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PairingError {
    #[error("expected {expected} bytes, got {actual}")]
    Length { expected: usize, actual: usize },
    #[error("non-canonical encoding")]
    NonCanonical,
    #[error("bytes do not encode a group element")]
    NotOnGroup,
    #[error("hash-to-group label must be nonempty")]
    EmptyLabel,
    #[error("provider mismatch: expected {expected}, found {found}")]
    ProviderMismatch { expected: String, found: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProviderId {
    TypeA,
    Transparent,
}

impl ProviderId {
    pub fn as_str(&self) -> &'static str {
        match self {
            ProviderId::TypeA => "type-a",
            ProviderId::Transparent => "transparent",
        }
    }
}

impl fmt::Display for ProviderId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ProviderId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "type-a" => Ok(ProviderId::TypeA),
            "transparent" => Ok(ProviderId::Transparent),
            other => Err(format!("unknown provider `{other}`")),
        }
    }
}

pub(crate) fn hex_bytes(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub(crate) fn order_hex() -> String {
    use crypto_bigint::Encoding;
    let s = hex_bytes(&ORDER.to_be_bytes());
    s.trim_start_matches('0').to_string()
}

/// Public description of a group instantiation, embedded in every
/// serialized key and ciphertext.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupDescriptor {
    pub provider: ProviderId,
    /// Group order, lowercase hex.
    pub order: String,
    /// Canonical encoding of the generator of G0, lowercase hex.
    pub generator: String,
    pub scalar_bytes: usize,
    pub g0_bytes: usize,
    pub g1_bytes: usize,
}

impl GroupDescriptor {
    /// Fails unless `other` describes the same instantiation.
    pub fn ensure_matches(&self, other: &GroupDescriptor) -> Result<(), PairingError> {
        if self == other {
            Ok(())
        } else {
            Err(PairingError::ProviderMismatch {
                expected: format!("{} ({} byte G0)", self.provider, self.g0_bytes),
                found: format!("{} ({} byte G0)", other.provider, other.g0_bytes),
            })
        }
    }
}

/// A symmetric bilinear group. All operations are pure; elements are
/// immutable values.
pub trait Pairing: Clone + PartialEq + Eq + fmt::Debug + Send + Sync + 'static {
    type G0: Clone + PartialEq + Eq + fmt::Debug + Send + Sync;
    type G1: Clone + PartialEq + Eq + fmt::Debug + Send + Sync;

    const ID: ProviderId;

    fn descriptor(&self) -> GroupDescriptor;

    fn generator(&self) -> Self::G0;
    fn g0_identity(&self) -> Self::G0;
    fn g0_mul(&self, a: &Self::G0, b: &Self::G0) -> Self::G0;
    fn g0_pow(&self, a: &Self::G0, e: &Scalar) -> Self::G0;

    fn g1_identity(&self) -> Self::G1;
    fn g1_mul(&self, a: &Self::G1, b: &Self::G1) -> Self::G1;
    fn g1_inv(&self, a: &Self::G1) -> Self::G1;
    fn g1_pow(&self, a: &Self::G1, e: &Scalar) -> Self::G1;

    fn pair(&self, a: &Self::G0, b: &Self::G0) -> Self::G1;

    /// Deterministic map from labels into G0, modeled as a random oracle.
    fn hash_to_g0(&self, label: &[u8]) -> Result<Self::G0, PairingError>;

    fn encode_g0(&self, a: &Self::G0) -> Vec<u8>;
    fn decode_g0(&self, bytes: &[u8]) -> Result<Self::G0, PairingError>;
    fn encode_g1(&self, a: &Self::G1) -> Vec<u8>;
    fn decode_g1(&self, bytes: &[u8]) -> Result<Self::G1, PairingError>;

    fn g1_div(&self, a: &Self::G1, b: &Self::G1) -> Self::G1 {
        self.g1_mul(a, &self.g1_inv(b))
    }

    /// `g^e` for the fixed generator.
    fn g0_exp(&self, e: &Scalar) -> Self::G0 {
        self.g0_pow(&self.generator(), e)
    }

    /// Uniformly random element of G1.
    fn random_g1<R: RngCore + CryptoRng + ?Sized>(&self, rng: &mut R) -> Self::G1 {
        let g = self.generator();
        let base = self.pair(&g, &g);
        self.g1_pow(&base, &Scalar::random(rng))
    }
}
