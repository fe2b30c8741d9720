//! Debug group where every element is its own discrete logarithm.
//!
//! G0 and G1 are both `Z_r` written additively; exponentiation is modular
//! multiplication and `e(x, y) = x * y`. Every identity the scheme relies on
//! becomes an integer identity that tests can assert exactly.

use sha2::{Digest, Sha256};

use super::{
    hex_bytes, order_hex, GroupDescriptor, Pairing, PairingError, ProviderId, Scalar, SCALAR_BYTES,
};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Transparent;

/// Element of G0, represented by `log_g`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransparentG0(pub Scalar);

/// Element of G1, represented by `log_{e(g,g)}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransparentG1(pub Scalar);

impl TransparentG0 {
    pub fn exponent(&self) -> Scalar {
        self.0
    }
}

impl TransparentG1 {
    pub fn exponent(&self) -> Scalar {
        self.0
    }
}

impl Pairing for Transparent {
    type G0 = TransparentG0;
    type G1 = TransparentG1;

    const ID: ProviderId = ProviderId::Transparent;

    fn descriptor(&self) -> GroupDescriptor {
        GroupDescriptor {
            provider: ProviderId::Transparent,
            order: order_hex(),
            generator: hex_bytes(&self.encode_g0(&self.generator())),
            scalar_bytes: SCALAR_BYTES,
            g0_bytes: SCALAR_BYTES,
            g1_bytes: SCALAR_BYTES,
        }
    }

    fn generator(&self) -> TransparentG0 {
        TransparentG0(Scalar::ONE)
    }

    fn g0_identity(&self) -> TransparentG0 {
        TransparentG0(Scalar::ZERO)
    }

    fn g0_mul(&self, a: &TransparentG0, b: &TransparentG0) -> TransparentG0 {
        TransparentG0(a.0 + b.0)
    }

    fn g0_pow(&self, a: &TransparentG0, e: &Scalar) -> TransparentG0 {
        TransparentG0(a.0 * *e)
    }

    fn g1_identity(&self) -> TransparentG1 {
        TransparentG1(Scalar::ZERO)
    }

    fn g1_mul(&self, a: &TransparentG1, b: &TransparentG1) -> TransparentG1 {
        TransparentG1(a.0 + b.0)
    }

    fn g1_inv(&self, a: &TransparentG1) -> TransparentG1 {
        TransparentG1(-a.0)
    }

    fn g1_pow(&self, a: &TransparentG1, e: &Scalar) -> TransparentG1 {
        TransparentG1(a.0 * *e)
    }

    fn pair(&self, a: &TransparentG0, b: &TransparentG0) -> TransparentG1 {
        TransparentG1(a.0 * b.0)
    }

    fn hash_to_g0(&self, label: &[u8]) -> Result<TransparentG0, PairingError> {
        if label.is_empty() {
            return Err(PairingError::EmptyLabel);
        }
        let digest = Sha256::digest(label);
        Ok(TransparentG0(Scalar::from_be_bytes_reduced(&digest)))
    }

    fn encode_g0(&self, a: &TransparentG0) -> Vec<u8> {
        a.0.to_bytes().to_vec()
    }

    fn decode_g0(&self, bytes: &[u8]) -> Result<TransparentG0, PairingError> {
        Scalar::from_bytes(bytes).map(TransparentG0)
    }

    fn encode_g1(&self, a: &TransparentG1) -> Vec<u8> {
        a.0.to_bytes().to_vec()
    }

    fn decode_g1(&self, bytes: &[u8]) -> Result<TransparentG1, PairingError> {
        Scalar::from_bytes(bytes).map(TransparentG1)
    }
}

impl Transparent {
    /// The G0 element with the given discrete log.
    pub fn g0(&self, exponent: u64) -> TransparentG0 {
        TransparentG0(Scalar::from_u64(exponent))
    }

    /// The G1 element with the given discrete log.
    pub fn g1(&self, exponent: u64) -> TransparentG1 {
        TransparentG1(Scalar::from_u64(exponent))
    }
}
