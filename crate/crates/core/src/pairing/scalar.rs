//! Exponents modulo the prime group order shared by every provider.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use crypto_bigint::modular::constant_mod::{Residue, ResidueParams};
use crypto_bigint::{impl_modulus, Encoding, NonZero, U192, U512};
use rand_core::{CryptoRng, RngCore};

use super::PairingError;

impl_modulus!(
    OrderModulus,
    U192,
    "000000008000000000000800000000000000000000000001"
);

type Fr = Residue<OrderModulus, { U192::LIMBS }>;

/// Group order `r = 2^159 + 2^107 + 1`.
pub const ORDER: U192 = OrderModulus::MODULUS;

/// Bit length of the group order.
pub const ORDER_BITS: usize = 160;

/// Canonical big-endian encoding width of a scalar.
pub const SCALAR_BYTES: usize = 20;

/// An integer modulo the group order.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct Scalar(Fr);

impl Scalar {
    pub const ZERO: Scalar = Scalar(Fr::ZERO);
    pub const ONE: Scalar = Scalar(Fr::ONE);

    pub fn from_u64(v: u64) -> Self {
        Scalar(Fr::new(&U192::from_u64(v)))
    }

    /// Reduces an arbitrary big-endian byte string (at most 64 bytes) modulo the order.
    pub fn from_be_bytes_reduced(bytes: &[u8]) -> Self {
        assert!(bytes.len() <= 64, "at most 512 bits can be reduced");
        let mut wide = [0u8; 64];
        wide[64 - bytes.len()..].copy_from_slice(bytes);
        let wide = U512::from_be_bytes(wide);
        let modulus = NonZero::new(ORDER.resize::<{ U512::LIMBS }>()).unwrap();
        let reduced = wide.rem(&modulus);
        Scalar(Fr::new(&reduced.resize::<{ U192::LIMBS }>()))
    }

    /// Uniform sample in `[0, r)` by rejection.
    pub fn random<R: RngCore + CryptoRng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let mut buf = [0u8; SCALAR_BYTES];
            rng.fill_bytes(&mut buf);
            if let Ok(s) = Self::from_bytes(&buf) {
                return s;
            }
        }
    }

    /// Uniform sample in `[1, r)`.
    pub fn random_nonzero<R: RngCore + CryptoRng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let s = Self::random(rng);
            if !s.is_zero() {
                return s;
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.0 == Fr::ZERO
    }

    pub fn invert(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        let (inv, ok) = self.0.invert();
        bool::from(ok).then_some(Scalar(inv))
    }

    pub fn square(&self) -> Self {
        Scalar(self.0.square())
    }

    pub fn pow_u64(&self, mut e: u64) -> Self {
        let mut base = *self;
        let mut acc = Scalar::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc *= base;
            }
            base = base.square();
            e >>= 1;
        }
        acc
    }

    /// The canonical integer representative.
    pub fn to_uint(&self) -> U192 {
        self.0.retrieve()
    }

    pub fn to_bytes(&self) -> [u8; SCALAR_BYTES] {
        let full = self.0.retrieve().to_be_bytes();
        let mut out = [0u8; SCALAR_BYTES];
        out.copy_from_slice(&full[full.len() - SCALAR_BYTES..]);
        out
    }

    /// Parses a fixed-width big-endian encoding, rejecting values `>= r`.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, PairingError> {
        if bytes.len() != SCALAR_BYTES {
            return Err(PairingError::Length {
                expected: SCALAR_BYTES,
                actual: bytes.len(),
            });
        }
        let mut full = [0u8; 24];
        full[24 - SCALAR_BYTES..].copy_from_slice(bytes);
        let v = U192::from_be_bytes(full);
        if v >= ORDER {
            return Err(PairingError::NonCanonical);
        }
        Ok(Scalar(Fr::new(&v)))
    }

    /// Iterates the bits of the canonical representative, most significant first,
    /// starting at bit `ORDER_BITS - 1`.
    pub(crate) fn bits_msb_first(&self) -> impl Iterator<Item = bool> {
        let v = self.to_uint();
        (0..ORDER_BITS).rev().map(move |i| v.bit_vartime(i))
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Scalar(0x{})", hex_trim(&self.to_bytes()))
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{}", hex_trim(&self.to_bytes()))
    }
}

fn hex_trim(bytes: &[u8]) -> String {
    let s: String = bytes.iter().map(|b| format!("{b:02x}")).collect();
    let t = s.trim_start_matches('0');
    if t.is_empty() {
        "0".into()
    } else {
        t.into()
    }
}

impl From<u64> for Scalar {
    fn from(v: u64) -> Self {
        Scalar::from_u64(v)
    }
}

impl Add for Scalar {
    type Output = Scalar;
    fn add(self, rhs: Scalar) -> Scalar {
        Scalar(self.0 + rhs.0)
    }
}

impl Sub for Scalar {
    type Output = Scalar;
    fn sub(self, rhs: Scalar) -> Scalar {
        Scalar(self.0 - rhs.0)
    }
}

impl Mul for Scalar {
    type Output = Scalar;
    fn mul(self, rhs: Scalar) -> Scalar {
        Scalar(self.0 * rhs.0)
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar(-self.0)
    }
}

impl AddAssign for Scalar {
    fn add_assign(&mut self, rhs: Scalar) {
        self.0 += rhs.0;
    }
}

impl SubAssign for Scalar {
    fn sub_assign(&mut self, rhs: Scalar) {
        self.0 -= rhs.0;
    }
}

impl MulAssign for Scalar {
    fn mul_assign(&mut self, rhs: Scalar) {
        self.0 *= rhs.0;
    }
}

impl std::iter::Sum for Scalar {
    fn sum<I: Iterator<Item = Scalar>>(iter: I) -> Scalar {
        iter.fold(Scalar::ZERO, |a, b| a + b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn order_is_the_solinas_prime() {
        let expected = U192::ONE
            .shl_vartime(159)
            .wrapping_add(&U192::ONE.shl_vartime(107))
            .wrapping_add(&U192::ONE);
        assert_eq!(ORDER, expected);
        assert_eq!(ORDER.bits_vartime(), ORDER_BITS);
    }

    #[test]
    fn field_identities() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for _ in 0..50 {
            let a = Scalar::random(&mut rng);
            let b = Scalar::random_nonzero(&mut rng);
            assert_eq!(a + b - b, a);
            assert_eq!(a * b * b.invert().unwrap(), a);
            assert_eq!(a + (-a), Scalar::ZERO);
        }
        assert_eq!(Scalar::ZERO.invert(), None);
        assert_eq!(Scalar::from(3u64).pow_u64(4), Scalar::from(81u64));
    }

    #[test]
    fn seeded_sampling_is_reproducible() {
        let a: Vec<_> = (0..5)
            .scan(ChaCha20Rng::seed_from_u64(9), |r, _| {
                Some(Scalar::random(r))
            })
            .collect();
        let b: Vec<_> = (0..5)
            .scan(ChaCha20Rng::seed_from_u64(9), |r, _| {
                Some(Scalar::random(r))
            })
            .collect();
        assert_eq!(a, b);
    }

    #[test]
    fn draws_stay_in_range_and_are_centered() {
        let mut rng = ChaCha20Rng::seed_from_u64(42);
        let n = 100_000;
        let mut sum = 0f64;
        for _ in 0..n {
            let s = Scalar::random(&mut rng);
            assert!(s.to_uint() < ORDER);
            // Leading 53 bits of s/r as a float are plenty for a mean estimate.
            let b = s.to_bytes();
            let top = u64::from_be_bytes(b[..8].try_into().unwrap()) as f64;
            sum += top / (0x8000_0000_0000_0800u64 as f64);
        }
        let mean = sum / n as f64;
        assert!((mean - 0.5).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn encoding_rejects_bad_input() {
        let s = Scalar::from_u64(77);
        assert_eq!(Scalar::from_bytes(&s.to_bytes()).unwrap(), s);
        assert!(matches!(
            Scalar::from_bytes(&s.to_bytes()[1..]),
            Err(PairingError::Length { .. })
        ));
        let r_bytes = ORDER.to_be_bytes();
        assert_eq!(
            Scalar::from_bytes(&r_bytes[4..]),
            Err(PairingError::NonCanonical)
        );
    }

    #[test]
    fn reduction_of_wide_input() {
        let r_bytes = ORDER.to_be_bytes();
        assert_eq!(Scalar::from_be_bytes_reduced(&r_bytes), Scalar::ZERO);
        assert_eq!(Scalar::from_be_bytes_reduced(&[0, 5]), Scalar::from_u64(5));
    }
}
