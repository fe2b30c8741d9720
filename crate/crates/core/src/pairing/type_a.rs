//! Supersingular curve `E: y^2 = x^3 + x` over `F_q`, `q = 3 mod 4`.
//!
//! `#E(F_q) = q + 1 = h * r` with `r = 2^159 + 2^107 + 1`, so the embedding
//! degree is 2. G0 is the order-`r` subgroup of `E(F_q)`, G1 the order-`r`
//! subgroup of `F_{q^2}^*` with `F_{q^2} = F_q[i]/(i^2 + 1)`. The pairing is
//! the reduced Tate pairing composed with the distortion map
//! `psi(x, y) = (-x, i*y)`, which makes it symmetric and non-degenerate on G0.

use std::sync::OnceLock;

use crypto_bigint::modular::constant_mod::{Residue, ResidueParams};
use crypto_bigint::{impl_modulus, Encoding, NonZero, U1024, U192, U512};
use sha2::{Digest, Sha512};

use super::{hex_bytes, order_hex, GroupDescriptor, Pairing, PairingError, ProviderId, Scalar};
use super::{ORDER, SCALAR_BYTES};

impl_modulus!(
    FieldModulus,
    U512,
    "e0e9fe7f95203878d56d05c6192da7365fe40bf83b7083587429d406a352ef3e\
     0dd2f19f7d94d77b226c051c2cd0530e83501d03adb64a0872e649e2babced6b"
);

type Fq = Residue<FieldModulus, { U512::LIMBS }>;

const FQ_BYTES: usize = 64;
const G0_BYTES: usize = 1 + FQ_BYTES;
const G1_BYTES: usize = 2 * FQ_BYTES;

/// Cofactor `h = (q + 1) / r`.
const COFACTOR: U512 = U512::from_be_hex(
    "0000000000000000000000000000000000000001c1d3fcff2a4054d46b0a18e8\
     2d0e07bc1e39951c12bd4acefa813d389be4bd03adb64a0872e649e2babced6c",
);

const HASH_DST: &[u8] = b"SCPABE-V01-TYPEA-HASH-TO-G0";
const GENERATOR_LABEL: &[u8] = b"scpabe/type-a/generator";

fn is_zero(a: &Fq) -> bool {
    *a == Fq::ZERO
}

fn parity(a: &Fq) -> bool {
    a.retrieve().bit_vartime(0)
}

fn sqrt_exponent() -> &'static U512 {
    static EXP: OnceLock<U512> = OnceLock::new();
    EXP.get_or_init(|| {
        FieldModulus::MODULUS
            .wrapping_add(&U512::ONE)
            .shr_vartime(2)
    })
}

fn sqrt(a: &Fq) -> Option<Fq> {
    let root = a.pow(sqrt_exponent());
    (root.square() == *a).then_some(root)
}

fn fq_to_bytes(a: &Fq) -> [u8; FQ_BYTES] {
    a.retrieve().to_be_bytes()
}

fn fq_from_bytes(bytes: &[u8]) -> Result<Fq, PairingError> {
    let v = U512::from_be_slice(bytes);
    if v >= FieldModulus::MODULUS {
        return Err(PairingError::NonCanonical);
    }
    Ok(Fq::new(&v))
}

/// Element of `F_{q^2}`: `c0 + c1 * i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Fq2 {
    c0: Fq,
    c1: Fq,
}

impl Fq2 {
    const ONE: Fq2 = Fq2 {
        c0: Fq::ONE,
        c1: Fq::ZERO,
    };

    fn mul(&self, o: &Fq2) -> Fq2 {
        let a = self.c0 * o.c0;
        let b = self.c1 * o.c1;
        let c = (self.c0 + self.c1) * (o.c0 + o.c1);
        Fq2 {
            c0: a - b,
            c1: c - a - b,
        }
    }

    fn square(&self) -> Fq2 {
        let ab = self.c0 * self.c1;
        Fq2 {
            c0: (self.c0 + self.c1) * (self.c0 - self.c1),
            c1: ab + ab,
        }
    }

    fn conjugate(&self) -> Fq2 {
        Fq2 {
            c0: self.c0,
            c1: -self.c1,
        }
    }

    fn invert(&self) -> Option<Fq2> {
        let norm = self.c0.square() + self.c1.square();
        let (inv, ok) = norm.invert();
        bool::from(ok).then(|| Fq2 {
            c0: self.c0 * inv,
            c1: -(self.c1 * inv),
        })
    }

    fn pow_bits(&self, bits: impl Iterator<Item = bool>) -> Fq2 {
        let mut acc = Fq2::ONE;
        for bit in bits {
            acc = acc.square();
            if bit {
                acc = acc.mul(self);
            }
        }
        acc
    }
}

fn bits_msb_first<const L: usize>(v: &crypto_bigint::Uint<L>) -> impl Iterator<Item = bool> + '_ {
    (0..v.bits_vartime()).rev().map(move |i| v.bit_vartime(i))
}

/// Point of G0 in affine coordinates; the identity is stored as `(0, 0, true)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TypeAG0 {
    x: Fq,
    y: Fq,
    infinity: bool,
}

/// Element of G1, a unitary element of `F_{q^2}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TypeAG1(Fq2);

impl TypeAG0 {
    const IDENTITY: TypeAG0 = TypeAG0 {
        x: Fq::ZERO,
        y: Fq::ZERO,
        infinity: true,
    };

    pub fn is_identity(&self) -> bool {
        self.infinity
    }

    fn on_curve(&self) -> bool {
        self.infinity || self.y.square() == self.x.square() * self.x + self.x
    }
}

/// Jacobian coordinates, `(X/Z^2, Y/Z^3)`; `Z = 0` is the identity.
#[derive(Clone, Copy)]
struct Jacobian {
    x: Fq,
    y: Fq,
    z: Fq,
}

impl Jacobian {
    const IDENTITY: Jacobian = Jacobian {
        x: Fq::ONE,
        y: Fq::ONE,
        z: Fq::ZERO,
    };

    fn from_affine(p: &TypeAG0) -> Jacobian {
        if p.infinity {
            Jacobian::IDENTITY
        } else {
            Jacobian {
                x: p.x,
                y: p.y,
                z: Fq::ONE,
            }
        }
    }

    fn is_identity(&self) -> bool {
        is_zero(&self.z)
    }

    fn to_affine(self) -> TypeAG0 {
        if self.is_identity() {
            return TypeAG0::IDENTITY;
        }
        let (zinv, _) = self.z.invert();
        let zinv2 = zinv.square();
        TypeAG0 {
            x: self.x * zinv2,
            y: self.y * zinv2 * zinv,
            infinity: false,
        }
    }

    fn double(&self) -> Jacobian {
        if self.is_identity() {
            return *self;
        }
        let xx = self.x.square();
        let yy = self.y.square();
        let zz = self.z.square();
        let xyy = self.x * yy;
        let s = xyy + xyy + xyy + xyy;
        let m = xx + xx + xx + zz.square();
        let x3 = m.square() - s - s;
        let yyyy = yy.square();
        let eight_yyyy = {
            let t = yyyy + yyyy;
            let t = t + t;
            t + t
        };
        let y3 = m * (s - x3) - eight_yyyy;
        let yz = self.y * self.z;
        Jacobian {
            x: x3,
            y: y3,
            z: yz + yz,
        }
    }

    fn add_affine(&self, p: &TypeAG0) -> Jacobian {
        if p.infinity {
            return *self;
        }
        if self.is_identity() {
            return Jacobian::from_affine(p);
        }
        let zz = self.z.square();
        let h = p.x * zz - self.x;
        let r = p.y * self.z * zz - self.y;
        if is_zero(&h) {
            return if is_zero(&r) {
                self.double()
            } else {
                Jacobian::IDENTITY
            };
        }
        let hh = h.square();
        let hhh = h * hh;
        let v = self.x * hh;
        let x3 = r.square() - hhh - v - v;
        let y3 = r * (v - x3) - self.y * hhh;
        Jacobian {
            x: x3,
            y: y3,
            z: self.z * h,
        }
    }
}

fn mul_bits(p: &TypeAG0, bits: impl Iterator<Item = bool>) -> TypeAG0 {
    let mut acc = Jacobian::IDENTITY;
    for bit in bits {
        acc = acc.double();
        if bit {
            acc = acc.add_affine(p);
        }
    }
    acc.to_affine()
}

fn in_prime_subgroup(p: &TypeAG0) -> bool {
    mul_bits(p, bits_msb_first(&ORDER)).infinity
}

/// Miller loop for `f_{r-1, P}` evaluated at `psi(Q)`. Vertical lines take
/// values in `F_q` and vanish under the final exponentiation, so they are
/// dropped; for the same reason `f_{r-1}` and `f_r` agree after it.
fn miller_loop(p: &TypeAG0, q: &TypeAG0) -> Fq2 {
    let r_minus_one: U192 = ORDER.wrapping_sub(&U192::ONE);
    let top = r_minus_one.bits_vartime() - 1;
    let (xp, yp) = (p.x, p.y);
    let (xq, yq) = (q.x, q.y);

    let mut f = Fq2::ONE;
    let mut t = Jacobian::from_affine(p);
    for i in (0..top).rev() {
        // Tangent at T.
        let zz = t.z.square();
        let yy = t.y.square();
        let xx = t.x.square();
        let m = xx + xx + xx + zz.square();
        let two_yz = {
            let yz = t.y * t.z;
            yz + yz
        };
        let line = Fq2 {
            c0: m * (xq * zz + t.x) - yy - yy,
            c1: two_yz * zz * yq,
        };
        f = f.square().mul(&line);
        t = t.double();

        if r_minus_one.bit_vartime(i) {
            // Chord through T and P.
            let zz = t.z.square();
            let h = xp * zz - t.x;
            let rr = yp * t.z * zz - t.y;
            let zn = t.z * h;
            let line = Fq2 {
                c0: rr * (xq + xp) - zn * yp,
                c1: zn * yq,
            };
            f = f.mul(&line);
            t = t.add_affine(p);
        }
    }
    f
}

fn final_exponentiation(f: &Fq2) -> Fq2 {
    // f^(q-1) via Frobenius (conjugation), then the hard part (q+1)/r.
    let inv = f.invert().expect("Miller loop output is nonzero");
    let unitary = f.conjugate().mul(&inv);
    unitary.pow_bits(bits_msb_first(&COFACTOR))
}

fn hash_to_fq(label: &[u8], counter: u32) -> Fq {
    let mut wide = [0u8; 128];
    for (half, chunk) in wide.chunks_mut(64).enumerate() {
        let digest = Sha512::new()
            .chain_update(HASH_DST)
            .chain_update(counter.to_be_bytes())
            .chain_update([half as u8])
            .chain_update(label)
            .finalize();
        chunk.copy_from_slice(&digest);
    }
    let v = U1024::from_be_bytes(wide);
    let modulus = NonZero::new(FieldModulus::MODULUS.resize::<{ U1024::LIMBS }>()).unwrap();
    Fq::new(&v.rem(&modulus).resize::<{ U512::LIMBS }>())
}

/// Try-and-increment onto the curve, then clear the cofactor.
fn hash_to_curve(label: &[u8]) -> TypeAG0 {
    for counter in 0u32.. {
        let x = hash_to_fq(label, counter);
        let rhs = x.square() * x + x;
        let Some(mut y) = sqrt(&rhs) else { continue };
        // Pick the root deterministically from the label.
        let want_odd = Sha512::new()
            .chain_update(HASH_DST)
            .chain_update(b"sign")
            .chain_update(counter.to_be_bytes())
            .chain_update(label)
            .finalize()[0]
            & 1
            == 1;
        if parity(&y) != want_odd {
            y = -y;
        }
        let candidate = TypeAG0 {
            x,
            y,
            infinity: false,
        };
        let cleared = mul_bits(&candidate, bits_msb_first(&COFACTOR));
        if !cleared.infinity {
            return cleared;
        }
    }
    unreachable!("counter space exhausted")
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TypeA;

impl TypeA {
    fn cached_generator() -> &'static TypeAG0 {
        static G: OnceLock<TypeAG0> = OnceLock::new();
        G.get_or_init(|| hash_to_curve(GENERATOR_LABEL))
    }

    fn cached_gt_generator() -> &'static TypeAG1 {
        static GT: OnceLock<TypeAG1> = OnceLock::new();
        GT.get_or_init(|| {
            let g = TypeA::cached_generator();
            TypeA.pair(g, g)
        })
    }
}

impl Pairing for TypeA {
    type G0 = TypeAG0;
    type G1 = TypeAG1;

    const ID: ProviderId = ProviderId::TypeA;

    fn descriptor(&self) -> GroupDescriptor {
        GroupDescriptor {
            provider: ProviderId::TypeA,
            order: order_hex(),
            generator: hex_bytes(&self.encode_g0(&self.generator())),
            scalar_bytes: SCALAR_BYTES,
            g0_bytes: G0_BYTES,
            g1_bytes: G1_BYTES,
        }
    }

    fn generator(&self) -> TypeAG0 {
        *Self::cached_generator()
    }

    fn g0_identity(&self) -> TypeAG0 {
        TypeAG0::IDENTITY
    }

    fn g0_mul(&self, a: &TypeAG0, b: &TypeAG0) -> TypeAG0 {
        Jacobian::from_affine(a).add_affine(b).to_affine()
    }

    fn g0_pow(&self, a: &TypeAG0, e: &Scalar) -> TypeAG0 {
        mul_bits(a, e.bits_msb_first())
    }

    fn g1_identity(&self) -> TypeAG1 {
        TypeAG1(Fq2::ONE)
    }

    fn g1_mul(&self, a: &TypeAG1, b: &TypeAG1) -> TypeAG1 {
        TypeAG1(a.0.mul(&b.0))
    }

    fn g1_inv(&self, a: &TypeAG1) -> TypeAG1 {
        // Unitary elements invert by conjugation.
        TypeAG1(a.0.conjugate())
    }

    fn g1_pow(&self, a: &TypeAG1, e: &Scalar) -> TypeAG1 {
        TypeAG1(a.0.pow_bits(e.bits_msb_first()))
    }

    fn pair(&self, a: &TypeAG0, b: &TypeAG0) -> TypeAG1 {
        if a.infinity || b.infinity {
            return TypeAG1(Fq2::ONE);
        }
        TypeAG1(final_exponentiation(&miller_loop(a, b)))
    }

    fn hash_to_g0(&self, label: &[u8]) -> Result<TypeAG0, PairingError> {
        if label.is_empty() {
            return Err(PairingError::EmptyLabel);
        }
        Ok(hash_to_curve(label))
    }

    fn encode_g0(&self, a: &TypeAG0) -> Vec<u8> {
        let mut out = vec![0u8; G0_BYTES];
        if !a.infinity {
            out[0] = 0x02 | parity(&a.y) as u8;
            out[1..].copy_from_slice(&fq_to_bytes(&a.x));
        }
        out
    }

    fn decode_g0(&self, bytes: &[u8]) -> Result<TypeAG0, PairingError> {
        if bytes.len() != G0_BYTES {
            return Err(PairingError::Length {
                expected: G0_BYTES,
                actual: bytes.len(),
            });
        }
        match bytes[0] {
            0x00 if bytes[1..].iter().all(|b| *b == 0) => Ok(TypeAG0::IDENTITY),
            tag @ (0x02 | 0x03) => {
                let x = fq_from_bytes(&bytes[1..])?;
                let mut y = sqrt(&(x.square() * x + x)).ok_or(PairingError::NotOnGroup)?;
                if parity(&y) != (tag == 0x03) {
                    y = -y;
                }
                if is_zero(&y) && tag == 0x03 {
                    return Err(PairingError::NonCanonical);
                }
                let p = TypeAG0 {
                    x,
                    y,
                    infinity: false,
                };
                debug_assert!(p.on_curve());
                if !in_prime_subgroup(&p) {
                    return Err(PairingError::NotOnGroup);
                }
                Ok(p)
            }
            _ => Err(PairingError::NonCanonical),
        }
    }

    fn encode_g1(&self, a: &TypeAG1) -> Vec<u8> {
        let mut out = Vec::with_capacity(G1_BYTES);
        out.extend_from_slice(&fq_to_bytes(&a.0.c0));
        out.extend_from_slice(&fq_to_bytes(&a.0.c1));
        out
    }

    fn decode_g1(&self, bytes: &[u8]) -> Result<TypeAG1, PairingError> {
        if bytes.len() != G1_BYTES {
            return Err(PairingError::Length {
                expected: G1_BYTES,
                actual: bytes.len(),
            });
        }
        let v = Fq2 {
            c0: fq_from_bytes(&bytes[..FQ_BYTES])?,
            c1: fq_from_bytes(&bytes[FQ_BYTES..])?,
        };
        if v.pow_bits(bits_msb_first(&ORDER)) != Fq2::ONE {
            return Err(PairingError::NotOnGroup);
        }
        Ok(TypeAG1(v))
    }

    fn random_g1<R: rand_core::RngCore + rand_core::CryptoRng + ?Sized>(
        &self,
        rng: &mut R,
    ) -> TypeAG1 {
        self.g1_pow(Self::cached_gt_generator(), &Scalar::random(rng))
    }
}
