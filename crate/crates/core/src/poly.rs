//! Polynomials over the scalar field and Lagrange interpolation.

use rand_core::{CryptoRng, RngCore};

use crate::pairing::Scalar;

/// Coefficients, constant term first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polynomial(Vec<Scalar>);

impl Polynomial {
    /// Random polynomial of the given degree with a fixed constant term.
    pub fn random<R: RngCore + CryptoRng + ?Sized>(
        constant: Scalar,
        degree: usize,
        rng: &mut R,
    ) -> Self {
        let mut coeffs = Vec::with_capacity(degree + 1);
        coeffs.push(constant);
        coeffs.extend((0..degree).map(|_| Scalar::random(rng)));
        Polynomial(coeffs)
    }

    pub fn from_coefficients(coeffs: Vec<Scalar>) -> Self {
        assert!(!coeffs.is_empty());
        Polynomial(coeffs)
    }

    pub fn degree(&self) -> usize {
        self.0.len() - 1
    }

    pub fn eval(&self, x: Scalar) -> Scalar {
        self.0
            .iter()
            .rev()
            .fold(Scalar::ZERO, |acc, c| acc * x + *c)
    }
}

/// Lagrange basis coefficients `L_j(at)` for the distinct nodes `xs`.
///
/// Panics on repeated nodes.
pub fn lagrange_coefficients(xs: &[Scalar], at: Scalar) -> Vec<Scalar> {
    xs.iter()
        .enumerate()
        .map(|(j, &xj)| {
            let mut num = Scalar::ONE;
            let mut den = Scalar::ONE;
            for (m, &xm) in xs.iter().enumerate() {
                if m != j {
                    num *= at - xm;
                    den *= xj - xm;
                }
            }
            num * den.invert().expect("interpolation nodes must be distinct")
        })
        .collect()
}

/// Coefficients at zero for 1-based child indices.
pub fn lagrange_at_zero(indices: &[usize]) -> Vec<Scalar> {
    let xs: Vec<Scalar> = indices
        .iter()
        .map(|&i| Scalar::from_u64(i as u64))
        .collect();
    lagrange_coefficients(&xs, Scalar::ZERO)
}
