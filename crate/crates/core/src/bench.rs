//! Synthetic lattices, timing harness and fit statistics.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rand_core::{CryptoRng, RngCore};

use crate::abe::{decrypt, encrypt, keygen, setup, AbeError};
use crate::lattice::{AccessPolicy, Attribute, Dimensions, LayerCoord, PolicyLattice};
use crate::pairing::Pairing;
use crate::tree::build_tree;

fn below<R: RngCore + ?Sized>(rng: &mut R, n: usize) -> usize {
    (rng.next_u64() % n as u64) as usize
}

/// Random monotone lattice over the labels `a0 .. a{alphabet-1}`. Each layer
/// inherits its referees' policies and adds one or two fresh labels. Gives
/// up after 200 draws that run out of labels.
pub fn random_lattice<R: RngCore + ?Sized>(
    dims: &Dimensions,
    alphabet: usize,
    rng: &mut R,
) -> Option<PolicyLattice> {
    let labels: Vec<Attribute> = (0..alphabet)
        .map(|i| Attribute::new(format!("a{i}")).expect("plain label"))
        .collect();
    'draw: for _ in 0..200 {
        let mut policies: BTreeMap<LayerCoord, AccessPolicy> = BTreeMap::new();
        for c in dims.coords() {
            let inherited = if c.is_base() {
                AccessPolicy::default()
            } else {
                dims.referees(&c)
                    .iter()
                    .fold(AccessPolicy::default(), |acc, r| acc.union(&policies[r]))
            };
            let mut pool: Vec<&Attribute> =
                labels.iter().filter(|a| !inherited.contains(a)).collect();
            let want = if c.is_base() {
                1 + below(rng, 3)
            } else if below(rng, 4) == 0 {
                2
            } else {
                1
            };
            if pool.is_empty() {
                continue 'draw;
            }
            let mut p = inherited;
            for _ in 0..want.min(pool.len()) {
                let a = pool.swap_remove(below(rng, pool.len()));
                p = p.union(&AccessPolicy::new([a.clone()]));
            }
            policies.insert(c, p);
        }
        return Some(PolicyLattice::new(dims.clone(), policies).expect("construction is monotone"));
    }
    None
}

/// Lattice whose tree has exactly `leaves` leaves. Layer `c` requires a
/// shared base block plus the own label of every non-base layer at or below
/// it; the base block absorbs the remainder.
pub fn sized_lattice(dims: &Dimensions, leaves: usize) -> Option<PolicyLattice> {
    let build = |base: usize| {
        let mut policies = BTreeMap::new();
        for c in dims.coords() {
            let mut labels: Vec<String> = (0..base).map(|i| format!("base{i:03}")).collect();
            for d in dims.coords() {
                if !d.is_base() && d.dominated_by(&c) {
                    labels.push(format!("own{}", d.file_suffix()));
                }
            }
            policies.insert(c, AccessPolicy::parse(labels).expect("plain labels"));
        }
        PolicyLattice::new(dims.clone(), policies).expect("construction is monotone")
    };
    let overhead = build_tree(&build(1)).leaf_count() - 1;
    let base = leaves.checked_sub(overhead).filter(|&b| b >= 1)?;
    let lat = build(base);
    debug_assert_eq!(build_tree(&lat).leaf_count(), leaves);
    Some(lat)
}

/// Smallest leaf count [`sized_lattice`] can reach for `dims`.
pub fn min_leaves(dims: &Dimensions) -> usize {
    (1..)
        .find(|&n| sized_lattice(dims, n).is_some())
        .expect("some size fits")
}

/// Best-of-`reps` wall times at one tree size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Timing {
    pub leaves: usize,
    pub keygen: Duration,
    pub encrypt: Duration,
    pub decrypt: Duration,
}

fn best(xs: Vec<Duration>) -> Duration {
    xs.into_iter().min().expect("at least one repetition")
}

/// Times keygen, encrypt and decrypt with a key holding every attribute.
pub fn measure<P: Pairing, R: RngCore + CryptoRng + ?Sized>(
    group: P,
    dims: &Dimensions,
    leaf_counts: &[usize],
    reps: usize,
    rng: &mut R,
) -> Result<Vec<Timing>, AbeError> {
    let (pk, mk) = setup(group.clone(), rng);
    let mut out = Vec::with_capacity(leaf_counts.len());
    for &n in leaf_counts {
        let lat = sized_lattice(dims, n).ok_or_else(|| {
            AbeError::Malformed(format!("{n} leaves is below the minimum for {dims}"))
        })?;
        let attrs = AccessPolicy::new(lat.alphabet());
        let messages: BTreeMap<LayerCoord, P::G1> = lat
            .coords()
            .map(|c| (c.clone(), group.random_g1(rng)))
            .collect();
        let (mut kg, mut enc, mut dec) = (Vec::new(), Vec::new(), Vec::new());
        for _ in 0..reps.max(1) {
            let t = Instant::now();
            let uk = keygen(&pk, &mk, &attrs, dims, rng)?;
            kg.push(t.elapsed());
            let t = Instant::now();
            let ct = encrypt(&pk, &lat, &messages, rng)?;
            enc.push(t.elapsed());
            let t = Instant::now();
            let got = decrypt(&pk, &uk, &ct)?;
            dec.push(t.elapsed());
            assert_eq!(got, messages, "full key must open every layer");
        }
        out.push(Timing {
            leaves: n,
            keygen: best(kg),
            encrypt: best(enc),
            decrypt: best(dec),
        });
    }
    Ok(out)
}

/// Least-squares line `y = a + b x` and its coefficient of determination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
    pub r_squared: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> LinearFit {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2);
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r_squared = if ss_tot == 0.0 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    LinearFit {
        intercept,
        slope,
        r_squared,
    }
}

/// Fits of keygen, encrypt and decrypt time (seconds) against leaf count.
pub fn fits(timings: &[Timing]) -> [LinearFit; 3] {
    let xs: Vec<f64> = timings.iter().map(|t| t.leaves as f64).collect();
    let col = |f: fn(&Timing) -> Duration| -> Vec<f64> {
        timings.iter().map(|t| f(t).as_secs_f64()).collect()
    };
    [
        linear_fit(&xs, &col(|t| t.keygen)),
        linear_fit(&xs, &col(|t| t.encrypt)),
        linear_fit(&xs, &col(|t| t.decrypt)),
    ]
}

/// Leaf counts of the shared tree and of separate per-layer encryption.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Savings {
    pub tree_leaves: usize,
    pub naive_leaves: usize,
}

pub fn savings(lat: &PolicyLattice) -> Savings {
    Savings {
        tree_leaves: build_tree(lat).leaf_count(),
        naive_leaves: lat.naive_leaf_count(),
    }
}
