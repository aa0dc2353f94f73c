//! Seeded test-data generation. All generators take an explicit seed or RNG.

use nalgebra::linalg::QR;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{c, check_box, CMatrix, HermitianMatrix, SpdMatrix, C64};
use crate::Result;

pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Sub-seed for a named stream: FNV-1a of `label`, mixed with `master`.
pub fn derive_seed(master: u64, label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    splitmix64(master ^ h)
}

/// Seed of trial `index` within a stream.
pub fn trial_seed(stream: u64, index: u64) -> u64 {
    splitmix64(stream.wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03)))
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-distributed unitary: QR of a complex Gaussian matrix with the
/// diagonal of `R` rotated onto the positive reals.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let z = CMatrix::from_fn(n, n, |_, _| complex_gaussian(rng));
    let qr = QR::new(z);
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c(1.0) };
        q.column_mut(j).iter_mut().for_each(|v| *v *= phase);
    }
    q
}

/// Random Hermitian matrix with i.i.d. Gaussian entries (GUE-like), scaled.
pub fn random_hermitian<R: Rng + ?Sized>(n: usize, scale: f64, rng: &mut R) -> HermitianMatrix {
    let z = CMatrix::from_fn(n, n, |_, _| complex_gaussian(rng) * c(scale));
    HermitianMatrix::symmetrized(z)
}

/// SPD matrix with eigenvalues uniform in `[alpha, beta]` and random eigenvectors.
pub fn random_spd_with<R: Rng + ?Sized>(
    n: usize,
    alpha: f64,
    beta: f64,
    rng: &mut R,
) -> Result<SpdMatrix> {
    check_box(alpha, beta)?;
    let lambda: Vec<f64> = (0..n).map(|_| rng.random_range(alpha..=beta)).collect();
    let u = random_unitary(n, rng);
    let mut scaled = u.clone();
    for (j, &l) in lambda.iter().enumerate() {
        scaled.column_mut(j).iter_mut().for_each(|z| *z *= c(l));
    }
    SpdMatrix::new(HermitianMatrix::symmetrized(scaled * u.adjoint()))
}

pub fn random_spd(n: usize, alpha: f64, beta: f64, seed: u64) -> Result<SpdMatrix> {
    random_spd_with(n, alpha, beta, &mut seeded_rng(seed))
}

/// Density matrix (trace one) with condition number at most `beta / alpha`.
pub fn random_density<R: Rng + ?Sized>(
    n: usize,
    alpha: f64,
    beta: f64,
    rng: &mut R,
) -> Result<SpdMatrix> {
    let a = random_spd_with(n, alpha, beta, rng)?;
    let tr = a.trace();
    SpdMatrix::new(a.as_hermitian().scale(1.0 / tr))
}
