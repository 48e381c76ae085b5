//! Seeded random matrices and channels used by the oracles and test batteries.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::matcore::{c, CMat, CVec};

pub type Rng64 = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng64 {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent stream for sub-task `index` of a seeded run.
pub fn substream(seed: u64, index: u64) -> Rng64 {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(index.wrapping_add(1));
    r
}

pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| complex_normal(rng))
}

pub fn unit_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CVec {
    let v = CVec::from_fn(dim, |_, _| complex_normal(rng));
    let n = v.norm();
    v / c(n)
}

/// Wishart-type G G* with G of shape dim x rank, scaled to unit trace (zero if rank is 0).
pub fn random_psd<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize) -> CMat {
    if rank == 0 {
        return CMat::zeros(dim, dim);
    }
    let g = complex_gaussian(rng, dim, rank);
    let m = &g * g.adjoint();
    let tr: f64 = m.diagonal().iter().map(|z| z.re).sum();
    crate::matcore::hermitize(&(m / c(tr)))
}

/// Haar-distributed unitary (QR of a Gaussian with phase correction).
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMat {
    let g = complex_gaussian(rng, dim, dim);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { c(1.0) };
        for i in 0..dim {
            q[(i, j)] *= ph;
        }
    }
    q
}

/// Positive definite matrix with eigenvalues drawn uniformly from [lo, hi].
pub fn random_pd<R: Rng + ?Sized>(rng: &mut R, dim: usize, lo: f64, hi: f64) -> CMat {
    let u = random_unitary(rng, dim);
    let mut d = CMat::zeros(dim, dim);
    for i in 0..dim {
        d[(i, i)] = c(rng.random_range(lo..=hi));
    }
    crate::matcore::hermitize(&(&u * d * u.adjoint()))
}

/// Random density matrix of the given rank.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize) -> CMat {
    random_psd(rng, dim, rank.max(1))
}

/// Orthogonal projection onto a Haar-random subspace of the given rank.
pub fn random_projection<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize) -> CMat {
    let u = random_unitary(rng, dim);
    let v = u.columns(0, rank);
    crate::matcore::hermitize(&(v * v.adjoint()))
}

/// Kraus operators of a random channel (trace preserving) built from a Haar isometry.
pub fn random_channel_kraus<R: Rng + ?Sized>(
    rng: &mut R,
    dim_in: usize,
    dim_out: usize,
    kraus_rank: usize,
) -> Vec<CMat> {
    let big = dim_out * kraus_rank;
    assert!(big >= dim_in, "Kraus rank too small for an isometry");
    let u = random_unitary(rng, big);
    let iso = u.columns(0, dim_in).into_owned();
    (0..kraus_rank)
        .map(|k| iso.rows(k * dim_out, dim_out).into_owned())
        .collect()
}
