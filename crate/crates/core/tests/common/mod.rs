#![allow(dead_code)]

use capgaps::channel::QChannel;
use capgaps::linalg::{CMatrix, C64};
use capgaps::sampling::{channel_from_isometry, haar_isometry};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

pub fn random_hermitian(rng: &mut impl Rng, n: usize) -> CMatrix {
    random_matrix(rng, n, n).hermitian_part()
}

pub fn random_density(rng: &mut impl Rng, n: usize) -> CMatrix {
    let a = random_matrix(rng, n, n);
    let m = a.matmul(&a.adjoint());
    let t = m.trace().re;
    m.scale(1.0 / t)
}

pub fn random_unitary(rng: &mut impl Rng, n: usize) -> CMatrix {
    haar_isometry(n, n, rng).unwrap()
}

pub fn random_pure(rng: &mut impl Rng, n: usize) -> Vec<C64> {
    haar_isometry(1, n, rng).unwrap().column_vec(0)
}

/// Channel from a Haar isometry `C^{d_in} → C^{r·d_out}`.
pub fn random_channel(rng: &mut impl Rng, d_in: usize, d_out: usize, r: usize) -> QChannel {
    let v = haar_isometry(d_in, r * d_out, rng).unwrap();
    channel_from_isometry(&v, d_out).unwrap()
}
