//! Seeded random streams and random divisions.
//!
//! Every parallel task draws from its own ChaCha stream keyed by
//! `(master seed, task index)`, so results do not depend on scheduling.

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

pub fn stream(master: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng
}

/// A uniformly random point of the simplex.
pub fn random_division<R: Rng + ?Sized>(rng: &mut R, m: usize) -> Vec<f64> {
    normalize((0..m).map(|_| rng.sample::<f64, _>(Exp1)).collect())
}

/// A uniform point on the face spanned by a random subset of `support`
/// coordinates.
pub fn sparse_division<R: Rng + ?Sized>(rng: &mut R, m: usize, support: usize) -> Vec<f64> {
    let mut v = vec![0.0; m];
    for j in sample(rng, m, support.clamp(1, m)) {
        v[j] = rng.sample::<f64, _>(Exp1);
    }
    normalize(v)
}

/// A random division whose shares are multiples of `1/steps`.
pub fn grid_division<R: Rng + ?Sized>(rng: &mut R, m: usize, steps: usize) -> Vec<f64> {
    let mut counts = vec![0usize; m];
    for _ in 0..steps {
        counts[rng.gen_range(0..m)] += 1;
    }
    counts.iter().map(|&c| c as f64 / steps as f64).collect()
}

pub fn unit_vector(m: usize, j: usize) -> Vec<f64> {
    let mut e = vec![0.0; m];
    e[j] = 1.0;
    e
}

fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        v.iter_mut().for_each(|x| *x /= s);
    } else {
        v[0] = 1.0;
    }
    v
}
