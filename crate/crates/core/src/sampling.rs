//! Reproducible parallel sampling.
//!
//! Work is cut into fixed-size chunks and chunk `c` draws from stream `c` of a
//! ChaCha8 generator seeded once from the caller's RNG, so results depend on
//! the seed alone and not on how many worker threads run the chunks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

pub const CHUNK: usize = 4096;

/// Runs `f(rng, count)` over chunks of `total` samples; outputs in chunk order.
pub fn chunked<T, F, R>(rng: &mut R, total: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, usize) -> T + Sync,
    R: Rng + ?Sized,
{
    let seed: u64 = rng.gen();
    let chunks = total.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            r.set_stream(c as u64);
            let count = CHUNK.min(total - c * CHUNK);
            f(&mut r, count)
        })
        .collect()
}

/// Uniform point on the unit sphere `S^{dim-1}`.
pub fn unit_sphere<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let s = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if s > 1e-12 {
            return v.into_iter().map(|c| c / s).collect();
        }
    }
}

/// Surface area of `S^{dim-1}`.
pub fn sphere_area(dim: usize) -> f64 {
    use std::f64::consts::PI;
    match dim {
        1 => 2.0,
        2 => 2.0 * PI,
        d => 2.0 * PI / (d as f64 - 2.0) * sphere_area(d - 2),
    }
}

/// Builds a worker pool of the requested size, or the default when `None`.
pub fn pool(workers: Option<usize>) -> rayon::ThreadPool {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        b = b.num_threads(w.max(1));
    }
    b.build().expect("thread pool")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean_of_uniforms(workers: usize) -> f64 {
        pool(Some(workers)).install(|| {
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            let parts = chunked(&mut rng, 20_000, |r, count| (0..count).map(|_| r.gen::<f64>()).sum::<f64>());
            parts.iter().sum::<f64>() / 20_000.0
        })
    }

    #[test]
    fn results_do_not_depend_on_worker_count() {
        let a = mean_of_uniforms(1);
        let b = mean_of_uniforms(4);
        assert_eq!(a.to_bits(), b.to_bits());
        assert!((a - 0.5).abs() < 0.01);
    }

    #[test]
    fn sphere_areas() {
        use std::f64::consts::PI;
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-12);
        assert!((sphere_area(4) - 2.0 * PI * PI).abs() < 1e-12);
    }

    #[test]
    fn sphere_samples_are_unit_and_centered() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut mean = [0.0; 3];
        for _ in 0..10_000 {
            let v = unit_sphere(&mut rng, 3);
            assert!((v.iter().map(|c| c * c).sum::<f64>() - 1.0).abs() < 1e-12);
            for j in 0..3 {
                mean[j] += v[j] / 10_000.0;
            }
        }
        assert!(mean.iter().all(|m| m.abs() < 0.03));
    }
}
