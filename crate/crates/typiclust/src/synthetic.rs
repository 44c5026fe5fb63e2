//! Seeded synthetic datasets used by experiments and tests: separated
//! Gaussian blobs with known memberships.

use crate::model::EmbeddingSet;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Blob centers drawn uniformly on a sphere of the given radius, redrawn
/// until all pairwise distances reach `min_separation`.
pub fn blob_centers(
    count: usize,
    dim: usize,
    radius: f64,
    min_separation: f64,
    seed: u64,
) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(count);
    while centers.len() < count {
        let mut dir: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-9 {
            continue;
        }
        for v in dir.iter_mut() {
            *v *= radius / norm;
        }
        let ok = centers.iter().all(|c| {
            crate::model::euclidean_distance(c, &dir) >= min_separation
        });
        if ok {
            centers.push(dir);
        }
    }
    centers
}

/// Gaussian blobs around the given centers, `per_blob` points each with
/// isotropic `sigma`. Labels are blob indices; rows are grouped by blob.
pub fn gaussian_blobs(
    centers: &[Vec<f64>],
    per_blob: usize,
    sigma: f64,
    seed: u64,
) -> EmbeddingSet {
    let dim = centers[0].len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(centers.len() * per_blob * dim);
    let mut labels = Vec::with_capacity(centers.len() * per_blob);
    for (blob, center) in centers.iter().enumerate() {
        for _ in 0..per_blob {
            for &c in center {
                let noise: f64 = StandardNormal.sample(&mut rng);
                data.push(c + sigma * noise);
            }
            labels.push(blob as i32);
        }
    }
    EmbeddingSet::validate(data, dim, None, Some(labels), Some(centers.len() as u32))
        .expect("generated blobs are always valid")
}

/// The canonical evaluation fixture: 10 Gaussian blobs of 100 points in
/// 8 dimensions, unit sigma, pairwise center separation at least 10.
pub fn blobs_fixture(seed: u64) -> EmbeddingSet {
    let centers = blob_centers(10, 8, 15.0, 10.0, seed);
    gaussian_blobs(&centers, 100, 1.0, seed.wrapping_add(1))
}

/// Two well-separated 2-D blobs (100 points each, centers 10 sigma apart).
pub fn two_blobs_2d(seed: u64) -> EmbeddingSet {
    let centers = vec![vec![0.0, 0.0], vec![10.0, 0.0]];
    gaussian_blobs(&centers, 100, 1.0, seed)
}

/// Uniform points on the axis-aligned box `[lo, hi]^dim`.
pub fn uniform_box(n: usize, dim: usize, lo: f64, hi: f64, seed: u64) -> EmbeddingSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<f64> = (0..n * dim).map(|_| rng.random_range(lo..hi)).collect();
    EmbeddingSet::validate(data, dim, None, None, None).expect("uniform box is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_shape_and_separation() {
        let set = blobs_fixture(0);
        assert_eq!(set.len(), 1000);
        assert_eq!(set.dim(), 8);
        assert_eq!(set.class_count(), Some(10));
        let centers = blob_centers(10, 8, 15.0, 10.0, 0);
        for i in 0..10 {
            for j in (i + 1)..10 {
                assert!(crate::model::euclidean_distance(&centers[i], &centers[j]) >= 10.0);
            }
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let a = blobs_fixture(3);
        let b = blobs_fixture(3);
        assert_eq!(a.data(), b.data());
    }
}
