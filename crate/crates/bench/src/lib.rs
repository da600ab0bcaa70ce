//! Seeded input fixtures shared by the benchmarks.

use chromaclass::{AbPlane, ClassMap, ClassTensor, RgbImage, SegmentMap};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_rgb(width: usize, height: usize, seed: u64) -> RgbImage {
    let mut rng = rng(seed);
    let data = (0..width * height * 3).map(|_| rng.random()).collect();
    RgbImage::new(width, height, data).expect("valid buffer")
}

pub fn random_ab(width: usize, height: usize, seed: u64) -> AbPlane {
    let mut rng = rng(seed);
    let n = width * height;
    let a = (0..n).map(|_| rng.random_range(-100.0..100.0)).collect();
    let b = (0..n).map(|_| rng.random_range(-100.0..100.0)).collect();
    AbPlane::from_vecs(width, height, a, b).expect("valid planes")
}

/// Horizontal bands of `band` rows, one label per band.
pub fn banded_segments(width: usize, height: usize, band: usize) -> SegmentMap {
    let labels = (0..width * height)
        .map(|i| ((i / width) / band) as u32)
        .collect();
    SegmentMap::new(width, height, labels).expect("valid labels")
}

pub fn random_logits(
    batch: usize,
    height: usize,
    width: usize,
    classes: usize,
    seed: u64,
) -> ClassTensor {
    let mut rng = rng(seed);
    let data = (0..batch * height * width * classes)
        .map(|_| rng.random_range(-3.0..3.0))
        .collect();
    ClassTensor::new(batch, height, width, classes, data).expect("valid shape")
}

pub fn random_targets(
    batch: usize,
    height: usize,
    width: usize,
    classes: usize,
    seed: u64,
) -> Vec<ClassMap> {
    let mut rng = rng(seed);
    (0..batch)
        .map(|_| {
            let data = (0..height * width)
                .map(|_| rng.random_range(0..classes as u16))
                .collect();
            ClassMap::new(width, height, classes, data).expect("valid map")
        })
        .collect()
}
