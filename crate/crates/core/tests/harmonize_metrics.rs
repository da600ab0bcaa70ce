use chromaclass::metrics::distinct_classes;
use chromaclass::{
    cnr, cnr_images, harmonize, io, mse, psnr, ssim, uiqi, AbPlane, BinGeometry, ClassMap,
    FloatImage, HarmonizeParams, Palette, RgbImage, SegmentMap,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A plane with a few dominant values per segment plus scattered outliers.
fn random_scene(
    rng: &mut ChaCha8Rng,
    w: usize,
    h: usize,
    n_segments: u32,
) -> (AbPlane, SegmentMap) {
    let labels: Vec<u32> = (0..w * h)
        .map(|_| rng.random_range(0..n_segments))
        .collect();
    let base_a: Vec<f64> = (0..n_segments)
        .map(|_| rng.random_range(-60.0..60.0))
        .collect();
    let base_b: Vec<f64> = (0..n_segments)
        .map(|_| rng.random_range(-60.0..60.0))
        .collect();
    let mut a = Vec::with_capacity(w * h);
    let mut b = Vec::with_capacity(w * h);
    for &l in &labels {
        let noise = if rng.random_bool(0.2) { 40.0 } else { 6.0 };
        a.push((base_a[l as usize] + rng.random_range(-noise..noise)).clamp(-128.0, 127.0));
        b.push((base_b[l as usize] + rng.random_range(-noise..noise)).clamp(-128.0, 127.0));
    }
    (
        AbPlane::from_vecs(w, h, a, b).unwrap(),
        SegmentMap::new(w, h, labels).unwrap(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn harmonize_is_idempotent_local_and_in_range(seed in any::<u64>(), psi in 0usize..80) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (ab, seg) = random_scene(&mut rng, 20, 16, 5);
        let p = HarmonizeParams { psi, ..Default::default() };
        let once = harmonize(&ab, &seg, &p).unwrap();
        prop_assert_eq!(&harmonize(&once, &seg, &p).unwrap(), &once);

        let segs = seg.segments();
        for (label, px) in &segs {
            if px.len() <= psi {
                for &i in px {
                    prop_assert_eq!(once.a()[i].to_bits(), ab.a()[i].to_bits(), "label {}", label);
                    prop_assert_eq!(once.b()[i].to_bits(), ab.b()[i].to_bits());
                }
            }
        }
        prop_assert!(once.a().iter().chain(once.b()).all(|v| (-128.0..=127.0).contains(v)));
    }

    #[test]
    fn channels_are_independent(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (ab, seg) = random_scene(&mut rng, 16, 16, 3);
        let p = HarmonizeParams { psi: 10, ..Default::default() };
        let other_b: Vec<f64> = (0..ab.len()).map(|_| rng.random_range(-100.0..100.0)).collect();
        let swapped = AbPlane::from_vecs(16, 16, ab.a().to_vec(), other_b).unwrap();
        let (x, y) = (harmonize(&ab, &seg, &p).unwrap(), harmonize(&swapped, &seg, &p).unwrap());
        prop_assert_eq!(x.a(), y.a());
    }

    #[test]
    fn cnr_bounds_and_permutation(data in proptest::collection::vec(0u16..30, 1..60), seed in any::<u64>()) {
        let n = data.len();
        let m = ClassMap::new(n, 1, 30, data.clone()).unwrap();
        prop_assert_eq!(cnr(&m, &m).unwrap(), 1.0);
        let distinct = distinct_classes(&m);
        prop_assert!(distinct <= n.min(30) && distinct >= 1);
        let mut shuffled = data;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..n).rev() {
            shuffled.swap(i, rng.random_range(0..=i));
        }
        let s = ClassMap::new(n, 1, 30, shuffled).unwrap();
        prop_assert_eq!(cnr(&s, &m).unwrap(), 1.0);
    }

    #[test]
    fn pixel_metric_properties(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..3 * 10 * 9).map(|_| rng.random()).collect();
        let y: Vec<f64> = (0..3 * 10 * 9).map(|_| rng.random()).collect();
        let x = FloatImage::new(10, 9, 3, x).unwrap();
        let y = FloatImage::new(10, 9, 3, y).unwrap();
        prop_assert_eq!(mse(&x, &y).unwrap(), mse(&y, &x).unwrap());
        let s = ssim(&x, &y).unwrap();
        let q = uiqi(&x, &y).unwrap();
        prop_assert!((-1.0..=1.0).contains(&s) && (-1.0..=1.0).contains(&q));
        prop_assert!((ssim(&x, &x).unwrap() - 1.0).abs() < 1e-9);
        prop_assert!((uiqi(&y, &y).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn psnr_decreases_with_mse(e1 in 0.001f64..0.4, e2 in 0.001f64..0.4) {
        prop_assume!((e1 - e2).abs() > 1e-6);
        let base = FloatImage::gray(8, 8, vec![0.5; 64]).unwrap();
        let a = FloatImage::gray(8, 8, vec![0.5 + e1; 64]).unwrap();
        let b = FloatImage::gray(8, 8, vec![0.5 + e2; 64]).unwrap();
        let (ma, mb) = (mse(&base, &a).unwrap(), mse(&base, &b).unwrap());
        let (pa, pb) = (psnr(&base, &a, 1.0).unwrap(), psnr(&base, &b, 1.0).unwrap());
        prop_assert_eq!(ma < mb, pa > pb);
    }
}

#[test]
fn grayscale_rendering_has_cnr_one_over_k() {
    let colors = [
        [200, 30, 30],
        [30, 160, 40],
        [40, 60, 200],
        [230, 210, 40],
        [128, 128, 128],
    ];
    let img = RgbImage::from_fn(25, 10, |x, _| colors[x / 5]).unwrap();
    let p = Palette::identity(BinGeometry::default()).unwrap();
    let truth_classes = distinct_classes(&chromaclass::quantize_image(
        chromaclass::srgb_to_lab(&img).ab(),
        &p,
    ));
    assert_eq!(truth_classes, 5);
    let v = cnr_images(&img.to_grayscale(), &img, &p).unwrap();
    assert_eq!(v, 1.0 / 5.0);
    assert_eq!(cnr_images(&img, &img, &p).unwrap(), 1.0);
}

#[test]
fn class_map_png_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let m = ClassMap::new(5, 3, 400, (0..15).map(|i| (i * 26) as u16).collect()).unwrap();
    let path = dir.path().join("classes.png");
    io::save_class_map(&m, &path).unwrap();
    assert_eq!(io::load_class_map(&path, 400).unwrap(), m);
    assert!(io::load_class_map(&path, 300).is_err());
}

#[test]
fn segments_from_labels_and_masks() {
    let dir = tempfile::tempdir().unwrap();
    let m = ClassMap::new(3, 2, 10, vec![0, 0, 1, 1, 2, 2]).unwrap();
    let labels = dir.path().join("seg.png");
    io::save_class_map(&m, &labels).unwrap();
    assert_eq!(
        io::load_segments(&labels).unwrap().labels(),
        &[0, 0, 1, 1, 2, 2]
    );

    let masks = dir.path().join("masks");
    std::fs::create_dir(&masks).unwrap();
    let save_mask = |name: &str, px: [u8; 6]| {
        image::GrayImage::from_raw(3, 2, px.to_vec())
            .unwrap()
            .save(masks.join(name))
            .unwrap();
    };
    save_mask("m0.png", [255, 255, 0, 0, 0, 0]);
    save_mask("m1.png", [0, 255, 255, 0, 0, 0]);
    let seg = io::load_segments(&masks).unwrap();
    let u = SegmentMap::UNLABELED;
    assert_eq!(seg.labels(), &[0, 0, 1, u, u, u]);
}
