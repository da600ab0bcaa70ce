use std::path::Path;

use chromaclass::palette::CorpusSpec;
use chromaclass::{
    accumulate_histogram, build_palette, io, load_palette, raw_class_to_ab, save_palette,
    BinGeometry, ClassHistogram, Error, Palette, RawClass, RgbImage,
};
use proptest::prelude::*;

fn g() -> BinGeometry {
    BinGeometry::default()
}

/// Nearest kept class by brute force over floating-point bin centers.
fn nearest_kept_oracle(raw: u32, kept: &[RawClass]) -> usize {
    let g = g();
    let (a, b) = raw_class_to_ab(RawClass(raw), &g).unwrap();
    let mut best = (f64::INFINITY, 0);
    for (i, &k) in kept.iter().enumerate() {
        let (ka, kb) = raw_class_to_ab(k, &g).unwrap();
        let d = ((a - ka).powi(2) + (b - kb).powi(2)).sqrt();
        if d < best.0 {
            best = (d, i);
        }
    }
    best.1
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn remap_is_nearest_center(counts in proptest::collection::vec(0u64..1000, 400), tau in 1u64..1000) {
        prop_assume!(counts.iter().any(|&c| c >= tau));
        let p = build_palette(&ClassHistogram::from_counts(g(), counts.clone()).unwrap(), tau).unwrap();
        let expected_kept: Vec<RawClass> =
            (0..400).filter(|&c| counts[c as usize] >= tau).map(RawClass).collect();
        prop_assert_eq!(p.kept(), &expected_kept[..]);
        for raw in 0..400u32 {
            let target = usize::from(p.remap()[raw as usize]);
            prop_assert_eq!(target, nearest_kept_oracle(raw, p.kept()));
        }
        for (i, k) in p.kept().iter().enumerate() {
            prop_assert_eq!(usize::from(p.remap()[k.value() as usize]), i);
        }
    }

    #[test]
    fn palette_json_round_trip(counts in proptest::collection::vec(0u64..3, 400)) {
        prop_assume!(counts.iter().any(|&c| c >= 2));
        let p = build_palette(&ClassHistogram::from_counts(g(), counts).unwrap(), 2).unwrap();
        prop_assert_eq!(Palette::from_json(&p.to_json()).unwrap(), p);
    }

    #[test]
    fn histogram_is_order_and_partition_independent(
        seeds in proptest::collection::vec(any::<u32>(), 1..6),
        split in 0usize..6,
    ) {
        let images: Vec<RgbImage> = seeds
            .iter()
            .map(|&s| RgbImage::from_fn(9, 7, |x, y| {
                let v = s.wrapping_mul(2_654_435_761).wrapping_add((x * 31 + y * 17) as u32);
                [(v >> 3) as u8, (v >> 11) as u8, (v >> 19) as u8]
            }).unwrap())
            .collect();
        let mut forward = ClassHistogram::new(g()).unwrap();
        for img in &images {
            forward.add_image(img, 5, 4);
        }
        let mut reversed = ClassHistogram::new(g()).unwrap();
        for img in images.iter().rev() {
            reversed.add_image(img, 5, 4);
        }
        let split = split.min(images.len());
        let (mut left, mut right) = (ClassHistogram::new(g()).unwrap(), ClassHistogram::new(g()).unwrap());
        for img in &images[..split] {
            left.add_image(img, 5, 4);
        }
        for img in &images[split..] {
            right.add_image(img, 5, 4);
        }
        right.merge(&left).unwrap();
        prop_assert_eq!(&forward, &reversed);
        prop_assert_eq!(&forward, &right);
        prop_assert_eq!(forward.total_samples(), 20 * images.len() as u64);
    }
}

#[test]
fn identical_histograms_give_identical_files() {
    let mut counts = vec![0; 400];
    for (i, c) in counts.iter_mut().enumerate() {
        *c = (i as u64 * 7919) % 1200;
    }
    let h = ClassHistogram::from_counts(g(), counts).unwrap();
    assert_eq!(
        build_palette(&h, 500).unwrap().to_json(),
        build_palette(&h, 500).unwrap().to_json()
    );
}

fn write_png(dir: &Path, name: &str, img: &RgbImage) {
    io::save_rgb(img, dir.join(name)).unwrap();
}

#[test]
fn gray_corpus_counts_one_class() {
    let dir = tempfile::tempdir().unwrap();
    write_png(
        dir.path(),
        "gray.png",
        &RgbImage::filled(224, 224, [90, 90, 90]).unwrap(),
    );
    let c = accumulate_histogram(&CorpusSpec::directory(dir.path()), &g()).unwrap();
    assert_eq!(c.images, 1);
    assert_eq!(c.histogram.counts()[210], 3136);
    assert_eq!(c.histogram.total_samples(), 3136);
}

#[test]
fn duplicate_images_double_counts_and_bad_files_are_skipped() {
    let dir = tempfile::tempdir().unwrap();
    let img = RgbImage::from_fn(60, 40, |x, y| [(x * 4) as u8, (y * 6) as u8, 128]).unwrap();
    write_png(dir.path(), "a.png", &img);
    let single = accumulate_histogram(&CorpusSpec::directory(dir.path()), &g()).unwrap();
    write_png(dir.path(), "b.png", &img);
    std::fs::write(dir.path().join("broken.png"), b"not a png").unwrap();
    std::fs::write(dir.path().join("notes.txt"), b"ignored").unwrap();
    let double = accumulate_histogram(&CorpusSpec::directory(dir.path()), &g()).unwrap();
    assert_eq!(double.images, 2);
    assert_eq!(double.skipped, vec![dir.path().join("broken.png")]);
    for (d, s) in double
        .histogram
        .counts()
        .iter()
        .zip(single.histogram.counts())
    {
        assert_eq!(*d, 2 * s);
    }
}

#[test]
fn empty_corpus_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(
        accumulate_histogram(&CorpusSpec::directory(dir.path()), &g()),
        Err(Error::EmptyCorpus(_))
    ));
    std::fs::write(dir.path().join("x.png"), b"garbage").unwrap();
    assert!(matches!(
        accumulate_histogram(&CorpusSpec::directory(dir.path()), &g()),
        Err(Error::EmptyCorpus(_))
    ));
}

#[test]
fn zero_downsample_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let spec = CorpusSpec {
        downsample: (0, 56),
        ..CorpusSpec::directory(dir.path())
    };
    assert!(matches!(
        accumulate_histogram(&spec, &g()),
        Err(Error::InvalidParameter(_))
    ));
}

#[test]
fn save_and_load_palette_file() {
    let dir = tempfile::tempdir().unwrap();
    let mut counts = vec![0; 400];
    counts[3] = 900;
    counts[250] = 500;
    let p = build_palette(&ClassHistogram::from_counts(g(), counts).unwrap(), 500).unwrap();
    let path = dir.path().join("palette.json");
    save_palette(&p, &path).unwrap();
    assert_eq!(load_palette(&path).unwrap(), p);
    assert!(load_palette(dir.path().join("missing.json"))
        .unwrap_err()
        .is_io());
}
