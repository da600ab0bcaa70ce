//! Data-driven palette construction.
//!
//! A corpus is reduced to a histogram over raw classes. Classes with at least
//! `threshold` samples are kept; every other raw class is assigned to the
//! kept class with the nearest bin center (a single fixed-centroid k-means
//! assignment pass: centroids never move).

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::colorspace::{lab_to_rgb, nearest_source, rgb_to_lab, Lab, RgbImage};
use crate::error::{Error, Result};
use crate::io;
use crate::quantizer::{BinGeometry, RawClass};

pub const DEFAULT_THRESHOLD: u64 = 500;
pub const DEFAULT_DOWNSAMPLE: usize = 56;

/// Sample counts per raw class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassHistogram {
    geometry: BinGeometry,
    counts: Vec<u64>,
    total_samples: u64,
}

impl ClassHistogram {
    pub fn new(geometry: BinGeometry) -> Result<Self> {
        geometry.validate()?;
        Ok(Self {
            geometry,
            counts: vec![0; geometry.n_raw()],
            total_samples: 0,
        })
    }

    pub fn from_counts(geometry: BinGeometry, counts: Vec<u64>) -> Result<Self> {
        geometry.validate()?;
        if counts.len() != geometry.n_raw() {
            return Err(Error::InvalidParameter(format!(
                "histogram needs {} counts, got {}",
                geometry.n_raw(),
                counts.len()
            )));
        }
        let total_samples = counts.iter().sum();
        Ok(Self {
            geometry,
            counts,
            total_samples,
        })
    }

    pub fn geometry(&self) -> &BinGeometry {
        &self.geometry
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total_samples(&self) -> u64 {
        self.total_samples
    }

    pub fn add(&mut self, class: RawClass) {
        self.counts[class.value() as usize] += 1;
        self.total_samples += 1;
    }

    /// Counts the chroma classes of `img` after nearest-neighbor downsampling
    /// to `width` x `height`. Lab conversion is per pixel, so only the sampled
    /// pixels are converted.
    pub fn add_image(&mut self, img: &RgbImage, width: usize, height: usize) {
        for y in 0..height {
            let sy = nearest_source(y, height, img.height());
            for x in 0..width {
                let sx = nearest_source(x, width, img.width());
                let lab = rgb_to_lab(img.pixel(sx, sy));
                self.add(self.geometry.bin(lab.a, lab.b));
            }
        }
    }

    /// Elementwise sum. Both histograms must share a geometry.
    pub fn merge(&mut self, other: &ClassHistogram) -> Result<()> {
        if self.geometry != other.geometry {
            return Err(Error::InvalidParameter(
                "cannot merge histograms over different bin geometries".into(),
            ));
        }
        for (dst, src) in self.counts.iter_mut().zip(&other.counts) {
            *dst += src;
        }
        self.total_samples += other.total_samples;
        Ok(())
    }
}

/// Where the corpus images come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CorpusSource {
    /// Every PNG/JPEG file directly inside the directory.
    Directory(PathBuf),
    Files(Vec<PathBuf>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusSpec {
    pub source: CorpusSource,
    /// Chroma planes are resampled to `(width, height)` before counting.
    pub downsample: (usize, usize),
    /// Minimum sample count for a class to be kept.
    pub threshold: u64,
}

impl CorpusSpec {
    pub fn directory(dir: impl Into<PathBuf>) -> Self {
        Self {
            source: CorpusSource::Directory(dir.into()),
            downsample: (DEFAULT_DOWNSAMPLE, DEFAULT_DOWNSAMPLE),
            threshold: DEFAULT_THRESHOLD,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.downsample.0 == 0 || self.downsample.1 == 0 {
            return Err(Error::InvalidParameter(format!(
                "downsample size must be at least 1x1, got {}x{}",
                self.downsample.0, self.downsample.1
            )));
        }
        Ok(())
    }

    /// The image files of the corpus in sorted order.
    pub fn image_paths(&self) -> Result<Vec<PathBuf>> {
        let mut paths = match &self.source {
            CorpusSource::Files(files) => files.clone(),
            CorpusSource::Directory(dir) => {
                let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
                let mut paths = Vec::new();
                for entry in entries {
                    let path = entry.map_err(|e| Error::io(dir, e))?.path();
                    if path.is_file() && io::has_image_extension(&path) {
                        paths.push(path);
                    }
                }
                paths
            }
        };
        paths.sort();
        Ok(paths)
    }
}

/// Histogram of a corpus plus ingestion bookkeeping.
#[derive(Debug, Clone)]
pub struct CorpusHistogram {
    pub histogram: ClassHistogram,
    pub images: usize,
    pub skipped: Vec<PathBuf>,
}

/// Reads every corpus image and counts its downsampled chroma classes.
///
/// Images are processed in parallel into per-worker histograms which are
/// then summed; the counts do not depend on traversal order. Unreadable
/// images are logged and reported in `skipped`.
pub fn accumulate_histogram(corpus: &CorpusSpec, g: &BinGeometry) -> Result<CorpusHistogram> {
    corpus.validate()?;
    g.validate()?;
    let paths = corpus.image_paths()?;
    if paths.is_empty() {
        return Err(Error::EmptyCorpus("no image files found".into()));
    }
    let (w, h) = corpus.downsample;

    let (histogram, images, skipped) = paths
        .par_iter()
        .fold(
            || {
                (
                    ClassHistogram::new(*g).expect("validated"),
                    0usize,
                    Vec::new(),
                )
            },
            |(mut hist, mut n, mut skipped), path| {
                match io::load_rgb(path) {
                    Ok(img) => {
                        hist.add_image(&img, w, h);
                        n += 1;
                    }
                    Err(e) => {
                        log::warn!("skipping {}: {e}", path.display());
                        skipped.push(path.clone());
                    }
                }
                (hist, n, skipped)
            },
        )
        .reduce(
            || {
                (
                    ClassHistogram::new(*g).expect("validated"),
                    0usize,
                    Vec::new(),
                )
            },
            |(mut ha, na, mut sa), (hb, nb, sb)| {
                ha.merge(&hb).expect("same geometry");
                sa.extend(sb);
                (ha, na + nb, sa)
            },
        );

    if images == 0 {
        return Err(Error::EmptyCorpus(format!(
            "none of the {} image files could be read",
            paths.len()
        )));
    }
    let mut skipped = skipped;
    skipped.sort();
    Ok(CorpusHistogram {
        histogram,
        images,
        skipped,
    })
}

/// The kept class set and the remap of every raw class onto it.
#[derive(Debug, Clone, PartialEq)]
pub struct Palette {
    geometry: BinGeometry,
    kept: Vec<RawClass>,
    remap: Vec<u16>,
    centers: Vec<(f64, f64)>,
}

impl Palette {
    /// Builds and validates a palette from its stored parts.
    pub fn from_parts(geometry: BinGeometry, kept: Vec<RawClass>, remap: Vec<u16>) -> Result<Self> {
        geometry.validate()?;
        let n_raw = geometry.n_raw();
        if kept.is_empty() {
            return Err(Error::InvalidPalette("palette keeps no classes".into()));
        }
        if kept.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidPalette(
                "kept classes must be strictly increasing".into(),
            ));
        }
        if let Some(c) = kept.iter().find(|c| c.value() as usize >= n_raw) {
            return Err(Error::InvalidPalette(format!(
                "kept class {} outside the {n_raw} raw classes",
                c.value()
            )));
        }
        if remap.len() != n_raw {
            return Err(Error::InvalidPalette(format!(
                "remap has {} entries, expected {n_raw}",
                remap.len()
            )));
        }
        if let Some((raw, &dense)) = remap
            .iter()
            .enumerate()
            .find(|(_, &d)| usize::from(d) >= kept.len())
        {
            return Err(Error::InvalidPalette(format!(
                "remap[{raw}] = {dense} is not below the class count {}",
                kept.len()
            )));
        }
        for (dense, c) in kept.iter().enumerate() {
            if usize::from(remap[c.value() as usize]) != dense {
                return Err(Error::InvalidPalette(format!(
                    "kept class {} is not mapped to itself",
                    c.value()
                )));
            }
        }
        let centers = kept.iter().map(|&c| geometry.center(c)).collect();
        Ok(Self {
            geometry,
            kept,
            remap,
            centers,
        })
    }

    /// Every raw class kept, each mapping to itself.
    pub fn identity(geometry: BinGeometry) -> Result<Self> {
        geometry.validate()?;
        let n = geometry.n_raw();
        let kept = (0..n as u32).map(RawClass).collect();
        let remap = (0..n).map(|i| i as u16).collect();
        Self::from_parts(geometry, kept, remap)
    }

    pub fn geometry(&self) -> &BinGeometry {
        &self.geometry
    }

    pub fn kept(&self) -> &[RawClass] {
        &self.kept
    }

    /// Dense class index for every raw class.
    pub fn remap(&self) -> &[u16] {
        &self.remap
    }

    /// Bin-center chroma per dense class.
    pub fn centers(&self) -> &[(f64, f64)] {
        &self.centers
    }

    pub fn n_classes(&self) -> usize {
        self.kept.len()
    }

    pub fn to_json(&self) -> String {
        let file = PaletteFile {
            version: PALETTE_VERSION,
            alpha: self.geometry.alpha,
            beta: self.geometry.beta,
            delta: self.geometry.delta,
            n_classes: self.kept.len(),
            kept: self.kept.iter().map(|c| c.value()).collect(),
            remap: self.remap.clone(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("palette serializes");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: PaletteFile = serde_json::from_str(s)?;
        if file.version != PALETTE_VERSION {
            return Err(Error::PaletteVersion {
                found: file.version,
                expected: PALETTE_VERSION,
            });
        }
        if file.n_classes != file.kept.len() {
            return Err(Error::InvalidPalette(format!(
                "n_classes is {} but {} classes are kept",
                file.n_classes,
                file.kept.len()
            )));
        }
        let geometry = BinGeometry {
            alpha: file.alpha,
            beta: file.beta,
            delta: file.delta,
        };
        Self::from_parts(
            geometry,
            file.kept.into_iter().map(RawClass).collect(),
            file.remap,
        )
    }
}

pub const PALETTE_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PaletteFile {
    version: u32,
    alpha: f64,
    beta: f64,
    delta: u32,
    n_classes: usize,
    kept: Vec<u32>,
    remap: Vec<u16>,
}

/// Keeps every class with at least `threshold` samples and assigns each
/// raw class to its nearest kept bin center. Distance ties go to the lower
/// raw class id.
pub fn build_palette(h: &ClassHistogram, threshold: u64) -> Result<Palette> {
    let g = *h.geometry();
    let kept: Vec<RawClass> = h
        .counts()
        .iter()
        .enumerate()
        .filter(|(_, &n)| n >= threshold)
        .map(|(c, _)| RawClass(c as u32))
        .collect();
    if kept.is_empty() {
        return Err(Error::NoClassAboveThreshold { threshold });
    }
    // Bin centers lie on a uniform grid, so comparing squared grid offsets
    // orders candidates exactly like Euclidean center distance.
    let kept_pos: Vec<(i64, i64)> = kept
        .iter()
        .map(|&c| {
            let (col, row) = g.grid_position(c);
            (i64::from(col), i64::from(row))
        })
        .collect();
    let remap = (0..g.n_raw() as u32)
        .map(|raw| {
            let (col, row) = g.grid_position(RawClass(raw));
            let (col, row) = (i64::from(col), i64::from(row));
            let mut best = 0usize;
            let mut best_d = i64::MAX;
            for (i, &(kc, kr)) in kept_pos.iter().enumerate() {
                let d = (kc - col).pow(2) + (kr - row).pow(2);
                if d < best_d {
                    best_d = d;
                    best = i;
                }
            }
            best as u16
        })
        .collect();
    Palette::from_parts(g, kept, remap)
}

/// Luminance used to render palette swatches.
pub const SWATCH_L: f64 = 50.0;

/// Renders the `delta` x `delta` class grid, one `cell` x `cell` square per
/// raw class (column follows a*, row follows b*). Kept classes show their
/// bin-center color at L* = 50, dropped classes neutral gray.
pub fn render_swatch(p: &Palette, cell: usize) -> Result<RgbImage> {
    if cell == 0 {
        return Err(Error::InvalidParameter(
            "swatch cell size must be positive".into(),
        ));
    }
    let g = p.geometry();
    let delta = g.delta as usize;
    let gray = lab_to_rgb(Lab {
        l: SWATCH_L,
        a: 0.0,
        b: 0.0,
    });
    let mut colors = vec![gray; g.n_raw()];
    for &c in p.kept() {
        let (a, b) = g.center(c);
        colors[c.value() as usize] = lab_to_rgb(Lab { l: SWATCH_L, a, b });
    }
    let side = delta * cell;
    RgbImage::from_fn(side, side, |x, y| colors[(y / cell) * delta + x / cell])
}

pub fn save_palette(p: &Palette, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, p.to_json()).map_err(|e| Error::io(path, e))
}

pub fn load_palette(path: impl AsRef<Path>) -> Result<Palette> {
    let path = path.as_ref();
    let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Palette::from_json(&s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hist_with(classes: &[(usize, u64)]) -> ClassHistogram {
        let g = BinGeometry::default();
        let mut counts = vec![0; g.n_raw()];
        for &(c, n) in classes {
            counts[c] = n;
        }
        ClassHistogram::from_counts(g, counts).unwrap()
    }

    #[test]
    fn threshold_fraction_of_reference_corpus() {
        // 500 samples out of the 109,885,440 class samples of a 35,040 image
        // corpus at 56x56 is the quoted 0.000455 percent.
        assert_eq!(35_040u64 * 56 * 56, 109_885_440);
        let percent: f64 = 500.0 / 109_885_440.0 * 100.0;
        assert!((percent - 0.000455).abs() < 5e-7, "{percent}");
        assert_eq!(format!("{percent:.6}"), "0.000455");
    }

    #[test]
    fn single_kept_class_absorbs_everything() {
        let p = build_palette(&hist_with(&[(210, 600), (3, 10)]), 500).unwrap();
        assert_eq!(p.n_classes(), 1);
        assert_eq!(p.kept(), &[RawClass(210)]);
        assert!(p.remap().iter().all(|&d| d == 0));
    }

    #[test]
    fn dropped_class_goes_to_nearest_corner() {
        let p = build_palette(&hist_with(&[(0, 500), (399, 900)]), 500).unwrap();
        assert_eq!(p.kept(), &[RawClass(0), RawClass(399)]);
        // class 20 has center (-95, -85): 10 from class 0, ~261.7 from class 399
        assert_eq!(p.remap()[20], 0);
        assert_eq!(p.remap()[398], 1);
    }

    #[test]
    fn threshold_is_inclusive() {
        let p = build_palette(&hist_with(&[(5, 499), (6, 500)]), 500).unwrap();
        assert_eq!(p.kept(), &[RawClass(6)]);
    }

    #[test]
    fn ties_go_to_lower_raw_class() {
        // class 1 is equidistant from classes 0 and 2
        let p = build_palette(&hist_with(&[(0, 1), (2, 1)]), 1).unwrap();
        assert_eq!(p.remap()[1], 0);
    }

    #[test]
    fn all_classes_kept_gives_identity() {
        let g = BinGeometry::default();
        let h = ClassHistogram::from_counts(g, vec![1000; 400]).unwrap();
        let p = build_palette(&h, 500).unwrap();
        assert_eq!(p, Palette::identity(g).unwrap());
    }

    #[test]
    fn nothing_above_threshold_is_an_error() {
        assert!(matches!(
            build_palette(&hist_with(&[(1, 10)]), 500),
            Err(Error::NoClassAboveThreshold { threshold: 500 })
        ));
    }

    #[test]
    fn json_round_trip() {
        let p = build_palette(&hist_with(&[(0, 500), (17, 700), (399, 900)]), 500).unwrap();
        let s = p.to_json();
        assert_eq!(Palette::from_json(&s).unwrap(), p);
        assert!(s.contains("\"version\": 1"));
    }

    fn file_json(n_classes: usize, kept: &[u32], remap: &[u16], version: u32) -> String {
        serde_json::json!({
            "version": version, "alpha": 10.0, "beta": 100.0, "delta": 2,
            "n_classes": n_classes, "kept": kept, "remap": remap,
        })
        .to_string()
    }

    #[test]
    fn malformed_files_are_rejected() {
        assert!(Palette::from_json(&file_json(2, &[0, 3], &[0, 0, 1, 1], 1)).is_ok());
        assert!(matches!(
            Palette::from_json(&file_json(3, &[0, 3], &[0, 0, 1, 1], 1)),
            Err(Error::InvalidPalette(_))
        ));
        assert!(matches!(
            Palette::from_json(&file_json(2, &[0, 3], &[0, 2, 1, 1], 1)),
            Err(Error::InvalidPalette(_))
        ));
        assert!(matches!(
            Palette::from_json(&file_json(2, &[0, 3], &[0, 0, 1, 1], 2)),
            Err(Error::PaletteVersion { found: 2, .. })
        ));
        assert!(matches!(
            Palette::from_json(&file_json(2, &[3, 0], &[1, 0, 0, 0], 1)),
            Err(Error::InvalidPalette(_))
        ));
        assert!(matches!(
            Palette::from_json("{"),
            Err(Error::MalformedPalette(_))
        ));
    }

    #[test]
    fn gray_image_lands_in_one_class() {
        let img = RgbImage::filled(224, 224, [128, 128, 128]).unwrap();
        let mut h = ClassHistogram::new(BinGeometry::default()).unwrap();
        h.add_image(&img, 56, 56);
        assert_eq!(h.counts()[210], 3136);
        assert_eq!(h.total_samples(), 3136);
        assert_eq!(h.counts().iter().sum::<u64>(), 3136);
    }

    #[test]
    fn swatch_layout() {
        let g = BinGeometry::default();
        let full = render_swatch(&Palette::identity(g).unwrap(), 2).unwrap();
        assert_eq!((full.width(), full.height()), (40, 40));
        let gray = lab_to_rgb(Lab {
            l: SWATCH_L,
            a: 0.0,
            b: 0.0,
        });
        assert!(full.pixels().all(|p| p != gray));

        let single = build_palette(&hist_with(&[(0, 600)]), 500).unwrap();
        let img = render_swatch(&single, 2).unwrap();
        let colored = img.pixels().filter(|&p| p != gray).count();
        assert_eq!(colored, 4);
        assert_ne!(img.pixel(0, 0), gray);
        assert!(render_swatch(&single, 0).is_err());
    }

    #[test]
    fn merge_checks_geometry() {
        let mut a = ClassHistogram::new(BinGeometry::default()).unwrap();
        let b = ClassHistogram::new(BinGeometry::new(5.0, 100.0, 40).unwrap()).unwrap();
        assert!(a.merge(&b).is_err());
    }
}
