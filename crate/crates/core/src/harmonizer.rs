//! Object-selective chroma harmonization.
//!
//! For every segment with more than `psi` pixels, each chroma channel is
//! compared against the segment's modal value and pixels deviating by more
//! than the channel threshold are snapped to the mode. Modes are taken from
//! the input before any pixel is rewritten.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;

use crate::colorspace::AbPlane;
use crate::error::{Error, Result};

/// One segment label per pixel; [`SegmentMap::UNLABELED`] marks pixels
/// outside every segment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentMap {
    width: usize,
    height: usize,
    labels: Vec<u32>,
}

impl SegmentMap {
    pub const UNLABELED: u32 = u32::MAX;

    pub fn new(width: usize, height: usize, labels: Vec<u32>) -> Result<Self> {
        if labels.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "expected {} labels for {width}x{height}, got {}",
                width * height,
                labels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            labels,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    /// Pixel indices per label, labels in ascending order.
    pub fn segments(&self) -> BTreeMap<u32, Vec<usize>> {
        let mut out: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for (i, &l) in self.labels.iter().enumerate() {
            if l != Self::UNLABELED {
                out.entry(l).or_default().push(i);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonizeParams {
    pub delta_a: f64,
    pub delta_b: f64,
    /// Segments need strictly more than `psi` pixels to be processed.
    pub psi: usize,
}

impl Default for HarmonizeParams {
    fn default() -> Self {
        Self {
            delta_a: 8.0,
            delta_b: 8.0,
            psi: 500,
        }
    }
}

impl HarmonizeParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("delta_a", self.delta_a), ("delta_b", self.delta_b)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be non-negative, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Most frequent value after rounding half away from zero; ties go to the
/// smallest value.
pub fn segment_mode(values: &[f64]) -> Result<f64> {
    mode_of(values.iter().copied()).ok_or(Error::Empty("mode of an empty list"))
}

fn mode_of(values: impl Iterator<Item = f64>) -> Option<f64> {
    let mut counts: HashMap<i64, usize> = HashMap::new();
    for v in values {
        *counts.entry(v.round() as i64).or_default() += 1;
    }
    counts
        .into_iter()
        .max_by(|(va, ca), (vb, cb)| ca.cmp(cb).then(vb.cmp(va)))
        .map(|(v, _)| v as f64)
}

/// Snaps within-segment chroma outliers to the segment mode.
pub fn harmonize(ab: &AbPlane, seg: &SegmentMap, p: &HarmonizeParams) -> Result<AbPlane> {
    p.validate()?;
    if ab.dims() != seg.dims() {
        return Err(Error::DimensionMismatch {
            expected: ab.dims(),
            actual: seg.dims(),
        });
    }
    let segments: Vec<Vec<usize>> = seg
        .segments()
        .into_values()
        .filter(|px| px.len() > p.psi)
        .collect();

    // Read-only phase: per segment, the pixels to overwrite in each channel.
    let edits: Vec<(Edits, Edits)> = segments
        .par_iter()
        .map(|px| {
            (
                outliers(ab.a(), px, p.delta_a),
                outliers(ab.b(), px, p.delta_b),
            )
        })
        .collect();

    let mut out = ab.clone();
    for (a_edits, b_edits) in edits {
        for (i, v) in a_edits {
            out.a_mut()[i] = v;
        }
        for (i, v) in b_edits {
            out.b_mut()[i] = v;
        }
    }
    Ok(out)
}

/// Pixel index and replacement value.
type Edits = Vec<(usize, f64)>;

fn outliers(channel: &[f64], pixels: &[usize], threshold: f64) -> Edits {
    let Some(mode) = mode_of(pixels.iter().map(|&i| channel[i])) else {
        return Vec::new();
    };
    pixels
        .iter()
        .filter(|&&i| (channel[i] - mode).abs() > threshold)
        .map(|&i| (i, mode))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mode_examples() {
        assert_eq!(segment_mode(&[10.0, 10.0, 30.0]).unwrap(), 10.0);
        assert_eq!(segment_mode(&[5.0, 5.0, 7.0, 7.0]).unwrap(), 5.0);
        assert_eq!(segment_mode(&[4.4, 4.4, 9.0]).unwrap(), 4.0);
        assert_eq!(segment_mode(&[-2.5, -2.5, 3.0]).unwrap(), -3.0);
        assert_eq!(segment_mode(&[7.0, -7.0]).unwrap(), -7.0);
        assert!(segment_mode(&[]).is_err());
    }

    fn one_segment(n: usize, a_values: Vec<f64>) -> (AbPlane, SegmentMap) {
        let ab = AbPlane::from_vecs(n, 1, a_values, vec![0.0; n]).unwrap();
        let seg = SegmentMap::new(n, 1, vec![3; n]).unwrap();
        (ab, seg)
    }

    #[test]
    fn outlier_snaps_to_mode() {
        let mut a = vec![10.0; 501];
        a[17] = 30.0;
        let (ab, seg) = one_segment(501, a);
        let out = harmonize(&ab, &seg, &HarmonizeParams::default()).unwrap();
        assert!(out.a().iter().all(|&v| v == 10.0));
        assert_eq!(out.b(), ab.b());
    }

    #[test]
    fn inliers_are_untouched() {
        let a: Vec<f64> = (0..501)
            .map(|i| if i < 300 { 10.0 } else { 2.0 + (i % 17) as f64 })
            .collect();
        let (ab, seg) = one_segment(501, a);
        let out = harmonize(&ab, &seg, &HarmonizeParams::default()).unwrap();
        assert_eq!(out, ab);
    }

    #[test]
    fn psi_guard_is_strict() {
        let mut a = vec![10.0; 500];
        a[0] = 120.0;
        let (ab, seg) = one_segment(500, a);
        assert_eq!(
            harmonize(&ab, &seg, &HarmonizeParams::default()).unwrap(),
            ab
        );
    }

    #[test]
    fn unlabeled_pixels_are_ignored() {
        let mut labels = vec![0; 4];
        labels[3] = SegmentMap::UNLABELED;
        let seg = SegmentMap::new(2, 2, labels).unwrap();
        let ab = AbPlane::from_vecs(2, 2, vec![1.0, 1.0, 50.0, 90.0], vec![0.0; 4]).unwrap();
        let p = HarmonizeParams {
            psi: 2,
            ..Default::default()
        };
        let out = harmonize(&ab, &seg, &p).unwrap();
        assert_eq!(out.a(), &[1.0, 1.0, 1.0, 90.0]);
    }

    #[test]
    fn dimension_mismatch() {
        let ab = AbPlane::filled(2, 2, 0.0, 0.0);
        let seg = SegmentMap::new(4, 1, vec![0; 4]).unwrap();
        assert!(matches!(
            harmonize(&ab, &seg, &HarmonizeParams::default()),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
