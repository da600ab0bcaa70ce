//! Chroma <-> color class transform.
//!
//! The a*b* plane is cut into a `delta` x `delta` grid of square bins with
//! side `alpha`; `beta` shifts the covered range `[-beta, alpha*delta - beta - 1]`
//! into the non-negative quadrant. A raw class is `row * delta + col`, where
//! the column follows a* and the row follows b*. A class is reconstructed as
//! the center of its bin.

use serde::{Deserialize, Serialize};

use crate::colorspace::AbPlane;
use crate::error::{Error, Result};
use crate::palette::Palette;

/// Grid parameters of the raw class space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinGeometry {
    /// Bin side length in a*/b* units.
    pub alpha: f64,
    /// Shift applied before binning.
    pub beta: f64,
    /// Number of bins per axis.
    pub delta: u32,
}

impl Default for BinGeometry {
    fn default() -> Self {
        Self {
            alpha: 10.0,
            beta: 100.0,
            delta: 20,
        }
    }
}

/// Largest grid that still fits every raw class in a 16-bit class map.
pub const MAX_DELTA: u32 = 256;

impl BinGeometry {
    pub fn new(alpha: f64, beta: f64, delta: u32) -> Result<Self> {
        let g = Self { alpha, beta, delta };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::InvalidGeometry(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        if !self.beta.is_finite() {
            return Err(Error::InvalidGeometry(format!(
                "beta must be finite, got {}",
                self.beta
            )));
        }
        if self.delta == 0 || self.delta > MAX_DELTA {
            return Err(Error::InvalidGeometry(format!(
                "delta must be in 1..={MAX_DELTA}, got {}",
                self.delta
            )));
        }
        Ok(())
    }

    /// Number of raw classes, `delta^2`.
    pub fn n_raw(&self) -> usize {
        (self.delta as usize) * (self.delta as usize)
    }

    /// Inclusive chroma range covered by the grid.
    pub fn range(&self) -> (f64, f64) {
        (
            -self.beta,
            self.alpha * f64::from(self.delta) - self.beta - 1.0,
        )
    }

    #[inline]
    fn axis_bin(&self, v: f64) -> u32 {
        let (lo, hi) = self.range();
        // NaN falls through clamp, the saturating cast maps it to bin 0.
        let bin = ((v.clamp(lo, hi) + self.beta) / self.alpha).floor() as i64;
        bin.clamp(0, i64::from(self.delta) - 1) as u32
    }

    #[inline]
    fn axis_center(&self, bin: u32) -> f64 {
        f64::from(bin) * self.alpha - self.beta + self.alpha / 2.0
    }

    /// Unchecked binning for hot loops; `self` must be valid.
    #[inline]
    pub(crate) fn bin(&self, a: f64, b: f64) -> RawClass {
        RawClass(self.axis_bin(b) * self.delta + self.axis_bin(a))
    }

    /// Unchecked center lookup; `class` must be in range.
    #[inline]
    pub(crate) fn center(&self, class: RawClass) -> (f64, f64) {
        (
            self.axis_center(class.0 % self.delta),
            self.axis_center(class.0 / self.delta),
        )
    }

    /// Grid (column, row) of a raw class.
    pub fn grid_position(&self, class: RawClass) -> (u32, u32) {
        (class.0 % self.delta, class.0 / self.delta)
    }
}

/// A raw class index in `[0, delta^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RawClass(pub u32);

impl RawClass {
    pub fn new(value: u32, g: &BinGeometry) -> Result<Self> {
        if value as usize >= g.n_raw() {
            return Err(Error::ClassOutOfRange {
                index: value as usize,
                n_classes: g.n_raw(),
            });
        }
        Ok(Self(value))
    }

    pub fn value(self) -> u32 {
        self.0
    }
}

/// Maps a chroma pair to its raw class. Inputs outside the covered range are
/// clipped to it first, so every finite input has a class.
pub fn ab_to_raw_class(a: f64, b: f64, g: &BinGeometry) -> Result<RawClass> {
    g.validate()?;
    Ok(g.bin(a, b))
}

/// Bin-center chroma of a raw class.
pub fn raw_class_to_ab(c: RawClass, g: &BinGeometry) -> Result<(f64, f64)> {
    g.validate()?;
    if c.0 as usize >= g.n_raw() {
        return Err(Error::ClassOutOfRange {
            index: c.0 as usize,
            n_classes: g.n_raw(),
        });
    }
    Ok(g.center(c))
}

/// Per-pixel dense class indices over a palette of `n_classes` classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassMap {
    width: usize,
    height: usize,
    n_classes: usize,
    data: Vec<u16>,
}

impl ClassMap {
    pub fn new(width: usize, height: usize, n_classes: usize, data: Vec<u16>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "expected {} class indices for {width}x{height}, got {}",
                width * height,
                data.len()
            )));
        }
        if n_classes == 0 || n_classes > usize::from(u16::MAX) + 1 {
            return Err(Error::InvalidParameter(format!(
                "class count must be in 1..=65536, got {n_classes}"
            )));
        }
        if let Some(&bad) = data.iter().find(|&&c| usize::from(c) >= n_classes) {
            return Err(Error::ClassOutOfRange {
                index: usize::from(bad),
                n_classes,
            });
        }
        Ok(Self {
            width,
            height,
            n_classes,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, n_classes: usize, class: u16) -> Result<Self> {
        Self::new(width, height, n_classes, vec![class; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn data(&self) -> &[u16] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> u16 {
        self.data[y * self.width + x]
    }
}

/// Quantizes a chroma plane to dense palette classes.
pub fn quantize_image(ab: &AbPlane, p: &Palette) -> ClassMap {
    let g = p.geometry();
    let data = ab
        .a()
        .iter()
        .zip(ab.b())
        .map(|(&a, &b)| p.remap()[g.bin(a, b).0 as usize])
        .collect();
    ClassMap {
        width: ab.width(),
        height: ab.height(),
        n_classes: p.n_classes(),
        data,
    }
}

/// Replaces every class by its bin-center chroma.
pub fn dequantize_image(m: &ClassMap, p: &Palette) -> Result<AbPlane> {
    if m.n_classes != p.n_classes() {
        return Err(Error::PaletteMismatch {
            left: m.n_classes,
            right: p.n_classes(),
        });
    }
    let centers = p.centers();
    let (a, b) = m.data.iter().map(|&c| centers[usize::from(c)]).unzip();
    AbPlane::from_vecs(m.width, m.height, a, b)
}
