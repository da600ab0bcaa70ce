//! sRGB <-> CIE L*a*b* conversion and luminance/chroma plane handling.
//!
//! The conversion uses the IEC 61966-2-1 sRGB transfer curve, the sRGB
//! primaries matrix and a D65 reference white (2 degree observer). The
//! reference white is taken as the row sums of the RGB->XYZ matrix so that
//! every neutral sRGB triple lands on a* = b* = 0 up to rounding.
//!
//! All arithmetic is `f64`; conversion back to 8 bits clips to [0, 255] and
//! rounds half away from zero.

use crate::error::{Error, Result};

pub const L_RANGE: (f64, f64) = (0.0, 100.0);
pub const AB_RANGE: (f64, f64) = (-128.0, 127.0);

const RGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.412_456_4, 0.357_576_1, 0.180_437_5],
    [0.212_672_9, 0.715_152_2, 0.072_175_0],
    [0.019_333_9, 0.119_192_0, 0.950_304_1],
];

const XYZ_TO_RGB: [[f64; 3]; 3] = [
    [3.240_454_2, -1.537_138_5, -0.498_531_4],
    [-0.969_266_0, 1.876_010_8, 0.041_556_0],
    [0.055_643_4, -0.204_025_9, 1.057_225_2],
];

const WHITE: [f64; 3] = [
    RGB_TO_XYZ[0][0] + RGB_TO_XYZ[0][1] + RGB_TO_XYZ[0][2],
    RGB_TO_XYZ[1][0] + RGB_TO_XYZ[1][1] + RGB_TO_XYZ[1][2],
    RGB_TO_XYZ[2][0] + RGB_TO_XYZ[2][1] + RGB_TO_XYZ[2][2],
];

// (6/29)^3 and friends of the piecewise CIE lightness function.
const EPSILON_DELTA: f64 = 6.0 / 29.0;

/// A single CIE L*a*b* sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lab {
    pub l: f64,
    pub a: f64,
    pub b: f64,
}

#[inline]
fn srgb_to_linear(c: f64) -> f64 {
    if c <= 0.040_45 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

#[inline]
fn linear_to_srgb(c: f64) -> f64 {
    if c <= 0.003_130_8 {
        12.92 * c
    } else {
        1.055 * c.powf(1.0 / 2.4) - 0.055
    }
}

#[inline]
fn lab_f(t: f64) -> f64 {
    if t > EPSILON_DELTA * EPSILON_DELTA * EPSILON_DELTA {
        t.cbrt()
    } else {
        t / (3.0 * EPSILON_DELTA * EPSILON_DELTA) + 4.0 / 29.0
    }
}

#[inline]
fn lab_f_inv(t: f64) -> f64 {
    if t > EPSILON_DELTA {
        t * t * t
    } else {
        3.0 * EPSILON_DELTA * EPSILON_DELTA * (t - 4.0 / 29.0)
    }
}

#[inline]
fn mat_mul(m: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

/// Converts one 8-bit sRGB pixel to L*a*b*, clamped to the nominal ranges.
pub fn rgb_to_lab(rgb: [u8; 3]) -> Lab {
    let linear = rgb.map(|c| srgb_to_linear(f64::from(c) / 255.0));
    // The white point is the row sums, so a neutral pixel's XYZ/white ratio
    // is its linear value. Taking it directly keeps a and b at exactly zero.
    let ratio = if rgb[0] == rgb[1] && rgb[1] == rgb[2] {
        [linear[0]; 3]
    } else {
        let xyz = mat_mul(&RGB_TO_XYZ, linear);
        [xyz[0] / WHITE[0], xyz[1] / WHITE[1], xyz[2] / WHITE[2]]
    };
    let [fx, fy, fz] = ratio.map(lab_f);
    Lab {
        l: (116.0 * fy - 16.0).clamp(L_RANGE.0, L_RANGE.1),
        a: (500.0 * (fx - fy)).clamp(AB_RANGE.0, AB_RANGE.1),
        b: (200.0 * (fy - fz)).clamp(AB_RANGE.0, AB_RANGE.1),
    }
}

/// Converts one L*a*b* sample to 8-bit sRGB. Out-of-gamut channels are clipped.
pub fn lab_to_rgb(lab: Lab) -> [u8; 3] {
    let fy = (lab.l + 16.0) / 116.0;
    let fx = fy + lab.a / 500.0;
    let fz = fy - lab.b / 200.0;
    let xyz = [
        lab_f_inv(fx) * WHITE[0],
        lab_f_inv(fy) * WHITE[1],
        lab_f_inv(fz) * WHITE[2],
    ];
    mat_mul(&XYZ_TO_RGB, xyz).map(|c| {
        let encoded = linear_to_srgb(c.clamp(0.0, 1.0));
        // f64::round is half-away-from-zero.
        (encoded * 255.0).round().clamp(0.0, 255.0) as u8
    })
}

/// An 8-bit sRGB image, row-major, three interleaved samples per pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width * height * 3 {
            return Err(Error::InvalidImage(format!(
                "expected {} samples for {width}x{height} RGB, got {}",
                width * height * 3,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// An image filled with a single color.
    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Result<Self> {
        Self::new(width, height, rgb.repeat(width * height))
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> [u8; 3],
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn as_raw(&self) -> &[u8] {
        &self.data
    }

    pub fn into_raw(self) -> Vec<u8> {
        self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn pixels(&self) -> impl Iterator<Item = [u8; 3]> + '_ {
        self.data.chunks_exact(3).map(|p| [p[0], p[1], p[2]])
    }

    /// Replaces every pixel by its neutral gray of equal L*.
    pub fn to_grayscale(&self) -> RgbImage {
        let data = self
            .pixels()
            .flat_map(|p| {
                let lab = rgb_to_lab(p);
                lab_to_rgb(Lab {
                    l: lab.l,
                    a: 0.0,
                    b: 0.0,
                })
            })
            .collect();
        RgbImage {
            width: self.width,
            height: self.height,
            data,
        }
    }
}

/// A single real-valued H x W plane, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

/// The luminance plane of a Lab image.
pub type LPlane = Plane;

impl Plane {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "expected {} samples for a {width}x{height} plane, got {}",
                width * height,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
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

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }
}

/// Paired a* and b* chroma planes of identical size.
#[derive(Debug, Clone, PartialEq)]
pub struct AbPlane {
    a: Plane,
    b: Plane,
}

impl AbPlane {
    pub fn new(a: Plane, b: Plane) -> Result<Self> {
        check_dims(a.dims(), b.dims())?;
        Ok(Self { a, b })
    }

    pub fn from_vecs(width: usize, height: usize, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        Self::new(Plane::new(width, height, a)?, Plane::new(width, height, b)?)
    }

    pub fn filled(width: usize, height: usize, a: f64, b: f64) -> Self {
        Self {
            a: Plane::filled(width, height, a),
            b: Plane::filled(width, height, b),
        }
    }

    pub fn width(&self) -> usize {
        self.a.width
    }

    pub fn height(&self) -> usize {
        self.a.height
    }

    pub fn dims(&self) -> (usize, usize) {
        self.a.dims()
    }

    pub fn len(&self) -> usize {
        self.a.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.data.is_empty()
    }

    pub fn a(&self) -> &[f64] {
        &self.a.data
    }

    pub fn b(&self) -> &[f64] {
        &self.b.data
    }

    pub fn a_mut(&mut self) -> &mut [f64] {
        &mut self.a.data
    }

    pub fn b_mut(&mut self) -> &mut [f64] {
        &mut self.b.data
    }

    pub fn into_planes(self) -> (Plane, Plane) {
        (self.a, self.b)
    }

    /// Nearest-neighbor resampling of both chroma planes to `width` x `height`.
    ///
    /// Output pixel `i` samples source index `floor((2i + 1) * src / (2 * dst))`,
    /// i.e. the source pixel containing the destination pixel's center.
    pub fn resize_nearest(&self, width: usize, height: usize) -> Result<AbPlane> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParameter(format!(
                "resize target must be positive, got {width}x{height}"
            )));
        }
        let xs: Vec<usize> = (0..width)
            .map(|i| nearest_source(i, width, self.width()))
            .collect();
        let ys: Vec<usize> = (0..height)
            .map(|i| nearest_source(i, height, self.height()))
            .collect();
        let mut a = Vec::with_capacity(width * height);
        let mut b = Vec::with_capacity(width * height);
        for &sy in &ys {
            for &sx in &xs {
                let idx = sy * self.width() + sx;
                a.push(self.a.data[idx]);
                b.push(self.b.data[idx]);
            }
        }
        AbPlane::from_vecs(width, height, a, b)
    }
}

pub(crate) fn nearest_source(dst_index: usize, dst_len: usize, src_len: usize) -> usize {
    ((2 * dst_index + 1) * src_len / (2 * dst_len)).min(src_len - 1)
}

/// A CIE L*a*b* image stored as three planes.
#[derive(Debug, Clone, PartialEq)]
pub struct LabImage {
    l: Plane,
    ab: AbPlane,
}

impl LabImage {
    pub fn width(&self) -> usize {
        self.l.width
    }

    pub fn height(&self) -> usize {
        self.l.height
    }

    pub fn l(&self) -> &Plane {
        &self.l
    }

    pub fn ab(&self) -> &AbPlane {
        &self.ab
    }

    pub fn pixel(&self, x: usize, y: usize) -> Lab {
        let i = y * self.width() + x;
        Lab {
            l: self.l.data[i],
            a: self.ab.a.data[i],
            b: self.ab.b.data[i],
        }
    }

    /// Separates luminance from chroma.
    pub fn split_luminance(self) -> (LPlane, AbPlane) {
        (self.l, self.ab)
    }

    /// Joins a luminance plane with chroma planes of the same size.
    pub fn merge_luminance(l: LPlane, ab: AbPlane) -> Result<LabImage> {
        check_dims(l.dims(), ab.dims())?;
        Ok(LabImage { l, ab })
    }
}

fn check_dims(expected: (usize, usize), actual: (usize, usize)) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}

pub fn split_luminance(img: LabImage) -> (LPlane, AbPlane) {
    img.split_luminance()
}

pub fn merge_luminance(l: LPlane, ab: AbPlane) -> Result<LabImage> {
    LabImage::merge_luminance(l, ab)
}

pub fn srgb_to_lab(img: &RgbImage) -> LabImage {
    let n = img.width * img.height;
    let (mut l, mut a, mut b) = (
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    );
    for p in img.pixels() {
        let lab = rgb_to_lab(p);
        l.push(lab.l);
        a.push(lab.a);
        b.push(lab.b);
    }
    let (w, h) = (img.width, img.height);
    LabImage {
        l: Plane {
            width: w,
            height: h,
            data: l,
        },
        ab: AbPlane {
            a: Plane {
                width: w,
                height: h,
                data: a,
            },
            b: Plane {
                width: w,
                height: h,
                data: b,
            },
        },
    }
}

pub fn lab_to_srgb(img: &LabImage) -> RgbImage {
    let n = img.width() * img.height();
    let mut data = Vec::with_capacity(n * 3);
    for i in 0..n {
        let lab = Lab {
            l: img.l.data[i],
            a: img.ab.a.data[i],
            b: img.ab.b.data[i],
        };
        data.extend_from_slice(&lab_to_rgb(lab));
    }
    RgbImage {
        width: img.width(),
        height: img.height(),
        data,
    }
}
