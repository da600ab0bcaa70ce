//! Colorization quality metrics: chromatic number ratio, MSE, PSNR, SSIM
//! and UIQI.

use serde::Serialize;

use crate::colorspace::{srgb_to_lab, RgbImage};
use crate::error::{Error, Result};
use crate::palette::Palette;
use crate::quantizer::{quantize_image, ClassMap};

/// SSIM/UIQI window side.
pub const WINDOW: usize = 8;
const K1: f64 = 0.01;
const K2: f64 = 0.03;

/// Number of distinct classes in a map.
pub fn distinct_classes(m: &ClassMap) -> usize {
    let mut seen = vec![false; m.n_classes()];
    let mut n = 0;
    for &c in m.data() {
        let slot = &mut seen[usize::from(c)];
        if !*slot {
            *slot = true;
            n += 1;
        }
    }
    n
}

/// Chromatic number ratio: distinct classes in `generated` over distinct
/// classes in `truth`. Values above 1 mean the generated map uses more
/// classes than the reference.
pub fn cnr(generated: &ClassMap, truth: &ClassMap) -> Result<f64> {
    if generated.n_classes() != truth.n_classes() {
        return Err(Error::PaletteMismatch {
            left: generated.n_classes(),
            right: truth.n_classes(),
        });
    }
    if truth.data().is_empty() {
        return Err(Error::Empty("ground-truth class map"));
    }
    Ok(distinct_classes(generated) as f64 / distinct_classes(truth) as f64)
}

/// CNR of two RGB images whose chroma is quantized with the same palette.
pub fn cnr_images(generated: &RgbImage, truth: &RgbImage, p: &Palette) -> Result<f64> {
    check_dims(
        (truth.width(), truth.height()),
        (generated.width(), generated.height()),
    )?;
    let gen = quantize_image(srgb_to_lab(generated).ab(), p);
    let tru = quantize_image(srgb_to_lab(truth).ab(), p);
    cnr(&gen, &tru)
}

fn check_dims(expected: (usize, usize), actual: (usize, usize)) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}

/// A multi-channel real image, row-major with interleaved channels.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatImage {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl FloatImage {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if channels == 0 || data.len() != width * height * channels {
            return Err(Error::InvalidImage(format!(
                "expected {} samples for {width}x{height}x{channels}, got {}",
                width * height * channels,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn gray(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        Self::new(width, height, 1, data)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    fn sample(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }
}

impl From<&RgbImage> for FloatImage {
    /// Channels scaled to [0, 1].
    fn from(img: &RgbImage) -> Self {
        Self {
            width: img.width(),
            height: img.height(),
            channels: 3,
            data: img.as_raw().iter().map(|&v| f64::from(v) / 255.0).collect(),
        }
    }
}

fn check_same(x: &FloatImage, y: &FloatImage) -> Result<()> {
    check_dims(x.dims(), y.dims())?;
    if x.channels != y.channels {
        return Err(Error::InvalidImage(format!(
            "channel count differs: {} vs {}",
            x.channels, y.channels
        )));
    }
    Ok(())
}

/// Mean squared per-sample difference.
pub fn mse(x: &FloatImage, y: &FloatImage) -> Result<f64> {
    check_same(x, y)?;
    if x.data.is_empty() {
        return Err(Error::Empty("image"));
    }
    let sum: f64 = x
        .data
        .iter()
        .zip(&y.data)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sum / x.data.len() as f64)
}

/// `10 log10(peak^2 / mse)`; identical images give `+inf`.
pub fn psnr(x: &FloatImage, y: &FloatImage, peak: f64) -> Result<f64> {
    if !(peak > 0.0 && peak.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "peak must be positive, got {peak}"
        )));
    }
    Ok(psnr_from_mse(mse(x, y)?, peak))
}

pub fn psnr_from_mse(mse: f64, peak: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (peak * peak / mse).log10()
    }
}

#[derive(Debug, Clone, Copy)]
struct WindowStats {
    mean_x: f64,
    mean_y: f64,
    var_x: f64,
    var_y: f64,
    cov: f64,
}

/// Sliding 8x8 windows with stride 1; mean of `score` over windows and
/// channels.
fn windowed(x: &FloatImage, y: &FloatImage, score: impl Fn(WindowStats) -> f64) -> Result<f64> {
    check_same(x, y)?;
    if x.width < WINDOW || x.height < WINDOW {
        return Err(Error::WindowTooLarge {
            width: x.width,
            height: x.height,
            window: WINDOW,
        });
    }
    let n = (WINDOW * WINDOW) as f64;
    let mut total = 0.0;
    for c in 0..x.channels {
        let mut channel_total = 0.0;
        for wy in 0..=x.height - WINDOW {
            for wx in 0..=x.width - WINDOW {
                let (mut sx, mut sy) = (0.0, 0.0);
                for dy in 0..WINDOW {
                    for dx in 0..WINDOW {
                        sx += x.sample(wx + dx, wy + dy, c);
                        sy += y.sample(wx + dx, wy + dy, c);
                    }
                }
                let (mean_x, mean_y) = (sx / n, sy / n);
                let (mut vx, mut vy, mut cxy) = (0.0, 0.0, 0.0);
                for dy in 0..WINDOW {
                    for dx in 0..WINDOW {
                        let a = x.sample(wx + dx, wy + dy, c) - mean_x;
                        let b = y.sample(wx + dx, wy + dy, c) - mean_y;
                        vx += a * a;
                        vy += b * b;
                        cxy += a * b;
                    }
                }
                // sample (n - 1) normalization
                channel_total += score(WindowStats {
                    mean_x,
                    mean_y,
                    var_x: vx / (n - 1.0),
                    var_y: vy / (n - 1.0),
                    cov: cxy / (n - 1.0),
                });
            }
        }
        let windows = ((x.width - WINDOW + 1) * (x.height - WINDOW + 1)) as f64;
        total += channel_total / windows;
    }
    Ok(total / x.channels as f64)
}

/// Structural similarity with a uniform 8x8 window on data of dynamic
/// range 1.
pub fn ssim(x: &FloatImage, y: &FloatImage) -> Result<f64> {
    let c1 = (K1 * 1.0).powi(2);
    let c2 = (K2 * 1.0).powi(2);
    windowed(x, y, |s| {
        ((2.0 * s.mean_x * s.mean_y + c1) * (2.0 * s.cov + c2))
            / ((s.mean_x * s.mean_x + s.mean_y * s.mean_y + c1) * (s.var_x + s.var_y + c2))
    })
}

/// Universal image quality index (SSIM without stabilizing constants).
///
/// Degenerate windows fall back to the factor that is still defined: flat
/// windows score on luminance alone, and windows where both the variances
/// and the means vanish score 1.
pub fn uiqi(x: &FloatImage, y: &FloatImage) -> Result<f64> {
    windowed(x, y, |s| {
        let var_sum = s.var_x + s.var_y;
        let mean_sq = s.mean_x * s.mean_x + s.mean_y * s.mean_y;
        match (var_sum == 0.0, mean_sq == 0.0) {
            (true, true) => 1.0,
            (true, false) => 2.0 * s.mean_x * s.mean_y / mean_sq,
            (false, true) => 2.0 * s.cov / var_sum,
            (false, false) => 4.0 * s.cov * s.mean_x * s.mean_y / (var_sum * mean_sq),
        }
    })
}

/// Which metrics an evaluation computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    Mse,
    Psnr,
    Ssim,
    Uiqi,
    Cnr,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::Mse,
        Metric::Psnr,
        Metric::Ssim,
        Metric::Uiqi,
        Metric::Cnr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Mse => "mse",
            Metric::Psnr => "psnr",
            Metric::Ssim => "ssim",
            Metric::Uiqi => "uiqi",
            Metric::Cnr => "cnr",
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s.trim())
            .ok_or_else(|| Error::InvalidParameter(format!("unknown metric {s:?}")))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MetricsReport {
    pub mse: Option<f64>,
    pub psnr: Option<f64>,
    pub ssim: Option<f64>,
    pub uiqi: Option<f64>,
    pub cnr: Option<f64>,
}

impl MetricsReport {
    pub fn get(&self, m: Metric) -> Option<f64> {
        match m {
            Metric::Mse => self.mse,
            Metric::Psnr => self.psnr,
            Metric::Ssim => self.ssim,
            Metric::Uiqi => self.uiqi,
            Metric::Cnr => self.cnr,
        }
    }
}

/// Evaluates the requested metrics on two RGB images. Pixel metrics use
/// [0, 1]-scaled channels; CNR needs a palette.
pub fn evaluate(
    generated: &RgbImage,
    truth: &RgbImage,
    palette: Option<&Palette>,
    metrics: &[Metric],
    peak: f64,
) -> Result<MetricsReport> {
    check_dims(
        (truth.width(), truth.height()),
        (generated.width(), generated.height()),
    )?;
    let (x, y) = (FloatImage::from(generated), FloatImage::from(truth));
    let mut report = MetricsReport::default();
    for &m in metrics {
        match m {
            Metric::Mse => report.mse = Some(mse(&x, &y)?),
            Metric::Psnr => report.psnr = Some(psnr(&x, &y, peak)?),
            Metric::Ssim => report.ssim = Some(ssim(&x, &y)?),
            Metric::Uiqi => report.uiqi = Some(uiqi(&x, &y)?),
            Metric::Cnr => {
                let p = palette.ok_or_else(|| {
                    Error::InvalidParameter("the cnr metric needs a palette".into())
                })?;
                report.cnr = Some(cnr_images(generated, truth, p)?);
            }
        }
    }
    Ok(report)
}
