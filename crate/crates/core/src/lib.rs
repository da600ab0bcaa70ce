//! Chroma classification toolkit.
//!
//! Treats image colorization as classification over discrete a*b* color
//! classes:
//!
//! - [`colorspace`]: sRGB <-> CIELAB and luminance/chroma planes
//! - [`quantizer`]: chroma <-> color class transform on a square bin grid
//! - [`palette`]: corpus histograms and the kept-class palette with its
//!   nearest-center remap
//! - [`rebalance`]: per-batch class weights, softmax and weighted
//!   cross-entropy with its gradient, regression baselines
//! - [`harmonizer`]: segment-wise snapping of chroma outliers to the mode
//! - [`metrics`]: chromatic number ratio, MSE, PSNR, SSIM, UIQI
//! - [`io`]: image, class map and segment mask files

pub mod colorspace;
pub mod error;
pub mod harmonizer;
pub mod io;
pub mod metrics;
pub mod palette;
pub mod quantizer;
pub mod rebalance;

pub use colorspace::{
    lab_to_srgb, merge_luminance, split_luminance, srgb_to_lab, AbPlane, LPlane, Lab, LabImage,
    Plane, RgbImage,
};
pub use error::{Error, Result};
pub use harmonizer::{harmonize, segment_mode, HarmonizeParams, SegmentMap};
pub use metrics::{cnr, cnr_images, mse, psnr, ssim, uiqi, FloatImage, Metric, MetricsReport};
pub use palette::{
    accumulate_histogram, build_palette, load_palette, render_swatch, save_palette, ClassHistogram,
    CorpusSource, CorpusSpec, Palette,
};
pub use quantizer::{
    ab_to_raw_class, dequantize_image, quantize_image, raw_class_to_ab, BinGeometry, ClassMap,
    RawClass,
};
pub use rebalance::{
    cbce_loss, count_batch_classes, demo_rebalance, rebalanced_weights, regression_loss, softmax,
    uniform_weights, ClassCounts, ClassTensor, LossResult, Reduction, RegressionLoss, WeightVector,
};
