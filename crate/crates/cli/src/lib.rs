//! Command-line front end for the chroma classification toolkit.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chromaclass::palette::{DEFAULT_DOWNSAMPLE, DEFAULT_THRESHOLD};
use chromaclass::rebalance::{default_phi, DemoConfig, DEFAULT_UPSILON};
use chromaclass::{
    accumulate_histogram, build_palette, count_batch_classes, demo_rebalance, dequantize_image,
    harmonize, io, lab_to_srgb, load_palette, merge_luminance, quantize_image, rebalanced_weights,
    render_swatch, save_palette, split_luminance, srgb_to_lab, BinGeometry, CorpusSource,
    CorpusSpec, Error, HarmonizeParams, Metric, Result,
};
use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "chromaclass",
    version,
    about = "Colorization as classification over a*b* color classes"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Count chroma classes over a corpus and write the kept-class palette.
    BuildPalette(BuildPaletteArgs),
    /// Convert an sRGB image to a 16-bit class-map PNG.
    Quantize(QuantizeArgs),
    /// Rebuild an sRGB image from a class map and a luminance source.
    Dequantize(DequantizeArgs),
    /// Render the palette as a grid of color cells.
    Swatch(SwatchArgs),
    /// Snap chroma outliers inside large segments to the segment mode.
    Harmonize(HarmonizeArgs),
    /// Compare a generated image against ground truth.
    Evaluate(EvaluateArgs),
    /// Print per-class counts and rebalanced weights for a batch of class maps.
    Weights(WeightsArgs),
    /// Train a toy classifier with uniform and rebalanced weights.
    Demo(DemoArgs),
}

#[derive(Debug, Clone, Args)]
pub struct GeometryArgs {
    /// Bin width in a*b* units
    #[arg(long, default_value_t = 10.0)]
    pub alpha: f64,
    /// Offset of the bin grid
    #[arg(long, default_value_t = 100.0)]
    pub beta: f64,
    /// Bins per chroma axis
    #[arg(long, default_value_t = 20)]
    pub delta: u32,
}

impl GeometryArgs {
    pub fn geometry(&self) -> Result<BinGeometry> {
        BinGeometry::new(self.alpha, self.beta, self.delta)
    }
}

#[derive(Debug, Args)]
pub struct BuildPaletteArgs {
    /// Directory of PNG/JPEG training images
    #[arg(long)]
    pub corpus: PathBuf,
    #[command(flatten)]
    pub geometry: GeometryArgs,
    /// Chroma planes are resampled to NxN before counting
    #[arg(long, default_value_t = DEFAULT_DOWNSAMPLE)]
    pub downsample: usize,
    /// Minimum sample count for a class to be kept
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: u64,
    /// Output palette file
    #[arg(long, default_value = "palette.json")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct QuantizeArgs {
    /// Input sRGB image
    #[arg(long)]
    pub image: PathBuf,
    /// Palette file
    #[arg(long, default_value = "palette.json")]
    pub palette: PathBuf,
    /// Output class-map PNG
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DequantizeArgs {
    /// Class-map PNG
    #[arg(long)]
    pub classes: PathBuf,
    /// Palette file
    #[arg(long, default_value = "palette.json")]
    pub palette: PathBuf,
    /// Image whose L channel is kept
    #[arg(long)]
    pub luminance: PathBuf,
    /// Output sRGB PNG
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SwatchArgs {
    /// Palette file
    #[arg(long, default_value = "palette.json")]
    pub palette: PathBuf,
    /// Side of one grid cell in pixels
    #[arg(long, default_value_t = 16)]
    pub cell: usize,
    /// Output PNG
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct HarmonizeArgs {
    /// Colorized sRGB image; its chroma is harmonized and its L kept
    #[arg(long)]
    pub ab: PathBuf,
    /// 16-bit label PNG, or a directory of binary masks
    #[arg(long)]
    pub segments: PathBuf,
    /// Outlier threshold on a*
    #[arg(long, default_value_t = 8.0)]
    pub delta_a: f64,
    /// Outlier threshold on b*
    #[arg(long, default_value_t = 8.0)]
    pub delta_b: f64,
    /// Segments need more than this many pixels to be processed
    #[arg(long, default_value_t = 500)]
    pub psi: usize,
    /// Output sRGB PNG
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Generated image
    #[arg(long)]
    pub generated: PathBuf,
    /// Ground-truth image
    #[arg(long)]
    pub truth: PathBuf,
    /// Palette file, needed for cnr
    #[arg(long)]
    pub palette: Option<PathBuf>,
    /// Comma-separated metrics
    #[arg(long, value_delimiter = ',', default_value = "mse,psnr,ssim,uiqi,cnr")]
    pub metrics: Vec<MetricArg>,
    /// PSNR peak value on the [0, 1] channel scale
    #[arg(long, default_value_t = 1.0)]
    pub peak: f64,
    /// Also write the JSON report to this file
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy)]
pub struct MetricArg(pub Metric);

impl FromStr for MetricArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        s.parse().map(MetricArg).map_err(|e: Error| e.to_string())
    }
}

#[derive(Debug, Args)]
pub struct WeightsArgs {
    /// Directory of class-map PNGs forming one batch
    #[arg(long)]
    pub classmaps: PathBuf,
    /// Palette file
    #[arg(long, default_value = "palette.json")]
    pub palette: PathBuf,
    /// Trade-off factor on the class counts
    #[arg(long, default_value_t = DEFAULT_UPSILON)]
    pub upsilon: f64,
    /// Trade-off factor on the max count; auto is 1/n_classes (1/215 for the reference palette)
    #[arg(long, default_value = "auto")]
    pub phi: Phi,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Phi {
    Auto,
    Value(f64),
}

impl FromStr for Phi {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "auto" {
            return Ok(Phi::Auto);
        }
        s.parse()
            .map(Phi::Value)
            .map_err(|_| format!("expected a number or auto, got {s:?}"))
    }
}

#[derive(Debug, Args)]
pub struct DemoArgs {
    /// RNG seed for the synthetic dataset
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Majority class size
    #[arg(long, default_value_t = 990)]
    pub majority: usize,
    /// Minority class size
    #[arg(long, default_value_t = 10)]
    pub minority: usize,
    /// Distance between the blob centers in blob standard deviations
    #[arg(long, default_value_t = 5.0)]
    pub separation: f64,
    /// Gradient descent steps
    #[arg(long, default_value_t = 500)]
    pub iterations: usize,
    /// Gradient descent step size
    #[arg(long, default_value_t = 0.1)]
    pub learning_rate: f64,
    /// Trade-off factor on the class counts
    #[arg(long, default_value_t = DEFAULT_UPSILON)]
    pub upsilon: f64,
}

/// Formats like C's `%g` with 6 significant digits, independent of locale.
pub fn format_g(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        return format!("{}e{exp}", trim_zeros(mantissa));
    }
    let decimals = (5 - exp) as usize;
    trim_zeros(&format!("{v:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::BuildPalette(a) => cmd_build_palette(a),
        Command::Quantize(a) => cmd_quantize(a),
        Command::Dequantize(a) => cmd_dequantize(a),
        Command::Swatch(a) => cmd_swatch(a),
        Command::Harmonize(a) => cmd_harmonize(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Weights(a) => cmd_weights(a),
        Command::Demo(a) => cmd_demo(a),
    }
}

fn cmd_build_palette(a: &BuildPaletteArgs) -> Result<()> {
    let g = a.geometry.geometry()?;
    let spec = CorpusSpec {
        source: CorpusSource::Directory(a.corpus.clone()),
        downsample: (a.downsample, a.downsample),
        threshold: a.threshold,
    };
    let corpus = accumulate_histogram(&spec, &g)?;
    let palette = build_palette(&corpus.histogram, a.threshold)?;
    save_palette(&palette, &a.out)?;
    let kept = palette.n_classes();
    println!(
        "images={} skipped={} total_samples={} kept={} dropped={}",
        corpus.images,
        corpus.skipped.len(),
        corpus.histogram.total_samples(),
        kept,
        g.n_raw() - kept
    );
    Ok(())
}

fn cmd_quantize(a: &QuantizeArgs) -> Result<()> {
    let palette = load_palette(&a.palette)?;
    let lab = srgb_to_lab(&io::load_rgb(&a.image)?);
    let classes = quantize_image(lab.ab(), &palette);
    io::save_class_map(&classes, &a.out)?;
    log::info!("wrote {}", a.out.display());
    Ok(())
}

fn cmd_dequantize(a: &DequantizeArgs) -> Result<()> {
    let palette = load_palette(&a.palette)?;
    let classes = io::load_class_map(&a.classes, palette.n_classes())?;
    let ab = dequantize_image(&classes, &palette)?;
    let (l, _) = split_luminance(srgb_to_lab(&io::load_rgb(&a.luminance)?));
    let out = lab_to_srgb(&merge_luminance(l, ab)?);
    io::save_rgb(&out, &a.out)
}

fn cmd_swatch(a: &SwatchArgs) -> Result<()> {
    let palette = load_palette(&a.palette)?;
    io::save_rgb(&render_swatch(&palette, a.cell)?, &a.out)
}

fn cmd_harmonize(a: &HarmonizeArgs) -> Result<()> {
    let params = HarmonizeParams {
        delta_a: a.delta_a,
        delta_b: a.delta_b,
        psi: a.psi,
    };
    params.validate()?;
    let (l, ab) = split_luminance(srgb_to_lab(&io::load_rgb(&a.ab)?));
    let segments = io::load_segments(&a.segments)?;
    let harmonized = harmonize(&ab, &segments, &params)?;
    let changed = ab
        .a()
        .iter()
        .zip(ab.b())
        .zip(harmonized.a().iter().zip(harmonized.b()))
        .filter(|(x, y)| x != y)
        .count();
    log::info!("{changed} pixels changed");
    io::save_rgb(&lab_to_srgb(&merge_luminance(l, harmonized)?), &a.out)
}

fn cmd_evaluate(a: &EvaluateArgs) -> Result<()> {
    let generated = io::load_rgb(&a.generated)?;
    let truth = io::load_rgb(&a.truth)?;
    let palette = a.palette.as_deref().map(load_palette).transpose()?;
    let metrics: Vec<Metric> = a.metrics.iter().map(|m| m.0).collect();
    let report =
        chromaclass::metrics::evaluate(&generated, &truth, palette.as_ref(), &metrics, a.peak)?;

    let mut json = String::from("{");
    let mut row = Vec::new();
    for (i, &m) in metrics.iter().enumerate() {
        let v = report.get(m).expect("requested metric");
        let text = format_g(v);
        let value = if v.is_finite() {
            text.clone()
        } else {
            format!("\"{text}\"")
        };
        if i > 0 {
            json.push(',');
        }
        write!(json, "\"{}\":{value}", m.name()).expect("write to string");
        row.push(text);
    }
    json.push('}');
    println!("{json}");
    println!("{}", row.join(","));
    if let Some(out) = &a.out {
        write_text(out, &format!("{json}\n"))?;
    }
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn cmd_weights(a: &WeightsArgs) -> Result<()> {
    let palette = load_palette(&a.palette)?;
    let n = palette.n_classes();
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&a.classmaps)
        .map_err(|source| Error::Io {
            path: a.classmaps.clone(),
            source,
        })?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "no class-map PNGs in {}",
            a.classmaps.display()
        )));
    }
    let maps = paths
        .iter()
        .map(|p| io::load_class_map(p, n))
        .collect::<Result<Vec<_>>>()?;
    let counts = count_batch_classes(&maps, n)?;
    let phi = match a.phi {
        Phi::Auto => default_phi(n),
        Phi::Value(v) => v,
    };
    let weights = rebalanced_weights(&counts, a.upsilon, phi)?;

    println!("class,raw_class,center_a,center_b,count,weight");
    for (i, ((&count, &w), (&raw, &(ca, cb)))) in counts
        .counts()
        .iter()
        .zip(weights.weights())
        .zip(palette.kept().iter().zip(palette.centers()))
        .enumerate()
    {
        println!(
            "{i},{},{},{},{count},{}",
            raw.value(),
            format_g(ca),
            format_g(cb),
            format_g(w)
        );
    }
    Ok(())
}

fn cmd_demo(a: &DemoArgs) -> Result<()> {
    let cfg = DemoConfig {
        seed: a.seed,
        majority: a.majority,
        minority: a.minority,
        separation: a.separation,
        iterations: a.iterations,
        learning_rate: a.learning_rate,
        upsilon: a.upsilon,
    };
    let report = demo_rebalance(&cfg)?;
    println!("arm,weight_majority,weight_minority,recall_majority,recall_minority,final_loss");
    for (name, arm) in [
        ("uniform", &report.uniform),
        ("rebalanced", &report.rebalanced),
    ] {
        println!(
            "{name},{},{},{},{},{}",
            format_g(arm.weights[0]),
            format_g(arm.weights[1]),
            format_g(arm.recall[0]),
            format_g(arm.recall[1]),
            format_g(arm.final_loss)
        );
    }
    Ok(())
}

/// Process exit code for a failed command: 1 for I/O, 2 for everything else.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_io() {
        1
    } else {
        2
    }
}
