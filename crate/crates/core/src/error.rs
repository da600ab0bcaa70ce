use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected:?}, got {actual:?} (width, height)")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("invalid bin geometry: {0}")]
    InvalidGeometry(String),

    #[error("class index {index} out of range for {n_classes} classes")]
    ClassOutOfRange { index: usize, n_classes: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("empty corpus: {0}")]
    EmptyCorpus(String),

    #[error("no class reaches the threshold of {threshold} samples")]
    NoClassAboveThreshold { threshold: u64 },

    #[error("invalid palette: {0}")]
    InvalidPalette(String),

    #[error("unsupported palette version {found} (expected {expected})")]
    PaletteVersion { found: u32, expected: u32 },

    #[error("class maps use different palettes ({left} vs {right} classes)")]
    PaletteMismatch { left: usize, right: usize },

    #[error("image of {width}x{height} is smaller than the {window}x{window} window")]
    WindowTooLarge {
        width: usize,
        height: usize,
        window: usize,
    },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("malformed palette file: {0}")]
    MalformedPalette(#[from] serde_json::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
}

impl Error {
    /// True for failures of the environment (missing files, unreadable or
    /// undecodable images) as opposed to invalid data or parameters.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. } | Error::Image { .. })
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn image(path: impl Into<PathBuf>, source: image::ImageError) -> Self {
        Error::Image {
            path: path.into(),
            source,
        }
    }
}
