//! PNG/JPEG reading and writing for images, class maps and segment masks.

use std::fs;
use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageBuffer, ImageFormat, Luma};

use crate::colorspace::RgbImage;
use crate::error::{Error, Result};
use crate::harmonizer::SegmentMap;
use crate::quantizer::ClassMap;

pub fn has_image_extension(path: &Path) -> bool {
    matches!(
        ImageFormat::from_path(path),
        Ok(ImageFormat::Png | ImageFormat::Jpeg)
    )
}

fn open(path: &Path) -> Result<DynamicImage> {
    image::ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?
        .decode()
        .map_err(|e| Error::image(path, e))
}

/// Loads any supported image as 8-bit sRGB, dropping alpha.
pub fn load_rgb(path: impl AsRef<Path>) -> Result<RgbImage> {
    let path = path.as_ref();
    let img = open(path)?.into_rgb8();
    let (w, h) = img.dimensions();
    RgbImage::new(w as usize, h as usize, img.into_raw())
}

pub fn save_rgb(img: &RgbImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    image::save_buffer_with_format(
        path,
        img.as_raw(),
        img.width() as u32,
        img.height() as u32,
        image::ExtendedColorType::Rgb8,
        ImageFormat::Png,
    )
    .map_err(|e| Error::image(path, e))
}

fn load_gray16(path: &Path) -> Result<(usize, usize, Vec<u16>)> {
    let img = match open(path)? {
        DynamicImage::ImageLuma16(buf) => buf,
        DynamicImage::ImageLuma8(buf) => DynamicImage::ImageLuma8(buf).into_luma16(),
        other => {
            return Err(Error::InvalidImage(format!(
                "{}: expected a grayscale label image, got {:?}",
                path.display(),
                other.color()
            )))
        }
    };
    let (w, h) = img.dimensions();
    Ok((w as usize, h as usize, img.into_raw()))
}

/// Writes a class map as a 16-bit grayscale PNG, one class index per pixel.
pub fn save_class_map(map: &ClassMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let buf: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_raw(map.width() as u32, map.height() as u32, map.data().to_vec())
            .expect("buffer length matches dimensions");
    buf.save_with_format(path, ImageFormat::Png)
        .map_err(|e| Error::image(path, e))
}

/// Reads a 16-bit (or 8-bit) grayscale class map and checks every index
/// against `n_classes`.
pub fn load_class_map(path: impl AsRef<Path>, n_classes: usize) -> Result<ClassMap> {
    let (w, h, data) = load_gray16(path.as_ref())?;
    ClassMap::new(w, h, n_classes, data)
}

/// Reads segments either from a grayscale label image (one integer label
/// per pixel) or from a directory of binary masks, one file per segment,
/// nonzero meaning membership.
///
/// Mask files are taken in sorted order and labelled 0, 1, ...; a pixel
/// claimed by several masks belongs to the first. Pixels outside every mask
/// are unlabelled.
pub fn load_segments(path: impl AsRef<Path>) -> Result<SegmentMap> {
    let path = path.as_ref();
    if path.is_dir() {
        return load_mask_dir(path);
    }
    let (w, h, data) = load_gray16(path)?;
    SegmentMap::new(w, h, data.into_iter().map(u32::from).collect())
}

fn load_mask_dir(dir: &Path) -> Result<SegmentMap> {
    let mut paths: Vec<PathBuf> = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let p = entry.map_err(|e| Error::io(dir, e))?.path();
        if p.is_file() && has_image_extension(&p) {
            paths.push(p);
        }
    }
    paths.sort();
    if paths.is_empty() {
        return Err(Error::InvalidImage(format!(
            "{}: no mask images",
            dir.display()
        )));
    }
    let mut dims = None;
    let mut labels = Vec::new();
    for (label, p) in paths.iter().enumerate() {
        let mask = open(p)?.into_luma8();
        let d = (mask.width() as usize, mask.height() as usize);
        match dims {
            None => {
                dims = Some(d);
                labels = vec![SegmentMap::UNLABELED; d.0 * d.1];
            }
            Some(expected) if expected != d => {
                return Err(Error::DimensionMismatch {
                    expected,
                    actual: d,
                });
            }
            Some(_) => {}
        }
        for (dst, &m) in labels.iter_mut().zip(mask.as_raw()) {
            if m != 0 && *dst == SegmentMap::UNLABELED {
                *dst = label as u32;
            }
        }
    }
    let (w, h) = dims.expect("at least one mask");
    SegmentMap::new(w, h, labels)
}
