//! 8-bit grayscale images: binary PGM I/O, patch extraction, noise and PSNR.

use std::io::{Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::Mat;

/// Side length of the square patches.
pub const PATCH: usize = 8;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("unsupported image format {0:?}; only binary PGM (P5) is read")]
    UnsupportedFormat(String),

    #[error("unsupported maxval {0}; only 255 is read")]
    MaxVal(u32),

    #[error("malformed PGM header: {0}")]
    Header(String),

    #[error("truncated pixel data: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error("image is {width}x{height}, smaller than an {PATCH}x{PATCH} patch")]
    TooSmall { width: usize, height: usize },

    #[error("dimension mismatch: {0}")]
    Dimensions(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    /// Row-major pixels.
    pub pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, ImageError> {
        if pixels.len() != width * height {
            return Err(ImageError::Dimensions(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        Ok(Self { width, height, pixels })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Self { width, height, pixels: vec![value; width * height] }
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.width + col]
    }

    /// Top-left `width`×`height` window starting at `(row, col)`.
    pub fn crop(&self, row: usize, col: usize, width: usize, height: usize) -> Result<Self, ImageError> {
        if row + height > self.height || col + width > self.width {
            return Err(ImageError::Dimensions(format!(
                "crop {width}x{height} at ({row}, {col}) exceeds {}x{}",
                self.width, self.height
            )));
        }
        let mut pixels = Vec::with_capacity(width * height);
        for r in row..row + height {
            let start = r * self.width + col;
            pixels.extend_from_slice(&self.pixels[start..start + width]);
        }
        Ok(Self { width, height, pixels })
    }
}

/// Reads the next header token, skipping whitespace and `#` comments.
fn header_token(bytes: &[u8], pos: &mut usize) -> Result<String, ImageError> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() && bytes[*pos] != b'#' {
        *pos += 1;
    }
    if start == *pos {
        return Err(ImageError::Header("unexpected end of header".into()));
    }
    Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
}

fn header_number(bytes: &[u8], pos: &mut usize, what: &str) -> Result<usize, ImageError> {
    let tok = header_token(bytes, pos)?;
    tok.parse().map_err(|_| ImageError::Header(format!("{what} is not a number: {tok:?}")))
}

/// Parses a binary PGM from memory.
pub fn pgm_decode(bytes: &[u8]) -> Result<GrayImage, ImageError> {
    let mut pos = 0;
    let magic = header_token(bytes, &mut pos)?;
    if magic != "P5" {
        return Err(ImageError::UnsupportedFormat(magic));
    }
    let width = header_number(bytes, &mut pos, "width")?;
    let height = header_number(bytes, &mut pos, "height")?;
    let maxval = header_number(bytes, &mut pos, "maxval")?;
    if maxval != 255 {
        return Err(ImageError::MaxVal(maxval as u32));
    }
    if width == 0 || height == 0 {
        return Err(ImageError::Header(format!("empty image {width}x{height}")));
    }
    // Exactly one whitespace byte separates the header from the raster.
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(ImageError::Truncated { expected: width * height, found: 0 });
    }
    pos += 1;
    let expected = width * height;
    let raster = &bytes[pos..];
    if raster.len() < expected {
        return Err(ImageError::Truncated { expected, found: raster.len() });
    }
    GrayImage::new(width, height, raster[..expected].to_vec())
}

pub fn pgm_encode(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.pixels);
    out
}

pub fn pgm_read(path: impl AsRef<Path>) -> Result<GrayImage, ImageError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    pgm_decode(&bytes)
}

pub fn pgm_write(img: &GrayImage, path: impl AsRef<Path>) -> Result<(), ImageError> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(&pgm_encode(img))?;
    Ok(())
}

/// Patch origins along one axis: every `stride` pixels (at most a patch
/// width apart, so no pixel is skipped), plus the last valid origin when the
/// step does not divide the span.
fn origins(len: usize, stride: usize) -> Vec<usize> {
    let span = len - PATCH;
    let mut v: Vec<usize> = (0..=span).step_by(stride.min(PATCH)).collect();
    if *v.last().expect("span is nonnegative") != span {
        v.push(span);
    }
    v
}

/// Layout of the overlapping 8×8 patches of an image.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchGrid {
    pub patch_size: usize,
    pub stride: usize,
    pub width: usize,
    pub height: usize,
    rows: Vec<usize>,
    cols: Vec<usize>,
}

impl PatchGrid {
    pub fn new(width: usize, height: usize, stride: usize) -> Result<Self, ImageError> {
        if width < PATCH || height < PATCH {
            return Err(ImageError::TooSmall { width, height });
        }
        if stride == 0 {
            return Err(ImageError::Dimensions("patch stride must be positive".into()));
        }
        Ok(Self {
            patch_size: PATCH,
            stride,
            width,
            height,
            rows: origins(height, stride),
            cols: origins(width, stride),
        })
    }

    pub fn count(&self) -> usize {
        self.rows.len() * self.cols.len()
    }

    /// Top-left corners in row-major patch order.
    pub fn origins(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.rows.iter().flat_map(move |&r| self.cols.iter().map(move |&c| (r, c)))
    }
}

/// Patches as rows of a `count × 64` matrix, each flattened row-major.
pub fn extract_patches(img: &GrayImage, stride: usize) -> Result<(Mat, PatchGrid), ImageError> {
    let grid = PatchGrid::new(img.width, img.height, stride)?;
    let mut out = Mat::zeros((grid.count(), PATCH * PATCH));
    for (mut row, (r, c)) in out.rows_mut().into_iter().zip(grid.origins()) {
        for i in 0..PATCH {
            for j in 0..PATCH {
                row[i * PATCH + j] = img.get(r + i, c + j) as f64;
            }
        }
    }
    Ok((out, grid))
}

/// Averages overlapping patches back into an image, rounding and clamping
/// each pixel to `[0, 255]`. Patches are accumulated in grid order.
pub fn reconstruct(patches: &Mat, grid: &PatchGrid) -> Result<GrayImage, ImageError> {
    if patches.dim() != (grid.count(), PATCH * PATCH) {
        return Err(ImageError::Dimensions(format!(
            "patch matrix is {:?}, grid expects {:?}",
            patches.dim(),
            (grid.count(), PATCH * PATCH)
        )));
    }
    let mut sum = vec![0.0; grid.width * grid.height];
    let mut weight = vec![0u32; grid.width * grid.height];
    for (row, (r, c)) in patches.rows().into_iter().zip(grid.origins()) {
        for i in 0..PATCH {
            for j in 0..PATCH {
                let idx = (r + i) * grid.width + c + j;
                sum[idx] += row[i * PATCH + j];
                weight[idx] += 1;
            }
        }
    }
    let pixels = sum
        .iter()
        .zip(&weight)
        .map(|(s, w)| to_byte(s / *w as f64))
        .collect();
    GrayImage::new(grid.width, grid.height, pixels)
}

fn to_byte(v: f64) -> u8 {
    if v.is_nan() {
        0
    } else {
        v.round().clamp(0.0, 255.0) as u8
    }
}

/// Adds `σ N(0, 1)` noise per pixel, then rounds and clamps.
pub fn add_noise(img: &GrayImage, sigma: f64, seed: u64) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pixels = img
        .pixels
        .iter()
        .map(|&p| {
            let z: f64 = StandardNormal.sample(&mut rng);
            to_byte(p as f64 + sigma * z)
        })
        .collect();
    GrayImage { width: img.width, height: img.height, pixels }
}

/// Cap reported for identical images.
pub const PSNR_CAP: f64 = 99.0;

/// `10 log10(255² / MSE)` in dB, capped at 99 dB.
pub fn psnr(a: &GrayImage, b: &GrayImage) -> Result<f64, ImageError> {
    if (a.width, a.height) != (b.width, b.height) {
        return Err(ImageError::Dimensions(format!(
            "{}x{} vs {}x{}",
            a.width, a.height, b.width, b.height
        )));
    }
    let mse = a
        .pixels
        .iter()
        .zip(&b.pixels)
        .map(|(x, y)| {
            let d = *x as f64 - *y as f64;
            d * d
        })
        .sum::<f64>()
        / a.pixels.len() as f64;
    Ok(psnr_from_mse(mse))
}

pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        return PSNR_CAP;
    }
    (10.0 * (255.0 * 255.0 / mse).log10()).min(PSNR_CAP)
}
