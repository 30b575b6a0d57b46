//! Image container, PNG I/O, color conversion and the average-pool
//! degradation operator.
//!
//! Intensities are `f64` in `[0, 1]`, stored row-major as
//! `height x width x channels` with `channels` either 1 (gray) or 3 (RGB).

use std::path::Path;

use crate::error::{Error, Result};
use crate::parallel;

/// BT.601 studio-range luma: `Y = (16 + 65.481 R + 128.553 G + 24.966 B) / 255`.
/// This is the Y-channel convention used by the common SR evaluation scripts.
const LUMA_R: f64 = 65.481;
const LUMA_G: f64 = 128.553;
const LUMA_B: f64 = 24.966;
const LUMA_OFFSET: f64 = 16.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Image {
    /// Build an image from raw data, validating the container invariants:
    /// positive dimensions, 1 or 3 channels, every element finite in `[0, 1]`.
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::param(format!(
                "image dimensions must be positive, got {height}x{width}"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::param(format!(
                "channel count must be 1 or 3, got {channels}"
            )));
        }
        if data.len() != height * width * channels {
            return Err(Error::param(format!(
                "data length {} does not match {height}x{width}x{channels}",
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite() || **v < 0.0 || **v > 1.0) {
            return Err(Error::param(format!("intensity {v} outside [0, 1]")));
        }
        Ok(Self { height, width, channels, data })
    }

    /// Build an image by evaluating `f(row, col, channel)`, clamping each
    /// value into `[0, 1]`. Panics on NaN.
    pub fn from_fn<F>(height: usize, width: usize, channels: usize, mut f: F) -> Self
    where
        F: FnMut(usize, usize, usize) -> f64,
    {
        assert!(height > 0 && width > 0, "dimensions must be positive");
        assert!(channels == 1 || channels == 3, "channels must be 1 or 3");
        let mut data = Vec::with_capacity(height * width * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    let v = f(y, x, c);
                    assert!(!v.is_nan(), "NaN intensity at ({y}, {x}, {c})");
                    data.push(v.clamp(0.0, 1.0));
                }
            }
        }
        Self { height, width, channels, data }
    }

    /// Uniform image of intensity `value`.
    pub fn constant(height: usize, width: usize, channels: usize, value: f64) -> Self {
        Self::from_fn(height, width, channels, |_, _, _| value)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// `(height, width, channels)`.
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }

    /// Row-major intensities, `height x width x channels`.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub(crate) fn idx(&self, y: usize, x: usize, c: usize) -> usize {
        (y * self.width + x) * self.channels + c
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize, c: usize) -> f64 {
        self.data[self.idx(y, x, c)]
    }

    /// Replace the raw buffer; values are clamped into `[0, 1]`.
    /// The caller must keep the length unchanged.
    pub(crate) fn overwrite_clamped(&mut self, values: &[f64]) {
        debug_assert_eq!(values.len(), self.data.len());
        for (dst, v) in self.data.iter_mut().zip(values) {
            *dst = v.clamp(0.0, 1.0);
        }
    }

    pub(crate) fn same_shape(&self, other: &Image) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::shape(self.shape(), other.shape()));
        }
        Ok(())
    }

    /// Decode an 8- or 16-bit PNG (gray or RGB; alpha is stripped) and
    /// normalize intensities to `[0, 1]`.
    pub fn load_png(path: impl AsRef<Path>) -> Result<Image> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let decoded = image::load_from_memory_with_format(&bytes, image::ImageFormat::Png)
            .map_err(|source| Error::PngDecode {
                path: path.to_path_buf(),
                source,
            })?;

        use image::DynamicImage::*;
        let (w, h) = (decoded.width() as usize, decoded.height() as usize);
        let (channels, data): (usize, Vec<f64>) = match decoded {
            ImageLuma8(img) => (1, img.into_raw().iter().map(|&v| v as f64 / 255.0).collect()),
            ImageLumaA8(img) => (
                1,
                img.into_raw().chunks(2).map(|px| px[0] as f64 / 255.0).collect(),
            ),
            ImageRgb8(img) => (3, img.into_raw().iter().map(|&v| v as f64 / 255.0).collect()),
            ImageRgba8(img) => (
                3,
                img.into_raw()
                    .chunks(4)
                    .flat_map(|px| px[..3].iter().map(|&v| v as f64 / 255.0))
                    .collect(),
            ),
            ImageLuma16(img) => (1, img.into_raw().iter().map(|&v| v as f64 / 65535.0).collect()),
            ImageLumaA16(img) => (
                1,
                img.into_raw().chunks(2).map(|px| px[0] as f64 / 65535.0).collect(),
            ),
            ImageRgb16(img) => (3, img.into_raw().iter().map(|&v| v as f64 / 65535.0).collect()),
            ImageRgba16(img) => (
                3,
                img.into_raw()
                    .chunks(4)
                    .flat_map(|px| px[..3].iter().map(|&v| v as f64 / 65535.0))
                    .collect(),
            ),
            other => {
                return Err(Error::UnsupportedPng {
                    path: path.to_path_buf(),
                    detail: format!("{:?}", other.color()),
                })
            }
        };
        Image::new(h, w, channels, data)
    }

    /// Encode as an 8-bit PNG. Quantization is `round(v * 255)` with the half
    /// case rounded away from zero, after clamping to `[0, 1]`.
    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let quantize = |v: f64| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
        let w = self.width as u32;
        let h = self.height as u32;
        let bytes: Vec<u8> = self.data.iter().map(|&v| quantize(v)).collect();
        let dynamic = match self.channels {
            1 => image::DynamicImage::ImageLuma8(
                image::GrayImage::from_raw(w, h, bytes).expect("buffer sized by construction"),
            ),
            _ => image::DynamicImage::ImageRgb8(
                image::RgbImage::from_raw(w, h, bytes).expect("buffer sized by construction"),
            ),
        };
        dynamic
            .save_with_format(path, image::ImageFormat::Png)
            .map_err(|source| Error::PngEncode {
                path: path.to_path_buf(),
                source,
            })
    }

    /// BT.601 Y channel of an RGB image. Output values stay within
    /// `[16/255, 235/255]` for inputs in `[0, 1]`.
    pub fn to_luma(&self) -> Result<Image> {
        if self.channels != 3 {
            return Err(Error::param(format!(
                "to_luma expects a 3-channel image, got {} channel(s)",
                self.channels
            )));
        }
        let mut out = vec![0.0; self.height * self.width];
        parallel::fill_rows(&mut out, self.width, |y, row| {
            for (x, dst) in row.iter_mut().enumerate() {
                let r = self.get(y, x, 0);
                let g = self.get(y, x, 1);
                let b = self.get(y, x, 2);
                *dst = (LUMA_OFFSET + LUMA_R * r + LUMA_G * g + LUMA_B * b) / 255.0;
            }
        });
        Image::new(self.height, self.width, 1, out)
    }

    /// 2x2 average pooling with stride 2. Requires even dimensions; halves
    /// both of them and preserves the global mean.
    pub fn downsample_avgpool2(&self) -> Result<Image> {
        if !self.height.is_multiple_of(2) || !self.width.is_multiple_of(2) {
            return Err(Error::param(format!(
                "average pooling requires even dimensions, got {}x{}",
                self.height, self.width
            )));
        }
        let (oh, ow, c) = (self.height / 2, self.width / 2, self.channels);
        let mut out = vec![0.0; oh * ow * c];
        parallel::fill_rows(&mut out, ow * c, |y, row| {
            for x in 0..ow {
                for ch in 0..c {
                    let s = self.get(2 * y, 2 * x, ch)
                        + self.get(2 * y, 2 * x + 1, ch)
                        + self.get(2 * y + 1, 2 * x, ch)
                        + self.get(2 * y + 1, 2 * x + 1, ch);
                    row[x * c + ch] = s / 4.0;
                }
            }
        });
        Image::new(oh, ow, c, out)
    }
}
