use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Row-major image with interleaved channels and values in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageSignal {
    width: usize,
    height: usize,
    channels: usize,
    pixels: Vec<f64>,
}

impl ImageSignal {
    pub fn new(width: usize, height: usize, channels: usize, pixels: Vec<f64>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidConfig(format!(
                "images have 1 or 3 channels, got {channels}"
            )));
        }
        if pixels.len() != width * height * channels {
            return Err(Error::shape(
                "ImageSignal::new",
                format!("{width}x{height}x{channels}"),
                format!("{} values", pixels.len()),
            ));
        }
        if pixels.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidConfig(
                "pixel values must lie in [0, 1]".into(),
            ));
        }
        Ok(ImageSignal {
            width,
            height,
            channels,
            pixels,
        })
    }

    /// Builds an image from arbitrary values, clamping each into `[0, 1]`.
    /// Non-finite values map to 0.
    pub fn from_clamped(
        width: usize,
        height: usize,
        channels: usize,
        values: &[f64],
    ) -> Result<Self> {
        let pixels = values
            .iter()
            .map(|v| {
                if v.is_finite() {
                    v.clamp(0.0, 1.0)
                } else {
                    0.0
                }
            })
            .collect();
        Self::new(width, height, channels, pixels)
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f64) -> Result<Self> {
        Self::new(
            width,
            height,
            channels,
            vec![value; width * height * channels],
        )
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn get(&self, row: usize, col: usize, channel: usize) -> f64 {
        self.pixels[(row * self.width + col) * self.channels + channel]
    }

    /// Single-channel copy; RGB is reduced with Rec.601 luma weights.
    pub fn to_luma(&self) -> ImageSignal {
        if self.channels == 1 {
            return self.clone();
        }
        let pixels = self
            .pixels
            .chunks_exact(3)
            .map(|p| (0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]).clamp(0.0, 1.0))
            .collect();
        ImageSignal {
            width: self.width,
            height: self.height,
            channels: 1,
            pixels,
        }
    }

    /// Box-filter downsampling by an integer factor.
    pub fn downsample(&self, factor: usize) -> Result<ImageSignal> {
        if factor == 0 || self.width % factor != 0 || self.height % factor != 0 {
            return Err(Error::InvalidConfig(format!(
                "cannot downsample {}x{} by {factor}",
                self.width, self.height
            )));
        }
        let (w, h, c) = (self.width / factor, self.height / factor, self.channels);
        let norm = 1.0 / (factor * factor) as f64;
        let mut pixels = vec![0.0; w * h * c];
        for r in 0..h {
            for col in 0..w {
                for ch in 0..c {
                    let mut acc = 0.0;
                    for dr in 0..factor {
                        for dc in 0..factor {
                            acc += self.get(r * factor + dr, col * factor + dc, ch);
                        }
                    }
                    pixels[(r * w + col) * c + ch] = (acc * norm).clamp(0.0, 1.0);
                }
            }
        }
        ImageSignal::new(w, h, c, pixels)
    }
}

/// Reads an 8- or 16-bit PNG. Alpha is dropped, palettes are expanded.
pub fn load_image(path: impl AsRef<Path>) -> Result<ImageSignal> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut decoder = png::Decoder::new(BufReader::new(file));
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder.read_info().map_err(|e| Error::io(path, e))?;
    let mut buf = vec![
        0;
        reader
            .output_buffer_size()
            .ok_or_else(|| Error::io(path, "image too large"))?
    ];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::io(path, e))?;
    let bytes = &buf[..info.buffer_size()];

    let samples: Vec<f64> = match info.bit_depth {
        png::BitDepth::Eight => bytes.iter().map(|&b| b as f64 / 255.0).collect(),
        png::BitDepth::Sixteen => bytes
            .chunks_exact(2)
            .map(|b| u16::from_be_bytes([b[0], b[1]]) as f64 / 65535.0)
            .collect(),
        other => return Err(Error::io(path, format!("unsupported bit depth {other:?}"))),
    };
    let (src_channels, keep) = match info.color_type {
        png::ColorType::Grayscale => (1, 1),
        png::ColorType::GrayscaleAlpha => (2, 1),
        png::ColorType::Rgb => (3, 3),
        png::ColorType::Rgba => (4, 3),
        png::ColorType::Indexed => {
            return Err(Error::io(path, "palette image was not expanded"));
        }
    };
    let pixels = samples
        .chunks_exact(src_channels)
        .flat_map(|p| p[..keep].to_vec())
        .collect();
    ImageSignal::new(info.width as usize, info.height as usize, keep, pixels)
        .map_err(|e| Error::io(path, e))
}

/// Writes an 8-bit PNG, rounding `v * 255`.
pub fn save_png(image: &ImageSignal, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut encoder = png::Encoder::new(
        BufWriter::new(file),
        image.width as u32,
        image.height as u32,
    );
    encoder.set_color(if image.channels == 1 {
        png::ColorType::Grayscale
    } else {
        png::ColorType::Rgb
    });
    encoder.set_depth(png::BitDepth::Eight);
    let mut writer = encoder.write_header().map_err(|e| Error::io(path, e))?;
    let data: Vec<u8> = image
        .pixels
        .iter()
        .map(|v| (v * 255.0).round().clamp(0.0, 255.0) as u8)
        .collect();
    writer
        .write_image_data(&data)
        .map_err(|e| Error::io(path, e))?;
    writer.finish().map_err(|e| Error::io(path, e))
}

/// Pixel centres of a `width x height` grid mapped into `[-1, 1]^2`, row-major,
/// each as `(x, y)` with `x` following columns and `y` following rows.
pub fn grid_coords(width: usize, height: usize) -> Vec<f64> {
    let mut coords = Vec::with_capacity(width * height * 2);
    for r in 0..height {
        let y = -1.0 + (2 * r + 1) as f64 / height as f64;
        for c in 0..width {
            coords.push(-1.0 + (2 * c + 1) as f64 / width as f64);
            coords.push(y);
        }
    }
    coords
}

pub fn image_coords(image: &ImageSignal) -> Vec<f64> {
    grid_coords(image.width, image.height)
}

/// Nearest pixel `(row, col)` for a coordinate produced by [`grid_coords`].
pub fn nearest_pixel(x: f64, y: f64, width: usize, height: usize) -> (usize, usize) {
    let col = (((x + 1.0) * width as f64 - 1.0) / 2.0).round();
    let row = (((y + 1.0) * height as f64 - 1.0) / 2.0).round();
    (
        row.clamp(0.0, (height - 1) as f64) as usize,
        col.clamp(0.0, (width - 1) as f64) as usize,
    )
}

/// Adds zero-mean Gaussian noise with standard deviation `sigma_8bit / 255`
/// to every sample and clamps back into `[0, 1]`.
pub fn add_gaussian_noise<R: Rng + ?Sized>(
    image: &ImageSignal,
    sigma_8bit: f64,
    rng: &mut R,
) -> Result<ImageSignal> {
    if !(sigma_8bit >= 0.0) || !sigma_8bit.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "noise sigma must be non-negative, got {sigma_8bit}"
        )));
    }
    if sigma_8bit == 0.0 {
        return Ok(image.clone());
    }
    let normal = Normal::new(0.0, sigma_8bit / 255.0).expect("positive sigma");
    let pixels = image
        .pixels
        .iter()
        .map(|&v| (v + normal.sample(rng)).clamp(0.0, 1.0))
        .collect();
    Ok(ImageSignal {
        pixels,
        ..image.clone()
    })
}
