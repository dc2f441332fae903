//! Row-major image buffers and PNG I/O.
//!
//! Display-referred sources are 8-bit sRGB (`[u8; 3]` pixels). Generated raw
//! images are 16-bit linear (`[u16; 3]` pixels) and are written without a
//! gamma chunk; their linearity is recorded in the dataset manifest.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use crate::color::LinearRgb;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const RAW_MAX: u16 = u16::MAX;

#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuffer<P> {
    width: usize,
    height: usize,
    pixels: Vec<P>,
}

impl<P> ImageBuffer<P> {
    pub fn new(width: usize, height: usize, pixels: Vec<P>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParameter(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::InvalidParameter(format!(
                "pixel count {} does not match {width}x{height}",
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, px: P) -> Result<Self>
    where
        P: Clone,
    {
        Self::new(width, height, vec![px; width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> P) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self) -> &[P] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [P] {
        &mut self.pixels
    }

    pub fn into_pixels(self) -> Vec<P> {
        self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> &P {
        &self.pixels[y * self.width + x]
    }

    pub fn map<Q>(&self, f: impl Fn(&P) -> Q) -> ImageBuffer<Q> {
        ImageBuffer {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(f).collect(),
        }
    }

    pub fn try_map<Q>(&self, f: impl Fn(&P) -> Result<Q>) -> Result<ImageBuffer<Q>> {
        Ok(ImageBuffer {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(f).collect::<Result<_>>()?,
        })
    }
}

/// Pixel types that map to a stored bit depth.
pub trait StoredPixel {
    const BIT_DEPTH: u8;
}

impl StoredPixel for [u8; 3] {
    const BIT_DEPTH: u8 = 8;
}

impl StoredPixel for [u16; 3] {
    const BIT_DEPTH: u8 = 16;
}

impl<P: StoredPixel> ImageBuffer<P> {
    pub fn bit_depth(&self) -> u8 {
        P::BIT_DEPTH
    }
}

pub type SrgbImage = ImageBuffer<[u8; 3]>;
pub type RawImage = ImageBuffer<[u16; 3]>;
pub type LinearImage<T> = ImageBuffer<LinearRgb<T>>;

impl RawImage {
    /// Linear image with values divided by `scale` (65535 for generated images).
    pub fn to_linear<T: Scalar>(&self, scale: f64) -> LinearImage<T> {
        let s = T::lit(scale);
        self.map(|px| {
            LinearRgb::new(
                T::from(px[0]).unwrap(),
                T::from(px[1]).unwrap(),
                T::from(px[2]).unwrap(),
            ) / s
        })
    }

    pub fn contains_max(&self) -> bool {
        self.pixels.iter().any(|px| px.contains(&RAW_MAX))
    }
}

impl<T: Scalar> LinearImage<T> {
    pub fn scaled(&self, s: T) -> Self {
        self.map(|px| *px * s)
    }
}

fn png_err(path: &Path, e: png::DecodingError) -> Error {
    match e {
        png::DecodingError::IoError(io) => Error::io(path, io),
        other => Error::Png(format!("{}: {other}", path.display())),
    }
}

fn png_enc_err(path: &Path, e: png::EncodingError) -> Error {
    match e {
        png::EncodingError::IoError(io) => Error::io(path, io),
        other => Error::Png(format!("{}: {other}", path.display())),
    }
}

struct Decoded {
    width: usize,
    height: usize,
    depth: png::BitDepth,
    channels: usize,
    data: Vec<u8>,
}

fn decode_png(path: &Path) -> Result<Decoded> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut decoder = png::Decoder::new(BufReader::new(file));
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder.read_info().map_err(|e| png_err(path, e))?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::Png(format!("{}: image too large", path.display())))?;
    let mut data = vec![0; size];
    let info = reader.next_frame(&mut data).map_err(|e| png_err(path, e))?;
    data.truncate(info.buffer_size());
    let channels = match info.color_type {
        png::ColorType::Grayscale => 1,
        png::ColorType::GrayscaleAlpha => 2,
        png::ColorType::Rgb => 3,
        png::ColorType::Rgba => 4,
        png::ColorType::Indexed => {
            return Err(Error::Png(format!(
                "{}: unexpanded palette image",
                path.display()
            )))
        }
    };
    Ok(Decoded {
        width: info.width as usize,
        height: info.height as usize,
        depth: info.bit_depth,
        channels,
        data,
    })
}

fn to_rgb<S: Copy>(samples: &[S], channels: usize) -> Vec<[S; 3]> {
    samples
        .chunks_exact(channels)
        .map(|c| match channels {
            1 | 2 => [c[0]; 3],
            _ => [c[0], c[1], c[2]],
        })
        .collect()
}

/// Reads an 8-bit PNG as sRGB. Gray is expanded and alpha dropped.
pub fn read_srgb8_png(path: impl AsRef<Path>) -> Result<SrgbImage> {
    let path = path.as_ref();
    let d = decode_png(path)?;
    if d.depth != png::BitDepth::Eight {
        return Err(Error::NotEightBit(d.depth as u8));
    }
    ImageBuffer::new(d.width, d.height, to_rgb(&d.data, d.channels))
}

/// Reads a 16-bit-per-channel PNG.
pub fn read_raw16_png(path: impl AsRef<Path>) -> Result<RawImage> {
    let path = path.as_ref();
    let d = decode_png(path)?;
    if d.depth != png::BitDepth::Sixteen {
        return Err(Error::Png(format!(
            "{}: expected 16-bit samples, got {:?}",
            path.display(),
            d.depth
        )));
    }
    let samples: Vec<u16> = d
        .data
        .chunks_exact(2)
        .map(|b| u16::from_be_bytes([b[0], b[1]]))
        .collect();
    ImageBuffer::new(d.width, d.height, to_rgb(&samples, d.channels))
}

fn write_png(path: &Path, width: usize, height: usize, depth: png::BitDepth, data: &[u8]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut encoder = png::Encoder::new(BufWriter::new(file), width as u32, height as u32);
    encoder.set_color(png::ColorType::Rgb);
    encoder.set_depth(depth);
    let mut writer = encoder.write_header().map_err(|e| png_enc_err(path, e))?;
    writer.write_image_data(data).map_err(|e| png_enc_err(path, e))?;
    writer.finish().map_err(|e| png_enc_err(path, e))
}

pub fn write_srgb8_png(path: impl AsRef<Path>, img: &SrgbImage) -> Result<()> {
    let data: Vec<u8> = img.pixels().iter().flatten().copied().collect();
    write_png(
        path.as_ref(),
        img.width(),
        img.height(),
        png::BitDepth::Eight,
        &data,
    )
}

/// Writes a 16-bit RGB PNG with no gamma chunk.
pub fn write_raw16_png(path: impl AsRef<Path>, img: &RawImage) -> Result<()> {
    let data: Vec<u8> = img
        .pixels()
        .iter()
        .flatten()
        .flat_map(|v| v.to_be_bytes())
        .collect();
    write_png(
        path.as_ref(),
        img.width(),
        img.height(),
        png::BitDepth::Sixteen,
        &data,
    )
}
