use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use crate::ImageError;

/// Three-plane RGB image, 8- or 16-bit per sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    bit_depth: u8,
    planes: [Vec<u16>; 3],
}

impl RgbImage {
    pub fn new(width: usize, height: usize, bit_depth: u8, planes: [Vec<u16>; 3]) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::Empty);
        }
        if bit_depth != 8 && bit_depth != 16 {
            return Err(ImageError::UnsupportedFormat(format!("{bit_depth}-bit samples")));
        }
        let max = ((1u32 << bit_depth) - 1) as u16;
        for p in &planes {
            if p.len() != width * height {
                return Err(ImageError::PlaneSize {
                    expected: width * height,
                    got: p.len(),
                });
            }
            if bit_depth == 8 && p.iter().any(|v| *v > max) {
                return Err(ImageError::UnsupportedFormat("sample exceeds 8-bit range".into()));
            }
        }
        Ok(Self {
            width,
            height,
            bit_depth,
            planes,
        })
    }

    /// Interleaved 8-bit RGB.
    pub fn from_rgb8(width: usize, height: usize, data: &[u8]) -> Result<Self, ImageError> {
        let mut planes = [Vec::new(), Vec::new(), Vec::new()];
        for (c, plane) in planes.iter_mut().enumerate() {
            *plane = data.iter().skip(c).step_by(3).map(|v| *v as u16).collect();
        }
        if data.len() != 3 * width * height {
            return Err(ImageError::PlaneSize {
                expected: 3 * width * height,
                got: data.len(),
            });
        }
        Self::new(width, height, 8, planes)
    }

    /// Single gray plane replicated into R, G and B.
    pub fn from_gray8(width: usize, height: usize, data: &[u8]) -> Result<Self, ImageError> {
        let p: Vec<u16> = data.iter().map(|v| *v as u16).collect();
        Self::new(width, height, 8, [p.clone(), p.clone(), p])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bit_depth(&self) -> u8 {
        self.bit_depth
    }

    pub fn plane(&self, c: usize) -> &[u16] {
        &self.planes[c]
    }

    /// Channel `c` rescaled to `[0, 255]`.
    pub fn plane_255(&self, c: usize) -> Vec<f64> {
        let scale = 255.0 / ((1u32 << self.bit_depth) - 1) as f64;
        if self.bit_depth == 8 {
            self.planes[c].iter().map(|v| *v as f64).collect()
        } else {
            self.planes[c].iter().map(|v| *v as f64 * scale).collect()
        }
    }
}

/// Real-valued single plane, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LumaImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl LumaImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::Empty);
        }
        if data.len() != width * height {
            return Err(ImageError::PlaneSize {
                expected: width * height,
                got: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(ImageError::NonFinite);
        }
        Ok(Self { width, height, data })
    }

    pub(crate) fn from_parts(width: usize, height: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        Self { width, height, data }
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_parts(self.width, self.height, self.data.iter().map(|v| f(*v)).collect())
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        let data = self.data.iter().zip(&other.data).map(|(a, b)| f(*a, *b)).collect();
        Self::from_parts(self.width, self.height, data)
    }
}

pub const BT709_WEIGHTS: [f64; 3] = [0.2125, 0.7154, 0.0721];

/// `Y = 0.2125 R + 0.7154 G + 0.0721 B` on the 0-255 scale, unrounded.
pub fn to_luma_bt709(img: &RgbImage) -> LumaImage {
    let [r, g, b] = [img.plane_255(0), img.plane_255(1), img.plane_255(2)];
    let [wr, wg, wb] = BT709_WEIGHTS;
    let data = (0..r.len()).map(|i| wr * r[i] + wg * g[i] + wb * b[i]).collect();
    LumaImage::from_parts(img.width(), img.height(), data)
}

pub(crate) fn check_same_size(a: (usize, usize), b: (usize, usize)) -> Result<(), ImageError> {
    if a != b {
        return Err(ImageError::DimensionMismatch {
            ref_width: a.0,
            ref_height: a.1,
            dist_width: b.0,
            dist_height: b.1,
        });
    }
    Ok(())
}

/// Decodes an RGB or grayscale PNG without any colour conversion.
/// Palette images are expanded; any alpha channel is rejected.
pub fn decode_png(path: impl AsRef<Path>) -> Result<RgbImage, ImageError> {
    let path = path.as_ref();
    let shown = path.display().to_string();
    let file = File::open(path).map_err(|source| ImageError::Io {
        path: shown.clone(),
        source,
    })?;
    let decode_err = |e: png::DecodingError| ImageError::Decode {
        path: shown.clone(),
        message: e.to_string(),
    };
    let mut decoder = png::Decoder::new(BufReader::new(file));
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder.read_info().map_err(decode_err)?;
    let size = reader.output_buffer_size().ok_or_else(|| ImageError::Decode {
        path: shown.clone(),
        message: "image too large".into(),
    })?;
    let mut buf = vec![0u8; size];
    let info = reader.next_frame(&mut buf).map_err(decode_err)?;
    let (w, h) = (info.width as usize, info.height as usize);
    let depth = match info.bit_depth {
        png::BitDepth::Eight => 8u8,
        png::BitDepth::Sixteen => 16u8,
        other => {
            return Err(ImageError::UnsupportedFormat(format!("{other:?} bit depth in {shown}")));
        }
    };
    let channels = match info.color_type {
        png::ColorType::Rgb => 3,
        png::ColorType::Grayscale => 1,
        png::ColorType::Rgba | png::ColorType::GrayscaleAlpha => {
            return Err(ImageError::AlphaChannel(shown));
        }
        other => {
            return Err(ImageError::UnsupportedFormat(format!("{other:?} colour type in {shown}")));
        }
    };
    let bytes = &buf[..info.line_size * h];
    let samples: Vec<u16> = if depth == 8 {
        bytes.iter().map(|v| *v as u16).collect()
    } else {
        bytes.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect()
    };
    let planes = if channels == 1 {
        [samples.clone(), samples.clone(), samples]
    } else {
        let mut planes = [Vec::with_capacity(w * h), Vec::with_capacity(w * h), Vec::with_capacity(w * h)];
        for px in samples.chunks_exact(3) {
            for c in 0..3 {
                planes[c].push(px[c]);
            }
        }
        planes
    };
    RgbImage::new(w, h, depth, planes)
}
