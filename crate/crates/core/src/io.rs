//! Reading and writing PGM (P2/P5), PFM and PNG images.
//!
//! Depth images keep their raw sample values (a PGM level of 37 reads as
//! 37.0). Guide images are normalized to `[0, 1]` by the PGM maxval, the PNG
//! bit depth, or clamped for PFM. PFM scanlines are stored bottom-to-top and
//! the sign of the scale field selects the byte order (negative = little
//! endian).

use std::fs;
use std::io::Cursor;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, ParseErrorKind, Result};
use crate::image::{to_grayscale, ColorImage, DepthImage, GuideImage};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    /// 8-bit binary PGM (P5, maxval 255). Reads accept any PGM.
    Pgm8,
    /// 16-bit binary PGM (P5, maxval 65535). Reads accept any PGM.
    Pgm16,
    Pfm,
    Png,
}

impl ImageFormat {
    /// Guesses the format from the file extension. `.pgm` maps to 16-bit.
    pub fn from_path(path: &Path) -> Option<ImageFormat> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "pgm" => Some(ImageFormat::Pgm16),
            "pfm" => Some(ImageFormat::Pfm),
            "png" => Some(ImageFormat::Png),
            _ => None,
        }
    }

    fn from_path_or_err(path: &Path) -> Result<ImageFormat> {
        Self::from_path(path).ok_or_else(|| {
            Error::parse(
                ParseErrorKind::UnsupportedFormat,
                format!("cannot infer image format of {}", path.display()),
            )
        })
    }
}

impl FromStr for ImageFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pgm8" | "pgm-8" => Ok(ImageFormat::Pgm8),
            "pgm16" | "pgm-16" | "pgm" => Ok(ImageFormat::Pgm16),
            "pfm" => Ok(ImageFormat::Pfm),
            "png" => Ok(ImageFormat::Png),
            other => Err(Error::parse(
                ParseErrorKind::UnsupportedFormat,
                format!("unknown image format `{other}`"),
            )),
        }
    }
}

/// Decoded PGM samples before any normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct PgmData {
    pub width: usize,
    pub height: usize,
    pub maxval: u32,
    pub samples: Vec<u16>,
}

/// Decoded PFM samples in top-to-bottom row order.
#[derive(Debug, Clone, PartialEq)]
pub struct PfmData {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub samples: Vec<f32>,
}

pub fn read_depth(path: &Path, format: ImageFormat) -> Result<DepthImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_depth(&bytes, format)
}

/// Reads a depth image, inferring the format from the extension.
pub fn read_depth_auto(path: &Path) -> Result<DepthImage> {
    read_depth(path, ImageFormat::from_path_or_err(path)?)
}

pub fn decode_depth(bytes: &[u8], format: ImageFormat) -> Result<DepthImage> {
    match format {
        ImageFormat::Pgm8 | ImageFormat::Pgm16 => {
            let pgm = decode_pgm(bytes)?;
            let data = pgm.samples.iter().map(|&s| f64::from(s)).collect();
            DepthImage::new(pgm.width, pgm.height, data)
        }
        ImageFormat::Pfm => {
            let pfm = decode_pfm(bytes)?;
            if pfm.channels != 1 {
                return Err(Error::parse(
                    ParseErrorKind::UnsupportedFormat,
                    "depth images must be single-channel PFM (Pf)",
                ));
            }
            let img = DepthImage::new(
                pfm.width,
                pfm.height,
                pfm.samples.iter().map(|&s| f64::from(s)).collect(),
            )?;
            img.ensure_finite("PFM payload")?;
            Ok(img)
        }
        ImageFormat::Png => Err(Error::parse(
            ParseErrorKind::UnsupportedFormat,
            "PNG is only supported for guide images",
        )),
    }
}

pub fn read_guide(path: &Path, format: ImageFormat) -> Result<GuideImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_guide(&bytes, format)
}

/// Reads a guide image, inferring the format from the extension.
pub fn read_guide_auto(path: &Path) -> Result<GuideImage> {
    read_guide(path, ImageFormat::from_path_or_err(path)?)
}

pub fn decode_guide(bytes: &[u8], format: ImageFormat) -> Result<GuideImage> {
    match format {
        ImageFormat::Pgm8 | ImageFormat::Pgm16 => {
            let pgm = decode_pgm(bytes)?;
            let scale = 1.0 / f64::from(pgm.maxval);
            let data = pgm.samples.iter().map(|&s| f64::from(s) * scale).collect();
            GuideImage::new(pgm.width, pgm.height, data)
        }
        ImageFormat::Pfm => {
            let pfm = decode_pfm(bytes)?;
            let data: Vec<f64> = pfm.samples.iter().map(|&s| f64::from(s)).collect();
            if let Some(index) = data.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinitePixel {
                    index,
                    context: "PFM payload".into(),
                });
            }
            match pfm.channels {
                1 => GuideImage::new(pfm.width, pfm.height, data),
                _ => to_grayscale(&ColorImage {
                    width: pfm.width,
                    height: pfm.height,
                    channels: 3,
                    data: data.into_iter().map(|v| v.clamp(0.0, 1.0)).collect(),
                }),
            }
        }
        ImageFormat::Png => decode_png_guide(bytes),
    }
}

fn decode_png_guide(bytes: &[u8]) -> Result<GuideImage> {
    let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
        .map_err(|e| Error::parse(ParseErrorKind::MalformedHeader, e.to_string()))?;
    let (width, height) = (img.width() as usize, img.height() as usize);
    // Alpha is dropped; only the color channels feed the luma.
    if img.color().has_color() {
        let rgb = img.into_rgb16();
        let data = rgb
            .into_raw()
            .into_iter()
            .map(|s| f64::from(s) / 65535.0)
            .collect();
        to_grayscale(&ColorImage {
            width,
            height,
            channels: 3,
            data,
        })
    } else {
        let luma = img.into_luma16();
        let data = luma
            .into_raw()
            .into_iter()
            .map(|s| f64::from(s) / 65535.0)
            .collect();
        GuideImage::new(width, height, data)
    }
}

pub fn write_depth(img: &DepthImage, path: &Path, format: ImageFormat) -> Result<()> {
    let bytes = encode_depth(img, format)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Writes a depth image, inferring the format from the extension.
pub fn write_depth_auto(img: &DepthImage, path: &Path) -> Result<()> {
    write_depth(img, path, ImageFormat::from_path_or_err(path)?)
}

/// Integer formats round to the nearest level and clamp to `[0, maxval]`.
pub fn encode_depth(img: &DepthImage, format: ImageFormat) -> Result<Vec<u8>> {
    img.ensure_finite("cannot encode")?;
    match format {
        ImageFormat::Pgm8 => Ok(encode_pgm(img, 255, 1.0)),
        ImageFormat::Pgm16 => Ok(encode_pgm(img, 65535, 1.0)),
        ImageFormat::Pfm => Ok(encode_pfm(img)),
        ImageFormat::Png => Err(Error::parse(
            ParseErrorKind::UnsupportedFormat,
            "depth images cannot be written as PNG",
        )),
    }
}

pub fn write_guide(img: &GuideImage, path: &Path, format: ImageFormat) -> Result<()> {
    let bytes = encode_guide(img, format)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn encode_guide(img: &GuideImage, format: ImageFormat) -> Result<Vec<u8>> {
    match format {
        ImageFormat::Pgm8 => Ok(encode_pgm(img.as_plane(), 255, 255.0)),
        ImageFormat::Pgm16 => Ok(encode_pgm(img.as_plane(), 65535, 65535.0)),
        ImageFormat::Pfm => Ok(encode_pfm(img.as_plane())),
        ImageFormat::Png => {
            let raw: Vec<u8> = img
                .data()
                .iter()
                .map(|&v| (v * 255.0).round().clamp(0.0, 255.0) as u8)
                .collect();
            let buf = image::GrayImage::from_raw(img.width() as u32, img.height() as u32, raw)
                .expect("buffer matches dimensions");
            let mut out = Cursor::new(Vec::new());
            buf.write_to(&mut out, image::ImageFormat::Png)
                .map_err(|e| Error::io("<png encoder>", std::io::Error::other(e)))?;
            Ok(out.into_inner())
        }
    }
}

/// Whitespace/comment-aware tokenizer over a netpbm header.
struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderReader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        HeaderReader { bytes, pos: 0 }
    }

    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Option<&'a str> {
        self.skip_space_and_comments();
        let start = self.pos;
        while let Some(&b) = self.bytes.get(self.pos) {
            if b.is_ascii_whitespace() || b == b'#' {
                break;
            }
            self.pos += 1;
        }
        if start == self.pos {
            return None;
        }
        std::str::from_utf8(&self.bytes[start..self.pos]).ok()
    }

    fn number<T: FromStr>(&mut self, what: &str) -> Result<T> {
        let tok = self.token().ok_or_else(|| {
            Error::parse(ParseErrorKind::MalformedHeader, format!("missing {what}"))
        })?;
        tok.parse().map_err(|_| {
            Error::parse(
                ParseErrorKind::MalformedHeader,
                format!("bad {what} `{tok}`"),
            )
        })
    }
}

pub fn decode_pgm(bytes: &[u8]) -> Result<PgmData> {
    let mut hdr = HeaderReader::new(bytes);
    let magic = hdr
        .token()
        .ok_or_else(|| Error::parse(ParseErrorKind::MalformedHeader, "empty file"))?;
    let ascii = match magic {
        "P2" => true,
        "P5" => false,
        other => {
            return Err(Error::parse(
                ParseErrorKind::UnsupportedFormat,
                format!("not a grayscale PGM (magic `{other}`)"),
            ))
        }
    };
    let width: usize = hdr.number("width")?;
    let height: usize = hdr.number("height")?;
    let maxval: u32 = hdr.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::parse(
            ParseErrorKind::MalformedHeader,
            format!("zero dimension {width}x{height}"),
        ));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::parse(
            ParseErrorKind::MalformedHeader,
            format!("maxval {maxval} outside 1..=65535"),
        ));
    }
    let count = width * height;
    let mut samples = Vec::with_capacity(count);
    if ascii {
        for i in 0..count {
            let tok = hdr.token().ok_or_else(|| {
                Error::parse(
                    ParseErrorKind::TruncatedPayload,
                    format!("expected {count} samples, found {i}"),
                )
            })?;
            let v: u32 = tok.parse().map_err(|_| {
                Error::parse(
                    ParseErrorKind::MalformedHeader,
                    format!("bad sample `{tok}`"),
                )
            })?;
            samples.push(check_sample(v, maxval)?);
        }
    } else {
        // Exactly one whitespace byte separates maxval from the raster.
        let start = hdr.pos + 1;
        let bytes_per = if maxval < 256 { 1 } else { 2 };
        let payload = bytes.get(start..).unwrap_or(&[]);
        if payload.len() < count * bytes_per {
            return Err(Error::parse(
                ParseErrorKind::TruncatedPayload,
                format!(
                    "expected {} payload bytes, found {}",
                    count * bytes_per,
                    payload.len()
                ),
            ));
        }
        for i in 0..count {
            let v = if bytes_per == 1 {
                u32::from(payload[i])
            } else {
                u32::from(u16::from_be_bytes([payload[2 * i], payload[2 * i + 1]]))
            };
            samples.push(check_sample(v, maxval)?);
        }
    }
    Ok(PgmData {
        width,
        height,
        maxval,
        samples,
    })
}

fn check_sample(v: u32, maxval: u32) -> Result<u16> {
    if v > maxval {
        return Err(Error::parse(
            ParseErrorKind::MalformedHeader,
            format!("sample {v} exceeds maxval {maxval}"),
        ));
    }
    Ok(v as u16)
}

/// Binary P5 with samples `round(v * gain)` clamped to `[0, maxval]`.
fn encode_pgm(img: &DepthImage, maxval: u16, gain: f64) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n{}\n", img.width(), img.height(), maxval).into_bytes();
    let quantize = |v: f64| (v * gain).round().clamp(0.0, f64::from(maxval)) as u16;
    if maxval < 256 {
        out.extend(img.data().iter().map(|&v| quantize(v) as u8));
    } else {
        for &v in img.data() {
            out.extend_from_slice(&quantize(v).to_be_bytes());
        }
    }
    out
}

pub fn decode_pfm(bytes: &[u8]) -> Result<PfmData> {
    let mut hdr = HeaderReader::new(bytes);
    let channels = match hdr.token() {
        Some("Pf") => 1,
        Some("PF") => 3,
        Some(other) => {
            return Err(Error::parse(
                ParseErrorKind::UnsupportedFormat,
                format!("not a PFM (magic `{other}`)"),
            ))
        }
        None => return Err(Error::parse(ParseErrorKind::MalformedHeader, "empty file")),
    };
    let width: usize = hdr.number("width")?;
    let height: usize = hdr.number("height")?;
    let scale: f64 = hdr.number("scale")?;
    if width == 0 || height == 0 {
        return Err(Error::parse(
            ParseErrorKind::MalformedHeader,
            format!("zero dimension {width}x{height}"),
        ));
    }
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::parse(
            ParseErrorKind::MalformedHeader,
            format!("invalid scale {scale}"),
        ));
    }
    let little_endian = scale < 0.0;
    let start = hdr.pos + 1;
    let row_len = width * channels;
    let count = row_len * height;
    let payload = bytes.get(start..).unwrap_or(&[]);
    if payload.len() < count * 4 {
        return Err(Error::parse(
            ParseErrorKind::TruncatedPayload,
            format!(
                "expected {} payload bytes, found {}",
                count * 4,
                payload.len()
            ),
        ));
    }
    let mut samples = vec![0f32; count];
    for (file_row, chunk) in payload[..count * 4].chunks_exact(row_len * 4).enumerate() {
        let row = height - 1 - file_row;
        for (i, b) in chunk.chunks_exact(4).enumerate() {
            let word = [b[0], b[1], b[2], b[3]];
            samples[row * row_len + i] = if little_endian {
                f32::from_le_bytes(word)
            } else {
                f32::from_be_bytes(word)
            };
        }
    }
    Ok(PfmData {
        width,
        height,
        channels,
        samples,
    })
}

fn encode_pfm(img: &DepthImage) -> Vec<u8> {
    let mut out = format!("Pf\n{} {}\n-1.0\n", img.width(), img.height()).into_bytes();
    for y in (0..img.height()).rev() {
        for x in 0..img.width() {
            out.extend_from_slice(&(img.get(x, y) as f32).to_le_bytes());
        }
    }
    out
}
