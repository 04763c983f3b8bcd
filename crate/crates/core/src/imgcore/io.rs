//! PNG and PMAP reading/writing.
//!
//! PMAP layout: the bytes `PMAP`, then width, height and channel count as
//! little-endian `u32`, then `width * height * channels` little-endian `f32`
//! values, row-major and channel-interleaved.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use png::{BitDepth, ColorType};

use super::raster::{BinaryMask, ProbMap, RgbImage};
use crate::error::{Error, Result};

pub const PMAP_MAGIC: &[u8; 4] = b"PMAP";
const PNG_SIGNATURE: &[u8; 8] = b"\x89PNG\r\n\x1a\n";

/// Gray level at or above which a mask pixel counts as foreground.
pub const MASK_THRESHOLD: u8 = 128;

struct DecodedPng {
    width: u32,
    height: u32,
    color: ColorType,
    depth: BitDepth,
    data: Vec<u8>,
}

fn decode_png(path: &Path) -> Result<DecodedPng> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut decoder = png::Decoder::new(BufReader::new(file));
    decoder.set_transformations(png::Transformations::IDENTITY);
    let decode_err = |source| Error::PngDecode {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = decoder.read_info().map_err(decode_err)?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::format(path, "image too large"))?;
    let mut data = vec![0; size];
    let info = reader.next_frame(&mut data).map_err(decode_err)?;
    // Rows are packed for byte-aligned depths, which are the only ones accepted.
    data.truncate(info.line_size * info.height as usize);
    Ok(DecodedPng {
        width: info.width,
        height: info.height,
        color: info.color_type,
        depth: info.bit_depth,
        data,
    })
}

fn color_name(color: ColorType) -> &'static str {
    match color {
        ColorType::Grayscale => "grayscale",
        ColorType::Rgb => "RGB",
        ColorType::Indexed => "indexed",
        ColorType::GrayscaleAlpha => "grayscale+alpha",
        ColorType::Rgba => "RGBA",
    }
}

fn depth_bits(depth: BitDepth) -> u8 {
    match depth {
        BitDepth::One => 1,
        BitDepth::Two => 2,
        BitDepth::Four => 4,
        BitDepth::Eight => 8,
        BitDepth::Sixteen => 16,
    }
}

fn encode_png(
    path: &Path,
    width: u32,
    height: u32,
    color: ColorType,
    depth: BitDepth,
    data: &[u8],
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut encoder = png::Encoder::new(BufWriter::new(file), width, height);
    encoder.set_color(color);
    encoder.set_depth(depth);
    let encode_err = |source| Error::PngEncode {
        path: path.to_path_buf(),
        source,
    };
    let mut writer = encoder.write_header().map_err(encode_err)?;
    writer.write_image_data(data).map_err(encode_err)?;
    writer.finish().map_err(encode_err)
}

/// Loads an 8-bit grayscale PNG, binarizing at [`MASK_THRESHOLD`].
pub fn load_mask_png(path: impl AsRef<Path>) -> Result<BinaryMask> {
    let path = path.as_ref();
    let png = decode_png(path)?;
    if png.color != ColorType::Grayscale {
        return Err(Error::format(
            path,
            format!(
                "mask must be a grayscale PNG, found color type {}",
                color_name(png.color)
            ),
        ));
    }
    if png.depth != BitDepth::Eight {
        return Err(Error::format(
            path,
            format!(
                "mask must be 8-bit, found bit depth {}",
                depth_bits(png.depth)
            ),
        ));
    }
    let data = png
        .data
        .iter()
        .map(|&v| (v >= MASK_THRESHOLD) as u8)
        .collect();
    BinaryMask::new(png.width, png.height, data)
}

/// Writes a mask as 8-bit grayscale, foreground as 255.
pub fn save_mask_png(mask: &BinaryMask, path: impl AsRef<Path>) -> Result<()> {
    let data: Vec<u8> = mask.as_slice().iter().map(|&v| v * 255).collect();
    encode_png(
        path.as_ref(),
        mask.width(),
        mask.height(),
        ColorType::Grayscale,
        BitDepth::Eight,
        &data,
    )
}

/// Loads an 8-bit RGB or RGBA PNG; alpha is dropped.
pub fn load_rgb_png(path: impl AsRef<Path>) -> Result<RgbImage> {
    let path = path.as_ref();
    let png = decode_png(path)?;
    if png.depth != BitDepth::Eight {
        return Err(Error::format(
            path,
            format!(
                "image must be 8-bit, found bit depth {}",
                depth_bits(png.depth)
            ),
        ));
    }
    let data = match png.color {
        ColorType::Rgb => png.data,
        ColorType::Rgba => png
            .data
            .chunks_exact(4)
            .flat_map(|p| [p[0], p[1], p[2]])
            .collect(),
        ColorType::Grayscale => png.data.iter().flat_map(|&v| [v, v, v]).collect(),
        other => {
            return Err(Error::format(
                path,
                format!("unsupported color type {}", color_name(other)),
            ))
        }
    };
    RgbImage::new(png.width, png.height, data)
}

pub fn save_rgb_png(image: &RgbImage, path: impl AsRef<Path>) -> Result<()> {
    encode_png(
        path.as_ref(),
        image.width(),
        image.height(),
        ColorType::Rgb,
        BitDepth::Eight,
        image.as_bytes(),
    )
}

/// Loads a probability map from PMAP or a 16-bit grayscale PNG, picked by
/// the file's leading bytes.
pub fn load_probmap(path: impl AsRef<Path>) -> Result<ProbMap> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(PNG_SIGNATURE) {
        return load_probmap_png16(path);
    }
    decode_pmap(&bytes).map_err(|message| Error::format(path, message))
}

fn load_probmap_png16(path: &Path) -> Result<ProbMap> {
    let png = decode_png(path)?;
    if png.color != ColorType::Grayscale || png.depth != BitDepth::Sixteen {
        return Err(Error::format(
            path,
            format!(
                "probability PNG must be 16-bit grayscale, found {} at {} bits",
                color_name(png.color),
                depth_bits(png.depth)
            ),
        ));
    }
    let data = png
        .data
        .chunks_exact(2)
        .map(|b| u16::from_be_bytes([b[0], b[1]]) as f32 / 65535.0)
        .collect();
    ProbMap::new(png.width, png.height, 1, data)
}

/// Writes a single-channel map as 16-bit grayscale, rounding to the nearest
/// of the 65536 levels.
pub fn save_probmap_png16(map: &ProbMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if map.channels() != 1 {
        return Err(Error::invalid(
            "probability map",
            format!(
                "16-bit PNG holds one channel, map has {}",
                map.channels()
            ),
        ));
    }
    let data: Vec<u8> = map
        .as_slice()
        .iter()
        .flat_map(|&v| ((v as f64 * 65535.0).round() as u16).to_be_bytes())
        .collect();
    encode_png(
        path,
        map.width(),
        map.height(),
        ColorType::Grayscale,
        BitDepth::Sixteen,
        &data,
    )
}

pub fn save_probmap(map: &ProbMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    out.write_all(&encode_pmap(map))
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn encode_pmap(map: &ProbMap) -> Vec<u8> {
    let mut bytes = Vec::with_capacity(16 + map.as_slice().len() * 4);
    bytes.extend_from_slice(PMAP_MAGIC);
    bytes.extend_from_slice(&map.width().to_le_bytes());
    bytes.extend_from_slice(&map.height().to_le_bytes());
    bytes.extend_from_slice(&map.channels().to_le_bytes());
    for v in map.as_slice() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    bytes
}

/// Parses PMAP bytes; the error string describes what is wrong.
pub fn decode_pmap(bytes: &[u8]) -> std::result::Result<ProbMap, String> {
    if bytes.len() < 4 || &bytes[..4] != PMAP_MAGIC {
        return Err("bad magic, expected \"PMAP\"".into());
    }
    if bytes.len() < 16 {
        return Err(format!("truncated header ({} bytes)", bytes.len()));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let (width, height, channels) = (word(4), word(8), word(12));
    let count = (width as u64) * (height as u64) * (channels as u64);
    let expected = 16 + count * 4;
    if (bytes.len() as u64) < expected {
        return Err(format!(
            "truncated payload: {width}x{height}x{channels} needs {expected} bytes, file has {}",
            bytes.len()
        ));
    }
    if (bytes.len() as u64) > expected {
        return Err(format!(
            "{} trailing bytes after payload",
            bytes.len() as u64 - expected
        ));
    }
    let data: Vec<f32> = bytes[16..]
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    if let Some(pos) = data.iter().position(|v| !(0.0..=1.0).contains(v)) {
        return Err(format!("value {} at index {pos} outside [0, 1]", data[pos]));
    }
    ProbMap::new(width, height, channels, data).map_err(|e| e.to_string())
}
