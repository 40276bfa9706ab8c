//! PNG codecs for depth maps (16-bit gray, `depth = raw / 256` m, raw 0 is
//! invalid) and RGB images (8-bit).

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use crate::depth::{DepthMap, RgbImage};
use crate::error::{Error, Result};

/// Raw units per meter in depth PNGs.
pub const DEPTH_SCALE: f64 = 256.0;

fn decode(path: &Path) -> Result<(png::OutputInfo, Vec<u8>)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut decoder = png::Decoder::new(BufReader::new(file));
    decoder.set_transformations(png::Transformations::IDENTITY);
    let decode_err = |e: png::DecodingError| Error::Decode {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut reader = decoder.read_info().map_err(decode_err)?;
    let size = reader.output_buffer_size().ok_or_else(|| Error::Decode {
        path: path.to_path_buf(),
        message: "image too large".into(),
    })?;
    let mut buf = vec![0; size];
    let info = reader.next_frame(&mut buf).map_err(decode_err)?;
    buf.truncate(info.buffer_size());
    Ok((info, buf))
}

fn encode(path: &Path, width: usize, height: usize, color: png::ColorType, depth: png::BitDepth, bytes: &[u8]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut encoder = png::Encoder::new(BufWriter::new(file), width as u32, height as u32);
    encoder.set_color(color);
    encoder.set_depth(depth);
    let encode_err = |e: png::EncodingError| match e {
        png::EncodingError::IoError(io) => Error::io(path, io),
        other => Error::Decode {
            path: path.to_path_buf(),
            message: other.to_string(),
        },
    };
    let mut writer = encoder.write_header().map_err(encode_err)?;
    writer.write_image_data(bytes).map_err(encode_err)?;
    writer.finish().map_err(encode_err)
}

/// Reads a 16-bit single-channel depth PNG.
pub fn load_depth_png(path: impl AsRef<Path>) -> Result<DepthMap> {
    let path = path.as_ref();
    let (info, buf) = decode(path)?;
    if info.color_type != png::ColorType::Grayscale {
        return Err(Error::Format {
            path: path.to_path_buf(),
            property: "channel layout (expected single-channel grayscale)",
            found: format!("{:?}", info.color_type),
        });
    }
    if info.bit_depth != png::BitDepth::Sixteen {
        return Err(Error::Format {
            path: path.to_path_buf(),
            property: "bit depth (expected 16)",
            found: format!("{}", info.bit_depth as u8),
        });
    }
    let data = buf
        .chunks_exact(2)
        .map(|b| u16::from_be_bytes([b[0], b[1]]) as f64 / DEPTH_SCALE)
        .collect();
    DepthMap::new(info.height as usize, info.width as usize, data)
}

/// Quantizes a stored depth to raw PNG units. Valid depths never map to 0.
pub fn depth_to_raw(depth: f64) -> u16 {
    if depth == 0.0 {
        return 0;
    }
    (depth * DEPTH_SCALE).round().clamp(1.0, u16::MAX as f64) as u16
}

pub fn save_depth_png(map: &DepthMap, path: impl AsRef<Path>) -> Result<()> {
    let bytes: Vec<u8> = map
        .data()
        .iter()
        .flat_map(|&d| depth_to_raw(d).to_be_bytes())
        .collect();
    encode(
        path.as_ref(),
        map.width(),
        map.height(),
        png::ColorType::Grayscale,
        png::BitDepth::Sixteen,
        &bytes,
    )
}

/// Reads an 8-bit RGB (or RGBA, alpha dropped) PNG into `[0, 1]` planes.
pub fn load_rgb_png(path: impl AsRef<Path>) -> Result<RgbImage> {
    let path = path.as_ref();
    let (info, buf) = decode(path)?;
    if info.bit_depth != png::BitDepth::Eight {
        return Err(Error::Format {
            path: path.to_path_buf(),
            property: "bit depth (expected 8)",
            found: format!("{}", info.bit_depth as u8),
        });
    }
    let stride = match info.color_type {
        png::ColorType::Rgb => 3,
        png::ColorType::Rgba => 4,
        other => {
            return Err(Error::Format {
                path: path.to_path_buf(),
                property: "channel layout (expected RGB)",
                found: format!("{other:?}"),
            })
        }
    };
    let (h, w) = (info.height as usize, info.width as usize);
    let n = h * w;
    let mut data = vec![0.0; 3 * n];
    for (i, px) in buf.chunks_exact(stride).enumerate() {
        for c in 0..3 {
            data[c * n + i] = px[c] as f64 / 255.0;
        }
    }
    RgbImage::new(h, w, data)
}

pub fn save_rgb_png(image: &RgbImage, path: impl AsRef<Path>) -> Result<()> {
    let n = image.height() * image.width();
    let mut bytes = Vec::with_capacity(3 * n);
    for i in 0..n {
        for c in 0..3 {
            let v = image.data()[c * n + i];
            bytes.push((v.clamp(0.0, 1.0) * 255.0).round() as u8);
        }
    }
    encode(
        path.as_ref(),
        image.width(),
        image.height(),
        png::ColorType::Rgb,
        png::BitDepth::Eight,
        &bytes,
    )
}
