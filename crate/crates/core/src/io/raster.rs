use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{DepthImage, Mask, ProbMap};

/// Single-channel little-endian PFM. Rows are stored bottom to top; missing
/// depth is written as 0.
pub fn write_pfm_depth(depth: &DepthImage, path: &Path) -> Result<()> {
    let data: Vec<f32> = (0..depth.len())
        .map(|j| depth.at(j).map_or(0.0, |d| d as f32))
        .collect();
    write_pfm(depth.width(), depth.height(), &data, path)
}

pub fn read_pfm_depth(path: &Path) -> Result<DepthImage> {
    let (w, h, data) = read_pfm(path)?;
    DepthImage::from_vec(w, h, data.into_iter().map(f64::from).collect())
}

pub fn write_pfm_prob(map: &ProbMap, path: &Path) -> Result<()> {
    let data: Vec<f32> = map.as_slice().iter().map(|p| *p as f32).collect();
    write_pfm(map.width(), map.height(), &data, path)
}

pub fn read_pfm_prob(path: &Path) -> Result<ProbMap> {
    let (w, h, data) = read_pfm(path)?;
    ProbMap::from_vec(w, h, data.into_iter().map(f64::from).collect()).map_err(|e| Error::parse(path, 0, e.to_string()))
}

fn write_pfm(width: usize, height: usize, data: &[f32], path: &Path) -> Result<()> {
    let mut out = Vec::with_capacity(32 + data.len() * 4);
    write!(out, "Pf\n{width} {height}\n-1.0\n").expect("in-memory write");
    for v in (0..height).rev() {
        for x in &data[v * width..(v + 1) * width] {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn read_pfm(path: &Path) -> Result<(usize, usize, Vec<f32>)> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let mut header = Vec::new();
    for line_no in 1..=3 {
        let mut line = String::new();
        r.read_line(&mut line).map_err(|e| Error::io(path, e))?;
        if line.is_empty() {
            return Err(Error::parse(path, line_no, "truncated PFM header"));
        }
        header.push(line.trim().to_string());
    }
    if header[0] != "Pf" {
        return Err(Error::parse(
            path,
            1,
            format!("expected single-channel `Pf`, found `{}`", header[0]),
        ));
    }
    let dims: Vec<usize> = header[1]
        .split_whitespace()
        .map(|s| s.parse())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::parse(path, 2, format!("bad dimensions `{}`", header[1])))?;
    let [width, height] = dims[..] else {
        return Err(Error::parse(path, 2, "expected `width height`"));
    };
    let scale: f32 = header[2]
        .parse()
        .map_err(|_| Error::parse(path, 3, format!("bad scale `{}`", header[2])))?;
    let little = scale < 0.0;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(|e| Error::io(path, e))?;
    if bytes.len() != width * height * 4 {
        return Err(Error::parse(
            path,
            4,
            format!(
                "expected {} bytes of samples, found {}",
                width * height * 4,
                bytes.len()
            ),
        ));
    }
    let mut data = vec![0f32; width * height];
    for (i, chunk) in bytes.chunks_exact(4).enumerate() {
        let b = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let x = if little {
            f32::from_le_bytes(b)
        } else {
            f32::from_be_bytes(b)
        };
        let (u, row) = (i % width, i / width);
        data[(height - 1 - row) * width + u] = x;
    }
    Ok((width, height, data))
}

/// 16-bit grayscale PNG in millimeters, 0 = missing. Depths are rounded to
/// the nearest millimeter and saturate at 65.535 m.
pub fn write_png16_depth(depth: &DepthImage, path: &Path) -> Result<()> {
    let mut buf = Vec::with_capacity(depth.len() * 2);
    for j in 0..depth.len() {
        let mm = depth
            .at(j)
            .map_or(0, |d| (d * 1000.0).round().clamp(1.0, 65535.0) as u16);
        buf.extend_from_slice(&mm.to_be_bytes());
    }
    write_png(path, depth.width(), depth.height(), png::BitDepth::Sixteen, &buf)
}

pub fn read_png16_depth(path: &Path) -> Result<DepthImage> {
    let (w, h, depth, bytes) = read_png(path)?;
    if depth != png::BitDepth::Sixteen {
        return Err(Error::parse(path, 0, "expected a 16-bit grayscale PNG"));
    }
    let data = bytes
        .chunks_exact(2)
        .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 / 1000.0)
        .collect();
    DepthImage::from_vec(w, h, data)
}

/// 8-bit grayscale PNG, nonzero = set.
pub fn write_mask_png(mask: &Mask, path: &Path) -> Result<()> {
    let buf: Vec<u8> = mask.as_slice().iter().map(|b| if *b { 255 } else { 0 }).collect();
    write_png(path, mask.width(), mask.height(), png::BitDepth::Eight, &buf)
}

pub fn read_mask_png(path: &Path) -> Result<Mask> {
    let (w, h, depth, bytes) = read_png(path)?;
    if depth != png::BitDepth::Eight {
        return Err(Error::parse(path, 0, "expected an 8-bit grayscale PNG mask"));
    }
    Mask::from_vec(w, h, bytes.iter().map(|b| *b != 0).collect())
}

fn write_png(path: &Path, width: usize, height: usize, depth: png::BitDepth, data: &[u8]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut enc = png::Encoder::new(std::io::BufWriter::new(file), width as u32, height as u32);
    enc.set_color(png::ColorType::Grayscale);
    enc.set_depth(depth);
    let to_err = |e: png::EncodingError| Error::io(path, std::io::Error::other(e));
    let mut writer = enc.write_header().map_err(to_err)?;
    writer.write_image_data(data).map_err(to_err)?;
    writer.finish().map_err(to_err)
}

fn read_png(path: &Path) -> Result<(usize, usize, png::BitDepth, Vec<u8>)> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let dec = png::Decoder::new(BufReader::new(file));
    let to_err = |e: png::DecodingError| Error::parse(path, 0, e.to_string());
    let mut reader = dec.read_info().map_err(to_err)?;
    let mut buf = vec![0; reader.output_buffer_size()];
    let info = reader.next_frame(&mut buf).map_err(to_err)?;
    if info.color_type != png::ColorType::Grayscale {
        return Err(Error::parse(path, 0, "expected a grayscale PNG"));
    }
    buf.truncate(info.buffer_size());
    Ok((info.width as usize, info.height as usize, info.bit_depth, buf))
}
