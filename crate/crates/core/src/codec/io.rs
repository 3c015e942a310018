use std::fs;
use std::path::Path;

use super::Image;
use crate::error::{Error, Result};

/// Parses binary PPM (`P6`, maxval 255). Grayscale input is not accepted.
pub fn read_ppm(bytes: &[u8]) -> Result<Image> {
    let mut pos = 0;
    let mut fields = [0usize; 3];
    let magic = next_token(bytes, &mut pos)?;
    if magic != b"P6" {
        return Err(Error::ImageFormat("not a binary PPM (P6)".into()));
    }
    for f in fields.iter_mut() {
        let tok = next_token(bytes, &mut pos)?;
        *f = std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::ImageFormat("malformed PPM header".into()))?;
    }
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(Error::ImageFormat(format!(
            "unsupported PPM maxval {maxval}"
        )));
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let len = width * height * 3;
    let raster = bytes
        .get(pos..pos + len)
        .ok_or_else(|| Error::ImageFormat("truncated PPM raster".into()))?;
    Image::new(height, width, 3, raster.to_vec())
}

fn next_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a [u8]> {
    loop {
        match bytes.get(*pos) {
            Some(b'#') => {
                while bytes.get(*pos).is_some_and(|&b| b != b'\n') {
                    *pos += 1;
                }
            }
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(_) => break,
            None => return Err(Error::ImageFormat("truncated PPM header".into())),
        }
    }
    let start = *pos;
    while bytes.get(*pos).is_some_and(|b| !b.is_ascii_whitespace()) {
        *pos += 1;
    }
    Ok(&bytes[start..*pos])
}

pub fn write_ppm(image: &Image) -> Result<Vec<u8>> {
    if image.channels() != 3 {
        return Err(Error::ImageFormat(format!(
            "PPM needs 3 colours, image has {}",
            image.channels()
        )));
    }
    let mut out = format!("P6\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    out.extend_from_slice(image.pixels());
    Ok(out)
}

#[cfg(feature = "png")]
fn read_png(bytes: &[u8]) -> Result<Image> {
    let decoded = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
        .map_err(|e| Error::ImageFormat(e.to_string()))?
        .into_rgb8();
    let (w, h) = decoded.dimensions();
    Image::new(h as usize, w as usize, 3, decoded.into_raw())
}

#[cfg(feature = "png")]
fn write_png(img: &Image) -> Result<Vec<u8>> {
    let color = match img.channels() {
        1 => image::ExtendedColorType::L8,
        3 => image::ExtendedColorType::Rgb8,
        4 => image::ExtendedColorType::Rgba8,
        m => return Err(Error::ImageFormat(format!("cannot write {m}-colour PNG"))),
    };
    let mut out = Vec::new();
    image::ImageEncoder::write_image(
        image::codecs::png::PngEncoder::new(&mut out),
        img.pixels(),
        img.width() as u32,
        img.height() as u32,
        color,
    )
    .map_err(|e| Error::ImageFormat(e.to_string()))?;
    Ok(out)
}

#[cfg(not(feature = "png"))]
fn read_png(_: &[u8]) -> Result<Image> {
    Err(Error::ImageFormat("PNG support not compiled in".into()))
}

#[cfg(not(feature = "png"))]
fn write_png(_: &Image) -> Result<Vec<u8>> {
    Err(Error::ImageFormat("PNG support not compiled in".into()))
}

const PNG_MAGIC: &[u8] = b"\x89PNG";

/// Reads PPM, or PNG when built with the `png` feature.
pub fn load_image(path: &Path) -> Result<Image> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(PNG_MAGIC) {
        read_png(&bytes)
    } else {
        read_ppm(&bytes)
    }
}

/// Writes PNG for a `.png` extension, PPM otherwise.
pub fn save_image(image: &Image, path: &Path) -> Result<()> {
    let is_png = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("png"));
    let bytes = if is_png {
        write_png(image)?
    } else {
        write_ppm(image)?
    };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
