//! Blockwise cosine-transform codec producing feature blocks.
//!
//! Each `e × e` tile becomes one token. Its coefficients are read in
//! zig-zag order, colours interleaved within each frequency, and the first
//! `kept_coefficients` are kept. Selection rank `2i` lands in column `i` and
//! rank `2i+1` in column `i+K`, so complex slot `i` carries the `i`-th
//! coefficient pair. Columns are then standardized to zero mean and the
//! whole block to unit mean power; the statistics travel out-of-band.

mod dct;
mod io;
pub mod synth;
mod zigzag;

pub use dct::DctBasis;
pub use io::{load_image, read_ppm, save_image, write_ppm};
pub use zigzag::zigzag_order;

use num_rational::Ratio;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::transport::FeatureBlock;

const LEVEL_SHIFT: f64 = 128.0;
/// Columns with variance below this are treated as constant.
const DEGENERATE_VARIANCE: f64 = 1e-18;

/// `H₀ × W₀ × m` image of 8-bit samples, interleaved row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    height: usize,
    width: usize,
    channels: usize,
    pixels: Vec<u8>,
}

impl Image {
    pub fn new(height: usize, width: usize, channels: usize, pixels: Vec<u8>) -> Result<Self> {
        if height == 0 || width == 0 || channels == 0 {
            return Err(Error::ImageFormat(format!(
                "empty image {height}x{width}x{channels}"
            )));
        }
        if pixels.len() != height * width * channels {
            return Err(Error::LengthMismatch {
                expected: height * width * channels,
                actual: pixels.len(),
            });
        }
        Ok(Image {
            height,
            width,
            channels,
            pixels,
        })
    }

    pub fn filled(height: usize, width: usize, channels: usize, value: u8) -> Result<Self> {
        Self::new(
            height,
            width,
            channels,
            vec![value; height * width * channels],
        )
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

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    pub fn get(&self, row: usize, col: usize, colour: usize) -> u8 {
        self.pixels[(row * self.width + col) * self.channels + colour]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CodecConfig {
    pub block_edge: usize,
    /// Coefficients kept per tile, counted across all colours; equals `C`.
    pub kept_coefficients: usize,
}

impl CodecConfig {
    pub fn new(block_edge: usize, kept_coefficients: usize) -> Self {
        CodecConfig {
            block_edge,
            kept_coefficients,
        }
    }

    /// Keeps every coefficient of an `m`-colour image.
    pub fn lossless(block_edge: usize, colours: usize) -> Self {
        Self::new(block_edge, block_edge * block_edge * colours)
    }

    pub fn channel_count(&self) -> usize {
        self.kept_coefficients
    }

    pub fn slot_count(&self) -> usize {
        self.kept_coefficients / 2
    }

    pub fn validate(&self, height: usize, width: usize, colours: usize) -> Result<()> {
        let e = self.block_edge;
        if e == 0 || !height.is_multiple_of(e) || !width.is_multiple_of(e) {
            return Err(Error::InvalidConfig(format!(
                "block edge {e} does not divide {height}x{width}"
            )));
        }
        let c = self.kept_coefficients;
        if c == 0 || !c.is_multiple_of(2) {
            return Err(Error::OddChannelCount(c));
        }
        if c > e * e * colours {
            return Err(Error::InvalidConfig(format!(
                "{c} coefficients exceed the {} available per tile",
                e * e * colours
            )));
        }
        Ok(())
    }

    /// Token count `L` for an image of the given size.
    pub fn token_count(&self, height: usize, width: usize) -> usize {
        (height / self.block_edge) * (width / self.block_edge)
    }

    /// `(zig-zag raster index, colour)` read into each column.
    pub fn column_sources(&self, colours: usize) -> Vec<(usize, usize)> {
        let zz = zigzag_order(self.block_edge);
        let k = self.slot_count();
        let mut sources = vec![(0, 0); self.kept_coefficients];
        for rank in 0..self.kept_coefficients {
            let column = if rank % 2 == 0 {
                rank / 2
            } else {
                rank / 2 + k
            };
            sources[column] = (zz[rank / colours], rank % colours);
        }
        sources
    }
}

/// Exact `L·C / (H₀·W₀·m)`.
pub fn compression_ratio(
    config: &CodecConfig,
    height: usize,
    width: usize,
    colours: usize,
) -> Result<Ratio<u64>> {
    config.validate(height, width, colours)?;
    let symbols = (config.token_count(height, width) * config.kept_coefficients) as u64;
    Ok(Ratio::new(symbols, (height * width * colours) as u64))
}

/// Per-column affine map: `raw = offset + scale · standardized`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Standardization {
    pub offsets: Vec<f64>,
    pub scales: Vec<f64>,
}

impl Standardization {
    pub fn identity(channels: usize) -> Self {
        Standardization {
            offsets: vec![0.0; channels],
            scales: vec![1.0; channels],
        }
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }
}

/// Out-of-band metadata the decoder needs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CodecSide {
    pub height: usize,
    pub width: usize,
    pub colours: usize,
    pub stats: Standardization,
    /// Raw coefficient variance per complex slot, both halves summed.
    pub slot_energy: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Encoded {
    pub block: FeatureBlock,
    /// Complex slots, most important first.
    pub importance: Vec<usize>,
    pub side: CodecSide,
}

/// Per-slot energy `Σ_l F[l][k]² + F[l][k+K]²` / L of a raw block.
pub fn slot_energy(block: &FeatureBlock) -> Vec<f64> {
    let k = block.slot_count();
    let mut energy = vec![0.0; k];
    for row in block.rows() {
        for (slot, e) in energy.iter_mut().enumerate() {
            *e += row[slot] * row[slot] + row[slot + k] * row[slot + k];
        }
    }
    let l = block.token_count().max(1) as f64;
    energy.iter_mut().for_each(|e| *e /= l);
    energy
}

/// Slots by descending energy; equal energies keep slot order.
pub fn importance_order(energy: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..energy.len()).collect();
    order.sort_by(|&a, &b| energy[b].total_cmp(&energy[a]).then(a.cmp(&b)));
    order
}

/// Raw passthrough: the block is the payload and its own energy profile
/// defines importance.
pub fn passthrough(block: FeatureBlock) -> (FeatureBlock, Vec<usize>) {
    let order = importance_order(&slot_energy(&block));
    (block, order)
}

fn tile_coefficients(
    image: &Image,
    basis: &DctBasis,
    tile_row: usize,
    tile_col: usize,
    colour: usize,
) -> Vec<f64> {
    let e = basis.size();
    let mut tile = Vec::with_capacity(e * e);
    for r in 0..e {
        for c in 0..e {
            tile.push(
                f64::from(image.get(tile_row * e + r, tile_col * e + c, colour)) - LEVEL_SHIFT,
            );
        }
    }
    basis.forward(&tile)
}

pub fn encode(image: &Image, config: &CodecConfig) -> Result<Encoded> {
    let (h, w, m) = image.dims();
    config.validate(h, w, m)?;
    let e = config.block_edge;
    let basis = DctBasis::new(e);
    let sources = config.column_sources(m);
    let cols = config.kept_coefficients;
    let (tiles_down, tiles_across) = (h / e, w / e);
    let tokens = tiles_down * tiles_across;

    let mut raw = Vec::with_capacity(tokens * cols);
    for tr in 0..tiles_down {
        for tc in 0..tiles_across {
            let per_colour: Vec<Vec<f64>> = (0..m)
                .map(|colour| tile_coefficients(image, &basis, tr, tc, colour))
                .collect();
            raw.extend(sources.iter().map(|&(idx, colour)| per_colour[colour][idx]));
        }
    }

    let n = tokens as f64;
    let mut offsets = vec![0.0; cols];
    let mut variances = vec![0.0; cols];
    for (j, (mu, var)) in offsets.iter_mut().zip(variances.iter_mut()).enumerate() {
        *mu = (0..tokens).map(|l| raw[l * cols + j]).sum::<f64>() / n;
        *var = (0..tokens)
            .map(|l| (raw[l * cols + j] - *mu).powi(2))
            .sum::<f64>()
            / n;
    }

    let mut scales = vec![0.0; cols];
    let mut values = vec![0.0; tokens * cols];
    for j in 0..cols {
        if variances[j] > DEGENERATE_VARIANCE {
            let s = variances[j].sqrt();
            scales[j] = s;
            for l in 0..tokens {
                values[l * cols + j] = (raw[l * cols + j] - offsets[j]) / s;
            }
        }
    }
    // every live column now has unit power; rescale so the block does too
    let power = values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64;
    if power > 0.0 {
        let gain = power.sqrt().recip();
        values.iter_mut().for_each(|v| *v *= gain);
        scales.iter_mut().for_each(|s| *s /= gain);
    }

    let k = config.slot_count();
    let energy: Vec<f64> = (0..k).map(|i| variances[i] + variances[i + k]).collect();
    Ok(Encoded {
        block: FeatureBlock::new(tokens, cols, values)?,
        importance: importance_order(&energy),
        side: CodecSide {
            height: h,
            width: w,
            colours: m,
            stats: Standardization { offsets, scales },
            slot_energy: energy,
        },
    })
}

pub fn decode(block: &FeatureBlock, config: &CodecConfig, side: &CodecSide) -> Result<Image> {
    let (h, w, m) = (side.height, side.width, side.colours);
    config.validate(h, w, m)?;
    let e = config.block_edge;
    let (tiles_down, tiles_across) = (h / e, w / e);
    let expected = (tiles_down * tiles_across, config.kept_coefficients);
    if block.shape() != expected {
        return Err(Error::ShapeMismatch {
            expected,
            actual: block.shape(),
        });
    }
    if side.stats.len() != expected.1 {
        return Err(Error::LengthMismatch {
            expected: expected.1,
            actual: side.stats.len(),
        });
    }
    let basis = DctBasis::new(e);
    let sources = config.column_sources(m);
    let Standardization { offsets, scales } = &side.stats;
    let mut pixels = vec![0u8; h * w * m];
    for tr in 0..tiles_down {
        for tc in 0..tiles_across {
            let row = block.row(tr * tiles_across + tc);
            let mut coefficients = vec![vec![0.0; e * e]; m];
            for (j, &(idx, colour)) in sources.iter().enumerate() {
                coefficients[colour][idx] = offsets[j] + scales[j] * row[j];
            }
            for (colour, coeffs) in coefficients.iter().enumerate() {
                let tile = basis.inverse(coeffs);
                for r in 0..e {
                    for c in 0..e {
                        let v = (tile[r * e + c] + LEVEL_SHIFT).round().clamp(0.0, 255.0);
                        pixels[((tr * e + r) * w + tc * e + c) * m + colour] = v as u8;
                    }
                }
            }
        }
    }
    Image::new(h, w, m, pixels)
}
