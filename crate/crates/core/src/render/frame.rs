use std::io::Cursor;
use std::path::Path;

use image::{ImageFormat, RgbImage};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("frame size mismatch: {0}x{1} vs {2}x{3}")]
    SizeMismatch(u32, u32, u32, u32),
    #[error("image codec: {0}")]
    Image(#[from] image::ImageError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Row-major RGB and depth buffers. Depth is camera-space Z in meters, 0 where
/// nothing was hit.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub width: u32,
    pub height: u32,
    pub rgb: Vec<u8>,
    pub depth: Vec<f32>,
}

impl Frame {
    pub fn filled(width: u32, height: u32, background: [u8; 3]) -> Self {
        let n = width as usize * height as usize;
        Self {
            width,
            height,
            rgb: background.iter().copied().cycle().take(3 * n).collect(),
            depth: vec![0.0; n],
        }
    }

    pub fn pixel(&self, i: u32, j: u32) -> [u8; 3] {
        let k = 3 * (j as usize * self.width as usize + i as usize);
        [self.rgb[k], self.rgb[k + 1], self.rgb[k + 2]]
    }

    pub fn depth_at(&self, i: u32, j: u32) -> f32 {
        self.depth[j as usize * self.width as usize + i as usize]
    }

    pub fn to_png(&self) -> Result<Vec<u8>, RenderError> {
        let img = RgbImage::from_raw(self.width, self.height, self.rgb.clone()).expect("rgb buffer sized by construction");
        let mut out = Cursor::new(Vec::new());
        img.write_to(&mut out, ImageFormat::Png)?;
        Ok(out.into_inner())
    }

    /// Decodes a PNG into an RGB frame with empty depth.
    pub fn from_png(bytes: &[u8]) -> Result<Self, RenderError> {
        let img = image::load_from_memory_with_format(bytes, ImageFormat::Png)?.to_rgb8();
        let (width, height) = img.dimensions();
        Ok(Self {
            width,
            height,
            rgb: img.into_raw(),
            depth: vec![0.0; width as usize * height as usize],
        })
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<(), RenderError> {
        std::fs::write(path, self.to_png()?)?;
        Ok(())
    }

    /// Depth as little-endian f32, row-major.
    pub fn depth_bytes(&self) -> Vec<u8> {
        self.depth.iter().flat_map(|d| d.to_le_bytes()).collect()
    }
}

/// PSNR in dB over all RGB channels; identical images give +infinity.
pub fn psnr(a: &Frame, b: &Frame) -> Result<f64, RenderError> {
    if (a.width, a.height) != (b.width, b.height) {
        return Err(RenderError::SizeMismatch(a.width, a.height, b.width, b.height));
    }
    let sse: u64 = a
        .rgb
        .iter()
        .zip(&b.rgb)
        .map(|(&x, &y)| {
            let d = x as i64 - y as i64;
            (d * d) as u64
        })
        .sum();
    if sse == 0 {
        return Ok(f64::INFINITY);
    }
    let mse = sse as f64 / a.rgb.len() as f64;
    Ok(10.0 * (255.0f64 * 255.0 / mse).log10())
}
