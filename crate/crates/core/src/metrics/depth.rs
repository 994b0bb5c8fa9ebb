use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::MetricsError;

pub const MIN_VALID_PIXELS: usize = 100;
pub const REFINE_ITERATIONS: usize = 200;
pub const REFINE_STEP: f64 = 1e-3;

/// Row-major f32 depth in meters; on disk as little-endian raw with a JSON
/// sidecar `<file>.json` holding `{"width", "height"}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    pub width: u32,
    pub height: u32,
    pub data: Vec<f32>,
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    width: u32,
    height: u32,
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

impl DepthMap {
    pub fn new(width: u32, height: u32, data: Vec<f32>) -> Result<Self, MetricsError> {
        if data.len() != width as usize * height as usize {
            return Err(MetricsError::Input(format!(
                "depth map {width}x{height} needs {} values, got {}",
                width as usize * height as usize,
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn write_raw(&self, path: impl AsRef<Path>) -> Result<(), MetricsError> {
        let path = path.as_ref();
        let bytes: Vec<u8> = self.data.iter().flat_map(|d| d.to_le_bytes()).collect();
        std::fs::write(path, bytes)?;
        let side = serde_json::to_string(&Sidecar {
            width: self.width,
            height: self.height,
        })
        .expect("sidecar serializes");
        std::fs::write(sidecar_path(path), side)?;
        Ok(())
    }

    pub fn read_raw(path: impl AsRef<Path>) -> Result<Self, MetricsError> {
        let path = path.as_ref();
        let side_path = sidecar_path(path);
        let side: Sidecar = serde_json::from_str(&std::fs::read_to_string(&side_path)?)
            .map_err(|e| MetricsError::Input(format!("{}: {e}", side_path.display())))?;
        let bytes = std::fs::read(path)?;
        if bytes.len() % 4 != 0 {
            return Err(MetricsError::Input(format!("{}: size is not a multiple of 4", path.display())));
        }
        let data = bytes.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
        Self::new(side.width, side.height, data)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthAlignment {
    pub s: f64,
    pub b: f64,
    /// Mean absolute error of `s * mono + b` against ground truth, meters.
    pub residual: f64,
    pub lsq_s: f64,
    pub lsq_b: f64,
    pub lsq_residual: f64,
    pub valid_pixels: usize,
}

fn mean_abs(s: f64, b: f64, m: &[f64], g: &[f64]) -> f64 {
    m.iter().zip(g).map(|(m, g)| (s * m + b - g).abs()).sum::<f64>() / m.len() as f64
}

/// Fits `gt ~ s * mono + b` in the mean-absolute-error sense.
///
/// Least squares gives the starting point; fixed-step subgradient descent
/// on the L1 objective refines it. The best of the least-squares fit, the
/// identity transform and every refinement iterate is returned.
pub fn align_depth(mono: &DepthMap, gt: &DepthMap, mask: Option<&[bool]>) -> Result<DepthAlignment, MetricsError> {
    if (mono.width, mono.height) != (gt.width, gt.height) {
        return Err(MetricsError::Input(format!(
            "depth maps differ in size: {}x{} vs {}x{}",
            mono.width, mono.height, gt.width, gt.height
        )));
    }
    if let Some(m) = mask {
        if m.len() != gt.data.len() {
            return Err(MetricsError::LengthMismatch(m.len(), gt.data.len()));
        }
    }
    let (mut m, mut g) = (Vec::new(), Vec::new());
    for i in 0..gt.data.len() {
        let (mv, gv) = (mono.data[i], gt.data[i]);
        if mask.is_none_or(|k| k[i]) && gv.is_finite() && gv > 0.0 && mv.is_finite() {
            m.push(mv as f64);
            g.push(gv as f64);
        }
    }
    if m.len() < MIN_VALID_PIXELS {
        return Err(MetricsError::Input(format!(
            "only {} valid pixels, need at least {MIN_VALID_PIXELS}",
            m.len()
        )));
    }
    let n = m.len() as f64;
    let mm = m.iter().sum::<f64>() / n;
    let mg = g.iter().sum::<f64>() / n;
    let (mut smg, mut smm) = (0.0, 0.0);
    for (x, y) in m.iter().zip(&g) {
        smg += (x - mm) * (y - mg);
        smm += (x - mm) * (x - mm);
    }
    if smm == 0.0 {
        return Err(MetricsError::Degenerate("monocular depth is constant over the mask".into()));
    }
    let lsq_s = smg / smm;
    let lsq_b = mg - lsq_s * mm;
    let lsq_residual = mean_abs(lsq_s, lsq_b, &m, &g);

    let mut best = (lsq_residual, lsq_s, lsq_b);
    let identity = mean_abs(1.0, 0.0, &m, &g);
    if identity < best.0 {
        best = (identity, 1.0, 0.0);
    }
    let (mut s, mut b) = (lsq_s, lsq_b);
    for _ in 0..REFINE_ITERATIONS {
        let (mut gs, mut gb) = (0.0, 0.0);
        for (x, y) in m.iter().zip(&g) {
            let r = s * x + b - y;
            let sign = if r > 0.0 {
                1.0
            } else if r < 0.0 {
                -1.0
            } else {
                0.0
            };
            gs += sign * x;
            gb += sign;
        }
        s -= REFINE_STEP * gs / n;
        b -= REFINE_STEP * gb / n;
        let res = mean_abs(s, b, &m, &g);
        if res < best.0 {
            best = (res, s, b);
        }
    }
    Ok(DepthAlignment {
        s: best.1,
        b: best.2,
        residual: best.0,
        lsq_s,
        lsq_b,
        lsq_residual,
        valid_pixels: m.len(),
    })
}
