//! Image and scalar-map containers plus the sampling kernels used by warping.
//!
//! Buffers are immutable after construction in the pipeline; every operation
//! here is a pure function. Reductions over pixels always run in row-major
//! order so results are bit-reproducible.

mod io;

pub use io::{read_pfm_image, read_pfm_scalar, read_ppm, write_pfm_image, write_pfm_scalar, write_ppm};

use crate::error::{Error, Result};
use crate::geometry::Pixel;

/// H×W×C buffer of intensities in `[0,1]`, row-major, C ∈ {1,3}.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuffer {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

impl ImageBuffer {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if height < 2 || width < 2 {
            return Err(Error::domain(format!(
                "image must be at least 2x2, got {height}x{width}"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::domain(format!("channels must be 1 or 3, got {channels}")));
        }
        if data.len() != height * width * channels {
            return Err(Error::shape(format!(
                "data length {} does not match {height}x{width}x{channels}",
                data.len()
            )));
        }
        if !data.iter().all(|v| v.is_finite() && (0.0..=1.0).contains(v)) {
            return Err(Error::domain("image values must be finite and in [0,1]"));
        }
        Ok(ImageBuffer { height, width, channels, data })
    }

    /// Fills from a per-pixel-channel closure, clamping to `[0,1]`.
    pub fn from_fn(
        height: usize,
        width: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(height * width * channels);
        for i in 0..height {
            for j in 0..width {
                for c in 0..channels {
                    data.push(f(i, j, c).clamp(0.0, 1.0));
                }
            }
        }
        Self::new(height, width, channels, data)
    }

    pub fn constant(height: usize, width: usize, channels: usize, value: f64) -> Result<Self> {
        Self::new(height, width, channels, vec![value; height * width * channels])
    }

    /// Internal constructor for buffers produced by sampling math, where fp
    /// round-off may overshoot the unit interval by an ulp.
    pub(crate) fn from_computed(height: usize, width: usize, channels: usize, mut data: Vec<f64>) -> Self {
        for v in &mut data {
            *v = v.clamp(0.0, 1.0);
        }
        ImageBuffer { height, width, channels, data }
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

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize, ch: usize) -> f64 {
        self.data[(row * self.width + col) * self.channels + ch]
    }

    pub fn same_shape(&self, other: &ImageBuffer) -> bool {
        self.height == other.height && self.width == other.width && self.channels == other.channels
    }

    /// Channel-mean grayscale copy.
    pub fn to_gray(&self) -> ScalarMap {
        let mut out = ScalarMap::zeros(self.height, self.width);
        let inv = 1.0 / self.channels as f64;
        for i in 0..self.height {
            for j in 0..self.width {
                let mut acc = 0.0;
                for c in 0..self.channels {
                    acc += self.get(i, j, c);
                }
                out.set(i, j, acc * inv);
            }
        }
        out
    }
}

/// H×W map of finite floats: depth, disparity, masks, per-pixel losses.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarMap {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl ScalarMap {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::shape(format!(
                "data length {} does not match {height}x{width}",
                data.len()
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::domain("scalar map values must be finite"));
        }
        Ok(ScalarMap { height, width, data })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        ScalarMap { height, width, data: vec![0.0; height * width] }
    }

    pub fn constant(height: usize, width: usize, value: f64) -> Self {
        ScalarMap { height, width, data: vec![value; height * width] }
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for i in 0..height {
            for j in 0..width {
                data.push(f(i, j));
            }
        }
        ScalarMap { height, width, data }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.width + col] = value;
    }

    pub fn same_shape(&self, other: &ScalarMap) -> bool {
        self.height == other.height && self.width == other.width
    }

    /// Row-major sequential mean.
    pub fn mean(&self) -> f64 {
        let sum: f64 = self.data.iter().sum();
        sum / self.data.len() as f64
    }
}

/// Result of sampling an image at a continuous coordinate.
///
/// `valid == false` implies value and gradients are exactly zero. Only the
/// first `channels` entries of each array are meaningful.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleResult {
    pub value: [f64; 3],
    pub d_value_du: [f64; 3],
    pub d_value_dv: [f64; 3],
    pub valid: bool,
}

impl SampleResult {
    pub fn invalid() -> Self {
        SampleResult {
            value: [0.0; 3],
            d_value_du: [0.0; 3],
            d_value_dv: [0.0; 3],
            valid: false,
        }
    }
}

/// Bilinear sample with the analytic derivative w.r.t. the coordinate.
///
/// Valid iff `p` lies in `[0, w−1] × [0, h−1]`; out-of-bounds coordinates
/// yield an invalid result rather than clamping, so padding never fabricates
/// photometric evidence.
pub fn bilinear_sample(img: &ImageBuffer, p: Pixel) -> SampleResult {
    let (h, w) = (img.height as f64, img.width as f64);
    if !(p.u >= 0.0 && p.u <= w - 1.0 && p.v >= 0.0 && p.v <= h - 1.0) {
        return SampleResult::invalid();
    }
    // Clamp the cell index so the edge coordinate u = w−1 samples the last
    // cell with fractional weight exactly 1.
    let j0 = (p.u.floor() as usize).min(img.width - 2);
    let i0 = (p.v.floor() as usize).min(img.height - 2);
    let fu = p.u - j0 as f64;
    let fv = p.v - i0 as f64;

    let mut out = SampleResult {
        value: [0.0; 3],
        d_value_du: [0.0; 3],
        d_value_dv: [0.0; 3],
        valid: true,
    };
    for c in 0..img.channels {
        let v00 = img.get(i0, j0, c);
        let v01 = img.get(i0, j0 + 1, c);
        let v10 = img.get(i0 + 1, j0, c);
        let v11 = img.get(i0 + 1, j0 + 1, c);
        out.value[c] = (1.0 - fv) * ((1.0 - fu) * v00 + fu * v01) + fv * ((1.0 - fu) * v10 + fu * v11);
        out.d_value_du[c] = (1.0 - fv) * (v01 - v00) + fv * (v11 - v10);
        out.d_value_dv[c] = (1.0 - fu) * (v10 - v00) + fu * (v11 - v01);
    }
    out
}

/// Forward-difference gradients of the channel-mean image.
///
/// `dx(i,j) = gray(i, j+1) − gray(i, j)` with the last column zero; `dy` is the
/// analogous row difference with the last row zero.
pub fn image_gradients(img: &ImageBuffer) -> (ScalarMap, ScalarMap) {
    let gray = img.to_gray();
    scalar_gradients(&gray)
}

/// Forward-difference gradients of a scalar map (same stencil as above).
pub fn scalar_gradients(map: &ScalarMap) -> (ScalarMap, ScalarMap) {
    let (h, w) = (map.height, map.width);
    let mut dx = ScalarMap::zeros(h, w);
    let mut dy = ScalarMap::zeros(h, w);
    for i in 0..h {
        for j in 0..w {
            if j + 1 < w {
                dx.set(i, j, map.get(i, j + 1) - map.get(i, j));
            }
            if i + 1 < h {
                dy.set(i, j, map.get(i + 1, j) - map.get(i, j));
            }
        }
    }
    (dx, dy)
}

fn resize_coords(dst: usize, src: usize) -> Vec<(usize, f64)> {
    // Corner-aligned: dst index 0 maps to src 0, dst last to src last.
    let scale = (src - 1) as f64 / (dst - 1) as f64;
    (0..dst)
        .map(|i| {
            let x = i as f64 * scale;
            let i0 = (x.floor() as usize).min(src - 2);
            (i0, x - i0 as f64)
        })
        .collect()
}

/// Bilinear resize with corner alignment. Identity when the size is unchanged.
pub fn resize_bilinear(img: &ImageBuffer, new_h: usize, new_w: usize) -> Result<ImageBuffer> {
    if new_h < 2 || new_w < 2 {
        return Err(Error::domain(format!("resize target {new_h}x{new_w} is degenerate")));
    }
    if new_h == img.height && new_w == img.width {
        return Ok(img.clone());
    }
    let rows = resize_coords(new_h, img.height);
    let cols = resize_coords(new_w, img.width);
    let c = img.channels;
    let mut data = Vec::with_capacity(new_h * new_w * c);
    for &(i0, fv) in &rows {
        for &(j0, fu) in &cols {
            for ch in 0..c {
                let v00 = img.get(i0, j0, ch);
                let v01 = img.get(i0, j0 + 1, ch);
                let v10 = img.get(i0 + 1, j0, ch);
                let v11 = img.get(i0 + 1, j0 + 1, ch);
                data.push((1.0 - fv) * ((1.0 - fu) * v00 + fu * v01) + fv * ((1.0 - fu) * v10 + fu * v11));
            }
        }
    }
    Ok(ImageBuffer::from_computed(new_h, new_w, c, data))
}

/// Bilinear resize of a scalar map (same corner-aligned scheme).
pub fn resize_scalar(map: &ScalarMap, new_h: usize, new_w: usize) -> Result<ScalarMap> {
    if new_h < 2 || new_w < 2 {
        return Err(Error::domain(format!("resize target {new_h}x{new_w} is degenerate")));
    }
    if new_h == map.height && new_w == map.width {
        return Ok(map.clone());
    }
    let rows = resize_coords(new_h, map.height);
    let cols = resize_coords(new_w, map.width);
    let mut out = ScalarMap::zeros(new_h, new_w);
    for (oi, &(i0, fv)) in rows.iter().enumerate() {
        for (oj, &(j0, fu)) in cols.iter().enumerate() {
            let v00 = map.get(i0, j0);
            let v01 = map.get(i0, j0 + 1);
            let v10 = map.get(i0 + 1, j0);
            let v11 = map.get(i0 + 1, j0 + 1);
            out.set(oi, oj, (1.0 - fv) * ((1.0 - fu) * v00 + fu * v01) + fv * ((1.0 - fu) * v10 + fu * v11));
        }
    }
    Ok(out)
}

/// Adjoint of [`resize_scalar`]: scatters an upstream gradient on the resized
/// grid back to the source grid.
pub fn resize_scalar_adjoint(grad_out: &ScalarMap, src_h: usize, src_w: usize) -> ScalarMap {
    let mut grad_src = ScalarMap::zeros(src_h, src_w);
    if grad_out.height == src_h && grad_out.width == src_w {
        grad_src.data_mut().copy_from_slice(grad_out.data());
        return grad_src;
    }
    let rows = resize_coords(grad_out.height, src_h);
    let cols = resize_coords(grad_out.width, src_w);
    for (oi, &(i0, fv)) in rows.iter().enumerate() {
        for (oj, &(j0, fu)) in cols.iter().enumerate() {
            let g = grad_out.get(oi, oj);
            grad_src.data_mut()[i0 * src_w + j0] += (1.0 - fv) * (1.0 - fu) * g;
            grad_src.data_mut()[i0 * src_w + j0 + 1] += (1.0 - fv) * fu * g;
            grad_src.data_mut()[(i0 + 1) * src_w + j0] += fv * (1.0 - fu) * g;
            grad_src.data_mut()[(i0 + 1) * src_w + j0 + 1] += fv * fu * g;
        }
    }
    grad_src
}
