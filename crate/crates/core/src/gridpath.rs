//! Discrete multiplier operators on uniformly sampled grids.
//!
//! A [`SampledGrid`] holds samples over `[-L, L)^d` with `N` points per
//! coordinate. The continuous transform is replaced by the DFT of the
//! periodized samples; grid frequencies are `k / (2L)` for
//! `k = -N/2 .. N/2 - 1`. Kernel content decays like `1/x^2`, so every
//! result carries a periodization error of order `1/L` per coordinate.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::blocksum::BlockSum;
use crate::cross::{pairwise_sum, CrossSpec};
use crate::error::{check_dim, Error, Result};
use crate::kernels::{block_contains, block_multiplier_unchecked, block_of, MultiIndex};

/// Largest tolerated imaginary part after an inverse transform, relative to
/// `max(1, max |g|)`.
pub const IMAGINARY_RESIDUE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SampledGrid {
    d: usize,
    half_width: f64,
    n: usize,
    values: Vec<f64>,
}

impl SampledGrid {
    pub fn new(d: usize, half_width: f64, n: usize, values: Vec<f64>) -> Result<Self> {
        if d == 0 {
            return Err(Error::Validation("grid dimension must be >= 1".into()));
        }
        if !n.is_power_of_two() || n < 2 {
            return Err(Error::Validation(format!(
                "points per dimension must be a power of two >= 2, got {n}"
            )));
        }
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::Validation(format!(
                "box half-width must be finite and > 0, got {half_width}"
            )));
        }
        let len = n
            .checked_pow(d as u32)
            .ok_or_else(|| Error::Validation("grid too large".into()))?;
        if values.len() != len {
            return Err(Error::Validation(format!(
                "expected {len} values, got {}",
                values.len()
            )));
        }
        Ok(Self {
            d,
            half_width,
            n,
            values,
        })
    }

    pub fn zeros(d: usize, half_width: f64, n: usize) -> Result<Self> {
        let len = n
            .checked_pow(d as u32)
            .ok_or_else(|| Error::Validation("grid too large".into()))?;
        Self::new(d, half_width, n, vec![0.0; len])
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn points_per_dim(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    /// Row-major samples, last coordinate fastest.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Position of sample `i` along any axis.
    pub fn coordinate(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.spacing()
    }

    /// Frequency of DFT bin `k` along any axis.
    pub fn frequency(&self, k: usize) -> f64 {
        let k = if k < self.n / 2 {
            k as f64
        } else {
            k as f64 - self.n as f64
        };
        k / (2.0 * self.half_width)
    }

    /// Largest `|lambda|` represented on the grid, `N / (4L)`.
    pub fn nyquist(&self) -> f64 {
        self.n as f64 / (4.0 * self.half_width)
    }

    fn unravel(&self, mut flat: usize, out: &mut [usize]) {
        for j in (0..self.d).rev() {
            out[j] = flat % self.n;
            flat /= self.n;
        }
    }

    fn with_values(&self, values: Vec<f64>) -> Self {
        Self {
            d: self.d,
            half_width: self.half_width,
            n: self.n,
            values,
        }
    }

    pub fn linear_combination(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(self.with_values(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        ))
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.d != other.d || self.n != other.n || self.half_width != other.half_width {
            return Err(Error::Validation("grids have different shapes".into()));
        }
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Riemann-sum `L_p` norm over the box; `p = inf` gives the max.
    pub fn lp_norm(&self, p: f64) -> f64 {
        if p.is_infinite() {
            return self.max_abs();
        }
        let cell = self.spacing().powi(self.d as i32);
        let parts: Vec<f64> = self
            .values
            .par_chunks(4096)
            .map(|c| c.iter().map(|v| v.abs().powf(p)).sum())
            .collect();
        (cell * pairwise_sum(&parts)).powf(1.0 / p)
    }

    pub fn l2_norm(&self) -> f64 {
        let cell = self.spacing().powi(self.d as i32);
        let parts: Vec<f64> = self
            .values
            .par_chunks(4096)
            .map(|c| c.iter().map(|v| v * v).sum())
            .collect();
        (cell * pairwise_sum(&parts)).sqrt()
    }

    /// Multiplies the spectrum by `m(lambda)` and transforms back.
    ///
    /// `m` must be even in every coordinate for the result to be real; the
    /// imaginary residue is checked before it is discarded.
    pub fn apply_multiplier<M>(&self, m: M) -> Result<SampledGrid>
    where
        M: Fn(&[f64]) -> f64 + Sync,
    {
        let mut buf: Vec<Complex64> = self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(self.n);
        let inv = planner.plan_fft_inverse(self.n);
        transform_axes(&mut buf, self.d, self.n, &fwd);

        let freqs: Vec<f64> = (0..self.n).map(|k| self.frequency(k)).collect();
        let d = self.d;
        let n = self.n;
        buf.par_chunks_mut(n).enumerate().for_each(|(row, chunk)| {
            let mut idx = vec![0usize; d];
            let mut lambda = vec![0.0; d];
            self.unravel(row * n, &mut idx);
            for j in 0..d - 1 {
                lambda[j] = freqs[idx[j]];
            }
            for (k, v) in chunk.iter_mut().enumerate() {
                lambda[d - 1] = freqs[k];
                *v *= m(&lambda);
            }
        });

        transform_axes(&mut buf, self.d, self.n, &inv);
        let scale = 1.0 / self.values.len() as f64;
        let residue = buf.iter().fold(0.0f64, |r, c| r.max(c.im.abs())) * scale;
        let threshold = IMAGINARY_RESIDUE_TOL * self.max_abs().max(1.0);
        if residue > threshold {
            return Err(Error::ImaginaryResidue { residue, threshold });
        }
        Ok(self.with_values(buf.iter().map(|c| c.re * scale).collect()))
    }
}

/// In-place transform along every axis of a row-major `n^d` tensor.
fn transform_axes(buf: &mut [Complex64], d: usize, n: usize, fft: &Arc<dyn Fft<f64>>) {
    // last axis: contiguous lines
    buf.par_chunks_mut(n).for_each(|line| fft.process(line));
    for axis in (0..d - 1).rev() {
        let stride = n.pow((d - 1 - axis) as u32);
        let block = stride * n;
        buf.par_chunks_mut(block).for_each(|chunk| {
            let mut line = vec![Complex64::new(0.0, 0.0); n];
            for offset in 0..stride {
                for (i, v) in line.iter_mut().enumerate() {
                    *v = chunk[offset + i * stride];
                }
                fft.process(&mut line);
                for (i, v) in line.iter().enumerate() {
                    chunk[offset + i * stride] = *v;
                }
            }
        });
    }
}

/// Periods of the coarsest scale covered by the default box.
pub const DEFAULT_PERIODS: f64 = 64.0;

/// Caveat attached to every grid report.
pub const PERIODIZATION_NOTE: &str =
    "grid results use the periodized box [-L, L)^d; kernel tails decay like 1/x^2, so errors of order 1/L per coordinate apply";

/// `64 * 2^{-s_min}`, with `s_min` the smallest scale present in `f`.
pub fn default_half_width(f: &BlockSum) -> f64 {
    let coarsest = f.terms().flat_map(|(s, _)| s.as_slice().to_vec()).min().unwrap_or(0);
    DEFAULT_PERIODS * (-f64::from(coarsest)).exp2()
}

/// Smallest power of two `N` with `2L / N <= 1 / (2 * 2^{max s})`.
pub fn required_points(f: &BlockSum, half_width: f64) -> usize {
    let band = (f.max_scales().into_iter().max().unwrap_or(0) as f64).exp2();
    ((4.0 * half_width * band).ceil() as usize).next_power_of_two().max(2)
}

/// Samples `f` on `[-L, L)^d` with `N` points per coordinate.
///
/// The spacing must satisfy `h <= 1 / (2 B)` with `B = 2^{max s_j}`.
pub fn sample(f: &BlockSum, half_width: f64, n: usize) -> Result<SampledGrid> {
    let mut grid = SampledGrid::zeros(f.dim(), half_width, n)?;
    if f.is_empty() {
        return Ok(grid);
    }
    let band = (f.max_scales().into_iter().max().unwrap_or(0) as f64).exp2();
    if grid.spacing() > 1.0 / (2.0 * band) {
        let required = (4.0 * half_width * band).ceil() as usize;
        return Err(Error::Nyquist {
            band,
            required_n: required.next_power_of_two(),
            n,
        });
    }
    let d = f.dim();
    let coords: Vec<f64> = (0..n).map(|i| grid.coordinate(i)).collect();
    grid.values.par_chunks_mut(n).enumerate().for_each(|(row, chunk)| {
        let mut x = vec![0.0; d];
        let mut rem = row;
        for j in (0..d - 1).rev() {
            x[j] = coords[rem % n];
            rem /= n;
        }
        for (k, v) in chunk.iter_mut().enumerate() {
            x[d - 1] = coords[k];
            *v = f.eval_unchecked(&x);
        }
    });
    Ok(grid)
}

/// Sharp block `delta*_s`: indicator of `Q*_{2^s}` on the spectrum.
pub fn delta_star(g: &SampledGrid, s: &MultiIndex) -> Result<SampledGrid> {
    check_dim(g.dim(), s.dim())?;
    g.apply_multiplier(|l| {
        if block_contains(s, l).unwrap_or(false) {
            1.0
        } else {
            0.0
        }
    })
}

/// Smooth block `A*_s(g)`: multiplier `prod_j (k_{s_j} - k_{s_j - 1})`.
pub fn vp_block(g: &SampledGrid, s: &MultiIndex) -> Result<SampledGrid> {
    check_dim(g.dim(), s.dim())?;
    let sl = s.as_slice().to_vec();
    g.apply_multiplier(move |l| block_multiplier_unchecked(&sl, l))
}

/// Cross truncation `S_{Q_n^gamma}` in one pass with the union indicator.
pub fn project_sharp(g: &SampledGrid, spec: &CrossSpec) -> Result<SampledGrid> {
    check_dim(g.dim(), spec.dim())?;
    g.apply_multiplier(|l| {
        let s = MultiIndex::from(l.iter().map(|&v| block_of(v)).collect::<Vec<_>>());
        if spec.contains(&s) {
            1.0
        } else {
            0.0
        }
    })
}

/// Every block meeting the grid's frequency range.
pub fn blocks_covering(g: &SampledGrid) -> Vec<MultiIndex> {
    let top = block_of(g.nyquist());
    let mut out = Vec::new();
    let mut cur = vec![0u32; g.dim()];
    loop {
        out.push(MultiIndex::from(cur.clone()));
        let mut j = g.dim();
        loop {
            if j == 0 {
                return out;
            }
            j -= 1;
            if cur[j] < top {
                cur[j] += 1;
                for v in cur.iter_mut().skip(j + 1) {
                    *v = 0;
                }
                break;
            }
        }
    }
}

/// Pointwise `sum_s |delta*_s g|^2` over all blocks on the grid.
fn square_function_sq(g: &SampledGrid) -> Result<Vec<f64>> {
    let mut acc = vec![0.0; g.values.len()];
    for s in blocks_covering(g) {
        let b = delta_star(g, &s)?;
        for (a, v) in acc.iter_mut().zip(b.values()) {
            *a += v * v;
        }
    }
    Ok(acc)
}

/// `||(sum_s |delta*_s g|^2)^{1/2}||_2 / ||g||_2`; 1 for the zero grid.
pub fn littlewood_paley_check(g: &SampledGrid) -> Result<f64> {
    littlewood_paley_ratio(g, 2.0)
}

/// The same ratio in `L_p`. Only `p = 2` is exact (Plancherel); other
/// exponents are a report-only diagnostic.
pub fn littlewood_paley_ratio(g: &SampledGrid, p: f64) -> Result<f64> {
    let denom = g.lp_norm(p);
    if denom == 0.0 {
        return Ok(1.0);
    }
    let sq = square_function_sq(g)?;
    let square = g.with_values(sq.into_iter().map(f64::sqrt).collect());
    Ok(square.lp_norm(p) / denom)
}

/// `||delta*_s g||_p / ||A*_s(g)||_p` on the grid (report-only).
pub fn sharp_to_smooth_ratio(g: &SampledGrid, s: &MultiIndex, p: f64) -> Result<f64> {
    let a = delta_star(g, s)?.lp_norm(p);
    let b = vp_block(g, s)?.lp_norm(p);
    Ok(if b == 0.0 { f64::NAN } else { a / b })
}

/// Size of `g - S_{Q_n^gamma} g` for a sampled block sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharpResidual {
    pub residual_sup: f64,
    pub residual_l2: f64,
    pub signal_sup: f64,
    pub signal_l2: f64,
    pub note: String,
}

pub fn sharp_residual(g: &SampledGrid, spec: &CrossSpec) -> Result<SharpResidual> {
    let p = project_sharp(g, spec)?;
    let r = g.linear_combination(1.0, &p, -1.0)?;
    Ok(SharpResidual {
        residual_sup: r.max_abs(),
        residual_l2: r.l2_norm(),
        signal_sup: g.max_abs(),
        signal_l2: g.l2_norm(),
        note: PERIODIZATION_NOTE.into(),
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct GridHeader {
    d: usize,
    #[serde(rename = "L")]
    half_width: f64,
    #[serde(rename = "N")]
    n: usize,
    payload: String,
}

impl SampledGrid {
    /// Writes the JSON header to `header` and the little-endian `f64`
    /// payload to `payload` (stored in the header relative to its directory
    /// when possible).
    pub fn write(&self, header: &Path, payload: &Path) -> Result<()> {
        let mut bytes = Vec::with_capacity(self.values.len() * 8);
        for v in &self.values {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        std::fs::write(payload, bytes)?;
        let dir = header.parent().unwrap_or(Path::new(""));
        let rel = payload.strip_prefix(dir).unwrap_or(payload);
        let doc = GridHeader {
            d: self.d,
            half_width: self.half_width,
            n: self.n,
            payload: rel.to_string_lossy().into(),
        };
        std::fs::write(header, serde_json::to_string_pretty(&doc)? + "\n")?;
        Ok(())
    }

    pub fn read(header: &Path) -> Result<Self> {
        let doc: GridHeader = serde_json::from_str(&std::fs::read_to_string(header)?)?;
        let mut payload = PathBuf::from(&doc.payload);
        if payload.is_relative() {
            payload = header.parent().unwrap_or(Path::new("")).join(payload);
        }
        let bytes = std::fs::read(&payload)?;
        if bytes.len() % 8 != 0 {
            return Err(Error::Format(format!(
                "payload length {} is not a multiple of 8",
                bytes.len()
            )));
        }
        let values = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        Self::new(doc.d, doc.half_width, doc.n, values)
    }
}
