//! Block convolution with overlap-add into a shared accumulator.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::RenderError;

/// Below this many multiply-adds the direct form is used.
const DIRECT_LIMIT: usize = 1 << 14;

/// Linear convolution of two real sequences (`a.len() + b.len() − 1` samples).
pub fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    if a.len().min(b.len()) <= 32 || a.len() * b.len() <= DIRECT_LIMIT {
        return convolve_direct(a, b);
    }
    let size = (a.len() + b.len() - 1).next_power_of_two();
    let conv = FftConvolver::new(size);
    conv.convolve(a, b)
}

fn convolve_direct(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (o, &y) in out[i..].iter_mut().zip(b) {
            *o += x * y;
        }
    }
    out
}

/// `accumulator[offset + n] += (block ∗ rir)[n]` for every `n`.
pub fn block_convolve_add(block: &[f64], rir: &[f64], offset: usize, accumulator: &mut [f64]) -> Result<(), RenderError> {
    if block.is_empty() || rir.is_empty() {
        return Ok(());
    }
    let need = offset + block.len() + rir.len() - 1;
    if accumulator.len() < need {
        return Err(RenderError::AccumulatorTooShort {
            need,
            have: accumulator.len(),
        });
    }
    for (acc, y) in accumulator[offset..].iter_mut().zip(convolve(block, rir)) {
        *acc += y;
    }
    Ok(())
}

/// Fixed-size FFT convolution engine. Shareable across threads.
#[derive(Clone)]
pub struct FftConvolver {
    size: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for FftConvolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftConvolver").field("size", &self.size).finish()
    }
}

impl FftConvolver {
    pub fn new(size: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            size,
            forward: planner.plan_fft_forward(size),
            inverse: planner.plan_fft_inverse(size),
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    fn spectrum(&self, re: &[f64], im: Option<&[f64]>) -> Vec<Complex64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.size];
        for (b, &x) in buf.iter_mut().zip(re) {
            b.re = x;
        }
        if let Some(im) = im {
            for (b, &x) in buf.iter_mut().zip(im) {
                b.im = x;
            }
        }
        self.forward.process(&mut buf);
        buf
    }

    pub fn convolve(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let len = a.len() + b.len() - 1;
        assert!(len <= self.size, "FFT size {} too small for {len} samples", self.size);
        let mut x = self.spectrum(a, None);
        let y = self.spectrum(b, None);
        for (p, q) in x.iter_mut().zip(&y) {
            *p *= q;
        }
        self.inverse.process(&mut x);
        let scale = 1.0 / self.size as f64;
        x[..len].iter().map(|c| c.re * scale).collect()
    }

    /// Transform of a left/right impulse response pair packed as `left + i·right`.
    pub fn pair_spectrum(&self, left: &[f64], right: &[f64]) -> Vec<Complex64> {
        assert!(left.len() <= self.size && right.len() <= self.size);
        self.spectrum(left, Some(right))
    }

    /// Convolves a real block with a packed pair spectrum, adding the left
    /// result to `out_left` and the right one to `out_right`. Both outputs
    /// must hold `block.len() + rir_len − 1` samples.
    pub fn convolve_pair_into(
        &self,
        block: &[f64],
        pair: &[Complex64],
        out_left: &mut [f64],
        out_right: &mut [f64],
    ) {
        let len = out_left.len();
        assert!(len <= self.size && out_right.len() == len);
        let mut x = self.spectrum(block, None);
        for (p, q) in x.iter_mut().zip(pair) {
            *p *= q;
        }
        self.inverse.process(&mut x);
        let scale = 1.0 / self.size as f64;
        for ((l, r), c) in out_left.iter_mut().zip(out_right.iter_mut()).zip(&x[..len]) {
            *l += c.re * scale;
            *r += c.im * scale;
        }
    }
}
