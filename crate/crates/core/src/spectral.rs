//! Trigonometric (Fourier) helpers on uniform periodic samples.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

fn forward(samples: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

fn inverse_real(mut coeffs: Vec<Complex64>) -> Vec<f64> {
    let n = coeffs.len();
    FftPlanner::new().plan_fft_inverse(n).process(&mut coeffs);
    coeffs.iter().map(|c| c.re / n as f64).collect()
}

/// Signed wavenumber index of FFT bin `k` for length `n`.
fn signed_mode(k: usize, n: usize) -> i64 {
    if k <= n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// `order`-th derivative of periodic samples on a domain of length `period`.
///
/// The Nyquist mode is dropped for odd orders so real data stays real.
pub fn derivative(samples: &[f64], order: u32, period: f64) -> Vec<f64> {
    let n = samples.len();
    if n == 0 {
        return Vec::new();
    }
    let mut coeffs = forward(samples);
    let scale = 2.0 * std::f64::consts::PI / period;
    for (k, c) in coeffs.iter_mut().enumerate() {
        let m = signed_mode(k, n);
        if n.is_multiple_of(2) && k == n / 2 && order % 2 == 1 {
            *c = Complex64::new(0.0, 0.0);
            continue;
        }
        let ik = Complex64::new(0.0, m as f64 * scale);
        *c *= ik.powu(order);
    }
    inverse_real(coeffs)
}

/// Real Fourier coefficients `(mean, cos_k, sin_k)` for k = 1..n/2-1, with
/// samples taken at `x_j = -period/2 + j*period/n`.
pub fn real_coefficients(samples: &[f64], period: f64) -> (f64, Vec<f64>, Vec<f64>) {
    let n = samples.len();
    let coeffs = forward(samples);
    let mean = coeffs[0].re / n as f64;
    let x0 = -0.5 * period;
    let scale = 2.0 * std::f64::consts::PI / period;
    let mut cos = Vec::with_capacity(n / 2);
    let mut sin = Vec::with_capacity(n / 2);
    for (k, c) in coeffs.iter().enumerate().take(n / 2).skip(1) {
        // undo the phase from the nonzero starting node
        let phase = Complex64::from_polar(1.0, k as f64 * scale * x0);
        let c = c * phase;
        cos.push(2.0 * c.re / n as f64);
        sin.push(-2.0 * c.im / n as f64);
    }
    (mean, cos, sin)
}

/// Trigonometric interpolation of periodic samples onto `m` uniform nodes of
/// the same period (zero-padding or truncation in Fourier space).
pub fn resample(samples: &[f64], m: usize) -> Vec<f64> {
    let n = samples.len();
    if n == m {
        return samples.to_vec();
    }
    let coeffs = forward(samples);
    let mut out = vec![Complex64::new(0.0, 0.0); m];
    let keep = n.min(m) / 2;
    for k in 0..keep {
        out[k] = coeffs[k];
        if k > 0 {
            out[m - k] = coeffs[n - k];
        }
    }
    // split or merge the Nyquist bin so the interpolant stays real
    if n.is_multiple_of(2) && n < m {
        let half = coeffs[n / 2] * 0.5;
        out[n / 2] = half;
        out[m - n / 2] = half;
    } else if m.is_multiple_of(2) && m < n {
        out[m / 2] = Complex64::new((coeffs[m / 2] + coeffs[n - m / 2]).re, 0.0);
    }
    let ratio = m as f64 / n as f64;
    for c in out.iter_mut() {
        *c *= ratio;
    }
    inverse_real(out)
}
