//! One-sided amplitude spectra of sampled series.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::scenario::FftWindow;

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub freq: Vec<f64>,
    /// `|X_k| / N` of the mean-free, windowed series.
    pub magnitude: Vec<f64>,
    /// Samples used after truncation.
    pub samples: usize,
    /// Time of the first sample above the threshold, if any.
    pub truncated_at: Option<f64>,
}

impl Spectrum {
    pub fn df(&self) -> f64 {
        if self.freq.len() > 1 {
            self.freq[1] - self.freq[0]
        } else {
            0.0
        }
    }

    /// `Σ |X_k|/N Δf` over `f ≥ f_min`.
    pub fn band_integral(&self, f_min: f64) -> f64 {
        let df = self.df();
        self.freq.iter().zip(&self.magnitude).filter(|(f, _)| **f >= f_min).map(|(_, m)| m * df).sum()
    }

    /// Mean of `|X_k|/N` over `f ≥ f_min`; comparable across series lengths.
    pub fn band_mean(&self, f_min: f64) -> f64 {
        let band: Vec<f64> = self.freq.iter().zip(&self.magnitude).filter(|(f, _)| **f >= f_min).map(|(_, m)| *m).collect();
        if band.is_empty() {
            0.0
        } else {
            band.iter().sum::<f64>() / band.len() as f64
        }
    }
}

/// Spectrum of `values` sampled at `dt`, truncated before the first sample
/// exceeding `threshold`. Returns `None` when fewer than two samples remain.
pub fn spectrum(values: &[f64], dt: f64, threshold: f64, window: FftWindow) -> Option<Spectrum> {
    let cut = values.iter().position(|v| *v > threshold);
    let series = &values[..cut.unwrap_or(values.len())];
    let n = series.len();
    if n < 2 || !(dt > 0.0) {
        return None;
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex<f64>> = series
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let w = match window {
                FftWindow::Rectangular => 1.0,
                FftWindow::Hann => 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos(),
            };
            Complex::new((v - mean) * w, 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let half = n / 2 + 1;
    let df = 1.0 / (n as f64 * dt);
    Some(Spectrum {
        freq: (0..half).map(|k| k as f64 * df).collect(),
        magnitude: buf[..half].iter().map(|c| c.norm() / n as f64).collect(),
        samples: n,
        truncated_at: cut.map(|i| i as f64 * dt),
    })
}
