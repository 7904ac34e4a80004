//! Discrete low-pass kernels (sinc and Gaussian families) with explicit
//! cutoff, shift and DC normalization, plus analytic cutoff gradients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{convolve_same, fft_complex, sinc, sinc_derivative, Boundary, Signal};

/// Tap count used by the analysis operators when none is given.
pub const DEFAULT_ANALYSIS_TAPS: usize = 63;

/// Gaussian width constant: `σ = κ / f_C` puts the Gaussian's half-power
/// point at `f_C`, since `|H(f)| = exp(−2π²σ²f²)` equals `1/√2` when
/// `σf = √(ln 2) / (2π)`.
pub const GAUSSIAN_KAPPA: f64 = 0.1325;

/// A cutoff in cycles per sample, `0 < f_C <= 0.5`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct CutoffFrequency(f64);

impl CutoffFrequency {
    pub const NYQUIST: CutoffFrequency = CutoffFrequency(0.5);

    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value > 0.0 && value <= 0.5 {
            Ok(Self(value))
        } else {
            Err(Error::Cutoff(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Sigmoid range mapping `θ ↦ 0.5·σ(θ)`, so a learner can never pass
    /// Nyquist.
    pub fn from_logit(logit: f64) -> Result<Self> {
        Self::new(0.5 * sigmoid(logit))
    }

    /// Inverse of [`CutoffFrequency::from_logit`]; infinite at Nyquist.
    pub fn logit(self) -> f64 {
        let p = 2.0 * self.0;
        (p / (1.0 - p)).ln()
    }

    /// The anti-aliasing cutoff `0.5 / factor` for decimation by `factor`.
    pub fn for_factor(factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::Invalid("downsampling factor must be >= 1".into()));
        }
        Self::new(0.5 / factor as f64)
    }
}

impl TryFrom<f64> for CutoffFrequency {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<CutoffFrequency> for f64 {
    fn from(c: CutoffFrequency) -> f64 {
        c.0
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `d f_C / dθ` of the sigmoid range mapping.
pub fn cutoff_logit_derivative(logit: f64) -> f64 {
    let s = sigmoid(logit);
    0.5 * s * (1.0 - s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    #[default]
    Sinc,
    Gaussian,
}

impl KernelFamily {
    /// Unnormalized tap at offset `d` (samples) from the shifted center.
    pub(crate) fn tap(self, cutoff: f64, d: f64) -> f64 {
        match self {
            KernelFamily::Sinc => 2.0 * cutoff * sinc(2.0 * cutoff * d),
            KernelFamily::Gaussian => {
                let s = cutoff / GAUSSIAN_KAPPA;
                (-0.5 * d * d * s * s).exp()
            }
        }
    }

    /// `∂tap/∂f_C` at offset `d`.
    pub(crate) fn tap_dcutoff(self, cutoff: f64, d: f64) -> f64 {
        match self {
            KernelFamily::Sinc => {
                let x = 2.0 * cutoff * d;
                2.0 * sinc(x) + 4.0 * cutoff * d * sinc_derivative(x)
            }
            KernelFamily::Gaussian => {
                let k2 = GAUSSIAN_KAPPA * GAUSSIAN_KAPPA;
                self.tap(cutoff, d) * (-d * d * cutoff / k2)
            }
        }
    }

    /// `∂tap/∂d` at offset `d`; the shift enters as `d = m − center − μ`.
    pub(crate) fn tap_doffset(self, cutoff: f64, d: f64) -> f64 {
        match self {
            KernelFamily::Sinc => 4.0 * cutoff * cutoff * sinc_derivative(2.0 * cutoff * d),
            KernelFamily::Gaussian => {
                let s = cutoff / GAUSSIAN_KAPPA;
                -self.tap(cutoff, d) * d * s * s
            }
        }
    }
}

/// Fixed window multiplied onto the taps before normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Taper {
    /// Plain truncation.
    #[default]
    Rectangular,
    /// `0.5 − 0.5·cos(2π(m+1)/(L+1))`, nonzero at both ends.
    Hann,
}

impl Taper {
    pub fn coefficient(self, m: usize, length: usize) -> f64 {
        match self {
            Taper::Rectangular => 1.0,
            Taper::Hann => {
                // mirrored index keeps the window bit-for-bit symmetric
                let j = m.min(length - 1 - m);
                0.5 - 0.5 * (2.0 * std::f64::consts::PI * (j + 1) as f64 / (length + 1) as f64).cos()
            }
        }
    }
}

/// Everything needed to materialize a kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub cutoff: CutoffFrequency,
    /// Odd tap count; the center tap sits at `length / 2`.
    pub length: usize,
    /// Shift of the kernel center, in samples.
    pub mu: f64,
    pub normalize_dc: bool,
    #[serde(default)]
    pub taper: Taper,
}

impl KernelSpec {
    pub fn sinc(cutoff: CutoffFrequency, length: usize) -> Self {
        Self { family: KernelFamily::Sinc, cutoff, length, mu: 0.0, normalize_dc: true, taper: Taper::Rectangular }
    }

    pub fn gaussian(cutoff: CutoffFrequency, length: usize) -> Self {
        Self { family: KernelFamily::Gaussian, ..Self::sinc(cutoff, length) }
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = mu;
        self
    }

    pub fn normalized(mut self, normalize_dc: bool) -> Self {
        self.normalize_dc = normalize_dc;
        self
    }

    pub fn with_taper(mut self, taper: Taper) -> Self {
        self.taper = taper;
        self
    }

    pub fn center(&self) -> usize {
        self.length / 2
    }

    fn validate(&self) -> Result<()> {
        if self.length == 0 || self.length.is_multiple_of(2) {
            return Err(Error::KernelLength(self.length));
        }
        // Re-check in case the spec was assembled by hand.
        CutoffFrequency::new(self.cutoff.value())?;
        if !self.mu.is_finite() {
            return Err(Error::NonFinite("kernel shift"));
        }
        Ok(())
    }

    fn offsets(&self) -> impl Iterator<Item = f64> + '_ {
        let center = self.center() as f64;
        (0..self.length).map(move |m| m as f64 - center - self.mu)
    }

    fn raw_taps(&self) -> Vec<f64> {
        let fc = self.cutoff.value();
        self.offsets()
            .enumerate()
            .map(|(m, d)| self.family.tap(fc, d) * self.taper.coefficient(m, self.length))
            .collect()
    }
}

/// Materialized taps.
#[derive(Debug, Clone, PartialEq)]
pub struct LpfKernel {
    pub weights: Vec<f64>,
    pub center: usize,
    pub spec: KernelSpec,
    /// Normalization constant the raw taps were divided by (1 when not normalized).
    pub z: f64,
}

fn finish(spec: KernelSpec, raw: Vec<f64>) -> Result<LpfKernel> {
    let z = if spec.normalize_dc {
        let z: f64 = raw.iter().sum();
        if z.abs() < 1e-12 {
            return Err(Error::Degenerate(format!("kernel tap sum {z:e} cannot be normalized")));
        }
        z
    } else {
        1.0
    };
    let weights = if spec.normalize_dc { raw.into_iter().map(|w| w / z).collect() } else { raw };
    Ok(LpfKernel { weights, center: spec.center(), spec, z })
}

/// Truncated ideal low-pass: tap `m` is `2f_C·sinc(2f_C(m − center − μ))`.
pub fn build_sinc_kernel(spec: &KernelSpec) -> Result<LpfKernel> {
    if spec.family != KernelFamily::Sinc {
        return Err(Error::Invalid("build_sinc_kernel needs the sinc family".into()));
    }
    spec.validate()?;
    finish(*spec, spec.raw_taps())
}

/// Gaussian low-pass with `σ = κ / f_C`.
pub fn build_gaussian_kernel(spec: &KernelSpec) -> Result<LpfKernel> {
    if spec.family != KernelFamily::Gaussian {
        return Err(Error::Invalid("build_gaussian_kernel needs the gaussian family".into()));
    }
    spec.validate()?;
    finish(*spec, spec.raw_taps())
}

pub fn build_kernel(spec: &KernelSpec) -> Result<LpfKernel> {
    match spec.family {
        KernelFamily::Sinc => build_sinc_kernel(spec),
        KernelFamily::Gaussian => build_gaussian_kernel(spec),
    }
}

/// Filters every channel with `kernel` under the reflect boundary.
pub fn apply_lpf(signal: &Signal, kernel: &LpfKernel) -> Result<Signal> {
    apply_lpf_with(signal, kernel, Boundary::Reflect)
}

pub fn apply_lpf_with(signal: &Signal, kernel: &LpfKernel, boundary: Boundary) -> Result<Signal> {
    signal.try_map_channels(|ch| convolve_same(ch, &kernel.weights, kernel.center, boundary))
}

/// Magnitude of the zero-padded DFT of the taps; bin `k` is `k / n_bins`
/// cycles per sample.
pub fn kernel_frequency_response(kernel: &LpfKernel, n_bins: usize) -> Result<Vec<f64>> {
    if n_bins < kernel.weights.len() {
        return Err(Error::Invalid(format!("{n_bins} bins is fewer than the {} kernel taps", kernel.weights.len())));
    }
    let mut buf = vec![num_complex::Complex64::new(0.0, 0.0); n_bins];
    for (b, &w) in buf.iter_mut().zip(&kernel.weights) {
        b.re = w;
    }
    fft_complex(&mut buf);
    Ok(buf.iter().map(|z| z.norm()).collect())
}

/// Per-tap `∂w_m/∂f_C`.
///
/// Unnormalized specs differentiate the raw taps; normalized specs apply the
/// quotient rule through the tap sum, so the gradient sums to zero.
pub fn grad_kernel_wrt_cutoff(spec: &KernelSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let fc = spec.cutoff.value();
    let draw: Vec<f64> = spec
        .offsets()
        .enumerate()
        .map(|(m, d)| spec.family.tap_dcutoff(fc, d) * spec.taper.coefficient(m, spec.length))
        .collect();
    if !spec.normalize_dc {
        return Ok(draw);
    }
    let raw = spec.raw_taps();
    Ok(normalized_gradient(&raw, &draw))
}

/// Quotient rule for `w = r / Σr` given `∂r`.
pub(crate) fn normalized_gradient(raw: &[f64], draw: &[f64]) -> Vec<f64> {
    let z: f64 = raw.iter().sum();
    let dz: f64 = draw.iter().sum();
    raw.iter().zip(draw).map(|(&r, &dr)| (dr * z - r * dz) / (z * z)).collect()
}
