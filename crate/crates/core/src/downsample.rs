//! Temporal downsampling: plain and low-pass-fused sampling and pooling,
//! plus sinc reconstruction.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::kernel::{
    apply_lpf_with, build_sinc_kernel, CutoffFrequency, KernelFamily, KernelSpec, Taper, DEFAULT_ANALYSIS_TAPS,
};
use crate::signal::{Boundary, Signal};

/// Which samples survive a downsampling step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DownsampleSpec {
    /// Keep indices `phase, phase + factor, …`.
    Stride { factor: usize, phase: usize },
    /// Keep `target` indices spread evenly over `[0, T − 1]`, both ends included.
    Count { target: usize },
}

impl DownsampleSpec {
    pub fn stride(factor: usize) -> Self {
        DownsampleSpec::Stride { factor, phase: 0 }
    }

    pub fn stride_with_phase(factor: usize, phase: usize) -> Self {
        DownsampleSpec::Stride { factor, phase }
    }

    pub fn count(target: usize) -> Self {
        DownsampleSpec::Count { target }
    }

    /// Selected indices for a length-`len` signal.
    pub fn indices(&self, len: usize) -> Result<Vec<usize>> {
        match *self {
            DownsampleSpec::Stride { factor, phase } => {
                if factor == 0 {
                    return Err(Error::Invalid("factor must be >= 1".into()));
                }
                if phase >= factor {
                    return Err(Error::Invalid(format!("phase {phase} must be < factor {factor}")));
                }
                if phase >= len {
                    return Err(Error::Infeasible(format!("phase {phase} leaves no samples of a length-{len} signal")));
                }
                Ok((phase..len).step_by(factor).collect())
            }
            DownsampleSpec::Count { target } => {
                if target == 0 {
                    return Err(Error::Invalid("target count must be >= 1".into()));
                }
                if target > len {
                    return Err(Error::Infeasible(format!("{target} samples requested from a length-{len} signal")));
                }
                if target == 1 {
                    return Ok(vec![0]);
                }
                let span = (len - 1) as f64 / (target - 1) as f64;
                Ok((0..target).map(|i| (i as f64 * span).round() as usize).collect())
            }
        }
    }
}

fn select(signal: &Signal, idx: &[usize], rate_scale: f64) -> Signal {
    let channels = signal.channels().iter().map(|ch| idx.iter().map(|&i| ch[i]).collect()).collect();
    signal.with_channels_unchecked(channels, signal.sample_rate() * rate_scale)
}

/// Keeps the samples chosen by `spec`, identically for every channel.
pub fn uniform_sample(signal: &Signal, spec: &DownsampleSpec) -> Result<Signal> {
    let idx = spec.indices(signal.len())?;
    let scale = idx.len() as f64 / signal.len() as f64;
    Ok(select(signal, &idx, scale))
}

/// Multiplies by an impulse train: keeps `x[n]` where `n % factor == 0` and
/// zeroes everything else, preserving the length.
pub fn impulse_train_sample(signal: &Signal, factor: usize) -> Result<Signal> {
    if factor == 0 {
        return Err(Error::Invalid("factor must be >= 1".into()));
    }
    if factor > signal.len() {
        return Err(Error::Infeasible(format!("factor {factor} exceeds signal length {}", signal.len())));
    }
    let channels = signal
        .channels()
        .iter()
        .map(|ch| ch.iter().enumerate().map(|(n, &x)| if n % factor == 0 { x } else { 0.0 }).collect())
        .collect();
    Ok(signal.with_channels_unchecked(channels, signal.sample_rate()))
}

/// Sinc low-pass at `cutoff` (63 taps, reflect boundary) followed by
/// [`uniform_sample`].
pub fn lpf_uniform_sample(signal: &Signal, spec: &DownsampleSpec, cutoff: CutoffFrequency) -> Result<Signal> {
    lpf_uniform_sample_with(signal, spec, &KernelSpec::sinc(cutoff, DEFAULT_ANALYSIS_TAPS))
}

/// Like [`lpf_uniform_sample`] with an explicit kernel.
pub fn lpf_uniform_sample_with(signal: &Signal, spec: &DownsampleSpec, kernel: &KernelSpec) -> Result<Signal> {
    lpf_uniform_sample_with_boundary(signal, spec, kernel, Boundary::Reflect)
}

/// Like [`lpf_uniform_sample_with`] under an explicit boundary policy.
/// `Circular` matches the periodic model of a DFT-based comparison.
pub fn lpf_uniform_sample_with_boundary(
    signal: &Signal,
    spec: &DownsampleSpec,
    kernel: &KernelSpec,
    boundary: Boundary,
) -> Result<Signal> {
    // Validate the selection before paying for the filter.
    spec.indices(signal.len())?;
    let kernel = build_sinc_kernel(kernel)?;
    uniform_sample(&apply_lpf_with(signal, &kernel, boundary)?, spec)
}

fn check_window(signal: &Signal, window: &Range<usize>) -> Result<()> {
    if window.start >= window.end {
        return Err(Error::Empty("pooling window"));
    }
    if window.end > signal.len() {
        return Err(Error::Shape(format!(
            "window {}..{} exceeds signal length {}",
            window.start,
            window.end,
            signal.len()
        )));
    }
    Ok(())
}

/// Per-channel mean over `window`.
pub fn average_pool(signal: &Signal, window: Range<usize>) -> Result<Vec<f64>> {
    check_window(signal, &window)?;
    let n = window.len() as f64;
    Ok(signal.channels().iter().map(|ch| ch[window.clone()].iter().sum::<f64>() / n).collect())
}

/// Per-channel maximum over `window`.
pub fn max_pool(signal: &Signal, window: Range<usize>) -> Result<Vec<f64>> {
    check_window(signal, &window)?;
    Ok(signal
        .channels()
        .iter()
        .map(|ch| ch[window.clone()].iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect())
}

/// Low-pass pooling weights for a window of `len` samples:
/// `w_n ∝ Σ_m tap(n − m − μ)` with `m` running over the window, scaled so
/// `Σ_n w_n = 1`.
///
/// The inner sum is a window of consecutive taps, so it is read off a prefix
/// sum over the `2·len − 1` possible offsets.
pub fn low_pass_weights(len: usize, cutoff: CutoffFrequency, mu: f64, family: KernelFamily) -> Result<Vec<f64>> {
    if len == 0 {
        return Err(Error::Empty("pooling window"));
    }
    if !mu.is_finite() {
        return Err(Error::NonFinite("pooling shift"));
    }
    let fc = cutoff.value();
    // offsets d = n − m run over −(len−1) ..= len−1
    let lo = -(len as isize - 1);
    let mut prefix = Vec::with_capacity(2 * len);
    prefix.push(0.0);
    let mut acc = 0.0;
    for d in lo..len as isize {
        acc += family.tap(fc, d as f64 - mu);
        prefix.push(acc);
    }
    // Σ_{m=0}^{len−1} tap(n − m) = prefix over d in [n − len + 1, n]
    let raw: Vec<f64> = (0..len).map(|n| prefix[n + len] - prefix[n]).collect();
    let z: f64 = raw.iter().sum();
    if z.abs() < 1e-12 {
        return Err(Error::Degenerate(format!("pooling weights sum to {z:e}")));
    }
    Ok(raw.into_iter().map(|r| r / z).collect())
}

/// Low-pass average pooling with the sinc family.
pub fn lpf_average_pool(signal: &Signal, window: Range<usize>, cutoff: CutoffFrequency) -> Result<Vec<f64>> {
    lpf_average_pool_with(signal, window, cutoff, KernelFamily::Sinc)
}

/// Low-pass average pooling: `Σ_n w_n·x[n]` over the window with the
/// weights of [`low_pass_weights`] (μ = 0).
pub fn lpf_average_pool_with(
    signal: &Signal,
    window: Range<usize>,
    cutoff: CutoffFrequency,
    family: KernelFamily,
) -> Result<Vec<f64>> {
    check_window(signal, &window)?;
    let w = low_pass_weights(window.len(), cutoff, 0.0, family)?;
    Ok(signal.channels().iter().map(|ch| ch[window.clone()].iter().zip(&w).map(|(x, w)| x * w).sum()).collect())
}

/// Zero-stuffs `sampled` back to `original_length` and interpolates with a
/// `taps`-long Hann-windowed sinc at `0.5 / factor`, scaled by `factor`.
/// The window trades a slightly wider transition band for a passband that
/// is flat to well under 1%.
pub fn sinc_reconstruct(sampled: &Signal, factor: usize, original_length: usize, taps: usize) -> Result<Signal> {
    if factor == 0 {
        return Err(Error::Invalid("factor must be >= 1".into()));
    }
    let m = sampled.len();
    if m * factor + factor < original_length || (m - 1) * factor >= original_length {
        return Err(Error::Shape(format!("{m} samples at factor {factor} cannot span length {original_length}")));
    }
    let channels = sampled
        .channels()
        .iter()
        .map(|ch| {
            (0..original_length)
                .map(|n| if n % factor == 0 { ch.get(n / factor).copied().unwrap_or(0.0) } else { 0.0 })
                .collect()
        })
        .collect();
    let stuffed = sampled.with_channels_unchecked(channels, sampled.sample_rate() * factor as f64);
    let spec = KernelSpec::sinc(CutoffFrequency::for_factor(factor)?, taps).normalized(false).with_taper(Taper::Hann);
    let mut kernel = build_sinc_kernel(&spec)?;
    kernel.weights.iter_mut().for_each(|w| *w *= factor as f64);
    apply_lpf_with(&stuffed, &kernel, Boundary::Zero)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn fc(v: f64) -> CutoffFrequency {
        CutoffFrequency::new(v).unwrap()
    }

    fn ramp(n: usize) -> Signal {
        Signal::mono((0..n).map(|i| i as f64).collect()).unwrap()
    }

    #[test]
    fn stride_indices() {
        let s = uniform_sample(&ramp(8), &DownsampleSpec::stride(2)).unwrap();
        assert_eq!(s.channel(0), &[0.0, 2.0, 4.0, 6.0]);
        let s = uniform_sample(&ramp(8), &DownsampleSpec::stride_with_phase(3, 1)).unwrap();
        assert_eq!(s.channel(0), &[1.0, 4.0, 7.0]);
        assert!(uniform_sample(&ramp(8), &DownsampleSpec::stride_with_phase(2, 2)).is_err());
        assert!(uniform_sample(&ramp(8), &DownsampleSpec::stride(0)).is_err());
    }

    #[test]
    fn decimation_aliases_three_eighths_to_a_quarter() {
        let x: Vec<f64> = (0..64).map(|n| (2.0 * PI * 3.0 / 8.0 * n as f64).cos()).collect();
        let s = uniform_sample(&Signal::mono(x).unwrap(), &DownsampleSpec::stride(2)).unwrap();
        for (m, v) in s.channel(0).iter().enumerate() {
            assert!((v - (2.0 * PI * m as f64 / 4.0).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn count_mode() {
        let s = uniform_sample(&ramp(10), &DownsampleSpec::count(10)).unwrap();
        assert_eq!(s, ramp(10).with_sample_rate(1.0).unwrap());
        let s = uniform_sample(&ramp(10), &DownsampleSpec::count(4)).unwrap();
        assert_eq!(s.channel(0), &[0.0, 3.0, 6.0, 9.0]);
        let s = uniform_sample(&ramp(10), &DownsampleSpec::count(1)).unwrap();
        assert_eq!(s.channel(0), &[0.0]);
        assert!(matches!(uniform_sample(&ramp(10), &DownsampleSpec::count(11)), Err(Error::Infeasible(_))));
    }

    #[test]
    fn impulse_train_examples() {
        let x = Signal::mono(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(impulse_train_sample(&x, 1).unwrap(), x);
        assert_eq!(impulse_train_sample(&x, 2).unwrap().channel(0), &[1.0, 0.0, 3.0, 0.0]);
        assert!(impulse_train_sample(&x, 5).is_err());
    }

    #[test]
    fn nyquist_lpf_sample_is_plain_sample() {
        let x = Signal::mono((0..50).map(|i| ((i * 37 % 11) as f64).sin()).collect()).unwrap();
        let spec = DownsampleSpec::stride(3);
        let a = lpf_uniform_sample(&x, &spec, CutoffFrequency::NYQUIST).unwrap();
        let b = uniform_sample(&x, &spec).unwrap();
        for (p, q) in a.channel(0).iter().zip(b.channel(0)) {
            assert!((p - q).abs() < 1e-10);
        }
        let c = Signal::mono(vec![2.0; 50]).unwrap();
        let out = lpf_uniform_sample(&c, &spec, fc(0.07)).unwrap();
        assert!(out.channel(0).iter().all(|v| (v - 2.0).abs() < 1e-10));
    }

    #[test]
    fn pooling_examples() {
        let x = Signal::mono(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(average_pool(&x, 0..4).unwrap(), vec![2.5]);
        assert_eq!(max_pool(&Signal::mono(vec![1.0, 4.0, 2.0]).unwrap(), 0..3).unwrap(), vec![4.0]);
        let c = Signal::from_channels(vec![vec![7.0; 12], vec![-3.0; 12]]).unwrap();
        for &f in &[0.01, 0.1, 0.3, 0.5] {
            for family in [KernelFamily::Sinc, KernelFamily::Gaussian] {
                let p = lpf_average_pool_with(&c, 2..11, fc(f), family).unwrap();
                assert!((p[0] - 7.0).abs() < 1e-10 && (p[1] + 3.0).abs() < 1e-10);
            }
        }
        assert_eq!(max_pool(&c, 3..7).unwrap(), vec![7.0, -3.0]);
    }

    #[test]
    fn pooling_window_errors() {
        let x = ramp(5);
        assert!(average_pool(&x, 2..2).is_err());
        assert!(max_pool(&x, 3..9).is_err());
        let (a, b) = (4, 1);
        assert!(lpf_average_pool(&x, a..b, fc(0.2)).is_err());
    }

    #[test]
    fn pooling_weights_sum_to_one_and_match_direct_sum() {
        for &(len, f, mu) in &[(1, 0.2, 0.0), (7, 0.13, 0.0), (16, 0.1, 0.4), (33, 0.45, -1.2)] {
            let w = low_pass_weights(len, fc(f), mu, KernelFamily::Sinc).unwrap();
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let direct: Vec<f64> = (0..len)
                .map(|n| (0..len).map(|m| KernelFamily::Sinc.tap(f, n as f64 - m as f64 - mu)).sum::<f64>())
                .collect();
            let z: f64 = direct.iter().sum();
            for (a, b) in w.iter().zip(&direct) {
                assert!((a - b / z).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn nyquist_pool_is_average() {
        let x = Signal::mono((0..23).map(|i| (i as f64 * 0.77).cos() * 3.0).collect()).unwrap();
        let a = lpf_average_pool(&x, 3..20, CutoffFrequency::NYQUIST).unwrap();
        let b = average_pool(&x, 3..20).unwrap();
        assert!((a[0] - b[0]).abs() < 1e-10);
    }

    #[test]
    fn reconstruct_identity_and_errors() {
        let x = Signal::mono((0..20).map(|i| (i as f64).sqrt()).collect()).unwrap();
        let r = sinc_reconstruct(&x, 1, 20, 31).unwrap();
        assert_eq!(r.channel(0), x.channel(0));
        assert!(sinc_reconstruct(&x, 4, 200, 31).is_err());
        assert!(sinc_reconstruct(&x, 4, 40, 31).is_err());
        assert!(sinc_reconstruct(&x, 4, 80, 31).is_ok());
    }
}
