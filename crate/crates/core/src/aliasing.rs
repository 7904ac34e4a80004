//! Aliasing measurements: spectrum-difference maps between a signal and its
//! downsampled version, scalar aliasing energies, and a centroid-based class
//! separability score.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernel::CutoffFrequency;
use crate::signal::{fft_complex, spectrum_diff, Signal, Spectrum};

/// Spectrum comparison between an original signal and a sampled version.
#[derive(Debug, Clone, PartialEq)]
pub struct AliasingReport {
    /// `C × B` absolute magnitude differences on the comparison grid.
    pub per_channel_diff: Vec<Vec<f64>>,
    /// Sum of squared differences over bins below a quarter cycle per
    /// post-decimation sample, over all channels.
    pub low_band_energy_error: f64,
    /// Sum of squared differences over every comparison bin and channel.
    pub full_band_energy_error: f64,
    pub factor: usize,
    pub cutoff_used: Option<CutoffFrequency>,
    /// Frequency of each comparison bin in cycles per original sample.
    pub bin_frequencies: Vec<f64>,
}

impl AliasingReport {
    pub fn with_cutoff(mut self, cutoff: Option<CutoffFrequency>) -> Self {
        self.cutoff_used = cutoff;
        self
    }

    /// Number of comparison bins `B`.
    pub fn n_bins(&self) -> usize {
        self.bin_frequencies.len()
    }
}

/// DFT of `x` at frequencies `k / grid` for `k < bins`, by exact summation:
/// the sequence is folded modulo `grid` (time aliasing is exact for these
/// frequencies) and transformed on a length-`grid` FFT.
fn spectrum_on_grid(x: &[f64], grid: usize, bins: usize) -> Vec<Complex64> {
    let mut buf = vec![Complex64::new(0.0, 0.0); grid];
    for (n, &v) in x.iter().enumerate() {
        buf[n % grid].re += v;
    }
    fft_complex(&mut buf);
    buf.truncate(bins);
    buf
}

/// Compares the sampled sequence's spectrum against the original's spectrum
/// on the sampled bin grid.
///
/// With `M` sampled steps, bin `k ∈ [0, M/2]` sits at `k/M` cycles per
/// sampled step, i.e. `k/(M·factor)` cycles per original step. The original
/// is transformed at exactly those frequencies and scaled by `1/factor`, the
/// gain of ideal decimation.
pub fn aliasing_error(original: &Signal, sampled: &Signal, factor: usize) -> Result<AliasingReport> {
    if factor == 0 {
        return Err(Error::Invalid("factor must be >= 1".into()));
    }
    if original.n_channels() != sampled.n_channels() {
        return Err(Error::Shape(format!(
            "original has {} channels, sampled has {}",
            original.n_channels(),
            sampled.n_channels()
        )));
    }
    let m = sampled.len();
    let expected = original.len() as f64 / factor as f64;
    if (m as f64 - expected).abs() >= 1.0 {
        return Err(Error::Shape(format!("sampled length {m} is inconsistent with {} / {factor}", original.len())));
    }
    let bins = m / 2 + 1;
    let grid = m * factor;
    let scale = 1.0 / factor as f64;

    let mut per_channel_diff = Vec::with_capacity(original.n_channels());
    let mut low = 0.0;
    let mut full = 0.0;
    for (x, s) in original.channels().iter().zip(sampled.channels()) {
        let reference = Spectrum::new(spectrum_on_grid(x, grid, bins).into_iter().map(|z| z * scale).collect());
        let observed = Spectrum::new(spectrum_on_grid(s, m, bins));
        let diff = spectrum_diff(&observed, &reference)?;
        for (k, d) in diff.iter().enumerate() {
            let e = d * d;
            full += e;
            // k/M < 1/4  ⇔  4k < M
            if 4 * k < m {
                low += e;
            }
        }
        per_channel_diff.push(diff);
    }
    Ok(AliasingReport {
        per_channel_diff,
        low_band_energy_error: low,
        full_band_energy_error: full,
        factor,
        cutoff_used: None,
        bin_frequencies: (0..bins).map(|k| k as f64 / grid as f64).collect(),
    })
}

/// The `C × B` difference matrix of [`aliasing_error`], row-major.
pub fn spectrum_heatmap(original: &Signal, sampled: &Signal, factor: usize) -> Result<Vec<Vec<f64>>> {
    Ok(aliasing_error(original, sampled, factor)?.per_channel_diff)
}

/// Ratio of the RMS distance from each sample to the *other* classes'
/// centroids over the RMS distance to its own centroid.
///
/// For two classes with equal scatter `s` and centroid gap `D` this is
/// `√(1 + D²/s²)`; it is near 1 when labels carry no structure.
pub fn separability_score(features_by_class: &[(usize, Vec<f64>)]) -> Result<f64> {
    let dim = features_by_class.first().map(|(_, f)| f.len()).ok_or(Error::Empty("feature set"))?;
    if dim == 0 {
        return Err(Error::Empty("feature vectors"));
    }
    if features_by_class.iter().any(|(_, f)| f.len() != dim) {
        return Err(Error::Shape("feature vectors differ in length".into()));
    }
    let mut sums: BTreeMap<usize, (Vec<f64>, usize)> = BTreeMap::new();
    for (class, f) in features_by_class {
        let entry = sums.entry(*class).or_insert_with(|| (vec![0.0; dim], 0));
        entry.0.iter_mut().zip(f).for_each(|(s, v)| *s += v);
        entry.1 += 1;
    }
    if sums.len() < 2 {
        return Err(Error::Invalid("need at least two classes".into()));
    }
    if let Some((class, (_, n))) = sums.iter().find(|(_, (_, n))| *n < 2) {
        return Err(Error::Invalid(format!("class {class} has {n} sample(s); need at least two")));
    }
    let centroids: BTreeMap<usize, Vec<f64>> =
        sums.into_iter().map(|(c, (s, n))| (c, s.into_iter().map(|v| v / n as f64).collect())).collect();
    let sq = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum() };

    let mut within = 0.0;
    let mut between = 0.0;
    let mut n_between = 0usize;
    for (class, f) in features_by_class {
        for (c, mu) in &centroids {
            if c == class {
                within += sq(f, mu);
            } else {
                between += sq(f, mu);
                n_between += 1;
            }
        }
    }
    within /= features_by_class.len() as f64;
    between /= n_between as f64;
    if within <= f64::EPSILON * between || within == 0.0 {
        return Err(Error::Degenerate("within-class scatter is zero".into()));
    }
    Ok((between / within).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_signals_give_zero_report() {
        let x = Signal::from_channels(vec![
            (0..37).map(|i| (i as f64 * 0.41).sin()).collect(),
            (0..37).map(|i| (i as f64).sqrt()).collect(),
        ])
        .unwrap();
        let r = aliasing_error(&x, &x, 1).unwrap();
        assert_eq!(r.low_band_energy_error, 0.0);
        assert_eq!(r.full_band_energy_error, 0.0);
        assert!(r.per_channel_diff.iter().flatten().all(|&v| v == 0.0));
        assert_eq!(r.n_bins(), 19);
        assert!(spectrum_heatmap(&x, &x, 1).unwrap().iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_inconsistent_lengths() {
        let x = Signal::mono(vec![1.0; 40]).unwrap();
        let s = Signal::mono(vec![1.0; 7]).unwrap();
        assert!(aliasing_error(&x, &s, 4).is_err());
        assert!(aliasing_error(&x, &Signal::mono(vec![1.0; 10]).unwrap(), 4).is_ok());
        let two = Signal::from_channels(vec![vec![1.0; 10]; 2]).unwrap();
        assert!(aliasing_error(&x, &two, 4).is_err());
        assert!(aliasing_error(&x, &x, 0).is_err());
    }

    #[test]
    fn report_invariants() {
        let x = Signal::mono((0..64).map(|i| ((i * i) % 13) as f64 - 6.0).collect()).unwrap();
        let s = Signal::mono((0..16).map(|i| ((i * 5) % 7) as f64).collect()).unwrap();
        let r = aliasing_error(&x, &s, 4).unwrap();
        assert!(r.low_band_energy_error <= r.full_band_energy_error + 1e-12);
        assert!(r.per_channel_diff.iter().flatten().all(|v| v.is_finite() && *v >= 0.0));
        assert_eq!(r.bin_frequencies.last().copied(), Some(0.125));
    }

    #[test]
    fn separability_degenerate_and_shape_errors() {
        let pts = vec![(0, vec![1.0]), (0, vec![1.0]), (1, vec![5.0]), (1, vec![5.0])];
        assert!(matches!(separability_score(&pts), Err(Error::Degenerate(_))));
        assert!(separability_score(&[(0, vec![1.0]), (0, vec![2.0])]).is_err());
        assert!(separability_score(&[(0, vec![1.0]), (0, vec![2.0]), (1, vec![3.0])]).is_err());
        assert!(separability_score(&[(0, vec![1.0]), (1, vec![2.0, 3.0])]).is_err());
    }

    #[test]
    fn separability_closed_form() {
        // class scatter 1 around 0 and 4: between² = 1 + 16, within² = 1
        let pts = vec![(0, vec![-1.0]), (0, vec![1.0]), (1, vec![3.0]), (1, vec![5.0])];
        assert!((separability_score(&pts).unwrap() - 17f64.sqrt()).abs() < 1e-12);
    }
}
