//! Signal containers and the Fourier/convolution machinery shared by every
//! other module.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// A multi-channel discrete feature sequence, stored channel-major.
///
/// Every channel has the same length `T >= 1` and every sample is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    channels: Vec<Vec<f64>>,
    sample_rate: f64,
}

impl Signal {
    /// Builds a signal from per-channel sample vectors.
    pub fn from_channels(channels: Vec<Vec<f64>>) -> Result<Self> {
        let first = channels.first().ok_or(Error::Empty("signal has no channels"))?;
        let len = first.len();
        if len == 0 {
            return Err(Error::Empty("signal has no timesteps"));
        }
        if let Some((c, ch)) = channels.iter().enumerate().find(|(_, ch)| ch.len() != len) {
            return Err(Error::Shape(format!("channel {c} has {} samples, expected {len}", ch.len())));
        }
        if channels.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("signal"));
        }
        Ok(Self { channels, sample_rate: 1.0 })
    }

    /// Builds a signal from rows of `C` values, one row per timestep.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let first = rows.first().ok_or(Error::Empty("signal has no timesteps"))?;
        let n_channels = first.len();
        if let Some((t, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != n_channels) {
            return Err(Error::Shape(format!("row {t} has {} values, expected {n_channels}", row.len())));
        }
        let channels = (0..n_channels).map(|c| rows.iter().map(|r| r[c]).collect()).collect();
        Self::from_channels(channels)
    }

    /// Single-channel convenience constructor.
    pub fn mono(samples: Vec<f64>) -> Result<Self> {
        Self::from_channels(vec![samples])
    }

    pub fn with_sample_rate(mut self, sample_rate: f64) -> Result<Self> {
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::Invalid(format!("sample rate {sample_rate}")));
        }
        self.sample_rate = sample_rate;
        Ok(self)
    }

    /// Number of timesteps `T`.
    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    /// Always false; a valid signal has at least one timestep.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        &self.channels[c]
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    pub fn into_channels(self) -> Vec<Vec<f64>> {
        self.channels
    }

    /// Row `t` across all channels.
    pub fn row(&self, t: usize) -> Vec<f64> {
        self.channels.iter().map(|ch| ch[t]).collect()
    }

    /// Applies `f` to every channel, keeping the sample rate.
    pub fn try_map_channels<F>(&self, mut f: F) -> Result<Signal>
    where
        F: FnMut(&[f64]) -> Result<Vec<f64>>,
    {
        let channels = self.channels.iter().map(|ch| f(ch)).collect::<Result<Vec<_>>>()?;
        let out = Signal::from_channels(channels)?;
        Ok(Signal { sample_rate: self.sample_rate, ..out })
    }

    pub(crate) fn with_channels_unchecked(&self, channels: Vec<Vec<f64>>, sample_rate: f64) -> Signal {
        Signal { channels, sample_rate }
    }
}

/// DFT coefficients of one real channel. Bin `k` sits at `k / T` cycles per
/// sample (angular frequency `2πk/T`).
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        Self { coeffs }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.coeffs.iter().map(|z| z.norm()).collect()
    }
}

/// Normalized sinc, `sin(πx)/(πx)` with `sinc(0) = 1`.
///
/// Nonzero integers return exactly zero so that a kernel at the Nyquist
/// cutoff is an exact delta.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else if x.fract() == 0.0 {
        0.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

/// Derivative of [`sinc`]: `(πx·cos(πx) − sin(πx)) / (πx²)`, zero at the origin.
pub fn sinc_derivative(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        // Taylor: sinc'(x) ≈ −π²x/3
        -PI * PI * x / 3.0
    } else {
        let px = PI * x;
        (px * px.cos() - px.sin()) / (PI * x * x)
    }
}

/// `exp(−2πi·k/n)` for `k` in `0..n`, evaluated directly per entry.
fn twiddles(n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|k| {
            let (s, c) = (-2.0 * PI * k as f64 / n as f64).sin_cos();
            Complex64::new(c, s)
        })
        .collect()
}

/// Direct `O(T²)` discrete Fourier transform, unnormalized.
pub fn dft(channel: &[f64]) -> Spectrum {
    let n = channel.len();
    let table = twiddles(n);
    let coeffs = (0..n)
        .map(|k| channel.iter().enumerate().fold(Complex64::new(0.0, 0.0), |acc, (j, &x)| acc + table[(k * j) % n] * x))
        .collect();
    Spectrum { coeffs }
}

/// Fast transform with the same contract as [`dft`].
///
/// Power-of-two lengths use an iterative radix-2 kernel; other lengths go
/// through Bluestein's chirp-z reformulation on a padded radix-2 grid.
pub fn fft(channel: &[f64]) -> Spectrum {
    let mut buf: Vec<Complex64> = channel.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fft_complex(&mut buf);
    Spectrum { coeffs: buf }
}

/// Inverse transform with `1/T` scaling.
///
/// Fails when the result carries an imaginary part larger than `1e-6`
/// relative to the largest output magnitude.
pub fn idft(spec: &Spectrum) -> Result<Vec<f64>> {
    if spec.is_empty() {
        return Err(Error::Empty("spectrum"));
    }
    let n = spec.len();
    let mut buf: Vec<Complex64> = spec.coeffs.iter().map(|z| z.conj()).collect();
    fft_complex(&mut buf);
    let scale = 1.0 / n as f64;
    let out: Vec<Complex64> = buf.iter().map(|z| z.conj() * scale).collect();
    let max_mag = out.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let max_im = out.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if max_im > 1e-6 * max_mag.max(f64::MIN_POSITIVE) {
        return Err(Error::NotReal(max_im));
    }
    Ok(out.into_iter().map(|z| z.re).collect())
}

/// In-place forward transform of arbitrary length.
pub(crate) fn fft_complex(buf: &mut [Complex64]) {
    let n = buf.len();
    if n <= 1 {
        return;
    }
    if n.is_power_of_two() {
        radix2(buf, &twiddles(n));
    } else {
        bluestein(buf);
    }
}

fn bit_reverse_permute(buf: &mut [Complex64]) {
    let n = buf.len();
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            buf.swap(i, j);
        }
    }
}

/// Iterative decimation-in-time radix-2 transform. `table` holds the
/// length-`n` forward twiddles.
fn radix2(buf: &mut [Complex64], table: &[Complex64]) {
    let n = buf.len();
    bit_reverse_permute(buf);
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let stride = n / len;
        for start in (0..n).step_by(len) {
            for k in 0..half {
                let w = table[k * stride];
                let a = buf[start + k];
                let b = buf[start + k + half] * w;
                buf[start + k] = a + b;
                buf[start + k + half] = a - b;
            }
        }
        len *= 2;
    }
}

fn bluestein(buf: &mut [Complex64]) {
    let n = buf.len();
    let m = (2 * n - 1).next_power_of_two();
    // chirp[j] = exp(−iπ j²/n); j² is reduced mod 2n to keep the angle small.
    let two_n = 2 * n as u128;
    let chirp: Vec<Complex64> = (0..n)
        .map(|j| {
            let jj = ((j as u128 * j as u128) % two_n) as f64;
            let (s, c) = (-PI * jj / n as f64).sin_cos();
            Complex64::new(c, s)
        })
        .collect();

    let table = twiddles(m);
    let mut a = vec![Complex64::new(0.0, 0.0); m];
    for j in 0..n {
        a[j] = buf[j] * chirp[j];
    }
    let mut b = vec![Complex64::new(0.0, 0.0); m];
    b[0] = chirp[0].conj();
    for j in 1..n {
        b[j] = chirp[j].conj();
        b[m - j] = chirp[j].conj();
    }
    radix2(&mut a, &table);
    radix2(&mut b, &table);
    for (x, y) in a.iter_mut().zip(&b) {
        *x = (*x * *y).conj();
    }
    // inverse via conjugation trick
    radix2(&mut a, &table);
    let scale = 1.0 / m as f64;
    for j in 0..n {
        buf[j] = a[j].conj() * scale * chirp[j];
    }
}

/// How `convolve_same` reads samples outside `[0, T)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    /// Half-sample symmetric mirror: `… x1 x0 | x0 x1 … xT−1 | xT−1 xT−2 …`.
    #[default]
    Reflect,
    /// Samples outside the signal are zero.
    Zero,
    /// Periodic wrap-around.
    Circular,
}

impl Boundary {
    /// Maps an out-of-range index onto the signal, or `None` for zero padding.
    pub(crate) fn resolve(self, i: isize, len: usize) -> Option<usize> {
        let n = len as isize;
        if (0..n).contains(&i) {
            return Some(i as usize);
        }
        match self {
            Boundary::Zero => None,
            Boundary::Circular => Some(i.rem_euclid(n) as usize),
            Boundary::Reflect => {
                let r = i.rem_euclid(2 * n);
                Some(if r < n { r } else { 2 * n - 1 - r } as usize)
            }
        }
    }
}

/// Same-length convolution: `out[n] = Σ_m kernel[m] · x[n − (m − center)]`.
pub fn convolve_same(x: &[f64], kernel: &[f64], center: usize, boundary: Boundary) -> Result<Vec<f64>> {
    if x.is_empty() {
        return Err(Error::Empty("convolution input"));
    }
    if kernel.is_empty() {
        return Err(Error::Empty("convolution kernel"));
    }
    if center >= kernel.len() {
        return Err(Error::Shape(format!("kernel center {center} outside kernel of length {}", kernel.len())));
    }
    let len = x.len();
    let center = center as isize;
    let out = (0..len as isize)
        .map(|n| {
            kernel.iter().enumerate().fold(0.0, |acc, (m, &k)| match boundary.resolve(n - (m as isize - center), len) {
                Some(i) => acc + k * x[i],
                None => acc,
            })
        })
        .collect();
    Ok(out)
}

/// Wrap-around convolution, the boundary policy under which the convolution
/// theorem holds exactly.
pub fn convolve_circular(x: &[f64], kernel: &[f64], center: usize) -> Result<Vec<f64>> {
    convolve_same(x, kernel, center, Boundary::Circular)
}

/// Per-bin `| |a[k]| − |b[k]| |`.
pub fn spectrum_diff(a: &Spectrum, b: &Spectrum) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!("spectrum lengths differ: {} vs {}", a.len(), b.len())));
    }
    Ok(a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| (x.norm() - y.norm()).abs()).collect())
}
