//! Temporal low-pass mixture (TLPM) kernels: per output channel, a
//! soft-attention convex combination of `P` DC-normalized sinc weight sets,
//! optionally truncated to a half-width `L` around each set's center.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{cutoff_logit_derivative, CutoffFrequency, KernelFamily};
use crate::signal::{convolve_same, Boundary, Signal};

/// What happens to a set's surviving taps after truncation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
    /// Rescale the surviving taps back to unit sum.
    #[default]
    Renormalize,
    /// Zero the taps and keep the untruncated normalization.
    Raw,
}

/// Learnable TLPM parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TlpmParams {
    /// Kernel support `N` in taps (odd).
    pub length: usize,
    /// One logit per weight set, mapped to a cutoff by `0.5·σ(θ)`.
    pub cutoff_logits: Vec<f64>,
    /// Center shift of each weight set, in samples.
    pub mu: Vec<f64>,
    /// `out_channels × P` attention logits.
    pub attention_logits: Vec<Vec<f64>>,
    /// Truncation half-width `L`; `None` means unbounded.
    #[serde(default)]
    pub trunc_half_width: Option<f64>,
    #[serde(default)]
    pub truncation: Truncation,
}

impl TlpmParams {
    /// Neutral parameters: every cutoff at 0.25, no shift, uniform attention.
    pub fn uniform(p_sets: usize, length: usize, out_channels: usize) -> Self {
        Self {
            length,
            cutoff_logits: vec![0.0; p_sets],
            mu: vec![0.0; p_sets],
            attention_logits: vec![vec![0.0; p_sets]; out_channels],
            trunc_half_width: None,
            truncation: Truncation::Renormalize,
        }
    }

    /// 16 sets of 31 taps mixed into 8 output channels.
    pub fn experiment_shape() -> Self {
        Self::uniform(16, 31, 8)
    }

    pub fn p_sets(&self) -> usize {
        self.cutoff_logits.len()
    }

    pub fn out_channels(&self) -> usize {
        self.attention_logits.len()
    }

    pub fn center(&self) -> usize {
        self.length / 2
    }

    pub fn cutoffs(&self) -> Result<Vec<CutoffFrequency>> {
        self.cutoff_logits.iter().map(|&t| CutoffFrequency::from_logit(t)).collect()
    }

    /// Shape parameters of the weight-set bank: a location and a cutoff per set.
    pub fn shape_param_count(&self) -> usize {
        self.cutoff_logits.len() + self.mu.len()
    }

    /// Shape parameters plus attention logits.
    pub fn param_count(&self) -> usize {
        self.shape_param_count() + self.attention_logits.iter().map(Vec::len).sum::<usize>()
    }

    pub fn validate(&self) -> Result<()> {
        if self.length == 0 || self.length.is_multiple_of(2) {
            return Err(Error::KernelLength(self.length));
        }
        let p = self.p_sets();
        if p == 0 {
            return Err(Error::Invalid("need at least one weight set".into()));
        }
        if self.mu.len() != p {
            return Err(Error::Shape(format!("{} shifts for {p} weight sets", self.mu.len())));
        }
        if self.attention_logits.is_empty() {
            return Err(Error::Invalid("need at least one output channel".into()));
        }
        if let Some((c, row)) = self.attention_logits.iter().enumerate().find(|(_, r)| r.len() != p) {
            return Err(Error::Shape(format!("attention row {c} has {} logits for {p} weight sets", row.len())));
        }
        let finite = self
            .cutoff_logits
            .iter()
            .chain(&self.mu)
            .chain(self.attention_logits.iter().flatten())
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::NonFinite("tlpm parameters"));
        }
        if let Some(l) = self.trunc_half_width {
            if l.is_nan() || l <= 0.0 {
                return Err(Error::Invalid(format!("truncation half-width {l} must be > 0")));
            }
        }
        self.cutoffs()?;
        Ok(())
    }
}

/// Mixed kernel, one row per output channel.
#[derive(Debug, Clone, PartialEq)]
pub struct TlpmKernel {
    pub weights: Vec<Vec<f64>>,
    pub params: TlpmParams,
}

impl TlpmKernel {
    pub fn center(&self) -> usize {
        self.params.center()
    }
}

/// Row-wise softmax with max subtraction.
pub fn softmax_attention(logits: &[Vec<f64>]) -> Vec<Vec<f64>> {
    logits.iter().map(|row| softmax(row)).collect()
}

pub(crate) fn softmax(row: &[f64]) -> Vec<f64> {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = row.iter().map(|&v| (v - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

/// One weight set with its cutoff and shift derivatives.
struct SetWeights {
    w: Vec<f64>,
    dw_dcutoff: Vec<f64>,
    dw_dmu: Vec<f64>,
}

fn set_weights(length: usize, cutoff: f64, mu: f64, half_width: Option<f64>, mode: Truncation) -> Result<SetWeights> {
    let family = KernelFamily::Sinc;
    let center = (length / 2) as f64;
    let offsets: Vec<f64> = (0..length).map(|m| m as f64 - center - mu).collect();
    let keep: Vec<bool> = offsets.iter().map(|d| half_width.is_none_or(|l| d.abs() <= l)).collect();
    if !keep.iter().any(|&k| k) {
        return Err(Error::Invalid(format!(
            "truncation half-width {:?} leaves no taps for a set shifted by {mu}",
            half_width
        )));
    }
    let raw: Vec<f64> = offsets.iter().map(|&d| family.tap(cutoff, d)).collect();
    let d_fc: Vec<f64> = offsets.iter().map(|&d| family.tap_dcutoff(cutoff, d)).collect();
    let d_mu: Vec<f64> = offsets.iter().map(|&d| -family.tap_doffset(cutoff, d)).collect();

    let in_norm = |j: usize| mode == Truncation::Raw || keep[j];
    let sum_over = |v: &[f64]| -> f64 { (0..length).filter(|&j| in_norm(j)).map(|j| v[j]).sum() };
    let z = sum_over(&raw);
    if z.abs() < 1e-12 {
        return Err(Error::Degenerate(format!("weight set sums to {z:e}")));
    }
    let dz_fc = sum_over(&d_fc);
    let dz_mu = sum_over(&d_mu);
    let masked =
        |f: &dyn Fn(usize) -> f64| -> Vec<f64> { (0..length).map(|j| if keep[j] { f(j) } else { 0.0 }).collect() };
    Ok(SetWeights {
        w: masked(&|j| raw[j] / z),
        dw_dcutoff: masked(&|j| (d_fc[j] * z - raw[j] * dz_fc) / (z * z)),
        dw_dmu: masked(&|j| (d_mu[j] * z - raw[j] * dz_mu) / (z * z)),
    })
}

fn all_sets(params: &TlpmParams) -> Result<Vec<SetWeights>> {
    params.validate()?;
    params
        .cutoffs()?
        .iter()
        .zip(&params.mu)
        .map(|(fc, &mu)| set_weights(params.length, fc.value(), mu, params.trunc_half_width, params.truncation))
        .collect()
}

fn mix(attention: &[Vec<f64>], sets: &[SetWeights], length: usize) -> Vec<Vec<f64>> {
    attention
        .iter()
        .map(|a| {
            let mut row = vec![0.0; length];
            for (ap, set) in a.iter().zip(sets) {
                for (r, w) in row.iter_mut().zip(&set.w) {
                    *r += ap * w;
                }
            }
            row
        })
        .collect()
}

/// The `P` weight vectors the kernel mixes (after any truncation).
pub fn weight_sets(params: &TlpmParams) -> Result<Vec<Vec<f64>>> {
    Ok(all_sets(params)?.into_iter().map(|s| s.w).collect())
}

/// `K[c] = Σ_p softmax(attention)[c][p] · w_p`.
pub fn build_tlpm_kernel(params: &TlpmParams) -> Result<TlpmKernel> {
    let sets = all_sets(params)?;
    let attention = softmax_attention(&params.attention_logits);
    Ok(TlpmKernel { weights: mix(&attention, &sets, params.length), params: params.clone() })
}

/// Zeros every set's taps farther than `half_width` from that set's shifted
/// center, then re-mixes. Truncating an already truncated kernel keeps the
/// tighter bound.
pub fn truncate_weights(kernel: &TlpmKernel, half_width: f64) -> Result<TlpmKernel> {
    if half_width.is_nan() || half_width <= 0.0 {
        return Err(Error::Invalid(format!("truncation half-width {half_width} must be > 0")));
    }
    let mut params = kernel.params.clone();
    params.trunc_half_width = Some(params.trunc_half_width.map_or(half_width, |l| l.min(half_width)));
    build_tlpm_kernel(&params)
}

/// Input sequence feeding output channel `c`: the matching input channel
/// when counts agree, otherwise the mean over input channels.
fn channel_inputs(signal: &Signal, out_channels: usize) -> Vec<Vec<f64>> {
    if signal.n_channels() == out_channels {
        signal.channels().to_vec()
    } else {
        let n = signal.n_channels() as f64;
        let mean: Vec<f64> =
            (0..signal.len()).map(|t| signal.channels().iter().map(|ch| ch[t]).sum::<f64>() / n).collect();
        vec![mean; out_channels]
    }
}

/// Stride-1, length-preserving filtering of each output channel with its
/// kernel row (reflect boundary).
pub fn tlpm_convolve(signal: &Signal, kernel: &TlpmKernel) -> Result<Signal> {
    if kernel.weights.iter().any(|r| r.len() != kernel.params.length) {
        return Err(Error::Shape("kernel rows do not match the declared length".into()));
    }
    let inputs = channel_inputs(signal, kernel.weights.len());
    let channels = inputs
        .iter()
        .zip(&kernel.weights)
        .map(|(x, row)| convolve_same(x, row, kernel.center(), Boundary::Reflect))
        .collect::<Result<Vec<_>>>()?;
    Ok(signal.with_channels_unchecked(channels, signal.sample_rate()))
}

/// Gradients of `Σ upstream ⊙ tlpm_convolve(signal, build_tlpm_kernel(params))`.
#[derive(Debug, Clone, PartialEq)]
pub struct TlpmGradients {
    pub cutoff_logits: Vec<f64>,
    pub mu: Vec<f64>,
    pub attention_logits: Vec<Vec<f64>>,
}

/// Vector-Jacobian product of the TLPM convolution with respect to its
/// parameters, given the upstream gradient `∂L/∂output`.
pub fn tlpm_gradients(signal: &Signal, params: &TlpmParams, upstream: &Signal) -> Result<TlpmGradients> {
    let sets = all_sets(params)?;
    let out_channels = params.out_channels();
    if upstream.n_channels() != out_channels || upstream.len() != signal.len() {
        return Err(Error::Shape(format!(
            "upstream gradient is {}x{}, output is {}x{out_channels}",
            upstream.len(),
            upstream.n_channels(),
            signal.len()
        )));
    }
    let inputs = channel_inputs(signal, out_channels);
    let len = signal.len() as isize;
    let center = params.center() as isize;
    let boundary = Boundary::Reflect;

    // ∂L/∂K[c][j] = Σ_n g_c[n] · x_c[n − (j − center)]
    let dk: Vec<Vec<f64>> = inputs
        .iter()
        .zip(upstream.channels())
        .map(|(x, g)| {
            (0..params.length as isize)
                .map(|j| {
                    (0..len)
                        .map(|n| match boundary.resolve(n - (j - center), len as usize) {
                            Some(i) => g[n as usize] * x[i],
                            None => 0.0,
                        })
                        .sum()
                })
                .collect()
        })
        .collect();

    let attention = softmax_attention(&params.attention_logits);
    let p = params.p_sets();
    let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| x * y).sum() };

    let mut d_cutoff = vec![0.0; p];
    let mut d_mu = vec![0.0; p];
    let mut d_att = Vec::with_capacity(out_channels);
    for (a, g) in attention.iter().zip(&dk) {
        let da: Vec<f64> = sets.iter().map(|s| dot(g, &s.w)).collect();
        let mean: f64 = dot(a, &da);
        d_att.push(a.iter().zip(&da).map(|(ap, dap)| ap * (dap - mean)).collect());
        for (q, set) in sets.iter().enumerate() {
            d_cutoff[q] += a[q] * dot(g, &set.dw_dcutoff);
            d_mu[q] += a[q] * dot(g, &set.dw_dmu);
        }
    }
    let d_logit = d_cutoff.iter().zip(&params.cutoff_logits).map(|(g, &t)| g * cutoff_logit_derivative(t)).collect();
    Ok(TlpmGradients { cutoff_logits: d_logit, mu: d_mu, attention_logits: d_att })
}
