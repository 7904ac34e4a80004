//! Learning cutoff frequencies by gradient descent on synthetic
//! classification tasks.
//!
//! Each instance is low-pass filtered with a Hann-tapered sinc kernel and
//! decimated by `factor`; the decimated sequence is the instance's feature
//! vector. A softmax over negative distances to the class centroids gives a
//! soft nearest-centroid classifier whose mean cross-entropy is the task
//! loss. Its gradient flows through the features, the centroids and the
//! kernel taps to the cutoff(s).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::downsample::{lpf_uniform_sample_with, DownsampleSpec};
use crate::error::{Error, Result};
use crate::kernel::{
    build_sinc_kernel, cutoff_logit_derivative, grad_kernel_wrt_cutoff, CutoffFrequency, KernelSpec, Taper,
};
use crate::signal::{Boundary, Signal};
use crate::tlpm::softmax;

/// White-noise floor relative to the class tone amplitude.
pub const NOISE_FLOOR: f64 = 0.01;
/// Smoothing inside the centroid distance, `√(‖f − μ‖² + ε²)`.
const DISTANCE_EPS: f64 = 1e-9;
/// Central-difference step for the finite-difference gradient source.
pub const FD_STEP: f64 = 1e-6;

/// A frequency interval in cycles per sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub low: f64,
    pub high: f64,
}

impl Band {
    pub fn new(low: f64, high: f64) -> Self {
        Self { low, high }
    }

    fn overlaps(&self, other: &Band) -> bool {
        self.low < other.high && other.low < self.high
    }

    fn check(&self, field: &str) -> Result<()> {
        if !(self.low > 0.0 && self.low < self.high && self.high < 0.5) {
            return Err(Error::Invalid(format!(
                "{field}: band [{}, {}] must satisfy 0 < low < high < 0.5",
                self.low, self.high
            )));
        }
        Ok(())
    }
}

fn default_class_amplitude() -> f64 {
    1.0
}

fn default_tones_per_class() -> usize {
    2
}

fn default_noise_tones() -> usize {
    3
}

/// Recipe for a labeled synthetic dataset.
///
/// Each class owns fixed tones (frequency and phase drawn once per class
/// from its discriminative band). Every instance adds `noise_tones` tones
/// drawn per instance from the shared noise band with random phase, plus a
/// white-noise floor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticTaskSpec {
    pub n_classes: usize,
    /// Instance length `T`.
    #[serde(rename = "T", alias = "length")]
    pub length: usize,
    pub discriminative_bands: Vec<Band>,
    pub noise_band: Band,
    pub noise_amplitude: f64,
    pub factor: usize,
    pub samples_per_class: usize,
    pub rng_seed: u64,
    /// Amplitude of every class tone.
    #[serde(default = "default_class_amplitude")]
    pub class_amplitude: f64,
    #[serde(default = "default_tones_per_class")]
    pub tones_per_class: usize,
    #[serde(default = "default_noise_tones")]
    pub noise_tones: usize,
}

impl SyntheticTaskSpec {
    /// Class energy below `0.5/factor`, aliasing noise above it.
    pub fn bundled_low_band(rng_seed: u64) -> Self {
        Self {
            n_classes: 2,
            length: 128,
            discriminative_bands: vec![Band::new(0.02, 0.05), Band::new(0.06, 0.1)],
            noise_band: Band::new(0.15, 0.45),
            noise_amplitude: 1.0,
            factor: 4,
            samples_per_class: 40,
            rng_seed,
            class_amplitude: default_class_amplitude(),
            tones_per_class: default_tones_per_class(),
            noise_tones: default_noise_tones(),
        }
    }

    /// Class energy just above `0.5/factor`, noise higher still.
    pub fn bundled_high_band(rng_seed: u64) -> Self {
        Self {
            discriminative_bands: vec![Band::new(0.17, 0.21), Band::new(0.22, 0.26)],
            noise_band: Band::new(0.32, 0.45),
            ..Self::bundled_low_band(rng_seed)
        }
    }

    /// Two low-band classes and two high-band classes over weak noise.
    pub fn bundled_mixed(rng_seed: u64) -> Self {
        Self {
            n_classes: 4,
            discriminative_bands: vec![
                Band::new(0.02, 0.04),
                Band::new(0.05, 0.08),
                Band::new(0.17, 0.21),
                Band::new(0.22, 0.26),
            ],
            noise_band: Band::new(0.1, 0.15),
            noise_amplitude: 0.5,
            samples_per_class: 20,
            ..Self::bundled_low_band(rng_seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_classes < 2 {
            return Err(Error::Invalid(format!("n_classes: {} < 2", self.n_classes)));
        }
        if self.discriminative_bands.len() != self.n_classes {
            return Err(Error::Invalid(format!(
                "discriminative_bands: {} bands for {} classes",
                self.discriminative_bands.len(),
                self.n_classes
            )));
        }
        self.noise_band.check("noise_band")?;
        for (c, band) in self.discriminative_bands.iter().enumerate() {
            band.check(&format!("discriminative_bands[{c}]"))?;
            if band.overlaps(&self.noise_band) {
                return Err(Error::Invalid(format!(
                    "discriminative_bands[{c}]: band [{}, {}] overlaps noise_band [{}, {}]",
                    band.low, band.high, self.noise_band.low, self.noise_band.high
                )));
            }
            if let Some(d) = self.discriminative_bands[..c].iter().position(|b| b.overlaps(band)) {
                return Err(Error::Invalid(format!(
                    "discriminative_bands[{c}]: band [{}, {}] overlaps discriminative_bands[{d}]",
                    band.low, band.high
                )));
            }
        }
        if self.length == 0 {
            return Err(Error::Invalid("T: instance length must be >= 1".into()));
        }
        if self.factor == 0 || self.factor > self.length {
            return Err(Error::Invalid(format!("factor: {} must lie in [1, T = {}]", self.factor, self.length)));
        }
        if self.samples_per_class < 2 {
            return Err(Error::Invalid("samples_per_class: need at least 2".into()));
        }
        if !(self.class_amplitude.is_finite() && self.class_amplitude > 0.0) {
            return Err(Error::Invalid(format!("class_amplitude: {}", self.class_amplitude)));
        }
        if !(self.noise_amplitude.is_finite() && self.noise_amplitude >= 0.0) {
            return Err(Error::Invalid(format!("noise_amplitude: {}", self.noise_amplitude)));
        }
        if self.tones_per_class == 0 {
            return Err(Error::Invalid("tones_per_class: need at least 1".into()));
        }
        Ok(())
    }
}

/// Labeled instances.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub instances: Vec<Signal>,
    pub labels: Vec<usize>,
    pub n_classes: usize,
}

impl Dataset {
    pub fn new(instances: Vec<Signal>, labels: Vec<usize>) -> Result<Self> {
        if instances.len() != labels.len() {
            return Err(Error::Shape(format!("{} instances but {} labels", instances.len(), labels.len())));
        }
        let n_classes = labels.iter().max().map_or(0, |m| m + 1);
        Ok(Self { instances, labels, n_classes })
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// Same instances with labels replaced.
    pub fn with_labels(&self, labels: Vec<usize>) -> Result<Self> {
        Self::new(self.instances.clone(), labels)
    }
}

fn tone(freq: f64, phase: f64, amplitude: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |t| amplitude * (2.0 * std::f64::consts::PI * freq * t as f64 + phase).cos())
}

/// Deterministic labeled dataset, class-major order.
pub fn gen_synthetic(spec: &SyntheticTaskSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let two_pi = 2.0 * std::f64::consts::PI;
    let templates: Vec<Vec<f64>> = spec
        .discriminative_bands
        .iter()
        .map(|band| {
            let mut x = vec![0.0; spec.length];
            for _ in 0..spec.tones_per_class {
                let f = rng.random_range(band.low..band.high);
                let phase = rng.random_range(0.0..two_pi);
                x.iter_mut().zip(tone(f, phase, spec.class_amplitude, spec.length)).for_each(|(a, b)| *a += b);
            }
            x
        })
        .collect();
    let floor = Normal::new(0.0, NOISE_FLOOR * spec.class_amplitude).expect("positive std");
    let mut instances = Vec::with_capacity(spec.n_classes * spec.samples_per_class);
    let mut labels = Vec::with_capacity(instances.capacity());
    for (class, template) in templates.iter().enumerate() {
        for _ in 0..spec.samples_per_class {
            let mut x = template.clone();
            for _ in 0..spec.noise_tones {
                let f = rng.random_range(spec.noise_band.low..spec.noise_band.high);
                let phase = rng.random_range(0.0..two_pi);
                x.iter_mut().zip(tone(f, phase, spec.noise_amplitude, spec.length)).for_each(|(a, b)| *a += b);
            }
            x.iter_mut().for_each(|v| *v += floor.sample(&mut rng));
            instances.push(Signal::mono(x)?);
            labels.push(class);
        }
    }
    Dataset::new(instances, labels)
}

/// Kernel taps per unit of decimation factor.
pub const TAPS_PER_FACTOR: usize = 8;

/// Tap count of the feature kernel at `factor`.
pub fn feature_taps(factor: usize) -> usize {
    TAPS_PER_FACTOR * factor + 1
}

/// The feature kernel: a Hann-tapered, DC-normalized sinc.
///
/// The taper keeps the loss smooth in the cutoff; a plainly truncated sinc
/// makes it ripple with a period of about one over the kernel length.
pub fn feature_kernel(cutoff: CutoffFrequency, factor: usize) -> KernelSpec {
    KernelSpec::sinc(cutoff, feature_taps(factor)).with_taper(Taper::Hann)
}

/// Features of one instance: the filtered signal at every `factor`-th step,
/// channels concatenated.
pub fn instance_features(instance: &Signal, cutoff: CutoffFrequency, factor: usize) -> Result<Vec<f64>> {
    let spec = DownsampleSpec::stride(factor);
    let sampled = lpf_uniform_sample_with(instance, &spec, &feature_kernel(cutoff, factor))?;
    Ok(sampled.into_channels().into_iter().flatten().collect())
}

/// Per-instance linear map from kernel taps to features:
/// `features = design · taps`.
#[derive(Debug, Clone)]
struct Design {
    rows: Vec<Vec<f64>>,
}

impl Design {
    fn new(instance: &Signal, factor: usize, taps: usize) -> Self {
        let len = instance.len();
        let center = (taps / 2) as isize;
        let mut rows = Vec::with_capacity(len.div_ceil(factor) * instance.n_channels());
        for ch in instance.channels() {
            for n in (0..len).step_by(factor) {
                let row = (0..taps as isize)
                    .map(|m| {
                        let i =
                            Boundary::Reflect.resolve(n as isize - (m - center), len).expect("reflect always resolves");
                        ch[i]
                    })
                    .collect();
                rows.push(row);
            }
        }
        Self { rows }
    }

    fn apply(&self, taps: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| r.iter().zip(taps).map(|(a, b)| a * b).sum()).collect()
    }
}

/// A dataset prepared for repeated loss evaluation at one factor.
#[derive(Debug, Clone)]
pub struct Problem {
    designs: Vec<Design>,
    labels: Vec<usize>,
    n_classes: usize,
    factor: usize,
}

impl Problem {
    pub fn new(dataset: &Dataset, factor: usize) -> Result<Self> {
        if dataset.is_empty() {
            return Err(Error::Degenerate("empty dataset".into()));
        }
        if factor == 0 {
            return Err(Error::Invalid("factor must be >= 1".into()));
        }
        let len = dataset.instances[0].len();
        let n_ch = dataset.instances[0].n_channels();
        if dataset.instances.iter().any(|x| x.len() != len || x.n_channels() != n_ch) {
            return Err(Error::Shape("instances differ in shape".into()));
        }
        if factor > len {
            return Err(Error::Infeasible(format!("factor {factor} exceeds instance length {len}")));
        }
        let mut counts = vec![0usize; dataset.n_classes];
        dataset.labels.iter().for_each(|&l| counts[l] += 1);
        if dataset.n_classes < 2 || counts.contains(&0) {
            return Err(Error::Degenerate(format!("class counts {counts:?}; need >= 2 non-empty classes")));
        }
        Ok(Self {
            designs: dataset.instances.iter().map(|x| Design::new(x, factor, feature_taps(factor))).collect(),
            labels: dataset.labels.clone(),
            n_classes: dataset.n_classes,
            factor,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    fn cutoff_for(&self, cutoffs: &[CutoffFrequency], i: usize) -> CutoffFrequency {
        if cutoffs.len() == 1 {
            cutoffs[0]
        } else {
            cutoffs[i]
        }
    }

    fn check_cutoffs(&self, cutoffs: &[CutoffFrequency]) -> Result<()> {
        if cutoffs.len() == 1 || cutoffs.len() == self.len() {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "{} cutoffs for {} instances; pass one or one per instance",
                cutoffs.len(),
                self.len()
            )))
        }
    }

    /// Features of every instance.
    pub fn features(&self, cutoffs: &[CutoffFrequency]) -> Result<Vec<Vec<f64>>> {
        self.check_cutoffs(cutoffs)?;
        let mut cache: Option<(f64, Vec<f64>)> = None;
        self.designs
            .iter()
            .enumerate()
            .map(|(i, d)| {
                let fc = self.cutoff_for(cutoffs, i);
                let taps = match &cache {
                    Some((v, t)) if *v == fc.value() => t.clone(),
                    _ => {
                        let t = build_sinc_kernel(&feature_kernel(fc, self.factor))?.weights;
                        cache = Some((fc.value(), t.clone()));
                        t
                    }
                };
                Ok(d.apply(&taps))
            })
            .collect()
    }

    fn centroids(&self, features: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<usize>) {
        let dim = features[0].len();
        let mut sums = vec![vec![0.0; dim]; self.n_classes];
        let mut counts = vec![0usize; self.n_classes];
        for (f, &y) in features.iter().zip(&self.labels) {
            sums[y].iter_mut().zip(f).for_each(|(s, v)| *s += v);
            counts[y] += 1;
        }
        for (s, &n) in sums.iter_mut().zip(&counts) {
            s.iter_mut().for_each(|v| *v /= n as f64);
        }
        (sums, counts)
    }

    /// Distances from every feature vector to every centroid.
    fn distances(features: &[Vec<f64>], centroids: &[Vec<f64>]) -> Vec<Vec<f64>> {
        features
            .iter()
            .map(|f| {
                centroids
                    .iter()
                    .map(|mu| {
                        let s: f64 = f.iter().zip(mu).map(|(a, b)| (a - b) * (a - b)).sum();
                        (s + DISTANCE_EPS * DISTANCE_EPS).sqrt()
                    })
                    .collect()
            })
            .collect()
    }

    fn loss_from_features(&self, features: &[Vec<f64>]) -> f64 {
        let (centroids, _) = self.centroids(features);
        let dist = Self::distances(features, &centroids);
        let total: f64 = dist
            .iter()
            .zip(&self.labels)
            .map(|(d, &y)| {
                let neg: Vec<f64> = d.iter().map(|v| -v).collect();
                let max = neg.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lse = max + neg.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
                lse - neg[y]
            })
            .sum();
        total / self.len() as f64
    }

    /// Mean cross-entropy of the soft nearest-centroid classifier.
    pub fn loss(&self, cutoffs: &[CutoffFrequency]) -> Result<f64> {
        Ok(self.loss_from_features(&self.features(cutoffs)?))
    }

    /// Fraction of instances whose nearest centroid is their own class.
    pub fn accuracy(&self, cutoffs: &[CutoffFrequency]) -> Result<f64> {
        let features = self.features(cutoffs)?;
        let (centroids, _) = self.centroids(&features);
        let dist = Self::distances(&features, &centroids);
        let correct = dist
            .iter()
            .zip(&self.labels)
            .filter(|(d, &y)| {
                let best =
                    d.iter().enumerate().fold((0, f64::INFINITY), |acc, (c, &v)| if v < acc.1 { (c, v) } else { acc });
                best.0 == y
            })
            .count();
        Ok(correct as f64 / self.len() as f64)
    }

    /// `∂loss/∂cutoff` for each supplied cutoff (one global value or one per
    /// instance).
    pub fn grad(&self, cutoffs: &[CutoffFrequency]) -> Result<Vec<f64>> {
        let features = self.features(cutoffs)?;
        let n = self.len() as f64;
        let (centroids, counts) = self.centroids(&features);
        let dist = Self::distances(&features, &centroids);
        let dim = features[0].len();

        // ∂loss/∂d[i][c] = (δ_{c,y_i} − p_ic) / n
        let dd: Vec<Vec<f64>> = dist
            .iter()
            .zip(&self.labels)
            .map(|(d, &y)| {
                let neg: Vec<f64> = d.iter().map(|v| -v).collect();
                softmax(&neg).into_iter().enumerate().map(|(c, p)| ((c == y) as u8 as f64 - p) / n).collect()
            })
            .collect();

        // direct path through f_i, and accumulated centroid gradients
        let mut df = vec![vec![0.0; dim]; features.len()];
        let mut dmu = vec![vec![0.0; dim]; self.n_classes];
        for (i, f) in features.iter().enumerate() {
            for (c, mu) in centroids.iter().enumerate() {
                let coef = dd[i][c] / dist[i][c];
                for k in 0..dim {
                    let g = coef * (f[k] - mu[k]);
                    df[i][k] += g;
                    dmu[c][k] -= g;
                }
            }
        }
        for (i, &y) in self.labels.iter().enumerate() {
            let inv = 1.0 / counts[y] as f64;
            for k in 0..dim {
                df[i][k] += dmu[y][k] * inv;
            }
        }

        let mut out = vec![0.0; cutoffs.len()];
        let mut cache: Option<(f64, Vec<f64>)> = None;
        for (i, design) in self.designs.iter().enumerate() {
            let fc = self.cutoff_for(cutoffs, i);
            let dk = match &cache {
                Some((v, t)) if *v == fc.value() => t.clone(),
                _ => {
                    let t = grad_kernel_wrt_cutoff(&feature_kernel(fc, self.factor))?;
                    cache = Some((fc.value(), t.clone()));
                    t
                }
            };
            let dfeat = design.apply(&dk);
            let g: f64 = dfeat.iter().zip(&df[i]).map(|(a, b)| a * b).sum();
            out[if cutoffs.len() == 1 { 0 } else { i }] += g;
        }
        Ok(out)
    }
}

/// Mean cross-entropy after low-pass decimation at `cutoffs` (one global value
/// or one per instance).
pub fn task_loss(dataset: &Dataset, cutoffs: &[CutoffFrequency], factor: usize) -> Result<f64> {
    Problem::new(dataset, factor)?.loss(cutoffs)
}

/// Analytic `∂task_loss/∂cutoff`.
pub fn grad_cutoff(dataset: &Dataset, cutoffs: &[CutoffFrequency], factor: usize) -> Result<Vec<f64>> {
    Problem::new(dataset, factor)?.grad(cutoffs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerMode {
    #[default]
    Global,
    PerInstance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradSource {
    #[default]
    Analytic,
    FiniteDifference,
}

fn default_plateau_window() -> usize {
    5
}

fn default_plateau_tolerance() -> f64 {
    1e-6
}

fn default_true() -> bool {
    true
}

/// Plain gradient descent on cutoff logits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    /// Initial logit; the cutoff starts at `0.5·σ(init_logit)`.
    pub init_logit: f64,
    #[serde(default)]
    pub mode: LearnerMode,
    #[serde(default)]
    pub grad_source: GradSource,
    /// Epochs inspected by the plateau test.
    #[serde(default = "default_plateau_window")]
    pub plateau_window: usize,
    /// Largest loss spread over the plateau window that counts as converged.
    #[serde(default = "default_plateau_tolerance")]
    pub plateau_tolerance: f64,
    /// Stop as soon as the plateau test passes.
    #[serde(default = "default_true")]
    pub stop_on_plateau: bool,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1.0,
            epochs: 2000,
            init_logit: -1.0,
            mode: LearnerMode::Global,
            grad_source: GradSource::Analytic,
            plateau_window: default_plateau_window(),
            plateau_tolerance: default_plateau_tolerance(),
            stop_on_plateau: false,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::Invalid(format!("learning_rate: {}", self.learning_rate)));
        }
        if self.epochs == 0 {
            return Err(Error::Invalid("epochs: need at least 1".into()));
        }
        if !self.init_logit.is_finite() {
            return Err(Error::Invalid(format!("init_logit: {}", self.init_logit)));
        }
        if self.plateau_window < 2 {
            return Err(Error::Invalid("plateau_window: need at least 2".into()));
        }
        if self.plateau_tolerance.is_nan() || self.plateau_tolerance < 0.0 {
            return Err(Error::Invalid(format!("plateau_tolerance: {}", self.plateau_tolerance)));
        }
        Ok(())
    }
}

/// Record of one `fit` run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainTrace {
    /// Loss at the start of every epoch run.
    pub losses: Vec<f64>,
    /// One cutoff (global mode) or one per instance.
    pub final_cutoffs: Vec<CutoffFrequency>,
    pub final_logits: Vec<f64>,
    /// Loss at the final cutoffs.
    pub final_loss: f64,
    /// The loss plateaued and never rose by more than `1e-8` along the way.
    pub converged: bool,
}

/// A run that produced a non-finite loss; carries the trace up to that point.
#[derive(Debug, Clone, Error)]
#[error("training diverged at epoch {epoch}: {reason}")]
pub struct FitError {
    pub epoch: usize,
    pub reason: String,
    pub trace: TrainTrace,
}

/// Monotonicity slack for the convergence flag.
const DESCENT_SLACK: f64 = 1e-8;

fn plateaued(losses: &[f64], window: usize, tol: f64) -> bool {
    if losses.len() < window {
        return false;
    }
    let tail = &losses[losses.len() - window..];
    let hi = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = tail.iter().copied().fold(f64::INFINITY, f64::min);
    hi - lo < tol
}

fn cutoffs_of(logits: &[f64]) -> Result<Vec<CutoffFrequency>> {
    logits.iter().map(|&t| CutoffFrequency::from_logit(t)).collect()
}

fn fd_logit_grad(problem: &Problem, logits: &[f64]) -> Result<Vec<f64>> {
    let mut g = Vec::with_capacity(logits.len());
    let mut probe = logits.to_vec();
    for i in 0..logits.len() {
        probe[i] = logits[i] + FD_STEP;
        let plus = problem.loss(&cutoffs_of(&probe)?)?;
        probe[i] = logits[i] - FD_STEP;
        let minus = problem.loss(&cutoffs_of(&probe)?)?;
        probe[i] = logits[i];
        g.push((plus - minus) / (2.0 * FD_STEP));
    }
    Ok(g)
}

/// Gradient descent on the cutoff logits.
///
/// In per-instance mode each logit follows the gradient of the summed
/// (rather than mean) loss, so a uniform move of every instance takes the
/// same step as the global mode would.
pub fn fit(dataset: &Dataset, config: &LearnerConfig, factor: usize) -> std::result::Result<TrainTrace, FitError> {
    let fail = |reason: String| FitError {
        epoch: 0,
        reason,
        trace: TrainTrace {
            losses: vec![],
            final_cutoffs: vec![],
            final_logits: vec![],
            final_loss: f64::NAN,
            converged: false,
        },
    };
    config.validate().map_err(|e| fail(e.to_string()))?;
    let problem = Problem::new(dataset, factor).map_err(|e| fail(e.to_string()))?;
    let n_params = match config.mode {
        LearnerMode::Global => 1,
        LearnerMode::PerInstance => problem.len(),
    };
    // per-instance runs descend on a shared logit until it plateaus, then
    // let every logit move on its own
    let mut tied = n_params > 1;
    let mut phase_start = 0;
    let mut logits = vec![config.init_logit; n_params];
    let mut losses = Vec::with_capacity(config.epochs);
    let mut monotone = true;

    let snapshot = |losses: &[f64], logits: &[f64], final_loss: f64, converged: bool| TrainTrace {
        losses: losses.to_vec(),
        final_cutoffs: cutoffs_of(logits).unwrap_or_default(),
        final_logits: logits.to_vec(),
        final_loss,
        converged,
    };

    for epoch in 0..config.epochs {
        let step = (|| -> Result<(f64, Vec<f64>)> {
            let cutoffs = cutoffs_of(&logits)?;
            let loss = problem.loss(&cutoffs)?;
            let grad = match config.grad_source {
                GradSource::Analytic => {
                    problem.grad(&cutoffs)?.iter().zip(&logits).map(|(g, &t)| g * cutoff_logit_derivative(t)).collect()
                }
                GradSource::FiniteDifference => fd_logit_grad(&problem, &logits)?,
            };
            Ok((loss, grad))
        })();
        let (loss, grad) = match step {
            Ok(v) => v,
            Err(e) => {
                return Err(FitError {
                    epoch,
                    reason: e.to_string(),
                    trace: snapshot(&losses, &logits, f64::NAN, false),
                })
            }
        };
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(FitError {
                epoch,
                reason: format!("non-finite loss {loss}"),
                trace: snapshot(&losses, &logits, f64::NAN, false),
            });
        }
        if let Some(&prev) = losses.last() {
            if loss > prev + DESCENT_SLACK {
                monotone = false;
            }
        }
        losses.push(loss);
        if plateaued(&losses[phase_start..], config.plateau_window, config.plateau_tolerance) {
            if tied {
                tied = false;
                phase_start = losses.len();
            } else if config.stop_on_plateau {
                break;
            }
        }
        if tied {
            let step = config.learning_rate * grad.iter().sum::<f64>();
            logits.iter_mut().for_each(|t| *t -= step);
        } else {
            let scale = config.learning_rate * n_params as f64;
            for (t, g) in logits.iter_mut().zip(&grad) {
                *t -= scale * g;
            }
        }
    }

    let final_loss = cutoffs_of(&logits).and_then(|c| problem.loss(&c)).unwrap_or(f64::NAN);
    if !final_loss.is_finite() {
        return Err(FitError {
            epoch: losses.len(),
            reason: format!("non-finite final loss {final_loss}"),
            trace: snapshot(&losses, &logits, final_loss, false),
        });
    }
    let converged =
        monotone && !tied && plateaued(&losses[phase_start..], config.plateau_window, config.plateau_tolerance);
    Ok(snapshot(&losses, &logits, final_loss, converged))
}

/// One row of a fixed-cutoff sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub cutoff: f64,
    pub loss: f64,
    pub accuracy: f64,
}

/// Loss and hard nearest-centroid accuracy at each fixed global cutoff.
pub fn cutoff_sweep(dataset: &Dataset, grid: &[CutoffFrequency], factor: usize) -> Result<Vec<SweepRow>> {
    if grid.is_empty() {
        return Err(Error::Empty("cutoff grid"));
    }
    let problem = Problem::new(dataset, factor)?;
    grid.iter()
        .map(|&fc| Ok(SweepRow { cutoff: fc.value(), loss: problem.loss(&[fc])?, accuracy: problem.accuracy(&[fc])? }))
        .collect()
}
