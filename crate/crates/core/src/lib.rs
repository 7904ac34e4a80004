//! Anti-aliased temporal downsampling for multi-channel feature sequences.
//!
//! The crate builds sinc and Gaussian low-pass kernels, fuses them with
//! sampling, pooling and mixture-convolution operators, measures aliasing in
//! the frequency domain, and learns cutoff frequencies by gradient descent.

pub mod aliasing;
pub mod downsample;
pub mod error;
pub mod kernel;
pub mod learner;
pub mod signal;
pub mod tlpm;

pub use aliasing::{aliasing_error, separability_score, spectrum_heatmap, AliasingReport};
pub use downsample::{
    average_pool, impulse_train_sample, low_pass_weights, lpf_average_pool, lpf_average_pool_with, lpf_uniform_sample,
    lpf_uniform_sample_with, lpf_uniform_sample_with_boundary, max_pool, sinc_reconstruct, uniform_sample,
    DownsampleSpec,
};
pub use error::{Error, Result};
pub use kernel::{
    apply_lpf, apply_lpf_with, build_gaussian_kernel, build_kernel, build_sinc_kernel, grad_kernel_wrt_cutoff,
    kernel_frequency_response, CutoffFrequency, KernelFamily, KernelSpec, LpfKernel, Taper,
};
pub use learner::{
    cutoff_sweep, fit, gen_synthetic, grad_cutoff, task_loss, Dataset, FitError, GradSource, LearnerConfig,
    LearnerMode, SweepRow, SyntheticTaskSpec, TrainTrace,
};
pub use signal::{convolve_circular, convolve_same, dft, fft, idft, sinc, spectrum_diff, Boundary, Signal, Spectrum};
pub use tlpm::{
    build_tlpm_kernel, softmax_attention, tlpm_convolve, tlpm_gradients, truncate_weights, TlpmGradients, TlpmKernel,
    TlpmParams, Truncation,
};
