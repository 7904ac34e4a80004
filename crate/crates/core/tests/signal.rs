use num_complex::Complex64;
use proptest::prelude::*;
use taa_core::{convolve_circular, convolve_same, dft, fft, idft, sinc, spectrum_diff, Boundary, Spectrum};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn max_dev(a: &Spectrum, b: &Spectrum) -> f64 {
    a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn signal(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0..10.0f64, 1..=max_len)
}

#[test]
fn sinc_values() {
    assert_eq!(sinc(0.0), 1.0);
    assert_eq!(sinc(1.0), 0.0);
    assert!((sinc(0.5) - 2.0 / std::f64::consts::PI).abs() < 1e-15);
    assert_eq!(sinc(-3.0), 0.0);
}

#[test]
fn dft_examples() {
    let dc = dft(&[1.0, 1.0, 1.0, 1.0]);
    let want = [4.0, 0.0, 0.0, 0.0];
    assert!(dc.coeffs.iter().zip(want).all(|(z, w)| (z - c(w, 0.0)).norm() < 1e-15));
    let flat = dft(&[1.0, 0.0, 0.0, 0.0]);
    assert!(flat.coeffs.iter().all(|z| (z - c(1.0, 0.0)).norm() < 1e-15));
    let cos = dft(&[1.0, 0.0, -1.0, 0.0]);
    let want = [0.0, 2.0, 0.0, 2.0];
    assert!(cos.coeffs.iter().zip(want).all(|(z, w)| (z - c(w, 0.0)).norm() < 1e-15));
}

#[test]
fn idft_examples() {
    let x = idft(&Spectrum::new(vec![c(4.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)])).unwrap();
    assert!(x.iter().all(|v| (v - 1.0).abs() < 1e-15));
    let x = idft(&Spectrum::new(vec![c(0.0, 0.0), c(2.0, 0.0), c(0.0, 0.0), c(2.0, 0.0)])).unwrap();
    assert!(x.iter().zip([1.0, 0.0, -1.0, 0.0]).all(|(v, w)| (v - w).abs() < 1e-15));
    // not conjugate symmetric: the inverse is complex
    assert!(idft(&Spectrum::new(vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)])).is_err());
    assert!(idft(&Spectrum::new(vec![])).is_err());
}

#[test]
fn fft_examples() {
    assert_eq!(fft(&[1.0, 1.0, 1.0, 1.0]).coeffs[0], c(4.0, 0.0));
    let six = [0.3, -1.2, 4.0, 0.5, 2.5, -0.7];
    assert!(max_dev(&fft(&six), &dft(&six)) < 1e-9);
}

#[test]
fn fft_matches_dft_up_to_4096() {
    for n in [511usize, 1000, 1024, 2187, 4096] {
        let x: Vec<f64> = (0..n).map(|i| ((i * 7919) % 101) as f64 / 50.0 - 1.0).collect();
        assert!(max_dev(&fft(&x), &dft(&x)) < 1e-9, "length {n}");
    }
}

#[test]
fn convolve_examples() {
    assert_eq!(convolve_same(&[1.0, 2.0, 3.0], &[1.0], 0, Boundary::Reflect).unwrap(), vec![1.0, 2.0, 3.0]);
    let k = [0.25, 0.5, 0.25];
    assert_eq!(convolve_same(&[1.0; 4], &k, 1, Boundary::Reflect).unwrap(), vec![1.0; 4]);
    assert_eq!(convolve_same(&[0.0, 1.0, 0.0, 0.0], &k, 1, Boundary::Zero).unwrap(), vec![0.25, 0.5, 0.25, 0.0]);
    assert!(convolve_same(&[], &k, 1, Boundary::Reflect).is_err());
    assert!(convolve_same(&[1.0], &[], 0, Boundary::Reflect).is_err());
    assert!(convolve_same(&[1.0], &k, 3, Boundary::Reflect).is_err());
}

#[test]
fn spectrum_diff_examples() {
    let a = Spectrum::new(vec![c(2.0, 0.0), c(0.0, 0.0)]);
    let b = Spectrum::new(vec![c(0.0, 0.0), c(0.0, 2.0)]);
    assert_eq!(spectrum_diff(&a, &b).unwrap(), vec![2.0, 2.0]);
    assert_eq!(spectrum_diff(&a, &a).unwrap(), vec![0.0, 0.0]);
    assert!(spectrum_diff(&a, &Spectrum::new(vec![c(1.0, 0.0)])).is_err());
}

proptest! {
    #[test]
    fn linearity(x in signal(64), seed in prop::collection::vec(-10.0..10.0f64, 64), alpha in -3.0..3.0f64, beta in -3.0..3.0f64) {
        let y = &seed[..x.len()];
        let mix: Vec<f64> = x.iter().zip(y).map(|(a, b)| alpha * a + beta * b).collect();
        let lhs = dft(&mix);
        let (dx, dy) = (dft(&x), dft(y));
        for ((l, a), b) in lhs.coeffs.iter().zip(&dx.coeffs).zip(&dy.coeffs) {
            prop_assert!((l - (a * alpha + b * beta)).norm() < 1e-9);
        }
    }

    #[test]
    fn parseval(x in signal(200)) {
        let energy: f64 = x.iter().map(|v| v * v).sum();
        let spec: f64 = fft(&x).coeffs.iter().map(|z| z.norm_sqr()).sum::<f64>() / x.len() as f64;
        prop_assert!((energy - spec).abs() <= 1e-9 * energy.max(1.0));
    }

    #[test]
    fn fft_equals_dft(x in signal(256)) {
        prop_assert!(max_dev(&fft(&x), &dft(&x)) < 1e-9);
    }

    #[test]
    fn round_trip(x in signal(128)) {
        let back = idft(&fft(&x)).unwrap();
        let num: f64 = x.iter().zip(&back).map(|(a, b)| (a - b) * (a - b)).sum();
        let den: f64 = x.iter().map(|a| a * a).sum();
        prop_assert!(num.sqrt() <= 1e-9 * den.sqrt().max(1e-300) || num < 1e-24);
    }

    #[test]
    fn conjugate_symmetry(x in signal(100)) {
        let s = fft(&x);
        let n = s.len();
        for k in 0..n {
            prop_assert!((s.coeffs[k] - s.coeffs[(n - k) % n].conj()).norm() < 1e-9);
        }
    }

    #[test]
    fn delta_kernel_is_identity(x in signal(50), half in 0usize..5) {
        let mut k = vec![0.0; 2 * half + 1];
        k[half] = 1.0;
        for b in [Boundary::Reflect, Boundary::Zero, Boundary::Circular] {
            prop_assert_eq!(&convolve_same(&x, &k, half, b).unwrap(), &x);
        }
    }

    #[test]
    fn convolution_theorem(x in signal(64), h in prop::collection::vec(-2.0..2.0f64, 1..8)) {
        prop_assume!(h.len() <= x.len());
        let y = convolve_circular(&x, &h, 0).unwrap();
        let mut padded = h.clone();
        padded.resize(x.len(), 0.0);
        let (dy, dx, dh) = (dft(&y), dft(&x), dft(&padded));
        for k in 0..x.len() {
            prop_assert!((dy.coeffs[k] - dx.coeffs[k] * dh.coeffs[k]).norm() < 1e-8);
        }
    }

    #[test]
    fn spectrum_diff_matches_per_bin(a in prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64), 32), b in prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64), 32)) {
        let sa = Spectrum::new(a.iter().map(|&(r, i)| c(r, i)).collect());
        let sb = Spectrum::new(b.iter().map(|&(r, i)| c(r, i)).collect());
        let d = spectrum_diff(&sa, &sb).unwrap();
        for k in 0..32 {
            let want = ((a[k].0.hypot(a[k].1)) - (b[k].0.hypot(b[k].1))).abs();
            prop_assert!((d[k] - want).abs() < 1e-12);
        }
    }
}
