use std::f64::consts::PI;

use proptest::prelude::*;
use pqrst::evaluate::{classify_segment, cross_correlation, segmentation_metrics, Templates};
use pqrst::ingest::{mask_to_spans, rasterize, AnnotationSet, Span};
use pqrst::neural::{lstm_cell, LstmParams};
use pqrst::signal::{bandpass, normalize};
use pqrst::spectral::dft;
use pqrst::transforms::{euler_diff, gauss_legendre_rule, gl_smooth, hilbert};
use pqrst::{LabelMask, SampledSignal, WaveClass};

const FS: f64 = 250.0;

fn sig(x: Vec<f64>) -> SampledSignal {
    SampledSignal::new(x, FS).unwrap()
}

fn rms_diff(a: &[f64], b: &[f64]) -> f64 {
    (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt()
}

fn samples(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0..5.0f64, len)
}

/// Random samples with nonzero variance.
fn varied(len: usize) -> impl Strategy<Value = Vec<f64>> {
    samples(len).prop_filter("needs variance", |x| {
        let m = x.iter().sum::<f64>() / x.len() as f64;
        x.iter().map(|v| (v - m).powi(2)).sum::<f64>() > 1e-3
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parseval(x in samples(512)) {
        let spec = dft(&sig(x.clone()), 512).unwrap();
        let m = spec.mags();
        // one-sided magnitudes: DC and Nyquist once, every other bin twice
        let two_sided: f64 = m[0].powi(2) + m[256].powi(2) + 2.0 * m[1..256].iter().map(|v| v * v).sum::<f64>();
        let energy: f64 = x.iter().map(|v| v * v).sum();
        prop_assert!((two_sided / 512.0 - energy).abs() <= 1e-9 * energy.max(1e-300));
    }

    #[test]
    fn dft_magnitude_scales(x in samples(300), a in -4.0..4.0f64) {
        let base = dft(&sig(x.clone()), 512).unwrap();
        let scaled = dft(&sig(x.iter().map(|v| a * v).collect()), 512).unwrap();
        for (s, b) in scaled.mags().iter().zip(base.mags()) {
            prop_assert!((s - a.abs() * b).abs() <= 1e-9 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn normalize_is_idempotent(x in varied(200)) {
        let once = normalize(&sig(x)).unwrap();
        let twice = normalize(&once).unwrap();
        prop_assert!(rms_diff(once.samples(), twice.samples()) < 1e-9);
    }

    #[test]
    fn bandpass_is_linear(x in samples(256), y in samples(256), a in -3.0..3.0f64, b in -3.0..3.0f64) {
        let combo: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
        let lhs = bandpass(&sig(combo), 0.5, 50.0).unwrap();
        let bx = bandpass(&sig(x), 0.5, 50.0).unwrap();
        let by = bandpass(&sig(y), 0.5, 50.0).unwrap();
        let rhs: Vec<f64> = bx.samples().iter().zip(by.samples()).map(|(p, q)| a * p + b * q).collect();
        prop_assert!(rms_diff(lhs.samples(), &rhs) < 1e-9);
    }

    #[test]
    fn euler_is_linear(x in samples(100), y in samples(100), a in -3.0..3.0f64, b in -3.0..3.0f64, dt in 0.004..0.05f64) {
        let combo: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
        let lhs = euler_diff(&sig(combo), dt).unwrap();
        let dx = euler_diff(&sig(x), dt).unwrap();
        let dy = euler_diff(&sig(y), dt).unwrap();
        for ((l, p), q) in lhs.samples().iter().zip(dx.samples()).zip(dy.samples()) {
            prop_assert!((l - (a * p + b * q)).abs() <= 1e-12 * (1.0 + (a * p).abs() + (b * q).abs()));
        }
    }

    #[test]
    fn gl_smooth_shift_equivariant(x in samples(120), shift in 1usize..20) {
        // y[i] = x[i - shift]; interior of y's smoothing equals x's shifted
        let mut y = vec![0.0; shift];
        y.extend_from_slice(&x);
        let sx = gl_smooth(&sig(x.clone()), 0.04, 5).unwrap();
        let sy = gl_smooth(&sig(y), 0.04, 5).unwrap();
        let margin = 6;
        for i in margin..x.len() - margin {
            prop_assert!((sy.samples()[i + shift] - sx.samples()[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn hilbert_envelope_of_scaled_cosine(amp in -10.0..10.0f64, bin in 4usize..120) {
        prop_assume!(amp.abs() > 1e-3);
        let n = 1000;
        let f = bin as f64 * FS / n as f64;
        let x: Vec<f64> = (0..n).map(|i| amp * (2.0 * PI * f * i as f64 / FS).cos()).collect();
        let env = hilbert(&sig(x)).unwrap().envelope;
        let edge = n / 20;
        for v in &env[edge..n - edge] {
            prop_assert!((v - amp.abs()).abs() < 1e-3);
        }
    }

    #[test]
    fn lstm_state_is_bounded(
        x in prop::collection::vec(-1e3..1e3f64, 3),
        h in prop::collection::vec(-1.0..1.0f64, 4),
        c in prop::collection::vec(-50.0..50.0f64, 4),
        w in prop::collection::vec(-20.0..20.0f64, 4 * 4 * 7),
        b in prop::collection::vec(-20.0..20.0f64, 16),
    ) {
        let p = LstmParams { input: 3, hidden: 4, weight: w, bias_ih: b.clone(), bias_hh: b };
        let (h_t, _, gates) = lstm_cell(&x, &h, &c, &p).unwrap();
        prop_assert!(h_t.iter().all(|v| v.abs() <= 1.0));
        for g in [&gates.input, &gates.forget, &gates.output] {
            prop_assert!(g.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn xcorr_matches_brute_force(x in samples(40), y in samples(30), max_lag in 0usize..39) {
        let c = cross_correlation(&x, &y, max_lag).unwrap();
        for (l, r) in c.lags.iter().zip(&c.raw) {
            let mut acc = 0.0;
            for t in 0..x.len() as i64 {
                let j = t - l;
                if (0..y.len() as i64).contains(&j) {
                    acc += x[t as usize] * y[j as usize];
                }
            }
            prop_assert!((acc - r).abs() < 1e-12 * (1.0 + acc.abs()));
        }
    }

    #[test]
    fn xcorr_zero_lag_is_energy(x in varied(50)) {
        let c = cross_correlation(&x, &x, 5).unwrap();
        let energy: f64 = x.iter().map(|v| v * v).sum();
        prop_assert!((c.raw[5] - energy).abs() < 1e-9 * energy);
        prop_assert!((c.normalized[5] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn accuracy_is_symmetric(pairs in prop::collection::vec((0u8..2, 0u8..2), 1..200)) {
        let (p, t): (Vec<u8>, Vec<u8>) = pairs.into_iter().unzip();
        let a = segmentation_metrics(&p, &t).unwrap();
        let b = segmentation_metrics(&t, &p).unwrap();
        prop_assert_eq!(a.accuracy, b.accuracy);
        prop_assert_eq!(a.iou, b.iou);
        prop_assert!((0.0..=1.0).contains(&a.accuracy) && (0.0..=1.0).contains(&a.iou) && (0.0..=1.0).contains(&a.f1));
    }

    #[test]
    fn classification_is_scale_invariant(x in varied(40), k in 0.01..100.0f64) {
        let t = Templates::default();
        let a = classify_segment(&x, &t).unwrap();
        let scaled: Vec<f64> = x.iter().map(|v| k * v).collect();
        let b = classify_segment(&scaled, &t).unwrap();
        prop_assert_eq!(a.class, b.class);
        prop_assert!((a.score - b.score).abs() < 1e-9);
    }

    #[test]
    fn rasterize_round_trip_is_idempotent(
        spans in prop::collection::vec((0.0..3.9f64, 0.005..0.5f64, 0usize..3), 0..12),
    ) {
        let spans = spans
            .into_iter()
            .map(|(start, width, k)| Span { start, end: (start + width).min(4.0), label: WaveClass::WAVES[k] })
            .collect();
        let ann = AnnotationSet { source: "prop".into(), spans };
        let once = rasterize(&ann, FS, 1000);
        let back = AnnotationSet { source: "prop".into(), spans: mask_to_spans(&once, FS) };
        prop_assert_eq!(rasterize(&back, FS, 1000), once);
    }
}

#[test]
fn quadrature_exact_for_low_degree_monomials() {
    for n in 1..=10 {
        let rule = gauss_legendre_rule(n).unwrap();
        for d in 0..2 * n {
            let exact = if d % 2 == 1 { 0.0 } else { 2.0 / (d as f64 + 1.0) };
            let got = rule.integrate(|x| x.powi(d as i32));
            assert!((got - exact).abs() <= 1e-12, "n={n} d={d}: {got} vs {exact}");
        }
    }
}

#[test]
fn background_mask_has_no_spans() {
    assert!(mask_to_spans(&LabelMask::background(50), FS).is_empty());
}
