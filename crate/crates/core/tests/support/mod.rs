//! Shared oracles and statistics helpers for the integration tests.
#![allow(dead_code)]

use d2d_offload::sweep::SweepRow;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Gauss-Kronrod 7/15 on [a, b]: (Kronrod estimate, |Kronrod - Gauss|).
fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let pair = f(c - h * XGK[i]) + f(c + h * XGK[i]);
        kronrod += WGK[i] * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

fn adapt(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (k, err) = gk15(f, a, b);
    if err <= tol.max(64.0 * f64::EPSILON * k.abs()) || depth == 0 {
        return k;
    }
    let m = 0.5 * (a + b);
    adapt(f, a, m, 0.5 * tol, depth - 1) + adapt(f, m, b, 0.5 * tol, depth - 1)
}

/// Adaptive Gauss-Kronrod quadrature of `f` over [a, b] to a tolerance
/// relative to a first whole-interval estimate.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    let (rough, _) = gk15(&f, a, b);
    adapt(&f, a, b, rel_tol * rough.abs(), 30)
}

/// P(k, x) from quadrature of the Gamma density, independent of the crate's
/// special functions. With t = u², t^(k-1) e^(-t) dt = 2 u^(2k-1) e^(-u²) du,
/// which stays bounded at the origin for k >= 1/2.
pub fn lower_gamma_by_quadrature(k: f64, x: f64) -> f64 {
    let density = move |u: f64| 2.0 * u.powf(2.0 * k - 1.0) * (-u * u).exp();
    let upper = 3.0 * k.sqrt() + 15.0;
    let total = integrate(density, 0.0, upper, 1e-14);
    let part = integrate(density, 0.0, x.sqrt(), 1e-14);
    part / total
}

pub fn cis_overlap(a: &SweepRow, b: &SweepRow) -> bool {
    let (alo, ahi) = a.ci95();
    let (blo, bhi) = b.ci95();
    alo <= bhi && blo <= ahi
}

pub fn mean_ci95(samples: &[f64]) -> (f64, f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let half = 1.96 * (var / n).sqrt();
    (mean, mean - half, mean + half)
}
