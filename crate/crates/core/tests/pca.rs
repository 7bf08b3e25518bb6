use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use railpca::pca::{
    dispersion_stats, jacobi_eigen, mean_and_covariance, rmse_curve, score, select_order, t2_threshold, train,
    train_with, TrainOptions, TrainingSet,
};

const PUBLISHED_SPECTRUM: [f64; 8] = [
    10962.00, 13377.12, 15264.30, 28151.90, 96724.82, 125065.94, 433733.11, 593724.04,
];

fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v: f64 = rng.gen_range(-5.0..5.0);
            a[i * n + j] = v;
            a[j * n + i] = v;
        }
    }
    a
}

/// Anisotropic correlated cloud: most variance along a few random directions.
fn random_dataset(rng: &mut ChaCha8Rng, n: usize, k: usize, spread: &[f64]) -> Vec<Vec<f64>> {
    let mix: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let offset: Vec<f64> = (0..n).map(|_| rng.gen_range(-50.0..50.0)).collect();
    (0..k)
        .map(|_| {
            let z: Vec<f64> = (0..n)
                .map(|i| {
                    let g: f64 = StandardNormal.sample(rng);
                    g * spread[i]
                })
                .collect();
            (0..n)
                .map(|i| offset[i] + (0..n).map(|j| mix[i * n + j] * z[j]).sum::<f64>())
                .collect()
        })
        .collect()
}

fn gauss_jordan_inverse(a: &[f64], n: usize) -> Vec<f64> {
    let mut m = a.to_vec();
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[i * n + i] = 1.0;
    }
    for c in 0..n {
        let p = (c..n).max_by(|&x, &y| m[x * n + c].abs().total_cmp(&m[y * n + c].abs())).unwrap();
        for k in 0..n {
            m.swap(c * n + k, p * n + k);
            inv.swap(c * n + k, p * n + k);
        }
        let d = m[c * n + c];
        for k in 0..n {
            m[c * n + k] /= d;
            inv[c * n + k] /= d;
        }
        for r in 0..n {
            if r != c {
                let f = m[r * n + c];
                for k in 0..n {
                    m[r * n + k] -= f * m[c * n + k];
                    inv[r * n + k] -= f * inv[c * n + k];
                }
            }
        }
    }
    inv
}

/// Characteristic polynomial coefficients (monic, highest first) by
/// Faddeev–LeVerrier.
fn char_poly(a: &[f64], n: usize) -> Vec<f64> {
    let mut coeffs = vec![1.0];
    let mut m = vec![0.0; n * n];
    let mut c_prev = 1.0;
    for k in 1..=n {
        // M_k = A M_{k-1} + c_{k-1} I
        let mut am = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                am[i * n + j] = (0..n).map(|l| a[i * n + l] * m[l * n + j]).sum();
            }
        }
        for i in 0..n {
            am[i * n + i] += c_prev;
        }
        m = am;
        let mut amk = 0.0;
        for i in 0..n {
            amk += (0..n).map(|l| a[i * n + l] * m[l * n + i]).sum::<f64>();
        }
        let c = -amk / k as f64;
        coeffs.push(c);
        c_prev = c;
    }
    coeffs
}

fn poly_eval(c: &[f64], x: f64) -> f64 {
    c.iter().fold(0.0, |acc, &k| acc * x + k)
}

/// Roots of the characteristic polynomial by grid bracketing and bisection.
fn oracle_eigenvalues(a: &[f64], n: usize) -> Vec<f64> {
    let c = char_poly(a, n);
    let bound = (0..n)
        .map(|i| (0..n).map(|j| a[i * n + j].abs()).sum::<f64>())
        .fold(0.0, f64::max)
        + 1.0;
    let steps = 200_000;
    let mut roots = Vec::new();
    let mut x0 = -bound;
    let mut f0 = poly_eval(&c, x0);
    for s in 1..=steps {
        let x1 = -bound + 2.0 * bound * s as f64 / steps as f64;
        let f1 = poly_eval(&c, x1);
        if f0 == 0.0 || f0.signum() != f1.signum() {
            let (mut lo, mut hi) = (x0, x1);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if poly_eval(&c, lo).signum() == poly_eval(&c, mid).signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        x0 = x1;
        f0 = f1;
    }
    roots.sort_by(|a, b| b.total_cmp(a));
    roots
}

#[test]
fn jacobi_matches_characteristic_polynomial_roots() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let a = random_symmetric(&mut rng, 4);
        let e = jacobi_eigen(&a, 4);
        let o = oracle_eigenvalues(&a, 4);
        assert_eq!(o.len(), 4, "oracle found {o:?}");
        for (x, y) in e.values.iter().zip(&o) {
            assert!((x - y).abs() < 1e-8 * (1.0 + y.abs()), "{x} vs {y}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn jacobi_reconstructs_eight_by_eight(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_symmetric(&mut rng, 8);
        let e = jacobi_eigen(&a, 8);
        let back = e.compose(|l| l);
        let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let err = a.iter().zip(&back).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        prop_assert!(err < 1e-8 * norm);
        for i in 0..8 {
            for j in 0..8 {
                let d: f64 = e.vector(i).iter().zip(e.vector(j)).map(|(x, y)| x * y).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((d - want).abs() < 1e-8);
            }
            let v = e.vector(i);
            let big = v.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
            prop_assert!(big > 0.0);
        }
        for w in e.values.windows(2) {
            prop_assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn rmse_is_non_increasing_and_ends_at_zero(vals in prop::collection::vec(0.0f64..1e6, 1..9)) {
        let mut v = vals.clone();
        v.sort_by(|a, b| b.total_cmp(a));
        let c = rmse_curve(&v);
        prop_assert_eq!(c.len(), v.len() + 1);
        prop_assert_eq!(*c.last().unwrap(), 0.0);
        for w in c.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-15);
        }
    }

    #[test]
    fn model_invariants_hold(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = random_dataset(&mut rng, 4, 60, &[10.0, 3.0, 0.5, 0.1]);
        let model = train(&TrainingSet::new("p", data.clone()), 0.10).unwrap();
        let n = model.n;
        for i in 0..n {
            for j in 0..n {
                prop_assert!((model.s[i * n + j] - model.s[j * n + i]).abs() <= 1e-10 * model.s[i * n + i].abs().max(1.0));
            }
        }
        prop_assert!(model.eigenvalues.iter().all(|&l| l >= -1e-10));
        for a in 0..model.m {
            for b in 0..model.m {
                let d: f64 = model.column(a).iter().zip(model.column(b)).map(|(x, y)| x * y).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                prop_assert!((d - want).abs() < 1e-8);
            }
        }
        prop_assert!(model.flagged || model.rmse_at_m < 0.10);
        for x in data.iter().take(10) {
            let p = model.project(x).unwrap();
            let xn = p.centered.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
            for k in 0..model.m {
                let d: f64 = p.residual.iter().zip(model.column(k)).map(|(r, u)| r * u).sum();
                prop_assert!(d.abs() < 1e-8 * xn);
            }
            let s = score(&model, x).unwrap();
            prop_assert!(s.reconstruction_error >= 0.0 && s.t_squared >= 0.0);
        }
    }
}

#[test]
fn scores_match_brute_force_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for case in 0..5 {
        let data = random_dataset(&mut rng, 4, 40 + 10 * case, &[20.0, 4.0, 1.0, 0.3]);
        let model = train(&TrainingSet::new("o", data.clone()), 0.10).unwrap();
        assert!(model.m < 4, "case {case} kept m = {}", model.m);

        let n = 4;
        let (psi, s) = mean_and_covariance(&data);
        let delta = 1e-8 * (0..n).map(|i| s[i * n + i]).sum::<f64>() / n as f64;
        let mut reg = s.clone();
        for i in 0..n {
            reg[i * n + i] += delta;
        }
        let inv = gauss_jordan_inverse(&reg, n);
        let u = &model.u;
        let m = model.m;
        // Λ_m = Uᵀ S U computed from the raw covariance.
        let mut lam = vec![0.0; m * m];
        for a in 0..m {
            for b in 0..m {
                let mut acc = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        acc += u[a * n + i] * s[i * n + j] * u[b * n + j];
                    }
                }
                lam[a * m + b] = acc;
            }
        }
        let lam_inv = gauss_jordan_inverse(&lam, m);

        for x in &data {
            let c: Vec<f64> = x.iter().zip(&psi).map(|(a, b)| a - b).collect();
            let mut proj = vec![0.0; n];
            for i in 0..n {
                for j in 0..n {
                    let p_ij: f64 = (0..m).map(|k| u[k * n + i] * u[k * n + j]).sum();
                    proj[i] += p_ij * c[j];
                }
            }
            let r: Vec<f64> = c.iter().zip(&proj).map(|(a, b)| a - b).collect();
            let mut eps = 0.0;
            for i in 0..n {
                for j in 0..n {
                    eps += r[i] * inv[i * n + j] * r[j];
                }
            }
            let y: Vec<f64> = (0..m).map(|k| (0..n).map(|i| u[k * n + i] * c[i]).sum()).collect();
            let mut t2 = 0.0;
            for a in 0..m {
                for b in 0..m {
                    t2 += y[a] * lam_inv[a * m + b] * y[b];
                }
            }
            let got = score(&model, x).unwrap();
            assert!((got.reconstruction_error - eps).abs() <= 1e-8 * eps.abs().max(1e-12), "{} vs {eps}", got.reconstruction_error);
            assert!((got.t_squared - t2).abs() <= 1e-8 * t2.abs().max(1e-12), "{} vs {t2}", got.t_squared);
        }
    }
}

#[test]
fn full_order_reconstructs_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let data = random_dataset(&mut rng, 4, 30, &[1.0, 1.0, 1.0, 1.0]);
    let model = train(&TrainingSet::new("full", data.clone()), 1e-9).unwrap();
    assert_eq!(model.m, 4);
    assert!(model.flagged);
    for x in &data {
        assert_eq!(score(&model, x).unwrap().reconstruction_error, 0.0);
    }
    let far: Vec<f64> = data[0].iter().map(|v| v * 7.0 + 3.0).collect();
    assert_eq!(score(&model, &far).unwrap().reconstruction_error, 0.0);
}

#[test]
fn error_is_invariant_to_training_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let data = random_dataset(&mut rng, 8, 200, &[30.0, 10.0, 5.0, 1.0, 0.5, 0.2, 0.1, 0.05]);
    let mut shuffled = data.clone();
    shuffled.reverse();
    shuffled.swap(3, 150);
    let a = train(&TrainingSet::new("x", data.clone()), 0.1).unwrap();
    let b = train(&TrainingSet::new("x", shuffled), 0.1).unwrap();
    let probe = random_dataset(&mut rng, 8, 20, &[30.0, 10.0, 5.0, 1.0, 0.5, 0.2, 0.1, 0.05]);
    for x in probe.iter().chain(data.iter().take(5)) {
        let (ea, eb) = (score(&a, x).unwrap().reconstruction_error, score(&b, x).unwrap().reconstruction_error);
        assert!((ea - eb).abs() <= 1e-9 * ea.max(1e-12), "{ea} vs {eb}");
    }
}

/// Gaussian cloud with the given spreads along a random orthonormal basis,
/// so the covariance condition number is set by the spreads alone.
fn rotated_dataset(rng: &mut ChaCha8Rng, basis: &[f64], spread: &[f64], k: usize) -> Vec<Vec<f64>> {
    let n = spread.len();
    (0..k)
        .map(|_| {
            let z: Vec<f64> = spread
                .iter()
                .map(|s| {
                    let g: f64 = StandardNormal.sample(rng);
                    g * s
                })
                .collect();
            (0..n).map(|i| 100.0 + (0..n).map(|j| basis[j * n + i] * z[j]).sum::<f64>()).collect()
        })
        .collect()
}

#[test]
fn ridge_does_not_distort_errors() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let spread = [30.0, 10.0, 5.0, 2.0, 1.0, 0.5, 0.3, 0.2];
    let basis = jacobi_eigen(&random_symmetric(&mut rng, 8), 8).vectors;
    let set = TrainingSet::new("r", rotated_dataset(&mut rng, &basis, &spread, 500));
    let base = train_with(&set, &TrainOptions::default()).unwrap();
    let smaller = train_with(&set, &TrainOptions { ridge: 1e-9, ..TrainOptions::default() }).unwrap();
    let mut probe = rotated_dataset(&mut rng, &basis, &spread, 50);
    probe.extend(rotated_dataset(&mut rng, &basis, &[3.0; 8], 50));
    for x in &probe {
        let (a, b) = (score(&base, x).unwrap().reconstruction_error, score(&smaller, x).unwrap().reconstruction_error);
        assert!((a - b).abs() < 1e-3 * b, "{a} vs {b}");
    }
}

#[test]
fn published_spectrum_keeps_four_components() {
    let mut spectrum = PUBLISHED_SPECTRUM.to_vec();
    spectrum.sort_by(|a, b| b.total_cmp(a));
    let total: f64 = spectrum.iter().sum();
    assert!((total - 1317003.23).abs() < 1e-6);
    let c = rmse_curve(&spectrum);
    assert!((c[4] - 67755.32 / 1317003.23).abs() < 1e-12);
    assert!((0.050..=0.053).contains(&c[4]), "{}", c[4]);
    assert!(c[3] >= 0.10);
    assert_eq!(select_order(&spectrum, 0.10), (4, false));
}

/// F(d1, d2) CDF by composite Simpson integration of the density; valid for
/// d1 >= 2, where the density is bounded at 0.
fn f_cdf_quadrature(x: f64, d1: f64, d2: f64) -> f64 {
    assert!(d1 >= 2.0);
    let ln_beta = ln_gamma(d1 / 2.0) + ln_gamma(d2 / 2.0) - ln_gamma((d1 + d2) / 2.0);
    let density = |u: f64| -> f64 {
        if u <= 0.0 {
            return if d1 == 2.0 { 2.0 / d2 * (-ln_beta).exp() } else { 0.0 };
        }
        let ln = 0.5 * d1 * (d1 / d2).ln() + (0.5 * d1 - 1.0) * u.ln()
            - 0.5 * (d1 + d2) * (1.0 + d1 * u / d2).ln()
            - ln_beta;
        ln.exp()
    };
    let n = 100_000;
    let h = x / n as f64;
    let mut acc = density(0.0) + density(x);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * density(i as f64 * h);
    }
    acc * h / 3.0
}

fn ln_gamma(x: f64) -> f64 {
    // Lanczos, g = 7, n = 9.
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        return (std::f64::consts::PI / (std::f64::consts::PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + 7.5;
    for (i, c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

fn f_quantile_oracle(q: f64, d1: f64, d2: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 50.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if f_cdf_quadrature(mid, d1, d2) < q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn t2_limit_matches_quadrature_oracle() {
    let (k, m) = (500usize, 4usize);
    let got = t2_threshold(k, m, 0.95).unwrap();
    let f = f_quantile_oracle(0.95, 4.0, 496.0);
    let expected = 4.0 * 499.0 * 501.0 / (500.0 * 496.0) * f;
    assert!((got - expected).abs() < 1e-6 * expected, "{got} vs {expected}");
    assert!((f - 2.39).abs() < 0.01);
    assert!((got - 9.64).abs() < 0.02, "{got}");

    let got = t2_threshold(60, 2, 0.99).unwrap();
    let expected = 2.0 * 59.0 * 61.0 / (60.0 * 58.0) * f_quantile_oracle(0.99, 2.0, 58.0);
    assert!((got - expected).abs() < 1e-6 * expected);
}

#[test]
fn t2_limit_monotone_and_asymptotic() {
    let a = t2_threshold(500, 4, 0.90).unwrap();
    let b = t2_threshold(500, 4, 0.95).unwrap();
    let c = t2_threshold(500, 4, 0.99).unwrap();
    assert!(a < b && b < c);
    assert!(t2_threshold(500, 4, 0.999999).unwrap() > 2.0 * c);
    // χ²₁ 95% quantile.
    let chi = 3.841_458_820_694_124;
    let big = t2_threshold(1_000_000, 1, 0.95).unwrap();
    assert!((big - chi).abs() < 0.01 * chi, "{big}");
}

#[test]
fn in_class_t2_rarely_exceeds_limit() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let data = random_dataset(&mut rng, 8, 600, &[30.0, 10.0, 5.0, 2.0, 0.5, 0.3, 0.2, 0.1]);
    let (train_part, held) = data.split_at(500);
    let model = train(&TrainingSet::new("t", train_part.to_vec()), 0.10).unwrap();
    let over = held.iter().filter(|x| score(&model, x).unwrap().exceeds_t2()).count();
    assert!(over <= 10, "{over} of 100 above the limit");
}

#[test]
fn dispersion_reproduces_published_row() {
    // σ = 50.92, μ = 19040 from a two-point population with that mean and spread.
    let (s, mu) = (50.92, 19040.0);
    let (sigma, mean, d) = dispersion_stats(&[mu - s, mu + s]).unwrap();
    assert!((sigma - s).abs() < 1e-9 && (mean - mu).abs() < 1e-9);
    assert!((d - s * s / mu).abs() < 1e-12);
    // Printed as 0.13: the table truncates to two decimals.
    assert!((0.13..0.14).contains(&d), "{d}");
}

#[test]
fn poisson_counts_have_unit_dispersion() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let pois = Poisson::new(40.0).unwrap();
    let values: Vec<f64> = (0..20_000).map(|_| pois.sample(&mut rng)).collect();
    let (_, _, d) = dispersion_stats(&values).unwrap();
    assert!((0.95..1.05).contains(&d), "{d}");
}
