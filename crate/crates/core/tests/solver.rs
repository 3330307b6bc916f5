use eqdrop_core::instances;
use eqdrop_core::matrixkit::{singular_values, svt, sym_eig, Matrix};
use eqdrop_core::objective::{importance_stats, objective, regularizer, tied_objective, FactorPair};
use eqdrop_core::rng;
use eqdrop_core::solver::*;
use proptest::prelude::*;
use rand::Rng;

fn gen(seed: u64) -> rand_xoshiro::SplitMix64 {
    rng::stream(seed, 0x501, 0)
}

/// Rank-`r` shrinkage `Σ_{i≤r} (σ_i − α)₊ w_i y_iᵀ` from the eigenvectors of
/// `MᵀM`.
fn shrink_oracle(m: &Matrix, alpha: f64, r: usize) -> Matrix {
    let e = sym_eig(&m.gram()).unwrap();
    let (d1, d2) = m.shape();
    let mut out = Matrix::zeros(d1, d2);
    for i in 0..r.min(d2) {
        let sigma = e.eigvals[i].max(0.0).sqrt();
        if sigma - alpha <= 0.0 || sigma < 1e-12 {
            continue;
        }
        let y = e.eigvecs.column(i);
        let w = m.mul_vec(&y).unwrap();
        for a in 0..d1 {
            for b in 0..d2 {
                out[(a, b)] += (sigma - alpha) * (w[a] / sigma) * y[b];
            }
        }
    }
    out
}

#[test]
fn product_is_rank_limited_shrinkage() {
    const LAMBDAS: [f64; 4] = [0.0, 0.1, 1.0, 5.0];
    for k in 0..50u64 {
        let mut g = gen(k);
        let d1 = g.random_range(1..=12);
        let d2 = g.random_range(1..=8);
        let r = g.random_range(1..=6);
        let lambda = LAMBDAS[k as usize % 4];
        let m = instances::gaussian(d1, d2, &mut g);
        let opt = solve_general(&m, r, lambda).unwrap();
        let expect = shrink_oracle(&m, opt.level.alpha, r);
        let err = opt.product.sub(&expect).unwrap().frobenius();
        assert!(err <= 1e-8, "instance {k}: {err}");

        let direct = objective(&m, &opt.factors, lambda).unwrap();
        let s = singular_values(&m).unwrap();
        assert!((direct - opt.value).abs() <= 1e-8 * (1.0 + direct));
        assert!((optimal_value(&s, r, lambda) - opt.value).abs() <= 1e-8);
        let scores = importance_stats(&opt.factors).scores;
        let nuclear: f64 = singular_values(&opt.product).unwrap().iter().sum();
        for (i, sc) in scores.iter().enumerate() {
            assert!((sc - nuclear / r as f64).abs() <= 1e-8, "instance {k}, unit {i}");
        }
    }
}

#[test]
fn full_rank_budget_matches_plain_shrinkage() {
    let mut g = gen(777);
    for _ in 0..20 {
        let m = instances::gaussian(5, 4, &mut g);
        let opt = solve_general(&m, 4, 0.7).unwrap();
        let plain = svt(&m, opt.level.alpha).unwrap();
        assert!(opt.product.sub(&plain).unwrap().frobenius() <= 1e-8);
    }
}

fn naive_grad(m: &Matrix, u: &Matrix, v: &Matrix, lambda: f64) -> (Matrix, Matrix) {
    let (d1, r) = u.shape();
    let d2 = v.rows();
    let res = Matrix::from_fn(d1, d2, |i, j| (0..r).map(|k| u[(i, k)] * v[(j, k)]).sum::<f64>() - m[(i, j)]);
    let nu: Vec<f64> = (0..r).map(|k| (0..d1).map(|i| u[(i, k)].powi(2)).sum()).collect();
    let nv: Vec<f64> = (0..r).map(|k| (0..d2).map(|j| v[(j, k)].powi(2)).sum()).collect();
    let gu = Matrix::from_fn(d1, r, |i, k| {
        2.0 * (0..d2).map(|j| res[(i, j)] * v[(j, k)]).sum::<f64>() + 2.0 * lambda * u[(i, k)] * nv[k]
    });
    let gv = Matrix::from_fn(d2, r, |j, k| {
        2.0 * (0..d1).map(|i| res[(i, j)] * u[(i, k)]).sum::<f64>() + 2.0 * lambda * v[(j, k)] * nu[k]
    });
    (gu, gv)
}

fn naive_value(m: &Matrix, u: &Matrix, v: &Matrix, lambda: f64) -> f64 {
    let (d1, r) = u.shape();
    let d2 = v.rows();
    let mut total = 0.0;
    for i in 0..d1 {
        for j in 0..d2 {
            total += (m[(i, j)] - (0..r).map(|k| u[(i, k)] * v[(j, k)]).sum::<f64>()).powi(2);
        }
    }
    for k in 0..r {
        let a: f64 = (0..d1).map(|i| u[(i, k)].powi(2)).sum();
        let b: f64 = (0..d2).map(|j| v[(j, k)].powi(2)).sum();
        total += lambda * a * b;
    }
    total
}

/// Best value over `starts` backtracking gradient-descent runs.
fn multistart(m: &Matrix, r: usize, lambda: f64, starts: usize, seed: u64) -> f64 {
    let mut g = gen(seed);
    let (d1, d2) = m.shape();
    let mut best = f64::INFINITY;
    for _ in 0..starts {
        let mut u = Matrix::from_fn(d1, r, |_, _| rng::uniform(&mut g, -1.5, 1.5));
        let mut v = Matrix::from_fn(d2, r, |_, _| rng::uniform(&mut g, -1.5, 1.5));
        let mut value = naive_value(m, &u, &v, lambda);
        let mut step: f64 = 0.05;
        for _ in 0..5000 {
            let (gu, gv) = naive_grad(m, &u, &v, lambda);
            let gn = gu.frobenius_sq() + gv.frobenius_sq();
            if gn < 1e-22 {
                break;
            }
            step *= 2.0;
            loop {
                let (tu, tv) = (u.sub(&gu.scale(step)).unwrap(), v.sub(&gv.scale(step)).unwrap());
                let tvalue = naive_value(m, &tu, &tv, lambda);
                if tvalue <= value - 0.5 * step * gn || step < 1e-16 {
                    u = tu;
                    v = tv;
                    value = tvalue;
                    break;
                }
                step *= 0.5;
            }
        }
        best = best.min(value);
    }
    best
}

#[test]
fn multistart_never_beats_closed_form() {
    let mut cases: Vec<(Matrix, usize, f64)> = Vec::new();
    for m in instances::small_corpus() {
        for (r, lambda) in [(1, 0.5), (2, 1.0), (2, 0.1), (3, 2.0)] {
            cases.push((m.clone(), r, lambda));
        }
    }
    cases.push((instances::gaussian(6, 4, &mut gen(64)), 3, 0.5));
    for (idx, (m, r, lambda)) in cases.iter().enumerate() {
        let opt = solve_general(m, *r, *lambda).unwrap();
        let best = multistart(m, *r, *lambda, 30, idx as u64);
        assert!(best >= opt.value - 1e-6, "case {idx}: descent {best} below closed form {}", opt.value);
        assert!(best <= opt.value + 1e-4, "case {idx}: descent {best} never reached {}", opt.value);
    }
}

#[test]
fn tied_solver_on_random_psd() {
    for k in 0..30u64 {
        let mut g = gen(2000 + k);
        let d = g.random_range(1..=8);
        let r = g.random_range(1..=6);
        let lambda = [0.0, 0.2, 1.0, 3.0][k as usize % 4];
        let m = instances::psd(d, g.random_range(1..=d), &mut g);
        let opt = solve_tied(&m, r, lambda).unwrap();
        let u = &opt.factors.u;
        let expect = shrink_oracle(&m, opt.level.alpha, r);
        assert!(opt.product.sub(&expect).unwrap().frobenius() <= 1e-8, "instance {k}");
        let value = tied_objective(&m, u, lambda).unwrap();
        assert!((value - opt.value).abs() <= 1e-8 * (1.0 + value));
        let reg = regularizer(&opt.factors, lambda).unwrap();
        assert!((reg - lambda / r as f64 * u.frobenius_sq().powi(2)).abs() <= 1e-8 * (1.0 + reg));
        let norms = u.column_norms_sq();
        let spread = norms.iter().cloned().fold(f64::MIN, f64::max) - norms.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread <= 1e-8 * (1.0 + u.frobenius_sq()));
        assert_eq!(opt.factors.u, opt.factors.v);
    }
}

#[test]
fn tied_diag_agrees_with_descent() {
    let m = Matrix::diag(&[3.0, 1.0]);
    let opt = solve_tied(&m, 2, 1.0).unwrap();
    // Tied problem as the untied one restricted to V = U: the untied optimum
    // of a PSD target is a lower bound and is attained here.
    let best = multistart(&m, 2, 1.0, 20, 5);
    assert!((best - opt.value).abs() <= 1e-4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn g_is_nonincreasing(mut s in prop::collection::vec(0.0f64..10.0, 1..12), r in 1usize..12, lambda in 0.0f64..5.0) {
        s.sort_by(|a, b| b.total_cmp(a));
        for j in 1..r {
            prop_assert!(value_at_level(&s, r, lambda, j + 1) <= value_at_level(&s, r, lambda, j) + 1e-12);
        }
    }

    #[test]
    fn level_is_the_largest_admissible_index(mut s in prop::collection::vec(0.0f64..10.0, 0..10), r in 1usize..10, lambda in 0.0f64..5.0) {
        s.sort_by(|a, b| b.total_cmp(a));
        let level = shrink_level(&s, r, lambda);
        let at = |j: usize| s.get(j - 1).copied().unwrap_or(0.0);
        let head = |j: usize| (1..=j).map(at).sum::<f64>();
        for j in 1..=r {
            let admissible = at(j) > lambda * head(j) / (r as f64 + lambda * j as f64);
            if admissible {
                prop_assert!(j <= level.rho);
            }
        }
        if level.rho > 0 {
            prop_assert!((level.kappa_rho - head(level.rho) / level.rho as f64).abs() < 1e-12);
            let expect = lambda * level.rho as f64 * level.kappa_rho / (r as f64 + lambda * level.rho as f64);
            prop_assert!((level.alpha - expect).abs() < 1e-12);
        } else {
            prop_assert!(s.iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn optimal_value_is_minimal_over_levels(mut s in prop::collection::vec(0.0f64..10.0, 1..10), r in 1usize..10, lambda in 0.0f64..5.0) {
        s.sort_by(|a, b| b.total_cmp(a));
        let best = optimal_value(&s, r, lambda);
        let rho = shrink_level(&s, r, lambda).rho;
        for j in 0..=rho {
            prop_assert!(best <= value_at_level(&s, r, lambda, j) + 1e-12);
        }
    }
}

#[test]
fn zero_lambda_level_counts_positive_entries() {
    assert_eq!(shrink_level(&[5.0, 3.0, 0.0, 0.0], 3, 0.0).rho, 2);
    assert_eq!(shrink_level(&[5.0, 3.0, 1.0, 0.5], 3, 0.0).rho, 3);
}

#[test]
fn saddle_bound_accepts_padding() {
    assert_eq!(strict_saddle_bound(&[4.0], 3), 0.0);
    let b = strict_saddle_bound(&[4.0, 3.0, 2.0], 3);
    assert!((b - 6.0 / 3.0).abs() < 1e-15);
}

#[test]
fn tied_and_general_agree_on_psd_targets() {
    let m = instances::psd(5, 5, &mut gen(31));
    for (r, lambda) in [(2, 0.3), (4, 1.5), (6, 0.0)] {
        let a = solve_tied(&m, r, lambda).unwrap();
        let b = solve_general(&m, r, lambda).unwrap();
        assert!(a.product.sub(&b.product).unwrap().frobenius() <= 1e-8);
        assert!((a.value - b.value).abs() <= 1e-8);
        let pair = FactorPair::tied(a.factors.u.clone()).unwrap();
        assert!((objective(&m, &pair, lambda).unwrap() - a.value).abs() <= 1e-8);
    }
}
