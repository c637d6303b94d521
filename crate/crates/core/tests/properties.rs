//! Property suites and independent oracles for the numerical modules.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use rmclass::covariance::{
    flip_flop, flip_flop_from, kron, pooled_covariance, CovarianceModel, GroupParams, KroneckerCov,
};
use rmclass::dists::{rng_from_seed, sample_mv_truncnorm, sample_mvn, MvnParams, TruncationBounds};
use rmclass::eval::bootstrap::{interval, relative_overfit, weight, CiRule};
use rmclass::eval::{bootstrap_632plus, confusion_metrics, mardia_skewness, Measure};
use rmclass::gee::{fit_joint_gee, GeeDesign, GeeOptions, VarianceRule, WorkingCorrelation};
use rmclass::lda::lda_train;
use rmclass::linalg::{col_means, covariance, Cholesky};
use rmclass::lsvm::{build_gram_blocks, fit_lsvm, label_to_sign, LsvmOptions};
use rmclass::robust::{exhaustive_mcd, exhaustive_mve, fast_mcd, fast_mve, mcd_trim, DEFAULT_STARTS};
use rmclass::scenarios::Preset;
use rmclass::LongitudinalDataset;

fn matrix(n: usize, d: usize) -> impl Strategy<Value = DMatrix<f64>> {
    proptest::collection::vec(-5.0..5.0f64, n * d).prop_map(move |v| DMatrix::from_row_slice(n, d, &v))
}

/// Random well-conditioned covariance `B Bᵀ + 0.5 I`.
fn spd(d: usize) -> impl Strategy<Value = DMatrix<f64>> {
    matrix(d, d).prop_map(move |b| &b * b.transpose() * 0.2 + DMatrix::identity(d, d) * 0.5)
}

/// Invertible map `B + 3I` with entries of `B` in [-1, 1].
fn invertible(d: usize) -> impl Strategy<Value = DMatrix<f64>> {
    proptest::collection::vec(-1.0..1.0f64, d * d)
        .prop_map(move |v| DMatrix::from_row_slice(d, d, &v) + DMatrix::identity(d, d) * 3.0)
}

fn affine(x: &DMatrix<f64>, a: &DMatrix<f64>, c: &DVector<f64>) -> DMatrix<f64> {
    let mut y = x * a.transpose();
    for mut row in y.row_iter_mut() {
        row += c.transpose();
    }
    y
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

// ---------------------------------------------------------------- samplers

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn truncnorm_draws_stay_in_box(
        mean in proptest::collection::vec(0.0..4.0f64, 3),
        cov in spd(3),
        seed in any::<u64>(),
    ) {
        let params = MvnParams::new(DVector::from_vec(mean), cov).unwrap();
        let bounds = TruncationBounds::uniform(3, 0.0, 4.0).unwrap();
        let x = sample_mv_truncnorm(&params, &bounds, 200, &mut rng_from_seed(seed)).unwrap();
        for row in x.row_iter() {
            let v: Vec<f64> = row.iter().cloned().collect();
            prop_assert!(bounds.contains(&v));
        }
    }

    #[test]
    fn samplers_are_deterministic(seed in any::<u64>()) {
        let params = MvnParams::new(DVector::zeros(2), DMatrix::identity(2, 2)).unwrap();
        let a = sample_mvn(&params, 10, &mut rng_from_seed(seed)).unwrap();
        let b = sample_mvn(&params, 10, &mut rng_from_seed(seed)).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn reference_covariance_entry_recovered() {
    let s = Preset::Dataset1.params();
    let x = sample_mvn(&s.class0, 100_000, &mut rng_from_seed(42)).unwrap();
    let c = covariance(&x, 1);
    assert!((c[(0, 1)] - 0.41).abs() < 0.01, "{}", c[(0, 1)]);
}

#[test]
fn reference_truncnorm_in_likert_range() {
    let s = Preset::Dataset1.params();
    let bounds = TruncationBounds::uniform(8, 0.0, 4.0).unwrap();
    let x = sample_mv_truncnorm(&s.class0, &bounds, 10_000, &mut rng_from_seed(3)).unwrap();
    assert!(x.iter().all(|&v| (0.0..=4.0).contains(&v)));
}

#[test]
fn correlated_moments_within_five_standard_errors() {
    let cov = DMatrix::from_row_slice(3, 3, &[1.0, 0.6, -0.3, 0.6, 2.0, 0.4, -0.3, 0.4, 0.5]);
    let mean = DVector::from_vec(vec![1.0, -2.0, 0.5]);
    let n = 100_000;
    let x = sample_mvn(&MvnParams::new(mean.clone(), cov.clone()).unwrap(), n, &mut rng_from_seed(9)).unwrap();
    let m = col_means(&x);
    let c = covariance(&x, 1);
    let nf = n as f64;
    for i in 0..3 {
        assert!((m[i] - mean[i]).abs() < 5.0 * (cov[(i, i)] / nf).sqrt());
        for j in 0..3 {
            let se = ((cov[(i, i)] * cov[(j, j)] + cov[(i, j)].powi(2)) / nf).sqrt();
            assert!((c[(i, j)] - cov[(i, j)]).abs() < 5.0 * se, "({i},{j})");
        }
    }
}

// ---------------------------------------------------------------- trimming

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fast_mcd_matches_exhaustive(
        (x, extra) in (7usize..=12, 1usize..=2).prop_flat_map(|(n, d)| (matrix(n, d), 0usize..=2)),
        seed in any::<u64>(),
    ) {
        let (n, d) = x.shape();
        let h = ((n + d + 1) / 2 + extra).min(n);
        let exact = exhaustive_mcd(&x, h).unwrap();
        let fast = fast_mcd(&x, h, DEFAULT_STARTS, seed).unwrap();
        prop_assert!((fast.objective - exact.objective).abs() <= 1e-9 * (1.0 + exact.objective.abs()),
            "fast {} exhaustive {}", fast.objective, exact.objective);
        prop_assert_eq!(mcd_trim(&x, h, DEFAULT_STARTS, seed).unwrap().kept_indices, exact.kept_indices);
    }

    #[test]
    fn fast_mve_matches_exhaustive(
        (x, extra) in (7usize..=12, 1usize..=2).prop_flat_map(|(n, d)| (matrix(n, d), 0usize..=2)),
        seed in any::<u64>(),
    ) {
        let (n, d) = x.shape();
        let h = ((n + d + 1) / 2 + extra).min(n);
        let exact = exhaustive_mve(&x, h).unwrap();
        let fast = fast_mve(&x, h, DEFAULT_STARTS, seed).unwrap();
        prop_assert!((fast.objective - exact.objective).abs() <= 1e-9 * (1.0 + exact.objective.abs()),
            "fast {} exhaustive {}", fast.objective, exact.objective);
    }

    #[test]
    fn mcd_objective_beats_random_subsets(x in matrix(12, 2), picks in proptest::collection::vec(any::<u64>(), 20)) {
        let h = 8;
        let best = exhaustive_mcd(&x, h).unwrap();
        for p in picks {
            // random h-subset from a shuffled index list
            let mut idx: Vec<usize> = (0..12).collect();
            let mut state = p;
            for i in (1..idx.len()).rev() {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                idx.swap(i, (state >> 33) as usize % (i + 1));
            }
            let sub = x.select_rows(&idx[..h]);
            if let Ok(ch) = Cholesky::new(&covariance(&sub, 1)) {
                prop_assert!(best.objective <= ch.log_det() + 1e-9);
            }
        }
    }

    #[test]
    fn mcd_affine_equivariance(x in matrix(10, 2), a in invertible(2), c in proptest::collection::vec(-10.0..10.0f64, 2)) {
        let c = DVector::from_vec(c);
        let h = 7;
        let base = exhaustive_mcd(&x, h).unwrap();
        let moved = exhaustive_mcd(&affine(&x, &a, &c), h).unwrap();
        prop_assert_eq!(&moved.kept_indices, &base.kept_indices);
        let loc = &a * &base.location + &c;
        let scat = &a * &base.scatter * a.transpose();
        prop_assert!((moved.location - loc).amax() < 1e-8);
        prop_assert!(max_abs(&(moved.scatter - &scat)) < 1e-8 * (1.0 + max_abs(&scat)));
    }

    #[test]
    fn mcd_resists_planted_outliers(clean in matrix(12, 2), scale in 1e3..1e8f64) {
        let (n, d) = (12, 2);
        let h = (n + d + 1) / 2;
        let bad = n / 2 - d;
        let mut x = clean.clone();
        for i in 0..bad {
            x[(i, 0)] = scale * (1.0 + i as f64);
            x[(i, 1)] = -scale * (2.0 + i as f64);
        }
        let res = exhaustive_mcd(&x, h).unwrap();
        prop_assert!(res.kept_indices.iter().all(|&i| i >= bad));
        let clean_rows = clean.rows(bad, n - bad);
        for k in 0..d {
            let col = clean_rows.column(k);
            prop_assert!(res.location[k] >= col.min() - 1e-12 && res.location[k] <= col.max() + 1e-12);
        }
    }
}

// ---------------------------------------------------------------- Kronecker covariance

fn kron_sample(st: &DMatrix<f64>, sp: &DMatrix<f64>, n: usize, seed: u64) -> DMatrix<f64> {
    let d = st.nrows() * sp.nrows();
    let params = MvnParams::new(DVector::zeros(d), kron(st, sp)).unwrap();
    sample_mvn(&params, n, &mut rng_from_seed(seed)).unwrap()
}

fn center(x: &DMatrix<f64>) -> DMatrix<f64> {
    rmclass::linalg::center_rows(x, &col_means(x))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn flip_flop_likelihood_never_decreases(st in spd(3), sp in spd(2), n in 8usize..40, seed in any::<u64>()) {
        let x = center(&kron_sample(&st, &sp, n, seed));
        let fit = flip_flop(&x, 2, 3, 1e-12, 200).unwrap();
        for w in fit.log_likelihood.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-9 * w[0].abs().max(1.0), "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn flip_flop_start_scale_irrelevant(st in spd(2), sp in spd(3), c in 0.01..100.0f64, seed in any::<u64>()) {
        let x = center(&kron_sample(&st, &sp, 30, seed));
        let a = flip_flop(&x, 3, 2, 1e-12, 500).unwrap().cov.normalized();
        let b = flip_flop_from(&x, 3, 2, DMatrix::identity(3, 3) * c, 1e-12, 500).unwrap().cov.normalized();
        prop_assert!(max_abs(&(a.full() - b.full())) < 1e-6 * (1.0 + max_abs(&a.full())));
    }

    #[test]
    fn pooling_equal_kronecker_products(st in spd(2), sp in spd(3), n0 in 2usize..50, n1 in 2usize..50) {
        let k = kron(&st, &sp);
        let pooled = pooled_covariance(&k, n0, &k, n1).unwrap();
        prop_assert!(max_abs(&(pooled - &k)) <= 1e-12 * max_abs(&k));
    }

    #[test]
    fn kronecker_of_pd_factors_is_pd(st in spd(3), sp in spd(4)) {
        let k = KroneckerCov { sigma_t: st, sigma_p: sp }.full();
        prop_assert!(rmclass::linalg::is_symmetric(&k, 1e-12));
        prop_assert!(Cholesky::new(&k).is_ok());
    }
}

#[test]
fn flip_flop_recovers_reference_factors() {
    let st = DMatrix::from_row_slice(2, 2, &[1.0, 0.82, 0.82, 1.0]);
    #[rustfmt::skip]
    let sp = DMatrix::from_row_slice(4, 4, &[
        1.0, 0.42, 0.44, 0.27,
        0.42, 1.0, 0.5, 0.22,
        0.44, 0.5, 1.0, 0.2,
        0.27, 0.22, 0.2, 1.0,
    ]);
    let x = center(&kron_sample(&st, &sp, 10_000, 17));
    let fit = flip_flop(&x, 4, 2, 1e-8, 200).unwrap();
    assert!(fit.converged);
    let cov = fit.cov.normalized();
    assert!(max_abs(&(&cov.sigma_t - &st)) < 0.05, "{}", cov.sigma_t);
    assert!(max_abs(&(&cov.sigma_p - &sp)) < 0.05, "{}", cov.sigma_p);
}

// ---------------------------------------------------------------- GEE

fn gee_opts(variance: VarianceRule, working: WorkingCorrelation) -> GeeOptions {
    GeeOptions { variance, working, ..GeeOptions::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gee_saturated_at_two_times(
        x in (6usize..30).prop_flat_map(|n| matrix(n, 6)),
        per_var in any::<bool>(),
        indep in any::<bool>(),
    ) {
        let opts = gee_opts(
            if per_var { VarianceRule::PerVariable } else { VarianceRule::PerCoordinate },
            if indep { WorkingCorrelation::Independence } else { WorkingCorrelation::Unstructured },
        );
        let fit = fit_joint_gee(&x, GeeDesign::new(3, 2), &opts).unwrap();
        let m = col_means(&x);
        prop_assert!((&fit.fitted_mu - &m).amax() < 1e-8);
        for r in [&fit.r_p, &fit.r_t] {
            prop_assert!(rmclass::linalg::is_symmetric(r, 1e-12));
            prop_assert!((0..r.nrows()).all(|i| r[(i, i)] == 1.0));
            prop_assert!(r.iter().all(|v| v.abs() <= 1.0));
        }
    }

    #[test]
    fn gee_beta_ignores_subject_order(x in matrix(15, 6), seed in any::<u64>()) {
        let mut idx: Vec<usize> = (0..15).collect();
        use rand::seq::SliceRandom;
        idx.shuffle(&mut rng_from_seed(seed));
        let design = GeeDesign::new(2, 3);
        let opts = GeeOptions::default();
        let a = fit_joint_gee(&x, design, &opts).unwrap();
        let b = fit_joint_gee(&x.select_rows(&idx), design, &opts).unwrap();
        prop_assert!((&a.beta - &b.beta).amax() < 1e-9 * (1.0 + a.beta.amax()));
    }
}

#[test]
fn gee_fitted_means_match_reference_class_mean() {
    let s = Preset::Dataset1.params();
    let x = sample_mvn(&s.class0, 10_000, &mut rng_from_seed(5)).unwrap();
    let fit = fit_joint_gee(&x, GeeDesign::new(4, 2), &GeeOptions::default()).unwrap();
    let mu0 = [1.75, 1.58, 1.36, 0.32, 1.05, 1.03, 0.91, 0.16];
    for (f, m) in fit.fitted_mu.iter().zip(mu0) {
        assert!((f - m).abs() < 0.02, "{f} vs {m}");
    }
}

// ---------------------------------------------------------------- LDA

fn params(mu0: DVector<f64>, mu1: DVector<f64>, cov: DMatrix<f64>, priors: (f64, f64)) -> GroupParams {
    GroupParams { mu0, mu1, cov: CovarianceModel::Unstructured(cov), priors }
}

fn vec3() -> impl Strategy<Value = DVector<f64>> {
    proptest::collection::vec(-3.0..3.0f64, 3).prop_map(DVector::from_vec)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lda_affine_invariance(
        mu0 in vec3(), mu1 in vec3(), cov in spd(3), t in invertible(3), c in vec3(),
        pts in matrix(20, 3), pi0 in 0.1..0.9f64,
    ) {
        let base = lda_train(&params(mu0.clone(), mu1.clone(), cov.clone(), (pi0, 1.0 - pi0))).unwrap();
        let moved = lda_train(&params(&t * mu0 + &c, &t * mu1 + &c, &t * cov * t.transpose(), (pi0, 1.0 - pi0))).unwrap();
        let tp = affine(&pts, &t, &c);
        for j in 0..pts.nrows() {
            let a = base.statistic(pts.row(j).transpose().as_slice());
            let b = moved.statistic(tp.row(j).transpose().as_slice());
            prop_assert!((a - b).abs() < 1e-10 * (1.0 + a.abs()), "{a} vs {b}");
            if (a - base.threshold).abs() > 1e-8 {
                prop_assert_eq!(
                    base.predict(pts.row(j).transpose().as_slice()),
                    moved.predict(tp.row(j).transpose().as_slice())
                );
            }
        }
    }

    #[test]
    fn lda_larger_class1_prior_never_moves_to_class0(
        mu0 in vec3(), mu1 in vec3(), cov in spd(3), pts in matrix(20, 3),
        pi1 in 0.05..0.9f64, step in 0.0..0.09f64,
    ) {
        let a = lda_train(&params(mu0.clone(), mu1.clone(), cov.clone(), (1.0 - pi1, pi1))).unwrap();
        let hi = pi1 + step;
        let b = lda_train(&params(mu0, mu1, cov, (1.0 - hi, hi))).unwrap();
        for row in pts.row_iter() {
            let x: Vec<f64> = row.iter().cloned().collect();
            prop_assert!(!(a.predict(&x) == 1 && b.predict(&x) == 0));
        }
    }

    #[test]
    fn lda_label_swap_inverts(mu0 in vec3(), mu1 in vec3(), cov in spd(3), pts in matrix(20, 3), pi0 in 0.1..0.9f64) {
        let a = lda_train(&params(mu0.clone(), mu1.clone(), cov.clone(), (pi0, 1.0 - pi0))).unwrap();
        let b = lda_train(&params(mu1, mu0, cov, (1.0 - pi0, pi0))).unwrap();
        for row in pts.row_iter() {
            let x: Vec<f64> = row.iter().cloned().collect();
            if (a.statistic(&x) - a.threshold).abs() > 1e-9 {
                prop_assert_eq!(a.predict(&x), 1 - b.predict(&x));
            }
        }
    }
}

// ---------------------------------------------------------------- LSVM

/// Minimum of `½ xᵀQx + cᵀx` over `0 ≤ x ≤ C`, `yᵀx = 0`, by enumerating which
/// coordinates sit at 0, at C or strictly between and solving each face's KKT system.
fn brute_force_svm_dual(q: &DMatrix<f64>, y: &DVector<f64>, c_reg: f64) -> f64 {
    let n = q.nrows();
    let mut best = f64::INFINITY;
    let mut state = vec![0u8; n];
    loop {
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        let mut x = DVector::from_fn(n, |i, _| if state[i] == 1 { c_reg } else { 0.0 });
        let nf = free.len();
        let ok = if nf == 0 {
            true
        } else {
            // [Q_FF y_F; y_Fᵀ 0] [x_F; ν] = [1 - Q_F,fixed x_fixed; -y_fixedᵀ x_fixed]
            let mut k = DMatrix::zeros(nf + 1, nf + 1);
            let mut rhs = DVector::zeros(nf + 1);
            for (a, &i) in free.iter().enumerate() {
                for (b, &j) in free.iter().enumerate() {
                    k[(a, b)] = q[(i, j)];
                }
                k[(a, nf)] = y[i];
                k[(nf, a)] = y[i];
                rhs[a] = 1.0 - (0..n).map(|j| q[(i, j)] * x[j]).sum::<f64>();
            }
            rhs[nf] = -(0..n).map(|j| y[j] * x[j]).sum::<f64>();
            let svd = k.clone().svd(true, true);
            match svd.solve(&rhs, 1e-11) {
                Ok(sol) if (&k * &sol - &rhs).amax() < 1e-8 => {
                    for (a, &i) in free.iter().enumerate() {
                        x[i] = sol[a];
                    }
                    free.iter().all(|&i| x[i] >= -1e-12 && x[i] <= c_reg + 1e-12)
                }
                _ => false,
            }
        };
        if ok && y.dot(&x).abs() < 1e-9 {
            let obj = 0.5 * (x.transpose() * q * &x)[0] - x.sum();
            best = best.min(obj);
        }
        let mut i = 0;
        while i < n && state[i] == 2 {
            state[i] = 0;
            i += 1;
        }
        if i == n {
            return best;
        }
        state[i] += 1;
    }
}

fn labelled(n: usize) -> impl Strategy<Value = Vec<u8>> {
    proptest::collection::vec(0u8..=1, n).prop_filter("both classes", |l| l.contains(&0) && l.contains(&1))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lsvm_single_time_point_matches_dense_qp(
        (x, labels) in (4usize..=8).prop_flat_map(|n| (matrix(n, 2), labelled(n))),
        c_reg in 0.05..5.0f64,
    ) {
        let n = x.nrows();
        let ds = LongitudinalDataset::new(x.clone(), labels.clone(), 2, 1).unwrap();
        let model = fit_lsvm(&ds, c_reg, &LsvmOptions::default()).unwrap();
        let y = DVector::from_iterator(n, labels.iter().map(|&g| label_to_sign(g)));
        let k = &x * x.transpose();
        let q = DMatrix::from_fn(n, n, |i, j| y[i] * y[j] * k[(i, j)]);
        let oracle = brute_force_svm_dual(&q, &y, c_reg);
        let got = *model.dual_objectives.last().unwrap();
        prop_assert!((got - oracle).abs() < 1e-6, "solver {got} oracle {oracle}");
        prop_assert!(model.alpha.iter().all(|&a| (-1e-12..=c_reg + 1e-12).contains(&a)));
        prop_assert!(model.alpha.dot(&y).abs() <= 1e-8);
    }

    #[test]
    fn lsvm_label_flip_negates_w(
        (x, labels) in (6usize..=12).prop_flat_map(|n| (matrix(n, 4), labelled(n))),
        c_reg in 0.1..5.0f64,
    ) {
        let opts = LsvmOptions { max_iter: 5, threshold: 0.0, ..LsvmOptions::default() };
        let a = fit_lsvm(&LongitudinalDataset::new(x.clone(), labels.clone(), 2, 2).unwrap(), c_reg, &opts).unwrap();
        let flipped: Vec<u8> = labels.iter().map(|&g| 1 - g).collect();
        let b = fit_lsvm(&LongitudinalDataset::new(x.clone(), flipped, 2, 2).unwrap(), c_reg, &opts).unwrap();
        let scale = 1.0 + a.w.amax();
        prop_assert!((&a.w + &b.w).amax() < 1e-5 * scale, "{} vs {}", a.w, b.w);
        prop_assert!((a.b + b.b).abs() < 1e-5 * scale);
        for row in x.row_iter() {
            let v: Vec<f64> = row.iter().cloned().collect();
            if a.decision(&v).abs() > 1e-3 * scale {
                prop_assert_eq!(a.predict(&v), 1 - b.predict(&v));
            }
        }
    }

    #[test]
    fn lsvm_first_alpha_step_is_svm_on_doubled_inputs(
        (x, labels) in (4usize..=10).prop_flat_map(|n| (matrix(n, 2), labelled(n))),
        c_reg in 0.1..5.0f64,
    ) {
        let n = x.nrows();
        let twice = DMatrix::from_fn(n, 4, |j, c| x[(j, c % 2)]);
        let rep = fit_lsvm(&LongitudinalDataset::new(twice, labels.clone(), 2, 2).unwrap(), c_reg, &LsvmOptions::default()).unwrap();
        let single = fit_lsvm(&LongitudinalDataset::new(&x * 2.0, labels, 2, 1).unwrap(), c_reg, &LsvmOptions::default()).unwrap();
        prop_assert!((rep.dual_objectives[0] - single.dual_objectives[0]).abs() < 1e-6 * (1.0 + single.dual_objectives[0].abs()));
    }

    #[test]
    fn gram_blocks_match_entrywise_products(
        (x, labels) in (2usize..=8).prop_flat_map(|n| (matrix(n, 6), labelled(n))),
    ) {
        let ds = LongitudinalDataset::new(x, labels, 2, 3).unwrap();
        let g = build_gram_blocks(&ds);
        for k1 in 0..3 {
            for k2 in 0..3 {
                for i in 0..ds.n() {
                    for j in 0..ds.n() {
                        let yy = label_to_sign(ds.labels[i]) * label_to_sign(ds.labels[j]);
                        let dot: f64 = (0..2).map(|l| ds.value(i, l, k1) * ds.value(j, l, k2)).sum();
                        prop_assert!((g[k1][k2][(i, j)] - yy * dot).abs() < 1e-12);
                    }
                }
            }
        }
    }
}

// ---------------------------------------------------------------- evaluation

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn theta_between_apparent_and_oob(app in 0.0..1.0f64, oob in 0.0..1.0f64, gamma in 0.0..1.0f64) {
        let w = weight(relative_overfit(app, oob, gamma));
        prop_assert!((0.632..=1.0).contains(&w));
        let theta = (1.0 - w) * app + w * oob;
        prop_assert!(theta >= app.min(oob) - 1e-15 && theta <= app.max(oob) + 1e-15);
    }

    #[test]
    fn basic_interval_widens_as_alpha_shrinks(
        mut wb in proptest::collection::vec(-0.3..0.3f64, 50..200),
        theta in 0.0..1.0f64,
        a1 in 0.01..0.5f64,
        shrink in 0.0..1.0f64,
    ) {
        wb.sort_by(|a, b| a.total_cmp(b));
        let a2 = a1 * shrink.max(1e-3);
        let (lo1, hi1) = interval(theta, &wb, a1, CiRule::Basic);
        let (lo2, hi2) = interval(theta, &wb, a2, CiRule::Basic);
        prop_assert!(lo1 <= hi1 && lo2 <= hi2);
        prop_assert!(lo2 <= lo1 + 1e-15 && hi2 >= hi1 - 1e-15);
        let (dlo, dhi) = interval(theta, &wb, a1, CiRule::Displayed);
        prop_assert!(dlo <= dhi && (0.0..=1.0).contains(&dlo) && (0.0..=1.0).contains(&dhi));
    }

    #[test]
    fn youden_bounded_and_swap_invariant(
        pairs in proptest::collection::vec((0u8..=1, 0u8..=1), 2..100)
            .prop_filter("both true classes", |v| v.iter().any(|p| p.0 == 0) && v.iter().any(|p| p.0 == 1)),
    ) {
        let truth: Vec<u8> = pairs.iter().map(|p| p.0).collect();
        let pred: Vec<u8> = pairs.iter().map(|p| p.1).collect();
        let swapped: Vec<u8> = pred.iter().map(|&g| 1 - g).collect();
        let a = confusion_metrics(&truth, &pred, 1).unwrap();
        let b = confusion_metrics(&truth, &swapped, 1).unwrap();
        prop_assert!((0.0..=1.0).contains(&a.youden));
        prop_assert!((a.youden - b.youden).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn mardia_affine_invariant(
        (x, a, c) in (2usize..=4).prop_flat_map(|d| (matrix(30, d), invertible(d), proptest::collection::vec(-5.0..5.0f64, d))),
    ) {
        let base = mardia_skewness(&x).unwrap();
        let moved = mardia_skewness(&affine(&x, &a, &DVector::from_vec(c))).unwrap();
        prop_assert!((base.b1p - moved.b1p).abs() < 1e-8 * (1.0 + base.b1p));
    }
}

#[test]
fn bootstrap_tracks_true_accuracy_on_two_gaussians() {
    let d = 2;
    let mu0 = DVector::from_vec(vec![0.0, 0.0]);
    let mu1 = DVector::from_vec(vec![1.0, 0.5]);
    let cov = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 1.0]);
    let draw = |n: usize, seed: u64| {
        let mut rng = rng_from_seed(seed);
        let x0 = sample_mvn(&MvnParams::new(mu0.clone(), cov.clone()).unwrap(), n, &mut rng).unwrap();
        let x1 = sample_mvn(&MvnParams::new(mu1.clone(), cov.clone()).unwrap(), n, &mut rng).unwrap();
        LongitudinalDataset::from_classes(&x0, &x1, d, 1).unwrap()
    };
    let lda = |train: &LongitudinalDataset, test: &LongitudinalDataset, _: u64| {
        let model = lda_train(&rmclass::covariance::pooled_params(train, Default::default())?)?;
        Ok((0..test.n()).map(|j| model.predict(test.x.row(j).transpose().as_slice())).collect())
    };
    let train = draw(50, 1);
    let est = bootstrap_632plus(&train, &lda, Measure::Accuracy, 200, 0.05, 7).unwrap();
    let big = draw(50_000, 2);
    let truth = confusion_metrics(&big.labels, &lda(&train, &big, 0).unwrap(), 1).unwrap().accuracy;
    assert!((est.theta_632plus - truth).abs() < 0.05, "{} vs {truth}", est.theta_632plus);
    assert!(est.ci.0 <= est.ci.1);
}
