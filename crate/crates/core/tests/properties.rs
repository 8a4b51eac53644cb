use dfrc_conic::hermitian::{hvec, C64};
use dfrc_core::array::{beampattern, ideal_beampattern, quadratic_form, steering_vector, AngleGrid, ArrayConfig, BeampatternSpec};
use dfrc_core::channel::{
    diagonalwise_index, estimate_covariance, generate_rayleigh, sample_error_matrix, EntryLaw, ErrorModel, ErrorSampler,
};
use dfrc_core::optimizer::{antenna_powers, equalize_antenna_power, extract_rank1, hermitian_eigen, penalty};
use dfrc_core::outage::{
    build_b, epsilon_of, lmi_block, sinr_from_covariance, soc_margin, sum_rate, variance_dependent, variance_independent,
};
use dfrc_core::radar_loss::{combined_loss, RadarLoss, RadarLossConfig};
use dfrc_core::stream_rng;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn cn(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

fn vector(n: usize, rng: &mut ChaCha8Rng) -> DVector<C64> {
    DVector::from_fn(n, |_, _| cn(rng))
}

fn hermitian(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<C64> {
    let g = DMatrix::from_fn(n, n, |_, _| cn(rng));
    (&g + g.adjoint()).map(|z| z * 0.5)
}

/// PSD of rank at most `rank`.
fn psd(n: usize, rank: usize, rng: &mut ChaCha8Rng) -> DMatrix<C64> {
    let g = DMatrix::from_fn(n, rank, |_, _| cn(rng));
    &g * g.adjoint()
}

fn is_hermitian(m: &DMatrix<C64>, tol: f64) -> bool {
    (m - m.adjoint()).norm() <= tol * (1.0 + m.norm())
}

fn loss_config(n: usize, dois_deg: &[f64], delta: f64) -> RadarLossConfig {
    let arr = ArrayConfig::half_wavelength(n, 5e9).unwrap();
    let dois = dois_deg.iter().map(|d| d.to_radians()).collect();
    let spec = BeampatternSpec::rectangular(AngleGrid::uniform(61).unwrap(), dois, 5f64.to_radians()).unwrap();
    RadarLossConfig::new(delta, arr, spec).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn steering_vector_phases(n in 1usize..16, theta in -1.5f64..1.5) {
        let cfg = ArrayConfig::half_wavelength(n, 5e9).unwrap();
        let a = steering_vector(&cfg, theta).unwrap();
        prop_assert!((a[0] - C64::new(1.0, 0.0)).norm() < 1e-12);
        for (i, z) in a.iter().enumerate() {
            // half-wavelength spacing: phase pi * n * sin(theta)
            let expect = C64::from_polar(1.0, std::f64::consts::PI * i as f64 * theta.sin());
            prop_assert!((z - expect).norm() < 1e-9);
        }
    }

    #[test]
    fn ideal_pattern_is_indicator(half_deg in 0.5f64..10.0, d0 in -60f64..60.0) {
        let grid = AngleGrid::uniform(181).unwrap();
        let dois = [d0.to_radians()];
        let half = half_deg.to_radians();
        let phi = ideal_beampattern(&dois, half, &grid).unwrap();
        for (t, v) in grid.points().iter().zip(&phi) {
            let inside = (t - dois[0]).abs() <= half;
            prop_assert_eq!(*v, if inside { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn beampattern_is_nonnegative_quadratic_form(seed in any::<u64>(), n in 2usize..8, rank in 1usize..4) {
        let mut rng = stream_rng(seed, 0);
        let r = psd(n, rank, &mut rng);
        let cfg = ArrayConfig::half_wavelength(n, 5e9).unwrap();
        let grid = AngleGrid::uniform(37).unwrap();
        let p = beampattern(&cfg, &r, &grid).unwrap();
        for (t, v) in grid.points().iter().zip(&p) {
            prop_assert!(*v >= -1e-9 * r.norm());
            let q = quadratic_form(&r, &steering_vector(&cfg, *t).unwrap());
            prop_assert!((q.re - v).abs() <= 1e-9 * (1.0 + v.abs()));
        }
    }

    #[test]
    fn combined_loss_composes(seed in any::<u64>(), delta in 0.0f64..5.0, alpha in 1e-3f64..3.0, m in 1usize..4) {
        let mut rng = stream_rng(seed, 0);
        let dois: Vec<f64> = (0..m).map(|i| -40.0 + 40.0 * i as f64).collect();
        let cfg = loss_config(6, &dois, delta);
        let r = psd(6, 2, &mut rng);
        let b = combined_loss(&cfg, &r, alpha).unwrap();
        prop_assert!(b.l1 >= 0.0 && b.l2 >= 0.0);
        prop_assert_eq!(b.combined, b.l1 + delta * b.l2);
        if m == 1 {
            prop_assert_eq!(b.l2, 0.0);
        }
        // the conic residual map reproduces the same value
        let loss = RadarLoss::new(cfg).unwrap();
        let conic = loss.residual_map().weighted_sq_norm(&hvec(&r), alpha);
        prop_assert!((conic - b.combined).abs() <= 1e-8 * (1.0 + b.combined));
    }

    #[test]
    fn covariance_estimate_is_rank_one(seed in any::<u64>(), n in 1usize..10) {
        let mut rng = stream_rng(seed, 0);
        let h = vector(n, &mut rng);
        let c = estimate_covariance(&h).unwrap();
        prop_assert!(is_hermitian(&c, 1e-14));
        let trace: f64 = (0..n).map(|i| c[(i, i)].re).sum();
        prop_assert!((trace - h.norm_squared()).abs() <= 1e-12 * trace);
        let (vals, _) = hermitian_eigen(&c);
        prop_assert!(vals.iter().skip(1).all(|v| v.abs() <= 1e-10 * vals[0]));
    }

    #[test]
    fn diagonalwise_index_is_ordered_bijection(n in 1usize..12) {
        let idx = diagonalwise_index(n);
        prop_assert_eq!(idx.len(), n * (n + 1) / 2);
        let mut seen = std::collections::HashSet::new();
        for w in idx.windows(2) {
            prop_assert!(w[0].1 - w[0].0 <= w[1].1 - w[1].0);
        }
        for &(i, j) in &idx {
            prop_assert!(1 <= i && i <= j && j <= n);
            prop_assert!(seen.insert((i, j)));
        }
    }

    #[test]
    fn sampled_errors_are_hermitian(seed in any::<u64>(), n in 2usize..8, law in 0usize..3, lambda in 0.1f64..2.0) {
        let entry_law = [EntryLaw::Uniform, EntryLaw::Gaussian, EntryLaw::SumOfUniforms][law];
        for model in [
            ErrorModel::independent_uniform(n, 0.005),
            ErrorModel::Dependent { lambda_decay: lambda, entry_law, target_variance: None },
        ] {
            let e = sample_error_matrix(&model, n, seed).unwrap();
            prop_assert!(is_hermitian(&e, 1e-14));
            prop_assert_eq!(e, sample_error_matrix(&model, n, seed).unwrap());
        }
    }

    #[test]
    fn sinr_threshold_matches_trace_form(seed in any::<u64>(), n in 2usize..7, k_users in 1usize..4, gamma in 0.1f64..20.0) {
        let mut rng = stream_rng(seed, 0);
        let w: Vec<DVector<C64>> = (0..k_users).map(|_| vector(n, &mut rng)).collect();
        let c = estimate_covariance(&vector(n, &mut rng)).unwrap();
        let sigma2 = 0.01;
        let lifted: Vec<DMatrix<C64>> = w.iter().map(|v| v * v.adjoint()).collect();
        for k in 0..k_users {
            let b = build_b(&lifted, k, gamma).unwrap();
            prop_assert!(is_hermitian(&b, 1e-12));
            let sinr = sinr_from_covariance(&c, &w, sigma2, k).unwrap();
            let tr = hvec(&b).dot(&hvec(&c));
            // SINR >= gamma iff Tr[B C] >= sigma2, away from the boundary
            if (sinr / gamma - 1.0).abs() > 1e-9 {
                prop_assert_eq!(sinr >= gamma, tr >= sigma2);
            }
        }
    }

    #[test]
    fn epsilon_positive_and_increasing(p in 0.001f64..0.49, q in 0.001f64..0.49) {
        let (ep, eq) = (epsilon_of(p).unwrap(), epsilon_of(q).unwrap());
        prop_assert!(ep.is_finite() && ep > 0.0);
        if p < q {
            prop_assert!(ep < eq);
        }
    }

    #[test]
    fn variance_formulas(seed in any::<u64>(), n in 2usize..6) {
        let mut rng = stream_rng(seed, 0);
        let b = hermitian(n, &mut rng);
        let sigma = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>());
        let sigma = (&sigma + sigma.transpose()) * 0.5;
        let direct: f64 = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| b[(i, j)].norm_sqr() * sigma[(i, j)].powi(2)).sum();
        prop_assert!((variance_independent(&b, &sigma).unwrap() - direct).abs() <= 1e-12 * (1.0 + direct));

        let model = ErrorModel::Dependent { lambda_decay: 0.5, entry_law: EntryLaw::Uniform, target_variance: Some(0.005) };
        let cov = ErrorSampler::new(&model, n).unwrap().covariance();
        let v = variance_dependent(&b, &cov.gamma_factor()).unwrap();
        let vb = DVector::from_column_slice(b.as_slice());
        let quad = (vb.adjoint() * cov.gamma() * &vb)[(0, 0)];
        prop_assert!(v >= 0.0);
        prop_assert!((v - quad.re).abs() <= 1e-10 * (1.0 + v) && quad.im.abs() <= 1e-10 * (1.0 + v));
    }

    #[test]
    fn lmi_equivalent_to_soc(seed in any::<u64>(), n in 2usize..5, p in 0.02f64..0.4, scale in 0.01f64..10.0) {
        let mut rng = stream_rng(seed, 0);
        let w: Vec<DVector<C64>> = (0..2).map(|_| vector(n, &mut rng)).collect();
        let lifted: Vec<DMatrix<C64>> = w.iter().map(|v| v * v.adjoint() * C64::new(scale, 0.0)).collect();
        let b = build_b(&lifted, 0, 1.0).unwrap();
        let c = estimate_covariance(&vector(n, &mut rng)).unwrap();
        let cov = ErrorSampler::new(&ErrorModel::independent_uniform(n, 0.05), n).unwrap().covariance();
        let eps = epsilon_of(p).unwrap();
        let margin = soc_margin(&b, &c, 0.01, eps, &cov);
        let d = lmi_block(&b, &c, 0.01, eps, &cov);
        let min_eig = SymmetricEigen::new(d).eigenvalues.min();
        if margin.abs() > 1e-8 * (1.0 + b.norm()) {
            prop_assert_eq!(margin >= 0.0, min_eig >= 0.0);
        }
    }

    #[test]
    fn sum_rate_nonnegative(seed in any::<u64>(), k in 1usize..4, duty in 0.0f64..1.0) {
        let mut rng = stream_rng(seed, 0);
        let channels = generate_rayleigh(k, 6, 0.01, &mut rng).unwrap();
        let w: Vec<DVector<C64>> = (0..k).map(|_| vector(6, &mut rng)).collect();
        prop_assert!(sum_rate(&w, &channels, duty).unwrap() >= 0.0);
    }

    #[test]
    fn rank_one_extraction(seed in any::<u64>(), n in 2usize..8, rank in 1usize..4) {
        let mut rng = stream_rng(seed, 0);
        let w = psd(n, rank, &mut rng);
        let r = extract_rank1(&w);
        let (vals, _) = hermitian_eigen(&w);
        prop_assert!((r.w.norm_squared() - vals[0]).abs() <= 1e-9 * vals[0]);
        prop_assert!((r.ratio - vals[1].max(0.0) / vals[0]).abs() <= 1e-9);
        if rank == 1 {
            prop_assert!(r.ratio < 1e-10);
        }
    }

    #[test]
    fn penalty_majorizes_rank_gap(seed in any::<u64>(), n in 2usize..6) {
        let mut rng = stream_rng(seed, 0);
        let w = vec![psd(n, 3, &mut rng), psd(n, 2, &mut rng)];
        let anchors = vec![psd(n, 2, &mut rng), psd(n, 1, &mut rng)];
        let gap: f64 = w
            .iter()
            .map(|m| {
                let (vals, _) = hermitian_eigen(m);
                vals.iter().map(|v| v.max(0.0)).sum::<f64>() - vals[0]
            })
            .sum();
        let scale = 1e-9 * (1.0 + w.iter().map(|m| m.norm()).sum::<f64>());
        prop_assert!(penalty(&w, &anchors).unwrap() >= gap - scale);
        prop_assert!((penalty(&w, &w).unwrap() - gap).abs() <= scale);
    }

    #[test]
    fn equalized_rows_carry_target_power(seed in any::<u64>(), n in 1usize..8, k in 1usize..4, target in 0.01f64..2.0) {
        let mut rng = stream_rng(seed, 0);
        let mut w: Vec<DVector<C64>> = (0..k).map(|_| vector(n, &mut rng)).collect();
        equalize_antenna_power(&mut w, target).unwrap();
        for p in antenna_powers(&w) {
            prop_assert!((p - target).abs() <= 1e-12 * target);
        }
    }
}
