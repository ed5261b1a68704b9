use num_complex::Complex64;
use proptest::prelude::*;
use qutrit_core::dataset::{featurize, split, ClassLabel};
use qutrit_core::qmat::*;
use qutrit_core::sampler::{random_density_hs, random_separable_mixture, SeedSpec};
use qutrit_core::tomo::{decode, encode, encode_matrix, Tomogram, TOMOGRAM_LEN};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

fn hermitian(dim: usize, seed: u64) -> ComplexMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = ComplexMatrix::from_fn(dim, |_, _| c64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    g.add_scaled(&g.adjoint(), 1.0).scale(0.5)
}

fn hs(seed: u64) -> DensityMatrix {
    random_density_hs(TWO_QUTRITS, SeedSpec::new(seed, 0)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eigendecomposition_contract(seed in any::<u64>(), dim in prop::sample::select(vec![3usize, 9])) {
        let m = hermitian(dim, seed);
        let s = eig_hermitian(&m).unwrap();
        prop_assert!(s.reconstruct().add_scaled(&m, -1.0).frobenius_norm() <= 1e-9);
        prop_assert!((s.values.iter().sum::<f64>() - m.trace().re).abs() <= 1e-10);
        prop_assert!(s.values.windows(2).all(|w| w[0] <= w[1]));
        let gram = s.vectors.adjoint().matmul(&s.vectors);
        prop_assert!(gram.max_abs_diff(&ComplexMatrix::identity(dim)) <= 1e-9);
        for k in 0..dim {
            let v = s.vector(k);
            let mv = m.apply(&v);
            let err = mv.iter().zip(&v).map(|(a, b)| (a - b * s.values[k]).norm()).fold(0.0, f64::max);
            prop_assert!(err <= 1e-9);
        }
    }

    #[test]
    fn partial_transpose_preserves_trace_and_hermiticity(seed in any::<u64>()) {
        let rho = hs(seed);
        for sub in [Subsystem::A, Subsystem::B] {
            let pt = partial_transpose(rho.matrix(), sub).unwrap();
            prop_assert!(pt.is_hermitian(1e-12));
            prop_assert!((pt.trace() - rho.matrix().trace()).norm() <= 1e-14);
            prop_assert_eq!(&partial_transpose(&pt, sub).unwrap(), rho.matrix());
        }
    }

    #[test]
    fn partial_transpose_involution_on_dyadic_entries(entries in prop::collection::vec((-1024i32..1024, -1024i32..1024), 81)) {
        let m = ComplexMatrix::from_vec(entries.iter().map(|&(a, b)| c64(a as f64 / 1024.0, b as f64 / 1024.0)).collect()).unwrap();
        let twice = partial_transpose(&partial_transpose(&m, Subsystem::B).unwrap(), Subsystem::B).unwrap();
        prop_assert_eq!(twice, m);
    }

    #[test]
    fn separable_mixtures_are_ppt(seed in any::<u64>(), k in 1usize..30) {
        let rho = random_separable_mixture(k, SeedSpec::new(seed, 1)).unwrap();
        prop_assert!(is_ppt(&rho, PPT_TOL).unwrap());
    }

    #[test]
    fn fidelity_is_bounded_and_symmetric(a in any::<u64>(), b in any::<u64>(), p in 0.0f64..1.0) {
        let rho = hs(a);
        let sigma = hs(b).mix(&rho, p).unwrap();
        let f = fidelity(&rho, &sigma).unwrap();
        prop_assert!((-1e-9..=1.0 + 1e-9).contains(&f));
        prop_assert!((f - fidelity(&sigma, &rho).unwrap()).abs() <= 1e-9);
        let unit = (f - 1.0).abs() <= 1e-9;
        let close = trace_distance(rho.matrix(), sigma.matrix()).unwrap() <= 1e-6;
        prop_assert_eq!(unit, close, "F = {}", f);
    }

    #[test]
    fn kron_mixed_product(a in any::<u64>(), b in any::<u64>(), c in any::<u64>(), d in any::<u64>()) {
        let (a, b, c, d) = (hermitian(3, a), hermitian(3, b), hermitian(3, c), hermitian(3, d));
        let lhs = kron(&a, &b).matmul(&kron(&c, &d));
        let rhs = kron(&a.matmul(&c), &b.matmul(&d));
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-12);
        prop_assert!((kron(&a, &b).trace() - a.trace() * b.trace()).norm() <= 1e-12);
    }

    #[test]
    fn encode_after_decode_is_identity(c in prop::collection::vec(-1.0f64..1.0, TOMOGRAM_LEN)) {
        let t = Tomogram::new(c.clone()).unwrap();
        let back = encode_matrix(&decode(&t)).unwrap();
        let err = back.as_slice().iter().zip(&c).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-10);
    }

    #[test]
    fn decode_after_encode_is_identity(seed in any::<u64>()) {
        let rho = hs(seed);
        prop_assert!(decode(&encode(&rho)).max_abs_diff(rho.matrix()) <= 1e-10);
    }

    #[test]
    fn encode_ignores_rehermitization(seed in any::<u64>()) {
        let rho = hs(seed);
        let sym = rho.matrix().add_scaled(&rho.matrix().adjoint(), 1.0).scale(0.5);
        let a = encode(&rho);
        let b = encode_matrix(&sym).unwrap();
        let err = a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-12);
    }

    #[test]
    fn encode_and_decode_are_affine(a in any::<u64>(), b in any::<u64>()) {
        let (rho, sigma) = (hs(a), hs(b));
        let mid = encode(&rho.mix(&sigma, 0.5).unwrap());
        let (ca, cb) = (encode(&rho), encode(&sigma));
        for i in 0..TOMOGRAM_LEN {
            prop_assert!((mid.as_slice()[i] - 0.5 * (ca.as_slice()[i] + cb.as_slice()[i])).abs() <= 1e-12);
        }
        let avg = Tomogram::new(ca.as_slice().iter().zip(cb.as_slice()).map(|(x, y)| 0.5 * (x + y)).collect()).unwrap();
        let lin = decode(&ca).add_scaled(&decode(&cb), 1.0).scale(0.5);
        prop_assert!(decode(&avg).max_abs_diff(&lin) <= 1e-12);
    }

    #[test]
    fn split_is_a_stratified_partition(
        labels in prop::collection::vec(0usize..3, 6..200),
        fraction in 0.05f64..0.95,
        seed in any::<u64>(),
    ) {
        let labels: Vec<ClassLabel> = labels.into_iter().map(|i| ClassLabel::from_index(i).unwrap()).collect();
        let counts: Vec<usize> = ClassLabel::ALL.iter().map(|c| labels.iter().filter(|l| *l == c).count()).collect();
        prop_assume!(counts.iter().all(|&n| n == 0 || n >= 2));
        let idx: Vec<usize> = (0..labels.len()).collect();
        let (train, test) = split(&idx, |&i| labels[i], fraction, SeedSpec::new(seed, 0)).unwrap();
        let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(&all, &idx);
        for (k, class) in ClassLabel::ALL.iter().enumerate() {
            let n_train = train.iter().filter(|&&i| labels[i] == *class).count() as f64;
            if counts[k] > 0 {
                prop_assert!((n_train - counts[k] as f64 * fraction).abs() <= 1.0);
            }
        }
        prop_assert_eq!(split(&idx, |&i| labels[i], fraction, SeedSpec::new(seed, 0)).unwrap(), (train, test));
    }

    #[test]
    fn scaling_standardizes_training_columns(seeds in prop::collection::vec(any::<u64>(), 3..12)) {
        let rows: Vec<Vec<f64>> = seeds.iter().map(|&s| encode(&hs(s)).into_vec()).collect();
        let (scaled, scaler) = featurize(&rows, true).unwrap();
        let n = scaled.len() as f64;
        for j in 0..scaled[0].len() {
            let mean = scaled.iter().map(|r| r[j]).sum::<f64>() / n;
            let var = scaled.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
            prop_assert!(mean.abs() <= 1e-10);
            if scaler.scale[j] != 1.0 {
                prop_assert!((var.sqrt() - 1.0).abs() <= 1e-9, "column {} std {}", j, var.sqrt());
            }
        }
    }
}

#[test]
fn parallel_and_serial_sampling_agree() {
    let serial: Vec<DensityMatrix> = (0..256).map(|i| random_density_hs(9, SeedSpec::new(42, i)).unwrap()).collect();
    let parallel: Vec<DensityMatrix> =
        (0..256u64).into_par_iter().map(|i| random_density_hs(9, SeedSpec::new(42, i)).unwrap()).collect();
    assert_eq!(serial, parallel);
}

/// Purity of `GG†/tr(GG†)` with a separate generator and plain arrays.
fn reference_purity(rng: &mut ChaCha8Rng) -> f64 {
    let mut normal = || {
        let (u, v): (f64, f64) = (rng.gen_range(f64::EPSILON..1.0), rng.gen());
        (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
    };
    let g: Vec<Complex64> = (0..81).map(|_| Complex64::new(normal(), normal())).collect();
    let mut rho = [Complex64::new(0.0, 0.0); 81];
    for i in 0..9 {
        for j in 0..9 {
            rho[i * 9 + j] = (0..9).map(|k| g[i * 9 + k] * g[j * 9 + k].conj()).sum();
        }
    }
    let tr: f64 = (0..9).map(|i| rho[i * 10].re).sum();
    rho.iter().map(|z| z.norm_sqr()).sum::<f64>() / (tr * tr)
}

#[test]
fn hs_purity_matches_reference_sampler() {
    let n = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let oracle = (0..n).map(|_| reference_purity(&mut rng)).sum::<f64>() / n as f64;
    let ours = (0..n as u64).into_par_iter().map(|i| hs(i).purity()).sum::<f64>() / n as f64;
    assert!((ours - oracle).abs() <= 0.005, "{ours} vs {oracle}");
    // both near the closed form 2N/(N²+1) for N = 9
    assert!((oracle - 18.0 / 82.0).abs() <= 0.005, "{oracle}");
}
