use gauss_paths::arith::{
    enumerate_family, eta_z, gcd, in_d, is_prime, jacobi, pow_mod, EpsilonSignature, FactorSieve,
};
use gauss_paths::atlas::{enumerate_signatures, gsharp_eval, gsharp_grid, ShapeSpec};
use gauss_paths::cli::{fmt_float, parse_path_csv, path_csv};
use gauss_paths::expsums::{s_star, s_star_periodic};
use gauss_paths::paths::{path_eval, path_grid, sup_distance};
use gauss_paths::random_model::{sample_multiplicative, sample_multiplicative_stream};
use num_rational::Ratio;
use proptest::prelude::*;

fn odd_prime() -> impl Strategy<Value = u64> {
    (3u64..2000).prop_filter("prime", |&p| is_prime(p))
}

fn modulus() -> impl Strategy<Value = u64> {
    (5u64..3000).prop_filter("in D", |&c| in_d(c))
}

fn signature(z: u64) -> impl Strategy<Value = EpsilonSignature> {
    let n = enumerate_signatures(z).unwrap().len();
    (0..n).prop_map(move |i| enumerate_signatures(z).unwrap()[i].clone())
}

proptest! {
    #[test]
    fn jacobi_matches_euler(p in odd_prime(), a in -5000i64..5000) {
        let r = a.rem_euclid(p as i64) as u64;
        let euler = match pow_mod(r, (p - 1) / 2, p) {
            0 => 0,
            1 => 1,
            _ => -1,
        };
        prop_assert_eq!(jacobi(a, p).unwrap() as i64, euler);
    }

    #[test]
    fn jacobi_multiplicative_in_modulus(a in -500i64..500, m in (1u64..200).prop_map(|k| 2 * k + 1), n in (1u64..200).prop_map(|k| 2 * k + 1)) {
        prop_assert_eq!(jacobi(a, m * n).unwrap(), jacobi(a, m).unwrap() * jacobi(a, n).unwrap());
    }

    #[test]
    fn sampled_model_is_completely_multiplicative(seed in any::<u64>(), a in 1i64..150, b in 1i64..150) {
        let x = sample_multiplicative(30_000, None, seed).unwrap();
        prop_assert_eq!(x.value(a * b).unwrap(), x.value(a).unwrap() * x.value(b).unwrap());
        prop_assert_eq!(x.value(-a).unwrap(), x.value(a).unwrap());
        prop_assert_ne!(x.prime_value(2).unwrap(), 0);
    }

    #[test]
    fn sampling_is_deterministic(seed in any::<u64>(), stream in 0u64..1000) {
        let a = sample_multiplicative_stream(500, None, seed, stream).unwrap();
        let b = sample_multiplicative_stream(500, None, seed, stream).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn path_reflection(c in modulus(), t in 0.0f64..=1.0) {
        // The path is symmetric under t -> 1 - t, z -> 1 - conj(z).
        let a = path_eval(c, t).unwrap();
        let b = path_eval(c, 1.0 - t).unwrap();
        prop_assert!((a + b.conj() - 1.0).norm() < 1e-9);
    }

    #[test]
    fn path_grid_endpoints(c in modulus(), r in 1usize..64) {
        let p = path_grid(c, r).unwrap();
        prop_assert!(p.values[0].norm() < 1e-12);
        prop_assert!((p.values[r] - 1.0).norm() < 1e-9);
    }

    #[test]
    fn s_star_conjugation(sig in signature(5), q in prop::sample::select(vec![7u64, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43]), a in 1i64..1000) {
        prop_assume!(gcd(a as u64, q) == 1);
        let x = s_star(a, q, &sig).unwrap();
        let y = s_star(-a, q, &sig).unwrap();
        prop_assert!((x - y.conj()).norm() < 1e-12);
        prop_assert!((x - s_star_periodic(a, q, &sig).unwrap()).norm() < 1e-12);
    }

    #[test]
    fn families_partition_by_signature(q in 3u64..4000, z in 2u64..8) {
        // Every member of the unconditioned family carries exactly one signature.
        let all = enumerate_family(q, None).unwrap();
        let total: usize = enumerate_signatures(z)
            .unwrap()
            .iter()
            .map(|s| enumerate_family(q, Some(s)).unwrap().len())
            .sum();
        prop_assert_eq!(total, all.len());
    }

    #[test]
    fn conditioned_weight_at_z2(h in 1i64..5000, e2 in prop_oneof![Just(1i8), Just(-1i8)]) {
        // With Z = 2, η_Z(h) is ε_2^{v_2(h)} times η of the odd part when that part is a square.
        let sig = EpsilonSignature::new(2, &[e2]).unwrap();
        let v2 = h.trailing_zeros();
        let odd = h >> v2;
        let root = (odd as f64).sqrt().round() as i64;
        let want = if root * root == odd {
            gauss_paths::arith::eta(odd) * (e2 as i128).pow(v2)
        } else {
            Ratio::from_integer(0)
        };
        prop_assert_eq!(eta_z(h, &sig), want);
    }

    #[test]
    fn csv_round_trip(c in modulus(), r in 1usize..40) {
        let p = path_grid(c, r).unwrap();
        let text = path_csv(&p);
        let q = parse_path_csv(&text, &p.label).unwrap();
        prop_assert_eq!(path_csv(&q), text);
        for (a, b) in p.values.iter().zip(&q.values) {
            prop_assert!((a - b).norm() <= 1e-11 * a.norm().max(1e-300) + 1e-300);
        }
    }

    #[test]
    fn float_format_is_stable(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        let s = fmt_float(x);
        let y: f64 = s.parse().unwrap();
        prop_assert_eq!(fmt_float(y), s);
        prop_assert!((x - y).abs() <= 5e-12 * x.abs());
    }

    #[test]
    fn shape_grid_matches_pointwise(sig in signature(5), i in 0usize..=32) {
        let spec = ShapeSpec::new(&sig, 1e-3).unwrap();
        let grid = gsharp_grid(&spec, 32).unwrap();
        let direct = gsharp_eval(&spec, i as f64 / 32.0).unwrap();
        prop_assert!((grid.values[i] - direct).norm() < 1e-9);
        prop_assert_eq!(sup_distance(&grid, &grid).unwrap(), 0.0);
    }
}

#[test]
fn factor_sieve_agrees_with_trial_division() {
    let s = FactorSieve::new(10_000);
    for n in 2..=10_000usize {
        let f = s.factor(n);
        let back: usize = f.iter().map(|&(p, e)| p.pow(e)).product();
        assert_eq!(back, n);
        assert!(f.iter().all(|&(p, _)| is_prime(p as u64)));
    }
}
