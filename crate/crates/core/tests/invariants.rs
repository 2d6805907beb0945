use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::One;
use proptest::prelude::*;

use llt_core::analysis::{phi_n, un_pmf};
use llt_core::castle::{build_synthetic_castle, code_level, numeric_alphabet, ratio, verify_identities};
use llt_core::construction::{block_pmf, block_product_enumeration, block_table, index_i, index_j, y_i_pmf};
use llt_core::lattice::{char_fn, convolve, convolve_power, invert_to_pmf, LatticePmf, SparseLaw};

fn exact_law() -> impl Strategy<Value = LatticePmf> {
    (-4i64..4, prop::collection::vec(0u32..6, 1..6))
        .prop_filter("needs positive mass", |(_, w)| w.iter().any(|&x| x > 0))
        .prop_map(|(offset, w)| {
            let total: u32 = w.iter().sum();
            let masses = w.iter().map(|&x| ratio(x as i64, total as i64)).collect();
            LatticePmf::exact(offset, masses).unwrap()
        })
}

fn float_law() -> impl Strategy<Value = LatticePmf> {
    (-6i64..6, prop::collection::vec(0.0f64..1.0, 1..9))
        .prop_filter("needs positive mass", |(_, w)| w.iter().sum::<f64>() > 1e-3)
        .prop_map(|(offset, w)| LatticePmf::float_normalized(offset, w).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exact_convolution_commutes(a in exact_law(), b in exact_law()) {
        prop_assert_eq!(convolve(&a, &b).unwrap(), convolve(&b, &a).unwrap());
    }

    #[test]
    fn exact_convolution_associates(a in exact_law(), b in exact_law(), c in exact_law()) {
        let left = convolve(&convolve(&a, &b).unwrap(), &c).unwrap();
        let right = convolve(&a, &convolve(&b, &c).unwrap()).unwrap();
        prop_assert_eq!(left.exact_points(), right.exact_points());
        let total: BigRational = left.exact_points().unwrap().into_iter().map(|p| p.1).sum();
        prop_assert!(total.is_one());
    }

    #[test]
    fn char_fn_is_multiplicative(a in float_law(), b in float_law(), t in -3.2f64..3.2) {
        let ab = convolve(&a, &b).unwrap();
        let d = char_fn(&ab, t) - char_fn(&a, t) * char_fn(&b, t);
        prop_assert!(d.norm() < 1e-13, "defect {}", d.norm());
    }

    #[test]
    fn inversion_recovers_law(a in float_law(), pad in 0u64..5) {
        let bound = a.max_support().abs().max(a.min_support().abs()) as u64 + pad;
        let phi = |t: f64| char_fn(&a, t);
        let back = invert_to_pmf(&phi, bound).unwrap().pmf;
        prop_assert!(back.sup_distance(&a) < 1e-14);
    }

    #[test]
    fn sparse_power_matches_dense(a in float_law(), m in 1u64..12) {
        let dense = convolve_power(&a, m).unwrap();
        let sparse = SparseLaw::from_pmf(&a, 0.0).power(m).unwrap().to_pmf(1 << 20).unwrap();
        prop_assert!(dense.sup_distance(&sparse) < 1e-14);
    }

    #[test]
    fn block_table_matches_enumeration(k in (1u32..6).prop_map(|h| 2 * h), a in 1i64..50, b in 1i64..50) {
        let (a, b) = (ratio(1, a), ratio(1, b));
        let table = LatticePmf::exact_from_points(block_table(1 << k, a.clone(), b.clone())).unwrap();
        let brute = LatticePmf::exact_from_points(block_product_enumeration(k, a, b)).unwrap();
        prop_assert_eq!(table.exact_points(), brute.exact_points());
    }

    #[test]
    fn index_windows_match_real_bounds(n in 5u64..1_000_000_000) {
        let lg = (n as f64).log2();
        let i_set = index_i(n).unwrap();
        for k in 2u32..40 {
            let inside = k % 2 == 0 && (1u64 << k) < n && (k * k) as f64 > lg;
            prop_assert_eq!(i_set.contains(&k), inside, "k = {}", k);
        }
        for k in index_j(n).unwrap() {
            prop_assert!(i_set.contains(&k));
            prop_assert!(k as f64 <= lg / 4.0 - 3f64.log2() + 1e-12);
        }
    }

    #[test]
    fn y_laws_are_symmetric(n in 5u64..300, i in 1u64..300) {
        prop_assume!(i < n);
        let y = y_i_pmf(i, n).unwrap();
        prop_assert!(y.is_symmetric(1e-15));
        prop_assert!((y.total_mass() - 1.0).abs() < 1e-14);
    }
}

#[test]
fn block_and_un_laws_are_symmetric() {
    for k in [2, 4, 6, 8] {
        assert!(block_pmf(k).unwrap().law.is_symmetric(0.0));
    }
    for n in [20, 300, 5000] {
        let u = un_pmf(n).unwrap();
        assert!(u.is_symmetric(1e-15));
        assert!(u.mean().abs() < 1e-9);
    }
}

#[test]
fn phi_n_is_even_and_real() {
    for t in [0.01, 0.3, 1.7, 3.0] {
        assert_eq!(phi_n(1000, t).unwrap(), phi_n(1000, -t).unwrap());
        let law = un_pmf(1000).unwrap();
        let direct: Complex64 = char_fn(&law, t);
        assert!((direct.re - phi_n(1000, t).unwrap()).abs() < 1e-12);
        assert!(direct.im.abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn random_castles_verify(l in 1u32..3, atoms in 1u32..3, seed in 0u64..1000, w in 1i64..9, size in 2usize..4) {
        let c = build_synthetic_castle(l, atoms, seed).unwrap();
        prop_assert!(c.audit().ok());
        let mut marginal: Vec<BigRational> = (0..size - 1).map(|i| ratio(w + i as i64, 10 * size as i64)).collect();
        let rest = BigRational::one() - marginal.iter().sum::<BigRational>();
        marginal.push(rest);
        let s = code_level(&c, &numeric_alphabet(size), &marginal, l).unwrap();
        prop_assert!(s.audit(&c).is_empty());
        prop_assert!(verify_identities(&c, &s).unwrap().all_hold());
    }
}
