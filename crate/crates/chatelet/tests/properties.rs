use chatelet::arith::{gcd, r0};
use chatelet::count::s_x_count;
use chatelet::densities::{n_k, n_k_brute, sigma_p};
use chatelet::forms::samples::{s0, s1, s2};
use chatelet::forms::{SignVector, Surface};
use chatelet::localcount::{rho, rho_brute};
use proptest::prelude::*;

fn surface() -> impl Strategy<Value = Surface> {
    (prop::array::uniform7(-6i64..=6)).prop_filter_map("degenerate forms", |c| {
        Surface::from_coeffs([c[0], c[1]], [c[2], c[3]], [c[4], c[5], c[6]]).ok()
    })
}

fn sample(i: usize) -> Surface {
    [s0(), s1(), s2()][i].clone()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn r0_is_multiplicative(a in 1u64..20_000, b in 1u64..20_000) {
        prop_assume!(gcd(a, b) == 1);
        prop_assert_eq!(r0(a * b), r0(a) * r0(b));
    }

    #[test]
    fn rho_matches_enumeration(s in surface(), d in prop::array::uniform3(1u64..=8)) {
        prop_assume!(d.iter().product::<u64>() <= 300);
        prop_assert_eq!(rho(d, &s).unwrap(), rho_brute(d, &s).unwrap() as u128);
    }

    #[test]
    fn rho_is_multiplicative_on_coprime_blocks(
        s in surface(),
        a in prop::array::uniform3(prop::sample::select(vec![1u64, 2, 3, 4, 6, 9])),
        b in prop::array::uniform3(prop::sample::select(vec![1u64, 5, 7])),
    ) {
        prop_assume!(a.iter().chain(&b).product::<u64>() <= 1000);
        let d = [a[0] * b[0], a[1] * b[1], a[2] * b[2]];
        prop_assert_eq!(rho_brute(d, &s).unwrap(), rho_brute(a, &s).unwrap() * rho_brute(b, &s).unwrap());
    }

    #[test]
    fn n_k_matches_enumeration(i in 0usize..3, k in prop::array::uniform3(0u32..=7)) {
        let s = sample(i);
        prop_assert_eq!(n_k(k, &s).unwrap(), n_k_brute(k, &s).unwrap());
    }

    #[test]
    fn s_x_is_symmetric_under_reflection(i in 0usize..3, x in 0u64..=60) {
        let s = sample(i);
        let eps = SignVector::positive();
        prop_assert_eq!(s_x_count(x, &s, eps).unwrap(), s_x_count(x, &s, eps.reflected()).unwrap());
    }

    #[test]
    fn sigma_p_is_nonnegative(s in surface(), p in prop::sample::select(vec![3u64, 5, 7, 11, 13]), nu in 1u32..=6) {
        let v = sigma_p(p, &s, nu).unwrap();
        prop_assert!(v.value >= 0.0 && v.value.is_finite());
    }
}
