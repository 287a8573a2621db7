use std::cmp::Ordering;

use num_traits::Zero;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hnstrata::exact::{format_rational, int, parse_rational, rat, Rational};
use hnstrata::hilbert::{
    beta_nm, enumerate_refined_indices, rudakov_cmp, shatz_leq, HilbertPoly, SheafHnType,
};
use hnstrata::instability::{adapted_one_ps, is_weight_set_semistable, WeightContext, WeightSet};
use hnstrata::p1sheaf::{
    cohomology_dims, hilbert_poly_p1, phi_multi, phi_nm, regularity_bound, sheaf_hn_type, Point,
    SheafP1,
};
use hnstrata::quiver::{
    hn_filtration_quiver, lambda_gamma, pairing_rho_theta, FieldKind, HnOptions, Quiver,
    QuiverRepresentation, StabilityPair,
};

fn sheaf() -> impl Strategy<Value = SheafP1> {
    (prop::collection::vec(-3i64..=3, 0..=3), 0u32..=2, 0usize..3)
        .prop_map(|(degrees, t, at)| {
            let e = SheafP1::lines(&degrees);
            if t == 0 {
                return e;
            }
            let point = [
                Point::Finite(int(0)),
                Point::Finite(int(1)),
                Point::Infinity,
            ][at]
                .clone();
            e.with_torsion(point, t)
        })
        .prop_filter("nonzero sheaf", |e| !e.is_zero())
}

fn poly() -> impl Strategy<Value = HilbertPoly> {
    (prop::collection::vec(-5i64..=5, 0..=3), 1i64..=5).prop_map(|(mut c, lead)| {
        c.push(lead);
        HilbertPoly::from_ints(&c)
    })
}

fn mat_mul_mod(a: &[Vec<i64>], b: &[Vec<i64>], p: i64) -> Vec<Vec<i64>> {
    let inner = b.len();
    let cols = b.first().map_or(0, |r| r.len());
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| {
                    (0..inner)
                        .map(|k| row[k] * b[k][j])
                        .sum::<i64>()
                        .rem_euclid(p)
                })
                .collect()
        })
        .collect()
}

/// A random invertible matrix as a product of elementary operations.
fn invertible(rng: &mut ChaCha8Rng, n: usize, p: i64) -> Vec<Vec<i64>> {
    let mut m: Vec<Vec<i64>> = (0..n)
        .map(|i| (0..n).map(|j| i64::from(i == j)).collect())
        .collect();
    for _ in 0..3 * n {
        let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if i == j {
            let s = rng.gen_range(1..p);
            m[i].iter_mut().for_each(|x| *x = (*x * s) % p);
        } else {
            let c = rng.gen_range(0..p);
            let src = m[j].clone();
            m[i].iter_mut()
                .zip(&src)
                .for_each(|(x, y)| *x = (*x + c * y) % p);
        }
    }
    m
}

struct Sample {
    quiver: Quiver,
    p: i64,
    dims: Vec<usize>,
    maps: Vec<Vec<Vec<i64>>>,
}

impl Sample {
    fn rep(&self, maps: Vec<Vec<Vec<i64>>>) -> QuiverRepresentation {
        QuiverRepresentation::from_int_maps(
            self.quiver.clone(),
            FieldKind::Prime(self.p as u64),
            self.dims.clone(),
            maps,
        )
        .expect("valid representation")
    }
}

fn sample(seed: u64, kronecker: bool, p: i64, a: usize, b: usize) -> Sample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let quiver = if kronecker {
        Quiver::kronecker(2)
    } else {
        Quiver::a2()
    };
    let maps = quiver
        .arrows()
        .iter()
        .map(|_| {
            (0..b)
                .map(|_| (0..a).map(|_| rng.gen_range(0..p)).collect())
                .collect()
        })
        .collect();
    Sample {
        quiver,
        p,
        dims: vec![a, b],
        maps,
    }
}

fn pair(a: usize, b: usize, alpha: [i64; 2]) -> StabilityPair {
    let g = num_integer::gcd(a, b) as i64;
    StabilityPair::new(
        vec![-(b as i64) / g, a as i64 / g],
        alpha.to_vec(),
        vec![a, b],
    )
    .expect("valid pair")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn euler_characteristic_matches_hilbert_polynomial(e in sheaf(), n in -6i64..=8) {
        let (h0, h1) = cohomology_dims(&e, n);
        let p = hilbert_poly_p1(&e).unwrap();
        prop_assert_eq!(int(h0 as i64 - h1 as i64), p.eval_i(n));
    }

    #[test]
    fn functor_dimensions_are_section_counts(e in sheaf(), dn in 0i64..=2, dm in 1i64..=4) {
        let n = regularity_bound(&e) + dn;
        let m = n + dm;
        let rep = phi_nm(&e, n, m).unwrap();
        let expected = vec![cohomology_dims(&e, n).0 as usize, cohomology_dims(&e, m).0 as usize];
        prop_assert_eq!(rep.dims(), expected.as_slice());
    }

    #[test]
    fn two_point_chain_functor_is_the_kronecker_functor(e in sheaf(), dn in 0i64..=2, dm in 1i64..=3) {
        let n = regularity_bound(&e) + dn;
        let m = n + dm;
        let multi = phi_multi(&e, &[n, m]).unwrap();
        let single = phi_nm(&e, n, m).unwrap();
        prop_assert_eq!(multi.dims(), single.dims());
        prop_assert_eq!(multi.maps(), single.maps());
    }

    #[test]
    fn rudakov_order_is_antisymmetric(p in poly(), q in poly()) {
        let pq = rudakov_cmp(&p, &q).unwrap();
        prop_assert_eq!(pq, rudakov_cmp(&q, &p).unwrap().reverse());
        prop_assert_eq!(rudakov_cmp(&p, &p).unwrap(), Ordering::Equal);
    }

    #[test]
    fn rudakov_order_is_transitive(p in poly(), q in poly(), r in poly()) {
        let pq = rudakov_cmp(&p, &q).unwrap();
        let qr = rudakov_cmp(&q, &r).unwrap();
        if pq != Ordering::Greater && qr != Ordering::Greater {
            let pr = rudakov_cmp(&p, &r).unwrap();
            prop_assert!(pr != Ordering::Greater);
            if pq == Ordering::Less || qr == Ordering::Less {
                prop_assert_eq!(pr, Ordering::Less);
            }
        }
    }

    #[test]
    fn shatz_order_is_reflexive_with_trivial_minimum(e in sheaf(), dn in 0i64..=2, dm in 1i64..=4) {
        let n = regularity_bound(&e) + dn;
        let m = n + dm;
        let tau = sheaf_hn_type(&e).unwrap();
        let trivial = SheafHnType::trivial(tau.total.clone()).unwrap();
        prop_assert!(shatz_leq(&tau, &tau, n, m).unwrap());
        prop_assert!(shatz_leq(&trivial, &tau, n, m).unwrap());
    }

    #[test]
    fn refined_indices_contain_the_type(e in sheaf(), dn in 0i64..=2, dm in 1i64..=4) {
        let n = regularity_bound(&e) + dn + 1;
        let m = n + dm;
        let tau = sheaf_hn_type(&e).unwrap();
        let beta = beta_nm(&tau, n, m).unwrap();
        prop_assume!(!beta.merged);
        let refined = enumerate_refined_indices(&beta, m, 1).unwrap();
        prop_assert!(refined.contains(&tau.entries));
    }

    #[test]
    fn hn_type_partitions_the_dimension_vector(
        seed in any::<u64>(), kronecker in any::<bool>(), p in prop::sample::select(vec![2i64, 3]),
        a in 1usize..=3, b in 1usize..=3, alpha in prop::sample::select(vec![[1i64, 1], [1, 2], [2, 1]]),
    ) {
        let s = sample(seed, kronecker, p, a, b);
        let sp = pair(a, b, alpha);
        let hn = hn_filtration_quiver(&s.rep(s.maps.clone()), &sp, &HnOptions::default()).unwrap();
        let total = hn.gamma.iter().fold(vec![0, 0], |acc, d| vec![acc[0] + d[0], acc[1] + d[1]]);
        prop_assert_eq!(total, vec![a, b]);
        prop_assert!(hn.gamma.iter().all(|d| d.iter().any(|&x| x > 0)));
    }

    #[test]
    fn hn_type_is_invariant_under_change_of_basis(
        seed in any::<u64>(), kronecker in any::<bool>(), p in prop::sample::select(vec![2i64, 3]),
        a in 1usize..=3, b in 1usize..=3,
    ) {
        let s = sample(seed, kronecker, p, a, b);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let q = invertible(&mut rng, b, p);
        let r = invertible(&mut rng, a, p);
        let moved: Vec<Vec<Vec<i64>>> = s.maps.iter().map(|m| mat_mul_mod(&mat_mul_mod(&q, m, p), &r, p)).collect();
        let sp = pair(a, b, [1, 2]);
        let opts = HnOptions::default();
        let before = hn_filtration_quiver(&s.rep(s.maps.clone()), &sp, &opts).unwrap();
        let after = hn_filtration_quiver(&s.rep(moved), &sp, &opts).unwrap();
        prop_assert_eq!(before.gamma, after.gamma);
        prop_assert_eq!(before.slopes, after.slopes);
    }

    #[test]
    fn lambda_gamma_pairing_is_minus_sum_of_squares(
        seed in any::<u64>(), kronecker in any::<bool>(), p in prop::sample::select(vec![2i64, 3]),
        a in 1usize..=3, b in 1usize..=3, alpha in prop::sample::select(vec![[1i64, 1], [1, 2], [2, 1]]),
    ) {
        let s = sample(seed, kronecker, p, a, b);
        let sp = pair(a, b, alpha);
        let hn = hn_filtration_quiver(&s.rep(s.maps.clone()), &sp, &HnOptions::default()).unwrap();
        let lam = lambda_gamma(&hn.gamma, &sp.theta, &sp.alpha).unwrap();
        let expected: Rational = hn
            .gamma
            .iter()
            .map(|d| {
                let t = int(sp.theta_of(d));
                -(&t * &t) / int(sp.alpha_of(d))
            })
            .sum();
        let got = pairing_rho_theta(&lam.weights, &sp.theta);
        prop_assert_eq!(&got, &expected);
        prop_assert_eq!(got.is_zero(), hn.is_semistable());
    }

    #[test]
    fn rationals_round_trip_through_strings(n in -1000i64..=1000, d in 1i64..=1000) {
        let q = rat(n, d);
        prop_assert_eq!(parse_rational(&format_rational(&q)).unwrap(), q);
    }

    #[test]
    fn adapted_one_ps_is_invariant_under_positive_scaling(
        weights in prop::collection::vec(prop::collection::vec(-3i64..=3, 3), 1..=5),
        rho in prop::collection::vec(-3i64..=3, 3),
        c in 2i64..=4,
    ) {
        let ctx = WeightContext::standard(rho);
        let w = WeightSet::new(weights);
        let scaled = w.scaled(c);
        prop_assert_eq!(is_weight_set_semistable(&w, &ctx), is_weight_set_semistable(&scaled, &ctx));
        if let Ok(a) = adapted_one_ps(&w, &ctx) {
            prop_assert_eq!(a.lambda, adapted_one_ps(&scaled, &ctx).unwrap().lambda);
        }
    }
}
