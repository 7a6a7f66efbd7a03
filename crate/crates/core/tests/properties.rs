//! Property tests over randomly drawn algebras, elements and products.

use proptest::prelude::*;
use tpw_core::algebra::{bracket, verify_lie_axioms};
use tpw_core::halfderiv::{assemble, compare, predicted, solve};
use tpw_core::lattice::{box_points, AdditiveMap, GroupElement, Pairing, Window};
use tpw_core::tpstruct::{left_mult_table, verify, Product, ProductSpec, StarEntry};
use tpw_core::{AlgebraElement, AlgebraSpec, Scalar};

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 24,
        ..ProptestConfig::default()
    }
}

fn int_map(rank: usize) -> impl Strategy<Value = AdditiveMap> {
    prop::collection::vec(-3i64..=3, rank).prop_map(|v| AdditiveMap::from_ints(&v))
}

fn block_gh() -> impl Strategy<Value = AlgebraSpec> {
    (int_map(2), int_map(2)).prop_filter_map("degenerate", |(g, h)| AlgebraSpec::block(g, h).ok())
}

fn gw_spec() -> impl Strategy<Value = AlgebraSpec> {
    prop::collection::vec(-2i64..=2, 4).prop_filter_map("singular pairing", |m| {
        let rows: [&[i64]; 2] = [&m[0..2], &m[2..4]];
        Pairing::from_ints(&rows).ok().map(AlgebraSpec::generalized_witt)
    })
}

fn witt_type() -> impl Strategy<Value = AlgebraSpec> {
    prop_oneof![Just(1i64), Just(-1), Just(2), Just(3)].prop_map(|k| AlgebraSpec::witt_type(AdditiveMap::from_ints(&[k])))
}

fn any_spec() -> impl Strategy<Value = AlgebraSpec> {
    prop_oneof![block_gh(), gw_spec(), witt_type(), Just(AlgebraSpec::block_b0())]
}

/// Up to `terms` terms with indices in `Box(2)` and small integer coefficients.
fn element(spec: &AlgebraSpec, terms: usize) -> impl Strategy<Value = AlgebraElement> {
    let (rank, width) = (spec.rank(), spec.width());
    prop::collection::vec(
        (prop::collection::vec(-2i64..=2, rank), prop::collection::vec(-3i64..=3, width)),
        1..=terms,
    )
    .prop_map(move |ts| {
        AlgebraElement::from_terms(
            width,
            ts.into_iter()
                .map(|(a, c)| (GroupElement::new(a), c.into_iter().map(Scalar::from_int).collect())),
        )
    })
}

fn spec_and_elements(n: usize) -> impl Strategy<Value = (AlgebraSpec, Vec<AlgebraElement>)> {
    any_spec().prop_flat_map(move |s| {
        let elems = prop::collection::vec(element(&s, 3), n);
        (Just(s), elems)
    })
}

fn witt_and_w() -> impl Strategy<Value = (AlgebraSpec, AlgebraElement)> {
    witt_type().prop_flat_map(|s| {
        let w = element(&s, 4);
        (Just(s), w)
    })
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn bracket_is_antisymmetric((spec, v) in spec_and_elements(2)) {
        let xy = bracket(&spec, &v[0], &v[1]).unwrap();
        let yx = bracket(&spec, &v[1], &v[0]).unwrap();
        prop_assert!(xy.add(&yx).is_zero());
        prop_assert!(bracket(&spec, &v[0], &v[0]).unwrap().is_zero());
    }

    #[test]
    fn bracket_satisfies_jacobi((spec, v) in spec_and_elements(3)) {
        let br = |x: &AlgebraElement, y: &AlgebraElement| bracket(&spec, x, y).unwrap();
        let (x, y, z) = (&v[0], &v[1], &v[2]);
        let sum = br(x, &br(y, z)).add(&br(y, &br(z, x))).add(&br(z, &br(x, y)));
        prop_assert!(sum.is_zero());
    }

    #[test]
    fn bracket_is_bilinear((spec, v) in spec_and_elements(3), k in -4i64..=4) {
        let k = Scalar::from_int(k);
        let lhs = bracket(&spec, &v[0].scale(&k).add(&v[1]), &v[2]).unwrap();
        let rhs = bracket(&spec, &v[0], &v[2]).unwrap().scale(&k).add(&bracket(&spec, &v[1], &v[2]).unwrap());
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn block_from_g_h_is_lie(spec in block_gh()) {
        prop_assert!(verify_lie_axioms(&spec, &Window::new(1, 0).unwrap()).passed());
    }

    #[test]
    fn predicted_elements_are_members(spec in block_gh(), a in prop::collection::vec(-1i64..=1, 2)) {
        let window = Window::new(2, 1).unwrap();
        let a = GroupElement::new(a);
        let sys = assemble(&spec, &a, &window, &Scalar::new(1, 2)).unwrap();
        let basis = solve(&sys).unwrap();
        let cmp = compare(&sys, &basis, &predicted(&spec, &a, &window));
        prop_assert!(cmp.membership_pass());
        prop_assert!(cmp.projected_dim >= cmp.predicted_dim);
    }

    #[test]
    fn mutations_are_transposed_poisson((spec, w) in witt_and_w(), k in 1i64..=3) {
        let window = Window::new(2, 0).unwrap();
        let p = ProductSpec::Mutation { w };
        prop_assert!(verify(&spec, &p, &window).unwrap().is_transposed_poisson());
        let scaled = p.scaled(&spec, &Scalar::new(-k, 2));
        prop_assert!(verify(&spec, &scaled, &window).unwrap().is_transposed_poisson());
    }

    #[test]
    fn mutation_left_multiplications_are_half_derivations((spec, w) in witt_and_w(), z in -2i64..=2) {
        let window = Window::new(3, 1).unwrap();
        let p = ProductSpec::Mutation { w };
        let z = tpw_core::BasisLabel::scalar(GroupElement::new(vec![z]));
        for comp in left_mult_table(&spec, &p, &z, &window).unwrap() {
            let sys = assemble(&spec, &comp.degree, &window, &Scalar::new(1, 2)).unwrap();
            prop_assert!(sys.satisfies(&comp), "degree {}", comp.degree);
        }
    }

    #[test]
    fn extension_by_zero_sides_vanish(q in prop_oneof![Just(1i64), Just(-1)], k in -5i64..=5, x in 0usize..25, y in 0usize..25, z in 0usize..25) {
        let spec = AlgebraSpec::block_bq(&Scalar::from_int(q)).unwrap();
        let src = GroupElement::new(vec![0, -2 * q]);
        let dst = GroupElement::new(vec![0, -q]);
        let star = vec![StarEntry { a: src.clone(), b: src, value: AlgebraElement::from_scalars([(dst, Scalar::from_int(k))]) }];
        let p = ProductSpec::ExtensionByZero { star };
        let prod = Product::new(&spec, &p).unwrap();
        let pts = box_points(2, 2);
        let e = |i: usize| AlgebraElement::from_scalars([(pts[i].clone(), Scalar::one())]);
        let (x, y, z) = (e(x), e(y), e(z));
        let br = |a: &AlgebraElement, b: &AlgebraElement| bracket(&spec, a, b).unwrap();
        prop_assert!(prod.multiply(&z, &br(&x, &y)).is_zero());
        prop_assert!(br(&prod.multiply(&z, &x), &y).is_zero());
        prop_assert!(br(&x, &prod.multiply(&z, &y)).is_zero());
    }

    #[test]
    fn shell_order_is_total(a in prop::collection::vec(-3i64..=3, 2), b in prop::collection::vec(-3i64..=3, 2)) {
        let (a, b) = (GroupElement::new(a), GroupElement::new(b));
        prop_assert_eq!(a.shell_cmp(&b), b.shell_cmp(&a).reverse());
        prop_assert_eq!(a.shell_cmp(&b).is_eq(), a == b);
    }
}

#[test]
fn extension_by_zero_verifies_on_both_signs() {
    for q in [1i64, -1] {
        let spec = AlgebraSpec::block_bq(&Scalar::from_int(q)).unwrap();
        let src = GroupElement::new(vec![0, -2 * q]);
        let star = vec![StarEntry {
            a: src.clone(),
            b: src,
            value: AlgebraElement::from_scalars([(GroupElement::new(vec![0, -q]), Scalar::new(7, 3))]),
        }];
        let report = verify(&spec, &ProductSpec::ExtensionByZero { star }, &Window::new(2, 0).unwrap()).unwrap();
        assert!(report.is_transposed_poisson(), "q = {q}");
    }
}
