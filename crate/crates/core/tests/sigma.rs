use proptest::prelude::*;
use roughwave::grid::holder_seminorms;
use roughwave::sigma::{check_growth_inequality, check_lipschitz_inequality, compose, SigmaFn};
use roughwave::{GridField, HolderExponents, Rectangle};

/// Fields with values on the lattice `k/64`, so that affine maps with
/// power-of-two slopes act without rounding.
fn lattice_field() -> impl Strategy<Value = GridField> {
    prop::collection::vec(-256i32..=256, 81).prop_map(|v| {
        let values = v.into_iter().map(|k| k as f64 / 64.0).collect();
        GridField::new(Rectangle::unit(), 8, 8, values).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn affine_sigma_scales_seminorms_exactly(
        y in lattice_field(),
        a in prop::sample::select(vec![-2.0, 0.5, 4.0, -0.25]),
        b in prop::sample::select(vec![0.0, 0.5, -3.0]),
        g in 0.2f64..0.95,
    ) {
        let e = HolderExponents::new(g, 1.0 - 0.5 * g, 0.6, 0.4).unwrap();
        let ny = holder_seminorms(&y, &e, 8).unwrap();
        let ns = holder_seminorms(&compose(&SigmaFn::affine(a, b), &y), &e, 8).unwrap();
        prop_assert_eq!(ns.rect, a.abs() * ny.rect);
        prop_assert_eq!(ns.dir1, a.abs() * ny.dir1);
        prop_assert_eq!(ns.dir2, a.abs() * ny.dir2);
        prop_assert_eq!(ns.total, a.abs() * ny.total);
        if b == 0.0 {
            prop_assert_eq!(ns.sup, a.abs() * ny.sup);
        }
    }

    #[test]
    fn compose_is_pointwise(y in lattice_field()) {
        for sig in [SigmaFn::sin(), SigmaFn::tanh(), SigmaFn::bump()] {
            let c = compose(&sig, &y);
            for (u, v) in y.values().iter().zip(c.values()) {
                prop_assert_eq!(sig.eval(*u), *v);
            }
        }
    }
}

#[test]
fn inequalities_hold_on_scaled_inputs() {
    // growth stays bounded as the input shrinks and as it grows
    let e = HolderExponents::uniform(0.6).unwrap();
    let base =
        GridField::from_fn(Rectangle::unit(), 16, 16, |u, v| (3.0 * u).sin() * (2.0 * v + 1.0).cos() + u * v).unwrap();
    for sig in [SigmaFn::sin(), SigmaFn::tanh(), SigmaFn::bump()] {
        for scale in [1e-4, 1e-2, 1.0, 10.0, 100.0] {
            let y = base.map(|v| scale * v).unwrap();
            let g = check_growth_inequality(&sig, &y, &e);
            assert!(g.constant_fit.unwrap() < 20.0, "{:?} at {scale}: {g:?}", sig.kind());
            let z = y.map(|v| v + 0.1 * scale * v.cos()).unwrap();
            let l = check_lipschitz_inequality(&sig, &y, &z, &e).unwrap();
            assert!(l.constant_fit.unwrap() < 20.0, "{:?} at {scale}: {l:?}", sig.kind());
        }
    }
}
