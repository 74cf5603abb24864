use approx::assert_relative_eq;
use proptest::prelude::*;
use roughwave::diagnostics::{rect_exponent_sum_estimate, rect_exponent_sum_estimate_masked, scaling_regression};
use roughwave::grid::{holder_seminorms, rect_increment, rotate_coords, unrotate_coords};
use roughwave::io::{read_field_csv, write_field_csv};
use roughwave::{GridField, HolderExponents, Rectangle};

fn poly_field(c: [f64; 6], n: usize) -> GridField {
    GridField::from_fn(Rectangle::new(-0.5, 1.0, 0.0, 2.0).unwrap(), n, n, |u, v| {
        c[0] + c[1] * u * v
            + c[2] * u * u * v
            + c[3] * (u + 2.0 * v).sin()
            + c[4] * v.powi(3) * u
            + c[5] * (u * v).exp()
    })
    .unwrap()
}

fn coeffs() -> impl Strategy<Value = [f64; 6]> {
    prop::array::uniform6(-3.0f64..3.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn two_by_two_splits_are_additive(c in coeffs(), i1 in 0usize..10, di in 2usize..10, j1 in 0usize..10, dj in 2usize..10, fi in 0.1f64..0.9, fj in 0.1f64..0.9) {
        let f = poly_field(c, 20);
        let (i2, j2) = (i1 + di, j1 + dj);
        let im = i1 + 1 + ((di - 2) as f64 * fi) as usize;
        let jm = j1 + 1 + ((dj - 2) as f64 * fj) as usize;
        let whole = f.rect_increment_idx(i1, i2, j1, j2);
        let parts = f.rect_increment_idx(i1, im, j1, jm)
            + f.rect_increment_idx(im, i2, j1, jm)
            + f.rect_increment_idx(i1, im, jm, j2)
            + f.rect_increment_idx(im, i2, jm, j2);
        let scale = f.values().iter().fold(1.0f64, |m, v| m.max(v.abs()));
        prop_assert!((whole - parts).abs() <= 1e-12 * scale);
    }

    #[test]
    fn bilinear_increment_is_the_area(i1 in 0usize..16, di in 1usize..16, j1 in 0usize..16, dj in 1usize..16) {
        let d = Rectangle::new(-1.0, 1.0, -2.0, 2.0).unwrap();
        let f = GridField::from_fn(d, 32, 32, |u, v| u * v).unwrap();
        let r = Rectangle::new(f.s_coord(i1), f.s_coord(i1 + di), f.t_coord(j1), f.t_coord(j1 + dj)).unwrap();
        assert_relative_eq!(rect_increment(&f, &r).unwrap(), r.area(), max_relative = 1e-12);
    }

    #[test]
    fn seminorms_satisfy_the_triangle_inequality(a in coeffs(), b in coeffs(), g in 0.3f64..0.95, gh in 0.3f64..0.95) {
        let e = HolderExponents::new(g, gh, 0.5, 0.7).unwrap();
        let (f, h) = (poly_field(a, 12), poly_field(b, 12));
        let sum = f.axpby(1.0, &h, 1.0).unwrap();
        let (nf, nh, ns) = (
            holder_seminorms(&f, &e, 12).unwrap(),
            holder_seminorms(&h, &e, 12).unwrap(),
            holder_seminorms(&sum, &e, 12).unwrap(),
        );
        let tol = 1e-12 * (1.0 + nf.total + nh.total);
        prop_assert!(ns.rect <= nf.rect + nh.rect + tol);
        prop_assert!(ns.dir1 <= nf.dir1 + nh.dir1 + tol);
        prop_assert!(ns.dir2 <= nf.dir2 + nh.dir2 + tol);
        prop_assert!(ns.sup <= nf.sup + nh.sup + tol);
    }

    #[test]
    fn seminorm_estimate_grows_with_the_lag(c in coeffs(), lag in 1usize..11) {
        let f = poly_field(c, 12);
        let e = HolderExponents::uniform(0.6).unwrap();
        let a = holder_seminorms(&f, &e, lag).unwrap();
        let b = holder_seminorms(&f, &e, lag + 1).unwrap();
        prop_assert!(b.rect >= a.rect && b.dir1 >= a.dir1 && b.dir2 >= a.dir2);
    }

    #[test]
    fn rotation_is_an_isometry(p in prop::array::uniform4(-50.0f64..50.0)) {
        let (a, b) = (rotate_coords(p[0], p[1]), rotate_coords(p[2], p[3]));
        let before = (p[0] - p[2]).hypot(p[1] - p[3]);
        let after = (a.0 - b.0).hypot(a.1 - b.1);
        prop_assert!((before - after).abs() <= 1e-12 * (1.0 + before));
        let back = unrotate_coords(a.0, a.1);
        prop_assert!((back.0 - p[0]).abs() <= 1e-12 * (1.0 + p[0].abs()));
    }

    #[test]
    fn regression_is_scale_equivariant(c in 1e-3f64..1e3, slope in -2.0f64..3.0, noise in prop::array::uniform5(-0.1f64..0.1)) {
        let pts: Vec<(f64, f64)> = (0..5).map(|k| {
            let s = 2f64.powi(-(k as i32));
            (s, s.powf(slope) * noise[k].exp())
        }).collect();
        let scaled: Vec<(f64, f64)> = pts.iter().map(|&(s, m)| (s, c * m)).collect();
        let (a, b) = (scaling_regression(&pts).unwrap(), scaling_regression(&scaled).unwrap());
        prop_assert!((a.slope - b.slope).abs() <= 1e-10);
        prop_assert!((b.intercept - a.intercept - c.ln()).abs() <= 1e-10);
    }

    #[test]
    fn csv_round_trip_keeps_fifteen_digits(c in coeffs()) {
        let f = poly_field(c, 6);
        let mut buf = Vec::new();
        write_field_csv(&f, &mut buf).unwrap();
        let g = read_field_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(g.ns(), 6);
        for (a, b) in f.values().iter().zip(g.values()) {
            prop_assert!((a - b).abs() <= 1e-15 * a.abs().max(1e-300));
        }
    }
}

#[test]
fn monomial_exponent_sums_are_recovered() {
    let d = Rectangle::new(0.0, 1.0, 0.0, 1.0).unwrap();
    for (p, q) in [(1.0, 1.0), (2.0, 1.0), (3.0, 2.0)] {
        let f = GridField::from_fn(d, 256, 256, |u, v| u.powf(p) * v.powf(q)).unwrap();
        let fit = rect_exponent_sum_estimate(&f, 5).unwrap();
        assert!((fit.slope - 2.0).abs() < 0.05, "u^{p} v^{q}: {}", fit.slope);
    }
    // squares anchored at the origin see Δ_R = side^{p+q} exactly
    for (p, q) in [(0.3, 0.4), (0.7, 0.8), (0.5, 1.5)] {
        let f = GridField::from_fn(d, 256, 256, |u, v| u.powf(p) * v.powf(q)).unwrap();
        let fit = rect_exponent_sum_estimate_masked(&f, 6, |i, j, _, _| i == 0 && j == 0).unwrap();
        assert!((fit.slope - (p + q)).abs() < 0.05, "u^{p} v^{q}: {}", fit.slope);
    }
}
