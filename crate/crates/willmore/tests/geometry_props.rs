use proptest::prelude::*;
use std::f64::consts::PI;
use willmore::geometry::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn circle_chart_round_trip(
        radius in 0.5f64..2.0, cx in -1.0f64..1.0, cy in -1.0f64..1.0,
        frac in -0.99f64..0.99, angle in 0.0f64..(2.0 * PI),
    ) {
        let chart = build_chart(Interface::Circle { center: [cx, cy], radius }, 0.5 * radius).unwrap();
        let r = frac * chart.delta;
        let s = angle * radius;
        let x = chart.embed(r, s);
        let (r2, inside) = signed_distance(&chart, &x);
        prop_assert!(inside);
        let back = chart.embed(r2, chart.s_coord(&x));
        prop_assert!((back[0] - x[0]).abs() < 1e-10 && (back[1] - x[1]).abs() < 1e-10);
        prop_assert!((r2 - r).abs() < 1e-10);
    }

    #[test]
    fn sphere_chart_round_trip(radius in 0.5f64..2.0, frac in -0.99f64..0.99, polar in 0.01f64..3.13) {
        let chart = build_chart(Interface::Sphere(RadialSurface::new(radius).unwrap()), 0.5 * radius).unwrap();
        let x = chart.embed(frac * chart.delta, polar);
        let (r, _) = signed_distance(&chart, &x);
        let back = chart.embed(r, chart.s_coord(&x));
        for k in 0..3 {
            prop_assert!((back[k] - x[k]).abs() < 1e-10);
        }
    }

    // |∇r| = 1 in the tube, by central differences at spacing h
    #[test]
    fn eikonal_inside_tube(frac in -0.9f64..0.9, angle in 0.0f64..(2.0 * PI), h in 1e-3f64..2e-2) {
        let curve = ClosedCurve::ellipse([0.0, 0.0], 1.2, 0.8, 512).unwrap();
        let iface = Interface::Curve(curve);
        let delta = 0.5 * iface.default_delta();
        let chart = build_chart(iface, delta).unwrap();
        let s = angle / (2.0 * PI) * chart.surface_measure();
        let x = chart.embed(frac * delta, s);
        let d = |p: [f64; 2]| signed_distance(&chart, &p).0;
        let gx = (d([x[0] + h, x[1]]) - d([x[0] - h, x[1]])) / (2.0 * h);
        let gy = (d([x[0], x[1] + h]) - d([x[0], x[1] - h])) / (2.0 * h);
        prop_assert!((gx.hypot(gy) - 1.0).abs() <= 5.0 * h, "|grad r| = {}", gx.hypot(gy));
    }

    // J(r,s) = 1 + r h(s) + r² e(s) + O(r³)
    #[test]
    fn jacobian_expansion(radius in 0.5f64..2.0, r_frac in -0.5f64..0.5, sphere in any::<bool>()) {
        let iface = if sphere {
            Interface::Sphere(RadialSurface::new(radius).unwrap())
        } else {
            Interface::Circle { center: [0.0, 0.0], radius }
        };
        let chart = build_chart(iface, 0.6 * radius).unwrap();
        let r = r_frac * radius;
        let rem = jacobian(&chart, r, 0.3) - (1.0 + r * chart.h(0.3) + r * r * chart.e(0.3));
        prop_assert!(rem.abs() <= 1e-12 + (r / radius).abs().powi(3));
    }

    #[test]
    fn hausdorff_is_rigid_motion_invariant(
        a in 0.8f64..1.5, b in 0.5f64..1.0, angle in 0.0f64..(2.0 * PI),
        sx in -2.0f64..2.0, sy in -2.0f64..2.0,
    ) {
        let c1 = ClosedCurve::ellipse([0.0, 0.0], a, b, 128).unwrap();
        let c2 = ClosedCurve::circle([0.05, -0.02], 0.9, 96).unwrap();
        let h0 = hausdorff(&c1, &c2);
        let h1 = hausdorff(&c1.moved(angle, [sx, sy]), &c2.moved(angle, [sx, sy]));
        prop_assert!((h0 - h1).abs() < 1e-12, "{} vs {}", h0, h1);
    }

    #[test]
    fn redistribution_preserves_shape(a in 0.8f64..1.5, b in 0.5f64..1.0, n in 64usize..200) {
        let c = ClosedCurve::ellipse([0.0, 0.0], a, b, 400).unwrap();
        let r = c.redistribute(n);
        let seg = r.segment_lengths();
        let mean = r.total_length() / n as f64;
        prop_assert!(seg.iter().all(|s| (s - mean).abs() < 0.05 * mean));
        prop_assert!(r.nodes().iter().all(|p| c.project_smooth(*p).0.abs() < 1e-9));
    }
}

// x → (r, s) → X₀(s) + r n(s) is within O(h²) for polylines.
#[test]
fn polyline_round_trip_is_second_order() {
    for n in [64usize, 128, 256] {
        let e = {
            let c = ClosedCurve::ellipse([0.0, 0.0], 1.2, 0.8, n).unwrap();
            let iface = Interface::Curve(c);
            let delta = 0.4 * iface.default_delta();
            let chart = build_chart(iface, delta).unwrap();
            let mut e = 0.0f64;
            for k in 0..200 {
                let t = 2.0 * PI * (k as f64 + 0.37) / 200.0;
                for frac in [-0.8, -0.3, 0.2, 0.7] {
                    let rho = 1.0 + 0.1 * frac;
                    let x = [1.2 * rho * t.cos(), 0.8 * rho * t.sin()];
                    let (r, _) = signed_distance(&chart, &x);
                    let y = chart.embed(r, chart.s_coord(&x));
                    e = e.max((y[0] - x[0]).hypot(y[1] - x[1]));
                }
            }
            e
        };
        let h = 2.0 * PI / n as f64;
        assert!(e <= h * h, "n = {n}: round-trip error {e}");
    }
}

// ∫_grid f dx = ∫∫ f(r, s) J(r, s) dr ds for an integrand supported in the tube.
#[test]
fn coarea_consistency() {
    let radius = 1.0;
    let chart = build_chart(Interface::Circle { center: [0.0, 0.0], radius }, 0.5).unwrap();
    let f = |r: f64, s: f64| (-(r / 0.12).powi(2)).exp() * (1.0 + 0.3 * (3.0 * s / radius).cos());
    let dom = GridDomain::new(4.0, 256).unwrap();
    let vals = dom.sample(|p| {
        let (r, inside) = signed_distance(&chart, &p);
        if inside {
            f(r, chart.s_coord(&p))
        } else {
            0.0
        }
    });
    let grid_int: f64 = vals.iter().sum::<f64>() * dom.cell_area();
    let (nr, ns) = (2000usize, 512usize);
    let dr = 1.0 / nr as f64;
    let ds = 2.0 * PI * radius / ns as f64;
    let mut iter = 0.0;
    for i in 0..nr {
        let r = -0.5 + (i as f64 + 0.5) * dr;
        for j in 0..ns {
            let s = j as f64 * ds;
            iter += f(r, s) * jacobian(&chart, r, s) * dr * ds;
        }
    }
    let h = dom.spacing();
    assert!((grid_int - iter).abs() <= h * h * iter.abs(), "{grid_int} vs {iter}");
}

#[test]
fn zero_level_of_smooth_field_tracks_the_circle() {
    let dom = GridDomain::new(4.0, 256).unwrap();
    let phi = dom.sample(|p| ((p[0].hypot(p[1]) - 1.0) / (0.05 * 2f64.sqrt())).tanh());
    let zl = extract_zero_level(&phi, &dom).unwrap();
    assert_eq!(zl.n_components, 1);
    let exact = ClosedCurve::circle([0.0, 0.0], 1.0, 2048).unwrap();
    assert!(hausdorff(&zl.to_curve().unwrap(), &exact) < dom.spacing().powi(2));
}
