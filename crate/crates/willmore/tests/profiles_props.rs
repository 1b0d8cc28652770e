use proptest::prelude::*;
use willmore::profiles::*;

fn parity_ok(p: &Profile1D, sign: f64) -> bool {
    p.parity_defect(sign) < 1e-9
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn theta_derivatives_alternate_parity(z in -20.0f64..20.0) {
        let a = theta_all(z);
        let b = theta_all(-z);
        for k in 0..5 {
            // θ odd, θ' even, θ'' odd, ...
            let s = if k % 2 == 0 { -1.0 } else { 1.0 };
            prop_assert!((a[k] - s * b[k]).abs() <= 1e-15 * (1.0 + a[k].abs()));
        }
    }

    #[test]
    fn double_well_derivatives_are_consistent(u in -1.5f64..1.5) {
        let h = 1e-5;
        for k in 0..3 {
            let fd = (double_well(u + h, k).unwrap() - double_well(u - h, k).unwrap()) / (2.0 * h);
            let exact = double_well(u, k + 1).unwrap();
            prop_assert!((fd - exact).abs() < 1e-8 * (1.0 + exact.abs()));
        }
    }

    #[test]
    fn eta_prime_is_even(z in 0.0f64..1.5) {
        prop_assert_eq!(eta_bump(z, 1).unwrap(), eta_bump(-z, 1).unwrap());
        prop_assert!(eta_bump(z, 1).unwrap() >= 0.0);
    }

    // The Rayleigh quotient on the complement of the eigenfunction stays above λ₂(1 − 10h).
    #[test]
    fn discrete_coercivity_off_the_kernel(
        centres in prop::collection::vec(-6.0f64..6.0, 1..4),
        amps in prop::collection::vec(-1.0f64..1.0, 3),
        widths in prop::collection::vec(0.3f64..3.0, 3),
    ) {
        let eig = eigen();
        let z = &eig.phi.z_nodes;
        let w = &eig.phi.quad_weights;
        let mut q: Vec<f64> = z
            .iter()
            .map(|&t| {
                centres
                    .iter()
                    .zip(&amps)
                    .zip(&widths)
                    .map(|((c, a), s)| a * (-((t - c) / s).powi(2)).exp())
                    .sum::<f64>()
            })
            .collect();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).zip(w).map(|((x, y), w)| x * y * w).sum::<f64>();
        let phi = &eig.phi.values;
        let c = dot(&q, phi) / dot(phi, phi);
        for (qi, p) in q.iter_mut().zip(phi) {
            *qi -= c * p;
        }
        prop_assume!(dot(&q, &q) > 1e-6);
        let rq = eig.rayleigh_quotient(&q);
        prop_assert!(rq >= eig.lambda2 * (1.0 - 10.0 * eig.spacing()), "rq {} lambda2 {}", rq, eig.lambda2);
    }
}

fn eigen() -> &'static Eigen1D {
    static E: std::sync::OnceLock<Eigen1D> = std::sync::OnceLock::new();
    E.get_or_init(|| eigen_1d(0.1, 1.0, 2000).unwrap())
}

#[test]
fn symmetry_table_of_tabulated_profiles() {
    let grid = Profile1D::default_grid();
    let alpha = alpha_profile(&grid.z_nodes).unwrap();
    let (g1, g2, g3) = gamma_profiles(&grid.z_nodes).unwrap();
    assert!(parity_ok(&alpha, -1.0));
    assert!(parity_ok(&g1, 1.0));
    assert!(parity_ok(&g2, 1.0));
    assert!(parity_ok(&g3, 1.0));
    let theta = Profile1D::from_fn(4001, 20.0, |z| theta_all(z)[0]).unwrap();
    let theta_p = Profile1D::from_fn(4001, 20.0, |z| theta_all(z)[1]).unwrap();
    assert!(parity_ok(&theta, -1.0));
    assert!(parity_ok(&theta_p, 1.0));
    // φ̃⁽²⁾/θ' = α up to the smooth coefficient, odd
    let t = ProfileTables::default_tables().unwrap();
    assert!(parity_ok(&t.alpha, -1.0));
}

#[test]
fn profile_ode_residual_is_second_order() {
    // L U = -U'' + f''(θ)U with an odd, compatible right-hand side
    let rhs_fn = |z: f64| z * theta_all(z)[1].powi(2);
    let mut errs = Vec::new();
    let mut hs = Vec::new();
    for n in [801usize, 1601, 3201] {
        let rhs = Profile1D::from_fn(n, 20.0, rhs_fn).unwrap();
        let u = solve_profile_ode(&rhs).unwrap();
        let h = u.spacing();
        let mut e = 0.0f64;
        for i in 1..n - 1 {
            let z = u.z_nodes[i];
            if z.abs() > 8.0 {
                continue;
            }
            let upp = (u.values[i + 1] - 2.0 * u.values[i] + u.values[i - 1]) / (h * h);
            let th = theta_all(z)[0];
            let res = -upp + double_well(th, 2).unwrap() * u.values[i] - rhs_fn(z);
            e = e.max(res.abs());
        }
        errs.push(e);
        hs.push(h);
    }
    for k in 0..2 {
        let order = (errs[k] / errs[k + 1]).ln() / (hs[k] / hs[k + 1]).ln();
        assert!(order >= 1.9, "observed order {order} from {errs:?}");
    }
}

#[test]
fn lambda1_decays_geometrically() {
    let l: Vec<f64> = [0.1, 0.05, 0.025]
        .iter()
        .map(|&e| eigen_1d(e, 1.0, 4000).unwrap().lambda1.abs())
        .collect();
    assert!(l[1] <= l[0] / 10.0 && l[2] <= l[1] / 10.0, "{l:?}");
}

#[test]
fn sigma_matches_quadrature_on_default_window() {
    assert!((sigma_on(DEFAULT_NODES, DEFAULT_HALF_WINDOW) - 2.0 * SQRT2 / 3.0).abs() < 1e-12);
}
