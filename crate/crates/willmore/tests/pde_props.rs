use proptest::prelude::*;
use willmore::geometry::{GridDomain, RadialGrid};
use willmore::pde::*;
use willmore::profiles::theta_all;

fn wdot(a: &[f64], b: &[f64], w: &[f64]) -> f64 {
    a.iter().zip(b).zip(w).map(|((x, y), w)| x * y * w).sum()
}

fn circle_profile(space: &dyn Space, r0: f64, eps: f64) -> Vec<f64> {
    (0..space.len())
        .map(|i| {
            let p = space.point(i);
            let rho = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            theta_all((rho - r0) / eps)[0]
        })
        .collect()
}

fn radial(dim: usize, r_max: f64, h: f64) -> RadialSpace {
    RadialSpace::with_spacing(dim, r_max, h).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn laplacians_are_self_adjoint(seed in any::<u64>(), dim in 2usize..4) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let rs = RadialSpace::new(RadialGrid::new(dim, 200, 3.0).unwrap());
        let ps = PeriodicSpace::new(GridDomain::new(2.0, 32).unwrap());
        for sp in [&rs as &dyn Space, &ps] {
            let u: Vec<f64> = (0..sp.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let v: Vec<f64> = (0..sp.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let a = wdot(&sp.laplacian(&u), &v, sp.weights());
            let b = wdot(&u, &sp.laplacian(&v), sp.weights());
            prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(b.abs()).max(1.0), "{} vs {}", a, b);
        }
    }

    // every accepted step satisfies E₊ ≤ E + 1e-8·dt·max(1, E)
    #[test]
    fn energy_dissipates_on_perturbed_circles(
        r0 in 0.7f64..1.2,
        amp in 0.0f64..0.3,
        k in 1.0f64..6.0,
        imex in any::<bool>(),
    ) {
        let eps = 0.1;
        let sp = radial(2, 2.5, eps / 4.0);
        let phi: Vec<f64> = (0..sp.len())
            .map(|i| {
                let r = sp.point(i)[0];
                theta_all((r - r0) / eps + amp * (k * r).sin())[0]
            })
            .collect();
        let scheme = if imex { Scheme::Imex } else { Scheme::Linearized };
        let dt = SolverConfig::default_dt(scheme, eps, sp.spacing());
        let cfg = SolverConfig::new(eps, dt, 40.0 * dt, scheme);
        let (_, trace) = run(&sp, &cfg, &PhaseFieldState::new(&sp, phi, eps, 0.0)).unwrap();
        prop_assert_eq!(trace.violations, 0, "max relative increase {}", trace.max_relative_increase);
    }

    #[test]
    fn snapshot_round_trip(
        data in prop::collection::vec(-1e3f64..1e3, 1..200),
        extent in 0.1f64..10.0, eps in 1e-3f64..0.5, t in 0.0f64..5.0,
    ) {
        let dir = std::env::temp_dir().join(format!("wpf-prop-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("snap.bin");
        let h = SnapshotHeader { magic: *b"WPR1", n: data.len(), extent, epsilon: eps, time: t };
        write_snapshot(&path, &h, &data).unwrap();
        let (h2, d2) = read_snapshot(&path).unwrap();
        prop_assert_eq!(d2, data);
        prop_assert_eq!(h2.n, h.n);
        prop_assert!((h2.extent - extent).abs() <= 1e-9 * extent);
        prop_assert!((h2.time - t).abs() <= 1e-9 * t.max(1e-300));
    }
}

#[test]
fn wells_are_stationary() {
    let eps = 0.1;
    let sp = radial(2, 2.0, eps / 4.0);
    for well in [-1.0, 1.0] {
        for scheme in [Scheme::Imex, Scheme::Linearized] {
            let dt = SolverConfig::default_dt(scheme, eps, sp.spacing());
            let mut s = PhaseFieldState::new(&sp, vec![well; sp.len()], eps, 0.0);
            let cfg = SolverConfig::new(eps, dt, 100.0 * dt, scheme);
            for _ in 0..100 {
                s = step(&sp, &s, &cfg).unwrap();
            }
            assert!(s.phi.iter().all(|v| (v - well).abs() < 1e-6));
        }
    }
}

// Halving h (with the default dt) moves the final radius by a ≥3× smaller increment.
#[test]
fn refinement_increments_shrink() {
    let eps = 0.1;
    let t_end = 0.01;
    let radii: Vec<f64> = [4.0, 8.0, 16.0]
        .iter()
        .map(|f| {
            let sp = radial(2, 3.4, eps / f);
            let dt = SolverConfig::default_dt(Scheme::Imex, eps, sp.spacing());
            let cfg = SolverConfig::new(eps, dt, t_end, Scheme::Imex);
            let init = PhaseFieldState::new(&sp, circle_profile(&sp, 1.0, eps), eps, 0.0);
            let (s, _) = run(&sp, &cfg, &init).unwrap();
            sp.interface_radius(&s.phi).unwrap()
        })
        .collect();
    let d1 = (radii[1] - radii[0]).abs();
    let d2 = (radii[2] - radii[1]).abs();
    assert!(d1 >= 3.0 * d2, "radii {radii:?}");
}

// The flow does not conserve ∫φ: a circle grows and the mass changes.
#[test]
fn mass_is_not_conserved() {
    let eps = 0.1;
    let sp = radial(2, 3.4, eps / 4.0);
    let dt = SolverConfig::default_dt(Scheme::Linearized, eps, sp.spacing());
    let cfg = SolverConfig::new(eps, dt, 0.02, Scheme::Linearized);
    let init = PhaseFieldState::new(&sp, circle_profile(&sp, 1.0, eps), eps, 0.0);
    let (s, _) = run(&sp, &cfg, &init).unwrap();
    let m0 = wdot(&init.phi, &vec![1.0; sp.len()], sp.weights());
    let m1 = wdot(&s.phi, &vec![1.0; sp.len()], sp.weights());
    assert!((m1 - m0).abs() > 1e-3, "{m0} {m1}");
    assert!(sp.interface_radius(&s.phi).unwrap() > 1.0);
}
