use proptest::prelude::*;
use std::sync::OnceLock;
use willmore::geometry::GridDomain;
use willmore::pde::{PeriodicSpace, Space};
use willmore::profiles::sigma_constant;
use willmore::spectral::*;

const SEED: u64 = 0x5eed_2024;

fn setup(eps: f64) -> &'static SpectralSetup {
    static S10: OnceLock<SpectralSetup> = OnceLock::new();
    static S05: OnceLock<SpectralSetup> = OnceLock::new();
    let cell = if eps == 0.1 { &S10 } else { &S05 };
    cell.get_or_init(|| SpectralSetup::circle(1.0, eps, 8.0, 64).unwrap())
}

fn field(s: &SpectralSetup, index: u64) -> Vec<f64> {
    random_smooth_field(&s.space, 1.0, s.chart.delta, SEED, index)
}

fn wdot(s: &dyn Space, a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).zip(s.weights()).map(|((x, y), w)| x * y * w).sum()
}

/// Ĉ = |λ_min| at ε = 0.1.
fn c_hat() -> f64 {
    static C: OnceLock<f64> = OnceLock::new();
    *C.get_or_init(|| setup(0.1).min_eig(300).unwrap().lambda_min.abs())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn linearized_operator_is_symmetric(i in 0u64..10_000, j in 0u64..10_000) {
        let s = setup(0.1);
        let (u, v) = (field(s, i), field(s, j + 10_000));
        let au = apply_linearized(&s.space, &u, &s.phi_a, &s.mu_a, s.epsilon);
        let av = apply_linearized(&s.space, &v, &s.phi_a, &s.mu_a, s.epsilon);
        let (a, b) = (wdot(&s.space, &au, &v), wdot(&s.space, &u, &av));
        let scale = (wdot(&s.space, &au, &au) * wdot(&s.space, &v, &v)).sqrt();
        prop_assert!((a - b).abs() <= 1e-10 * scale, "{} vs {}", a, b);
    }

    #[test]
    fn decomposition_is_orthogonal_and_exact(i in 0u64..10_000) {
        let s = setup(0.1);
        let phi = field(s, i);
        let d = s.decompose(&phi).unwrap();
        prop_assert!(d.orthogonality_defect(&s.space, s.psi()) < 1e-10);
        let top = d.tangential_part(&s.space, s.psi());
        let scale = phi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for k in 0..phi.len() {
            prop_assert!((top[k] + d.phi_perp[k] - phi[k]).abs() <= 1e-13 * scale);
        }
    }

    #[test]
    fn k_is_quadratic(i in 0u64..10_000) {
        let s = setup(0.1);
        let phi = field(s, i);
        let twice: Vec<f64> = phi.iter().map(|v| 2.0 * v).collect();
        let k1 = k_functional(&s.space, &s.decompose(&phi).unwrap()).unwrap();
        let k2 = k_functional(&s.space, &s.decompose(&twice).unwrap()).unwrap();
        prop_assert!((k2 - 4.0 * k1).abs() <= 1e-12 * k2);
    }

    // |I₂| ≤ ½(I₁ + I₃) + Ĉ‖φ‖² with Ĉ fitted at ε = 0.1
    #[test]
    fn cross_term_is_absorbed(i in 0u64..10_000, fine in any::<bool>()) {
        let s = setup(if fine { 0.05 } else { 0.1 });
        let phi = field(s, i);
        let d = s.decompose(&phi).unwrap();
        let e = energy_split(&s.space, &d, &phi, &s.phi_a, &s.mu_a);
        let l2 = wdot(&s.space, &phi, &phi);
        prop_assert!(e.i2.abs() <= 0.5 * (e.i1 + e.i3) + c_hat() * l2, "{:?}", e);
        // the split reproduces Q up to the exponentially small φ_e terms
        let q = s.quadratic_form(&phi);
        prop_assert!(e.remainder.abs() <= 1e-6 * (e.i1.abs() + e.i2.abs() + e.i3.abs()).max(q.abs()));
    }
}

#[test]
fn split_degenerate_cases() {
    let s = setup(0.1);
    // Z = 0: only φ⊥ contributes
    let outside = s.space.grid.sample(|rho, t| if rho > 1.9 { (3.0 * t).cos() * (rho - 1.9) } else { 0.0 });
    let d = s.decompose(&outside).unwrap();
    assert!(d.z.iter().all(|z| *z == 0.0));
    assert_eq!(d.phi_perp, outside);
    let e = energy_split(&s.space, &d, &outside, &s.phi_a, &s.mu_a);
    assert!(e.i1 == 0.0 && e.i2 == 0.0);
    // φ⊥ = 0
    let kernel = s.kernel_field(|t| 1.0 + 0.3 * (2.0 * t).cos());
    let mut d = s.decompose(&kernel).unwrap();
    for v in d.phi_perp.iter_mut() {
        *v = 0.0;
    }
    let e = energy_split(&s.space, &d, &kernel, &s.phi_a, &s.mu_a);
    assert!(e.i2 == 0.0 && e.i3 == 0.0);
}

// Λ₅‖φ‖² ≥ ∫Z² + ‖φ⊥‖² ≥ Λ₅⁻¹‖φ‖² on the tube, Λ₅ ≤ 2, 100 fields at ε = 0.1.
#[test]
fn norm_equivalence_on_random_fields() {
    let s = setup(0.1);
    let mut lam = 1.0f64;
    for i in 0..100 {
        let phi = field(s, i);
        let d = s.decompose(&phi).unwrap();
        let lhs = d.surface_l2_sq() + tube_l2_sq(&s.space, &d.phi_perp, 1.0, s.chart.delta);
        let rhs = tube_l2_sq(&s.space, &phi, 1.0, s.chart.delta);
        lam = lam.max(lhs / rhs).max(rhs / lhs);
    }
    assert!(lam <= 2.0, "Lambda5 = {lam}");
}

// ⟨L_εφ⊥, φ⊥⟩ ≥ c(ε‖∇φ⊥‖² + ε⁻¹‖φ⊥‖²), c fitted at ε = 0.1 and re-verified at 0.05.
#[test]
fn coercivity_on_the_complement() {
    let ratios = |eps: f64| -> Vec<f64> {
        let s = setup(eps);
        (0..50)
            .map(|i| {
                let d = s.decompose(&field(s, 500 + i)).unwrap();
                let (form, norm) = allen_cahn_form(&s.space, &d.phi_perp, &s.phi_a, eps);
                form / norm
            })
            .collect()
    };
    let c = 0.5 * ratios(0.1).into_iter().fold(f64::INFINITY, f64::min);
    assert!(c > 0.0);
    let worst = ratios(0.05).into_iter().fold(f64::INFINITY, f64::min);
    assert!(worst >= c, "fitted c = {c}, worst at 0.05 = {worst}");
}

#[test]
fn eta_tracks_sigma() {
    let sig = sigma_constant();
    for eps in [0.1, 0.05] {
        let s = setup(eps);
        let eta = eta_normalization(&s.space, &s.chart, eps, s.psi()).unwrap();
        let (lo, hi) = eta.iter().fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
        assert!(hi - lo <= 1e-10, "eta varies along the circle");
        assert!((eta[0] - sig).abs() <= 2.0 * eps, "eps {eps}: eta {}", eta[0]);
    }
}

#[test]
fn constant_state_modes_diagonalise() {
    let eps = 0.2;
    let dom = GridDomain::new(2.0, 32).unwrap();
    let ps = PeriodicSpace::new(dom);
    let ones = vec![1.0; ps.len()];
    let zeros = vec![0.0; ps.len()];
    let k = 2.0 * std::f64::consts::PI * 3.0 / 2.0;
    let phi = dom.sample(|p| (k * p[0]).cos());
    let out = apply_linearized(&ps, &phi, &ones, &zeros, eps);
    let factor = (eps * k * k + 2.0 / eps).powi(2) / (eps * eps);
    for (o, p) in out.iter().zip(&phi) {
        assert!((o - factor * p).abs() <= 1e-9 * factor);
    }
    assert_eq!(quadratic_form(&ps, &zeros, &ones, &zeros, eps), 0.0);
}

#[test]
fn kernel_direction_stays_bounded_and_noise_is_coercive() {
    let s = setup(0.1);
    let kernel = s.kernel_field(|t| 1.0 + 0.5 * t.cos());
    let l2 = wdot(&s.space, &kernel, &kernel);
    let q = s.quadratic_form(&kernel);
    assert!(q >= -c_hat() * l2);
    assert!(q.abs() < 1e-2 * l2 / s.epsilon.powi(4), "kernel Q {q} not O(1)");

    // high-frequency noise off the kernel: Q ≥ c ε⁻⁴‖φ‖²
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(SEED);
    let noise: Vec<f64> = (0..s.space.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let d = s.decompose(&noise).unwrap();
    let l2 = wdot(&s.space, &d.phi_perp, &d.phi_perp);
    assert!(s.quadratic_form(&d.phi_perp) >= 1.0 * l2 / s.epsilon.powi(4));
}

#[test]
fn lower_bound_is_certified_by_inertia() {
    let s = setup(0.1);
    assert_eq!(lower_bound_certified(&s.space, &s.phi_a, &s.mu_a, 0.1, c_hat() * 1.01), Some(true));
}
