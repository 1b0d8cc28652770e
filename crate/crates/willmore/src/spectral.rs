//! Linearized operator A = ε⁻²L_ε² + ε⁻³f'''(φ_a)μ_a, L_ε = −εΔ + ε⁻¹f''(φ_a),
//! its smallest eigenvalue, the kernel/complement decomposition
//! φ = ε^{-1/2}Z(s)ψ(r/ε)ζ(r) + φ⊥ and the functional K.
//!
//! The operator works on any [`Space`]. For circles, [`PolarSpace`] (an annulus,
//! fourth-order flux form in ρ, Fourier in θ) decouples axisymmetric states mode by
//! mode, so shift-invert solves are banded and exact; the decomposition lives there
//! because its normal rays are the grid's radial lines.

use crate::error::{invalid, Error, Result};
use crate::expansion::{approximate_at, cutoff_zeta, DistanceHierarchy, ExpansionCoefficients};
use crate::geometry::{laplace_beltrami, ClosedCurve, Interface, PolarGrid, TubularChart};
use crate::linalg::{ksum, Banded};
use crate::pde::{flux_laplacian, radial_root, Space};
use crate::profiles::{eigen_1d, theta_all, Eigen1D, Profile1D};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

#[inline]
fn fpp(u: f64) -> f64 {
    3.0 * u * u - 1.0
}

fn dot_w(a: &[f64], b: &[f64], w: &[f64]) -> f64 {
    ksum(a.iter().zip(b).zip(w).map(|((x, y), w)| w * x * y))
}

type JacobianCache = (f64, f64, Vec<f64>, Vec<f64>, Vec<Banded>);

/// Annulus r_in < ρ < r_out around the origin; node index i·n_θ + j.
pub struct PolarSpace {
    pub grid: PolarGrid,
    weights: Vec<f64>,
    radii: Vec<f64>,
    /// Radial part of Δ (zero-flux ends), W-self-adjoint for ρ dρ.
    lap_r: Banded,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    jac_cache: Mutex<Option<JacobianCache>>,
}

impl std::fmt::Debug for PolarSpace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PolarSpace").field("grid", &self.grid).finish()
    }
}

impl PolarSpace {
    pub fn new(grid: PolarGrid) -> Self {
        let nr = grid.n_r;
        let dr = grid.dr();
        let radii: Vec<f64> = (0..nr).map(|i| grid.r(i)).collect();
        let ring_w: Vec<f64> = radii.iter().map(|r| r * dr).collect();
        let r_in = grid.r_in;
        let lap_r = flux_laplacian(nr, dr, &ring_w, |j| (r_in + (j + 1) as f64 * dr) * dr);
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(grid.n_theta);
        let ifft = planner.plan_fft_inverse(grid.n_theta);
        PolarSpace {
            weights: grid.weights(),
            radii,
            lap_r,
            fft,
            ifft,
            jac_cache: Mutex::new(None),
            grid,
        }
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    /// Δ restricted to angular wavenumber k: Δ_ρ − k²/ρ².
    fn mode_laplacian(&self, k: usize) -> Banded {
        let mut m = self.lap_r.clone();
        let k2 = (k * k) as f64;
        for (i, r) in self.radii.iter().enumerate() {
            m.add(i, i, -k2 / (r * r));
        }
        m
    }

    /// Apply `f(k, radial column)` to every Fourier mode (real and imaginary parts).
    fn per_mode(&self, u: &[f64], mut f: impl FnMut(usize, &[f64]) -> Result<Vec<f64>>) -> Result<Vec<f64>> {
        let (nr, nt) = (self.grid.n_r, self.grid.n_theta);
        assert_eq!(u.len(), nr * nt);
        let mut modes = vec![vec![Complex64::new(0.0, 0.0); nr]; nt];
        let mut buf = vec![Complex64::new(0.0, 0.0); nt];
        for i in 0..nr {
            for j in 0..nt {
                buf[j] = Complex64::new(u[i * nt + j], 0.0);
            }
            self.fft.process(&mut buf);
            for m in 0..nt {
                modes[m][i] = buf[m];
            }
        }
        for (m, col) in modes.iter_mut().enumerate() {
            let k = m.min(nt - m);
            let re: Vec<f64> = col.iter().map(|c| c.re).collect();
            let im: Vec<f64> = col.iter().map(|c| c.im).collect();
            let re = f(k, &re)?;
            let im = f(k, &im)?;
            for i in 0..nr {
                col[i] = Complex64::new(re[i], im[i]);
            }
        }
        let mut out = vec![0.0; nr * nt];
        for i in 0..nr {
            for m in 0..nt {
                buf[m] = modes[m][i];
            }
            self.ifft.process(&mut buf);
            for j in 0..nt {
                out[i * nt + j] = buf[j].re / nt as f64;
            }
        }
        Ok(out)
    }

    /// Ring values of an axisymmetric field, or a configuration error.
    fn axisymmetric_profile(&self, u: &[f64]) -> Result<Vec<f64>> {
        let nt = self.grid.n_theta;
        let mut prof = Vec::with_capacity(self.grid.n_r);
        for i in 0..self.grid.n_r {
            let ring = &u[i * nt..(i + 1) * nt];
            let v = ring[0];
            if ring.iter().any(|x| (x - v).abs() > 1e-12 * (1.0 + v.abs())) {
                return Err(Error::Configuration(
                    "polar Jacobian solves need an axisymmetric state".into(),
                ));
            }
            prof.push(v);
        }
        Ok(prof)
    }

    /// Factored I + dt A_k for k = 0..=n_θ/2, cached on (dt, ε, φ, μ).
    fn jacobian_factors(&self, dt: f64, eps: f64, phi: &[f64], mu: &[f64]) -> Result<std::sync::MutexGuard<'_, Option<JacobianCache>>> {
        let p = self.axisymmetric_profile(phi)?;
        let m = self.axisymmetric_profile(mu)?;
        let mut cache = self.jac_cache.lock().expect("jacobian cache poisoned");
        let hit = matches!(&*cache, Some((a, b, c, d, _)) if *a == dt && *b == eps && *c == p && *d == m);
        if !hit {
            let nr = self.grid.n_r;
            let e2 = eps * eps;
            let (e3, e4) = (e2 * eps, e2 * e2);
            let mut factors = Vec::with_capacity(self.grid.n_theta / 2 + 1);
            for k in 0..=self.grid.n_theta / 2 {
                let lk = self.mode_laplacian(k);
                let mut l = Banded::zeros(nr, 3, 3);
                for i in 0..nr {
                    for j in i.saturating_sub(3)..=(i + 3).min(nr - 1) {
                        l.set(i, j, -e2 * lk.get(i, j));
                    }
                    l.add(i, i, fpp(p[i]));
                }
                let mut a = l.mul(&l);
                for i in 0..nr {
                    for j in i.saturating_sub(6)..=(i + 6).min(nr - 1) {
                        let v = dt * a.get(i, j) / e4;
                        a.set(i, j, v);
                    }
                    a.add(i, i, 1.0 + dt * 6.0 * p[i] * m[i] / e3);
                }
                a.factor()?;
                factors.push(a);
            }
            *cache = Some((dt, eps, p, m, factors));
        }
        Ok(cache)
    }

    /// Ray values u(ρ_i, θ_j) for fixed j.
    fn ray(&self, u: &[f64], j: usize) -> Vec<f64> {
        (0..self.grid.n_r).map(|i| u[i * self.grid.n_theta + j]).collect()
    }
}

impl Space for PolarSpace {
    fn len(&self) -> usize {
        self.grid.len()
    }
    fn weights(&self) -> &[f64] {
        &self.weights
    }
    /// Radial spacing; θ is treated spectrally.
    fn spacing(&self) -> f64 {
        self.grid.dr()
    }
    fn point(&self, i: usize) -> [f64; 3] {
        let nt = self.grid.n_theta;
        let (r, t) = (self.grid.r(i / nt), self.grid.theta(i % nt));
        [r * t.cos(), r * t.sin(), 0.0]
    }
    fn laplacian(&self, u: &[f64]) -> Vec<f64> {
        self.per_mode(u, |k, col| Ok(self.mode_laplacian(k).matvec(col)))
            .expect("mode Laplacian cannot fail")
    }
    fn solve_imex(&self, dt: f64, s: f64, rhs: &[f64]) -> Result<Vec<f64>> {
        let mut factors = Vec::new();
        for k in 0..=self.grid.n_theta / 2 {
            let lk = self.mode_laplacian(k);
            let mut m = lk.mul(&lk);
            let n = self.grid.n_r;
            for i in 0..n {
                for j in i.saturating_sub(6)..=(i + 6).min(n - 1) {
                    let v = dt * m.get(i, j) - dt * s * lk.get(i, j);
                    m.set(i, j, v);
                }
                m.add(i, i, 1.0);
            }
            m.factor()?;
            factors.push(m);
        }
        self.per_mode(rhs, |k, col| Ok(factors[k].solve(col)))
    }
    fn solve_jacobian(&self, dt: f64, eps: f64, phi: &[f64], mu: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
        let cache = self.jacobian_factors(dt, eps, phi, mu)?;
        let factors = &cache.as_ref().unwrap().4;
        self.per_mode(rhs, |k, col| Ok(factors[k].solve(col)))
    }
    fn jacobian_definite(&self, dt: f64, eps: f64, phi: &[f64], mu: &[f64]) -> Option<bool> {
        match self.jacobian_factors(dt, eps, phi, mu) {
            Ok(c) => Some(c.as_ref().unwrap().4.iter().all(|f| f.min_pivot() > 0.0)),
            Err(Error::Configuration(_)) => None,
            Err(_) => Some(false),
        }
    }
    /// Mean over rays of the outermost zero crossing.
    fn interface_radius(&self, phi: &[f64]) -> Option<f64> {
        let nt = self.grid.n_theta;
        let mut s = 0.0;
        for j in 0..nt {
            s += radial_root(&self.radii, &self.ray(phi, j))?;
        }
        Some(s / nt as f64)
    }
}

/// A φ = ε⁻⁴L(Lφ) + ε⁻³f'''(φ_a)μ_a φ with L = −ε²Δ + f''(φ_a).
pub fn apply_linearized(space: &dyn Space, phi: &[f64], phi_a: &[f64], mu_a: &[f64], epsilon: f64) -> Vec<f64> {
    let e2 = epsilon * epsilon;
    let l = |u: &[f64]| -> Vec<f64> {
        let lap = space.laplacian(u);
        (0..u.len()).map(|i| -e2 * lap[i] + fpp(phi_a[i]) * u[i]).collect()
    };
    let ll = l(&l(phi));
    (0..phi.len())
        .map(|i| ll[i] / (e2 * e2) + 6.0 * phi_a[i] * mu_a[i] * phi[i] / (e2 * epsilon))
        .collect()
}

/// Q(φ) = ⟨Aφ, φ⟩.
pub fn quadratic_form(space: &dyn Space, phi: &[f64], phi_a: &[f64], mu_a: &[f64], epsilon: f64) -> f64 {
    dot_w(&apply_linearized(space, phi, phi_a, mu_a, epsilon), phi, space.weights())
}

/// Smallest eigenpair of A.
#[derive(Clone, Debug)]
pub struct EigenProbe {
    pub lambda_min: f64,
    /// W-normalised eigenvector.
    pub eigvec: Vec<f64>,
    /// ‖Av − λv‖_W for the returned vector.
    pub residual: f64,
    pub iterations: usize,
    /// c in the shift-invert operator (A + c)⁻¹.
    pub shift: f64,
    /// Residual tolerance that was applied.
    pub tolerance: f64,
}

/// Certificate that λ_min(A) > −c: I + A/c is positive definite (LU pivots), when the
/// space can factor it.
pub fn lower_bound_certified(space: &dyn Space, phi_a: &[f64], mu_a: &[f64], epsilon: f64, c: f64) -> Option<bool> {
    if c <= 0.0 {
        return None;
    }
    space.jacobian_definite(1.0 / c, epsilon, phi_a, mu_a)
}

/// Residual tolerance of [`min_eig_probe`], relative to ‖v‖.
pub const EIG_TOL: f64 = 1e-6;

/// Residual left by rounding v alone: ‖A(u·v∘s)‖ for random signs s. A computed
/// eigenvector stored in doubles cannot have a smaller residual than this.
pub fn rounding_floor(space: &dyn Space, v: &[f64], phi_a: &[f64], mu_a: &[f64], epsilon: f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0b5e_55ed);
    let dv: Vec<f64> = v
        .iter()
        .map(|x| if rng.gen::<bool>() { 1.0 } else { -1.0 } * f64::EPSILON * x)
        .collect();
    let a = apply_linearized(space, &dv, phi_a, mu_a, epsilon);
    dot_w(&a, &a, space.weights()).sqrt()
}

/// Smallest eigenvalue of A by Lanczos (full reorthogonalisation, W inner product)
/// on the shift-invert operator (I + A/c)⁻¹. The shift starts at 1 and grows until
/// I + A/c is positive definite. Converged when ‖Av − λv‖ ≤ max(1e-6, 4·floor)‖v‖,
/// floor from [`rounding_floor`].
pub fn min_eig_probe(space: &dyn Space, phi_a: &[f64], mu_a: &[f64], epsilon: f64, n_lanczos: usize) -> Result<EigenProbe> {
    if n_lanczos < 2 {
        return invalid("n_lanczos must be at least 2");
    }
    let mut shift = 1.0;
    for _ in 0..40 {
        let dt = 1.0 / shift;
        let definite = space.jacobian_definite(dt, epsilon, phi_a, mu_a);
        if definite == Some(false) {
            shift *= 4.0;
            continue;
        }
        match lanczos(space, phi_a, mu_a, epsilon, n_lanczos, shift) {
            Ok(Some(p)) => return Ok(p),
            // a non-positive Ritz value means A + c was indefinite
            Ok(None) => shift *= 4.0,
            Err(Error::Numerical { msg, .. }) if msg.contains("positive definite") => shift *= 4.0,
            Err(e) => return Err(e),
        }
    }
    Err(Error::Numerical {
        msg: "no positive-definite shift found for the eigenvalue probe".into(),
        iterations: 40,
        residual: f64::NAN,
    })
}

fn lanczos(
    space: &dyn Space,
    phi_a: &[f64],
    mu_a: &[f64],
    eps: f64,
    n_lanczos: usize,
    shift: f64,
) -> Result<Option<EigenProbe>> {
    let n = space.len();
    let w = space.weights();
    let dt = 1.0 / shift;
    let norm = |v: &[f64]| dot_w(v, v, w).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_1a2c);
    let mut q: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
    let qn = norm(&q);
    q.iter_mut().for_each(|x| *x /= qn);
    let mut basis: Vec<Vec<f64>> = vec![q];
    let (mut alpha, mut beta): (Vec<f64>, Vec<f64>) = (Vec::new(), Vec::new());
    let mut best: Option<EigenProbe> = None;
    for it in 0..n_lanczos {
        let qj = basis.last().unwrap().clone();
        // B = (I + dt A)⁻¹ = c(A + c)⁻¹
        let mut v = space.solve_jacobian(dt, eps, phi_a, mu_a, &qj)?;
        let a = dot_w(&v, &qj, w);
        for _ in 0..2 {
            for b in &basis {
                let c = dot_w(&v, b, w);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        alpha.push(a);
        let b = norm(&v);
        let k = alpha.len();
        let check = k >= 4 && (k % 4 == 0 || it + 1 == n_lanczos || b < 1e-13);
        if check {
            let mut t = DMatrix::zeros(k, k);
            for i in 0..k {
                t[(i, i)] = alpha[i];
                if i + 1 < k {
                    t[(i, i + 1)] = beta[i];
                    t[(i + 1, i)] = beta[i];
                }
            }
            let se = SymmetricEigen::new(t);
            if se.eigenvalues.iter().any(|&th| th <= 0.0) {
                return Ok(None);
            }
            let (imax, _) = se
                .eigenvalues
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |m, (i, &v)| if v > m.1 { (i, v) } else { m });
            let y = se.eigenvectors.column(imax);
            let mut x = vec![0.0; n];
            for (i, b) in basis.iter().enumerate() {
                x.iter_mut().zip(b).for_each(|(xv, bv)| *xv += y[i] * bv);
            }
            let xn = norm(&x);
            x.iter_mut().for_each(|v| *v /= xn);
            let ax = apply_linearized(space, &x, phi_a, mu_a, eps);
            let lam = dot_w(&ax, &x, w);
            let r: Vec<f64> = ax.iter().zip(&x).map(|(a, b)| a - lam * b).collect();
            let res = norm(&r);
            // the literal tolerance unless it is below the rounding floor of x
            let tol = EIG_TOL.max(4.0 * rounding_floor(space, &x, phi_a, mu_a, eps));
            let cand = EigenProbe {
                lambda_min: lam,
                eigvec: x,
                residual: res,
                iterations: k,
                shift,
                tolerance: tol,
            };
            if res <= tol {
                return Ok(Some(cand));
            }
            if best.as_ref().map_or(true, |p| res < p.residual) {
                best = Some(cand);
            }
        }
        if b < 1e-13 {
            break;
        }
        beta.push(b);
        v.iter_mut().for_each(|x| *x /= b);
        basis.push(v);
    }
    let best = best.expect("at least one Ritz check runs");
    Err(Error::Numerical {
        msg: format!("Lanczos did not converge; best estimate lambda_min = {}", best.lambda_min),
        iterations: best.iterations,
        residual: best.residual,
    })
}

/// Centre and radius of a circle chart, checked against the polar grid.
fn circle_of(space: &PolarSpace, chart: &TubularChart, epsilon: f64) -> Result<f64> {
    let radius = match &chart.interface {
        Interface::Circle { center, radius } if center[0] == 0.0 && center[1] == 0.0 => *radius,
        _ => {
            return Err(Error::Configuration(
                "decomposition on a polar grid needs a circle centred at the origin".into(),
            ))
        }
    };
    let g = &space.grid;
    if radius - chart.delta < g.r_in || radius + chart.delta > g.r_out {
        return Err(Error::Configuration("tube not contained in the annulus".into()));
    }
    if g.dr() > epsilon / 8.0 * (1.0 + 1e-12) {
        return Err(Error::Configuration(format!(
            "ray spacing {} does not resolve eps/8 = {}",
            g.dr(),
            epsilon / 8.0
        )));
    }
    Ok(radius)
}

/// Ray kernel ψ(r/ε)ζ(r)J^{1/2} and the ray weight, per ring.
fn ray_kernel(space: &PolarSpace, radius: f64, delta: f64, epsilon: f64, psi: &Profile1D) -> Vec<f64> {
    space
        .radii
        .iter()
        .map(|&rho| {
            let r = rho - radius;
            let zeta = cutoff_zeta(r, delta);
            if zeta == 0.0 {
                0.0
            } else {
                psi.eval(r / epsilon) * zeta * (rho / radius).sqrt()
            }
        })
        .collect()
}

/// η(s) = ε⁻¹∫ψ(r/ε)²ζ²J^{1/2}dr on each ray.
pub fn eta_normalization(space: &PolarSpace, chart: &TubularChart, epsilon: f64, psi: &Profile1D) -> Result<Vec<f64>> {
    let radius = circle_of(space, chart, epsilon)?;
    let dr = space.grid.dr();
    let eta = ksum(
        space
            .radii
            .iter()
            .map(|&rho| {
                let r = rho - radius;
                let z = cutoff_zeta(r, chart.delta);
                if z == 0.0 {
                    0.0
                } else {
                    psi.eval(r / epsilon).powi(2) * z * z * (rho / radius).sqrt() * dr
                }
            }),
    ) / epsilon;
    Ok(vec![eta; space.grid.n_theta])
}

#[derive(Clone, Debug)]
pub struct Decomposition {
    /// Kernel amplitude per ray (surface node).
    pub z: Vec<f64>,
    pub phi_perp: Vec<f64>,
    pub eta: Vec<f64>,
    pub radius: f64,
    pub delta: f64,
    pub epsilon: f64,
}

/// φ = ε^{-1/2}Z(s)ψ(r/ε)ζ(r) + φ⊥ with φ⊥ orthogonal to ψζJ^{1/2} on every ray.
pub fn decompose(space: &PolarSpace, phi: &[f64], chart: &TubularChart, epsilon: f64, psi: &Profile1D) -> Result<Decomposition> {
    let radius = circle_of(space, chart, epsilon)?;
    if phi.len() != space.len() {
        return invalid("field does not match the polar grid");
    }
    let eta = eta_normalization(space, chart, epsilon, psi)?;
    let kern = ray_kernel(space, radius, chart.delta, epsilon, psi);
    let dr = space.grid.dr();
    let (nr, nt) = (space.grid.n_r, space.grid.n_theta);
    let se = epsilon.sqrt();
    let mut z = vec![0.0; nt];
    let mut phi_perp = phi.to_vec();
    for j in 0..nt {
        let proj = ksum((0..nr).map(|i| phi[i * nt + j] * kern[i] * dr));
        z[j] = proj / (se * eta[j]);
        for i in 0..nr {
            // ψζ·J^{1/2}/J^{1/2}: the reconstruction carries no Jacobian factor
            let k = kern[i] / (space.radii[i] / radius).sqrt();
            phi_perp[i * nt + j] -= z[j] * k / se;
        }
    }
    Ok(Decomposition {
        z,
        phi_perp,
        eta,
        radius,
        delta: chart.delta,
        epsilon,
    })
}

impl Decomposition {
    /// ε^{-1/2}Zψζ on the grid.
    pub fn tangential_part(&self, space: &PolarSpace, psi: &Profile1D) -> Vec<f64> {
        let (nr, nt) = (space.grid.n_r, space.grid.n_theta);
        let se = self.epsilon.sqrt();
        let mut out = vec![0.0; nr * nt];
        for i in 0..nr {
            let r = space.radii[i] - self.radius;
            let zeta = cutoff_zeta(r, self.delta);
            if zeta == 0.0 {
                continue;
            }
            let k = psi.eval(r / self.epsilon) * zeta / se;
            for j in 0..nt {
                out[i * nt + j] = self.z[j] * k;
            }
        }
        out
    }

    /// max over rays of |∫φ⊥ψζJ^{1/2}dr| / ‖φ⊥‖_{L²}.
    pub fn orthogonality_defect(&self, space: &PolarSpace, psi: &Profile1D) -> f64 {
        let kern = ray_kernel(space, self.radius, self.delta, self.epsilon, psi);
        let dr = space.grid.dr();
        let (nr, nt) = (space.grid.n_r, space.grid.n_theta);
        let pn = dot_w(&self.phi_perp, &self.phi_perp, space.weights()).sqrt();
        if pn == 0.0 {
            return 0.0;
        }
        (0..nt)
            .map(|j| ksum((0..nr).map(|i| self.phi_perp[i * nt + j] * kern[i] * dr)).abs())
            .fold(0.0, f64::max)
            / pn
    }

    /// ∫_Γ Z² ds.
    pub fn surface_l2_sq(&self) -> f64 {
        let ds = self.radius * 2.0 * PI / self.z.len() as f64;
        ksum(self.z.iter().map(|z| z * z * ds))
    }

    /// ‖Z‖²_{H²(Γ)} = ‖Z‖² + ‖Δ_Γ Z‖² on the circle polygon through the ray feet.
    pub fn surface_h2_sq(&self) -> Result<f64> {
        let n = self.z.len();
        let curve = ClosedCurve::circle([0.0, 0.0], self.radius, n)?;
        let lz = laplace_beltrami(&curve, &self.z);
        let ds = self.radius * 2.0 * PI / n as f64;
        Ok(self.surface_l2_sq() + ksum(lz.iter().map(|v| v * v * ds)))
    }
}

/// ∫_{tube} u² (|ρ − R| < δ).
pub fn tube_l2_sq(space: &PolarSpace, u: &[f64], radius: f64, delta: f64) -> f64 {
    let nt = space.grid.n_theta;
    ksum(
        u.iter()
            .zip(space.weights())
            .enumerate()
            .filter(|(i, _)| (space.radii[i / nt] - radius).abs() < delta)
            .map(|(_, (x, w))| w * x * x),
    )
}

/// K = ‖Z‖²_{H²(Γ)} + ‖φ⊥‖²_{H²} + ε⁻²‖φ⊥‖²_{H¹} + ε⁻⁴‖φ⊥‖²_{L²}, with
/// ‖∇u‖² = −⟨Δ_h u, u⟩ and ‖u‖²_{H²} = ‖u‖² + ‖∇u‖² + ‖Δ_h u‖².
pub fn k_functional(space: &dyn Space, dec: &Decomposition) -> Result<f64> {
    let u = &dec.phi_perp;
    let w = space.weights();
    let lap = space.laplacian(u);
    let l2 = dot_w(u, u, w);
    let grad = -dot_w(&lap, u, w);
    let hess = dot_w(&lap, &lap, w);
    let e2 = dec.epsilon * dec.epsilon;
    Ok(dec.surface_h2_sq()? + (l2 + grad + hess) + (l2 + grad) / e2 + l2 / (e2 * e2))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergySplit {
    /// Q(φ^⊤), φ^⊤ = ε^{-1/2}Zθ'(r/ε)ζ
    pub i1: f64,
    /// 2⟨Aφ^⊤, φ⊥⟩
    pub i2: f64,
    /// Q(φ⊥)
    pub i3: f64,
    /// Q(φ) − (I₁ + I₂ + I₃), from φ_e = ε^{-1/2}Z(ψ − θ')ζ.
    pub remainder: f64,
}

/// I₁, I₂, I₃ of Q for φ = φ^⊤ + φ⊥ + φ_e.
pub fn energy_split(
    space: &PolarSpace,
    dec: &Decomposition,
    phi: &[f64],
    phi_a: &[f64],
    mu_a: &[f64],
) -> EnergySplit {
    let eps = dec.epsilon;
    let (nr, nt) = (space.grid.n_r, space.grid.n_theta);
    let se = eps.sqrt();
    let mut top = vec![0.0; nr * nt];
    for i in 0..nr {
        let r = space.radii[i] - dec.radius;
        let zeta = cutoff_zeta(r, dec.delta);
        if zeta == 0.0 {
            continue;
        }
        let k = theta_all(r / eps)[1] * zeta / se;
        for j in 0..nt {
            top[i * nt + j] = dec.z[j] * k;
        }
    }
    let w = space.weights();
    let a_top = apply_linearized(space, &top, phi_a, mu_a, eps);
    let a_perp = apply_linearized(space, &dec.phi_perp, phi_a, mu_a, eps);
    let i1 = dot_w(&a_top, &top, w);
    let i2 = 2.0 * dot_w(&a_top, &dec.phi_perp, w);
    let i3 = dot_w(&a_perp, &dec.phi_perp, w);
    let q = quadratic_form(space, phi, phi_a, mu_a, eps);
    EnergySplit {
        i1,
        i2,
        i3,
        remainder: q - (i1 + i2 + i3),
    }
}

/// ⟨L_εφ, φ⟩ with L_ε = −εΔ + ε⁻¹f''(φ_a), and the weight ε‖∇φ‖² + ε⁻¹‖φ‖².
pub fn allen_cahn_form(space: &dyn Space, phi: &[f64], phi_a: &[f64], epsilon: f64) -> (f64, f64) {
    let w = space.weights();
    let lap = space.laplacian(phi);
    let grad = -dot_w(&lap, phi, w);
    let pot = ksum(phi.iter().zip(phi_a).zip(w).map(|((u, a), w)| w * fpp(*a) * u * u));
    let l2 = dot_w(phi, phi, w);
    (epsilon * grad + pot / epsilon, epsilon * grad + l2 / epsilon)
}

/// Everything the spectral checks need for a circle of radius R centred at the origin.
pub struct SpectralSetup {
    pub space: PolarSpace,
    pub chart: TubularChart,
    pub phi_a: Vec<f64>,
    pub mu_a: Vec<f64>,
    pub eigen: Eigen1D,
    pub epsilon: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadraticFormReport {
    pub q_value: f64,
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    pub k_value: f64,
    pub lambda_min: f64,
    pub c_hat_used: f64,
    pub epsilon: f64,
    /// (Q(v) + Ĉ‖v‖²)/K(v) for the minimising eigenvector v.
    pub ratio: f64,
    pub orthogonality_defect: f64,
    pub eig_residual: f64,
}

impl QuadraticFormReport {
    pub const CSV_HEADER: &'static str =
        "eps,lambda_min,C_hat,ratio_Q_plus_ChatL2_over_K,I1,I2,I3,orthogonality_defect";

    pub fn csv_line(&self) -> String {
        format!(
            "{},{:.10e},{:.6e},{:.10e},{:.10e},{:.10e},{:.10e},{:.3e}",
            self.epsilon,
            self.lambda_min,
            self.c_hat_used,
            self.ratio,
            self.i1,
            self.i2,
            self.i3,
            self.orthogonality_defect
        )
    }
}

impl SpectralSetup {
    /// Annulus [R − δ − R/10·… , R + δ + R/5] with δ = 0.8R, radial spacing ε/`per_eps`,
    /// `n_theta` angles; (φ_a, μ_a) of order 2 at t = 0.
    pub fn circle(radius: f64, epsilon: f64, per_eps: f64, n_theta: usize) -> Result<Self> {
        let delta = 0.8 * radius;
        if epsilon > delta / 8.0 {
            return Err(Error::Configuration(format!("eps = {epsilon} exceeds delta/8 = {}", delta / 8.0)));
        }
        if per_eps < 8.0 {
            return invalid("radial resolution must be at least eps/8");
        }
        let r_in = 0.1 * radius;
        let r_out = radius + delta + 0.2 * radius;
        let n_r = ((r_out - r_in) * per_eps / epsilon).ceil() as usize;
        let space = PolarSpace::new(PolarGrid::new(r_in, r_out, n_r, n_theta)?);
        let hier = DistanceHierarchy::willmore(Interface::Circle { center: [0.0, 0.0], radius }, delta, 0.0, 2)?
            .with_chi_band(10.0 * space.grid.dr());
        let coeffs = ExpansionCoefficients::default_coefficients()?;
        let mut phi_a = Vec::with_capacity(space.len());
        let mut mu_a = Vec::with_capacity(space.len());
        for i in 0..n_r {
            let (p, m) = approximate_at(&hier, &coeffs, epsilon, &[space.grid.r(i), 0.0])?;
            phi_a.extend(std::iter::repeat(p).take(n_theta));
            mu_a.extend(std::iter::repeat(m).take(n_theta));
        }
        let eigen = eigen_1d(epsilon, delta, 4000)?;
        Ok(SpectralSetup {
            chart: hier.chart.clone(),
            space,
            phi_a,
            mu_a,
            eigen,
            epsilon,
        })
    }

    pub fn psi(&self) -> &Profile1D {
        &self.eigen.phi
    }

    pub fn decompose(&self, phi: &[f64]) -> Result<Decomposition> {
        decompose(&self.space, phi, &self.chart, self.epsilon, self.psi())
    }

    pub fn quadratic_form(&self, phi: &[f64]) -> f64 {
        quadratic_form(&self.space, phi, &self.phi_a, &self.mu_a, self.epsilon)
    }

    pub fn min_eig(&self, n_lanczos: usize) -> Result<EigenProbe> {
        min_eig_probe(&self.space, &self.phi_a, &self.mu_a, self.epsilon, n_lanczos)
    }

    /// Full report for the minimising eigenvector with lower-bound constant `c_hat`.
    pub fn report(&self, probe: &EigenProbe, c_hat: f64) -> Result<QuadraticFormReport> {
        let v = &probe.eigvec;
        let dec = self.decompose(v)?;
        let split = energy_split(&self.space, &dec, v, &self.phi_a, &self.mu_a);
        let k = k_functional(&self.space, &dec)?;
        let q = self.quadratic_form(v);
        let l2 = dot_w(v, v, self.space.weights());
        Ok(QuadraticFormReport {
            q_value: q,
            i1: split.i1,
            i2: split.i2,
            i3: split.i3,
            k_value: k,
            lambda_min: probe.lambda_min,
            c_hat_used: c_hat,
            epsilon: self.epsilon,
            ratio: (q + c_hat * l2) / k,
            orthogonality_defect: dec.orthogonality_defect(&self.space, self.psi()),
            eig_residual: probe.residual,
        })
    }

    /// Field ε^{-1/2}Z(s)θ'(r/ε)ζ(r) for a given amplitude Z(θ).
    pub fn kernel_field(&self, z: impl Fn(f64) -> f64) -> Vec<f64> {
        let g = &self.space.grid;
        let radius = self.chart.interface.radius().unwrap_or(1.0);
        let se = self.epsilon.sqrt();
        g.sample(|rho, t| {
            let r = rho - radius;
            z(t) * theta_all(r / self.epsilon)[1] * cutoff_zeta(r, self.chart.delta) / se
        })
    }
}

/// Random smooth field on the annulus: a few angular modes times Gaussian bumps
/// centred in the tube. Stream `index` of a counter-based family seeded by `seed`.
pub fn random_smooth_field(space: &PolarSpace, radius: f64, delta: f64, seed: u64, index: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let n_terms = 6;
    let terms: Vec<(usize, f64, f64, f64, f64)> = (0..n_terms)
        .map(|_| {
            let m = rng.gen_range(0..8usize);
            let phase = rng.gen_range(0.0..2.0 * PI);
            let amp = rng.gen_range(-1.0..1.0);
            let centre = radius + rng.gen_range(-0.8..0.8) * delta;
            let width = rng.gen_range(0.05..0.4) * delta;
            (m, phase, amp, centre, width)
        })
        .collect();
    space.grid.sample(|rho, t| {
        terms
            .iter()
            .map(|&(m, ph, a, c, wd)| a * (m as f64 * t + ph).cos() * (-((rho - c) / wd).powi(2)).exp())
            .sum()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::GridDomain;
    use crate::pde::PeriodicSpace;

    #[test]
    fn polar_laplacian_is_fourth_order() {
        // u = cos(2θ)·exp(−16(ρ−1.5)²) is ~1e-7 at both ends
        let f = |r: f64, t: f64| (2.0 * t).cos() * (-16.0 * (r - 1.5f64).powi(2)).exp();
        let lap = |r: f64, t: f64| {
            let x = r - 1.5;
            let g = (-16.0 * x * x).exp();
            let g1 = -32.0 * x * g;
            let g2 = (1024.0 * x * x - 32.0) * g;
            (2.0 * t).cos() * (g2 + g1 / r - 4.0 * g / (r * r))
        };
        let err = |n_r: usize| {
            let s = PolarSpace::new(PolarGrid::new(0.5, 2.5, n_r, 32).unwrap());
            let l = s.laplacian(&s.grid.sample(f));
            let exact = s.grid.sample(lap);
            // away from the zero-flux ends, which the bump only satisfies to ~1e-6
            (0..s.len())
                .filter(|&i| (s.grid.r(i / 32) - 1.5).abs() < 0.7)
                .fold(0.0f64, |m, i| m.max((l[i] - exact[i]).abs()))
        };
        let (e1, e2) = (err(200), err(400));
        assert!(e1 / e2 > 12.0, "{e1} {e2}");
    }

    #[test]
    fn constant_state_eigenvalue() {
        let eps = 0.1;
        let g = PolarGrid::new(0.5, 1.5, 40, 16).unwrap();
        let s = PolarSpace::new(g);
        let ones = vec![1.0; s.len()];
        let zeros = vec![0.0; s.len()];
        let p = min_eig_probe(&s, &ones, &zeros, eps, 60).unwrap();
        let exact = 4.0 / eps.powi(4);
        assert!((p.lambda_min - exact).abs() < 1e-8 * exact, "{} {}", p.lambda_min, exact);

        let dom = GridDomain::new(2.0, 16).unwrap();
        let ps = PeriodicSpace::new(dom);
        let ones = vec![1.0; ps.len()];
        let zeros = vec![0.0; ps.len()];
        let p = min_eig_probe(&ps, &ones, &zeros, eps, 60).unwrap();
        assert!((p.lambda_min - exact).abs() < 1e-8 * exact);
    }

    #[test]
    fn decomposition_of_kernel_field() {
        let s = SpectralSetup::circle(1.0, 0.1, 8.0, 16).unwrap();
        let g = &s.space.grid;
        let psi = s.psi().clone();
        let phi = g.sample(|rho, _| {
            let r = rho - 1.0;
            let z = cutoff_zeta(r, 0.8);
            if z == 0.0 { 0.0 } else { psi.eval(r / 0.1) * z / 0.1f64.sqrt() }
        });
        let d = s.decompose(&phi).unwrap();
        assert!(d.z.iter().all(|z| (z - 1.0).abs() < 1e-10));
        assert!(d.phi_perp.iter().all(|v| v.abs() < 1e-10));
    }
}
