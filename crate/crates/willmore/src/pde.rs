//! Time integration of ε³φ_t = ε²Δμ − f''(φ)μ, εμ = −ε²Δφ + f'(φ).
//!
//! Written as φ_t = ε⁻¹Δμ − ε⁻³f''(φ)μ = −ε⁻¹ ∇E(φ), with E = (2ε)⁻¹∫μ², the
//! flow is a gradient flow whenever the discrete Laplacian is self-adjoint for the
//! quadrature weights — true for both spaces here:
//!
//! * [`PeriodicSpace`]: square periodic box, spectral Laplacian;
//! * [`RadialSpace`]: radially symmetric fields in 2D/3D on a cell-centred grid,
//!   fourth-order flux-form Laplacian `−W⁻¹DᵀMD` with reflective closures.
//!
//! Three schemes: explicit Euler, the stabilised IMEX step (−Δ² and S·Δ implicit),
//! and a linearly implicit Euler step with the exact Jacobian −A,
//! A = ε⁻⁴L² + ε⁻³f'''(φ)μ, L = −ε²Δ + f''(φ).

use crate::error::{invalid, Error, Result};
use crate::geometry::{extract_zero_level, GridDomain, RadialGrid};
use crate::linalg::{ksum, wavenumbers, Banded, Dd, Fft2};
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;
use std::sync::Mutex;

#[inline]
fn fp(u: f64) -> f64 {
    u * u * u - u
}
#[inline]
fn fpp(u: f64) -> f64 {
    3.0 * u * u - 1.0
}
#[inline]
fn fppp(u: f64) -> f64 {
    6.0 * u
}

/// Blow-up sentinel on max|φ|.
pub const PHI_BOUND: f64 = 1.2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    Explicit,
    Imex,
    Linearized,
}

impl FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "explicit" => Ok(Scheme::Explicit),
            "imex" => Ok(Scheme::Imex),
            "linearized" | "linearised" => Ok(Scheme::Linearized),
            other => Err(Error::Configuration(format!("unknown scheme '{other}'"))),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::Explicit => "explicit",
            Scheme::Imex => "imex",
            Scheme::Linearized => "linearized",
        })
    }
}

/// A spatial discretisation the time steppers can drive.
pub trait Space {
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    /// Quadrature weights (the inner product the Laplacian is self-adjoint in).
    fn weights(&self) -> &[f64];
    fn spacing(&self) -> f64;
    /// Physical position of node i (unused trailing coordinates are 0).
    fn point(&self, i: usize) -> [f64; 3];
    fn laplacian(&self, u: &[f64]) -> Vec<f64>;
    /// (I + dt Δ² − dt S Δ)⁻¹ rhs.
    fn solve_imex(&self, dt: f64, s: f64, rhs: &[f64]) -> Result<Vec<f64>>;
    /// (I + dt A)⁻¹ rhs with A the negated Jacobian at (φ, μ).
    fn solve_jacobian(&self, dt: f64, eps: f64, phi: &[f64], mu: &[f64], rhs: &[f64]) -> Result<Vec<f64>>;
    /// Radius of the zero level (circle/sphere estimate), if one exists.
    fn interface_radius(&self, phi: &[f64]) -> Option<f64>;
    /// Whether I + dt A is positive definite, when the space can decide it cheaply.
    fn jacobian_definite(&self, _dt: f64, _eps: f64, _phi: &[f64], _mu: &[f64]) -> Option<bool> {
        None
    }
    /// E(φ) as used by the per-step dissipation check.
    fn energy(&self, phi: &[f64], eps: f64) -> f64 {
        let lap = self.laplacian(phi);
        let mu = phi.iter().zip(&lap).map(|(u, l)| (-eps * eps * l + fp(*u)) / eps);
        ksum(mu.zip(self.weights()).map(|(m, w)| w * m * m)) / (2.0 * eps)
    }
}

/// μ = (−ε²Δφ + f'(φ))/ε.
pub fn mu_of_phi(space: &dyn Space, phi: &[f64], eps: f64) -> Vec<f64> {
    let lap = space.laplacian(phi);
    phi.iter()
        .zip(&lap)
        .map(|(u, l)| (-eps * eps * l + fp(*u)) / eps)
        .collect()
}

/// E = (2ε)⁻¹ Σ wᵢ μᵢ² (compensated sum).
pub fn willmore_energy(space: &dyn Space, phi: &[f64], eps: f64) -> f64 {
    space.energy(phi, eps)
}

/// Right-hand side F = ε⁻¹Δμ − ε⁻³f''(φ)μ together with μ.
pub fn flow_rhs(space: &dyn Space, phi: &[f64], eps: f64) -> (Vec<f64>, Vec<f64>) {
    let mu = mu_of_phi(space, phi, eps);
    let lmu = space.laplacian(&mu);
    let e3 = eps * eps * eps;
    let f = (0..phi.len())
        .map(|i| lmu[i] / eps - fpp(phi[i]) * mu[i] / e3)
        .collect();
    (f, mu)
}

#[derive(Clone, Debug)]
pub struct PhaseFieldState {
    pub phi: Vec<f64>,
    pub mu: Vec<f64>,
    pub time: f64,
    pub epsilon: f64,
}

impl PhaseFieldState {
    pub fn new(space: &dyn Space, phi: Vec<f64>, epsilon: f64, time: f64) -> Self {
        let mu = mu_of_phi(space, &phi, epsilon);
        PhaseFieldState {
            phi,
            mu,
            time,
            epsilon,
        }
    }

    pub fn max_abs_phi(&self) -> f64 {
        self.phi.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub epsilon: f64,
    pub dt: f64,
    pub t_end: f64,
    /// Stabilisation constant S of the IMEX scheme.
    pub stabilization: f64,
    pub scheme: Scheme,
    pub sample_every: usize,
    /// Per-step energy tolerance factor: E₊ ≤ E + tol·dt·max(1, E).
    pub energy_tol: f64,
}

impl SolverConfig {
    pub fn new(epsilon: f64, dt: f64, t_end: f64, scheme: Scheme) -> Self {
        SolverConfig {
            epsilon,
            dt,
            t_end,
            stabilization: 2.0 / (epsilon * epsilon),
            scheme,
            sample_every: 1,
            energy_tol: 1e-8,
        }
    }

    /// Default step for a scheme at grid spacing h.
    pub fn default_dt(scheme: Scheme, epsilon: f64, h: f64) -> f64 {
        match scheme {
            Scheme::Imex => 0.5 * epsilon * epsilon * h * h,
            Scheme::Explicit => 0.1 * epsilon * h.powi(4),
            Scheme::Linearized => 0.25 * epsilon.powi(4),
        }
    }

    pub fn validate(&self, space: &dyn Space) -> Result<()> {
        if !(self.epsilon > 0.0) || !(self.dt > 0.0) || !(self.t_end >= 0.0) {
            return Err(Error::Configuration("eps, dt must be positive and t_end >= 0".into()));
        }
        if space.spacing() > self.epsilon / 4.0 * (1.0 + 1e-12) {
            return Err(Error::Configuration(format!(
                "grid spacing {} exceeds eps/4 = {}",
                space.spacing(),
                self.epsilon / 4.0
            )));
        }
        if self.stabilization < 0.0 {
            return Err(Error::Configuration("stabilization must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceSample {
    pub time: f64,
    pub energy: f64,
    pub max_phi: f64,
    pub radius: f64,
}

#[derive(Clone, Debug, Default)]
pub struct EnergyTrace {
    pub samples: Vec<TraceSample>,
    pub steps: usize,
    /// Steps whose energy rose by more than the tolerance.
    pub violations: usize,
    /// Largest (E₊ − E)/(dt·max(1,E)) seen over all steps.
    pub max_relative_increase: f64,
}

impl EnergyTrace {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,E,max_phi,radius\n");
        for p in &self.samples {
            s.push_str(&format!("{},{},{},{}\n", p.time, p.energy, p.max_phi, p.radius));
        }
        s
    }
}

/// One step of the configured scheme.
pub fn step(space: &dyn Space, state: &PhaseFieldState, config: &SolverConfig) -> Result<PhaseFieldState> {
    let eps = config.epsilon;
    let dt = config.dt;
    let (f, mu) = flow_rhs(space, &state.phi, eps);
    let phi: Vec<f64> = match config.scheme {
        Scheme::Explicit => state.phi.iter().zip(&f).map(|(u, g)| u + dt * g).collect(),
        Scheme::Imex => {
            let s = config.stabilization;
            let lap = space.laplacian(&state.phi);
            let bilap = space.laplacian(&lap);
            // F + Δ²φ is the explicit remainder; −SΔφ moves the stabiliser to the old level
            let rhs: Vec<f64> = (0..state.phi.len())
                .map(|i| state.phi[i] + dt * (f[i] + bilap[i] - s * lap[i]))
                .collect();
            space.solve_imex(dt, s, &rhs)?
        }
        Scheme::Linearized => {
            let rhs: Vec<f64> = f.iter().map(|g| dt * g).collect();
            let d = space.solve_jacobian(dt, eps, &state.phi, &mu, &rhs)?;
            state.phi.iter().zip(&d).map(|(u, d)| u + d).collect()
        }
    };
    let time = state.time + dt;
    if phi.iter().any(|v| !v.is_finite() || v.abs() > PHI_BOUND) {
        return Err(Error::Blowup {
            time: state.time,
            msg: format!("max|phi| left [-{PHI_BOUND}, {PHI_BOUND}] ({} scheme)", config.scheme),
        });
    }
    Ok(PhaseFieldState::new(space, phi, eps, time))
}

/// The stabilised IMEX step regardless of the configured scheme.
pub fn step_imex(space: &dyn Space, state: &PhaseFieldState, config: &SolverConfig) -> Result<PhaseFieldState> {
    let mut c = config.clone();
    c.scheme = Scheme::Imex;
    step(space, state, &c)
}

/// Integrate to `t_end`, checking energy dissipation after every step.
pub fn run(space: &dyn Space, config: &SolverConfig, initial: &PhaseFieldState) -> Result<(PhaseFieldState, EnergyTrace)> {
    let mut trace = EnergyTrace::default();
    let s = run_into(space, config, initial, &mut trace)?;
    Ok((s, trace))
}

/// As [`run`], filling `trace` as it goes so that a failing run leaves the partial trace.
pub fn run_into(
    space: &dyn Space,
    config: &SolverConfig,
    initial: &PhaseFieldState,
    trace: &mut EnergyTrace,
) -> Result<PhaseFieldState> {
    config.validate(space)?;
    if initial.phi.len() != space.len() {
        return invalid("initial field does not match the space");
    }
    let n_steps = ((config.t_end - initial.time) / config.dt - 1e-9).ceil().max(0.0) as usize;
    let mut state = initial.clone();
    let eps = config.epsilon;
    let sample = |s: &PhaseFieldState, e: f64| TraceSample {
        time: s.time,
        energy: e,
        max_phi: s.max_abs_phi(),
        radius: space.interface_radius(&s.phi).unwrap_or(f64::NAN),
    };
    let mut e_old = space.energy(&state.phi, eps);
    trace.samples.push(sample(&state, e_old));
    for k in 0..n_steps {
        let next = step(space, &state, config)?;
        let e_new = space.energy(&next.phi, eps);
        let scale = config.dt * e_old.max(1.0);
        let rel = (e_new - e_old) / scale;
        trace.max_relative_increase = trace.max_relative_increase.max(rel);
        if rel > config.energy_tol {
            trace.violations += 1;
            log::warn!("energy rose by {:.3e} at t = {}", e_new - e_old, next.time);
        }
        trace.steps += 1;
        state = next;
        e_old = e_new;
        let every = config.sample_every.max(1);
        if (k + 1) % every == 0 || k + 1 == n_steps {
            trace.samples.push(sample(&state, e_new));
        }
    }
    Ok(state)
}

/// Periodic square box with a spectral Laplacian.
pub struct PeriodicSpace {
    pub domain: GridDomain,
    fft: Fft2,
    ksq: Vec<f64>,
    weights: Vec<f64>,
}

impl PeriodicSpace {
    pub fn new(domain: GridDomain) -> Self {
        let n = domain.n;
        let k = wavenumbers(n, domain.extent);
        let mut ksq = vec![0.0; n * n];
        for j in 0..n {
            for i in 0..n {
                ksq[j * n + i] = k[i] * k[i] + k[j] * k[j];
            }
        }
        PeriodicSpace {
            domain,
            fft: Fft2::new(n),
            ksq,
            weights: vec![domain.cell_area(); n * n],
        }
    }

    /// |k|² per Fourier index.
    pub fn ksq(&self) -> &[f64] {
        &self.ksq
    }

    pub fn fft(&self) -> &Fft2 {
        &self.fft
    }

    fn apply_a(&self, eps: f64, dt: f64, phi: &[f64], mu: &[f64], v: &[f64]) -> Vec<f64> {
        let l = |w: &[f64]| -> Vec<f64> {
            let lap = self.laplacian(w);
            (0..w.len()).map(|i| -eps * eps * lap[i] + fpp(phi[i]) * w[i]).collect()
        };
        let llv = l(&l(v));
        let e3 = eps.powi(3);
        let e4 = eps.powi(4);
        (0..v.len())
            .map(|i| v[i] + dt * (llv[i] / e4 + fppp(phi[i]) * mu[i] * v[i] / e3))
            .collect()
    }
}

impl Space for PeriodicSpace {
    fn len(&self) -> usize {
        self.domain.len()
    }
    fn weights(&self) -> &[f64] {
        &self.weights
    }
    fn spacing(&self) -> f64 {
        self.domain.spacing()
    }
    fn point(&self, i: usize) -> [f64; 3] {
        let p = self.domain.point(i);
        [p[0], p[1], 0.0]
    }
    fn laplacian(&self, u: &[f64]) -> Vec<f64> {
        let sym: Vec<f64> = self.ksq.iter().map(|k| -k).collect();
        self.fft.multiply(u, &sym)
    }
    fn solve_imex(&self, dt: f64, s: f64, rhs: &[f64]) -> Result<Vec<f64>> {
        let sym: Vec<f64> = self
            .ksq
            .iter()
            .map(|k| 1.0 / (1.0 + dt * k * k + dt * s * k))
            .collect();
        Ok(self.fft.multiply(rhs, &sym))
    }
    fn solve_jacobian(&self, dt: f64, eps: f64, phi: &[f64], mu: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
        // preconditioned CG; the preconditioner is the operator at φ ≡ ±1, μ ≡ 0
        let e4 = eps.powi(4);
        let pre: Vec<f64> = self
            .ksq
            .iter()
            .map(|k| 1.0 / (1.0 + dt * (eps * eps * k + 2.0).powi(2) / e4))
            .collect();
        let dot = |a: &[f64], b: &[f64]| ksum(a.iter().zip(b).map(|(x, y)| x * y));
        let bnorm = dot(rhs, rhs).sqrt();
        let mut x = self.fft.multiply(rhs, &pre);
        let ax = self.apply_a(eps, dt, phi, mu, &x);
        let mut r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let mut z = self.fft.multiply(&r, &pre);
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let max_it = 500;
        for it in 0..max_it {
            let rn = dot(&r, &r).sqrt();
            if rn <= 1e-13 * bnorm || bnorm == 0.0 {
                return Ok(x);
            }
            let ap = self.apply_a(eps, dt, phi, mu, &p);
            let pap = dot(&p, &ap);
            if !(pap > 0.0) {
                return Err(Error::Numerical {
                    msg: "linearized step operator is not positive definite (reduce dt)".into(),
                    iterations: it,
                    residual: rn / bnorm,
                });
            }
            let a = rz / pap;
            for i in 0..x.len() {
                x[i] += a * p[i];
                r[i] -= a * ap[i];
            }
            z = self.fft.multiply(&r, &pre);
            let rz_new = dot(&r, &z);
            let b = rz_new / rz;
            rz = rz_new;
            for i in 0..p.len() {
                p[i] = z[i] + b * p[i];
            }
        }
        let rn = dot(&r, &r).sqrt();
        Err(Error::Numerical {
            msg: "CG did not converge in the linearized step".into(),
            iterations: max_it,
            residual: rn / bnorm,
        })
    }
    fn interface_radius(&self, phi: &[f64]) -> Option<f64> {
        let z = extract_zero_level(phi, &self.domain).ok()?;
        if !z.closed {
            return None;
        }
        let n = z.points.len() as f64;
        let c = z.points.iter().fold([0.0, 0.0], |a, p| [a[0] + p[0] / n, a[1] + p[1] / n]);
        Some(z.points.iter().map(|p| (p[0] - c[0]).hypot(p[1] - c[1])).sum::<f64>() / n)
    }
}

/// Fourth-order flux-form Laplacian −W⁻¹DᵀMD on n cell-centred nodes of spacing h.
///
/// D is the staggered derivative (1, −27, 27, −1)/(24h) onto the interior faces
/// j+½ (j = 0..n−2), ghosts by even reflection (zero flux at both ends), and
/// `face_measure(j)` the quadrature mass of face j+½. The result is W-self-adjoint.
pub(crate) fn flux_laplacian(n: usize, h: f64, weights: &[f64], face_measure: impl Fn(usize) -> f64) -> Banded {
    let refl = |k: isize| -> usize {
        if k < 0 {
            (-k - 1) as usize
        } else if k as usize >= n {
            2 * n - 1 - k as usize
        } else {
            k as usize
        }
    };
    let coeff = [1.0, -27.0, 27.0, -1.0];
    let mut k_mat = Banded::zeros(n, 3, 3);
    for j in 0..n - 1 {
        let m = face_measure(j);
        let mut row: Vec<(usize, f64)> = Vec::with_capacity(4);
        for (o, c) in coeff.iter().enumerate() {
            let idx = refl(j as isize - 1 + o as isize);
            match row.iter_mut().find(|e| e.0 == idx) {
                Some(e) => e.1 += c / (24.0 * h),
                None => row.push((idx, c / (24.0 * h))),
            }
        }
        for &(a, ca) in &row {
            for &(b, cb) in &row {
                k_mat.add(a, b, m * ca * cb);
            }
        }
    }
    let mut lap = Banded::zeros(n, 3, 3);
    for i in 0..n {
        for j in i.saturating_sub(3)..=(i + 3).min(n - 1) {
            lap.set(i, j, -k_mat.get(i, j) / weights[i]);
        }
    }
    lap
}

/// Radially symmetric fields on a cell-centred radial grid.
pub struct RadialSpace {
    pub grid: RadialGrid,
    weights: Vec<f64>,
    /// Δ_h = −W⁻¹ DᵀMD, bandwidth 3.
    lap: Banded,
    imex_cache: Mutex<Option<(f64, f64, Banded)>>,
}

impl RadialSpace {
    pub fn new(grid: RadialGrid) -> Self {
        let n = grid.n;
        let h = grid.h();
        let d = grid.dim as i32;
        let omega = grid.omega();
        let weights = grid.weights();
        let lap = flux_laplacian(n, h, &weights, |j| {
            let face = (j + 1) as f64 * h;
            omega * face.powi(d - 1) * h
        });
        RadialSpace {
            grid,
            weights,
            lap,
            imex_cache: Mutex::new(None),
        }
    }

    /// Radial grid with r_max and spacing at most `hmax`.
    pub fn with_spacing(dim: usize, r_max: f64, hmax: f64) -> Result<Self> {
        Ok(Self::new(RadialGrid::with_max_spacing(dim, r_max, hmax)?))
    }

    pub fn laplacian_matrix(&self) -> &Banded {
        &self.lap
    }

    pub fn radii(&self) -> Vec<f64> {
        (0..self.grid.n).map(|i| self.grid.r(i)).collect()
    }

    fn l_matrix(&self, eps: f64, phi: &[f64]) -> Banded {
        let n = self.grid.n;
        let mut l = Banded::zeros(n, 3, 3);
        for i in 0..n {
            for j in i.saturating_sub(3)..=(i + 3).min(n - 1) {
                l.set(i, j, -eps * eps * self.lap.get(i, j));
            }
            l.add(i, i, fpp(phi[i]));
        }
        l
    }
}

impl Space for RadialSpace {
    fn len(&self) -> usize {
        self.grid.n
    }
    fn weights(&self) -> &[f64] {
        &self.weights
    }
    fn spacing(&self) -> f64 {
        self.grid.h()
    }
    fn point(&self, i: usize) -> [f64; 3] {
        [self.grid.r(i), 0.0, 0.0]
    }
    fn laplacian(&self, u: &[f64]) -> Vec<f64> {
        self.lap.matvec(u)
    }
    fn solve_imex(&self, dt: f64, s: f64, rhs: &[f64]) -> Result<Vec<f64>> {
        let mut cache = self.imex_cache.lock().expect("imex cache poisoned");
        let fresh = !matches!(&*cache, Some((a, b, _)) if *a == dt && *b == s);
        if fresh {
            let mut m = self.lap.mul(&self.lap);
            for i in 0..self.grid.n {
                for j in i.saturating_sub(6)..=(i + 6).min(self.grid.n - 1) {
                    let v = dt * m.get(i, j) - dt * s * self.lap.get(i, j);
                    m.set(i, j, v);
                }
                m.add(i, i, 1.0);
            }
            m.factor()?;
            *cache = Some((dt, s, m));
        }
        Ok(cache.as_ref().unwrap().2.solve(rhs))
    }
    fn solve_jacobian(&self, dt: f64, eps: f64, phi: &[f64], mu: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
        Ok(self.jacobian_lu(dt, eps, phi, mu)?.solve(rhs))
    }
    fn jacobian_definite(&self, dt: f64, eps: f64, phi: &[f64], mu: &[f64]) -> Option<bool> {
        Some(self.jacobian_lu(dt, eps, phi, mu).map_or(false, |m| m.min_pivot() > 0.0))
    }
    fn interface_radius(&self, phi: &[f64]) -> Option<f64> {
        radial_root(&self.radii(), phi)
    }
    /// Near equilibrium μ is a cancelling difference of O(1) terms and per-step energy
    /// changes sit below double rounding, so μ and its square are formed in double-double.
    fn energy(&self, phi: &[f64], eps: f64) -> f64 {
        let n = self.grid.n;
        let e2 = eps * eps;
        let mut acc = Dd::default();
        for i in 0..n {
            let mut lap = Dd::default();
            for j in i.saturating_sub(3)..=(i + 3).min(n - 1) {
                lap = lap.add(Dd::prod(self.lap.get(i, j), phi[j]));
            }
            let u = phi[i];
            let fprime = Dd::prod(u, u).add_f(-1.0).mul_f(u);
            let eps_mu = fprime.add(lap.mul_f(e2).neg());
            acc = acc.add(eps_mu.mul(eps_mu).mul_f(self.weights[i]));
        }
        acc.value() / (2.0 * eps * e2)
    }
}

impl RadialSpace {
    /// Factored I + dt A at (φ, μ).
    fn jacobian_lu(&self, dt: f64, eps: f64, phi: &[f64], mu: &[f64]) -> Result<Banded> {
        let l = self.l_matrix(eps, phi);
        let mut m = l.mul(&l);
        let n = self.grid.n;
        let e4 = eps.powi(4);
        let e3 = eps.powi(3);
        for i in 0..n {
            for j in i.saturating_sub(6)..=(i + 6).min(n - 1) {
                let v = dt * m.get(i, j) / e4;
                m.set(i, j, v);
            }
            m.add(i, i, 1.0 + dt * fppp(phi[i]) * mu[i] / e3);
        }
        m.factor()?;
        Ok(m)
    }
}

/// Outermost sign change of a radial profile, located on the local cubic interpolant.
pub fn radial_root(r: &[f64], phi: &[f64]) -> Option<f64> {
    let n = r.len();
    let i = (0..n - 1).rev().find(|&i| (phi[i] > 0.0) != (phi[i + 1] > 0.0))?;
    let lo = i.saturating_sub(1).min(n.saturating_sub(4));
    let xs = &r[lo..lo + 4];
    let ys = &phi[lo..lo + 4];
    let p = |x: f64| -> f64 {
        let mut s = 0.0;
        for a in 0..4 {
            let mut l = 1.0;
            for b in 0..4 {
                if a != b {
                    l *= (x - xs[b]) / (xs[a] - xs[b]);
                }
            }
            s += ys[a] * l;
        }
        s
    };
    let (mut a, mut b) = (r[i], r[i + 1]);
    let fa = p(a);
    for _ in 0..100 {
        let m = 0.5 * (a + b);
        if (p(m) > 0.0) == (fa > 0.0) {
            a = m;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}

/// L² norm Σ wᵢ uᵢ² under the space's quadrature.
pub fn l2_norm(space: &dyn Space, u: &[f64]) -> f64 {
    ksum(u.iter().zip(space.weights()).map(|(v, w)| w * v * v)).sqrt()
}

const HEADER_LEN: usize = 64;

/// Snapshot header fields.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SnapshotHeader {
    /// `b"WPF1"` for n × n periodic fields, `b"WPR1"` for radial profiles.
    pub magic: [u8; 4],
    pub n: usize,
    pub extent: f64,
    pub epsilon: f64,
    pub time: f64,
}

/// Flat binary snapshot: 64-byte ASCII header then little-endian f64 values.
pub fn write_snapshot(path: &Path, header: &SnapshotHeader, data: &[f64]) -> Result<()> {
    let mut h = format!(
        "{} {} {:.9e} {:.9e} {:.9e}",
        std::str::from_utf8(&header.magic).map_err(|e| Error::InvalidArgument(e.to_string()))?,
        header.n,
        header.extent,
        header.epsilon,
        header.time
    );
    if h.len() > HEADER_LEN - 1 {
        return invalid("snapshot header too long");
    }
    while h.len() < HEADER_LEN - 1 {
        h.push(' ');
    }
    h.push('\n');
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(h.as_bytes())?;
    for v in data {
        f.write_all(&v.to_le_bytes())?;
    }
    f.flush()?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<(SnapshotHeader, Vec<f64>)> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < HEADER_LEN {
        return invalid("snapshot shorter than its header");
    }
    let head = std::str::from_utf8(&bytes[..HEADER_LEN]).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let parts: Vec<&str> = head.split_whitespace().collect();
    if parts.len() != 5 || !(parts[0] == "WPF1" || parts[0] == "WPR1") {
        return invalid("bad snapshot header");
    }
    let num = |s: &str| s.parse::<f64>().map_err(|e| Error::InvalidArgument(e.to_string()));
    let mut magic = [0u8; 4];
    magic.copy_from_slice(parts[0].as_bytes());
    let header = SnapshotHeader {
        magic,
        n: parts[1].parse().map_err(|_| Error::InvalidArgument("bad n".into()))?,
        extent: num(parts[2])?,
        epsilon: num(parts[3])?,
        time: num(parts[4])?,
    };
    let body = &bytes[HEADER_LEN..];
    if body.len() % 8 != 0 {
        return invalid("snapshot body is not a whole number of f64");
    }
    let data: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let expected = if &header.magic == b"WPF1" { header.n * header.n } else { header.n };
    if data.len() != expected {
        return invalid(format!("snapshot has {} values, header implies {expected}", data.len()));
    }
    Ok((header, data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::theta_all;

    #[test]
    fn radial_laplacian_is_fourth_order() {
        let mut errs = vec![];
        for n in [200, 400] {
            let sp = RadialSpace::new(RadialGrid::new(2, n, 4.0).unwrap());
            let u = sp.grid.sample(|r| (-(r - 2.0).powi(2) * 4.0).exp());
            let lap = sp.laplacian(&u);
            let mut e: f64 = 0.0;
            for i in 0..n {
                let r = sp.grid.r(i);
                if (r - 2.0).abs() < 1.0 {
                    let x = r - 2.0;
                    let g = (-4.0 * x * x).exp();
                    let exact = g * (64.0 * x * x - 8.0) + g * (-8.0 * x) / r;
                    e = e.max((lap[i] - exact).abs());
                }
            }
            errs.push(e);
        }
        assert!(errs[0] / errs[1] > 12.0, "{errs:?}");
    }

    #[test]
    fn radial_laplacian_self_adjoint() {
        let sp = RadialSpace::new(RadialGrid::new(3, 64, 2.0).unwrap());
        let u = sp.grid.sample(|r| (3.0 * r).cos());
        let v = sp.grid.sample(|r| (-r * r).exp());
        let w = sp.weights();
        let a: f64 = sp.laplacian(&u).iter().zip(&v).zip(w).map(|((x, y), w)| x * y * w).sum();
        let b: f64 = sp.laplacian(&v).iter().zip(&u).zip(w).map(|((x, y), w)| x * y * w).sum();
        assert!((a - b).abs() < 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn constant_state_is_fixed() {
        let sp = PeriodicSpace::new(GridDomain::new(2.0, 32).unwrap());
        let eps = 0.25;
        let s0 = PhaseFieldState::new(&sp, vec![1.0; 32 * 32], eps, 0.0);
        for scheme in [Scheme::Explicit, Scheme::Imex, Scheme::Linearized] {
            let cfg = SolverConfig::new(eps, 1e-4, 1e-4, scheme);
            let s1 = step(&sp, &s0, &cfg).unwrap();
            assert!(s1.phi.iter().all(|v| (v - 1.0).abs() < 1e-15));
        }
        assert_eq!(willmore_energy(&sp, &s0.phi, eps), 0.0);
    }

    #[test]
    fn stripe_is_stationary() {
        let eps = 0.05;
        let d = GridDomain::new(4.0, 512).unwrap();
        let sp = PeriodicSpace::new(d);
        // two stripes so the field is periodic
        let phi = d.sample(|p| {
            let x = p[0];
            -theta_all((x + 1.0) / eps)[0] * theta_all((x - 1.0) / eps)[0]
        });
        let s0 = PhaseFieldState::new(&sp, phi, eps, 0.0);
        assert!(s0.mu.iter().all(|m| m.abs() < 1e-8));
        let cfg = SolverConfig::new(eps, SolverConfig::default_dt(Scheme::Imex, eps, d.spacing()), 1.0, Scheme::Imex);
        let mut s = s0.clone();
        for _ in 0..100 {
            s = step(&sp, &s, &cfg).unwrap();
        }
        let drift = s.phi.iter().zip(&s0.phi).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(drift < 1e-6, "{drift}");
    }

    #[test]
    fn snapshot_round_trip() {
        let dir = std::env::temp_dir().join(format!("wpf-snap-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("s.bin");
        let h = SnapshotHeader {
            magic: *b"WPF1",
            n: 4,
            extent: 2.0,
            epsilon: 0.05,
            time: 0.125,
        };
        let data: Vec<f64> = (0..16).map(|k| k as f64 * 0.1).collect();
        write_snapshot(&p, &h, &data).unwrap();
        let (h2, d2) = read_snapshot(&p).unwrap();
        assert_eq!(h2, h);
        assert_eq!(d2, data);
        std::fs::remove_dir_all(&dir).ok();
    }
}
