//! One-dimensional profiles in the stretched variable `z`: the optimal profile θ,
//! the double well, the η bump, the solvability-respecting ODE solver for
//! `L U = A` with `L = -∂z² + f''(θ)`, the α/γ profiles, the Neumann eigenpair of
//! `L`, and the scalar constants and identities built from them.

use crate::error::{invalid, Error, Result};
use crate::linalg::{dot_w, interval_integrals, ksum, simpson_weights, Banded};

pub const SQRT2: f64 = std::f64::consts::SQRT_2;
/// Default half-width of the z-window.
pub const DEFAULT_HALF_WINDOW: f64 = 20.0;
/// Default node count on the z-window (odd, for Simpson).
pub const DEFAULT_NODES: usize = 4001;
/// Leading decay rate of products such as θ'·A in the tails.
const TAIL_RATE: f64 = 2.0 * SQRT2;
/// Below this θ' the quotient G/θ'² is extrapolated instead of divided.
const THETA_P_FLOOR: f64 = 1e-13;

/// θ and its first four derivatives, with relatively accurate tails.
pub fn theta_all(z: f64) -> [f64; 5] {
    let x = z / SQRT2;
    let e = (-2.0 * x.abs()).exp();
    let t = x.signum() * (1.0 - e) / (1.0 + e);
    let s2 = 4.0 * e / ((1.0 + e) * (1.0 + e));
    [
        t,
        s2 / SQRT2,
        -t * s2,
        (3.0 * t * t - 1.0) * s2 / SQRT2,
        2.0 * t * (2.0 - 3.0 * t * t) * s2,
    ]
}

/// θ(z) = tanh(z/√2) and its derivatives up to order 4.
pub fn theta_profile(z: f64, deriv_order: usize) -> Result<f64> {
    if deriv_order > 4 {
        return invalid(format!("theta derivative order {deriv_order} not in 0..=4"));
    }
    Ok(theta_all(z)[deriv_order])
}

#[inline]
pub(crate) fn theta(z: f64) -> f64 {
    theta_all(z)[0]
}

#[inline]
pub(crate) fn theta_p(z: f64) -> f64 {
    theta_all(z)[1]
}

/// f(u) = ¼(u²-1)² and derivatives up to order 3.
pub fn double_well(u: f64, deriv_order: usize) -> Result<f64> {
    match deriv_order {
        0 => Ok(0.25 * (u * u - 1.0).powi(2)),
        1 => Ok(u * u * u - u),
        2 => Ok(3.0 * u * u - 1.0),
        3 => Ok(6.0 * u),
        k => invalid(format!("double-well derivative order {k} not in 0..=3")),
    }
}

#[inline]
pub(crate) fn fp(u: f64) -> f64 {
    u * u * u - u
}

#[inline]
pub(crate) fn fpp(u: f64) -> f64 {
    3.0 * u * u - 1.0
}

/// Quintic smoothstep η with η'(z) = (15/16)(1-z²)² on [-1,1].
pub fn eta_bump(z: f64, deriv_order: usize) -> Result<f64> {
    let inside = z.abs() < 1.0;
    match deriv_order {
        0 => Ok(if z <= -1.0 {
            0.0
        } else if z >= 1.0 {
            1.0
        } else {
            0.5 + 15.0 / 16.0 * (z - 2.0 * z.powi(3) / 3.0 + z.powi(5) / 5.0)
        }),
        1 => Ok(if inside { 15.0 / 16.0 * (1.0 - z * z).powi(2) } else { 0.0 }),
        k => invalid(format!("eta derivative order {k} not in 0..=1")),
    }
}

/// A tabulated function of z on a uniform symmetric grid.
#[derive(Clone, Debug)]
pub struct Profile1D {
    pub z_nodes: Vec<f64>,
    pub values: Vec<f64>,
    /// Optional tabulated derivatives, `deriv_values[k]` holds order k+1.
    pub deriv_values: Vec<Vec<f64>>,
    pub quad_weights: Vec<f64>,
}

impl Profile1D {
    /// Uniform symmetric grid on [-half, half] with `n` nodes and Simpson weights (n odd)
    /// or trapezoid weights (n even).
    pub fn grid(n: usize, half: f64) -> Result<Self> {
        if n < 5 || half <= 0.0 {
            return invalid("profile grid needs n >= 5 and a positive window");
        }
        let h = 2.0 * half / (n - 1) as f64;
        let mid = (n - 1) as f64 / 2.0;
        let z: Vec<f64> = (0..n).map(|i| (i as f64 - mid) * h).collect();
        let w = if n % 2 == 1 {
            simpson_weights(n, h)
        } else {
            trapezoid_weights(n, h)
        };
        Ok(Profile1D {
            values: vec![0.0; n],
            z_nodes: z,
            deriv_values: Vec::new(),
            quad_weights: w,
        })
    }

    pub fn default_grid() -> Self {
        Self::grid(DEFAULT_NODES, DEFAULT_HALF_WINDOW).expect("default grid")
    }

    pub fn from_fn(n: usize, half: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        let mut p = Self::grid(n, half)?;
        p.values = p.z_nodes.iter().map(|&z| f(z)).collect();
        Ok(p)
    }

    /// Same nodes and weights, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), self.z_nodes.len());
        Profile1D {
            z_nodes: self.z_nodes.clone(),
            values,
            deriv_values: Vec::new(),
            quad_weights: self.quad_weights.clone(),
        }
    }

    pub fn map(&self, f: impl Fn(f64, f64) -> f64) -> Self {
        let v = self.z_nodes.iter().zip(&self.values).map(|(&z, &u)| f(z, u)).collect();
        self.with_values(v)
    }

    pub fn len(&self) -> usize {
        self.z_nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z_nodes.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.z_nodes[1] - self.z_nodes[0]
    }

    pub fn half_window(&self) -> f64 {
        *self.z_nodes.last().unwrap()
    }

    pub fn integrate(&self) -> f64 {
        dot_w(&self.values, &vec![1.0; self.len()], &self.quad_weights)
    }

    /// ∫ self · other dz with this profile's weights.
    pub fn inner(&self, other: &Profile1D) -> f64 {
        dot_w(&self.values, &other.values, &self.quad_weights)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Maximal violation of a parity: `sign = -1` checks oddness, `+1` evenness.
    pub fn parity_defect(&self, sign: f64) -> f64 {
        let n = self.len();
        (0..n)
            .map(|i| (self.values[i] - sign * self.values[n - 1 - i]).abs())
            .fold(0.0, f64::max)
    }

    /// Nodes are strictly increasing and symmetric about zero.
    pub fn grid_is_symmetric(&self) -> bool {
        let n = self.len();
        let inc = self.z_nodes.windows(2).all(|w| w[1] > w[0]);
        let sym = (0..n).all(|i| (self.z_nodes[i] + self.z_nodes[n - 1 - i]).abs() < 1e-12);
        inc && sym
    }

    /// Four-point Lagrange interpolation; outside the window the edge value is
    /// continued with quadratic growth (the worst growth of the tabulated profiles).
    pub fn eval(&self, z: f64) -> f64 {
        let n = self.len();
        let half = self.half_window();
        if z.abs() > half {
            let edge = if z > 0.0 { self.values[n - 1] } else { self.values[0] };
            return edge * (z / half).powi(2);
        }
        let h = self.spacing();
        let u = (z - self.z_nodes[0]) / h;
        let i = (u.floor() as isize).clamp(1, n as isize - 3) as usize;
        let t = u - i as f64;
        let (f0, f1, f2, f3) = (
            self.values[i - 1],
            self.values[i],
            self.values[i + 1],
            self.values[i + 2],
        );
        // nodes at -1, 0, 1, 2 in local coordinate t
        let l0 = -t * (t - 1.0) * (t - 2.0) / 6.0;
        let l1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
        let l2 = -(t + 1.0) * t * (t - 2.0) / 2.0;
        let l3 = (t + 1.0) * t * (t - 1.0) / 6.0;
        f0 * l0 + f1 * l1 + f2 * l2 + f3 * l3
    }

    /// Fourth-order centered first derivative on the grid (one-sided at the ends).
    pub fn derivative(&self) -> Profile1D {
        let n = self.len();
        let h = self.spacing();
        let f = &self.values;
        let d = (0..n)
            .map(|i| {
                if i >= 2 && i + 2 < n {
                    (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / (12.0 * h)
                } else if i < 2 {
                    (-25.0 * f[i] + 48.0 * f[i + 1] - 36.0 * f[i + 2] + 16.0 * f[i + 3] - 3.0 * f[i + 4])
                        / (12.0 * h)
                } else {
                    (25.0 * f[i] - 48.0 * f[i - 1] + 36.0 * f[i - 2] - 16.0 * f[i - 3] + 3.0 * f[i - 4])
                        / (12.0 * h)
                }
            })
            .collect();
        self.with_values(d)
    }
}

pub(crate) fn trapezoid_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; n];
    w[0] = h / 2.0;
    w[n - 1] = h / 2.0;
    w
}

fn check_uniform_symmetric(z: &[f64]) -> Result<(f64, usize)> {
    let n = z.len();
    if n < 9 || n % 2 == 0 {
        return invalid("z grid must have an odd node count >= 9");
    }
    let h = z[1] - z[0];
    if h <= 0.0 {
        return invalid("z grid must be strictly increasing");
    }
    for i in 0..n {
        if (z[i] + z[n - 1 - i]).abs() > 1e-9 * h.max(1.0) {
            return invalid("z grid must be symmetric about 0");
        }
        if i > 0 && ((z[i] - z[i - 1]) - h).abs() > 1e-9 * h {
            return invalid("z grid must be uniform");
        }
    }
    Ok((h, (n - 1) / 2))
}

fn profile_on(z: &[f64], values: Vec<f64>) -> Profile1D {
    let (h, _) = check_uniform_symmetric(z).expect("validated grid");
    Profile1D {
        z_nodes: z.to_vec(),
        values,
        deriv_values: Vec::new(),
        quad_weights: simpson_weights(z.len(), h),
    }
}

/// Q(z) = ∫₀^z θ'(ζ)⁻² G(ζ) dζ with G(ζ) = ∫_ζ^∞ g for ζ ≥ 0 and
/// G(ζ) = -∫_{-∞}^ζ g for ζ < 0 (the two agree when ∫g = 0, and this split
/// keeps both tails relatively accurate).
fn nested_quotient(z: &[f64], g: &[f64]) -> Vec<f64> {
    let n = z.len();
    let h = z[1] - z[0];
    let m = (n - 1) / 2;
    let tp: Vec<f64> = z.iter().map(|&v| theta_p(v)).collect();

    let seg = interval_integrals(g, h);
    let mut g_right = vec![0.0; n];
    g_right[n - 1] = g[n - 1] / TAIL_RATE;
    for i in (m..n - 1).rev() {
        g_right[i] = g_right[i + 1] + seg[i];
    }
    let mut g_left = vec![0.0; n];
    g_left[0] = -g[0] / TAIL_RATE;
    for i in 1..=m {
        g_left[i] = g_left[i - 1] - seg[i - 1];
    }

    let quot = |gv: &[f64], idx: std::ops::RangeInclusive<usize>, rev: bool| -> Vec<f64> {
        let ids: Vec<usize> = if rev { idx.rev().collect() } else { idx.collect() };
        let mut q = Vec::with_capacity(ids.len());
        for (k, &i) in ids.iter().enumerate() {
            if tp[i] > THETA_P_FLOOR || k < 2 {
                q.push(gv[i] / (tp[i] * tp[i]));
            } else {
                let v = 2.0 * q[k - 1] - q[k - 2];
                q.push(v);
            }
        }
        q
    };
    // right half, ordered from the centre outward
    let q_r = quot(&g_right, m..=n - 1, false);
    // left half, ordered from the centre outward
    let q_l = quot(&g_left, 0..=m, true);

    let mut out = vec![0.0; n];
    let seg_r = interval_integrals(&q_r, h);
    for k in 0..seg_r.len() {
        out[m + k + 1] = out[m + k] + seg_r[k];
    }
    let seg_l = interval_integrals(&q_l, h);
    for k in 0..seg_l.len() {
        out[m - k - 1] = out[m - k] - seg_l[k];
    }
    out
}

/// σ = ∫ θ'² on the default window.
pub fn sigma_constant() -> f64 {
    sigma_on(DEFAULT_NODES, DEFAULT_HALF_WINDOW)
}

/// σ by Simpson quadrature with `n` nodes on [-half, half].
pub fn sigma_on(n: usize, half: f64) -> f64 {
    let p = Profile1D::from_fn(n, half, |z| theta_p(z).powi(2)).expect("grid");
    p.integrate()
}

/// σ̄ = ∫ η'θ' (η' is supported on [-1, 1]).
pub fn sigma_bar_constant() -> f64 {
    sigma_bar_on(2001)
}

pub fn sigma_bar_on(n: usize) -> f64 {
    let p = Profile1D::from_fn(n, 1.0, |z| {
        eta_bump(z, 1).unwrap() * theta_p(z)
    })
    .expect("grid");
    p.integrate()
}

/// Particular solution of `L U = rhs` with `U(0) = 0`.
pub fn solve_profile_ode(rhs: &Profile1D) -> Result<Profile1D> {
    let (_, _) = check_uniform_symmetric(&rhs.z_nodes)?;
    let z = &rhs.z_nodes;
    let n = z.len();
    let w = &rhs.quad_weights;
    let tp: Vec<f64> = z.iter().map(|&v| theta_p(v)).collect();

    let max_abs = rhs.sup_norm();
    if max_abs > 0.0 {
        let half = rhs.half_window();
        let tail = z
            .iter()
            .zip(&rhs.values)
            .filter(|(zz, _)| zz.abs() > half / 2.0)
            .fold(0.0f64, |m, (_, v)| m.max(v.abs()));
        if tail > 1e-3 * max_abs {
            return Err(Error::Decay { tail });
        }
    }

    let norm = dot_w(&rhs.values, &rhs.values, w).sqrt();
    let defect = dot_w(&rhs.values, &tp, w);
    let tol = 1e-8 * norm;
    if defect.abs() > tol {
        return Err(Error::Compatibility { defect, tol });
    }
    let sig_h = dot_w(&tp, &tp, w);
    if defect.abs() > 1e-12 * norm {
        log::warn!("solve_profile_ode: projecting compatibility defect {defect:.3e}");
    }
    let g: Vec<f64> = (0..n)
        .map(|i| (rhs.values[i] - defect / sig_h * tp[i]) * tp[i])
        .collect();
    let q = nested_quotient(z, &g);
    let u = (0..n).map(|i| tp[i] * q[i]).collect();
    Ok(rhs.with_values(u))
}

/// α(z) = ∫₀^z θ'⁻² ∫_ζ^∞ τθ'² dτ dζ by nested quadrature.
pub fn alpha_profile(z_grid: &[f64]) -> Result<Profile1D> {
    check_uniform_symmetric(z_grid)?;
    let g: Vec<f64> = z_grid.iter().map(|&t| t * theta_p(t).powi(2)).collect();
    let a = nested_quotient(z_grid, &g);
    let mut p = profile_on(z_grid, a);
    p.deriv_values = vec![z_grid
        .iter()
        .map(|&t| inner_tau_theta2(t) / theta_p(t).powi(2))
        .collect()];
    Ok(p)
}

/// F(ζ) = ∫_ζ^∞ τθ'(τ)² dτ in closed form (even in ζ); accurate for |ζ| ≲ 12.
pub fn inner_tau_theta2(zeta: f64) -> f64 {
    let a = zeta.abs() / SQRT2;
    let t = a.tanh();
    let s = t - t.powi(3) / 3.0;
    let lncosh = a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2;
    -a * (s - 2.0 / 3.0) + 2.0 / 3.0 * std::f64::consts::LN_2 - 1.0 / 6.0 - 2.0 / 3.0 * (a - lncosh)
        + t * t / 6.0
}

/// (γ₁, γ₂, γ₃) on the given symmetric grid.
pub fn gamma_profiles(z_grid: &[f64]) -> Result<(Profile1D, Profile1D, Profile1D)> {
    let alpha = alpha_profile(z_grid)?;
    let sig = sigma_constant();
    let sbar = sigma_bar_constant();
    let g1: Vec<f64> = z_grid
        .iter()
        .zip(&alpha.values)
        .map(|(&t, &a)| {
            let th = theta_all(t);
            th[1] * (6.0 * th[0] * th[1] * th[1] * a + t * th[2])
        })
        .collect();
    let g3: Vec<f64> = z_grid
        .iter()
        .map(|&t| {
            let tp = theta_p(t);
            tp * (eta_bump(t, 1).unwrap() - sbar / sig * tp)
        })
        .collect();
    let gamma1 = profile_on(z_grid, nested_quotient(z_grid, &g1));
    let gamma2 = profile_on(z_grid, z_grid.iter().map(|t| -t * t / 2.0).collect());
    let gamma3 = profile_on(z_grid, nested_quotient(z_grid, &g3));
    Ok((gamma1, gamma2, gamma3))
}

/// The three forms of the cancellation integral: ∫(θ''² - 3zθθ'³),
/// ∫(θ''² + (3/√2)zθ''θ'²) and ∫(2(θθ')² - θ'³/√2).
pub fn cancellation_forms() -> [f64; 3] {
    let p = Profile1D::default_grid();
    let mut f = [vec![], vec![], vec![]];
    for &z in &p.z_nodes {
        let th = theta_all(z);
        f[0].push(th[2] * th[2] - 3.0 * z * th[0] * th[1].powi(3));
        f[1].push(th[2] * th[2] + 3.0 / SQRT2 * z * th[2] * th[1] * th[1]);
        f[2].push(2.0 * (th[0] * th[1]).powi(2) - th[1].powi(3) / SQRT2);
    }
    let q = |v: &Vec<f64>| ksum(v.iter().zip(&p.quad_weights).map(|(a, b)| a * b));
    [q(&f[0]), q(&f[1]), q(&f[2])]
}

/// ∫(θ''² - 3zθθ'³) dz over the default window.
pub fn cancellation_integral() -> f64 {
    cancellation_forms()[0]
}

/// Smallest Neumann eigenpair of `L` on (-δ/ε, δ/ε).
#[derive(Clone, Debug)]
pub struct Eigen1D {
    /// λ₁ from the Green identity λ₁∫θ'φ = [θ''φ]_{-ℓ}^{ℓ}; relatively accurate even
    /// when λ₁ is far below the discrete operator's rounding floor.
    pub lambda1: f64,
    /// Discrete Rayleigh quotient (absolute accuracy ~ rounding · ‖L_h‖).
    pub lambda1_rayleigh: f64,
    pub lambda2: f64,
    /// Eigenfunction normalised to ‖φ‖ = ‖θ'‖ on the window, φ(0) > 0.
    pub phi: Profile1D,
    pub iterations: usize,
    pub residual: f64,
    op: Banded,
}

/// Eighth-order centred second-difference weights, offsets 0..=4.
const D2_8: [f64; 5] = [-205.0 / 72.0, 8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0, -1.0 / 560.0];

fn neumann_operator(z: &[f64]) -> Banded {
    let n = z.len();
    let h = z[1] - z[0];
    let last = (n - 1) as isize;
    let mut m = Banded::zeros(n, 4, 4);
    for i in 0..n {
        let ii = i as isize;
        for k in -4isize..=4 {
            let mut j = ii + k;
            if j < 0 {
                j = -j;
            }
            if j > last {
                j = 2 * last - j;
            }
            m.add(i, j as usize, -D2_8[k.unsigned_abs()] / (h * h));
        }
        m.add(i, i, fpp(theta(z[i])));
    }
    m
}

fn inverse_iteration(
    op: &Banded,
    shift: f64,
    start: Vec<f64>,
    w: &[f64],
    deflate: Option<&[f64]>,
) -> Result<(Vec<f64>, f64, usize, f64)> {
    let n = op.n;
    let mut m = op.clone();
    for i in 0..n {
        m.add(i, i, -shift);
    }
    m.factor()?;
    let normalize = |v: &mut Vec<f64>| {
        if let Some(d) = deflate {
            let c = dot_w(v, d, w) / dot_w(d, d, w);
            for (a, b) in v.iter_mut().zip(d) {
                *a -= c * b;
            }
        }
        let nn = dot_w(v, v, w).sqrt();
        for a in v.iter_mut() {
            *a /= nn;
        }
    };
    let mut x = start;
    normalize(&mut x);
    let mut lam = f64::NAN;
    for it in 1..=500 {
        let mut y = m.solve(&x);
        normalize(&mut y);
        if dot_w(&y, &x, w) < 0.0 {
            for a in y.iter_mut() {
                *a = -*a;
            }
        }
        let diff = y.iter().zip(&x).fold(0.0f64, |s, (a, b)| s.max((a - b).abs()));
        x = y;
        let lx = op.matvec(&x);
        lam = dot_w(&x, &lx, w);
        // past 50 iterations the update stagnates at rounding level
        if (diff < 1e-14 && it > 3) || (diff < 1e-11 && it >= 50) {
            let res = lx
                .iter()
                .zip(&x)
                .fold(0.0f64, |s, (a, b)| s.max((a - lam * b).abs()));
            return Ok((x, lam, it, res));
        }
    }
    Err(Error::Numerical {
        msg: "inverse iteration did not converge".into(),
        iterations: 500,
        residual: lam,
    })
}

/// Smallest Neumann eigenpair of `-∂z² + f''(θ)` on the stretched window (-δ/ε, δ/ε).
pub fn eigen_1d(epsilon: f64, delta: f64, n_nodes: usize) -> Result<Eigen1D> {
    if !(epsilon > 0.0 && delta > 0.0) {
        return invalid("epsilon and delta must be positive");
    }
    let ell = delta / epsilon;
    if ell < 8.0 {
        return invalid(format!("window delta/epsilon = {ell} < 8"));
    }
    if n_nodes < 200 {
        return invalid(format!("n_nodes = {n_nodes} < 200"));
    }
    let h = 2.0 * ell / (n_nodes - 1) as f64;
    let z: Vec<f64> = (0..n_nodes).map(|i| -ell + i as f64 * h).collect();
    let w = trapezoid_weights(n_nodes, h);
    let op = neumann_operator(&z);
    let tp: Vec<f64> = z.iter().map(|&v| theta_p(v)).collect();

    let (mut phi, lam_r, iters, res) = inverse_iteration(&op, -0.25, tp.clone(), &w, None)?;
    if res > 1e-6 {
        return Err(Error::Numerical {
            msg: "eigen residual too large".into(),
            iterations: iters,
            residual: res,
        });
    }
    let scale = (dot_w(&tp, &tp, &w) / dot_w(&phi, &phi, &w)).sqrt();
    let mid = n_nodes / 2;
    let sgn = if phi[mid] < 0.0 { -1.0 } else { 1.0 };
    for v in phi.iter_mut() {
        *v *= scale * sgn;
    }
    let th_r = theta_all(ell)[2];
    let th_l = theta_all(-ell)[2];
    let lambda1 = (th_r * phi[n_nodes - 1] - th_l * phi[0]) / dot_w(&tp, &phi, &w);

    let start: Vec<f64> = z.iter().map(|&v| theta_all(v)[2]).collect();
    let (_, lambda2, _, _) = inverse_iteration(&op, 1.3, start, &w, Some(&phi))?;

    let profile = Profile1D {
        z_nodes: z,
        values: phi,
        deriv_values: Vec::new(),
        quad_weights: w,
    };
    Ok(Eigen1D {
        lambda1,
        lambda1_rayleigh: lam_r,
        lambda2,
        phi: profile,
        iterations: iters,
        residual: res,
        op,
    })
}

impl Eigen1D {
    /// Discrete Rayleigh quotient (q, L_h q)/(q, q).
    pub fn rayleigh_quotient(&self, q: &[f64]) -> f64 {
        let lq = self.op.matvec(q);
        dot_w(q, &lq, &self.phi.quad_weights) / dot_w(q, q, &self.phi.quad_weights)
    }

    pub fn spacing(&self) -> f64 {
        self.phi.spacing()
    }

    /// Eigenfunction evaluated at arbitrary z (zero outside the window).
    pub fn eval(&self, z: f64) -> f64 {
        if z.abs() > self.phi.half_window() {
            0.0
        } else {
            self.phi.eval(z)
        }
    }

    /// max |φ - θ'| over the window.
    pub fn kernel_defect(&self) -> f64 {
        self.phi
            .z_nodes
            .iter()
            .zip(&self.phi.values)
            .fold(0.0f64, |m, (&z, &p)| m.max((p - theta_p(z)).abs()))
    }
}

/// Tabulated profiles and integrals used by the inner expansion.
#[derive(Clone, Debug)]
pub struct ProfileTables {
    pub alpha: Profile1D,
    pub gamma1: Profile1D,
    pub gamma2: Profile1D,
    pub gamma3: Profile1D,
    pub sigma: f64,
    pub sigma_bar: f64,
    /// ∫_ℝ ∫_z^∞ τθ'² dτ dz
    pub i_tau: f64,
    /// ∫θ'²γᵢ, i = 1, 2, 3
    pub g_int: [f64; 3],
    /// Pieces of φ̃⁽³⁾: L⁻¹ of the projected profiles (θ'α)', θ'γ₁, θ'γ₂, θ'γ₃.
    pub phi3_pieces: [Profile1D; 4],
}

impl ProfileTables {
    pub fn new(n: usize, half: f64) -> Result<Self> {
        let grid = Profile1D::grid(n, half)?;
        let z = grid.z_nodes.clone();
        let alpha = alpha_profile(&z)?;
        let (gamma1, gamma2, gamma3) = gamma_profiles(&z)?;
        let tp2 = grid.with_values(z.iter().map(|&t| theta_p(t).powi(2)).collect());
        let sigma = tp2.integrate();
        let sigma_bar = sigma_bar_constant();
        let fz = alpha.with_values(
            z.iter()
                .zip(&alpha.deriv_values[0])
                .map(|(&t, &ap)| ap * theta_p(t).powi(2))
                .collect(),
        );
        let i_tau = fz.integrate();
        let g_int = [tp2.inner(&gamma1), tp2.inner(&gamma2), tp2.inner(&gamma3)];

        let tpa = grid.with_values(z.iter().zip(&alpha.values).map(|(&t, &a)| theta_p(t) * a).collect());
        let raw = [
            tpa.derivative(),
            grid.with_values(z.iter().zip(&gamma1.values).map(|(&t, &g)| theta_p(t) * g).collect()),
            grid.with_values(z.iter().zip(&gamma2.values).map(|(&t, &g)| theta_p(t) * g).collect()),
            grid.with_values(z.iter().zip(&gamma3.values).map(|(&t, &g)| theta_p(t) * g).collect()),
        ];
        let tp = grid.with_values(z.iter().map(|&t| theta_p(t)).collect());
        let mut pieces = Vec::with_capacity(4);
        for r in raw.iter() {
            let c = r.inner(&tp) / sigma;
            let proj = r.with_values(r.values.iter().zip(&tp.values).map(|(a, b)| a - c * b).collect());
            pieces.push(solve_profile_ode(&proj)?);
        }
        let phi3_pieces: [Profile1D; 4] = pieces.try_into().expect("four pieces");
        Ok(ProfileTables {
            alpha,
            gamma1,
            gamma2,
            gamma3,
            sigma,
            sigma_bar,
            i_tau,
            g_int,
            phi3_pieces,
        })
    }

    pub fn default_tables() -> Result<Self> {
        Self::new(DEFAULT_NODES, DEFAULT_HALF_WINDOW)
    }

    /// ∫θ'·(profile) projections of the φ̃⁽³⁾ source pieces, i.e. the compatibility
    /// coefficients c_i = ∫ p_i θ'.
    pub fn phi3_compat(&self) -> [f64; 4] {
        let z = &self.alpha.z_nodes;
        let grid = self.alpha.with_values(z.iter().map(|&t| theta_p(t)).collect());
        let tpa = grid.with_values(z.iter().zip(&self.alpha.values).map(|(&t, &a)| theta_p(t) * a).collect());
        let d = tpa.derivative();
        let mk = |g: &Profile1D| grid.with_values(z.iter().zip(&g.values).map(|(&t, &v)| theta_p(t) * v).collect());
        [
            d.inner(&grid),
            mk(&self.gamma1).inner(&grid),
            mk(&self.gamma2).inner(&grid),
            mk(&self.gamma3).inner(&grid),
        ]
    }
}
