//! Small dense/banded numerical kernels shared by the modules.

use rustfft::num_complex::Complex64;
use crate::error::{Error, Result};

/// Composite Simpson weights on a uniform grid with an odd node count.
pub fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    assert!(n >= 3 && n % 2 == 1, "simpson needs an odd node count >= 3");
    let mut w = vec![0.0; n];
    for (i, wi) in w.iter_mut().enumerate() {
        *wi = if i == 0 || i == n - 1 {
            h / 3.0
        } else if i % 2 == 1 {
            4.0 * h / 3.0
        } else {
            2.0 * h / 3.0
        };
    }
    w
}

/// Neumaier-compensated sum.
/// Double-double accumulator (hi + lo), used where a sum cancels to far below its terms.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

impl Dd {
    pub fn new(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    /// Exact product of two doubles.
    pub fn prod(a: f64, b: f64) -> Self {
        let hi = a * b;
        Dd { hi, lo: a.mul_add(b, -hi) }
    }

    pub fn add(self, o: Dd) -> Dd {
        let s = self.hi + o.hi;
        let bb = s - self.hi;
        let e = (self.hi - (s - bb)) + (o.hi - bb) + self.lo + o.lo;
        let hi = s + e;
        Dd { hi, lo: e - (hi - s) }
    }

    pub fn add_f(self, x: f64) -> Dd {
        self.add(Dd::new(x))
    }

    pub fn mul_f(self, x: f64) -> Dd {
        let p = Dd::prod(self.hi, x);
        let lo = p.lo + self.lo * x;
        let hi = p.hi + lo;
        Dd { hi, lo: lo - (hi - p.hi) }
    }

    pub fn mul(self, o: Dd) -> Dd {
        let p = Dd::prod(self.hi, o.hi);
        let lo = p.lo + self.hi * o.lo + self.lo * o.hi;
        let hi = p.hi + lo;
        Dd { hi, lo: lo - (hi - p.hi) }
    }

    pub fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    pub fn value(self) -> f64 {
        self.hi + self.lo
    }
}

pub fn ksum<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let mut s = 0.0;
    let mut c = 0.0;
    for x in it {
        let t = s + x;
        if s.abs() >= x.abs() {
            c += (s - t) + x;
        } else {
            c += (x - t) + s;
        }
        s = t;
    }
    s + c
}

pub fn dot_w(a: &[f64], b: &[f64], w: &[f64]) -> f64 {
    ksum(a.iter().zip(b).zip(w).map(|((x, y), z)| x * y * z))
}

/// Per-interval integrals of a uniformly sampled function, fourth order.
pub fn interval_integrals(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    assert!(n >= 4);
    let mut out = vec![0.0; n - 1];
    for i in 0..n - 1 {
        out[i] = if i == 0 {
            h / 24.0 * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3])
        } else if i == n - 2 {
            h / 24.0 * (f[n - 4] - 5.0 * f[n - 3] + 19.0 * f[n - 2] + 9.0 * f[n - 1])
        } else {
            h / 24.0 * (-f[i - 1] + 13.0 * f[i] + 13.0 * f[i + 1] - f[i + 2])
        };
    }
    out
}

/// Banded matrix with `kl` sub- and `ku` super-diagonals, row-major band storage.
#[derive(Clone, Debug)]
pub struct Banded {
    pub n: usize,
    pub kl: usize,
    pub ku: usize,
    data: Vec<f64>,
    factored: bool,
}

impl Banded {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        Banded {
            n,
            kl,
            ku,
            data: vec![0.0; n * (kl + ku + 1)],
            factored: false,
        }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.kl + self.ku + 1) + (j + self.kl - i)
    }

    pub fn in_band(&self, i: usize, j: usize) -> bool {
        j + self.kl >= i && j <= i + self.ku && i < self.n && j < self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.data[self.idx(i, j)]
        } else {
            0.0
        }
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "entry ({i},{j}) outside band");
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "entry ({i},{j}) outside band");
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for (i, yi) in y.iter_mut().enumerate() {
            let j0 = i.saturating_sub(self.kl);
            let j1 = (i + self.ku).min(self.n - 1);
            let mut s = 0.0;
            for j in j0..=j1 {
                s += self.data[self.idx(i, j)] * x[j];
            }
            *yi = s;
        }
        y
    }

    /// Product of two banded matrices (bands add).
    pub fn mul(&self, other: &Banded) -> Banded {
        assert_eq!(self.n, other.n);
        let mut out = Banded::zeros(self.n, self.kl + other.kl, self.ku + other.ku);
        for i in 0..self.n {
            let j0 = i.saturating_sub(self.kl);
            let j1 = (i + self.ku).min(self.n - 1);
            for k in j0..=j1 {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let l0 = k.saturating_sub(other.kl);
                let l1 = (k + other.ku).min(self.n - 1);
                for l in l0..=l1 {
                    out.add(i, l, a * other.get(k, l));
                }
            }
        }
        out
    }

    /// In-place LU factorisation without pivoting.
    pub fn factor(&mut self) -> Result<()> {
        let n = self.n;
        for k in 0..n {
            let piv = self.data[self.idx(k, k)];
            if piv.abs() < 1e-300 || !piv.is_finite() {
                return Err(Error::Numerical {
                    msg: format!("zero pivot in banded LU at row {k}"),
                    iterations: k,
                    residual: piv.abs(),
                });
            }
            let imax = (k + self.kl).min(n - 1);
            let jmax = (k + self.ku).min(n - 1);
            for i in k + 1..=imax {
                let ik = self.idx(i, k);
                let l = self.data[ik] / piv;
                self.data[ik] = l;
                if l == 0.0 {
                    continue;
                }
                for j in k + 1..=jmax {
                    let kj = self.data[self.idx(k, j)];
                    let ij = self.idx(i, j);
                    self.data[ij] -= l * kj;
                }
            }
        }
        self.factored = true;
        Ok(())
    }

    /// Smallest LU pivot; for a matrix similar to a symmetric one through a positive
    /// diagonal (W-self-adjoint), all pivots are positive iff it is positive definite.
    pub fn min_pivot(&self) -> f64 {
        assert!(self.factored, "min_pivot needs a factored matrix");
        (0..self.n).map(|k| self.data[self.idx(k, k)]).fold(f64::INFINITY, f64::min)
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert!(self.factored, "solve called before factor");
        let n = self.n;
        let mut x = b.to_vec();
        for i in 0..n {
            let j0 = i.saturating_sub(self.kl);
            let mut s = x[i];
            for j in j0..i {
                s -= self.data[self.idx(i, j)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let j1 = (i + self.ku).min(n - 1);
            let mut s = x[i];
            for j in i + 1..=j1 {
                s -= self.data[self.idx(i, j)] * x[j];
            }
            x[i] = s / self.data[self.idx(i, i)];
        }
        x
    }
}

/// Solve a cyclic tridiagonal system (Sherman–Morrison).
/// `a` sub-diagonal (a[0] couples row 0 to n-1), `b` diagonal, `c` super (c[n-1] couples n-1 to 0).
pub fn solve_cyclic_tridiag(a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> Vec<f64> {
    let n = b.len();
    assert!(n >= 3);
    let gamma = -b[0];
    let mut bb = b.to_vec();
    bb[0] -= gamma;
    bb[n - 1] -= c[n - 1] * a[0] / gamma;
    let x = solve_tridiag(a, &bb, c, d);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = c[n - 1];
    let z = solve_tridiag(a, &bb, c, &u);
    let fact = (x[0] + a[0] * x[n - 1] / gamma) / (1.0 + z[0] + a[0] * z[n - 1] / gamma);
    x.iter().zip(&z).map(|(xi, zi)| xi - fact * zi).collect()
}

/// Thomas algorithm; a[0] and c[n-1] ignored.
pub fn solve_tridiag(a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut cp = vec![0.0; n];
    let mut dp = vec![0.0; n];
    cp[0] = c[0] / b[0];
    dp[0] = d[0] / b[0];
    for i in 1..n {
        let m = b[i] - a[i] * cp[i - 1];
        cp[i] = if i < n - 1 { c[i] / m } else { 0.0 };
        dp[i] = (d[i] - a[i] * dp[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = dp[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = dp[i] - cp[i] * x[i + 1];
    }
    x
}

/// Periodic cubic spline through (t_i, y_i) with period `period`.
#[derive(Clone, Debug)]
pub struct PeriodicSpline {
    t: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
    period: f64,
}

impl PeriodicSpline {
    pub fn new(t: &[f64], y: &[f64], period: f64) -> Self {
        let n = t.len();
        assert!(n >= 3 && y.len() == n);
        let h: Vec<f64> = (0..n)
            .map(|i| if i + 1 < n { t[i + 1] - t[i] } else { t[0] + period - t[n - 1] })
            .collect();
        let mut a = vec![0.0; n];
        let mut b = vec![0.0; n];
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        for i in 0..n {
            let hm = h[(i + n - 1) % n];
            let hp = h[i];
            a[i] = hm;
            b[i] = 2.0 * (hm + hp);
            c[i] = hp;
            d[i] = 6.0 * ((y[(i + 1) % n] - y[i]) / hp - (y[i] - y[(i + n - 1) % n]) / hm);
        }
        let m = solve_cyclic_tridiag(&a, &b, &c, &d);
        PeriodicSpline {
            t: t.to_vec(),
            y: y.to_vec(),
            m,
            period,
        }
    }

    /// Value and first two derivatives at parameter `s`.
    pub fn eval(&self, s: f64) -> (f64, f64, f64) {
        let n = self.t.len();
        let t0 = self.t[0];
        let mut u = (s - t0).rem_euclid(self.period) + t0;
        if u >= t0 + self.period {
            u -= self.period;
        }
        let i = match self.t.binary_search_by(|v| v.partial_cmp(&u).unwrap()) {
            Ok(k) => k,
            Err(k) => k - 1,
        }
        .min(n - 1);
        let ip = (i + 1) % n;
        let ti1 = if i + 1 < n { self.t[i + 1] } else { t0 + self.period };
        let h = ti1 - self.t[i];
        let a = (ti1 - u) / h;
        let b = (u - self.t[i]) / h;
        let (mi, mp) = (self.m[i], self.m[ip]);
        let (yi, yp) = (self.y[i], self.y[ip]);
        let v = a * yi + b * yp + ((a * a * a - a) * mi + (b * b * b - b) * mp) * h * h / 6.0;
        let d1 = (yp - yi) / h - (3.0 * a * a - 1.0) * h * mi / 6.0 + (3.0 * b * b - 1.0) * h * mp / 6.0;
        let d2 = a * mi + b * mp;
        (v, d1, d2)
    }
}

/// Least-squares line fit y = p x + c; returns (p, c, standard error of p).
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let p = sxy / sxx;
    let c = my - p * mx;
    let se = if x.len() > 2 {
        let ssr: f64 = x.iter().zip(y).map(|(a, b)| (b - c - p * a).powi(2)).sum();
        (ssr / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    (p, c, se)
}


/// Real-to-complex helper for square periodic grids (row-major, n × n).
pub struct Fft2 {
    n: usize,
    fwd: std::sync::Arc<dyn rustfft::Fft<f64>>,
    inv: std::sync::Arc<dyn rustfft::Fft<f64>>,
}

impl Fft2 {
    pub fn new(n: usize) -> Self {
        let mut p = rustfft::FftPlanner::new();
        Fft2 {
            n,
            fwd: p.plan_fft_forward(n),
            inv: p.plan_fft_inverse(n),
        }
    }

    fn transpose(&self, a: &mut [Complex64]) {
        let n = self.n;
        for i in 0..n {
            for j in i + 1..n {
                a.swap(i * n + j, j * n + i);
            }
        }
    }

    pub fn forward(&self, u: &[f64]) -> Vec<Complex64> {
        let mut a: Vec<Complex64> = u.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.fwd.process(&mut a);
        self.transpose(&mut a);
        self.fwd.process(&mut a);
        self.transpose(&mut a);
        a
    }

    /// Inverse transform, normalised, real part.
    pub fn inverse(&self, mut a: Vec<Complex64>) -> Vec<f64> {
        self.inv.process(&mut a);
        self.transpose(&mut a);
        self.inv.process(&mut a);
        self.transpose(&mut a);
        let s = 1.0 / (self.n * self.n) as f64;
        a.iter().map(|c| c.re * s).collect()
    }

    /// Apply a real Fourier multiplier `symbol` (indexed like the grid).
    pub fn multiply(&self, u: &[f64], symbol: &[f64]) -> Vec<f64> {
        let mut a = self.forward(u);
        for (c, s) in a.iter_mut().zip(symbol) {
            *c *= *s;
        }
        self.inverse(a)
    }
}

/// Angular wavenumbers 2πm/L in FFT order.
pub fn wavenumbers(n: usize, extent: f64) -> Vec<f64> {
    (0..n)
        .map(|m| {
            let m = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
            2.0 * std::f64::consts::PI * m / extent
        })
        .collect()
}
