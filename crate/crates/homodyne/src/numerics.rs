//! Numerical kernels: adaptive Gauss–Kronrod quadrature, monotone
//! piecewise-cubic interpolation, the modified Bessel function K0, and a
//! golden-section minimizer.

use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Gauss-Kronrod 7-15 adaptive quadrature
// ---------------------------------------------------------------------------

// Kronrod abscissae on [0,1] side (symmetric), Gauss-7 nodes interleaved.
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

/// One Gauss-Kronrod 7-15 panel. Returns (kronrod estimate, error estimate).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = fc * WGK[7];
    let mut res_g = fc * WG[3];
    for j in 0..7 {
        let x = half * XGK[j];
        let f1 = f(center - x);
        let f2 = f(center + x);
        res_k += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let integral = res_k * half;
    let err = ((res_k - res_g) * half).abs();
    (integral, err)
}

/// Adaptive quadrature on a finite interval to a relative tolerance
/// (with a small absolute floor). Fails if the panel budget is exhausted.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    integrate_with_budget(f, a, b, rel_tol, 2000)
}

pub fn integrate_with_budget<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    max_panels: usize,
) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    // worklist of (a, b, estimate, error)
    let (i0, e0) = gk15(&f, a, b);
    let mut panels = vec![(a, b, i0, e0)];
    let abs_floor = 1e-300;
    for _ in 0..max_panels {
        let total: f64 = panels.iter().map(|p| p.2).sum();
        let err: f64 = panels.iter().map(|p| p.3).sum();
        if err <= rel_tol * total.abs().max(abs_floor) || err < 1e-16 {
            return Ok(total);
        }
        // split the worst panel
        let (worst, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.partial_cmp(&y.1 .3).unwrap())
            .unwrap();
        let (pa, pb, _, _) = panels.swap_remove(worst);
        let mid = 0.5 * (pa + pb);
        if mid <= pa || mid >= pb {
            // interval no longer splittable; accept what we have
            let total: f64 = panels.iter().map(|p| p.2).sum();
            return Ok(total);
        }
        let (il, el) = gk15(&f, pa, mid);
        let (ir, er) = gk15(&f, mid, pb);
        panels.push((pa, mid, il, el));
        panels.push((mid, pb, ir, er));
    }
    let total: f64 = panels.iter().map(|p| p.2).sum();
    let err: f64 = panels.iter().map(|p| p.3).sum();
    if err <= 1e-3 * total.abs().max(abs_floor) {
        // good enough to be useful, but report convergence trouble upstream
        return Err(Error::QuadratureNonConvergence(format!(
            "residual error {err:.3e} on [{a}, {b}] after {max_panels} panels"
        )));
    }
    Err(Error::QuadratureNonConvergence(format!(
        "error {err:.3e} on [{a}, {b}] after {max_panels} panels"
    )))
}

// ---------------------------------------------------------------------------
// Monotone piecewise-cubic (Fritsch-Carlson) interpolation
// ---------------------------------------------------------------------------

/// Monotonicity-preserving cubic interpolant on a uniform grid of knots.
/// Evaluates to 0 outside the knot range.
#[derive(Debug, Clone)]
pub struct Pchip {
    x0: f64,
    dx: f64,
    y: Vec<f64>,
    d: Vec<f64>, // knot derivatives
}

impl Pchip {
    pub fn on_uniform(x0: f64, dx: f64, y: &[f64]) -> Result<Self> {
        let n = y.len();
        if n < 2 || dx <= 0.0 {
            return Err(Error::InvalidArgument("pchip needs >= 2 uniform knots".into()));
        }
        // secant slopes
        let s: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / dx).collect();
        let mut d = vec![0.0; n];
        d[0] = s[0];
        d[n - 1] = s[n - 2];
        for i in 1..n - 1 {
            if s[i - 1] * s[i] <= 0.0 {
                d[i] = 0.0;
            } else {
                // harmonic mean keeps the interpolant monotone on each interval
                d[i] = 2.0 * s[i - 1] * s[i] / (s[i - 1] + s[i]);
            }
        }
        // endpoint limiter (Fritsch-Carlson 3-point rule, clamped)
        if n > 2 {
            for (i, si) in [(0usize, 0usize), (n - 1, n - 2)] {
                if d[i] * s[si] <= 0.0 {
                    d[i] = 0.0;
                } else if d[i].abs() > 3.0 * s[si].abs() {
                    d[i] = 3.0 * s[si];
                }
            }
        }
        Ok(Pchip {
            x0,
            dx,
            y: y.to_vec(),
            d,
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.y.len();
        let t = (x - self.x0) / self.dx;
        if !(0.0..=(n - 1) as f64).contains(&t) {
            return 0.0;
        }
        let i = (t as usize).min(n - 2);
        let u = t - i as f64; // in [0,1]
        let h = self.dx;
        let (y0, y1) = (self.y[i], self.y[i + 1]);
        let (d0, d1) = (self.d[i], self.d[i + 1]);
        let u2 = u * u;
        let u3 = u2 * u;
        let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
        let h10 = u3 - 2.0 * u2 + u;
        let h01 = -2.0 * u3 + 3.0 * u2;
        let h11 = u3 - u2;
        h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
    }
}

// ---------------------------------------------------------------------------
// Modified Bessel functions I0 and K0
// ---------------------------------------------------------------------------

/// Modified Bessel function of the first kind, order zero.
/// Polynomial approximations from Abramowitz & Stegun 9.8.1-9.8.2.
pub fn bessel_i0(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 3.75 {
        let t = (x / 3.75) * (x / 3.75);
        1.0 + t
            * (3.5156229
                + t * (3.0899424
                    + t * (1.2067492 + t * (0.2659732 + t * (0.0360768 + t * 0.0045813)))))
    } else {
        let t = 3.75 / ax;
        (ax.exp() / ax.sqrt())
            * (0.39894228
                + t * (0.01328592
                    + t * (0.00225319
                        + t * (-0.00157565
                            + t * (0.00916281
                                + t * (-0.02057706
                                    + t * (0.02635537
                                        + t * (-0.01647633 + t * 0.00392377))))))))
    }
}

/// Modified Bessel function of the second kind, order zero.
/// Polynomial approximations from Abramowitz & Stegun 9.8.5-9.8.6.
pub fn bessel_k0(x: f64) -> f64 {
    assert!(x > 0.0, "K0 requires x > 0");
    if x <= 2.0 {
        let y = x * x / 4.0;
        (-(x / 2.0).ln()) * bessel_i0(x)
            + (-0.57721566
                + y * (0.42278420
                    + y * (0.23069756
                        + y * (0.03488590
                            + y * (0.00262698 + y * (0.00010750 + y * 0.00000740))))))
    } else {
        let y = 2.0 / x;
        ((-x).exp() / x.sqrt())
            * (1.25331414
                + y * (-0.07832358
                    + y * (0.02189568
                        + y * (-0.01062446
                            + y * (0.00587872 + y * (-0.00251540 + y * 0.00053208))))))
    }
}

// ---------------------------------------------------------------------------
// Golden-section minimization
// ---------------------------------------------------------------------------

/// Minimize a unimodal function on [a, b] to the given x-tolerance.
pub fn golden_section_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = 0.5 * (5.0f64.sqrt() - 1.0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a) > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}
