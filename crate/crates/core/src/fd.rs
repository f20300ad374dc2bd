//! Finite-difference and quadrature kernels shared by the solvers.

/// Reflection symmetry of a field about the poles `x = ±1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    /// `f(pole + s) = 2 f(pole) - f(pole - s)`, e.g. the fiber radius.
    Odd,
    /// `f(pole + s) = f(pole - s)`, e.g. the radial scale.
    Even,
}

pub fn is_uniform(x: &[f64]) -> bool {
    if x.len() < 3 {
        return true;
    }
    let h = (x[x.len() - 1] - x[0]) / (x.len() - 1) as f64;
    x.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h)
}

/// First derivative on an arbitrary grid: three-point central stencils in the
/// interior, second-order one-sided stencils at both ends.
pub fn d1(x: &[f64], f: &[f64]) -> Vec<f64> {
    let m = x.len() - 1;
    let mut out = vec![0.0; m + 1];
    if is_uniform(x) {
        let h = (x[m] - x[0]) / m as f64;
        for i in 1..m {
            out[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
        }
        out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
        out[m] = (3.0 * f[m] - 4.0 * f[m - 1] + f[m - 2]) / (2.0 * h);
        return out;
    }
    for i in 1..m {
        let h1 = x[i] - x[i - 1];
        let h2 = x[i + 1] - x[i];
        out[i] = -h2 / (h1 * (h1 + h2)) * f[i - 1]
            + (h2 - h1) / (h1 * h2) * f[i]
            + h1 / (h2 * (h1 + h2)) * f[i + 1];
    }
    let (h1, h2) = (x[1] - x[0], x[2] - x[1]);
    out[0] = -(2.0 * h1 + h2) / (h1 * (h1 + h2)) * f[0] + (h1 + h2) / (h1 * h2) * f[1]
        - h1 / (h2 * (h1 + h2)) * f[2];
    let (h1, h2) = (x[m - 1] - x[m - 2], x[m] - x[m - 1]);
    out[m] = (2.0 * h2 + h1) / (h2 * (h1 + h2)) * f[m] - (h1 + h2) / (h1 * h2) * f[m - 1]
        + h2 / (h1 * (h1 + h2)) * f[m - 2];
    out
}

/// Second derivative of the interpolating parabola through each node and its
/// neighbours; the end nodes reuse the parabola of the nearest interior triple.
pub fn d2(x: &[f64], f: &[f64]) -> Vec<f64> {
    let m = x.len() - 1;
    let parabola = |i: usize| {
        let h1 = x[i] - x[i - 1];
        let h2 = x[i + 1] - x[i];
        2.0 * (f[i - 1] / (h1 * (h1 + h2)) - f[i] / (h1 * h2) + f[i + 1] / (h2 * (h1 + h2)))
    };
    let mut out = vec![0.0; m + 1];
    for (i, o) in out.iter_mut().enumerate().take(m).skip(1) {
        *o = parabola(i);
    }
    out[0] = parabola(1);
    out[m] = parabola(m - 1);
    out
}

/// Fourth-order central first and second derivatives on a uniform grid, with
/// ghost values at both ends supplied by the pole reflection `parity`.
pub fn d1_d2_symmetric(h: f64, f: &[f64], parity: Parity) -> (Vec<f64>, Vec<f64>) {
    let m = f.len() - 1;
    let at = |j: isize| -> f64 {
        if j < 0 {
            let k = (-j) as usize;
            match parity {
                Parity::Odd => 2.0 * f[0] - f[k],
                Parity::Even => f[k],
            }
        } else if j as usize > m {
            let k = j as usize - m;
            match parity {
                Parity::Odd => 2.0 * f[m] - f[m - k],
                Parity::Even => f[m - k],
            }
        } else {
            f[j as usize]
        }
    };
    let mut fx = vec![0.0; m + 1];
    let mut fxx = vec![0.0; m + 1];
    for i in 0..=m {
        let j = i as isize;
        let (a, b, c, d, e) = (at(j - 2), at(j - 1), at(j), at(j + 1), at(j + 2));
        fx[i] = (a - 8.0 * b + 8.0 * d - e) / (12.0 * h);
        fxx[i] = (-a + 16.0 * b - 30.0 * c + 16.0 * d - e) / (12.0 * h * h);
    }
    (fx, fxx)
}

/// Cumulative trapezoid rule, starting from zero at the first node.
pub fn cumtrapz(x: &[f64], f: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..x.len() {
        acc += 0.5 * (x[i] - x[i - 1]) * (f[i] + f[i - 1]);
        out.push(acc);
    }
    out
}

pub fn trapz(x: &[f64], f: &[f64]) -> f64 {
    (1..x.len())
        .map(|i| 0.5 * (x[i] - x[i - 1]) * (f[i] + f[i - 1]))
        .sum()
}

/// Nodal trapezoid weights: `sum(w_i f_i)` is the trapezoid rule of `f`.
pub fn trapz_weights(x: &[f64]) -> Vec<f64> {
    let m = x.len() - 1;
    (0..=m)
        .map(|i| {
            let left = if i > 0 { x[i] - x[i - 1] } else { 0.0 };
            let right = if i < m { x[i + 1] - x[i] } else { 0.0 };
            0.5 * (left + right)
        })
        .collect()
}

/// Solves a tridiagonal system with sub-diagonal `a`, diagonal `b` and
/// super-diagonal `c` (`a[0]` and `c[n-1]` are ignored). Returns `None` on a
/// vanishing pivot.
pub fn solve_tridiagonal(a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut cp = vec![0.0; n];
    let mut dp = vec![0.0; n];
    if b[0] == 0.0 {
        return None;
    }
    cp[0] = c[0] / b[0];
    dp[0] = d[0] / b[0];
    for i in 1..n {
        let denom = b[i] - a[i] * cp[i - 1];
        if denom == 0.0 || !denom.is_finite() {
            return None;
        }
        cp[i] = if i + 1 < n { c[i] / denom } else { 0.0 };
        dp[i] = (d[i] - a[i] * dp[i - 1]) / denom;
    }
    let mut out = vec![0.0; n];
    out[n - 1] = dp[n - 1];
    for i in (0..n - 1).rev() {
        out[i] = dp[i] - cp[i] * out[i + 1];
    }
    Some(out)
}

/// Linear interpolation of tabulated `(xs, ys)` at `x`, clamped at the ends.
pub fn interp_linear(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return ys[0];
    }
    let last = xs.len() - 1;
    if x >= xs[last] {
        return ys[last];
    }
    let k = xs.partition_point(|&v| v <= x).max(1) - 1;
    let s = (x - xs[k]) / (xs[k + 1] - xs[k]);
    ys[k] + s * (ys[k + 1] - ys[k])
}

/// Cubic Hermite interpolation of `(xs, ys)` with nodal slopes `ds` at `x`.
pub fn hermite(xs: &[f64], ys: &[f64], ds: &[f64], x: f64) -> f64 {
    let k = xs.partition_point(|&u| u <= x).clamp(1, xs.len() - 1) - 1;
    let h = xs[k + 1] - xs[k];
    let s = (x - xs[k]) / h;
    let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    let h10 = s * (1.0 - s) * (1.0 - s);
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    h00 * ys[k] + h10 * h * ds[k] + h01 * ys[k + 1] + h11 * h * ds[k + 1]
}

/// Monotone piecewise-cubic (Fritsch-Carlson) interpolation of increasing
/// data `(xs, ys)` at `x`, clamped at the ends.
pub fn pchip(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let last = xs.len() - 1;
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[last] {
        return ys[last];
    }
    let k = xs.partition_point(|&v| v <= x).clamp(1, last) - 1;
    let secant = |j: usize| (ys[j + 1] - ys[j]) / (xs[j + 1] - xs[j]);
    let slope = |j: usize| -> f64 {
        if j == 0 || j == last {
            return secant(j.min(last - 1));
        }
        let (s0, s1) = (secant(j - 1), secant(j));
        if s0 * s1 <= 0.0 {
            return 0.0;
        }
        let (h0, h1) = (xs[j] - xs[j - 1], xs[j + 1] - xs[j]);
        let (w0, w1) = (2.0 * h1 + h0, h1 + 2.0 * h0);
        (w0 + w1) / (w0 / s0 + w1 / s1)
    };
    hermite(&xs[k..k + 2], &ys[k..k + 2], &[slope(k), slope(k + 1)], x)
}
