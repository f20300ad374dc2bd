//! SO(n+1)-invariant metrics `g = phi(x)^2 dx^2 + psi(x)^2 g_can` on `S^{n+1}`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::fd::{self, Parity};

/// Tolerance on `|psi_r(±1)| = 1` for a smooth pole.
pub const TOL_POLE: f64 = 0.05;
/// Pinch threshold relative to the initial maximal fiber radius.
pub const EPS_SING_REL: f64 = 1e-4;

/// Volume of the unit round `S^n`.
pub fn sphere_volume(n: usize) -> f64 {
    match n {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (n as f64 - 1.0) * sphere_volume(n - 2),
    }
}

/// A warped-product metric sampled on a fixed grid over `x in [-1, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialProfile {
    n: usize,
    x: Vec<f64>,
    phi: Vec<f64>,
    psi: Vec<f64>,
}

impl RadialProfile {
    pub fn new(n: usize, x: Vec<f64>, phi: Vec<f64>, psi: Vec<f64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidProfile(format!("fiber dimension n = {n} < 2")));
        }
        if x.len() < 17 {
            return Err(Error::InvalidProfile(format!(
                "grid has m = {} < 16 intervals",
                x.len().saturating_sub(1)
            )));
        }
        if phi.len() != x.len() || psi.len() != x.len() {
            return Err(Error::InvalidProfile("x, phi, psi lengths differ".into()));
        }
        if (x[0] + 1.0).abs() > 1e-12 || (x[x.len() - 1] - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidProfile("grid must span [-1, 1]".into()));
        }
        if let Some(i) = x.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidProfile(format!(
                "grid not strictly increasing at node {}",
                i + 1
            )));
        }
        if let Some(i) = phi.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidProfile(format!("phi[{i}] = {} is not positive", phi[i])));
        }
        if let Some(i) = psi.iter().position(|&v| !(v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidProfile(format!("psi[{i}] = {} is negative", psi[i])));
        }
        Ok(Self { n, x, phi, psi })
    }

    /// Uniform grid with `m` intervals, sampling `phi` and `psi` as functions of `x`.
    pub fn from_fns(
        n: usize,
        m: usize,
        phi: impl Fn(f64) -> f64,
        psi: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let x = uniform_grid(m);
        let phi_v = x.iter().map(|&v| phi(v)).collect();
        let mut psi_v: Vec<f64> = x.iter().map(|&v| psi(v)).collect();
        psi_v[0] = 0.0;
        psi_v[m] = 0.0;
        Self::new(n, x, phi_v, psi_v)
    }

    /// Round sphere of radius `radius`: `phi = radius*pi/2`, `psi = radius*sin(pi(x+1)/2)`.
    pub fn round_sphere(n: usize, m: usize, radius: f64) -> Result<Self> {
        Self::from_fns(
            n,
            m,
            |_| radius * PI / 2.0,
            |x| radius * (PI / 2.0 * (x + 1.0)).sin(),
        )
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of grid intervals.
    pub fn m(&self) -> usize {
        self.x.len() - 1
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn psi(&self) -> &[f64] {
        &self.psi
    }

    pub fn max_psi(&self) -> f64 {
        self.psi.iter().cloned().fold(0.0, f64::max)
    }

    pub fn diameter(&self) -> f64 {
        fd::trapz(&self.x, &self.phi)
    }

    pub fn is_uniform(&self) -> bool {
        fd::is_uniform(&self.x)
    }

    pub(crate) fn with_fields(&self, phi: Vec<f64>, psi: Vec<f64>) -> Self {
        Self {
            n: self.n,
            x: self.x.clone(),
            phi,
            psi,
        }
    }

    /// `psi_r` at the two poles, oriented as `(at x=-1, at x=+1)`.
    pub fn pole_slopes(&self) -> (f64, f64) {
        let d = psi_derivatives(self);
        let m = self.m();
        (d.psi_r[0], d.psi_r[m])
    }

    /// Checks the smooth-sphere invariants: `psi` vanishes exactly at the
    /// poles, is positive in the interior, and `|psi_r| = 1` at the poles.
    pub fn check_smooth_sphere(&self, tol_pole: f64) -> Result<()> {
        let m = self.m();
        if self.psi[0] != 0.0 || self.psi[m] != 0.0 {
            return Err(Error::InvalidProfile("psi must vanish at both poles".into()));
        }
        if let Some(i) = (1..m).find(|&i| self.psi[i] <= 0.0) {
            return Err(Error::InvalidProfile(format!("psi[{i}] is not positive")));
        }
        let (s0, s1) = self.pole_slopes();
        if (s0.abs() - 1.0).abs() > tol_pole || (s1.abs() - 1.0).abs() > tol_pole {
            return Err(Error::InvalidProfile(format!(
                "pole slopes |psi_r| = ({:.4}, {:.4}) differ from 1 by more than {tol_pole}",
                s0.abs(),
                s1.abs()
            )));
        }
        Ok(())
    }

    /// Columnar text: a `# radial-profile n=<n> m=<m>` header, a column line,
    /// then one `x phi psi` row per node at 17 significant digits.
    pub fn to_tsv(&self) -> String {
        let mut s = format!("# radial-profile n={} m={}\n", self.n, self.m());
        s.push_str("# x[coord]\tphi[length/coord]\tpsi[length]\n");
        for i in 0..self.x.len() {
            let _ = writeln!(s, "{:.16e}\t{:.16e}\t{:.16e}", self.x[i], self.phi[i], self.psi[i]);
        }
        s
    }

    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty profile file".into()))?;
        let rest = header
            .strip_prefix("# radial-profile")
            .ok_or_else(|| Error::Parse(format!("bad header line: {header:?}")))?;
        let mut n = None;
        let mut m = None;
        for tok in rest.split_whitespace() {
            match tok.split_once('=') {
                Some(("n", v)) => n = v.parse::<usize>().ok(),
                Some(("m", v)) => m = v.parse::<usize>().ok(),
                _ => return Err(Error::Parse(format!("bad header token {tok:?}"))),
            }
        }
        let (n, m) = match (n, m) {
            (Some(n), Some(m)) => (n, m),
            _ => return Err(Error::Parse("header needs n=<n> m=<m>".into())),
        };
        let (mut x, mut phi, mut psi) = (vec![], vec![], vec![]);
        for (lineno, line) in lines.enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<f64> = line
                .split_whitespace()
                .map(|c| c.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 2)))?;
            if cols.len() != 3 {
                return Err(Error::Parse(format!("line {}: expected 3 columns", lineno + 2)));
            }
            x.push(cols[0]);
            phi.push(cols[1]);
            psi.push(cols[2]);
        }
        if x.len() != m + 1 {
            return Err(Error::Parse(format!("header says m={m} but found {} rows", x.len())));
        }
        Self::new(n, x, phi, psi)
    }
}

impl RadialProfile {
    /// Resamples onto the grid `x`: cubic Hermite for `psi` (slopes from the
    /// pole-aware derivative), linear for `phi`. Within three cells of a pole
    /// `psi` is the odd series `a1 s + a3 s^3 + a5 s^5` and `phi` the even
    /// series `b0 + b2 s^2 + b4 s^4` in the distance `s` to the pole, fitted
    /// through the nearest nodes, so that `psi_rr/psi` stays bounded.
    pub fn resample(&self, x: &[f64]) -> Result<RadialProfile> {
        let slopes = if self.is_uniform() {
            fd::d1_d2_symmetric(self.x[1] - self.x[0], &self.psi, Parity::Odd).0
        } else {
            fd::d1(&self.x, &self.psi)
        };
        let m = self.m();
        let near = |k: usize| PoleSeries::fit(
            [self.x[k] + 1.0, self.x[k + 1] + 1.0, self.x[k + 2] + 1.0],
            [self.psi[k], self.psi[k + 1], self.psi[k + 2]],
            [self.phi[k - 1], self.phi[k], self.phi[k + 1]],
            &[0.0, self.x[k] + 1.0, self.x[k + 1] + 1.0],
        );
        let left = near(1);
        let far = |k: usize| PoleSeries::fit(
            [1.0 - self.x[k], 1.0 - self.x[k - 1], 1.0 - self.x[k - 2]],
            [self.psi[k], self.psi[k - 1], self.psi[k - 2]],
            [self.phi[k + 1], self.phi[k], self.phi[k - 1]],
            &[0.0, 1.0 - self.x[k], 1.0 - self.x[k - 1]],
        );
        let right = far(m - 1);
        let last = x.len() - 1;
        let mut psi = Vec::with_capacity(x.len());
        let mut phi = Vec::with_capacity(x.len());
        for (j, &v) in x.iter().enumerate() {
            let (ps, ph) = if v + 1.0 < self.x[3] + 1.0 {
                left.eval(v + 1.0)
            } else if 1.0 - v < 1.0 - self.x[m - 3] {
                right.eval(1.0 - v)
            } else {
                (
                    fd::hermite(&self.x, &self.psi, &slopes, v),
                    fd::interp_linear(&self.x, &self.phi, v),
                )
            };
            phi.push(ph);
            psi.push(if j == 0 || j == last { 0.0 } else { ps.max(0.0) });
        }
        RadialProfile::new(self.n, x.to_vec(), phi, psi)
    }
}

/// Odd `psi` and even `phi` polynomials in the distance to a pole.
struct PoleSeries {
    psi: [f64; 3],
    phi: [f64; 3],
}

impl PoleSeries {
    /// `s` are three positive distances with `psi` values; `phi` is fitted at
    /// the three distances `s_phi` (the first one is the pole itself).
    fn fit(s: [f64; 3], psi: [f64; 3], phi: [f64; 3], s_phi: &[f64; 3]) -> Self {
        let odd = solve3(
            [
                [s[0], s[0].powi(3), s[0].powi(5)],
                [s[1], s[1].powi(3), s[1].powi(5)],
                [s[2], s[2].powi(3), s[2].powi(5)],
            ],
            psi,
        );
        let even = solve3(
            [
                [1.0, s_phi[0].powi(2), s_phi[0].powi(4)],
                [1.0, s_phi[1].powi(2), s_phi[1].powi(4)],
                [1.0, s_phi[2].powi(2), s_phi[2].powi(4)],
            ],
            phi,
        );
        Self { psi: odd, phi: even }
    }

    fn eval(&self, s: f64) -> (f64, f64) {
        let s2 = s * s;
        let psi = s * (self.psi[0] + s2 * (self.psi[1] + s2 * self.psi[2]));
        let phi = self.phi[0] + s2 * (self.phi[1] + s2 * self.phi[2]);
        (psi, phi)
    }
}

/// Cramer's rule for a 3x3 system.
fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> [f64; 3] {
    let det = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(a);
    let mut out = [0.0; 3];
    for (k, o) in out.iter_mut().enumerate() {
        let mut c = a;
        for row in 0..3 {
            c[row][k] = b[row];
        }
        *o = det(c) / d;
    }
    out
}

/// Uniform `x` grid with constant `phi`, i.e. `x` proportional to arclength.
pub fn in_arclength_gauge(p: &RadialProfile) -> bool {
    let phi0 = p.phi[0];
    p.is_uniform() && p.phi.iter().all(|v| (v - phi0).abs() <= 1e-12 * phi0)
}

/// The same metric on a uniform grid of `m` intervals with constant `phi`:
/// `psi` is cubic Hermite in arclength between the old nodes.
pub fn arclength_gauge(p: &RadialProfile) -> Result<RadialProfile> {
    let m = p.m();
    let r = arclength(p);
    let diam = r[m];
    let slope = radial_derivative(p, &p.psi);
    let x = uniform_grid(m);
    let psi: Vec<f64> = x
        .iter()
        .enumerate()
        .map(|(j, xj)| {
            if j == 0 || j == m {
                0.0
            } else {
                fd::hermite(&r, &p.psi, &slope, diam * (xj + 1.0) / 2.0).max(0.0)
            }
        })
        .collect();
    RadialProfile::new(p.n, x, vec![diam / 2.0; m + 1], psi)
}

/// Grid on `[-1, 1]` that keeps the nodes of `x` away from `x = 1` and
/// approaches `x = 1` with spacing `h_min` growing geometrically by `growth`
/// until it reaches the local spacing of `x`.
pub fn graded_toward_end(x: &[f64], h_min: f64, growth: f64) -> Vec<f64> {
    let m = x.len() - 1;
    let h_coarse = x[m] - x[m - 1];
    let mut fine = vec![1.0];
    let mut h = h_min;
    let mut at = 1.0;
    while h < h_coarse {
        at -= h;
        fine.push(at);
        h *= growth;
    }
    let cut = at - 0.5 * h_coarse;
    let mut out: Vec<f64> = x.iter().copied().filter(|&v| v < cut).collect();
    out.extend(fine.into_iter().rev());
    out[0] = -1.0;
    out
}

pub fn uniform_grid(m: usize) -> Vec<f64> {
    let mut x: Vec<f64> = (0..=m).map(|i| -1.0 + 2.0 * i as f64 / m as f64).collect();
    x[m] = 1.0;
    x
}

/// Radii measured from the pole `x = -1` by trapezoidal quadrature of `phi`.
pub fn arclength(p: &RadialProfile) -> Vec<f64> {
    fd::cumtrapz(&p.x, &p.phi)
}

/// `(1/phi) df/dx` with three-point central differences in the interior and
/// second-order one-sided stencils at the poles.
pub fn radial_derivative(p: &RadialProfile, f: &[f64]) -> Vec<f64> {
    assert_eq!(f.len(), p.x.len(), "field must have m+1 nodes");
    fd::d1(&p.x, f)
        .into_iter()
        .zip(&p.phi)
        .map(|(d, phi)| d / phi)
        .collect()
}

/// Radial derivatives of the fiber radius.
#[derive(Clone, Debug)]
pub(crate) struct PsiDerivatives {
    pub psi_r: Vec<f64>,
    pub psi_rr: Vec<f64>,
}

/// `psi_r` and `psi_rr` by the chain rule `d/dr = (1/phi) d/dx`. Uniform grids
/// use fourth-order stencils with odd/even pole reflection so that ratios like
/// `(1 - psi_r^2)/psi^2` stay accurate next to the poles.
pub(crate) fn psi_derivatives(p: &RadialProfile) -> PsiDerivatives {
    let (psi_x, psi_xx, phi_x) = if p.is_uniform() {
        let h = p.x[1] - p.x[0];
        let (psi_x, psi_xx) = fd::d1_d2_symmetric(h, &p.psi, Parity::Odd);
        let (phi_x, _) = fd::d1_d2_symmetric(h, &p.phi, Parity::Even);
        (psi_x, psi_xx, phi_x)
    } else {
        (fd::d1(&p.x, &p.psi), fd::d2(&p.x, &p.psi), fd::d1(&p.x, &p.phi))
    };
    let mut psi_r = Vec::with_capacity(p.x.len());
    let mut psi_rr = Vec::with_capacity(p.x.len());
    for i in 0..p.x.len() {
        let phi = p.phi[i];
        psi_r.push(psi_x[i] / phi);
        psi_rr.push((psi_xx[i] - psi_x[i] * phi_x[i] / phi) / (phi * phi));
    }
    PsiDerivatives { psi_r, psi_rr }
}

/// Fills pole entries of an interior-only ratio with the adjacent interior value.
pub(crate) fn fill_poles(v: &mut [f64]) {
    let m = v.len() - 1;
    v[0] = v[1];
    v[m] = v[m - 1];
}

/// `psi_rr/psi` with pole values taken from the first interior node.
pub(crate) fn psi_rr_over_psi(p: &RadialProfile, d: &PsiDerivatives, floor: f64) -> Vec<f64> {
    let mut out: Vec<f64> = d
        .psi_rr
        .iter()
        .zip(&p.psi)
        .map(|(rr, psi)| rr / psi.max(floor))
        .collect();
    fill_poles(&mut out);
    out
}

/// Ricci curvature of a rotationally symmetric metric.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureSample {
    /// `Ric(dr, dr) = -n psi_rr / psi`.
    pub ric_radial: Vec<f64>,
    /// Ricci eigenvalue on unit fiber directions,
    /// `-psi_rr/psi + (n-1)(1 - psi_r^2)/psi^2`.
    pub ric_spherical: Vec<f64>,
    /// `R = -2n psi_rr/psi + n(n-1)(1 - psi_r^2)/psi^2`.
    pub scalar: Vec<f64>,
}

impl CurvatureSample {
    /// Largest absolute Ricci eigenvalue at node `i`.
    pub fn max_abs_ricci(&self, i: usize) -> f64 {
        self.ric_radial[i].abs().max(self.ric_spherical[i].abs())
    }
}

/// Curvature with the default pinch threshold `1e-4 * max psi`.
pub fn curvature(p: &RadialProfile) -> Result<CurvatureSample> {
    curvature_with_floor(p, EPS_SING_REL * p.max_psi())
}

/// Curvature; an interior node with `psi < eps_sing` that is also much closer
/// to the axis than to either pole is reported as `SingularCurvature`.
pub fn curvature_with_floor(p: &RadialProfile, eps_sing: f64) -> Result<CurvatureSample> {
    let m = p.m();
    let r = arclength(p);
    let diam = r[m];
    for i in 1..m {
        let pole_dist = r[i].min(diam - r[i]);
        if p.psi[i] < eps_sing && p.psi[i] < 0.5 * pole_dist {
            return Err(Error::SingularCurvature { node: i, psi: p.psi[i] });
        }
    }
    let d = psi_derivatives(p);
    let nf = p.n as f64;
    let ratio = psi_rr_over_psi(p, &d, 0.0);
    let mut tangential: Vec<f64> = (0..=m)
        .map(|i| (1.0 - d.psi_r[i] * d.psi_r[i]) / (p.psi[i] * p.psi[i]))
        .collect();
    fill_poles(&mut tangential);
    let ric_radial: Vec<f64> = ratio.iter().map(|q| -nf * q).collect();
    let ric_spherical: Vec<f64> = (0..=m)
        .map(|i| -ratio[i] + (nf - 1.0) * tangential[i])
        .collect();
    let scalar = (0..=m)
        .map(|i| ric_radial[i] + nf * ric_spherical[i])
        .collect();
    Ok(CurvatureSample {
        ric_radial,
        ric_spherical,
        scalar,
    })
}

/// Nodal weights `w_i` with `sum w_i f_i ≈ ∫ f dvol` for rotationally
/// symmetric `f`: trapezoid weights of `omega_n phi psi^n` in `x`.
pub fn volume_element(p: &RadialProfile) -> Vec<f64> {
    let omega = sphere_volume(p.n);
    fd::trapz_weights(&p.x)
        .into_iter()
        .enumerate()
        .map(|(i, t)| omega * p.phi[i] * p.psi[i].powi(p.n as i32) * t)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn sphere_volumes() {
        assert_abs_diff_eq!(sphere_volume(1), 2.0 * PI, epsilon = 1e-14);
        assert_abs_diff_eq!(sphere_volume(2), 4.0 * PI, epsilon = 1e-14);
        assert_abs_diff_eq!(sphere_volume(3), 2.0 * PI * PI, epsilon = 1e-13);
    }

    #[test]
    fn constant_phi_arclength() {
        let p = RadialProfile::round_sphere(2, 64, 1.0).unwrap();
        let r = arclength(&p);
        assert_abs_diff_eq!(r[64], PI, epsilon = 1e-12);
        let c = 0.7;
        let q = RadialProfile::from_fns(2, 40, |_| c, |x| 1.0 - x * x).unwrap();
        for (ri, xi) in arclength(&q).iter().zip(q.x()) {
            assert_abs_diff_eq!(*ri, c * (xi + 1.0), epsilon = 1e-12);
        }
    }

    #[test]
    fn random_phi_arclength_matches_refined_quadrature() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let m = 64;
        let phi: Vec<f64> = (0..=m).map(|_| rng.gen_range(0.2..3.0)).collect();
        let p = RadialProfile::new(2, uniform_grid(m), phi.clone(), vec![0.5; m + 1]).unwrap();
        // Oracle: composite midpoint rule on the piecewise-linear phi at two
        // resolutions, Richardson-combined.
        let x = uniform_grid(m);
        let midpoint = |k: usize| -> f64 {
            let mut acc = 0.0;
            for i in 0..m {
                let h = (x[i + 1] - x[i]) / k as f64;
                for j in 0..k {
                    let s = (j as f64 + 0.5) / k as f64;
                    acc += h * (phi[i] + s * (phi[i + 1] - phi[i]));
                }
            }
            acc
        };
        let oracle = (4.0 * midpoint(64) - midpoint(32)) / 3.0;
        assert!((arclength(&p)[m] - oracle).abs() < 1e-8);
    }

    #[test]
    fn radial_derivative_of_arclength_is_one() {
        let p = RadialProfile::from_fns(2, 200, |x| 1.2 + 0.4 * x * x, |x| 1.0 - x * x).unwrap();
        let r = arclength(&p);
        let d = radial_derivative(&p, &r);
        let err = d[1..200].iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
        assert!(err < 1e-4, "err {err}");
        let zero = radial_derivative(&p, &vec![3.5; 201]);
        assert!(zero.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn radial_derivative_of_sine_on_round_sphere() {
        let err = |m: usize| {
            let p = RadialProfile::round_sphere(2, m, 1.0).unwrap();
            let r = arclength(&p);
            let f: Vec<f64> = r.iter().map(|v| v.sin()).collect();
            radial_derivative(&p, &f)
                .iter()
                .zip(&r)
                .map(|(d, v)| (d - v.cos()).abs())
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(100), err(200));
        assert!(e1 < 1e-3);
        assert!(e1 / e2 > 3.5, "order ratio {}", e1 / e2);
    }

    #[test]
    fn round_sphere_scalar_curvature_converges() {
        let err = |m: usize| {
            let p = RadialProfile::round_sphere(2, m, 1.0).unwrap();
            let c = curvature(&p).unwrap();
            c.scalar.iter().map(|s| (s - 6.0).abs()).fold(0.0, f64::max)
        };
        let (e1, e2) = (err(100), err(200));
        assert!(e1 < 1e-3, "e1 {e1}");
        assert!(e1 / e2 > 3.5, "ratio {}", e1 / e2);
    }

    #[test]
    fn cylinder_segment_curvature() {
        let c = 0.4;
        let p = RadialProfile::from_fns(3, 64, |_| 2.0, |x| {
            // flat in the middle, closes smoothly at the poles
            let s = (PI / 2.0 * (x + 1.0)).sin();
            if x.abs() < 0.5 { c } else { c.min(2.0 * s) }
        })
        .unwrap();
        let k = curvature(&p).unwrap();
        for i in 24..=40 {
            assert_abs_diff_eq!(k.ric_radial[i], 0.0, epsilon = 1e-10);
            assert_abs_diff_eq!(k.scalar[i], 3.0 * 2.0 / (c * c), epsilon = 1e-9);
        }
    }

    #[test]
    fn pinched_profile_is_singular() {
        let p = RadialProfile::from_fns(2, 64, |_| PI / 2.0, |x| {
            (PI / 2.0 * (x + 1.0)).sin() * (x * x + 1e-9).sqrt()
        })
        .unwrap();
        match curvature(&p) {
            Err(Error::SingularCurvature { node, .. }) => assert_eq!(node, 32),
            other => panic!("expected SingularCurvature, got {other:?}"),
        }
    }

    #[test]
    fn volume_of_round_three_sphere() {
        let p = RadialProfile::round_sphere(2, 400, 1.0).unwrap();
        let total: f64 = volume_element(&p).iter().sum();
        assert!((total / (2.0 * PI * PI) - 1.0).abs() < 5e-3);
        let flat = RadialProfile::new(2, uniform_grid(20), vec![1.0; 21], vec![0.0; 21]).unwrap();
        assert_eq!(volume_element(&flat).iter().sum::<f64>(), 0.0);
    }

    #[test]
    fn invariant_violations_are_reported() {
        let x = uniform_grid(20);
        let mut psi = vec![0.5; 21];
        psi[7] = -0.1;
        let err = RadialProfile::new(2, x.clone(), vec![1.0; 21], psi).unwrap_err();
        assert!(err.to_string().contains("psi[7]"));
        assert!(RadialProfile::new(2, uniform_grid(8), vec![1.0; 9], vec![0.0; 9]).is_err());
        let mut bad_x = x;
        bad_x.swap(3, 4);
        assert!(RadialProfile::new(2, bad_x, vec![1.0; 21], vec![0.1; 21]).is_err());
    }

    #[test]
    fn smooth_sphere_check() {
        let p = RadialProfile::round_sphere(2, 100, 1.0).unwrap();
        p.check_smooth_sphere(TOL_POLE).unwrap();
        let cone = RadialProfile::from_fns(2, 100, |_| 1.0, |x| 1.0 - x.abs()).unwrap();
        assert!(cone.check_smooth_sphere(TOL_POLE).is_ok());
        let steep = RadialProfile::from_fns(2, 100, |_| 1.0, |x| 2.0 * (1.0 - x.abs())).unwrap();
        assert!(steep.check_smooth_sphere(TOL_POLE).is_err());
    }

    #[test]
    fn resample_reproduces_smooth_profile() {
        let p = RadialProfile::round_sphere(2, 64, 1.0).unwrap();
        let x = graded_toward_end(p.x(), 1e-5, 1.2);
        assert!(x.windows(2).all(|w| w[1] > w[0]));
        assert!((x[x.len() - 1] - x[x.len() - 2] - 1e-5).abs() < 1e-12);
        let q = p.resample(&x).unwrap();
        for (xi, psi) in q.x().iter().zip(q.psi()) {
            assert!((psi - (PI / 2.0 * (xi + 1.0)).sin()).abs() < 1e-5);
        }
        let k = curvature(&q).unwrap();
        let err = (1..q.m()).map(|i| (k.ric_radial[i] - 2.0).abs()).fold(0.0, f64::max);
        assert!(err < 0.2, "err {err}");
    }

    #[test]
    fn tsv_header_and_errors() {
        let p = RadialProfile::round_sphere(2, 16, 1.0).unwrap();
        let text = p.to_tsv();
        assert!(text.starts_with("# radial-profile n=2 m=16\n"));
        assert_eq!(RadialProfile::from_tsv(&text).unwrap(), p);
        assert!(RadialProfile::from_tsv("# radial-profile n=2 m=17\n").is_err());
        assert!(RadialProfile::from_tsv("nonsense").is_err());
    }
}
