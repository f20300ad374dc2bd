use std::fmt::Write as _;
use std::path::Path;

use crate::diffusion::CdfProfile;
use crate::error::{Error, Result};

/// A probability measure on the line stored as a piecewise-linear CDF.
///
/// `f[i]` is the CDF at `knots[i]`, linear in between. A repeated knot is a
/// jump, i.e. an atom; the CDF is `0` left of the first knot, so `f[0] > 0`
/// is an atom there.
#[derive(Clone, Debug, PartialEq)]
pub struct Measure1D {
    knots: Vec<f64>,
    f: Vec<f64>,
}

const MASS_TOL: f64 = 1e-9;

impl Measure1D {
    pub fn new(knots: Vec<f64>, mut f: Vec<f64>) -> Result<Self> {
        if knots.is_empty() || knots.len() != f.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} knots but {} CDF values",
                knots.len(),
                f.len()
            )));
        }
        if knots.iter().chain(&f).any(|v| !v.is_finite()) {
            return Err(Error::InvalidMeasure("non-finite knot or CDF value".into()));
        }
        if let Some(i) = (1..knots.len()).find(|&i| knots[i] < knots[i - 1]) {
            return Err(Error::InvalidMeasure(format!("knots decrease at index {i}")));
        }
        if f[0] < 0.0 {
            return Err(Error::InvalidMeasure("negative CDF value".into()));
        }
        if let Some(i) = (1..f.len()).find(|&i| f[i] < f[i - 1]) {
            return Err(Error::InvalidMeasure(format!("CDF decreases at index {i}")));
        }
        let last = f.len() - 1;
        if (f[last] - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidMeasure(format!("total mass {} is not 1", f[last])));
        }
        f.iter_mut().for_each(|v| *v = v.min(1.0));
        f[last] = 1.0;
        Ok(Self { knots, f })
    }

    pub fn dirac(a: f64) -> Self {
        Self { knots: vec![a], f: vec![1.0] }
    }

    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        if !(b > a) {
            return Err(Error::InvalidMeasure(format!("empty interval [{a}, {b}]")));
        }
        Self::new(vec![a, b], vec![0.0, 1.0])
    }

    /// Weighted atoms in any order; weights are normalized.
    pub fn atoms(points: &[(f64, f64)]) -> Result<Self> {
        let total: f64 = points.iter().map(|p| p.1).sum();
        if points.is_empty() || !(total > 0.0) || points.iter().any(|p| p.1 < 0.0) {
            return Err(Error::InvalidMeasure("atoms need non-negative weights with positive sum".into()));
        }
        let mut pts = points.to_vec();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut knots = Vec::with_capacity(2 * pts.len());
        let mut f = Vec::with_capacity(2 * pts.len());
        let mut acc = 0.0;
        for (x, w) in pts {
            if !knots.is_empty() {
                knots.push(x);
                f.push(acc);
            }
            acc += w / total;
            knots.push(x);
            f.push(acc);
        }
        Self::new(knots, f)
    }

    /// Equal-weight atoms.
    pub fn empirical(points: &[f64]) -> Result<Self> {
        Self::atoms(&points.iter().map(|&x| (x, 1.0)).collect::<Vec<_>>())
    }

    /// Radial marginal of a diffusion: its CDF in arclength.
    pub fn from_cdf_profile(c: &CdfProfile) -> Result<Self> {
        Self::new(c.r.clone(), c.f.clone())
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn cdf_values(&self) -> &[f64] {
        &self.f
    }

    pub fn support(&self) -> (f64, f64) {
        (self.knots[0], self.knots[self.knots.len() - 1])
    }

    /// Right-continuous CDF.
    pub fn cdf(&self, x: f64) -> f64 {
        let k = self.knots.partition_point(|&v| v <= x);
        if k == 0 {
            return 0.0;
        }
        let k = k - 1;
        if k + 1 == self.knots.len() {
            return self.f[k];
        }
        let (x0, x1) = (self.knots[k], self.knots[k + 1]);
        self.f[k] + (x - x0) / (x1 - x0) * (self.f[k + 1] - self.f[k])
    }

    /// Generalized inverse `inf { x : F(x) > t }` for `t` in `[0, 1)`.
    pub fn quantile(&self, t: f64) -> f64 {
        let j = self.f.partition_point(|&v| v <= t);
        if j == 0 {
            return self.knots[0];
        }
        if j == self.f.len() {
            return self.knots[j - 1];
        }
        let (x0, x1) = (self.knots[j - 1], self.knots[j]);
        let (f0, f1) = (self.f[j - 1], self.f[j]);
        if x1 == x0 {
            return x1;
        }
        x0 + (t - f0) / (f1 - f0) * (x1 - x0)
    }

    /// CDF levels at which the quantile function may kink or jump.
    pub fn levels(&self) -> impl Iterator<Item = f64> + '_ {
        self.f.iter().copied()
    }

    pub fn mean(&self) -> f64 {
        let mut s = self.knots[0] * self.f[0];
        for i in 1..self.knots.len() {
            s += 0.5 * (self.knots[i] + self.knots[i - 1]) * (self.f[i] - self.f[i - 1]);
        }
        s
    }

    pub fn shifted(&self, s: f64) -> Self {
        Self {
            knots: self.knots.iter().map(|x| x + s).collect(),
            f: self.f.clone(),
        }
    }

    /// Two columns `knot F`, one row per knot.
    pub fn to_text(&self) -> String {
        let mut s = String::from("# knot[length]\tF[1]\n");
        for (x, f) in self.knots.iter().zip(&self.f) {
            let _ = writeln!(s, "{x:.17e}\t{f:.17e}");
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut knots = Vec::new();
        let mut f = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != 2 {
                return Err(Error::Parse(format!("line {}: expected `knot F`", lineno + 1)));
            }
            let parse = |v: &str| {
                v.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {v:?}: {e}", lineno + 1)))
            };
            knots.push(parse(cols[0])?);
            f.push(parse(cols[1])?);
        }
        Self::new(knots, f)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}
