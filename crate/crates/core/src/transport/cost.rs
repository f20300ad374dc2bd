use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// A non-negative, non-decreasing, convex function `h` of distance with
/// `h(0) = 0`.
#[derive(Clone, Debug, PartialEq)]
pub enum ConvexCost {
    Linear,
    Power(f64),
    /// Piecewise-linear through `(d, h)` samples, extended linearly past the
    /// last sample.
    Tabulated { d: Vec<f64>, h: Vec<f64> },
}

impl ConvexCost {
    pub fn power(p: f64) -> Result<Self> {
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::InvalidCost(format!("power exponent {p} must be >= 1")));
        }
        Ok(if p == 1.0 { Self::Linear } else { Self::Power(p) })
    }

    pub fn tabulated(d: Vec<f64>, h: Vec<f64>) -> Result<Self> {
        if d.len() < 2 || d.len() != h.len() {
            return Err(Error::InvalidCost("table needs at least two (d, h) rows".into()));
        }
        if d[0] != 0.0 || h[0] != 0.0 {
            return Err(Error::InvalidCost("table must start at h(0) = 0".into()));
        }
        if d.iter().chain(&h).any(|v| !v.is_finite()) {
            return Err(Error::InvalidCost("non-finite table entry".into()));
        }
        if let Some(i) = (1..d.len()).find(|&i| d[i] <= d[i - 1]) {
            return Err(Error::InvalidCost(format!("distances not increasing at row {i}")));
        }
        let slopes: Vec<f64> = (1..d.len()).map(|i| (h[i] - h[i - 1]) / (d[i] - d[i - 1])).collect();
        if slopes[0] < 0.0 {
            return Err(Error::InvalidCost("cost decreases".into()));
        }
        let cost = Self::Tabulated { d, h };
        cost.check_midpoint_convexity()?;
        Ok(cost)
    }

    /// `h(d)` for `d >= 0`.
    pub fn eval(&self, d: f64) -> f64 {
        match self {
            Self::Linear => d,
            Self::Power(p) => d.powf(*p),
            Self::Tabulated { d: ds, h } => {
                let last = ds.len() - 1;
                let k = ds.partition_point(|&v| v <= d).clamp(1, last) - 1;
                let slope = (h[k + 1] - h[k]) / (ds[k + 1] - ds[k]);
                h[k] + slope * (d - ds[k])
            }
        }
    }

    /// Midpoint convexity on a lattice spanning the table.
    fn check_midpoint_convexity(&self) -> Result<()> {
        let Self::Tabulated { d, .. } = self else {
            return Ok(());
        };
        let top = d[d.len() - 1] * 1.25;
        let lattice: Vec<f64> = (0..=64).map(|i| top * i as f64 / 64.0).collect();
        for (i, &a) in lattice.iter().enumerate() {
            for &b in &lattice[i + 1..] {
                let mid = self.eval(0.5 * (a + b));
                let chord = 0.5 * (self.eval(a) + self.eval(b));
                if mid > chord + 1e-12 * chord.abs().max(1.0) {
                    return Err(Error::InvalidCost(format!("not convex between {a} and {b}")));
                }
            }
        }
        Ok(())
    }

    /// `∫_0^len h(|d(s)|) ds` for `d` linear from `d0` to `d1`; exact for
    /// every variant.
    pub fn integrate_linear(&self, d0: f64, d1: f64, len: f64) -> f64 {
        if len <= 0.0 {
            return 0.0;
        }
        if d0 * d1 < 0.0 {
            let s = d0.abs() / (d0.abs() + d1.abs());
            return self.integrate_abs(d0.abs(), 0.0, s * len) + self.integrate_abs(0.0, d1.abs(), (1.0 - s) * len);
        }
        self.integrate_abs(d0.abs(), d1.abs(), len)
    }

    /// Same with `a, b >= 0`.
    fn integrate_abs(&self, a: f64, b: f64, len: f64) -> f64 {
        if a == b {
            return len * self.eval(a);
        }
        match self {
            Self::Linear => 0.5 * len * (a + b),
            Self::Power(p) => {
                if (b - a).abs() > 1e-3 * a.max(b) {
                    let anti = |x: f64| x.powf(p + 1.0) / (p + 1.0);
                    len * (anti(b) - anti(a)) / (b - a)
                } else {
                    gauss5(|s| self.eval(a + (b - a) * s)) * len
                }
            }
            Self::Tabulated { d, .. } => {
                let (lo, hi) = (a.min(b), a.max(b));
                let mut cuts = vec![lo];
                cuts.extend(d.iter().copied().filter(|&v| v > lo && v < hi));
                cuts.push(hi);
                let span = hi - lo;
                cuts.windows(2)
                    .map(|w| len * (w[1] - w[0]) / span * 0.5 * (self.eval(w[0]) + self.eval(w[1])))
                    .sum()
            }
        }
    }

    pub fn read_table(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut d = Vec::new();
        let mut h = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<f64> = line
                .split_whitespace()
                .map(|v| v.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::InvalidCost(format!("{}:{}: {e}", path.display(), lineno + 1)))?;
            if cols.len() != 2 {
                return Err(Error::InvalidCost(format!("{}:{}: expected `d h`", path.display(), lineno + 1)));
            }
            d.push(cols[0]);
            h.push(cols[1]);
        }
        Self::tabulated(d, h)
    }
}

/// Mean of `f` over `[0, 1]` by 5-point Gauss-Legendre.
fn gauss5(f: impl Fn(f64) -> f64) -> f64 {
    const X: [f64; 5] = [
        0.0,
        0.538_469_310_105_683_1,
        -0.538_469_310_105_683_1,
        0.906_179_845_938_664,
        -0.906_179_845_938_664,
    ];
    const W: [f64; 5] = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
        0.236_926_885_056_189_1,
    ];
    X.iter().zip(W).map(|(x, w)| 0.5 * w * f(0.5 * (x + 1.0))).sum()
}

/// `linear`, `power:<p>` or `table:<path>`.
impl FromStr for ConvexCost {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "linear" {
            return Ok(Self::Linear);
        }
        if let Some(p) = s.strip_prefix("power:") {
            let p: f64 = p
                .trim()
                .parse()
                .map_err(|e| Error::InvalidCost(format!("power exponent {p:?}: {e}")))?;
            return Self::power(p);
        }
        if let Some(path) = s.strip_prefix("table:") {
            return Self::read_table(Path::new(path.trim()));
        }
        Err(Error::InvalidCost(format!("unknown cost spec {s:?} (linear, power:<p>, table:<path>)")))
    }
}

impl std::fmt::Display for ConvexCost {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Linear => write!(f, "linear"),
            Self::Power(p) => write!(f, "power:{p}"),
            Self::Tabulated { d, .. } => write!(f, "table({} rows)", d.len()),
        }
    }
}
