//! Reduced Ricci flow for warped products:
//! `psi_t = psi_rr - (n-1)(1 - psi_r^2)/psi`, `phi_t = n (psi_rr/psi) phi`.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::fd;
use crate::geometry::{
    arclength, arclength_gauge, curvature_with_floor, in_arclength_gauge, psi_derivatives,
    psi_rr_over_psi, RadialProfile, EPS_SING_REL, TOL_POLE,
};
use crate::kv::KvDoc;

/// Closed index range `start..=end` of grid nodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NodeInterval {
    pub start: usize,
    pub end: usize,
}

impl NodeInterval {
    pub fn point(i: usize) -> Self {
        Self { start: i, end: i }
    }

    pub fn is_point(&self) -> bool {
        self.start == self.end
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FlowStatus {
    Smooth,
    Singular(Vec<NodeInterval>),
    /// A smooth cap continuing the flow past a singular time.
    PostSingular,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowState {
    pub profile: RadialProfile,
    pub t: f64,
    pub status: FlowStatus,
}

impl FlowState {
    pub fn new(profile: RadialProfile) -> Self {
        Self {
            profile,
            t: 0.0,
            status: FlowStatus::Smooth,
        }
    }

    pub fn singular_set(&self) -> &[NodeInterval] {
        match &self.status {
            FlowStatus::Singular(v) => v,
            _ => &[],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowConfig {
    /// Upper bound on the time step.
    pub dt_init: f64,
    pub t_max: f64,
    /// Pinch threshold as a fraction of the initial maximal fiber radius.
    pub eps_sing: f64,
    /// Reaction time-step factor: `dt <= safety * min psi^2/(n-1)`.
    pub safety: f64,
    /// Neck/bump counts are recorded every this many accepted steps (and on every change).
    pub history_stride: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            dt_init: 1e-3,
            t_max: 1.0,
            eps_sing: EPS_SING_REL,
            safety: 0.1,
            history_stride: 200,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NeckBumpSample {
    pub t: f64,
    pub necks: usize,
    pub bumps: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowRunReport {
    pub singular_time: Option<f64>,
    pub singular_set: Vec<NodeInterval>,
    /// `sup (T - t) max|Ric eigenvalue|` over the sampled run.
    pub type_one_sup: f64,
    pub neck_bump_history: Vec<NeckBumpSample>,
    pub steps: usize,
    pub t_end: f64,
}

impl FlowRunReport {
    /// Consecutive samples where the neck or bump count went up.
    pub fn sturm_violations(&self) -> Vec<(NeckBumpSample, NeckBumpSample)> {
        self.neck_bump_history
            .windows(2)
            .filter(|w| w[1].necks > w[0].necks || w[1].bumps > w[0].bumps)
            .map(|w| (w[0], w[1]))
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut doc = KvDoc::new();
        doc.push(
            "singular_time",
            self.singular_time
                .map(|t| format!("{t:.16e}"))
                .unwrap_or_else(|| "none".into()),
        );
        let set: Vec<String> = self
            .singular_set
            .iter()
            .map(|iv| format!("{}-{}", iv.start, iv.end))
            .collect();
        doc.push("singular_set", set.join(","));
        doc.push("type_one_sup", format!("{:.16e}", self.type_one_sup));
        doc.push("steps", self.steps);
        doc.push("t_end", format!("{:.16e}", self.t_end));
        for s in &self.neck_bump_history {
            doc.push("neck_bump", format!("{:.16e} {} {}", s.t, s.necks, s.bumps));
        }
        let mut out = String::from("# flow-report\n# neck_bump = t necks bumps\n");
        out.push_str(&doc.render());
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let doc = KvDoc::parse(text)?;
        let need = |k: &str| {
            doc.get(k)
                .ok_or_else(|| Error::Parse(format!("flow report is missing {k}")))
        };
        let num = |k: &str, v: &str| {
            v.parse::<f64>()
                .map_err(|e| Error::Parse(format!("{k}: {e}")))
        };
        let singular_time = match need("singular_time")? {
            "none" => None,
            v => Some(num("singular_time", v)?),
        };
        let mut singular_set = Vec::new();
        for part in need("singular_set")?.split(',').filter(|s| !s.is_empty()) {
            let (a, b) = part
                .split_once('-')
                .ok_or_else(|| Error::Parse(format!("bad interval {part:?}")))?;
            let p = |s: &str| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|e| Error::Parse(format!("interval {part:?}: {e}")))
            };
            singular_set.push(NodeInterval {
                start: p(a)?,
                end: p(b)?,
            });
        }
        let mut neck_bump_history = Vec::new();
        for v in doc.get_all("neck_bump") {
            let f: Vec<&str> = v.split_whitespace().collect();
            if f.len() != 3 {
                return Err(Error::Parse(format!("bad neck_bump entry {v:?}")));
            }
            let c = |s: &str| {
                s.parse::<usize>()
                    .map_err(|e| Error::Parse(format!("neck_bump {v:?}: {e}")))
            };
            neck_bump_history.push(NeckBumpSample {
                t: num("neck_bump", f[0])?,
                necks: c(f[1])?,
                bumps: c(f[2])?,
            });
        }
        Ok(Self {
            singular_time,
            singular_set,
            type_one_sup: num("type_one_sup", need("type_one_sup")?)?,
            neck_bump_history,
            steps: need("steps")?
                .parse()
                .map_err(|e| Error::Parse(format!("steps: {e}")))?,
            t_end: num("t_end", need("t_end")?)?,
        })
    }
}

/// Strict interior local minima (necks) and maxima (bumps) of `psi`, with a
/// hysteresis of `1e-10 max psi` so that flat ties and round-off wiggles merge.
pub fn neck_bump_count(p: &RadialProfile) -> (usize, usize) {
    let psi = p.psi();
    let tol = 1e-10 * p.max_psi();
    let mut dir = 0i8;
    let mut ext = psi[0];
    let (mut necks, mut bumps) = (0, 0);
    for &v in &psi[1..] {
        match dir {
            0 => {
                if v > ext + tol {
                    dir = 1;
                    ext = v;
                } else if v < ext - tol {
                    dir = -1;
                    ext = v;
                }
            }
            1 => {
                if v > ext {
                    ext = v;
                } else if v < ext - tol {
                    bumps += 1;
                    dir = -1;
                    ext = v;
                }
            }
            _ => {
                if v < ext {
                    ext = v;
                } else if v > ext + tol {
                    necks += 1;
                    dir = 1;
                    ext = v;
                }
            }
        }
    }
    (necks, bumps)
}

fn min_interior_psi(p: &RadialProfile) -> (usize, f64) {
    let psi = p.psi();
    (1..p.m())
        .map(|i| (i, psi[i]))
        .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a })
}

/// Maximal runs of interior nodes with `psi < threshold`.
fn runs_below(p: &RadialProfile, threshold: f64) -> Vec<NodeInterval> {
    let psi = p.psi();
    let mut out = Vec::new();
    let mut start = None;
    for i in 1..p.m() {
        match (psi[i] < threshold, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push(NodeInterval { start: s, end: i - 1 });
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push(NodeInterval { start: s, end: p.m() - 1 });
    }
    out
}

/// One semi-implicit step with the pinch floor `1e-4 max psi`.
pub fn flow_step(s: &FlowState, dt: f64) -> Result<FlowState> {
    flow_step_with_floor(s, dt, EPS_SING_REL * s.profile.max_psi())
}

/// One semi-implicit step.
///
/// The coordinate `x` is kept proportional to arclength (`phi = D/2` uniform),
/// so `phi_t = n (psi_rr/psi) phi` integrates to `D_t = ∫ n psi_rr/psi dr` and
/// `psi` picks up the advection `-psi_r W`, `W(r) = V(r) - (r/D) V(D)`,
/// `V(r) = ∫_0^r n psi_rr/psi`. The reaction is split as
/// `(n-1)(psi_r/psi) psi_r - (n-1)/psi`: the first part joins `psi_rr` and the
/// advection in the implicit tridiagonal solve (coefficient lagged), the second
/// is explicit with `psi` floored at `eps_sing`.
/// Inputs not in this gauge are first resampled into it.
pub fn flow_step_with_floor(s: &FlowState, dt: f64, eps_sing: f64) -> Result<FlowState> {
    if let FlowStatus::Singular(_) = s.status {
        return Err(Error::StepRejected("cannot step a singular state".into()));
    }
    if dt == 0.0 {
        return Ok(s.clone());
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::StepRejected(format!("bad time step {dt}")));
    }
    let gauged;
    let p = if in_arclength_gauge(&s.profile) {
        &s.profile
    } else {
        gauged = arclength_gauge(&s.profile)?;
        &gauged
    };
    let (x, psi) = (p.x(), p.psi());
    let phi = p.phi()[0];
    let m = p.m();
    let nf = p.n() as f64;
    let h = x[1] - x[0];
    let d = psi_derivatives(p);
    let k: Vec<f64> = psi_rr_over_psi(p, &d, eps_sing).iter().map(|v| nf * v).collect();
    let r = arclength(p);
    let v = fd::cumtrapz(&r, &k);
    let vd = v[m];
    let diam = r[m];

    let km = m - 1;
    let (mut a, mut b, mut c, mut rhs) = (vec![0.0; km], vec![0.0; km], vec![0.0; km], vec![0.0; km]);
    let diff = 1.0 / (h * h * phi * phi);
    for i in 1..m {
        let psi_r = (psi[i + 1] - psi[i - 1]) / (2.0 * h * phi);
        let q = (nf - 1.0) * psi_r / psi[i].max(eps_sing) / phi;
        let w = (v[i] - r[i] / diam * vd) / phi;
        let adv = (q - w) / (2.0 * h);
        let j = i - 1;
        a[j] = -dt * (diff - adv);
        b[j] = 1.0 + dt * 2.0 * diff;
        c[j] = -dt * (diff + adv);
        rhs[j] = psi[i] - dt * (nf - 1.0) / psi[i].max(eps_sing);
    }
    let interior = fd::solve_tridiagonal(&a, &b, &c, &rhs)
        .ok_or_else(|| Error::StepRejected("tridiagonal solve hit a zero pivot".into()))?;
    let mut psi_new = vec![0.0; m + 1];
    for (i, val) in interior.into_iter().enumerate() {
        if !val.is_finite() {
            return Err(Error::StepRejected(format!("psi[{}] is not finite", i + 1)));
        }
        if val < -eps_sing {
            return Err(Error::StepRejected(format!(
                "psi[{}] = {val:e} went below -eps_sing",
                i + 1
            )));
        }
        psi_new[i + 1] = val.max(0.0);
    }
    impose_regular_poles(&r, &mut psi_new);
    let phi_new = phi * (dt * vd / diam).exp();
    if !(phi_new.is_finite() && phi_new > 0.0) {
        return Err(Error::StepRejected("radial scale left (0, inf)".into()));
    }
    Ok(FlowState {
        profile: p.with_fields(vec![phi_new; m + 1], psi_new),
        t: s.t + dt,
        status: s.status.clone(),
    })
}

/// Resets `psi` at the two pole-adjacent nodes from the odd series
/// `psi = s + c3 s^3 + c5 s^5` (`s` the distance to the pole) through the next
/// two nodes. Without it the discrete system admits a slowly growing offset
/// `psi ≈ s + c` next to a pole, which the Dirichlet value cannot see.
fn impose_regular_poles(r: &[f64], psi: &mut [f64]) {
    let m = psi.len() - 1;
    let fit = |s: [f64; 3], v: [f64; 2]| -> f64 {
        let (a11, a12) = (s[1].powi(3), s[1].powi(5));
        let (a21, a22) = (s[2].powi(3), s[2].powi(5));
        let (b1, b2) = (v[0] - s[1], v[1] - s[2]);
        let det = a11 * a22 - a12 * a21;
        let c3 = (b1 * a22 - a12 * b2) / det;
        let c5 = (a11 * b2 - a21 * b1) / det;
        s[0] + c3 * s[0].powi(3) + c5 * s[0].powi(5)
    };
    let d = |i: usize| r[m] - r[i];
    psi[1] = fit([r[1], r[2], r[3]], [psi[2], psi[3]]).max(0.0);
    psi[m - 1] = fit([d(m - 1), d(m - 2), d(m - 3)], [psi[m - 2], psi[m - 3]]).max(0.0);
}

fn stable_dt(p: &RadialProfile, cfg: &FlowConfig, eps_abs: f64) -> f64 {
    let (_, psi_min) = min_interior_psi(p);
    let psi_min = psi_min.max(eps_abs);
    cfg.dt_init
        .min(cfg.safety * psi_min * psi_min / (p.n() as f64 - 1.0))
}

/// Advances one adaptive step, halving `dt` on rejection.
fn adaptive_step(s: &FlowState, dt: f64, eps_abs: f64) -> Result<FlowState> {
    let mut dt = dt;
    let mut last = None;
    for _ in 0..30 {
        match flow_step_with_floor(s, dt, eps_abs) {
            Ok(next) => return Ok(next),
            Err(Error::StepRejected(msg)) => {
                last = Some(msg);
                dt *= 0.5;
            }
            Err(e) => return Err(e),
        }
    }
    Err(Error::StepRejected(format!(
        "30 halvings at t = {}: {}",
        s.t,
        last.unwrap_or_default()
    )))
}

/// Zero of `psi_min^2` extrapolated linearly from chords reaching back to 4x
/// and 16x the final value, Richardson-combined.
fn extrapolate_singular_time(samples: &[(f64, f64)]) -> f64 {
    let Some(&(te, qe)) = samples.last() else {
        return 0.0;
    };
    let chord = |factor: f64| -> Option<f64> {
        let &(tj, qj) = samples.iter().rev().find(|(_, q)| *q >= factor * qe)?;
        if qj <= qe {
            return None;
        }
        Some(te + qe * (te - tj) / (qj - qe))
    };
    match (chord(4.0), chord(16.0)) {
        (Some(ta), Some(tb)) => (4.0 * ta - tb) / 3.0,
        (Some(ta), None) => ta,
        _ => te,
    }
}

/// Nodes this close to a pole are left out of the Type-I sup: their curvature
/// is a regularized limit and carries the scheme's O(1) pole error.
pub const TYPE_ONE_POLE_GAP: usize = 3;

/// Integrates until `min interior psi < eps_sing * max psi(0)` or `t_max`.
pub fn run_to_singularity(s0: &FlowState, cfg: &FlowConfig) -> Result<(FlowRunReport, FlowState)> {
    if let FlowStatus::Singular(_) = s0.status {
        return Err(Error::StepRejected("initial state is already marked singular".into()));
    }
    let eps_abs = cfg.eps_sing * s0.profile.max_psi();
    let mut s = s0.clone();
    let (necks, bumps) = neck_bump_count(&s.profile);
    let mut history = vec![NeckBumpSample { t: s.t, necks, bumps }];
    let mut min_sq = Vec::new();
    let mut curv = Vec::new();
    let mut steps = 0usize;

    let record_curv = |p: &RadialProfile, t: f64, curv: &mut Vec<(f64, f64)>| {
        if let Ok(c) = curvature_with_floor(p, eps_abs) {
            let k = (TYPE_ONE_POLE_GAP..=p.m() - TYPE_ONE_POLE_GAP)
                .map(|i| c.max_abs_ricci(i))
                .fold(0.0, f64::max);
            curv.push((t, k));
        }
    };

    let mut singular = min_interior_psi(&s.profile).1 < eps_abs;
    if !singular {
        min_sq.push((s.t, min_interior_psi(&s.profile).1.powi(2)));
        record_curv(&s.profile, s.t, &mut curv);
    }
    while !singular {
        if s.t >= cfg.t_max {
            let report = FlowRunReport {
                singular_time: None,
                singular_set: vec![],
                type_one_sup: 0.0,
                neck_bump_history: history,
                steps,
                t_end: s.t,
            };
            return Err(Error::NoSingularity {
                t_max: cfg.t_max,
                outcome: Box::new((report, s)),
            });
        }
        let dt = stable_dt(&s.profile, cfg, eps_abs).min(cfg.t_max - s.t);
        s = adaptive_step(&s, dt, eps_abs)?;
        steps += 1;
        let (_, pmin) = min_interior_psi(&s.profile);
        min_sq.push((s.t, pmin * pmin));
        singular = pmin < eps_abs;
        if !singular {
            record_curv(&s.profile, s.t, &mut curv);
            let (necks, bumps) = neck_bump_count(&s.profile);
            let last = history.last().unwrap();
            if necks != last.necks || bumps != last.bumps || steps % cfg.history_stride.max(1) == 0 {
                history.push(NeckBumpSample { t: s.t, necks, bumps });
            }
        }
    }

    let t_sing = if steps == 0 {
        s.t
    } else {
        extrapolate_singular_time(&min_sq).max(s.t)
    };
    let type_one_sup = curv
        .iter()
        .filter(|(t, _)| *t < t_sing)
        .map(|(t, k)| (t_sing - t) * k)
        .fold(0.0, f64::max);
    let set = runs_below(&s.profile, 2.0 * eps_abs);
    let report = FlowRunReport {
        singular_time: Some(t_sing),
        singular_set: set.clone(),
        type_one_sup,
        neck_bump_history: history,
        steps,
        t_end: s.t,
    };
    s.status = FlowStatus::Singular(set);
    Ok((report, s))
}

/// Metric snapshots of one smooth flow on a common grid, ascending in time.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricHistory {
    times: Vec<f64>,
    profiles: Vec<RadialProfile>,
}

impl MetricHistory {
    pub fn new(times: Vec<f64>, profiles: Vec<RadialProfile>) -> Result<Self> {
        if times.is_empty() || times.len() != profiles.len() {
            return Err(Error::InvalidProfile("history needs matching non-empty times and profiles".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidProfile("history times must increase".into()));
        }
        let x0 = profiles[0].x();
        if profiles.iter().any(|p| p.x() != x0 || p.n() != profiles[0].n()) {
            return Err(Error::InvalidProfile("history snapshots must share one grid".into()));
        }
        Ok(Self { times, profiles })
    }

    /// A history that never changes, valid on `[t0, t1]`.
    pub fn frozen(p: RadialProfile, t0: f64, t1: f64) -> Result<Self> {
        Self::new(vec![t0, t1], vec![p.clone(), p])
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn profiles(&self) -> &[RadialProfile] {
        &self.profiles
    }

    pub fn t_start(&self) -> f64 {
        self.times[0]
    }

    pub fn t_end(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn first(&self) -> &RadialProfile {
        &self.profiles[0]
    }

    pub fn last(&self) -> &RadialProfile {
        &self.profiles[self.profiles.len() - 1]
    }

    /// Index of the last snapshot at or before `t`.
    pub fn snapshot_index(&self, t: f64) -> usize {
        self.times.partition_point(|&v| v <= t).max(1) - 1
    }

    /// Metric at time `t` by linear interpolation in `t` (clamped to the window).
    pub fn at_time(&self, t: f64) -> RadialProfile {
        if t <= self.t_start() {
            return self.first().clone();
        }
        if t >= self.t_end() {
            return self.last().clone();
        }
        let k = self.snapshot_index(t);
        let (p0, p1) = (&self.profiles[k], &self.profiles[k + 1]);
        let s = (t - self.times[k]) / (self.times[k + 1] - self.times[k]);
        let mix = |a: &[f64], b: &[f64]| -> Vec<f64> {
            a.iter().zip(b).map(|(u, v)| u + s * (v - u)).collect()
        };
        p0.with_fields(mix(p0.phi(), p1.phi()), mix(p0.psi(), p1.psi()))
    }

    /// Every snapshot resampled onto the grid `x`.
    pub fn resample(&self, x: &[f64]) -> Result<Self> {
        let profiles = self
            .profiles
            .iter()
            .map(|p| p.resample(x))
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.times.clone(), profiles)
    }
}

/// Flows a smooth state forward to `t_end`, keeping a snapshot after every
/// accepted step.
pub fn evolve_window(s0: &FlowState, t_end: f64, cfg: &FlowConfig) -> Result<MetricHistory> {
    let eps_abs = cfg.eps_sing * s0.profile.max_psi();
    let mut s = s0.clone();
    let mut times = vec![s.t];
    let mut profiles = vec![s.profile.clone()];
    while s.t < t_end {
        let dt = stable_dt(&s.profile, cfg, eps_abs).min(t_end - s.t);
        if dt <= 1e-15 * t_end.abs().max(1.0) {
            break;
        }
        s = adaptive_step(&s, dt, eps_abs)?;
        let (i, pmin) = min_interior_psi(&s.profile);
        if pmin < eps_abs {
            return Err(Error::UnsupportedTopology(format!(
                "cap pinched again at node {i}, t = {}",
                s.t
            )));
        }
        times.push(s.t);
        profiles.push(s.profile.clone());
    }
    MetricHistory::new(times, profiles)
}

/// Result of continuing a singular state on its two surviving caps.
#[derive(Clone, Debug, PartialEq)]
pub struct Surgery {
    /// Piece on the `x = -1` side; its singular end is at `x = +1`.
    pub cap1: FlowState,
    /// Piece on the `x = +1` side, reflected so its singular end is also at `x = +1`.
    pub cap2: FlowState,
    /// Arclength of the excised singular interval.
    pub l0: f64,
    pub cut: NodeInterval,
}

/// Fewest nodes replaced by the closing tip at a cut.
pub const CAP_COLLAR: usize = 5;

/// Excises the singular interval and closes both sides with a smooth pole.
///
/// Over the last `CAP_COLLAR` nodes the fiber radius is replaced by an odd
/// tip with unit slope at the new pole, matching `psi` and `psi_s` at the
/// collar's inner node (see `close_cap`).
pub fn forward_evolve(s: &FlowState) -> Result<Surgery> {
    let set = match &s.status {
        FlowStatus::Singular(set) => set,
        _ => return Err(Error::UnsupportedTopology("state is not singular".into())),
    };
    if set.len() != 1 {
        return Err(Error::UnsupportedTopology(format!(
            "singular set has {} components",
            set.len()
        )));
    }
    let cut = set[0];
    let p = &s.profile;
    let m = p.m();
    if cut.start < CAP_COLLAR || cut.end + CAP_COLLAR > m {
        return Err(Error::UnsupportedTopology(format!(
            "singular set {}..={} touches a pole",
            cut.start, cut.end
        )));
    }
    if cut.start < 16 || m - cut.end < 16 {
        return Err(Error::UnsupportedTopology(format!(
            "a cap would have fewer than 16 intervals (cut {}..={}, m = {m})",
            cut.start, cut.end
        )));
    }
    let r = arclength(p);
    let d = psi_derivatives(p);
    let (x, phi, psi) = (p.x(), p.phi(), p.psi());

    // cap 1: nodes 0..=i1, already oriented
    let i1 = cut.start;
    let span1 = x[i1] + 1.0;
    let x1: Vec<f64> = (0..=i1).map(|j| -1.0 + 2.0 * (x[j] + 1.0) / span1).collect();
    let phi1: Vec<f64> = (0..=i1).map(|j| phi[j] * span1 / 2.0).collect();
    let s1: Vec<f64> = (0..=i1).map(|j| r[i1] - r[j]).collect();
    let slope1: Vec<f64> = (0..=i1).map(|j| -d.psi_r[j]).collect();
    let psi1 = close_cap(&psi[..=i1], &s1, &slope1)?;

    // cap 2: nodes i2..=m, reflected
    let i2 = cut.end;
    let span2 = 1.0 - x[i2];
    let idx: Vec<usize> = (i2..=m).rev().collect();
    let x2: Vec<f64> = idx.iter().map(|&j| -1.0 + 2.0 * (1.0 - x[j]) / span2).collect();
    let phi2: Vec<f64> = idx.iter().map(|&j| phi[j] * span2 / 2.0).collect();
    let psi2_raw: Vec<f64> = idx.iter().map(|&j| psi[j]).collect();
    let s2: Vec<f64> = idx.iter().map(|&j| r[j] - r[i2]).collect();
    let slope2: Vec<f64> = idx.iter().map(|&j| d.psi_r[j]).collect();
    let psi2 = close_cap(&psi2_raw, &s2, &slope2)?;

    let mk = |x: Vec<f64>, phi: Vec<f64>, psi: Vec<f64>| -> Result<FlowState> {
        let mut x = x;
        let last = x.len() - 1;
        x[0] = -1.0;
        x[last] = 1.0;
        let prof = RadialProfile::new(p.n(), x, phi, psi)?;
        prof.check_smooth_sphere(TOL_POLE)?;
        Ok(FlowState {
            profile: prof,
            t: s.t,
            status: FlowStatus::PostSingular,
        })
    };
    Ok(Surgery {
        cap1: mk(x1, phi1, psi1)?,
        cap2: mk(x2, phi2, psi2)?,
        l0: r[i2] - r[i1],
        cut,
    })
}

/// Replaces the tail of `psi` by the closing tip. The collar has at least
/// `CAP_COLLAR` nodes and is widened until its inner value spans 8 cells, so
/// the tip curvature is resolved. `s` is the distance to the last node and
/// `slope` is `dpsi/ds`. With `sigma = s/S`, `U = psi_c/S`, `V = slope`:
/// `psi = psi_c (sigma / (U sqrt(1 + beta sigma^2)) + c sigma^3 (sigma - 1))`,
/// `beta = 1/U^2 - 1`, `c = V/U - U^2`. The first term is odd in `s` with unit
/// slope at the pole and matches `psi_c`; the second fixes the slope at `S`.
fn close_cap(psi: &[f64], s: &[f64], slopes: &[f64]) -> Result<Vec<f64>> {
    let last = psi.len() - 1;
    let h = s[last - 1] - s[last];
    let mut c = last - CAP_COLLAR;
    while c > last / 2 && psi[c] < 8.0 * h {
        c -= 1;
    }
    let slope = slopes[c];
    let big_s = s[c];
    let psi_c = psi[c];
    let u = psi_c / big_s;
    let beta = 1.0 / (u * u) - 1.0;
    let corr = slope / u - u * u;
    let mut out = psi.to_vec();
    for j in c + 1..last {
        let sig = s[j] / big_s;
        let val = psi_c * (sig / (u * (1.0 + beta * sig * sig).sqrt()) + corr * sig.powi(3) * (sig - 1.0));
        if !(val > 0.0 && val < out[j - 1]) {
            return Err(Error::InvalidProfile(format!(
                "closing tip is not positive and monotone at collar node {j}"
            )));
        }
        out[j] = val;
    }
    out[last] = 0.0;
    Ok(out)
}

/// Arclength-parametrized summary of a profile for diagnostics.
pub fn describe(p: &RadialProfile) -> String {
    let (necks, bumps) = neck_bump_count(p);
    let (i, pmin) = min_interior_psi(p);
    let mut s = String::new();
    let _ = write!(
        s,
        "n={} m={} diameter={:.6} max_psi={:.6} min_interior_psi={:.6e}@{} necks={} bumps={}",
        p.n(),
        p.m(),
        p.diameter(),
        p.max_psi(),
        pmin,
        i,
        necks,
        bumps
    );
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn dumbbell(m: usize) -> RadialProfile {
        RadialProfile::from_fns(2, m, |_| PI / 2.0, |x| {
            (PI / 2.0 * x).cos() * (1.0 - 0.9 * (-x * x / 0.25).exp())
        })
        .unwrap()
    }

    #[test]
    fn zero_step_is_identity() {
        let s = FlowState::new(dumbbell(64));
        assert_eq!(flow_step(&s, 0.0).unwrap(), s);
    }

    #[test]
    fn round_sphere_shrinks_self_similarly() {
        let n = 2usize;
        let mut s = FlowState::new(RadialProfile::round_sphere(n, 200, 1.0).unwrap());
        let cfg = FlowConfig::default();
        while s.t < 0.1 - 1e-15 {
            let dt = stable_dt(&s.profile, &cfg, 1e-12).min(0.1 - s.t);
            s = flow_step(&s, dt).unwrap();
        }
        let rho = (1.0 - 2.0 * n as f64 * 0.1).sqrt();
        let r = arclength(&s.profile);
        let diam = r[200];
        assert!((diam / PI - rho).abs() / rho < 0.01, "diam {diam}");
        let err = r
            .iter()
            .zip(s.profile.psi())
            .map(|(ri, pi)| (pi - rho * (ri / rho).sin()).abs())
            .fold(0.0, f64::max);
        assert!(err < 0.01 * rho, "err {err}");
    }

    #[test]
    fn cylinder_neck_decays_at_reaction_rate() {
        let c = 0.3;
        let p = RadialProfile::from_fns(2, 128, |_| 2.0, |x| (PI / 2.0 * (x + 1.0)).sin().min(c))
            .unwrap();
        let s = FlowState::new(p);
        let dt = 1e-6;
        let next = flow_step(&s, dt).unwrap();
        let rate = (next.profile.psi()[64] - c) / dt;
        assert!((rate + 1.0 / c).abs() < 1e-3 / c, "rate {rate}");
    }

    #[test]
    fn neck_bump_counts() {
        let round = RadialProfile::round_sphere(2, 100, 1.0).unwrap();
        assert_eq!(neck_bump_count(&round), (0, 1));
        assert_eq!(neck_bump_count(&dumbbell(200)), (1, 2));
        // two necks: cos envelope times a dip at x = ±0.4
        let three = RadialProfile::from_fns(2, 400, |_| PI / 2.0, |x| {
            let dip = |c: f64| 0.8 * (-(x - c) * (x - c) / 0.01).exp();
            (PI / 2.0 * x).cos() * (1.0 - dip(0.4) - dip(-0.4))
        })
        .unwrap();
        assert_eq!(neck_bump_count(&three), (2, 3));
        let mut flat = vec![0.0; 101];
        for (i, v) in flat.iter_mut().enumerate().take(100).skip(1) {
            *v = 0.5 + 1e-14 * ((i * 7919) % 13) as f64;
        }
        let plateau = RadialProfile::new(2, crate::geometry::uniform_grid(100), vec![1.0; 101], flat).unwrap();
        assert_eq!(neck_bump_count(&plateau), (0, 1));
    }

    #[test]
    fn already_pinched_returns_immediately() {
        let mut psi: Vec<f64> = dumbbell(64).psi().to_vec();
        psi[32] = 0.0;
        let p = dumbbell(64).with_fields(vec![PI / 2.0; 65], psi);
        let (report, state) = run_to_singularity(&FlowState::new(p), &FlowConfig::default()).unwrap();
        assert_eq!(report.singular_time, Some(0.0));
        assert_eq!(report.steps, 0);
        assert_eq!(state.singular_set(), &[NodeInterval::point(32)]);
    }

    #[test]
    fn singular_time_extrapolation_is_exact_for_linear_decay() {
        let samples: Vec<(f64, f64)> = (0..50).map(|k| (k as f64 * 0.01, 0.6 - 1.2 * k as f64 * 0.01)).collect();
        assert!((extrapolate_singular_time(&samples) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn report_round_trips_as_text() {
        let report = FlowRunReport {
            singular_time: Some(0.123456789),
            singular_set: vec![NodeInterval { start: 10, end: 12 }, NodeInterval::point(40)],
            type_one_sup: 0.5,
            neck_bump_history: vec![
                NeckBumpSample { t: 0.0, necks: 1, bumps: 2 },
                NeckBumpSample { t: 0.1, necks: 1, bumps: 2 },
            ],
            steps: 99,
            t_end: 0.12,
        };
        assert_eq!(FlowRunReport::from_text(&report.to_text()).unwrap(), report);
        let none = FlowRunReport { singular_time: None, singular_set: vec![], ..report };
        assert_eq!(FlowRunReport::from_text(&none.to_text()).unwrap(), none);
    }

    #[test]
    fn surgery_on_point_pinch_partitions_arclength() {
        let p = dumbbell(128);
        let mut psi = p.psi().to_vec();
        psi[64] = 1e-5;
        let state = FlowState {
            profile: p.with_fields(p.phi().to_vec(), psi),
            t: 0.3,
            status: FlowStatus::Singular(vec![NodeInterval::point(64)]),
        };
        let cut = forward_evolve(&state).unwrap();
        assert_eq!(cut.l0, 0.0);
        let total = cut.cap1.profile.diameter() + cut.cap2.profile.diameter();
        assert!((total - state.profile.diameter()).abs() < 1e-12);
        for cap in [&cut.cap1, &cut.cap2] {
            let (_, s1) = cap.profile.pole_slopes();
            assert!((s1.abs() - 1.0).abs() < TOL_POLE);
            assert_eq!(cap.status, FlowStatus::PostSingular);
        }
        let r = arclength(&p);
        let flat: Vec<f64> = (0..=128)
            .map(|j| {
                let gap = (r[56] - r[j]).max(r[j] - r[72]).max(0.0);
                p.psi()[j].min(1e-5 + 0.7 * gap)
            })
            .collect();
        let interval = FlowState {
            profile: p.with_fields(p.phi().to_vec(), flat),
            status: FlowStatus::Singular(vec![NodeInterval { start: 56, end: 72 }]),
            ..state.clone()
        };
        let cut = forward_evolve(&interval).unwrap();
        assert!((cut.l0 - (r[72] - r[56])).abs() < 1e-14);
        let two = FlowState {
            status: FlowStatus::Singular(vec![NodeInterval::point(40), NodeInterval::point(80)]),
            ..state.clone()
        };
        assert!(matches!(forward_evolve(&two), Err(Error::UnsupportedTopology(_))));
        let polar = FlowState {
            status: FlowStatus::Singular(vec![NodeInterval::point(2)]),
            ..state
        };
        assert!(matches!(forward_evolve(&polar), Err(Error::UnsupportedTopology(_))));
    }

    #[test]
    fn history_interpolates_linearly() {
        let a = RadialProfile::round_sphere(2, 32, 1.0).unwrap();
        let b = RadialProfile::round_sphere(2, 32, 0.5).unwrap();
        let h = MetricHistory::new(vec![0.0, 1.0], vec![a.clone(), b]).unwrap();
        let mid = h.at_time(0.5);
        let want = RadialProfile::round_sphere(2, 32, 0.75).unwrap();
        for (u, v) in mid.psi().iter().zip(want.psi()) {
            assert!((u - v).abs() < 1e-14);
        }
        assert_eq!(h.at_time(-1.0), a);
        assert_eq!(h.snapshot_index(0.7), 0);
    }
}
