//! The glued space `X = M1 ⊔ [0, 1] ⊔ M2` after a neckpinch, its distance,
//! the transport monitor along backward time, and the pinch classifier.

use std::fmt::Write as _;

use crate::diffusion::{
    cdf_of, certify_concentration, df_dtau_rhs, f_functional, Certified, ConjugateHeatSolver, DiffusionState,
};
use crate::error::{Error, Result};
use crate::fd;
use crate::geometry::{arclength, RadialProfile};
use crate::ricci_flow::MetricHistory;
use crate::transport::{total_cost_1d, ConvexCost, Measure1D, SurfaceGraph};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    First,
    Second,
}

impl Side {
    pub fn label(self) -> &'static str {
        match self {
            Side::First => "M1",
            Side::Second => "M2",
        }
    }
}

/// Length of the singular interval as a function of backward time.
#[derive(Clone, Debug, PartialEq)]
pub enum LengthLaw {
    Constant(f64),
    /// Piecewise linear through `(tau, L)` samples, clamped at the ends.
    Table { tau: Vec<f64>, len: Vec<f64> },
    /// Driven by the monitor so that the first pair's cost falls at rate
    /// `slack`: `dL = -(dF1 + dF2) - slack dtau`, starting from `l0`.
    Compensating { l0: f64, slack: f64 },
}

impl LengthLaw {
    pub fn initial(&self) -> f64 {
        match self {
            LengthLaw::Constant(l) => *l,
            LengthLaw::Table { len, .. } => len[0],
            LengthLaw::Compensating { l0, .. } => *l0,
        }
    }

    /// Prescribed value; the compensating law reports its start value.
    pub fn at(&self, tau: f64) -> f64 {
        match self {
            LengthLaw::Constant(l) => *l,
            LengthLaw::Table { tau: ts, len } => fd::interp_linear(ts, len, tau),
            LengthLaw::Compensating { l0, .. } => *l0,
        }
    }
}

/// Two post-singular caps glued by an interval. Both caps keep their
/// singular pole at `x = +1`, where the interval attaches
/// (`P1` at interval parameter 0, `P2` at 1).
#[derive(Clone, Debug)]
pub struct GluedSpace {
    pub cap1: ConjugateHeatSolver,
    pub cap2: ConjugateHeatSolver,
    pub length: LengthLaw,
}

/// Angular resolution of the cap distance graphs.
pub const CAP_ANGLES: usize = 32;

impl GluedSpace {
    pub fn new(cap1: MetricHistory, cap2: MetricHistory, length: LengthLaw) -> Result<Self> {
        if (cap1.t_end() - cap2.t_end()).abs() > 1e-12 * cap1.t_end().abs().max(1.0) {
            return Err(Error::InvalidProfile(format!(
                "cap histories end at different times {} and {}",
                cap1.t_end(),
                cap2.t_end()
            )));
        }
        if length.initial() < 0.0 {
            return Err(Error::InvalidProfile("interval length must be non-negative".into()));
        }
        Ok(Self {
            cap1: ConjugateHeatSolver::new(cap1),
            cap2: ConjugateHeatSolver::new(cap2),
            length,
        })
    }

    pub fn cap(&self, side: Side) -> &ConjugateHeatSolver {
        match side {
            Side::First => &self.cap1,
            Side::Second => &self.cap2,
        }
    }

    /// Backward time covered by both caps.
    pub fn tau_max(&self) -> f64 {
        self.cap1.tau_max().min(self.cap2.tau_max())
    }

    pub fn slice(&self, tau: f64) -> GluedSlice {
        GluedSlice::new(self.cap1.host_at(tau), self.cap2.host_at(tau), self.length.at(tau))
    }
}

/// The glued space frozen at one backward time.
#[derive(Clone, Debug)]
pub struct GluedSlice {
    pub caps: [RadialProfile; 2],
    pub length: f64,
    graphs: [SurfaceGraph; 2],
}

impl GluedSlice {
    pub fn new(cap1: RadialProfile, cap2: RadialProfile, length: f64) -> Self {
        let graph = |p: &RadialProfile| SurfaceGraph::new(&arclength(p), p.psi(), CAP_ANGLES);
        Self {
            graphs: [graph(&cap1), graph(&cap2)],
            caps: [cap1, cap2],
            length,
        }
    }

    fn idx(side: Side) -> usize {
        match side {
            Side::First => 0,
            Side::Second => 1,
        }
    }

    pub fn diameter(&self, side: Side) -> f64 {
        self.caps[Self::idx(side)].diameter()
    }

    /// `diam M1 + L + diam M2`.
    pub fn diameter_bound(&self) -> f64 {
        self.diameter(Side::First) + self.length + self.diameter(Side::Second)
    }

    fn to_junction(&self, side: Side, r: f64, theta: f64) -> f64 {
        let g = &self.graphs[Self::idx(side)];
        let top = g.radii()[g.radii().len() - 1];
        g.distance((r, theta), (top, 0.0))
    }
}

/// A point of the glued space: on a cap at arclength `r` from its regular
/// pole and fiber angle `theta`, or on the interval at parameter `s`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum XPoint {
    Cap { side: Side, r: f64, theta: f64 },
    Interval { s: f64 },
}

impl XPoint {
    pub fn regular_pole(side: Side) -> Self {
        XPoint::Cap { side, r: 0.0, theta: 0.0 }
    }

    pub fn junction(slice: &GluedSlice, side: Side) -> Self {
        XPoint::Cap {
            side,
            r: slice.diameter(side),
            theta: 0.0,
        }
    }
}

/// Distance in the glued space. Within a cap it is the shortest path on
/// the cap's meridian graph; everything else passes through the junctions.
pub fn dx_distance(a: &XPoint, b: &XPoint, x: &GluedSlice) -> f64 {
    let along = |s: f64, side: Side| match side {
        Side::First => s * x.length,
        Side::Second => (1.0 - s) * x.length,
    };
    match (*a, *b) {
        (XPoint::Cap { side: sa, r: ra, theta: ta }, XPoint::Cap { side: sb, r: rb, theta: tb }) => {
            if sa == sb {
                x.graphs[GluedSlice::idx(sa)].distance((ra, ta), (rb, tb))
            } else {
                x.to_junction(sa, ra, ta) + x.length + x.to_junction(sb, rb, tb)
            }
        }
        (XPoint::Interval { s }, XPoint::Interval { s: t }) => (s - t).abs() * x.length,
        (XPoint::Cap { side, r, theta }, XPoint::Interval { s })
        | (XPoint::Interval { s }, XPoint::Cap { side, r, theta }) => x.to_junction(side, r, theta) + along(s, side),
    }
}

/// A diffusion living on one of the caps.
#[derive(Clone, Debug, PartialEq)]
pub struct CapDiffusion {
    pub side: Side,
    pub state: DiffusionState,
}

impl CapDiffusion {
    pub fn new(side: Side, state: DiffusionState) -> Self {
        Self { side, state }
    }

    /// `∫ F dr` with `F` measured from the regular pole.
    pub fn f_value(&self) -> f64 {
        f_functional(&cdf_of(&self.state))
    }

    pub fn base_measure(&self) -> Result<Measure1D> {
        Measure1D::from_cdf_profile(&cdf_of(&self.state))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrossCost {
    pub cost: f64,
    /// `L + F1 + F2`, for the linear cost only.
    pub decomposition: Option<f64>,
}

/// Agreement required between the line transport and `L + F1 + F2`.
pub const DECOMPOSITION_TOL: f64 = 1e-6;

/// Transport cost between diffusions on opposite caps. The line picture is
/// `M1` from its regular pole, the interval, then `M2` read from its
/// junction outward; both CDFs are concatenated across the massless gap.
pub fn cross_cost(a: &CapDiffusion, b: &CapDiffusion, length: f64, h: &ConvexCost) -> Result<CrossCost> {
    if a.side == b.side {
        return Err(Error::OverlappingSupports);
    }
    let (d1, d2) = if a.side == Side::First { (a, b) } else { (b, a) };
    let c1 = cdf_of(&d1.state);
    let c2 = cdf_of(&d2.state);
    let line1 = Measure1D::new(c1.r.clone(), c1.f.clone())?;
    let offset = c1.diameter() + length + c2.diameter();
    let knots: Vec<f64> = c2.r.iter().rev().map(|r| offset - r).collect();
    let values: Vec<f64> = c2.f.iter().rev().map(|g| 1.0 - g).collect();
    let line2 = Measure1D::new(knots, values)?;
    let cost = total_cost_1d(&line1, &line2, h);
    let decomposition = match h {
        ConvexCost::Linear => {
            let sum = length + f_functional(&c1) + f_functional(&c2);
            if (cost - sum).abs() > DECOMPOSITION_TOL {
                return Err(Error::FormulaMismatch { quantile: cost, cdf: sum });
            }
            Some(sum)
        }
        _ => None,
    };
    Ok(CrossCost { cost, decomposition })
}

/// Cost between two diffusions, on opposite caps through the interval or on
/// the same cap through its base.
pub fn pair_cost(a: &CapDiffusion, b: &CapDiffusion, length: f64, h: &ConvexCost) -> Result<f64> {
    if a.side == b.side {
        Ok(total_cost_1d(&a.base_measure()?, &b.base_measure()?, h))
    } else {
        Ok(cross_cost(a, b, length, h)?.cost)
    }
}

/// Allowed cost increase between samples for a solver step `dtau`.
pub fn tol_mono(dtau: f64) -> f64 {
    1e-4 + 10.0 * dtau
}

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub tau: f64,
    pub pair: usize,
    pub increase: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairSeries {
    pub label: String,
    pub cross: bool,
    pub cost: Vec<f64>,
    pub f1: Vec<f64>,
    pub f2: Vec<f64>,
    /// `-(dF1/dtau + dF2/dtau)` from the right-hand side.
    pub required_l_rate: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WsrfReport {
    pub tau: Vec<f64>,
    pub length: Vec<f64>,
    pub pairs: Vec<PairSeries>,
    pub violations: Vec<Violation>,
    pub tol_mono: f64,
    /// First sampled `tau` with `L` outside `[0, diam M1 + L0 + diam M2]`.
    pub length_exit: Option<f64>,
    /// The diffusions at the last sampled time.
    pub final_states: Vec<(CapDiffusion, CapDiffusion)>,
}

impl WsrfReport {
    /// One row per `(tau, pair)`.
    pub fn to_tsv(&self) -> String {
        let mut s = String::from(
            "tau[time]\tpair\tcost[length^p]\tF1[length]\tF2[length]\tL[length]\trequired_L_rate[length/time]\n",
        );
        for (k, tau) in self.tau.iter().enumerate() {
            for p in &self.pairs {
                let _ = writeln!(
                    s,
                    "{tau:.10e}\t{}\t{:.10e}\t{:.10e}\t{:.10e}\t{:.10e}\t{:.10e}",
                    p.label, p.cost[k], p.f1[k], p.f2[k], self.length[k], p.required_l_rate[k]
                );
            }
        }
        s
    }

    /// Structured summary: tolerance, exit time and one line per violation.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "samples = {}", self.tau.len());
        let _ = writeln!(s, "pairs = {}", self.pairs.len());
        let _ = writeln!(s, "tol_mono = {:e}", self.tol_mono);
        let _ = writeln!(s, "violations = {}", self.violations.len());
        for v in &self.violations {
            let _ = writeln!(
                s,
                "violation = tau {:.6e} pair {} increase {:.6e}",
                v.tau, self.pairs[v.pair].label, v.increase
            );
        }
        match self.length_exit {
            Some(t) => {
                let _ = writeln!(s, "length_exit_tau = {t:.6e}");
            }
            None => {
                let _ = writeln!(s, "length_exit_tau = none");
            }
        }
        s
    }
}

/// Advances every pair with the cap solvers (steps of at most `dtau`),
/// samples the pair costs on `tau_grid` and flags increases above
/// `tol_mono(dtau)`.
pub fn wsrf_monitor(
    space: &GluedSpace,
    pairs: &[(CapDiffusion, CapDiffusion)],
    h: &ConvexCost,
    tau_grid: &[f64],
    dtau: f64,
) -> Result<WsrfReport> {
    if tau_grid.is_empty() || tau_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Config("tau grid must be non-empty and increasing".into()));
    }
    if tau_grid[tau_grid.len() - 1] > space.tau_max() * (1.0 + 1e-12) {
        return Err(Error::Config(format!(
            "tau grid ends at {} beyond the caps' window {}",
            tau_grid[tau_grid.len() - 1],
            space.tau_max()
        )));
    }
    let tol = tol_mono(dtau);
    let mut states: Vec<(CapDiffusion, CapDiffusion)> = pairs.to_vec();
    let mut series: Vec<PairSeries> = pairs
        .iter()
        .enumerate()
        .map(|(i, (a, b))| PairSeries {
            label: format!("{}{}-{}{}", a.side.label(), i, b.side.label(), i),
            cross: a.side != b.side,
            cost: vec![],
            f1: vec![],
            f2: vec![],
            required_l_rate: vec![],
        })
        .collect();
    let bound0 = {
        let s0 = space.slice(tau_grid[0]);
        s0.diameter(Side::First) + space.length.initial() + s0.diameter(Side::Second)
    };
    let mut lengths = Vec::with_capacity(tau_grid.len());
    let mut violations = Vec::new();
    let mut exit = None;
    for (k, &tau) in tau_grid.iter().enumerate() {
        for (a, b) in states.iter_mut() {
            a.state = space.cap(a.side).advance(&a.state, tau, dtau)?;
            b.state = space.cap(b.side).advance(&b.state, tau, dtau)?;
        }
        let f_now: Vec<(f64, f64)> = states.iter().map(|(a, b)| (a.f_value(), b.f_value())).collect();
        let l = match &space.length {
            LengthLaw::Compensating { l0, slack } => {
                if k == 0 {
                    *l0
                } else {
                    let prev = &series[0];
                    let df = (f_now[0].0 - prev.f1[k - 1]) + (f_now[0].1 - prev.f2[k - 1]);
                    lengths[k - 1] - df - slack * (tau - tau_grid[k - 1])
                }
            }
            law => law.at(tau),
        };
        lengths.push(l);
        if exit.is_none() && !(0.0..=bound0).contains(&l) {
            exit = Some(tau);
        }
        for (i, (a, b)) in states.iter().enumerate() {
            let cost = pair_cost(a, b, l.max(0.0), h)?;
            let s = &mut series[i];
            if let Some(&prev) = s.cost.last() {
                if cost - prev > tol {
                    violations.push(Violation { tau, pair: i, increase: cost - prev });
                }
            }
            s.cost.push(cost);
            s.f1.push(f_now[i].0);
            s.f2.push(f_now[i].1);
            s.required_l_rate.push(-(df_dtau_rhs(&a.state) + df_dtau_rhs(&b.state)));
        }
    }
    Ok(WsrfReport {
        tau: tau_grid.to_vec(),
        length: lengths,
        pairs: series,
        violations,
        tol_mono: tol,
        length_exit: exit,
        final_states: states,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Verdict {
    SinglePointConsistent,
    /// Largest certified ladder value and the backward time it was certified at.
    IntervalContradiction { n: f64, tau0: f64 },
}

/// One certified rung: at `tau0` both caps carry concentrated measures whose
/// `dF/dtau` exceed `n`, so `required_L_rate < -2n`.
#[derive(Clone, Debug)]
pub struct LadderEntry {
    pub n: f64,
    pub tau0: f64,
    pub required_l_rate: f64,
    pub caps: [Certified; 2],
}

#[derive(Clone, Debug)]
pub struct Classification {
    pub verdict: Verdict,
    pub ladder: Vec<LadderEntry>,
    /// Backward-time window over which the ladder was certified.
    pub window: f64,
    /// `2 N window` for the top rung: how much `L` must shrink over the window.
    pub implied_growth: f64,
    pub diameter_bound: f64,
    pub diameter_contradiction: bool,
    pub monitor_violations: usize,
    pub note: String,
}

impl Classification {
    pub fn summary(&self) -> String {
        let mut s = String::new();
        match self.verdict {
            Verdict::SinglePointConsistent => {
                let _ = writeln!(s, "verdict = SinglePointConsistent");
            }
            Verdict::IntervalContradiction { n, tau0 } => {
                let _ = writeln!(s, "verdict = IntervalContradiction");
                let _ = writeln!(s, "certified_n = {n}");
                let _ = writeln!(s, "tau0 = {tau0:e}");
            }
        }
        for e in &self.ladder {
            let _ = writeln!(
                s,
                "ladder = N {} tau0 {:.4e} required_L_rate {:.6e} eps {:.4e} {:.4e}",
                e.n, e.tau0, e.required_l_rate, e.caps[0].params.eps, e.caps[1].params.eps
            );
        }
        let _ = writeln!(s, "window = {:e}", self.window);
        let _ = writeln!(s, "implied_growth = {:e}", self.implied_growth);
        let _ = writeln!(s, "diameter_bound = {:e}", self.diameter_bound);
        let _ = writeln!(s, "diameter_contradiction = {}", self.diameter_contradiction);
        let _ = writeln!(s, "monitor_violations = {}", self.monitor_violations);
        if !self.note.is_empty() {
            let _ = writeln!(s, "note = {}", self.note);
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassifierConfig {
    pub ladder: Vec<f64>,
    /// Fractions of the window at which each rung is certified.
    pub tau_fractions: Vec<f64>,
    pub eps0: f64,
    pub lam: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            ladder: vec![10.0, 100.0, 1000.0],
            tau_fractions: vec![0.0, 0.5, 1.0],
            eps0: 0.05,
            lam: 0.1,
        }
    }
}

/// Single-point or interval verdict for a post-singular run. `space` is
/// `None` when the flow never pinched off a neck (smooth or extinct).
pub fn pinch_classifier(
    space: Option<&GluedSpace>,
    monitor: Option<&WsrfReport>,
    cfg: &ClassifierConfig,
) -> Result<Classification> {
    let violations = monitor.map_or(0, |m| m.violations.len());
    let trivial = |note: &str, window: f64, bound: f64| Classification {
        verdict: Verdict::SinglePointConsistent,
        ladder: vec![],
        window,
        implied_growth: 0.0,
        diameter_bound: bound,
        diameter_contradiction: false,
        monitor_violations: violations,
        note: note.to_string(),
    };
    let Some(space) = space else {
        return Ok(trivial("no neck pinched off; singular set empty or the whole sphere", 0.0, 0.0));
    };
    let window = space.tau_max();
    let l0 = space.length.initial();
    let slice0 = space.slice(0.0);
    let bound = slice0.diameter_bound();
    if l0 == 0.0 {
        return Ok(trivial("singular set is a single point; no interval to contract", window, bound));
    }
    let mut ladder = Vec::new();
    for &n in &cfg.ladder {
        for &frac in &cfg.tau_fractions {
            let tau0 = frac * window;
            let certify = |side: Side| {
                let host = space.cap(side).host_at(tau0);
                certify_concentration(&host, n, cfg.eps0, cfg.lam, tau0)
            };
            let caps = [certify(Side::First)?, certify(Side::Second)?];
            let rate = -(caps[0].rhs.total() + caps[1].rhs.total());
            if !(rate < -2.0 * n) {
                return Err(Error::InconclusiveResolution {
                    requested: n,
                    achieved: Some(-rate / 2.0),
                });
            }
            ladder.push(LadderEntry { n, tau0, required_l_rate: rate, caps });
        }
    }
    let top = ladder
        .iter()
        .map(|e| e.n)
        .fold(f64::NEG_INFINITY, f64::max);
    let tau0 = ladder.iter().find(|e| e.n == top).map_or(0.0, |e| e.tau0);
    let implied = 2.0 * top * window;
    Ok(Classification {
        verdict: Verdict::IntervalContradiction { n: top, tau0 },
        ladder,
        window,
        implied_growth: implied,
        diameter_bound: bound,
        diameter_contradiction: implied > bound,
        monitor_violations: violations,
        note: format!(
            "interval of length {l0} must shrink faster than 2N in backward time at every certified tau0"
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ricci_flow::MetricHistory;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sphere_space(l: f64) -> GluedSpace {
        let p = RadialProfile::round_sphere(2, 80, 1.0).unwrap();
        let q = RadialProfile::round_sphere(2, 60, 0.7).unwrap();
        GluedSpace::new(
            MetricHistory::frozen(p, 0.0, 0.1).unwrap(),
            MetricHistory::frozen(q, 0.0, 0.1).unwrap(),
            LengthLaw::Constant(l),
        )
        .unwrap()
    }

    #[test]
    fn five_distance_cases() {
        let x = sphere_space(0.4).slice(0.0);
        let pi = std::f64::consts::PI;
        let d = dx_distance(
            &XPoint::regular_pole(Side::First),
            &XPoint::regular_pole(Side::Second),
            &x,
        );
        assert!((d - (pi + 0.4 + 0.7 * pi)).abs() < 1e-12);
        let mid = XPoint::Interval { s: 0.5 };
        assert!((dx_distance(&mid, &XPoint::junction(&x, Side::First), &x) - 0.2).abs() < 1e-12);
        assert!((dx_distance(&XPoint::Interval { s: 0.1 }, &mid, &x) - 0.16).abs() < 1e-12);
        let near = XPoint::Cap { side: Side::First, r: 1.0, theta: 0.3 };
        let far = XPoint::Cap { side: Side::First, r: 2.0, theta: 0.3 };
        let farther = XPoint::Cap { side: Side::First, r: 2.5, theta: 0.3 };
        let d1 = dx_distance(&near, &far, &x);
        let d2 = dx_distance(&near, &farther, &x);
        assert!((d1 - 1.0).abs() < 0.03 && d2 > d1);
        let cap_to_interval = dx_distance(&far, &XPoint::Interval { s: 0.25 }, &x);
        assert!((cap_to_interval - (pi - 2.0 + 0.1)).abs() < 0.03);
    }

    #[test]
    fn triangle_inequality_on_random_triples() {
        let x = sphere_space(0.3).slice(0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let point = |rng: &mut ChaCha8Rng| match rng.gen_range(0..3) {
            0 => XPoint::Interval { s: rng.gen() },
            k => XPoint::Cap {
                side: if k == 1 { Side::First } else { Side::Second },
                r: rng.gen_range(0.0..2.2),
                theta: rng.gen_range(0.0..6.3),
            },
        };
        for _ in 0..300 {
            let (a, b, c) = (point(&mut rng), point(&mut rng), point(&mut rng));
            let ab = dx_distance(&a, &b, &x);
            assert!((ab - dx_distance(&b, &a, &x)).abs() < 1e-9);
            assert!(ab <= dx_distance(&a, &c, &x) + dx_distance(&c, &b, &x) + 1e-9);
        }
    }

    #[test]
    fn cross_cost_of_pole_masses_and_uniform_caps() {
        let space = sphere_space(0.25);
        let p1 = space.cap1.host_at(0.0);
        let p2 = space.cap2.host_at(0.0);
        // nearly all mass in the first cell at each regular pole
        let spike = |p: &RadialProfile| {
            let mut u = vec![0.0; p.m() + 1];
            u[1] = 1.0;
            DiffusionState::new(p.clone(), u, 0.0).unwrap().normalized().unwrap()
        };
        let a = CapDiffusion::new(Side::First, spike(&p1));
        let b = CapDiffusion::new(Side::Second, spike(&p2));
        let c = cross_cost(&a, &b, 0.25, &ConvexCost::Linear).unwrap();
        let total = p1.diameter() + 0.25 + p2.diameter();
        // ordered disjoint supports: the cost is the distance between the means
        let means = a.base_measure().unwrap().mean() + b.base_measure().unwrap().mean();
        assert!((c.cost - (total - means)).abs() < 1e-12);
        let cells = p1.diameter() / 80.0 + p2.diameter() / 60.0;
        assert!((c.cost - total).abs() < 2.0 * cells, "{} vs {total}", c.cost);
        let ua = CapDiffusion::new(Side::First, DiffusionState::uniform(p1, 0.0).unwrap());
        let ub = CapDiffusion::new(Side::Second, DiffusionState::uniform(p2, 0.0).unwrap());
        let c = cross_cost(&ua, &ub, 0.25, &ConvexCost::Linear).unwrap();
        assert!((c.cost - c.decomposition.unwrap()).abs() < 1e-12);
        assert!(matches!(
            cross_cost(&ua, &ua, 0.25, &ConvexCost::Linear),
            Err(Error::OverlappingSupports)
        ));
    }

    #[test]
    fn point_and_smooth_runs_are_consistent() {
        let space = sphere_space(0.0);
        let c = pinch_classifier(Some(&space), None, &ClassifierConfig::default()).unwrap();
        assert_eq!(c.verdict, Verdict::SinglePointConsistent);
        let c = pinch_classifier(None, None, &ClassifierConfig::default()).unwrap();
        assert_eq!(c.verdict, Verdict::SinglePointConsistent);
    }

    #[test]
    fn report_tsv_has_units_header() {
        let space = sphere_space(0.2);
        let p1 = space.cap1.host_at(0.0);
        let p2 = space.cap2.host_at(0.0);
        let pair = (
            CapDiffusion::new(Side::First, DiffusionState::uniform(p1, 0.0).unwrap()),
            CapDiffusion::new(Side::Second, DiffusionState::uniform(p2, 0.0).unwrap()),
        );
        let rep = wsrf_monitor(&space, &[pair], &ConvexCost::Linear, &[0.0, 0.01, 0.02], 1e-3).unwrap();
        let tsv = rep.to_tsv();
        assert!(tsv.starts_with("tau[time]\tpair\tcost"));
        assert_eq!(tsv.lines().count(), 4);
        assert!(rep.violations.is_empty());
        assert!(rep.summary().contains("violations = 0"));
    }
}
