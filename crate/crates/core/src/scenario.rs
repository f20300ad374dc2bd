//! Named scenarios, their flat `key = value` configuration, and the full
//! pipeline: flow to the singular time, continue on the caps, monitor the
//! transport costs and classify the pinch.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diffusion::{build_concentrated_measure, ConcentrationParams, DiffusionState};
use crate::error::{Error, Result};
use crate::geometry::{RadialProfile, TOL_POLE};
use crate::kv::KvDoc;
use crate::ricci_flow::{
    evolve_window, forward_evolve, run_to_singularity, FlowConfig, FlowRunReport, FlowState, Surgery,
};
use crate::spacetime::{
    dx_distance, pinch_classifier, CapDiffusion, Classification, ClassifierConfig, GluedSpace, LengthLaw,
    Side, WsrfReport, XPoint,
};
use crate::transport::ConvexCost;

#[derive(Clone, Debug, PartialEq)]
pub enum ScenarioKind {
    RoundSphere,
    Dumbbell,
    PointPinch,
    IntervalPinch,
    /// Initial profile read from a radial-profile TSV.
    Custom(PathBuf),
}

impl ScenarioKind {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "round_sphere" => Self::RoundSphere,
            "dumbbell" => Self::Dumbbell,
            "point_pinch" => Self::PointPinch,
            "interval_pinch" => Self::IntervalPinch,
            _ => match s.strip_prefix("custom:") {
                Some(path) => Self::Custom(PathBuf::from(path)),
                None => {
                    return Err(Error::Config(format!(
                        "unknown scenario {s:?} (round_sphere, dumbbell, point_pinch, interval_pinch, custom:<path>)"
                    )))
                }
            },
        })
    }

    pub fn name(&self) -> String {
        match self {
            Self::RoundSphere => "round_sphere".into(),
            Self::Dumbbell => "dumbbell".into(),
            Self::PointPinch => "point_pinch".into(),
            Self::IntervalPinch => "interval_pinch".into(),
            Self::Custom(p) => format!("custom:{}", p.display()),
        }
    }
}

/// Initial diffusion placed on a cap at the start of the monitor.
#[derive(Clone, Debug, PartialEq)]
pub enum DiffusionSpec {
    Uniform,
    /// Concentrated next to the singular pole.
    Concentrated { eps: f64, lam: f64 },
    /// Gaussian bump centred at a seeded random radius.
    Bump,
}

impl DiffusionSpec {
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |v: &str| {
            v.parse::<f64>()
                .map_err(|e| Error::Config(format!("diffusion spec {s:?}: {e}")))
        };
        match parts.as_slice() {
            ["uniform"] => Ok(Self::Uniform),
            ["bump"] => Ok(Self::Bump),
            ["concentrated", eps, lam] => Ok(Self::Concentrated { eps: num(eps)?, lam: num(lam)? }),
            _ => Err(Error::Config(format!(
                "diffusion spec {s:?} (uniform, bump, concentrated:<eps>:<lam>)"
            ))),
        }
    }

    fn render(&self) -> String {
        match self {
            Self::Uniform => "uniform".into(),
            Self::Bump => "bump".into(),
            Self::Concentrated { eps, lam } => format!("concentrated:{eps}:{lam}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub n: usize,
    pub m: usize,
    pub flow: FlowConfig,
    pub cost_spec: String,
    pub cost: ConvexCost,
    pub out: Option<PathBuf>,
    pub seed: u64,
    /// Dumbbell `psi0 = amp cos(pi x/2)(1 - depth exp(-x^2/width^2))`.
    pub amp: f64,
    pub depth: f64,
    pub width: f64,
    /// Imposed interval length for `interval_pinch`.
    pub l0: f64,
    /// Forward time the caps are continued past the singular time.
    pub window: f64,
    pub dtau: f64,
    pub samples: usize,
    pub diffusions: Vec<DiffusionSpec>,
    pub ladder: Vec<f64>,
    pub neck_ratio_max: f64,
    pub triangle_samples: usize,
}

/// Keys accepted in config files; the command-line flags use the same names.
pub const KEYS: &[&str] = &[
    "scenario", "n", "m", "dt", "t_max", "cost", "out", "seed", "amp", "depth", "width", "l0", "window",
    "dtau", "samples", "diffusions", "ladder", "neck_ratio_max", "triangle_samples", "eps_sing",
];

impl Scenario {
    pub fn new(kind: ScenarioKind) -> Self {
        let flow = FlowConfig {
            t_max: match kind {
                ScenarioKind::RoundSphere => 1.0,
                _ => 0.5,
            },
            ..FlowConfig::default()
        };
        let interval = kind == ScenarioKind::IntervalPinch;
        Self {
            kind,
            n: 2,
            m: 400,
            flow,
            cost_spec: "linear".into(),
            cost: ConvexCost::Linear,
            out: None,
            seed: 0,
            amp: 1.0,
            depth: 0.92,
            width: 0.5,
            l0: if interval { 0.3 } else { 0.0 },
            window: 0.01,
            dtau: 1e-5,
            samples: 11,
            diffusions: vec![
                DiffusionSpec::Concentrated { eps: 0.05, lam: 0.1 },
                DiffusionSpec::Uniform,
            ],
            ladder: vec![10.0, 100.0, 1000.0],
            neck_ratio_max: 0.2,
            triangle_samples: 1000,
        }
    }

    pub fn from_kv(doc: &KvDoc) -> Result<Self> {
        let kind = ScenarioKind::parse(doc.get("scenario").unwrap_or("dumbbell"))?;
        let mut s = Self::new(kind);
        for key in doc.keys() {
            if key != "scenario" {
                s.set(key, doc.get(key).unwrap_or_default())?;
            }
        }
        Ok(s)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let doc = KvDoc::parse(text).map_err(|e| Error::Config(e.to_string()))?;
        Self::from_kv(&doc)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_text(&text)
    }

    /// Applies one `key = value` override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T>
        where
            T::Err: std::fmt::Display,
        {
            v.trim()
                .parse::<T>()
                .map_err(|e| Error::Config(format!("{key} = {v:?}: {e}")))
        }
        let v = value.trim();
        match key {
            "scenario" => {
                let kind = ScenarioKind::parse(v)?;
                let fresh = Self::new(kind.clone());
                self.kind = kind;
                self.l0 = fresh.l0;
                self.flow.t_max = fresh.flow.t_max;
            }
            "n" => self.n = num(key, v)?,
            "m" => self.m = num(key, v)?,
            "dt" => self.flow.dt_init = num(key, v)?,
            "t_max" => self.flow.t_max = num(key, v)?,
            "eps_sing" => self.flow.eps_sing = num(key, v)?,
            "cost" => {
                self.cost = v.parse().map_err(|e: Error| Error::Config(e.to_string()))?;
                self.cost_spec = v.to_string();
            }
            "out" => self.out = Some(PathBuf::from(v)),
            "seed" => self.seed = num(key, v)?,
            "amp" => self.amp = num(key, v)?,
            "depth" => self.depth = num(key, v)?,
            "width" => self.width = num(key, v)?,
            "l0" => self.l0 = num(key, v)?,
            "window" => self.window = num(key, v)?,
            "dtau" => self.dtau = num(key, v)?,
            "samples" => self.samples = num(key, v)?,
            "diffusions" => {
                self.diffusions = v.split(',').map(DiffusionSpec::parse).collect::<Result<_>>()?;
            }
            "ladder" => {
                self.ladder = v.split(',').map(|x| num(key, x)).collect::<Result<_>>()?;
            }
            "neck_ratio_max" => self.neck_ratio_max = num(key, v)?,
            "triangle_samples" => self.triangle_samples = num(key, v)?,
            _ => {
                return Err(Error::Config(format!(
                    "unknown key {key:?}; known keys: {}",
                    KEYS.join(", ")
                )))
            }
        }
        self.check()
    }

    fn check(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.n < 1 {
            return bad("n must be at least 1".into());
        }
        if self.m < 16 {
            return bad(format!("m = {} is below 16", self.m));
        }
        if !(self.flow.dt_init > 0.0) || !(self.flow.t_max > 0.0) {
            return bad("dt and t_max must be positive".into());
        }
        if !(self.amp > 0.0 && self.depth > 0.0 && self.depth < 1.0 && self.width > 0.0) {
            return bad("dumbbell needs amp > 0, 0 < depth < 1, width > 0".into());
        }
        if !(self.l0 >= 0.0) || !(self.window > 0.0) || !(self.dtau > 0.0) || self.samples < 2 {
            return bad("need l0 >= 0, window > 0, dtau > 0, samples >= 2".into());
        }
        if self.diffusions.is_empty() {
            return bad("at least one diffusion spec is required".into());
        }
        if self.ladder.iter().any(|&n| !(n > 0.0)) {
            return bad("ladder values must be positive".into());
        }
        Ok(())
    }

    /// Flat `key = value` rendering that round-trips through [`Scenario::from_text`].
    pub fn to_kv(&self) -> KvDoc {
        let mut d = KvDoc::new();
        d.push("scenario", self.kind.name());
        d.push("n", self.n);
        d.push("m", self.m);
        d.push("dt", self.flow.dt_init);
        d.push("t_max", self.flow.t_max);
        d.push("eps_sing", self.flow.eps_sing);
        d.push("cost", &self.cost_spec);
        if let Some(out) = &self.out {
            d.push("out", out.display());
        }
        d.push("seed", self.seed);
        d.push("amp", self.amp);
        d.push("depth", self.depth);
        d.push("width", self.width);
        d.push("l0", self.l0);
        d.push("window", self.window);
        d.push("dtau", self.dtau);
        d.push("samples", self.samples);
        d.push(
            "diffusions",
            self.diffusions.iter().map(DiffusionSpec::render).collect::<Vec<_>>().join(","),
        );
        d.push(
            "ladder",
            self.ladder.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","),
        );
        d.push("neck_ratio_max", self.neck_ratio_max);
        d.push("triangle_samples", self.triangle_samples);
        d
    }

    pub fn initial_profile(&self) -> Result<RadialProfile> {
        match &self.kind {
            ScenarioKind::RoundSphere => RadialProfile::round_sphere(self.n, self.m, 1.0),
            ScenarioKind::Custom(path) => RadialProfile::from_tsv(&std::fs::read_to_string(path)?),
            _ => dumbbell(self.n, self.m, self.amp, self.depth, self.width),
        }
    }
}

/// `psi = amp cos(pi x/2)(1 - depth exp(-x^2/width^2))`, `phi = amp pi/2`.
pub fn dumbbell(n: usize, m: usize, amp: f64, depth: f64, width: f64) -> Result<RadialProfile> {
    RadialProfile::from_fns(
        n,
        m,
        |_| amp * PI / 2.0,
        |x| amp * (PI / 2.0 * x).cos() * (1.0 - depth * (-x * x / (width * width)).exp()),
    )
}

/// Smallest interior local minimum of `psi` over its maximum, if there is a neck.
pub fn neck_ratio(p: &RadialProfile) -> Option<f64> {
    let psi = p.psi();
    let necks = (1..psi.len() - 1)
        .filter(|&i| psi[i] < psi[i - 1] && psi[i] <= psi[i + 1])
        .map(|i| psi[i]);
    necks.fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.min(v))))
        .map(|v| v / p.max_psi())
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Validation {
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
    pub notes: Vec<String>,
}

impl Validation {
    pub fn ok(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for e in &self.errors {
            let _ = writeln!(s, "error: {e}");
        }
        for w in &self.warnings {
            let _ = writeln!(s, "warning: {w}");
        }
        for n in &self.notes {
            let _ = writeln!(s, "note: {n}");
        }
        if self.ok() {
            s.push_str("OK\n");
        }
        s
    }
}

/// Profile invariants, pole conditions and the neck ratio. Reads only.
pub fn validate(s: &Scenario) -> Validation {
    let mut v = Validation::default();
    let p = match s.initial_profile() {
        Ok(p) => p,
        Err(e) => {
            v.errors.push(e.to_string());
            return v;
        }
    };
    if let Err(e) = p.check_smooth_sphere(TOL_POLE) {
        v.errors.push(e.to_string());
    }
    let (s0, s1) = p.pole_slopes();
    v.notes.push(format!("pole slopes |psi_r| = {:.4}, {:.4}", s0.abs(), s1.abs()));
    match neck_ratio(&p) {
        Some(r) if r > s.neck_ratio_max => v.warnings.push(format!(
            "not sufficiently pinched: neck ratio {r:.3} exceeds {}",
            s.neck_ratio_max
        )),
        Some(r) => v.notes.push(format!("neck ratio {r:.3}")),
        None => v.notes.push("no neck".into()),
    }
    v
}

/// Everything a run produced.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub scenario: Scenario,
    pub initial: RadialProfile,
    pub report: FlowRunReport,
    pub final_state: FlowState,
    pub surgery: Option<Surgery>,
    pub space: Option<GluedSpace>,
    pub monitor: Option<WsrfReport>,
    /// Initial monitor pairs.
    pub pairs: Vec<(CapDiffusion, CapDiffusion)>,
    pub classification: Classification,
    /// Failures among the sampled triples, and how many were sampled.
    pub triangle: (usize, usize),
    pub note: String,
}

fn initial_diffusion(
    spec: &DiffusionSpec,
    side: Side,
    host: &RadialProfile,
    rng: &mut ChaCha8Rng,
) -> Result<CapDiffusion> {
    let state = match spec {
        DiffusionSpec::Uniform => DiffusionState::uniform(host.clone(), 0.0)?,
        DiffusionSpec::Concentrated { eps, lam } => {
            let p = ConcentrationParams::derive(host, *eps, *lam)?;
            build_concentrated_measure(host, &p, 0.0)?
        }
        DiffusionSpec::Bump => {
            let d = host.diameter();
            let c = rng.gen_range(0.2..0.6) * d;
            let w = 0.1 * d;
            DiffusionState::from_radial_fn(host.clone(), 0.0, |r| (-(r - c) * (r - c) / (w * w)).exp())?
        }
    };
    Ok(CapDiffusion::new(side, state))
}

/// Pairs for the monitor: across the interval when it has length, otherwise
/// within each cap.
fn monitor_pairs(s: &Scenario, space: &GluedSpace, rng: &mut ChaCha8Rng) -> Result<Vec<(CapDiffusion, CapDiffusion)>> {
    let host1 = space.cap1.host_at(0.0);
    let host2 = space.cap2.host_at(0.0);
    let mut pairs = Vec::new();
    if space.length.initial() > 0.0 {
        for spec in &s.diffusions {
            pairs.push((
                initial_diffusion(spec, Side::First, &host1, rng)?,
                initial_diffusion(spec, Side::Second, &host2, rng)?,
            ));
        }
    } else {
        let second = s.diffusions.get(1).cloned().unwrap_or(DiffusionSpec::Bump);
        for (side, host) in [(Side::First, &host1), (Side::Second, &host2)] {
            pairs.push((
                initial_diffusion(&s.diffusions[0], side, host, rng)?,
                initial_diffusion(&second, side, host, rng)?,
            ));
        }
    }
    Ok(pairs)
}

fn random_point(rng: &mut ChaCha8Rng, d1: f64, d2: f64) -> XPoint {
    match rng.gen_range(0..3) {
        0 => XPoint::Interval { s: rng.gen() },
        1 => XPoint::Cap { side: Side::First, r: rng.gen_range(0.0..=d1), theta: rng.gen_range(0.0..2.0 * PI) },
        _ => XPoint::Cap { side: Side::Second, r: rng.gen_range(0.0..=d2), theta: rng.gen_range(0.0..2.0 * PI) },
    }
}

/// Runs the pipeline without touching the filesystem (except a custom
/// profile read).
pub fn run(s: &Scenario) -> Result<RunOutcome> {
    s.check()?;
    let initial = s.initial_profile()?;
    initial.check_smooth_sphere(TOL_POLE)?;
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let (report, final_state) = match run_to_singularity(&FlowState::new(initial.clone()), &s.flow) {
        Ok(v) => v,
        Err(Error::NoSingularity { outcome, .. }) => *outcome,
        Err(e) => return Err(e),
    };
    let cls_cfg = ClassifierConfig { ladder: s.ladder.clone(), ..ClassifierConfig::default() };
    let done = |surgery, note: String, classification| RunOutcome {
        scenario: s.clone(),
        initial: initial.clone(),
        report: report.clone(),
        final_state: final_state.clone(),
        surgery,
        space: None,
        monitor: None,
        pairs: vec![],
        classification,
        triangle: (0, 0),
        note,
    };
    let Some(t_sing) = report.singular_time else {
        let c = pinch_classifier(None, None, &cls_cfg)?;
        return Ok(done(None, "no singularity before t_max".into(), c));
    };
    let surgery = match forward_evolve(&final_state) {
        Ok(sg) => sg,
        Err(Error::UnsupportedTopology(why)) => {
            let c = pinch_classifier(None, None, &cls_cfg)?;
            return Ok(done(None, format!("no neck to continue through: {why}"), c));
        }
        Err(e) => return Err(e),
    };
    let l0 = match s.kind {
        ScenarioKind::IntervalPinch => s.l0,
        _ => surgery.l0,
    };
    let t_end = t_sing + s.window;
    let h1 = evolve_window(&surgery.cap1, t_end, &s.flow)?;
    let h2 = evolve_window(&surgery.cap2, t_end, &s.flow)?;
    let space = GluedSpace::new(h1, h2, LengthLaw::Constant(l0))?;
    let pairs = monitor_pairs(s, &space, &mut rng)?;
    let tau_end = space.tau_max();
    let grid: Vec<f64> = (0..s.samples)
        .map(|k| tau_end * k as f64 / (s.samples - 1) as f64)
        .collect();
    let monitor = crate::spacetime::wsrf_monitor(&space, &pairs, &s.cost, &grid, s.dtau)?;
    let classification = pinch_classifier(Some(&space), Some(&monitor), &cls_cfg)?;

    let slice = space.slice(0.0);
    let (d1, d2) = (slice.diameter(Side::First), slice.diameter(Side::Second));
    let mut failures = 0;
    for _ in 0..s.triangle_samples {
        let a = random_point(&mut rng, d1, d2);
        let b = random_point(&mut rng, d1, d2);
        let c = random_point(&mut rng, d1, d2);
        let ab = dx_distance(&a, &b, &slice);
        let symmetric = (ab - dx_distance(&b, &a, &slice)).abs() <= 1e-9;
        let triangle = ab <= dx_distance(&a, &c, &slice) + dx_distance(&c, &b, &slice) + 1e-9;
        if !(symmetric && triangle) {
            failures += 1;
        }
    }
    Ok(RunOutcome {
        scenario: s.clone(),
        initial,
        report,
        final_state,
        surgery: Some(surgery),
        space: Some(space),
        monitor: Some(monitor),
        pairs,
        classification,
        triangle: (failures, s.triangle_samples),
        note: if l0 > 0.0 && s.kind == ScenarioKind::IntervalPinch {
            format!("interval of length {l0} imposed at the pinch")
        } else {
            String::new()
        },
    })
}

impl RunOutcome {
    pub fn summary(&self) -> KvDoc {
        let mut d = self.scenario.to_kv();
        let r = &self.report;
        d.push("singular_time", r.singular_time.map_or("none".into(), |t| format!("{t:.10e}")));
        d.push(
            "singular_set",
            r.singular_set
                .iter()
                .map(|c| format!("{}..{}", c.start, c.end))
                .collect::<Vec<_>>()
                .join(","),
        );
        d.push("type_one_sup", format!("{:.6e}", r.type_one_sup));
        d.push("flow_steps", r.steps);
        d.push("sturm_violations", r.sturm_violations().len());
        if let Some(sg) = &self.surgery {
            d.push("surgery_l0", format!("{:.6e}", sg.l0));
            d.push("cap1_diameter", format!("{:.6e}", sg.cap1.profile.diameter()));
            d.push("cap2_diameter", format!("{:.6e}", sg.cap2.profile.diameter()));
        }
        if let Some(space) = &self.space {
            d.push("interval_length", space.length.initial());
            d.push("tau_window", format!("{:.6e}", space.tau_max()));
        }
        if let Some(m) = &self.monitor {
            d.push("monitor_pairs", m.pairs.len());
            d.push("monitor_violations", m.violations.len());
            d.push("tol_mono", format!("{:e}", m.tol_mono));
        }
        if self.triangle.1 > 0 {
            d.push("triangle_failures", format!("{}/{}", self.triangle.0, self.triangle.1));
        }
        for line in self.classification.summary().lines() {
            if let Some((k, v)) = line.split_once(" = ") {
                d.push(&format!("pinch_{k}"), v);
            }
        }
        if !self.note.is_empty() {
            d.push("run_note", &self.note);
        }
        d
    }

    /// Writes every artifact under `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let prof = dir.join("profiles");
        let diff = dir.join("diffusions");
        std::fs::create_dir_all(&prof)?;
        std::fs::create_dir_all(&diff)?;
        std::fs::write(dir.join("summary.txt"), self.summary().render())?;
        std::fs::write(dir.join("flow_report.txt"), self.report.to_text())?;
        std::fs::write(prof.join("initial.tsv"), self.initial.to_tsv())?;
        std::fs::write(prof.join("final.tsv"), self.final_state.profile.to_tsv())?;
        if let Some(space) = &self.space {
            for (name, cap) in [("cap1", &space.cap1), ("cap2", &space.cap2)] {
                std::fs::write(prof.join(format!("{name}_start.tsv")), cap.history().first().to_tsv())?;
                std::fs::write(prof.join(format!("{name}_end.tsv")), cap.history().last().to_tsv())?;
            }
        }
        let mut wsrf = String::new();
        if let Some(m) = &self.monitor {
            wsrf = m.to_tsv();
            std::fs::write(dir.join("wsrf_summary.txt"), m.summary())?;
            for (i, ((a0, b0), (a1, b1))) in self.pairs.iter().zip(&m.final_states).enumerate() {
                for (tag, d) in [("a_start", a0), ("b_start", b0), ("a_end", a1), ("b_end", b1)] {
                    std::fs::write(
                        diff.join(format!("pair{i}_{tag}_{}.tsv", d.side.label())),
                        d.state.to_tsv(),
                    )?;
                }
            }
        }
        if wsrf.is_empty() {
            wsrf = "tau[time]\tpair\tcost[length^p]\tF1[length]\tF2[length]\tL[length]\trequired_L_rate[length/time]\n"
                .into();
        }
        std::fs::write(dir.join("wsrf_report.tsv"), wsrf)?;
        Ok(())
    }
}

/// Independent runs with `key` set to each of `values`, run in parallel.
/// Each run writes under `<out>/<key>=<value>` when the base has an output
/// directory.
pub fn sweep(base: &Scenario, key: &str, values: &[String]) -> Result<Vec<(String, Result<KvDoc>)>> {
    let mut scenarios = Vec::with_capacity(values.len());
    for v in values {
        let mut s = base.clone();
        s.set(key, v)?;
        if let Some(out) = &base.out {
            s.out = Some(out.join(format!("{key}={v}")));
        }
        scenarios.push((v.clone(), s));
    }
    let results = std::thread::scope(|scope| {
        let handles: Vec<_> = scenarios
            .iter()
            .map(|(v, s)| {
                scope.spawn(move || {
                    let outcome = run(s)?;
                    if let Some(dir) = &s.out {
                        outcome.write(dir)?;
                    }
                    Ok::<_, Error>((v.clone(), outcome.summary()))
                })
            })
            .collect();
        handles
            .into_iter()
            .zip(&scenarios)
            .map(|(h, (v, _))| match h.join() {
                Ok(Ok((_, doc))) => (v.clone(), Ok(doc)),
                Ok(Err(e)) => (v.clone(), Err(e)),
                Err(_) => (v.clone(), Err(Error::StepRejected("run panicked".into()))),
            })
            .collect()
    });
    Ok(results)
}
