//! Experiment configuration: strict JSON loading, defaults, canonical echo and hash.

use std::fmt;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::fields::{Issues, Section};
use crate::error::{DqmError, Result};
use crate::grid::{gaussian_packet, Boundary, Grid1D, Units};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    DoubleSlit,
    FreePacket,
    Protect,
    Collapse,
    Planck,
    Sample,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::DoubleSlit,
        ExperimentKind::FreePacket,
        ExperimentKind::Protect,
        ExperimentKind::Collapse,
        ExperimentKind::Planck,
        ExperimentKind::Sample,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::DoubleSlit => "double_slit",
            ExperimentKind::FreePacket => "free_packet",
            ExperimentKind::Protect => "protect",
            ExperimentKind::Collapse => "collapse",
            ExperimentKind::Planck => "planck",
            ExperimentKind::Sample => "sample",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
    pub boundary: Boundary,
    pub dt: f64,
}

impl GridConfig {
    pub const fn periodic(x_min: f64, x_max: f64, n_points: usize, dt: f64) -> Self {
        Self {
            x_min,
            x_max,
            n_points,
            boundary: Boundary::Periodic,
            dt,
        }
    }

    pub const fn hard_wall(x_min: f64, x_max: f64, n_points: usize, dt: f64) -> Self {
        Self {
            x_min,
            x_max,
            n_points,
            boundary: Boundary::HardWall,
            dt,
        }
    }

    pub fn build(&self) -> Result<Grid1D> {
        Grid1D::new(self.x_min, self.x_max, self.n_points, self.boundary, self.dt)
    }

    fn read(s: &Section, default: GridConfig, issues: &Issues) -> (GridConfig, Option<Grid1D>) {
        let boundary = match s.choice(
            "boundary",
            match default.boundary {
                Boundary::Periodic => "periodic",
                Boundary::HardWall => "hard_wall",
            },
            &["periodic", "hard_wall"],
        ) {
            "periodic" => Boundary::Periodic,
            _ => Boundary::HardWall,
        };
        let n_points = s.opt_u64("n_points").map(|n| n as usize).unwrap_or(default.n_points);
        let cfg = GridConfig {
            x_min: s.f64_or("x_min", default.x_min),
            x_max: s.f64_or("x_max", default.x_max),
            n_points,
            boundary,
            dt: s.f64_or("dt", default.dt),
        };
        s.finish();
        match cfg.build() {
            Ok(g) => (cfg, Some(g)),
            Err(e) => {
                issues.push(s.path_of("").trim_end_matches('.').to_string(), e.to_string());
                (cfg, None)
            }
        }
    }
}

fn read_units(s: &Section, issues: &Issues) -> Units {
    let hbar = s.f64_or("hbar", 1.0);
    let mass = s.f64_or("mass", 1.0);
    s.finish();
    match Units::new(hbar, mass) {
        Ok(u) => u,
        Err(e) => {
            issues.push("units", e.to_string());
            Units::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstantsChoice {
    Natural,
    Si,
}

impl ConstantsChoice {
    pub fn constants(self) -> crate::constants::PhysicalConstants {
        match self {
            ConstantsChoice::Natural => crate::constants::PhysicalConstants::natural(),
            ConstantsChoice::Si => crate::constants::PhysicalConstants::si(),
        }
    }

    fn read(s: &Section) -> Self {
        match s.choice("constants", "natural", &["natural", "si"]) {
            "si" => ConstantsChoice::Si,
            _ => ConstantsChoice::Natural,
        }
    }
}

// ---- double slit ----

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlitState {
    pub slit_separation: f64,
    pub slit_width: f64,
    pub momentum: f64,
    pub amplitude_a: f64,
    pub amplitude_b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlitSchedule {
    pub screen_time: f64,
    pub sample_every: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sampling {
    pub draws: u64,
    pub bins: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DoubleSlitConfig {
    pub grid: GridConfig,
    pub units: Units,
    pub state: SlitState,
    pub schedule: SlitSchedule,
    pub sampling: Sampling,
}

impl DoubleSlitConfig {
    pub const DEFAULT_GRID: GridConfig = GridConfig::periodic(-320.0, 320.0, 4096, 0.02);
}

// ---- free packet ----

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PacketState {
    pub x0: f64,
    pub sigma: f64,
    pub p0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PacketSchedule {
    pub t_final: f64,
    pub record_every: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FreePacketConfig {
    pub grid: GridConfig,
    pub units: Units,
    pub state: PacketState,
    pub schedule: PacketSchedule,
}

impl FreePacketConfig {
    pub const DEFAULT_GRID: GridConfig = GridConfig::periodic(-30.0, 30.0, 8192, 0.005);
}

// ---- protective tomography ----

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtectedKind {
    Well,
    Ring,
    DoubleWell,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProtectState {
    pub kind: ProtectedKind,
    /// Well level (1 = ground state).
    pub level: u64,
    /// Ring wavenumber index.
    pub k: i64,
    pub barrier_height: f64,
    pub barrier_width: f64,
    /// Extra depth of the left well.
    pub asymmetry: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProtectSchedule {
    pub regions: u64,
    pub duration: f64,
    pub ramp_fraction: f64,
    pub pointer_momentum: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProtectConfig {
    pub grid: GridConfig,
    pub units: Units,
    pub state: ProtectState,
    pub schedule: ProtectSchedule,
}

impl ProtectConfig {
    pub fn default_grid(kind: ProtectedKind) -> GridConfig {
        match kind {
            ProtectedKind::Well => GridConfig::hard_wall(0.0, 1.0, 127, 2e-3),
            ProtectedKind::Ring => GridConfig::periodic(0.0, 1.0, 128, 2e-3),
            ProtectedKind::DoubleWell => GridConfig::hard_wall(-1.0, 1.0, 256, 0.01),
        }
    }

    fn default_schedule(kind: ProtectedKind) -> (u64, f64) {
        match kind {
            ProtectedKind::Well | ProtectedKind::Ring => (10, 16.0),
            ProtectedKind::DoubleWell => (8, 100.0),
        }
    }
}

// ---- collapse ----

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CollapseStateConfig {
    /// Energy gap in units of the Planck energy.
    pub delta_e: f64,
    pub rho0: f64,
    pub constants: ConstantsChoice,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CollapseSchedule {
    pub trials: u64,
    pub max_steps: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollapseConfig {
    pub state: CollapseStateConfig,
    pub schedule: CollapseSchedule,
}

// ---- planck ----

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanckStateConfig {
    pub constants: ConstantsChoice,
    /// Lengths in units of the Planck length.
    pub lengths: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanckConfig {
    pub state: PlanckStateConfig,
}

impl PlanckConfig {
    /// Six decades from `L_p` at four points per decade.
    pub fn default_lengths() -> Vec<f64> {
        (0..=24).map(|i| 10f64.powf(i as f64 / 4.0)).collect()
    }
}

// ---- sampling ----

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SampledKind {
    Well,
    Uniform,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleState {
    pub kind: SampledKind,
    pub level: u64,
    pub x0: f64,
    pub sigma: f64,
    pub p0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleSchedule {
    /// Number of trajectory jumps.
    pub jumps: u64,
    pub sample_every: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleConfig {
    pub grid: GridConfig,
    pub units: Units,
    pub state: SampleState,
    pub schedule: SampleSchedule,
    pub sampling: Sampling,
}

impl SampleConfig {
    pub fn default_grid(kind: SampledKind) -> GridConfig {
        match kind {
            SampledKind::Well => GridConfig::hard_wall(0.0, 1.0, 127, 1e-3),
            SampledKind::Uniform => GridConfig::periodic(0.0, 1.0, 64, 1e-3),
            SampledKind::Gaussian => GridConfig::periodic(-10.0, 10.0, 512, 0.01),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ExperimentParams {
    DoubleSlit(DoubleSlitConfig),
    FreePacket(FreePacketConfig),
    Protect(ProtectConfig),
    Collapse(CollapseConfig),
    Planck(PlanckConfig),
    Sample(SampleConfig),
}

impl ExperimentParams {
    pub fn kind(&self) -> ExperimentKind {
        match self {
            ExperimentParams::DoubleSlit(_) => ExperimentKind::DoubleSlit,
            ExperimentParams::FreePacket(_) => ExperimentKind::FreePacket,
            ExperimentParams::Protect(_) => ExperimentKind::Protect,
            ExperimentParams::Collapse(_) => ExperimentKind::Collapse,
            ExperimentParams::Planck(_) => ExperimentKind::Planck,
            ExperimentParams::Sample(_) => ExperimentKind::Sample,
        }
    }
}

/// A validated experiment with every default filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub output_path: Option<String>,
    pub params: ExperimentParams,
    /// Raw `sweep` section, if any.
    pub sweep: Option<Value>,
}

impl ExperimentConfig {
    pub fn kind(&self) -> ExperimentKind {
        self.params.kind()
    }

    /// Canonical config (defaults filled, sweep and output path dropped).
    pub fn echo(&self) -> Value {
        let mut v = serde_json::to_value(&self.params).expect("config serializes");
        let map = v.as_object_mut().expect("params serialize to an object");
        map.insert("experiment".into(), Value::from(self.kind().name()));
        map.insert("seed".into(), Value::from(self.seed));
        v
    }

    /// SHA-256 of the canonical echo, hex encoded.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(&self.echo()).expect("echo serializes");
        Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Parses and validates a JSON config, reporting every violation at once.
pub fn load_config(text: &str) -> Result<ExperimentConfig> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| DqmError::Config(vec![crate::error::ConfigIssue::new("$", format!("invalid JSON: {e}"))]))?;
    config_from_value(&value)
}

pub fn config_from_value(value: &Value) -> Result<ExperimentConfig> {
    let issues = Issues::default();
    let root = Section::root(value, &issues);

    let kind = match root.opt_str("experiment") {
        None => {
            if !root.has("experiment") {
                issues.push("experiment", "missing (one of: double_slit, free_packet, protect, collapse, planck, sample)");
            }
            None
        }
        Some(name) => {
            let k = ExperimentKind::from_name(name);
            if k.is_none() {
                issues.push("experiment", format!("unknown experiment \"{name}\""));
            }
            k
        }
    };
    let seed = root.opt_u64("seed");
    if seed.is_none() && !root.has("seed") {
        issues.push("seed", "missing (a seed is required for reproducibility)");
    }
    let output_path = root.opt_str("output_path").map(str::to_string);
    let sweep = root.has("sweep").then(|| {
        root.accept("sweep");
        value["sweep"].clone()
    });

    let params = kind.map(|k| read_params(k, &root, &issues));
    root.finish();

    match (params, seed) {
        (Some(params), Some(seed)) if issues.is_empty() => Ok(ExperimentConfig {
            seed,
            output_path,
            params,
            sweep,
        }),
        _ => Err(DqmError::Config(issues.into_vec())),
    }
}

fn positive(x: f64) -> bool {
    x > 0.0
}

fn read_params(kind: ExperimentKind, root: &Section, issues: &Issues) -> ExperimentParams {
    match kind {
        ExperimentKind::DoubleSlit => {
            let (grid, built) = GridConfig::read(&root.section("grid"), DoubleSlitConfig::DEFAULT_GRID, issues);
            let units = read_units(&root.section("units"), issues);
            let s = root.section("state");
            let state = SlitState {
                slit_separation: s.f64_where("slit_separation", 20.0, positive, "must be positive"),
                slit_width: s.f64_where("slit_width", 1.0, positive, "must be positive"),
                momentum: s.f64_or("momentum", 0.0),
                amplitude_a: s.f64_where("amplitude_a", 1.0, |a| a >= 0.0, "must be non-negative"),
                amplitude_b: s.f64_where("amplitude_b", 1.0, |a| a >= 0.0, "must be non-negative"),
            };
            if state.amplitude_a == 0.0 && state.amplitude_b == 0.0 {
                issues.push("state", "at least one slit amplitude must be non-zero");
            }
            s.finish();
            if let Some(g) = built {
                for (name, x0) in [("a", -0.5 * state.slit_separation), ("b", 0.5 * state.slit_separation)] {
                    if let Err(e) = gaussian_packet(&g, x0, state.slit_width, state.momentum, units) {
                        issues.push(format!("state (slit {name})"), e.to_string());
                    }
                }
            }
            let sc = root.section("schedule");
            let schedule = SlitSchedule {
                screen_time: sc.f64_where("screen_time", 100.0, positive, "must be positive"),
                sample_every: sc.u64_where("sample_every", 10, |n| n >= 1, "must be at least 1"),
            };
            sc.finish();
            let sampling = read_sampling(&root.section("sampling"), 100_000, 512);
            ExperimentParams::DoubleSlit(DoubleSlitConfig {
                grid,
                units,
                state,
                schedule,
                sampling,
            })
        }
        ExperimentKind::FreePacket => {
            let (grid, built) = GridConfig::read(&root.section("grid"), FreePacketConfig::DEFAULT_GRID, issues);
            let units = read_units(&root.section("units"), issues);
            let s = root.section("state");
            let state = PacketState {
                x0: s.f64_or("x0", -3.0),
                sigma: s.f64_where("sigma", 1.0, positive, "must be positive"),
                p0: s.f64_or("p0", 1.0),
            };
            s.finish();
            if let Some(g) = built {
                if let Err(e) = gaussian_packet(&g, state.x0, state.sigma, state.p0, units) {
                    issues.push("state", e.to_string());
                }
            }
            let sc = root.section("schedule");
            // default: the time at which the packet width doubles
            let doubling = 2.0 * 3f64.sqrt() * units.mass * state.sigma * state.sigma / units.hbar;
            let schedule = PacketSchedule {
                t_final: sc.f64_where("t_final", doubling, positive, "must be positive"),
                record_every: sc.u64_where("record_every", 10, |n| n >= 1, "must be at least 1"),
            };
            sc.finish();
            ExperimentParams::FreePacket(FreePacketConfig {
                grid,
                units,
                state,
                schedule,
            })
        }
        ExperimentKind::Protect => {
            let s = root.section("state");
            let kind = match s.choice("kind", "well", &["well", "ring", "double_well"]) {
                "ring" => ProtectedKind::Ring,
                "double_well" => ProtectedKind::DoubleWell,
                _ => ProtectedKind::Well,
            };
            let state = ProtectState {
                kind,
                level: s.u64_where("level", 1, |n| n >= 1, "must be at least 1"),
                k: s.opt_i64("k").unwrap_or(2),
                barrier_height: s.f64_where("barrier_height", 50.0, |v| v >= 0.0, "must be non-negative"),
                barrier_width: s.f64_where("barrier_width", 0.2, positive, "must be positive"),
                asymmetry: s.f64_or("asymmetry", 0.0),
            };
            s.finish();
            let (grid, _) = GridConfig::read(&root.section("grid"), ProtectConfig::default_grid(kind), issues);
            let units = read_units(&root.section("units"), issues);
            let (regions, duration) = ProtectConfig::default_schedule(kind);
            let sc = root.section("schedule");
            let schedule = ProtectSchedule {
                regions: sc.u64_where("regions", regions, |n| n >= 1 && n as usize <= grid.n_points, "must be between 1 and the number of grid points"),
                duration: sc.f64_where("duration", duration, positive, "must be positive"),
                ramp_fraction: sc.f64_where("ramp_fraction", 0.2, |r| r > 0.0 && r < 0.5, "must lie in (0, 0.5)"),
                pointer_momentum: sc.opt_f64("pointer_momentum"),
            };
            if schedule.pointer_momentum.is_some_and(|p| p < 0.0) {
                issues.push("schedule.pointer_momentum", "must be non-negative");
            }
            sc.finish();
            ExperimentParams::Protect(ProtectConfig {
                grid,
                units,
                state,
                schedule,
            })
        }
        ExperimentKind::Collapse => {
            let s = root.section("state");
            let state = CollapseStateConfig {
                delta_e: s.f64_where("delta_e", 0.01, |d| d > 0.0 && d <= 1.0, "must lie in (0, 1] (units of the Planck energy)"),
                rho0: s.f64_where("rho0", 0.5, |r| (0.0..=1.0).contains(&r), "must lie in [0, 1]"),
                constants: ConstantsChoice::read(&s),
            };
            s.finish();
            let sc = root.section("schedule");
            let default_max = crate::collapse::default_max_steps(state.rho0, state.delta_e);
            let schedule = CollapseSchedule {
                trials: sc.u64_where("trials", 10_000, |n| n >= 100, "must be at least 100"),
                max_steps: sc.u64_where("max_steps", default_max, |n| n >= 1, "must be at least 1"),
            };
            sc.finish();
            ExperimentParams::Collapse(CollapseConfig { state, schedule })
        }
        ExperimentKind::Planck => {
            let s = root.section("state");
            let constants = ConstantsChoice::read(&s);
            let lengths = s.opt_f64_list("lengths").unwrap_or_else(PlanckConfig::default_lengths);
            if lengths.iter().any(|&l| l <= 0.0) {
                issues.push("state.lengths", "lengths must be positive");
            }
            if lengths.len() < 2 {
                issues.push("state.lengths", "need at least two lengths for the exponent fit");
            }
            s.finish();
            ExperimentParams::Planck(PlanckConfig {
                state: PlanckStateConfig { constants, lengths },
            })
        }
        ExperimentKind::Sample => {
            let s = root.section("state");
            let kind = match s.choice("kind", "well", &["well", "uniform", "gaussian"]) {
                "uniform" => SampledKind::Uniform,
                "gaussian" => SampledKind::Gaussian,
                _ => SampledKind::Well,
            };
            let state = SampleState {
                kind,
                level: s.u64_where("level", 1, |n| n >= 1, "must be at least 1"),
                x0: s.f64_or("x0", 0.0),
                sigma: s.f64_where("sigma", 1.0, positive, "must be positive"),
                p0: s.f64_or("p0", 0.0),
            };
            s.finish();
            let (grid, _) = GridConfig::read(&root.section("grid"), SampleConfig::default_grid(kind), issues);
            let units = read_units(&root.section("units"), issues);
            let sc = root.section("schedule");
            let schedule = SampleSchedule {
                jumps: sc.u64_where("jumps", 10_000, |n| n >= 1, "must be at least 1"),
                sample_every: sc.u64_where("sample_every", 1, |n| n >= 1, "must be at least 1"),
            };
            sc.finish();
            let sampling = read_sampling(&root.section("sampling"), 1_000_000, 50);
            ExperimentParams::Sample(SampleConfig {
                grid,
                units,
                state,
                schedule,
                sampling,
            })
        }
    }
}

fn read_sampling(s: &Section, draws: u64, bins: u64) -> Sampling {
    let out = Sampling {
        draws: s.u64_where("draws", draws, |n| n >= 1, "must be at least 1"),
        bins: s.u64_where("bins", bins, |n| n >= 2, "must be at least 2"),
    };
    s.finish();
    out
}
