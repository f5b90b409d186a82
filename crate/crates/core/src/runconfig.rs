//! Run configuration: flat `key = value` text with one section per command.
//!
//! Keys before any section header apply to every command; a command's own
//! section overrides them. Unknown keys are rejected.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::str::FromStr;

use ini::Ini;
use num_complex::Complex64 as C;

use crate::error::{LabError, Result};
use crate::flow::FlowParams;
use crate::surface::SurfaceGrid;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Verify,
    Solve,
    Spectrum,
}

impl Command {
    pub fn section(self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::Solve => "solve",
            Command::Spectrum => "spectrum",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub sides: usize,
    pub length: f64,
    pub rank: usize,
}

impl GridSpec {
    pub fn grid(&self) -> Result<SurfaceGrid> {
        SurfaceGrid::torus(self.sides, self.length)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyConfig {
    pub grid: GridSpec,
    pub seed: u64,
    pub trials: usize,
    /// Peak per-site norm of the random configurations.
    pub amplitude: f64,
    /// Replaces every check's tolerance when set.
    pub tolerance: Option<f64>,
    /// Per-check tolerances keyed by report name (`tol.<name>`).
    pub tolerance_overrides: BTreeMap<String, f64>,
    pub report: String,
    pub meta: String,
}

impl VerifyConfig {
    pub fn tolerance_for(&self, check: &str) -> Option<f64> {
        self.tolerance_overrides.get(check).copied().or(self.tolerance)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum StartSpec {
    /// Random smooth configuration of the configured amplitude.
    Random,
    /// The rank-1 exact solution `A = 0`, `Φ = c dz`.
    RankOneSeed(C),
    /// A configuration file written by an earlier run.
    Resume(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveConfig {
    pub grid: GridSpec,
    pub seed: u64,
    pub flow: FlowParams,
    pub start: StartSpec,
    pub amplitude: f64,
    pub max_mode: usize,
    pub trace: String,
    pub status: String,
    pub output: String,
    pub meta: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GaugeChoice {
    Random,
    Identity,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumConfig {
    pub grid: GridSpec,
    pub seed: u64,
    pub k: usize,
    pub gauge: GaugeChoice,
    pub gauge_amplitude: f64,
    /// Peak size of the random reference connection and Higgs field.
    pub field_amplitude: f64,
    pub report: String,
    pub meta: String,
}

#[derive(Clone, Debug, PartialEq)]
pub enum RunConfig {
    Verify(VerifyConfig),
    Solve(SolveConfig),
    Spectrum(SpectrumConfig),
}

impl RunConfig {
    pub fn parse(text: &str, command: Command) -> Result<RunConfig> {
        let ini = Ini::load_from_str(text).map_err(|e| LabError::Format(format!("config syntax: {e}")))?;
        for name in ini.sections().flatten() {
            if !["verify", "solve", "spectrum"].contains(&name) {
                return Err(LabError::Format(format!("unknown section [{name}]")));
            }
        }
        let mut keys = Keys::default();
        for (k, v) in ini.general_section().iter() {
            keys.general.insert(k.to_string(), v.trim().to_string());
        }
        if let Some(sec) = ini.section(Some(command.section())) {
            for (k, v) in sec.iter() {
                keys.own.insert(k.to_string(), v.trim().to_string());
            }
        }
        let config = match command {
            Command::Verify => RunConfig::Verify(keys.verify()?),
            Command::Solve => RunConfig::Solve(keys.solve()?),
            Command::Spectrum => RunConfig::Spectrum(keys.spectrum()?),
        };
        keys.reject_unused(command)?;
        Ok(config)
    }

    pub fn load(path: &std::path::Path, command: Command) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::Format(format!("cannot read config {}: {e}", path.display())))?;
        RunConfig::parse(&text, command)
    }

    pub fn set_seed(&mut self, seed: u64) {
        match self {
            RunConfig::Verify(c) => c.seed = seed,
            RunConfig::Solve(c) => c.seed = seed,
            RunConfig::Spectrum(c) => c.seed = seed,
        }
    }
}

#[derive(Default)]
struct Keys {
    general: BTreeMap<String, String>,
    own: BTreeMap<String, String>,
    used: BTreeSet<String>,
}

fn bad(key: &str, value: &str, why: &str) -> LabError {
    LabError::Format(format!("key `{key}` = `{value}`: {why}"))
}

impl Keys {
    fn raw(&mut self, key: &str) -> Option<String> {
        self.used.insert(key.to_string());
        self.own.get(key).or_else(|| self.general.get(key)).cloned()
    }

    fn get<T: FromStr>(&mut self, key: &str, default: T) -> Result<T> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| bad(key, &v, "cannot parse")),
        }
    }

    fn positive(&mut self, key: &str, default: f64) -> Result<f64> {
        let v = self.get(key, default)?;
        if !(v > 0.0 && v.is_finite()) {
            return Err(bad(key, &v.to_string(), "must be positive and finite"));
        }
        Ok(v)
    }

    fn grid(&mut self) -> Result<GridSpec> {
        let sides = self.get("N", 8usize)?;
        let length = self.positive("L", 1.0)?;
        let rank = self.get("n", 2usize)?;
        if sides < 2 {
            return Err(bad("N", &sides.to_string(), "need at least 2 sites per side"));
        }
        if rank == 0 {
            return Err(bad("n", "0", "rank must be positive"));
        }
        Ok(GridSpec { sides, length, rank })
    }

    fn verify(&mut self) -> Result<VerifyConfig> {
        let grid = self.grid()?;
        let seed = self.get("seed", 42u64)?;
        let trials = self.get("trials", 100usize)?;
        if trials == 0 {
            return Err(bad("trials", "0", "need at least one trial"));
        }
        let amplitude = self.positive("amplitude", 1.0)?;
        let tolerance = match self.raw("tolerance") {
            None => None,
            Some(_) => Some(self.positive("tolerance", 0.0)?),
        };
        let mut tolerance_overrides = BTreeMap::new();
        let names: Vec<String> =
            self.general.keys().chain(self.own.keys()).filter(|k| k.starts_with("tol.")).cloned().collect();
        for key in names {
            let v = self.positive(&key, 0.0)?;
            tolerance_overrides.insert(key["tol.".len()..].to_string(), v);
        }
        Ok(VerifyConfig {
            grid,
            seed,
            trials,
            amplitude,
            tolerance,
            tolerance_overrides,
            report: self.get("report", "verify_report.jsonl".to_string())?,
            meta: self.get("meta", "verify_meta.json".to_string())?,
        })
    }

    fn solve(&mut self) -> Result<SolveConfig> {
        let grid = self.grid()?;
        let seed = self.get("seed", 42u64)?;
        let d = FlowParams::default();
        let flow = FlowParams {
            step_size: self.positive("step_size", d.step_size)?,
            max_iters: self.get("max_iters", d.max_iters)?,
            target_residual: self.positive("target_residual", d.target_residual)?,
            backtrack: self.get("backtrack", d.backtrack)?,
            growth: self.get("growth", d.growth)?,
            seed,
        };
        flow.validate().map_err(|e| LabError::Format(e.to_string()))?;
        let start = match self.raw("start").as_deref() {
            None | Some("random") => StartSpec::Random,
            Some("seed") => {
                let re = self.get("seed_re", 1.0f64)?;
                let im = self.get("seed_im", 0.0f64)?;
                StartSpec::RankOneSeed(C::new(re, im))
            }
            Some("resume") => match self.raw("resume") {
                Some(p) => StartSpec::Resume(PathBuf::from(p)),
                None => return Err(LabError::Format("start = resume needs a `resume` path".into())),
            },
            Some(other) => return Err(bad("start", other, "expected random, seed or resume")),
        };
        Ok(SolveConfig {
            grid,
            seed,
            flow,
            start,
            amplitude: self.positive("amplitude", 0.5)?,
            max_mode: self.get("max_mode", 1usize)?,
            trace: self.get("trace", "solve_trace.csv".to_string())?,
            status: self.get("status", "solve_status.json".to_string())?,
            output: self.get("output", "solve_final.cfg".to_string())?,
            meta: self.get("meta", "solve_meta.json".to_string())?,
        })
    }

    fn spectrum(&mut self) -> Result<SpectrumConfig> {
        let grid = self.grid()?;
        let seed = self.get("seed", 42u64)?;
        let k = self.get("k", 10usize)?;
        if k == 0 {
            return Err(bad("k", "0", "need at least one eigenvalue"));
        }
        let gauge = match self.raw("gauge").as_deref() {
            None | Some("random") => GaugeChoice::Random,
            Some("identity") => GaugeChoice::Identity,
            Some(other) => return Err(bad("gauge", other, "expected random or identity")),
        };
        Ok(SpectrumConfig {
            grid,
            seed,
            k,
            gauge,
            gauge_amplitude: self.positive("gauge_amplitude", 1.0)?,
            field_amplitude: self.positive("field_amplitude", 0.5)?,
            report: self.get("report", "spectrum_report.json".to_string())?,
            meta: self.get("meta", "spectrum_meta.json".to_string())?,
        })
    }

    /// Keys in the command's own section must all be understood. General
    /// keys may belong to other commands and are left alone.
    fn reject_unused(&self, command: Command) -> Result<()> {
        let unknown: Vec<&String> = self.own.keys().filter(|k| !self.used.contains(*k)).collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(LabError::Format(format!("unknown keys in [{}]: {unknown:?}", command.section())))
        }
    }
}
