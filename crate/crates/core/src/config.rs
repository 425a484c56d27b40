//! JSON run configuration, built-in presets and scenario assembly.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::boundary::{BoundaryCondition, BoundarySpec, LoadSchedule, WallValues};
use crate::error::{Error, Result};
use crate::fields::SourceClosure;
use crate::lattice::{Edge, GeometrySpec};
use crate::material::NeoHooke;
use crate::scenario::Scenario;
use crate::Real;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub material: MaterialConfig,
    #[serde(default)]
    pub numerics: NumericsConfig,
    /// Edge name to condition; unlisted edges are traction free.
    #[serde(default)]
    pub boundaries: BTreeMap<String, EdgeConfig>,
    #[serde(default)]
    pub body_force: [f64; 2],
    #[serde(default)]
    pub probes: BTreeMap<String, [f64; 2]>,
    pub run: RunConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub side_length: f64,
    pub dx: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hole_side: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialConfig {
    pub lambda: f64,
    pub mu: f64,
    pub rho0: f64,
}

impl Default for MaterialConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            mu: 1.0,
            rho0: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericsConfig {
    pub tau_ratio: f64,
    pub source_extrapolation: bool,
    pub source_iterations: usize,
    pub wall_values: WallValues,
    pub source_closure: SourceClosure,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        Self {
            tau_ratio: 0.55,
            source_extrapolation: false,
            source_iterations: 2,
            wall_values: WallValues::default(),
            source_closure: SourceClosure::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeType {
    /// Prescribed nominal traction.
    #[serde(alias = "neumann")]
    Traction,
    /// Prescribed momentum density.
    #[serde(alias = "dirichlet")]
    Momentum,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeConfig {
    #[serde(rename = "type")]
    pub kind: EdgeType,
    #[serde(default = "ScheduleConfig::zero")]
    pub schedule: ScheduleConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleConfig {
    Constant { amplitude: [f64; 2] },
    RampHold { amplitude: [f64; 2], t_ramp: f64 },
    StepHoldRelease { amplitude: [f64; 2], t_release: f64 },
}

impl ScheduleConfig {
    fn zero() -> Self {
        ScheduleConfig::Constant { amplitude: [0.0; 2] }
    }

    fn to_schedule<T: Real>(self) -> LoadSchedule<T> {
        let v = |a: [f64; 2]| [T::lit(a[0]), T::lit(a[1])];
        match self {
            ScheduleConfig::Constant { amplitude } => LoadSchedule::Constant { amplitude: v(amplitude) },
            ScheduleConfig::RampHold { amplitude, t_ramp } => LoadSchedule::RampHold {
                amplitude: v(amplitude),
                t_ramp: T::lit(t_ramp),
            },
            ScheduleConfig::StepHoldRelease { amplitude, t_release } => LoadSchedule::StepHoldRelease {
                amplitude: v(amplitude),
                t_release: T::lit(t_release),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub t_max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dump_every: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<String>,
}

pub const PRESETS: [&str; 3] = ["tension", "shear", "plate_with_hole"];

/// Raw JSON of a built-in preset.
pub fn preset_value(name: &str) -> Result<Value> {
    let ramp = |a: [f64; 2]| json!({"kind": "ramp_hold", "amplitude": a, "t_ramp": 1.0});
    let traction = |s: Value| json!({"type": "traction", "schedule": s});
    match name {
        "tension" => {
            let h = 0.0125;
            Ok(json!({
                "geometry": {"side_length": 1.0, "dx": 0.025},
                "material": {"lambda": 1.0, "mu": 1.0, "rho0": 1.0},
                "boundaries": {
                    "top": traction(ramp([0.0, 1.0])),
                    "bottom": traction(ramp([0.0, -1.0])),
                },
                "probes": {
                    "P1": [h, 0.5 - h],
                    "P2": [-0.5 + h, 0.5 - h],
                    "P3": [-0.5 + h, h],
                },
                "run": {"t_max": 3.0},
            }))
        }
        "shear" => {
            let h = 0.0125;
            Ok(json!({
                "geometry": {"side_length": 1.0, "dx": 0.025},
                "material": {"lambda": 1.0, "mu": 1.0, "rho0": 1.0},
                "boundaries": {
                    "left": {"type": "momentum"},
                    "right": traction(ramp([0.0, 0.05])),
                },
                "probes": {
                    "P2": [-0.5 + h, 0.5 - h],
                    "P3": [-0.5 + h, h],
                },
                "run": {"t_max": 8.0},
            }))
        }
        "plate_with_hole" => {
            let h = 0.00625;
            let step = |a: [f64; 2]| json!({"kind": "step_hold_release", "amplitude": a, "t_release": 1.0});
            Ok(json!({
                "geometry": {"side_length": 1.0, "dx": 0.0125, "hole_side": 0.4},
                "material": {"lambda": 1.0, "mu": 1.0, "rho0": 1.0},
                "boundaries": {
                    "top": traction(step([0.0, 0.1])),
                    "bottom": traction(step([0.0, -0.1])),
                },
                "probes": {
                    "Q1": [0.2 + h, h],
                    "Q2": [h, 0.5 - h],
                    "Q3": [0.3 + h, 0.2 + h],
                    "Q4": [0.2 + h, 0.3 + h],
                    "Q5": [0.5 - h, h],
                },
                "run": {"t_max": 3.0},
            }))
        }
        other => Err(Error::Config(format!(
            "unknown preset `{other}` (available: {})",
            PRESETS.join(", ")
        ))),
    }
}

/// Recursively overlays `over` onto `base`. Objects merge key by key, a
/// `null` deletes the key, anything else replaces. An object whose `kind`
/// tag differs from the base replaces it whole.
pub fn deep_merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) if o.get("kind").is_none_or(|k| b.get("kind") == Some(k)) => {
            for (k, v) in o {
                if v.is_null() {
                    b.remove(&k);
                } else if let Some(slot) = b.get_mut(&k) {
                    deep_merge(slot, v);
                } else {
                    b.insert(k, v);
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn syntax_error(e: serde_json::Error) -> Error {
    Error::Config(format!("line {}, column {}: {e}", e.line(), e.column()))
}

/// Parses, expands the preset if any, and validates.
pub fn parse_config(text: &str) -> Result<Config> {
    let raw: Value = serde_json::from_str(text).map_err(syntax_error)?;
    let Value::Object(user) = raw else {
        return Err(Error::Config("top level must be a JSON object".into()));
    };
    let value = match user.get("preset") {
        Some(Value::String(name)) => {
            let mut base = preset_value(name)?;
            deep_merge(&mut base, Value::Object(user));
            base
        }
        Some(Value::Null) | None => Value::Object(user),
        Some(_) => return Err(Error::Config("`preset` must be a string".into())),
    };
    let config: Config = serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

pub fn preset(name: &str) -> Result<Config> {
    parse_config(&json!({ "preset": name }).to_string())
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive and finite, got {v}")))
    }
}

fn finite(name: &str, v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be finite")))
    }
}

impl Config {
    /// Semantic checks; nothing is allocated before these pass.
    pub fn validate(&self) -> Result<()> {
        let g = &self.geometry;
        positive("geometry.side_length", g.side_length)?;
        positive("geometry.dx", g.dx)?;
        if let Some(e) = g.hole_side {
            positive("geometry.hole_side", e)?;
            if e >= g.side_length {
                return Err(Error::Config("geometry.hole_side must be smaller than side_length".into()));
            }
        }
        positive("material.lambda", self.material.lambda)?;
        positive("material.mu", self.material.mu)?;
        positive("material.rho0", self.material.rho0)?;
        let tr = self.numerics.tau_ratio;
        if !(tr > 0.5) || !tr.is_finite() {
            return Err(Error::Config(format!("tau_ratio must exceed 0.5, got {tr}")));
        }
        finite("body_force", &self.body_force)?;
        for (name, edge) in &self.boundaries {
            let Some(e) = Edge::from_name(name) else {
                return Err(Error::Config(format!(
                    "unknown edge `{name}` (expected one of {})",
                    Edge::ALL.map(|e| e.name()).join(", ")
                )));
            };
            if g.hole_side.is_none() && e.index() >= 4 {
                return Err(Error::Config(format!("edge `{name}` needs geometry.hole_side")));
            }
            let field = format!("boundaries.{name}.schedule");
            match edge.schedule {
                ScheduleConfig::Constant { amplitude } => finite(&field, &amplitude)?,
                ScheduleConfig::RampHold { amplitude, t_ramp } => {
                    finite(&field, &amplitude)?;
                    positive(&format!("{field}.t_ramp"), t_ramp)?;
                }
                ScheduleConfig::StepHoldRelease { amplitude, t_release } => {
                    finite(&field, &amplitude)?;
                    positive(&format!("{field}.t_release"), t_release)?;
                }
            }
        }
        for (name, x) in &self.probes {
            finite(&format!("probes.{name}"), x)?;
        }
        positive("run.t_max", self.run.t_max)?;
        if self.run.dump_every == Some(0) {
            return Err(Error::Config("run.dump_every must be at least 1".into()));
        }
        Ok(())
    }

    /// Pretty JSON that parses back to an equal config.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    /// The config with the preset expanded, as a JSON object.
    pub fn resolved(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("config serialises");
        if let Value::Object(m) = &mut v {
            m.remove("preset");
        }
        v
    }

    pub fn boundary_spec<T: Real>(&self) -> BoundarySpec<T> {
        let mut spec = BoundarySpec::default();
        for (name, edge) in &self.boundaries {
            let Some(e) = Edge::from_name(name) else { continue };
            let schedule = edge.schedule.to_schedule();
            spec.set(
                e,
                match edge.kind {
                    EdgeType::Traction => BoundaryCondition::Neumann { traction: schedule },
                    EdgeType::Momentum => BoundaryCondition::Dirichlet { momentum: schedule },
                },
            );
        }
        spec
    }
}

/// Assembles the grid, parameters, loads and probes described by `config`.
pub fn build_scenario<T: Real>(config: &Config) -> Result<Scenario<T>> {
    config.validate()?;
    let g = &config.geometry;
    let geometry = GeometrySpec {
        side_length: T::lit(g.side_length),
        dx: T::lit(g.dx),
        hole_side: g.hole_side.map(T::lit),
    };
    let m = &config.material;
    let mut scenario = Scenario::new(
        &geometry,
        NeoHooke::new(T::lit(m.lambda), T::lit(m.mu)),
        T::lit(m.rho0),
        T::lit(config.numerics.tau_ratio),
        config.boundary_spec(),
        config.body_force.map(T::lit),
        T::lit(config.run.t_max),
    )?;
    scenario.params.source_extrapolation = config.numerics.source_extrapolation;
    scenario.params.source_iterations = config.numerics.source_iterations;
    scenario.params.wall_values = config.numerics.wall_values;
    scenario.params.source_closure = config.numerics.source_closure;
    scenario.dump_every = config.run.dump_every;
    for (name, x) in &config.probes {
        scenario.add_probe(name.clone(), x.map(T::lit))?;
    }
    Ok(scenario)
}
