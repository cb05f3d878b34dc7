//! Flat `key = value` scenario files with dotted keys, e.g.
//!
//! ```text
//! preset = fig4
//! controller.kind = robust
//! gains.K = auto
//! sim.duration = 20   # seconds
//! ```
//!
//! A file starts from its `preset` (default `fig3`) and overrides fields.
//! Unknown keys and repeated keys are errors.

use thiserror::Error;

use crate::adapt::{ParamVector, PsiFunction};
use crate::control::GainConfig;
use crate::dynamics::{DisturbanceModel, InertiaModel, RigidBodyState, UnknownDynamics};
use crate::quat::{Mat3, UnitQuaternion, Vec3};
use crate::sliding::SlidingConfig;

use super::scenario::{draw_inertia, preset, GainMode, Scenario};
use super::trajectory::Trajectory;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unknown key '{0}'")]
    UnknownKey(String),
    #[error("key '{0}' given twice")]
    Duplicate(String),
    #[error("{key}: {msg}")]
    Value { key: String, msg: String },
    #[error("unknown preset '{0}'")]
    UnknownPreset(String),
}

const KEYS: &[&str] = &[
    "name",
    "preset",
    "initial.q",
    "initial.omega",
    "trajectory.kind",
    "trajectory.q0",
    "trajectory.axis",
    "trajectory.rate",
    "trajectory.amplitude",
    "trajectory.frequency",
    "controller.kind",
    "sliding.kind",
    "sliding.lambda",
    "inertia.true",
    "inertia.nominal",
    "inertia.bound",
    "inertia.draw_seed",
    "disturbance.kind",
    "disturbance.value",
    "disturbance.amplitude",
    "disturbance.frequency",
    "disturbance.phase",
    "disturbance.bound",
    "disturbance.seed",
    "dynamics.kind",
    "dynamics.c_true",
    "dynamics.c_nominal",
    "gains.K",
    "gains.Phi",
    "gains.eta",
    "gains.Kp",
    "gains.Kd",
    "adapt.psi",
    "adapt.gamma",
    "adapt.a0",
    "sim.dt",
    "sim.duration",
    "sim.seed",
    "sim.flip_at",
    "metrics.settle_threshold",
    "metrics.switch_gate",
];

/// Parsed key-value pairs in file order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigMap {
    entries: Vec<(String, String)>,
}

impl ConfigMap {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// Inserts or replaces a key (used for command-line overrides).
    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<(), ConfigError> {
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey(key.to_string()));
        }
        let value = value.into();
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(e) => e.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
        Ok(())
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(k, _)| k.as_str())
    }
}

pub fn parse_config(text: &str) -> Result<ConfigMap, ConfigError> {
    let mut map = ConfigMap::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: i + 1,
            msg: format!("expected 'key = value', got '{line}'"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey(key.to_string()));
        }
        if map.get(key).is_some() {
            return Err(ConfigError::Duplicate(key.to_string()));
        }
        if value.is_empty() {
            return Err(ConfigError::Syntax {
                line: i + 1,
                msg: format!("empty value for '{key}'"),
            });
        }
        map.entries.push((key.to_string(), value.to_string()));
    }
    Ok(map)
}

fn value_err(key: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Value {
        key: key.to_string(),
        msg: msg.into(),
    }
}

fn numbers(key: &str, v: &str) -> Result<Vec<f64>, ConfigError> {
    v.split(',')
        .map(|x| {
            let x = x.trim();
            x.parse::<f64>()
                .ok()
                .filter(|f| f.is_finite())
                .ok_or_else(|| value_err(key, format!("'{x}' is not a finite number")))
        })
        .collect()
}

fn scalar(key: &str, v: &str) -> Result<f64, ConfigError> {
    match numbers(key, v)?.as_slice() {
        [x] => Ok(*x),
        other => Err(value_err(key, format!("expected one number, got {}", other.len()))),
    }
}

/// One number is broadcast to all three axes.
fn vec3(key: &str, v: &str) -> Result<Vec3, ConfigError> {
    match numbers(key, v)?.as_slice() {
        [x] => Ok(Vec3::repeat(*x)),
        [x, y, z] => Ok(Vec3::new(*x, *y, *z)),
        other => Err(value_err(key, format!("expected 1 or 3 numbers, got {}", other.len()))),
    }
}

fn quaternion(key: &str, v: &str) -> Result<UnitQuaternion, ConfigError> {
    match numbers(key, v)?.as_slice() {
        [w, x, y, z] => UnitQuaternion::new(*w, *x, *y, *z).map_err(|e| value_err(key, e.to_string())),
        other => Err(value_err(key, format!("expected 4 numbers, got {}", other.len()))),
    }
}

/// Three numbers are a diagonal, six are `(J11,J22,J33,J12,J13,J23)`.
fn matrix(key: &str, v: &str) -> Result<Mat3, ConfigError> {
    match numbers(key, v)?.as_slice() {
        [a, b, c] => Ok(Mat3::from_diagonal(&Vec3::new(*a, *b, *c))),
        six @ [_, _, _, _, _, _] => {
            let mut a = [0.0; 6];
            a.copy_from_slice(six);
            Ok(ParamVector::new(a).to_matrix())
        }
        other => Err(value_err(key, format!("expected 3 or 6 numbers, got {}", other.len()))),
    }
}

fn unsigned(key: &str, v: &str) -> Result<u64, ConfigError> {
    v.parse().map_err(|_| value_err(key, format!("'{v}' is not an unsigned integer")))
}

fn get<'a>(map: &'a ConfigMap, key: &str) -> Option<(&'static str, &'a str)> {
    let k = KEYS.iter().find(|k| **k == key).expect("key is listed");
    map.get(key).map(|v| (*k, v))
}

/// Applies the overrides in `map` on top of `base`.
pub fn apply_config(mut sc: Scenario, map: &ConfigMap) -> Result<Scenario, ConfigError> {
    if let Some((_, v)) = get(map, "name") {
        sc.name = v.to_string();
    }

    let mut initial = sc.initial;
    if let Some((k, v)) = get(map, "initial.q") {
        initial.q = quaternion(k, v)?;
    }
    if let Some((k, v)) = get(map, "initial.omega") {
        initial.omega = vec3(k, v)?;
    }
    sc.initial = RigidBodyState::new(initial.q, initial.omega);

    if map.keys().any(|k| k.starts_with("trajectory.")) {
        sc.trajectory = trajectory(map, &sc.trajectory)?;
    }

    if let Some((k, v)) = get(map, "controller.kind") {
        sc.controller = v.parse().map_err(|e: String| value_err(k, e))?;
    }
    if let Some((k, v)) = get(map, "sliding.kind") {
        sc.sliding = v.parse().map_err(|e: String| value_err(k, e))?;
    }
    if let Some((k, v)) = get(map, "sliding.lambda") {
        sc.sliding_cfg = SlidingConfig::new(scalar(k, v)?).map_err(|e| value_err(k, e.to_string()))?;
    }

    if map.keys().any(|k| k.starts_with("inertia.")) {
        let nominal = sc.inertia.nominal();
        let mut j_nom = nominal.j_nom;
        let mut bound = nominal.j_bound;
        let mut j_true = *sc.inertia.truth();
        if let Some((k, v)) = get(map, "inertia.nominal") {
            j_nom = matrix(k, v)?;
            sc.a0 = ParamVector::from_inertia(&j_nom);
        }
        if let Some((k, v)) = get(map, "inertia.bound") {
            bound = matrix(k, v)?;
        }
        if let Some((k, v)) = get(map, "inertia.true") {
            j_true = matrix(k, v)?;
        }
        if let Some((k, v)) = get(map, "inertia.draw_seed") {
            if map.get("inertia.true").is_some() {
                return Err(value_err(k, "inertia.true and inertia.draw_seed are exclusive"));
            }
            let seed = unsigned(k, v)?;
            j_true = draw_inertia(&j_nom, &bound, seed);
            sc.metadata.push(("J_draw_seed".into(), seed.to_string()));
        }
        sc.inertia = InertiaModel::new(j_true, j_nom, bound).map_err(|e| value_err("inertia", e.to_string()))?;
    }

    if let Some((k, v)) = get(map, "sim.seed") {
        sc.seed = unsigned(k, v)?;
    }
    if map.keys().any(|k| k.starts_with("disturbance.")) {
        sc.disturbance = disturbance(map, sc.seed)?;
    }

    if map.keys().any(|k| k.starts_with("dynamics.")) {
        let kind = map.get("dynamics.kind").unwrap_or("viscous");
        sc.dynamics = match kind {
            "zero" | "none" => UnknownDynamics::zero(),
            "viscous" => {
                let c_true = get(map, "dynamics.c_true")
                    .map(|(k, v)| vec3(k, v))
                    .transpose()?
                    .unwrap_or_else(Vec3::zeros);
                let c_nom = get(map, "dynamics.c_nominal")
                    .map(|(k, v)| vec3(k, v))
                    .transpose()?
                    .unwrap_or(c_true);
                UnknownDynamics::viscous(c_true, c_nom)
            }
            other => return Err(value_err("dynamics.kind", format!("unknown kind '{other}'"))),
        };
    }

    let g = sc.gains;
    let (mut k_gain, mut phi, mut eta, mut kp, mut kd) = (g.k, g.phi, g.eta, g.kp, g.kd);
    if let Some((k, v)) = get(map, "gains.K") {
        if v == "auto" {
            sc.gain_mode = GainMode::AutoRobust;
        } else {
            sc.gain_mode = GainMode::Fixed;
            k_gain = vec3(k, v)?;
        }
    }
    for (key, slot) in [("gains.Phi", &mut phi), ("gains.eta", &mut eta), ("gains.Kp", &mut kp), ("gains.Kd", &mut kd)] {
        if let Some((k, v)) = get(map, key) {
            *slot = vec3(k, v)?;
        }
    }
    // `auto` sizing replaces K later; keep a positive placeholder meanwhile
    if sc.gain_mode == GainMode::AutoRobust {
        k_gain = k_gain.map(|x| if x > 0.0 { x } else { 1.0 });
    }
    sc.gains = GainConfig::new(k_gain, phi, eta, kp, kd).map_err(|e| value_err("gains", e.to_string()))?;

    if let Some((k, v)) = get(map, "adapt.psi") {
        sc.psi = match v {
            "logdet" => match get(map, "adapt.gamma").map(|(k, v)| scalar(k, v)).transpose()? {
                None => PsiFunction::LogDet,
                Some(g) => PsiFunction::scaled_logdet(g).map_err(|e| value_err("adapt.gamma", e.to_string()))?,
            },
            "quadratic" => {
                let gamma = get(map, "adapt.gamma").map(|(k, v)| scalar(k, v)).transpose()?.unwrap_or(1.0);
                PsiFunction::scaled_identity(gamma).map_err(|e| value_err("adapt.gamma", e.to_string()))?
            }
            other => return Err(value_err(k, format!("unknown potential '{other}'"))),
        };
    } else if map.get("adapt.gamma").is_some() {
        return Err(value_err("adapt.gamma", "needs adapt.psi"));
    }
    if let Some((k, v)) = get(map, "adapt.a0") {
        let a = numbers(k, v)?;
        if a.len() != 6 {
            return Err(value_err(k, format!("expected 6 numbers, got {}", a.len())));
        }
        let mut arr = [0.0; 6];
        arr.copy_from_slice(&a);
        sc.a0 = ParamVector::new(arr);
    }

    if let Some((k, v)) = get(map, "sim.dt") {
        sc.dt = scalar(k, v)?;
    }
    if let Some((k, v)) = get(map, "sim.duration") {
        sc.duration = scalar(k, v)?;
    }
    if let Some((k, v)) = get(map, "sim.flip_at") {
        sc.flip_at = if v == "none" { None } else { Some(scalar(k, v)?) };
    }
    if let Some((k, v)) = get(map, "metrics.settle_threshold") {
        sc.settle_threshold = scalar(k, v)?;
    }
    if let Some((k, v)) = get(map, "metrics.switch_gate") {
        sc.switch_gate = scalar(k, v)?;
    }
    sc.validate().map_err(|e| value_err("scenario", e.to_string()))?;
    Ok(sc)
}

fn trajectory(map: &ConfigMap, current: &Trajectory) -> Result<Trajectory, ConfigError> {
    let kind = map.get("trajectory.kind").unwrap_or(current.name());
    let q0 = match get(map, "trajectory.q0") {
        Some((k, v)) => quaternion(k, v)?,
        None => current.sample(0.0).q_d,
    };
    let axis = match get(map, "trajectory.axis") {
        Some((k, v)) => {
            let a = vec3(k, v)?;
            if a.norm() < 1e-12 {
                return Err(value_err(k, "axis must be non-zero"));
            }
            a.normalize()
        }
        None => Vec3::z(),
    };
    let num = |key: &str, default: f64| -> Result<f64, ConfigError> {
        get(map, key).map(|(k, v)| scalar(k, v)).transpose().map(|x| x.unwrap_or(default))
    };
    let reject = |keys: &[&str]| -> Result<(), ConfigError> {
        match keys.iter().find(|k| map.get(k).is_some()) {
            Some(k) => Err(value_err(k, format!("not used by a '{kind}' trajectory"))),
            None => Ok(()),
        }
    };
    match kind {
        "constant" => {
            reject(&["trajectory.axis", "trajectory.rate", "trajectory.amplitude", "trajectory.frequency"])?;
            Ok(Trajectory::Constant { q_d: q0 })
        }
        "slew" => {
            reject(&["trajectory.amplitude", "trajectory.frequency"])?;
            Ok(Trajectory::Slew {
                q0,
                axis,
                rate: num("trajectory.rate", 1.0)?,
            })
        }
        "sinusoid" => {
            reject(&["trajectory.rate"])?;
            let frequency = num("trajectory.frequency", 0.1)?;
            if frequency <= 0.0 {
                return Err(value_err("trajectory.frequency", "must be positive"));
            }
            Ok(Trajectory::Sinusoid {
                q0,
                axis,
                amplitude: num("trajectory.amplitude", 0.5)?,
                frequency,
            })
        }
        other => Err(value_err("trajectory.kind", format!("unknown kind '{other}'"))),
    }
}

fn disturbance(map: &ConfigMap, seed: u64) -> Result<DisturbanceModel, ConfigError> {
    let kind = map.get("disturbance.kind").unwrap_or("constant");
    let v3 = |key: &str| get(map, key).map(|(k, v)| vec3(k, v)).transpose();
    Ok(match kind {
        "none" => DisturbanceModel::none(),
        "constant" => DisturbanceModel::Constant(v3("disturbance.value")?.unwrap_or_else(Vec3::zeros)),
        "sinusoid" => DisturbanceModel::Sinusoid {
            amplitude: v3("disturbance.amplitude")?.unwrap_or_else(Vec3::zeros),
            frequency: get(map, "disturbance.frequency")
                .map(|(k, v)| scalar(k, v))
                .transpose()?
                .unwrap_or(1.0),
            phase: v3("disturbance.phase")?.unwrap_or_else(Vec3::zeros),
        },
        "random" => DisturbanceModel::SeededRandom {
            bound: v3("disturbance.bound")?.unwrap_or_else(Vec3::zeros),
            seed: get(map, "disturbance.seed")
                .map(|(k, v)| unsigned(k, v))
                .transpose()?
                .unwrap_or(seed),
        },
        other => return Err(value_err("disturbance.kind", format!("unknown kind '{other}'"))),
    })
}

/// Builds a scenario from its preset plus overrides.
pub fn scenario_from_config(map: &ConfigMap) -> Result<Scenario, ConfigError> {
    let name = map.get("preset").unwrap_or("fig3");
    let base = preset(name).ok_or_else(|| ConfigError::UnknownPreset(name.to_string()))?;
    apply_config(base, map)
}
