//! Map and field specifications.
//!
//! Grammar: `name[:key=value[,key=value]...]`. Map names and keys:
//!
//! | name          | keys (defaults)                                    |
//! |---------------|----------------------------------------------------|
//! | `identity`    |                                                    |
//! | `shear`       | `lambda` (1), `profile` = `linear` or `sin`        |
//! | `strain`      | `t` (1)                                            |
//! | `twist`       | `alpha` (4), `radius` (1), `cx`, `cy` (0)          |
//! | `rotation`    | `theta` (0), `cx`, `cy` (0)                        |
//! | `quarter`     | `k` (1), `cx`, `cy` (0)                            |
//! | `translation` | `dx`, `dy` (0)                                     |
//! | `scaling`     | `s` (2); not measure preserving                    |
//! | `flow`        | `psi` = `sin` or `strain`, `t` (1), `step` (0.01), `amp` (1) |
//!
//! Field names: `strain`, `cellular` (`amp` (1) or `lip`), `constant`
//! (`vx`, `vy`).

use std::collections::BTreeMap;

use super::flow::{integrate_flow, VectorField};
use super::zoo::{self, Profile};
use super::BiLipMap;
use crate::error::SpecError;

struct Args<'a> {
    name: &'a str,
    kv: BTreeMap<&'a str, &'a str>,
}

impl<'a> Args<'a> {
    fn parse(spec: &'a str) -> Result<Self, SpecError> {
        let spec = spec.trim();
        let (name, rest) = match spec.split_once(':') {
            Some((n, r)) => (n, r),
            None => (spec, ""),
        };
        let mut kv = BTreeMap::new();
        for part in rest.split(',').filter(|s| !s.trim().is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| SpecError::new(part.trim(), "expected key=value"))?;
            if kv.insert(k.trim(), v.trim()).is_some() {
                return Err(SpecError::new(k.trim(), "repeated key"));
            }
        }
        Ok(Args { name, kv })
    }

    fn num(&mut self, key: &str, default: f64) -> Result<f64, SpecError> {
        match self.kv.remove(key) {
            None => Ok(default),
            Some(v) => v
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| SpecError::new(key, format!("`{v}` is not a finite number"))),
        }
    }

    fn word(&mut self, key: &str, default: &'a str) -> &'a str {
        self.kv.remove(key).unwrap_or(default)
    }

    fn finish(self) -> Result<(), SpecError> {
        match self.kv.keys().next() {
            Some(k) => Err(SpecError::new(*k, format!("unknown key for `{}`", self.name))),
            None => Ok(()),
        }
    }
}

pub fn parse_map(spec: &str) -> Result<BiLipMap, SpecError> {
    let mut a = Args::parse(spec)?;
    let map = match a.name {
        "identity" => zoo::identity(2),
        "shear" => {
            let lambda = a.num("lambda", 1.0)?;
            let profile = match a.word("profile", "linear") {
                "linear" => Profile::linear(),
                "sin" => Profile::sine(),
                other => return Err(SpecError::new("profile", format!("unknown profile `{other}`"))),
            };
            zoo::shear(lambda, profile)
        }
        "strain" => zoo::linear_strain(a.num("t", 1.0)?),
        "twist" => {
            let alpha = a.num("alpha", 4.0)?;
            let radius = a.num("radius", 1.0)?;
            let c = [a.num("cx", 0.0)?, a.num("cy", 0.0)?, 0.0];
            if radius <= 0.0 {
                return Err(SpecError::new("radius", "must be positive"));
            }
            zoo::twist(alpha, radius, c)
        }
        "rotation" => {
            let theta = a.num("theta", 0.0)?;
            zoo::rotation(theta, [a.num("cx", 0.0)?, a.num("cy", 0.0)?, 0.0])
        }
        "quarter" => {
            let k = a.num("k", 1.0)?;
            if k.fract() != 0.0 {
                return Err(SpecError::new("k", "must be an integer"));
            }
            zoo::quarter_turn(k as i32, [a.num("cx", 0.0)?, a.num("cy", 0.0)?, 0.0])
        }
        "translation" => zoo::translation([a.num("dx", 0.0)?, a.num("dy", 0.0)?, 0.0]),
        "scaling" => {
            let s = a.num("s", 2.0)?;
            if s <= 0.0 {
                return Err(SpecError::new("s", "must be positive"));
            }
            zoo::scaling_control(s)
        }
        "flow" => {
            let field = match a.word("psi", "sin") {
                "sin" => VectorField::cellular(a.num("amp", 1.0)?),
                "strain" => VectorField::strain(),
                other => return Err(SpecError::new("psi", format!("unknown stream function `{other}`"))),
            };
            let t = a.num("t", 1.0)?;
            let step = a.num("step", 0.01)?;
            if t < 0.0 {
                return Err(SpecError::new("t", "must be non-negative"));
            }
            integrate_flow(&field, t, step)
                .map_err(|e| SpecError::new("step", e.to_string()))?
                .map
        }
        other => return Err(SpecError::new("map", format!("unknown map `{other}`"))),
    };
    a.finish()?;
    Ok(map)
}

pub fn parse_field(spec: &str) -> Result<VectorField, SpecError> {
    let mut a = Args::parse(spec)?;
    let field = match a.name {
        "strain" => VectorField::strain(),
        "cellular" => {
            if a.kv.contains_key("lip") {
                VectorField::cellular_with_lip(a.num("lip", 2.0)?)
            } else {
                VectorField::cellular(a.num("amp", 1.0)?)
            }
        }
        "constant" => VectorField::constant([a.num("vx", 0.0)?, a.num("vy", 0.0)?, 0.0]),
        other => return Err(SpecError::new("field", format!("unknown field `{other}`"))),
    };
    a.finish()?;
    Ok(field)
}
