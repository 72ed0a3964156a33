use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorSpec {
    pub name: String,
    /// Features per sample.
    pub dim: usize,
    /// Samples per session time step; a session of length `T` yields
    /// `round(T * rate)` samples (at least 2) from this sensor.
    pub rate: f64,
}

impl SensorSpec {
    pub fn new(name: &str, dim: usize, rate: f64) -> Self {
        SensorSpec {
            name: name.to_owned(),
            dim,
            rate,
        }
    }

    pub fn samples_for(&self, session_len: usize) -> usize {
        ((session_len as f64 * self.rate).round() as usize).max(2)
    }
}

/// Robot and human sensor sets plus the available robot types.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorCatalog {
    pub robot_sensors: Vec<SensorSpec>,
    pub human_sensors: Vec<SensorSpec>,
    pub robot_types: Vec<String>,
    pub action_dim: usize,
}

impl Default for SensorCatalog {
    fn default() -> Self {
        SensorCatalog {
            robot_sensors: vec![
                SensorSpec::new("joint_position", 2, 1.0),
                SensorSpec::new("end_effector_pose", 2, 1.0),
            ],
            human_sensors: vec![
                SensorSpec::new("gaze", 2, 1.0),
                SensorSpec::new("heart_rate", 1, 0.5),
                SensorSpec::new("motion", 3, 1.0),
            ],
            robot_types: vec!["manipulator".into(), "mobile_manipulator".into()],
            action_dim: 2,
        }
    }
}

impl SensorCatalog {
    /// Dimension of the task-state features the policy consumes.
    pub fn state_dim(&self) -> usize {
        self.robot_sensors.iter().map(|s| s.dim).sum()
    }

    pub fn validate(&self) -> Result<()> {
        for (kind, list) in [("robot_sensors", &self.robot_sensors), ("human_sensors", &self.human_sensors)] {
            if list.is_empty() {
                return Err(Error::invalid("catalog", format!("`{kind}` is empty")));
            }
            for (i, s) in list.iter().enumerate() {
                if s.dim == 0 {
                    return Err(Error::invalid("catalog", format!("sensor `{}` has dim 0", s.name)));
                }
                if !(s.rate > 0.0 && s.rate.is_finite()) {
                    return Err(Error::invalid("catalog", format!("sensor `{}` has rate {}", s.name, s.rate)));
                }
                if list[..i].iter().any(|o| o.name == s.name) {
                    return Err(Error::invalid("catalog", format!("duplicate sensor name `{}`", s.name)));
                }
            }
        }
        if self.robot_types.is_empty() {
            return Err(Error::invalid("catalog", "`robot_types` is empty"));
        }
        if self.action_dim == 0 {
            return Err(Error::invalid("catalog", "`action_dim` must be at least 1"));
        }
        Ok(())
    }
}
