use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rates of the semiclassical equations of motion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EngineParams {
    /// Single-photon loss `γ_s`.
    pub gamma_s: f64,
    /// Two-photon saturation `γ_d` (shared by DOPOs and NDOPOs).
    pub gamma_d: f64,
    /// Collective-loss rate `γ_c` used by the network builders.
    pub gamma_c: f64,
    /// Measurement-feedback gain `Ω`.
    pub omega_fb: f64,
}

impl Default for EngineParams {
    fn default() -> Self {
        Self { gamma_s: 0.0, gamma_d: 1.0, gamma_c: 3.0, omega_fb: 0.5 }
    }
}

impl EngineParams {
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("gamma_s", self.gamma_s),
            ("gamma_d", self.gamma_d),
            ("gamma_c", self.gamma_c),
            ("omega_fb", self.omega_fb),
        ];
        for (name, v) in named {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParameter(format!("{name} = {v} must be finite and nonnegative")));
            }
        }
        if self.gamma_d <= 0.0 {
            return Err(Error::InvalidParameter("gamma_d must be strictly positive".into()));
        }
        Ok(())
    }
}

/// Time-dependent pump strength shared by every parametric mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum PumpSchedule {
    Constant { p: f64 },
    /// Linear ramp `0 → p_max` over `t_ramp`, then held for `t_hold`.
    LinearRampThenHold { p_max: f64, t_ramp: f64, t_hold: f64 },
}

impl PumpSchedule {
    pub fn ramp(p_max: f64, t_ramp: f64, t_hold: f64) -> Result<Self> {
        let s = PumpSchedule::LinearRampThenHold { p_max, t_ramp, t_hold };
        s.validate()?;
        Ok(s)
    }

    /// Default protocol for a target steady amplitude `amp`:
    /// `p_max = γ_s + γ_d amp²`, ramp and hold of `50/γ_d` each.
    pub fn for_amplitude(params: &EngineParams, amp: f64) -> Self {
        PumpSchedule::LinearRampThenHold {
            p_max: params.gamma_s + params.gamma_d * amp * amp,
            t_ramp: 50.0 / params.gamma_d,
            t_hold: 50.0 / params.gamma_d,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            PumpSchedule::Constant { p } if !p.is_finite() => {
                Err(Error::InvalidParameter(format!("pump {p} is not finite")))
            }
            PumpSchedule::LinearRampThenHold { p_max, t_ramp, t_hold } => {
                if !p_max.is_finite() {
                    return Err(Error::InvalidParameter(format!("p_max {p_max} is not finite")));
                }
                if !(t_ramp >= 0.0 && t_hold >= 0.0 && t_ramp.is_finite() && t_hold.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "t_ramp = {t_ramp}, t_hold = {t_hold} must be nonnegative"
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        match *self {
            PumpSchedule::Constant { p } => p,
            PumpSchedule::LinearRampThenHold { p_max, t_ramp, .. } => {
                if t >= t_ramp {
                    p_max
                } else if t <= 0.0 {
                    0.0
                } else {
                    p_max * t / t_ramp
                }
            }
        }
    }

    pub fn peak(&self) -> f64 {
        match *self {
            PumpSchedule::Constant { p } => p,
            PumpSchedule::LinearRampThenHold { p_max, .. } => p_max,
        }
    }

    /// Natural end time of the protocol (`None` for a constant pump).
    pub fn duration(&self) -> Option<f64> {
        match *self {
            PumpSchedule::Constant { .. } => None,
            PumpSchedule::LinearRampThenHold { t_ramp, t_hold, .. } => Some(t_ramp + t_hold),
        }
    }

    /// Times where the pump is not smooth; integrators step onto them.
    pub fn breakpoints(&self) -> Vec<f64> {
        match *self {
            PumpSchedule::Constant { .. } => Vec::new(),
            PumpSchedule::LinearRampThenHold { t_ramp, .. } => vec![t_ramp],
        }
    }
}
