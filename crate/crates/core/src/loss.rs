//! Transmission coefficients `V_n` of the four multiplexer architectures and
//! the minimal source period of the binary-delay scheme.

use crate::error::{check_probability, Error, Result};

/// Loss description of a multiplexer. Every parameter is a transmission
/// probability in `[0, 1]`; `v_b` is the loss shared by all units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossModel {
    /// Unit-independent loss only.
    Ideal { v_b: f64 },
    /// Cascaded 2-to-1 photon routers; a photon from any of `N = 2^m`
    /// sources traverses `m` routers of transmission `v_router`.
    Spatial { v_router: f64, v_b: f64 },
    /// Storage cavity; a photon heralded in window `n` waits `N - n` round
    /// trips of transmission `v_cavity`.
    Cavity { v_cavity: f64, v_b: f64 },
    /// Binary delay lines with `m = log2 N` switchable branches. A branch has
    /// transmission `v_used` when the photon takes the delay and `v_bypass`
    /// when it does not; `v_medium` is the propagation transmission of the
    /// full-length delay medium.
    BulkTime {
        v_used: f64,
        v_bypass: f64,
        v_medium: f64,
        v_b: f64,
    },
}

impl LossModel {
    pub fn ideal(v_b: f64) -> Result<Self> {
        Self::Ideal { v_b }.validated()
    }

    pub fn spatial(v_router: f64, v_b: f64) -> Result<Self> {
        Self::Spatial { v_router, v_b }.validated()
    }

    pub fn cavity(v_cavity: f64, v_b: f64) -> Result<Self> {
        Self::Cavity { v_cavity, v_b }.validated()
    }

    pub fn bulk_time(v_used: f64, v_bypass: f64, v_medium: f64, v_b: f64) -> Result<Self> {
        Self::BulkTime {
            v_used,
            v_bypass,
            v_medium,
            v_b,
        }
        .validated()
    }

    fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    /// Checks every transmission parameter lies in `[0, 1]`.
    pub fn validate(&self) -> Result<()> {
        match *self {
            LossModel::Ideal { v_b } => check_probability("v_b", v_b),
            LossModel::Spatial { v_router, v_b } => {
                check_probability("v_router", v_router)?;
                check_probability("v_b", v_b)
            }
            LossModel::Cavity { v_cavity, v_b } => {
                check_probability("v_cavity", v_cavity)?;
                check_probability("v_b", v_b)
            }
            LossModel::BulkTime {
                v_used,
                v_bypass,
                v_medium,
                v_b,
            } => {
                check_probability("v_used", v_used)?;
                check_probability("v_bypass", v_bypass)?;
                check_probability("v_medium", v_medium)?;
                check_probability("v_b", v_b)
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LossModel::Ideal { .. } => "ideal",
            LossModel::Spatial { .. } => "spatial",
            LossModel::Cavity { .. } => "cavity",
            LossModel::BulkTime { .. } => "bulk",
        }
    }

    pub fn v_b(&self) -> f64 {
        match *self {
            LossModel::Ideal { v_b }
            | LossModel::Spatial { v_b, .. }
            | LossModel::Cavity { v_b, .. }
            | LossModel::BulkTime { v_b, .. } => v_b,
        }
    }

    /// Whether the unit count must be a power of two.
    pub fn requires_power_of_two(&self) -> bool {
        matches!(self, LossModel::Spatial { .. } | LossModel::BulkTime { .. })
    }

    /// Rejects unit counts the architecture cannot realize.
    pub fn check_units(&self, units: u32) -> Result<()> {
        if units == 0 {
            return Err(Error::Config("unit count must be at least 1".into()));
        }
        if units > 1 << 30 {
            return Err(Error::Config(format!("unit count {units} exceeds 2^30")));
        }
        if self.requires_power_of_two() && !units.is_power_of_two() {
            return Err(Error::Config(format!(
                "{} scheme needs a power-of-two unit count, got {units}",
                self.name()
            )));
        }
        Ok(())
    }

    /// Transmission `V_n` of a photon heralded by unit `n` (1-based) out of `units`.
    pub fn transmission(&self, units: u32, n: u32) -> Result<f64> {
        self.validate()?;
        self.check_units(units)?;
        if n == 0 || n > units {
            return Err(Error::Domain {
                name: "n",
                value: n as f64,
                expected: "a unit index in [1, N]",
            });
        }
        Ok(self.transmission_unchecked(units, n))
    }

    /// `V_1, ..., V_N` for a validated model and unit count.
    pub fn transmissions(&self, units: u32) -> Result<Vec<f64>> {
        self.validate()?;
        self.check_units(units)?;
        Ok((1..=units)
            .map(|n| self.transmission_unchecked(units, n))
            .collect())
    }

    fn transmission_unchecked(&self, units: u32, n: u32) -> f64 {
        let waits = (units - n) as i32;
        match *self {
            LossModel::Ideal { v_b } => v_b,
            LossModel::Spatial { v_router, v_b } => v_router.powi(stages(units) as i32) * v_b,
            LossModel::Cavity { v_cavity, v_b } => v_cavity.powi(waits) * v_b,
            LossModel::BulkTime {
                v_used,
                v_bypass,
                v_medium,
                v_b,
            } => {
                let m = stages(units);
                let s = hamming_weight((units - n) as u64);
                // Exponent (N - n)/N, not (N - n)/(N - 1).
                let fraction = f64::from(units - n) / f64::from(units);
                v_used.powi(s as i32) * v_bypass.powi((m - s) as i32) * v_medium.powf(fraction) * v_b
            }
        }
    }
}

fn stages(units: u32) -> u32 {
    units.trailing_zeros()
}

/// `log2 N` when `N` is a power of two.
pub fn log2_units(units: u32) -> Option<u32> {
    units.is_power_of_two().then(|| units.trailing_zeros())
}

/// Number of set bits, i.e. the count of delay branches used to delay a
/// photon by `x` windows.
pub fn hamming_weight(x: u64) -> u32 {
    x.count_ones()
}

/// Timing of one source period, all in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingParameters {
    /// Observation time `T = N * dt`.
    pub observation: f64,
    /// Controller delay.
    pub controller_delay: f64,
    /// Pass-through time of the delay system with no branch active.
    pub passthrough_delay: f64,
    /// Detector dead time.
    pub dead_time: f64,
}

impl TimingParameters {
    pub fn new(
        observation: f64,
        controller_delay: f64,
        passthrough_delay: f64,
        dead_time: f64,
    ) -> Result<Self> {
        for (name, value) in [
            ("observation", observation),
            ("controller_delay", controller_delay),
            ("passthrough_delay", passthrough_delay),
            ("dead_time", dead_time),
        ] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(Error::Domain {
                    name,
                    value,
                    expected: "a finite duration >= 0",
                });
            }
        }
        Ok(Self {
            observation,
            controller_delay,
            passthrough_delay,
            dead_time,
        })
    }

    /// Shortest achievable source period.
    pub fn minimal_period(&self) -> f64 {
        minimal_period(self)
    }
}

pub fn minimal_period(t: &TimingParameters) -> f64 {
    f64::max(
        t.observation + t.controller_delay + t.passthrough_delay,
        t.observation + t.dead_time,
    )
}
