//! System parameters and scenario geometry.
//!
//! Powers are given in dBm and antenna element gains in dBi; the helpers here
//! convert them to watts and amplitude factors.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Converts a power in dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Converts a gain in dBi (or dB) to the corresponding amplitude factor.
pub fn dbi_to_amplitude(dbi: f64) -> f64 {
    10f64.powf(dbi / 20.0)
}

/// Converts a linear power ratio to dB.
pub fn to_db(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}

/// Resolution of the IRS phase shifters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseResolution {
    /// `b`-bit shifters: phases restricted to the uniform `2^b`-point alphabet.
    Bits(u32),
    /// Unquantized phases.
    Continuous,
}

impl PhaseResolution {
    /// Largest supported bit count; keeps `2^b` comfortably inside `u32`.
    pub const MAX_BITS: u32 = 16;

    pub fn bits(self) -> Option<u32> {
        match self {
            PhaseResolution::Bits(b) => Some(b),
            PhaseResolution::Continuous => None,
        }
    }

    pub fn validate(self) -> Result<()> {
        match self {
            PhaseResolution::Bits(b) if b == 0 || b > Self::MAX_BITS => Err(invalid(
                "b",
                format!("b must be ≥ 1 or 'continuous' (and at most {})", Self::MAX_BITS),
            )),
            _ => Ok(()),
        }
    }

    /// Short label used in experiment output (`b2`, `continuous`).
    pub fn label(self) -> String {
        match self {
            PhaseResolution::Bits(b) => format!("b{b}"),
            PhaseResolution::Continuous => "continuous".to_string(),
        }
    }
}

/// Array sizes, power budget and phase resolution of the downlink.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// BS antenna count.
    pub n_bs: usize,
    /// Number of IRSs.
    pub k_irs: usize,
    /// IRS elements along the horizontal axis.
    pub m_y: usize,
    /// IRS elements along the vertical axis.
    pub m_z: usize,
    /// Maximum transmit power (dBm).
    pub p_dbm: f64,
    /// Noise power (dBm).
    pub noise_dbm: f64,
    pub resolution: PhaseResolution,
    /// Transmit-side element gain (dBi).
    pub gain_tx_dbi: f64,
    /// Receive-side element gain (dBi).
    pub gain_rx_dbi: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            n_bs: 32,
            k_irs: 3,
            m_y: 10,
            m_z: 5,
            p_dbm: 30.0,
            noise_dbm: -85.0,
            resolution: PhaseResolution::Bits(2),
            gain_tx_dbi: 9.82,
            gain_rx_dbi: 0.0,
        }
    }
}

impl SystemConfig {
    /// Reflecting elements per IRS.
    pub fn m(&self) -> usize {
        self.m_y * self.m_z
    }

    pub fn p_watts(&self) -> f64 {
        dbm_to_watts(self.p_dbm)
    }

    pub fn noise_watts(&self) -> f64 {
        dbm_to_watts(self.noise_dbm)
    }

    /// Product of the transmit and receive element gains as an amplitude.
    pub fn element_gain(&self) -> f64 {
        dbi_to_amplitude(self.gain_tx_dbi) * dbi_to_amplitude(self.gain_rx_dbi)
    }

    pub fn with_resolution(mut self, resolution: PhaseResolution) -> Self {
        self.resolution = resolution;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_bs == 0 {
            return Err(invalid("n", "BS antenna count must be ≥ 1"));
        }
        if self.k_irs == 0 {
            return Err(invalid("k", "IRS count must be ≥ 1"));
        }
        if self.m_y == 0 || self.m_z == 0 {
            return Err(invalid("m_y/m_z", "IRS grid dimensions must be ≥ 1"));
        }
        for (name, v) in [
            ("p_dbm", self.p_dbm),
            ("noise_dbm", self.noise_dbm),
            ("gain_tx_dbi", self.gain_tx_dbi),
            ("gain_rx_dbi", self.gain_rx_dbi),
        ] {
            if !v.is_finite() {
                return Err(invalid(name, "must be finite"));
            }
        }
        self.resolution.validate()
    }
}

/// Planar layout: BS at the origin, user on the x-axis at `d_u`, and the IRSs
/// on the parallel line `y = d_v`, equally spaced from `x = d_b` to
/// `x = d_b + d_span`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioGeometry {
    pub d_b: f64,
    pub d_v: f64,
    pub d_span: f64,
    pub d_u: f64,
}

impl Default for ScenarioGeometry {
    fn default() -> Self {
        ScenarioGeometry {
            d_b: 11.0,
            d_v: 1.5,
            d_span: 50.0,
            d_u: 41.0,
        }
    }
}

impl ScenarioGeometry {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("d_b", self.d_b),
            ("d_v", self.d_v),
            ("d_span", self.d_span),
            ("d_u", self.d_u),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(name, "distance must be > 0"));
            }
        }
        Ok(())
    }

    pub fn with_user_at(mut self, d_u: f64) -> Self {
        self.d_u = d_u;
        self
    }

    /// x-coordinates of the `k` IRSs. A single IRS sits at `d_b`.
    pub fn irs_abscissae(&self, k: usize) -> Vec<f64> {
        if k == 1 {
            return vec![self.d_b];
        }
        let step = self.d_span / (k - 1) as f64;
        (0..k).map(|i| self.d_b + step * i as f64).collect()
    }

    pub fn bs_irs_distance(&self, x_irs: f64) -> f64 {
        x_irs.hypot(self.d_v)
    }

    pub fn irs_user_distance(&self, x_irs: f64) -> f64 {
        (x_irs - self.d_u).hypot(self.d_v)
    }

    pub fn bs_user_distance(&self) -> f64 {
        self.d_u
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_conversions() {
        assert!((dbm_to_watts(30.0) - 1.0).abs() < 1e-15);
        assert!((dbm_to_watts(-85.0) - 10f64.powf(-11.5)).abs() < 1e-25);
        assert!((dbi_to_amplitude(20.0) - 10.0).abs() < 1e-12);
        assert!((to_db(100.0) - 20.0).abs() < 1e-12);
    }

    #[test]
    fn irs_placement() {
        let g = ScenarioGeometry::default();
        assert_eq!(g.irs_abscissae(1), vec![11.0]);
        assert_eq!(g.irs_abscissae(3), vec![11.0, 36.0, 61.0]);
        assert_eq!(g.irs_abscissae(5), vec![11.0, 23.5, 36.0, 48.5, 61.0]);
        let g = g.with_user_at(61.0);
        assert!((g.irs_user_distance(61.0) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_values() {
        let cfg = SystemConfig {
            resolution: PhaseResolution::Bits(0),
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = SystemConfig {
            k_irs: 0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let g = ScenarioGeometry {
            d_v: 0.0,
            ..Default::default()
        };
        assert!(g.validate().is_err());
        assert!(SystemConfig::default().validate().is_ok());
    }
}
