use crate::error::{Error, Result};

/// Which learning task the world poses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Task {
    /// Mobile APs choose displacements; power is split evenly.
    Mobility,
    /// Positions are frozen; every AP chooses its per-UE power split.
    Power,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::Mobility => "mobility",
            Task::Power => "power",
        }
    }
}

impl std::str::FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mobility" => Ok(Task::Mobility),
            "power" => Ok(Task::Power),
            other => Err(Error::invalid(format!("unknown task {other:?} (mobility|power)"))),
        }
    }
}

/// One wireless world: geometry, device counts, radio constants and episode shape.
///
/// Speeds are meters per step. A step lasts 1 ms, which is what converts the
/// per-message energy into an average power draw.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub area_width_m: f64,
    pub area_height_m: f64,
    pub n_static_ap: usize,
    pub n_vehicle_ap: usize,
    pub n_uav_ap: usize,
    pub n_ue: usize,
    pub ap_max_power_mw: f64,
    pub noise_power_dbm: f64,
    pub bandwidth_hz: f64,
    pub shadow_sigma_db: f64,
    /// Inner breakpoint distance.
    pub d0_m: f64,
    /// Outer breakpoint distance.
    pub d1_m: f64,
    /// Fixed pathloss constant `L` in dB.
    pub pathloss_const_db: f64,
    pub v_vehicle_max: f64,
    pub v_uav_max: f64,
    pub v_ue: f64,
    pub circuit_power_mw: f64,
    pub msg_energy_mj: f64,
    pub msg_penalty: f64,
    pub episode_len: usize,
    pub radius_ap_ap_m: f64,
    pub radius_ap_ue_m: f64,
    pub radius_ue_ue_m: f64,
    /// UEs described in each mobility observation.
    pub n_sense: usize,
    /// Divides EE (bit/J) into the power-task reward.
    pub ee_scale: f64,
    /// Multiplies actions in [-1, 1] into power-split logits.
    pub power_logit_scale: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            area_width_m: 500.0,
            area_height_m: 500.0,
            n_static_ap: 0,
            n_vehicle_ap: 2,
            n_uav_ap: 2,
            n_ue: 8,
            ap_max_power_mw: 200.0,
            // thermal −174 dBm/Hz + 10·log10(20 MHz) + 9 dB noise figure
            noise_power_dbm: -92.0,
            bandwidth_hz: 20e6,
            shadow_sigma_db: 8.0,
            d0_m: 10.0,
            d1_m: 50.0,
            pathloss_const_db: 140.7,
            v_vehicle_max: 5.0,
            v_uav_max: 15.0,
            v_ue: 1.0,
            circuit_power_mw: 200.0,
            msg_energy_mj: 0.01,
            msg_penalty: 0.05,
            episode_len: 50,
            radius_ap_ap_m: 300.0,
            radius_ap_ue_m: 150.0,
            radius_ue_ue_m: 100.0,
            n_sense: 3,
            ee_scale: 1e8,
            power_logit_scale: 4.0,
        }
    }
}

impl ScenarioConfig {
    pub fn n_ap(&self) -> usize {
        self.n_static_ap + self.n_vehicle_ap + self.n_uav_ap
    }

    pub fn noise_mw(&self) -> f64 {
        10f64.powf(self.noise_power_dbm / 10.0)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::invalid(m));
        if self.n_ue < 1 {
            return fail("n_ue must be at least 1".into());
        }
        if self.n_ap() < 1 {
            return fail("scenario needs at least one AP".into());
        }
        if !(self.area_width_m > 0.0 && self.area_height_m > 0.0) {
            return fail("area dimensions must be positive".into());
        }
        if !(self.d0_m > 0.0 && self.d0_m < self.d1_m) {
            return fail(format!("need 0 < d0_m < d1_m, got {} and {}", self.d0_m, self.d1_m));
        }
        for (name, v) in [
            ("v_vehicle_max", self.v_vehicle_max),
            ("v_uav_max", self.v_uav_max),
            ("v_ue", self.v_ue),
            ("shadow_sigma_db", self.shadow_sigma_db),
            ("msg_energy_mj", self.msg_energy_mj),
            ("msg_penalty", self.msg_penalty),
            ("radius_ap_ap_m", self.radius_ap_ap_m),
            ("radius_ap_ue_m", self.radius_ap_ue_m),
            ("radius_ue_ue_m", self.radius_ue_ue_m),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return fail(format!("{name} must be finite and >= 0, got {v}"));
            }
        }
        if self.v_uav_max < self.v_vehicle_max {
            return fail(format!(
                "v_uav_max ({}) must be >= v_vehicle_max ({})",
                self.v_uav_max, self.v_vehicle_max
            ));
        }
        for (name, v) in [
            ("ap_max_power_mw", self.ap_max_power_mw),
            ("bandwidth_hz", self.bandwidth_hz),
            ("circuit_power_mw", self.circuit_power_mw),
            ("ee_scale", self.ee_scale),
            ("power_logit_scale", self.power_logit_scale),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return fail(format!("{name} must be finite and > 0, got {v}"));
            }
        }
        if !self.noise_power_dbm.is_finite() || !self.pathloss_const_db.is_finite() {
            return fail("noise_power_dbm and pathloss_const_db must be finite".into());
        }
        Ok(())
    }
}
