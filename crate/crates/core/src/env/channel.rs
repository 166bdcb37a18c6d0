//! Three-slope propagation, fading draws, MRT downlink SE and energy efficiency.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::config::ScenarioConfig;
use super::world::Position;
use crate::error::{Error, Result};
use crate::nn::Matrix;

/// Power-amplifier efficiency used in the EE denominator.
pub const AMPLIFIER_EFFICIENCY: f64 = 0.4;

/// Distances below this are clamped before evaluating the pathloss.
pub const MIN_DISTANCE_M: f64 = 1.0;

/// Slack allowed on per-AP power budgets.
pub const POWER_SLACK_MW: f64 = 1e-9;

/// Three-slope pathloss gain in dB (negative), continuous at both breakpoints.
pub fn pathloss_db(d: f64, cfg: &ScenarioConfig) -> Result<f64> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::invalid(format!("pathloss distance must be positive, got {d}")));
    }
    let km = |m: f64| (m / 1000.0).log10();
    let l = cfg.pathloss_const_db;
    Ok(if d > cfg.d1_m {
        -l - 35.0 * km(d)
    } else if d > cfg.d0_m {
        -l - 15.0 * km(cfg.d1_m) - 20.0 * km(d)
    } else {
        -l - 15.0 * km(cfg.d1_m) - 20.0 * km(cfg.d0_m)
    })
}

/// Large-scale gains and small-scale fading between every AP (rows) and UE (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub beta: Matrix,
    /// Row-major `M×K` fading coefficients.
    pub h: Vec<Complex64>,
}

impl ChannelRealization {
    pub fn n_ap(&self) -> usize {
        self.beta.rows()
    }

    pub fn n_ue(&self) -> usize {
        self.beta.cols()
    }

    pub fn fading(&self, m: usize, k: usize) -> Complex64 {
        self.h[m * self.n_ue() + k]
    }

    /// Effective channel `g_mk = sqrt(beta_mk) · h_mk`.
    pub fn gain(&self, m: usize, k: usize) -> Complex64 {
        self.fading(m, k) * self.beta[(m, k)].sqrt()
    }
}

/// Draw shadowed large-scale gains and i.i.d. CN(0, 1) fading.
///
/// Coincident positions are clamped to [`MIN_DISTANCE_M`].
pub fn draw_channel<R: Rng + ?Sized>(
    aps: &[Position],
    ues: &[Position],
    cfg: &ScenarioConfig,
    rng: &mut R,
) -> Result<ChannelRealization> {
    if aps.is_empty() || ues.is_empty() {
        return Err(Error::invalid("channel needs at least one AP and one UE"));
    }
    let (m, k) = (aps.len(), ues.len());
    let mut beta = Matrix::zeros(m, k);
    let mut h = Vec::with_capacity(m * k);
    for (i, ap) in aps.iter().enumerate() {
        for (j, ue) in ues.iter().enumerate() {
            let d = ap.distance(ue).max(MIN_DISTANCE_M);
            let z: f64 = rng.sample::<f64, _>(StandardNormal) * cfg.shadow_sigma_db;
            beta[(i, j)] = 10f64.powf((pathloss_db(d, cfg)? + z) / 10.0);
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            h.push(Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2);
        }
    }
    Ok(ChannelRealization { beta, h })
}

fn check_power(power: &Matrix, m: usize, k: usize, cfg: &ScenarioConfig) -> Result<()> {
    if power.shape() != (m, k) {
        return Err(Error::shape(
            "power matrix",
            format!("{m}x{k}"),
            format!("{}x{}", power.rows(), power.cols()),
        ));
    }
    for ap in 0..m {
        let row = power.row(ap);
        if row.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::invalid(format!("AP {ap}: power entries must be finite and >= 0")));
        }
        let total: f64 = row.iter().sum();
        if total > cfg.ap_max_power_mw + POWER_SLACK_MW {
            return Err(Error::invalid(format!(
                "AP {ap} exceeds its power budget: {total} mW > {} mW",
                cfg.ap_max_power_mw
            )));
        }
    }
    Ok(())
}

/// Downlink SE per UE under maximum-ratio transmission with perfect CSI.
///
/// Precoder of UE `k'` at AP `m` is `sqrt(p_mk') · conj(g_mk') / |g_mk'|`; the
/// receive amplitudes of every (UE, stream) pair are the entries of `Gᵀ W`.
pub fn compute_se(ch: &ChannelRealization, power: &Matrix, cfg: &ScenarioConfig) -> Result<Vec<f64>> {
    let (m, k) = (ch.n_ap(), ch.n_ue());
    check_power(power, m, k, cfg)?;
    let g: Vec<Complex64> = (0..m * k).map(|i| ch.gain(i / k, i % k)).collect();
    let precoder: Vec<Complex64> = g
        .iter()
        .zip(power.as_slice())
        .map(|(gi, &p)| {
            let n = gi.norm();
            if n > 0.0 {
                gi.conj() / n * p.sqrt()
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    // amplitude[k][k'] = Σ_m g_mk · w_mk'
    let mut amplitude = vec![Complex64::new(0.0, 0.0); k * k];
    for ap in 0..m {
        let g_row = &g[ap * k..(ap + 1) * k];
        let w_row = &precoder[ap * k..(ap + 1) * k];
        for (ue, gk) in g_row.iter().enumerate() {
            for (stream, w) in w_row.iter().enumerate() {
                amplitude[ue * k + stream] += gk * w;
            }
        }
    }
    let noise = cfg.noise_mw();
    Ok((0..k)
        .map(|ue| {
            let row = &amplitude[ue * k..(ue + 1) * k];
            let desired = row[ue].norm_sqr();
            let interference: f64 = row
                .iter()
                .enumerate()
                .filter(|&(s, _)| s != ue)
                .map(|(_, a)| a.norm_sqr())
                .sum();
            (1.0 + desired / (interference + noise)).log2()
        })
        .collect())
}

/// Energy efficiency in bit/J including transmit, circuit and messaging power.
///
/// Circuit power is charged for every AP that radiates on at least one stream.
pub fn compute_ee(sum_se: f64, power: &Matrix, msg_count: usize, cfg: &ScenarioConfig) -> f64 {
    if sum_se <= 0.0 {
        return 0.0;
    }
    let transmit: f64 = power.as_slice().iter().sum::<f64>() / AMPLIFIER_EFFICIENCY;
    let active = (0..power.rows())
        .filter(|&m| power.row(m).iter().any(|&p| p > 0.0))
        .count();
    let messaging_mw = msg_count as f64 * cfg.msg_energy_mj * 1000.0;
    let total_mw = transmit + active as f64 * cfg.circuit_power_mw + messaging_mw;
    if total_mw <= 0.0 {
        return 0.0;
    }
    cfg.bandwidth_hz * sum_se / (total_mw * 1e-3)
}
