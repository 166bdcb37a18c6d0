//! Central finite-difference verification of analytic gradients.

use rand::seq::index::sample;
use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct GradCheckConfig {
    /// Coordinates probed; all of them when the parameter vector is shorter.
    pub probes: usize,
    pub step: f64,
    /// Denominator floor of the relative error, so that coordinates whose true
    /// gradient is ~0 are judged on absolute error instead.
    pub floor: f64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            probes: 20,
            step: 1e-5,
            floor: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Coordinate with the largest error.
    pub worst_index: usize,
    /// `(index, analytic, numeric, relative error)` per probed coordinate.
    pub probes: Vec<(usize, f64, f64, f64)>,
}

impl GradCheckReport {
    pub fn fraction_below(&self, tol: f64) -> f64 {
        if self.probes.is_empty() {
            return 1.0;
        }
        let ok = self.probes.iter().filter(|p| p.3 < tol).count();
        ok as f64 / self.probes.len() as f64
    }
}

pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

/// Compare `analytic` against central differences of the scalar function `f`
/// at randomly chosen coordinates of `params`.
pub fn grad_check<F, R>(
    mut f: F,
    params: &[f64],
    analytic: &[f64],
    cfg: &GradCheckConfig,
    rng: &mut R,
) -> Result<GradCheckReport>
where
    F: FnMut(&[f64]) -> f64,
    R: Rng + ?Sized,
{
    if params.len() != analytic.len() {
        return Err(Error::shape("grad_check", params.len(), analytic.len()));
    }
    let indices: Vec<usize> = if cfg.probes >= params.len() {
        (0..params.len()).collect()
    } else {
        let mut v = sample(rng, params.len(), cfg.probes).into_vec();
        v.sort_unstable();
        v
    };

    let mut theta = params.to_vec();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_index: 0,
        probes: Vec::with_capacity(indices.len()),
    };
    for idx in indices {
        let orig = theta[idx];
        theta[idx] = orig + cfg.step;
        let plus = f(&theta);
        theta[idx] = orig - cfg.step;
        let minus = f(&theta);
        theta[idx] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::NonFinite(format!(
                "function value at coordinate {idx} is not finite ({plus}, {minus})"
            )));
        }
        let a = analytic[idx];
        if !a.is_finite() {
            return Err(Error::NonFinite(format!("analytic gradient at coordinate {idx} is {a}")));
        }
        let numeric = (plus - minus) / (2.0 * cfg.step);
        let err = relative_error(a, numeric, cfg.floor);
        if err > report.max_rel_error {
            report.max_rel_error = err;
            report.worst_index = idx;
        }
        report.probes.push((idx, a, numeric, err));
    }
    Ok(report)
}
