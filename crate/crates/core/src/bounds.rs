//! Closed-form error and conductance bounds.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, LN_2, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ln_gamma;

/// A bound value together with the branch of the formula that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundSet {
    pub name: String,
    pub value: f64,
    pub regime: String,
    pub inputs: BTreeMap<String, f64>,
}

impl BoundSet {
    fn new(name: &str, value: f64, regime: &str, inputs: &[(&str, f64)]) -> Self {
        Self {
            name: name.into(),
            value,
            regime: regime.into(),
            inputs: inputs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }
}

/// Which branch of the ratio-bounded lower bound applies.
pub fn lower_bound_fc_regime(n: usize, c: f64) -> &'static str {
    if 2.0 * n as f64 >= c - 1.0 {
        "2n>=C-1"
    } else {
        "2n<C-1"
    }
}

/// Lower bound for any randomized method on the ratio-bounded class.
pub fn lower_bound_fc(n: usize, c: f64) -> f64 {
    let n = n as f64;
    if 2.0 * n >= c - 1.0 {
        SQRT_2 / 6.0 * (c / (2.0 * n)).sqrt()
    } else {
        SQRT_2 / 6.0 * 3.0 * c / (c + 2.0 * n - 1.0)
    }
}

/// Upper bound for simple Monte Carlo on the ratio-bounded class.
pub fn upper_bound_simple(n: usize, c: f64) -> f64 {
    2.0 * (2.0 * c / n as f64).sqrt().min(1.0)
}

/// Lower bound for non-adaptive methods on the log-concave Lipschitz class.
pub fn lower_bound_nonadaptive(n: usize, d: usize, alpha: f64, vol_ratio: f64) -> f64 {
    let d_f = d as f64;
    let log_fact = ln_gamma(d_f + 1.0);
    (-(d_f / 2.0 + 1.5) * LN_2).exp() * vol_ratio.sqrt() * alpha.powf(d_f / 2.0)
        / (0.5 * log_fact).exp()
        / (n as f64).sqrt()
}

/// Sample-size condition `2n ≥ (α/ln 4)^d · vol_ratio` under which the
/// non-adaptive lower bound applies (the body-dependent threshold is assumed met).
pub fn nonadaptive_valid(n: usize, d: usize, alpha: f64, vol_ratio: f64) -> bool {
    2.0 * n as f64 >= (alpha / 4f64.ln()).powi(d as i32) * vol_ratio
}

/// Conductance lower bound of the Metropolis ball walk with local
/// conductance floor `l`, step `delta`, body diameter `diameter`.
pub fn conductance_lb_metropolis(l: f64, delta: f64, diameter: f64, d: usize, alpha: f64) -> f64 {
    let inner = (FRAC_PI_2.sqrt() * l * delta / (diameter * ((d + 1) as f64).sqrt())).min(1.0);
    l * (-alpha * delta).exp() / 8.0 * inner
}

/// The unit-ball specialization with the `9/1600` coefficient.
pub fn conductance_lb_ball(delta: f64, d: usize, alpha: f64) -> f64 {
    FRAC_PI_2.sqrt() * 9.0 * delta / 1600.0 * (-alpha * delta).exp() / ((d + 1) as f64).sqrt()
}

/// The unit-ball bound evaluated at the optimal step:
/// `0.0025/√(d+1) · min{1/√(d+1), 1/α}`.
pub fn conductance_lb_ball_optimal(d: usize, alpha: f64) -> f64 {
    let s = ((d + 1) as f64).sqrt();
    let reach = if alpha > 0.0 { (1.0 / s).min(1.0 / alpha) } else { 1.0 / s };
    0.0025 / s * reach
}

/// `8·1600²/(81π)`.
pub const METROPOLIS_ERROR_COEFF: f64 = 8.0 * 1600.0 * 1600.0 / (81.0 * std::f64::consts::PI);

/// Asymptotic ceiling of `e²·n` for the Metropolis estimator on the unit ball.
pub fn error_const_metropolis(d: usize, delta: f64, alpha: f64) -> f64 {
    METROPOLIS_ERROR_COEFF * (d + 1) as f64 * (2.0 * alpha * delta).exp() / (delta * delta)
}

/// Simplified ceiling `594700·(d+1)·max{d+1, α²}`.
pub fn tract_ceiling(d: usize, alpha: f64) -> f64 {
    let d1 = (d + 1) as f64;
    594_700.0 * d1 * d1.max(alpha * alpha)
}

/// Minimal worst-case error on the class of functions bounded by one.
pub fn classic_f1_error(n: usize) -> f64 {
    1.0 / (1.0 + (n as f64).sqrt())
}

pub const BOUND_NAMES: [&str; 9] = [
    "lower-fc",
    "upper-simple",
    "lower-nonadaptive",
    "conductance-metropolis",
    "conductance-ball",
    "conductance-ball-optimal",
    "error-const-metropolis",
    "tract-ceiling",
    "classic-f1",
];

fn param(params: &BTreeMap<String, f64>, key: &str) -> Result<f64> {
    params
        .get(key)
        .copied()
        .ok_or_else(|| Error::InvalidArgument(format!("missing parameter `{key}`")))
}

fn count(params: &BTreeMap<String, f64>, key: &str) -> Result<usize> {
    let v = param(params, key)?;
    if v < 0.0 || v.fract() != 0.0 || !v.is_finite() {
        return Err(Error::InvalidArgument(format!("`{key}` must be a non-negative integer")));
    }
    Ok(v as usize)
}

/// Evaluates a bound by name from a parameter map (keys `n`, `C`, `d`,
/// `alpha`, `delta`, `l`, `D`, `vol_ratio`).
pub fn evaluate(name: &str, params: &BTreeMap<String, f64>) -> Result<BoundSet> {
    let set = match name {
        "lower-fc" => {
            let (n, c) = (count(params, "n")?, param(params, "C")?);
            if n < 1 || c < 1.0 {
                return Err(Error::Domain("need n >= 1 and C >= 1".into()));
            }
            BoundSet::new(name, lower_bound_fc(n, c), lower_bound_fc_regime(n, c), &[("n", n as f64), ("C", c)])
        }
        "upper-simple" => {
            let (n, c) = (count(params, "n")?, param(params, "C")?);
            if n < 1 || c < 1.0 {
                return Err(Error::Domain("need n >= 1 and C >= 1".into()));
            }
            let regime = if 2.0 * c >= n as f64 { "clamped" } else { "sqrt(2C/n)" };
            BoundSet::new(name, upper_bound_simple(n, c), regime, &[("n", n as f64), ("C", c)])
        }
        "lower-nonadaptive" => {
            let n = count(params, "n")?;
            let d = count(params, "d")?;
            let alpha = param(params, "alpha")?;
            let vr = params.get("vol_ratio").copied().unwrap_or(1.0);
            if n < 1 || d < 1 {
                return Err(Error::Domain("need n >= 1 and d >= 1".into()));
            }
            let regime = if nonadaptive_valid(n, d, alpha, vr) { "valid" } else { "n-too-small" };
            BoundSet::new(
                name,
                lower_bound_nonadaptive(n, d, alpha, vr),
                regime,
                &[("n", n as f64), ("d", d as f64), ("alpha", alpha), ("vol_ratio", vr)],
            )
        }
        "conductance-metropolis" => {
            let l = param(params, "l")?;
            let delta = param(params, "delta")?;
            let diam = param(params, "D")?;
            let d = count(params, "d")?;
            let alpha = param(params, "alpha")?;
            if !(l > 0.0 && l <= 1.0 && delta > 0.0 && diam > 0.0) {
                return Err(Error::Domain("need 0 < l <= 1, delta > 0, D > 0".into()));
            }
            let ratio = FRAC_PI_2.sqrt() * l * delta / (diam * ((d + 1) as f64).sqrt());
            let regime = if ratio < 1.0 { "local" } else { "saturated" };
            BoundSet::new(
                name,
                conductance_lb_metropolis(l, delta, diam, d, alpha),
                regime,
                &[("l", l), ("delta", delta), ("D", diam), ("d", d as f64), ("alpha", alpha)],
            )
        }
        "conductance-ball" => {
            let delta = param(params, "delta")?;
            let d = count(params, "d")?;
            let alpha = param(params, "alpha")?;
            BoundSet::new(
                name,
                conductance_lb_ball(delta, d, alpha),
                "9/1600",
                &[("delta", delta), ("d", d as f64), ("alpha", alpha)],
            )
        }
        "conductance-ball-optimal" => {
            let d = count(params, "d")?;
            let alpha = param(params, "alpha")?;
            let regime = if alpha * alpha <= (d + 1) as f64 { "alpha<=sqrt(d+1)" } else { "alpha>sqrt(d+1)" };
            BoundSet::new(name, conductance_lb_ball_optimal(d, alpha), regime, &[("d", d as f64), ("alpha", alpha)])
        }
        "error-const-metropolis" => {
            let d = count(params, "d")?;
            let delta = param(params, "delta")?;
            let alpha = param(params, "alpha")?;
            if delta <= 0.0 {
                return Err(Error::Domain("need delta > 0".into()));
            }
            BoundSet::new(
                name,
                error_const_metropolis(d, delta, alpha),
                "asymptotic",
                &[("d", d as f64), ("delta", delta), ("alpha", alpha)],
            )
        }
        "tract-ceiling" => {
            let d = count(params, "d")?;
            let alpha = param(params, "alpha")?;
            let regime = if alpha * alpha <= (d + 1) as f64 { "d+1" } else { "alpha^2" };
            BoundSet::new(name, tract_ceiling(d, alpha), regime, &[("d", d as f64), ("alpha", alpha)])
        }
        "classic-f1" => {
            let n = count(params, "n")?;
            BoundSet::new(name, classic_f1_error(n), "non-atomic", &[("n", n as f64)])
        }
        other => return Err(Error::NotFound(format!("unknown bound `{other}`"))),
    };
    Ok(set)
}
