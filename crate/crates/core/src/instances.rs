//! Problem instances `(f, ρ)` with reference values of `S(f, ρ) = ∫fρ / ∫ρ`.
//!
//! Two adversarial families are provided:
//!
//! * the ratio-bounded family on `[0, 1]`: `2n` equal cells, density `C` on a
//!   random set `I` of `l` cells and `1` elsewhere, integrand `±1` on `I`;
//! * the log-concave family on `B^d`: `ρ_i = c_i exp(-α‖y - y_i‖)` peaked at a
//!   packing center, integrand a scaled indicator of the packing ball `B_i`.
//!
//! Every oracle evaluation made through [`ProblemInstance::eval_f`] and
//! [`ProblemInstance::eval_rho`] is charged to a [`ChainBudget`].

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::budget::ChainBudget;
use crate::error::{Error, Result};
use crate::geometry::{distance, vol_unit_ball, BodyKind, ConvexBody, Domain, Packing, Point};
use crate::quad;
use crate::rng::RngStream;

/// Parametric form of a positive weight.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case")]
pub enum Weight {
    Constant { value: f64 },
    /// Piecewise constant on the equal cells of `[0, 1]`.
    Cells { values: Vec<f64> },
    /// `scale · exp(-alpha ‖x - center‖)`.
    ExpDistance {
        center: Vec<f64>,
        alpha: f64,
        scale: f64,
    },
    /// `scale · exp(-alpha ⟨direction, x⟩)` with a unit `direction`.
    ExpLinear {
        direction: Vec<f64>,
        alpha: f64,
        scale: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "kebab-case")]
pub enum DensityClass {
    /// `sup ρ / inf ρ <= c`.
    RatioBounded { c: f64 },
    /// log-concave with `|log ρ(x) - log ρ(y)| <= alpha ‖x - y‖`.
    LogConcaveLipschitz { alpha: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightOracle {
    pub form: Weight,
    pub class: DensityClass,
}

impl WeightOracle {
    pub fn constant(value: f64) -> Self {
        Self {
            form: Weight::Constant { value },
            class: DensityClass::RatioBounded { c: 1.0 },
        }
    }

    pub fn exp_distance(center: Vec<f64>, alpha: f64, scale: f64) -> Self {
        Self {
            form: Weight::ExpDistance {
                center,
                alpha,
                scale,
            },
            class: DensityClass::LogConcaveLipschitz { alpha },
        }
    }

    /// `exp(-alpha x_1)` in one dimension.
    pub fn exp_tilt(alpha: f64) -> Self {
        Self {
            form: Weight::ExpLinear {
                direction: vec![1.0],
                alpha,
                scale: 1.0,
            },
            class: DensityClass::LogConcaveLipschitz { alpha },
        }
    }

    #[inline]
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        match &self.form {
            Weight::Constant { value } => *value,
            Weight::Cells { values } => values[cell_index(x[0], values.len())],
            Weight::ExpDistance {
                center,
                alpha,
                scale,
            } => scale * (-alpha * distance(x, center)).exp(),
            Weight::ExpLinear {
                direction,
                alpha,
                scale,
            } => {
                let proj: f64 = x.iter().zip(direction).map(|(a, b)| a * b).sum();
                scale * (-alpha * proj).exp()
            }
        }
    }

    /// Same density multiplied by `factor > 0`; class membership is unchanged.
    pub fn scaled(&self, factor: f64) -> Self {
        let form = match &self.form {
            Weight::Constant { value } => Weight::Constant {
                value: value * factor,
            },
            Weight::Cells { values } => Weight::Cells {
                values: values.iter().map(|v| v * factor).collect(),
            },
            Weight::ExpDistance {
                center,
                alpha,
                scale,
            } => Weight::ExpDistance {
                center: center.clone(),
                alpha: *alpha,
                scale: scale * factor,
            },
            Weight::ExpLinear {
                direction,
                alpha,
                scale,
            } => Weight::ExpLinear {
                direction: direction.clone(),
                alpha: *alpha,
                scale: scale * factor,
            },
        };
        Self {
            form,
            class: self.class,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case")]
pub enum Integrand {
    Constant { value: f64 },
    /// `scale · x[axis]`.
    Coordinate { axis: usize, scale: f64 },
    /// Piecewise constant on the equal cells of `[0, 1]`.
    Cells { values: Vec<f64> },
    /// `height` on the closed ball `B(center, radius)`, zero elsewhere.
    BallIndicator {
        center: Vec<f64>,
        radius: f64,
        height: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormTag {
    /// `|f| <= 1` everywhere.
    SupBounded,
    /// `‖f‖_{2,ρ} <= 1`.
    L2RhoBounded,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegrandOracle {
    pub form: Integrand,
    pub norm: NormTag,
}

impl IntegrandOracle {
    pub fn constant(value: f64) -> Self {
        Self {
            form: Integrand::Constant { value },
            norm: NormTag::SupBounded,
        }
    }

    pub fn coordinate(axis: usize) -> Self {
        Self {
            form: Integrand::Coordinate { axis, scale: 1.0 },
            norm: NormTag::SupBounded,
        }
    }

    #[inline]
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        match &self.form {
            Integrand::Constant { value } => *value,
            Integrand::Coordinate { axis, scale } => scale * x[*axis],
            Integrand::Cells { values } => values[cell_index(x[0], values.len())],
            Integrand::BallIndicator {
                center,
                radius,
                height,
            } => {
                if distance(x, center) <= *radius {
                    *height
                } else {
                    0.0
                }
            }
        }
    }

    pub fn negated(&self) -> Self {
        let form = match &self.form {
            Integrand::Constant { value } => Integrand::Constant { value: -value },
            Integrand::Cells { values } => Integrand::Cells {
                values: values.iter().map(|v| -v).collect(),
            },
            Integrand::BallIndicator {
                center,
                radius,
                height,
            } => Integrand::BallIndicator {
                center: center.clone(),
                radius: *radius,
                height: -height,
            },
            Integrand::Coordinate { axis, scale } => Integrand::Coordinate {
                axis: *axis,
                scale: -scale,
            },
        };
        Self {
            form,
            norm: self.norm,
        }
    }
}

#[inline]
fn cell_index(x: f64, cells: usize) -> usize {
    ((x * cells as f64).max(0.0) as usize).min(cells - 1)
}

/// How an instance was built; enough to rebuild it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Provenance {
    RatioBoundedHard {
        n: usize,
        c: f64,
        cells: Vec<usize>,
        eps: Vec<i8>,
    },
    LogConcaveHard {
        alpha: f64,
        packing: Packing,
        index: usize,
        sign: i8,
    },
    Smooth {
        name: String,
    },
    TiltedInterval {
        alpha: f64,
    },
    Custom,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemInstance {
    pub family_id: String,
    pub body: ConvexBody,
    pub f: IntegrandOracle,
    pub rho: WeightOracle,
    pub truth: Option<f64>,
    /// Half-width of a 3σ interval around `truth` when it was estimated.
    pub truth_ci: Option<f64>,
    pub provenance: Provenance,
}

impl ProblemInstance {
    pub fn custom(body: ConvexBody, f: IntegrandOracle, rho: WeightOracle) -> Self {
        Self {
            family_id: "custom".into(),
            body,
            f,
            rho,
            truth: None,
            truth_ci: None,
            provenance: Provenance::Custom,
        }
    }

    pub fn dim(&self) -> usize {
        self.body.dim()
    }

    #[inline]
    pub fn eval_f(&self, x: &[f64], budget: &mut ChainBudget) -> f64 {
        budget.f_evals += 1;
        self.f.evaluate(x)
    }

    #[inline]
    pub fn eval_rho(&self, x: &[f64], budget: &mut ChainBudget) -> Result<f64> {
        budget.rho_evals += 1;
        let v = self.rho.evaluate(x);
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(Error::InvalidDensity(v))
        }
    }

    /// The same instance with `ρ` multiplied by `factor`; `S` is unchanged.
    pub fn with_scaled_rho(&self, factor: f64) -> Self {
        Self {
            rho: self.rho.scaled(factor),
            ..self.clone()
        }
    }

    /// Fills `truth` by deterministic quadrature. Supported for one-dimensional
    /// bodies and the unit disk.
    pub fn with_quadrature_truth(mut self) -> Result<Self> {
        self.truth = Some(quadrature_truth(&self)?);
        self.truth_ci = None;
        Ok(self)
    }

    pub fn to_record(&self) -> InstanceRecord {
        let mut rec = InstanceRecord {
            family_id: self.family_id.clone(),
            d: self.dim(),
            n: None,
            c: None,
            alpha: None,
            centers: None,
            radius: None,
            index: None,
            sign: None,
            cells: None,
            eps: None,
            name: None,
            truth: self.truth,
            truth_ci: self.truth_ci,
        };
        match &self.provenance {
            Provenance::RatioBoundedHard { n, c, cells, eps } => {
                rec.n = Some(*n);
                rec.c = Some(*c);
                rec.cells = Some(cells.clone());
                rec.eps = Some(eps.clone());
            }
            Provenance::LogConcaveHard {
                alpha,
                packing,
                index,
                sign,
            } => {
                rec.alpha = Some(*alpha);
                rec.centers = Some(packing.centers().iter().map(|p| p.to_vec()).collect());
                rec.radius = Some(packing.radius());
                rec.index = Some(*index);
                rec.sign = Some(*sign);
            }
            Provenance::Smooth { name } => rec.name = Some(name.clone()),
            Provenance::TiltedInterval { alpha } => rec.alpha = Some(*alpha),
            Provenance::Custom => {}
        }
        rec
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_record()).expect("instance record serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let rec: InstanceRecord =
            serde_json::from_str(s).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        rec.into_instance()
    }
}

/// Flat, language-neutral description of a built-in instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub family_id: String,
    pub d: usize,
    /// Half the number of cells of the ratio-bounded family.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub centers: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sign: Option<i8>,
    #[serde(rename = "I", default, skip_serializing_if = "Option::is_none")]
    pub cells: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<Vec<i8>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub truth: Option<f64>,
    #[serde(default)]
    pub truth_ci: Option<f64>,
}

impl InstanceRecord {
    pub fn into_instance(self) -> Result<ProblemInstance> {
        let missing = |field: &str| Error::InvalidArgument(format!("record lacks `{field}`"));
        match self.family_id.as_str() {
            FC_FAMILY => {
                let cells = self.cells.ok_or_else(|| missing("I"))?;
                let eps = self.eps.ok_or_else(|| missing("eps"))?;
                let c = self.c.ok_or_else(|| missing("C"))?;
                let n = self.n.ok_or_else(|| missing("n"))?;
                Ok(build_fc(n, c, cells, eps)?.instance)
            }
            FAD_FAMILY => {
                let alpha = self.alpha.ok_or_else(|| missing("alpha"))?;
                let radius = self.radius.ok_or_else(|| missing("radius"))?;
                let centers = self
                    .centers
                    .ok_or_else(|| missing("centers"))?
                    .into_iter()
                    .map(Point::new)
                    .collect::<Result<Vec<_>>>()?;
                let packing = Packing::new(centers, radius)?;
                let index = self.index.ok_or_else(|| missing("index"))?;
                let sign = self.sign.ok_or_else(|| missing("sign"))?;
                make_fad_instance(alpha, &packing, index, sign)
            }
            SMOOTH_FAMILY => make_smooth_instance(&self.name.ok_or_else(|| missing("name"))?),
            TILT_FAMILY => make_tilted_interval_instance(self.alpha.ok_or_else(|| missing("alpha"))?),
            other => Err(Error::NotFound(other.to_string())),
        }
    }
}

pub const FC_FAMILY: &str = "ratio-bounded-hard";
pub const FAD_FAMILY: &str = "log-concave-hard";
pub const SMOOTH_FAMILY: &str = "smooth";
pub const TILT_FAMILY: &str = "tilted-interval";

/// Ratio-bounded hard instance on `[0, 1]` with `m = 2n` cells.
#[derive(Clone, Debug, PartialEq)]
pub struct FcHardInstance {
    pub n: usize,
    pub m: usize,
    pub l: usize,
    pub c: f64,
    /// Zero-based indices of the high-density cells, ascending.
    pub cells: Vec<usize>,
    /// Signs aligned with `cells`.
    pub eps: Vec<i8>,
    /// `(l C + m - l) / m`, the integral of `ρ`.
    pub c_ml: f64,
    pub instance: ProblemInstance,
}

/// Size of the high-density set: `ceil(m / (C - 1))` when `m >= C - 1`, else 1.
/// Capped at `m`, which also covers the flat limit `C = 1`.
pub fn fc_support_size(m: usize, c: f64) -> usize {
    let mf = m as f64;
    if mf >= c - 1.0 {
        let l = (mf / (c - 1.0)).ceil();
        if l.is_finite() {
            (l as usize).clamp(1, m)
        } else {
            m
        }
    } else {
        1
    }
}

/// Builds the instance for an explicit prior realization `(I, ε)`.
pub fn make_fc_instance(n: usize, c: f64, cells: Vec<usize>, eps: Vec<i8>) -> Result<FcHardInstance> {
    if !(c > 1.0) || !c.is_finite() {
        return Err(Error::InvalidClass(format!("need C > 1, got {c}")));
    }
    build_fc(n, c, cells, eps)
}

fn build_fc(n: usize, c: f64, mut cells: Vec<usize>, eps: Vec<i8>) -> Result<FcHardInstance> {
    if n < 1 {
        return Err(Error::InvalidArgument("need n >= 1".into()));
    }
    if !(c >= 1.0) || !c.is_finite() {
        return Err(Error::InvalidClass(format!("need C >= 1, got {c}")));
    }
    let m = 2 * n;
    let l = fc_support_size(m, c);
    if cells.len() != l {
        return Err(Error::InvalidPrior(format!("|I| = {} but l = {l}", cells.len())));
    }
    if eps.len() != l {
        return Err(Error::InvalidPrior(format!("{} signs for {l} cells", eps.len())));
    }
    if eps.iter().any(|&e| e != 1 && e != -1) {
        return Err(Error::InvalidPrior("signs must be +1 or -1".into()));
    }
    let mut paired: Vec<(usize, i8)> = cells.iter().copied().zip(eps).collect();
    paired.sort_by_key(|p| p.0);
    cells = paired.iter().map(|p| p.0).collect();
    let eps: Vec<i8> = paired.iter().map(|p| p.1).collect();
    if cells.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidPrior("duplicate cell index".into()));
    }
    if let Some(&bad) = cells.iter().find(|&&j| j >= m) {
        return Err(Error::InvalidPrior(format!("cell {bad} outside 0..{m}")));
    }

    let mut rho = vec![1.0; m];
    let mut f = vec![0.0; m];
    for (&j, &e) in cells.iter().zip(&eps) {
        rho[j] = c;
        f[j] = f64::from(e);
    }
    let sign_sum: i64 = eps.iter().map(|&e| i64::from(e)).sum();
    let mass = l as f64 * c + (m - l) as f64;
    let truth = c * sign_sum as f64 / mass;
    let instance = ProblemInstance {
        family_id: FC_FAMILY.into(),
        body: ConvexBody::unit_interval(),
        f: IntegrandOracle {
            form: Integrand::Cells { values: f },
            norm: NormTag::SupBounded,
        },
        rho: WeightOracle {
            form: Weight::Cells { values: rho },
            class: DensityClass::RatioBounded { c },
        },
        truth: Some(truth),
        truth_ci: None,
        provenance: Provenance::RatioBoundedHard {
            n,
            c,
            cells: cells.clone(),
            eps: eps.clone(),
        },
    };
    Ok(FcHardInstance {
        n,
        m,
        l,
        c,
        cells,
        eps,
        c_ml: mass / m as f64,
        instance,
    })
}

/// Draws `I` uniformly among `l`-subsets of the `2n` cells and i.i.d. fair signs.
///
/// `C = 1` is accepted as the flat limit: every cell is in `I` and `ρ ≡ 1`.
pub fn sample_fc_prior(n: usize, c: f64, rng: &mut RngStream) -> Result<FcHardInstance> {
    if !(c >= 1.0) || !c.is_finite() {
        return Err(Error::InvalidClass(format!("need C >= 1, got {c}")));
    }
    let m = 2 * n;
    let l = fc_support_size(m, c);
    let mut cells = rand::seq::index::sample(rng, m, l).into_vec();
    cells.sort_unstable();
    let eps = (0..l).map(|_| rng.sign()).collect();
    build_fc(n, c, cells, eps)
}

/// `∫_{B(0,r)} exp(-α‖y‖) dy` in dimension `d`.
pub fn centered_ball_mass(d: usize, alpha: f64, r: f64) -> Result<f64> {
    let surface = d as f64 * vol_unit_ball(d)?;
    let radial = quad::integrate(
        |t| t.powi(d as i32 - 1) * (-alpha * t).exp(),
        0.0,
        r,
        &[],
        1e-13,
    )?;
    Ok(surface * radial.value)
}

/// Fraction of the sphere `‖y - c‖ = t` inside `B^d`, where `‖c‖ = s`, for `d <= 3`.
fn sphere_fraction_inside(d: usize, s: f64, t: f64) -> f64 {
    if t <= 1.0 - s {
        return 1.0;
    }
    if t >= 1.0 + s {
        return 0.0;
    }
    // directions u with ⟨u, c/s⟩ <= kappa stay inside
    let kappa = ((1.0 - s * s - t * t) / (2.0 * s * t)).clamp(-1.0, 1.0);
    match d {
        1 => 0.5,
        2 => 1.0 - kappa.acos() / PI,
        3 => 0.5 * (1.0 + kappa),
        _ => unreachable!("radial fraction only for d <= 3"),
    }
}

/// `∫_{B^d} exp(-α‖y - c‖) dy` by radial quadrature around `c`, `d <= 3`.
pub fn shifted_ball_mass(alpha: f64, center: &[f64]) -> Result<f64> {
    let d = center.len();
    if d > 3 {
        return Err(Error::InvalidArgument(format!("radial quadrature needs d <= 3, got {d}")));
    }
    let s = center.iter().map(|v| v * v).sum::<f64>().sqrt();
    if s > 1.0 {
        return Err(Error::InvalidArgument("center outside the unit ball".into()));
    }
    let surface = d as f64 * vol_unit_ball(d)?;
    let q = quad::integrate(
        |t| surface * t.powi(d as i32 - 1) * (-alpha * t).exp() * sphere_fraction_inside(d, s, t),
        0.0,
        1.0 + s,
        &[1.0 - s],
        1e-13,
    )?;
    Ok(q.value)
}

/// Monte Carlo estimate of `S(f_i, ρ_i)` and its standard error: the
/// denominator `∫_{B^d} exp(-α‖y - y_i‖) dy` is averaged over uniform points.
pub fn fad_truth_monte_carlo(
    alpha: f64,
    packing: &Packing,
    index: usize,
    samples: usize,
    rng: &mut RngStream,
) -> Result<(f64, f64)> {
    let d = packing.dim();
    let center = packing
        .centers()
        .get(index)
        .ok_or_else(|| Error::InvalidArgument(format!("no packing center {index}")))?;
    if samples < 2 {
        return Err(Error::InvalidArgument("need at least two samples".into()));
    }
    let body = ConvexBody::unit_ball(d)?;
    let vol = body.volume();
    let mut y = vec![0.0; d];
    let (mut sum, mut sum2) = (0.0, 0.0);
    for _ in 0..samples {
        body.uniform_sample_into(rng, &mut y);
        let v = (-alpha * distance(&y, center)).exp();
        sum += v;
        sum2 += v * v;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = (sum2 / n - mean * mean).max(0.0) * n / (n - 1.0);
    let den = vol * mean;
    let den_se = vol * (var / n).sqrt();
    let num = centered_ball_mass(d, alpha, packing.radius())?;
    let s = (num / den).sqrt();
    // delta method: dS/dden = -S / (2 den)
    Ok((s, 0.5 * s * den_se / den))
}

/// Samples used for the Monte Carlo normalization when `d > 3`.
pub const FAD_MC_SAMPLES: usize = 2_000_000;
const FAD_MC_SEED: u64 = 0x5eed_fad0;

/// Member `(sign · f_i, ρ_i)` of the log-concave hard family on `B^d`.
pub fn make_fad_instance(alpha: f64, packing: &Packing, index: usize, sign: i8) -> Result<ProblemInstance> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidClass(format!("need alpha >= 0, got {alpha}")));
    }
    if sign != 1 && sign != -1 {
        return Err(Error::InvalidArgument(format!("sign must be +1 or -1, got {sign}")));
    }
    // revalidate: the packing may come from an untrusted record
    let packing = Packing::new(packing.centers().to_vec(), packing.radius())?;
    let d = packing.dim();
    let center = packing
        .centers()
        .get(index)
        .ok_or_else(|| Error::InvalidArgument(format!("index {index} outside 0..{}", packing.len())))?
        .to_vec();
    let r = packing.radius();

    let num = centered_ball_mass(d, alpha, r)?;
    let (den, s, ci) = if d <= 3 {
        let den = shifted_ball_mass(alpha, &center)?;
        (den, (num / den).sqrt(), None)
    } else {
        let mut rng = RngStream::new(FAD_MC_SEED, index as u64);
        let (s, se) = fad_truth_monte_carlo(alpha, &packing, index, FAD_MC_SAMPLES, &mut rng)?;
        (num / (s * s), s, Some(3.0 * se))
    };
    let c_i = 1.0 / den;
    let c_tilde = 1.0 / s;
    Ok(ProblemInstance {
        family_id: FAD_FAMILY.into(),
        body: ConvexBody::unit_ball(d)?,
        f: IntegrandOracle {
            form: Integrand::BallIndicator {
                center: center.clone(),
                radius: r,
                height: f64::from(sign) * c_tilde,
            },
            norm: NormTag::L2RhoBounded,
        },
        rho: WeightOracle::exp_distance(center, alpha, c_i),
        truth: Some(f64::from(sign) * s),
        truth_ci: ci,
        provenance: Provenance::LogConcaveHard {
            alpha,
            packing,
            index,
            sign,
        },
    })
}

/// All `2m` members `(±f_i, ρ_i)`, ordered by index then sign `+1, -1`.
pub fn fad_family(alpha: f64, packing: &Packing) -> Result<Vec<ProblemInstance>> {
    let mut out = Vec::with_capacity(2 * packing.len());
    for i in 0..packing.len() {
        let plus = make_fad_instance(alpha, packing, i, 1)?;
        let mut minus = plus.clone();
        minus.f = plus.f.negated();
        minus.truth = plus.truth.map(|t| -t);
        if let Provenance::LogConcaveHard { sign, .. } = &mut minus.provenance {
            *sign = -1;
        }
        out.push(plus);
        out.push(minus);
    }
    Ok(out)
}

pub const SMOOTH_NAMES: [&str; 3] = ["constant-density", "gaussian-like", "linear-f"];

/// Benign instances with quadrature reference values.
///
/// * `constant-density`: `[0, 1]`, `ρ ≡ 1`, `f ≡ 0.3`
/// * `linear-f`: `[0, 1]`, `ρ ≡ 1`, `f(x) = x_1`
/// * `gaussian-like`: `B^2`, `ρ(x) = exp(-2‖x‖)`, `f(x) = x_1`
pub fn make_smooth_instance(name: &str) -> Result<ProblemInstance> {
    let (body, f, rho) = match name {
        "constant-density" => (
            ConvexBody::unit_interval(),
            IntegrandOracle::constant(0.3),
            WeightOracle::constant(1.0),
        ),
        "linear-f" => (
            ConvexBody::unit_interval(),
            IntegrandOracle::coordinate(0),
            WeightOracle::constant(1.0),
        ),
        "gaussian-like" => (
            ConvexBody::unit_ball(2)?,
            IntegrandOracle::coordinate(0),
            WeightOracle::exp_distance(vec![0.0, 0.0], 2.0, 1.0),
        ),
        other => return Err(Error::NotFound(other.to_string())),
    };
    ProblemInstance {
        family_id: SMOOTH_FAMILY.into(),
        provenance: Provenance::Smooth { name: name.into() },
        ..ProblemInstance::custom(body, f, rho)
    }
    .with_quadrature_truth()
}

/// `[-1, 1]`, `ρ(x) = exp(-alpha x)`, `f(x) = x`.
pub fn make_tilted_interval_instance(alpha: f64) -> Result<ProblemInstance> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidClass(format!("need alpha >= 0, got {alpha}")));
    }
    ProblemInstance {
        family_id: TILT_FAMILY.into(),
        provenance: Provenance::TiltedInterval { alpha },
        ..ProblemInstance::custom(
            ConvexBody::unit_ball(1)?,
            IntegrandOracle::coordinate(0),
            WeightOracle::exp_tilt(alpha),
        )
    }
    .with_quadrature_truth()
}

fn quadrature_truth(inst: &ProblemInstance) -> Result<f64> {
    const TOL: f64 = 1e-13;
    let f = |x: &[f64]| inst.f.evaluate(x);
    let rho = |x: &[f64]| inst.rho.evaluate(x);
    match (inst.body.kind(), inst.dim()) {
        (BodyKind::UnitInterval, 1) | (BodyKind::AxisCube, 1) | (BodyKind::UnitBall, 1) => {
            let (a, b) = if inst.body.kind() == BodyKind::UnitBall {
                (-1.0, 1.0)
            } else {
                (0.0, 1.0)
            };
            let breaks = breakpoints_1d(inst, a, b);
            let num = quad::integrate(|x| f(&[x]) * rho(&[x]), a, b, &breaks, TOL)?;
            let den = quad::integrate(|x| rho(&[x]), a, b, &breaks, TOL)?;
            Ok(num.value / den.value)
        }
        (BodyKind::UnitBall, 2) => {
            // polar coordinates, inner integral over the angle
            let polar = |g: &dyn Fn(&[f64]) -> f64| -> Result<f64> {
                let failure = std::cell::RefCell::new(None);
                let q = quad::integrate(
                    |r| {
                        match quad::integrate(
                            |th| g(&[r * th.cos(), r * th.sin()]),
                            0.0,
                            2.0 * PI,
                            &[],
                            TOL,
                        ) {
                            Ok(inner) => r * inner.value,
                            Err(e) => {
                                *failure.borrow_mut() = Some(e);
                                0.0
                            }
                        }
                    },
                    0.0,
                    1.0,
                    &[],
                    TOL,
                )?;
                match failure.into_inner() {
                    Some(e) => Err(e),
                    None => Ok(q.value),
                }
            };
            let num = polar(&|x| f(x) * rho(x))?;
            let den = polar(&|x| rho(x))?;
            Ok(num / den)
        }
        _ => Err(Error::InvalidArgument(
            "quadrature reference needs a one-dimensional body or the unit disk".into(),
        )),
    }
}

fn breakpoints_1d(inst: &ProblemInstance, a: f64, b: f64) -> Vec<f64> {
    let mut cuts = Vec::new();
    let cell_edges = |k: usize, cuts: &mut Vec<f64>| {
        cuts.extend((1..k).map(|j| j as f64 / k as f64));
    };
    if let Weight::Cells { values } = &inst.rho.form {
        cell_edges(values.len(), &mut cuts);
    }
    if let Weight::ExpDistance { center, .. } = &inst.rho.form {
        cuts.push(center[0]);
    }
    match &inst.f.form {
        Integrand::Cells { values } => cell_edges(values.len(), &mut cuts),
        Integrand::BallIndicator { center, radius, .. } => {
            cuts.push(center[0] - radius);
            cuts.push(center[0] + radius);
        }
        _ => {}
    }
    cuts.retain(|c| *c > a && *c < b);
    cuts
}
