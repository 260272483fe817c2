//! Finite-state Markov chains: discretized Metropolis kernels, spectral
//! gap, conductance, and simulated error of time averages.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Domain, Point};
use crate::instances::WeightOracle;
use crate::rng::RngStream;

const TOL: f64 = 1e-12;

/// Largest state count accepted by exhaustive subset enumeration.
pub const EXHAUSTIVE_LIMIT: usize = 20;

/// A reversible row-stochastic kernel with its invariant distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteChain {
    kernel: DMatrix<f64>,
    pi: Vec<f64>,
}

impl DiscreteChain {
    /// Validates row sums, positivity of `pi`, and detailed balance (all to 1e-12).
    pub fn new(kernel: Vec<Vec<f64>>, pi: Vec<f64>) -> Result<Self> {
        let n = pi.len();
        if n < 1 || kernel.len() != n || kernel.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidArgument("kernel must be square and match pi".into()));
        }
        let k = DMatrix::from_fn(n, n, |i, j| kernel[i][j]);
        Self::from_parts(k, pi, TOL)
    }

    fn from_parts(kernel: DMatrix<f64>, pi: Vec<f64>, tol: f64) -> Result<Self> {
        let n = pi.len();
        if pi.iter().any(|p| !(*p > 0.0) || !p.is_finite()) {
            return Err(Error::InvalidArgument("pi must be positive".into()));
        }
        if (pi.iter().sum::<f64>() - 1.0).abs() > TOL {
            return Err(Error::InvalidArgument("pi must sum to 1".into()));
        }
        for i in 0..n {
            let row = kernel.row(i);
            if row.iter().any(|v| *v < 0.0 || !v.is_finite()) {
                return Err(Error::InvalidArgument(format!("row {i} has a negative entry")));
            }
            if (row.sum() - 1.0).abs() > TOL {
                return Err(Error::InvalidArgument(format!("row {i} does not sum to 1")));
            }
        }
        let chain = Self { kernel, pi };
        let gap = chain.detailed_balance_defect();
        if gap > tol {
            return Err(Error::Discretization(format!("detailed balance defect {gap:e}")));
        }
        Ok(chain)
    }

    /// `[[1-p, p], [p, 1-p]]` with uniform `pi`.
    pub fn two_state(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Domain(format!("p = {p} outside [0, 1]")));
        }
        Self::new(vec![vec![1.0 - p, p], vec![p, 1.0 - p]], vec![0.5, 0.5])
    }

    /// Every row equal to `pi`.
    pub fn rank_one(pi: Vec<f64>) -> Result<Self> {
        let n = pi.len();
        let k = DMatrix::from_fn(n, n, |_, j| pi[j]);
        Self::from_parts(k, pi, TOL)
    }

    /// Finite-volume Metropolis ball walk on `[-1, 1]` with `states` equal
    /// cells and `ρ` evaluated at cell midpoints. For `delta <= 1/states`
    /// no cell reaches its neighbour and the chain is the identity (β = 1).
    pub fn discretize_1d(rho: &WeightOracle, delta: f64, states: usize) -> Result<Self> {
        if states < 2 {
            return Err(Error::InvalidArgument("need at least two cells".into()));
        }
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::Domain(format!("delta = {delta}")));
        }
        let h = 2.0 / states as f64;
        let mid: Vec<f64> = (0..states).map(|i| -1.0 + (i as f64 + 0.5) * h).collect();
        let rho_mid: Vec<f64> = mid
            .iter()
            .map(|x| {
                let r = rho.evaluate(&[*x]);
                if r > 0.0 && r.is_finite() {
                    Ok(r)
                } else {
                    Err(Error::InvalidDensity(r))
                }
            })
            .collect::<Result<_>>()?;
        let mut k = DMatrix::zeros(states, states);
        for i in 0..states {
            for j in (i + 1)..states {
                let (a, b) = (-1.0 + j as f64 * h, -1.0 + (j + 1) as f64 * h);
                let overlap = ((mid[i] + delta).min(b) - (mid[i] - delta).max(a)).max(0.0);
                let w = overlap / (2.0 * delta);
                k[(i, j)] = w * (rho_mid[j] / rho_mid[i]).min(1.0);
                k[(j, i)] = w * (rho_mid[i] / rho_mid[j]).min(1.0);
            }
        }
        for i in 0..states {
            let off: f64 = (0..states).filter(|j| *j != i).map(|j| k[(i, j)]).sum();
            k[(i, i)] = 1.0 - off;
        }
        let total: f64 = rho_mid.iter().sum();
        let pi = rho_mid.iter().map(|r| r / total).collect();
        Self::from_parts(k, pi, 1e-9)
    }

    pub fn states(&self) -> usize {
        self.pi.len()
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn kernel(&self) -> &DMatrix<f64> {
        &self.kernel
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.kernel[(i, j)]
    }

    /// Largest `|π_i K_ij − π_j K_ji|`.
    pub fn detailed_balance_defect(&self) -> f64 {
        let n = self.states();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                let d = (self.pi[i] * self.kernel[(i, j)] - self.pi[j] * self.kernel[(j, i)]).abs();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Largest `|Σ_j K_ij − 1|`.
    pub fn row_sum_defect(&self) -> f64 {
        (0..self.states())
            .map(|i| (self.kernel.row(i).sum() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// `min_i (1 − K_ii)`, the smallest probability of leaving a state.
    pub fn min_escape(&self) -> f64 {
        (0..self.states())
            .map(|i| 1.0 - self.kernel[(i, i)])
            .fold(f64::INFINITY, f64::min)
    }

    /// `D^{1/2} K D^{-1/2}` with `D = diag(π)`, symmetrized.
    pub fn symmetrized(&self) -> DMatrix<f64> {
        let n = self.states();
        let s = DMatrix::from_fn(n, n, |i, j| {
            self.pi[i].sqrt() * self.kernel[(i, j)] / self.pi[j].sqrt()
        });
        (&s + s.transpose()) * 0.5
    }

    fn eigen(&self) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
        SymmetricEigen::try_new(self.symmetrized(), 1e-15, 10_000)
            .ok_or_else(|| Error::NumericFailure("symmetric eigensolver did not converge".into()))
    }
}

fn second_index(values: &[f64]) -> Option<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|a, b| values[*b].total_cmp(&values[*a]));
    order.get(1).copied()
}

/// Second-largest eigenvalue β of the kernel (β = 0 for a single state).
pub fn second_eigenvalue(chain: &DiscreteChain) -> Result<f64> {
    if chain.states() == 1 {
        return Ok(0.0);
    }
    let eig = chain.eigen()?;
    let idx = second_index(eig.eigenvalues.as_slice()).expect("at least two eigenvalues");
    Ok(eig.eigenvalues[idx])
}

/// Eigenvector of β as a function on states, normalized to `Σπf = 0`,
/// `Σπf² = 1`, with its first non-negligible entry positive.
pub fn beta_eigenvector(chain: &DiscreteChain) -> Result<(f64, Vec<f64>)> {
    if chain.states() < 2 {
        return Err(Error::InvalidArgument("need at least two states".into()));
    }
    let eig = chain.eigen()?;
    let idx = second_index(eig.eigenvalues.as_slice()).expect("at least two eigenvalues");
    let v = eig.eigenvectors.column(idx);
    let mut f: Vec<f64> = v.iter().zip(&chain.pi).map(|(v, p)| v / p.sqrt()).collect();
    let mean: f64 = f.iter().zip(&chain.pi).map(|(f, p)| f * p).sum();
    f.iter_mut().for_each(|x| *x -= mean);
    let norm = f.iter().zip(&chain.pi).map(|(f, p)| f * f * p).sum::<f64>().sqrt();
    let lead = f.iter().copied().find(|x| x.abs() > 1e-9 * norm).unwrap_or(1.0);
    let scale = lead.signum() / norm;
    f.iter_mut().for_each(|x| *x *= scale);
    Ok((eig.eigenvalues[idx], f))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConductanceMode {
    /// Every nonempty proper subset.
    Exhaustive,
    /// Only sets of consecutive states; an upper bound on the true value.
    Contiguous,
}

fn flow_matrix(chain: &DiscreteChain) -> DMatrix<f64> {
    let n = chain.states();
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            0.5 * (chain.pi[i] * chain.kernel[(i, j)] + chain.pi[j] * chain.kernel[(j, i)])
        }
    })
}

/// Conductance `min_A Q(A, Aᶜ) / min{π(A), π(Aᶜ)}`.
pub fn conductance(chain: &DiscreteChain, mode: ConductanceMode) -> Result<f64> {
    let n = chain.states();
    if n < 2 {
        return Err(Error::InvalidArgument("need at least two states".into()));
    }
    let q = flow_matrix(chain);
    match mode {
        ConductanceMode::Exhaustive => {
            if n > EXHAUSTIVE_LIMIT {
                return Err(Error::SizeLimit {
                    size: n,
                    limit: EXHAUSTIVE_LIMIT,
                });
            }
            let off: Vec<f64> = (0..n).map(|i| q.row(i).sum()).collect();
            // into[s] = Q(A, {s})
            let mut into = vec![0.0; n];
            let mut member = vec![false; n];
            let mut mass = 0.0;
            let mut best = f64::INFINITY;
            let full = (1u32 << n) - 1;
            let mut prev_gray = 0u32;
            for k in 1u32..=full {
                let gray = k ^ (k >> 1);
                let bit = (gray ^ prev_gray).trailing_zeros() as usize;
                prev_gray = gray;
                let sign = if member[bit] { -1.0 } else { 1.0 };
                member[bit] = !member[bit];
                mass += sign * chain.pi[bit];
                for s in 0..n {
                    into[s] += sign * q[(bit, s)];
                }
                if gray == full {
                    continue;
                }
                let flow: f64 = (0..n).filter(|i| member[*i]).map(|i| off[i] - into[i]).sum();
                best = best.min(flow / mass.min(1.0 - mass));
            }
            Ok(best)
        }
        ConductanceMode::Contiguous => {
            let mut best = f64::INFINITY;
            for a in 0..n {
                for b in a..n {
                    if a == 0 && b == n - 1 {
                        continue;
                    }
                    let mass: f64 = chain.pi[a..=b].iter().sum();
                    let mut flow = 0.0;
                    for i in a..=b {
                        for j in (0..a).chain(b + 1..n) {
                            flow += q[(i, j)];
                        }
                    }
                    best = best.min(flow / mass.min(1.0 - mass));
                }
            }
            Ok(best)
        }
    }
}

/// Exhaustive conductance; fails with `SizeLimit` above [`EXHAUSTIVE_LIMIT`] states.
pub fn conductance_exact(chain: &DiscreteChain) -> Result<f64> {
    conductance(chain, ConductanceMode::Exhaustive)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalConductance {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl LocalConductance {
    /// `estimate ± z·std_error`, clipped to `[0, 1]`.
    pub fn interval(&self, z: f64) -> (f64, f64) {
        (
            (self.estimate - z * self.std_error).max(0.0),
            (self.estimate + z * self.std_error).min(1.0),
        )
    }
}

/// Fraction of uniform proposals from `B(x, δ)` that land in the body.
pub fn local_conductance_mc<B: Domain + ?Sized>(
    body: &B,
    x: &Point,
    delta: f64,
    samples: usize,
    rng: &mut RngStream,
) -> Result<LocalConductance> {
    if x.dim() != body.dim() {
        return Err(Error::InvalidDimension(x.dim()));
    }
    if !body.contains(x) {
        return Err(Error::InvalidState("point outside the body".into()));
    }
    if samples < 1 || !(delta > 0.0) {
        return Err(Error::InvalidArgument("need samples >= 1 and delta > 0".into()));
    }
    let mut y = vec![0.0; x.dim()];
    let mut inside = 0usize;
    for _ in 0..samples {
        rng.fill_unit_ball(&mut y);
        y.iter_mut().zip(x.iter()).for_each(|(y, x)| *y = x + delta * *y);
        if body.contains(&y) {
            inside += 1;
        }
    }
    let p = inside as f64 / samples as f64;
    Ok(LocalConductance {
        estimate: p,
        std_error: (p * (1.0 - p) / samples as f64).sqrt(),
        samples,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub states: usize,
    pub beta: f64,
    pub lambda: f64,
    pub conductance: f64,
    pub conductance_mode: ConductanceMode,
    pub cheeger_ok: bool,
}

pub fn spectral_report(chain: &DiscreteChain, mode: ConductanceMode) -> Result<SpectralReport> {
    let beta = second_eigenvalue(chain)?;
    let phi = conductance(chain, mode)?;
    let lambda = 1.0 - beta;
    Ok(SpectralReport {
        states: chain.states(),
        beta,
        lambda,
        conductance: phi,
        conductance_mode: mode,
        cheeger_ok: lambda >= phi * phi / 2.0,
    })
}

/// Full report with exhaustive conductance; `PropertyViolation` if `λ < φ²/2`.
pub fn check_cheeger(chain: &DiscreteChain) -> Result<SpectralReport> {
    let report = spectral_report(chain, ConductanceMode::Exhaustive)?;
    if !report.cheeger_ok {
        return Err(Error::PropertyViolation(format!(
            "gap {} below phi^2/2 = {}",
            report.lambda,
            report.conductance * report.conductance / 2.0
        )));
    }
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorLawRow {
    pub n: usize,
    /// `n · E|mean − Σπf|²` over replications.
    pub scaled_mse: f64,
    pub std_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorLaw {
    pub beta: f64,
    /// `(1+β)/(1−β)`.
    pub limit: f64,
    pub rows: Vec<ErrorLawRow>,
}

/// Simulates time averages of `f` along the chain. Each replication starts
/// at `start`, takes one burn-in step, then averages `f` over `n` states.
/// `f` must satisfy `Σπf = 0` and `Σπf² = 1`.
pub fn asymptotic_error_law(
    chain: &DiscreteChain,
    f: &[f64],
    schedule: &[usize],
    replications: usize,
    seed: u64,
    start: usize,
) -> Result<ErrorLaw> {
    let n_states = chain.states();
    if f.len() != n_states || start >= n_states {
        return Err(Error::InvalidArgument("f and start must index the states".into()));
    }
    let mean: f64 = f.iter().zip(&chain.pi).map(|(f, p)| f * p).sum();
    let second: f64 = f.iter().zip(&chain.pi).map(|(f, p)| f * f * p).sum();
    if mean.abs() > 1e-9 || (second - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument("f must be centered with unit variance under pi".into()));
    }
    if schedule.is_empty() || schedule[0] < 1 || schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("schedule must be strictly increasing and positive".into()));
    }
    if replications < 2 {
        return Err(Error::InvalidArgument("need at least two replications".into()));
    }
    let beta = second_eigenvalue(chain)?;
    let cumulative: Vec<Vec<f64>> = (0..n_states)
        .map(|i| {
            let mut acc = 0.0;
            chain
                .kernel
                .row(i)
                .iter()
                .map(|k| {
                    acc += k;
                    acc
                })
                .collect()
        })
        .collect();
    let step = |state: usize, u: f64| -> usize {
        let row = &cumulative[state];
        row.iter().position(|c| u < *c).unwrap_or(n_states - 1)
    };
    let horizon = *schedule.last().expect("non-empty schedule");

    let sq: Vec<Vec<f64>> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let mut rng = RngStream::new(seed, r as u64);
            let mut state = step(start, rng.uniform());
            let mut sum = 0.0;
            let mut out = Vec::with_capacity(schedule.len());
            let mut next = 0;
            for t in 1..=horizon {
                sum += f[state];
                if t == schedule[next] {
                    let m = sum / t as f64;
                    out.push(m * m * t as f64);
                    next += 1;
                }
                if t < horizon {
                    state = step(state, rng.uniform());
                }
            }
            out
        })
        .collect();

    let rows = schedule
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let vals = sq.iter().map(|v| v[k]);
            let m = vals.clone().sum::<f64>() / replications as f64;
            let var = vals.map(|v| (v - m).powi(2)).sum::<f64>() / (replications - 1) as f64;
            ErrorLawRow {
                n,
                scaled_mse: m,
                std_error: (var / replications as f64).sqrt(),
            }
        })
        .collect();
    Ok(ErrorLaw {
        beta,
        limit: (1.0 + beta) / (1.0 - beta),
        rows,
    })
}
