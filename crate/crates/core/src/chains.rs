//! Ball walk and ball walk with Metropolis filter.
//!
//! A ball-walk step proposes `y` uniform in `B(x, δ)` and holds at `x` when
//! `y` leaves the body. The Metropolis step filters inside proposals with
//! acceptance probability `min{1, ρ(y)/ρ(x)}`. `ρ` is only evaluated at
//! points inside the body and is cached at the current position, so holds
//! cost nothing.

use serde::{Deserialize, Serialize};

use crate::budget::ChainBudget;
use crate::error::{Error, Result};
use crate::geometry::{Domain, Point};
use crate::instances::WeightOracle;
use crate::rng::RngStream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stepper {
    Ball,
    Metropolis,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub stepper: Stepper,
    pub delta: f64,
}

impl ChainConfig {
    pub fn ball(delta: f64) -> Self {
        Self {
            stepper: Stepper::Ball,
            delta,
        }
    }

    pub fn metropolis(delta: f64) -> Self {
        Self {
            stepper: Stepper::Metropolis,
            delta,
        }
    }
}

/// Current position of a Metropolis chain with `ρ` cached there.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainState {
    position: Point,
    cached_rho: f64,
    step_index: u64,
}

impl ChainState {
    /// Evaluates `ρ` once at `position`.
    pub fn new(position: Point, rho: &WeightOracle, budget: &mut ChainBudget) -> Result<Self> {
        let cached_rho = eval_rho(rho, &position, budget)?;
        Ok(Self {
            position,
            cached_rho,
            step_index: 0,
        })
    }

    pub fn position(&self) -> &Point {
        &self.position
    }

    pub fn cached_rho(&self) -> f64 {
        self.cached_rho
    }

    pub fn step_index(&self) -> u64 {
        self.step_index
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkStats {
    pub steps: u64,
    /// Proposals that landed inside the body.
    pub inside: u64,
    /// Steps that changed the position.
    pub moves: u64,
}

#[inline]
fn eval_rho(rho: &WeightOracle, x: &[f64], budget: &mut ChainBudget) -> Result<f64> {
    budget.rho_evals += 1;
    let v = rho.evaluate(x);
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::InvalidDensity(v))
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("step size must be positive, got {delta}")))
    }
}

fn check_inside<B: Domain + ?Sized>(body: &B, x: &[f64]) -> Result<()> {
    if x.len() != body.dim() {
        return Err(Error::InvalidArgument(format!(
            "point of dimension {} in body of dimension {}",
            x.len(),
            body.dim()
        )));
    }
    if !body.contains(x) {
        return Err(Error::InvalidState(format!("{x:?} is not in the body")));
    }
    Ok(())
}

/// Reusable buffers for the hot loop.
struct Walker<'a, B: ?Sized> {
    body: &'a B,
    delta: f64,
    pos: Vec<f64>,
    prop: Vec<f64>,
    rho_x: f64,
}

impl<'a, B: Domain + ?Sized> Walker<'a, B> {
    fn new(body: &'a B, delta: f64, start: &[f64]) -> Self {
        Self {
            body,
            delta,
            pos: start.to_vec(),
            prop: vec![0.0; start.len()],
            rho_x: f64::NAN,
        }
    }

    /// Fills `prop` uniformly in `B(pos, δ)`; one membership call.
    #[inline]
    fn propose(&mut self, rng: &mut RngStream, budget: &mut ChainBudget) -> bool {
        rng.fill_unit_ball(&mut self.prop);
        budget.rng_draws += self.prop.len() as u64 + 1;
        for (p, x) in self.prop.iter_mut().zip(&self.pos) {
            *p = x + self.delta * *p;
        }
        budget.membership_calls += 1;
        self.body.contains(&self.prop)
    }

    #[inline]
    fn ball_step(&mut self, rng: &mut RngStream, budget: &mut ChainBudget, stats: &mut WalkStats) {
        stats.steps += 1;
        if self.propose(rng, budget) {
            stats.inside += 1;
            stats.moves += 1;
            std::mem::swap(&mut self.pos, &mut self.prop);
        }
    }

    #[inline]
    fn metropolis_step(
        &mut self,
        rho: &WeightOracle,
        rng: &mut RngStream,
        budget: &mut ChainBudget,
        stats: &mut WalkStats,
    ) -> Result<()> {
        stats.steps += 1;
        if !self.propose(rng, budget) {
            return Ok(());
        }
        stats.inside += 1;
        let rho_y = eval_rho(rho, &self.prop, budget)?;
        let accept = if rho_y >= self.rho_x {
            true
        } else {
            budget.rng_draws += 1;
            rho_y >= rng.uniform() * self.rho_x
        };
        if accept {
            stats.moves += 1;
            std::mem::swap(&mut self.pos, &mut self.prop);
            self.rho_x = rho_y;
        }
        Ok(())
    }
}

/// One ball-walk step from `x`. Exactly one membership call.
pub fn ball_walk_step<B: Domain + ?Sized>(
    x: &Point,
    delta: f64,
    body: &B,
    rng: &mut RngStream,
    budget: &mut ChainBudget,
) -> Result<Point> {
    check_delta(delta)?;
    check_inside(body, x)?;
    let mut w = Walker::new(body, delta, x);
    w.ball_step(rng, budget, &mut WalkStats::default());
    Ok(Point::from_vec_unchecked(w.pos))
}

/// One Metropolis step from `state`; returns whether the proposal was accepted.
///
/// Evaluates `ρ` once at an inside proposal and draws a uniform only when
/// `ρ(y) < ρ(x)`. Ties accept.
pub fn metropolis_step<B: Domain + ?Sized>(
    state: &mut ChainState,
    delta: f64,
    body: &B,
    rho: &WeightOracle,
    rng: &mut RngStream,
    budget: &mut ChainBudget,
) -> Result<bool> {
    check_delta(delta)?;
    check_inside(body, &state.position)?;
    let mut w = Walker::new(body, delta, &state.position);
    w.rho_x = state.cached_rho;
    let mut stats = WalkStats::default();
    w.metropolis_step(rho, rng, budget, &mut stats)?;
    state.step_index += 1;
    if stats.moves == 1 {
        state.position = Point::from_vec_unchecked(w.pos);
        state.cached_rho = w.rho_x;
        Ok(true)
    } else {
        Ok(false)
    }
}

/// Runs `steps` states `X_1, …, X_n` and hands each to `visit`.
///
/// `X_1` is one step of the underlying ball walk from `start`; later states
/// follow `config.stepper`. Metropolis chains need `rho`.
pub fn walk_chain<B, V>(
    start: &Point,
    steps: usize,
    config: ChainConfig,
    body: &B,
    rho: Option<&WeightOracle>,
    rng: &mut RngStream,
    budget: &mut ChainBudget,
    mut visit: V,
) -> Result<WalkStats>
where
    B: Domain + ?Sized,
    V: FnMut(&[f64]),
{
    check_delta(config.delta)?;
    check_inside(body, start)?;
    if steps < 1 {
        return Err(Error::InvalidArgument("a chain needs at least one step".into()));
    }
    let mut stats = WalkStats::default();
    let mut w = Walker::new(body, config.delta, start);
    w.ball_step(rng, budget, &mut stats);
    visit(&w.pos);
    match config.stepper {
        Stepper::Ball => {
            for _ in 1..steps {
                w.ball_step(rng, budget, &mut stats);
                visit(&w.pos);
            }
        }
        Stepper::Metropolis => {
            let rho = rho.ok_or_else(|| {
                Error::InvalidArgument("metropolis chain needs a density".into())
            })?;
            w.rho_x = eval_rho(rho, &w.pos, budget)?;
            for _ in 1..steps {
                w.metropolis_step(rho, rng, budget, &mut stats)?;
                visit(&w.pos);
            }
        }
    }
    Ok(stats)
}

/// Materialized trajectory of [`walk_chain`].
pub fn run_chain<B: Domain + ?Sized>(
    start: &Point,
    steps: usize,
    config: ChainConfig,
    body: &B,
    rho: Option<&WeightOracle>,
    rng: &mut RngStream,
) -> Result<(Vec<Point>, ChainBudget)> {
    let mut budget = ChainBudget::new();
    let mut traj = Vec::with_capacity(steps);
    walk_chain(start, steps, config, body, rho, rng, &mut budget, |x| {
        traj.push(Point::from_vec_unchecked(x.to_vec()))
    })?;
    Ok((traj, budget))
}
