//! Fixed-step time integration of the swarm dynamics.
//!
//! Fixed-step RK4 is the default: the dynamics are smooth, mildly stiff at
//! most, and a fixed step keeps runs deterministic, so identical inputs
//! reproduce trajectories bit for bit. Forward Euler is retained as the
//! contrast case for convergence-order checks. There is no adaptivity; a
//! divergence guard aborts when any coordinate leaves `[-1e12, 1e12]` or
//! stops being finite.

use ndarray::Array2;

use crate::coupling::CouplingMatrix;
use crate::dynamics::{self, CenterState, SwarmState};
use crate::error::{Error, Result};
use crate::kernel::InteractionKernel;

/// Coordinate magnitude beyond which a run is declared divergent.
pub const DIVERGENCE_GUARD: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Rk4,
    Euler,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Steps between recorded samples; the initial and final states are
    /// always recorded.
    pub record_stride: usize,
    pub method: Method,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_end: 30.0,
            record_stride: 10,
            method: Method::Rk4,
        }
    }
}

impl IntegrationConfig {
    /// Shape check; [`integrate`] runs it, callers that build configs from
    /// user input can run it earlier for a cheaper failure.
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidArgument {
                what: "dt",
                detail: format!("must be positive, got {}", self.dt),
            });
        }
        if !(self.t_end.is_finite() && self.t_end >= self.dt) {
            return Err(Error::InvalidArgument {
                what: "t_end",
                detail: format!("must be at least dt = {}, got {}", self.dt, self.t_end),
            });
        }
        if self.record_stride == 0 {
            return Err(Error::InvalidArgument {
                what: "record_stride",
                detail: "must be at least 1".to_string(),
            });
        }
        Ok(())
    }
}

/// One recorded instant: positions plus the derived series.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySample {
    pub time: f64,
    pub positions: Array2<f64>,
    pub center: ndarray::Array1<f64>,
    pub lyapunov: f64,
    pub dispersion: f64,
}

/// Recorded run. Derived series (center, V, dispersion) are recomputed from
/// the stored positions at construction, so they are consistent by
/// construction whether the trajectory came from the integrator or from a
/// reloaded CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    samples: Vec<TrajectorySample>,
    coincident_samples: usize,
}

impl Trajectory {
    /// Builds a trajectory from raw `(time, positions)` records, recomputing
    /// every derived quantity. Times must be strictly increasing and shapes
    /// uniform.
    pub fn from_records(records: Vec<(f64, Array2<f64>)>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::InvalidArgument {
                what: "trajectory records",
                detail: "no samples".to_string(),
            });
        }
        let shape = records[0].1.dim();
        let mut samples = Vec::with_capacity(records.len());
        let mut coincident_samples = 0;
        let mut prev_time = f64::NEG_INFINITY;
        for (time, positions) in records {
            if !time.is_finite() || time <= prev_time {
                return Err(Error::InvalidArgument {
                    what: "trajectory times",
                    detail: format!("time {time} after {prev_time} is not strictly increasing"),
                });
            }
            prev_time = time;
            if positions.dim() != shape {
                return Err(Error::InvalidArgument {
                    what: "trajectory records",
                    detail: format!("shape {:?} differs from {:?}", positions.dim(), shape),
                });
            }
            let state = SwarmState::new(positions, time)?;
            if state.has_coincident_pair() {
                coincident_samples += 1;
            }
            let center = CenterState::of(&state);
            let dispersion = center.dispersion();
            samples.push(TrajectorySample {
                time,
                center: center.center().clone(),
                lyapunov: 0.5 * dispersion,
                dispersion,
                positions: state.into_positions(),
            });
        }
        Ok(Self {
            samples,
            coincident_samples,
        })
    }

    pub fn samples(&self) -> &[TrajectorySample] {
        &self.samples
    }

    pub fn first(&self) -> &TrajectorySample {
        self.samples.first().expect("trajectories are non-empty")
    }

    pub fn last(&self) -> &TrajectorySample {
        self.samples.last().expect("trajectories are non-empty")
    }

    /// Recorded samples containing at least one agent pair closer than
    /// [`crate::kernel::COINCIDENCE_EPS`].
    pub fn coincident_samples(&self) -> usize {
        self.coincident_samples
    }

    pub fn final_state(&self) -> SwarmState {
        let sample = self.last();
        SwarmState::new(sample.positions.clone(), sample.time)
            .expect("recorded samples are finite")
    }
}

/// Advances the swarm from `initial` to `t_end`, recording every
/// `record_stride`-th step (plus the first and last).
pub fn integrate(
    initial: &SwarmState,
    coupling: &CouplingMatrix,
    kernel: &InteractionKernel,
    config: &IntegrationConfig,
) -> Result<Trajectory> {
    config.validate()?;
    if coupling.n_agents() != initial.n_agents() {
        return Err(Error::DimensionMismatch {
            context: "integrate agent count",
            expected: coupling.n_agents(),
            actual: initial.n_agents(),
        });
    }

    let n_steps = ((config.t_end / config.dt).round() as usize).max(1);
    let t0 = initial.time();
    let mut positions = initial.positions().clone();
    let mut records: Vec<(f64, Array2<f64>)> =
        Vec::with_capacity(n_steps / config.record_stride + 2);
    records.push((t0, positions.clone()));

    for step in 1..=n_steps {
        step_in_place(&mut positions, coupling, kernel, config.dt, config.method)?;
        let time = t0 + step as f64 * config.dt;
        check_divergence(&positions, time)?;
        if step % config.record_stride == 0 || step == n_steps {
            records.push((time, positions.clone()));
        }
    }

    Trajectory::from_records(records)
}

fn step_in_place(
    positions: &mut Array2<f64>,
    coupling: &CouplingMatrix,
    kernel: &InteractionKernel,
    dt: f64,
    method: Method,
) -> Result<()> {
    match method {
        Method::Euler => {
            let k1 = dynamics::rhs_positions(positions, coupling, kernel)?;
            positions.zip_mut_with(&k1, |x, k| *x += dt * k);
        }
        Method::Rk4 => {
            let k1 = dynamics::rhs_positions(positions, coupling, kernel)?;
            let stage2 = stage(positions, &k1, 0.5 * dt);
            let k2 = dynamics::rhs_positions(&stage2, coupling, kernel)?;
            let stage3 = stage(positions, &k2, 0.5 * dt);
            let k3 = dynamics::rhs_positions(&stage3, coupling, kernel)?;
            let stage4 = stage(positions, &k3, dt);
            let k4 = dynamics::rhs_positions(&stage4, coupling, kernel)?;
            let sixth = dt / 6.0;
            for ((((x, k1), k2), k3), k4) in positions
                .iter_mut()
                .zip(k1.iter())
                .zip(k2.iter())
                .zip(k3.iter())
                .zip(k4.iter())
            {
                *x += sixth * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            }
        }
    }
    Ok(())
}

fn stage(base: &Array2<f64>, slope: &Array2<f64>, factor: f64) -> Array2<f64> {
    let mut out = base.clone();
    out.zip_mut_with(slope, |x, k| *x += factor * k);
    out
}

fn check_divergence(positions: &Array2<f64>, time: f64) -> Result<()> {
    for &v in positions.iter() {
        if !v.is_finite() || v.abs() > DIVERGENCE_GUARD {
            return Err(Error::Divergence {
                time,
                detail: format!("coordinate reached {v:e}"),
            });
        }
    }
    Ok(())
}

/// Observed self-convergence order from final states at a ladder of step
/// sizes: integrates the same problem at each `dt`, takes the difference of
/// consecutive finals as the error proxy, and averages the pairwise
/// `log(err ratio) / log(dt ratio)` slopes.
pub fn convergence_order(
    initial: &SwarmState,
    coupling: &CouplingMatrix,
    kernel: &InteractionKernel,
    t_end: f64,
    dts: &[f64],
    method: Method,
) -> Result<f64> {
    if dts.len() < 3 {
        return Err(Error::InvalidArgument {
            what: "dt ladder",
            detail: "need at least 3 step sizes".to_string(),
        });
    }
    for pair in dts.windows(2) {
        if pair[1] >= pair[0] {
            return Err(Error::InvalidArgument {
                what: "dt ladder",
                detail: "step sizes must be strictly decreasing".to_string(),
            });
        }
    }

    let finals: Vec<Array2<f64>> = dts
        .iter()
        .map(|&dt| {
            let config = IntegrationConfig {
                dt,
                t_end,
                record_stride: usize::MAX,
                method,
            };
            integrate(initial, coupling, kernel, &config)
                .map(|traj| traj.last().positions.clone())
        })
        .collect::<Result<_>>()?;

    let errors: Vec<f64> = finals
        .windows(2)
        .map(|pair| {
            (&pair[0] - &pair[1])
                .iter()
                .map(|v| v * v)
                .sum::<f64>()
                .sqrt()
        })
        .collect();

    let mut orders = Vec::new();
    for k in 0..errors.len() - 1 {
        if errors[k] == 0.0 || errors[k + 1] == 0.0 {
            continue;
        }
        orders.push((errors[k] / errors[k + 1]).ln() / (dts[k] / dts[k + 1]).ln());
    }
    if orders.is_empty() {
        return Err(Error::InvalidArgument {
            what: "dt ladder",
            detail: "errors vanished; problem too easy to measure order".to_string(),
        });
    }
    Ok(orders.iter().sum::<f64>() / orders.len() as f64)
}
