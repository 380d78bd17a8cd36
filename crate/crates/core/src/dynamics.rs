//! Swarm equations of motion, the swarm center, and Lyapunov quantities.
//!
//! Positions live in an `N x n` array, one row per agent. The velocity of
//! agent i is the weighted sum of kernel forces from every other agent:
//!
//! ```text
//!     v_i = sum_j  w_ij * f(x_i - x_j)
//! ```
//!
//! Relative to the swarm center `xbar = mean_i x_i`, the error vectors
//! `e_i = x_i - xbar` define the Lyapunov function `V = 1/2 sum_i ||e_i||^2`
//! and the dispersion `2V`, the quantity the spectral bound in
//! [`crate::analysis`] traps.
//!
//! For a balanced coupling matrix the attraction terms cancel out of the
//! center's motion, leaving the repulsion-only form implemented by
//! [`center_velocity_repulsion`]; comparing it against the full mean velocity
//! is a strong end-to-end check of both code paths.

use ndarray::{Array1, Array2, Axis};
use rand::distributions::Uniform;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::coupling::{CouplingMatrix, BALANCE_TOL};
use crate::error::{Error, Result};
use crate::kernel::{GaussianKernel, InteractionKernel, COINCIDENCE_EPS};

/// Agent positions at an instant. Rows are agents.
#[derive(Debug, Clone, PartialEq)]
pub struct SwarmState {
    positions: Array2<f64>,
    time: f64,
}

impl SwarmState {
    pub fn new(positions: Array2<f64>, time: f64) -> Result<Self> {
        if positions.nrows() == 0 || positions.ncols() == 0 {
            return Err(Error::InvalidArgument {
                what: "positions",
                detail: format!("empty shape {:?}", positions.dim()),
            });
        }
        if !time.is_finite() || positions.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        Ok(Self { positions, time })
    }

    /// Uniform draw over the box `[lo, hi)^dim`, deterministic per seed.
    /// Coordinates are drawn agent by agent, coordinate by coordinate.
    pub fn sample_box(n_agents: usize, dim: usize, lo: f64, hi: f64, seed: u64) -> Result<Self> {
        if n_agents == 0 || dim == 0 {
            return Err(Error::InvalidArgument {
                what: "shape",
                detail: format!("n_agents = {n_agents}, dim = {dim}"),
            });
        }
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidArgument {
                what: "box bounds",
                detail: format!("[{lo}, {hi})"),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dist = Uniform::new(lo, hi);
        let positions =
            Array2::from_shape_fn((n_agents, dim), |_| dist.sample(&mut rng));
        Self::new(positions, 0.0)
    }

    /// Parses whitespace-separated coordinate rows, one agent per line.
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut width = None;
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row: Vec<f64> = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>().map_err(|_| Error::Parse {
                        line: idx + 1,
                        detail: format!("bad number {tok:?}"),
                    })
                })
                .collect::<Result<_>>()?;
            if *width.get_or_insert(row.len()) != row.len() {
                return Err(Error::Parse {
                    line: idx + 1,
                    detail: format!("row has {} entries, expected {}", row.len(), width.unwrap()),
                });
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::Parse {
                line: 0,
                detail: "no position rows found".to_string(),
            });
        }
        let (n, dim) = (rows.len(), width.unwrap_or(0));
        let flat: Vec<f64> = rows.into_iter().flatten().collect();
        let positions = Array2::from_shape_vec((n, dim), flat).expect("row-major layout");
        Self::new(positions, 0.0)
    }

    pub fn n_agents(&self) -> usize {
        self.positions.nrows()
    }

    pub fn dim(&self) -> usize {
        self.positions.ncols()
    }

    pub fn positions(&self) -> &Array2<f64> {
        &self.positions
    }

    pub(crate) fn into_positions(self) -> Array2<f64> {
        self.positions
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// Index pairs closer than `eps`. Coincidences are legal but worth
    /// surfacing: repulsion cannot separate exactly overlapping agents.
    pub fn coincident_pairs(&self, eps: f64) -> Vec<(usize, usize)> {
        let n = self.n_agents();
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if self.pair_distance_sq(i, j) < eps * eps {
                    pairs.push((i, j));
                }
            }
        }
        pairs
    }

    pub fn has_coincident_pair(&self) -> bool {
        let n = self.n_agents();
        for i in 0..n {
            for j in (i + 1)..n {
                if self.pair_distance_sq(i, j) < COINCIDENCE_EPS * COINCIDENCE_EPS {
                    return true;
                }
            }
        }
        false
    }

    fn pair_distance_sq(&self, i: usize, j: usize) -> f64 {
        let mut dist_sq = 0.0;
        for d in 0..self.dim() {
            let diff = self.positions[[i, d]] - self.positions[[j, d]];
            dist_sq += diff * diff;
        }
        dist_sq
    }
}

/// Swarm center `xbar`, error vectors `e_i = x_i - xbar`, and the dispersion
/// `sum_i ||e_i||^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct CenterState {
    center: Array1<f64>,
    errors: Array2<f64>,
    dispersion: f64,
}

impl CenterState {
    pub fn of(state: &SwarmState) -> Self {
        Self::of_positions(state.positions())
    }

    pub(crate) fn of_positions(positions: &Array2<f64>) -> Self {
        let center = positions
            .mean_axis(Axis(0))
            .expect("states hold at least one agent");
        let errors = positions - &center;
        let dispersion = errors.iter().map(|e| e * e).sum();
        Self {
            center,
            errors,
            dispersion,
        }
    }

    pub fn center(&self) -> &Array1<f64> {
        &self.center
    }

    pub fn errors(&self) -> &Array2<f64> {
        &self.errors
    }

    pub fn dispersion(&self) -> f64 {
        self.dispersion
    }
}

/// Swarm center (mean position).
pub fn center(state: &SwarmState) -> Array1<f64> {
    CenterState::of(state).center
}

fn check_agents(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            actual,
        })
    }
}

/// Velocity of every agent under the swarm dynamics: row i holds
/// `sum_j w_ij * f(x_i - x_j)`. Self-terms are skipped (the diagonal of W is
/// zero for any valid coupling, and skipping avoids spurious kernel
/// evaluations at zero separation).
pub fn rhs(
    state: &SwarmState,
    coupling: &CouplingMatrix,
    kernel: &InteractionKernel,
) -> Result<Array2<f64>> {
    check_agents("rhs agent count", coupling.n_agents(), state.n_agents())?;
    rhs_positions(state.positions(), coupling, kernel)
}

/// Force accumulation on a raw position array; shared by the integrator's
/// inner loop so stage states need not be re-validated.
pub(crate) fn rhs_positions(
    positions: &Array2<f64>,
    coupling: &CouplingMatrix,
    kernel: &InteractionKernel,
) -> Result<Array2<f64>> {
    let (n, dim) = positions.dim();
    let weights = coupling.weights();
    let mut velocities = Array2::<f64>::zeros((n, dim));
    // Fixed i-then-j summation order keeps results reproducible bit for bit.
    for i in 0..n {
        for j in 0..n {
            if j == i {
                continue;
            }
            let w_ij = weights[[i, j]];
            if w_ij == 0.0 {
                continue;
            }
            let mut dist_sq = 0.0;
            for d in 0..dim {
                let diff = positions[[i, d]] - positions[[j, d]];
                dist_sq += diff * diff;
            }
            let gain = kernel.radial_gain_sq(dist_sq)?;
            let scale = w_ij * gain;
            for d in 0..dim {
                velocities[[i, d]] -= scale * (positions[[i, d]] - positions[[j, d]]);
            }
        }
    }
    Ok(velocities)
}

/// Center velocity as the mean of all agent velocities.
pub fn center_velocity_full(
    state: &SwarmState,
    coupling: &CouplingMatrix,
    kernel: &InteractionKernel,
) -> Result<Array1<f64>> {
    let velocities = rhs(state, coupling, kernel)?;
    Ok(velocities
        .mean_axis(Axis(0))
        .expect("states hold at least one agent"))
}

/// Center velocity via the repulsion-only identity for balanced coupling and
/// a Gaussian kernel:
///
/// ```text
///     vbar = (b/N) * sum_i sum_j w_ij (x_i - x_j) exp(-||x_i - x_j||^2 / c)
/// ```
///
/// Balance makes the linear attraction cancel from the mean exactly, so this
/// closed form must agree with [`center_velocity_full`]; it errors on
/// unbalanced coupling where the identity does not hold.
pub fn center_velocity_repulsion(
    state: &SwarmState,
    coupling: &CouplingMatrix,
    kernel: &GaussianKernel,
) -> Result<Array1<f64>> {
    check_agents(
        "center_velocity_repulsion agent count",
        coupling.n_agents(),
        state.n_agents(),
    )?;
    let residual = coupling.balance_residual();
    if residual > BALANCE_TOL {
        return Err(Error::Unbalanced { residual });
    }
    let positions = state.positions();
    let weights = coupling.weights();
    let (n, dim) = positions.dim();
    let (b, c) = (kernel.repulsion(), kernel.range_sq());
    let mut velocity = Array1::<f64>::zeros(dim);
    for i in 0..n {
        for j in 0..n {
            if j == i {
                continue;
            }
            let w_ij = weights[[i, j]];
            if w_ij == 0.0 {
                continue;
            }
            let mut dist_sq = 0.0;
            for d in 0..dim {
                let diff = positions[[i, d]] - positions[[j, d]];
                dist_sq += diff * diff;
            }
            let scale = w_ij * (-dist_sq / c).exp();
            for d in 0..dim {
                velocity[d] += scale * (positions[[i, d]] - positions[[j, d]]);
            }
        }
    }
    Ok(velocity * (b / n as f64))
}

/// Lyapunov function and dispersion: `(V, 2V)` with
/// `V = 1/2 sum_i ||x_i - xbar||^2`.
pub fn lyapunov(state: &SwarmState) -> (f64, f64) {
    let dispersion = CenterState::of(state).dispersion;
    (0.5 * dispersion, dispersion)
}

/// Exact time derivative of V along the dynamics:
/// `sum_i e_i . (v_i - vbar)`.
pub fn lyapunov_rate(
    state: &SwarmState,
    coupling: &CouplingMatrix,
    kernel: &InteractionKernel,
) -> Result<f64> {
    let velocities = rhs(state, coupling, kernel)?;
    let center = CenterState::of(state);
    let mean_velocity = velocities
        .mean_axis(Axis(0))
        .expect("states hold at least one agent");
    let (n, dim) = velocities.dim();
    let mut rate = 0.0;
    for i in 0..n {
        for d in 0..dim {
            rate += center.errors[[i, d]] * (velocities[[i, d]] - mean_velocity[d]);
        }
    }
    Ok(rate)
}

/// Quadratic form `sum_ij lsym_ij * (e_i . e_j)`, the value of
/// `e^T (Lsym (x) I) e` without materializing the Kronecker product.
pub fn laplacian_quadratic_form(lsym: &Array2<f64>, errors: &Array2<f64>) -> f64 {
    let n = errors.nrows();
    let mut form = 0.0;
    for i in 0..n {
        for j in 0..n {
            let dot = errors.row(i).dot(&errors.row(j));
            form += lsym[[i, j]] * dot;
        }
    }
    form
}
