//! Coupling matrices and their Laplacian spectra.
//!
//! `W = [w_ij]` holds the nonnegative weight agent i places on agent j.
//! The dispersion bound machinery needs three structural properties, checked
//! by [`CouplingMatrix::validate`]:
//!
//! * zero diagonal (no self-coupling),
//! * balance: out-weight equals in-weight per agent,
//! * irreducibility: the undirected support graph of `W + W^T` is connected.
//!
//! From a validated W, [`CouplingMatrix::laplacian`] builds the Laplacian
//! `L` (row sums zero) and its symmetrization `Lsym = L + L^T`, whose
//! second-smallest eigenvalue `lambda_2` is the algebraic connectivity that
//! enters every bound downstream.

use std::fmt;

use ndarray::{Array1, Array2, Axis};
use rand::distributions::Uniform;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Max |out-weight - in-weight| tolerated per agent. Cycle-sum generation is
/// exact up to summation order, so only rounding slack is needed.
pub const BALANCE_TOL: f64 = 1e-12;

/// Nonnegative square weight matrix. Construction enforces only shape and
/// entry-level sanity; the structural conditions are reported by
/// [`CouplingMatrix::validate`] so that callers can inspect a bad matrix
/// instead of never holding it.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    weights: Array2<f64>,
}

impl CouplingMatrix {
    pub fn new(weights: Array2<f64>) -> Result<Self> {
        let (rows, cols) = weights.dim();
        if rows != cols || rows == 0 {
            return Err(Error::NotSquare { rows, cols });
        }
        for ((i, j), &value) in weights.indexed_iter() {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::InvalidWeight { i, j, value });
            }
        }
        Ok(Self { weights })
    }

    /// Parses whitespace-separated rows, one agent per line. Blank lines and
    /// `#` comment lines are skipped.
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
                    detail: format!(
                        "row has {} entries, expected {}",
                        row.len(),
                        width.unwrap()
                    ),
                });
            }
            rows.push(row);
        }
        let n = rows.len();
        let width = width.unwrap_or(0);
        if n == 0 {
            return Err(Error::Parse {
                line: 0,
                detail: "no matrix rows found".to_string(),
            });
        }
        let flat: Vec<f64> = rows.into_iter().flatten().collect();
        let weights = Array2::from_shape_vec((n, width), flat).expect("row-major layout");
        Self::new(weights)
    }

    pub fn n_agents(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    /// Sum of all weights.
    pub fn total_weight(&self) -> f64 {
        self.weights.sum()
    }

    /// Max over agents of |out-weight - in-weight|.
    pub fn balance_residual(&self) -> f64 {
        let out: Array1<f64> = self.weights.sum_axis(Axis(1));
        let inn: Array1<f64> = self.weights.sum_axis(Axis(0));
        out.iter()
            .zip(inn.iter())
            .map(|(o, i)| (o - i).abs())
            .fold(0.0, f64::max)
    }

    /// Reports each structural condition independently.
    pub fn validate(&self) -> ValidationReport {
        let n = self.n_agents();
        let zero_diagonal = (0..n).all(|i| self.weights[[i, i]] == 0.0);
        let max_balance_residual = self.balance_residual();
        ValidationReport {
            zero_diagonal,
            balanced: max_balance_residual <= BALANCE_TOL,
            irreducible: self.support_connected(),
            max_balance_residual,
        }
    }

    /// Connectivity search (DFS) on the support graph of `W + W^T`: an edge
    /// joins i and j when either direction carries weight.
    fn support_connected(&self) -> bool {
        let n = self.n_agents();
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for (j, seen_j) in seen.iter_mut().enumerate() {
                if !*seen_j && (self.weights[[i, j]] > 0.0 || self.weights[[j, i]] > 0.0) {
                    *seen_j = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Random balanced irreducible matrix, deterministic per seed.
    ///
    /// Sums directed simple cycles, each carrying one positive weight drawn
    /// from `[0.5, 1.5) * weight_scale`: every cycle adds the same amount to
    /// the out- and in-weight of each node it visits, so balance holds by
    /// construction. The first cycle is Hamiltonian, which makes the support
    /// graph connected regardless of later draws; further cycles of random
    /// length are added until the fraction of nonzero off-diagonal entries
    /// reaches `density`.
    pub fn generate_balanced(
        n_agents: usize,
        density: f64,
        weight_scale: f64,
        seed: u64,
    ) -> Result<Self> {
        if n_agents < 2 {
            return Err(Error::InvalidArgument {
                what: "n_agents",
                detail: format!("need at least 2 agents, got {n_agents}"),
            });
        }
        if !(density > 0.0 && density <= 1.0) {
            return Err(Error::InvalidArgument {
                what: "density",
                detail: format!("must be in (0, 1], got {density}"),
            });
        }
        if !weight_scale.is_finite() || weight_scale <= 0.0 {
            return Err(Error::InvalidArgument {
                what: "weight_scale",
                detail: format!("must be positive, got {weight_scale}"),
            });
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weight_dist = Uniform::new(0.5 * weight_scale, 1.5 * weight_scale);
        let mut weights = Array2::<f64>::zeros((n_agents, n_agents));

        let add_cycle = |weights: &mut Array2<f64>, nodes: &[usize], w: f64| {
            for k in 0..nodes.len() {
                let from = nodes[k];
                let to = nodes[(k + 1) % nodes.len()];
                weights[[from, to]] += w;
            }
        };

        let mut hamiltonian: Vec<usize> = (0..n_agents).collect();
        hamiltonian.shuffle(&mut rng);
        add_cycle(&mut weights, &hamiltonian, weight_dist.sample(&mut rng));

        let slots = n_agents * (n_agents - 1);
        let target = ((density * slots as f64).ceil() as usize).max(1);
        let nnz = |weights: &Array2<f64>| weights.iter().filter(|w| **w > 0.0).count();

        let max_draws = 64 * n_agents * n_agents;
        let mut draws = 0;
        while nnz(&weights) < target {
            if draws >= max_draws {
                return Err(Error::GenerationFailed {
                    target: density,
                    draws,
                });
            }
            let len = rng.gen_range(2..=n_agents);
            let nodes = rand::seq::index::sample(&mut rng, n_agents, len).into_vec();
            add_cycle(&mut weights, &nodes, weight_dist.sample(&mut rng));
            draws += 1;
        }

        Self::new(weights)
    }

    /// Builds the Laplacian pair. Errors unless every structural condition
    /// holds, since the spectra are meaningless otherwise.
    pub fn laplacian(&self) -> Result<LaplacianPair> {
        let report = self.validate();
        if !report.all_passed() {
            return Err(Error::FailedValidation { report });
        }
        let n = self.n_agents();
        let mut l = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            let mut degree = 0.0;
            for j in 0..n {
                if j != i {
                    l[[i, j]] = -self.weights[[i, j]];
                    degree += self.weights[[i, j]];
                }
            }
            l[[i, i]] = degree;
        }
        let lsym = &l + &l.t();
        let eigenvalues_sym = symmetric_eigenvalues(&lsym);
        Ok(LaplacianPair {
            l,
            lsym,
            eigenvalues_sym,
        })
    }
}

/// Outcome of the structural checks, one flag per condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationReport {
    pub balanced: bool,
    pub irreducible: bool,
    pub zero_diagonal: bool,
    pub max_balance_residual: f64,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.balanced && self.irreducible && self.zero_diagonal
    }

    /// Multi-line `key: value` rendering for CLI output.
    pub fn to_text(&self) -> String {
        format!(
            "balanced: {}\nmax_balance_residual: {:e}\nirreducible: {}\nzero_diagonal: {}\n",
            self.balanced, self.max_balance_residual, self.irreducible, self.zero_diagonal
        )
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "balanced={} (max residual {:e}) irreducible={} zero_diagonal={}",
            self.balanced, self.max_balance_residual, self.irreducible, self.zero_diagonal
        )
    }
}

/// Laplacian `L` of W, its symmetrization `Lsym = L + L^T`, and the
/// eigenvalues of `Lsym` sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianPair {
    l: Array2<f64>,
    lsym: Array2<f64>,
    eigenvalues_sym: Vec<f64>,
}

impl LaplacianPair {
    pub fn l(&self) -> &Array2<f64> {
        &self.l
    }

    pub fn lsym(&self) -> &Array2<f64> {
        &self.lsym
    }

    /// Eigenvalues of `Lsym`, ascending. The smallest is 0 (eigenvector of
    /// all ones) whenever W is balanced.
    pub fn eigenvalues_sym(&self) -> &[f64] {
        &self.eigenvalues_sym
    }

    /// Second-smallest eigenvalue of `Lsym`. Errors when it sits below
    /// `1e-10 * spectral norm`, which signals a disconnected (or trivial)
    /// coupling graph rather than a usable spectral gap.
    pub fn lambda2(&self) -> Result<f64> {
        let scale = self
            .eigenvalues_sym
            .iter()
            .fold(0.0f64, |acc, e| acc.max(e.abs()));
        let threshold = 1e-10 * scale;
        match self.eigenvalues_sym.get(1) {
            Some(&lambda2) if lambda2 > threshold => Ok(lambda2),
            Some(&lambda2) => Err(Error::DegenerateSpectrum { lambda2, threshold }),
            None => Err(Error::DegenerateSpectrum {
                lambda2: 0.0,
                threshold,
            }),
        }
    }
}

/// Eigenvalues of a symmetric matrix, ascending, by cyclic Jacobi rotations.
/// Deterministic (fixed sweep order, no threading); plenty for the small
/// dense matrices that arise here.
pub fn symmetric_eigenvalues(m: &Array2<f64>) -> Vec<f64> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "matrix must be square");
    let mut a = m.clone();

    let frob: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let tol = 1e-14 * frob.max(f64::MIN_POSITIVE);

    for _sweep in 0..100 {
        let mut off_sq = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off_sq += a[[p, q]] * a[[p, q]];
            }
        }
        if (2.0 * off_sq).sqrt() <= tol {
            break;
        }
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let apq = a[[p, q]];
                if apq.abs() <= 0.25 * tol / n as f64 {
                    continue;
                }
                // Rotation angle that annihilates a[p][q].
                let theta = (a[[q, q]] - a[[p, p]]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[[k, p]];
                    let akq = a[[k, q]];
                    a[[k, p]] = c * akp - s * akq;
                    a[[k, q]] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[[p, k]];
                    let aqk = a[[q, k]];
                    a[[p, k]] = c * apk - s * aqk;
                    a[[q, k]] = s * apk + c * aqk;
                }
            }
        }
    }

    let mut eigenvalues: Vec<f64> = (0..n).map(|i| a[[i, i]]).collect();
    eigenvalues.sort_by(f64::total_cmp);
    eigenvalues
}
