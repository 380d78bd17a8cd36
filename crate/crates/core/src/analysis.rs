//! Dispersion bounds and containment verdicts.
//!
//! For a balanced irreducible coupling matrix, the swarm's dispersion
//! `sum_i ||x_i - xbar||^2` is eventually trapped below `rho^2`, where rho
//! combines the kernel constants with the spectral gap `lambda_2` of
//! `L + L^T` and the total coupling weight `M`:
//!
//! ```text
//!     Gaussian kernel:          rho = 2 b M sqrt(2c) e^(-1/2) / (a lambda_2)
//!     bounded-repulsion kernel: rho = 4 b M / (a lambda_2)
//! ```
//!
//! The Gaussian case also yields the Lyapunov level
//! `threshold_v = (2 b M sqrt(c) e^(-1/2) / (a lambda_2))^2` above which V
//! strictly decreases; `rho^2 = 2 * threshold_v` since dispersion is 2V.
//!
//! "Eventually enter and remain" is checked on recorded samples: the entry
//! time is the earliest sample from which dispersion never again exceeds
//! `rho^2 * (1 + 1e-9)`, and containment additionally requires a residence
//! window of `t_hold` seconds before the horizon.

use std::f64::consts::SQRT_2;

use ndarray::Array1;

use crate::coupling::CouplingMatrix;
use crate::error::Result;
use crate::integrator::Trajectory;
use crate::kernel::{GaussianKernel, GeneralKernel};

/// Slack multiplier on `rho^2` when comparing recorded dispersion; absorbs
/// floating-point accumulation, nothing more.
pub const CONTAINMENT_SLACK: f64 = 1e-9;

/// Spectral dispersion bound for one kernel/coupling pairing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CohesionBound {
    pub lambda2: f64,
    pub total_weight: f64,
    /// Bound radius: dispersion is eventually trapped below `rho^2`.
    pub rho: f64,
    /// Lyapunov level above which V strictly decreases; only the Gaussian
    /// route gives one.
    pub threshold_v: Option<f64>,
}

impl CohesionBound {
    pub fn rho_sq(&self) -> f64 {
        self.rho * self.rho
    }
}

/// Bound for the Gaussian kernel. Errors when the coupling fails structural
/// validation or has no usable spectral gap.
pub fn cohesion_bound_gaussian(
    kernel: &GaussianKernel,
    coupling: &CouplingMatrix,
) -> Result<CohesionBound> {
    let pair = coupling.laplacian()?;
    let lambda2 = pair.lambda2()?;
    let total_weight = coupling.total_weight();
    // sqrt(V) bound: 2 b M sqrt(c) e^(-1/2) / (a lambda_2). rho and
    // threshold_v both derive from it, which keeps rho^2 = 2 * threshold_v
    // exact (dispersion = 2V).
    let sqrt_v_bound = 2.0 * kernel.repulsion() * total_weight * kernel.range_sq().sqrt()
        * (-0.5f64).exp()
        / (kernel.attraction() * lambda2);
    Ok(CohesionBound {
        lambda2,
        total_weight,
        rho: SQRT_2 * sqrt_v_bound,
        threshold_v: Some(sqrt_v_bound * sqrt_v_bound),
    })
}

/// Bound for a general bounded-repulsion kernel. The kernel's declared
/// constants are re-checked by sampling before they are trusted.
pub fn cohesion_bound_general(
    kernel: &GeneralKernel,
    coupling: &CouplingMatrix,
) -> Result<CohesionBound> {
    kernel.require_bounded_repulsion()?;
    let pair = coupling.laplacian()?;
    let lambda2 = pair.lambda2()?;
    let total_weight = coupling.total_weight();
    Ok(CohesionBound {
        lambda2,
        total_weight,
        rho: 4.0 * kernel.repulsion_bound() * total_weight
            / (kernel.attraction_constant() * lambda2),
        threshold_v: None,
    })
}

/// Containment verdict for one trajectory against one bound.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub bound: CohesionBound,
    pub t_hold: f64,
    pub t_end: f64,
    /// Earliest recorded time from which dispersion stays at or below
    /// `rho^2 * (1 + CONTAINMENT_SLACK)` through the horizon.
    pub entry_time: Option<f64>,
    /// Entry exists and the residence window `t_end - entry_time` reaches
    /// `t_hold`.
    pub contained: bool,
    pub max_dispersion_after_entry: Option<f64>,
}

impl BoundReport {
    /// Max post-entry dispersion over `rho^2`; how much of the bound the
    /// swarm actually used.
    pub fn dispersion_ratio(&self) -> Option<f64> {
        self.max_dispersion_after_entry
            .map(|d| d / self.bound.rho_sq())
    }

    /// Multi-line `key: value` rendering for reports and CLI output.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("lambda2: {}\n", self.bound.lambda2));
        out.push_str(&format!("total_weight: {}\n", self.bound.total_weight));
        out.push_str(&format!("rho: {}\n", self.bound.rho));
        out.push_str(&format!("rho_sq: {}\n", self.bound.rho_sq()));
        match self.bound.threshold_v {
            Some(v) => out.push_str(&format!("threshold_v: {v}\n")),
            None => out.push_str("threshold_v: none\n"),
        }
        out.push_str(&format!("t_hold: {}\n", self.t_hold));
        out.push_str(&format!("t_end: {}\n", self.t_end));
        match self.entry_time {
            Some(t) => out.push_str(&format!("entry_time: {t}\n")),
            None => out.push_str("entry_time: never\n"),
        }
        out.push_str(&format!("contained: {}\n", self.contained));
        match self.max_dispersion_after_entry {
            Some(d) => {
                out.push_str(&format!("max_dispersion_after_entry: {d}\n"));
                out.push_str(&format!(
                    "dispersion_ratio: {}\n",
                    self.dispersion_ratio().unwrap()
                ));
            }
            None => out.push_str("max_dispersion_after_entry: none\n"),
        }
        out
    }
}

/// Scans recorded samples for the entry time and residence window.
pub fn containment_check(traj: &Trajectory, bound: &CohesionBound, t_hold: f64) -> BoundReport {
    let limit = bound.rho_sq() * (1.0 + CONTAINMENT_SLACK);
    let samples = traj.samples();
    let t_end = traj.last().time;

    // Entry index: one past the last sample that exceeds the limit.
    let entry_index = samples
        .iter()
        .rposition(|s| s.dispersion > limit)
        .map_or(0, |last_over| last_over + 1);

    let (entry_time, max_after) = if entry_index < samples.len() {
        let max_after = samples[entry_index..]
            .iter()
            .map(|s| s.dispersion)
            .fold(f64::NEG_INFINITY, f64::max);
        (Some(samples[entry_index].time), Some(max_after))
    } else {
        (None, None)
    };

    let contained = entry_time.is_some_and(|t| t_end - t >= t_hold);

    BoundReport {
        bound: *bound,
        t_hold,
        t_end,
        entry_time,
        contained,
        max_dispersion_after_entry: max_after,
    }
}

/// Summary statistics of the swarm-center path.
#[derive(Debug, Clone, PartialEq)]
pub struct CenterDrift {
    /// ||center(t_end) - center(t_0)||.
    pub net_displacement: f64,
    /// Sum of recorded segment lengths.
    pub path_length: f64,
    /// Speed between consecutive samples (segment length over elapsed time),
    /// one entry per gap.
    pub speeds: Vec<f64>,
}

pub fn center_drift_summary(traj: &Trajectory) -> CenterDrift {
    let samples = traj.samples();
    let norm = |v: &Array1<f64>| v.dot(v).sqrt();

    let mut path_length = 0.0;
    let mut speeds = Vec::with_capacity(samples.len().saturating_sub(1));
    for pair in samples.windows(2) {
        let segment = norm(&(&pair[1].center - &pair[0].center));
        path_length += segment;
        speeds.push(segment / (pair[1].time - pair[0].time));
    }

    let net = norm(&(&traj.last().center - &traj.first().center));
    CenterDrift {
        net_displacement: net,
        path_length,
        speeds,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::SwarmState;
    use crate::integrator::{integrate, IntegrationConfig, Trajectory};
    use crate::kernel::InteractionKernel;
    use ndarray::{array, Array2};

    fn section5() -> GaussianKernel {
        GaussianKernel::new(1.0, 20.0, 0.2).unwrap()
    }

    fn complete_unit(n: usize) -> CouplingMatrix {
        let mut w = Array2::<f64>::ones((n, n));
        for i in 0..n {
            w[[i, i]] = 0.0;
        }
        CouplingMatrix::new(w).unwrap()
    }

    #[test]
    fn gaussian_bound_matches_frozen_oracle_value() {
        // a=1, b=20, c=0.2, N=10 complete unit coupling: M = 90,
        // lambda_2 = 20. 40-digit arithmetic gives
        // rho = 69.04866079499220, threshold_v = 2383.858778790946.
        let bound = cohesion_bound_gaussian(&section5(), &complete_unit(10)).unwrap();
        assert!((bound.lambda2 - 20.0).abs() <= 1e-12 * 20.0);
        assert_eq!(bound.total_weight, 90.0);
        assert!(
            (bound.rho - 69.0486607949922).abs() <= 1e-10,
            "rho = {:.17}",
            bound.rho
        );
        let threshold = bound.threshold_v.unwrap();
        assert!(
            (threshold - 2383.858778790946).abs() <= 1e-8,
            "threshold_v = {:.15}",
            threshold
        );
        // Consistency between the two routes: rho = sqrt(2 * threshold_v).
        assert!((bound.rho_sq() - 2.0 * threshold).abs() <= 1e-12 * bound.rho_sq());
    }

    #[test]
    fn gaussian_bound_is_scale_invariant_in_coupling() {
        let base = complete_unit(6);
        let scaled = CouplingMatrix::new(base.weights() * 3.0).unwrap();
        let b0 = cohesion_bound_gaussian(&section5(), &base).unwrap();
        let b1 = cohesion_bound_gaussian(&section5(), &scaled).unwrap();
        assert!((b1.lambda2 - 3.0 * b0.lambda2).abs() <= 1e-10 * b1.lambda2);
        assert!((b1.total_weight - 3.0 * b0.total_weight).abs() <= 1e-12 * b1.total_weight);
        assert!((b1.rho - b0.rho).abs() <= 1e-10 * b0.rho);
    }

    #[test]
    fn gaussian_bound_continuous_as_b_approaches_a() {
        // rho itself has no singularity as b -> a+.
        let w = complete_unit(5);
        let near = GaussianKernel::new(1.0, 1.0 + 1e-9, 0.2).unwrap();
        let bound = cohesion_bound_gaussian(&near, &w).unwrap();
        let m = 20.0;
        let lambda2 = 10.0;
        let limit = 2.0 * 1.0 * m * (2.0 * 0.2f64).sqrt() * (-0.5f64).exp() / (1.0 * lambda2);
        assert!((bound.rho - limit).abs() <= 1e-6 * limit);
    }

    #[test]
    fn gaussian_bound_monotone_in_b_and_lambda2() {
        let w = complete_unit(6);
        let lo = cohesion_bound_gaussian(&GaussianKernel::new(1.0, 10.0, 0.2).unwrap(), &w)
            .unwrap();
        let hi = cohesion_bound_gaussian(&GaussianKernel::new(1.0, 30.0, 0.2).unwrap(), &w)
            .unwrap();
        assert!(hi.rho > lo.rho);

        // Densify at fixed M: spread the same total weight over more edges.
        // A 6-cycle and the complete graph on 6 nodes, both with M = 30.
        let mut ring = Array2::<f64>::zeros((6, 6));
        for i in 0..6 {
            ring[[i, (i + 1) % 6]] = 2.5;
            ring[[(i + 1) % 6, i]] = 2.5;
        }
        let ring = CouplingMatrix::new(ring).unwrap();
        let complete = complete_unit(6);
        assert_eq!(ring.total_weight(), complete.total_weight());
        let sparse = cohesion_bound_gaussian(&section5(), &ring).unwrap();
        let dense = cohesion_bound_gaussian(&section5(), &complete).unwrap();
        assert!(sparse.lambda2 < dense.lambda2);
        assert!(sparse.rho > dense.rho);
    }

    #[test]
    fn gaussian_bound_rejects_invalid_coupling() {
        let unbalanced = CouplingMatrix::new(array![[0.0, 1.0], [0.0, 0.0]]).unwrap();
        assert!(cohesion_bound_gaussian(&section5(), &unbalanced).is_err());
    }

    #[test]
    fn general_bound_matches_direct_formula() {
        // a=1, b=20, N=10 complete unit coupling: 4*20*90 / (1*20) = 360.
        let kernel = GeneralKernel::linear_attraction_bounded_repulsion(1.0, 20.0).unwrap();
        let bound = cohesion_bound_general(&kernel, &complete_unit(10)).unwrap();
        assert!((bound.rho - 360.0).abs() <= 1e-10 * 360.0, "rho = {}", bound.rho);
        assert!(bound.threshold_v.is_none());

        // Doubling a halves the bound.
        let kernel2 = GeneralKernel::linear_attraction_bounded_repulsion(2.0, 20.0).unwrap();
        let bound2 = cohesion_bound_general(&kernel2, &complete_unit(10)).unwrap();
        assert!((bound2.rho - 180.0).abs() <= 1e-10 * 180.0);

        // Coupling scale invariance.
        let scaled = CouplingMatrix::new(complete_unit(10).weights() * 7.0).unwrap();
        let bound3 = cohesion_bound_general(&kernel, &scaled).unwrap();
        assert!((bound3.rho - 360.0).abs() <= 1e-9 * 360.0);
    }

    #[test]
    fn general_bound_rejects_overclaimed_kernel() {
        let lying = GeneralKernel::new(
            "unbounded",
            1.0,
            1.0,
            std::sync::Arc::new(|_| 1.0),
            std::sync::Arc::new(|_| 2.0),
        )
        .unwrap();
        assert!(cohesion_bound_general(&lying, &complete_unit(4)).is_err());
    }

    #[test]
    fn gaussian_as_general_reproduces_the_gaussian_bound() {
        // With the tight repulsion bound b*sqrt(c/2)*e^(-1/2), the general
        // formula collapses to the Gaussian one.
        let gauss = section5();
        let w = complete_unit(8);
        let direct = cohesion_bound_gaussian(&gauss, &w).unwrap();
        let via_general =
            cohesion_bound_general(&GeneralKernel::from_gaussian(&gauss), &w).unwrap();
        assert!(
            (direct.rho - via_general.rho).abs() <= 1e-12 * direct.rho,
            "{} vs {}",
            direct.rho,
            via_general.rho
        );
    }

    fn synthetic_trajectory(dispersions: &[f64]) -> Trajectory {
        // Two agents in 1-D at +/- sqrt(d)/sqrt(2) have dispersion d.
        let records: Vec<(f64, Array2<f64>)> = dispersions
            .iter()
            .enumerate()
            .map(|(k, &d)| {
                let half = (d / 2.0).sqrt();
                (k as f64, array![[-half], [half]])
            })
            .collect();
        Trajectory::from_records(records).unwrap()
    }

    fn unit_bound(rho: f64) -> CohesionBound {
        CohesionBound {
            lambda2: 1.0,
            total_weight: 1.0,
            rho,
            threshold_v: None,
        }
    }

    #[test]
    fn containment_inside_from_start() {
        let traj = synthetic_trajectory(&[1.0, 2.0, 1.5, 0.5, 0.25, 0.5, 1.0, 0.75, 0.5, 0.25, 0.1]);
        let report = containment_check(&traj, &unit_bound(2.0), 10.0);
        assert_eq!(report.entry_time, Some(0.0));
        assert!(report.contained);
        assert_eq!(report.max_dispersion_after_entry, Some(2.0));
        assert_eq!(report.dispersion_ratio(), Some(0.5));
    }

    #[test]
    fn containment_fails_when_exit_at_last_sample() {
        let traj = synthetic_trajectory(&[1.0, 0.5, 0.25, 9.0]);
        let report = containment_check(&traj, &unit_bound(2.0), 1.0);
        assert_eq!(report.entry_time, None);
        assert!(!report.contained);
        assert_eq!(report.max_dispersion_after_entry, None);
    }

    #[test]
    fn containment_requires_residence_window() {
        // Enters at t = 8 of 11 samples (t_end = 10): 2 s residence only.
        let mut dispersions = vec![9.0; 8];
        dispersions.extend([1.0, 1.0, 1.0]);
        let traj = synthetic_trajectory(&dispersions);
        let tight = containment_check(&traj, &unit_bound(2.0), 10.0);
        assert_eq!(tight.entry_time, Some(8.0));
        assert!(!tight.contained);
        let loose = containment_check(&traj, &unit_bound(2.0), 2.0);
        assert!(loose.contained);
    }

    #[test]
    fn containment_slack_absorbs_rounding_overshoot() {
        let rho = 2.0f64;
        let rho_sq = rho * rho;
        let traj = synthetic_trajectory(&[rho_sq * (1.0 + 0.5e-9), rho_sq * 0.5]);
        let report = containment_check(&traj, &unit_bound(rho), 1.0);
        assert_eq!(report.entry_time, Some(0.0));
        let over = synthetic_trajectory(&[rho_sq * (1.0 + 1e-8), rho_sq * 0.5]);
        let report = containment_check(&over, &unit_bound(rho), 1.0);
        assert_eq!(report.entry_time, Some(1.0));
    }

    #[test]
    fn section5_run_is_contained_with_margin_and_verdict_stable_under_halved_dt() {
        let kernel = section5();
        let w = CouplingMatrix::generate_balanced(10, 0.5, 1.0, 33).unwrap();
        let initial = SwarmState::sample_box(10, 2, -5.0, 5.0, 34).unwrap();
        let bound = cohesion_bound_gaussian(&kernel, &w).unwrap();
        let ik: InteractionKernel = kernel.into();

        let traj = integrate(&initial, &w, &ik, &IntegrationConfig::default()).unwrap();
        let report = containment_check(&traj, &bound, 10.0);
        assert!(report.contained, "{}", report.to_text());
        assert!(report.dispersion_ratio().unwrap() < 0.5);

        let halved = IntegrationConfig {
            dt: 0.5e-3,
            ..IntegrationConfig::default()
        };
        let traj_fine = integrate(&initial, &w, &ik, &halved).unwrap();
        let report_fine = containment_check(&traj_fine, &bound, 10.0);
        assert_eq!(report.contained, report_fine.contained);
        assert_eq!(
            report.entry_time.is_some(),
            report_fine.entry_time.is_some()
        );
    }

    #[test]
    fn drift_summary_single_agent_is_zero() {
        let records = vec![
            (0.0, array![[1.0, 2.0]]),
            (1.0, array![[1.0, 2.0]]),
            (2.0, array![[1.0, 2.0]]),
        ];
        let traj = Trajectory::from_records(records).unwrap();
        let drift = center_drift_summary(&traj);
        assert_eq!(drift.net_displacement, 0.0);
        assert_eq!(drift.path_length, 0.0);
        assert_eq!(drift.speeds, vec![0.0, 0.0]);
    }

    #[test]
    fn drift_summary_tracks_center_path() {
        // Two agents translating together: center moves 1 per second in x.
        let records = vec![
            (0.0, array![[0.0, 0.0], [2.0, 0.0]]),
            (1.0, array![[1.0, 0.0], [3.0, 0.0]]),
            (2.0, array![[2.0, 0.0], [4.0, 0.0]]),
        ];
        let traj = Trajectory::from_records(records).unwrap();
        let drift = center_drift_summary(&traj);
        assert!((drift.net_displacement - 2.0).abs() <= 1e-15);
        assert!((drift.path_length - 2.0).abs() <= 1e-15);
        assert_eq!(drift.speeds.len(), 2);
        assert!((drift.speeds[0] - 1.0).abs() <= 1e-15);
    }

    #[test]
    fn drift_summary_symmetric_coupling_near_zero() {
        let generated = CouplingMatrix::generate_balanced(5, 0.8, 1.0, 44).unwrap();
        let symmetrized =
            CouplingMatrix::new((generated.weights() + &generated.weights().t()) / 2.0).unwrap();
        let initial = SwarmState::sample_box(5, 2, -5.0, 5.0, 44).unwrap();
        let traj = integrate(
            &initial,
            &symmetrized,
            &section5().into(),
            &IntegrationConfig {
                t_end: 10.0,
                ..Default::default()
            },
        )
        .unwrap();
        let drift = center_drift_summary(&traj);
        assert!(drift.net_displacement <= 1e-6, "{}", drift.net_displacement);
    }

    #[test]
    fn report_text_is_key_value_lines() {
        let traj = synthetic_trajectory(&[1.0, 0.5]);
        let report = containment_check(&traj, &unit_bound(2.0), 1.0);
        let text = report.to_text();
        for key in [
            "lambda2:",
            "total_weight:",
            "rho:",
            "rho_sq:",
            "threshold_v:",
            "t_hold:",
            "t_end:",
            "entry_time:",
            "contained:",
            "max_dispersion_after_entry:",
        ] {
            assert!(text.contains(key), "missing {key} in:\n{text}");
        }
    }
}
