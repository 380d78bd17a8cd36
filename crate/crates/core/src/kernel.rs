//! Pairwise attraction/repulsion force laws.
//!
//! A kernel maps the relative position `y = x_i - x_j` of two agents to the
//! velocity contribution `f(y)` that agent j induces on agent i. Both kernel
//! families factor through a scalar radial gain `s(r)`:
//!
//! ```text
//!     f(y) = -s(||y||) * y
//! ```
//!
//! so `s > 0` means net attraction and `s < 0` net repulsion. The Gaussian
//! kernel uses `s(r) = a - b*exp(-r^2/c)`: linear attraction at long range,
//! exponentially decaying repulsion up close, balance on the sphere
//! `r = delta = sqrt(c*ln(b/a))`. The general kernel uses
//! `s(r) = fa(r) - fr(r)` for caller-supplied scalar maps, intended for the
//! fixed-linear-attraction / bounded-repulsion class (`fa(r) = a`,
//! `fr(r)*r <= b`).

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use ndarray::{Array1, ArrayView1};

use crate::error::{Error, Result};

/// Separation below which general-kernel scalar maps are evaluated at a
/// clamped radius. Keeps transiently coincident agents from feeding r = 0
/// into maps like b/r; clamped evaluations are counted, not fatal.
pub const COINCIDENCE_EPS: f64 = 1e-9;

/// Gaussian-type kernel: `f(y) = -y * (a - b*exp(-||y||^2 / c))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianKernel {
    a: f64,
    b: f64,
    c: f64,
}

impl GaussianKernel {
    /// Requires a, b, c positive and finite, and b > a so that an
    /// equilibrium separation exists.
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        for (name, value) in [("a", a), ("b", b), ("c", c)] {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::NonPositiveParam { name, value });
            }
        }
        if b <= a {
            return Err(Error::NoEquilibrium { a, b });
        }
        Ok(Self { a, b, c })
    }

    /// Attraction gain a.
    pub fn attraction(&self) -> f64 {
        self.a
    }

    /// Repulsion gain b.
    pub fn repulsion(&self) -> f64 {
        self.b
    }

    /// Squared repulsion range c.
    pub fn range_sq(&self) -> f64 {
        self.c
    }

    /// Radial gain `s(r) = a - b*exp(-r^2/c)` from the squared separation.
    #[inline]
    pub fn radial_gain_sq(&self, dist_sq: f64) -> f64 {
        self.a - self.b * (-dist_sq / self.c).exp()
    }

    /// Evaluates `f(y) = -y * s(||y||)`.
    pub fn eval(&self, y: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        ensure_finite(y)?;
        let gain = self.radial_gain_sq(y.dot(&y));
        Ok(y.mapv(|v| -v * gain))
    }

    /// Separation at which attraction and repulsion balance:
    /// `delta = sqrt(c * ln(b/a))`. The radial gain changes sign from
    /// negative (repulsive) to positive (attractive) there.
    pub fn equilibrium_distance(&self) -> f64 {
        (self.c * (self.b / self.a).ln()).sqrt()
    }

    /// Argmax and max of the repulsion-magnitude profile
    /// `g(r) = r * exp(-r^2/c)`: `(sqrt(c/2), sqrt(c/2) * exp(-1/2))`.
    /// The repulsive part of `f` has magnitude `b * g(r)`, so `b * g_max`
    /// bounds it globally.
    pub fn repulsion_peak(&self) -> (f64, f64) {
        let r = (self.c / 2.0).sqrt();
        (r, r * (-0.5f64).exp())
    }
}

type ScalarMap = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Kernel assembled from two scalar maps: `f(y) = -y * [fa(||y||) - fr(||y||)]`,
/// with declared attraction constant `a` (the claimed constant value of `fa`)
/// and repulsion bound `b` (the claimed bound on `fr(r)*r`).
///
/// The claims are not trusted: [`GeneralKernel::check_bounded_repulsion`]
/// samples them on a log grid, and the dispersion bound in
/// [`crate::analysis`] refuses kernels whose claims fail.
#[derive(Clone)]
pub struct GeneralKernel {
    name: String,
    fa: ScalarMap,
    fr: ScalarMap,
    a: f64,
    b: f64,
    clamped: Arc<AtomicU64>,
}

impl fmt::Debug for GeneralKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GeneralKernel")
            .field("name", &self.name)
            .field("a", &self.a)
            .field("b", &self.b)
            .finish()
    }
}

impl GeneralKernel {
    pub fn new(
        name: impl Into<String>,
        a: f64,
        b: f64,
        fa: ScalarMap,
        fr: ScalarMap,
    ) -> Result<Self> {
        for (pname, value) in [("a", a), ("b", b)] {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::NonPositiveParam { name: pname, value });
            }
        }
        Ok(Self {
            name: name.into(),
            fa,
            fr,
            a,
            b,
            clamped: Arc::new(AtomicU64::new(0)),
        })
    }

    /// Constant attraction `fa(r) = a` with `fr(r) = b/r`: repulsion of fixed
    /// magnitude b at every range, the extreme member of the bounded class
    /// (`fr(r)*r = b` exactly).
    pub fn linear_attraction_bounded_repulsion(a: f64, b: f64) -> Result<Self> {
        Self::new(
            "linear-attraction-bounded-repulsion",
            a,
            b,
            Arc::new(move |_| a),
            Arc::new(move |r| b / r),
        )
    }

    /// The Gaussian kernel re-expressed as scalar maps, with the tight
    /// repulsion bound `b * sqrt(c/2) * exp(-1/2)` (the peak of `b*g`).
    pub fn from_gaussian(kernel: &GaussianKernel) -> Self {
        let (a, b, c) = (kernel.attraction(), kernel.repulsion(), kernel.range_sq());
        let (_, g_max) = kernel.repulsion_peak();
        Self::new(
            "gaussian",
            a,
            b * g_max,
            Arc::new(move |_| a),
            Arc::new(move |r| b * (-r * r / c).exp()),
        )
        .expect("gaussian parameters already validated")
    }

    /// Looks up a kernel by its registered name. Scenario configs select
    /// general kernels this way.
    pub fn by_name(name: &str, a: f64, b: f64) -> Result<Self> {
        match name {
            "linear-attraction-bounded-repulsion" => {
                Self::linear_attraction_bounded_repulsion(a, b)
            }
            _ => Err(Error::UnknownKernel {
                name: name.to_string(),
            }),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Declared constant attraction a.
    pub fn attraction_constant(&self) -> f64 {
        self.a
    }

    /// Declared bound b on `fr(r)*r`.
    pub fn repulsion_bound(&self) -> f64 {
        self.b
    }

    /// Number of evaluations that hit the coincidence clamp so far.
    pub fn clamp_count(&self) -> u64 {
        self.clamped.load(Ordering::Relaxed)
    }

    /// Radial gain `fa(r) - fr(r)` from the squared separation, with the
    /// clamp applied for `r < COINCIDENCE_EPS`.
    pub fn radial_gain_sq(&self, dist_sq: f64) -> Result<f64> {
        let r = dist_sq.sqrt();
        let r_eval = if r < COINCIDENCE_EPS {
            self.clamped.fetch_add(1, Ordering::Relaxed);
            COINCIDENCE_EPS
        } else {
            r
        };
        let gain = (self.fa)(r_eval) - (self.fr)(r_eval);
        if !gain.is_finite() {
            return Err(Error::Singularity { distance: r_eval });
        }
        Ok(gain)
    }

    /// Evaluates `f(y) = -y * [fa(||y||) - fr(||y||)]`.
    pub fn eval(&self, y: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        ensure_finite(y)?;
        let gain = self.radial_gain_sq(y.dot(&y))?;
        Ok(y.mapv(|v| -v * gain))
    }

    /// Samples both scalar maps on a log grid over r in [1e-6, 1e3] and
    /// reports how far they stray from the declared constants.
    pub fn check_bounded_repulsion(&self) -> BoundedRepulsionReport {
        const POINTS: usize = 2000;
        let (lo, hi) = (-6.0f64, 3.0f64);
        let mut max_product = f64::NEG_INFINITY;
        let mut max_deviation: f64 = 0.0;
        for k in 0..POINTS {
            let r = 10f64.powf(lo + (hi - lo) * k as f64 / (POINTS - 1) as f64);
            max_product = max_product.max((self.fr)(r) * r);
            max_deviation = max_deviation.max(((self.fa)(r) - self.a).abs());
        }
        BoundedRepulsionReport {
            bound: self.b,
            max_repulsion_product: max_product,
            max_attraction_deviation: max_deviation,
        }
    }

    /// Errors unless the sampled check confirms the declared constants.
    pub fn require_bounded_repulsion(&self) -> Result<()> {
        let report = self.check_bounded_repulsion();
        if report.holds() {
            Ok(())
        } else {
            Err(Error::UnboundedRepulsion {
                detail: format!(
                    "max fr(r)*r = {:e} vs declared bound {:e}; max |fa(r) - a| = {:e}",
                    report.max_repulsion_product, report.bound, report.max_attraction_deviation
                ),
            })
        }
    }
}

/// Result of sampling a general kernel's scalar maps against its declared
/// constants.
#[derive(Debug, Clone, Copy)]
pub struct BoundedRepulsionReport {
    pub bound: f64,
    pub max_repulsion_product: f64,
    pub max_attraction_deviation: f64,
}

impl BoundedRepulsionReport {
    pub fn holds(&self) -> bool {
        self.max_repulsion_product <= self.bound + 1e-12 && self.max_attraction_deviation <= 1e-12
    }
}

/// Either kernel family, as consumed by the dynamics.
#[derive(Debug, Clone)]
pub enum InteractionKernel {
    Gaussian(GaussianKernel),
    General(GeneralKernel),
}

impl InteractionKernel {
    /// Radial gain from the squared separation; the hot path for force
    /// accumulation.
    #[inline]
    pub fn radial_gain_sq(&self, dist_sq: f64) -> Result<f64> {
        match self {
            Self::Gaussian(k) => Ok(k.radial_gain_sq(dist_sq)),
            Self::General(k) => k.radial_gain_sq(dist_sq),
        }
    }

    pub fn eval(&self, y: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        match self {
            Self::Gaussian(k) => k.eval(y),
            Self::General(k) => k.eval(y),
        }
    }
}

impl From<GaussianKernel> for InteractionKernel {
    fn from(k: GaussianKernel) -> Self {
        Self::Gaussian(k)
    }
}

impl From<GeneralKernel> for InteractionKernel {
    fn from(k: GeneralKernel) -> Self {
        Self::General(k)
    }
}

fn ensure_finite(y: ArrayView1<'_, f64>) -> Result<()> {
    if y.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFiniteInput)
    }
}
