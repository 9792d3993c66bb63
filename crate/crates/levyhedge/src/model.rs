//! Firm-value model: positive drift plus a compound Poisson jump part.
//!
//! `X_t = u + mu*t + sum_{i <= N_t} Y_i`, where `N` is Poisson with intensity
//! `lambda` and the `Y_i` follow a [`JumpLaw`]. The jump measure is
//! `nu(dy) = lambda * (law density)(y) dy`, required to have a finite,
//! strictly positive second moment. Every downstream module takes the model
//! by shared reference; it is immutable after construction.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numeric::sum_compensated;
use crate::quad;
use crate::rng::RngStream;

/// Relative tolerance used to classify a model as a martingale
/// (`|beta| <= BETA_REL_TOL * scale`).
pub const BETA_REL_TOL: f64 = 1e-12;

/// Number of table cells used to resolve a user-supplied density.
const DENSITY_TABLE_CELLS: usize = 2048;

/// Precomputed moments and CDF table for a [`JumpLaw::UserDensity`].
#[derive(Clone, Debug)]
pub struct DensityTable {
    ys: Vec<f64>,
    cdf: Vec<f64>,
    mean: f64,
    second_moment: f64,
}

impl DensityTable {
    fn build(density: &dyn Fn(f64) -> f64, lower: f64, upper: f64) -> Result<Self> {
        let n = DENSITY_TABLE_CELLS;
        let h = (upper - lower) / n as f64;
        let mut ys = Vec::with_capacity(n + 1);
        let mut cdf = Vec::with_capacity(n + 1);
        let mut mass = 0.0;
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        ys.push(lower);
        cdf.push(0.0);
        for i in 0..n {
            let a = lower + h * i as f64;
            let b = a + h;
            let m = 0.5 * (a + b);
            let (fa, fm, fb) = (density(a), density(m), density(b));
            if !(fa.is_finite() && fm.is_finite() && fb.is_finite())
                || fa < 0.0
                || fm < 0.0
                || fb < 0.0
            {
                return Err(Error::InvalidModel(
                    "user density must be finite and non-negative on its support".into(),
                ));
            }
            // Simpson on the cell; exact for cubics.
            let w = h / 6.0;
            mass += w * (fa + 4.0 * fm + fb);
            m1 += w * (a * fa + 4.0 * m * fm + b * fb);
            m2 += w * (a * a * fa + 4.0 * m * m * fm + b * b * fb);
            ys.push(b);
            cdf.push(mass);
        }
        if !mass.is_finite() || (mass - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidModel(format!(
                "user density mass is {mass}, expected 1 within 1e-6"
            )));
        }
        // Normalize so sampling sees an exact probability scale.
        for c in cdf.iter_mut() {
            *c /= mass;
        }
        cdf[n] = 1.0;
        Ok(Self {
            ys,
            cdf,
            mean: m1 / mass,
            second_moment: m2 / mass,
        })
    }

    fn cdf_at(&self, y: f64) -> f64 {
        let n = self.ys.len() - 1;
        if y <= self.ys[0] {
            return 0.0;
        }
        if y >= self.ys[n] {
            return 1.0;
        }
        let i = self.ys.partition_point(|&v| v <= y) - 1;
        let (a, b) = (self.ys[i], self.ys[i + 1]);
        let w = (y - a) / (b - a);
        self.cdf[i] + w * (self.cdf[i + 1] - self.cdf[i])
    }

    fn quantile(&self, p: f64) -> f64 {
        let i = match self.cdf.partition_point(|&c| c < p) {
            0 => 0,
            k => k - 1,
        };
        let i = i.min(self.cdf.len() - 2);
        let (ca, cb) = (self.cdf[i], self.cdf[i + 1]);
        if cb <= ca {
            return self.ys[i + 1];
        }
        let w = ((p - ca) / (cb - ca)).clamp(0.0, 1.0);
        self.ys[i] + w * (self.ys[i + 1] - self.ys[i])
    }
}

/// Distribution of a single jump size `Y`.
#[derive(Clone)]
pub enum JumpLaw {
    /// `-Y ~ Exponential(rate)`: density `rate * exp(rate*y)` for `y < 0`.
    ExponentialNegative { rate: f64 },
    /// Uniform law over a finite, sorted sample. Atoms violate the continuity
    /// assumption on the jump measure; models built on this law are flagged
    /// non-conforming and intended for testing only.
    Empirical { samples: Vec<f64> },
    /// Continuous density on a bounded support, resolved to an internal table
    /// at construction time for sampling and tail evaluation.
    UserDensity {
        density: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        lower: f64,
        upper: f64,
        table: Arc<DensityTable>,
    },
}

impl fmt::Debug for JumpLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            JumpLaw::ExponentialNegative { rate } => {
                write!(f, "ExponentialNegative {{ rate: {rate} }}")
            }
            JumpLaw::Empirical { samples } => {
                write!(f, "Empirical {{ n: {} }}", samples.len())
            }
            JumpLaw::UserDensity { lower, upper, .. } => {
                write!(f, "UserDensity {{ support: [{lower}, {upper}] }}")
            }
        }
    }
}

impl JumpLaw {
    pub fn exponential_negative(rate: f64) -> Result<Self> {
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::InvalidModel(format!(
                "exponential jump rate must be positive and finite, got {rate}"
            )));
        }
        Ok(JumpLaw::ExponentialNegative { rate })
    }

    pub fn empirical(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidModel("empirical law needs samples".into()));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel(
                "empirical samples must be finite".into(),
            ));
        }
        samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(JumpLaw::Empirical { samples })
    }

    pub fn user_density<F>(density: F, lower: f64, upper: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(lower.is_finite() && upper.is_finite() && lower < upper) {
            return Err(Error::InvalidModel(format!(
                "user density support [{lower}, {upper}] must be finite and ordered"
            )));
        }
        let density = Arc::new(density);
        let table = DensityTable::build(density.as_ref(), lower, upper)?;
        Ok(JumpLaw::UserDensity {
            density,
            lower,
            upper,
            table: Arc::new(table),
        })
    }

    /// `E[Y]`. Closed form for the exponential law, sample mean for empirical
    /// laws, table quadrature otherwise.
    pub fn mean(&self) -> f64 {
        match self {
            JumpLaw::ExponentialNegative { rate } => -1.0 / rate,
            JumpLaw::Empirical { samples } => {
                sum_compensated(samples.iter().copied()) / samples.len() as f64
            }
            JumpLaw::UserDensity { table, .. } => table.mean,
        }
    }

    /// `E[Y^2]`.
    pub fn second_moment(&self) -> f64 {
        match self {
            JumpLaw::ExponentialNegative { rate } => 2.0 / (rate * rate),
            JumpLaw::Empirical { samples } => {
                sum_compensated(samples.iter().map(|&v| v * v)) / samples.len() as f64
            }
            JumpLaw::UserDensity { table, .. } => table.second_moment,
        }
    }

    /// `P(Y <= y)`.
    pub fn cdf(&self, y: f64) -> f64 {
        match self {
            JumpLaw::ExponentialNegative { rate } => {
                if y < 0.0 {
                    (rate * y).exp()
                } else {
                    1.0
                }
            }
            JumpLaw::Empirical { samples } => {
                samples.partition_point(|&s| s <= y) as f64 / samples.len() as f64
            }
            JumpLaw::UserDensity { table, .. } => table.cdf_at(y),
        }
    }

    /// Draws one jump size.
    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        match self {
            JumpLaw::ExponentialNegative { rate } => rng.uniform_open().ln() / rate,
            JumpLaw::Empirical { samples } => samples[rng.index(samples.len())],
            JumpLaw::UserDensity { table, .. } => table.quantile(rng.uniform()),
        }
    }

    /// Whether the law is continuous (no atoms).
    pub fn is_continuous(&self) -> bool {
        !matches!(self, JumpLaw::Empirical { .. })
    }

    /// Serializable description for run metadata.
    pub fn metadata(&self) -> serde_json::Value {
        match self {
            JumpLaw::ExponentialNegative { rate } => serde_json::json!({
                "kind": "exponential_negative",
                "delta": rate,
            }),
            JumpLaw::Empirical { samples } => serde_json::json!({
                "kind": "empirical",
                "samples": samples,
            }),
            JumpLaw::UserDensity { lower, upper, .. } => serde_json::json!({
                "kind": "user_density",
                "lower": lower,
                "upper": upper,
            }),
        }
    }
}

/// Validated firm-value process parameters together with the derived scalars
/// `beta = mu + lambda*E[Y]` and `m2 = lambda*E[Y^2]`.
#[derive(Clone, Debug)]
pub struct LevyModel {
    u: f64,
    mu: f64,
    lambda: f64,
    law: JumpLaw,
    mean_jump: f64,
    beta: f64,
    m2: f64,
    martingale: bool,
    non_conforming: bool,
}

impl LevyModel {
    /// Builds and validates a model. Rejects `u <= 0`, `mu <= 0`,
    /// `lambda < 0`, non-finite moments, and a degenerate jump part
    /// (`m2 = lambda*E[Y^2]` must be strictly positive and finite).
    pub fn new(u: f64, mu: f64, lambda: f64, law: JumpLaw) -> Result<Self> {
        if !(u > 0.0) || !u.is_finite() {
            return Err(Error::InvalidModel(format!(
                "initial value must be positive and finite, got {u}"
            )));
        }
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::InvalidModel(format!(
                "drift must be positive and finite, got {mu}"
            )));
        }
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidModel(format!(
                "jump intensity must be non-negative and finite, got {lambda}"
            )));
        }
        let mean_jump = law.mean();
        let ey2 = law.second_moment();
        if !mean_jump.is_finite() || !ey2.is_finite() {
            return Err(Error::InvalidModel("jump moments must be finite".into()));
        }
        let m2 = lambda * ey2;
        if !(m2 > 0.0) || !m2.is_finite() {
            return Err(Error::InvalidModel(format!(
                "second moment of the jump measure must be strictly positive and finite, got {m2}"
            )));
        }
        let beta = mu + lambda * mean_jump;
        let scale = mu.max((lambda * mean_jump).abs());
        let martingale = beta.abs() <= BETA_REL_TOL * scale;
        let non_conforming = !law.is_continuous();
        Ok(Self {
            u,
            mu,
            lambda,
            law,
            mean_jump,
            beta,
            m2,
            martingale,
            non_conforming,
        })
    }

    pub fn initial_value(&self) -> f64 {
        self.u
    }

    pub fn drift(&self) -> f64 {
        self.mu
    }

    pub fn intensity(&self) -> f64 {
        self.lambda
    }

    pub fn jump_law(&self) -> &JumpLaw {
        &self.law
    }

    pub fn mean_jump(&self) -> f64 {
        self.mean_jump
    }

    /// `beta = mu + lambda*E[Y]`; zero exactly characterizes the martingale
    /// case.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `m2 = integral of y^2 against the jump measure = lambda*E[Y^2]`.
    pub fn second_moment(&self) -> f64 {
        self.m2
    }

    pub fn is_martingale(&self) -> bool {
        self.martingale
    }

    /// True when the jump law has atoms (empirical laws), which violates the
    /// continuity assumption on the jump measure.
    pub fn is_non_conforming(&self) -> bool {
        self.non_conforming
    }

    /// Mass of the jump measure on `(-inf, -x]`: the instantaneous default
    /// intensity at firm value `x >= 0`. Non-increasing in `x`, bounded by
    /// `lambda`.
    pub fn tail_mass(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tail mass level must be non-negative, got {x}"
            )));
        }
        Ok(self.lambda * self.law.cdf(-x))
    }

    /// Serializable description for run metadata.
    pub fn metadata(&self) -> serde_json::Value {
        serde_json::json!({
            "u": self.u,
            "mu": self.mu,
            "lambda": self.lambda,
            "jump_law": self.law.metadata(),
            "beta": self.beta,
            "m2": self.m2,
            "is_martingale": self.martingale,
            "non_conforming": self.non_conforming,
        })
    }
}

/// The worked model used throughout the tests: `u=0.01`, `mu=0.1`,
/// `lambda=10`, exponential jumps with `delta=100` (martingale case).
#[cfg(test)]
pub(crate) fn reference_model() -> LevyModel {
    LevyModel::new(
        0.01,
        0.1,
        10.0,
        JumpLaw::exponential_negative(100.0).unwrap(),
    )
    .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn martingale_flag_for_balanced_parameters() {
        let m = reference_model();
        assert_eq!(m.beta(), 0.0);
        assert!(m.is_martingale());
        assert!(!m.is_non_conforming());
    }

    #[test]
    fn beta_closed_forms() {
        let m = LevyModel::new(
            1.0,
            0.2,
            10.0,
            JumpLaw::exponential_negative(100.0).unwrap(),
        )
        .unwrap();
        assert!((m.beta() - 0.1).abs() < 1e-15);
        assert!(!m.is_martingale());

        let m = LevyModel::new(1.0, 0.3, 5.0, JumpLaw::exponential_negative(50.0).unwrap())
            .unwrap();
        assert!((m.beta() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn beta_approaches_drift_as_intensity_vanishes() {
        let m = LevyModel::new(
            1.0,
            0.5,
            1e-9,
            JumpLaw::exponential_negative(100.0).unwrap(),
        )
        .unwrap();
        assert!((m.beta() - 0.5).abs() < 1e-10);
    }

    #[test]
    fn zero_intensity_rejected() {
        let err = LevyModel::new(1.0, 0.5, 0.0, JumpLaw::exponential_negative(100.0).unwrap());
        assert!(err.is_err());
    }

    #[test]
    fn invalid_parameters_rejected() {
        let law = || JumpLaw::exponential_negative(100.0).unwrap();
        assert!(LevyModel::new(0.0, 0.1, 10.0, law()).is_err());
        assert!(LevyModel::new(1.0, 0.0, 10.0, law()).is_err());
        assert!(LevyModel::new(1.0, -0.1, 10.0, law()).is_err());
        assert!(LevyModel::new(1.0, 0.1, -1.0, law()).is_err());
        assert!(JumpLaw::exponential_negative(0.0).is_err());
        assert!(JumpLaw::exponential_negative(f64::NAN).is_err());
    }

    #[test]
    fn second_moment_closed_form_and_scaling() {
        let m = reference_model();
        assert!((m.second_moment() - 0.002).abs() < 1e-18);

        let m2x = LevyModel::new(
            0.01,
            0.1,
            20.0,
            JumpLaw::exponential_negative(100.0).unwrap(),
        )
        .unwrap();
        assert!((m2x.second_moment() - 2.0 * m.second_moment()).abs() < 1e-18);
    }

    #[test]
    fn uniform_density_second_moment() {
        // Uniform on [-1, 0]: E[Y^2] = 1/3.
        let law = JumpLaw::user_density(|_| 1.0, -1.0, 0.0).unwrap();
        let m = LevyModel::new(1.0, 1.0, 1.0, law).unwrap();
        assert!((m.second_moment() - 1.0 / 3.0).abs() < 1e-12);
        assert!((m.mean_jump() + 0.5).abs() < 1e-12);
    }

    #[test]
    fn tail_mass_values() {
        let m = reference_model();
        assert_eq!(m.tail_mass(0.0).unwrap(), 10.0);
        let expect = 10.0 * (-1.0f64).exp();
        assert!((m.tail_mass(0.01).unwrap() - expect).abs() < 1e-12);
        assert!(m.tail_mass(10.0).unwrap() < 1e-300);
        assert!(m.tail_mass(-0.5).is_err());
    }

    #[test]
    fn empirical_law_flagged_non_conforming() {
        let law = JumpLaw::empirical(vec![-0.3, -0.1, -0.2]).unwrap();
        let m = LevyModel::new(1.0, 0.5, 2.0, law).unwrap();
        assert!(m.is_non_conforming());
        // sorted samples, CDF counts atoms with `<=`
        assert_eq!(m.jump_law().cdf(-0.2), 2.0 / 3.0);
        assert!((m.tail_mass(0.15).unwrap() - 2.0 * (2.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn user_density_bad_mass_rejected() {
        assert!(JumpLaw::user_density(|_| 2.0, -1.0, 0.0).is_err());
    }

    #[test]
    fn user_density_sampling_moments() {
        let law = JumpLaw::user_density(|_| 1.0, -1.0, 0.0).unwrap();
        let mut rng = RngStream::new(11, 0);
        let n = 20_000;
        let mean = sum_compensated((0..n).map(|_| law.sample(&mut rng))) / n as f64;
        assert!((mean + 0.5).abs() < 0.01);
    }
}

#[cfg(test)]
mod prop_tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn tail_mass_monotone_and_bounded(
            rate in 1.0..500.0f64,
            lambda in 0.01..50.0f64,
            x1 in 0.0..0.5f64,
            dx in 0.0..0.5f64,
        ) {
            let law = JumpLaw::exponential_negative(rate).unwrap();
            let m = LevyModel::new(1.0, 1.0, lambda, law).unwrap();
            let a = m.tail_mass(x1).unwrap();
            let b = m.tail_mass(x1 + dx).unwrap();
            prop_assert!(a <= lambda + 1e-12 * lambda);
            prop_assert!(b <= a);
            prop_assert!(b >= 0.0);
        }

        #[test]
        fn balanced_exponential_model_is_martingale(
            mu in 0.01..5.0f64,
            rate in 1.0..500.0f64,
        ) {
            let law = JumpLaw::exponential_negative(rate).unwrap();
            let m = LevyModel::new(1.0, mu, mu * rate, law).unwrap();
            prop_assert!(m.is_martingale(), "beta = {}", m.beta());
        }
    }
}
