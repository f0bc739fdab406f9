//! Log-densities used as priors, evaluated at natural parameters.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::autodiff::Scalar;

/// Gamma(shape, rate) prior.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaPrior {
    pub shape: f64,
    pub rate: f64,
}

impl GammaPrior {
    pub fn new(shape: f64, rate: f64) -> Self {
        Self { shape, rate }
    }

    /// Log-density at `x = exp(log_x)`.
    pub fn ln_pdf_log<S: Scalar>(&self, log_x: S) -> S {
        log_x * (self.shape - 1.0) - log_x.exp() * self.rate + (self.shape * self.rate.ln() - ln_gamma(self.shape))
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        self.ln_pdf_log(x.ln())
    }
}

/// Beta(a, b) prior.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaPrior {
    pub a: f64,
    pub b: f64,
}

impl BetaPrior {
    pub fn new(a: f64, b: f64) -> Self {
        Self { a, b }
    }

    /// Log-density at `p = sigmoid(logit)`.
    pub fn ln_pdf_logit<S: Scalar>(&self, logit: S) -> S {
        let ln_beta = ln_gamma(self.a) + ln_gamma(self.b) - ln_gamma(self.a + self.b);
        logit.log_sigmoid() * (self.a - 1.0) + (-logit).log_sigmoid() * (self.b - 1.0) - ln_beta
    }

    pub fn ln_pdf(&self, p: f64) -> f64 {
        self.ln_pdf_logit((p / (1.0 - p)).ln())
    }
}

/// `log N(x; mean, sd²)`.
pub fn normal_ln_pdf<S: Scalar>(x: S, mean: f64, sd: f64) -> S {
    let z = (x - mean) / sd;
    z.square() * -0.5 - (sd.ln() + 0.5 * (2.0 * std::f64::consts::PI).ln())
}
