//! Half-width calibration from held-out replicate losses.
//!
//! With `m = |I4|`, replicate means `f^(j)` and the replicate-`(B+1)`
//! variance fit `g^(B+1)` (all clipped to `[-A_n, A_n]`):
//!
//! ```text
//! a1    = (1 - alpha/(4 B~))-quantile of { (1/m) sum_{I4} (y_i - f^(j)(x_i))^2 : j = 1..B }
//! a     = | a1 + A_n^2 sqrt(32 [ln(8/alpha) + ln B~] / n)
//!            + A_n sqrt(8 [ln(64/alpha) + ln B~] / n)
//!            - (1/m) sum_{I4} g^(B+1)(x_i) + a0 |
//! Delta = 2 sqrt(a / (alpha B~)) + b
//! ```
//!
//! `a0` and `b` come in a theoretical form (`alpha / (100 ln^s n)` and
//! `1 / (100 ln^s n)`) and plug-in forms built from the law of total
//! variance.

use crate::error::{Error, Result};

use super::empirical::order_statistic;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum A0Variant {
    /// `alpha / (100 ln^s n)`.
    Theoretical,
    /// `|Var(Y) - (1/m) sum (f^(B+1) - ybar)^2 - (1/m) sum g^(B+1)|`.
    Empirical,
    /// `|sigma2_hat - (1/m) sum g^(B+1)|`.
    Homoscedastic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BVariant {
    /// `1 / (100 ln^s n)`.
    Theoretical,
    /// `32 / (5 alpha (1 - 0.58 alpha)) * |(1/m) sum (f^(B+1) - y)^2 - (1/m) sum g^(B+1)|^(1/2)`.
    Empirical,
}

impl std::str::FromStr for A0Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theoretical" => Ok(A0Variant::Theoretical),
            "empirical" => Ok(A0Variant::Empirical),
            "homoscedastic" => Ok(A0Variant::Homoscedastic),
            other => Err(Error::InvalidConfig(format!("unknown a0 variant `{other}`"))),
        }
    }
}

impl std::str::FromStr for BVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theoretical" => Ok(BVariant::Theoretical),
            "empirical" => Ok(BVariant::Empirical),
            other => Err(Error::InvalidConfig(format!("unknown b(alpha) variant `{other}`"))),
        }
    }
}

/// Sample quantities the calibration formulas read. Fields a variant
/// does not use may be left `None`.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct CalibrationContext {
    /// Full sample size.
    pub n: usize,
    /// Exponent `s` in `ln^s n`.
    pub log_power: f64,
    /// `(1/(n-1)) sum (y_i - ybar)^2` over the full sample.
    pub var_y: Option<f64>,
    /// `(1/m) sum_{I4} (f^(B+1)(x_i) - ybar)^2`.
    pub mean_sq_dev_b1: Option<f64>,
    /// `(1/m) sum_{I4} (f^(B+1)(x_i) - y_i)^2`.
    pub mean_sq_err_b1: Option<f64>,
    /// `(1/m) sum_{I4} g^(B+1)(x_i)`.
    pub mean_g_b1: Option<f64>,
    /// Homoscedastic variance estimate.
    pub sigma2: Option<f64>,
}

impl CalibrationContext {
    fn log_factor(&self) -> Result<f64> {
        if self.n < 2 {
            return Err(Error::SampleTooSmall { n: self.n, min: 2 });
        }
        Ok((self.n as f64).ln().powf(self.log_power))
    }
}

fn need(value: Option<f64>, variant: &'static str, what: &'static str) -> Result<f64> {
    value.ok_or(Error::MissingContext { variant, what })
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

/// The `(1 - alpha/(4 B~))`-quantile of the `B` held-out losses.
pub fn quantile_a1(losses: &[f64], alpha: f64, b_tilde: usize) -> Result<f64> {
    check_alpha(alpha)?;
    order_statistic(losses, 1.0 - alpha / (4.0 * b_tilde as f64))
}

pub fn compute_a0(variant: A0Variant, ctx: &CalibrationContext, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    match variant {
        A0Variant::Theoretical => Ok(alpha / (100.0 * ctx.log_factor()?)),
        A0Variant::Empirical => {
            let v = need(ctx.var_y, "empirical a0", "Var(Y)")?;
            let dev = need(ctx.mean_sq_dev_b1, "empirical a0", "replicate mean spread on I4")?;
            let g = need(ctx.mean_g_b1, "empirical a0", "replicate variance mean on I4")?;
            Ok((v - dev - g).abs())
        }
        A0Variant::Homoscedastic => {
            let s = need(ctx.sigma2, "homoscedastic a0", "sigma2 estimate")?;
            let g = need(ctx.mean_g_b1, "homoscedastic a0", "replicate variance mean on I4")?;
            Ok((s - g).abs())
        }
    }
}

/// `32 / (5 alpha (1 - 0.58 alpha))`.
pub fn empirical_b_factor(alpha: f64) -> f64 {
    32.0 / (5.0 * alpha * (1.0 - 0.58 * alpha))
}

pub fn compute_b_alpha(variant: BVariant, ctx: &CalibrationContext, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    match variant {
        BVariant::Theoretical => Ok(1.0 / (100.0 * ctx.log_factor()?)),
        BVariant::Empirical => {
            let err = need(ctx.mean_sq_err_b1, "empirical b(alpha)", "replicate loss on I4")?;
            let g = need(ctx.mean_g_b1, "empirical b(alpha)", "replicate variance mean on I4")?;
            Ok(empirical_b_factor(alpha) * (err - g).abs().sqrt())
        }
    }
}

/// `(A_n^2 sqrt(32 [ln(8/alpha) + ln B~] / n), A_n sqrt(8 [ln(64/alpha) + ln B~] / n))`.
pub fn deviation_terms(a_n: f64, n: usize, b_tilde: usize, alpha: f64) -> (f64, f64) {
    let n = n as f64;
    let log_bt = (b_tilde as f64).ln();
    let quadratic = a_n * a_n * (32.0 * ((8.0 / alpha).ln() + log_bt) / n).sqrt();
    let linear = a_n * (8.0 * ((64.0 / alpha).ln() + log_bt) / n).sqrt();
    (quadratic, linear)
}

/// `a(alpha)`; the sample size is the full `n`.
pub fn compute_a_alpha(
    a1: f64,
    a0: f64,
    a_n: f64,
    b_tilde: usize,
    ctx: &CalibrationContext,
    alpha: f64,
) -> Result<f64> {
    check_alpha(alpha)?;
    let g = need(ctx.mean_g_b1, "a(alpha)", "replicate variance mean on I4")?;
    if ctx.n == 0 || b_tilde == 0 {
        return Err(Error::InvalidConfig("a(alpha) needs n >= 1 and B~ >= 1".into()));
    }
    let (quadratic, linear) = deviation_terms(a_n, ctx.n, b_tilde, alpha);
    Ok((a1 + quadratic + linear - g + a0).abs())
}

/// `Delta(alpha) = 2 sqrt(a / (alpha B~)) + b`.
pub fn half_width(a_alpha: f64, alpha: f64, b_tilde: usize, b_alpha: f64) -> f64 {
    2.0 * (a_alpha / (alpha * b_tilde as f64)).sqrt() + b_alpha
}
