//! Disorder marginals with closed-form cumulant generating functions.

use crate::error::{Error, Result};
use crate::numeric::standard_normal_quantile;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::str::FromStr;

/// Marginal law of a single environment variable; always mean zero.
///
/// Each family provides `lambda(beta) = ln E[exp(beta omega)]` in closed
/// form and a quantile transform used to turn hashed uniforms into draws.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DisorderFamily {
    /// Standard normal disorder; `lambda(beta) = beta^2 / 2`.
    StandardGaussian,
    /// Symmetric `±1` disorder; `lambda(beta) = ln cosh beta`.
    Rademacher,
    /// `Bernoulli(p)` shifted to mean zero: takes `1 - p` with
    /// probability `p`, else `-p`; `lambda = -beta p + ln(p e^beta + 1 - p)`.
    CenteredBernoulli { p: f64 },
    /// `Exp(rate)` shifted to mean zero: `omega = E - 1/rate`;
    /// `lambda = -beta/rate + ln(rate / (rate - beta))` for `beta < rate`.
    ShiftedExponential { rate: f64 },
}

impl DisorderFamily {
    /// Check the family parameters themselves.
    pub fn validate(&self) -> Result<()> {
        match *self {
            DisorderFamily::StandardGaussian | DisorderFamily::Rademacher => Ok(()),
            DisorderFamily::CenteredBernoulli { p } => {
                if p.is_finite() && 0.0 < p && p < 1.0 {
                    Ok(())
                } else {
                    Err(Error::invalid(format!("bernoulli parameter p = {p} not in (0, 1)")))
                }
            }
            DisorderFamily::ShiftedExponential { rate } => {
                if rate.is_finite() && rate > 0.0 {
                    Ok(())
                } else {
                    Err(Error::invalid(format!("exponential rate {rate} must be positive")))
                }
            }
        }
    }

    /// Cumulant generating function `lambda(beta)`, finite-domain checked.
    pub fn lambda(&self, beta: f64) -> Result<f64> {
        if !beta.is_finite() {
            return Err(Error::invalid(format!("beta = {beta} is not finite")));
        }
        match *self {
            DisorderFamily::StandardGaussian => Ok(beta * beta / 2.0),
            DisorderFamily::Rademacher => Ok(ln_cosh(beta)),
            DisorderFamily::CenteredBernoulli { p } => {
                // ln(p e^beta + 1 - p) evaluated stably for large |beta|.
                let m = if beta > 0.0 {
                    beta + (p + (1.0 - p) * (-beta).exp()).ln()
                } else {
                    (p * beta.exp() + 1.0 - p).ln()
                };
                Ok(-beta * p + m)
            }
            DisorderFamily::ShiftedExponential { rate } => {
                if beta >= rate {
                    return Err(Error::domain(format!(
                        "exponential disorder: lambda(beta) infinite for beta = {beta} >= rate = {rate}"
                    )));
                }
                Ok(-beta / rate + (rate / (rate - beta)).ln())
            }
        }
    }

    /// `lambda_2(beta) = lambda(2 beta) - 2 lambda(beta)`, the log second
    /// moment of the normalized weight `exp(beta omega - lambda)`.
    pub fn lambda2(&self, beta: f64) -> Result<f64> {
        Ok(self.lambda(2.0 * beta)? - 2.0 * self.lambda(beta)?)
    }

    /// Supremum of `lambda_2` over the family's beta domain; `None` means
    /// unbounded.  Determines whether an `L^2` critical beta exists.
    pub fn lambda2_sup(&self) -> Option<f64> {
        match *self {
            // beta^2 grows without bound.
            DisorderFamily::StandardGaussian => None,
            // ln cosh 2b - 2 ln cosh b -> ln 2.
            DisorderFamily::Rademacher => Some(std::f64::consts::LN_2),
            // Saturates at ln(1/p) as beta -> inf.
            DisorderFamily::CenteredBernoulli { p } => Some(-p.ln()),
            // Diverges as beta -> rate/2.
            DisorderFamily::ShiftedExponential { .. } => None,
        }
    }

    /// Largest beta (exclusive) for which `lambda2` is finite; `None`
    /// means all of `[0, inf)`.
    pub fn lambda2_domain_end(&self) -> Option<f64> {
        match *self {
            DisorderFamily::ShiftedExponential { rate } => Some(rate / 2.0),
            _ => None,
        }
    }

    /// Variance of one disorder variable.
    pub fn variance(&self) -> f64 {
        match *self {
            DisorderFamily::StandardGaussian | DisorderFamily::Rademacher => 1.0,
            DisorderFamily::CenteredBernoulli { p } => p * (1.0 - p),
            DisorderFamily::ShiftedExponential { rate } => 1.0 / (rate * rate),
        }
    }

    /// Quantile transform of a uniform `u` in the open unit interval.
    #[inline]
    pub fn draw(&self, u: f64) -> f64 {
        debug_assert!(0.0 < u && u < 1.0);
        match *self {
            DisorderFamily::StandardGaussian => standard_normal_quantile(u),
            DisorderFamily::Rademacher => {
                if u < 0.5 {
                    -1.0
                } else {
                    1.0
                }
            }
            DisorderFamily::CenteredBernoulli { p } => {
                if u < 1.0 - p {
                    -p
                } else {
                    1.0 - p
                }
            }
            DisorderFamily::ShiftedExponential { rate } => (-u.ln() - 1.0) / rate,
        }
    }

    /// CDF of the marginal, for distributional tests.
    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            DisorderFamily::StandardGaussian => crate::numeric::standard_normal_cdf(x),
            DisorderFamily::Rademacher => {
                if x < -1.0 {
                    0.0
                } else if x < 1.0 {
                    0.5
                } else {
                    1.0
                }
            }
            DisorderFamily::CenteredBernoulli { p } => {
                if x < -p {
                    0.0
                } else if x < 1.0 - p {
                    1.0 - p
                } else {
                    1.0
                }
            }
            DisorderFamily::ShiftedExponential { rate } => {
                if x < -1.0 / rate {
                    0.0
                } else {
                    1.0 - (-(rate * x + 1.0)).exp()
                }
            }
        }
    }

    /// Atoms `(value, cumulative probability)` for discrete families.
    pub fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        match *self {
            DisorderFamily::Rademacher => Some(vec![(-1.0, 0.5), (1.0, 1.0)]),
            DisorderFamily::CenteredBernoulli { p } => {
                Some(vec![(-p, 1.0 - p), (1.0 - p, 1.0)])
            }
            _ => None,
        }
    }
}

/// `ln cosh x`, stable for large `|x|`.
fn ln_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (1.0 + (-2.0 * a).exp()).ln() - std::f64::consts::LN_2
}

impl fmt::Display for DisorderFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            DisorderFamily::StandardGaussian => write!(f, "gaussian"),
            DisorderFamily::Rademacher => write!(f, "rademacher"),
            DisorderFamily::CenteredBernoulli { p } => write!(f, "bernoulli:{p}"),
            DisorderFamily::ShiftedExponential { rate } => write!(f, "exponential:{rate}"),
        }
    }
}

impl FromStr for DisorderFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let fam = match s.trim() {
            "gaussian" => DisorderFamily::StandardGaussian,
            "rademacher" => DisorderFamily::Rademacher,
            other => {
                let (name, arg) = other
                    .split_once(':')
                    .ok_or_else(|| Error::Config(format!("unknown disorder family '{other}'")))?;
                let value: f64 = arg.trim().parse().map_err(|_| {
                    Error::Config(format!("bad numeric parameter in family '{other}'"))
                })?;
                match name.trim() {
                    "bernoulli" => DisorderFamily::CenteredBernoulli { p: value },
                    "exponential" => DisorderFamily::ShiftedExponential { rate: value },
                    _ => return Err(Error::Config(format!("unknown disorder family '{other}'"))),
                }
            }
        };
        fam.validate()?;
        Ok(fam)
    }
}

impl Serialize for DisorderFamily {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for DisorderFamily {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
