//! Per-edge likelihood kernels for the three canonical families.
//!
//! Each family exposes the log-density `ℓ(θ; x)`, its first two derivatives,
//! and the canonical mean link `μ` with its exact inverse. The Gaussian
//! family uses unit variance, so `μ` is the identity and `ℓ″ ≡ −1`.

use crate::error::{Error, Result};
use crate::scalar::{cast, ln_gamma, Scalar};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeFamily {
    Poisson,
    Bernoulli,
    Gaussian,
}

/// Open interval, `None` meaning unbounded on that side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval<T> {
    pub lo: Option<T>,
    pub hi: Option<T>,
}

impl<T: Scalar> Interval<T> {
    /// Strict interiority: the value is inside the open interval.
    pub fn contains(&self, x: T) -> bool {
        self.lo.map_or(true, |lo| x > lo) && self.hi.map_or(true, |hi| x < hi)
    }
}

/// Numerically stable logistic function.
#[inline]
fn sigmoid<T: Scalar>(theta: T) -> T {
    if theta >= T::zero() {
        T::one() / (T::one() + (-theta).exp())
    } else {
        let e = theta.exp();
        e / (T::one() + e)
    }
}

/// Numerically stable `log(1 + e^θ)`.
#[inline]
fn softplus<T: Scalar>(theta: T) -> T {
    if theta > T::zero() {
        theta + (-theta).exp().ln_1p()
    } else {
        theta.exp().ln_1p()
    }
}

impl EdgeFamily {
    /// Checks that `x` lies in the family's support.
    pub fn check_support<T: Scalar>(&self, x: T, location: &str) -> Result<()> {
        let ok = match self {
            EdgeFamily::Poisson => x.is_finite() && x >= T::zero() && x.fract() == T::zero(),
            EdgeFamily::Bernoulli => x == T::zero() || x == T::one(),
            EdgeFamily::Gaussian => x.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Support {
                family: self.to_string(),
                value: x.to_f64().unwrap_or(f64::NAN),
                location: location.to_string(),
            })
        }
    }

    /// Log-density `ℓ(θ; x)` under the canonical parameterization.
    pub fn log_density<T: Scalar>(&self, theta: T, x: T) -> Result<T> {
        self.check_support(x, "log_density")?;
        Ok(self.log_density_unchecked(theta, x))
    }

    /// As `log_density` but without the support check; used in hot loops
    /// after the network has been validated once.
    #[inline]
    pub fn log_density_unchecked<T: Scalar>(&self, theta: T, x: T) -> T {
        self.log_density_varpart(theta, x) + self.log_density_const(x)
    }

    /// The θ-dependent part of the log-density: `xθ − b(θ)`. The full
    /// log-density is this plus [`log_density_const`]; line searches and
    /// gradients only ever consume differences, where the constant cancels,
    /// so the optimizer sums this part alone.
    #[inline]
    pub fn log_density_varpart<T: Scalar>(&self, theta: T, x: T) -> T {
        match self {
            EdgeFamily::Poisson => x * theta - theta.exp(),
            EdgeFamily::Bernoulli => x * theta - softplus(theta),
            EdgeFamily::Gaussian => x * theta - theta * theta / cast(2.0),
        }
    }

    /// The θ-free normalization part of the log-density.
    #[inline]
    pub fn log_density_const<T: Scalar>(&self, x: T) -> T {
        match self {
            EdgeFamily::Poisson => -ln_gamma(x + T::one()),
            EdgeFamily::Bernoulli => T::zero(),
            EdgeFamily::Gaussian => -x * x / cast(2.0) - T::two_pi().sqrt().ln(),
        }
    }

    /// First derivative `ℓ′(θ; x)`.
    pub fn d1<T: Scalar>(&self, theta: T, x: T) -> Result<T> {
        self.check_support(x, "d1")?;
        Ok(self.d1_unchecked(theta, x))
    }

    #[inline]
    pub fn d1_unchecked<T: Scalar>(&self, theta: T, x: T) -> T {
        match self {
            EdgeFamily::Poisson => x - theta.exp(),
            EdgeFamily::Bernoulli => x - sigmoid(theta),
            EdgeFamily::Gaussian => x - theta,
        }
    }

    /// Second derivative `ℓ″(θ; x)`; strictly negative for all three families
    /// and independent of `x` under the canonical links.
    pub fn d2<T: Scalar>(&self, theta: T, x: T) -> Result<T> {
        self.check_support(x, "d2")?;
        Ok(self.d2_unchecked(theta))
    }

    #[inline]
    pub fn d2_unchecked<T: Scalar>(&self, theta: T) -> T {
        match self {
            EdgeFamily::Poisson => -theta.exp(),
            EdgeFamily::Bernoulli => {
                let s = sigmoid(theta);
                -s * (T::one() - s)
            }
            EdgeFamily::Gaussian => -T::one(),
        }
    }

    /// Mean link `μ(θ)`.
    #[inline]
    pub fn mean<T: Scalar>(&self, theta: T) -> T {
        match self {
            EdgeFamily::Poisson => theta.exp(),
            EdgeFamily::Bernoulli => sigmoid(theta),
            EdgeFamily::Gaussian => theta,
        }
    }

    /// `μ′(θ)`; equals `−ℓ″(θ; x)` under the canonical link.
    #[inline]
    pub fn mean_derivative<T: Scalar>(&self, theta: T) -> T {
        -self.d2_unchecked(theta)
    }

    /// Exact analytic inverse of the mean link.
    pub fn mean_inverse<T: Scalar>(&self, e: T) -> Result<T> {
        if !self.mean_image::<T>().contains(e) {
            return Err(Error::MeanImage {
                family: self.to_string(),
                value: e.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(match self {
            EdgeFamily::Poisson => e.ln(),
            EdgeFamily::Bernoulli => (e / (T::one() - e)).ln(),
            EdgeFamily::Gaussian => e,
        })
    }

    /// Open image of the mean link.
    pub fn mean_image<T: Scalar>(&self) -> Interval<T> {
        match self {
            EdgeFamily::Poisson => Interval {
                lo: Some(T::zero()),
                hi: None,
            },
            EdgeFamily::Bernoulli => Interval {
                lo: Some(T::zero()),
                hi: Some(T::one()),
            },
            EdgeFamily::Gaussian => Interval { lo: None, hi: None },
        }
    }
}

impl fmt::Display for EdgeFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            EdgeFamily::Poisson => "poisson",
            EdgeFamily::Bernoulli => "bernoulli",
            EdgeFamily::Gaussian => "gaussian",
        };
        f.write_str(s)
    }
}

impl FromStr for EdgeFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "poisson" => Ok(EdgeFamily::Poisson),
            "bernoulli" => Ok(EdgeFamily::Bernoulli),
            "gaussian" => Ok(EdgeFamily::Gaussian),
            other => Err(Error::Config(format!("unknown family '{other}'"))),
        }
    }
}
