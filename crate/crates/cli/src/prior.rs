//! Weight priors the experiment networks are drawn from. Each prior fixes
//! the conditional family it belongs with, so the choice of prior also
//! selects the network kind.

use std::fmt;
use std::str::FromStr;

use belief_bounds::NetworkKind;
use rand::Rng;

/// Distribution of a single parent-to-child weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightPrior {
    /// Sigmoid networks: `theta ~ Normal(0, sigma^2)`.
    Gaussian { sigma: f64 },
    /// Noisy-OR networks: activation probability `q` with density
    /// `phi * (1-q)^(phi-1)` on `(0, 1)`, drawn by inverse CDF as
    /// `q = 1 - u^(1/phi)` and mapped to `theta = -ln(1-q)`, which makes
    /// `theta` exponential with rate `phi`.
    Dirichlet { phi: f64 },
}

impl WeightPrior {
    pub fn kind(self) -> NetworkKind {
        match self {
            WeightPrior::Gaussian { .. } => NetworkKind::Sigmoid,
            WeightPrior::Dirichlet { .. } => NetworkKind::NoisyOr,
        }
    }

    /// The scalar recorded in the `prior_param` CSV column.
    pub fn param(self) -> f64 {
        match self {
            WeightPrior::Gaussian { sigma } => sigma,
            WeightPrior::Dirichlet { phi } => phi,
        }
    }

    pub fn sample_theta<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            WeightPrior::Gaussian { sigma } => {
                // Box-Muller; consumes two uniforms per draw so the stream
                // stays aligned regardless of the rejected-half trick
                // polar variants use.
                let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
                let u2: f64 = rng.gen();
                sigma * (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
            }
            WeightPrior::Dirichlet { phi } => {
                let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
                // theta = -ln(1-q) with q = 1 - u^(1/phi).
                -u.ln() / phi
            }
        }
    }
}

impl fmt::Display for WeightPrior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightPrior::Gaussian { sigma } => write!(f, "gaussian:{sigma}"),
            WeightPrior::Dirichlet { phi } => write!(f, "dirichlet:{phi}"),
        }
    }
}

impl FromStr for WeightPrior {
    type Err = String;

    fn from_str(text: &str) -> Result<Self, String> {
        let (name, value) = text.split_once(':').ok_or_else(|| {
            format!("expected gaussian:<sigma> or dirichlet:<phi>, got {text:?}")
        })?;
        let value: f64 = value
            .parse()
            .map_err(|_| format!("{value:?} is not a number"))?;
        if !(value.is_finite() && value > 0.0) {
            return Err(format!("prior parameter must be positive, got {value}"));
        }
        match name {
            "gaussian" => Ok(WeightPrior::Gaussian { sigma: value }),
            "dirichlet" => Ok(WeightPrior::Dirichlet { phi: value }),
            other => Err(format!(
                "unknown prior family {other:?} (expected gaussian or dirichlet)"
            )),
        }
    }
}
