//! Function schemes: split functions `k -> f(k)` with `0 < f(k) <= k`.
//!
//! The split decides where a polynomial of degree `k` is cut into
//! `a(x) * x^f(k) + b(x)` while building its evaluation tree.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use crate::polynomial::Exponent;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemeError {
    #[error("unknown scheme `{0}`")]
    Unknown(String),
    #[error("invalid threshold in scheme `{0}`: expected `upper:lower@N` with N >= 1")]
    BadThreshold(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Builtin {
    Direct,
    Horner,
    Estrin,
    Balanced,
}

impl Builtin {
    pub const ALL: [Builtin; 4] = [
        Builtin::Direct,
        Builtin::Horner,
        Builtin::Estrin,
        Builtin::Balanced,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Direct => "direct",
            Builtin::Horner => "horner",
            Builtin::Estrin => "estrin",
            Builtin::Balanced => "balanced",
        }
    }

    pub fn split(self, k: Exponent) -> Exponent {
        match self {
            Builtin::Direct => k,
            Builtin::Horner => 1,
            Builtin::Estrin => {
                if k == 0 {
                    0
                } else {
                    1 << k.ilog2()
                }
            }
            // Rounding up keeps f(1) = 1 valid and splits the terms of a
            // dense polynomial evenly.
            Builtin::Balanced => k.div_ceil(2),
        }
    }
}

impl FromStr for Builtin {
    type Err = SchemeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Builtin::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| SchemeError::Unknown(s.to_string()))
    }
}

#[derive(Clone)]
enum Split {
    Builtin(Builtin),
    Threshold {
        upper: Box<FunctionScheme>,
        lower: Box<FunctionScheme>,
        cutoff: Exponent,
    },
    Custom(Arc<dyn Fn(Exponent) -> Exponent + Send + Sync>),
}

/// A named split function driving tree construction.
#[derive(Clone)]
pub struct FunctionScheme {
    name: String,
    split: Split,
}

impl fmt::Debug for FunctionScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("FunctionScheme").field(&self.name).finish()
    }
}

impl fmt::Display for FunctionScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

impl From<Builtin> for FunctionScheme {
    fn from(b: Builtin) -> Self {
        FunctionScheme::builtin(b)
    }
}

/// First `k` in `1..=k_max` where a scheme's split leaves `1..=k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub k: Exponent,
    pub split: Exponent,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "split({}) = {} is outside 1..={}", self.k, self.split, self.k)
    }
}

impl FunctionScheme {
    pub fn builtin(b: Builtin) -> Self {
        FunctionScheme {
            name: b.name().to_string(),
            split: Split::Builtin(b),
        }
    }

    /// A user-defined scheme. Nothing is checked here; see [`FunctionScheme::validate`].
    pub fn custom<F>(name: impl Into<String>, split: F) -> Self
    where
        F: Fn(Exponent) -> Exponent + Send + Sync + 'static,
    {
        FunctionScheme {
            name: name.into(),
            split: Split::Custom(Arc::new(split)),
        }
    }

    /// Uses `upper` for degrees above `cutoff` and `lower` for the rest.
    ///
    /// `estrin:horner@10` is divide and conquer at the top and Hörner on
    /// the sub-polynomials of degree at most 10.
    pub fn threshold(upper: FunctionScheme, lower: FunctionScheme, cutoff: Exponent) -> Self {
        let name = format!("{}:{}@{}", upper.name, lower.name, cutoff);
        FunctionScheme {
            name,
            split: Split::Threshold {
                upper: Box::new(upper),
                lower: Box::new(lower),
                cutoff,
            },
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn split(&self, k: Exponent) -> Exponent {
        match &self.split {
            Split::Builtin(b) => b.split(k),
            Split::Threshold {
                upper,
                lower,
                cutoff,
            } => {
                if k > *cutoff {
                    upper.split(k)
                } else {
                    lower.split(k)
                }
            }
            Split::Custom(f) => f(k),
        }
    }

    pub fn validate(&self, k_max: Exponent) -> Result<(), Violation> {
        for k in 1..=k_max {
            let split = self.split(k);
            if split == 0 || split > k {
                return Err(Violation { k, split });
            }
        }
        Ok(())
    }
}

/// Parses `direct`, `horner`, `estrin`, `balanced`, or `upper:lower@N`.
impl FromStr for FunctionScheme {
    type Err = SchemeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let Some((pair, cutoff)) = s.split_once('@') else {
            if s.contains(':') {
                return Err(SchemeError::BadThreshold(s.to_string()));
            }
            return s.parse::<Builtin>().map(FunctionScheme::builtin);
        };
        let (upper, lower) = pair
            .split_once(':')
            .ok_or_else(|| SchemeError::BadThreshold(s.to_string()))?;
        let upper: Builtin = upper.parse()?;
        let lower: Builtin = lower.parse()?;
        let cutoff: Exponent = cutoff
            .parse()
            .ok()
            .filter(|&c| c >= 1)
            .ok_or_else(|| SchemeError::BadThreshold(s.to_string()))?;
        Ok(FunctionScheme::threshold(upper.into(), lower.into(), cutoff))
    }
}
