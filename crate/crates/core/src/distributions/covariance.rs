use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, SymMatrix};

/// How a covariance matrix is built.
///
/// Diagonal families are indexed from `j = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CovarianceSpec {
    Identity {
        d: usize,
    },
    /// `diag(j^(-alpha))`.
    Polydecay {
        d: usize,
        alpha: f64,
    },
    /// `diag(exp(-gamma (j - 1)))`.
    Expdecay {
        d: usize,
        gamma: f64,
    },
    /// `k` leading eigenvalues equal to `strength`, the remaining `d - k` equal to one.
    Spiked {
        d: usize,
        k: usize,
        strength: f64,
    },
    Diag {
        values: Vec<f64>,
    },
    Explicit {
        matrix: SymMatrix,
    },
}

impl CovarianceSpec {
    pub fn dim(&self) -> usize {
        match self {
            Self::Identity { d }
            | Self::Polydecay { d, .. }
            | Self::Expdecay { d, .. }
            | Self::Spiked { d, .. } => *d,
            Self::Diag { values } => values.len(),
            Self::Explicit { matrix } => matrix.dim(),
        }
    }

    /// The same family at another dimension; fixed matrices cannot be resized.
    pub fn with_dim(&self, d: usize) -> Result<Self> {
        Ok(match self {
            Self::Identity { .. } => Self::Identity { d },
            Self::Polydecay { alpha, .. } => Self::Polydecay { d, alpha: *alpha },
            Self::Expdecay { gamma, .. } => Self::Expdecay { d, gamma: *gamma },
            Self::Spiked { k, strength, .. } => Self::Spiked {
                d,
                k: *k,
                strength: *strength,
            },
            Self::Diag { .. } | Self::Explicit { .. } if self.dim() == d => self.clone(),
            _ => {
                return Err(Error::Config(format!(
                    "covariance '{self}' has a fixed dimension and cannot be resized to {d}"
                )))
            }
        })
    }

    /// Diagonal entries when the spec is diagonal by construction.
    fn diagonal(&self) -> Result<Option<Vec<f64>>> {
        let d = self.dim();
        if d == 0 {
            return Err(Error::Config(
                "covariance dimension must be positive".into(),
            ));
        }
        Ok(match self {
            Self::Identity { d } => Some(vec![1.0; *d]),
            Self::Polydecay { d, alpha } => {
                Some((1..=*d).map(|j| (j as f64).powf(-alpha)).collect())
            }
            Self::Expdecay { d, gamma } => {
                Some((0..*d).map(|j| (-gamma * j as f64).exp()).collect())
            }
            Self::Spiked { d, k, strength } => {
                if *k > *d || !(*strength > 0.0) {
                    return Err(Error::Config(format!(
                        "spiked covariance needs k <= d and strength > 0 (k={k}, d={d}, strength={strength})"
                    )));
                }
                Some(
                    (0..*d)
                        .map(|j| if j < *k { *strength } else { 1.0 })
                        .collect(),
                )
            }
            Self::Diag { values } => Some(values.clone()),
            Self::Explicit { .. } => None,
        })
    }
}

/// Realizes the covariance matrix, checking that it is PSD and nonzero.
pub fn materialize_sigma(spec: &CovarianceSpec) -> Result<SymMatrix> {
    let sigma = match spec.diagonal()? {
        Some(diag) => {
            if diag.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidMatrix("non-finite covariance entry".into()));
            }
            SymMatrix::diag(&diag)
        }
        None => match spec {
            CovarianceSpec::Explicit { matrix } => matrix.clone(),
            _ => unreachable!(),
        },
    };
    let top = linalg::psd_norm(&sigma)?;
    if top == 0.0 {
        return Err(Error::DegenerateMatrix);
    }
    Ok(sigma)
}

impl fmt::Display for CovarianceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Identity { d } => write!(f, "identity:{d}"),
            Self::Polydecay { d, alpha } => write!(f, "polydecay:{d}:{alpha}"),
            Self::Expdecay { d, gamma } => write!(f, "expdecay:{d}:{gamma}"),
            Self::Spiked { d, k, strength } => write!(f, "spiked:{d}:{k}:{strength}"),
            Self::Diag { values } => {
                let parts: Vec<String> = values.iter().map(f64::to_string).collect();
                write!(f, "diag:{}", parts.join(","))
            }
            Self::Explicit { matrix } => write!(f, "explicit({}x{})", matrix.dim(), matrix.dim()),
        }
    }
}

/// Parses the compact grammar `identity:<d>`, `diag:<v1,...>`,
/// `polydecay:<d>:<alpha>`, `expdecay:<d>:<gamma>`, `spiked:<d>:<k>:<strength>`.
impl FromStr for CovarianceSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |what: &str| Error::Parse(format!("sigma spec '{s}': {what}"));
        let mut parts = s.trim().split(':');
        let kind = parts.next().unwrap_or_default();
        let args: Vec<&str> = parts.collect();
        let num = |i: usize| -> Result<f64> {
            args.get(i)
                .ok_or_else(|| bad("missing argument"))?
                .parse::<f64>()
                .map_err(|_| bad("argument is not a number"))
        };
        let count = |i: usize| -> Result<usize> {
            args.get(i)
                .ok_or_else(|| bad("missing argument"))?
                .parse::<usize>()
                .map_err(|_| bad("argument is not a positive integer"))
        };
        let arity = |n: usize| -> Result<()> {
            if args.len() == n {
                Ok(())
            } else {
                Err(bad(&format!("expected {n} argument(s)")))
            }
        };
        let spec = match kind {
            "identity" => {
                arity(1)?;
                Self::Identity { d: count(0)? }
            }
            "polydecay" => {
                arity(2)?;
                Self::Polydecay {
                    d: count(0)?,
                    alpha: num(1)?,
                }
            }
            "expdecay" => {
                arity(2)?;
                Self::Expdecay {
                    d: count(0)?,
                    gamma: num(1)?,
                }
            }
            "spiked" => {
                arity(3)?;
                Self::Spiked {
                    d: count(0)?,
                    k: count(1)?,
                    strength: num(2)?,
                }
            }
            "diag" => {
                arity(1)?;
                let values = args[0]
                    .split(',')
                    .map(|x| {
                        x.trim()
                            .parse::<f64>()
                            .map_err(|_| bad("diagonal entry is not a number"))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Self::Diag { values }
            }
            _ => {
                return Err(bad(
                    "unknown kind (identity, diag, polydecay, expdecay, spiked)",
                ))
            }
        };
        if spec.dim() == 0 {
            return Err(bad("dimension must be positive"));
        }
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_decays() {
        assert_eq!(
            materialize_sigma(&CovarianceSpec::Identity { d: 4 }).unwrap(),
            SymMatrix::identity(4)
        );
        let poly = materialize_sigma(&CovarianceSpec::Polydecay { d: 3, alpha: 1.0 }).unwrap();
        assert_eq!(poly.diagonal(), vec![1.0, 0.5, 1.0 / 3.0]);
    }

    #[test]
    fn spiked_effective_rank() {
        let spec = CovarianceSpec::Spiked {
            d: 5,
            k: 1,
            strength: 10.0,
        };
        let sigma = materialize_sigma(&spec).unwrap();
        assert_eq!(sigma, SymMatrix::diag(&[10.0, 1.0, 1.0, 1.0, 1.0]));
        assert!((linalg::effective_rank(&sigma).unwrap() - 1.4).abs() < 1e-14);
    }

    #[test]
    fn explicit_not_psd_rejected() {
        let spec = CovarianceSpec::Explicit {
            matrix: SymMatrix::new(2, vec![1.0, 2.0, 2.0, 1.0]).unwrap(),
        };
        assert!(matches!(
            materialize_sigma(&spec),
            Err(Error::NotPsd { .. })
        ));
    }

    #[test]
    fn compact_grammar() {
        assert_eq!(
            "identity:4".parse::<CovarianceSpec>().unwrap(),
            CovarianceSpec::Identity { d: 4 }
        );
        assert_eq!(
            "diag:4,0,0".parse::<CovarianceSpec>().unwrap(),
            CovarianceSpec::Diag {
                values: vec![4.0, 0.0, 0.0]
            }
        );
        assert_eq!(
            "spiked:10:1:22.5".parse::<CovarianceSpec>().unwrap(),
            CovarianceSpec::Spiked {
                d: 10,
                k: 1,
                strength: 22.5
            }
        );
        assert!("polydecay:3".parse::<CovarianceSpec>().is_err());
        assert!("blob:3".parse::<CovarianceSpec>().is_err());
        let spec = CovarianceSpec::Polydecay { d: 20, alpha: 1.5 };
        assert_eq!(spec.to_string().parse::<CovarianceSpec>().unwrap(), spec);
    }

    #[test]
    fn json_shape() {
        let spec: CovarianceSpec =
            serde_json::from_str(r#"{"kind":"explicit","matrix":[[2,0],[0,1]]}"#).unwrap();
        assert_eq!(
            materialize_sigma(&spec).unwrap(),
            SymMatrix::diag(&[2.0, 1.0])
        );
    }
}
