//! Spectral sub-sampling patterns.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Mask;

/// How spectrometer pixels are kept.
///
/// Parses from and prints as `full`, `random:P`, `equispaced:F` or `partial:FRACTION`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum MaskScheme {
    Full,
    /// Independent Bernoulli draw per pixel with keep probability `p`.
    Random(f64),
    /// Every `factor`-th pixel starting from the first.
    Equispaced(usize),
    /// A contiguous central band holding this fraction of the pixels.
    Partial(f64),
}

impl MaskScheme {
    pub fn validate(&self) -> Result<()> {
        match *self {
            MaskScheme::Full => Ok(()),
            MaskScheme::Random(p) if (0.0..=1.0).contains(&p) => Ok(()),
            MaskScheme::Random(p) => Err(Error::InvalidParameter(format!(
                "random keep probability must lie in [0, 1], got {p}"
            ))),
            MaskScheme::Equispaced(f) if f >= 1 => Ok(()),
            MaskScheme::Equispaced(f) => Err(Error::InvalidParameter(format!(
                "equispaced factor must be at least 1, got {f}"
            ))),
            MaskScheme::Partial(fr) if fr > 0.0 && fr <= 1.0 => Ok(()),
            MaskScheme::Partial(fr) => Err(Error::InvalidParameter(format!(
                "partial fraction must lie in (0, 1], got {fr}"
            ))),
        }
    }

    /// Short label without parameters, e.g. `random`.
    pub fn family(&self) -> &'static str {
        match self {
            MaskScheme::Full => "full",
            MaskScheme::Random(_) => "random",
            MaskScheme::Equispaced(_) => "equispaced",
            MaskScheme::Partial(_) => "partial",
        }
    }

    /// The three half-rate schemes of the sub-sampling study.
    pub fn half_rate() -> [MaskScheme; 3] {
        [
            MaskScheme::Random(0.5),
            MaskScheme::Equispaced(2),
            MaskScheme::Partial(0.5),
        ]
    }
}

impl fmt::Display for MaskScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MaskScheme::Full => write!(f, "full"),
            MaskScheme::Random(p) => write!(f, "random:{p}"),
            MaskScheme::Equispaced(n) => write!(f, "equispaced:{n}"),
            MaskScheme::Partial(fr) => write!(f, "partial:{fr}"),
        }
    }
}

impl FromStr for MaskScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        let bad = |what: &str| Error::InvalidParameter(format!("invalid {what} in mask {s:?}"));
        let scheme = match (name.to_ascii_lowercase().as_str(), arg) {
            ("full", None) => MaskScheme::Full,
            ("random", a) => MaskScheme::Random(a.unwrap_or("0.5").parse().map_err(|_| bad("probability"))?),
            ("equispaced", a) => {
                MaskScheme::Equispaced(a.unwrap_or("2").parse().map_err(|_| bad("factor"))?)
            }
            ("partial", a) => MaskScheme::Partial(a.unwrap_or("0.5").parse().map_err(|_| bad("fraction"))?),
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "unknown mask scheme {s:?} (expected full, random:P, equispaced:F or partial:FRACTION)"
                )))
            }
        };
        scheme.validate()?;
        Ok(scheme)
    }
}

impl TryFrom<String> for MaskScheme {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<MaskScheme> for String {
    fn from(m: MaskScheme) -> String {
        m.to_string()
    }
}

/// Builds a sampling mask of length `n`; only the random scheme consumes `seed`.
pub fn make_mask(n: usize, scheme: MaskScheme, seed: u64) -> Result<Mask> {
    scheme.validate()?;
    let bits = match scheme {
        MaskScheme::Full => vec![true; n],
        MaskScheme::Random(p) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..n).map(|_| rng.random_bool(p)).collect()
        }
        MaskScheme::Equispaced(f) => (0..n).map(|i| i % f == 0).collect(),
        MaskScheme::Partial(fr) => {
            let count = ((fr * n as f64).round() as usize).min(n);
            let start = (n - count) / 2;
            (0..n).map(|i| i >= start && i < start + count).collect()
        }
    };
    Ok(Mask::from_bools(bits))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(m: &Mask) -> Vec<u8> {
        m.to_bits()
    }

    #[test]
    fn deterministic_schemes() {
        assert_eq!(bits(&make_mask(8, MaskScheme::Equispaced(2), 0).unwrap()), [1, 0, 1, 0, 1, 0, 1, 0]);
        assert_eq!(bits(&make_mask(8, MaskScheme::Partial(0.5), 0).unwrap()), [0, 0, 1, 1, 1, 1, 0, 0]);
        assert!(make_mask(8, MaskScheme::Full, 0).unwrap().is_full());
        assert_eq!(make_mask(9, MaskScheme::Equispaced(3), 0).unwrap().kept(), 3);
    }

    #[test]
    fn random_mask_is_reproducible_and_half() {
        let a = make_mask(1024, MaskScheme::Random(0.5), 17).unwrap();
        let b = make_mask(1024, MaskScheme::Random(0.5), 17).unwrap();
        let c = make_mask(1024, MaskScheme::Random(0.5), 18).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!((a.kept_fraction() - 0.5).abs() < 0.05);
    }

    #[test]
    fn half_rate_schemes_keep_half() {
        for scheme in MaskScheme::half_rate() {
            let m = make_mask(512, scheme, 3).unwrap();
            assert!((m.kept_fraction() - 0.5).abs() <= 0.05, "{scheme}");
            if !matches!(scheme, MaskScheme::Random(_)) {
                assert_eq!(m.kept(), 256);
            }
        }
    }

    #[test]
    fn invalid_parameters() {
        assert!(make_mask(8, MaskScheme::Random(1.5), 0).is_err());
        assert!(make_mask(8, MaskScheme::Equispaced(0), 0).is_err());
        assert!(make_mask(8, MaskScheme::Partial(0.0), 0).is_err());
        assert!(make_mask(8, MaskScheme::Partial(1.2), 0).is_err());
        assert!(make_mask(8, MaskScheme::Random(0.0), 0).unwrap().kept() == 0);
    }

    #[test]
    fn parse_and_print() {
        for s in ["full", "random:0.5", "equispaced:2", "partial:0.5", "random:0.25"] {
            let m: MaskScheme = s.parse().unwrap();
            assert_eq!(m.to_string(), s);
        }
        assert_eq!("random".parse::<MaskScheme>().unwrap(), MaskScheme::Random(0.5));
        assert!("equispaced:x".parse::<MaskScheme>().is_err());
        assert!("zigzag:2".parse::<MaskScheme>().is_err());
        let json = serde_json::to_string(&MaskScheme::Equispaced(2)).unwrap();
        assert_eq!(json, "\"equispaced:2\"");
        assert_eq!(serde_json::from_str::<MaskScheme>(&json).unwrap(), MaskScheme::Equispaced(2));
    }
}
