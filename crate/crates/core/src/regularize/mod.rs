//! Sparsity penalties, their proximal maps and box projection.

mod dtcwt;
mod tv;

pub use dtcwt::{
    dtcwt_forward, dtcwt_inverse, max_levels, prox_dtcwt, DtcwtPyramid, Subband,
    SUBBANDS_PER_LEVEL,
};
pub use tv::{prox_tv, prox_tv_with, tv_value, TvProxOptions, TvProxOutcome, GAP_CHECK_INTERVAL};

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Shrinks every entry's magnitude by `tau`, keeping its phase.
pub fn soft_threshold<T: Real>(v: &Array2<Complex<T>>, tau: T) -> Array2<Complex<T>> {
    v.mapv(|z| {
        let m = z.norm();
        if m > tau {
            z * (T::one() - tau / m)
        } else {
            Complex::default()
        }
    })
}

/// Feasible set for the reconstruction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BoxConstraint<T> {
    /// `|x| <= max` per pixel.
    Magnitude { max: T },
    /// Independent bounds on real and imaginary parts.
    Componentwise {
        re_min: T,
        re_max: T,
        im_min: T,
        im_max: T,
    },
}

impl<T: Real> BoxConstraint<T> {
    pub fn validate(&self) -> Result<()> {
        match *self {
            BoxConstraint::Magnitude { max } => {
                if !(max >= T::zero()) || max.is_nan() {
                    return Err(Error::InvalidParameter(format!(
                        "magnitude bound must be nonnegative, got {max}"
                    )));
                }
            }
            BoxConstraint::Componentwise {
                re_min,
                re_max,
                im_min,
                im_max,
            } => {
                if !(re_min <= re_max) || !(im_min <= im_max) {
                    return Err(Error::InvalidParameter(format!(
                        "inverted box bounds: re [{re_min}, {re_max}], im [{im_min}, {im_max}]"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn project_value(&self, z: Complex<T>) -> Complex<T> {
        match *self {
            BoxConstraint::Magnitude { max } => {
                let m = z.norm();
                if m > max {
                    // nudge inward so the result is a fixed point despite rounding
                    let mut p = z * (max / m);
                    while p.norm() > max {
                        p = p * (T::one() - T::epsilon());
                    }
                    p
                } else {
                    z
                }
            }
            BoxConstraint::Componentwise {
                re_min,
                re_max,
                im_min,
                im_max,
            } => Complex::new(z.re.max(re_min).min(re_max), z.im.max(im_min).min(im_max)),
        }
    }

    pub fn project(&self, x: &Array2<Complex<T>>) -> Array2<Complex<T>> {
        x.mapv(|z| self.project_value(z))
    }
}

/// Euclidean projection onto `bounds`; identity when absent.
pub fn project_box<T: Real>(
    x: &Array2<Complex<T>>,
    bounds: Option<&BoxConstraint<T>>,
) -> Result<Array2<Complex<T>>> {
    match bounds {
        None => Ok(x.clone()),
        Some(b) => {
            b.validate()?;
            Ok(b.project(x))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegKind {
    /// l1 norm of the pixels themselves.
    IdentityL1,
    /// l1 norm of the detail coefficients of the dual-tree complex wavelet transform.
    DtcwtL1,
    /// Isotropic total variation.
    TvIso,
}

impl RegKind {
    pub fn name(self) -> &'static str {
        match self {
            RegKind::IdentityL1 => "l1",
            RegKind::DtcwtL1 => "dtcwt",
            RegKind::TvIso => "tv",
        }
    }
}

impl fmt::Display for RegKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RegKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" | "identity" | "identity_l1" => Ok(RegKind::IdentityL1),
            "dtcwt" | "wavelet" | "dtcwt_l1" => Ok(RegKind::DtcwtL1),
            "tv" | "tv_iso" => Ok(RegKind::TvIso),
            other => Err(Error::InvalidParameter(format!(
                "unknown regularizer {other:?} (expected l1, dtcwt or tv)"
            ))),
        }
    }
}

/// Regularizer choice, weight and feasible set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegSpec<T> {
    pub kind: RegKind,
    pub lambda: T,
    pub bounds: Option<BoxConstraint<T>>,
    pub tv_inner_iters: usize,
    pub dtcwt_levels: usize,
}

impl<T: Real> RegSpec<T> {
    pub fn new(kind: RegKind, lambda: T) -> Self {
        Self {
            kind,
            lambda,
            bounds: None,
            tv_inner_iters: 20,
            dtcwt_levels: 4,
        }
    }

    pub fn with_bounds(mut self, bounds: BoxConstraint<T>) -> Self {
        self.bounds = Some(bounds);
        self
    }

    pub fn with_lambda(mut self, lambda: T) -> Self {
        self.lambda = lambda;
        self
    }

    /// Checks the parameters against an image shape.
    pub fn validate(&self, shape: (usize, usize)) -> Result<()> {
        if !(self.lambda >= T::zero()) || !self.lambda.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "lambda must be finite and nonnegative, got {}",
                self.lambda
            )));
        }
        if self.tv_inner_iters == 0 {
            return Err(Error::InvalidParameter(
                "tv_inner_iters must be at least 1".into(),
            ));
        }
        if let Some(b) = &self.bounds {
            b.validate()?;
        }
        if self.kind == RegKind::DtcwtL1 {
            DtcwtPyramid::<T>::zeros(shape, self.dtcwt_levels)?;
        }
        Ok(())
    }

    /// Penalty `R(x)` without the weight.
    pub fn penalty(&self, x: &Array2<Complex<T>>) -> Result<T> {
        Ok(match self.kind {
            RegKind::IdentityL1 => x.iter().fold(T::zero(), |s, z| s + z.norm()),
            RegKind::DtcwtL1 => dtcwt_forward(x, self.dtcwt_levels)?.detail_l1(),
            RegKind::TvIso => tv_value(x),
        })
    }

    /// Weighted penalty `lambda R(x)`.
    pub fn value(&self, x: &Array2<Complex<T>>) -> Result<T> {
        if self.lambda == T::zero() {
            return Ok(T::zero());
        }
        Ok(self.lambda * self.penalty(x)?)
    }

    /// Proximal step for step size `step`: threshold `lambda * step`, then the box.
    ///
    /// The TV prox includes the box inside its inner solver; with a magnitude bound
    /// the pixel-domain l1 prox is exact as well. Other combinations threshold first
    /// and project afterwards.
    pub fn prox(&self, v: &Array2<Complex<T>>, step: T) -> Result<Array2<Complex<T>>> {
        let tau = self.lambda * step;
        let bounds = self.bounds.as_ref();
        let shrunk = match self.kind {
            RegKind::IdentityL1 => soft_threshold(v, tau),
            RegKind::DtcwtL1 => {
                if tau == T::zero() {
                    v.clone()
                } else {
                    prox_dtcwt(v, tau, self.dtcwt_levels)?
                }
            }
            RegKind::TvIso => {
                let opts = TvProxOptions {
                    inner_iters: self.tv_inner_iters,
                    gap_tol: Some(T::lit(1e-4)),
                };
                return Ok(prox_tv_with(v, tau, &opts, bounds)?.image);
            }
        };
        project_box(&shrunk, bounds)
    }
}
