//! Golden-section search for the regularization weight.

use ndarray::Array2;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::metric::ncc;
use crate::error::{Error, Result};
use crate::model::MeasurementOperator;
use crate::regularize::RegSpec;
use crate::scalar::Real;
use crate::solver::{fista, SolverConfig};

/// `(sqrt(5) - 1) / 2`.
pub const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Search interval and stopping width, all in decades of `lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoldenOptions {
    pub log_lo: f64,
    pub log_hi: f64,
    pub tol_decades: f64,
}

impl Default for GoldenOptions {
    fn default() -> Self {
        Self {
            log_lo: -6.0,
            log_hi: 1.0,
            tol_decades: 0.05,
        }
    }
}

impl GoldenOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.log_lo.is_finite() && self.log_hi.is_finite() && self.log_lo <= self.log_hi) {
            return Err(Error::InvalidParameter(format!(
                "search interval [{}, {}] must be finite and ordered",
                self.log_lo, self.log_hi
            )));
        }
        if !(self.tol_decades > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "search tolerance must be positive, got {}",
                self.tol_decades
            )));
        }
        Ok(())
    }

    /// Upper bound on objective evaluations for this interval.
    pub fn max_evaluations(&self) -> usize {
        let width = self.log_hi - self.log_lo;
        if width < self.tol_decades {
            return 1;
        }
        2 + ((width / self.tol_decades).ln() / (1.0 / INV_PHI).ln()).ceil() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchPoint {
    pub lambda: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    /// Highest-scoring evaluated point (the smaller `lambda` on ties).
    pub best: SearchPoint,
    /// Every evaluation in call order.
    pub trace: Vec<SearchPoint>,
}

/// Maximizes `score(lambda)` over `log10 lambda` in the option interval.
///
/// The search stops once the bracket is narrower than `tol_decades`; an interval
/// already below the tolerance is evaluated once at its midpoint.
pub fn golden_section_max<F>(mut score: F, options: &GoldenOptions) -> Result<SearchOutcome>
where
    F: FnMut(f64) -> Result<f64>,
{
    options.validate()?;
    let mut trace = Vec::with_capacity(options.max_evaluations());
    let mut eval = |log_l: f64, trace: &mut Vec<SearchPoint>| -> Result<f64> {
        let lambda = 10f64.powf(log_l);
        let s = score(lambda)?;
        trace.push(SearchPoint { lambda, score: s });
        // NaN scores lose every comparison
        Ok(if s.is_nan() { f64::NEG_INFINITY } else { s })
    };

    let (mut a, mut b) = (options.log_lo, options.log_hi);
    if b - a < options.tol_decades {
        eval(0.5 * (a + b), &mut trace)?;
    } else {
        let mut c = b - INV_PHI * (b - a);
        let mut d = a + INV_PHI * (b - a);
        let mut fc = eval(c, &mut trace)?;
        let mut fd = eval(d, &mut trace)?;
        loop {
            if fc >= fd {
                b = d;
                d = c;
                fd = fc;
                if b - a < options.tol_decades {
                    break;
                }
                c = b - INV_PHI * (b - a);
                fc = eval(c, &mut trace)?;
            } else {
                a = c;
                c = d;
                fc = fd;
                if b - a < options.tol_decades {
                    break;
                }
                d = a + INV_PHI * (b - a);
                fd = eval(d, &mut trace)?;
            }
        }
    }

    let best = trace
        .iter()
        .copied()
        .fold(None::<SearchPoint>, |best, p| match best {
            None => Some(p),
            Some(q) if p.score > q.score || (p.score == q.score && p.lambda < q.lambda) => Some(p),
            keep => keep,
        })
        .expect("at least one evaluation");
    Ok(SearchOutcome { best, trace })
}

/// Result of tuning `lambda` against a reference image.
#[derive(Debug, Clone)]
pub struct LambdaSearch<T> {
    pub outcome: SearchOutcome,
    /// Best iterate of the solve at the chosen `lambda`.
    pub image: Array2<Complex<T>>,
    pub iterations: usize,
}

/// Picks `lambda` maximizing the NCC between the solver's best iterate and `reference`.
pub fn golden_search_lambda<T: Real, Op: MeasurementOperator<T> + ?Sized>(
    op: &Op,
    y: &Array2<T>,
    reg: &RegSpec<T>,
    solver: &SolverConfig<T>,
    reference: &Array2<Complex<T>>,
    options: &GoldenOptions,
) -> Result<LambdaSearch<T>> {
    let mut best: Option<(f64, Array2<Complex<T>>, usize)> = None;
    let outcome = golden_section_max(
        |lambda| {
            let spec = reg.clone().with_lambda(T::lit(lambda));
            let report = fista(op, y, &spec, solver)?;
            let score = ncc(&report.best_iterate, reference)?.to_f64_lossy();
            let better = best.as_ref().is_none_or(|(s, _, _)| score > *s);
            if better {
                best = Some((score, report.best_iterate, report.iterations_run));
            }
            Ok(score)
        },
        options,
    )?;
    let (_, image, iterations) = best.expect("at least one evaluation");
    Ok(LambdaSearch {
        outcome,
        image,
        iterations,
    })
}
