//! Sub-sampling study: every mask scheme against every reconstruction method.

use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::time::Instant;

use ndarray::Array2;
use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::baseline::{reconstruct_baseline, BaselineKind};
use super::metric::ncc;
use super::phantom::{simulate_phantom, Phantom, PhantomSpec};
use super::search::{golden_search_lambda, GoldenOptions};
use crate::error::{Error, Result};
use crate::image::Mask;
use crate::mask::{make_mask, MaskScheme};
use crate::model::IsamOperator;
use crate::regularize::{RegKind, RegSpec};
use crate::scalar::Real;
use crate::solver::SolverConfig;

/// What reconstructions are scored against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceMode {
    /// The simulated scatterer image.
    Truth,
    /// The ISAM reconstruction of the fully sampled measurements.
    Isam,
}

impl fmt::Display for ReferenceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReferenceMode::Truth => "truth",
            ReferenceMode::Isam => "isam",
        })
    }
}

impl FromStr for ReferenceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "truth" => Ok(ReferenceMode::Truth),
            "isam" => Ok(ReferenceMode::Isam),
            other => Err(Error::InvalidParameter(format!(
                "unknown reference mode {other:?} (expected truth or isam)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub phantom: PhantomSpec,
    pub schemes: Vec<MaskScheme>,
    pub regularizers: Vec<RegKind>,
    pub baselines: Vec<BaselineKind>,
    /// Also score the baselines on fully sampled data.
    pub include_full: bool,
    pub mask_seed: u64,
    pub iterations: usize,
    pub tv_inner_iters: usize,
    pub dtcwt_levels: usize,
    pub search: GoldenOptions,
    pub reference: ReferenceMode,
    /// Adds a wall-time column; tables are then no longer reproducible byte for byte.
    pub record_timing: bool,
}

impl StudyConfig {
    /// The three half-rate schemes, TV and DT-CWT against interpolated ISAM,
    /// 100 iterations, scored against the true phantom.
    pub fn standard(phantom: PhantomSpec) -> Self {
        Self {
            phantom,
            schemes: MaskScheme::half_rate().to_vec(),
            regularizers: vec![RegKind::TvIso, RegKind::DtcwtL1],
            baselines: vec![BaselineKind::InterpIsam],
            include_full: true,
            mask_seed: 0,
            iterations: 100,
            tv_inner_iters: 20,
            dtcwt_levels: 4,
            search: GoldenOptions::default(),
            reference: ReferenceMode::Truth,
            record_timing: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.phantom.validate()?;
        self.search.validate()?;
        for s in &self.schemes {
            s.validate()?;
        }
        if self.iterations == 0 {
            return Err(Error::InvalidParameter("iterations must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub scheme: MaskScheme,
    /// Baseline name or regularizer name.
    pub method: String,
    pub lambda: Option<f64>,
    pub ncc: f64,
    pub iterations: usize,
    pub seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub reference: ReferenceMode,
    pub rows: Vec<StudyRow>,
}

impl StudyReport {
    pub fn row(&self, scheme: MaskScheme, method: &str) -> Option<&StudyRow> {
        self.rows
            .iter()
            .find(|r| r.scheme == scheme && r.method == method)
    }

    pub fn ncc(&self, scheme: MaskScheme, method: &str) -> Option<f64> {
        self.row(scheme, method).map(|r| r.ncc)
    }

    /// Tab-separated table with a leading comment naming the reference.
    pub fn to_tsv(&self) -> String {
        let timed = self.rows.iter().any(|r| r.seconds.is_some());
        let mut out = format!("# reference: {}\nscheme\tmethod\tlambda\tncc\titerations", self.reference);
        if timed {
            out.push_str("\tseconds");
        }
        out.push('\n');
        for r in &self.rows {
            let lambda = r.lambda.map_or_else(|| "-".to_owned(), |l| format!("{l:.6e}"));
            let _ = write!(out, "{}\t{}\t{lambda}\t{:.6}\t{}", r.scheme, r.method, r.ncc, r.iterations);
            if timed {
                match r.seconds {
                    Some(s) => {
                        let _ = write!(out, "\t{s:.3}");
                    }
                    None => out.push_str("\t-"),
                }
            }
            out.push('\n');
        }
        out
    }
}

enum Method {
    Baseline(BaselineKind),
    Mbir(RegKind),
}

impl Method {
    fn name(&self) -> &'static str {
        match self {
            Method::Baseline(b) => b.name(),
            Method::Mbir(r) => r.name(),
        }
    }
}

/// Simulates the phantom and fills the study table; cells run in parallel.
pub fn run_study<T: Real>(config: &StudyConfig) -> Result<StudyReport> {
    config.validate()?;
    let model = config.phantom.model_config::<T>()?;
    let phantom = simulate_phantom(&config.phantom, &model)?;
    run_study_on(config, &phantom)
}

/// Study on an already simulated phantom.
pub fn run_study_on<T: Real>(config: &StudyConfig, phantom: &Phantom<T>) -> Result<StudyReport> {
    config.validate()?;
    let n_axial = phantom.config.grid.n_axial();
    let y_full = &phantom.measurements.data;
    let full_op = IsamOperator::new(phantom.config.clone(), Mask::full(n_axial))?;
    let reference: Array2<Complex<T>> = match config.reference {
        ReferenceMode::Truth => phantom.truth.data.clone(),
        ReferenceMode::Isam => reconstruct_baseline(
            y_full,
            &Mask::full(n_axial),
            &phantom.config,
            BaselineKind::InterpIsam,
        )?,
    };

    let mut cells: Vec<(MaskScheme, Method)> = Vec::new();
    if config.include_full {
        for &b in &config.baselines {
            cells.push((MaskScheme::Full, Method::Baseline(b)));
        }
    }
    for &scheme in &config.schemes {
        for &b in &config.baselines {
            cells.push((scheme, Method::Baseline(b)));
        }
        for &r in &config.regularizers {
            cells.push((scheme, Method::Mbir(r)));
        }
    }

    let solver = SolverConfig::default().with_iters(config.iterations);
    let rows = cells
        .par_iter()
        .map(|(scheme, method)| -> Result<StudyRow> {
            let start = Instant::now();
            let mask = make_mask(n_axial, *scheme, config.mask_seed)?;
            let mut y = y_full.clone();
            mask.apply(&mut y);
            let (lambda, score, iterations) = match method {
                Method::Baseline(kind) => {
                    let x = reconstruct_baseline(&y, &mask, &phantom.config, *kind)?;
                    (None, ncc(&x, &reference)?.to_f64_lossy(), 0)
                }
                Method::Mbir(kind) => {
                    let op = full_op.with_mask(mask)?;
                    let mut reg = RegSpec::new(*kind, T::zero());
                    reg.tv_inner_iters = config.tv_inner_iters;
                    reg.dtcwt_levels = config.dtcwt_levels;
                    let found =
                        golden_search_lambda(&op, &y, &reg, &solver, &reference, &config.search)?;
                    let best = found.outcome.best;
                    (Some(best.lambda), best.score, found.iterations)
                }
            };
            Ok(StudyRow {
                scheme: *scheme,
                method: method.name().to_owned(),
                lambda,
                ncc: score,
                iterations,
                seconds: config.record_timing.then(|| start.elapsed().as_secs_f64()),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StudyReport {
        reference: config.reference,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> StudyConfig {
        let mut cfg = StudyConfig::standard(PhantomSpec::with_size(32).with_seed(2));
        cfg.iterations = 5;
        cfg.dtcwt_levels = 2;
        cfg.search = GoldenOptions {
            log_lo: -3.0,
            log_hi: 0.0,
            tol_decades: 1.0,
        };
        cfg
    }

    #[test]
    fn table_layout() {
        let cfg = tiny();
        let report = run_study::<f64>(&cfg).unwrap();
        assert_eq!(report.rows.len(), 1 + 3 * 3);
        let tsv = report.to_tsv();
        let mut lines = tsv.lines();
        assert_eq!(lines.next(), Some("# reference: truth"));
        assert_eq!(lines.next(), Some("scheme\tmethod\tlambda\tncc\titerations"));
        assert_eq!(lines.count(), report.rows.len());
        assert!(report.ncc(MaskScheme::Partial(0.5), "tv").is_some());
        assert!(report.row(MaskScheme::Full, "interp_isam").unwrap().lambda.is_none());
        assert_eq!(run_study::<f64>(&cfg).unwrap().to_tsv(), tsv);
    }

    #[test]
    fn timing_column_is_opt_in() {
        let mut cfg = tiny();
        cfg.schemes = vec![MaskScheme::Equispaced(2)];
        cfg.regularizers.clear();
        cfg.record_timing = true;
        cfg.reference = ReferenceMode::Isam;
        let tsv = run_study::<f64>(&cfg).unwrap().to_tsv();
        assert!(tsv.starts_with("# reference: isam\n"));
        assert!(tsv.lines().nth(1).unwrap().ends_with("\tseconds"));
    }

    #[test]
    fn reference_mode_parses() {
        assert_eq!("ISAM".parse::<ReferenceMode>().unwrap(), ReferenceMode::Isam);
        assert!("oracle".parse::<ReferenceMode>().is_err());
    }
}
