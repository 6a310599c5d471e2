//! 2-D dual-tree complex wavelet transform with periodic boundaries.
//!
//! Four separable orthonormal wavelet transforms (one per choice of tree along
//! rows and columns) are combined in sum/difference pairs into six complex
//! oriented subbands per level. With the input scaled by one half the result is
//! a Parseval tight frame, so the inverse is the transpose.

use std::f64::consts::FRAC_1_SQRT_2;

use ndarray::{Array2, Axis};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

const A: f64 = 0.088_388_347_648_319_624_589;
const B: f64 = 0.695_879_989_034_002_277_39;
const C: f64 = 0.011_226_792_152_545_247_007;

/// Near-symmetric first-stage lowpass filters of the two trees.
const FIRST_LO: [[f64; 10]; 2] = [
    [0.0, -A, A, B, B, A, -A, C, C, 0.0],
    [C, C, -A, A, B, B, A, -A, 0.0, 0.0],
];
const FIRST_HI: [[f64; 10]; 2] = [
    [0.0, -C, C, A, A, -B, B, -A, -A, 0.0],
    [0.0, 0.0, -A, -A, B, -B, A, A, C, -C],
];

/// Quarter-shift lowpass filter of tree one; tree two uses its time reverse.
const QSHIFT_LO: [f64; 10] = [
    0.035_163_837_544_084_047_283,
    0.0,
    -0.088_329_421_335_388_359_231,
    0.233_890_319_587_181_413_52,
    0.760_272_368_036_887_946_91,
    0.587_518_299_189_789_649_24,
    0.0,
    -0.114_301_840_649_459_651_33,
    0.0,
    0.0,
];

/// Analysis lowpass/highpass pair.
#[derive(Debug, Clone)]
struct FilterPair<T> {
    lo: Vec<T>,
    hi: Vec<T>,
}

/// Filters for both trees at the first and at deeper levels.
#[derive(Debug, Clone)]
struct FilterBank<T> {
    first: [FilterPair<T>; 2],
    deeper: [FilterPair<T>; 2],
}

impl<T: Real> FilterBank<T> {
    fn new() -> Self {
        let cast = |v: &[f64]| v.iter().map(|&x| T::lit(x)).collect::<Vec<T>>();
        let len = QSHIFT_LO.len();
        let lo_a: Vec<f64> = QSHIFT_LO.to_vec();
        let lo_b: Vec<f64> = QSHIFT_LO.iter().rev().copied().collect();
        let alt = |n: usize| if n % 2 == 0 { 1.0 } else { -1.0 };
        let hi_a: Vec<f64> = (0..len).map(|n| alt(n) * lo_a[len - 1 - n]).collect();
        let hi_b: Vec<f64> = (0..len).map(|n| -alt(n) * lo_b[len - 1 - n]).collect();
        Self {
            first: [
                FilterPair {
                    lo: cast(&FIRST_LO[0]),
                    hi: cast(&FIRST_HI[0]),
                },
                FilterPair {
                    lo: cast(&FIRST_LO[1]),
                    hi: cast(&FIRST_HI[1]),
                },
            ],
            deeper: [
                FilterPair {
                    lo: cast(&lo_a),
                    hi: cast(&hi_a),
                },
                FilterPair {
                    lo: cast(&lo_b),
                    hi: cast(&hi_b),
                },
            ],
        }
    }

    fn level(&self, level: usize) -> &[FilterPair<T>; 2] {
        if level == 0 {
            &self.first
        } else {
            &self.deeper
        }
    }
}

/// One complex oriented subband, stored as the two real-tree components.
///
/// For a real input image, the complex coefficient is `real + j imag`; for complex
/// images each component is itself complex and the coefficient magnitude is the
/// joint norm of both.
#[derive(Debug, Clone, PartialEq)]
pub struct Subband<T> {
    pub real: Array2<Complex<T>>,
    pub imag: Array2<Complex<T>>,
}

impl<T: Real> Subband<T> {
    fn zeros(shape: (usize, usize)) -> Self {
        Self {
            real: Array2::zeros(shape),
            imag: Array2::zeros(shape),
        }
    }

    pub fn dim(&self) -> (usize, usize) {
        self.real.dim()
    }

    /// Joint magnitude `sqrt(|real|^2 + |imag|^2)` per coefficient.
    pub fn magnitude(&self) -> Array2<T> {
        let mut m = self.real.mapv(|z| z.norm_sqr());
        m.zip_mut_with(&self.imag, |a, b| *a = (*a + b.norm_sqr()).sqrt());
        m
    }

    /// Complex coefficients `real + j imag` (meaningful for real input images).
    pub fn to_complex(&self) -> Array2<Complex<T>> {
        let mut out = self.real.mapv(|z| Complex::new(z.re, T::zero()));
        out.zip_mut_with(&self.imag, |a, b| a.im = b.re);
        out
    }

    fn shrink(&mut self, tau: T) {
        let mag = self.magnitude();
        for ((r, i), &m) in self.real.iter_mut().zip(self.imag.iter_mut()).zip(&mag) {
            let gain = if m > tau { T::one() - tau / m } else { T::zero() };
            *r = *r * gain;
            *i = *i * gain;
        }
    }
}

/// Coefficients of a multi-level transform: six subbands per level (finest level
/// first) and the lowpass residue of the four trees.
#[derive(Debug, Clone, PartialEq)]
pub struct DtcwtPyramid<T> {
    shape: (usize, usize),
    pub levels: Vec<Vec<Subband<T>>>,
    pub lowpass: Vec<Array2<Complex<T>>>,
}

pub const SUBBANDS_PER_LEVEL: usize = 6;
const TREES: [(usize, usize); 4] = [(0, 0), (0, 1), (1, 0), (1, 1)];

impl<T: Real> DtcwtPyramid<T> {
    /// Shape of the image the pyramid was computed from.
    pub fn image_shape(&self) -> (usize, usize) {
        self.shape
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn zeros(shape: (usize, usize), levels: usize) -> Result<Self> {
        check_levels(shape, levels)?;
        let lows = (shape.0 >> levels, shape.1 >> levels);
        Ok(Self {
            shape,
            levels: (1..=levels)
                .map(|j| vec![Subband::zeros((shape.0 >> j, shape.1 >> j)); SUBBANDS_PER_LEVEL])
                .collect(),
            lowpass: vec![Array2::zeros(lows); TREES.len()],
        })
    }

    /// Squared l2 norm of every coefficient.
    pub fn energy(&self) -> T {
        let sq = |a: &Array2<Complex<T>>| a.iter().fold(T::zero(), |s, z| s + z.norm_sqr());
        let details = self
            .levels
            .iter()
            .flatten()
            .fold(T::zero(), |s, b| s + sq(&b.real) + sq(&b.imag));
        self.lowpass.iter().fold(details, |s, a| s + sq(a))
    }

    /// Sum of joint magnitudes over all detail subbands.
    pub fn detail_l1(&self) -> T {
        self.levels
            .iter()
            .flatten()
            .fold(T::zero(), |s, b| s + b.magnitude().sum())
    }

    /// Soft-thresholds every detail coefficient; the lowpass residue is left intact.
    pub fn shrink_details(&mut self, tau: T) {
        for band in self.levels.iter_mut().flatten() {
            band.shrink(tau);
        }
    }

    fn validate(&self) -> Result<()> {
        let levels = self.levels.len();
        check_levels(self.shape, levels).map_err(|e| Error::InvalidPyramid(e.to_string()))?;
        for (j, bands) in self.levels.iter().enumerate() {
            let expect = (self.shape.0 >> (j + 1), self.shape.1 >> (j + 1));
            if bands.len() != SUBBANDS_PER_LEVEL {
                return Err(Error::InvalidPyramid(format!(
                    "level {j} has {} subbands, expected {SUBBANDS_PER_LEVEL}",
                    bands.len()
                )));
            }
            if bands
                .iter()
                .any(|b| b.real.dim() != expect || b.imag.dim() != expect)
            {
                return Err(Error::InvalidPyramid(format!(
                    "level {j} subbands must be {expect:?}"
                )));
            }
        }
        let low = (self.shape.0 >> levels, self.shape.1 >> levels);
        if self.lowpass.len() != TREES.len() || self.lowpass.iter().any(|a| a.dim() != low) {
            return Err(Error::InvalidPyramid(format!(
                "expected {} lowpass arrays of shape {low:?}",
                TREES.len()
            )));
        }
        Ok(())
    }
}

/// Largest admissible level count for an image shape.
pub fn max_levels(shape: (usize, usize)) -> usize {
    let min = shape.0.min(shape.1).max(1);
    (min.ilog2() as usize).saturating_sub(1)
}

fn check_levels(shape: (usize, usize), levels: usize) -> Result<()> {
    if levels == 0 {
        return Err(Error::InvalidParameter(
            "wavelet level count must be at least 1".into(),
        ));
    }
    let factor = 1usize.checked_shl(levels as u32).unwrap_or(0);
    if factor == 0 || shape.0 % factor != 0 || shape.1 % factor != 0 || shape.0 == 0 || shape.1 == 0
    {
        return Err(Error::NotDivisible {
            rows: shape.0,
            cols: shape.1,
            levels,
        });
    }
    if levels > max_levels(shape) {
        return Err(Error::InvalidParameter(format!(
            "{levels} wavelet levels exceed the maximum {} for a {}x{} image",
            max_levels(shape),
            shape.0,
            shape.1
        )));
    }
    Ok(())
}

/// Periodic analysis along one axis: `lo[n] = sum_k h[k] x[2n - k + len/2]`.
fn analyze_axis<T: Real>(
    x: &Array2<Complex<T>>,
    pair: &FilterPair<T>,
    axis: Axis,
) -> (Array2<Complex<T>>, Array2<Complex<T>>) {
    let n = x.len_of(axis);
    let mut shape = x.raw_dim();
    shape[axis.index()] = n / 2;
    let mut lo = Array2::zeros(shape);
    let mut hi = Array2::zeros(shape);
    let taps = pair.lo.len();
    let shift = taps / 2;
    // ext[j] = x[(j - taps) mod n], so tap k of output m reads ext[2m + shift + taps - k]
    let mut ext = vec![Complex::default(); n + taps + shift];
    for ((src, mut lo_lane), mut hi_lane) in x
        .lanes(axis)
        .into_iter()
        .zip(lo.lanes_mut(axis))
        .zip(hi.lanes_mut(axis))
    {
        for (j, e) in ext.iter_mut().enumerate() {
            *e = src[(j + n - taps % n) % n];
        }
        for (m, (l, h)) in lo_lane.iter_mut().zip(hi_lane.iter_mut()).enumerate() {
            let window = &ext[2 * m + shift + 1..2 * m + shift + taps + 1];
            let mut acc_lo = Complex::default();
            let mut acc_hi = Complex::default();
            for ((&v, &fl), &fh) in window.iter().rev().zip(&pair.lo).zip(&pair.hi) {
                acc_lo = acc_lo + v * fl;
                acc_hi = acc_hi + v * fh;
            }
            *l = acc_lo;
            *h = acc_hi;
        }
    }
    (lo, hi)
}

/// Transpose of [`analyze_axis`].
fn synthesize_axis<T: Real>(
    lo: &Array2<Complex<T>>,
    hi: &Array2<Complex<T>>,
    pair: &FilterPair<T>,
    axis: Axis,
) -> Array2<Complex<T>> {
    let half = lo.len_of(axis);
    let n = 2 * half;
    let mut shape = lo.raw_dim();
    shape[axis.index()] = n;
    let mut out = Array2::zeros(shape);
    let taps = pair.lo.len();
    let shift = taps / 2;
    let mut ext = vec![Complex::default(); n + taps + shift];
    for ((lo_lane, hi_lane), mut dst) in lo
        .lanes(axis)
        .into_iter()
        .zip(hi.lanes(axis))
        .zip(out.lanes_mut(axis))
    {
        ext.fill(Complex::default());
        for (m, (&l, &h)) in lo_lane.iter().zip(hi_lane.iter()).enumerate() {
            let window = &mut ext[2 * m + shift + 1..2 * m + shift + taps + 1];
            for ((e, &fl), &fh) in window.iter_mut().rev().zip(&pair.lo).zip(&pair.hi) {
                *e = *e + l * fl + h * fh;
            }
        }
        dst.fill(Complex::default());
        for (j, &e) in ext.iter().enumerate() {
            let d = &mut dst[(j + n - taps % n) % n];
            *d = *d + e;
        }
    }
    out
}

/// One 2-D analysis stage: filters `col` along axis 0 and `row` along axis 1.
/// Returns the lowpass band and the three detail bands (LH, HL, HH).
fn analyze_2d<T: Real>(
    x: &Array2<Complex<T>>,
    col: &FilterPair<T>,
    row: &FilterPair<T>,
) -> (Array2<Complex<T>>, [Array2<Complex<T>>; 3]) {
    let (l, h) = analyze_axis(x, col, Axis(0));
    let (ll, lh) = analyze_axis(&l, row, Axis(1));
    let (hl, hh) = analyze_axis(&h, row, Axis(1));
    (ll, [lh, hl, hh])
}

fn synthesize_2d<T: Real>(
    ll: &Array2<Complex<T>>,
    details: &[Array2<Complex<T>>; 3],
    col: &FilterPair<T>,
    row: &FilterPair<T>,
) -> Array2<Complex<T>> {
    let l = synthesize_axis(ll, &details[0], row, Axis(1));
    let h = synthesize_axis(&details[1], &details[2], row, Axis(1));
    synthesize_axis(&l, &h, col, Axis(0))
}

/// Orthogonal sum/difference butterfly; its own inverse.
fn butterfly_pair<T: Real>(a: &mut Array2<Complex<T>>, b: &mut Array2<Complex<T>>) {
    let s = T::lit(FRAC_1_SQRT_2);
    for (p, q) in a.iter_mut().zip(b.iter_mut()) {
        let (u, v) = (*p, *q);
        *p = (u + v) * s;
        *q = (u - v) * s;
    }
}

/// Forward transform with `levels` decomposition stages.
pub fn dtcwt_forward<T: Real>(x: &Array2<Complex<T>>, levels: usize) -> Result<DtcwtPyramid<T>> {
    let shape = x.dim();
    check_levels(shape, levels)?;
    let bank = FilterBank::<T>::new();
    let half = T::lit(0.5);
    let scaled = x.mapv(|z| z * half);

    // per tree: detail bands per level
    let mut tree_details: Vec<Vec<[Array2<Complex<T>>; 3]>> = Vec::with_capacity(4);
    let mut lowpass = Vec::with_capacity(4);
    for &(tc, tr) in &TREES {
        let mut lo = scaled.clone();
        let mut details = Vec::with_capacity(levels);
        for j in 0..levels {
            let f = bank.level(j);
            let (ll, d) = analyze_2d(&lo, &f[tc], &f[tr]);
            details.push(d);
            lo = ll;
        }
        tree_details.push(details);
        lowpass.push(lo);
    }

    let mut pyramid_levels = Vec::with_capacity(levels);
    for j in 0..levels {
        let mut bands = Vec::with_capacity(SUBBANDS_PER_LEVEL);
        for o in 0..3 {
            let mut aa = tree_details[0][j][o].clone();
            let mut ab = tree_details[1][j][o].clone();
            let mut ba = tree_details[2][j][o].clone();
            let mut bb = tree_details[3][j][o].clone();
            butterfly_pair(&mut aa, &mut bb);
            butterfly_pair(&mut ab, &mut ba);
            bands.push(Subband { real: aa, imag: bb });
            bands.push(Subband { real: ab, imag: ba });
        }
        pyramid_levels.push(bands);
    }

    Ok(DtcwtPyramid {
        shape,
        levels: pyramid_levels,
        lowpass,
    })
}

/// Inverse (transpose) transform.
pub fn dtcwt_inverse<T: Real>(pyramid: &DtcwtPyramid<T>) -> Result<Array2<Complex<T>>> {
    pyramid.validate()?;
    let bank = FilterBank::<T>::new();
    let levels = pyramid.n_levels();

    // undo the butterflies into per-tree detail bands
    let mut tree_details: Vec<Vec<[Array2<Complex<T>>; 3]>> =
        vec![Vec::with_capacity(levels); TREES.len()];
    for bands in &pyramid.levels {
        let mut per_tree: [Vec<Array2<Complex<T>>>; 4] = Default::default();
        for o in 0..3 {
            let mut aa = bands[2 * o].real.clone();
            let mut bb = bands[2 * o].imag.clone();
            let mut ab = bands[2 * o + 1].real.clone();
            let mut ba = bands[2 * o + 1].imag.clone();
            butterfly_pair(&mut aa, &mut bb);
            butterfly_pair(&mut ab, &mut ba);
            per_tree[0].push(aa);
            per_tree[1].push(ab);
            per_tree[2].push(ba);
            per_tree[3].push(bb);
        }
        for (t, v) in per_tree.into_iter().enumerate() {
            let arr: [Array2<Complex<T>>; 3] = v.try_into().expect("three orientations");
            tree_details[t].push(arr);
        }
    }

    let mut out = Array2::<Complex<T>>::zeros(pyramid.shape);
    for (t, &(tc, tr)) in TREES.iter().enumerate() {
        let mut lo = pyramid.lowpass[t].clone();
        for j in (0..levels).rev() {
            let f = bank.level(j);
            lo = synthesize_2d(&lo, &tree_details[t][j], &f[tc], &f[tr]);
        }
        out.zip_mut_with(&lo, |a, &b| *a = *a + b);
    }
    let half = T::lit(0.5);
    out.mapv_inplace(|z| z * half);
    Ok(out)
}

/// Threshold-in-coefficients shrinkage: inverse of the soft-thresholded detail bands.
pub fn prox_dtcwt<T: Real>(
    v: &Array2<Complex<T>>,
    tau: T,
    levels: usize,
) -> Result<Array2<Complex<T>>> {
    if !(tau >= T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "threshold must be nonnegative, got {tau}"
        )));
    }
    let mut pyr = dtcwt_forward(v, levels)?;
    pyr.shrink_details(tau);
    dtcwt_inverse(&pyr)
}
