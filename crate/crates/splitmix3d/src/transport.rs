//! Passive transport under the random splitting: band-limited Fourier test
//! fields, correlation decay of advected observables, negative-Sobolev
//! mixing norms with a spectral mollifier, magnetic-field ensemble growth in
//! the frozen-flux limit, and uniform-coverage checks for the one-point
//! chain.

use crate::fields::{SplitVectorField, TWO_PI};
use crate::rng::{stream_seed, uniform_torus};
use crate::splitting::{flow_split, splitting_step, SplitSchedule, TauSource, TorusPoint};
use crate::stats::{
    chi_square_uniform, fit_rate, fit_rate_logged, log_sum_exp, ols, FitError, RateEstimate,
};
use nalgebra::Vector3;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("Fourier fields are mean-zero; the zero wavevector is not allowed")]
    ZeroMode,
    #[error("wavevector {k:?} exceeds the declared cutoff {k_max}")]
    ModeTooHigh { k: [i32; 3], k_max: i32 },
    #[error("a real field needs conjugate-symmetric coefficients; violated at {k:?}")]
    NotConjugateSymmetric { k: [i32; 3] },
    #[error("a Fourier field needs at least one mode")]
    EmptyField,
    #[error("mode cutoff must be at least 1, got {0}")]
    BadCutoff(i32),
    #[error("quadrature grid needs at least 32 points per axis, got {0}")]
    GridTooSmall(usize),
    #[error("field cutoff {k_max} exceeds the anti-aliasing bound N/4 = {bound}")]
    AliasingRisk { k_max: i32, bound: usize },
    #[error("Sobolev order must lie in (0, 3], got {0}")]
    BadSobolevOrder(f64),
    #[error("mollifier width must be positive and finite, got {0}")]
    BadEpsilon(f64),
    #[error("target smoothness {s_target} must exceed base smoothness {s}")]
    BadTarget { s: f64, s_target: f64 },
    #[error(
        "resolution exhausted: fraction {fraction:.4} of the L2 mass sits above |k|_inf = N/3 \
         (H^-s = {h_neg:.6e}, L2 = {l2:.6e})"
    )]
    AliasWarning { h_neg: f64, l2: f64, fraction: f64 },
    #[error("need at least {min} {what}, got {got}")]
    NotEnough { what: &'static str, min: usize, got: usize },
    #[error("fit window [{0}, {1}] must start at cycle 1 or later and span at least 10 cycles")]
    BadWindow(usize, usize),
    #[error("initial magnetic field must be a unit vector, |B0| = {0}")]
    NotUnitField(f64),
    #[error("mean switching time must be positive and finite, got {0}")]
    InvalidMean(f64),
    #[error(transparent)]
    Fit(#[from] FitError),
}

/// A band-limited mean-zero function on the torus, stored as Fourier
/// coefficients f(x) = Σ c_k e^{i k·x} over wavevectors with |k|_∞ ≤ k_max.
#[derive(Debug, Clone)]
pub struct FourierField {
    k_max: i32,
    real: bool,
    coeffs: BTreeMap<[i32; 3], Complex64>,
}

impl FourierField {
    pub fn new(
        k_max: i32,
        entries: impl IntoIterator<Item = ([i32; 3], Complex64)>,
        real: bool,
    ) -> Result<Self, TransportError> {
        if k_max < 1 {
            return Err(TransportError::BadCutoff(k_max));
        }
        let mut coeffs = BTreeMap::new();
        for (k, c) in entries {
            if k == [0, 0, 0] {
                return Err(TransportError::ZeroMode);
            }
            if k.iter().any(|&ki| ki.abs() > k_max) {
                return Err(TransportError::ModeTooHigh { k, k_max });
            }
            coeffs.insert(k, c);
        }
        if coeffs.is_empty() {
            return Err(TransportError::EmptyField);
        }
        if real {
            for (&k, &c) in &coeffs {
                let neg = [-k[0], -k[1], -k[2]];
                let mate = coeffs
                    .get(&neg)
                    .ok_or(TransportError::NotConjugateSymmetric { k })?;
                if (mate - c.conj()).norm() > 1e-12 * c.norm().max(1.0) {
                    return Err(TransportError::NotConjugateSymmetric { k });
                }
            }
        }
        Ok(Self { k_max, real, coeffs })
    }

    /// The single complex exponential e_k(x) = e^{i k·x}.
    pub fn mode(k: [i32; 3]) -> Result<Self, TransportError> {
        let k_max = k.iter().map(|ki| ki.abs()).max().unwrap().max(1);
        Self::new(k_max, [(k, Complex64::new(1.0, 0.0))], false)
    }

    /// The unit-norm real mode √2·cos(k·x).
    pub fn real_cosine(k: [i32; 3]) -> Result<Self, TransportError> {
        let k_max = k.iter().map(|ki| ki.abs()).max().unwrap().max(1);
        let half = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self::new(k_max, [(k, half), ([-k[0], -k[1], -k[2]], half)], true)
    }

    /// A reproducible random real field with independent Gaussian
    /// coefficients on all modes up to the cutoff, normalized to unit L².
    pub fn random(k_max: i32, seed: u64) -> Result<Self, TransportError> {
        if k_max < 1 {
            return Err(TransportError::BadCutoff(k_max));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut coeffs = BTreeMap::new();
        for kx in -k_max..=k_max {
            for ky in -k_max..=k_max {
                for kz in -k_max..=k_max {
                    let k = [kx, ky, kz];
                    // One draw per conjugate pair, anchored on the
                    // lexicographically positive representative.
                    if k == [0, 0, 0] || k < [-kx, -ky, -kz] {
                        continue;
                    }
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    let c = Complex64::new(re, im);
                    coeffs.insert(k, c);
                    coeffs.insert([-kx, -ky, -kz], c.conj());
                }
            }
        }
        let norm = coeffs.values().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        for c in coeffs.values_mut() {
            *c /= norm;
        }
        Self::new(k_max, coeffs, true)
    }

    pub fn k_max(&self) -> i32 {
        self.k_max
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn coeffs(&self) -> &BTreeMap<[i32; 3], Complex64> {
        &self.coeffs
    }

    pub fn eval(&self, x: &[f64; 3]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (&k, &c) in &self.coeffs {
            let phase = k[0] as f64 * x[0] + k[1] as f64 * x[1] + k[2] as f64 * x[2];
            acc += c * Complex64::new(phase.cos(), phase.sin());
        }
        acc
    }

    /// Parseval L² norm under normalized Lebesgue measure.
    pub fn l2_norm(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Homogeneous Sobolev norm with weight |k|^{2s}; pass a negative s for
    /// the mixing norms.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        self.coeffs
            .iter()
            .map(|(k, c)| {
                let k2 = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
                k2.powf(s) * c.norm_sqr()
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// Fractional-heat smoothing: damps every coefficient by e^{−ε²|k|^{2s}}.
pub fn mollify(f: &FourierField, s: f64, eps: f64) -> Result<FourierField, TransportError> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(TransportError::BadSobolevOrder(s));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(TransportError::BadEpsilon(eps));
    }
    let coeffs = f.coeffs.iter().map(|(&k, &c)| {
        let k2 = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
        (k, c * (-eps * eps * k2.powf(s)).exp())
    });
    FourierField::new(f.k_max, coeffs, f.real)
}

/// Observed constants of the three mollifier norm inequalities, each the
/// ratio of the left side to its bound with constant one.
#[derive(Debug, Clone, Serialize)]
pub struct MollifyCheck {
    /// ‖f_ε‖_{L²} / ‖f‖_{L²}; never exceeds one.
    pub contraction: f64,
    /// ‖f_ε − f‖_{L²} / (ε ‖f‖_{H^s}).
    pub approx_constant: f64,
    /// ‖f_ε‖_{H^{s_target}} / (ε^{−(s_target−s)/s} ‖f‖_{H^s}).
    pub smooth_constant: f64,
}

pub fn mollify_inequalities(
    f: &FourierField,
    s: f64,
    s_target: f64,
    eps: f64,
) -> Result<MollifyCheck, TransportError> {
    if !(s_target > s) {
        return Err(TransportError::BadTarget { s, s_target });
    }
    let smooth = mollify(f, s, eps)?;
    let hs = f.sobolev_norm(s);
    let diff_l2 = f
        .coeffs
        .iter()
        .map(|(k, c)| {
            let k2 = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
            let damp = 1.0 - (-eps * eps * k2.powf(s)).exp();
            damp * damp * c.norm_sqr()
        })
        .sum::<f64>()
        .sqrt();
    Ok(MollifyCheck {
        contraction: smooth.l2_norm() / f.l2_norm(),
        approx_constant: diff_l2 / (eps * hs),
        smooth_constant: smooth.sobolev_norm(s_target) / (eps.powf(-(s_target - s) / s) * hs),
    })
}

const EVOLVE_CHUNK: usize = 4096;

fn lattice(n: usize) -> Vec<TorusPoint> {
    let step = TWO_PI / n as f64;
    let mut pts = Vec::with_capacity(n * n * n);
    for ix in 0..n {
        for iy in 0..n {
            for iz in 0..n {
                pts.push(TorusPoint::new([
                    ix as f64 * step,
                    iy as f64 * step,
                    iz as f64 * step,
                ]));
            }
        }
    }
    pts
}

fn evolve(field: &SplitVectorField, pts: &mut [TorusPoint], tau: [f64; 3]) {
    pts.par_chunks_mut(EVOLVE_CHUNK).for_each(|chunk| {
        for p in chunk {
            *p = splitting_step(field, *p, tau, false).end;
        }
    });
}

/// Deterministic chunked mean of f(x)·g(Φ(x)) over the lattice.
fn mean_product(fvals: &[Complex64], pts: &[TorusPoint], g: &FourierField) -> Complex64 {
    let partials: Vec<Complex64> = fvals
        .par_chunks(EVOLVE_CHUNK)
        .zip(pts.par_chunks(EVOLVE_CHUNK))
        .map(|(fc, pc)| {
            fc.iter()
                .zip(pc)
                .map(|(f, p)| f * g.eval(&p.0))
                .sum::<Complex64>()
        })
        .collect();
    partials.iter().sum::<Complex64>() / fvals.len() as f64
}

fn check_quadrature(n_grid: usize, fields: &[&FourierField]) -> Result<(), TransportError> {
    if n_grid < 32 {
        return Err(TransportError::GridTooSmall(n_grid));
    }
    for f in fields {
        if f.k_max() as usize * 4 > n_grid {
            return Err(TransportError::AliasingRisk { k_max: f.k_max(), bound: n_grid / 4 });
        }
    }
    Ok(())
}

/// |∫ f·(g∘Φ^m) dx| for every horizon m = 0..=cycles and every pair, sharing
/// one grid evolution per schedule. Entry [pair][m].
pub fn correlation_series<S: TauSource>(
    field: &SplitVectorField,
    schedule: &S,
    cycles: usize,
    pairs: &[(FourierField, FourierField)],
    n_grid: usize,
) -> Result<Vec<Vec<f64>>, TransportError> {
    if pairs.is_empty() {
        return Err(TransportError::NotEnough { what: "mode pairs", min: 1, got: 0 });
    }
    let all: Vec<&FourierField> = pairs.iter().flat_map(|(f, g)| [f, g]).collect();
    check_quadrature(n_grid, &all)?;
    let mut pts = lattice(n_grid);
    let fvals: Vec<Vec<Complex64>> = pairs
        .iter()
        .map(|(f, _)| {
            pts.par_chunks(EVOLVE_CHUNK)
                .flat_map_iter(|chunk| chunk.iter().map(|p| f.eval(&p.0)))
                .collect()
        })
        .collect();
    let mut out = vec![Vec::with_capacity(cycles + 1); pairs.len()];
    for (pi, (_, g)) in pairs.iter().enumerate() {
        out[pi].push(mean_product(&fvals[pi], &pts, g).norm());
    }
    for c in 1..=cycles as u64 {
        evolve(field, &mut pts, schedule.cycle(c));
        for (pi, (_, g)) in pairs.iter().enumerate() {
            out[pi].push(mean_product(&fvals[pi], &pts, g).norm());
        }
    }
    Ok(out)
}

/// |∫ f·(g∘Φ^m) dx| at the single horizon m = cycles.
pub fn correlation<S: TauSource>(
    field: &SplitVectorField,
    schedule: &S,
    cycles: usize,
    f: &FourierField,
    g: &FourierField,
    n_grid: usize,
) -> Result<f64, TransportError> {
    let series = correlation_series(
        field,
        schedule,
        cycles,
        std::slice::from_ref(&(f.clone(), g.clone())),
        n_grid,
    )?;
    Ok(*series[0].last().unwrap())
}

/// Per-seed and pooled exponential decay rates of log correlation.
#[derive(Debug, Clone, Serialize)]
pub struct MixingReport {
    pub seeds: Vec<u64>,
    /// Geometric mean across pairs of |Cor_m|, m = 0..=window end, one curve
    /// per seed.
    pub curves: Vec<Vec<f64>>,
    /// One fit per seed on the geometric mean across pairs.
    pub per_seed: Vec<RateEstimate>,
    /// Individual fits, indexed [seed][pair].
    pub per_pair: Vec<Vec<RateEstimate>>,
    /// Fit on the all-seed, all-pair geometric mean.
    pub pooled: RateEstimate,
    pub window: (usize, usize),
    pub n_grid: usize,
    /// Quadrature noise scale N^{−3/2}; correlations at or below this are
    /// dominated by lattice error.
    pub noise_floor: f64,
}

/// Fits quenched correlation decay rates: every seed gets its own curve and
/// its own slope, so the result certifies per-realization decay rather than
/// decay of the schedule average.
pub fn mixing_rate(
    field: &SplitVectorField,
    h: f64,
    pairs: &[(FourierField, FourierField)],
    seeds: &[u64],
    n_grid: usize,
    window: (usize, usize),
) -> Result<MixingReport, TransportError> {
    if pairs.len() < 4 {
        return Err(TransportError::NotEnough { what: "mode pairs", min: 4, got: pairs.len() });
    }
    if seeds.len() < 4 {
        return Err(TransportError::NotEnough { what: "seeds", min: 4, got: seeds.len() });
    }
    let (w0, w1) = window;
    if w0 < 1 || w1 < w0 + 9 {
        return Err(TransportError::BadWindow(w0, w1));
    }
    let mut per_seed = Vec::with_capacity(seeds.len());
    let mut per_pair = Vec::with_capacity(seeds.len());
    let mut curves = Vec::with_capacity(seeds.len());
    let mut grand: Vec<f64> = vec![0.0; w1 - w0 + 1];
    for &seed in seeds {
        let schedule =
            SplitSchedule::new(seed, h).map_err(|_| TransportError::InvalidMean(h))?;
        let series = correlation_series(field, &schedule, w1, pairs, n_grid)?;
        let mut fits = Vec::with_capacity(pairs.len());
        let mut seed_log: Vec<f64> = vec![0.0; w1 - w0 + 1];
        for curve in &series {
            let pts: Vec<(f64, f64)> =
                (w0..=w1).map(|m| (m as f64, curve[m])).collect();
            fits.push(fit_rate(&pts, 0.0)?);
            for (i, m) in (w0..=w1).enumerate() {
                seed_log[i] += curve[m].ln();
            }
        }
        let geo: Vec<f64> = (0..=w1)
            .map(|m| {
                let s: f64 = series.iter().map(|c| c[m].ln()).sum();
                (s / pairs.len() as f64).exp()
            })
            .collect();
        curves.push(geo);
        let seed_pts: Vec<(f64, f64)> = seed_log
            .iter()
            .enumerate()
            .map(|(i, &l)| ((w0 + i) as f64, l / pairs.len() as f64))
            .collect();
        per_seed.push(fit_rate_logged(&seed_pts, 0.0)?);
        for (g, s) in grand.iter_mut().zip(&seed_log) {
            *g += s / pairs.len() as f64;
        }
        per_pair.push(fits);
    }
    let pooled_pts: Vec<(f64, f64)> = grand
        .iter()
        .enumerate()
        .map(|(i, &l)| ((w0 + i) as f64, l / seeds.len() as f64))
        .collect();
    let pooled = fit_rate_logged(&pooled_pts, 0.0)?;
    Ok(MixingReport {
        seeds: seeds.to_vec(),
        curves,
        per_seed,
        per_pair,
        pooled,
        window,
        n_grid,
        noise_floor: (n_grid as f64).powf(-1.5),
    })
}

/// Three-dimensional in-place forward FFT, axis by axis.
fn fft3(buf: &mut [Complex64], n: usize) {
    let fft = FftPlanner::new().plan_fft_forward(n);
    for row in buf.chunks_exact_mut(n) {
        fft.process(row);
    }
    let mut scratch = vec![Complex64::new(0.0, 0.0); n];
    for ix in 0..n {
        for iz in 0..n {
            for iy in 0..n {
                scratch[iy] = buf[(ix * n + iy) * n + iz];
            }
            fft.process(&mut scratch);
            for iy in 0..n {
                buf[(ix * n + iy) * n + iz] = scratch[iy];
            }
        }
    }
    for iy in 0..n {
        for iz in 0..n {
            for ix in 0..n {
                scratch[ix] = buf[(ix * n + iy) * n + iz];
            }
            fft.process(&mut scratch);
            for ix in 0..n {
                buf[(ix * n + iy) * n + iz] = scratch[ix];
            }
        }
    }
}

/// (H^{−s} norm, L² norm, aliased mass fraction) of grid samples.
fn spectrum_norms(values: &[Complex64], n: usize, s: f64) -> (f64, f64, f64) {
    let mut buf = values.to_vec();
    fft3(&mut buf, n);
    let scale = 1.0 / (n as f64).powi(3);
    let signed = |idx: usize| -> i64 {
        if idx <= n / 2 {
            idx as i64
        } else {
            idx as i64 - n as i64
        }
    };
    let mut l2_sq = 0.0;
    let mut hneg_sq = 0.0;
    let mut alias_sq = 0.0;
    for ix in 0..n {
        let kx = signed(ix);
        for iy in 0..n {
            let ky = signed(iy);
            for iz in 0..n {
                let kz = signed(iz);
                let c2 = (buf[(ix * n + iy) * n + iz] * scale).norm_sqr();
                l2_sq += c2;
                if (kx, ky, kz) != (0, 0, 0) {
                    let k2 = (kx * kx + ky * ky + kz * kz) as f64;
                    hneg_sq += k2.powf(-s) * c2;
                }
                let sup = kx.abs().max(ky.abs()).max(kz.abs());
                if 3 * sup > n as i64 {
                    alias_sq += c2;
                }
            }
        }
    }
    (hneg_sq.sqrt(), l2_sq.sqrt(), if l2_sq > 0.0 { alias_sq / l2_sq } else { 0.0 })
}

/// Grid samples of f₀ ∘ (Φ^m)^{−1}: each lattice point is pulled back
/// through the closed-form inverse sub-flows in reverse order.
fn pullback_values<S: TauSource>(
    field: &SplitVectorField,
    schedule: &S,
    m: usize,
    f0: &FourierField,
    n: usize,
) -> Vec<Complex64> {
    let mut pts = lattice(n);
    for j in (1..=m as u64).rev() {
        let tau = schedule.cycle(j);
        pts.par_chunks_mut(EVOLVE_CHUNK).for_each(|chunk| {
            for p in chunk {
                let a = flow_split(field, 3, -tau[2], *p).unwrap();
                let b = flow_split(field, 2, -tau[1], a).unwrap();
                *p = flow_split(field, 1, -tau[0], b).unwrap();
            }
        });
    }
    pts.par_chunks(EVOLVE_CHUNK)
        .flat_map_iter(|chunk| chunk.iter().map(|p| f0.eval(&p.0)))
        .collect()
}

/// Norms of the advected scalar at one horizon.
#[derive(Debug, Clone, Serialize)]
pub struct AdvectedNorm {
    pub h_neg: f64,
    pub l2: f64,
    pub alias_fraction: f64,
}

/// H^{−s} and L² norms of f₀ ∘ (Φ^m)^{−1} at m = cycles. Fails with
/// `AliasWarning` (carrying the computed norms) once more than 1% of the L²
/// mass has cascaded above |k|_∞ = N/3.
pub fn advected_norm<S: TauSource>(
    field: &SplitVectorField,
    schedule: &S,
    cycles: usize,
    f0: &FourierField,
    s: f64,
    n_grid: usize,
) -> Result<AdvectedNorm, TransportError> {
    if !(s > 0.0 && s <= 3.0) {
        return Err(TransportError::BadSobolevOrder(s));
    }
    check_quadrature(n_grid, &[f0])?;
    let values = pullback_values(field, schedule, cycles, f0, n_grid);
    let (h_neg, l2, alias_fraction) = spectrum_norms(&values, n_grid, s);
    if alias_fraction > 0.01 {
        return Err(TransportError::AliasWarning { h_neg, l2, fraction: alias_fraction });
    }
    Ok(AdvectedNorm { h_neg, l2, alias_fraction })
}

/// Advected-norm trajectory with per-cycle alias bookkeeping.
#[derive(Debug, Clone, Serialize)]
pub struct NormSeries {
    pub steps: Vec<usize>,
    pub h_neg: Vec<f64>,
    pub l2: Vec<f64>,
    pub alias_fraction: Vec<f64>,
    /// First cycle whose aliased mass fraction exceeded 1%, if any.
    pub first_alias: Option<usize>,
    pub s: f64,
    pub n_grid: usize,
}

/// Computes the advected norms at every horizon m = 0..=cycles. Each horizon
/// gets its own exact pullback pass, so no interpolation error accumulates.
pub fn advected_norm_series<S: TauSource>(
    field: &SplitVectorField,
    schedule: &S,
    cycles: usize,
    f0: &FourierField,
    s: f64,
    n_grid: usize,
) -> Result<NormSeries, TransportError> {
    if !(s > 0.0 && s <= 3.0) {
        return Err(TransportError::BadSobolevOrder(s));
    }
    check_quadrature(n_grid, &[f0])?;
    let mut out = NormSeries {
        steps: Vec::new(),
        h_neg: Vec::new(),
        l2: Vec::new(),
        alias_fraction: Vec::new(),
        first_alias: None,
        s,
        n_grid,
    };
    for m in 0..=cycles {
        let values = pullback_values(field, schedule, m, f0, n_grid);
        let (h_neg, l2, fraction) = spectrum_norms(&values, n_grid, s);
        out.steps.push(m);
        out.h_neg.push(h_neg);
        out.l2.push(l2);
        out.alias_fraction.push(fraction);
        if out.first_alias.is_none() && fraction > 0.01 {
            out.first_alias = Some(m);
        }
    }
    Ok(out)
}

/// Smallest admissible dynamo ensemble.
pub const MIN_DYNAMO_ENSEMBLE: usize = 10_000;

/// A frozen-flux magnetic ensemble: one shared schedule carries every member
/// (x, B) with B evolving by the exact tangent map, log-accumulated.
#[derive(Debug, Clone)]
pub struct VectorFieldSample {
    pub cycle: usize,
    points: Vec<TorusPoint>,
    tangents: Vec<Vector3<f64>>,
    log_norms: Vec<f64>,
}

impl VectorFieldSample {
    pub fn new(ensemble: usize, b0: [f64; 3], seed: u64) -> Result<Self, TransportError> {
        if ensemble < MIN_DYNAMO_ENSEMBLE {
            return Err(TransportError::NotEnough {
                what: "ensemble members",
                min: MIN_DYNAMO_ENSEMBLE,
                got: ensemble,
            });
        }
        let norm = (b0[0] * b0[0] + b0[1] * b0[1] + b0[2] * b0[2]).sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(TransportError::NotUnitField(norm));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points = (0..ensemble)
            .map(|_| TorusPoint::new(uniform_torus(&mut rng)))
            .collect();
        Ok(Self {
            cycle: 0,
            points,
            tangents: vec![Vector3::new(b0[0], b0[1], b0[2]); ensemble],
            log_norms: vec![0.0; ensemble],
        })
    }

    pub fn ensemble(&self) -> usize {
        self.points.len()
    }

    /// Per-member accumulated ln |D_xΦ B₀|.
    pub fn log_norms(&self) -> &[f64] {
        &self.log_norms
    }

    /// ln ‖B‖_{L¹} estimated over the ensemble; exactly 0 before any cycle.
    pub fn log_l1(&self) -> f64 {
        log_sum_exp(&self.log_norms) - (self.ensemble() as f64).ln()
    }

    /// ln ‖B‖_{L²} estimated over the ensemble.
    pub fn log_l2(&self) -> f64 {
        let doubled: Vec<f64> = self.log_norms.iter().map(|l| 2.0 * l).collect();
        0.5 * (log_sum_exp(&doubled) - (self.ensemble() as f64).ln())
    }

    /// Advances every member through one shared cycle.
    pub fn advance(&mut self, field: &SplitVectorField, tau: [f64; 3]) {
        self.points
            .par_chunks_mut(EVOLVE_CHUNK)
            .zip(self.tangents.par_chunks_mut(EVOLVE_CHUNK))
            .zip(self.log_norms.par_chunks_mut(EVOLVE_CHUNK))
            .for_each(|((xs, bs), ls)| {
                for i in 0..xs.len() {
                    let step = splitting_step(field, xs[i], tau, true);
                    xs[i] = step.end;
                    let grown = step.jacobian.unwrap() * bs[i];
                    let norm = grown.norm();
                    ls[i] += norm.ln();
                    bs[i] = grown / norm;
                }
            });
        self.cycle += 1;
    }
}

/// Raw dynamo trajectory: member log-norms at each snapshot.
pub fn dynamo_series<S: TauSource>(
    field: &SplitVectorField,
    schedule: &S,
    b0: [f64; 3],
    cycles: usize,
    ensemble: usize,
    seed: u64,
    snap_every: usize,
) -> Result<(Vec<usize>, Vec<Vec<f64>>), TransportError> {
    let snap_every = snap_every.max(1);
    let mut sample = VectorFieldSample::new(ensemble, b0, seed)?;
    let mut steps = vec![0];
    let mut snaps = vec![sample.log_norms().to_vec()];
    for c in 1..=cycles {
        sample.advance(field, schedule.cycle(c as u64));
        if c % snap_every == 0 {
            steps.push(c);
            snaps.push(sample.log_norms().to_vec());
        }
    }
    Ok((steps, snaps))
}

/// Growth summary of the frozen-flux induction ensemble.
#[derive(Debug, Clone, Serialize)]
pub struct DynamoReport {
    pub steps: Vec<usize>,
    /// ln ‖B(3n)‖_{L¹} per snapshot.
    pub log_l1: Vec<f64>,
    /// ln ‖B(3n)‖_{L²} per snapshot.
    pub log_l2: Vec<f64>,
    /// Per-cycle fit of the L¹ curve.
    pub rate_l1: RateEstimate,
    /// Per-cycle fit of the L² curve.
    pub rate_l2: RateEstimate,
    /// Member-bootstrap standard error of the L¹ slope.
    pub slope_se: f64,
    /// One cycle spans three time units of the underlying velocity field.
    pub per_time_rate: f64,
    pub ensemble: usize,
    pub cycles: usize,
}

const DYNAMO_BOOTSTRAPS: usize = 100;

/// Monte Carlo growth of |D_xΦ^n B₀| over uniform x under one shared
/// schedule, with log-domain norm accumulation and a member-resampling
/// bootstrap for the slope error.
pub fn dynamo_growth(
    field: &SplitVectorField,
    h: f64,
    b0: [f64; 3],
    cycles: usize,
    ensemble: usize,
    seed: u64,
    snap_every: usize,
    burn_in: f64,
) -> Result<DynamoReport, TransportError> {
    let schedule = SplitSchedule::new(stream_seed(seed, 2), h)
        .map_err(|_| TransportError::InvalidMean(h))?;
    let (steps, snaps) =
        dynamo_series(field, &schedule, b0, cycles, ensemble, stream_seed(seed, 1), snap_every)?;
    let ln_e = (ensemble as f64).ln();
    let log_l1: Vec<f64> = snaps.iter().map(|row| log_sum_exp(row) - ln_e).collect();
    let log_l2: Vec<f64> = snaps
        .iter()
        .map(|row| {
            let doubled: Vec<f64> = row.iter().map(|l| 2.0 * l).collect();
            0.5 * (log_sum_exp(&doubled) - ln_e)
        })
        .collect();
    let l1_series: Vec<(f64, f64)> =
        steps.iter().zip(&log_l1).map(|(&s, &v)| (s as f64, v)).collect();
    let l2_series: Vec<(f64, f64)> =
        steps.iter().zip(&log_l2).map(|(&s, &v)| (s as f64, v)).collect();
    let rate_l1 = fit_rate_logged(&l1_series, burn_in)?;
    let rate_l2 = fit_rate_logged(&l2_series, burn_in)?;

    // Member bootstrap: resample ensemble members, rebuild the windowed L¹
    // curve, refit. Captures the heavy-tailed member weighting that residual
    // bootstrap on the curve would miss.
    let skip = (burn_in * l1_series.len() as f64).ceil() as usize;
    let window = &snaps[skip.min(snaps.len())..];
    let wsteps: Vec<f64> = steps[skip.min(steps.len())..].iter().map(|&s| s as f64).collect();
    let boot_seed = stream_seed(seed, 3);
    let slopes: Vec<f64> = (0..DYNAMO_BOOTSTRAPS)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(boot_seed, b as u64));
            let idx: Vec<usize> =
                (0..ensemble).map(|_| rand::Rng::gen_range(&mut rng, 0..ensemble)).collect();
            let mut scratch = vec![0.0; ensemble];
            let ys: Vec<f64> = window
                .iter()
                .map(|row| {
                    for (slot, &i) in scratch.iter_mut().zip(&idx) {
                        *slot = row[i];
                    }
                    log_sum_exp(&scratch) - ln_e
                })
                .collect();
            ols(&wsteps, &ys).0
        })
        .collect();
    let mean = slopes.iter().sum::<f64>() / slopes.len() as f64;
    let var = slopes.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>()
        / (slopes.len() - 1) as f64;
    Ok(DynamoReport {
        steps,
        log_l1,
        log_l2,
        per_time_rate: rate_l1.slope / 3.0,
        rate_l1,
        rate_l2,
        slope_se: var.sqrt(),
        ensemble,
        cycles,
    })
}

/// Smallest admissible trial count for the coverage diagnostics.
pub const MIN_ERGODICITY_TRIALS: usize = 10_000;

/// Coverage diagnostics of the one-point chain.
#[derive(Debug, Clone, Serialize)]
pub struct ErgodicityReport {
    pub trials: usize,
    pub cycles: usize,
    pub bins: usize,
    /// Sup-over-bins discrepancy from uniform after each cycle, for a
    /// point-mass start with independent schedules.
    pub discrepancy: Vec<f64>,
    /// Geometric fit of the pre-plateau discrepancy decay, when at least ten
    /// pre-plateau points exist.
    pub rate: Option<RateEstimate>,
    /// Sampling floor of the discrepancy estimator for this trial count.
    pub plateau: f64,
    /// Chi-square statistic and p-value of the uniform-start endpoint
    /// distribution (stationarity check).
    pub stationary_chi2: f64,
    pub stationary_p: f64,
}

fn bin_index(p: &TorusPoint, bins: usize) -> usize {
    let step = TWO_PI / bins as f64;
    let mut idx = 0;
    for d in 0..3 {
        let b = ((p.0[d] / step) as usize).min(bins - 1);
        idx = idx * bins + b;
    }
    idx
}

fn bin_counts(pts: &[TorusPoint], bins: usize) -> Vec<u64> {
    let mut counts = vec![0u64; bins * bins * bins];
    for p in pts {
        counts[bin_index(p, bins)] += 1;
    }
    counts
}

/// Verifies uniform ergodicity at desk scale: a point-mass start spreads to
/// the uniform measure at a geometric rate, and a uniform start stays
/// uniform (volume preservation makes Lebesgue stationary).
pub fn one_point_ergodicity(
    field: &SplitVectorField,
    h: f64,
    cycles: usize,
    trials: usize,
    bins: usize,
    start: TorusPoint,
    seed: u64,
) -> Result<ErgodicityReport, TransportError> {
    if trials < MIN_ERGODICITY_TRIALS {
        return Err(TransportError::NotEnough {
            what: "trials",
            min: MIN_ERGODICITY_TRIALS,
            got: trials,
        });
    }
    if bins < 2 {
        return Err(TransportError::NotEnough { what: "bins per axis", min: 2, got: bins });
    }
    let cells = (bins * bins * bins) as f64;
    let point_base = stream_seed(seed, 1);
    let schedules: Vec<SplitSchedule> = (0..trials)
        .map(|t| {
            SplitSchedule::new(stream_seed(point_base, t as u64), h)
                .map_err(|_| TransportError::InvalidMean(h))
        })
        .collect::<Result<_, _>>()?;
    let mut points = vec![start; trials];
    let discrepancy_of = |pts: &[TorusPoint]| -> f64 {
        bin_counts(pts, bins)
            .iter()
            .map(|&c| (c as f64 / trials as f64 - 1.0 / cells).abs())
            .fold(0.0, f64::max)
    };
    let mut discrepancy = vec![discrepancy_of(&points)];
    for c in 1..=cycles as u64 {
        points
            .par_chunks_mut(EVOLVE_CHUNK)
            .zip(schedules.par_chunks(EVOLVE_CHUNK))
            .for_each(|(pc, sc)| {
                for (p, sch) in pc.iter_mut().zip(sc) {
                    *p = splitting_step(field, *p, sch.cycle(c), false).end;
                }
            });
        discrepancy.push(discrepancy_of(&points));
    }
    // Extreme-value scale of bins³ binomial cells: the decay curve flattens
    // here no matter how long the run.
    let p_cell = 1.0 / cells;
    let plateau = (2.0 * cells.ln()).sqrt() * (p_cell * (1.0 - p_cell) / trials as f64).sqrt();
    let fit_pts: Vec<(f64, f64)> = discrepancy
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, &d)| d > 3.0 * plateau)
        .map(|(m, &d)| (m as f64, d))
        .collect();
    let rate = if fit_pts.len() >= 10 { fit_rate(&fit_pts, 0.0).ok() } else { None };

    let stat_base = stream_seed(seed, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(stat_base, 0));
    let mut stat_points: Vec<TorusPoint> =
        (0..trials).map(|_| TorusPoint::new(uniform_torus(&mut rng))).collect();
    let stat_schedules: Vec<SplitSchedule> = (0..trials)
        .map(|t| SplitSchedule::new(stream_seed(stat_base, 1 + t as u64), h).unwrap())
        .collect();
    for c in 1..=cycles as u64 {
        stat_points
            .par_chunks_mut(EVOLVE_CHUNK)
            .zip(stat_schedules.par_chunks(EVOLVE_CHUNK))
            .for_each(|(pc, sc)| {
                for (p, sch) in pc.iter_mut().zip(sc) {
                    *p = splitting_step(field, *p, sch.cycle(c), false).end;
                }
            });
    }
    let (stationary_chi2, stationary_p) = chi_square_uniform(&bin_counts(&stat_points, bins));
    Ok(ErgodicityReport {
        trials,
        cycles,
        bins,
        discrepancy,
        rate,
        plateau,
        stationary_chi2,
        stationary_p,
    })
}
