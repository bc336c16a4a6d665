//! Tangent dynamics of the random splitting: Lyapunov exponents, the moment
//! Lyapunov function with its positive eigenfunction, and Lie bracket
//! certificates for the one-point, projective, and two-point chains.
//!
//! Because every sub-flow has an exact unit-triangular Jacobian, tangent
//! vectors are transported exactly; all randomness enters through the
//! switching times alone.

use crate::fields::{ScalarJet, SplitVectorField, TrigPoly};
use crate::rng::{stream_seed, uniform_torus, unit_vector};
use crate::splitting::{
    splitting_step, QrAccumulator, SplitSchedule, TauSource, TorusPoint,
};
use crate::stats::{log_sum_exp, mean_sd, pooled_batch_means};
use nalgebra::{Matrix3, SMatrix, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TangentError {
    #[error("tangent vector must be nonzero and finite")]
    ZeroTangent,
    #[error("tangent norm collapsed below 1e-300; cannot renormalize")]
    DegenerateGrowth,
    #[error("need at least {min} cycles, got {got}")]
    TooFewCycles { min: usize, got: usize },
    #[error("need at least {min} trials, got {got}")]
    TooFewTrials { min: usize, got: usize },
    #[error("need at least {min} samples, got {got}")]
    TooFewSamples { min: usize, got: usize },
    #[error("moment order q = {got} outside the supported range |q| <= {max}")]
    QOutOfRange { got: f64, max: f64 },
    #[error("mean switching time must be positive, got {0}")]
    InvalidMean(f64),
}

/// A torus point with a unit tangent direction (|u| = 1 within 1e-12).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProjectivePoint {
    pub x: TorusPoint,
    u: [f64; 3],
}

impl ProjectivePoint {
    pub fn new(x: TorusPoint, u: [f64; 3]) -> Result<Self, TangentError> {
        let n = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
        if !(n > 0.0 && n.is_finite()) {
            return Err(TangentError::ZeroTangent);
        }
        Ok(Self { x, u: [u[0] / n, u[1] / n, u[2] / n] })
    }

    pub fn direction(&self) -> [f64; 3] {
        self.u
    }
}

/// Transports a tangent vector through one cycle: returns the endpoint and
/// the exactly transported vector (no normalization).
pub fn lifted_step(
    field: &SplitVectorField,
    x: TorusPoint,
    v: [f64; 3],
    tau: [f64; 3],
) -> Result<(TorusPoint, [f64; 3]), TangentError> {
    let n2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
    if !(n2 > 0.0 && n2.is_finite()) {
        return Err(TangentError::ZeroTangent);
    }
    let r = splitting_step(field, x, tau, true);
    let w = r.jacobian.unwrap() * Vector3::from(v);
    Ok((r.end, [w[0], w[1], w[2]]))
}

/// One cycle of the projective chain: moves the base point, transports the
/// direction, renormalizes, and returns the log growth factor.
pub fn projective_step(
    field: &SplitVectorField,
    p: &ProjectivePoint,
    tau: [f64; 3],
) -> Result<(ProjectivePoint, f64), TangentError> {
    let (end, w) = lifted_step(field, p.x, p.u, tau)?;
    let g = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
    if g < 1e-300 {
        return Err(TangentError::DegenerateGrowth);
    }
    Ok((ProjectivePoint { x: end, u: [w[0] / g, w[1] / g, w[2] / g] }, g.ln()))
}

/// Top Lyapunov exponent estimate, per cycle.
#[derive(Debug, Clone, Serialize)]
pub struct LyapunovEstimate {
    pub lambda1: f64,
    /// Batch-means standard error pooled over trajectories.
    pub se: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub cycles: usize,
    pub trials: usize,
    /// Cycles per renormalization of the transported direction.
    pub renorm_cadence: usize,
    pub batch_len: usize,
    pub batches: usize,
    /// Per-trajectory time averages (direction-independence diagnostic).
    pub per_trajectory: Vec<f64>,
}

const PURPOSE_LYAPUNOV: u64 = 0x4c59_4150;
const PURPOSE_MOMENT: u64 = 0x4d4f_4d45;
const PURPOSE_EIGEN: u64 = 0x4549_4745;

/// Estimates the top Lyapunov exponent per cycle from independent projective
/// trajectories with random starts, directions, and schedules. The standard
/// error pools batch means (batch length cycles/20) across trajectories.
pub fn lyapunov_top(
    field: &SplitVectorField,
    h: f64,
    cycles: usize,
    trials: usize,
    seed: u64,
) -> Result<LyapunovEstimate, TangentError> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(TangentError::InvalidMean(h));
    }
    if cycles < 1000 {
        return Err(TangentError::TooFewCycles { min: 1000, got: cycles });
    }
    if trials < 8 {
        return Err(TangentError::TooFewTrials { min: 8, got: trials });
    }
    let base = stream_seed(seed, PURPOSE_LYAPUNOV);
    let growths: Vec<Vec<f64>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let st = stream_seed(base, t as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(st, 1));
            let mut p = ProjectivePoint::new(
                TorusPoint::new(uniform_torus(&mut rng)),
                unit_vector(&mut rng),
            )
            .unwrap();
            let schedule = SplitSchedule::new(stream_seed(st, 2), h).unwrap();
            let mut series = Vec::with_capacity(cycles);
            for c in 1..=cycles as u64 {
                let (next, lg) = projective_step(field, &p, schedule.cycle(c)).unwrap();
                p = next;
                series.push(lg);
            }
            series
        })
        .collect();

    let batch_len = (cycles / 20).max(1);
    let (lambda1, se, batches) = pooled_batch_means(&growths, batch_len);
    let per_trajectory: Vec<f64> =
        growths.iter().map(|g| g.iter().sum::<f64>() / g.len() as f64).collect();
    Ok(LyapunovEstimate {
        lambda1,
        se,
        ci_lo: lambda1 - 1.96 * se,
        ci_hi: lambda1 + 1.96 * se,
        cycles,
        trials,
        renorm_cadence: 1,
        batch_len,
        batches,
        per_trajectory,
    })
}

/// Full Lyapunov spectrum estimate, per cycle.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumEstimate {
    /// Exponents in decreasing order.
    pub exponents: [f64; 3],
    /// Standard errors across trials.
    pub se: [f64; 3],
    /// Mean of (λ₁+λ₂+λ₃); zero for volume-preserving dynamics.
    pub sum: f64,
    pub sum_se: f64,
    pub cycles: usize,
    pub trials: usize,
    /// Cycles per QR reorthogonalization.
    pub cadence: usize,
}

/// Estimates all three exponents by QR accumulation of cycle Jacobians,
/// reorthogonalizing every `cadence` cycles (raw blocks of that length stay
/// far from overflow).
pub fn lyapunov_spectrum(
    field: &SplitVectorField,
    h: f64,
    cycles: usize,
    trials: usize,
    seed: u64,
    cadence: usize,
) -> Result<SpectrumEstimate, TangentError> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(TangentError::InvalidMean(h));
    }
    if cycles < 1000 {
        return Err(TangentError::TooFewCycles { min: 1000, got: cycles });
    }
    if trials < 8 {
        return Err(TangentError::TooFewTrials { min: 8, got: trials });
    }
    let cadence = cadence.max(1);
    let blocks = cycles / cadence;
    let eff_cycles = blocks * cadence;
    let base = stream_seed(seed, PURPOSE_LYAPUNOV ^ 0x5350);
    let per_trial: Vec<[f64; 3]> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let st = stream_seed(base, t as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(st, 1));
            let mut x = TorusPoint::new(uniform_torus(&mut rng));
            let schedule = SplitSchedule::new(stream_seed(st, 2), h).unwrap();
            let mut acc = QrAccumulator::new();
            let mut c = 1u64;
            for _ in 0..blocks {
                let mut w = Matrix3::<f64>::identity();
                for _ in 0..cadence {
                    let r = splitting_step(field, x, schedule.cycle(c), true);
                    w = r.jacobian.unwrap() * w;
                    x = r.end;
                    c += 1;
                }
                acc.push(&w);
            }
            let ld = acc.log_diagonal();
            [ld[0] / eff_cycles as f64, ld[1] / eff_cycles as f64, ld[2] / eff_cycles as f64]
        })
        .collect();

    let mut exponents = [0.0; 3];
    let mut se = [0.0; 3];
    for d in 0..3 {
        let vals: Vec<f64> = per_trial.iter().map(|e| e[d]).collect();
        let (m, s) = mean_sd(&vals);
        exponents[d] = m;
        se[d] = s / (trials as f64).sqrt();
    }
    let sums: Vec<f64> = per_trial.iter().map(|e| e[0] + e[1] + e[2]).collect();
    let (sum, ssd) = mean_sd(&sums);
    Ok(SpectrumEstimate {
        exponents,
        se,
        sum,
        sum_se: ssd / (trials as f64).sqrt(),
        cycles: eff_cycles,
        trials,
        cadence,
    })
}

/// The moment Lyapunov function Λ(q) on a grid of moment orders, with
/// bootstrap half-widths.
#[derive(Debug, Clone, Serialize)]
pub struct MomentCurve {
    pub q: Vec<f64>,
    pub lambda: Vec<f64>,
    pub half_width: Vec<f64>,
    pub cycles: usize,
    pub samples: usize,
}

/// Λ(q) = (1/n) ln E |DΦⁿ u|^{-q}, estimated over independent trajectories
/// from uniform starts. All averaging of exponentials goes through
/// log-sum-exp, and Λ(0) evaluates to exactly zero by construction.
pub fn moment_lyapunov(
    field: &SplitVectorField,
    h: f64,
    cycles: usize,
    samples: usize,
    q_grid: &[f64],
    seed: u64,
) -> Result<MomentCurve, TangentError> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(TangentError::InvalidMean(h));
    }
    if cycles < 50 {
        return Err(TangentError::TooFewCycles { min: 50, got: cycles });
    }
    if samples < 10_000 {
        return Err(TangentError::TooFewSamples { min: 10_000, got: samples });
    }
    for &q in q_grid {
        if !(q.abs() <= 1.0) {
            return Err(TangentError::QOutOfRange { got: q, max: 1.0 });
        }
    }
    let growths = total_growths(field, h, cycles, samples, stream_seed(seed, PURPOSE_MOMENT), None);
    let n = cycles as f64;
    let ln_s = (samples as f64).ln();
    let lambda_of = |ls: &[f64], q: f64| -> f64 {
        if q == 0.0 {
            return 0.0;
        }
        let scaled: Vec<f64> = ls.iter().map(|&l| -q * l).collect();
        (log_sum_exp(&scaled) - ln_s) / n
    };
    let lambda: Vec<f64> = q_grid.iter().map(|&q| lambda_of(&growths, q)).collect();

    // Half-widths by resampling trajectories with a fixed internal seed.
    let boots = 200;
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, PURPOSE_MOMENT ^ 0xb0));
    let mut resample = vec![0.0; samples];
    let mut boot_vals = vec![Vec::with_capacity(boots); q_grid.len()];
    for _ in 0..boots {
        for r in resample.iter_mut() {
            *r = growths[rand::Rng::gen_range(&mut rng, 0..samples)];
        }
        for (qi, &q) in q_grid.iter().enumerate() {
            boot_vals[qi].push(lambda_of(&resample, q));
        }
    }
    let half_width: Vec<f64> = boot_vals
        .iter()
        .map(|vals| {
            let (_, sd) = mean_sd(vals);
            1.96 * sd
        })
        .collect();
    Ok(MomentCurve { q: q_grid.to_vec(), lambda, half_width, cycles, samples })
}

/// Total log growth of a unit tangent vector over `cycles` cycles, for
/// `samples` independent schedules. Starts are uniform unless `fixed` pins a
/// single (point, direction).
fn total_growths(
    field: &SplitVectorField,
    h: f64,
    cycles: usize,
    samples: usize,
    base: u64,
    fixed: Option<(TorusPoint, [f64; 3])>,
) -> Vec<f64> {
    (0..samples)
        .into_par_iter()
        .map(|s| {
            let st = stream_seed(base, s as u64);
            let mut p = match fixed {
                Some((x, u)) => ProjectivePoint::new(x, u).unwrap(),
                None => {
                    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(st, 1));
                    ProjectivePoint::new(
                        TorusPoint::new(uniform_torus(&mut rng)),
                        unit_vector(&mut rng),
                    )
                    .unwrap()
                }
            };
            let schedule = SplitSchedule::new(stream_seed(st, 2), h).unwrap();
            let mut total = 0.0;
            for c in 1..=cycles as u64 {
                let (next, lg) = projective_step(field, &p, schedule.cycle(c)).unwrap();
                p = next;
                total += lg;
            }
            total
        })
        .collect()
}

/// Estimates the twisted-semigroup eigenfunction ψ_q at a fixed point and
/// direction: E |DΦⁿ u|^{-q} · e^{-n Λ(q)}, with Λ(q) = `lambda_q` supplied
/// by a separate moment run. Returns exactly 1 at q = 0.
pub fn eigenfunction_estimate(
    field: &SplitVectorField,
    q: f64,
    x: TorusPoint,
    u: [f64; 3],
    cycles: usize,
    samples: usize,
    lambda_q: f64,
    seed: u64,
) -> Result<f64, TangentError> {
    if !(q.abs() <= 0.2) {
        return Err(TangentError::QOutOfRange { got: q, max: 0.2 });
    }
    if cycles < 50 {
        return Err(TangentError::TooFewCycles { min: 50, got: cycles });
    }
    let n2 = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
    if !(n2 > 0.0 && n2.is_finite()) {
        return Err(TangentError::ZeroTangent);
    }
    let nu = n2.sqrt();
    let u = [u[0] / nu, u[1] / nu, u[2] / nu];
    if q == 0.0 {
        return Ok(1.0);
    }
    let growths = total_growths(
        field,
        h_for_eigen(),
        cycles,
        samples,
        stream_seed(seed, PURPOSE_EIGEN),
        Some((x, u)),
    );
    let scaled: Vec<f64> = growths.iter().map(|&l| -q * l).collect();
    let log_mc = log_sum_exp(&scaled) - (samples as f64).ln();
    Ok((log_mc - cycles as f64 * lambda_q).exp())
}

/// Mean switching time used by the eigenfunction estimator; must match the
/// moment run supplying lambda_q.
pub fn h_for_eigen() -> f64 {
    1.0
}

// ---------------------------------------------------------------------------
// Lie bracket certificates
// ---------------------------------------------------------------------------

/// Which chain the certificate concerns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CertificateLevel {
    /// Position and unnormalized tangent vector (6 dimensions).
    Lifted,
    /// Position and projective direction (5 dimensions).
    Projective,
    /// Two positions (6 dimensions).
    TwoPoint,
}

impl CertificateLevel {
    pub fn expected_rank(self) -> usize {
        match self {
            CertificateLevel::Lifted | CertificateLevel::TwoPoint => 6,
            CertificateLevel::Projective => 5,
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "lifted" => Some(Self::Lifted),
            "projective" => Some(Self::Projective),
            "twopoint" => Some(Self::TwoPoint),
            _ => None,
        }
    }
}

/// Where a certificate was evaluated.
#[derive(Debug, Clone, Serialize)]
pub enum CertificatePoint {
    WithDirection { x: TorusPoint, u: [f64; 3] },
    Pair { x: TorusPoint, y: TorusPoint },
}

/// Outcome of a bracket-spanning check. Rank deficiency is reported as a
/// finding, never as an error.
#[derive(Debug, Clone, Serialize)]
pub struct CertificateReport {
    pub level: CertificateLevel,
    pub expected_rank: usize,
    pub rank: usize,
    pub full_rank: bool,
    pub singular_values: Vec<f64>,
    /// Determinant of the square certificate matrix (for the projective
    /// level, of the 5x5 minor that witnesses rank 5).
    pub det: f64,
    /// Closed-form value of the same determinant, available at the
    /// constructed evaluation points where the factorization applies.
    pub det_predicted: Option<f64>,
    pub point: CertificatePoint,
}

/// Relative singular-value threshold for rank decisions.
pub const RANK_THRESHOLD: f64 = 1e-9;

struct ProfileJets {
    j1: ScalarJet,
    j2: ScalarJet,
    j3: ScalarJet,
}

fn jets_at(field: &SplitVectorField, x: &TorusPoint) -> ProfileJets {
    ProfileJets {
        j1: field.triple.profile(1).eval_jet(x.0[2]),
        j2: field.triple.profile(2).eval_jet(x.0[0]),
        j3: field.triple.profile(3).eval_jet(x.0[1]),
    }
}

fn shear_values(j: &ProfileJets) -> [[f64; 3]; 3] {
    [
        [j.j1.f, j.j1.df, 0.0],
        [0.0, j.j2.f, j.j2.df],
        [j.j3.df, 0.0, j.j3.f],
    ]
}

/// The three pairwise brackets [X₁,X₂], [X₁,X₃], [X₂,X₃] at a point.
pub fn shear_brackets(field: &SplitVectorField, x: &TorusPoint) -> [[f64; 3]; 3] {
    let j = jets_at(field, x);
    brackets_from_jets(&j)
}

fn brackets_from_jets(j: &ProfileJets) -> [[f64; 3]; 3] {
    let (f1, f2, f3) = (&j.j1, &j.j2, &j.j3);
    [
        [
            -f1.df * f2.df,
            (f1.f - f1.d2f) * f2.df,
            f1.f * f2.d2f,
        ],
        [
            (f3.d2f - f3.f) * f1.df,
            -f1.d2f * f3.f,
            f1.df * f3.df,
        ],
        [
            f2.f * f3.d2f,
            -f2.df * f3.df,
            (f2.f - f2.d2f) * f3.df,
        ],
    ]
}

/// Directional derivatives of the shear fields: DX_i(x)·u.
fn shear_derivatives(j: &ProfileJets, u: [f64; 3]) -> [[f64; 3]; 3] {
    [
        [u[2] * j.j1.df, u[2] * j.j1.d2f, 0.0],
        [0.0, u[0] * j.j2.df, u[0] * j.j2.d2f],
        [u[1] * j.j3.d2f, 0.0, u[1] * j.j3.df],
    ]
}

/// Directional derivatives of the brackets: D[X_i,X_j](x)·u in the order
/// (1,2), (1,3), (2,3).
fn bracket_derivatives(j: &ProfileJets, u: [f64; 3]) -> [[f64; 3]; 3] {
    let (f1, f2, f3) = (&j.j1, &j.j2, &j.j3);
    [
        [
            -u[0] * f1.df * f2.d2f - u[2] * f1.d2f * f2.df,
            u[0] * (f1.f - f1.d2f) * f2.d2f + u[2] * (f1.df - f1.d3f) * f2.df,
            u[0] * f1.f * f2.d3f + u[2] * f1.df * f2.d2f,
        ],
        [
            u[1] * (f3.d3f - f3.df) * f1.df + u[2] * (f3.d2f - f3.f) * f1.d2f,
            -u[1] * f1.d2f * f3.df - u[2] * f1.d3f * f3.f,
            u[1] * f1.df * f3.d2f + u[2] * f1.d2f * f3.df,
        ],
        [
            u[0] * f2.df * f3.d2f + u[1] * f2.f * f3.d3f,
            -u[0] * f2.d2f * f3.df - u[1] * f2.df * f3.d2f,
            u[0] * (f2.df - f2.d3f) * f3.df + u[1] * (f2.f - f2.d2f) * f3.d2f,
        ],
    ]
}

/// Columns: the three lifted shear fields and three lifted brackets at (x, u),
/// where the lift pairs a field V with the derivative DV·u.
pub fn lifted_matrix(field: &SplitVectorField, x: &TorusPoint, u: [f64; 3]) -> SMatrix<f64, 6, 6> {
    let j = jets_at(field, x);
    let base = shear_values(&j);
    let dbase = shear_derivatives(&j, u);
    let br = brackets_from_jets(&j);
    let dbr = bracket_derivatives(&j, u);
    let mut m = SMatrix::<f64, 6, 6>::zeros();
    for col in 0..3 {
        for row in 0..3 {
            m[(row, col)] = base[col][row];
            m[(row + 3, col)] = dbase[col][row];
            m[(row, col + 3)] = br[col][row];
            m[(row + 3, col + 3)] = dbr[col][row];
        }
    }
    m
}

/// Columns: the three projective shear lifts and the (1,2), (1,3) bracket
/// lifts at (x, u); the tangent part projects off the u component.
pub fn projective_matrix(
    field: &SplitVectorField,
    x: &TorusPoint,
    u: [f64; 3],
) -> SMatrix<f64, 6, 5> {
    let j = jets_at(field, x);
    let base = shear_values(&j);
    let dbase = shear_derivatives(&j, u);
    let br = brackets_from_jets(&j);
    let dbr = bracket_derivatives(&j, u);
    let project = |w: [f64; 3]| {
        let dot = w[0] * u[0] + w[1] * u[1] + w[2] * u[2];
        [w[0] - dot * u[0], w[1] - dot * u[1], w[2] - dot * u[2]]
    };
    let mut m = SMatrix::<f64, 6, 5>::zeros();
    for col in 0..3 {
        let p = project(dbase[col]);
        for row in 0..3 {
            m[(row, col)] = base[col][row];
            m[(row + 3, col)] = p[row];
        }
    }
    for (ci, bi) in [(3, 0), (4, 1)] {
        let p = project(dbr[bi]);
        for row in 0..3 {
            m[(row, ci)] = br[bi][row];
            m[(row + 3, ci)] = p[row];
        }
    }
    m
}

/// Columns: the three shear fields and three brackets evaluated at both
/// points of a pair and stacked.
pub fn twopoint_matrix(
    field: &SplitVectorField,
    x: &TorusPoint,
    y: &TorusPoint,
) -> SMatrix<f64, 6, 6> {
    let jx = jets_at(field, x);
    let jy = jets_at(field, y);
    let bx = shear_values(&jx);
    let by = shear_values(&jy);
    let brx = brackets_from_jets(&jx);
    let bry = brackets_from_jets(&jy);
    let mut m = SMatrix::<f64, 6, 6>::zeros();
    for col in 0..3 {
        for row in 0..3 {
            m[(row, col)] = bx[col][row];
            m[(row + 3, col)] = by[col][row];
            m[(row, col + 3)] = brx[col][row];
            m[(row + 3, col + 3)] = bry[col][row];
        }
    }
    m
}

/// Critical point of f with the largest |f| (ties: smallest angle).
fn peak_critical(f: &TrigPoly) -> f64 {
    let mut best = (f64::NEG_INFINITY, 0.0);
    for c in f.critical_points(2000, 1e-9) {
        let v = f.eval(c).abs();
        if v > best.0 {
            best = (v, c);
        }
    }
    best.1
}

/// Critical points of f₁ where f₁ attains its smallest and largest value.
fn extreme_criticals(f: &TrigPoly) -> (f64, f64) {
    let mut min = (f64::INFINITY, 0.0);
    let mut max = (f64::NEG_INFINITY, 0.0);
    for c in f.critical_points(2000, 1e-9) {
        let v = f.eval(c);
        if v < min.0 {
            min = (v, c);
        }
        if v > max.0 {
            max = (v, c);
        }
    }
    (min.1, max.1)
}

/// The constructed evaluation point: every coordinate sits at a critical
/// point of the profile whose derivative appears in that slot, which zeroes
/// the off-pattern entries and gives the determinant a closed form.
pub fn constructed_point(field: &SplitVectorField) -> TorusPoint {
    let c1 = peak_critical(field.triple.profile(1));
    let c2 = peak_critical(field.triple.profile(2));
    let c3 = peak_critical(field.triple.profile(3));
    TorusPoint::new([c2, c3, c1])
}

/// The constructed pair for the two-point certificate: both points share the
/// constrained first two coordinates and sit at the opposite extremizers of
/// the first profile in the third.
pub fn constructed_pair(field: &SplitVectorField) -> (TorusPoint, TorusPoint) {
    let c2 = peak_critical(field.triple.profile(2));
    let c3 = peak_critical(field.triple.profile(3));
    let (cmin, cmax) = extreme_criticals(field.triple.profile(1));
    (TorusPoint::new([c2, c3, cmin]), TorusPoint::new([c2, c3, cmax]))
}

/// Closed-form determinant of the lifted certificate matrix at a point whose
/// coordinates are critical for the matching profiles.
pub fn lifted_det_factorized(field: &SplitVectorField, x: &TorusPoint, u: [f64; 3]) -> f64 {
    let j = jets_at(field, x);
    let (f1, f2, f3) = (&j.j1, &j.j2, &j.j3);
    let (u1, u2, u3) = (u[0], u[1], u[2]);
    let s1 = u2 * u2 * u3 * f1.f * f1.d3f * f2.d2f * (f2.f - f2.d2f) * f3.d2f * f3.d2f
        - u1 * u2 * u3 * (f1.d2f * f2.d2f * f3.d2f).powi(2);
    let s2 = u1 * u2 * u3
        * f1.d2f
        * (f1.f - f1.d2f)
        * f2.d2f
        * (f2.f - f2.d2f)
        * f3.d2f
        * (f3.d2f - f3.f)
        - u1 * u1 * u2 * f1.d2f * (f1.f - f1.d2f) * f2.d2f * f2.d2f * f3.f * f3.d3f;
    let s3 = -u1 * u3 * u3 * f1.d2f * f1.d2f * f2.f * f2.d3f * f3.d2f * (f3.d2f - f3.f)
        + u1 * u2 * u3 * f1.f * f1.d3f * f2.f * f2.d3f * f3.f * f3.d3f;
    f1.f * f2.f * f3.f * (s1 - s2 + s3)
}

/// Closed-form determinant of the 5x5 projective minor at the constructed
/// point with a direction satisfying u₂ = 0.
pub fn projective_minor_det_factorized(
    field: &SplitVectorField,
    x: &TorusPoint,
    u: [f64; 3],
) -> f64 {
    let j = jets_at(field, x);
    let (f1, f2, f3) = (&j.j1, &j.j2, &j.j3);
    let (u1, u3) = (u[0], u[2]);
    let a = (1.0 - u3 * u3) * f2.d2f * f3.f - f2.f * (f3.d2f - f3.f) * u3 * u3;
    let b = f1.f * f1.f * f2.f * f3.f * f3.f * f1.d3f * f2.d3f;
    let c = u1 * u1 * f1.f * f3.f * f1.d2f * f2.d2f * (f1.f - f1.d2f);
    a * c + b * u1.powi(3) * u3
}

/// Closed-form determinant of the two-point certificate matrix at a pair
/// whose coordinates are critical for the matching profiles.
pub fn twopoint_det_factorized(field: &SplitVectorField, x: &TorusPoint, y: &TorusPoint) -> f64 {
    // Profile i reads coordinate i-1 cyclically (f₁ reads x₃, f₂ reads x₁,
    // f₃ reads x₂); arrange the six jet evaluations accordingly.
    let fx = [
        field.triple.profile(1).eval_jet(x.0[2]),
        field.triple.profile(2).eval_jet(x.0[0]),
        field.triple.profile(3).eval_jet(x.0[1]),
    ];
    let fy = [
        field.triple.profile(1).eval_jet(y.0[2]),
        field.triple.profile(2).eval_jet(y.0[0]),
        field.triple.profile(3).eval_jet(y.0[1]),
    ];
    let mut det = 1.0;
    for i in 0..3 {
        let inext = (i + 1) % 3;
        let inext2 = (i + 2) % 3;
        let ratio = (fx[inext].f * fx[inext2].d2f) / (fy[inext].f * fy[inext2].d2f);
        det *= fy[i].f * fy[i].d2f * (fx[i].f - fy[i].f * ratio);
    }
    det
}

fn svd_rank(singular: &[f64]) -> usize {
    let smax = singular.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    singular.iter().filter(|&&s| s >= RANK_THRESHOLD * smax).count()
}

/// Evaluates the spanning certificate for a chain at an explicit point.
pub fn lie_certificate_at(
    field: &SplitVectorField,
    level: CertificateLevel,
    x: TorusPoint,
    u: [f64; 3],
    y: Option<TorusPoint>,
    predicted: bool,
) -> CertificateReport {
    let expected_rank = level.expected_rank();
    let (singular_values, det, det_predicted, point) = match level {
        CertificateLevel::Lifted => {
            let m = lifted_matrix(field, &x, u);
            let sv: Vec<f64> = m.svd(false, false).singular_values.iter().cloned().collect();
            let det = m.determinant();
            let pred = predicted.then(|| lifted_det_factorized(field, &x, u));
            (sv, det, pred, CertificatePoint::WithDirection { x, u })
        }
        CertificateLevel::Projective => {
            let m = projective_matrix(field, &x, u);
            let sv: Vec<f64> = m.svd(false, false).singular_values.iter().cloned().collect();
            // Witness minor: drop the first tangent row.
            let minor = m.remove_row(3);
            let det = minor.determinant();
            let pred = predicted.then(|| projective_minor_det_factorized(field, &x, u));
            (sv, det, pred, CertificatePoint::WithDirection { x, u })
        }
        CertificateLevel::TwoPoint => {
            let y = y.expect("two-point certificate needs a second point");
            let m = twopoint_matrix(field, &x, &y);
            let sv: Vec<f64> = m.svd(false, false).singular_values.iter().cloned().collect();
            let det = m.determinant();
            let pred = predicted.then(|| twopoint_det_factorized(field, &x, &y));
            (sv, det, pred, CertificatePoint::Pair { x, y })
        }
    };
    let rank = svd_rank(&singular_values);
    CertificateReport {
        level,
        expected_rank,
        rank,
        full_rank: rank == expected_rank,
        singular_values,
        det,
        det_predicted,
        point,
    }
}

/// Evaluates the spanning certificate at the constructed point for the given
/// chain, where the determinant also has a closed form to compare against.
pub fn lie_certificate(field: &SplitVectorField, level: CertificateLevel) -> CertificateReport {
    match level {
        CertificateLevel::Lifted => {
            let x = constructed_point(field);
            let s3 = 3.0f64.sqrt().recip();
            lie_certificate_at(field, level, x, [s3, s3, s3], None, true)
        }
        CertificateLevel::Projective => {
            let x = constructed_point(field);
            let s2 = 2.0f64.sqrt().recip();
            lie_certificate_at(field, level, x, [s2, 0.0, s2], None, true)
        }
        CertificateLevel::TwoPoint => {
            let (x, y) = constructed_pair(field);
            lie_certificate_at(field, level, x, [0.0; 3], Some(y), true)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::splitting::flow_split;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn abc() -> SplitVectorField {
        SplitVectorField::abc(1.0, 1.0, 1.0)
    }

    #[test]
    fn lifted_step_rejects_zero_tangent() {
        let field = abc();
        let x = TorusPoint::new([1.0, 2.0, 3.0]);
        assert_eq!(
            lifted_step(&field, x, [0.0; 3], [0.1, 0.2, 0.3]).unwrap_err(),
            TangentError::ZeroTangent
        );
    }

    #[test]
    fn lifted_transport_matches_flow_differences() {
        let field = abc();
        let x = TorusPoint::new([0.8, 1.9, 4.7]);
        let v = [0.3, -0.5, 0.81];
        let tau = [0.7, 0.4, 1.1];
        let (_, w) = lifted_step(&field, x, v, tau).unwrap();
        let eps = 1e-6;
        let shift = |s: f64| {
            let p = TorusPoint::new([x.0[0] + s * v[0], x.0[1] + s * v[1], x.0[2] + s * v[2]]);
            splitting_step(&field, p, tau, false).end
        };
        let (plus, minus) = (shift(eps), shift(-eps));
        let d = minus.log_map(&plus);
        for r in 0..3 {
            assert!((w[r] - d[r] / (2.0 * eps)).abs() < 1e-5, "row {r}");
        }
    }

    #[test]
    fn projective_step_keeps_direction_normalized() {
        let field = abc();
        let p = ProjectivePoint::new(TorusPoint::new([1.0, 5.0, 2.0]), [3.0, 0.0, 4.0]).unwrap();
        let u = p.direction();
        assert!(((u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt() - 1.0).abs() <= 1e-12);
        let (next, lg) = projective_step(&field, &p, [1.4, 0.2, 0.9]).unwrap();
        let v = next.direction();
        assert!(((v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt() - 1.0).abs() <= 1e-12);
        assert!(lg.is_finite());
    }

    #[test]
    fn lyapunov_top_validates_arguments() {
        let field = abc();
        assert!(matches!(
            lyapunov_top(&field, 1.0, 999, 8, 1),
            Err(TangentError::TooFewCycles { .. })
        ));
        assert!(matches!(
            lyapunov_top(&field, 1.0, 1000, 7, 1),
            Err(TangentError::TooFewTrials { .. })
        ));
        assert!(matches!(lyapunov_top(&field, 0.0, 1000, 8, 1), Err(TangentError::InvalidMean(_))));
    }

    #[test]
    fn top_exponent_is_positive_and_direction_independent() {
        let field = abc();
        let est = lyapunov_top(&field, 1.0, 2000, 8, 77).unwrap();
        assert!(est.ci_lo > 0.0, "lambda1 {} +- {}", est.lambda1, est.se);
        assert!(est.batches >= 20 * 8);
        let spread = est
            .per_trajectory
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
            - est.per_trajectory.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(spread < 0.2 * est.lambda1.max(0.1), "trajectory spread {spread}");
    }

    #[test]
    fn spectrum_sums_to_zero_and_brackets_top_exponent() {
        let field = abc();
        let spec = lyapunov_spectrum(&field, 1.0, 2000, 8, 77, 20).unwrap();
        assert!(spec.exponents[0] > 0.0);
        assert!(spec.exponents[2] < 0.0);
        assert!(spec.exponents[0] >= spec.exponents[1] && spec.exponents[1] >= spec.exponents[2]);
        assert!(
            spec.sum.abs() <= 3.0 * spec.sum_se + 1e-9,
            "sum {} se {}",
            spec.sum,
            spec.sum_se
        );
    }

    #[test]
    fn moment_curve_is_zero_at_origin_and_convex() {
        let field = abc();
        let grid = [-0.2, -0.1, 0.0, 0.05, 0.1, 0.2];
        let mc = moment_lyapunov(&field, 1.0, 60, 10_000, &grid, 5).unwrap();
        let at = |q: f64| {
            let i = mc.q.iter().position(|&v| v == q).unwrap();
            (mc.lambda[i], mc.half_width[i])
        };
        assert_eq!(at(0.0).0, 0.0);
        assert_eq!(at(0.0).1, 0.0);
        // Convexity on consecutive triples (weighted for uneven spacing),
        // with bootstrap slack.
        for i in 0..mc.q.len() - 2 {
            let (a, b, c) = (mc.q[i], mc.q[i + 1], mc.q[i + 2]);
            let (wa, wc) = ((c - b) / (c - a), (b - a) / (c - a));
            let lhs = wa * mc.lambda[i] + wc * mc.lambda[i + 2] - mc.lambda[i + 1];
            let slack =
                wa * mc.half_width[i] + wc * mc.half_width[i + 2] + mc.half_width[i + 1];
            assert!(lhs >= -slack, "convexity violated at window {i}: {lhs} < -{slack}");
        }
        // Shrinking of small moments: contraction factor below one.
        assert!(at(0.05).0.exp() < 1.0);
    }

    #[test]
    fn moment_validations() {
        let field = abc();
        assert!(matches!(
            moment_lyapunov(&field, 1.0, 49, 10_000, &[0.0], 1),
            Err(TangentError::TooFewCycles { .. })
        ));
        assert!(matches!(
            moment_lyapunov(&field, 1.0, 50, 9_999, &[0.0], 1),
            Err(TangentError::TooFewSamples { .. })
        ));
        assert!(matches!(
            moment_lyapunov(&field, 1.0, 50, 10_000, &[1.5], 1),
            Err(TangentError::QOutOfRange { .. })
        ));
    }

    #[test]
    fn eigenfunction_is_exactly_one_at_zero_order() {
        let field = abc();
        let x = TorusPoint::new([1.0, 2.0, 3.0]);
        let psi = eigenfunction_estimate(&field, 0.0, x, [1.0, 0.0, 0.0], 60, 100, 0.0, 9).unwrap();
        assert_eq!(psi, 1.0);
        assert!(matches!(
            eigenfunction_estimate(&field, 0.3, x, [1.0, 0.0, 0.0], 60, 100, 0.0, 9),
            Err(TangentError::QOutOfRange { .. })
        ));
    }

    #[test]
    fn eigenfunction_is_positive_and_near_one_for_small_q() {
        let field = abc();
        let q = 0.1;
        let mc = moment_lyapunov(&field, 1.0, 60, 10_000, &[q], 5).unwrap();
        let x = TorusPoint::new([0.5, 1.5, 2.5]);
        let psi =
            eigenfunction_estimate(&field, q, x, [0.0, 1.0, 0.0], 60, 400, mc.lambda[0], 5)
                .unwrap();
        assert!(psi > 0.0);
        assert!(psi > 0.5 && psi < 2.0, "psi {psi}");
    }

    #[test]
    fn brackets_match_finite_differences() {
        let field = SplitVectorField::new(
            crate::fields::FunctionTriple::new(
                TrigPoly::new(&[(1, 0.3, 1.0), (2, 0.0, -0.2)]).unwrap(),
                TrigPoly::new(&[(1, 0.0, 0.9), (3, 0.1, 0.0)]).unwrap(),
                TrigPoly::new(&[(1, -0.4, 1.1)]).unwrap(),
            )
            .unwrap(),
        );
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let pairs = [(1usize, 2usize, 0usize), (1, 3, 1), (2, 3, 2)];
        for _ in 0..10 {
            let x = TorusPoint::new(uniform_torus(&mut rng));
            let br = shear_brackets(&field, &x);
            let eps = 1e-5;
            for &(i, jf, slot) in &pairs {
                // [X_i, X_j] = DX_j·X_i - DX_i·X_j by finite differences.
                let xi = field.eval_component(i, x.0).unwrap();
                let xj = field.eval_component(jf, x.0).unwrap();
                let dir = |v: [f64; 3], f: usize| {
                    let xp = [x.0[0] + eps * v[0], x.0[1] + eps * v[1], x.0[2] + eps * v[2]];
                    let xm = [x.0[0] - eps * v[0], x.0[1] - eps * v[1], x.0[2] - eps * v[2]];
                    let (a, b) = (
                        field.eval_component(f, xp).unwrap(),
                        field.eval_component(f, xm).unwrap(),
                    );
                    [
                        (a[0] - b[0]) / (2.0 * eps),
                        (a[1] - b[1]) / (2.0 * eps),
                        (a[2] - b[2]) / (2.0 * eps),
                    ]
                };
                let dj_xi = dir(xi, jf);
                let di_xj = dir(xj, i);
                for d in 0..3 {
                    let fd = dj_xi[d] - di_xj[d];
                    assert!(
                        (br[slot][d] - fd).abs() < 1e-7,
                        "bracket ({i},{jf}) component {d}: {} vs {fd}",
                        br[slot][d]
                    );
                }
            }
            // Bracket directional derivatives against finite differences of
            // the analytic brackets.
            let mut u = unit_vector(&mut rng);
            let nu = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
            for c in &mut u {
                *c /= nu;
            }
            let j = jets_at(&field, &x);
            let dbr = bracket_derivatives(&j, u);
            let xp = TorusPoint::new([
                x.0[0] + eps * u[0],
                x.0[1] + eps * u[1],
                x.0[2] + eps * u[2],
            ]);
            let xm = TorusPoint::new([
                x.0[0] - eps * u[0],
                x.0[1] - eps * u[1],
                x.0[2] - eps * u[2],
            ]);
            let brp = shear_brackets(&field, &xp);
            let brm = shear_brackets(&field, &xm);
            for slot in 0..3 {
                for d in 0..3 {
                    let fd = (brp[slot][d] - brm[slot][d]) / (2.0 * eps);
                    assert!(
                        (dbr[slot][d] - fd).abs() < 1e-7,
                        "bracket derivative slot {slot} component {d}"
                    );
                }
            }
        }
    }

    use rand_chacha::ChaCha8Rng;

    #[test]
    fn certificates_reach_expected_ranks_with_matching_determinants() {
        let field = abc();

        let lifted = lie_certificate(&field, CertificateLevel::Lifted);
        assert!(lifted.full_rank, "singular values {:?}", lifted.singular_values);
        assert_eq!(lifted.rank, 6);
        let pred = lifted.det_predicted.unwrap();
        assert!((lifted.det - pred).abs() <= 1e-8 * pred.abs(), "{} vs {pred}", lifted.det);
        // Frozen oracle: -9 u₁u₂u₃ (ABC)³ at the constructed point.
        assert!((pred + 3.0f64.sqrt()).abs() < 1e-12, "lifted det {pred}");

        let proj = lie_certificate(&field, CertificateLevel::Projective);
        assert!(proj.full_rank);
        assert_eq!(proj.rank, 5);
        let pred = proj.det_predicted.unwrap();
        assert!((pred - 0.5).abs() < 1e-12, "projective minor det {pred}");
        assert!((proj.det.abs() - 0.5).abs() < 1e-10, "numeric minor det {}", proj.det);

        let two = lie_certificate(&field, CertificateLevel::TwoPoint);
        assert!(two.full_rank);
        assert_eq!(two.rank, 6);
        let pred = two.det_predicted.unwrap();
        assert!((pred - 8.0).abs() < 1e-12, "two-point det {pred}");
        assert!((two.det - pred).abs() <= 1e-8 * pred.abs(), "{} vs {pred}", two.det);
    }

    #[test]
    fn certificate_reports_rank_deficiency_as_finding() {
        // At the constructed point the lifted determinant carries a factor
        // u₁u₂u₃ in every term, so a coordinate direction kills it.
        let field = abc();
        let x = constructed_point(&field);
        let report =
            lie_certificate_at(&field, CertificateLevel::Lifted, x, [0.0, 0.0, 1.0], None, true);
        assert!(!report.full_rank);
        assert!(report.rank < 6);
        assert!(report.det.abs() < 1e-9);
        assert_eq!(report.det_predicted.unwrap(), 0.0);
    }

    #[test]
    fn constructed_points_sit_at_quarter_circle_for_abc() {
        let field = abc();
        let p = constructed_point(&field);
        for c in p.coords() {
            assert!((c - FRAC_PI_2).abs() < 1e-9);
        }
        let (x, y) = constructed_pair(&field);
        assert!((x.0[2] - 1.5 * PI).abs() < 1e-9);
        assert!((y.0[2] - FRAC_PI_2).abs() < 1e-9);
    }

    #[test]
    fn lifted_transport_grows_along_unstable_direction() {
        // Sanity: transported vectors grow on average at mean time 1.
        let field = abc();
        let schedule = SplitSchedule::new(3, 1.0).unwrap();
        let mut x = TorusPoint::new([0.4, 2.6, 1.3]);
        let mut v = [1.0, 0.0, 0.0];
        let mut log_norm = 0.0;
        for c in 1..=400u64 {
            let (nx, w) = lifted_step(&field, x, v, schedule.cycle(c)).unwrap();
            let n = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
            log_norm += n.ln();
            v = [w[0] / n, w[1] / n, w[2] / n];
            x = nx;
        }
        assert!(log_norm / 400.0 > 0.05, "mean growth {}", log_norm / 400.0);
        let _ = flow_split(&field, 1, 0.1, x).unwrap();
    }
}
