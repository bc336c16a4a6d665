//! Random splitting of the shear decomposition.
//!
//! One cycle applies the three shear flows in order, each for an independent
//! exponentially distributed duration. Every sub-flow is available in closed
//! form for arbitrary real time, because the coordinate a shear field reads is
//! frozen by that same field; the cycle map and its exact Jacobian therefore
//! cost a handful of trig evaluations. The module also provides a QR
//! accumulator for long Jacobian products, a reference RK4 integrator for the
//! summed field, the operator-splitting convergence experiment, and an exact
//! planner that steers any start point to any target in at most two cycles.

use crate::fields::{FieldError, SplitVectorField, TrigPoly, DRIVER_COORD, TWO_PI};
use crate::rng::{stream_seed, CounterStream};
use nalgebra::Matrix3;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SplitError {
    #[error("mean switching time must be positive and finite, got {0}")]
    InvalidMean(f64),
    #[error("integrator step must satisfy 0 < step <= t, got step {step} with horizon {t}")]
    InvalidStep { step: f64, t: f64 },
    #[error("every splitting level must satisfy m >= 2, got {0}")]
    BadLevel(usize),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// A point on the flat 3-torus with side 2π; coordinates kept in [0, 2π).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TorusPoint(pub [f64; 3]);

impl TorusPoint {
    /// Wraps arbitrary coordinates into the fundamental domain.
    pub fn new(coords: [f64; 3]) -> Self {
        Self(coords.map(|c| c.rem_euclid(TWO_PI)))
    }

    pub fn coords(&self) -> [f64; 3] {
        self.0
    }

    /// Shortest representative of other - self, componentwise in (-π, π].
    pub fn log_map(&self, other: &TorusPoint) -> [f64; 3] {
        let mut d = [0.0; 3];
        for i in 0..3 {
            let mut w = (other.0[i] - self.0[i]).rem_euclid(TWO_PI);
            if w > std::f64::consts::PI {
                w -= TWO_PI;
            }
            d[i] = w;
        }
        d
    }

    /// Flat-torus distance (Euclidean length of the shortest representative).
    pub fn flat_dist(&self, other: &TorusPoint) -> f64 {
        let d = self.log_map(other);
        (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
    }
}

/// Supplies the sub-flow durations; index j counts single sub-flow
/// applications starting at 1, so cycle c uses indices 3c-2, 3c-1, 3c.
pub trait TauSource: Sync {
    fn tau(&self, j: u64) -> f64;

    /// The three durations of cycle c, 1-based.
    fn cycle(&self, c: u64) -> [f64; 3] {
        let base = 3 * (c - 1);
        [self.tau(base + 1), self.tau(base + 2), self.tau(base + 3)]
    }
}

/// The i.i.d. exponential switching schedule, addressable in O(1).
#[derive(Debug, Clone, Copy)]
pub struct SplitSchedule {
    pub seed: u64,
    pub mean: f64,
    stream: CounterStream,
}

impl SplitSchedule {
    pub fn new(seed: u64, mean: f64) -> Result<Self, SplitError> {
        if !(mean > 0.0 && mean.is_finite()) {
            return Err(SplitError::InvalidMean(mean));
        }
        Ok(Self { seed, mean, stream: CounterStream::new(seed) })
    }
}

impl TauSource for SplitSchedule {
    fn tau(&self, j: u64) -> f64 {
        debug_assert!(j >= 1, "switching times are indexed from 1");
        self.stream.exponential(j, self.mean)
    }
}

/// Repeats the same three durations every cycle (a negative control: the
/// composition is a fixed map, so no averaging over schedules takes place).
#[derive(Debug, Clone, Copy)]
pub struct FrozenSchedule {
    pub tau: [f64; 3],
}

impl TauSource for FrozenSchedule {
    fn tau(&self, j: u64) -> f64 {
        self.tau[((j - 1) % 3) as usize]
    }
}

/// Cycles through an explicit list of durations.
#[derive(Debug, Clone)]
pub struct FixedSchedule {
    pub times: Vec<f64>,
}

impl TauSource for FixedSchedule {
    fn tau(&self, j: u64) -> f64 {
        self.times[((j - 1) as usize) % self.times.len()]
    }
}

/// Closed-form flow of shear field i for time t (any sign), 1-based index.
pub fn flow_split(
    field: &SplitVectorField,
    i: usize,
    t: f64,
    x: TorusPoint,
) -> Result<TorusPoint, FieldError> {
    if !(1..=3).contains(&i) {
        return Err(FieldError::InvalidComponent(i));
    }
    Ok(TorusPoint::new(sub_flow(field, i, t, x.0)))
}

#[inline]
fn sub_flow(field: &SplitVectorField, i: usize, t: f64, x: [f64; 3]) -> [f64; 3] {
    let (f, df) = field.triple.profile(i).eval_pair(x[DRIVER_COORD[i - 1]]);
    match i {
        1 => [x[0] + t * f, x[1] + t * df, x[2]],
        2 => [x[0], x[1] + t * f, x[2] + t * df],
        _ => [x[0] + t * df, x[1], x[2] + t * f],
    }
}

/// Exact Jacobian of the time-t flow of shear field i, evaluated at the
/// starting point (the coordinate the field reads does not move, so the
/// Jacobian is constant along the trajectory). Unit triangular: det = 1.
pub fn jacobian_split(
    field: &SplitVectorField,
    i: usize,
    t: f64,
    x: TorusPoint,
) -> Result<Matrix3<f64>, FieldError> {
    if !(1..=3).contains(&i) {
        return Err(FieldError::InvalidComponent(i));
    }
    Ok(sub_jacobian(field, i, t, x.0))
}

#[inline]
fn sub_jacobian(field: &SplitVectorField, i: usize, t: f64, x: [f64; 3]) -> Matrix3<f64> {
    let j = field.triple.profile(i).eval_jet(x[DRIVER_COORD[i - 1]]);
    match i {
        1 => Matrix3::new(1.0, 0.0, t * j.df, 0.0, 1.0, t * j.d2f, 0.0, 0.0, 1.0),
        2 => Matrix3::new(1.0, 0.0, 0.0, t * j.df, 1.0, 0.0, t * j.d2f, 0.0, 1.0),
        _ => Matrix3::new(1.0, t * j.d2f, 0.0, 0.0, 1.0, 0.0, 0.0, t * j.df, 1.0),
    }
}

/// Outcome of one splitting cycle.
#[derive(Debug, Clone)]
pub struct SplitStepResult {
    pub end: TorusPoint,
    /// Jacobian of the cycle map at the start point, if requested.
    pub jacobian: Option<Matrix3<f64>>,
    /// Total physical time spent in the cycle.
    pub elapsed: f64,
}

/// Applies one cycle (fields 1, 2, 3 in order) with the given durations.
pub fn splitting_step(
    field: &SplitVectorField,
    x: TorusPoint,
    tau: [f64; 3],
    want_jacobian: bool,
) -> SplitStepResult {
    let mut p = x.0;
    let mut jac = want_jacobian.then(Matrix3::identity);
    for i in 1..=3 {
        if let Some(j) = jac.as_mut() {
            *j = sub_jacobian(field, i, tau[i - 1], p) * *j;
        }
        p = sub_flow(field, i, tau[i - 1], p);
        for c in &mut p {
            *c = c.rem_euclid(TWO_PI);
        }
    }
    SplitStepResult {
        end: TorusPoint(p),
        jacobian: jac,
        elapsed: tau.iter().sum(),
    }
}

/// A recorded splitting trajectory.
#[derive(Debug, Clone)]
pub struct Orbit {
    /// Positions after 0, 1, ..., m cycles.
    pub points: Vec<TorusPoint>,
    /// ln of the Frobenius norm of the accumulated Jacobian at each cycle,
    /// computed with per-cycle renormalization so it never overflows.
    pub log_jnorm: Vec<f64>,
}

/// Runs m cycles from x0 under the given schedule.
pub fn splitting_orbit(
    field: &SplitVectorField,
    x0: TorusPoint,
    source: &impl TauSource,
    m: usize,
) -> Orbit {
    let mut points = Vec::with_capacity(m + 1);
    let mut log_jnorm = Vec::with_capacity(m + 1);
    points.push(x0);
    log_jnorm.push(3.0f64.sqrt().ln());
    let mut x = x0;
    let mut w = Matrix3::<f64>::identity();
    let mut s = 0.0;
    for c in 1..=m as u64 {
        let r = splitting_step(field, x, source.cycle(c), true);
        x = r.end;
        w = r.jacobian.unwrap() * w;
        let n = w.norm();
        s += n.ln();
        w /= n;
        points.push(x);
        log_jnorm.push(s);
    }
    Orbit { points, log_jnorm }
}

/// Accumulates a product of 3x3 matrices in QR form, keeping the orthogonal
/// factor and the logs of the diagonal so determinants and singular-value
/// growth stay accurate long after the raw product over- or underflows.
#[derive(Debug, Clone)]
pub struct QrAccumulator {
    q: Matrix3<f64>,
    log_diag: [f64; 3],
    pushes: u64,
}

impl Default for QrAccumulator {
    fn default() -> Self {
        Self::new()
    }
}

impl QrAccumulator {
    pub fn new() -> Self {
        Self { q: Matrix3::identity(), log_diag: [0.0; 3], pushes: 0 }
    }

    /// Multiplies the accumulated product on the left by `a`.
    pub fn push(&mut self, a: &Matrix3<f64>) {
        let qr = (a * self.q).qr();
        let mut q = qr.q();
        let r = qr.r();
        for d in 0..3 {
            let rd = r[(d, d)];
            if rd < 0.0 {
                for row in 0..3 {
                    q[(row, d)] = -q[(row, d)];
                }
            }
            self.log_diag[d] += rd.abs().ln();
        }
        self.q = q;
        self.pushes += 1;
    }

    /// ln of the diagonal growth factors, ordered as produced by QR.
    pub fn log_diagonal(&self) -> [f64; 3] {
        self.log_diag
    }

    /// Signed determinant of the accumulated product.
    pub fn det(&self) -> f64 {
        self.q.determinant() * self.log_diag.iter().sum::<f64>().exp()
    }

    /// ln |det| of the accumulated product.
    pub fn log_det_magnitude(&self) -> f64 {
        self.log_diag.iter().sum()
    }

    pub fn orthogonal(&self) -> &Matrix3<f64> {
        &self.q
    }

    pub fn pushes(&self) -> u64 {
        self.pushes
    }
}

/// RK4 integration of the summed field for time t with the given step.
pub fn deterministic_flow(
    field: &SplitVectorField,
    x0: TorusPoint,
    t: f64,
    step: f64,
) -> Result<TorusPoint, SplitError> {
    if t == 0.0 {
        return Ok(x0);
    }
    if !(step > 0.0 && step <= t) {
        return Err(SplitError::InvalidStep { step, t });
    }
    let n = (t / step).floor() as usize;
    let last = t - n as f64 * step;
    let mut x = x0.0;
    for _ in 0..n {
        x = rk4_step(field, x, step);
    }
    if last > 1e-14 {
        x = rk4_step(field, x, last);
    }
    Ok(TorusPoint::new(x))
}

fn rk4_step(field: &SplitVectorField, x: [f64; 3], h: f64) -> [f64; 3] {
    let add = |a: [f64; 3], b: [f64; 3], s: f64| {
        [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]]
    };
    let k1 = field.eval_full(x);
    let k2 = field.eval_full(add(x, k1, 0.5 * h));
    let k3 = field.eval_full(add(x, k2, 0.5 * h));
    let k4 = field.eval_full(add(x, k3, h));
    let mut out = x;
    for d in 0..3 {
        out[d] = (x[d] + h / 6.0 * (k1[d] + 2.0 * k2[d] + 2.0 * k3[d] + k4[d])).rem_euclid(TWO_PI);
    }
    out
}

/// Test dictionary for the operator-splitting convergence experiment: the
/// twenty lowest trig modes, each with unit L² norm under the normalized
/// volume.
pub const DICT_WAVEVECTORS: [[i32; 3]; 10] = [
    [1, 0, 0],
    [0, 1, 0],
    [0, 0, 1],
    [1, 1, 0],
    [1, 0, 1],
    [0, 1, 1],
    [1, 1, 1],
    [2, 0, 0],
    [0, 2, 0],
    [0, 0, 2],
];

/// Largest dictionary discrepancy between two endpoint clouds:
/// max over test functions g of max over points |g(a_i) - g(b_i)|.
fn dictionary_sup(a: &[TorusPoint], b: &[TorusPoint]) -> f64 {
    let sqrt2 = std::f64::consts::SQRT_2;
    let mut sup: f64 = 0.0;
    for (pa, pb) in a.iter().zip(b) {
        for k in &DICT_WAVEVECTORS {
            let phase = |p: &TorusPoint| {
                k[0] as f64 * p.0[0] + k[1] as f64 * p.0[1] + k[2] as f64 * p.0[2]
            };
            let (sa, ca) = phase(pa).sin_cos();
            let (sb, cb) = phase(pb).sin_cos();
            sup = sup.max(sqrt2 * (ca - cb).abs()).max(sqrt2 * (sa - sb).abs());
        }
    }
    sup
}

/// Convergence of random splitting to the deterministic flow of the summed
/// field, per level and per trial.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    /// Splitting levels m; level m runs m² cycles with mean duration t/m².
    pub levels: Vec<usize>,
    /// Per-level dictionary-sup errors, one entry per trial.
    pub sup_errors: Vec<Vec<f64>>,
    /// Per-level medians of the trial errors.
    pub medians: Vec<f64>,
    /// Log-log slope of median error against level.
    pub slope: f64,
}

/// Grid side used to probe the state space in the convergence experiment.
pub const CONVERGENCE_GRID: usize = 17;

/// For each level m, runs m² splitting cycles with i.i.d. exponential
/// durations of mean t/m² and measures how far the random composition is from
/// the deterministic time-t flow, uniformly over a coarse grid of starting
/// points and a fixed dictionary of smooth test functions.
pub fn convergence_experiment(
    field: &SplitVectorField,
    t: f64,
    levels: &[usize],
    trials: usize,
    seed: u64,
) -> Result<ConvergenceReport, SplitError> {
    for &m in levels {
        if m < 2 {
            return Err(SplitError::BadLevel(m));
        }
    }
    let g = CONVERGENCE_GRID;
    let grid: Vec<TorusPoint> = (0..g * g * g)
        .map(|idx| {
            let (i, j, k) = (idx / (g * g), (idx / g) % g, idx % g);
            TorusPoint::new([
                i as f64 * TWO_PI / g as f64,
                j as f64 * TWO_PI / g as f64,
                k as f64 * TWO_PI / g as f64,
            ])
        })
        .collect();
    let reference: Vec<TorusPoint> = grid
        .par_iter()
        .map(|&x| deterministic_flow(field, x, t, (t / 64.0).min(1e-3)).unwrap())
        .collect();

    let mut sup_errors = Vec::with_capacity(levels.len());
    for (li, &m) in levels.iter().enumerate() {
        let cycles = m * m;
        let mean = t / cycles as f64;
        let errs: Vec<f64> = (0..trials)
            .into_par_iter()
            .map(|tr| {
                let s = stream_seed(seed, (li as u64) << 32 | tr as u64);
                let schedule = SplitSchedule::new(s, mean).unwrap();
                let ends: Vec<TorusPoint> = grid
                    .iter()
                    .map(|&x| {
                        let mut p = x;
                        for c in 1..=cycles as u64 {
                            p = splitting_step(field, p, schedule.cycle(c), false).end;
                        }
                        p
                    })
                    .collect();
                dictionary_sup(&ends, &reference)
            })
            .collect();
        sup_errors.push(errs);
    }

    let medians: Vec<f64> = sup_errors
        .iter()
        .map(|errs| {
            let mut v = errs.to_vec();
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            if v.len() % 2 == 1 {
                v[v.len() / 2]
            } else {
                0.5 * (v[v.len() / 2 - 1] + v[v.len() / 2])
            }
        })
        .collect();

    // OLS slope of ln(median) against ln(m).
    let xs: Vec<f64> = levels.iter().map(|&m| (m as f64).ln()).collect();
    let ys: Vec<f64> = medians.iter().map(|&e| e.max(1e-300).ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };

    Ok(ConvergenceReport { levels: levels.to_vec(), sup_errors, medians, slope })
}

/// A steering plan: at most two cycles of nonnegative durations that carry
/// the start point onto the target.
#[derive(Debug, Clone, Serialize)]
pub struct SteerPlan {
    pub cycles: Vec<[f64; 3]>,
    /// Endpoint reached when the plan is replayed exactly.
    pub endpoint: TorusPoint,
    /// Flat-torus distance between the endpoint and the target.
    pub error: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum SteerError {
    #[error("no steering branch produced a verified plan for this start/target pair")]
    NoBranch,
}

/// Degeneracy threshold: a profile value this small is treated as zero when
/// choosing a steering branch.
pub const STEER_DEGENERACY_TOL: f64 = 1e-12;
/// A plan is accepted only if replaying it lands within this distance.
pub const STEER_VERIFY_TOL: f64 = 1e-9;

/// Smallest nonnegative duration τ with τ·speed ≡ delta (mod 2π).
///
/// A shear coordinate moving at constant speed revisits every value with
/// period 2π/|speed|; this picks the first nonnegative visit time.
pub fn wrap_div(delta: f64, speed: f64) -> Option<f64> {
    if speed.abs() < STEER_DEGENERACY_TOL || !speed.is_finite() {
        return None;
    }
    let period = TWO_PI / speed.abs();
    Some((delta / speed).rem_euclid(period))
}

fn replay(field: &SplitVectorField, x: TorusPoint, cycles: &[[f64; 3]]) -> TorusPoint {
    let mut p = x;
    for &tau in cycles {
        p = splitting_step(field, p, tau, false).end;
    }
    p
}

/// Critical point of f where |f| is largest (ties broken by smallest angle).
fn peak_critical(f: &TrigPoly) -> Option<f64> {
    let mut best: Option<(f64, f64)> = None;
    for c in f.critical_points(2000, 1e-9) {
        let v = f.eval(c).abs();
        match best {
            Some((bv, bc)) if v < bv || (v == bv && c >= bc) => {}
            _ => best = Some((v, c)),
        }
    }
    best.map(|(_, c)| c)
}

/// One-cycle plan: the first two durations follow from the target's first two
/// coordinates once the third duration is fixed, so the remaining defect in
/// the third coordinate is a scalar function of τ₃ that a scan-and-bisect
/// root-find drives to zero.
fn plan_single_cycle(
    field: &SplitVectorField,
    x: TorusPoint,
    y: TorusPoint,
) -> Option<Vec<[f64; 3]>> {
    let [x1, x2, x3] = x.0;
    let [y1, y2, y3] = y.0;
    let (f1x3, df1x3) = field.triple.profile(1).eval_pair(x3);
    if f1x3.abs() <= STEER_DEGENERACY_TOL {
        return None;
    }
    let (f3y2, df3y2) = field.triple.profile(3).eval_pair(y2);
    let f2 = field.triple.profile(2);

    let residual = |t3: f64| -> Option<(f64, [f64; 3])> {
        let t1 = wrap_div(y1 - x1 - t3 * df3y2, f1x3)?;
        let a1 = x1 + t1 * f1x3;
        let (f2a1, df2a1) = f2.eval_pair(a1);
        if f2a1.abs() <= 1e-9 {
            return None;
        }
        let t2 = wrap_div(y2 - x2 - t1 * df1x3, f2a1)?;
        let end3 = x3 + t2 * df2a1 + t3 * f3y2;
        let mut g = (end3 - y3).rem_euclid(TWO_PI);
        if g > std::f64::consts::PI {
            g -= TWO_PI;
        }
        Some((g, [t1, t2, t3]))
    };

    let horizon = 6.0 * TWO_PI / f3y2.abs().max(0.25);
    let samples = 4096;
    let mut prev: Option<(f64, f64)> = None;
    let mut candidates: Vec<[f64; 3]> = Vec::new();
    for i in 0..=samples {
        let t3 = horizon * i as f64 / samples as f64;
        let here = residual(t3).map(|(g, _)| (t3, g));
        if let (Some((ta, ga)), Some((tb, gb))) = (prev, here) {
            if ga == 0.0 || ga * gb < 0.0 {
                let (mut lo, mut hi, mut glo) = (ta, tb, ga);
                for _ in 0..70 {
                    let mid = 0.5 * (lo + hi);
                    match residual(mid) {
                        Some((gm, _)) => {
                            if glo * gm <= 0.0 {
                                hi = mid;
                            } else {
                                lo = mid;
                                glo = gm;
                            }
                        }
                        None => break,
                    }
                }
                if let Some((_, taus)) = residual(0.5 * (lo + hi)) {
                    if replay(field, x, &[taus]).flat_dist(&y) <= STEER_VERIFY_TOL {
                        candidates.push(taus);
                    }
                }
            }
        }
        prev = here;
        if candidates.len() >= 4 {
            break;
        }
    }
    candidates.first().map(|&taus| vec![taus])
}

/// Two-cycle plan through a midpoint whose coordinates sit at critical points
/// of the profiles, so the cross-shear side effects vanish and every duration
/// has a closed form.
fn plan_two_cycle(field: &SplitVectorField, x: TorusPoint, y: TorusPoint) -> Option<Vec<[f64; 3]>> {
    let [x1, x2, x3] = x.0;
    let [y1, y2, y3] = y.0;
    let f1 = field.triple.profile(1);
    let f2 = field.triple.profile(2);
    let f3 = field.triple.profile(3);
    let (f1x3, df1x3) = f1.eval_pair(x3);
    if f1x3.abs() <= STEER_DEGENERACY_TOL {
        return None;
    }
    let c1 = peak_critical(f1)?;
    let c2 = peak_critical(f2)?;
    let c3 = peak_critical(f3)?;
    let (f3y2, df3y2) = f3.eval_pair(y2);

    let (v, cycle2) = if df3y2.abs() > STEER_DEGENERACY_TOL {
        // Land on the target's second coordinate from the midpoint, then let
        // the third shear finish both remaining coordinates at once.
        let t6 = wrap_div(y1 - c2, df3y2)?;
        let v3 = y3 - t6 * f3y2;
        let t5 = wrap_div(y2 - c3, f2.eval(c2))?;
        ([c2, c3, v3], [0.0, t5, t6])
    } else {
        // The third shear cannot move the first coordinate here, but its own
        // coordinate still moves at speed f₃(y₂), nonzero by zero separation.
        let t6 = wrap_div(y3 - c1, f3y2)?;
        let t4 = wrap_div(y1 - c2, f1.eval(c1))?;
        ([c2, y2, c1], [t4, 0.0, t6])
    };

    let t1 = wrap_div(v[0] - x1, f1x3)?;
    let t2 = wrap_div(v[1] - x2 - t1 * df1x3, f2.eval(v[0]))?;
    let t3 = wrap_div(v[2] - x3, f3.eval(v[1]))?;
    Some(vec![[t1, t2, t3], cycle2])
}

/// Plans for starts where the first profile vanishes at x₃ so the first
/// coordinate cannot be moved directly.
fn plan_degenerate(field: &SplitVectorField, x: TorusPoint, y: TorusPoint) -> Vec<Vec<[f64; 3]>> {
    let [_, x2, x3] = x.0;
    let x1 = x.0[0];
    let [y1, y2, y3] = y.0;
    let f1 = field.triple.profile(1);
    let f2 = field.triple.profile(2);
    let f3 = field.triple.profile(3);
    let (_, df1x3) = f1.eval_pair(x3);
    let (f3y2, df3y2) = f3.eval_pair(y2);
    let (f1y3, df1y3) = f1.eval_pair(y3);
    let mut plans = Vec::new();

    // Exact branch for targets whose coordinates sit at profile extremizers:
    // move the second coordinate with the first shear's vertical speed, the
    // third with the third shear, then a second cycle fixes the first.
    if df3y2.abs() <= 1e-10
        && df1y3.abs() <= 1e-10
        && f3y2.abs() > STEER_DEGENERACY_TOL
        && f1y3.abs() > STEER_DEGENERACY_TOL
        && df1x3.abs() > STEER_DEGENERACY_TOL
    {
        if let (Some(t1), Some(t3)) = (wrap_div(y2 - x2, df1x3), wrap_div(y3 - x3, f3y2)) {
            let cycle1 = [t1, 0.0, t3];
            let mid = replay(field, x, &[cycle1]);
            let f1m = f1.eval(mid.0[2]);
            if let Some(t4) = wrap_div(y1 - mid.0[0], f1m) {
                plans.push(vec![cycle1, [t4, 0.0, 0.0]]);
            }
        }
    }

    // Mobilizing branch: spend the first cycle carrying x₃ onto the first
    // profile's peak critical point, then solve a single cycle from there.
    if let Some(c1) = peak_critical(f1) {
        let mut movers: Vec<[f64; 3]> = Vec::new();
        let (_, df2x1) = f2.eval_pair(x1);
        let (f3x2, _) = f3.eval_pair(x2);
        if let Some(t2) = wrap_div(c1 - x3, df2x1) {
            movers.push([0.0, t2, 0.0]);
        }
        if let Some(t3) = wrap_div(c1 - x3, f3x2) {
            movers.push([0.0, 0.0, t3]);
        }
        if let Some(c3) = peak_critical(f3) {
            if let Some(t1) = wrap_div(c3 - x2, df1x3) {
                if let Some(t3) = wrap_div(c1 - x3, f3.eval(c3)) {
                    movers.push([t1, 0.0, t3]);
                }
            }
        }
        for mover in movers {
            let mid = replay(field, x, &[mover]);
            if let Some(mut rest) = plan_single_cycle(field, mid, y) {
                let mut plan = vec![mover];
                plan.append(&mut rest);
                plans.push(plan);
            }
        }
    }
    plans
}

/// Finds at most two cycles of nonnegative durations carrying x to y, exactly
/// up to floating-point error. Every candidate branch is verified by replaying
/// it through the actual cycle map before being returned.
pub fn steer(
    field: &SplitVectorField,
    x: TorusPoint,
    y: TorusPoint,
) -> Result<SteerPlan, SteerError> {
    let finish = |cycles: Vec<[f64; 3]>| -> Option<SteerPlan> {
        if cycles.iter().any(|c| c.iter().any(|&t| !(t >= 0.0) || !t.is_finite())) {
            return None;
        }
        let endpoint = replay(field, x, &cycles);
        let error = endpoint.flat_dist(&y);
        (error <= STEER_VERIFY_TOL).then_some(SteerPlan { cycles, endpoint, error })
    };

    if x.flat_dist(&y) <= STEER_VERIFY_TOL {
        return Ok(SteerPlan { cycles: Vec::new(), endpoint: x, error: x.flat_dist(&y) });
    }
    if let Some(plan) = plan_single_cycle(field, x, y).and_then(&finish) {
        return Ok(plan);
    }
    if let Some(plan) = plan_two_cycle(field, x, y).and_then(&finish) {
        return Ok(plan);
    }
    for candidate in plan_degenerate(field, x, y) {
        if let Some(plan) = finish(candidate) {
            return Ok(plan);
        }
    }
    Err(SteerError::NoBranch)
}
