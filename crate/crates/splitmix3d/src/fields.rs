//! Shear decompositions of volume-preserving torus fields.
//!
//! A decomposition is given by three 2π-periodic scalar profiles (f₁, f₂, f₃).
//! The three shear fields
//!
//! ```text
//! X₁(x) = (f₁(x₃), f₁'(x₃), 0)
//! X₂(x) = (0, f₂(x₁), f₂'(x₁))
//! X₃(x) = (f₃'(x₂), 0, f₃(x₂))
//! ```
//!
//! are each divergence-free and integrable in closed form because every X_i is
//! constant along its own trajectories (it depends only on a coordinate it
//! does not move). Their sum is the full field; with sine profiles of
//! amplitudes (A, B, C) the sum is the classic ABC flow.

use thiserror::Error;

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Maximum trig-polynomial degree accepted by constructors.
pub const MAX_DEGREE: u32 = 16;

#[derive(Debug, Error, PartialEq)]
pub enum FieldError {
    #[error("trig polynomial degree {0} exceeds the supported maximum {MAX_DEGREE}")]
    DegreeTooHigh(u32),
    #[error("profile is identically zero")]
    ZeroProfile,
    #[error("zero-separation check needs grid_size >= 1000, got {0}")]
    GridTooSmall(usize),
    #[error("component index {0} is not in 1..=3")]
    InvalidComponent(usize),
}

/// Value and first three derivatives of a scalar profile at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarJet {
    pub f: f64,
    pub df: f64,
    pub d2f: f64,
    pub d3f: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Term {
    k: u32,
    cos: f64,
    sin: f64,
}

/// A real 2π-periodic trigonometric polynomial a₀ + Σ_k (a_k cos kx + b_k sin kx).
///
/// Stored sparsely; evaluation returns the value together with three exact
/// derivatives, which the flow maps, Jacobians, and bracket formulas consume.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPoly {
    terms: Vec<Term>,
}

impl TrigPoly {
    /// Builds from harmonic terms (k, cos-coefficient, sin-coefficient).
    /// Terms with duplicate k are summed; zero terms are dropped.
    pub fn new(terms: &[(u32, f64, f64)]) -> Result<Self, FieldError> {
        let mut acc: std::collections::BTreeMap<u32, (f64, f64)> = std::collections::BTreeMap::new();
        for &(k, c, s) in terms {
            if k > MAX_DEGREE {
                return Err(FieldError::DegreeTooHigh(k));
            }
            let e = acc.entry(k).or_insert((0.0, 0.0));
            e.0 += c;
            e.1 += s;
        }
        let terms = acc
            .into_iter()
            .filter(|&(k, (c, s))| c != 0.0 || (s != 0.0 && k > 0))
            .map(|(k, (c, s))| Term { k, cos: c, sin: if k == 0 { 0.0 } else { s } })
            .collect();
        Ok(Self { terms })
    }

    /// amp·sin(x), the profile of the ABC decomposition.
    pub fn sine(amp: f64) -> Self {
        Self::new(&[(1, 0.0, amp)]).unwrap()
    }

    /// amp·cos(x).
    pub fn cosine(amp: f64) -> Self {
        Self::new(&[(1, amp, 0.0)]).unwrap()
    }

    /// The zero polynomial.
    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Highest harmonic present.
    pub fn degree(&self) -> u32 {
        self.terms.last().map_or(0, |t| t.k)
    }

    /// Value at x.
    pub fn eval(&self, x: f64) -> f64 {
        let mut f = 0.0;
        for t in &self.terms {
            let (s, c) = (t.k as f64 * x).sin_cos();
            f += t.cos * c + t.sin * s;
        }
        f
    }

    /// Value and first derivative at x (the pair every sub-flow needs).
    #[inline]
    pub fn eval_pair(&self, x: f64) -> (f64, f64) {
        let (mut f, mut df) = (0.0, 0.0);
        for t in &self.terms {
            let k = t.k as f64;
            let (s, c) = (k * x).sin_cos();
            f += t.cos * c + t.sin * s;
            df += k * (t.sin * c - t.cos * s);
        }
        (f, df)
    }

    /// Value and first three derivatives at x.
    pub fn eval_jet(&self, x: f64) -> ScalarJet {
        let mut j = ScalarJet { f: 0.0, df: 0.0, d2f: 0.0, d3f: 0.0 };
        for t in &self.terms {
            let k = t.k as f64;
            let (s, c) = (k * x).sin_cos();
            let (a, b) = (t.cos, t.sin);
            j.f += a * c + b * s;
            j.df += k * (b * c - a * s);
            j.d2f += k * k * (-a * c - b * s);
            j.d3f += k * k * k * (a * s - b * c);
        }
        j
    }

    /// The exact derivative polynomial.
    pub fn derivative(&self) -> Self {
        let terms = self
            .terms
            .iter()
            .filter(|t| t.k > 0)
            .map(|t| {
                let k = t.k as f64;
                Term { k: t.k, cos: k * t.sin, sin: -k * t.cos }
            })
            .collect();
        Self { terms }
    }

    /// Largest absolute value over a dense grid (sup norm up to grid error).
    pub fn sup_norm(&self, grid: usize) -> f64 {
        (0..grid)
            .map(|i| self.eval(i as f64 * TWO_PI / grid as f64).abs())
            .fold(0.0, f64::max)
    }

    /// All zeros in [0, 2π), located to ~1e-12.
    ///
    /// Sign-change zeros are bracketed on a dense grid and bisected. Zeros
    /// without a sign change (even order) are local extrema with value zero,
    /// so they are recovered as zeros of the derivative at which |f| is below
    /// `touch_tol` times the sup norm.
    pub fn zeros(&self, grid: usize, touch_tol: f64) -> Vec<f64> {
        if self.is_zero() {
            return Vec::new();
        }
        let scale = self.sup_norm(512).max(1e-300);
        let mut out = sign_change_zeros(|x| self.eval(x), self.degree(), grid);
        let deriv = self.derivative();
        if !deriv.is_zero() {
            for c in sign_change_zeros(|x| deriv.eval(x), deriv.degree(), grid) {
                if self.eval(c).abs() <= touch_tol * scale {
                    out.push(c);
                }
            }
        }
        merge_close_angles(out, 1e-10)
    }

    /// Zeros of the derivative (critical points), in [0, 2π).
    pub fn critical_points(&self, grid: usize, touch_tol: f64) -> Vec<f64> {
        self.derivative().zeros(grid, touch_tol)
    }
}

/// Bracketed sign-change zeros of a smooth 2π-periodic function.
fn sign_change_zeros(g: impl Fn(f64) -> f64, degree: u32, grid: usize) -> Vec<f64> {
    let n = grid.max(128 * (degree as usize + 1));
    let h = TWO_PI / n as f64;
    let vals: Vec<f64> = (0..n).map(|i| g(i as f64 * h)).collect();
    let mut zeros = Vec::new();
    for i in 0..n {
        let (a, b) = (vals[i], vals[(i + 1) % n]);
        if a == 0.0 {
            zeros.push(i as f64 * h);
        } else if a * b < 0.0 {
            let (mut lo, mut hi) = (i as f64 * h, (i + 1) as f64 * h);
            let mut glo = a;
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                let gm = g(mid);
                if glo * gm <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    glo = gm;
                }
            }
            zeros.push((0.5 * (lo + hi)).rem_euclid(TWO_PI));
        }
    }
    zeros
}

/// Deduplicates angles that coincide up to `tol` on the circle.
fn merge_close_angles(mut xs: Vec<f64>, tol: f64) -> Vec<f64> {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut out: Vec<f64> = Vec::with_capacity(xs.len());
    for x in xs {
        if out.iter().all(|&y| circle_dist(x, y) > tol) {
            out.push(x);
        }
    }
    out
}

/// Distance between two angles on the circle of circumference 2π.
pub fn circle_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TWO_PI);
    d.min(TWO_PI - d)
}

/// The three scalar profiles defining a shear decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionTriple {
    profiles: [TrigPoly; 3],
}

impl FunctionTriple {
    pub fn new(f1: TrigPoly, f2: TrigPoly, f3: TrigPoly) -> Result<Self, FieldError> {
        for f in [&f1, &f2, &f3] {
            if f.is_zero() {
                return Err(FieldError::ZeroProfile);
            }
        }
        Ok(Self { profiles: [f1, f2, f3] })
    }

    /// Sine profiles with amplitudes (a, b, c): the ABC decomposition.
    pub fn abc(a: f64, b: f64, c: f64) -> Self {
        Self::new(TrigPoly::sine(a), TrigPoly::sine(b), TrigPoly::sine(c)).unwrap()
    }

    /// Profile f_i, 1-based.
    pub fn profile(&self, i: usize) -> &TrigPoly {
        &self.profiles[i - 1]
    }

    /// True when every profile is a pure first-harmonic sine.
    pub fn is_pure_sine(&self) -> bool {
        self.profiles.iter().all(|f| {
            f.terms.len() == 1 && f.terms[0].k == 1 && f.terms[0].cos == 0.0
        })
    }
}

/// Which coordinate each shear field reads: X₁ reads x₃, X₂ reads x₁, X₃ reads x₂.
pub const DRIVER_COORD: [usize; 3] = [2, 0, 1];

/// The decomposition as vector fields on the torus.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitVectorField {
    pub triple: FunctionTriple,
}

impl SplitVectorField {
    pub fn new(triple: FunctionTriple) -> Self {
        Self { triple }
    }

    pub fn abc(a: f64, b: f64, c: f64) -> Self {
        Self::new(FunctionTriple::abc(a, b, c))
    }

    /// Shear field X_i at x, 1-based component index.
    pub fn eval_component(&self, i: usize, x: [f64; 3]) -> Result<[f64; 3], FieldError> {
        let j = match i {
            1 | 2 | 3 => self.triple.profile(i).eval_jet(x[DRIVER_COORD[i - 1]]),
            _ => return Err(FieldError::InvalidComponent(i)),
        };
        Ok(match i {
            1 => [j.f, j.df, 0.0],
            2 => [0.0, j.f, j.df],
            _ => [j.df, 0.0, j.f],
        })
    }

    /// Sum of the three shear fields at x.
    pub fn eval_full(&self, x: [f64; 3]) -> [f64; 3] {
        let j1 = self.triple.profile(1).eval_jet(x[2]);
        let j2 = self.triple.profile(2).eval_jet(x[0]);
        let j3 = self.triple.profile(3).eval_jet(x[1]);
        [j1.f + j3.df, j1.df + j2.f, j2.df + j3.f]
    }

    /// Jacobian of X_i at x (each column is a partial derivative).
    pub fn jacobian_component(&self, i: usize, x: [f64; 3]) -> Result<[[f64; 3]; 3], FieldError> {
        if !(1..=3).contains(&i) {
            return Err(FieldError::InvalidComponent(i));
        }
        let j = self.triple.profile(i).eval_jet(x[DRIVER_COORD[i - 1]]);
        let mut m = [[0.0; 3]; 3];
        match i {
            1 => {
                m[0][2] = j.df;
                m[1][2] = j.d2f;
            }
            2 => {
                m[1][0] = j.df;
                m[2][0] = j.d2f;
            }
            _ => {
                m[0][1] = j.d2f;
                m[2][1] = j.df;
            }
        }
        Ok(m)
    }
}

/// Verdict of the zero-separation check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

/// One separation condition: the smallest circle distance between two zero sets.
#[derive(Debug, Clone)]
pub struct SeparationCheck {
    /// Profile index (1-based) and which pair was compared:
    /// 0 for zeros(f) vs zeros(f'), 1 for zeros(f') vs zeros(f'').
    pub profile: usize,
    pub pair: usize,
    pub min_distance: f64,
    pub verdict: Verdict,
}

/// Result of `check_h1`: the six pairwise zero-set separations.
#[derive(Debug, Clone)]
pub struct H1Report {
    pub checks: Vec<SeparationCheck>,
    pub verdict: Verdict,
}

const H1_FAIL_TOL: f64 = 1e-9;
const H1_INCONCLUSIVE_TOL: f64 = 1e-6;
const H1_TOUCH_TOL: f64 = 1e-9;

/// Checks, for every profile f, that f and f' share no zero and that f' and
/// f'' share no zero. These separations make the shear decomposition
/// nondegenerate: wherever a profile vanishes its derivative does not, so the
/// split dynamics can always move every coordinate.
pub fn check_h1(triple: &FunctionTriple, grid_size: usize) -> Result<H1Report, FieldError> {
    if grid_size < 1000 {
        return Err(FieldError::GridTooSmall(grid_size));
    }
    let mut checks = Vec::with_capacity(6);
    let mut verdict = Verdict::Pass;
    for i in 1..=3 {
        let f = triple.profile(i);
        let d1 = f.derivative();
        let d2 = d1.derivative();
        let z0 = f.zeros(grid_size, H1_TOUCH_TOL);
        let z1 = d1.zeros(grid_size, H1_TOUCH_TOL);
        let z2 = d2.zeros(grid_size, H1_TOUCH_TOL);
        for (pair, (za, zb)) in [(0, (&z0, &z1)), (1, (&z1, &z2))] {
            let min_distance = min_circle_dist(za, zb);
            let v = if min_distance <= H1_FAIL_TOL {
                Verdict::Fail
            } else if min_distance <= H1_INCONCLUSIVE_TOL {
                Verdict::Inconclusive
            } else {
                Verdict::Pass
            };
            verdict = worst(verdict, v);
            checks.push(SeparationCheck { profile: i, pair, min_distance, verdict: v });
        }
    }
    Ok(H1Report { checks, verdict })
}

fn min_circle_dist(a: &[f64], b: &[f64]) -> f64 {
    let mut best = f64::INFINITY;
    for &x in a {
        for &y in b {
            best = best.min(circle_dist(x, y));
        }
    }
    best
}

fn worst(a: Verdict, b: Verdict) -> Verdict {
    use Verdict::*;
    match (a, b) {
        (Fail, _) | (_, Fail) => Fail,
        (Inconclusive, _) | (_, Inconclusive) => Inconclusive,
        _ => Pass,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn abc_full_field_matches_classic_formula() {
        let (a, b, c) = (1.0, 0.7, 1.3);
        let field = SplitVectorField::abc(a, b, c);
        for &x in &[[0.3, 1.1, 2.9], [5.0, 0.01, 4.4], [2.2, 3.3, 0.6]] {
            let v = field.eval_full(x);
            let expect = [
                a * x[2].sin() + c * x[1].cos(),
                a * x[2].cos() + b * x[0].sin(),
                b * x[0].cos() + c * x[1].sin(),
            ];
            for d in 0..3 {
                assert!((v[d] - expect[d]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn components_sum_to_full_field_and_are_divergence_free() {
        let field = SplitVectorField::new(
            FunctionTriple::new(
                TrigPoly::new(&[(1, 0.2, 1.0), (3, 0.0, -0.4)]).unwrap(),
                TrigPoly::new(&[(2, 0.5, 0.1)]).unwrap(),
                TrigPoly::new(&[(1, 0.0, 0.8), (2, 0.3, 0.0)]).unwrap(),
            )
            .unwrap(),
        );
        let x = [0.9, 4.2, 1.7];
        let full = field.eval_full(x);
        let mut sum = [0.0; 3];
        for i in 1..=3 {
            let v = field.eval_component(i, x).unwrap();
            for d in 0..3 {
                sum[d] += v[d];
            }
            // Divergence by central differences.
            let eps = 1e-5;
            let mut div = 0.0;
            for d in 0..3 {
                let mut xp = x;
                let mut xm = x;
                xp[d] += eps;
                xm[d] -= eps;
                div += (field.eval_component(i, xp).unwrap()[d]
                    - field.eval_component(i, xm).unwrap()[d])
                    / (2.0 * eps);
            }
            assert!(div.abs() < 1e-9, "component {i} divergence {div}");
        }
        for d in 0..3 {
            assert!((sum[d] - full[d]).abs() < 1e-14);
        }
    }

    #[test]
    fn component_index_out_of_range_is_rejected() {
        let field = SplitVectorField::abc(1.0, 1.0, 1.0);
        assert_eq!(field.eval_component(0, [0.0; 3]), Err(FieldError::InvalidComponent(0)));
        assert_eq!(field.eval_component(4, [0.0; 3]), Err(FieldError::InvalidComponent(4)));
    }

    #[test]
    fn degree_limit_is_enforced() {
        assert_eq!(
            TrigPoly::new(&[(17, 1.0, 0.0)]),
            Err(FieldError::DegreeTooHigh(17))
        );
        assert!(TrigPoly::new(&[(16, 1.0, 0.0)]).is_ok());
    }

    #[test]
    fn sine_zeros_and_critical_points() {
        let f = TrigPoly::sine(1.0);
        let z = f.zeros(2000, H1_TOUCH_TOL);
        assert_eq!(z.len(), 2);
        assert!(circle_dist(z[0], 0.0) < 1e-11 && circle_dist(z[1], std::f64::consts::PI) < 1e-11);
        let c = f.critical_points(2000, H1_TOUCH_TOL);
        assert_eq!(c.len(), 2);
        assert!(circle_dist(c[0], std::f64::consts::FRAC_PI_2) < 1e-11);
        assert!(circle_dist(c[1], 1.5 * std::f64::consts::PI) < 1e-11);
    }

    #[test]
    fn touching_zeros_are_detected() {
        // sin^2(x) = 1/2 - cos(2x)/2 vanishes at 0 and π without sign change.
        let f = TrigPoly::new(&[(0, 0.5, 0.0), (2, -0.5, 0.0)]).unwrap();
        let z = f.zeros(2000, H1_TOUCH_TOL);
        assert_eq!(z.len(), 2, "zeros found: {z:?}");
        assert!(circle_dist(z[0], 0.0) < 1e-9);
        assert!(circle_dist(z[1], std::f64::consts::PI) < 1e-9);
    }

    #[test]
    fn abc_triple_passes_separation_check() {
        let report = check_h1(&FunctionTriple::abc(1.0, 1.0, 1.0), 1000).unwrap();
        assert_eq!(report.verdict, Verdict::Pass);
        for c in &report.checks {
            assert!(c.min_distance > 1.0);
        }
    }

    #[test]
    fn squared_sine_profile_fails_separation_check() {
        // f = sin^2 shares the zeros 0, π with f' = sin(2x).
        let f = TrigPoly::new(&[(0, 0.5, 0.0), (2, -0.5, 0.0)]).unwrap();
        let triple = FunctionTriple::new(f, TrigPoly::sine(1.0), TrigPoly::sine(1.0)).unwrap();
        let report = check_h1(&triple, 1000).unwrap();
        assert_eq!(report.verdict, Verdict::Fail);
    }

    #[test]
    fn small_grid_is_rejected() {
        let t = FunctionTriple::abc(1.0, 1.0, 1.0);
        assert!(matches!(check_h1(&t, 999), Err(FieldError::GridTooSmall(999))));
    }

    proptest! {
        #[test]
        fn jet_matches_finite_differences(
            k1 in 1u32..=16, a1 in -2.0f64..2.0, b1 in -2.0f64..2.0,
            k2 in 1u32..=16, a2 in -2.0f64..2.0, b2 in -2.0f64..2.0,
            x in 0.0f64..TWO_PI,
        ) {
            let f = TrigPoly::new(&[(k1, a1, b1), (k2, a2, b2)]).unwrap();
            let j = f.eval_jet(x);
            let eps = 1e-6;
            let scale = 1.0 + (k1.max(k2) as f64).powi(3);
            let fd1 = (f.eval(x + eps) - f.eval(x - eps)) / (2.0 * eps);
            prop_assert!((j.df - fd1).abs() < 1e-6 * scale);
            let d = f.derivative();
            prop_assert!((d.eval(x) - j.df).abs() < 1e-10 * scale);
            prop_assert!((d.derivative().eval(x) - j.d2f).abs() < 1e-10 * scale);
            prop_assert!((d.derivative().derivative().eval(x) - j.d3f).abs() < 1e-9 * scale);
        }
    }
}
