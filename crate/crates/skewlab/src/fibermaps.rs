//! Orientation-preserving interval diffeomorphisms into the interior of
//! [0,1]: exact affine and Moebius families (closed under composition),
//! plus blackbox maps given by evaluator/derivative closures or monotone
//! tables.

use std::sync::Arc;

use crate::error::{Result, SkewError};

/// Tolerance on `|multiplier - 1|` below which a fixed point is flagged
/// parabolic instead of being classified.
pub const PARABOLIC_TOL: f64 = 1e-8;

/// Grid resolution for blackbox fixed-point bracketing.
const BLACKBOX_GRID: usize = 1 << 20;

const VALIDATION_GRID: usize = 1024;

/// An increasing map of [0,1] strictly into (0,1).
#[derive(Clone)]
pub enum FiberMap {
    /// `x -> offset + slope * x`
    Affine { offset: f64, slope: f64 },
    /// `x -> (a x + b) / (c x + d)`, increasing branch.
    Moebius { a: f64, b: f64, c: f64, d: f64 },
    Blackbox(BlackboxMap),
}

#[derive(Clone)]
pub struct BlackboxMap {
    eval: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    deriv: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for FiberMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FiberMap::Affine { offset, slope } => {
                write!(f, "Affine({} + {}*x)", offset, slope)
            }
            FiberMap::Moebius { a, b, c, d } => {
                write!(f, "Moebius(({}x + {})/({}x + {}))", a, b, c, d)
            }
            FiberMap::Blackbox(_) => write!(f, "Blackbox"),
        }
    }
}

/// A fixed point of a fiber map (or of a composed return map).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPoint {
    pub location: f64,
    pub multiplier: f64,
    pub kind: FixedPointKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixedPointKind {
    Attracting,
    Repelling,
    /// `|multiplier - 1| < PARABOLIC_TOL`, or a suspected tangency found
    /// without a sign change. Flagged rather than silently classified;
    /// genericity condition 1 keys off this.
    Parabolic,
}

fn classify(multiplier: f64) -> FixedPointKind {
    if (multiplier - 1.0).abs() < PARABOLIC_TOL {
        FixedPointKind::Parabolic
    } else if multiplier.abs() < 1.0 {
        FixedPointKind::Attracting
    } else {
        FixedPointKind::Repelling
    }
}

impl FiberMap {
    pub fn affine(offset: f64, slope: f64) -> Result<Self> {
        if slope <= 0.0 {
            return Err(SkewError::Input(format!("affine slope {} must be positive", slope)));
        }
        let m = FiberMap::Affine { offset, slope };
        m.check_into_interior()?;
        Ok(m)
    }

    pub fn moebius(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        if d <= 0.0 || c + d <= 0.0 {
            return Err(SkewError::Input(
                "moebius denominator must be positive on [0,1]".into(),
            ));
        }
        if a * d - b * c <= 0.0 {
            return Err(SkewError::Input("moebius map must be increasing (ad - bc > 0)".into()));
        }
        let m = FiberMap::Moebius { a, b, c, d };
        m.check_into_interior()?;
        Ok(m)
    }

    /// Builds a blackbox map from closures, validating monotonicity and
    /// the into-interior property on a grid of `VALIDATION_GRID` points.
    pub fn blackbox<F, G>(eval: F, deriv: G) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let m = FiberMap::Blackbox(BlackboxMap { eval: Arc::new(eval), deriv: Arc::new(deriv) });
        m.check_into_interior()?;
        for i in 0..=VALIDATION_GRID {
            let x = i as f64 / VALIDATION_GRID as f64;
            if m.deriv(x) <= 0.0 {
                return Err(SkewError::Input(format!(
                    "blackbox map has non-positive derivative at x = {}",
                    x
                )));
            }
        }
        Ok(m)
    }

    /// Builds a blackbox map from a monotone table via Fritsch-Carlson
    /// monotone cubic interpolation. The table must cover [0,1].
    pub fn monotone_table(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        let interp = MonotoneCubic::new(xs, ys)?;
        let d = interp.clone();
        FiberMap::blackbox(move |x| interp.eval(x), move |x| d.deriv(x))
    }

    fn check_into_interior(&self) -> Result<()> {
        let f0 = self.eval(0.0);
        let f1 = self.eval(1.0);
        if !(f0 > 0.0) || !(f1 < 1.0) {
            return Err(SkewError::Input(format!(
                "map must take [0,1] strictly inside (0,1): f(0) = {}, f(1) = {}",
                f0, f1
            )));
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            FiberMap::Affine { offset, slope } => offset + slope * x,
            FiberMap::Moebius { a, b, c, d } => (a * x + b) / (c * x + d),
            FiberMap::Blackbox(bb) => (bb.eval)(x),
        }
    }

    pub fn deriv(&self, x: f64) -> f64 {
        match self {
            FiberMap::Affine { slope, .. } => *slope,
            FiberMap::Moebius { a, b, c, d } => {
                let den = c * x + d;
                (a * d - b * c) / (den * den)
            }
            FiberMap::Blackbox(bb) => (bb.deriv)(x),
        }
    }

    /// Image of `[lo, hi]`; monotonicity makes endpoint images sufficient.
    pub fn map_interval(&self, lo: f64, hi: f64) -> (f64, f64) {
        debug_assert!(lo <= hi);
        (self.eval(lo), self.eval(hi))
    }

    /// Solves `f(x) = y`. Errors when `y` lies outside `[f(0), f(1)]`.
    pub fn invert_point(&self, y: f64) -> Result<f64> {
        let (lo, hi) = (self.eval(0.0), self.eval(1.0));
        if y < lo || y > hi {
            return Err(SkewError::InverseDomain(y, lo, hi));
        }
        match self {
            FiberMap::Affine { offset, slope } => Ok((y - offset) / slope),
            FiberMap::Moebius { a, b, c, d } => Ok((d * y - b) / (a - c * y)),
            FiberMap::Blackbox(_) => {
                let mut lo_x = 0.0;
                let mut hi_x = 1.0;
                while hi_x - lo_x > 1e-13 {
                    let mid = 0.5 * (lo_x + hi_x);
                    if self.eval(mid) < y {
                        lo_x = mid;
                    } else {
                        hi_x = mid;
                    }
                }
                Ok(0.5 * (lo_x + hi_x))
            }
        }
    }

    /// Composition `then . self` (apply `self` first). Affine and Moebius
    /// compose with exact coefficients; anything involving a blackbox map
    /// becomes a blackbox with chain-rule derivative.
    pub fn compose(&self, then: &FiberMap) -> FiberMap {
        match (self, then) {
            (
                FiberMap::Affine { offset: o1, slope: s1 },
                FiberMap::Affine { offset: o2, slope: s2 },
            ) => FiberMap::Affine { offset: o2 + s2 * o1, slope: s2 * s1 },
            (first, second) if first.as_moebius().is_some() && second.as_moebius().is_some() => {
                let (a1, b1, c1, d1) = first.as_moebius().unwrap();
                let (a2, b2, c2, d2) = second.as_moebius().unwrap();
                // Matrix product M2 * M1 acting projectively.
                FiberMap::Moebius {
                    a: a2 * a1 + b2 * c1,
                    b: a2 * b1 + b2 * d1,
                    c: c2 * a1 + d2 * c1,
                    d: c2 * b1 + d2 * d1,
                }
            }
            (first, second) => {
                let f = first.clone();
                let g = second.clone();
                let fd = first.clone();
                let gd = second.clone();
                FiberMap::Blackbox(BlackboxMap {
                    eval: Arc::new(move |x| g.eval(f.eval(x))),
                    deriv: Arc::new(move |x| gd.deriv(fd.eval(x)) * fd.deriv(x)),
                })
            }
        }
    }

    fn as_moebius(&self) -> Option<(f64, f64, f64, f64)> {
        match *self {
            FiberMap::Affine { offset, slope } => Some((slope, offset, 0.0, 1.0)),
            FiberMap::Moebius { a, b, c, d } => Some((a, b, c, d)),
            FiberMap::Blackbox(_) => None,
        }
    }

    /// All solutions of `f(x) = x` in [0,1], classified by multiplier.
    /// Closed form for affine and Moebius; sign-change bracketing on a
    /// dyadic grid for blackbox maps, with near-tangencies reported as
    /// parabolic rather than skipped.
    pub fn fixed_points(&self) -> Vec<FixedPoint> {
        match self {
            FiberMap::Affine { offset, slope } => {
                // slope < 1 is forced by offset > 0 and offset + slope < 1.
                let x = offset / (1.0 - slope);
                if (0.0..=1.0).contains(&x) {
                    vec![FixedPoint { location: x, multiplier: *slope, kind: classify(*slope) }]
                } else {
                    vec![]
                }
            }
            FiberMap::Moebius { a, b, c, d } => {
                // f(x) = x  <=>  c x^2 + (d - a) x - b = 0
                let roots = solve_quadratic(*c, *d - *a, -*b);
                roots
                    .into_iter()
                    .filter(|x| (0.0..=1.0).contains(x))
                    .map(|x| {
                        let m = self.deriv(x);
                        FixedPoint { location: x, multiplier: m, kind: classify(m) }
                    })
                    .collect()
            }
            FiberMap::Blackbox(_) => self.blackbox_fixed_points(),
        }
    }

    fn blackbox_fixed_points(&self) -> Vec<FixedPoint> {
        let n = BLACKBOX_GRID;
        let h = 1.0 / n as f64;
        let mut points: Vec<FixedPoint> = Vec::new();
        let mut prev_x = 0.0;
        let mut prev_g = self.eval(0.0);
        for i in 1..=n {
            let x = i as f64 * h;
            let g = self.eval(x) - x;
            if (prev_g > 0.0 && g <= 0.0) || (prev_g < 0.0 && g >= 0.0) {
                let root = bisect_root(|t| self.eval(t) - t, prev_x, x);
                let m = self.deriv(root);
                points.push(FixedPoint { location: root, multiplier: m, kind: classify(m) });
            } else if prev_g.abs() < 1e-10 && points.last().map_or(true, |p| {
                (p.location - prev_x).abs() > 2.0 * h
            }) {
                // Tangency without sign change: suspected parabolic point.
                let m = self.deriv(prev_x);
                points.push(FixedPoint {
                    location: prev_x,
                    multiplier: m,
                    kind: FixedPointKind::Parabolic,
                });
            }
            prev_x = x;
            prev_g = g;
        }
        points.dedup_by(|a, b| (a.location - b.location).abs() < 1e-9);
        points
    }
}

/// Numerically stable real roots of `a x^2 + b x + c = 0`, ascending.
fn solve_quadratic(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a.abs() < 1e-300 {
        if b.abs() < 1e-300 {
            return vec![];
        }
        return vec![-c / b];
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return vec![];
    }
    let sq = disc.sqrt();
    let q = -0.5 * (b + b.signum() * sq);
    let mut roots = if q == 0.0 {
        vec![0.0, 0.0]
    } else {
        vec![q / a, c / q]
    };
    roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
    roots
}

fn bisect_root<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    if flo == 0.0 {
        return lo;
    }
    let positive_left = flo > 0.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == positive_left {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Fritsch-Carlson monotone cubic interpolant on a strictly increasing table.
#[derive(Clone)]
struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(SkewError::Input("table needs at least two (x, y) rows".into()));
        }
        if (xs[0] - 0.0).abs() > 1e-12 || (xs[xs.len() - 1] - 1.0).abs() > 1e-12 {
            return Err(SkewError::Input("table must cover x = 0 .. 1".into()));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) || ys.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SkewError::Input("table must be strictly increasing in x and y".into()));
        }
        let n = xs.len();
        let deltas: Vec<f64> =
            (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])).collect();
        let mut slopes = vec![0.0; n];
        slopes[0] = deltas[0];
        slopes[n - 1] = deltas[n - 2];
        for i in 1..n - 1 {
            slopes[i] = 0.5 * (deltas[i - 1] + deltas[i]);
        }
        // Clamp to the Fritsch-Carlson monotonicity region.
        for i in 0..n - 1 {
            let alpha = slopes[i] / deltas[i];
            let beta = slopes[i + 1] / deltas[i];
            let s = (alpha * alpha + beta * beta).sqrt();
            if s > 3.0 {
                let tau = 3.0 / s;
                slopes[i] = tau * alpha * deltas[i];
                slopes[i + 1] = tau * beta * deltas[i];
            }
        }
        Ok(Self { xs, ys, slopes })
    }

    fn segment(&self, x: f64) -> usize {
        match self.xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(self.xs.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.xs.len() - 2),
        }
    }

    fn eval(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (y0, y1) = (self.ys[i], self.ys[i + 1]);
        let (m0, m1) = (self.slopes[i] * h, self.slopes[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        y0 * (2.0 * t3 - 3.0 * t2 + 1.0)
            + m0 * (t3 - 2.0 * t2 + t)
            + y1 * (-2.0 * t3 + 3.0 * t2)
            + m1 * (t3 - t2)
    }

    fn deriv(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (y0, y1) = (self.ys[i], self.ys[i + 1]);
        let (m0, m1) = (self.slopes[i] * h, self.slopes[i + 1] * h);
        let t2 = t * t;
        (y0 * (6.0 * t2 - 6.0 * t)
            + m0 * (3.0 * t2 - 4.0 * t + 1.0)
            + y1 * (-6.0 * t2 + 6.0 * t)
            + m1 * (3.0 * t2 - 2.0 * t))
            / h
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f1() -> FiberMap {
        FiberMap::affine(0.05, 0.4).unwrap()
    }

    fn f2() -> FiberMap {
        FiberMap::affine(0.55, 0.4).unwrap()
    }

    #[test]
    fn affine_composition_is_exact() {
        // f2 . f1 = 0.16 x + 0.57
        let c = f1().compose(&f2());
        match c {
            FiberMap::Affine { offset, slope } => {
                assert!((offset - 0.57).abs() < 1e-15);
                assert!((slope - 0.16).abs() < 1e-15);
            }
            other => panic!("expected affine, got {:?}", other),
        }
        // f1 . f1 = 0.16 x + 0.07
        match f1().compose(&f1()) {
            FiberMap::Affine { offset, slope } => {
                assert!((offset - 0.07).abs() < 1e-15);
                assert!((slope - 0.16).abs() < 1e-15);
            }
            other => panic!("expected affine, got {:?}", other),
        }
    }

    #[test]
    fn affine_fixed_points() {
        let fps = f1().fixed_points();
        assert_eq!(fps.len(), 1);
        assert!((fps[0].location - 1.0 / 12.0).abs() < 1e-12);
        assert!((fps[0].multiplier - 0.4).abs() < 1e-15);
        assert_eq!(fps[0].kind, FixedPointKind::Attracting);

        let c = f1().compose(&f2());
        let fps = c.fixed_points();
        assert!((fps[0].location - 0.57 / 0.84).abs() < 1e-12);
        assert!((fps[0].multiplier - 0.16).abs() < 1e-15);
    }

    #[test]
    fn moebius_fixed_point_golden_ratio() {
        // f(x) = (x+1)/(x+2), fixed point (sqrt(5)-1)/2, multiplier 1/(x+2)^2.
        let m = FiberMap::moebius(1.0, 1.0, 1.0, 2.0).unwrap();
        let fps = m.fixed_points();
        assert_eq!(fps.len(), 1);
        let golden = (5f64.sqrt() - 1.0) / 2.0;
        assert!((fps[0].location - golden).abs() < 1e-12);
        assert!((fps[0].multiplier - 1.0 / ((golden + 2.0) * (golden + 2.0))).abs() < 1e-12);
        assert_eq!(fps[0].kind, FixedPointKind::Attracting);
    }

    #[test]
    fn map_interval_examples() {
        assert_eq!(f1().map_interval(0.0, 1.0), (0.05, 0.45));
        let (a, b) = f2().map_interval(0.05, 0.45);
        assert!((a - 0.57).abs() < 1e-15 && (b - 0.73).abs() < 1e-15);
        let (a, b) = f1().map_interval(0.3, 0.3);
        assert_eq!(a, b);
    }

    #[test]
    fn invert_point_cases() {
        assert!((f1().invert_point(0.25).unwrap() - 0.5).abs() < 1e-14);
        assert!(matches!(f1().invert_point(0.01), Err(SkewError::InverseDomain(..))));
        let m = FiberMap::moebius(1.0, 1.0, 1.0, 2.0).unwrap();
        assert!((m.invert_point(0.6).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn invert_round_trip_on_grid() {
        let maps = [f1(), f2(), FiberMap::moebius(1.0, 1.0, 1.0, 2.0).unwrap()];
        for m in &maps {
            for i in 0..=1024 {
                let x = i as f64 / 1024.0;
                let back = m.invert_point(m.eval(x)).unwrap();
                assert!((back - x).abs() < 1e-10, "{:?} at {}", m, x);
            }
        }
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let table_x: Vec<f64> = (0..=32).map(|i| i as f64 / 32.0).collect();
        let table_y: Vec<f64> = table_x.iter().map(|&x| 0.1 + 0.8 * x * x * (3.0 - 2.0 * x)).collect();
        let maps = vec![
            f1(),
            FiberMap::moebius(1.0, 1.0, 1.0, 2.0).unwrap(),
            FiberMap::monotone_table(table_x, table_y).unwrap(),
        ];
        let h = 1e-6;
        for m in &maps {
            for i in 1..256 {
                let x = i as f64 / 256.0;
                let fd = (m.eval(x + h) - m.eval(x - h)) / (2.0 * h);
                let d = m.deriv(x);
                assert!((fd - d).abs() / d.abs() < 1e-5, "{:?} at {}: {} vs {}", m, x, fd, d);
            }
        }
    }

    #[test]
    fn blackbox_two_sink_map() {
        // x - 1.2 (x-0.2)(x-0.5)(x-0.8): sinks at 0.2 and 0.8, source at 0.5.
        let g = FiberMap::blackbox(
            |x| x - 1.2 * (x - 0.2) * (x - 0.5) * (x - 0.8),
            |x| 1.0 - 1.2 * (3.0 * x * x - 3.0 * x + 0.66),
        )
        .unwrap();
        let fps = g.fixed_points();
        assert_eq!(fps.len(), 3);
        assert!((fps[0].location - 0.2).abs() < 1e-9);
        assert!((fps[1].location - 0.5).abs() < 1e-9);
        assert!((fps[2].location - 0.8).abs() < 1e-9);
        assert_eq!(fps[0].kind, FixedPointKind::Attracting);
        assert_eq!(fps[1].kind, FixedPointKind::Repelling);
        assert_eq!(fps[2].kind, FixedPointKind::Attracting);
    }

    #[test]
    fn near_parabolic_moebius_is_flagged() {
        // (x + eta*eps)/(x + 1) with roots -eta, +eps of the fixed-point
        // quadratic; multiplier at the inside root is 1 - (eps+eta)/(1+eps).
        let eps = 2e-9;
        let m = FiberMap::moebius(1.0 + 0.0, eps * eps, 1.0, 1.0).unwrap();
        let fps = m.fixed_points();
        assert_eq!(fps.len(), 1);
        assert!((fps[0].location - eps).abs() < 1e-12);
        assert_eq!(fps[0].kind, FixedPointKind::Parabolic);
    }

    #[test]
    fn maps_fixing_boundary_rejected() {
        assert!(FiberMap::affine(0.0, 0.5).is_err());
        assert!(FiberMap::affine(0.5, 0.5).is_err());
        assert!(FiberMap::blackbox(|x| x, |_| 1.0).is_err());
    }

    #[test]
    fn sign_constant_between_fixed_points() {
        let g = FiberMap::blackbox(
            |x| x - 1.2 * (x - 0.2) * (x - 0.5) * (x - 0.8),
            |x| 1.0 - 1.2 * (3.0 * x * x - 3.0 * x + 0.66),
        )
        .unwrap();
        let fps = g.fixed_points();
        for pair in fps.windows(2) {
            let mut signs = Vec::new();
            for i in 1..64 {
                let x = pair[0].location
                    + (pair[1].location - pair[0].location) * i as f64 / 64.0;
                signs.push((g.eval(x) - x) > 0.0);
            }
            assert!(signs.iter().all(|&s| s == signs[0]));
        }
    }
}
