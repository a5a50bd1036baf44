//! Stationary measures of the nonlinear random walk: transfer-operator and
//! Monte Carlo estimation, Lyapunov exponents, time-average checks, and the
//! relative-entropy identity for the smoothed process.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, SkewError};
use crate::skeleton::Domain;
use crate::system::StepSystem;

const NORM_TOL: f64 = 1e-12;
/// Quadrature nodes for the translation density.
const KERNEL_QUAD: usize = 65;
/// Reflected-mass thresholds: flag above the first, reject above the second.
pub const REFLECT_FLAG: f64 = 1e-9;
pub const REFLECT_REJECT: f64 = 1e-6;

/// A per-state histogram on uniform bins over [0,1]; the joint mass over
/// all states is 1, the per-state masses play the role of the state
/// weights.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    bins: usize,
    hist: Vec<Vec<f64>>,
}

impl EmpiricalMeasure {
    pub fn zero(n_states: usize, bins: usize) -> Self {
        Self { bins, hist: vec![vec![0.0; bins]; n_states] }
    }

    /// Validates nonnegativity and joint normalization.
    pub fn from_hist(hist: Vec<Vec<f64>>) -> Result<Self> {
        let bins = hist.first().map_or(0, |h| h.len());
        if bins == 0 || hist.iter().any(|h| h.len() != bins) {
            return Err(SkewError::Input("histogram rows must share a nonzero bin count".into()));
        }
        if hist.iter().flatten().any(|&m| m < 0.0) {
            return Err(SkewError::Input("histogram has negative mass".into()));
        }
        let total: f64 = hist.iter().flatten().sum();
        if (total - 1.0).abs() > NORM_TOL {
            return Err(SkewError::Input(format!(
                "joint mass {} is not 1 within {:e}",
                total, NORM_TOL
            )));
        }
        Ok(Self { bins, hist })
    }

    /// Uniform density on the domain, state masses proportional to the
    /// stationary vector.
    pub fn uniform_on(domain: &Domain, stationary: &[f64], bins: usize) -> Result<Self> {
        let n = domain.n_states();
        let mut m = Self::zero(n, bins);
        for k in 0..n {
            let total_len: f64 = domain.state(k).iter().map(|iv| iv.len()).sum();
            if total_len <= 0.0 {
                return Err(SkewError::Input(format!("domain empty at state {}", k + 1)));
            }
            for iv in domain.state(k) {
                deposit(&mut m.hist[k], iv.lo, iv.hi, stationary[k] * iv.len() / total_len);
            }
        }
        Ok(m)
    }

    /// Adds mass to one bin; used by estimators that fill histograms
    /// incrementally.
    pub(crate) fn add_mass(&mut self, state: usize, bin: usize, mass: f64) {
        self.hist[state][bin] += mass;
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn n_states(&self) -> usize {
        self.hist.len()
    }

    pub fn state(&self, k: usize) -> &[f64] {
        &self.hist[k]
    }

    pub fn state_mass(&self, k: usize) -> f64 {
        self.hist[k].iter().sum()
    }

    pub fn total(&self) -> f64 {
        self.hist.iter().flatten().sum()
    }

    pub fn bin_width(&self) -> f64 {
        1.0 / self.bins as f64
    }

    /// Fiber mean of the joint measure (bin midpoints).
    pub fn mean(&self) -> f64 {
        let w = self.bin_width();
        self.hist
            .iter()
            .flat_map(|h| h.iter().enumerate())
            .map(|(b, &m)| m * (b as f64 + 0.5) * w)
            .sum()
    }

    /// First and last occupied bin of state `k`, as an interval, if any.
    pub fn support_bounds(&self, k: usize) -> Option<(f64, f64)> {
        let first = self.hist[k].iter().position(|&m| m > 0.0)?;
        let last = self.hist[k].iter().rposition(|&m| m > 0.0)?;
        let w = self.bin_width();
        Some((first as f64 * w, (last + 1) as f64 * w))
    }

    /// Aggregates to a coarser uniform binning (must divide the current
    /// one). Useful for comparing estimators whose fine-scale artifacts
    /// differ.
    pub fn coarsen(&self, new_bins: usize) -> Result<EmpiricalMeasure> {
        if new_bins == 0 || self.bins % new_bins != 0 {
            return Err(SkewError::Input(format!(
                "{} bins do not aggregate to {}",
                self.bins, new_bins
            )));
        }
        let factor = self.bins / new_bins;
        let hist = self
            .hist
            .iter()
            .map(|h| h.chunks(factor).map(|c| c.iter().sum()).collect())
            .collect();
        Ok(EmpiricalMeasure { bins: new_bins, hist })
    }

    pub fn tv_distance(&self, other: &EmpiricalMeasure) -> Result<f64> {
        if self.bins != other.bins || self.hist.len() != other.hist.len() {
            return Err(SkewError::Input("mismatched binning".into()));
        }
        let d: f64 = self
            .hist
            .iter()
            .zip(&other.hist)
            .flat_map(|(a, b)| a.iter().zip(b))
            .map(|(x, y)| (x - y).abs())
            .sum();
        Ok(0.5 * d)
    }

    /// True when every bin of `self` with positive mass lies inside the
    /// domain's intervals at its state (up to one bin of slack).
    pub fn supported_in(&self, domain: &Domain) -> bool {
        let w = self.bin_width();
        for (k, h) in self.hist.iter().enumerate() {
            for (b, &m) in h.iter().enumerate() {
                if m > 0.0 {
                    let (lo, hi) = (b as f64 * w, (b + 1) as f64 * w);
                    let inside = domain
                        .state(k)
                        .iter()
                        .any(|iv| iv.lo <= lo + w && hi - w <= iv.hi);
                    if !inside {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// Spreads `mass` uniformly over `[lo, hi] subset [0,1]` into uniform bins.
fn deposit(hist: &mut [f64], lo: f64, hi: f64, mass: f64) {
    let bins = hist.len();
    let bw = 1.0 / bins as f64;
    if hi - lo < 1e-300 {
        let b = ((lo / bw) as usize).min(bins - 1);
        hist[b] += mass;
        return;
    }
    let b0 = ((lo / bw) as usize).min(bins - 1);
    let b1 = ((hi / bw) as usize).min(bins - 1);
    let len = hi - lo;
    for b in b0..=b1 {
        let l = (b as f64 * bw).max(lo);
        let r = ((b + 1) as f64 * bw).min(hi);
        if r > l {
            hist[b] += mass * (r - l) / len;
        }
    }
}

/// Spreads mass over `[lo, hi]` with reflection at 0 and 1, returning the
/// reflected amount.
fn deposit_reflect(hist: &mut [f64], lo: f64, hi: f64, mass: f64) -> f64 {
    let len = hi - lo;
    if len < 1e-300 {
        let x = if lo < 0.0 {
            -lo
        } else if lo > 1.0 {
            2.0 - lo
        } else {
            lo
        };
        deposit(hist, x, x, mass);
        return if (0.0..=1.0).contains(&lo) { 0.0 } else { mass };
    }
    let mut reflected = 0.0;
    if lo < 0.0 {
        let cut = hi.min(0.0);
        let m = mass * (cut - lo) / len;
        deposit(hist, (-cut).max(0.0), (-lo).min(1.0), m);
        reflected += m;
    }
    if hi > 1.0 {
        let cut = lo.max(1.0);
        let m = mass * (hi - cut) / len;
        deposit(hist, (2.0 - hi).max(0.0), (2.0 - cut).min(1.0), m);
        reflected += m;
    }
    let l = lo.max(0.0);
    let r = hi.min(1.0);
    if r > l {
        deposit(hist, l, r, mass * (r - l) / len);
    }
    reflected
}

/// One step of the transfer operator:
/// `(f_* mu)_j = sum_i pi_ij (f_i)_* mu_i`, with each bin's mass spread
/// over the exact image interval of the bin.
pub fn transfer_step(system: &StepSystem, measure: &EmpiricalMeasure) -> EmpiricalMeasure {
    let n = system.n_states();
    let bins = measure.bins();
    let bw = measure.bin_width();
    let mut out = EmpiricalMeasure::zero(n, bins);
    let pi = system.chain().transition();
    for i in 0..n {
        // Push state i once, then distribute over targets.
        let mut pushed = vec![0.0; bins];
        for (b, &m) in measure.state(i).iter().enumerate() {
            if m > 0.0 {
                let (lo, hi) = system.map(i).map_interval(b as f64 * bw, (b + 1) as f64 * bw);
                deposit(&mut pushed, lo, hi, m);
            }
        }
        for j in 0..n {
            if pi[i][j] > 0.0 {
                for b in 0..bins {
                    out.hist[j][b] += pi[i][j] * pushed[b];
                }
            }
        }
    }
    out
}

/// Outcome of power iteration: the fixed measure, the number of steps, and
/// the final successive-iterate TV gap.
#[derive(Debug, Clone)]
pub struct StationaryResult {
    pub measure: EmpiricalMeasure,
    pub iterations: usize,
    pub gap: f64,
}

pub fn power_iterate_stationary(
    system: &StepSystem,
    domain: Option<&Domain>,
    bins: usize,
    tol: f64,
    max_iter: usize,
) -> Result<StationaryResult> {
    if bins < 64 {
        return Err(SkewError::Input("need at least 64 bins".into()));
    }
    let full = Domain::full(system.n_states());
    let dom = domain.unwrap_or(&full);
    let mut cur = EmpiricalMeasure::uniform_on(dom, system.chain().stationary(), bins)?;
    let mut gap = f64::INFINITY;
    for it in 1..=max_iter {
        let next = transfer_step(system, &cur);
        gap = cur.tv_distance(&next)?;
        cur = next;
        if gap < tol {
            return Ok(StationaryResult { measure: cur, iterations: it, gap });
        }
    }
    Err(SkewError::Convergence("transfer-operator power iteration".into(), gap))
}

/// Draws a point uniformly from the domain's intervals at `state`.
fn sample_in_domain<R: Rng>(domain: &Domain, state: usize, rng: &mut R) -> f64 {
    let total: f64 = domain.state(state).iter().map(|iv| iv.len().max(1e-300)).sum();
    let mut u: f64 = rng.gen::<f64>() * total;
    for iv in domain.state(state) {
        let l = iv.len().max(1e-300);
        if u <= l {
            return iv.lo + u;
        }
        u -= l;
    }
    domain.state(state).last().map(|iv| iv.hi).unwrap_or(0.5)
}

/// Monte Carlo estimate of the stationary measure: the empirical histogram
/// of the walk after burn-in. Deterministic given the seed.
pub fn simulate_walk(
    system: &StepSystem,
    bins: usize,
    steps: usize,
    burn_in: usize,
    seed: u64,
    clip_domain: Option<&Domain>,
) -> Result<EmpiricalMeasure> {
    if steps <= burn_in {
        return Err(SkewError::Input(format!(
            "steps ({}) must exceed burn_in ({})",
            steps, burn_in
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stationary = system.chain().stationary();
    let mut state = {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut s = stationary.len() - 1;
        for (i, &p) in stationary.iter().enumerate() {
            acc += p;
            if u < acc {
                s = i;
                break;
            }
        }
        s
    };
    let mut x = match clip_domain {
        Some(d) => sample_in_domain(d, state, &mut rng),
        None => 0.5,
    };
    let mut out = EmpiricalMeasure::zero(system.n_states(), bins);
    let weight = 1.0 / (steps - burn_in) as f64;
    let bw = 1.0 / bins as f64;
    for t in 0..steps {
        if t >= burn_in {
            let b = ((x / bw) as usize).min(bins - 1);
            out.hist[state][b] += weight;
        }
        let (s, y) = system.walk_step(state, x, &mut rng);
        state = s;
        x = y;
    }
    Ok(out)
}

/// `lambda = sum_i int log f_i'(x) dmu_i(x)` (the row sums of the
/// transition matrix collapse the target-state sum), evaluated at bin
/// midpoints.
pub fn lyapunov_exponent(system: &StepSystem, measure: &EmpiricalMeasure) -> Result<f64> {
    let bw = measure.bin_width();
    let mut acc = 0.0;
    for k in 0..system.n_states() {
        for (b, &m) in measure.state(k).iter().enumerate() {
            if m > 0.0 {
                let d = system.map(k).deriv((b as f64 + 0.5) * bw);
                if d <= 0.0 {
                    return Err(SkewError::Input(format!(
                        "nonpositive derivative {} at state {}",
                        d,
                        k + 1
                    )));
                }
                acc += m * d.ln();
            }
        }
    }
    Ok(acc)
}

/// Orbitwise exponent estimator `(1/n) sum log f'` along a simulated walk.
pub fn orbit_lyapunov(
    system: &StepSystem,
    steps: usize,
    burn_in: usize,
    seed: u64,
    clip_domain: Option<&Domain>,
) -> Result<f64> {
    if steps <= burn_in {
        return Err(SkewError::Input("steps must exceed burn_in".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = 0usize;
    let mut x = match clip_domain {
        Some(d) => sample_in_domain(d, state, &mut rng),
        None => 0.5,
    };
    let mut acc = 0.0;
    for t in 0..steps {
        if t >= burn_in {
            acc += system.map(state).deriv(x).ln();
        }
        let (s, y) = system.walk_step(state, x, &mut rng);
        state = s;
        x = y;
    }
    Ok(acc / (steps - burn_in) as f64)
}

/// Time-average check of the observable x against the space average.
#[derive(Debug, Clone)]
pub struct SrbReport {
    pub space_average: f64,
    pub max_deviation: f64,
    pub trials: usize,
}

pub fn srb_check(
    system: &StepSystem,
    measure: &EmpiricalMeasure,
    trials: usize,
    orbit_length: usize,
    seed: u64,
    clip_domain: Option<&Domain>,
) -> Result<SrbReport> {
    let space_average = measure.mean() / measure.total();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_deviation: f64 = 0.0;
    for _ in 0..trials {
        let mut state = rng.gen_range(0..system.n_states());
        let mut x = match clip_domain {
            Some(d) => sample_in_domain(d, state, &mut rng),
            None => rng.gen(),
        };
        let mut acc = 0.0;
        for _ in 0..orbit_length {
            acc += x;
            let (s, y) = system.walk_step(state, x, &mut rng);
            state = s;
            x = y;
        }
        max_deviation = max_deviation.max((acc / orbit_length as f64 - space_average).abs());
    }
    Ok(SrbReport { space_average, max_deviation, trials })
}

/// Kullback-Leibler divergence of two histograms with matching binning,
/// with 0 log 0 = 0 and +infinity on an absolute-continuity failure.
pub fn relative_entropy(m1: &[f64], m2: &[f64]) -> Result<f64> {
    if m1.len() != m2.len() {
        return Err(SkewError::Input("mismatched binning".into()));
    }
    let mut acc = 0.0;
    for (&a, &b) in m1.iter().zip(m2) {
        if a > 0.0 {
            if b <= 0.0 {
                return Ok(f64::INFINITY);
            }
            acc += a * (a / b).ln();
        }
    }
    Ok(acc)
}

/// Joint relative entropy over all states of two measures.
pub fn relative_entropy_joint(m1: &EmpiricalMeasure, m2: &EmpiricalMeasure) -> Result<f64> {
    if m1.bins() != m2.bins() || m1.n_states() != m2.n_states() {
        return Err(SkewError::Input("mismatched binning".into()));
    }
    let mut acc = 0.0;
    for k in 0..m1.n_states() {
        acc += relative_entropy(m1.state(k), m2.state(k))?;
        if acc.is_infinite() {
            return Ok(f64::INFINITY);
        }
    }
    Ok(acc)
}

/// The smoothing kernel: a contraction by `1 - eps` toward 1/2 composed
/// with a random translation with raised-cosine density
/// `(1 + cos(pi t / eps)) / (2 eps)` on `[-eps, eps]`.
#[derive(Debug, Clone, Copy)]
pub struct SmoothedKernel {
    pub eps: f64,
}

impl SmoothedKernel {
    pub fn new(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 0.5) {
            return Err(SkewError::Parameter(format!("smoothing scale {} not in (0, 0.5)", eps)));
        }
        Ok(Self { eps })
    }

    pub fn density(&self, t: f64) -> f64 {
        if t.abs() >= self.eps {
            0.0
        } else {
            (1.0 + (std::f64::consts::PI * t / self.eps).cos()) / (2.0 * self.eps)
        }
    }

    /// Translation quadrature nodes and normalized weights. The node
    /// spacing stays below half a bin so the discrete translates do not
    /// alias against the bin grid.
    pub fn quadrature(&self, bins: usize) -> Vec<(f64, f64)> {
        let n = KERNEL_QUAD.max((4.0 * self.eps * bins as f64).ceil() as usize);
        let dt = 2.0 * self.eps / n as f64;
        let mut nodes: Vec<(f64, f64)> = (0..n)
            .map(|q| {
                let t = -self.eps + (q as f64 + 0.5) * dt;
                (t, self.density(t) * dt)
            })
            .collect();
        let total: f64 = nodes.iter().map(|(_, w)| w).sum();
        for (_, w) in &mut nodes {
            *w /= total;
        }
        nodes
    }

    /// Applies the kernel to one state histogram; returns the reflected
    /// mass.
    pub fn apply(&self, hist: &[f64]) -> (Vec<f64>, f64) {
        let bins = hist.len();
        let bw = 1.0 / bins as f64;
        // Contraction toward 1/2.
        let mut squeezed = vec![0.0; bins];
        let s = 1.0 - self.eps;
        for (b, &m) in hist.iter().enumerate() {
            if m > 0.0 {
                let lo = 0.5 + s * (b as f64 * bw - 0.5);
                let hi = 0.5 + s * ((b + 1) as f64 * bw - 0.5);
                deposit(&mut squeezed, lo, hi, m);
            }
        }
        // Convolution with the translation density.
        let mut out = vec![0.0; bins];
        let mut reflected = 0.0;
        for (t, w) in self.quadrature(bins) {
            for (b, &m) in squeezed.iter().enumerate() {
                if m > 0.0 {
                    reflected += deposit_reflect(
                        &mut out,
                        b as f64 * bw + t,
                        (b + 1) as f64 * bw + t,
                        w * m,
                    );
                }
            }
        }
        (out, reflected)
    }
}

/// Transfer step of the smoothed process: the plain transfer step followed
/// by the kernel, statewise. Errors when the reflected mass exceeds the
/// rejection threshold.
pub fn smoothed_transfer_step(
    system: &StepSystem,
    measure: &EmpiricalMeasure,
    kernel: &SmoothedKernel,
) -> Result<(EmpiricalMeasure, f64)> {
    let plain = transfer_step(system, measure);
    let mut out = EmpiricalMeasure::zero(plain.n_states(), plain.bins());
    let mut reflected = 0.0;
    for k in 0..plain.n_states() {
        let (h, r) = kernel.apply(plain.state(k));
        out.hist[k] = h;
        reflected += r;
    }
    if reflected > REFLECT_REJECT {
        return Err(SkewError::Parameter(format!(
            "smoothing scale {} reflects mass {:e} at the boundary",
            kernel.eps, reflected
        )));
    }
    Ok((out, reflected))
}

pub fn smoothed_stationary(
    system: &StepSystem,
    kernel: &SmoothedKernel,
    bins: usize,
    tol: f64,
    max_iter: usize,
) -> Result<(StationaryResult, f64)> {
    let full = Domain::full(system.n_states());
    let mut cur = EmpiricalMeasure::uniform_on(&full, system.chain().stationary(), bins)?;
    let mut gap = f64::INFINITY;
    for it in 1..=max_iter {
        let (next, reflected) = smoothed_transfer_step(system, &cur, kernel)?;
        gap = cur.tv_distance(&next)?;
        cur = next;
        if gap < tol {
            return Ok((StationaryResult { measure: cur, iterations: it, gap }, reflected));
        }
    }
    Err(SkewError::Convergence("smoothed power iteration".into(), gap))
}

/// Both sides of the entropy identity for the smoothed process.
#[derive(Debug, Clone)]
pub struct BaxendaleReport {
    pub eps: f64,
    pub bins: usize,
    /// Volume exponent of the smoothed process: mean log-derivative of the
    /// maps under the smoothed stationary measure, plus log(1 - eps).
    pub volume_exponent: f64,
    /// `- sum pi_ij E_t h((xi^eps_ij)_* mu_i | mu_j)`.
    pub entropy_side: f64,
    pub relative_gap: f64,
    pub reflected_mass: f64,
    pub reflected_flagged: bool,
    /// Option 1 of the dichotomy: a negative exponent.
    pub negative_exponent: bool,
}

pub fn baxendale_check(
    system: &StepSystem,
    eps: f64,
    bins: usize,
    tol: f64,
) -> Result<BaxendaleReport> {
    let kernel = SmoothedKernel::new(eps)?;
    let (stat, reflected) = smoothed_stationary(system, &kernel, bins, tol, 20_000)?;
    let mu = &stat.measure;
    let volume_exponent = lyapunov_exponent(system, mu)? + (1.0 - eps).ln();

    let n = system.n_states();
    let bw = mu.bin_width();
    let pi = system.chain().transition();
    let s = 1.0 - eps;
    let quad = kernel.quadrature(bins);
    let mut entropy_sum = 0.0;
    for i in 0..n {
        // Deterministic part: f_i then the contraction.
        let mut squeezed = vec![0.0; bins];
        for (b, &m) in mu.state(i).iter().enumerate() {
            if m > 0.0 {
                let (lo, hi) = system.map(i).map_interval(b as f64 * bw, (b + 1) as f64 * bw);
                deposit(&mut squeezed, 0.5 + s * (lo - 0.5), 0.5 + s * (hi - 0.5), m);
            }
        }
        for &(t, w) in &quad {
            let mut pushed = vec![0.0; bins];
            for (b, &m) in squeezed.iter().enumerate() {
                if m > 0.0 {
                    deposit_reflect(&mut pushed, b as f64 * bw + t, (b + 1) as f64 * bw + t, m);
                }
            }
            for j in 0..n {
                if pi[i][j] > 0.0 {
                    let h = relative_entropy(&pushed, mu.state(j))?;
                    entropy_sum += pi[i][j] * w * h;
                }
            }
        }
    }
    let entropy_side = -entropy_sum;
    let relative_gap = (volume_exponent - entropy_side).abs()
        / volume_exponent.abs().max(entropy_side.abs()).max(1e-300);
    Ok(BaxendaleReport {
        eps,
        bins,
        volume_exponent,
        entropy_side,
        relative_gap,
        reflected_mass: reflected,
        reflected_flagged: reflected > REFLECT_FLAG,
        negative_exponent: volume_exponent < 0.0 && entropy_side < 0.0,
    })
}
