//! Two-sided analysis: backward pullback fibers, bone statistics of the
//! attractor graph, forward iteration of step graphs, repeller analysis by
//! time reversal, and the full strip decomposition.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, SkewError};
use crate::genericity::check_genericity;
use crate::markov::Word;
use crate::measures::{
    lyapunov_exponent, power_iterate_stationary, EmpiricalMeasure, StationaryResult,
};
use crate::skeleton::{
    attractor_count_bound, minimal_trapping_domains, Domain, Interval, TrappingRegion,
};
use crate::system::{MultistepSystem, StepSystem};

/// A finite admissible past `omega_{-n} ... omega_{-1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackwardWord(pub Vec<usize>);

impl BackwardWord {
    pub fn symbols(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `2^{-m}` where m is the length of the common trailing block; 0 for
    /// identical words of equal length.
    pub fn distance(&self, other: &BackwardWord) -> f64 {
        let m = self
            .0
            .iter()
            .rev()
            .zip(other.0.iter().rev())
            .take_while(|(a, b)| a == b)
            .count();
        if m == self.0.len() && m == other.0.len() {
            0.0
        } else {
            0.5f64.powi(m as i32)
        }
    }
}

impl std::fmt::Display for BackwardWord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", Word(self.0.clone()))
    }
}

/// The pullback interval of the trapping domain along a past:
/// `f_{omega_{-1}} . ... . f_{omega_{-n}}` applied to the convex hull of
/// the domain at the deepest state. The empty past yields the domain hull
/// at the arrival state itself.
pub fn pullback_fiber(
    system: &StepSystem,
    domain: &Domain,
    past: &BackwardWord,
    arrival: usize,
) -> Result<Interval> {
    let chain = system.chain();
    if past.is_empty() {
        return domain
            .bounds(arrival)
            .ok_or_else(|| SkewError::Input(format!("domain empty at state {}", arrival + 1)));
    }
    let mut path = past.0.clone();
    path.push(arrival);
    if !chain.is_admissible_word(&path) {
        return Err(SkewError::Input(format!(
            "past {} with arrival {} is not admissible",
            past,
            arrival + 1
        )));
    }
    let deepest = past.0[0];
    let start = domain
        .bounds(deepest)
        .ok_or_else(|| SkewError::Input(format!("domain empty at state {}", deepest + 1)))?;
    let (mut lo, mut hi) = (start.lo, start.hi);
    for &s in &past.0 {
        let (l, h) = system.map(s).map_interval(lo, hi);
        lo = l;
        hi = h;
    }
    Ok(Interval::new(lo, hi))
}

/// Per-depth bone statistics of sampled pasts.
#[derive(Debug, Clone)]
pub struct DepthStats {
    pub depth: usize,
    /// Fraction of pullback intervals longer than the threshold.
    pub thick_fraction: f64,
    pub mean_log_length: f64,
    pub max_length: f64,
}

#[derive(Debug, Clone)]
pub struct BoneScan {
    pub threshold: f64,
    pub samples: usize,
    pub per_depth: Vec<DepthStats>,
    /// Least-squares slope of mean log-length against depth; for a generic
    /// system this tracks the Lyapunov exponent.
    pub slope: f64,
}

/// Samples pasts of the given depth from the reversed chain and measures
/// the pullback intervals at every intermediate depth.
pub fn bone_scan(
    system: &StepSystem,
    domain: &Domain,
    depth: usize,
    samples: usize,
    threshold: f64,
    seed: u64,
) -> Result<BoneScan> {
    assert!(depth >= 1 && samples >= 1);
    let reversed = system.chain().reverse();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut thick = vec![0usize; depth];
    let mut log_sum = vec![0.0f64; depth];
    let mut max_len = vec![0.0f64; depth];
    for _ in 0..samples {
        // A reversed path j, omega_{-1}, ..., omega_{-depth}.
        let rev_path = reversed.sample_path(depth + 1, None, &mut rng);
        let arrival = rev_path.symbols()[0];
        let mut past: Vec<usize> = rev_path.symbols()[1..].to_vec();
        past.reverse();
        for d in 1..=depth {
            let trailing = BackwardWord(past[depth - d..].to_vec());
            let iv = pullback_fiber(system, domain, &trailing, arrival)?;
            let len = iv.len().max(1e-300);
            if len > threshold {
                thick[d - 1] += 1;
            }
            log_sum[d - 1] += len.ln();
            max_len[d - 1] = max_len[d - 1].max(iv.len());
        }
    }
    let per_depth: Vec<DepthStats> = (1..=depth)
        .map(|d| DepthStats {
            depth: d,
            thick_fraction: thick[d - 1] as f64 / samples as f64,
            mean_log_length: log_sum[d - 1] / samples as f64,
            max_length: max_len[d - 1],
        })
        .collect();
    // Least-squares slope of mean log-length in depth.
    let n = depth as f64;
    let mean_d = (1..=depth).map(|d| d as f64).sum::<f64>() / n;
    let mean_y = per_depth.iter().map(|s| s.mean_log_length).sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for s in &per_depth {
        let dx = s.depth as f64 - mean_d;
        num += dx * (s.mean_log_length - mean_y);
        den += dx * dx;
    }
    let slope = if den > 0.0 { num / den } else { 0.0 };
    Ok(BoneScan { threshold, samples, per_depth, slope })
}

/// The n-th forward image of a per-state constant step graph, tabulated
/// over admissible length-n pasts.
#[derive(Debug, Clone)]
pub struct StepGraphIterate {
    pub depth: usize,
    /// For depth 0: one entry per state (the word is the state itself) with
    /// the initial constant. For depth n >= 1: one entry per admissible
    /// past word of length n.
    pub entries: Vec<(Word, f64)>,
    pub drift_up: bool,
}

pub fn iterate_step_graph(
    system: &StepSystem,
    initial: &[f64],
    depth: usize,
) -> Result<StepGraphIterate> {
    let chain = system.chain();
    let n = system.n_states();
    if initial.len() != n {
        return Err(SkewError::Input("need one initial constant per state".into()));
    }
    // Drift check: every diffusion image must move strictly one way.
    let mut up = true;
    let mut down = true;
    for i in 0..n {
        let v = system.map(i).eval(initial[i]);
        for j in chain.successors(i) {
            if v <= initial[j] {
                up = false;
            }
            if v >= initial[j] {
                down = false;
            }
        }
    }
    if !up && !down {
        return Err(SkewError::Input(
            "initial step graph does not drift: one diffusion step moves it both ways".into(),
        ));
    }
    let entries = if depth == 0 {
        (0..n).map(|k| (Word(vec![k]), initial[k])).collect()
    } else {
        crate::system::admissible_words(chain, depth)
            .into_iter()
            .map(|w| {
                let mut x = initial[w.first()];
                for &s in w.symbols() {
                    x = system.map(s).eval(x);
                }
                (w, x)
            })
            .collect()
    };
    Ok(StepGraphIterate { depth, entries, drift_up: up })
}

/// Result of the time-reversed walk in a gap.
#[derive(Debug, Clone)]
pub struct RepellerReport {
    pub measure: EmpiricalMeasure,
    /// Forward-time exponent over the repeller measure; expected positive.
    pub forward_lyapunov: f64,
    pub rejections: usize,
    pub accepted: usize,
}

/// Runs the reversed chain with inverse fiber maps, clipped to the gap;
/// steps whose preimage is undefined or leaves the gap are rejected and the
/// fiber point is resampled.
pub fn repeller_analysis(
    system: &StepSystem,
    gap: &Domain,
    bins: usize,
    steps: usize,
    burn_in: usize,
    seed: u64,
) -> Result<RepellerReport> {
    if steps <= burn_in {
        return Err(SkewError::Input("steps must exceed burn_in".into()));
    }
    let reversed = system.chain().reverse();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sample_gap = |state: usize, rng: &mut ChaCha8Rng| -> Result<f64> {
        let ivs = gap.state(state);
        if ivs.is_empty() {
            return Err(SkewError::Input(format!("gap empty at state {}", state + 1)));
        }
        let total: f64 = ivs.iter().map(|iv| iv.len()).sum();
        let mut u: f64 = rng.gen::<f64>() * total;
        for iv in ivs {
            if u <= iv.len() {
                return Ok(iv.lo + u);
            }
            u -= iv.len();
        }
        Ok(ivs.last().unwrap().hi)
    };
    let in_gap = |state: usize, x: f64| gap.state(state).iter().any(|iv| iv.lo <= x && x <= iv.hi);

    let mut state = {
        let stationary = reversed.stationary();
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
    let mut x = sample_gap(state, &mut rng)?;
    let mut measure = EmpiricalMeasure::zero(system.n_states(), bins);
    let mut hist = vec![vec![0.0f64; bins]; system.n_states()];
    let mut rejections = 0usize;
    let mut accepted = 0usize;
    let bw = 1.0 / bins as f64;
    for t in 0..steps {
        // Reversed step: pick the forward-time predecessor i, invert f_i.
        let prev = reversed.step(state, &mut rng);
        match system.map(prev).invert_point(x) {
            Ok(y) if in_gap(prev, y) => {
                state = prev;
                x = y;
                if t >= burn_in {
                    accepted += 1;
                    let b = ((x / bw) as usize).min(bins - 1);
                    hist[state][b] += 1.0;
                }
            }
            _ => {
                rejections += 1;
                x = sample_gap(state, &mut rng)?;
            }
        }
    }
    if accepted == 0 {
        return Err(SkewError::Contradiction(
            "every reversed step was rejected: the gap holds no repeller".into(),
        ));
    }
    let norm = 1.0 / accepted as f64;
    for k in 0..system.n_states() {
        for b in 0..bins {
            if hist[k][b] > 0.0 {
                measure.add_mass(k, b, hist[k][b] * norm);
            }
        }
    }
    let forward_lyapunov = lyapunov_exponent(system, &measure)?;
    Ok(RepellerReport { measure, forward_lyapunov, rejections, accepted })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StripKind {
    Attractor,
    Repeller,
}

#[derive(Debug, Clone)]
pub struct Strip {
    pub kind: StripKind,
    pub domain: Domain,
    pub measure: EmpiricalMeasure,
    pub lyapunov: f64,
    pub bones: Option<BoneScan>,
    pub rejections: usize,
}

#[derive(Debug, Clone)]
pub struct StripReport {
    pub strips: Vec<Strip>,
    pub attractors: usize,
    pub repellers: usize,
    pub attractor_bound: usize,
    pub bound_witness: Word,
}

/// Monte Carlo and discretization parameters for the decomposition.
#[derive(Debug, Clone, Copy)]
pub struct McParams {
    pub bins: usize,
    pub steps: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub bone_depth: usize,
    pub bone_samples: usize,
    pub bone_threshold: f64,
    pub tv_tol: f64,
    pub max_iter: usize,
}

impl Default for McParams {
    fn default() -> Self {
        Self {
            bins: 1024,
            steps: 200_000,
            burn_in: 1000,
            seed: 1,
            bone_depth: 16,
            bone_samples: 500,
            bone_threshold: 1e-6,
            tv_tol: 1e-10,
            max_iter: 20_000,
        }
    }
}

/// The full alternating inventory of attractors and repellers: trapping
/// domains, stationary measures, exponents, bone statistics, and
/// reversed-walk repeller measures in the interior gaps.
pub fn strip_decomposition(
    system: &StepSystem,
    eps: f64,
    delta: f64,
    mc: &McParams,
) -> Result<StripReport> {
    let report = check_genericity(system)?;
    if !report.is_generic() {
        let witness = [
            &report.hyperbolic_returns,
            &report.no_sink_source_mapping,
            &report.no_invariant_tuple,
        ]
        .iter()
        .find_map(|c| c.witness.clone())
        .unwrap_or_default();
        return Err(SkewError::Genericity(witness));
    }

    let regions = minimal_trapping_domains(system, eps, delta)?;
    let bound = attractor_count_bound(system, system.n_states() + 1)?;
    if regions.len() > bound.bound {
        return Err(SkewError::Contradiction(format!(
            "{} attractors exceed the periodic-word bound {}",
            regions.len(),
            bound.bound
        )));
    }

    let mut strips = Vec::new();
    for (idx, region) in regions.iter().enumerate() {
        if idx > 0 {
            let gap = gap_between(&regions[idx - 1], region)?;
            let rep = repeller_analysis(
                system,
                &gap,
                mc.bins,
                mc.steps,
                mc.burn_in,
                mc.seed.wrapping_add(idx as u64),
            )?;
            if rep.forward_lyapunov <= 0.0 {
                return Err(SkewError::Contradiction(format!(
                    "gap repeller has nonpositive forward exponent {}",
                    rep.forward_lyapunov
                )));
            }
            strips.push(Strip {
                kind: StripKind::Repeller,
                domain: gap,
                measure: rep.measure,
                lyapunov: rep.forward_lyapunov,
                bones: None,
                rejections: rep.rejections,
            });
        }
        let StationaryResult { measure, .. } =
            power_iterate_stationary(system, Some(&region.domain), mc.bins, mc.tv_tol, mc.max_iter)?;
        let lyap = lyapunov_exponent(system, &measure)?;
        if lyap >= 0.0 {
            return Err(SkewError::Contradiction(format!(
                "attractor exponent {} is not negative",
                lyap
            )));
        }
        let bones = bone_scan(
            system,
            &region.hull,
            mc.bone_depth,
            mc.bone_samples,
            mc.bone_threshold,
            mc.seed.wrapping_add(1000 + idx as u64),
        )?;
        strips.push(Strip {
            kind: StripKind::Attractor,
            domain: region.domain.clone(),
            measure,
            lyapunov: lyap,
            bones: Some(bones),
            rejections: 0,
        });
    }

    // Alternation holds by construction; verify the vertical order anyway.
    for pair in strips.windows(2) {
        for k in 0..system.n_states() {
            let below = pair[0].domain.bounds(k);
            let above = pair[1].domain.bounds(k);
            if let (Some(b), Some(a)) = (below, above) {
                if b.lo >= a.lo {
                    return Err(SkewError::Contradiction(
                        "strips are not vertically ordered".into(),
                    ));
                }
            }
        }
    }
    let attractors = strips.iter().filter(|s| s.kind == StripKind::Attractor).count();
    let repellers = strips.len() - attractors;
    Ok(StripReport {
        strips,
        attractors,
        repellers,
        attractor_bound: bound.bound,
        bound_witness: bound.witness,
    })
}

/// The per-state open gap between two vertically consecutive regions.
fn gap_between(lower: &TrappingRegion, upper: &TrappingRegion) -> Result<Domain> {
    let n = lower.hull.n_states();
    let mut per_state = Vec::with_capacity(n);
    for k in 0..n {
        let lo = lower
            .hull
            .bounds(k)
            .ok_or_else(|| SkewError::Structure("hull empty".into()))?
            .hi;
        let hi = upper
            .hull
            .bounds(k)
            .ok_or_else(|| SkewError::Structure("hull empty".into()))?
            .lo;
        if hi <= lo {
            return Err(SkewError::Contradiction("regions are not separated by a gap".into()));
        }
        per_state.push(vec![Interval::new(lo, hi)]);
    }
    Ok(Domain::from_intervals(per_state))
}

/// Exact unrolling of a multistep system to a step system over window
/// states; re-exported here as the two-sided entry point.
pub fn multistep_to_step(multi: &MultistepSystem) -> Result<(StepSystem, Vec<Word>)> {
    multi.unroll()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn s1_hull() -> Domain {
        Domain::from_hull(&[
            Interval::new(1.0 / 12.0, 11.0 / 12.0),
            Interval::new(1.0 / 12.0, 11.0 / 12.0),
        ])
    }

    #[test]
    fn pullback_arithmetic_s1() {
        let s1 = presets::s1();
        let hull = s1_hull();
        let iv = pullback_fiber(&s1, &hull, &BackwardWord(vec![0, 0, 0]), 0).unwrap();
        assert!((iv.lo - 1.0 / 12.0).abs() < 1e-14);
        assert!((iv.len() - 0.4f64.powi(3) * 10.0 / 12.0).abs() < 1e-14);
        // Empty past: the hull itself.
        let iv = pullback_fiber(&s1, &hull, &BackwardWord(vec![]), 1).unwrap();
        assert!((iv.lo - 1.0 / 12.0).abs() < 1e-14 && (iv.hi - 11.0 / 12.0).abs() < 1e-14);
    }

    #[test]
    fn pullback_nesting() {
        let s1 = presets::s1();
        let hull = s1_hull();
        let short = pullback_fiber(&s1, &hull, &BackwardWord(vec![0, 0, 0]), 0).unwrap();
        let long = pullback_fiber(&s1, &hull, &BackwardWord(vec![1, 0, 0, 0]), 0).unwrap();
        assert!(short.lo <= long.lo && long.hi <= short.hi);
        // Random leftward extensions never enlarge the interval.
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let w = s1.chain().sample_path(6, None, &mut rng);
            let base = BackwardWord(w.symbols()[1..].to_vec());
            let ext = BackwardWord(w.symbols().to_vec());
            let arrival = 0;
            let a = pullback_fiber(&s1, &hull, &base, arrival).unwrap();
            let b = pullback_fiber(&s1, &hull, &ext, arrival).unwrap();
            assert!(a.lo <= b.lo + 1e-15 && b.hi <= a.hi + 1e-15);
        }
    }

    #[test]
    fn equal_trailing_blocks_give_equal_depth_n_intervals() {
        let s1 = presets::s1();
        let hull = s1_hull();
        let a = BackwardWord(vec![0, 1, 0, 0]);
        let b = BackwardWord(vec![1, 1, 0, 0]);
        let ta = BackwardWord(a.0[2..].to_vec());
        let tb = BackwardWord(b.0[2..].to_vec());
        assert_eq!(
            pullback_fiber(&s1, &hull, &ta, 0).unwrap(),
            pullback_fiber(&s1, &hull, &tb, 0).unwrap()
        );
        // Trailing blocks agree on 100 (three symbols).
        assert!((a.distance(&b) - 0.125).abs() < 1e-15);
        assert_eq!(a.distance(&a), 0.0);
    }

    #[test]
    fn pullback_rejects_inadmissible() {
        let chain = crate::markov::MarkovChain::new(
            vec![vec![false, true], vec![true, true]],
            vec![vec![0.0, 1.0], vec![0.5, 0.5]],
        )
        .unwrap();
        let maps = vec![
            crate::fibermaps::FiberMap::affine(0.05, 0.4).unwrap(),
            crate::fibermaps::FiberMap::affine(0.55, 0.4).unwrap(),
        ];
        let sys = StepSystem::new(chain, maps).unwrap();
        let hull = s1_hull();
        assert!(pullback_fiber(&sys, &hull, &BackwardWord(vec![0, 0]), 0).is_err());
    }

    #[test]
    fn bone_scan_s1_decay_and_slope() {
        let s1 = presets::s1();
        let scan = bone_scan(&s1, &s1_hull(), 20, 200, 1e-6, 7).unwrap();
        assert_eq!(scan.per_depth[0].thick_fraction, 1.0);
        assert_eq!(scan.per_depth[19].thick_fraction, 0.0);
        // Both slopes constant 0.4, so every pullback has length exactly
        // 0.4^d (10/12) and the regression slope is log 0.4.
        assert!((scan.slope - 0.4f64.ln()).abs() < 1e-9, "slope {}", scan.slope);
        assert!((scan.per_depth[0].max_length - 0.4 * 10.0 / 12.0).abs() < 1e-12);
    }

    #[test]
    fn step_graph_iteration_s1() {
        let s1 = presets::s1();
        // Constant 0 drifts up.
        let g1 = iterate_step_graph(&s1, &[0.0, 0.0], 1).unwrap();
        assert!(g1.drift_up);
        let vals: Vec<f64> = g1.entries.iter().map(|(_, v)| *v).collect();
        assert!((vals[0] - 0.05).abs() < 1e-15 && (vals[1] - 0.55).abs() < 1e-15);
        // Depth 0 returns the constants.
        let g0 = iterate_step_graph(&s1, &[0.0, 0.0], 0).unwrap();
        assert!(g0.entries.iter().all(|(_, v)| *v == 0.0));
        // Monotone in depth: deeper pasts extending a word only raise an
        // up-drifting graph.
        let g3 = iterate_step_graph(&s1, &[0.0, 0.0], 3).unwrap();
        for (w, v) in &g3.entries {
            let trailing = Word(w.symbols()[2..].to_vec());
            let shallow = g1
                .entries
                .iter()
                .find(|(u, _)| *u == trailing)
                .map(|(_, v)| *v)
                .unwrap();
            assert!(*v >= shallow - 1e-15);
        }
        // All-ones pasts converge to 1/12 with ratio 0.4.
        let mut prev_gap = f64::INFINITY;
        for d in 1..=8 {
            let g = iterate_step_graph(&s1, &[0.0, 0.0], d).unwrap();
            let v = g
                .entries
                .iter()
                .find(|(w, _)| w.symbols().iter().all(|&s| s == 0))
                .map(|(_, v)| *v)
                .unwrap();
            let gap = (v - 1.0 / 12.0).abs();
            if prev_gap.is_finite() {
                assert!((gap / prev_gap - 0.4).abs() < 1e-9);
            }
            assert!(gap < prev_gap);
            prev_gap = gap;
        }
        // A non-drifting initial graph is rejected.
        assert!(iterate_step_graph(&s1, &[0.5, 0.5], 1).is_err());
        // Constant 1 drifts down.
        let g = iterate_step_graph(&s1, &[1.0, 1.0], 1).unwrap();
        assert!(!g.drift_up);
    }

    #[test]
    fn repeller_point_mass_one_state() {
        let sys = presets::one_state_two_sinks();
        let gap = Domain::from_hull(&[Interval::new(0.2, 0.8)]);
        let rep = repeller_analysis(&sys, &gap, 512, 20_000, 500, 3).unwrap();
        // All mass collapses onto the source at 0.5.
        let (lo, hi) = rep.measure.support_bounds(0).unwrap();
        assert!(lo <= 0.5 && 0.5 <= hi && hi - lo <= 2.0 / 512.0 + 1e-12);
        let expected = (1.0f64 - 1.2 * (3.0 * 0.25 - 1.5 + 0.66)).ln();
        assert!((rep.forward_lyapunov - expected).abs() < 1e-3);
        assert!(rep.forward_lyapunov > 0.0);
    }

    #[test]
    fn strip_decomposition_s1() {
        let s1 = presets::s1();
        let rep = strip_decomposition(&s1, 0.01, 0.001, &McParams::default()).unwrap();
        assert_eq!(rep.attractors, 1);
        assert_eq!(rep.repellers, 0);
        assert_eq!(rep.attractor_bound, 1);
        let a = &rep.strips[0];
        assert!((a.lyapunov - 0.4f64.ln()).abs() < 1e-12);
        assert!(a.bones.as_ref().unwrap().slope < -0.8);
    }

    #[test]
    fn strip_decomposition_s2_alternates() {
        let s2 = presets::s2();
        let mc = McParams { steps: 100_000, bone_depth: 12, bone_samples: 200, ..Default::default() };
        let rep = strip_decomposition(&s2, 0.005, 0.001, &mc).unwrap();
        assert_eq!(rep.attractors, 2);
        assert_eq!(rep.repellers, 1);
        assert_eq!(rep.attractor_bound, 2);
        let kinds: Vec<StripKind> = rep.strips.iter().map(|s| s.kind).collect();
        assert_eq!(kinds, vec![StripKind::Attractor, StripKind::Repeller, StripKind::Attractor]);
        assert!(rep.strips[0].lyapunov < 0.0);
        assert!(rep.strips[1].lyapunov > 0.0);
        assert!(rep.strips[2].lyapunov < 0.0);
    }

    #[test]
    fn strip_decomposition_gated_by_genericity() {
        let s3 = presets::s3();
        match strip_decomposition(&s3, 0.01, 0.001, &McParams::default()) {
            Err(SkewError::Genericity(msg)) => assert!(msg.contains("0.5")),
            other => panic!("expected genericity error, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn multistep_identity_when_memory_trivial() {
        let chain = presets::full_uniform_chain(2);
        let maps = vec![
            (Word(vec![0]), crate::fibermaps::FiberMap::affine(0.05, 0.4).unwrap()),
            (Word(vec![1]), crate::fibermaps::FiberMap::affine(0.55, 0.4).unwrap()),
        ];
        let multi = MultistepSystem::new(chain, (0, 0), maps).unwrap();
        let (step, labels) = multistep_to_step(&multi).unwrap();
        assert_eq!(step.n_states(), 2);
        assert_eq!(labels[0].symbols(), &[0]);
        assert_eq!(step.chain().transition()[0][1], 0.5);
    }
}
