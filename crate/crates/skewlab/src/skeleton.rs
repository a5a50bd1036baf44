//! Combinatorial-geometric core: simple transitions and returns, endpoint
//! candidates, the diffusion operator, trapping-domain construction,
//! monotone subwords and attractor-count bounds.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Result, SkewError};
use crate::fibermaps::{FiberMap, FixedPoint, FixedPointKind};
use crate::markov::{MarkovChain, Word};
use crate::system::StepSystem;

/// Classification tolerance for trapping margins.
pub const TRAP_TOL: f64 = 1e-9;

/// Stabilization tolerance for hull growth.
const HULL_TOL: f64 = 1e-13;
const HULL_MAX_ITER: usize = 200_000;

/// A closed subinterval of [0,1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi);
        Self { lo, hi }
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }
}

/// A per-state finite union of closed subintervals of [0,1], kept sorted
/// and merged.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    per_state: Vec<Vec<Interval>>,
}

impl Domain {
    pub fn empty(n_states: usize) -> Self {
        Self { per_state: vec![Vec::new(); n_states] }
    }

    pub fn full(n_states: usize) -> Self {
        Self { per_state: vec![vec![Interval::new(0.0, 1.0)]; n_states] }
    }

    /// One interval per state.
    pub fn from_hull(hull: &[Interval]) -> Self {
        Self { per_state: hull.iter().map(|&iv| vec![iv]).collect() }
    }

    pub fn from_intervals(per_state: Vec<Vec<Interval>>) -> Self {
        let mut d = Self { per_state };
        for s in &mut d.per_state {
            normalize(s);
        }
        d
    }

    pub fn n_states(&self) -> usize {
        self.per_state.len()
    }

    pub fn state(&self, k: usize) -> &[Interval] {
        &self.per_state[k]
    }

    pub fn insert(&mut self, k: usize, iv: Interval) {
        self.per_state[k].push(iv);
        normalize(&mut self.per_state[k]);
    }

    pub fn is_empty(&self) -> bool {
        self.per_state.iter().all(|s| s.is_empty())
    }

    /// Convex bounds of the state-k part, if nonempty.
    pub fn bounds(&self, k: usize) -> Option<Interval> {
        let s = &self.per_state[k];
        if s.is_empty() {
            None
        } else {
            Some(Interval::new(s[0].lo, s[s.len() - 1].hi))
        }
    }

    /// Fattens every interval by a closed `delta`-neighborhood, clipped to
    /// [0,1], merging overlaps.
    pub fn fatten(&self, delta: f64) -> Domain {
        let per_state = self
            .per_state
            .iter()
            .map(|s| {
                let mut out: Vec<Interval> = s
                    .iter()
                    .map(|iv| Interval::new((iv.lo - delta).max(0.0), (iv.hi + delta).min(1.0)))
                    .collect();
                normalize(&mut out);
                out
            })
            .collect();
        Domain { per_state }
    }

    pub fn union(&self, other: &Domain) -> Domain {
        let per_state = self
            .per_state
            .iter()
            .zip(&other.per_state)
            .map(|(a, b)| {
                let mut out = a.clone();
                out.extend_from_slice(b);
                normalize(&mut out);
                out
            })
            .collect();
        Domain { per_state }
    }

    /// Minimal signed containment margin of `self` inside `other`
    /// (negative when some interval escapes).
    pub fn containment_margin(&self, other: &Domain) -> f64 {
        let mut worst = f64::INFINITY;
        for (k, s) in self.per_state.iter().enumerate() {
            for iv in s {
                worst = worst.min(interval_margin(*iv, &other.per_state[k]));
            }
        }
        worst
    }

    pub fn approx_eq(&self, other: &Domain, tol: f64) -> bool {
        self.per_state.len() == other.per_state.len()
            && self.per_state.iter().zip(&other.per_state).all(|(a, b)| {
                a.len() == b.len()
                    && a.iter()
                        .zip(b)
                        .all(|(x, y)| (x.lo - y.lo).abs() < tol && (x.hi - y.hi).abs() < tol)
            })
    }
}

fn normalize(intervals: &mut Vec<Interval>) {
    intervals.sort_by(|a, b| a.lo.partial_cmp(&b.lo).unwrap());
    let mut merged: Vec<Interval> = Vec::with_capacity(intervals.len());
    for &iv in intervals.iter() {
        match merged.last_mut() {
            Some(last) if iv.lo <= last.hi => last.hi = last.hi.max(iv.hi),
            _ => merged.push(iv),
        }
    }
    *intervals = merged;
}

/// Best signed margin of `iv` inside the union `cover`.
fn interval_margin(iv: Interval, cover: &[Interval]) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for c in cover {
        let m = (iv.lo - c.lo).min(c.hi - iv.hi);
        best = best.max(m);
    }
    best
}

/// A simple transition or simple return word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimpleComposition {
    pub word: Word,
    pub kind: CompositionKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompositionKind {
    /// All symbols pairwise distinct; the length-1 word is the trivial
    /// identity transition at its state.
    Transition,
    /// First symbol equals the last, interior pairwise distinct.
    Return,
}

/// Enumerates all simple transitions and simple returns, lexicographically
/// sorted. A transition word `w_1..w_n` realizes the path map
/// `f_{w_{n-1}} . ... . f_{w_1} : I_{w_1} -> I_{w_n}`; a return word
/// `w_1..w_n w_1` realizes the self-map of `I_{w_1}` composing all symbols
/// but the final repeat.
pub fn enumerate_skeleton(chain: &MarkovChain) -> (Vec<Word>, Vec<Word>) {
    let n = chain.n_states();
    let mut transitions: Vec<Word> = Vec::new();
    let mut stack: Vec<Vec<usize>> = (0..n).map(|s| vec![s]).collect();
    while let Some(cur) = stack.pop() {
        for s in chain.successors(*cur.last().unwrap()) {
            if !cur.contains(&s) {
                let mut next = cur.clone();
                next.push(s);
                stack.push(next);
            }
        }
        transitions.push(Word(cur));
    }
    transitions.sort();
    let mut returns: Vec<Word> = transitions
        .iter()
        .filter(|w| chain.is_admissible_pair(w.last(), w.first()))
        .map(|w| {
            let mut sym = w.symbols().to_vec();
            sym.push(w.first());
            Word(sym)
        })
        .collect();
    returns.sort();
    (transitions, returns)
}

/// The self-map realized by a simple return word.
pub fn return_map(system: &StepSystem, ret: &Word) -> Result<FiberMap> {
    debug_assert_eq!(ret.first(), ret.last());
    let prefix = Word(ret.symbols()[..ret.len() - 1].to_vec());
    system.compose_word(&prefix)
}

/// Fixed points of every simple return, keyed by the return's base state.
/// Errors on a parabolic fixed point (genericity condition 1 violation).
pub fn return_fixed_points(system: &StepSystem) -> Result<Vec<(Word, Vec<FixedPoint>)>> {
    let (_, returns) = enumerate_skeleton(system.chain());
    let mut out = Vec::with_capacity(returns.len());
    for ret in returns {
        let fps = return_map(system, &ret)?.fixed_points();
        if let Some(p) = fps.iter().find(|p| p.kind == FixedPointKind::Parabolic) {
            return Err(SkewError::Genericity(format!(
                "return {} has a parabolic fixed point at {} (multiplier {})",
                ret, p.location, p.multiplier
            )));
        }
        out.push((ret, fps));
    }
    Ok(out)
}

/// The finite candidate set containing every support endpoint at state `k`:
/// images of attracting return fixed points under simple transitions
/// arriving at `k` (including the trivial identity transition).
pub fn endpoint_candidates(system: &StepSystem, k: usize) -> Result<Vec<f64>> {
    let (transitions, _) = enumerate_skeleton(system.chain());
    let returns = return_fixed_points(system)?;
    let mut points = Vec::new();
    for t in transitions.iter().filter(|t| t.last() == k) {
        let j = t.first();
        for (ret, fps) in returns.iter().filter(|(r, _)| r.first() == j) {
            let _ = ret;
            for fp in fps.iter().filter(|p| p.kind == FixedPointKind::Attracting) {
                points.push(system.path_image(t, fp.location)?);
            }
        }
    }
    points.sort_by(|a, b| a.partial_cmp(b).unwrap());
    points.dedup_by(|a, b| (*a - *b).abs() < 1e-10);
    Ok(points)
}

/// One application of the diffusion operator, optionally delta-dispersed:
/// `Phi(D)_m = union over admissible (k,m) of f_k(D_k)`, fattened by a
/// closed delta-neighborhood and clipped to [0,1].
pub fn diffusion_step(system: &StepSystem, domain: &Domain, delta: f64) -> Domain {
    let n = system.n_states();
    let mut out = Domain::empty(n);
    for k in 0..n {
        for iv in domain.state(k) {
            let (lo, hi) = system.map(k).map_interval(iv.lo, iv.hi);
            for m in system.chain().successors(k) {
                out.per_state[m].push(Interval::new(lo, hi));
            }
        }
    }
    for s in &mut out.per_state {
        normalize(s);
    }
    if delta > 0.0 {
        out.fatten(delta)
    } else {
        out
    }
}

/// Trapping verdict for a domain, with the minimal boundary margin or an
/// escaping witness.
#[derive(Debug, Clone, PartialEq)]
pub enum Trapping {
    Strict { margin: f64 },
    Nonstrict { margin: f64 },
    NotTrapping { from_state: usize, to_state: usize, escaping_point: f64 },
}

pub fn is_trapping(system: &StepSystem, domain: &Domain) -> Trapping {
    let mut worst = f64::INFINITY;
    for k in 0..system.n_states() {
        for iv in domain.state(k) {
            let (lo, hi) = system.map(k).map_interval(iv.lo, iv.hi);
            for m in system.chain().successors(k) {
                let margin = interval_margin(Interval::new(lo, hi), domain.state(m));
                if margin < -TRAP_TOL {
                    // Report whichever endpoint sits further outside.
                    let esc_lo = interval_margin(Interval::new(lo, lo), domain.state(m));
                    let escaping_point = if esc_lo < margin + TRAP_TOL { lo } else { hi };
                    return Trapping::NotTrapping { from_state: k, to_state: m, escaping_point };
                }
                worst = worst.min(margin);
            }
        }
    }
    if worst > TRAP_TOL {
        Trapping::Strict { margin: worst }
    } else {
        Trapping::Nonstrict { margin: worst }
    }
}

/// Result of the trapping construction.
#[derive(Debug, Clone)]
pub struct TrappingConstruction {
    pub domain: Domain,
    pub margin: f64,
    /// Whether `Phi^{N+1}(U_eps) subset int union_{j<=N} Phi^j(U_eps)` held.
    pub inclusion_held: bool,
}

/// Builds a strictly trapping neighborhood of a nonstrictly trapping seed:
/// the union of the first N+1 delta-dispersed diffusions of the closed
/// eps-neighborhood. Fails with a retry signal (halved parameters) when
/// strictness is not achieved.
pub fn build_trapping_domain(
    system: &StepSystem,
    seed: &Domain,
    eps: f64,
    delta: f64,
) -> Result<TrappingConstruction> {
    let n = system.n_states();
    let u = seed.fatten(eps);

    // Inclusion check with the undispersed diffusion.
    let mut union_plain = u.clone();
    let mut cur = u.clone();
    for _ in 0..n {
        cur = diffusion_step(system, &cur, 0.0);
        union_plain = union_plain.union(&cur);
    }
    cur = diffusion_step(system, &cur, 0.0);
    let inclusion_held = cur.containment_margin(&union_plain) > 0.0;

    let mut domain = u.clone();
    let mut cur = u;
    for _ in 0..n {
        cur = diffusion_step(system, &cur, delta);
        domain = domain.union(&cur);
    }
    match is_trapping(system, &domain) {
        Trapping::Strict { margin } => Ok(TrappingConstruction { domain, margin, inclusion_held }),
        _ => Err(SkewError::Retry { epsilon: eps / 2.0, delta: delta / 2.0 }),
    }
}

/// A minimal nonstrictly trapping support hull together with its strictly
/// trapping fattening.
#[derive(Debug, Clone)]
pub struct TrappingRegion {
    pub hull: Domain,
    pub domain: Domain,
    pub margin: f64,
    pub inclusion_held: bool,
}

/// Grows the minimal forward-invariant single-interval-per-state hull
/// containing the point `x` at state `k`.
fn grow_hull(system: &StepSystem, k: usize, x: f64) -> Vec<Interval> {
    let n = system.n_states();
    let mut hull: Vec<Option<Interval>> = vec![None; n];
    hull[k] = Some(Interval::new(x, x));
    for _ in 0..HULL_MAX_ITER {
        let mut motion: f64 = 0.0;
        for i in 0..n {
            if let Some(iv) = hull[i] {
                let (lo, hi) = system.map(i).map_interval(iv.lo, iv.hi);
                for j in system.chain().successors(i) {
                    match &mut hull[j] {
                        Some(t) => {
                            if lo < t.lo {
                                motion = motion.max(t.lo - lo);
                                t.lo = lo;
                            }
                            if hi > t.hi {
                                motion = motion.max(hi - t.hi);
                                t.hi = hi;
                            }
                        }
                        slot => {
                            *slot = Some(Interval::new(lo, hi));
                            motion = 1.0;
                        }
                    }
                }
            }
        }
        if motion < HULL_TOL {
            break;
        }
    }
    hull.into_iter()
        .map(|iv| iv.expect("transitive chain fills every state"))
        .collect()
}

/// Finds the minimal nonstrictly trapping support hulls (one per ergodic
/// stationary measure) and a strictly trapping fattening of each, ordered
/// vertically.
pub fn minimal_trapping_domains(
    system: &StepSystem,
    eps: f64,
    delta: f64,
) -> Result<Vec<TrappingRegion>> {
    let n = system.n_states();
    let mut hulls: Vec<Vec<Interval>> = Vec::new();
    for k in 0..n {
        for c in endpoint_candidates(system, k)? {
            let h = grow_hull(system, k, c);
            if !hulls.iter().any(|g| hull_approx_eq(g, &h, 1e-7)) {
                hulls.push(h);
            }
        }
    }
    // Keep minimal hulls only: a candidate that is not itself a support
    // endpoint grows a hull strictly containing a minimal one.
    let minimal: Vec<Vec<Interval>> = hulls
        .iter()
        .filter(|h| {
            !hulls.iter().any(|g| {
                !hull_approx_eq(g, h, 1e-7) && hull_contains(h, g, 1e-9)
            })
        })
        .cloned()
        .collect();
    // Pairwise disjointness with consistent vertical order.
    let mut order: Vec<Vec<Interval>> = minimal;
    order.sort_by(|a, b| a[0].lo.partial_cmp(&b[0].lo).unwrap());
    for pair in order.windows(2) {
        let (lower, upper) = (&pair[0], &pair[1]);
        for k in 0..n {
            if lower[k].hi >= upper[k].lo {
                return Err(SkewError::Genericity(format!(
                    "support hulls overlap without coinciding at state {}: [{}, {}] vs [{}, {}]",
                    k + 1,
                    lower[k].lo,
                    lower[k].hi,
                    upper[k].lo,
                    upper[k].hi
                )));
            }
        }
    }
    let mut out = Vec::with_capacity(order.len());
    for hull in order {
        let hull_domain = Domain::from_hull(&hull);
        let mut e = eps;
        let mut d = delta;
        let mut built = None;
        for _ in 0..8 {
            match build_trapping_domain(system, &hull_domain, e, d) {
                Ok(c) => {
                    built = Some(c);
                    break;
                }
                Err(SkewError::Retry { epsilon, delta }) => {
                    e = epsilon;
                    d = delta;
                }
                Err(other) => return Err(other),
            }
        }
        let c = built.ok_or_else(|| {
            SkewError::Convergence("trapping construction kept failing after 8 halvings".into(), e)
        })?;
        out.push(TrappingRegion {
            hull: hull_domain,
            domain: c.domain,
            margin: c.margin,
            inclusion_held: c.inclusion_held,
        });
    }
    // The fattened domains must stay disjoint and in the same order.
    for pair in out.windows(2) {
        for k in 0..n {
            let lo_hi = pair[0].domain.bounds(k).unwrap().hi;
            let up_lo = pair[1].domain.bounds(k).unwrap().lo;
            if lo_hi >= up_lo {
                return Err(SkewError::Genericity(
                    "trapping fattenings overlap; decrease eps/delta".into(),
                ));
            }
        }
    }
    Ok(out)
}

fn hull_approx_eq(a: &[Interval], b: &[Interval], tol: f64) -> bool {
    a.iter()
        .zip(b)
        .all(|(x, y)| (x.lo - y.lo).abs() < tol && (x.hi - y.hi).abs() < tol)
}

/// `inner` contained in `outer` at every state (within `tol`).
fn hull_contains(outer: &[Interval], inner: &[Interval], tol: f64) -> bool {
    outer
        .iter()
        .zip(inner)
        .all(|(o, i)| o.lo <= i.lo + tol && i.hi <= o.hi + tol)
}

/// Removes the simple returns along `word` that raise the fiber point,
/// producing a word with the same endpoints whose orbit is downwards
/// monotonous and whose final image does not exceed the original one.
pub fn monotone_subword(system: &StepSystem, word: &Word, x0: f64) -> Result<Word> {
    if !system.chain().is_admissible_word(word.symbols()) {
        return Err(SkewError::Input(format!("inadmissible word {}", word)));
    }
    let syms = word.symbols();
    let mut m: Vec<usize> = vec![syms[0]];
    let mut values: Vec<f64> = vec![x0];
    for &s in &syms[1..] {
        let appended = system.map(*m.last().unwrap()).eval(*values.last().unwrap());
        match m.iter().rposition(|&t| t == s) {
            None => {
                m.push(s);
                values.push(appended);
            }
            Some(pos) => {
                if appended < values[pos] {
                    m.push(s);
                    values.push(appended);
                } else {
                    m.truncate(pos + 1);
                    values.truncate(pos + 1);
                }
            }
        }
    }
    Ok(Word(m))
}

/// Checks the downwards-monotonicity property of an orbit: strictly
/// decreasing values at every revisited state.
pub fn is_downwards_monotone(system: &StepSystem, word: &Word, x0: f64) -> Result<bool> {
    let values = system.orbit_along(word, x0)?;
    let syms = word.symbols();
    for i in 0..syms.len() {
        for j in i + 1..syms.len() {
            if syms[i] == syms[j] && values[j] >= values[i] {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Upper bound on the number of attractors: the minimum over admissible
/// cyclic words of length at most `max_period` of the number of attracting
/// fixed points of the composed map. Words with parabolic fixed points are
/// skipped (reported in `skipped`).
#[derive(Debug, Clone)]
pub struct AttractorBound {
    pub bound: usize,
    pub witness: Word,
    pub skipped: Vec<Word>,
}

pub fn attractor_count_bound(system: &StepSystem, max_period: usize) -> Result<AttractorBound> {
    assert!(max_period >= 1);
    let chain = system.chain();
    let mut best: Option<(usize, Word)> = None;
    let mut skipped = Vec::new();
    for len in 1..=max_period {
        for w in crate::system::admissible_words(chain, len) {
            if !chain.is_admissible_pair(w.last(), w.first()) {
                continue;
            }
            let map = system.compose_word(&w)?;
            let fps = map.fixed_points();
            if fps.iter().any(|p| p.kind == FixedPointKind::Parabolic) {
                skipped.push(w);
                continue;
            }
            let count = fps.iter().filter(|p| p.kind == FixedPointKind::Attracting).count();
            if best.as_ref().map_or(true, |(b, _)| count < *b) {
                best = Some((count, w));
            }
        }
    }
    let (bound, witness) = best.ok_or_else(|| {
        SkewError::Genericity("every cyclic word up to the period cap was parabolic".into())
    })?;
    Ok(AttractorBound { bound, witness, skipped })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SqueezeTarget {
    Lower,
    Upper,
}

const SQUEEZE_DEPTH_CAP: usize = 64;
const SQUEEZE_BEAM: usize = 256;

#[derive(Debug)]
struct SqueezeNode {
    score: f64,
    word: Vec<usize>,
    lo: f64,
    hi: f64,
}

impl PartialEq for SqueezeNode {
    fn eq(&self, other: &Self) -> bool {
        self.score == other.score && self.word == other.word
    }
}
impl Eq for SqueezeNode {}
impl Ord for SqueezeNode {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap by score, ties broken by word for determinism.
        other
            .score
            .partial_cmp(&self.score)
            .unwrap()
            .then_with(|| other.word.cmp(&self.word))
    }
}
impl PartialOrd for SqueezeNode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Searches for an admissible word from `k` to `k2` whose path map squeezes
/// `hull_k` into the closed eps-neighborhood of the chosen endpoint of
/// `hull_{k2}`. Best-first over image position, depth-capped.
pub fn find_squeezing_word(
    system: &StepSystem,
    hull: &Domain,
    k: usize,
    k2: usize,
    target: SqueezeTarget,
    eps: f64,
) -> Result<Word> {
    let start = hull
        .bounds(k)
        .ok_or_else(|| SkewError::Input(format!("hull empty at state {}", k + 1)))?;
    let goal = hull
        .bounds(k2)
        .ok_or_else(|| SkewError::Input(format!("hull empty at state {}", k2 + 1)))?;
    let e = match target {
        SqueezeTarget::Lower => goal.lo,
        SqueezeTarget::Upper => goal.hi,
    };
    let score = |lo: f64, hi: f64| (lo - e).abs().max((hi - e).abs());
    let mut heap: BinaryHeap<SqueezeNode> = BinaryHeap::new();
    heap.push(SqueezeNode { score: score(start.lo, start.hi), word: vec![k], lo: start.lo, hi: start.hi });
    let mut expanded = 0usize;
    while let Some(node) = heap.pop() {
        if *node.word.last().unwrap() == k2 && node.score <= eps {
            return Ok(Word(node.word));
        }
        if node.word.len() >= SQUEEZE_DEPTH_CAP {
            continue;
        }
        expanded += 1;
        if expanded > SQUEEZE_BEAM * SQUEEZE_DEPTH_CAP {
            break;
        }
        let cur = *node.word.last().unwrap();
        let (lo, hi) = system.map(cur).map_interval(node.lo, node.hi);
        for s in system.chain().successors(cur) {
            let mut word = node.word.clone();
            word.push(s);
            heap.push(SqueezeNode { score: score(lo, hi), word, lo, hi });
        }
        if heap.len() > SQUEEZE_BEAM * 8 {
            // Trim the worst nodes to keep the frontier bounded.
            let mut nodes: Vec<SqueezeNode> = heap.into_vec();
            nodes.sort();
            nodes.reverse();
            nodes.truncate(SQUEEZE_BEAM * 4);
            heap = nodes.into_iter().collect();
        }
    }
    Err(SkewError::SearchCap(format!(
        "no squeezing word from {} to {} within depth {}",
        k + 1,
        k2 + 1,
        SQUEEZE_DEPTH_CAP
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn skeleton_full_two_state_shift() {
        let s1 = presets::s1();
        let (transitions, returns) = enumerate_skeleton(s1.chain());
        let t: Vec<String> = transitions.iter().map(|w| w.to_string()).collect();
        let r: Vec<String> = returns.iter().map(|w| w.to_string()).collect();
        assert_eq!(t, vec!["1", "12", "2", "21"]);
        assert_eq!(r, vec!["11", "121", "212", "22"]);
    }

    #[test]
    fn skeleton_one_state() {
        let sys = presets::one_state_contraction();
        let (transitions, returns) = enumerate_skeleton(sys.chain());
        assert_eq!(transitions.len(), 1);
        assert_eq!(returns.len(), 1);
        assert_eq!(returns[0].symbols(), &[0, 0]);
    }

    #[test]
    fn skeleton_three_state_full_shift_counts() {
        let chain = presets::full_uniform_chain(3);
        let (transitions, returns) = enumerate_skeleton(&chain);
        // 3 length-1 + 6 length-2 + 6 length-3
        assert_eq!(transitions.len(), 15);
        assert_eq!(returns.len(), 15);
        // Brute-force oracle: enumerate all admissible words with distinct
        // symbols directly.
        let mut count = 0;
        for len in 1..=3 {
            for w in crate::system::admissible_words(&chain, len) {
                let mut sym = w.symbols().to_vec();
                sym.sort_unstable();
                sym.dedup();
                if sym.len() == len {
                    count += 1;
                }
            }
        }
        assert_eq!(count, 15);
    }

    #[test]
    fn return_fixed_points_s1() {
        let s1 = presets::s1();
        let fps = return_fixed_points(&s1).unwrap();
        let mut locs: Vec<f64> =
            fps.iter().flat_map(|(_, v)| v.iter().map(|p| p.location)).collect();
        locs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let expected = [1.0 / 12.0, 0.27 / 0.84, 0.57 / 0.84, 11.0 / 12.0];
        assert_eq!(locs.len(), 4);
        for (l, e) in locs.iter().zip(expected.iter()) {
            assert!((l - e).abs() < 1e-12);
        }
    }

    #[test]
    fn endpoint_candidates_s1() {
        let s1 = presets::s1();
        // State 1 sees the return fixed points at state 1 (via the trivial
        // transition) plus f_2-images of the state-2 ones.
        let c1 = endpoint_candidates(&s1, 0).unwrap();
        let c2 = endpoint_candidates(&s1, 1).unwrap();
        let expect1 = [1.0 / 12.0, 0.57 / 0.84, 11.0 / 12.0];
        let expect2 = [1.0 / 12.0, 0.27 / 0.84, 11.0 / 12.0];
        assert_eq!(c1.len(), 3);
        assert_eq!(c2.len(), 3);
        for (a, e) in c1.iter().zip(expect1.iter()) {
            assert!((a - e).abs() < 1e-12);
        }
        for (a, e) in c2.iter().zip(expect2.iter()) {
            assert!((a - e).abs() < 1e-12);
        }
        // The union over states is the closure claimed for S1, and the
        // support extremes 1/12 and 11/12 are present at every state.
        let mut union: Vec<f64> = c1.iter().chain(c2.iter()).cloned().collect();
        union.sort_by(|a, b| a.partial_cmp(b).unwrap());
        union.dedup_by(|a, b| (*a - *b).abs() < 1e-10);
        assert_eq!(union.len(), 4);
    }

    #[test]
    fn endpoint_candidates_one_state() {
        let sys = presets::one_state_contraction();
        let c = endpoint_candidates(&sys, 0).unwrap();
        assert_eq!(c.len(), 1);
        assert!((c[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn diffusion_of_full_domain_s1() {
        let s1 = presets::s1();
        let d1 = diffusion_step(&s1, &Domain::full(2), 0.0);
        for k in 0..2 {
            let ivs = d1.state(k);
            assert_eq!(ivs.len(), 2);
            assert!((ivs[0].lo - 0.05).abs() < 1e-15 && (ivs[0].hi - 0.45).abs() < 1e-15);
            assert!((ivs[1].lo - 0.55).abs() < 1e-15 && (ivs[1].hi - 0.95).abs() < 1e-15);
        }
        let d2 = diffusion_step(&s1, &d1, 0.0);
        let expected = [(0.07, 0.23), (0.27, 0.43), (0.57, 0.73), (0.77, 0.93)];
        for k in 0..2 {
            let ivs = d2.state(k);
            assert_eq!(ivs.len(), 4);
            for (iv, (lo, hi)) in ivs.iter().zip(expected.iter()) {
                assert!((iv.lo - lo).abs() < 1e-12 && (iv.hi - hi).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dispersed_diffusion_of_partial_domain() {
        let s1 = presets::s1();
        let mut d = Domain::empty(2);
        d.insert(0, Interval::new(0.2, 0.3));
        let out = diffusion_step(&s1, &d, 0.01);
        for k in 0..2 {
            let ivs = out.state(k);
            assert_eq!(ivs.len(), 1);
            assert!((ivs[0].lo - 0.12).abs() < 1e-12 && (ivs[0].hi - 0.18).abs() < 1e-12);
        }
    }

    #[test]
    fn trapping_classification_s1() {
        let s1 = presets::s1();
        let strict = Domain::from_hull(&[Interval::new(0.04, 0.96), Interval::new(0.04, 0.96)]);
        match is_trapping(&s1, &strict) {
            Trapping::Strict { margin } => assert!(margin >= 0.01),
            other => panic!("expected strict, got {:?}", other),
        }
        let hull = Domain::from_hull(&[
            Interval::new(1.0 / 12.0, 11.0 / 12.0),
            Interval::new(1.0 / 12.0, 11.0 / 12.0),
        ]);
        assert!(matches!(is_trapping(&s1, &hull), Trapping::Nonstrict { .. }));
        let bad = Domain::from_hull(&[Interval::new(0.5, 0.6), Interval::new(0.5, 0.6)]);
        match is_trapping(&s1, &bad) {
            Trapping::NotTrapping { from_state, escaping_point, .. } => {
                // f_1([0.5, 0.6]) = [0.25, 0.29] escapes below.
                assert_eq!(from_state, 0);
                assert!((escaping_point - 0.25).abs() < 1e-12);
            }
            other => panic!("expected not trapping, got {:?}", other),
        }
    }

    #[test]
    fn diffusion_monotone_and_trapping_cross_check() {
        let s1 = presets::s1();
        let inner = Domain::from_hull(&[Interval::new(0.2, 0.6), Interval::new(0.3, 0.5)]);
        let outer = Domain::from_hull(&[Interval::new(0.1, 0.7), Interval::new(0.2, 0.8)]);
        let phi_inner = diffusion_step(&s1, &inner, 0.0);
        let phi_outer = diffusion_step(&s1, &outer, 0.0);
        assert!(phi_inner.containment_margin(&phi_outer) >= 0.0);

        // D trapping iff Phi(D) inside D.
        let strict = Domain::from_hull(&[Interval::new(0.04, 0.96), Interval::new(0.04, 0.96)]);
        let phi = diffusion_step(&s1, &strict, 0.0);
        assert!(phi.containment_margin(&strict) > 0.0);
    }

    #[test]
    fn build_trapping_domain_s1() {
        let s1 = presets::s1();
        let hull = Domain::from_hull(&[
            Interval::new(1.0 / 12.0, 11.0 / 12.0),
            Interval::new(1.0 / 12.0, 11.0 / 12.0),
        ]);
        let c = build_trapping_domain(&s1, &hull, 0.01, 0.001).unwrap();
        assert!(c.margin > 0.0);
        assert!(c.inclusion_held);
        for k in 0..2 {
            let b = c.domain.bounds(k).unwrap();
            assert!(b.lo <= 1.0 / 12.0 - 0.01 + 1e-12);
            assert!(b.hi >= 11.0 / 12.0 + 0.01 - 1e-12);
        }
    }

    #[test]
    fn build_trapping_domain_one_state() {
        let sys = presets::one_state_contraction();
        let hull = Domain::from_hull(&[Interval::new(0.5, 0.5)]);
        let c = build_trapping_domain(&sys, &hull, 0.05, 0.01).unwrap();
        assert!(c.margin > 0.0);
        assert_eq!(c.domain.state(0).len(), 1);
    }

    #[test]
    fn minimal_domains_s1_single_attractor() {
        let s1 = presets::s1();
        let regions = minimal_trapping_domains(&s1, 0.01, 0.001).unwrap();
        assert_eq!(regions.len(), 1);
        for k in 0..2 {
            let h = regions[0].hull.bounds(k).unwrap();
            assert!((h.lo - 1.0 / 12.0).abs() < 1e-9);
            assert!((h.hi - 11.0 / 12.0).abs() < 1e-9);
        }
    }

    #[test]
    fn minimal_domains_s2_two_attractors() {
        let s2 = presets::s2();
        let regions = minimal_trapping_domains(&s2, 0.005, 0.001).unwrap();
        assert_eq!(regions.len(), 2);
        let low = regions[0].hull.bounds(0).unwrap();
        let high = regions[1].hull.bounds(0).unwrap();
        assert!(low.hi < 0.5 && high.lo > 0.5);
    }

    #[test]
    fn monotone_subword_examples() {
        let s1 = presets::s1();
        let w = s1.chain().word(vec![0, 1, 0]).unwrap();
        let kept = monotone_subword(&s1, &w, 0.9).unwrap();
        assert_eq!(kept.symbols(), &[0, 1, 0]);
        let cut = monotone_subword(&s1, &w, 0.2).unwrap();
        assert_eq!(cut.symbols(), &[0]);
        let single = s1.chain().word(vec![1]).unwrap();
        assert_eq!(monotone_subword(&s1, &single, 0.3).unwrap().symbols(), &[1]);
    }

    #[test]
    fn attractor_count_bounds() {
        let s1 = presets::s1();
        let b = attractor_count_bound(&s1, 3).unwrap();
        assert_eq!(b.bound, 1);
        assert_eq!(b.witness.symbols(), &[0]);

        let s2 = presets::s2();
        let b = attractor_count_bound(&s2, 2).unwrap();
        assert_eq!(b.bound, 2);

        let one = presets::one_state_contraction();
        assert_eq!(attractor_count_bound(&one, 1).unwrap().bound, 1);
    }

    #[test]
    fn attractor_bound_nonincreasing_in_period() {
        let s2 = presets::s2();
        let b1 = attractor_count_bound(&s2, 1).unwrap().bound;
        let b2 = attractor_count_bound(&s2, 2).unwrap().bound;
        let b3 = attractor_count_bound(&s2, 3).unwrap().bound;
        assert!(b2 <= b1 && b3 <= b2);
    }

    #[test]
    fn squeezing_words_s1() {
        let s1 = presets::s1();
        let hull = Domain::from_hull(&[
            Interval::new(1.0 / 12.0, 11.0 / 12.0),
            Interval::new(1.0 / 12.0, 11.0 / 12.0),
        ]);
        let w = find_squeezing_word(&s1, &hull, 0, 0, SqueezeTarget::Lower, 0.01).unwrap();
        // Check the postcondition: the path image of the hull hugs the
        // lower endpoint.
        let map = s1.path_map(&w).unwrap().unwrap();
        let (lo, hi) = map.map_interval(1.0 / 12.0, 11.0 / 12.0);
        assert!((lo - 1.0 / 12.0).abs() <= 0.01 && (hi - 1.0 / 12.0).abs() <= 0.01);
        assert!(w.symbols().iter().all(|&s| s == 0), "pure f_1 word squeezes fastest");

        let w = find_squeezing_word(&s1, &hull, 0, 0, SqueezeTarget::Upper, 0.01).unwrap();
        let map = s1.path_map(&w).unwrap().unwrap();
        let (lo, hi) = map.map_interval(1.0 / 12.0, 11.0 / 12.0);
        assert!((lo - 11.0 / 12.0).abs() <= 0.01 && (hi - 11.0 / 12.0).abs() <= 0.01);

        // eps = 1: the trivial identity word suffices.
        let w = find_squeezing_word(&s1, &hull, 0, 0, SqueezeTarget::Lower, 1.0).unwrap();
        assert_eq!(w.symbols(), &[0]);
    }
}
