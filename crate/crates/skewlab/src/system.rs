//! Step skew products: a base chain plus one fiber map per state. Also
//! multistep systems (maps indexed by admissible memory windows) and their
//! exact unrolling to step systems.

use rand::Rng;

use crate::error::{Result, SkewError};
use crate::fibermaps::FiberMap;
use crate::markov::{MarkovChain, Word};

/// A step skew product: the fiber map applied at a point depends only on
/// the current base state.
#[derive(Debug, Clone)]
pub struct StepSystem {
    chain: MarkovChain,
    maps: Vec<FiberMap>,
}

impl StepSystem {
    pub fn new(chain: MarkovChain, maps: Vec<FiberMap>) -> Result<Self> {
        if maps.len() != chain.n_states() {
            return Err(SkewError::Input(format!(
                "need one fiber map per state: {} maps for {} states",
                maps.len(),
                chain.n_states()
            )));
        }
        Ok(Self { chain, maps })
    }

    pub fn chain(&self) -> &MarkovChain {
        &self.chain
    }

    pub fn n_states(&self) -> usize {
        self.chain.n_states()
    }

    pub fn map(&self, state: usize) -> &FiberMap {
        &self.maps[state]
    }

    pub fn maps(&self) -> &[FiberMap] {
        &self.maps
    }

    /// Composition `f_{w_m} . ... . f_{w_1}` of the maps of every symbol of
    /// the word, exact within the affine/Moebius families.
    pub fn compose_word(&self, word: &Word) -> Result<FiberMap> {
        if !self.chain.is_admissible_word(word.symbols()) {
            return Err(SkewError::Input(format!("inadmissible word {}", word)));
        }
        let mut acc = self.maps[word.first()].clone();
        for &s in &word.symbols()[1..] {
            acc = acc.compose(&self.maps[s]);
        }
        Ok(acc)
    }

    /// The map realized by traversing `word` as a state path: applies the
    /// maps of all symbols but the last, taking `I_{w_1}` to `I_{w_m}`.
    /// A single-symbol word is the identity path.
    pub fn path_map(&self, word: &Word) -> Result<Option<FiberMap>> {
        if !self.chain.is_admissible_word(word.symbols()) {
            return Err(SkewError::Input(format!("inadmissible word {}", word)));
        }
        if word.len() == 1 {
            return Ok(None);
        }
        let prefix = Word(word.symbols()[..word.len() - 1].to_vec());
        Ok(Some(self.compose_word(&prefix)?))
    }

    /// Evaluates the path map at a point (identity for length-1 words).
    pub fn path_image(&self, word: &Word, x: f64) -> Result<f64> {
        Ok(match self.path_map(word)? {
            None => x,
            Some(m) => m.eval(x),
        })
    }

    /// Fiber values along the state path `word`: `values[i]` is the point
    /// upon arrival at `word[i]`, starting from `x0`.
    pub fn orbit_along(&self, word: &Word, x0: f64) -> Result<Vec<f64>> {
        if !self.chain.is_admissible_word(word.symbols()) {
            return Err(SkewError::Input(format!("inadmissible word {}", word)));
        }
        let mut values = Vec::with_capacity(word.len());
        let mut x = x0;
        values.push(x);
        for pair in word.symbols().windows(2) {
            x = self.maps[pair[0]].eval(x);
            values.push(x);
        }
        Ok(values)
    }

    /// One step of the random walk `(state, x) -> (next, f_state(x))`.
    pub fn walk_step<R: Rng>(&self, state: usize, x: f64, rng: &mut R) -> (usize, f64) {
        let y = self.maps[state].eval(x);
        (self.chain.step(state, rng), y)
    }
}

/// A skew product whose fiber maps depend on a memory window
/// `omega_{t-k} .. omega_{t+l}` of the driving sequence.
#[derive(Debug, Clone)]
pub struct MultistepSystem {
    chain: MarkovChain,
    /// (k, l): symbols of past and future the maps may read.
    memory: (usize, usize),
    /// One map per admissible window of length k+l+1, keyed by the window
    /// in the lexicographic order produced by [`admissible_words`].
    windows: Vec<Word>,
    maps: Vec<FiberMap>,
}

/// All admissible words of a given length, lexicographically sorted.
pub fn admissible_words(chain: &MarkovChain, len: usize) -> Vec<Word> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(len);
    fn rec(chain: &MarkovChain, len: usize, cur: &mut Vec<usize>, out: &mut Vec<Word>) {
        if cur.len() == len {
            out.push(Word(cur.clone()));
            return;
        }
        if cur.is_empty() {
            for s in 0..chain.n_states() {
                cur.push(s);
                rec(chain, len, cur, out);
                cur.pop();
            }
        } else {
            let last = *cur.last().unwrap();
            for s in chain.successors(last) {
                cur.push(s);
                rec(chain, len, cur, out);
                cur.pop();
            }
        }
    }
    rec(chain, len, &mut cur, &mut out);
    out
}

impl MultistepSystem {
    pub fn new(
        chain: MarkovChain,
        memory: (usize, usize),
        window_maps: Vec<(Word, FiberMap)>,
    ) -> Result<Self> {
        let wlen = memory.0 + memory.1 + 1;
        let expected = admissible_words(&chain, wlen);
        let mut windows = Vec::with_capacity(expected.len());
        let mut maps = Vec::with_capacity(expected.len());
        let mut given = window_maps;
        given.sort_by(|a, b| a.0.cmp(&b.0));
        for (w, _) in &given {
            if !chain.is_admissible_word(w.symbols()) || w.len() != wlen {
                return Err(SkewError::Input(format!(
                    "map assigned to inadmissible or wrong-length window {}",
                    w
                )));
            }
        }
        for w in &expected {
            match given.iter().find(|(gw, _)| gw == w) {
                Some((_, m)) => {
                    windows.push(w.clone());
                    maps.push(m.clone());
                }
                None => {
                    return Err(SkewError::Input(format!("no map for admissible window {}", w)))
                }
            }
        }
        if given.len() != expected.len() {
            return Err(SkewError::Input(format!(
                "{} window maps given, {} admissible windows exist",
                given.len(),
                expected.len()
            )));
        }
        Ok(Self { chain, memory, windows, maps })
    }

    pub fn chain(&self) -> &MarkovChain {
        &self.chain
    }

    pub fn memory(&self) -> (usize, usize) {
        self.memory
    }

    fn window_index(&self, window: &[usize]) -> Option<usize> {
        self.windows.iter().position(|w| w.symbols() == window)
    }

    /// Fiber orbit driven by an explicit admissible symbol sequence. The
    /// orbit starts at time `k` (enough past) and stops when fewer than
    /// `l + 1` symbols of future remain; returns the fiber values at each
    /// executed step, beginning with `x0`.
    pub fn orbit(&self, driving: &Word, x0: f64) -> Result<Vec<f64>> {
        let (k, l) = self.memory;
        if !self.chain.is_admissible_word(driving.symbols()) {
            return Err(SkewError::Input("driving word not admissible".into()));
        }
        if driving.len() < k + l + 1 {
            return Err(SkewError::Input("driving word shorter than the memory window".into()));
        }
        let mut values = vec![x0];
        let mut x = x0;
        for t in k..driving.len() - l - 1 {
            let window = &driving.symbols()[t - k..=t + l];
            let idx = self
                .window_index(window)
                .ok_or_else(|| SkewError::Input("window not found".into()))?;
            x = self.maps[idx].eval(x);
            values.push(x);
        }
        Ok(values)
    }

    /// Exact unrolling to a step system whose states are the admissible
    /// windows of length k+l+1. Adjacency is the one-symbol overlap shift;
    /// transition probabilities are the original next-symbol probabilities.
    pub fn unroll(&self) -> Result<(StepSystem, Vec<Word>)> {
        let n = self.windows.len();
        let mut adjacency = vec![vec![false; n]; n];
        let mut transition = vec![vec![0.0; n]; n];
        for (i, u) in self.windows.iter().enumerate() {
            for (j, v) in self.windows.iter().enumerate() {
                if u.symbols()[1..] == v.symbols()[..v.len() - 1] {
                    // The step appends one symbol: from the last symbol of
                    // u to the last symbol of v. For window length 1 the
                    // overlap is empty and admissibility must be checked
                    // here; for longer windows it is implied by v.
                    let a = u.last();
                    let b = v.last();
                    if self.chain.adjacency()[a][b] {
                        adjacency[i][j] = true;
                        transition[i][j] = self.chain.transition()[a][b];
                    }
                }
            }
        }
        let chain = MarkovChain::new(adjacency, transition)?;
        let system = StepSystem::new(chain, self.maps.clone())?;
        Ok((system, self.windows.clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn compose_word_matches_hand_arithmetic() {
        let s1 = presets::s1();
        let w = s1.chain().word(vec![0, 1]).unwrap();
        let c = s1.compose_word(&w).unwrap();
        assert!((c.eval(0.0) - 0.57).abs() < 1e-15);
        assert!((c.eval(1.0) - 0.73).abs() < 1e-15);
        let single = s1.chain().word(vec![1]).unwrap();
        let m = s1.compose_word(&single).unwrap();
        assert_eq!(m.eval(0.25), s1.map(1).eval(0.25));
    }

    #[test]
    fn composition_associativity_on_grid() {
        let s1 = presets::s1();
        let w = s1.chain().word(vec![0, 1, 0, 0, 1]).unwrap();
        let full = s1.compose_word(&w).unwrap();
        let head = s1.compose_word(&s1.chain().word(vec![0, 1]).unwrap()).unwrap();
        let tail = s1.compose_word(&s1.chain().word(vec![0, 0, 1]).unwrap()).unwrap();
        let split = head.compose(&tail);
        for i in 0..=64 {
            let x = i as f64 / 64.0;
            assert!((full.eval(x) - split.eval(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn unroll_two_state_memory_window() {
        let multi = presets::multistep_01();
        let (step, labels) = multi.unroll().unwrap();
        assert_eq!(step.n_states(), 4);
        // stationary of the unrolled chain: p_{(ab)} = p_a pi_{ab}
        let orig = multi.chain();
        for (i, w) in labels.iter().enumerate() {
            let expected =
                orig.stationary()[w.symbols()[0]] * orig.transition()[w.symbols()[0]][w.symbols()[1]];
            assert!((step.chain().stationary()[i] - expected).abs() < 1e-10);
        }
        assert!(crate::markov::is_transitive(step.chain().adjacency()));
    }

    #[test]
    fn unrolled_orbit_matches_multistep_orbit_exactly() {
        let multi = presets::multistep_01();
        let (step, labels) = multi.unroll().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let driving = multi.chain().sample_path(102, None, &mut rng);
        let x0 = 0.37;
        let multi_orbit = multi.orbit(&driving, x0).unwrap();
        // Project the driving word to window states and run the step system.
        let mut x = x0;
        let mut step_orbit = vec![x];
        for t in 0..driving.len() - 1 {
            let window = &driving.symbols()[t..=t + 1];
            let idx = labels.iter().position(|w| w.symbols() == window).unwrap();
            x = step.map(idx).eval(x);
            step_orbit.push(x);
        }
        assert_eq!(multi_orbit.len(), 101);
        for (a, b) in multi_orbit.iter().zip(step_orbit.iter()) {
            assert_eq!(a, b, "orbits must agree exactly");
        }
    }

    #[test]
    fn multistep_rejects_inadmissible_window() {
        let chain = MarkovChain::new(
            vec![vec![false, true], vec![true, true]],
            vec![vec![0.0, 1.0], vec![0.5, 0.5]],
        )
        .unwrap();
        let f = crate::fibermaps::FiberMap::affine(0.1, 0.5).unwrap();
        // window "11" is inadmissible because a_11 = 0
        let res = MultistepSystem::new(
            chain,
            (0, 1),
            vec![(Word(vec![0, 0]), f.clone()), (Word(vec![0, 1]), f)],
        );
        assert!(res.is_err());
    }
}
