//! Base subshift of finite type: the Markov chain, its cylinder measures,
//! word enumeration helpers, path sampling and time reversal.
//!
//! States are indexed `0..n_states` internally; configuration files and
//! printed words use 1-based labels.

use rand::Rng;

use crate::error::{Result, SkewError};

const ROW_SUM_TOL: f64 = 1e-12;
const STATIONARY_TOL: f64 = 1e-10;

/// A transitive topological Markov chain together with a compatible
/// stochastic matrix and its stationary vector.
#[derive(Debug, Clone)]
pub struct MarkovChain {
    n_states: usize,
    adjacency: Vec<Vec<bool>>,
    transition: Vec<Vec<f64>>,
    stationary: Vec<f64>,
}

/// A finite admissible word: the sequence of states visited.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word(pub Vec<usize>);

impl Word {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn first(&self) -> usize {
        self.0[0]
    }

    pub fn last(&self) -> usize {
        *self.0.last().expect("word is nonempty")
    }

    pub fn symbols(&self) -> &[usize] {
        &self.0
    }
}

impl std::fmt::Display for Word {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.0.iter().all(|&s| s < 9) {
            for s in &self.0 {
                write!(f, "{}", s + 1)?;
            }
            Ok(())
        } else {
            let labels: Vec<String> = self.0.iter().map(|s| (s + 1).to_string()).collect();
            write!(f, "{}", labels.join("-"))
        }
    }
}

impl MarkovChain {
    /// Validates a chain: row-stochastic transition matrix, `pi_ij = 0 iff
    /// a_ij = 0`, transitive adjacency; computes the stationary vector.
    pub fn new(adjacency: Vec<Vec<bool>>, transition: Vec<Vec<f64>>) -> Result<Self> {
        let n = adjacency.len();
        if n == 0 {
            return Err(SkewError::Input("chain must have at least one state".into()));
        }
        if adjacency.iter().any(|r| r.len() != n) || transition.len() != n
            || transition.iter().any(|r| r.len() != n)
        {
            return Err(SkewError::Input("adjacency and transition must be square NxN".into()));
        }
        for (i, row) in transition.iter().enumerate() {
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(SkewError::Input(format!(
                    "transition row {} sums to {} (must be 1 within {:e})",
                    i + 1,
                    sum,
                    ROW_SUM_TOL
                )));
            }
            for (j, &p) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&p) {
                    return Err(SkewError::Input(format!(
                        "transition[{}][{}] = {} not in [0,1]",
                        i + 1,
                        j + 1,
                        p
                    )));
                }
                if (p == 0.0) != !adjacency[i][j] {
                    return Err(SkewError::Input(format!(
                        "pi[{}][{}] = {} inconsistent with adjacency a = {}",
                        i + 1,
                        j + 1,
                        p,
                        adjacency[i][j] as u8
                    )));
                }
            }
        }
        if !is_transitive(&adjacency) {
            return Err(SkewError::Structure(
                "adjacency is not transitive; the stationary vector would not be unique".into(),
            ));
        }
        let stationary = stationary_distribution(&transition)?;
        Ok(Self { n_states: n, adjacency, transition, stationary })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn adjacency(&self) -> &[Vec<bool>] {
        &self.adjacency
    }

    pub fn transition(&self) -> &[Vec<f64>] {
        &self.transition
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    pub fn is_admissible_pair(&self, i: usize, j: usize) -> bool {
        self.adjacency[i][j]
    }

    /// Successor states of `i` (admissible pairs `(i, j)`).
    pub fn successors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.adjacency[i]
            .iter()
            .enumerate()
            .filter_map(|(j, &a)| a.then_some(j))
    }

    pub fn is_admissible_word(&self, symbols: &[usize]) -> bool {
        !symbols.is_empty()
            && symbols.iter().all(|&s| s < self.n_states)
            && symbols.windows(2).all(|w| self.adjacency[w[0]][w[1]])
    }

    pub fn word(&self, symbols: Vec<usize>) -> Result<Word> {
        if !self.is_admissible_word(&symbols) {
            return Err(SkewError::Input(format!(
                "word {:?} is not admissible",
                symbols.iter().map(|s| s + 1).collect::<Vec<_>>()
            )));
        }
        Ok(Word(symbols))
    }

    /// Markov measure of the cylinder over `word`:
    /// `p_{w_1} * prod_i pi_{w_i w_{i+1}}`.
    pub fn cylinder_measure(&self, word: &Word) -> Result<f64> {
        if !self.is_admissible_word(word.symbols()) {
            return Err(SkewError::Input(format!("inadmissible word {}", word)));
        }
        let mut m = self.stationary[word.first()];
        for pair in word.symbols().windows(2) {
            m *= self.transition[pair[0]][pair[1]];
        }
        Ok(m)
    }

    /// The ratio `nu(wC)/nu(C)` for a cylinder `C` starting with
    /// `cylinder_first_symbol`, after prepending the word `w`.
    pub fn cylinder_ratio(&self, prefix: &Word, cylinder_first_symbol: usize) -> Result<f64> {
        let mut symbols = prefix.symbols().to_vec();
        symbols.push(cylinder_first_symbol);
        if !self.is_admissible_word(&symbols) {
            return Err(SkewError::Input(format!(
                "concatenation {}{} is not admissible",
                prefix,
                cylinder_first_symbol + 1
            )));
        }
        let mut r = self.stationary[prefix.first()] / self.stationary[cylinder_first_symbol];
        for pair in symbols.windows(2) {
            r *= self.transition[pair[0]][pair[1]];
        }
        Ok(r)
    }

    /// Minimum of [`cylinder_ratio`](Self::cylinder_ratio) over all
    /// admissible first symbols: the constant `lambda` bounding the
    /// cylinder ratios from below.
    pub fn cylinder_ratio_bound(&self, prefix: &Word) -> Result<f64> {
        let last = prefix.last();
        let mut best: Option<f64> = None;
        for u1 in self.successors(last) {
            let r = self.cylinder_ratio(prefix, u1)?;
            best = Some(best.map_or(r, |b: f64| b.min(r)));
        }
        best.ok_or_else(|| {
            SkewError::Structure(format!("state {} has no successors", last + 1))
        })
    }

    /// Samples an admissible path of `length` states. The initial state is
    /// drawn from the stationary vector when not given.
    pub fn sample_path<R: Rng>(
        &self,
        length: usize,
        initial_state: Option<usize>,
        rng: &mut R,
    ) -> Word {
        assert!(length >= 1, "path length must be at least 1");
        let mut symbols = Vec::with_capacity(length);
        let first = initial_state.unwrap_or_else(|| sample_index(&self.stationary, rng));
        symbols.push(first);
        for _ in 1..length {
            let cur = *symbols.last().unwrap();
            symbols.push(sample_index(&self.transition[cur], rng));
        }
        Word(symbols)
    }

    /// One step of the chain from `state`.
    pub fn step<R: Rng>(&self, state: usize, rng: &mut R) -> usize {
        sample_index(&self.transition[state], rng)
    }

    /// Time reversal: `pi~_{ji} = p_i pi_{ij} / p_j`, adjacency transposed,
    /// same stationary vector.
    pub fn reverse(&self) -> MarkovChain {
        let n = self.n_states;
        let mut adjacency = vec![vec![false; n]; n];
        let mut transition = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                adjacency[j][i] = self.adjacency[i][j];
                transition[j][i] = self.stationary[i] * self.transition[i][j] / self.stationary[j];
            }
        }
        // Renormalize rows to absorb rounding in the reversal formula.
        for row in &mut transition {
            let s: f64 = row.iter().sum();
            for p in row.iter_mut() {
                *p /= s;
            }
        }
        MarkovChain::new(adjacency, transition)
            .expect("reversal of a valid chain is a valid chain")
    }
}

fn sample_index<R: Rng>(weights: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

/// True iff some power `A^n`, `n <= N^2`, has all entries positive.
pub fn is_transitive(adjacency: &[Vec<bool>]) -> bool {
    let n = adjacency.len();
    let mut power = adjacency.to_vec();
    for _ in 0..n * n {
        if power.iter().all(|row| row.iter().all(|&x| x)) {
            return true;
        }
        power = bool_mat_mul(&power, adjacency);
    }
    power.iter().all(|row| row.iter().all(|&x| x))
}

fn bool_mat_mul(a: &[Vec<bool>], b: &[Vec<bool>]) -> Vec<Vec<bool>> {
    let n = a.len();
    let mut c = vec![vec![false; n]; n];
    for i in 0..n {
        for k in 0..n {
            if a[i][k] {
                for j in 0..n {
                    c[i][j] |= b[k][j];
                }
            }
        }
    }
    c
}

/// Solves `p Pi = p`, `sum p_i = 1` by dense elimination. The caller must
/// have checked transitivity; otherwise the solution is not unique.
pub fn stationary_distribution(transition: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = transition.len();
    for (i, row) in transition.iter().enumerate() {
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            return Err(SkewError::Input(format!(
                "transition row {} sums to {}, not stochastic",
                i + 1,
                sum
            )));
        }
    }
    // (Pi^T - I) p = 0 with the last equation replaced by sum p_i = 1.
    let mut a = vec![vec![0.0; n + 1]; n];
    for i in 0..n {
        for j in 0..n {
            a[i][j] = transition[j][i] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..n {
        a[n - 1][j] = 1.0;
    }
    a[n - 1][n] = 1.0;
    let p = solve_dense(&mut a)?;
    if p.iter().any(|&x| x < -1e-9) {
        return Err(SkewError::Structure("stationary vector has negative entries".into()));
    }
    // Residual check against the defining equations.
    for j in 0..n {
        let lhs: f64 = (0..n).map(|i| p[i] * transition[i][j]).sum();
        if (lhs - p[j]).abs() > STATIONARY_TOL {
            return Err(SkewError::Convergence(
                "stationary vector residual too large".into(),
                (lhs - p[j]).abs(),
            ));
        }
    }
    Ok(p)
}

/// Gaussian elimination with partial pivoting on an augmented `n x (n+1)` system.
fn solve_dense(a: &mut [Vec<f64>]) -> Result<Vec<f64>> {
    let n = a.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r1, &r2| a[r1][col].abs().partial_cmp(&a[r2][col].abs()).unwrap())
            .unwrap();
        if a[pivot][col].abs() < 1e-14 {
            return Err(SkewError::Structure("singular linear system".into()));
        }
        a.swap(col, pivot);
        for row in 0..n {
            if row != col {
                let factor = a[row][col] / a[col][col];
                for k in col..=n {
                    a[row][k] -= factor * a[col][k];
                }
            }
        }
    }
    Ok((0..n).map(|i| a[i][n] / a[i][i]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn full_uniform_2() -> MarkovChain {
        MarkovChain::new(
            vec![vec![true, true], vec![true, true]],
            vec![vec![0.5, 0.5], vec![0.5, 0.5]],
        )
        .unwrap()
    }

    #[test]
    fn stationary_doubly_stochastic_is_uniform() {
        let chain = full_uniform_2();
        assert!((chain.stationary()[0] - 0.5).abs() < 1e-12);
        assert!((chain.stationary()[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn stationary_2x2_linear_system() {
        // p Pi = p for Pi = [[0.9,0.1],[0.5,0.5]] gives p = (5/6, 1/6).
        let chain = MarkovChain::new(
            vec![vec![true, true], vec![true, true]],
            vec![vec![0.9, 0.1], vec![0.5, 0.5]],
        )
        .unwrap();
        assert!((chain.stationary()[0] - 5.0 / 6.0).abs() < 1e-12);
        assert!((chain.stationary()[1] - 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn identity_chain_rejected_as_nontransitive() {
        let err = MarkovChain::new(
            vec![vec![true, false], vec![false, true]],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        )
        .unwrap_err();
        assert!(matches!(err, SkewError::Structure(_)));
    }

    #[test]
    fn transitivity_cases() {
        assert!(is_transitive(&[vec![true, true], vec![true, true]]));
        assert!(!is_transitive(&[vec![true, false], vec![false, true]]));
        // Pure 2-cycle: powers alternate between the identity pattern and the
        // swap pattern, never all-positive.
        assert!(!is_transitive(&[vec![false, true], vec![true, false]]));
    }

    #[test]
    fn cylinder_measures() {
        let chain = full_uniform_2();
        let w1 = chain.word(vec![0]).unwrap();
        let w12 = chain.word(vec![0, 1]).unwrap();
        let w121 = chain.word(vec![0, 1, 0]).unwrap();
        assert!((chain.cylinder_measure(&w1).unwrap() - 0.5).abs() < 1e-15);
        assert!((chain.cylinder_measure(&w12).unwrap() - 0.25).abs() < 1e-15);
        assert!((chain.cylinder_measure(&w121).unwrap() - 0.125).abs() < 1e-15);
    }

    #[test]
    fn cylinder_measure_multiplicative_under_concatenation() {
        let chain = MarkovChain::new(
            vec![vec![true, true], vec![true, true]],
            vec![vec![0.9, 0.1], vec![0.5, 0.5]],
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let w = chain.sample_path(8, None, &mut rng);
            let split = 3;
            let head = chain.word(w.symbols()[..split].to_vec()).unwrap();
            let full = chain.cylinder_measure(&w).unwrap();
            let mut tail_factor = chain.transition[w.symbols()[split - 1]][w.symbols()[split]];
            for pair in w.symbols()[split..].windows(2) {
                tail_factor *= chain.transition[pair[0]][pair[1]];
            }
            let prod = chain.cylinder_measure(&head).unwrap() * tail_factor;
            assert!((full - prod).abs() < 1e-15);
        }
    }

    #[test]
    fn cylinder_ratio_examples() {
        let chain = full_uniform_2();
        let w12 = chain.word(vec![0, 1]).unwrap();
        assert!((chain.cylinder_ratio(&w12, 0).unwrap() - 0.25).abs() < 1e-15);
        let w1 = chain.word(vec![0]).unwrap();
        assert!((chain.cylinder_ratio(&w1, 0).unwrap() - 0.5).abs() < 1e-15);
        assert!((chain.cylinder_ratio_bound(&w12).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn cylinder_ratio_bound_positive_on_random_prefixes() {
        let chain = MarkovChain::new(
            vec![vec![true, true], vec![true, true]],
            vec![vec![0.9, 0.1], vec![0.5, 0.5]],
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let w = chain.sample_path(6, None, &mut rng);
            assert!(chain.cylinder_ratio_bound(&w).unwrap() > 0.0);
        }
    }

    #[test]
    fn ratio_inadmissible_concatenation_rejected() {
        let chain = MarkovChain::new(
            vec![vec![true, true], vec![true, false]],
            vec![vec![0.5, 0.5], vec![1.0, 0.0]],
        )
        .unwrap();
        let w = chain.word(vec![0, 1]).unwrap();
        assert!(chain.cylinder_ratio(&w, 1).is_err());
    }

    #[test]
    fn sample_path_frequencies_and_determinism() {
        let chain = full_uniform_2();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let w = chain.sample_path(100_000, None, &mut rng);
        let ones = w.symbols().iter().filter(|&&s| s == 0).count() as f64;
        assert!((ones / 1e5 - 0.5).abs() < 0.01);

        let mut rng_a = ChaCha8Rng::seed_from_u64(42);
        let mut rng_b = ChaCha8Rng::seed_from_u64(42);
        assert_eq!(
            chain.sample_path(100, None, &mut rng_a),
            chain.sample_path(100, None, &mut rng_b)
        );
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(chain.sample_path(1, Some(1), &mut rng).symbols(), &[1]);
    }

    #[test]
    fn reversal_formula_and_involution() {
        let chain = MarkovChain::new(
            vec![vec![true, true], vec![true, true]],
            vec![vec![0.9, 0.1], vec![0.5, 0.5]],
        )
        .unwrap();
        let rev = chain.reverse();
        // pi~_{12} = p_2 pi_{21} / p_1 = (1/6 * 0.5)/(5/6) = 0.1
        assert!((rev.transition()[0][1] - 0.1).abs() < 1e-12);
        for (a, b) in rev.stationary().iter().zip(chain.stationary()) {
            assert!((a - b).abs() < 1e-12);
        }
        let back = rev.reverse();
        for i in 0..2 {
            for j in 0..2 {
                assert!((back.transition()[i][j] - chain.transition()[i][j]).abs() < 1e-12);
            }
        }
        // Doubly stochastic symmetric chain is reversible.
        let sym = full_uniform_2();
        let sym_rev = sym.reverse();
        assert_eq!(sym.transition(), sym_rev.transition());
    }
}
