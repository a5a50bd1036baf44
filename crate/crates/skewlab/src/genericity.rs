//! Genericity checks: hyperbolicity of simple-return fixed points, absence
//! of attracting-to-repelling coincidences under simple transitions, and
//! absence of an invariant point tuple.

use crate::error::Result;
use crate::fibermaps::FixedPointKind;
use crate::markov::Word;
use crate::skeleton::{enumerate_skeleton, return_map};
use crate::system::StepSystem;

/// Hyperbolicity tolerance on |multiplier - 1| and coincidence tolerance
/// for fixed-point collisions.
pub const GEN_TOL: f64 = 1e-8;

/// Outcome of one genericity condition.
#[derive(Debug, Clone)]
pub struct ConditionResult {
    pub holds: bool,
    /// Distance to the degenerate configuration: minimal |multiplier - 1|
    /// (condition 1), minimal image-to-repeller distance (condition 2), or
    /// minimal self-consistency defect of the best candidate tuple
    /// (condition 3).
    pub margin: f64,
    pub witness: Option<String>,
}

#[derive(Debug, Clone)]
pub struct GenericityReport {
    pub hyperbolic_returns: ConditionResult,
    pub no_sink_source_mapping: ConditionResult,
    pub no_invariant_tuple: ConditionResult,
}

impl GenericityReport {
    pub fn is_generic(&self) -> bool {
        self.hyperbolic_returns.holds
            && self.no_sink_source_mapping.holds
            && self.no_invariant_tuple.holds
    }
}

pub fn check_genericity(system: &StepSystem) -> Result<GenericityReport> {
    let (transitions, returns) = enumerate_skeleton(system.chain());
    let mut fps_by_return = Vec::with_capacity(returns.len());
    for ret in &returns {
        fps_by_return.push((ret.clone(), return_map(system, ret)?.fixed_points()));
    }

    // Condition 1: every simple-return fixed point is hyperbolic.
    let mut c1_margin = f64::INFINITY;
    let mut c1_witness = None;
    for (ret, fps) in &fps_by_return {
        for fp in fps {
            let m = (fp.multiplier - 1.0).abs();
            if m < c1_margin {
                c1_margin = m;
                if m <= GEN_TOL {
                    c1_witness = Some(format!(
                        "return {} has fixed point {} with multiplier {}",
                        ret, fp.location, fp.multiplier
                    ));
                }
            }
        }
    }
    let condition1 = ConditionResult {
        holds: c1_witness.is_none(),
        margin: c1_margin,
        witness: c1_witness,
    };

    // Condition 2: no simple transition carries an attracting return fixed
    // point onto a repelling one.
    let mut c2_margin = f64::INFINITY;
    let mut c2_witness = None;
    for t in &transitions {
        let (j, k) = (t.first(), t.last());
        for (ret_a, fps_a) in fps_by_return.iter().filter(|(r, _)| r.first() == j) {
            for a in fps_a.iter().filter(|p| p.kind == FixedPointKind::Attracting) {
                let image = system.path_image(t, a.location)?;
                for (ret_r, fps_r) in fps_by_return.iter().filter(|(r, _)| r.first() == k) {
                    for r in fps_r.iter().filter(|p| p.kind == FixedPointKind::Repelling) {
                        let d = (image - r.location).abs();
                        if d < c2_margin {
                            c2_margin = d;
                            if d <= GEN_TOL {
                                c2_witness = Some(format!(
                                    "transition {} maps sink {} of return {} onto source {} of return {}",
                                    t, a.location, ret_a, r.location, ret_r
                                ));
                            }
                        }
                    }
                }
            }
        }
    }
    let condition2 = ConditionResult {
        holds: c2_witness.is_none(),
        margin: c2_margin,
        witness: c2_witness,
    };

    // Condition 3: no tuple (a_k) with f_i(a_i) = a_j for every admissible
    // pair. Such a tuple has a_0 fixed by every simple return at state 0,
    // so candidates are the fixed points of the first such return; each is
    // propagated along edges and checked for consistency.
    let anchor = fps_by_return
        .iter()
        .find(|(r, _)| r.first() == 0)
        .expect("a transitive chain has a return at every state");
    let mut c3_margin = f64::INFINITY;
    let mut c3_witness = None;
    for cand in &anchor.1 {
        let (defect, tuple) = propagate_tuple(system, cand.location);
        if defect < c3_margin {
            c3_margin = defect;
            if defect <= GEN_TOL {
                let vals: Vec<String> = tuple.iter().map(|v| format!("{}", v)).collect();
                c3_witness = Some(format!("invariant tuple ({})", vals.join(", ")));
            }
        }
    }
    let condition3 = ConditionResult {
        holds: c3_witness.is_none(),
        margin: c3_margin,
        witness: c3_witness,
    };

    Ok(GenericityReport {
        hyperbolic_returns: condition1,
        no_sink_source_mapping: condition2,
        no_invariant_tuple: condition3,
    })
}

/// Assigns a_k to every state by pushing `a0` forward along edges and
/// returns the worst inconsistency across all admissible pairs (0 means
/// the tuple is invariant).
fn propagate_tuple(system: &StepSystem, a0: f64) -> (f64, Vec<f64>) {
    let n = system.n_states();
    let chain = system.chain();
    let mut tuple: Vec<Option<f64>> = vec![None; n];
    tuple[0] = Some(a0);
    let mut defect: f64 = 0.0;
    // n sweeps reach every state of a transitive chain.
    for _ in 0..n {
        for i in 0..n {
            if let Some(a) = tuple[i] {
                let v = system.map(i).eval(a);
                for j in chain.successors(i) {
                    match tuple[j] {
                        None => tuple[j] = Some(v),
                        Some(b) => defect = defect.max((v - b).abs()),
                    }
                }
            }
        }
    }
    let tuple: Vec<f64> = tuple.into_iter().map(|v| v.expect("transitive chain")).collect();
    // Final full consistency pass.
    for i in 0..n {
        let v = system.map(i).eval(tuple[i]);
        for j in chain.successors(i) {
            defect = defect.max((v - tuple[j]).abs());
        }
    }
    (defect, tuple)
}

/// The word that witnesses a transition in condition 2, if any, parsed back
/// into symbols. Helper for reports.
pub fn parse_witness_word(s: &str) -> Option<Word> {
    let digits: String = s.chars().take_while(|c| c.is_ascii_digit()).collect();
    if digits.is_empty() {
        None
    } else {
        Some(Word(digits.bytes().map(|b| (b - b'1') as usize).collect()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fibermaps::FiberMap;
    use crate::presets;
    use crate::system::StepSystem;

    #[test]
    fn s1_is_generic() {
        let rep = check_genericity(&presets::s1()).unwrap();
        assert!(rep.is_generic());
        assert!(rep.hyperbolic_returns.margin > 0.5); // multipliers 0.4, 0.16
        assert!(rep.no_invariant_tuple.margin > 0.4);
    }

    #[test]
    fn s2_is_generic() {
        let rep = check_genericity(&presets::s2()).unwrap();
        assert!(rep.is_generic(), "{:?}", rep);
    }

    #[test]
    fn common_fixed_point_fails_condition_3() {
        let rep = check_genericity(&presets::s3()).unwrap();
        assert!(rep.hyperbolic_returns.holds);
        assert!(!rep.no_invariant_tuple.holds);
        let w = rep.no_invariant_tuple.witness.unwrap();
        assert!(w.contains("0.5, 0.5"), "witness was {}", w);
        assert!(rep.no_invariant_tuple.margin <= GEN_TOL);
    }

    #[test]
    fn near_parabolic_fails_condition_1() {
        let rep = check_genericity(&presets::near_parabolic_moebius()).unwrap();
        assert!(!rep.hyperbolic_returns.holds);
        assert!(rep.hyperbolic_returns.margin <= GEN_TOL);
        assert!(rep.hyperbolic_returns.witness.unwrap().contains("return 11"));
    }

    #[test]
    fn sink_onto_source_fails_condition_2() {
        // f_1 fixes 0.5 attractingly; f_2 has a source at 0.5, so the
        // transition 12 maps a sink onto a source.
        let sys = StepSystem::new(
            presets::full_uniform_chain(2),
            vec![
                FiberMap::affine(0.3, 0.4).unwrap(),
                FiberMap::blackbox(
                    |x| x - 1.2 * ((x - 0.2) * (x - 0.5) * (x - 0.8)),
                    |x| 1.0 - 1.2 * (3.0 * x * x - 3.0 * x + 0.66),
                )
                .unwrap(),
            ],
        )
        .unwrap();
        let rep = check_genericity(&sys).unwrap();
        assert!(!rep.no_sink_source_mapping.holds);
        assert!(rep.no_sink_source_mapping.margin <= GEN_TOL);
    }

    #[test]
    fn margins_shrink_continuously_toward_degeneracy() {
        // Moving the common fixed point slightly apart turns the failure
        // into a pass with a margin of the same order as the perturbation.
        for delta in [1e-3, 1e-5] {
            let sys = StepSystem::new(
                presets::full_uniform_chain(2),
                vec![
                    FiberMap::affine(0.3 + delta, 0.4).unwrap(),
                    FiberMap::affine(0.4, 0.2).unwrap(),
                ],
            )
            .unwrap();
            let rep = check_genericity(&sys).unwrap();
            assert!(rep.no_invariant_tuple.holds);
            assert!(rep.no_invariant_tuple.margin < 10.0 * delta);
            assert!(rep.no_invariant_tuple.margin > delta / 10.0);
        }
    }
}
