//! Ready-made example systems used throughout the test suite and shipped
//! as config files.

use crate::fibermaps::FiberMap;
use crate::markov::{MarkovChain, Word};
use crate::system::{MultistepSystem, StepSystem};

pub fn full_uniform_chain(n: usize) -> MarkovChain {
    let adjacency = vec![vec![true; n]; n];
    let transition = vec![vec![1.0 / n as f64; n]; n];
    MarkovChain::new(adjacency, transition).unwrap()
}

/// Two affine contractions over the full uniform 2-state shift; a single
/// attractor spanning [1/12, 11/12] with exponent log 0.4.
pub fn s1() -> StepSystem {
    StepSystem::new(
        full_uniform_chain(2),
        vec![
            FiberMap::affine(0.05, 0.4).unwrap(),
            FiberMap::affine(0.55, 0.4).unwrap(),
        ],
    )
    .unwrap()
}

fn two_sink_cubic(roots: (f64, f64, f64), strength: f64) -> FiberMap {
    let (r0, r1, r2) = roots;
    let e1 = r0 + r1 + r2;
    let e2 = r0 * r1 + r0 * r2 + r1 * r2;
    FiberMap::blackbox(
        move |x| x - strength * ((x - r0) * (x - r1) * (x - r2)),
        move |x| 1.0 - strength * (3.0 * x * x - 2.0 * e1 * x + e2),
    )
    .unwrap()
}

/// Two blackbox maps with two sinks each (low near 0.2-0.25, high near
/// 0.75-0.8) separated by sources; two attractors with a repeller between
/// them. The two maps are perturbations of each other so that no common
/// fixed point survives and the system stays generic.
pub fn s2() -> StepSystem {
    StepSystem::new(
        full_uniform_chain(2),
        vec![
            two_sink_cubic((0.2, 0.5, 0.8), 1.2),
            two_sink_cubic((0.25, 0.55, 0.75), 1.0),
        ],
    )
    .unwrap()
}

/// Both maps fix 0.5: genericity condition 3 fails with witness
/// a = (0.5, 0.5).
pub fn s3() -> StepSystem {
    StepSystem::new(
        full_uniform_chain(2),
        vec![
            FiberMap::affine(0.3, 0.4).unwrap(),
            FiberMap::affine(0.4, 0.2).unwrap(),
        ],
    )
    .unwrap()
}

/// One-state system with a single Moebius map tuned so the fixed-point
/// quadratic has nearly coincident roots: the multiplier at the interior
/// fixed point is within 4e-9 of 1, failing genericity condition 1.
pub fn near_parabolic_moebius() -> StepSystem {
    let eps = 2e-9;
    let chain = full_uniform_chain(1);
    StepSystem::new(chain, vec![FiberMap::moebius(1.0, eps * eps, 1.0, 1.0).unwrap()]).unwrap()
}

/// One-state system with a single affine contraction.
pub fn one_state_contraction() -> StepSystem {
    StepSystem::new(full_uniform_chain(1), vec![FiberMap::affine(0.3, 0.4).unwrap()]).unwrap()
}

/// One-state system with sinks at 0.2 and 0.8 and a source at 0.5.
pub fn one_state_two_sinks() -> StepSystem {
    StepSystem::new(full_uniform_chain(1), vec![two_sink_cubic((0.2, 0.5, 0.8), 1.2)]).unwrap()
}

/// A (0,1)-memory multistep system over the full uniform 2-state shift.
pub fn multistep_01() -> MultistepSystem {
    let chain = full_uniform_chain(2);
    let maps = vec![
        (Word(vec![0, 0]), FiberMap::affine(0.1, 0.3).unwrap()),
        (Word(vec![0, 1]), FiberMap::affine(0.05, 0.4).unwrap()),
        (Word(vec![1, 0]), FiberMap::affine(0.55, 0.4).unwrap()),
        (Word(vec![1, 1]), FiberMap::affine(0.6, 0.3).unwrap()),
    ];
    MultistepSystem::new(chain, (0, 1), maps).unwrap()
}
