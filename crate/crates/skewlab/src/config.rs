//! TOML configuration: chain, fiber maps (per state or per memory window),
//! analysis parameters, and output settings. Validation collects every
//! failure with its field path before reporting.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SkewError};
use crate::fibermaps::FiberMap;
use crate::markov::{MarkovChain, Word};
use crate::system::{MultistepSystem, StepSystem};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemConfig {
    pub chain: ChainConfig,
    #[serde(rename = "map")]
    pub maps: Vec<MapSpec>,
    #[serde(default)]
    pub multistep: Option<MemoryConfig>,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainConfig {
    /// 0/1 rows.
    pub adjacency: Vec<Vec<u8>>,
    pub transition: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MemoryConfig {
    pub k: usize,
    pub l: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MapSpec {
    /// "affine", "moebius", or "table".
    pub family: String,
    /// 1-based digit string naming the memory window; absent for step
    /// systems (maps are in state order).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisConfig {
    pub epsilon: f64,
    pub delta: f64,
    pub bins: usize,
    pub steps: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub tv_tol: f64,
    pub max_iter: usize,
    pub bone_depth: usize,
    pub bone_samples: usize,
    pub bone_threshold: f64,
    pub baxendale_eps: Vec<f64>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.01,
            delta: 0.001,
            bins: 1024,
            steps: 200_000,
            burn_in: 1000,
            seed: 1,
            tv_tol: 1e-10,
            max_iter: 20_000,
            bone_depth: 16,
            bone_samples: 500,
            bone_threshold: 1e-6,
            baxendale_eps: vec![0.05],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputConfig {
    pub directory: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { directory: "out".into() }
    }
}

/// A validated system: plain step or multistep.
#[derive(Debug, Clone)]
pub enum BuiltSystem {
    Step(StepSystem),
    Multi(MultistepSystem),
}

impl BuiltSystem {
    /// The step system to analyze: the system itself, or the exact
    /// unrolling for multistep inputs (with the window labels).
    pub fn as_step(&self) -> Result<(StepSystem, Option<Vec<Word>>)> {
        match self {
            BuiltSystem::Step(s) => Ok((s.clone(), None)),
            BuiltSystem::Multi(m) => {
                let (s, labels) = m.unroll()?;
                Ok((s, Some(labels)))
            }
        }
    }
}

pub fn load_config(path: &Path) -> Result<SystemConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<SystemConfig> {
    toml::from_str(text).map_err(|e| SkewError::Input(format!("config parse error: {}", e)))
}

fn parse_window(s: &str, n_states: usize) -> std::result::Result<Vec<usize>, String> {
    let mut out = Vec::with_capacity(s.len());
    for ch in s.chars() {
        match ch.to_digit(10) {
            Some(d) if d >= 1 && (d as usize) <= n_states => out.push(d as usize - 1),
            _ => return Err(format!("symbol {:?} is not a state label 1..{}", ch, n_states)),
        }
    }
    if out.is_empty() {
        return Err("window is empty".into());
    }
    Ok(out)
}

impl SystemConfig {
    /// Builds the system, collecting every validation failure with its
    /// field path.
    pub fn build(&self) -> Result<BuiltSystem> {
        let mut errors: Vec<String> = Vec::new();
        let n = self.chain.adjacency.len();
        if n == 0 {
            errors.push("chain.adjacency: empty".into());
        }
        for (i, row) in self.chain.adjacency.iter().enumerate() {
            if row.len() != n {
                errors.push(format!("chain.adjacency[{}]: {} entries, need {}", i + 1, row.len(), n));
            }
            for (j, &a) in row.iter().enumerate() {
                if a > 1 {
                    errors.push(format!("chain.adjacency[{}][{}]: {} is not 0/1", i + 1, j + 1, a));
                }
            }
        }
        if self.chain.transition.len() != n {
            errors.push(format!(
                "chain.transition: {} rows, need {}",
                self.chain.transition.len(),
                n
            ));
        }
        for (i, row) in self.chain.transition.iter().enumerate() {
            if row.len() == n {
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > 1e-12 {
                    errors.push(format!("chain.transition[{}]: row sums to {}, need 1", i + 1, sum));
                }
            } else {
                errors.push(format!(
                    "chain.transition[{}]: {} entries, need {}",
                    i + 1,
                    row.len(),
                    n
                ));
            }
        }
        let chain = if errors.is_empty() {
            let adjacency = self
                .chain
                .adjacency
                .iter()
                .map(|r| r.iter().map(|&a| a == 1).collect())
                .collect();
            match MarkovChain::new(adjacency, self.chain.transition.clone()) {
                Ok(c) => Some(c),
                Err(e) => {
                    errors.push(format!("chain: {}", e));
                    None
                }
            }
        } else {
            None
        };

        let mut maps: Vec<(Option<Vec<usize>>, Option<FiberMap>)> = Vec::new();
        for (idx, spec) in self.maps.iter().enumerate() {
            let path = format!("map[{}]", idx + 1);
            let window = match &spec.window {
                None => None,
                Some(w) => match parse_window(w, n.max(1)) {
                    Ok(sym) => Some(sym),
                    Err(e) => {
                        errors.push(format!("{}.window: {}", path, e));
                        None
                    }
                },
            };
            let map = match build_map(spec) {
                Ok(m) => Some(m),
                Err(e) => {
                    errors.push(format!("{}: {}", path, e));
                    None
                }
            };
            maps.push((window, map));
        }

        match &self.multistep {
            None => {
                if self.maps.len() != n {
                    errors.push(format!("map: {} maps for {} states", self.maps.len(), n));
                }
                if self.maps.iter().any(|m| m.window.is_some()) {
                    errors.push("map: window given without a [multistep] block".into());
                }
            }
            Some(mem) => {
                let wlen = mem.k + mem.l + 1;
                for (idx, (window, _)) in maps.iter().enumerate() {
                    match window {
                        None => errors.push(format!(
                            "map[{}].window: required for multistep systems",
                            idx + 1
                        )),
                        Some(sym) if sym.len() != wlen => errors.push(format!(
                            "map[{}].window: length {} does not match memory ({}, {})",
                            idx + 1,
                            sym.len(),
                            mem.k,
                            mem.l
                        )),
                        _ => {}
                    }
                }
            }
        }

        if !errors.is_empty() {
            return Err(SkewError::Input(errors.join("; ")));
        }
        let chain = chain.expect("validated above");
        match &self.multistep {
            None => {
                let maps: Vec<FiberMap> =
                    maps.into_iter().map(|(_, m)| m.expect("validated above")).collect();
                Ok(BuiltSystem::Step(StepSystem::new(chain, maps)?))
            }
            Some(mem) => {
                let window_maps: Vec<(Word, FiberMap)> = maps
                    .into_iter()
                    .map(|(w, m)| (Word(w.expect("validated")), m.expect("validated")))
                    .collect();
                Ok(BuiltSystem::Multi(MultistepSystem::new(chain, (mem.k, mem.l), window_maps)?))
            }
        }
    }
}

fn build_map(spec: &MapSpec) -> Result<FiberMap> {
    match spec.family.as_str() {
        "affine" => {
            let offset = spec.offset.ok_or_else(|| SkewError::Input("missing offset".into()))?;
            let slope = spec.slope.ok_or_else(|| SkewError::Input("missing slope".into()))?;
            FiberMap::affine(offset, slope)
        }
        "moebius" => {
            let get = |v: Option<f64>, name: &str| {
                v.ok_or_else(|| SkewError::Input(format!("missing {}", name)))
            };
            FiberMap::moebius(
                get(spec.a, "a")?,
                get(spec.b, "b")?,
                get(spec.c, "c")?,
                get(spec.d, "d")?,
            )
        }
        "table" => {
            let xs = spec.x.clone().ok_or_else(|| SkewError::Input("missing x".into()))?;
            let ys = spec.y.clone().ok_or_else(|| SkewError::Input("missing y".into()))?;
            FiberMap::monotone_table(xs, ys)
        }
        other => Err(SkewError::Input(format!("unknown family {:?}", other))),
    }
}

/// Emits the exact unrolling of a multistep config as a step config
/// accepted by `load_config`: states are the admissible windows, maps keep
/// their original parameters.
pub fn unroll_config(config: &SystemConfig) -> Result<(SystemConfig, Vec<Word>)> {
    let built = config.build()?;
    let multi = match built {
        BuiltSystem::Multi(m) => m,
        BuiltSystem::Step(_) => {
            return Err(SkewError::Input("config is already a step system".into()))
        }
    };
    let (step, labels) = multi.unroll()?;
    // Window order produced by unroll is the lexicographic admissible
    // order; match each config map spec to its position.
    let mut maps = Vec::with_capacity(labels.len());
    for label in &labels {
        let want: String = label.symbols().iter().map(|s| (s + 1).to_string()).collect();
        let spec = config
            .maps
            .iter()
            .find(|m| m.window.as_deref() == Some(want.as_str()))
            .ok_or_else(|| SkewError::Input(format!("no map spec for window {}", want)))?;
        let mut spec = spec.clone();
        spec.window = None;
        maps.push(spec);
    }
    let chain = ChainConfig {
        adjacency: step
            .chain()
            .adjacency()
            .iter()
            .map(|r| r.iter().map(|&a| a as u8).collect())
            .collect(),
        transition: step.chain().transition().to_vec(),
    };
    Ok((
        SystemConfig {
            chain,
            maps,
            multistep: None,
            analysis: config.analysis.clone(),
            output: config.output.clone(),
        },
        labels,
    ))
}
