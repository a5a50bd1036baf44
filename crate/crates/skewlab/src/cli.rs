//! Command-line surface: config ingestion, analysis orchestration, and
//! artifact emission.
//!
//! Exit codes: 0 success, 1 I/O or input error, 2 genericity failure,
//! 3 convergence failure, 4 structural contradiction.

use std::fs;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{load_config, unroll_config, SystemConfig};
use crate::error::{Result, SkewError};
use crate::genericity::check_genericity;
use crate::markov::Word;
use crate::measures::{
    baxendale_check, lyapunov_exponent, orbit_lyapunov, power_iterate_stationary, simulate_walk,
};
use crate::report::{
    baxendale_text, fmt_f, genericity_text, strip_text, write_bone_csv, write_domain_csv,
    write_measure_csv, write_pullback_csv, write_strips_csv,
};
use crate::skeleton::{endpoint_candidates, enumerate_skeleton, minimal_trapping_domains};
use crate::system::StepSystem;
use crate::twosided::{bone_scan, pullback_fiber, strip_decomposition, BackwardWord, McParams};

#[derive(Parser)]
#[command(name = "skewlab", about = "Analysis toolkit for step skew products over subshifts of finite type", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Path to the TOML system configuration.
    config: PathBuf,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// RNG seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Histogram bins (overrides the config).
    #[arg(long)]
    bins: Option<usize>,
    /// Walk steps (overrides the config).
    #[arg(long)]
    steps: Option<usize>,
    /// Worker-count hint; results are independent of it (all aggregation
    /// is deterministic), accepted for pipeline compatibility.
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Check the three genericity conditions.
    Genericity(CommonArgs),
    /// Enumerate simple transitions/returns, endpoint candidates, and
    /// trapping domains.
    Skeleton(CommonArgs),
    /// Monte Carlo stationary measure and Lyapunov exponents.
    Walk(CommonArgs),
    /// Transfer-operator stationary measures per trapping domain.
    Stationary(CommonArgs),
    /// Full attractor/repeller strip decomposition.
    Decompose(CommonArgs),
    /// Both sides of the smoothed entropy identity.
    Baxendale(CommonArgs),
    /// Backward pullback scan (bone statistics).
    Pullback(CommonArgs),
    /// Emit the exact step-system unrolling of a multistep config.
    Unroll(CommonArgs),
}

pub fn run() -> i32 {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Genericity(a) => dispatch(a, cmd_genericity),
        Command::Skeleton(a) => dispatch(a, cmd_skeleton),
        Command::Walk(a) => dispatch(a, cmd_walk),
        Command::Stationary(a) => dispatch(a, cmd_stationary),
        Command::Decompose(a) => dispatch(a, cmd_decompose),
        Command::Baxendale(a) => dispatch(a, cmd_baxendale),
        Command::Pullback(a) => dispatch(a, cmd_pullback),
        Command::Unroll(a) => dispatch(a, cmd_unroll),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e);
            exit_code(&e)
        }
    }
}

fn exit_code(e: &SkewError) -> i32 {
    match e {
        SkewError::Input(_) | SkewError::Io(_) | SkewError::Parameter(_) => 1,
        SkewError::Genericity(_) => 2,
        SkewError::Convergence(..)
        | SkewError::Retry { .. }
        | SkewError::SearchCap(_)
        | SkewError::InverseDomain(..) => 3,
        SkewError::Structure(_) | SkewError::Contradiction(_) => 4,
    }
}

struct Ctx {
    config: SystemConfig,
    out_dir: PathBuf,
}

impl Ctx {
    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn step_system(&self) -> Result<(StepSystem, Option<Vec<Word>>)> {
        self.config.build()?.as_step()
    }
}

fn dispatch(args: &CommonArgs, f: fn(&Ctx) -> Result<()>) -> Result<()> {
    let mut config = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        config.analysis.seed = seed;
    }
    if let Some(bins) = args.bins {
        config.analysis.bins = bins;
    }
    if let Some(steps) = args.steps {
        config.analysis.steps = steps;
    }
    let out_dir = args
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&config.output.directory));
    fs::create_dir_all(&out_dir)?;
    f(&Ctx { config, out_dir })
}

fn cmd_genericity(ctx: &Ctx) -> Result<()> {
    let (system, _) = ctx.step_system()?;
    let report = check_genericity(&system)?;
    let text = genericity_text(&report);
    print!("{}", text);
    fs::write(ctx.path("genericity.txt"), &text)?;
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
    Ok(())
}

fn cmd_skeleton(ctx: &Ctx) -> Result<()> {
    let (system, _) = ctx.step_system()?;
    let (transitions, returns) = enumerate_skeleton(system.chain());
    let t: Vec<String> = transitions.iter().map(|w| w.to_string()).collect();
    let r: Vec<String> = returns.iter().map(|w| w.to_string()).collect();
    println!("simple transitions: {}", t.join(" "));
    println!("simple returns: {}", r.join(" "));
    for k in 0..system.n_states() {
        let c: Vec<String> = endpoint_candidates(&system, k)?.iter().map(|&x| fmt_f(x)).collect();
        println!("endpoint candidates state {}: {}", k + 1, c.join(" "));
    }
    let a = &ctx.config.analysis;
    let regions = minimal_trapping_domains(&system, a.epsilon, a.delta)?;
    println!("{} minimal trapping region(s)", regions.len());
    for (i, region) in regions.iter().enumerate() {
        write_domain_csv(&ctx.path(&format!("hull_{}.csv", i)), &region.hull)?;
        write_domain_csv(&ctx.path(&format!("trapping_{}.csv", i)), &region.domain)?;
        println!(
            "region {}: margin={} inclusion_held={}",
            i,
            fmt_f(region.margin),
            region.inclusion_held
        );
    }
    Ok(())
}

fn cmd_walk(ctx: &Ctx) -> Result<()> {
    let (system, _) = ctx.step_system()?;
    let a = &ctx.config.analysis;
    let measure = simulate_walk(&system, a.bins, a.steps, a.burn_in, a.seed, None)?;
    write_measure_csv(&ctx.path("walk_measure.csv"), &measure)?;
    let l_measure = lyapunov_exponent(&system, &measure)?;
    let l_orbit = orbit_lyapunov(&system, a.steps, a.burn_in, a.seed, None)?;
    println!("walk steps={} burn_in={} seed={}", a.steps, a.burn_in, a.seed);
    println!("lyapunov (measure)={}", fmt_f(l_measure));
    println!("lyapunov (orbit)={}", fmt_f(l_orbit));
    Ok(())
}

fn cmd_stationary(ctx: &Ctx) -> Result<()> {
    let (system, _) = ctx.step_system()?;
    let a = &ctx.config.analysis;
    let regions = minimal_trapping_domains(&system, a.epsilon, a.delta)?;
    for (i, region) in regions.iter().enumerate() {
        let res =
            power_iterate_stationary(&system, Some(&region.domain), a.bins, a.tv_tol, a.max_iter)?;
        write_measure_csv(&ctx.path(&format!("stationary_{}.csv", i)), &res.measure)?;
        let l = lyapunov_exponent(&system, &res.measure)?;
        println!(
            "measure {}: iterations={} gap={} lyapunov={}",
            i,
            res.iterations,
            fmt_f(res.gap),
            fmt_f(l)
        );
    }
    Ok(())
}

fn mc_params(ctx: &Ctx) -> McParams {
    let a = &ctx.config.analysis;
    McParams {
        bins: a.bins,
        steps: a.steps,
        burn_in: a.burn_in,
        seed: a.seed,
        bone_depth: a.bone_depth,
        bone_samples: a.bone_samples,
        bone_threshold: a.bone_threshold,
        tv_tol: a.tv_tol,
        max_iter: a.max_iter,
    }
}

fn cmd_decompose(ctx: &Ctx) -> Result<()> {
    let (system, _) = ctx.step_system()?;
    let a = &ctx.config.analysis;
    let report = strip_decomposition(&system, a.epsilon, a.delta, &mc_params(ctx))?;
    write_strips_csv(&ctx.path("strips.csv"), &report)?;
    for (i, strip) in report.strips.iter().enumerate() {
        write_measure_csv(&ctx.path(&format!("strip_{}_measure.csv", i)), &strip.measure)?;
        if let Some(b) = &strip.bones {
            write_bone_csv(&ctx.path(&format!("strip_{}_bones.csv", i)), b)?;
        }
    }
    let text = strip_text(&report);
    print!("{}", text);
    fs::write(ctx.path("decompose.txt"), &text)?;
    Ok(())
}

fn cmd_baxendale(ctx: &Ctx) -> Result<()> {
    let (system, _) = ctx.step_system()?;
    let a = &ctx.config.analysis;
    let mut text = String::new();
    for &eps in &a.baxendale_eps {
        let rep = baxendale_check(&system, eps, a.bins, a.tv_tol)?;
        text.push_str(&baxendale_text(&rep));
        text.push('\n');
    }
    print!("{}", text);
    fs::write(ctx.path("baxendale.txt"), &text)?;
    Ok(())
}

fn cmd_pullback(ctx: &Ctx) -> Result<()> {
    let (system, _) = ctx.step_system()?;
    let a = &ctx.config.analysis;
    let regions = minimal_trapping_domains(&system, a.epsilon, a.delta)?;
    for (i, region) in regions.iter().enumerate() {
        let scan = bone_scan(
            &system,
            &region.hull,
            a.bone_depth,
            a.bone_samples,
            a.bone_threshold,
            a.seed,
        )?;
        write_bone_csv(&ctx.path(&format!("bones_{}.csv", i)), &scan)?;
        println!(
            "region {}: slope={} final_thick_fraction={}",
            i,
            fmt_f(scan.slope),
            fmt_f(scan.per_depth.last().map(|s| s.thick_fraction).unwrap_or(0.0))
        );
        // Deterministic sample of full-depth pullback intervals, sorted by
        // past word.
        let reversed = system.chain().reverse();
        let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
        let mut rows = Vec::new();
        for _ in 0..a.bone_samples.min(200) {
            let rev_path = reversed.sample_path(a.bone_depth + 1, None, &mut rng);
            let arrival = rev_path.symbols()[0];
            let mut past: Vec<usize> = rev_path.symbols()[1..].to_vec();
            past.reverse();
            let word = BackwardWord(past);
            let iv = pullback_fiber(&system, &region.hull, &word, arrival)?;
            rows.push((word.to_string(), arrival + 1, iv.lo, iv.hi));
        }
        rows.sort_by(|x, y| x.0.cmp(&y.0).then(x.1.cmp(&y.1)));
        write_pullback_csv(&ctx.path(&format!("pullback_{}.csv", i)), &rows)?;
    }
    Ok(())
}

fn cmd_unroll(ctx: &Ctx) -> Result<()> {
    let (unrolled, labels) = unroll_config(&ctx.config)?;
    let text = toml::to_string_pretty(&unrolled)
        .map_err(|e| SkewError::Input(format!("serialization failed: {}", e)))?;
    let path = ctx.path("unrolled.toml");
    fs::write(&path, &text)?;
    let labels: Vec<String> = labels.iter().map(|w| w.to_string()).collect();
    println!("unrolled to {} window states: {}", labels.len(), labels.join(" "));
    println!("wrote {}", path.display());
    Ok(())
}
