//! Command-line front end: validate and solve single network files, run
//! one-off benchmark trials, and reproduce the accuracy and scaling
//! experiment tables.

use std::path::PathBuf;

use anyhow::Context;
use belief_bounds::{
    exact, lower_bound, upper_bound, Evidence, Network64, NetworkKind,
    OptimizeOpts, SigmoidExpectation, DEFAULT_ENUM_CAP,
};
use belief_bounds_harness::{
    evidence_for, run_figure, run_trial, sweep, trial::lower_opts_for,
    EvidencePolicy, Figure, FigureJob, LbMode, Leak, TrialSettings,
    WeightPrior, TRIAL_HEADER,
};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(
    name = "belief-bounds",
    version,
    about = "Deterministic bounds on marginal likelihoods in two-layer \
             sigmoid and noisy-OR belief networks"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

/// Flags shared by the single-network solver commands.
#[derive(Args)]
struct SingleArgs {
    /// Network JSON file.
    #[arg(long)]
    network: PathBuf,
    /// How to pin the bottom layer.
    #[arg(long, value_enum, default_value_t = EvidencePolicy::Zeros)]
    evidence: EvidencePolicy,
    /// Random seed; only the sampled evidence policy draws from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Lower-bound knobs.
#[derive(Args)]
struct LbArgs {
    /// Sigmoid expectation family.
    #[arg(long, value_enum, default_value_t = LbMode::Auto)]
    lb_mode: LbMode,
    /// Use the variance-corrected noisy-OR minorant.
    #[arg(long)]
    quadratic: bool,
    /// Factors kept in the noisy-OR series.
    #[arg(long, default_value_t = 16)]
    expansion_terms: usize,
}

#[derive(Args)]
struct FigArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Trials per grid cell.
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Layer sizes (accuracy sweeps use the first entry; scaling studies
    /// use all).
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    /// Override the figure's evidence protocol.
    #[arg(long, value_enum)]
    evidence: Option<EvidencePolicy>,
    /// Weight of an always-on leak parent (noisy-OR figures only).
    #[arg(long)]
    leak: Option<f64>,
    /// Trial CSV path; aggregates land next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    lb: LbArgs,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check a network file and print a summary.
    Validate {
        /// Network JSON file.
        network: PathBuf,
    },
    /// Enumerate the exact log marginal likelihood of the evidence.
    Exact(SingleArgs),
    /// Optimize the upper bound on the evidence's log probability.
    Upper(SingleArgs),
    /// Optimize the lower bound on the evidence's log probability.
    Lower {
        #[command(flatten)]
        single: SingleArgs,
        #[command(flatten)]
        lb: LbArgs,
    },
    /// Run one randomly drawn benchmark trial and print its CSV row.
    Trial {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Weight prior, also selecting the network kind:
        /// gaussian:<sigma> or dirichlet:<phi>.
        #[arg(long)]
        prior: WeightPrior,
        /// Layer size (first entry is used).
        #[arg(long, value_delimiter = ',', default_value = "8")]
        sizes: Vec<usize>,
        #[arg(long, value_enum, default_value_t = EvidencePolicy::Sampled)]
        evidence: EvidencePolicy,
        /// Weight of an always-on leak parent (noisy-OR only).
        #[arg(long)]
        leak: Option<f64>,
        /// Write the row to a file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        lb: LbArgs,
    },
    /// Sigmoid accuracy sweep: oracle-checked errors against coupling.
    Fig2(FigArgs),
    /// Sigmoid scaling study: bound spread across network sizes.
    Fig3(FigArgs),
    /// Noisy-OR accuracy sweep: oracle-checked errors against coupling.
    Fig4(FigArgs),
    /// Noisy-OR scaling study with worst-case all-ones evidence.
    Fig5(FigArgs),
}

fn load_net(path: &PathBuf) -> anyhow::Result<Network64> {
    Network64::load_json(path).with_context(|| format!("loading {}", path.display()))
}

fn single_evidence(
    net: &Network64,
    args: &SingleArgs,
) -> anyhow::Result<Evidence> {
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    evidence_for(net, args.evidence, &mut rng).context(
        "building evidence over the bottom layer (the network needs a \
         layers section for policy evidence)",
    )
}

fn run_figure_cmd(figure: Figure, args: FigArgs) -> anyhow::Result<()> {
    let out = args
        .out
        .unwrap_or_else(|| PathBuf::from(format!("{}.csv", figure.name())));
    let job = FigureJob {
        figure,
        sizes: args.sizes,
        trials: args.trials,
        base_seed: args.seed,
        evidence: args.evidence,
        leak: args.leak.map(|theta| Leak { theta }),
        lb_mode: args.lb.lb_mode,
        quadratic: args.lb.quadratic,
        expansion_terms: args.lb.expansion_terms,
    };
    let result = run_figure(&job, &out)?;
    let total: usize = result.records.iter().map(Vec::len).sum();
    println!(
        "{}: {} trials over {} cells -> {}",
        figure.name(),
        total,
        result.cells.len(),
        result.trial_path.display()
    );
    for path in &result.agg_paths {
        println!("aggregate -> {}", path.display());
    }
    Ok(())
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().cmd {
        Cmd::Validate { network } => {
            let net = load_net(&network)?;
            println!("kind: {}", net.kind().as_str());
            println!("nodes: {}", net.len());
            let edges: usize =
                (0..net.len()).map(|i| net.parents(belief_bounds::NodeId(i)).len()).sum();
            println!("edges: {edges}");
            match net.layers() {
                Some(l) => println!(
                    "layers: {} top, {} bottom",
                    l.l2.len(),
                    l.l1.len()
                ),
                None => println!("layers: none declared"),
            }
            println!("ok");
        }
        Cmd::Exact(args) => {
            let net = load_net(&args.network)?;
            let ev = single_evidence(&net, &args)?;
            let result = exact::log_marginal(&net, &ev)?;
            println!("log_marginal: {:e}", result.log_marginal);
            println!("states_enumerated: {}", result.enumerated_states);
        }
        Cmd::Upper(args) => {
            let net = load_net(&args.network)?;
            let ev = single_evidence(&net, &args)?;
            let result = upper_bound(&net, &ev, &OptimizeOpts::default())?;
            println!("log_upper_bound: {:e}", result.log_bound);
            println!("sweeps: {}", result.sweeps);
            println!("converged: {}", result.converged);
            println!("at_cap: {}", result.at_cap);
        }
        Cmd::Lower { single, lb } => {
            let net = load_net(&single.network)?;
            let ev = single_evidence(&net, &single)?;
            let settings = TrialSettings {
                prior: WeightPrior::Gaussian { sigma: 1.0 },
                n: net.len(),
                evidence: single.evidence,
                leak: None,
                lb_mode: lb.lb_mode,
                quadratic: lb.quadratic,
                expansion_terms: lb.expansion_terms,
                oracle: false,
            };
            let opts = lower_opts_for(&settings, &net);
            let result = lower_bound(&net, &ev, None, &opts)?;
            println!("log_lower_bound: {:e}", result.log_bound);
            println!("sweeps: {}", result.sweeps);
            println!("converged: {}", result.converged);
            let mode = match (net.kind(), opts.sigmoid_expectation) {
                (NetworkKind::NoisyOr, _) => "series",
                (_, SigmoidExpectation::Exact) => "exact",
                (_, SigmoidExpectation::Auxiliary) => "aux",
            };
            println!("mode: {mode}");
        }
        Cmd::Trial {
            seed,
            prior,
            sizes,
            evidence,
            leak,
            out,
            lb,
        } => {
            let n = *sizes.first().unwrap_or(&8);
            if leak.is_some() && prior.kind() != NetworkKind::NoisyOr {
                anyhow::bail!("a leak node only makes sense for noisy-OR networks");
            }
            let settings = TrialSettings {
                prior,
                n,
                evidence,
                leak: leak.map(|theta| Leak { theta }),
                lb_mode: lb.lb_mode,
                quadratic: lb.quadratic,
                expansion_terms: lb.expansion_terms,
                oracle: n <= DEFAULT_ENUM_CAP,
            };
            let rec = run_trial(&settings, seed, 0, 0)?;
            match out {
                Some(path) => sweep::write_trial_csv(&path, [&rec])?,
                None => {
                    println!("{}", TRIAL_HEADER.join(","));
                    println!("{}", rec.csv_fields().join(","));
                }
            }
        }
        Cmd::Fig2(args) => run_figure_cmd(Figure::Fig2, args)?,
        Cmd::Fig3(args) => run_figure_cmd(Figure::Fig3, args)?,
        Cmd::Fig4(args) => run_figure_cmd(Figure::Fig4, args)?,
        Cmd::Fig5(args) => run_figure_cmd(Figure::Fig5, args)?,
    }
    Ok(())
}
