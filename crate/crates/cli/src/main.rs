//! `vpcn`: plan virtual channels for a payment channel network.
//!
//! Exit codes: 0 ok, 1 usage, 2 parse or validation error, 3 infeasible or a
//! search/size limit was hit, 4 solver/oracle mismatch or replay divergence.
//! `--budget` and `--max-level` override the values in the instance file.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use vpcn::builder::{build_model_with, validate_model, BuildError, BuildOptions, ModelCounts, ParentCapacity};
use vpcn::ingest::{parse_instance, Instance};
use vpcn::milp::{emit_lp, emit_mps, SolverConfig, SolverError};
use vpcn::oracle::{brute_force_optimize, OracleConfig, OracleError};
use vpcn::replay::{replay_solution, CreationFeeSource, ReplayError, ReplayOptions, ReplayOrder};
use vpcn::solution::{optimize, OptimizeConfig, OptimizeError, Solution, SolutionStatus};

#[derive(Parser)]
#[command(name = "vpcn", version, about = "Demand-aware virtual channel placement")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the placement model and print the solution summary.
    Optimize {
        instance: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// Write the full solution report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Brute-force optimum of a tiny instance.
    Oracle {
        instance: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Compare the solver objective with the brute-force objective.
    Check {
        instance: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Execute a solution report on the channel state machine.
    Replay {
        instance: PathBuf,
        report: PathBuf,
        /// Pay transactions in descending sequence order.
        #[arg(long)]
        reverse: bool,
        #[arg(long, value_enum, default_value_t = FeeSource::Wallet)]
        creation_fee: FeeSource,
        /// Write the replay report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the model as an LP or MPS file.
    Emit {
        instance: PathBuf,
        #[arg(long, value_enum)]
        format: Format,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Parse the instance and check the structure of its model.
    Validate {
        instance: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
    },
}

#[derive(Args, Clone)]
struct ModelArgs {
    #[arg(long)]
    max_level: Option<u32>,
    #[arg(long)]
    budget: Option<u64>,
    /// How virtual channels draw on their parents' capacity.
    #[arg(long, value_enum, default_value_t = Capacity::Reserved)]
    parent_capacity: Capacity,
    /// Refuse models with more variables than this (0 disables the limit).
    #[arg(long, default_value_t = 20_000)]
    max_vars: usize,
}

#[derive(Args, Clone)]
struct SolverArgs {
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long)]
    node_limit: Option<u64>,
    #[arg(long)]
    time_limit_ms: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Capacity {
    Reserved,
    Shared,
}

#[derive(Clone, Copy, ValueEnum)]
enum FeeSource {
    Wallet,
    Channel,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Lp,
    Mps,
}

/// A failed command: message and exit code.
struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl ToString) -> Failure {
    Failure { code, message: message.to_string() }
}

impl ModelArgs {
    fn build_options(&self) -> BuildOptions {
        BuildOptions {
            parent_capacity: match self.parent_capacity {
                Capacity::Reserved => ParentCapacity::Reserved,
                Capacity::Shared => ParentCapacity::Shared,
            },
            max_vars: (self.max_vars > 0).then_some(self.max_vars),
        }
    }

    fn apply(&self, inst: &mut Instance) {
        if let Some(b) = self.budget {
            inst.budget = b;
        }
        if let Some(m) = self.max_level {
            inst.max_level = m;
        }
    }
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            threads: self.threads,
            node_limit: self.node_limit,
            time_limit_ms: self.time_limit_ms,
            ..SolverConfig::default()
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| fail(2, format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| fail(1, format!("cannot write {}: {e}", path.display())))
}

fn load(path: &Path, model: &ModelArgs) -> Result<Instance, Failure> {
    let mut inst = parse_instance(&read(path)?).map_err(|e| fail(2, e))?;
    model.apply(&mut inst);
    Ok(inst)
}

fn build_failure(e: BuildError) -> Failure {
    fail(3, e)
}

fn optimize_failure(e: OptimizeError) -> Failure {
    match e {
        OptimizeError::Build(e) => build_failure(e),
        OptimizeError::Solver(SolverError::InvalidConfig(m)) => fail(1, m),
        OptimizeError::Solver(e) => fail(3, e),
        OptimizeError::Unbounded => fail(3, e),
        OptimizeError::Extract(e) => fail(4, e),
    }
}

fn oracle_failure(e: OracleError) -> Failure {
    match e {
        OracleError::EnvelopeExceeded(_) => fail(3, e),
        OracleError::Build(e) => build_failure(e),
        OracleError::SelfAudit(_) => fail(4, e),
    }
}

fn status_code(status: SolutionStatus) -> u8 {
    match status {
        SolutionStatus::Optimal => 0,
        SolutionStatus::LimitHit | SolutionStatus::Infeasible => 3,
    }
}

fn summary(sol: &Solution) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "status: {}", sol.status.as_str());
    let _ = writeln!(s, "objective: {}", sol.objective);
    let _ = writeln!(s, "creation cost: {}", sol.creation_cost);
    let _ = writeln!(s, "routing cost: {}", sol.total_routing_cost());
    let _ = writeln!(s, "virtual channels: {}", sol.vcs.len());
    for vc in &sol.vcs {
        let _ = writeln!(
            s,
            "  {} -> {} via {} (level {}, {}, capacity {})",
            vc.from,
            vc.to,
            vc.via,
            vc.level,
            vc.family.as_str(),
            vc.capacity
        );
    }
    let _ = writeln!(s, "transactions: {} of {} routed", sol.successful().count(), sol.transactions.len());
    for t in &sol.transactions {
        if t.success {
            let hops: Vec<String> = t.route.iter().map(|h| h.to.to_string()).collect();
            let _ = writeln!(
                s,
                "  #{} {} -> {} amount {}: {} {} (cost {})",
                t.seq,
                t.source,
                t.receiver,
                t.amount,
                t.source,
                hops.join(" "),
                t.routing_cost
            );
        } else {
            let _ = writeln!(s, "  #{} {} -> {} amount {}: not routed", t.seq, t.source, t.receiver, t.amount);
        }
    }
    s
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Optimize { instance, model, solver, out } => {
            let inst = load(&instance, &model)?;
            let cfg = OptimizeConfig { build: model.build_options(), solver: solver.config() };
            let result = optimize(&inst, &cfg).map_err(optimize_failure)?;
            print!("{}", summary(&result.solution));
            println!("search nodes: {}", result.nodes);
            if let Some(out) = out {
                write(&out, &result.solution.to_report())?;
            }
            Ok(status_code(result.solution.status))
        }
        Command::Oracle { instance, model } => {
            let inst = load(&instance, &model)?;
            let cfg = OracleConfig { parent_capacity: model.build_options().parent_capacity, ..OracleConfig::default() };
            let sol = brute_force_optimize(&inst, &cfg).map_err(oracle_failure)?;
            print!("{}", summary(&sol));
            Ok(0)
        }
        Command::Check { instance, model, solver } => {
            let inst = load(&instance, &model)?;
            let build = model.build_options();
            let oracle_cfg = OracleConfig { parent_capacity: build.parent_capacity, ..OracleConfig::default() };
            let expected = brute_force_optimize(&inst, &oracle_cfg).map_err(oracle_failure)?;
            let cfg = OptimizeConfig { build, solver: solver.config() };
            let got = optimize(&inst, &cfg).map_err(optimize_failure)?.solution;
            if got.status != SolutionStatus::Optimal {
                return Err(fail(3, format!("solver stopped with status {}", got.status.as_str())));
            }
            println!("solver objective: {}", got.objective);
            println!("oracle objective: {}", expected.objective);
            if got.objective != expected.objective {
                return Err(fail(4, "objectives differ"));
            }
            println!("match");
            Ok(0)
        }
        Command::Replay { instance, report, reverse, creation_fee, out } => {
            let inst = parse_instance(&read(&instance)?).map_err(|e| fail(2, e))?;
            let sol = Solution::from_report(&read(&report)?).map_err(|e| fail(2, e))?;
            let opts = ReplayOptions {
                creation_fee: match creation_fee {
                    FeeSource::Wallet => CreationFeeSource::ExternalWallet,
                    FeeSource::Channel => CreationFeeSource::OnChannel,
                },
                order: if reverse { ReplayOrder::ReverseSeq } else { ReplayOrder::Seq },
            };
            let replayed = replay_solution(&inst, &sol, &opts).map_err(|e| match e {
                ReplayError::Divergence(_) => fail(4, e),
                _ => fail(2, e),
            })?;
            match out {
                Some(out) => write(&out, &replayed.to_report())?,
                None => print!("{}", replayed.to_report()),
            }
            if let Err(e) = replayed.ensure_clean() {
                eprintln!("vpcn: {e}");
                return Ok(4);
            }
            Ok(0)
        }
        Command::Emit { instance, format, out, model } => {
            let inst = load(&instance, &model)?;
            let pm = build_model_with(&inst, &model.build_options()).map_err(build_failure)?;
            let text = match format {
                Format::Lp => emit_lp(&pm.model),
                Format::Mps => emit_mps(&pm.model),
            };
            write(&out, &text)?;
            Ok(0)
        }
        Command::Validate { instance, model } => {
            let inst = load(&instance, &model)?;
            let pm = build_model_with(&inst, &model.build_options()).map_err(build_failure)?;
            let counts = ModelCounts::of(&pm.model);
            println!(
                "nodes {}, transactions {}, max level {}",
                pm.n(),
                pm.transactions.len(),
                pm.max_level
            );
            println!(
                "variables: pt {} vt {} x {} vc0 {} vc {} cap {}; constraints {}",
                counts.pt,
                counts.vt,
                counts.x,
                counts.vc0,
                counts.vc_upper,
                counts.caps,
                pm.model.constraints.len()
            );
            let violations = validate_model(&pm);
            if violations.is_empty() {
                println!("model ok");
                Ok(0)
            } else {
                for v in &violations {
                    eprintln!("  {v}");
                }
                Err(fail(2, format!("{} structural violations", violations.len())))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("vpcn: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
