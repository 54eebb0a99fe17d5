//! `cgames`: file-based workflows over cooperative coloring games.
//!
//! Exit codes: 0 success, 1 malformed input, 2 claim verification FAIL,
//! 3 search budget INFEASIBLE.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use coloring_games::cascades;
use coloring_games::dynamics::{DynamicsOpts, Scheduler};
use coloring_games::efficiency::{self, PoaRatio};
use coloring_games::extensions::{self, HFunction, HyperGame, HyperOpts, McOpts};
use coloring_games::gallery::{self, Verdict};
use coloring_games::game::{any_game_from_json, EitherGame, Game};
use coloring_games::lattice;
use coloring_games::stability;
use coloring_games::{Error, SearchBudget};

#[derive(Parser)]
#[command(name = "cgames", version, about = "cooperative coloring games toolkit")]
struct Cli {
    /// Seed for randomized schedulers.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Exhaustive-search budget (states examined) before erroring out.
    #[arg(long, global = true)]
    budget: Option<u64>,
    /// Emit machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Worker threads for parallel searches (results are thread-count
    /// independent).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the improvement dynamics on a game file.
    Dynamics(DynamicsArgs),
    /// Stability checks and longest deviation sequences.
    Stability(StabilityArgs),
    /// Dominance-order computations on integer partitions.
    Lattice(LatticeArgs),
    /// Build and realize the long deviation-sequence cascades.
    Cascade(CascadeArgs),
    /// Build or verify the counterexample gallery.
    Gallery(GalleryArgs),
    /// Price-of-anarchy analysis.
    Poa(PoaArgs),
    /// Hypergraph game dynamics.
    Hyper(HyperArgs),
    /// Multichannel (overlapping groups) dynamics and search.
    Multichannel(MultichannelArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SchedulerArg {
    Lex,
    Random,
    Min,
    Maxgain,
}

impl SchedulerArg {
    fn to_scheduler(self, seed: u64) -> Scheduler {
        match self {
            SchedulerArg::Lex => Scheduler::FirstLex,
            SchedulerArg::Random => Scheduler::Random(seed),
            SchedulerArg::Min => Scheduler::MinCoalition,
            SchedulerArg::Maxgain => Scheduler::MaxUtilityGain,
        }
    }
}

#[derive(Args)]
struct DynamicsArgs {
    #[arg(long)]
    game: PathBuf,
    #[arg(long)]
    k: usize,
    #[arg(long, value_enum, default_value_t = SchedulerArg::Lex)]
    scheduler: SchedulerArg,
    #[arg(long, default_value_t = 100_000)]
    max_steps: usize,
    /// Allow pairwise group-merging moves.
    #[arg(long)]
    gossip: bool,
    /// Write the step-by-step trace as JSON lines.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// States remembered for cycle detection; beyond this a ring of the
    /// most recent states is kept, so very long cycles may report as `cap`.
    #[arg(long, default_value_t = 1_000_000)]
    cycle_memory: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum StabilityMode {
    Exists,
    Longest,
    Count,
}

#[derive(Args)]
struct StabilityArgs {
    #[arg(long)]
    game: PathBuf,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, value_enum)]
    mode: StabilityMode,
    #[arg(long)]
    gossip: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum LatticeMode {
    Chain,
    Verify,
    Table,
}

#[derive(Args)]
struct LatticeArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, value_enum)]
    mode: LatticeMode,
}

#[derive(Args)]
struct CascadeArgs {
    #[arg(long)]
    k: usize,
    #[arg(long)]
    t: usize,
    /// Replay the sequence on live groups, verifying every move.
    #[arg(long)]
    realize: bool,
    /// Append a CSV row `t,n,c,total_moves,balance,good_property_ok`.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Staircase multiplicity; defaults to the measured balance.
    #[arg(long)]
    c: Option<usize>,
}

#[derive(Args)]
struct GalleryArgs {
    #[command(subcommand)]
    action: GalleryAction,
}

#[derive(Subcommand)]
enum GalleryAction {
    /// Construct a named game and write it as JSON.
    Build {
        name: String,
        /// Comma-separated integer parameters.
        #[arg(long, value_delimiter = ',')]
        params: Vec<i64>,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Check the named game's claims; exits 2 on FAIL, 3 on INFEASIBLE.
    Verify { name: String },
}

#[derive(Args)]
struct PoaArgs {
    #[arg(long)]
    game: PathBuf,
    #[arg(long)]
    k: usize,
    /// Channel count for configuration-level optimum.
    #[arg(long)]
    q: Option<usize>,
}

#[derive(Args)]
struct HyperArgs {
    #[arg(long)]
    game: PathBuf,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, value_enum, default_value_t = SchedulerArg::Lex)]
    scheduler: SchedulerArg,
    #[arg(long, default_value_t = 100_000)]
    max_steps: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum McMode {
    Run,
    Exists,
    Max,
}

#[derive(Args)]
struct MultichannelArgs {
    #[arg(long)]
    game: PathBuf,
    #[arg(long)]
    q: usize,
    #[arg(long, value_enum, default_value_t = McMode::Run)]
    mode: McMode,
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Pair-utility family: `indicator`, `eps:N/D`, or `capped:C`.
    #[arg(long, default_value = "indicator")]
    h: String,
    #[arg(long, value_enum, default_value_t = SchedulerArg::Lex)]
    scheduler: SchedulerArg,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let budget = cli
        .budget
        .map(SearchBudget::new)
        .unwrap_or_default();
    match run(&cli, budget) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::SearchTooLarge { .. } => ExitCode::from(3),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn load_game(path: &Path) -> Result<EitherGame, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Malformed(format!("cannot read {}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Error::Malformed(format!("{}: {e}", path.display())))?;
    any_game_from_json(&value)
}

fn load_symmetric(path: &Path) -> Result<Game, Error> {
    match load_game(path)? {
        EitherGame::Symmetric(g) => Ok(g),
        EitherGame::Directed(_) => Err(Error::Malformed(
            "this subcommand needs a symmetric game (\"directed\": false)".into(),
        )),
    }
}

fn parse_h(spec: &str) -> Result<HFunction, Error> {
    if spec == "indicator" {
        return Ok(HFunction::Indicator);
    }
    if let Some(rest) = spec.strip_prefix("eps:") {
        let (n, d) = rest
            .split_once('/')
            .ok_or_else(|| Error::Malformed("expected eps:N/D".into()))?;
        let num = n
            .parse()
            .map_err(|_| Error::Malformed("field \"h\": bad numerator".into()))?;
        let den = d
            .parse()
            .map_err(|_| Error::Malformed("field \"h\": bad denominator".into()))?;
        return Ok(HFunction::linear_eps(num, den));
    }
    if let Some(rest) = spec.strip_prefix("capped:") {
        let cap = rest
            .parse()
            .map_err(|_| Error::Malformed("field \"h\": bad cap".into()))?;
        return Ok(HFunction::Capped { cap });
    }
    Err(Error::Malformed(format!(
        "field \"h\": unknown family \"{spec}\""
    )))
}

fn run(cli: &Cli, budget: SearchBudget) -> Result<ExitCode, Error> {
    match &cli.cmd {
        Cmd::Dynamics(a) => {
            let game = load_game(&a.game)?;
            let opts = DynamicsOpts {
                max_steps: a.max_steps,
                gossip: a.gossip,
                cycle_memory_cap: a.cycle_memory,
                ..Default::default()
            };
            let sched = a.scheduler.to_scheduler(cli.seed);
            let trace =
                coloring_games::dynamics::run_dynamics_view(&game.view(), a.k, sched, &opts)?;
            if let Some(path) = &a.trace {
                std::fs::write(path, trace.to_jsonl())
                    .map_err(|e| Error::Malformed(format!("cannot write trace: {e}")))?;
            }
            let status = match trace.status {
                coloring_games::dynamics::Terminal::Stable => "stable",
                coloring_games::dynamics::Terminal::CycleDetected => "cycle",
                coloring_games::dynamics::Terminal::StepCapReached => "cap",
            };
            if cli.json {
                println!(
                    "{}",
                    json!({"status": status, "steps": trace.len(),
                           "final": trace.final_partition.to_string()})
                );
            } else {
                println!(
                    "status={status} steps={} final={}",
                    trace.len(),
                    trace.final_partition
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Stability(a) => {
            let game = load_game(&a.game)?;
            match a.mode {
                StabilityMode::Exists => {
                    let found = stability::exists_k_stable_view(
                        &game.view(),
                        a.k,
                        a.gossip,
                        budget,
                        None,
                    )?;
                    match (&found, cli.json) {
                        (Some(p), false) => println!("some {p}"),
                        (None, false) => println!("none"),
                        (p, true) => println!(
                            "{}",
                            json!({"k": a.k, "exists": p.is_some(),
                                   "partition": p.as_ref().map(|x| x.to_string())})
                        ),
                    }
                    Ok(ExitCode::SUCCESS)
                }
                StabilityMode::Longest => {
                    let EitherGame::Symmetric(g) = &game else {
                        return Err(Error::Malformed(
                            "longest sequences need a symmetric game".into(),
                        ));
                    };
                    let (len, _) = stability::longest_sequence(g, a.k, budget)?;
                    if cli.json {
                        println!("{}", json!({"k": a.k, "longest": len}));
                    } else {
                        println!("longest={len}");
                    }
                    Ok(ExitCode::SUCCESS)
                }
                StabilityMode::Count => {
                    let count = stability::count_feasible(&game.view(), budget)?;
                    if cli.json {
                        println!("{}", json!({"feasible": count}));
                    } else {
                        println!("feasible={count}");
                    }
                    Ok(ExitCode::SUCCESS)
                }
            }
        }
        Cmd::Lattice(a) => {
            match a.mode {
                LatticeMode::Chain => {
                    let (len, chain) = lattice::longest_chain_with_witness(a.n);
                    if cli.json {
                        println!(
                            "{}",
                            json!({"n": a.n, "length": len,
                                   "chain": chain.iter().map(|q| q.to_string()).collect::<Vec<_>>()})
                        );
                    } else {
                        println!("length={len}");
                        for q in &chain {
                            println!("{q}");
                        }
                    }
                }
                LatticeMode::Verify => {
                    let chain = lattice::longest_chain(a.n);
                    let formula = stability::l1_formula(a.n as u64);
                    let dfs = stability::l_empty(1, a.n, budget)?;
                    let ok = chain == formula && formula == dfs;
                    if cli.json {
                        println!(
                            "{}",
                            json!({"n": a.n, "chain": chain, "formula": formula,
                                   "dfs": dfs, "ok": ok})
                        );
                    } else {
                        println!(
                            "chain={chain} formula={formula} dfs={dfs} {}",
                            if ok { "OK" } else { "MISMATCH" }
                        );
                    }
                    if !ok {
                        return Ok(ExitCode::from(2));
                    }
                }
                LatticeMode::Table => {
                    for n in 1..=a.n {
                        println!(
                            "n={n} chain={} formula={}",
                            lattice::longest_chain(n),
                            stability::l1_formula(n as u64)
                        );
                    }
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Cascade(a) => run_cascade(cli, a),
        Cmd::Gallery(a) => match &a.action {
            GalleryAction::Build { name, params, out } => {
                let (value, desc) = gallery::build_named(name, params)?;
                std::fs::write(out, serde_json::to_string_pretty(&value).unwrap())
                    .map_err(|e| Error::Malformed(format!("cannot write game: {e}")))?;
                if !cli.json {
                    println!("wrote {desc} to {}", out.display());
                }
                Ok(ExitCode::SUCCESS)
            }
            GalleryAction::Verify { name } => {
                let results = gallery::verify_named(name, budget)?;
                if cli.json {
                    println!("{}", gallery::claims_to_json(&results));
                } else {
                    for (name, v) in &results {
                        let tag = match v {
                            Verdict::Pass => "PASS".to_string(),
                            Verdict::Fail(m) => format!("FAIL ({m})"),
                            Verdict::Infeasible(m) => format!("INFEASIBLE ({m})"),
                        };
                        println!("{tag}: {name}");
                    }
                }
                if results.iter().any(|(_, v)| matches!(v, Verdict::Fail(_))) {
                    Ok(ExitCode::from(2))
                } else if results
                    .iter()
                    .any(|(_, v)| matches!(v, Verdict::Infeasible(_)))
                {
                    Ok(ExitCode::from(3))
                } else {
                    Ok(ExitCode::SUCCESS)
                }
            }
        },
        Cmd::Poa(a) => {
            let game = load_symmetric(&a.game)?;
            if let Some(q) = a.q {
                let (_, best) =
                    efficiency::max_configuration(&game, &HFunction::Indicator, q, budget)?;
                let best = best
                    .finite()
                    .map(|r| r.to_string())
                    .unwrap_or_else(|| "-inf".into());
                if cli.json {
                    println!("{}", json!({"q": q, "max_configuration": best}));
                } else {
                    println!("max configuration utility at q={q}: {best}");
                }
                return Ok(ExitCode::SUCCESS);
            }
            let res = efficiency::price_of_anarchy(&game, a.k, budget)?;
            let ratio = match &res.ratio {
                PoaRatio::Ratio(r) => r.to_string(),
                PoaRatio::Infinite => "infinite".into(),
                PoaRatio::Undefined => "undefined".into(),
            };
            if cli.json {
                println!(
                    "{}",
                    json!({"k": a.k, "ratio": ratio,
                           "best": res.best.to_string(),
                           "worst": res.worst.map(|w| w.to_string()),
                           "zero_over_zero": res.zero_over_zero})
                );
            } else {
                println!(
                    "poa(k={})={ratio} best={} worst={}",
                    a.k,
                    res.best,
                    res.worst
                        .map(|w| w.to_string())
                        .unwrap_or_else(|| "-".into())
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Hyper(a) => {
            let text = std::fs::read_to_string(&a.game)
                .map_err(|e| Error::Malformed(format!("cannot read {}: {e}", a.game.display())))?;
            let value: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| Error::Malformed(format!("{}: {e}", a.game.display())))?;
            let h = HyperGame::from_json(&value)?;
            let trace = extensions::run_hyper_dynamics(
                &h,
                a.scheduler.to_scheduler(cli.seed),
                &HyperOpts {
                    max_steps: a.max_steps,
                    k: a.k,
                    initial: None,
                },
            )?;
            if cli.json {
                println!(
                    "{}",
                    json!({"stable": trace.stable, "steps": trace.steps,
                           "final": trace.final_partition.to_string()})
                );
            } else {
                println!(
                    "stable={} steps={} final={}",
                    trace.stable, trace.steps, trace.final_partition
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Multichannel(a) => {
            let game = load_symmetric(&a.game)?;
            let h = parse_h(&a.h)?;
            match a.mode {
                McMode::Run => {
                    let trace = extensions::run_multichannel_dynamics(
                        &game,
                        &h,
                        a.q,
                        a.scheduler.to_scheduler(cli.seed),
                        &McOpts::default(),
                    )?;
                    if cli.json {
                        println!(
                            "{}",
                            json!({"stable": trace.stable, "steps": trace.steps.len()})
                        );
                    } else {
                        println!("stable={} steps={}", trace.stable, trace.steps.len());
                    }
                }
                McMode::Exists => {
                    let found =
                        extensions::exists_k_stable_config(&game, &h, a.q, a.k, budget)?;
                    if cli.json {
                        println!(
                            "{}",
                            json!({"q": a.q, "k": a.k, "exists": found.is_some()})
                        );
                    } else {
                        match found {
                            Some(_) => println!("some"),
                            None => println!("none"),
                        }
                    }
                }
                McMode::Max => {
                    let (_, best) = extensions::max_configuration(&game, &h, a.q, budget)?;
                    let best = best
                        .finite()
                        .map(|r| r.to_string())
                        .unwrap_or_else(|| "-inf".into());
                    if cli.json {
                        println!("{}", json!({"q": a.q, "max": best}));
                    } else {
                        println!("max={best}");
                    }
                }
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn run_cascade(cli: &Cli, a: &CascadeArgs) -> Result<ExitCode, Error> {
    let (rows, summary) = match a.k {
        3 => {
            let b = cascades::build_k3(a.t, a.c)?;
            let realized = if a.realize {
                cascades::realize(&b.seq, b.l, b.c)?;
                "OK"
            } else {
                "skipped"
            };
            let summary = format!(
                "moves={} balance={} realized={realized}",
                b.seq.len(),
                b.balance
            );
            (
                vec![(a.t, b.n, b.c, b.seq.len(), b.balance, true)],
                summary,
            )
        }
        4 => {
            let chain = cascades::build_k4_chain(a.t)?;
            let last = chain.levels.last().unwrap();
            let good = chain
                .levels
                .iter()
                .all(|l| cascades::has_good_property(&l.vector, l.level).is_some());
            let realized = if a.realize {
                cascades::realize(&last.seq, chain.l, chain.c)?;
                "OK"
            } else {
                "skipped"
            };
            let summary = format!(
                "levels={} moves={} balance={} c1={} good={good} realized={realized}",
                chain.depth,
                last.seq.len(),
                last.balance,
                chain.c1
            );
            (
                vec![(a.t, chain.n, chain.c, last.seq.len(), last.balance, good)],
                summary,
            )
        }
        other => {
            return Err(Error::InvalidParam(format!(
                "cascade generators exist for k=3 and k=4, not k={other}"
            )))
        }
    };
    if let Some(path) = &a.csv {
        let mut text = String::from("t,n,c,total_moves,balance,good_property_ok\n");
        for (t, n, c, moves, balance, good) in &rows {
            text.push_str(&format!("{t},{n},{c},{moves},{balance},{good}\n"));
        }
        std::fs::write(path, text)
            .map_err(|e| Error::Malformed(format!("cannot write csv: {e}")))?;
    }
    if cli.json {
        let (t, n, c, moves, balance, good) = rows[0];
        println!(
            "{}",
            json!({"t": t, "n": n, "c": c, "total_moves": moves,
                   "balance": balance, "good_property_ok": good})
        );
    } else {
        println!("{summary}");
    }
    Ok(ExitCode::SUCCESS)
}
