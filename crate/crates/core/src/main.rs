//! Batch command-line front end.
//!
//! Exit codes: 0 success/verified/found; 1 not found or invalid certificate;
//! 2 precondition violation; 3 internal invariant broken (writes a diagnostic
//! dump: invariant.digraph, invariant.cert, reduction.dump).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use immersion::certify::{parse_certificate, verify, write_certificate};
use immersion::dot::write_dot;
use immersion::gen::{gen_out_regular, gen_reduction_fixture};
use immersion::graph::{parse_digraph, write_digraph, MultiDigraph};
use immersion::oracle::{exhaustive_immersion, OracleError, OracleOutcome, SearchLimits};
use immersion::patterns::{build_pattern, PatternKind};
use immersion::solver::{find_f, find_tt, SolverError};

#[derive(Parser)]
#[command(name = "immersion", about = "Constructive immersion finding in digraphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum PatternArg {
    Tt,
    F,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Regular,
    Fixture,
}

#[derive(Subcommand)]
enum Command {
    /// Find an immersion and write its certificate.
    Find {
        #[arg(long, value_enum)]
        pattern: PatternArg,
        #[arg(long)]
        k: u32,
        /// Parallel arcs per level; required for --pattern f.
        #[arg(long)]
        l: Option<u32>,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        cert: PathBuf,
        /// Waive degree preconditions; best-effort search.
        #[arg(long)]
        force: bool,
        /// Admit up to c1(K,l) vertices below the outdegree bound (f only).
        #[arg(long)]
        relaxed: bool,
        /// Parallel threads for the extension scan; 1 by default.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Also export a DOT drawing of host plus highlighted certificate.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Check a certificate against a digraph.
    Verify {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        cert: PathBuf,
    },
    /// Exact exhaustive search on a small digraph.
    Oracle {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        pattern: PatternArg,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        l: Option<u32>,
    },
    /// Generate a digraph instance.
    Gen {
        #[arg(long, value_enum)]
        model: ModelArg,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Fixture name for --model fixture.
        #[arg(long)]
        name: Option<String>,
        /// Output file (regular) or directory (fixture).
        #[arg(long)]
        out: PathBuf,
    },
    /// Print basic statistics of a digraph file.
    Stats {
        #[arg(long)]
        input: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match run(cli.command) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            2
        }
    };
    ExitCode::from(code)
}

fn read_graph(path: &Path) -> Result<MultiDigraph, String> {
    let text =
        std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    parse_digraph(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn pattern_kind(pattern: PatternArg, k: u32, l: Option<u32>) -> Result<PatternKind, String> {
    match pattern {
        PatternArg::Tt => Ok(PatternKind::Tt { k }),
        PatternArg::F => {
            let l = l.ok_or("--pattern f requires --l")?;
            Ok(PatternKind::F { k, l })
        }
    }
}

fn dump_invariant(err: &SolverError) {
    if let SolverError::InternalInvariant(report) = err {
        let _ = std::fs::write("invariant.digraph", &report.digraph);
        if let Some(cert) = &report.certificate {
            let _ = std::fs::write("invariant.cert", cert);
        }
        let _ = std::fs::write("reduction.dump", &report.dump);
        eprintln!("diagnostic dump written: invariant.digraph, reduction.dump");
    }
}

fn run(command: Command) -> Result<u8, String> {
    match command {
        Command::Find {
            pattern,
            k,
            l,
            input,
            cert,
            force,
            relaxed,
            jobs,
            dot,
        } => {
            let g = read_graph(&input)?;
            let mut trace = Vec::new();
            let result = match pattern {
                PatternArg::Tt => find_tt(&g, k, force, jobs, &mut trace),
                PatternArg::F => {
                    let l = l.ok_or("--pattern f requires --l")?;
                    find_f(&g, k, l, relaxed, jobs, &mut trace)
                }
            };
            match result {
                Ok(found) => {
                    println!(
                        "found {} in digraph with n={} m={}",
                        found.pattern.kind,
                        g.vertex_count(),
                        g.arc_count()
                    );
                    for line in &trace {
                        println!("  {line}");
                    }
                    std::fs::write(&cert, write_certificate(&found))
                        .map_err(|e| format!("cannot write {}: {e}", cert.display()))?;
                    if let Some(dot_path) = dot {
                        std::fs::write(&dot_path, write_dot(&g, Some(&found)))
                            .map_err(|e| format!("cannot write {}: {e}", dot_path.display()))?;
                    }
                    Ok(0)
                }
                Err(e @ SolverError::SearchFailed(_)) => {
                    eprintln!("{e}");
                    Ok(1)
                }
                Err(e @ SolverError::InternalInvariant(_)) => {
                    eprintln!("{e}");
                    dump_invariant(&e);
                    Ok(3)
                }
                Err(e) => {
                    eprintln!("{e}");
                    Ok(2)
                }
            }
        }
        Command::Verify { input, cert } => {
            let g = read_graph(&input)?;
            let text = std::fs::read_to_string(&cert)
                .map_err(|e| format!("cannot read {}: {e}", cert.display()))?;
            let parsed = match parse_certificate(&text) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("invalid certificate: {e}");
                    return Ok(1);
                }
            };
            let violations = verify(&g, &parsed);
            if violations.is_empty() {
                println!("ok: {} immersion certificate verifies", parsed.pattern.kind);
                Ok(0)
            } else {
                for v in &violations {
                    eprintln!("{v}");
                }
                Ok(1)
            }
        }
        Command::Oracle {
            input,
            pattern,
            k,
            l,
        } => {
            let g = read_graph(&input)?;
            let kind = pattern_kind(pattern, k, l)?;
            let pat = build_pattern(kind).map_err(|e| e.to_string())?;
            match exhaustive_immersion(&g, &pat, SearchLimits::default()) {
                Ok(OracleOutcome::Found(found)) => {
                    print!("{}", write_certificate(&found));
                    Ok(0)
                }
                Ok(OracleOutcome::NotPresent) => {
                    eprintln!("no {} immersion present", pat.kind);
                    Ok(1)
                }
                Err(e @ (OracleError::HostTooLarge(_) | OracleError::ResourceExceeded(_))) => {
                    eprintln!("{e}");
                    Ok(2)
                }
            }
        }
        Command::Gen {
            model,
            n,
            d,
            seed,
            name,
            out,
        } => match model {
            ModelArg::Regular => {
                let n = n.ok_or("--model regular requires --n")?;
                let d = d.ok_or("--model regular requires --d")?;
                let g = gen_out_regular(n, d, seed).map_err(|e| e.to_string())?;
                std::fs::write(&out, write_digraph(&g))
                    .map_err(|e| format!("cannot write {}: {e}", out.display()))?;
                println!("wrote {} (n={n}, d={d}, seed={seed})", out.display());
                Ok(0)
            }
            ModelArg::Fixture => {
                let name = name.ok_or("--model fixture requires --name")?;
                let fx = gen_reduction_fixture(&name).map_err(|e| e.to_string())?;
                std::fs::create_dir_all(&out)
                    .map_err(|e| format!("cannot create {}: {e}", out.display()))?;
                let graph_path = out.join("graph.dgr");
                let cert_path = out.join("planted.cert");
                std::fs::write(&graph_path, write_digraph(&fx.graph))
                    .map_err(|e| format!("cannot write {}: {e}", graph_path.display()))?;
                std::fs::write(&cert_path, write_certificate(&fx.planted))
                    .map_err(|e| format!("cannot write {}: {e}", cert_path.display()))?;
                println!("wrote fixture {name} to {}", out.display());
                Ok(0)
            }
        },
        Command::Stats { input } => {
            let g = read_graph(&input)?;
            let (min_out, max_out) = g
                .vertices()
                .map(|v| g.out_degree(v).unwrap())
                .fold((usize::MAX, 0), |(lo, hi), d| (lo.min(d), hi.max(d)));
            println!("n {}", g.vertex_count());
            println!("m {}", g.arc_count());
            if g.vertex_count() > 0 {
                println!("min_outdegree {min_out}");
                println!("max_outdegree {max_out}");
            }
            println!("max_multiplicity {}", g.max_multiplicity());
            println!("simple {}", g.is_simple());
            Ok(0)
        }
    }
}
