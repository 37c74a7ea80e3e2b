use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use ttdreach::presburger::to_smtlib_script;
use ttdreach::quotient::QuotientGraph;
use ttdreach::{
    check, normalize_initial_states, parse_ttd, random_ttd, serialize_ttd, CheckError, CheckOptions, Engine, Status,
};

#[derive(Parser)]
#[command(name = "ttdreach", version, about = "Thread-state reachability for thread transition diagrams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Pathwise,
    Bws,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether the file's target thread state is reachable.
    Check {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "pathwise")]
        engine: EngineArg,
        /// Stop after this many quotient paths.
        #[arg(long, value_name = "N")]
        max_paths: Option<usize>,
        /// Write every solved formula as SMT-LIB.
        #[arg(long, value_name = "PATH")]
        emit_smt: Option<PathBuf>,
        /// Write the SCC quotient in Graphviz format.
        #[arg(long, value_name = "PATH")]
        dump_quotient: Option<PathBuf>,
        /// Print each assembled constraint, one row per local state.
        #[arg(long)]
        dump_constraints: bool,
    },
    /// Print a random diagram.
    Gen {
        #[arg(long, default_value_t = 3)]
        shared: usize,
        #[arg(long, default_value_t = 3)]
        local: usize,
        #[arg(long, default_value_t = 6)]
        edges: usize,
        #[arg(long, default_value_t = 0.0)]
        spawn_fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

const INPUT_ERROR: u8 = 2;
const UNKNOWN: u8 = 3;
const DISAGREEMENT: u8 = 4;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Gen { shared, local, edges, spawn_fraction, seed } => {
            match random_ttd(shared, local, edges, spawn_fraction, seed) {
                Ok(d) => {
                    print!("{}", serialize_ttd(&d));
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(INPUT_ERROR)
                }
            }
        }
        Command::Check { file, engine, max_paths, emit_smt, dump_quotient, dump_constraints } => {
            let text = match std::fs::read_to_string(&file) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: cannot read {}: {e}", file.display());
                    return ExitCode::from(INPUT_ERROR);
                }
            };
            let parsed = match parse_ttd(&text) {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("error: {}: {e}", file.display());
                    return ExitCode::from(INPUT_ERROR);
                }
            };
            for w in &parsed.warnings {
                eprintln!("warning: {w}");
            }
            if let Some(path) = dump_quotient {
                let dot =
                    normalize_initial_states(&parsed.ttd).and_then(|d| QuotientGraph::build(&d)).map(|q| q.to_dot());
                match dot.map(|dot| std::fs::write(&path, dot)) {
                    Ok(Ok(())) => {}
                    Ok(Err(e)) => {
                        eprintln!("error: cannot write {}: {e}", path.display());
                        return ExitCode::from(INPUT_ERROR);
                    }
                    Err(e) => {
                        eprintln!("error: {e}");
                        return ExitCode::from(INPUT_ERROR);
                    }
                }
            }
            let options = CheckOptions {
                engine: match engine {
                    EngineArg::Pathwise => Engine::Pathwise,
                    EngineArg::Bws => Engine::Bws,
                    EngineArg::Both => Engine::Both,
                },
                max_paths: max_paths.or(CheckOptions::default().max_paths),
                keep_constraints: dump_constraints,
                keep_formulas: emit_smt.is_some(),
            };
            let (report, code) = match check(&parsed.ttd, &options) {
                Ok(r) => (r, None),
                Err(CheckError::Disagreement { pathwise, bws, report }) => {
                    eprintln!("BUG: engines disagree (pathwise {pathwise}, bws {bws}); please report this input");
                    (*report, Some(DISAGREEMENT))
                }
                Err(CheckError::Model(e)) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(INPUT_ERROR);
                }
            };
            if dump_constraints {
                for pc in &report.constraints {
                    let ks: Vec<String> = pc.kappas.iter().map(|k| format!("k{k}")).collect();
                    println!("CONSTRAINT plan={} loops=[{}]", pc.plan, ks.join(","));
                    print!("{}", pc.render());
                }
            }
            if let Some(path) = emit_smt {
                if let Err(e) = std::fs::write(&path, to_smtlib_script(&report.formulas)) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return ExitCode::from(INPUT_ERROR);
                }
            }
            print!("{}", report.verdict.render());
            if let Some(b) = &report.bws_verdict {
                println!("BWS: {}", b.status);
            }
            match (code, report.verdict.status) {
                (Some(c), _) => ExitCode::from(c),
                (None, Status::Unknown) => ExitCode::from(UNKNOWN),
                (None, _) => ExitCode::SUCCESS,
            }
        }
    }
}
