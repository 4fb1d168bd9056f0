use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

use atlscpref_cli::nash::{repro_nash, NashError};
use atlscpref_cli::pipeline::{run_pipeline, PipelineConfig, PipelineError, Stage, Target};
use atlscpref_cli::suite;
use atlscpref_core::atlsc::TranslateOptions;
use atlscpref_core::check::{
    atlsc_bounded_check, ctlstar_check, direct_pref_check, quant_sem_check, translated_check, CheckError, Verdict,
};
use atlscpref_core::gnf::{closure, gnf, GnfError};
use atlscpref_core::models::{load_model, to_kripke, unfold1, write_cgm, write_kripke, LoadError, Model};
use atlscpref_core::pref_elim::PrefMode;
use atlscpref_core::{parse, Formula, ParseError};

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}: {1}")]
    Io(PathBuf, std::io::Error),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error(transparent)]
    Gnf(#[from] GnfError),
    #[error(transparent)]
    Check(#[from] CheckError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Nash(#[from] NashError),
    #[error("engine `{0}` needs a game model")]
    NeedsGame(&'static str),
}

#[derive(Parser)]
#[command(name = "atlscpref", version, about = "Strategy-context logic with preferences: normal forms, translations and checkers")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the guard/tail table of an LTL formula
    Gnf {
        #[arg(long)]
        formula: String,
    },
    /// Print the tail closure of an LTL formula
    Closure {
        #[arg(long)]
        formula: String,
    },
    /// Run the translation stages up to `--stage`
    Translate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        formula: String,
        #[arg(long, value_enum, default_value = "atlsc")]
        stage: StageArg,
        #[arg(long, value_enum, default_value = "formb")]
        mode: ModeArg,
        /// Evaluate label guards at every state instead of the root shortcut
        #[arg(long)]
        no_collapse: bool,
        #[arg(long)]
        merge: bool,
        #[arg(long)]
        log_actions: bool,
        /// Write derived models (product or unfolding) next to this prefix
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a formula at the initial state
    Check {
        #[arg(long, value_enum)]
        engine: Engine,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        formula: String,
        /// History bound for strategies
        #[arg(long, default_value_t = 0)]
        bound: usize,
    },
    /// Run the Nash equilibrium example end to end
    ReproNash,
    /// Run the differential suites
    Suite {
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        /// Line-delimited records of every instance
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum StageArg {
    Paths,
    Pref,
    Atlsc,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Qvars,
    Logvars,
    Formb,
}

#[derive(Clone, Copy, ValueEnum)]
enum Engine {
    Ctlstar,
    Direct,
    Quantsem,
    Oracle,
    Translated,
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

/// A formula given inline or as a file name.
fn formula(arg: &str) -> Result<Formula, CliError> {
    let p = Path::new(arg);
    let text = if p.is_file() { read(p)? } else { arg.to_string() };
    Ok(parse(text.trim())?)
}

fn model(path: &Path) -> Result<Model, CliError> {
    Ok(load_model(&read(path)?)?)
}

fn verdict_code(v: Verdict) -> ExitCode {
    println!("{}", match v {
        Verdict::True => "true",
        Verdict::False => "false",
        Verdict::Unknown => "unknown",
    });
    ExitCode::from(v.exit_code() as u8)
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.cmd {
        Cmd::Gnf { formula: f } => {
            let g = gnf(&formula(&f)?)?;
            for (guard, tail) in &g.disjuncts {
                println!("{guard}\t{tail}");
            }
        }
        Cmd::Closure { formula: f } => {
            for (i, b) in closure(&formula(&f)?)?.iter().enumerate() {
                println!("{}\t{b}", i + 1);
            }
        }
        Cmd::Translate { model: path, formula: f, stage, mode, no_collapse, merge, log_actions, out } => {
            let m = model(&path)?;
            let a = formula(&f)?;
            let last = match stage {
                StageArg::Paths => Stage::Paths,
                StageArg::Pref => Stage::Pref,
                StageArg::Atlsc => Stage::Atlsc,
            };
            let cfg = PipelineConfig {
                stages: [Stage::Paths, Stage::Pref, Stage::Atlsc].into_iter().filter(|s| *s <= last).collect(),
                pref_mode: match mode {
                    ModeArg::Qvars => PrefMode::QVars,
                    ModeArg::Logvars => PrefMode::LogVars,
                    ModeArg::Formb => PrefMode::ForMB,
                },
                collapse_root: !no_collapse,
                translate: TranslateOptions { merge, log_actions },
            };
            let target = match &m {
                Model::Cgm(g) => Target::Game(g),
                Model::Kripke(k) => Target::Kripke(k),
            };
            for s in run_pipeline(target, &a, &cfg)? {
                println!("{}: {}", s.stage, s.formula);
                for q in &s.quantifiers {
                    println!("  quantifiers for {:?}: {}{}", q.coalition, q.vars, if q.merged { " (merged)" } else { "" });
                }
                if let (Some(prefix), Some(mb)) = (&out, &s.mb) {
                    write(&prefix.with_extension("mb.kripke"), &write_kripke(mb))?;
                }
                if let (Some(prefix), Stage::Atlsc, Model::Cgm(g)) = (&out, s.stage, &m) {
                    write(&prefix.with_extension("unfold.cgm"), &write_cgm(&unfold1(g)))?;
                }
            }
        }
        Cmd::Check { engine, model: path, formula: f, bound } => {
            let m = model(&path)?;
            let a = formula(&f)?;
            let k = match &m {
                Model::Cgm(g) => to_kripke(g),
                Model::Kripke(k) => k.clone(),
            };
            let game = || match &m {
                Model::Cgm(g) => Ok(g),
                Model::Kripke(_) => Err(CliError::NeedsGame("oracle/translated")),
            };
            let v = match engine {
                Engine::Ctlstar => ctlstar_check(&k, &a)?[k.initial].into(),
                Engine::Direct => direct_pref_check(&k, &k.prefs, &a)?.into(),
                Engine::Quantsem => quant_sem_check(&k, &k.prefs, &a)?.into(),
                Engine::Oracle => atlsc_bounded_check(game()?, &a, bound)?,
                Engine::Translated => translated_check(game()?, &a, bound)?,
            };
            return Ok(verdict_code(v));
        }
        Cmd::ReproNash => {
            let r = repro_nash()?;
            println!("{r}");
            return Ok(if r.passed() { ExitCode::SUCCESS } else { ExitCode::FAILURE });
        }
        Cmd::Suite { seed, out } => {
            let mut ok = true;
            let mut records = Vec::new();
            for r in suite::run_all(seed) {
                println!("{r}");
                ok &= r.passed();
                records.extend(r.records);
            }
            let n = repro_nash()?;
            println!("{} 9. Nash reproduction: {:.2?}", if n.passed() { "PASS" } else { "FAIL" }, n.elapsed);
            for (i, l) in n.lines.iter().enumerate() {
                records.push(format!("9.{i}\t{}={}\t{}", l.name, l.value, if l.ok() { "agree" } else { "DISAGREE" }));
            }
            ok &= n.passed();
            if let Some(p) = out {
                records.push(String::new());
                write(&p, &records.join("\n"))?;
            }
            return Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE });
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
