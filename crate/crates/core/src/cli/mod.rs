//! `supeuclid` command line: `gen-data`, `train`, `embed`, `score`, `eval`,
//! `pipeline` and `ingest`, all operating on one run directory.
//!
//! Exit codes:
//!
//! | code | meaning                                              |
//! |------|------------------------------------------------------|
//! | 0    | success                                              |
//! | 1    | internal error                                       |
//! | 2    | invalid configuration or command line                |
//! | 3    | input file missing                                   |
//! | 4    | dimension mismatch between stages                    |
//! | 5    | numeric failure (non-finite values, degenerate norm) |
//! | 6    | malformed artifact or invalid input data             |

pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::io::ErrorKind;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{names, Run};
pub use config::RunConfig;

use crate::error::{Error, Result};
use crate::scoring::ScoreSpace;

#[derive(Debug, Parser)]
#[command(
    name = "supeuclid",
    version,
    about = "Contrastive encoder training and class-mean distance OoD scoring"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// JSON run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Run directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Backbone features or unit projection embeddings.
    #[arg(long, global = true, value_name = "feature|projection")]
    pub score_space: Option<ScoreSpace>,
    /// L2-normalize features before fitting prototypes and scoring
    /// (`--normalize-features=false` disables).
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    pub normalize_features: Option<bool>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the synthetic train / id_test / ood_test splits.
    GenData,
    /// Train the encoder.
    Train {
        /// Training data (defaults to <out>/train.semb).
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Encode datasets through a checkpoint.
    Embed {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Single input file; all three splits when omitted.
        #[arg(long, requires = "output")]
        input: Option<PathBuf>,
        #[arg(long, requires = "input")]
        output: Option<PathBuf>,
    },
    /// Score features by distance to the nearest training class mean.
    Score {
        #[arg(long)]
        train_features: Option<PathBuf>,
        /// Single features file; both test splits when omitted.
        #[arg(long, requires = "output")]
        features: Option<PathBuf>,
        #[arg(long, requires = "features")]
        output: Option<PathBuf>,
    },
    /// AUROC and FPR95 from two score files.
    Eval {
        #[arg(long)]
        id_scores: Option<PathBuf>,
        #[arg(long)]
        ood_scores: Option<PathBuf>,
    },
    /// gen-data, train, embed, score and eval in sequence.
    Pipeline,
    /// Score and evaluate externally produced features.
    Ingest {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        id: PathBuf,
        #[arg(long)]
        ood: PathBuf,
    },
}

/// Stable process exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err.root() {
        Error::Config(_) | Error::Mode(_) | Error::InsufficientData(_) => 2,
        Error::Io { source, .. } if source.kind() == ErrorKind::NotFound => 3,
        Error::Dimension { .. } => 4,
        Error::Numeric(_)
        | Error::DegenerateVector { .. }
        | Error::EmptyPositives
        | Error::Invariant(_) => 5,
        Error::Format(_) | Error::Input(_) | Error::EmptyClass { .. } => 6,
        _ => 1,
    }
}

fn effective_config(g: &GlobalArgs) -> Result<RunConfig> {
    let mut cfg = match &g.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(o) = &g.out {
        cfg.out = o.clone();
    }
    if let Some(s) = g.score_space {
        cfg.train.score_space = s;
    }
    if let Some(n) = g.normalize_features {
        cfg.normalize_features = n;
    }
    Ok(cfg)
}

pub fn execute(cli: &Cli) -> Result<()> {
    let run = Run::open(effective_config(&cli.global)?)?;
    let report = match &cli.command {
        Command::GenData => return run.gen_data(),
        Command::Train { data } => return run.train(data.as_deref()),
        Command::Embed {
            checkpoint,
            input,
            output,
        } => {
            return run.embed(
                checkpoint.as_deref(),
                input.as_deref().zip(output.as_deref()),
            )
        }
        Command::Score {
            train_features,
            features,
            output,
        } => {
            return run.score(
                train_features.as_deref(),
                features.as_deref().zip(output.as_deref()),
            )
        }
        Command::Eval {
            id_scores,
            ood_scores,
        } => run.eval(id_scores.as_deref(), ood_scores.as_deref())?,
        Command::Pipeline => run.pipeline()?,
        Command::Ingest { train, id, ood } => run.ingest(train, id, ood)?,
    };
    println!("{report}");
    Ok(())
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", render_chain(&e));
            exit_code(&e)
        }
    }
}

fn render_chain(e: &Error) -> String {
    let mut out = e.to_string();
    let mut cur: &dyn std::error::Error = e;
    while let Some(src) = cur.source() {
        out.push_str(": ");
        out.push_str(&src.to_string());
        cur = src;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_root_cause() {
        let nf = Error::io("x", std::io::Error::new(ErrorKind::NotFound, "gone"));
        assert_eq!(exit_code(&nf), 3);
        assert_eq!(exit_code(&Error::dimension("d", 1, 2).context("embed")), 4);
        assert_eq!(exit_code(&Error::Config("k".into())), 2);
        assert_eq!(
            exit_code(&Error::Numeric("x".into()).context("a").context("b")),
            5
        );
        assert_eq!(exit_code(&Error::Format("x".into())), 6);
    }

    #[test]
    fn flags_parse() {
        let cli = Cli::try_parse_from([
            "supeuclid",
            "--seed",
            "4",
            "pipeline",
            "--score-space",
            "projection",
            "--normalize-features=false",
        ])
        .unwrap();
        let cfg = effective_config(&cli.global).unwrap();
        assert_eq!(cfg.seed, 4);
        assert_eq!(cfg.train.score_space, ScoreSpace::Projection);
        assert!(!cfg.normalize_features);
        let cli = Cli::try_parse_from(["supeuclid", "eval", "--normalize-features"]).unwrap();
        assert_eq!(cli.global.normalize_features, Some(true));
    }
}
