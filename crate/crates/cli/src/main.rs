//! Command-line front end: build Heffter cellulations, assemble and
//! triangulate sphere cellulations, verify outputs, sample distinct
//! triangulations, and print the scaling table.

use anyhow::Result;
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use trisphere_cli::{
    apply_config, cmd_assemble, cmd_count, cmd_heffter, cmd_scaling, cmd_triangulate, cmd_verify,
    parse_config_file, run_pipeline, ChoiceSource, RunConfig,
};

#[derive(Parser)]
#[command(
    name = "trisphere",
    about = "Cellulated 3-spheres from finite-field surface cellulations",
    version
)]
struct Cli {
    /// Log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit the Heffter cellulation C_q and its triangulation T_q.
    Heffter {
        #[arg(long)]
        q: u64,
        /// Primitive element token (comma syntax) or "auto".
        #[arg(long, default_value = "auto")]
        alpha: String,
        /// Modulus polynomial, comma syntax, lowest degree first.
        #[arg(long)]
        modulus: Option<String>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Assemble the sphere cellulation S with its octahedron registry.
    Assemble {
        #[arg(long)]
        q: u64,
        #[arg(long, default_value = "auto")]
        alpha: String,
        #[arg(long)]
        modulus: Option<String>,
        /// Number of prism layers (the paper scale is q^3; desk runs use
        /// small values).
        #[arg(long)]
        m: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Triangulate a sphere cellulation file with an octahedron choice
    /// vector.
    Triangulate {
        #[arg(long, name = "in")]
        input: PathBuf,
        /// "zeros", "seed:K", or a ternary string over the registry order.
        #[arg(long)]
        choices: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Verify a facet-list triangulation; exit 0 iff the manifold and
    /// homology checks pass.
    Verify {
        #[arg(long, name = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 1_000_000)]
        flip_budget: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Sample k triangulations of a sphere file and count distinct ones.
    Count {
        #[arg(long, name = "in")]
        input: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Dry-run scaling table for a list of prime powers.
    Scaling {
        /// Comma-separated list, e.g. 5,9,13,17.
        #[arg(long, value_delimiter = ',')]
        q: Vec<u64>,
        #[arg(long, default_value = "cubed")]
        m_rule: String,
        /// Octahedron count base for the log2 estimate (2 or 3).
        #[arg(long, default_value_t = 3)]
        log_base: u32,
    },
    /// Full pipeline: heffter -> assemble -> triangulate -> verify, with
    /// file artifacts.
    Pipeline {
        #[arg(long)]
        q: Option<u64>,
        #[arg(long)]
        alpha: Option<String>,
        #[arg(long)]
        modulus: Option<String>,
        #[arg(long)]
        m: Option<usize>,
        /// "zeros", "seed:K", or a ternary string.
        #[arg(long)]
        choices: Option<String>,
        #[arg(long)]
        flip_budget: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Run the verification step and gate the exit code on it.
        #[arg(long)]
        verify: bool,
        /// Plain-text `key = value` configuration file; flags override it.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Heffter {
            q,
            alpha,
            modulus,
            out_dir,
        } => {
            cmd_heffter(q, &alpha, modulus.as_deref(), &out_dir)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Assemble {
            q,
            alpha,
            modulus,
            m,
            out,
        } => {
            cmd_assemble(q, &alpha, modulus.as_deref(), m, &out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Triangulate {
            input,
            choices,
            out,
        } => {
            cmd_triangulate(&input, &choices, &out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify {
            input,
            flip_budget,
            seed,
        } => {
            let pass = cmd_verify(&input, flip_budget, seed)?;
            Ok(if pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Count { input, k, seed } => {
            cmd_count(&input, k, seed)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Scaling { q, m_rule, log_base } => {
            cmd_scaling(&q, &m_rule, log_base)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Pipeline {
            q,
            alpha,
            modulus,
            m,
            choices,
            flip_budget,
            seed,
            out_dir,
            verify,
            config,
        } => {
            let mut cfg = RunConfig::default();
            if let Some(path) = config {
                let kv = parse_config_file(&path)?;
                apply_config(&mut cfg, &kv)?;
            }
            if let Some(q) = q {
                cfg.q = q;
            }
            if let Some(alpha) = alpha {
                cfg.alpha = alpha;
            }
            if modulus.is_some() {
                cfg.modulus = modulus;
            }
            if let Some(m) = m {
                cfg.m = m;
            }
            if let Some(choices) = &choices {
                cfg.choices = ChoiceSource::parse(choices)?;
            }
            if let Some(b) = flip_budget {
                cfg.flip_budget = b;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(d) = out_dir {
                cfg.out_dir = d;
            }
            if verify {
                cfg.verify = true;
            }
            let outcome = run_pipeline(&cfg)?;
            for f in &outcome.files {
                println!("artifact: {}", f.display());
            }
            Ok(match outcome.verified {
                Some(false) => ExitCode::from(1),
                _ => ExitCode::SUCCESS,
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            // One machine-parsable line per failure.
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
