//! Command-line front end: training, the rotation and rolling experiments,
//! dropout sweeps, heatmaps, and replay of recorded runs.

pub mod commands;
pub mod experiments;
pub mod input;
pub mod manifest;

use clap::Parser;

pub use commands::Command;

#[derive(Debug, Parser)]
#[command(name = "envelope", version, about = "Monte Carlo Dropout uncertainty envelope experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Process exit code for an error: 2 for degenerate numerics, 1 for everything else.
pub fn exit_code(error: &anyhow::Error) -> i32 {
    let numeric = error
        .chain()
        .filter_map(|e| e.downcast_ref::<envelope_core::Error>())
        .any(|e| e.is_numeric());
    if numeric {
        2
    } else {
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use envelope_core::Error;

    #[test]
    fn numeric_errors_exit_with_two() {
        let numeric = anyhow::Error::new(Error::Numeric("constant series".into())).context("rotation");
        assert_eq!(exit_code(&numeric), 2);
        assert_eq!(exit_code(&anyhow::Error::new(Error::Divergence { epoch: 1 })), 2);
        let parse = anyhow::Error::new(Error::Parse {
            offset: 0,
            message: "bad magic".into(),
        });
        assert_eq!(exit_code(&parse), 1);
        assert_eq!(exit_code(&anyhow::anyhow!("missing file")), 1);
    }

    #[test]
    fn parses_list_flags() {
        let cli = Cli::try_parse_from([
            "envelope",
            "rolling-bench",
            "--model",
            "m",
            "--base-images",
            "b",
            "--frame-rates",
            "30,10",
            "--out",
            "o",
        ])
        .unwrap();
        match cli.command {
            Command::RollingBench(a) => {
                assert_eq!(a.frame_rates, vec![30.0, 10.0]);
                assert_eq!(a.strides, vec![3, 5, 9]);
                assert_eq!(a.length, 91);
            }
            _ => unreachable!(),
        }
        assert!(Cli::try_parse_from(["envelope", "dropout-sweep", "--test-images", "t"]).is_err());
    }
}
