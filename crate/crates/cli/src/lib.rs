//! The `soundprofile` command line: extraction, training, projection,
//! statistics and rendering over a song manifest, plus a synthetic corpus
//! generator.

pub mod args;
pub mod commands;
pub mod error;
pub mod synth;

use args::{Cli, Command};
use error::CliResult;

pub fn run(cli: &Cli) -> CliResult<()> {
    let seed = cli.seed;
    match &cli.command {
        Command::Extract(a) => commands::cmd_extract(a),
        Command::Train(a) => commands::cmd_train(a, seed),
        Command::Project(a) => commands::cmd_project(a),
        Command::Stats(a) => commands::cmd_stats(a),
        Command::Render(a) => commands::cmd_render(a, seed),
        Command::Pipeline(a) => commands::cmd_pipeline(a, seed),
        Command::Synth(a) => synth::cmd_synth(a, seed),
    }
}
