mod commands;
mod io;

use clap::{Parser, Subcommand};
use commands::{algebra, grid, invert};
use io::CliError;

#[derive(Parser)]
#[command(
    name = "dkp",
    version,
    about = "Duffin-Kemmer-Petiau algebra checks and gauge-potential reconstruction from bilinear currents",
    after_help = "Exit status: 0 all checks pass, 1 a quantitative check failed, 2 invalid input or domain."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Verify the generator identities, the word reducer and the Fierz relations.
    VerifyAlgebra(algebra::VerifyArgs),
    /// Reduce a product of generators to the 25-element basis.
    ReduceWord(algebra::ReduceArgs),
    /// Write a plane-wave solution grid and its parameter sidecar.
    Manufacture(grid::ManufactureArgs),
    /// Evaluate all bilinear currents of a wavefunction grid.
    Currents(grid::CurrentsArgs),
    /// Reconstruct the potential and field strength and report every residual.
    Invert(invert::InvertArgs),
    /// DKP-equation and divergence residuals of a grid in a given potential.
    Residuals(invert::ResidualsArgs),
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::VerifyAlgebra(a) => algebra::verify(a),
        Command::ReduceWord(a) => algebra::reduce(a),
        Command::Manufacture(a) => grid::manufacture(a),
        Command::Currents(a) => grid::currents(a),
        Command::Invert(a) => invert::invert(a),
        Command::Residuals(a) => invert::residuals(a),
    }
}

fn main() {
    let code = match run(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {}", err.message);
            err.code
        }
    };
    std::process::exit(code);
}
