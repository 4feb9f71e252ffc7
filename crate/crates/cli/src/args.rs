use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "lgcalab", version, about = "Lattice-gas, cellular automaton, rule-space PCA and colony-chain experiments")]
pub struct Cli {
    /// Seed for every random stream of the run.
    #[arg(long, global = true, env = "LGCALAB_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Directory for output files; relative output paths resolve against it.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,

    /// Worker threads (0 = one per core). Outputs do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Lattice-gas automata.
    #[command(subcommand)]
    Lgca(LgcaCommand),
    /// Elementary cellular automata.
    #[command(subcommand)]
    Eca(EcaCommand),
    /// Principal component analysis.
    #[command(subcommand)]
    Pca(PcaCommand),
    /// WSCCS ant colony chain.
    #[command(subcommand)]
    Wsccs(WsccsCommand),
}

#[derive(Debug, Subcommand)]
pub enum LgcaCommand {
    /// Run HPP or FHP from a random initial state.
    Run(LgcaRun),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Hpp,
    Fhp,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LgcaRun {
    #[arg(long, value_enum)]
    pub model: Model,
    #[arg(long, default_value_t = 128)]
    pub width: usize,
    #[arg(long, default_value_t = 128)]
    pub height: usize,
    #[arg(long, default_value_t = 1000)]
    pub steps: u64,
    /// Mean particles per site; each (site, direction) is occupied with
    /// probability density / z.
    #[arg(long, default_value_t = 3.0)]
    pub density: f64,
    /// Write a PGM snapshot every K steps (including step 0).
    #[arg(long, value_name = "K")]
    pub snapshot_every: Option<u64>,
    /// Also write the final state as a CSV of site bitmasks.
    #[arg(long)]
    pub bitmask_csv: bool,
    /// Block edge (sites) for the macroscopic field export.
    #[arg(long, default_value_t = 8)]
    pub block: usize,
    /// Number of final states averaged for the macroscopic field export.
    #[arg(long, default_value_t = 1)]
    pub window: u64,
    /// Run the shear-wave decay probe instead of a plain run (FHP only).
    #[arg(long)]
    pub measure_viscosity: bool,
    /// Shear-wave amplitude in units of the particle speed.
    #[arg(long, default_value_t = 0.05)]
    pub u0: f64,
}

#[derive(Debug, Subcommand)]
pub enum EcaCommand {
    /// Evolve one rule and write the spacetime diagram as PBM.
    Run(EcaRun),
    /// Write the pattern-response table of all 256 rules.
    Table(EcaTable),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Init {
    Single,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryArg {
    Zero,
    Periodic,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EcaRun {
    #[arg(long)]
    pub rule: u8,
    #[arg(long, default_value_t = 64)]
    pub width: usize,
    #[arg(long, default_value_t = 32)]
    pub steps: usize,
    #[arg(long, value_enum, default_value_t = Init::Single)]
    pub init: Init,
    #[arg(long, value_enum, default_value_t = BoundaryArg::Zero)]
    pub boundary: BoundaryArg,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EcaTable {
    /// Pattern length.
    #[arg(long)]
    pub l: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum PcaCommand {
    /// Correlation spectrum of the ECA rule space.
    Rulespace(PcaRulespace),
    /// Eigendecomposition of a symmetric matrix read from CSV.
    Eig(PcaEig),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PcaRulespace {
    /// Pattern length.
    #[arg(long)]
    pub l: usize,
    #[arg(long, default_value = "spectrum.csv")]
    pub out_spectrum: PathBuf,
    /// Leading eigenvectors in the rule frame, one column per component.
    #[arg(long)]
    pub out_loadings: Option<PathBuf>,
    /// Components written to the loadings file.
    #[arg(long, default_value_t = 7)]
    pub components: usize,
    /// Remove the two constant rules instead of keeping zero rows.
    #[arg(long)]
    pub drop_constant: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PcaEig {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum WsccsCommand {
    /// Build, analyse and sample the colony chain.
    Colony(WsccsColony),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct WsccsColony {
    /// Colony size.
    #[arg(long)]
    pub n: usize,
    /// Probability that an active ant turns passive in one tick, as a
    /// decimal in (0, 1).
    #[arg(long)]
    pub p: String,
    #[arg(long, default_value_t = 50)]
    pub steps: usize,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    /// Initial number of active ants (default: all).
    #[arg(long)]
    pub start: Option<usize>,
    /// Compare the binomial chain against exact brute-force composition.
    #[arg(long)]
    pub exact_check: bool,
}
