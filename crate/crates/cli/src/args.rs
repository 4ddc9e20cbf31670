use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use verjar_core::patterns::PatternId;

#[derive(Parser, Debug)]
#[command(name = "verjar", version, about = "Check whether two builds of a JVM package are equivalent")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Compare, normalize and decide a verdict for two packages.
    Verify {
        first: PathBuf,
        second: PathBuf,
        #[command(flatten)]
        policy: PolicyArgs,
        #[command(flatten)]
        output: OutputArgs,
        #[arg(long, value_enum, default_value_t = FailOn::NotVerified)]
        fail_on: FailOn,
        /// Also write a build specification document here.
        #[arg(long)]
        build_spec: Option<PathBuf>,
        /// Environment fact for the build specification, as KEY=VALUE.
        #[arg(long = "env", value_name = "KEY=VALUE")]
        env: Vec<String>,
        /// Build command to record in the build specification.
        #[arg(long = "build-command", value_name = "COMMAND")]
        build_command: Vec<String>,
    },
    /// List the differences between two packages with their patterns.
    Diff {
        first: PathBuf,
        second: PathBuf,
        #[command(flatten)]
        policy: PolicyArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Write the post-processed form of a package.
    Normalize {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        policy: PolicyArgs,
        /// Where to write the modification log (default: standard output).
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Run a build command twice and verify every output pair.
    DoubleBuild {
        /// Source tree the command runs in.
        #[arg(long, default_value = ".")]
        workdir: PathBuf,
        /// Outputs to compare, relative to the run directory.
        #[arg(long, default_value = "**/*.jar")]
        output_glob: String,
        /// Run both builds in `workdir` instead of fresh copies.
        #[arg(long)]
        in_place: bool,
        /// Run the two builds at the same time.
        #[arg(long, conflicts_with = "in_place")]
        parallel: bool,
        #[command(flatten)]
        policy: PolicyArgs,
        #[command(flatten)]
        output: OutputArgs,
        #[arg(long, value_enum, default_value_t = FailOn::NotVerified)]
        fail_on: FailOn,
        #[arg(required = true, last = true, value_name = "COMMAND")]
        command: Vec<String>,
    },
    /// Print the pattern registry.
    Patterns {
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Write labeled fixture pairs, or one varying package, to disk.
    Fixtures {
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Patterns to generate pairs for (default: all).
        #[arg(long = "pattern", value_name = "ID")]
        patterns: Vec<PatternId>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Pairs per pattern.
        #[arg(long, default_value_t = 1)]
        count: u64,
        /// Write the two-class example pair as foo1.jar and foo2.jar.
        #[arg(long, conflicts_with = "nondeterministic")]
        running_example: bool,
        /// Write `count` packages perturbed along `pattern` with fresh
        /// randomness on each run, as a stand-in build.
        #[arg(long)]
        nondeterministic: bool,
    },
}

#[derive(Args, Debug, Clone, Default)]
pub struct PolicyArgs {
    /// Policy file; flags below override it.
    #[arg(long)]
    pub policy: Option<PathBuf>,
    /// Entry time for repacked archives (ISO-8601 or epoch seconds).
    #[arg(long, value_name = "TIME")]
    pub pinned_time: Option<String>,
    #[arg(long, value_name = "ID")]
    pub enable: Vec<PatternId>,
    #[arg(long, value_name = "ID")]
    pub disable: Vec<PatternId>,
    /// Treat line-number table differences as explained.
    #[arg(long)]
    pub strip_line_numbers: bool,
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Text,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum FailOn {
    /// Fail only when the verdict is NOT_VERIFIED.
    NotVerified,
    /// Fail unless the inputs are bit-for-bit identical.
    Interpreted,
}
