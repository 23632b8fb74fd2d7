//! Argument parsing, configuration resolution and exit codes.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use snoregan::audio::{CodebookMethod, EventParams};
use snoregan::experiments::{Augmentation, FeatureSystem, RunConfig, SyntheticCorpusSpec, ToySpec};
use snoregan::gan::{GanMode, ScganConfig};

mod commands;

/// Default output root when `--out` is absent.
pub const OUT_ENV: &str = "SNOREGAN_OUT";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "snoregan", version, about = "scGAN data augmentation for imbalanced snore sound classification")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Common {
    /// JSON configuration file; flags override its values
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every random stream of the command
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for runs and ensemble members
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    /// Output directory [default: $SNOREGAN_OUT/<command>, else ./snoregan-out/<command>]
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic four-class corpus (WAV files and manifest.csv)
    GenCorpus(GenCorpusArgs),
    /// Detect snore events in every manifest clip
    Segment(ManifestArgs),
    /// Extract one feature representation for every partition
    Features(FeaturesArgs),
    /// Learn a BoAW codebook from training frames
    Codebook(CodebookArgs),
    /// Train one scGAN (or an ensemble) on a training feature file
    TrainGan(TrainGanArgs),
    /// Sample a pool from trained generators and judge it
    Synth(SynthArgs),
    /// Augment a training feature file
    Augment(AugmentArgs),
    /// Train a classifier on a feature file
    TrainClf(TrainClfArgs),
    /// Run the full evaluation protocol
    Eval(EvalArgs),
    /// Evaluate over increasing numbers of generated samples
    Sweep(SweepArgs),
    /// Compare dynamic and fixed alternation on the 2-D toy
    CompareAlternation(AlternationArgs),
    /// Tables and plots from saved reports or feature files
    Report(ReportArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::GenCorpus(_) => "gen-corpus",
            Command::Segment(_) => "segment",
            Command::Features(_) => "features",
            Command::Codebook(_) => "codebook",
            Command::TrainGan(_) => "train-gan",
            Command::Synth(_) => "synth",
            Command::Augment(_) => "augment",
            Command::TrainClf(_) => "train-clf",
            Command::Eval(_) => "eval",
            Command::Sweep(_) => "sweep",
            Command::CompareAlternation(_) => "compare-alternation",
            Command::Report(_) => "report",
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct GenCorpusArgs {
    /// Same counts for every class: TRAIN,DEVEL,TEST
    #[arg(long)]
    pub per_class: Option<String>,
}

#[derive(Args, Debug, Serialize)]
pub struct ManifestArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct FeaturesArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long, value_parser = parse_system)]
    pub system: Option<FeatureSystem>,
}

#[derive(Args, Debug, Serialize)]
pub struct CodebookArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub size: Option<usize>,
    /// kmeans or random
    #[arg(long, value_parser = parse_method)]
    pub method: Option<CodebookMethod>,
}

#[derive(Args, Debug, Serialize)]
pub struct TrainGanArgs {
    /// Training feature file
    #[arg(long)]
    pub features: PathBuf,
    /// scgan, cgan or sgan
    #[arg(long, value_parser = parse_mode)]
    pub mode: Option<GanMode>,
    /// Train one member per configured hidden size
    #[arg(long)]
    pub ensemble: bool,
    #[arg(long)]
    pub iterations: Option<usize>,
}

#[derive(Args, Debug, Serialize)]
pub struct SynthArgs {
    /// Trained model files
    #[arg(long = "model", required = true)]
    pub models: Vec<PathBuf>,
    /// Samples per member and class
    #[arg(long, default_value_t = 100)]
    pub per_class: usize,
    /// Drop samples the discriminator does not recognize
    #[arg(long)]
    pub filter: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct AugmentArgs {
    /// Training feature file
    #[arg(long)]
    pub features: PathBuf,
    /// gan, smote or replicate
    #[arg(long)]
    pub method: String,
    #[arg(long = "model")]
    pub models: Vec<PathBuf>,
    /// Generated samples per class (gan)
    #[arg(long)]
    pub m: Option<usize>,
}

#[derive(Args, Debug, Serialize)]
pub struct TrainClfArgs {
    /// Training feature file
    #[arg(long)]
    pub features: PathBuf,
    /// SVM complexity
    #[arg(long)]
    pub c: Option<f64>,
}

#[derive(Args, Debug, Serialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long, value_parser = parse_system)]
    pub system: Option<FeatureSystem>,
    #[arg(long, value_parser = parse_augmentation)]
    pub augmentation: Option<Augmentation>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub runs: Option<usize>,
}

#[derive(Args, Debug, Serialize)]
pub struct SweepArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long, value_parser = parse_system)]
    pub system: Option<FeatureSystem>,
    #[arg(long, value_parser = parse_augmentation)]
    pub augmentation: Option<Augmentation>,
    /// Ascending list, e.g. 0,50,250
    #[arg(long, value_delimiter = ',')]
    pub m: Option<Vec<usize>>,
    #[arg(long)]
    pub runs: Option<usize>,
}

#[derive(Args, Debug, Serialize)]
pub struct AlternationArgs {
    #[arg(long)]
    pub pairs: Option<usize>,
    #[arg(long)]
    pub iterations: Option<usize>,
}

#[derive(Args, Debug, Serialize)]
pub struct ReportArgs {
    /// report.json or reports.json files written by eval or sweep
    #[arg(long = "input")]
    pub inputs: Vec<PathBuf>,
    /// Feature file to project onto two principal components
    #[arg(long)]
    pub features: Option<PathBuf>,
}

fn parse_json_enum<T: serde::de::DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.replace('-', "_"))).map_err(|e| e.to_string())
}

fn parse_system(s: &str) -> Result<FeatureSystem, String> {
    parse_json_enum(s)
}

fn parse_augmentation(s: &str) -> Result<Augmentation, String> {
    parse_json_enum(s)
}

fn parse_mode(s: &str) -> Result<GanMode, String> {
    parse_json_enum(s)
}

fn parse_method(s: &str) -> Result<CodebookMethod, String> {
    CodebookMethod::parse(s).ok_or_else(|| format!("unknown codebook method {s:?}"))
}

/// Settings for `compare-alternation`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlternationSettings {
    pub gan: ScganConfig,
    pub fixed_epochs: usize,
    pub pairs: usize,
}

impl Default for AlternationSettings {
    fn default() -> Self {
        Self {
            gan: ScganConfig {
                max_iterations: 100,
                ..ScganConfig::default()
            },
            fixed_epochs: 1,
            pairs: 10,
        }
    }
}

/// The JSON configuration document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CliConfig {
    pub manifest: Option<PathBuf>,
    /// Label order; defaults to first appearance in the manifest.
    pub class_names: Option<Vec<String>>,
    pub events: EventParams,
    pub corpus: SyntheticCorpusSpec,
    pub run: RunConfig,
    pub sweep_m: Vec<usize>,
    pub toy: ToySpec,
    pub alternation: AlternationSettings,
}

impl Default for CliConfig {
    fn default() -> Self {
        Self {
            manifest: None,
            class_names: None,
            events: EventParams::default(),
            corpus: SyntheticCorpusSpec::default(),
            run: RunConfig::default(),
            sweep_m: vec![0, 50, 100, 250],
            toy: ToySpec::default(),
            alternation: AlternationSettings::default(),
        }
    }
}

impl CliConfig {
    fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))
    }

    fn apply_seed(&mut self, seed: u64) {
        self.run.seed = seed;
        self.run.gan.seed = seed;
        self.corpus.seed = seed;
        self.toy.seed = seed;
        self.alternation.gan.seed = seed;
    }
}

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Runtime(snoregan::Error),
}

impl From<snoregan::Error> for CliError {
    fn from(e: snoregan::Error) -> Self {
        use snoregan::Error as E;
        let root = match &e {
            E::Run { source, .. } | E::Member { source, .. } => source.as_ref(),
            other => other,
        };
        match root {
            E::InvalidConfig(_) | E::Malformed { .. } | E::WrongDataKind { .. } | E::UnsupportedAudio(_) => {
                CliError::Validation(e.to_string())
            }
            _ => CliError::Runtime(e),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Resolved inputs shared by every subcommand.
pub struct Context {
    pub config: CliConfig,
    pub common: Common,
    pub out: PathBuf,
}

impl Context {
    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    /// Flag value, else the config value, else a validation error naming the field.
    pub fn manifest(&self, flag: &Option<PathBuf>) -> CliResult<PathBuf> {
        let path = flag
            .clone()
            .or_else(|| self.config.manifest.clone())
            .ok_or_else(|| CliError::Validation("missing field `manifest` (flag --manifest or config key)".into()))?;
        require_file(&path, "manifest")?;
        Ok(path)
    }

    fn echo(&self, command: &str, options: &impl Serialize) -> CliResult<()> {
        #[derive(Serialize)]
        struct Echo<'a, O: Serialize> {
            command: &'a str,
            common: &'a Common,
            options: &'a O,
            config: &'a CliConfig,
        }
        let echo = Echo {
            command,
            common: &self.common,
            options,
            config: &self.config,
        };
        fs::write(self.path("config.json"), serde_json::to_string_pretty(&echo)? + "\n")?;
        Ok(())
    }
}

pub fn require_file(path: &Path, field: &str) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Validation(format!("{field}: no such file {}", path.display())))
    }
}

fn out_dir(common: &Common, command: &str) -> PathBuf {
    match (&common.out, std::env::var_os(OUT_ENV)) {
        (Some(out), _) => out.clone(),
        (None, Some(root)) => PathBuf::from(root).join(command),
        (None, None) => PathBuf::from("snoregan-out").join(command),
    }
}

fn execute(cli: Cli) -> CliResult<()> {
    let mut config = CliConfig::load(cli.common.config.as_deref())?;
    if let Some(seed) = cli.common.seed {
        config.apply_seed(seed);
    }
    let name = cli.command.name();
    let out = out_dir(&cli.common, name);
    fs::create_dir_all(&out)?;
    let mut ctx = Context {
        config,
        common: cli.common,
        out,
    };
    match &cli.command {
        Command::GenCorpus(a) => commands::gen_corpus(&mut ctx, a)?,
        Command::Segment(a) => commands::segment(&mut ctx, a)?,
        Command::Features(a) => commands::features(&mut ctx, a)?,
        Command::Codebook(a) => commands::codebook(&mut ctx, a)?,
        Command::TrainGan(a) => commands::train_gan(&mut ctx, a)?,
        Command::Synth(a) => commands::synth(&mut ctx, a)?,
        Command::Augment(a) => commands::augment(&mut ctx, a)?,
        Command::TrainClf(a) => commands::train_clf(&mut ctx, a)?,
        Command::Eval(a) => commands::eval(&mut ctx, a)?,
        Command::Sweep(a) => commands::sweep(&mut ctx, a)?,
        Command::CompareAlternation(a) => commands::compare_alternation(&mut ctx, a)?,
        Command::Report(a) => commands::report(&mut ctx, a)?,
    }
    Ok(())
}

/// Parses `argv` (program name first), runs the subcommand and returns the exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    if cli.common.jobs == 0 {
        eprintln!("error: --jobs must be at least 1");
        return EXIT_VALIDATION;
    }
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.common.jobs).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_RUNTIME;
        }
    };
    match pool.install(|| execute(cli)) {
        Ok(()) => EXIT_OK,
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            EXIT_VALIDATION
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e}");
            EXIT_RUNTIME
        }
    }
}
