//! The `csi` command line: generate, preprocess, fit, compress, decompress,
//! classify, sweep and report.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or format error, 3 training
//! failure. Outputs are written to a temporary sibling and renamed into place,
//! so a failing command never leaves a partial file behind.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::container::{load_model, save_model, Archive, Model, ARCHIVE_MAGIC};
use crate::dataset::{
    filter_subcarriers, informative_mask, read_binary, read_csv, write_binary, write_csv, CsiDataset, FileFormat,
    Normalizer, MAGIC,
};
use crate::error::Error;
use crate::eval::report::{render_summary, CSV_NAME};
use crate::eval::{
    emit_report, read_sweep_csv, summarize, sweep, ClassifierKind, Experiment, ExperimentConfig, SweepGrid, Task,
    TrainedClassifier, TrainingMode,
};
use crate::rng::derive_seed;
use crate::scheme::{FittedScheme, SchemeConfig, VaeSettings, Variant};
use crate::synth::{gen_activity, gen_presence, SynthConfig};

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_TRAINING: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "csi", version, about = "Lossy Wi-Fi CSI compression and sensing trade-off toolkit")]
pub struct Cli {
    /// Seed for every random choice (decimal or 0x-prefixed hex).
    #[arg(long, global = true, env = "CSI_SEED", value_parser = parse_seed, default_value = "0xC51")]
    pub seed: u64,
    /// Log progress to standard error.
    #[arg(short, long, global = true)]
    pub verbose: bool,
    /// Output file (or directory for `sweep`).
    #[arg(short = 'o', long = "out", global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for sweeps (all cores by default).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset (`.csv` output selects CSV, anything else binary).
    Gen {
        #[arg(long)]
        task: Task,
        /// Activity classes to generate (1..=5).
        #[arg(long, default_value_t = 5)]
        classes: usize,
        /// Recording length in seconds (per class for activity data).
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Extract amplitudes, drop guard subcarriers and convert between formats.
    Preprocess {
        input: PathBuf,
        /// Comma-separated subcarrier indices or ranges to keep, e.g. `1-28,36-63`.
        #[arg(long, conflicts_with = "no_filter")]
        keep: Option<String>,
        /// Keep every subcarrier.
        #[arg(long)]
        no_filter: bool,
    },
    /// Fit a compression scheme (written as a frame-less CSIZ model pack) or a classifier (CSIM).
    Fit {
        input: PathBuf,
        #[command(flatten)]
        scheme: SchemeArgs,
        #[arg(long, conflicts_with = "scheme")]
        classifier: Option<ClassifierKind>,
        #[arg(long, default_value = "presence")]
        task: Task,
    },
    /// Compress a dataset into a self-contained CSIZ container.
    Compress {
        input: PathBuf,
        #[command(flatten)]
        scheme: SchemeArgs,
        /// Reuse the models of an existing container instead of fitting new ones.
        #[arg(long, conflicts_with_all = ["scheme", "n_pca", "bits"])]
        models: Option<PathBuf>,
        /// Selects the VAE size for VAE schemes.
        #[arg(long, default_value = "presence")]
        task: Task,
    },
    /// Rebuild a dataset from a CSIZ container.
    Decompress { input: PathBuf },
    /// Score a classifier on the test windows of a dataset (or container).
    Classify {
        input: PathBuf,
        #[arg(long)]
        task: Task,
        #[arg(long, default_value = "threshold")]
        classifier: ClassifierKind,
        /// Pre-trained CSIM classifier; trained on the training windows otherwise.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Run a rate / F1-loss sweep and write sweep.csv and sweep.meta.json.
    Sweep {
        input: PathBuf,
        #[arg(long)]
        task: Task,
        #[arg(long, default_value = "threshold")]
        classifier: ClassifierKind,
        /// `default` or `custom` (then --variants, --bits-list, --n-pca-list apply).
        #[arg(long, default_value = "default")]
        grid: String,
        #[arg(long, value_delimiter = ',')]
        variants: Option<Vec<Variant>>,
        #[arg(long = "bits-list", value_delimiter = ',')]
        bits: Option<Vec<u8>>,
        #[arg(long = "n-pca-list", value_delimiter = ',')]
        n_pca: Option<Vec<usize>>,
        #[arg(long, default_value = "compressed")]
        mode: TrainingMode,
    },
    /// Summarise a sweep.csv (or a directory holding one).
    Report {
        input: PathBuf,
        /// Loss budget, in percentage points, for the cheapest-rate column.
        #[arg(long, default_value_t = 5.0)]
        max_loss: f64,
    },
}

#[derive(Debug, Args)]
pub struct SchemeArgs {
    #[arg(long)]
    pub scheme: Option<Variant>,
    #[arg(long)]
    pub n_pca: Option<usize>,
    #[arg(long)]
    pub bits: Option<u8>,
}

impl SchemeArgs {
    fn config(&self) -> Result<Option<SchemeConfig>, CliError> {
        match (self.scheme, self.bits) {
            (None, None) if self.n_pca.is_none() => Ok(None),
            (Some(v), Some(b)) => Ok(Some(SchemeConfig::new(v, self.n_pca, b).map_err(CliError::usage)?)),
            _ => Err(CliError::usage("--scheme and --bits go together")),
        }
    }
}

fn parse_seed(s: &str) -> Result<u64, String> {
    let s = s.trim();
    match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    }
    .map_err(|e| format!("bad seed '{s}': {e}"))
}

/// A message and the exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(msg: impl ToString) -> Self {
        CliError { code: EXIT_USAGE, message: msg.to_string() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) => EXIT_USAGE,
            Error::Training { .. } => EXIT_TRAINING,
            _ => EXIT_DATA,
        };
        CliError { code, message: e.to_string() }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `args` (program name first), runs the command and returns the exit
/// code. Errors are reported on standard error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    let level = if cli.verbose { log::LevelFilter::Info } else { log::LevelFilter::Warn };
    let _ = env_logger::Builder::new().filter_level(level).try_init();
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

fn execute(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Gen { task, classes, duration } => cmd_gen(cli, *task, *classes, *duration),
        Command::Preprocess { input, keep, no_filter } => cmd_preprocess(cli, input, keep.as_deref(), *no_filter),
        Command::Fit { input, scheme, classifier, task } => cmd_fit(cli, input, scheme, *classifier, *task),
        Command::Compress { input, scheme, models, task } => cmd_compress(cli, input, scheme, models.as_deref(), *task),
        Command::Decompress { input } => cmd_decompress(cli, input),
        Command::Classify { input, task, classifier, model } => cmd_classify(cli, input, *task, *classifier, model.as_deref()),
        Command::Sweep { input, task, classifier, grid, variants, bits, n_pca, mode } => {
            let grid = build_grid(*classifier, grid, variants, bits, n_pca)?;
            cmd_sweep(cli, input, *task, *classifier, &grid, *mode)
        }
        Command::Report { input, max_loss } => cmd_report(cli, input, *max_loss),
    }
}

fn required_out(cli: &Cli) -> CliResult<&Path> {
    cli.out.as_deref().ok_or_else(|| CliError::usage("this command needs -o/--out"))
}

/// Writes through a temporary sibling so readers never see a partial file.
fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    let result = fs::write(&tmp, bytes).and_then(|_| fs::rename(&tmp, path));
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(|e| Error::Io(e).into())
}

fn dataset_bytes(ds: &CsiDataset, path: &Path) -> CliResult<Vec<u8>> {
    let mut out = Vec::new();
    match FileFormat::from_path(path) {
        FileFormat::Csv => write_csv(ds, &mut out)?,
        FileFormat::Binary => write_binary(ds, &mut out)?,
    }
    Ok(out)
}

/// Loads a CSIF, CSV or CSIZ file, recognised by its leading bytes.
pub fn load_input(path: &Path) -> crate::Result<CsiDataset> {
    let bytes = fs::read(path)?;
    if bytes.starts_with(MAGIC) {
        read_binary(&mut bytes.as_slice())
    } else if bytes.starts_with(ARCHIVE_MAGIC) {
        Archive::from_bytes(&bytes)?.to_dataset()
    } else if bytes.starts_with(b"#") {
        read_csv(&mut BufReader::new(bytes.as_slice()))
    } else {
        Err(Error::format(format!("{}: not a CSIF, CSV or CSIZ file", path.display())))
    }
}

/// Amplitudes of the informative subcarriers.
fn informative(ds: &CsiDataset) -> crate::Result<CsiDataset> {
    Ok(filter_subcarriers(ds, &informative_mask(ds))?.into_amplitude())
}

fn cmd_gen(cli: &Cli, task: Task, classes: usize, duration: Option<f64>) -> CliResult<()> {
    let out = required_out(cli)?;
    let mut cfg = match task {
        Task::Presence => SynthConfig::presence(cli.seed),
        Task::Activity => SynthConfig::activity(cli.seed),
    };
    if let Some(d) = duration {
        cfg.duration_s = d;
    }
    cfg.validate()?;
    let ds = match task {
        Task::Presence => gen_presence(&cfg)?,
        Task::Activity => gen_activity(&cfg, classes)?,
    };
    write_atomic(out, &dataset_bytes(&ds, out)?)?;
    println!("{} frames of {} subcarriers written to {}", ds.len(), ds.width(), out.display());
    Ok(())
}

fn parse_keep(spec: &str, width: usize) -> CliResult<Vec<bool>> {
    let mut mask = vec![false; width];
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (a, b) = match part.split_once('-') {
            Some((a, b)) => (a.trim(), b.trim()),
            None => (part, part),
        };
        let parse = |s: &str| s.parse::<usize>().map_err(|_| CliError::usage(format!("bad subcarrier index '{s}'")));
        let (a, b) = (parse(a)?, parse(b)?);
        if a > b || b >= width {
            return Err(CliError::usage(format!("subcarrier range {part} outside 0..{width}")));
        }
        mask[a..=b].iter_mut().for_each(|m| *m = true);
    }
    Ok(mask)
}

fn cmd_preprocess(cli: &Cli, input: &Path, keep: Option<&str>, no_filter: bool) -> CliResult<()> {
    let out = required_out(cli)?;
    let ds = load_input(input)?;
    let mask = match (keep, no_filter) {
        (Some(spec), _) => parse_keep(spec, ds.width())?,
        (None, true) => vec![true; ds.width()],
        (None, false) => informative_mask(&ds),
    };
    let ds = filter_subcarriers(&ds, &mask)?.into_amplitude();
    write_atomic(out, &dataset_bytes(&ds, out)?)?;
    println!("{} frames of {} subcarriers written to {}", ds.len(), ds.width(), out.display());
    Ok(())
}

fn vae_settings(task: Task) -> VaeSettings {
    match task {
        Task::Presence => VaeSettings::presence(),
        Task::Activity => VaeSettings::activity(),
    }
}

/// Fits normaliser and scheme models on every frame of `ds`.
pub fn fit_model_pack(ds: &CsiDataset, config: SchemeConfig, task: Task, seed: u64) -> crate::Result<Archive> {
    let amps = ds.amplitudes();
    let normalizer = Normalizer::fit(amps.view())?;
    let train = normalizer.apply(amps.view())?;
    let vae = if config.variant.uses_vae() { Some(vae_settings(task).fit(train.view(), derive_seed(seed, 0x7AE))?) } else { None };
    let scheme = FittedScheme::fit(config, train.view(), derive_seed(seed, 1), vae.as_ref())?;
    Archive::model_pack(scheme, normalizer)
}

fn cmd_fit(cli: &Cli, input: &Path, scheme: &SchemeArgs, classifier: Option<ClassifierKind>, task: Task) -> CliResult<()> {
    let out = required_out(cli)?;
    let config = scheme.config()?;
    if config.is_none() == classifier.is_none() {
        return Err(CliError::usage("give exactly one of --scheme/--bits or --classifier"));
    }
    if config.is_some_and(|c| c.variant == Variant::Uncompressed) {
        return Err(CliError::usage("the uncompressed scheme has no models"));
    }
    let ds = load_input(input)?;
    if let Some(config) = config {
        let pack = fit_model_pack(&informative(&ds)?, config, task, cli.seed)?;
        write_atomic(out, &pack.to_bytes()?)?;
        println!("{config}: {} bits/frame, model pack written to {}", pack.rate().bits_per_frame, out.display());
    } else if let Some(kind) = classifier {
        let exp = Experiment::prepare(&ds, ExperimentConfig::for_task(task, kind, cli.seed))?;
        let model = match exp.reference_classifier()? {
            TrainedClassifier::Threshold(t) => {
                println!("threshold {:.6} (training F1 {:.4})", t.threshold, t.training_f1);
                Model::Threshold(t)
            }
            TrainedClassifier::Mlp(m) => Model::Mlp(m),
        };
        let mut tmp = out.as_os_str().to_owned();
        tmp.push(".partial");
        let tmp = PathBuf::from(tmp);
        save_model(&model, &tmp)?;
        fs::rename(&tmp, out).map_err(Error::Io)?;
        println!("{kind} classifier written to {}", out.display());
    }
    Ok(())
}

fn describe(archive: &Archive) -> String {
    let rate = archive.rate();
    let (a, b) = rate.ratio_fraction();
    let frames = archive.frame_count() as u64;
    let mut s = format!(
        "{}: {} bits/frame, compression ratio {a}:{b} ({:.3}:1)",
        archive.scheme.config,
        rate.bits_per_frame,
        rate.compression_ratio()
    );
    if frames > 0 {
        let _ = write!(
            s,
            ", {frames} frames, {:.3} bits/frame including {} model bits",
            rate.amortized_bits_per_frame(archive.model_bits(), frames),
            archive.model_bits()
        );
    }
    s
}

fn cmd_compress(cli: &Cli, input: &Path, scheme: &SchemeArgs, models: Option<&Path>, task: Task) -> CliResult<()> {
    let out = required_out(cli)?;
    let config = scheme.config()?;
    if models.is_none() && config.is_none() {
        return Err(CliError::usage("give --scheme and --bits, or --models"));
    }
    if config.is_some_and(|c| c.variant == Variant::Uncompressed) {
        return Err(CliError::usage("choose a compressed scheme"));
    }
    let ds = informative(&load_input(input)?)?;
    let pack = match models {
        Some(path) => Archive::load(path)?,
        None => fit_model_pack(&ds, config.expect("checked above"), task, cli.seed)?,
    };
    let archive = Archive::compress(&ds, pack.scheme, pack.normalizer)?;
    write_atomic(out, &archive.to_bytes()?)?;
    println!("{}", describe(&archive));
    Ok(())
}

fn cmd_decompress(cli: &Cli, input: &Path) -> CliResult<()> {
    let out = required_out(cli)?;
    let archive = Archive::load(input)?;
    let ds = archive.to_dataset()?;
    write_atomic(out, &dataset_bytes(&ds, out)?)?;
    println!("{}", describe(&archive));
    Ok(())
}

fn cmd_classify(cli: &Cli, input: &Path, task: Task, classifier: ClassifierKind, model: Option<&Path>) -> CliResult<()> {
    let loaded = match model {
        None => None,
        Some(path) => Some(match load_model(path)? {
            Model::Threshold(t) => TrainedClassifier::Threshold(t),
            Model::Mlp(m) => TrainedClassifier::Mlp(m),
            m => return Err(Error::format(format!("{} holds a {}, not a classifier", path.display(), m.kind_name())).into()),
        }),
    };
    let kind = loaded.as_ref().map_or(classifier, TrainedClassifier::kind);
    let ds = load_input(input)?;
    let exp = Experiment::prepare(&ds, ExperimentConfig::for_task(task, kind, cli.seed))?;
    let clf = match loaded {
        Some(c) => c,
        None => exp.reference_classifier()?,
    };
    let (predicted, confusion, f1) = exp.score(&clf, exp.amplitudes())?;
    if let Some(out) = &cli.out {
        let mut csv = String::from("window_start,label,predicted\n");
        for (w, p) in exp.split.test.iter().zip(&predicted) {
            let _ = writeln!(csv, "{},{},{p}", w.start, w.label);
        }
        write_atomic(out, csv.as_bytes())?;
    }
    println!("{kind} on {} test windows: F1 = {f1:.6}", predicted.len());
    for c in 0..confusion.classes() {
        let row: Vec<String> = (0..confusion.classes()).map(|p| confusion.get(c, p).to_string()).collect();
        println!("  true {c}: {}", row.join(" "));
    }
    Ok(())
}

fn build_grid(
    classifier: ClassifierKind,
    grid: &str,
    variants: &Option<Vec<Variant>>,
    bits: &Option<Vec<u8>>,
    n_pca: &Option<Vec<usize>>,
) -> CliResult<SweepGrid> {
    let default = SweepGrid::default_for(classifier);
    let grid = match grid {
        "default" if variants.is_none() && bits.is_none() && n_pca.is_none() => default,
        "default" => return Err(CliError::usage("--variants/--bits-list/--n-pca-list need --grid custom")),
        "custom" => SweepGrid {
            variants: variants.as_ref().map_or(default.variants, |v| v.iter().map(|v| v.name().to_string()).collect()),
            bits: bits.clone().unwrap_or(default.bits),
            n_pca: n_pca.clone().unwrap_or(default.n_pca),
        },
        other => return Err(CliError::usage(format!("unknown grid '{other}' (default or custom)"))),
    };
    grid.cells().map_err(CliError::from)?;
    Ok(grid)
}

fn cmd_sweep(cli: &Cli, input: &Path, task: Task, classifier: ClassifierKind, grid: &SweepGrid, mode: TrainingMode) -> CliResult<()> {
    let config = ExperimentConfig { mode, ..ExperimentConfig::for_task(task, classifier, cli.seed) };
    if classifier == ClassifierKind::Threshold && task != Task::Presence {
        return Err(CliError::usage("the threshold classifier only supports presence detection"));
    }
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let ds = load_input(input)?;
    let result = sweep(&ds, grid, config, cli.jobs)?;
    let (csv, meta) = emit_report(&result, &dir)?;
    let failed = result.cells.iter().filter(|c| c.outcome.is_err()).count();
    println!(
        "baseline F1 {:.6}; {} cells ({failed} failed) written to {} and {}",
        result.baseline_f1,
        result.cells.len(),
        csv.display(),
        meta.display()
    );
    Ok(())
}

fn cmd_report(cli: &Cli, input: &Path, max_loss: f64) -> CliResult<()> {
    let path = if input.is_dir() { input.join(CSV_NAME) } else { input.to_path_buf() };
    let file = fs::File::open(&path).map_err(Error::Io)?;
    let rows = read_sweep_csv(BufReader::new(file))?;
    let text = render_summary(&summarize(&rows, max_loss), max_loss);
    if let Some(out) = &cli.out {
        write_atomic(out, text.as_bytes())?;
    }
    print!("{text}");
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::DEFAULT_SEED;

    #[test]
    fn seeds_parse_in_decimal_and_hex() {
        assert_eq!(parse_seed("0xC51").unwrap(), DEFAULT_SEED);
        assert_eq!(parse_seed("7").unwrap(), 7);
        assert!(parse_seed("x").is_err());
    }

    #[test]
    fn keep_ranges() {
        let m = parse_keep("1-2,4", 6).unwrap();
        assert_eq!(m, vec![false, true, true, false, true, false]);
        assert!(parse_keep("3-9", 6).is_err());
    }

    #[test]
    fn error_codes() {
        assert_eq!(CliError::from(Error::format("x")).code, EXIT_DATA);
        assert_eq!(CliError::from(Error::config("x")).code, EXIT_USAGE);
        assert_eq!(CliError::from(Error::Training { epoch: 1, reason: "nan".into() }).code, EXIT_TRAINING);
    }
}
