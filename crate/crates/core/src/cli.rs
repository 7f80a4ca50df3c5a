//! The `diffeoflow` command-line tool.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on data or validation errors.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::baselines::{diffeo_gauss_sample_labels, triang_cfm_sample, triang_cfm_sample_raw, triang_cfm_train};
use crate::data::{
    read_dataset, read_dataset_raw, synth_generate, write_dataset, write_raw_dataset, LabeledDataset, RawDataset,
    SyntheticSpec,
};
use crate::flow::{fit_source, load_model, save_model, train, write_loss_csv, TrainConfig, TrainOutput};
use crate::geometry::{frechet_mean, phi, Manifold, ManifoldMatrix, DEFAULT_PROJECTION_EPS};
use crate::metrics::{
    cas_evaluate, constraint_report, default_alpha_grid, precision_recall_curves, CasConfig, CasReport,
    ConstraintReport, FidelityReport,
};
use crate::sampler::{sample_labels, IntegratorSpec, Scheme, DEFAULT_STEPS};
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "diffeoflow",
    version,
    about = "Flow matching for SPD and correlation matrices",
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a labeled wrapped-Gaussian dataset.
    Synth(SynthArgs),
    /// Train a conditional flow on a dataset.
    Train(TrainArgs),
    /// Draw samples from a trained model.
    Sample(SampleArgs),
    /// Fit and sample a generator in one go.
    Baseline(BaselineArgs),
    /// Compare generated data with real data and write a JSON report.
    Evaluate(EvaluateArgs),
    /// Summaries of a dataset.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_parser = parse_manifold, default_value = "corr")]
    manifold: Manifold,
    #[arg(long, default_value_t = 4)]
    dim: usize,
    #[arg(long, default_value_t = 2)]
    classes: usize,
    #[arg(long, default_value_t = 400)]
    per_class: usize,
    #[arg(long, default_value_t = 0.3)]
    sigma: f64,
    /// Distance between consecutive class means, in units of sigma.
    #[arg(long, default_value_t = 3.0)]
    separation: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Training flags; each overrides the matching config-file key.
#[derive(Debug, Args)]
struct TrainOverrides {
    /// JSON file with training hyperparameters.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    weight_decay: Option<f64>,
    /// Hidden layer widths, comma separated.
    #[arg(long, value_delimiter = ',')]
    hidden: Option<Vec<usize>>,
    #[arg(long)]
    seed: Option<u64>,
}

impl TrainOverrides {
    fn resolve(&self) -> Result<TrainConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                TrainConfig::from_json(&text)?
            }
            None => TrainConfig::default(),
        };
        if let Some(v) = self.epochs {
            cfg.epochs = v;
        }
        if let Some(v) = self.lr {
            cfg.lr = v;
        }
        if let Some(v) = self.batch_size {
            cfg.batch_size = v;
        }
        if let Some(v) = self.weight_decay {
            cfg.weight_decay = v;
        }
        if let Some(v) = &self.hidden {
            cfg.hidden_dims = v.clone();
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    overrides: TrainOverrides,
}

#[derive(Debug, Args)]
struct SamplingArgs {
    /// Class to sample; every class of the model when omitted.
    #[arg(long)]
    label: Option<i64>,
    /// Samples per class.
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = DEFAULT_STEPS)]
    steps: usize,
    #[arg(long, value_parser = parse_scheme, default_value = "rk4")]
    scheme: Scheme,
}

impl SamplingArgs {
    fn labels(&self, classes: &[i64]) -> Result<Vec<i64>> {
        let chosen: Vec<i64> = match self.label {
            Some(l) if !classes.contains(&l) => return Err(Error::MissingClass(l)),
            Some(l) => vec![l],
            None => classes.to_vec(),
        };
        Ok(chosen.iter().flat_map(|&l| std::iter::repeat_n(l, self.n)).collect())
    }

    fn integrator(&self) -> Result<IntegratorSpec> {
        IntegratorSpec::new(self.scheme, self.steps)
    }
}

#[derive(Debug, Args)]
struct SampleArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    sampling: SamplingArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Diffeocfm,
    Diffeogauss,
    Triangcfm,
}

#[derive(Debug, Args)]
struct BaselineArgs {
    #[arg(long, value_enum)]
    method: Method,
    /// Training data.
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Also save the trained model here (flow methods only).
    #[arg(long)]
    model_out: Option<PathBuf>,
    /// Eigenvalue floor of the TriangCFM projection.
    #[arg(long, default_value_t = DEFAULT_PROJECTION_EPS)]
    eps: f64,
    /// Write TriangCFM restores without projection (may be invalid matrices).
    #[arg(long)]
    no_projection: bool,
    #[command(flatten)]
    sampling: SamplingArgs,
    #[command(flatten)]
    overrides: TrainOverrides,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Held-out real data.
    #[arg(long)]
    real: PathBuf,
    #[arg(long)]
    generated: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Seed of the cross-validation folds.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[arg(long)]
    data: PathBuf,
    /// Write per-class Fréchet means as CSV rows: class id, then d·d entries row-major.
    #[arg(long, required = true)]
    frechet_means: bool,
    #[arg(long)]
    out: PathBuf,
}

fn parse_manifold(s: &str) -> std::result::Result<Manifold, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_scheme(s: &str) -> std::result::Result<Scheme, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Parses `argv` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_DATA
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Synth(a) => synth(a),
        Command::Train(a) => train_cmd(a),
        Command::Sample(a) => sample(a),
        Command::Baseline(a) => baseline(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Report(a) => report(a),
    }
}

fn synth(a: SynthArgs) -> Result<()> {
    let spec = SyntheticSpec::separated(a.manifold, a.dim, a.classes, a.per_class, a.sigma, a.separation, a.seed);
    let ds = synth_generate(&spec)?;
    write_dataset(&ds, &a.out)?;
    eprintln!(
        "wrote {} {} matrices of size {} to {}",
        ds.len(),
        ds.manifold,
        ds.dim,
        a.out.display()
    );
    Ok(())
}

fn save_trained(dir: &Path, out: &TrainOutput) -> Result<()> {
    save_model(dir, &out.model, &out.source)?;
    write_loss_csv(&dir.join("loss.csv"), &out.history)
}

fn train_cmd(a: TrainArgs) -> Result<()> {
    let cfg = a.overrides.resolve()?;
    let data = read_dataset(&a.data)?;
    let out = train(&data, &cfg)?;
    save_trained(&a.out, &out)?;
    if let (Some(first), Some(last)) = (out.history.first(), out.history.last()) {
        eprintln!("trained {} epochs: loss {first:.6} -> {last:.6}", out.history.len());
    }
    Ok(())
}

fn generated_ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("gen-{i:06}")).collect()
}

fn write_samples(
    dir: &Path,
    manifold: Manifold,
    dim: usize,
    matrices: Vec<ManifoldMatrix>,
    labels: Vec<i64>,
) -> Result<()> {
    let ids = generated_ids(labels.len());
    write_dataset(&LabeledDataset::new(manifold, dim, matrices, labels, ids)?, dir)
}

fn sample(a: SampleArgs) -> Result<()> {
    let (model, source) = load_model(&a.model)?;
    let labels = a.sampling.labels(&model.classes)?;
    let out = sample_labels(&model, &source, &labels, a.sampling.integrator()?, a.seed)?;
    write_samples(&a.out, model.manifold, model.dim_matrix, out, labels)
}

fn baseline(a: BaselineArgs) -> Result<()> {
    let cfg = a.overrides.resolve()?;
    let data = read_dataset(&a.data)?;
    let spec = a.sampling.integrator()?;
    let seed = cfg.seed;
    match a.method {
        Method::Diffeogauss => {
            let embeddings = data.matrices.iter().map(phi).collect::<Result<Vec<_>>>()?;
            let source = fit_source(&embeddings, &data.labels, cfg.source_ridge, cfg.covariance_mode)?;
            let labels = a.sampling.labels(&source.labels())?;
            let out = diffeo_gauss_sample_labels(&source, &labels, seed)?;
            write_samples(&a.out, data.manifold, data.dim, out, labels)
        }
        Method::Diffeocfm => {
            let trained = train(&data, &cfg)?;
            if let Some(dir) = &a.model_out {
                save_trained(dir, &trained)?;
            }
            let labels = a.sampling.labels(&trained.model.classes)?;
            let out = sample_labels(&trained.model, &trained.source, &labels, spec, seed)?;
            write_samples(&a.out, data.manifold, data.dim, out, labels)
        }
        Method::Triangcfm => {
            let trained = triang_cfm_train(&data, &cfg)?;
            if let Some(dir) = &a.model_out {
                save_trained(dir, &trained)?;
            }
            let labels = a.sampling.labels(&trained.model.classes)?;
            if a.no_projection {
                let raw = triang_cfm_sample_raw(&trained.model, &trained.source, &labels, spec, seed)?;
                let raw = RawDataset {
                    manifold: data.manifold,
                    dim: data.dim,
                    matrices: raw.into_iter().map(|m| m.into_vec()).collect(),
                    subject_ids: generated_ids(labels.len()),
                    labels,
                };
                write_raw_dataset(&raw, &a.out)
            } else {
                let out = triang_cfm_sample(&trained.model, &trained.source, &labels, spec, seed, a.eps)?;
                write_samples(&a.out, data.manifold, data.dim, out, labels)
            }
        }
    }
}

/// Contents of `report.json`.
#[derive(Debug, Serialize)]
pub struct EvaluationReport {
    pub manifold: Manifold,
    pub dim: usize,
    pub n_real: usize,
    pub n_generated: usize,
    /// Generated matrices that pass the manifold checks; metrics use only these.
    pub n_generated_valid: usize,
    pub constraints: ConstraintReport,
    /// Pooled over classes, on `φ`-embeddings. Absent when no generated matrix is valid.
    pub fidelity: Option<FidelityReport>,
    pub cas: Option<CasReport>,
}

/// Builds the evaluation report; `generated` may contain invalid matrices.
pub fn evaluate_datasets(real: &LabeledDataset, generated: &RawDataset, seed: u64) -> Result<EvaluationReport> {
    if real.manifold != generated.manifold || real.dim != generated.dim {
        return Err(Error::InvalidDataset(
            "real and generated data live on different spaces".into(),
        ));
    }
    let constraints = constraint_report(&generated.matrices, generated.dim, generated.manifold);
    let mut valid = Vec::new();
    let mut valid_labels = Vec::new();
    let mut valid_ids = Vec::new();
    for (i, m) in generated.matrices.iter().enumerate() {
        let one = RawDataset {
            manifold: generated.manifold,
            dim: generated.dim,
            matrices: vec![m.clone()],
            labels: vec![generated.labels[i]],
            subject_ids: vec![generated.subject_ids[i].clone()],
        };
        if let Ok(mut ds) = one.validate() {
            valid.push(ds.matrices.remove(0));
            valid_labels.push(generated.labels[i]);
            valid_ids.push(generated.subject_ids[i].clone());
        }
    }
    let n_valid = valid.len();
    let (fidelity, cas) = if n_valid == 0 {
        (None, None)
    } else {
        let gen = LabeledDataset::new(real.manifold, real.dim, valid, valid_labels, valid_ids)?;
        let emb = |ds: &LabeledDataset| -> Result<Vec<Vec<f64>>> {
            ds.matrices.iter().map(|m| phi(m).map(|z| z.into_values())).collect()
        };
        let fidelity = precision_recall_curves(&emb(real)?, &emb(&gen)?, &default_alpha_grid())?;
        let cas = cas_evaluate(
            &gen,
            real,
            &CasConfig {
                seed,
                ..CasConfig::default()
            },
        )?;
        (Some(fidelity), Some(cas))
    };
    Ok(EvaluationReport {
        manifold: real.manifold,
        dim: real.dim,
        n_real: real.len(),
        n_generated: generated.matrices.len(),
        n_generated_valid: n_valid,
        constraints,
        fidelity,
        cas,
    })
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let real = read_dataset(&a.real)?;
    let generated = read_dataset_raw(&a.generated)?;
    let report = evaluate_datasets(&real, &generated, a.seed)?;
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    fs::write(&a.out, json + "\n").map_err(|e| Error::io(&a.out, e))
}

/// CSV rows `class,m00,m01,…` of the per-class Fréchet means.
pub fn frechet_means_csv(data: &LabeledDataset) -> Result<String> {
    let mut out = String::new();
    for label in data.classes() {
        let mean = frechet_mean(&data.class_matrices(label), data.manifold)?;
        write!(out, "{label}").expect("writing to a String");
        for v in mean.as_sym().as_slice() {
            write!(out, ",{v}").expect("writing to a String");
        }
        out.push('\n');
    }
    Ok(out)
}

fn report(a: ReportArgs) -> Result<()> {
    let data = read_dataset(&a.data)?;
    debug_assert!(a.frechet_means);
    fs::write(&a.out, frechet_means_csv(&data)?).map_err(|e| Error::io(&a.out, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(["diffeoflow"]), EXIT_USAGE);
        assert_eq!(run(["diffeoflow", "frobnicate"]), EXIT_USAGE);
        assert_eq!(run(["diffeoflow", "synth"]), EXIT_USAGE);
        assert_eq!(
            run(["diffeoflow", "synth", "--out", "x", "--manifold", "hyperbolic"]),
            EXIT_USAGE
        );
        assert_eq!(run(["diffeoflow", "--help"]), EXIT_OK);
    }

    #[test]
    fn missing_data_exits_two() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("nope");
        let out = dir.path().join("m");
        let code = run([
            "diffeoflow",
            "train",
            "--data",
            missing.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_DATA);
    }

    #[test]
    fn overrides_beat_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        fs::write(&path, r#"{"epochs": 7, "lr": 0.01}"#).unwrap();
        let o = TrainOverrides {
            config: Some(path),
            epochs: Some(3),
            lr: None,
            batch_size: None,
            weight_decay: None,
            hidden: Some(vec![8, 8]),
            seed: None,
        };
        let cfg = o.resolve().unwrap();
        assert_eq!((cfg.epochs, cfg.lr, cfg.hidden_dims), (3, 0.01, vec![8, 8]));
    }
}
