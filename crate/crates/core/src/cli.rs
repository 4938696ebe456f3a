//! Command-line surface.
//!
//! Every command writes either `key: value` lines or a CSV table to stdout.
//! Exit codes: 0 on success, 1 when an input fails validation, 2 when a
//! verification check (`radon-verify`, `lipschitz`) fails.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::io::{load_config, load_dataset, load_model, save_model, save_standard};
use crate::linalg::{numerical_rank, Matrix, DEFAULT_RANK_TOL};
use crate::network::BottleneckLayer;
use crate::norms::{
    classic_path_norm, deep_compositional_norm, empirical_lipschitz, layer_boundary_term,
    layer_path_sum, layer_skip_l1, layer_weight_decay, lipschitz_bound, mixed_path_lower_bound,
    product_of_paths, rbv2_norm_vector, regularizer_core, rtv2_shallow, sum_of_path,
    sum_of_squares, RegularizerKind,
};
use crate::radon::{extract_measure, kernel_g_phi, reconstruct, support_bounds};
use crate::rescale::balance_net;
use crate::trainer::{loss_value, sparsity_sweep, train, LossKind};

/// Overrides every default or configured seed unless `--seed` is given.
pub const SEED_ENV: &str = "RIDGENET_SEED";

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_VERIFY_FAILED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "ridgenet", version, about = "Deep ReLU networks with skips and linear bottlenecks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print every norm and regularizer of a model.
    Norms { model: PathBuf },
    /// Balance every neuron and write the result.
    Balance { input: PathBuf, output: PathBuf },
    /// Collapse a bias- and skip-free model to a plain matrix chain.
    Collapse { input: PathBuf, output: PathBuf },
    /// Evaluate a model on a dataset.
    Eval { model: PathBuf, data: PathBuf },
    /// Train a model on a dataset.
    Train {
        data: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Write the per-epoch objective trace as CSV.
        #[arg(long)]
        history: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check the kernel properties and the reconstruction identity.
    RadonVerify {
        model: PathBuf,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Compare the Lipschitz bound with an empirical estimate.
    Lipschitz {
        model: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 2.0)]
        radius: f64,
    },
    /// Train once per λ and print a sparsity table.
    Sweep {
        data: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        lambdas: Vec<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

enum Outcome {
    Ok,
    VerifyFailed,
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::InvalidArgument(format!("{SEED_ENV} must be an unsigned integer, got `{s}`"))),
        Err(_) => Ok(None),
    }
}

fn resolve_seed(flag: Option<u64>, fallback: u64) -> Result<u64> {
    Ok(match flag {
        Some(s) => s,
        None => env_seed()?.unwrap_or(fallback),
    })
}

fn join<T: ToString>(xs: &[T], sep: &str) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(sep)
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    match execute(&cli.command, out) {
        Ok(Outcome::Ok) => EXIT_OK,
        Ok(Outcome::VerifyFailed) => EXIT_VERIFY_FAILED,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_INVALID
        }
    }
}

fn io_err(e: std::io::Error) -> Error {
    Error::Io {
        path: "<stdout>".into(),
        source: e,
    }
}

fn execute(cmd: &Command, out: &mut dyn Write) -> Result<Outcome> {
    match cmd {
        Command::Norms { model } => norms_cmd(model, out),
        Command::Balance { input, output } => balance_cmd(input, output, out),
        Command::Collapse { input, output } => collapse_cmd(input, output, out),
        Command::Eval { model, data } => eval_cmd(model, data, out),
        Command::Train {
            data,
            config,
            out: model_out,
            history,
            seed,
        } => train_cmd(data, config, model_out, history.as_deref(), *seed, out),
        Command::RadonVerify {
            model,
            samples,
            seed,
            tol,
        } => radon_cmd(model, *samples, resolve_seed(*seed, 0)?, *tol, out),
        Command::Lipschitz {
            model,
            samples,
            seed,
            radius,
        } => lipschitz_cmd(model, *samples, resolve_seed(*seed, 0)?, *radius, out),
        Command::Sweep {
            data,
            config,
            lambdas,
            seed,
        } => sweep_cmd(data, config, lambdas, *seed, out),
    }
    .and_then(|o| out.flush().map(|_| o).map_err(io_err))
}

fn norms_cmd(path: &Path, out: &mut dyn Write) -> Result<Outcome> {
    let net = load_model(path)?;
    let mut lines: Vec<(String, String)> = vec![
        ("depth".into(), net.depth().to_string()),
        ("dims".into(), join(&net.dims(), ",")),
        ("widths".into(), join(&net.widths(), ",")),
    ];
    let mut num = |k: &str, v: f64| lines.push((k.to_string(), format!("{v:?}")));
    for (i, l) in net.layers().iter().enumerate() {
        let p = format!("layer{}", i + 1);
        num(&format!("{p}.path_sum"), layer_path_sum(l));
        num(&format!("{p}.weight_decay"), layer_weight_decay(l));
        num(&format!("{p}.boundary"), layer_boundary_term(l));
        num(&format!("{p}.skip_l1"), layer_skip_l1(l));
        num(&format!("{p}.rbv2"), rbv2_norm_vector(l));
        if let Ok(r) = rtv2_shallow(l) {
            num(&format!("{p}.rtv2"), r);
        }
    }
    num("sum_of_path", sum_of_path(&net));
    num("sum_of_squares", sum_of_squares(&net));
    num("product_of_paths", product_of_paths(&net));
    num("deep_compositional_norm", deep_compositional_norm(&net));
    num("lipschitz_bound", lipschitz_bound(&net));
    if net.is_bias_skip_free() {
        num("mixed_path_lower_bound", mixed_path_lower_bound(&net));
        if let Ok(c) = net.collapse_to_standard().and_then(|s| classic_path_norm(&s)) {
            num("classic_path_norm", c);
        }
    }
    for kind in RegularizerKind::ALL {
        num(&format!("regularizer.{kind}"), regularizer_core(&net, kind));
    }
    for (k, v) in lines {
        writeln!(out, "{k}: {v}").map_err(io_err)?;
    }
    Ok(Outcome::Ok)
}

fn balance_cmd(input: &Path, output: &Path, out: &mut dyn Write) -> Result<Outcome> {
    let net = load_model(input)?;
    let bal = balance_net(&net);
    save_model(&bal, output)?;
    writeln!(out, "sum_of_squares_before: {:?}", sum_of_squares(&net)).map_err(io_err)?;
    writeln!(out, "sum_of_squares_after: {:?}", sum_of_squares(&bal)).map_err(io_err)?;
    writeln!(out, "sum_of_path: {:?}", sum_of_path(&bal)).map_err(io_err)?;
    Ok(Outcome::Ok)
}

fn collapse_cmd(input: &Path, output: &Path, out: &mut dyn Write) -> Result<Outcome> {
    let net = load_model(input)?;
    let std = net.collapse_to_standard()?;
    save_standard(&std, output)?;
    for (i, a) in std.matrices().iter().enumerate() {
        writeln!(
            out,
            "A{i}: {}x{} rank {}",
            a.rows(),
            a.cols(),
            numerical_rank(a, DEFAULT_RANK_TOL)?
        )
        .map_err(io_err)?;
    }
    Ok(Outcome::Ok)
}

fn eval_cmd(model: &Path, data: &Path, out: &mut dyn Write) -> Result<Outcome> {
    let net = load_model(model)?;
    let data = load_dataset(data)?;
    let loss = loss_value(&net, &data, LossKind::Squared)?;
    let header: Vec<String> = (1..=net.output_dim()).map(|i| format!("f{i}")).collect();
    writeln!(out, "row,{}", header.join(",")).map_err(io_err)?;
    for (n, x) in data.inputs().iter().enumerate() {
        let y = net.forward(x)?;
        let cells: Vec<String> = y.iter().map(|v| format!("{v:?}")).collect();
        writeln!(out, "{},{}", n + 1, cells.join(",")).map_err(io_err)?;
    }
    writeln!(out, "loss: {loss:?}").map_err(io_err)?;
    Ok(Outcome::Ok)
}

fn train_cmd(
    data: &Path,
    config: &Path,
    model_out: &Path,
    history: Option<&Path>,
    seed: Option<u64>,
    out: &mut dyn Write,
) -> Result<Outcome> {
    let data = load_dataset(data)?;
    let mut cfg = load_config(config)?;
    cfg.seed = resolve_seed(seed, cfg.seed)?;
    let (net, report) = train(&data, &cfg)?;
    save_model(&net, model_out)?;
    if let Some(h) = history {
        let mut csv = String::from("epoch,objective\n");
        for (e, o) in report.objectives.iter().enumerate() {
            csv.push_str(&format!("{e},{o:?}\n"));
        }
        std::fs::write(h, csv).map_err(|source| Error::Io {
            path: h.display().to_string(),
            source,
        })?;
    }
    let lines = [
        ("epochs", cfg.epochs.to_string()),
        ("seed", cfg.seed.to_string()),
        ("initial_objective", format!("{:?}", report.initial_objective())),
        ("final_objective", format!("{:?}", report.final_objective())),
        ("final_data_loss", format!("{:?}", report.final_data_loss)),
        ("final_regularizer", format!("{:?}", report.final_regularizer)),
        ("active_neurons", join(&report.active_neurons, ",")),
        ("path_core", format!("{:?}", report.path_core)),
        ("weight_decay_core", format!("{:?}", report.weight_decay_core)),
    ];
    for (k, v) in lines {
        writeln!(out, "{k}: {v}").map_err(io_err)?;
    }
    Ok(Outcome::Ok)
}

/// Single-output slice `m` of a layer.
fn component(layer: &BottleneckLayer, m: usize) -> Result<BottleneckLayer> {
    BottleneckLayer::new(
        Matrix::from_vec(1, layer.width(), layer.v.row(m).to_vec())?,
        layer.w.clone(),
        layer.b.clone(),
        Matrix::from_vec(1, layer.in_dim(), layer.c.row(m).to_vec())?,
        vec![layer.c0[m]],
    )
}

#[derive(Default)]
struct Checks {
    reconstruction_max_err: f64,
    annihilation_failures: usize,
    evenness_max_err: f64,
    support_failures: usize,
    kernel_evals: usize,
}

fn radon_cmd(path: &Path, samples: usize, seed: u64, tol: f64, out: &mut dyn Write) -> Result<Outcome> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let net = load_model(path)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = Checks::default();
    for layer in net.layers() {
        let d = layer.in_dim();
        for m in 0..layer.out_dim() {
            let scalar = component(layer, m)?;
            let (measure, q) = extract_measure(&scalar)?;
            for _ in 0..samples {
                let x: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
                let f = scalar.forward(&x)?[0];
                let r = reconstruct(&measure, &q, &x)?;
                c.reconstruction_max_err = c.reconstruction_max_err.max((f - r).abs());
            }
            for atom in &measure.atoms {
                let w = &atom.direction;
                let x: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
                let b = atom.offset;
                let mut at_zero = vec![kernel_g_phi(&vec![0.0; d], w, b)?];
                for k in 0..d {
                    let mut e = vec![0.0; d];
                    e[k] = 1.0;
                    at_zero.push(kernel_g_phi(&e, w, b)?);
                }
                c.annihilation_failures += at_zero.iter().filter(|g| **g != 0.0).count();
                let neg: Vec<f64> = w.iter().map(|v| -v).collect();
                let even = (kernel_g_phi(&x, w, b)? - kernel_g_phi(&x, &neg, -b)?).abs();
                c.evenness_max_err = c.evenness_max_err.max(even);
                let (lo, hi) = support_bounds(&x, w)?;
                let scale = 1.0 + x.iter().map(|v| v.abs()).sum::<f64>();
                for j in 1..=10 {
                    for off in [hi + j as f64, lo - j as f64] {
                        let g = kernel_g_phi(&x, w, off)?;
                        if g.abs() > 1e-12 * scale * (1.0 + off.abs()) {
                            c.support_failures += 1;
                        }
                    }
                }
                c.kernel_evals += d + 23;
            }
        }
    }
    let pass = c.reconstruction_max_err < tol
        && c.annihilation_failures == 0
        && c.evenness_max_err <= tol.max(1e-12)
        && c.support_failures == 0;
    let lines = [
        ("reconstruction_max_abs_err", format!("{:?}", c.reconstruction_max_err)),
        ("annihilation_failures", c.annihilation_failures.to_string()),
        ("evenness_max_abs_err", format!("{:?}", c.evenness_max_err)),
        ("support_failures", c.support_failures.to_string()),
        ("kernel_evaluations", c.kernel_evals.to_string()),
        ("tolerance", format!("{tol:?}")),
        ("pass", pass.to_string()),
    ];
    for (k, v) in lines {
        writeln!(out, "{k}: {v}").map_err(io_err)?;
    }
    Ok(if pass { Outcome::Ok } else { Outcome::VerifyFailed })
}

fn lipschitz_cmd(path: &Path, samples: usize, seed: u64, radius: f64, out: &mut dyn Write) -> Result<Outcome> {
    let net = load_model(path)?;
    let bound = lipschitz_bound(&net);
    let empirical = empirical_lipschitz(&net, samples, seed, radius)?;
    let holds = empirical <= bound + 1e-9;
    writeln!(out, "bound: {bound:?}").map_err(io_err)?;
    writeln!(out, "empirical: {empirical:?}").map_err(io_err)?;
    writeln!(out, "holds: {holds}").map_err(io_err)?;
    Ok(if holds { Outcome::Ok } else { Outcome::VerifyFailed })
}

fn sweep_cmd(
    data: &Path,
    config: &Path,
    lambdas: &[f64],
    seed: Option<u64>,
    out: &mut dyn Write,
) -> Result<Outcome> {
    let data = load_dataset(data)?;
    let mut cfg = load_config(config)?;
    cfg.seed = resolve_seed(seed, cfg.seed)?;
    let rows = sparsity_sweep(&data, &cfg, lambdas)?;
    writeln!(out, "lambda,data_loss,regularizer,path_core,active_neurons").map_err(io_err)?;
    for r in rows {
        writeln!(
            out,
            "{:?},{:?},{:?},{:?},{}",
            r.lambda,
            r.data_loss,
            r.regularizer,
            r.path_core,
            join(&r.active_neurons, ";")
        )
        .map_err(io_err)?;
    }
    Ok(Outcome::Ok)
}
