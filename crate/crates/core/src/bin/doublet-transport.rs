use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use doublet_transport::ensemble::{EnsembleConfig, Mode};
use doublet_transport::harness::experiments::{
    dos_cusp_experiment, fit_protocol, fit_scan, ratio_plot_data, scaling_experiment,
};
use doublet_transport::harness::io::{
    format_float, read_json, read_records_csv, to_json, write_columns, write_json, write_records_csv,
};
use doublet_transport::harness::run_ensemble;
use doublet_transport::{theory, Execution};

#[derive(Parser)]
#[command(version, about = "Transport statistics of random centrosymmetric networks")]
struct Cli {
    /// Worker threads (1 runs sequentially; default uses every core).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Record wall-clock time in JSON summaries (breaks byte-stability).
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an ensemble and write per-realization CSV plus a JSON summary.
    Sample {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Summary path; stdout when absent.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Evaluate the closed-form predictions at one parameter point.
    Theory(TheoryArgs),
    /// Bulk density of states of the + sector with E + V pinned.
    Dos {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        bins: Option<usize>,
        #[arg(long)]
        json: Option<PathBuf>,
        /// Histogram as CSV (center, density, count).
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Fit α against ⟨‖𝒱‖²⟩/ξ² over the standard scan.
    Fit {
        #[arg(long, default_value_t = 2000)]
        per_point: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Fraction of efficient realizations per system size and ensemble.
    Scaling {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_delimiter = ',', default_value = "8,10,12,14")]
        ns: Vec<usize>,
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "plain_goe,centrosymmetric,dominant_doublet"
        )]
        modes: Vec<String>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Transfer-time histograms with the theory curve, as CSV.
    Plotdata {
        /// Records written by `sample`.
        #[arg(long)]
        records: PathBuf,
        #[arg(long, default_value_t = 1.7)]
        window_factor: f64,
        #[arg(long)]
        bins: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Long-form overrides for every configuration field.
#[derive(Args)]
struct ConfigArgs {
    /// JSON file with an ensemble configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "N", alias = "n")]
    n: Option<usize>,
    #[arg(long)]
    xi: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    window_factor: Option<f64>,
    #[arg(long)]
    n_target: Option<u64>,
    /// plain_goe, centrosymmetric or dominant_doublet.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long = "fixed-E-plus-V", alias = "fixed-e-plus-v")]
    fixed_e_plus_v: Option<f64>,
    #[arg(long = "fixed-V-star", alias = "fixed-v-star")]
    fixed_v_star: Option<f64>,
    /// auto, rejection or conditioned.
    #[arg(long)]
    sampler: Option<String>,
    #[arg(long)]
    max_raw_draws: Option<u64>,
}

impl ConfigArgs {
    fn resolve(&self, seed: Option<u64>, default_n: Option<usize>) -> Result<EnsembleConfig> {
        let mut map = match &self.config {
            Some(path) => match read_json::<Value>(path)? {
                Value::Object(m) => m,
                _ => bail!("{}: configuration must be a JSON object", path.display()),
            },
            None => Map::new(),
        };
        if let Some(n) = default_n {
            map.entry("N").or_insert(Value::from(n));
        }
        let mut set = |key: &str, value: Option<Value>| {
            if let Some(v) = value {
                map.insert(key.to_owned(), v);
            }
        };
        set("N", self.n.map(Value::from));
        set("xi", self.xi.map(Value::from));
        set("alpha", self.alpha.map(Value::from));
        set("master_seed", seed.map(Value::from));
        set("window_factor", self.window_factor.map(Value::from));
        set("n_target", self.n_target.map(Value::from));
        set("mode", self.mode.clone().map(Value::from));
        set("fixed_E_plus_V", self.fixed_e_plus_v.map(Value::from));
        set("fixed_V_star", self.fixed_v_star.map(Value::from));
        set("sampler", self.sampler.clone().map(Value::from));
        set("max_raw_draws", self.max_raw_draws.map(Value::from));
        let config: EnsembleConfig =
            serde_json::from_value(Value::Object(map)).context("invalid configuration")?;
        config.validate()?;
        Ok(config)
    }
}

#[derive(Args)]
struct TheoryArgs {
    #[arg(long = "N", alias = "n")]
    n: usize,
    #[arg(long, default_value_t = 2.0)]
    xi: f64,
    /// Mean squared coupling ⟨‖𝒱‖²⟩; derived from α when absent.
    #[arg(long)]
    coupling_norm_sq: Option<f64>,
    #[arg(long, default_value_t = 0.95)]
    alpha: f64,
    /// Fixed in/out coupling for the conditional forms.
    #[arg(long)]
    v: Option<f64>,
    /// Points at which to evaluate the transfer-time density.
    #[arg(long, value_delimiter = ',')]
    x: Vec<f64>,
    #[arg(long)]
    json: Option<PathBuf>,
}

fn emit_json<T: serde::Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    match path {
        Some(p) => write_json(p, value)?,
        None => io::stdout().write_all(to_json(value).as_bytes())?,
    }
    Ok(())
}

fn theory_report(args: &TheoryArgs) -> Result<Value> {
    let (n, xi) = (args.n, args.xi);
    let v2 = match args.coupling_norm_sq {
        Some(v2) => v2,
        None => theory::coupling_from_alpha(args.alpha, xi)?,
    };
    let params = theory::TheoryParams::new(n, xi, v2, args.v)?;
    let law = theory::transfer_time_dist(n, xi, v2)?;
    let mut report = json!({
        "params": params,
        "alpha": args.alpha,
        "alpha_from_coupling": theory::alpha_from_coupling(v2, xi).ok(),
        "d_min_constrained": theory::d_min_constrained(v2, args.alpha, n).ok(),
        "vbar_exact": theory::vbar_exact(n, xi)?,
        "vbar_asymptotic": theory::vbar_asymptotic(n, xi)?,
        "prob_faster_than_rabi": theory::prob_faster_than_rabi(n, xi, v2)?,
        "prob_faster_than_rabi_integral": theory::prob_faster_than_rabi_integral(n, xi, v2)?,
        "prob_faster_than_rabi_asymptotic": theory::prob_faster_than_rabi_asymptotic(n, xi, v2)?,
        "efficiency_lower_bound": theory::efficiency_lower_bound(args.alpha)?,
        "doublet_probability": theory::doublet_probability(n, args.alpha)?,
        "avg_return_population": theory::avg_return_population(n)?,
        "avg_return_population_centro": theory::avg_return_population_centro(n)?,
        "transfer_time_pdf": args.x.iter().map(|&x| json!([x, law.pdf(x)])).collect::<Vec<_>>(),
    });
    if let Some(v) = args.v {
        let fixed = theory::transfer_time_dist_fixed_v(v, n, xi, v2)?;
        report["delta_s_params"] = json!(theory::delta_s_params(n, xi, v2, v)?);
        report["prob_faster_than_rabi_fixed_v"] =
            json!(theory::prob_faster_than_rabi_fixed_v(v, n, xi, v2)?);
        report["transfer_time_pdf_fixed_v"] =
            json!(args.x.iter().map(|&x| json!([x, fixed.pdf(x)])).collect::<Vec<_>>());
    }
    Ok(report)
}

fn parse_modes(names: &[String]) -> Result<Vec<Mode>> {
    names
        .iter()
        .map(|s| {
            serde_json::from_value(Value::from(s.as_str()))
                .with_context(|| format!("unknown mode {s:?}"))
        })
        .collect()
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let exec = Execution::with_threads(cli.threads);
    let started = Instant::now();

    match cli.command {
        Command::Sample { config, seed, csv, json } => {
            let config = config.resolve(Some(seed), None)?;
            let mut out = run_ensemble(&config, exec)?;
            if cli.timing {
                out.summary.elapsed_seconds = Some(started.elapsed().as_secs_f64());
            }
            if let Some(path) = csv {
                write_records_csv(&path, &out.records)?;
            }
            emit_json(json.as_deref(), &out.summary)?;
        }
        Command::Theory(args) => emit_json(args.json.as_deref(), &theory_report(&args)?)?,
        Command::Dos { config, seed, bins, json, csv } => {
            let mut config = config.resolve(seed, None)?;
            config.fixed_e_plus_v.get_or_insert(1.0);
            let result = dos_cusp_experiment(&config, exec, bins)?;
            if let Some(path) = csv {
                let h = &result.histogram;
                let counts: Vec<f64> = h.counts.iter().map(|&c| c as f64).collect();
                write_columns(
                    &path,
                    &["center", "density", "count"],
                    &[h.centers(), h.density.clone(), counts],
                )?;
            }
            emit_json(json.as_deref(), &result)?;
        }
        Command::Fit { per_point, seed, json } => {
            let result = fit_protocol(&fit_scan(), per_point, seed, exec)?;
            emit_json(json.as_deref(), &result)?;
        }
        Command::Scaling { config, seed, ns, modes, json } => {
            let config = config.resolve(seed, ns.first().copied())?;
            let cells = scaling_experiment(&config, &ns, &parse_modes(&modes)?, exec)?;
            emit_json(json.as_deref(), &cells)?;
        }
        Command::Plotdata { records, window_factor, bins, out } => {
            let recs = read_records_csv(&records)?;
            let plot = ratio_plot_data(&recs, window_factor, bins)?;
            let file = File::create(&out).with_context(|| format!("{}", out.display()))?;
            let mut w = BufWriter::new(file);
            writeln!(w, "center,spectral,dynamical,theory")?;
            for k in 0..plot.centers.len() {
                writeln!(
                    w,
                    "{},{},{},{}",
                    format_float(plot.centers[k]),
                    format_float(plot.spectral[k]),
                    format_float(plot.dynamical[k]),
                    format_float(plot.theory[k])
                )?;
            }
            w.flush()?;
        }
    }
    Ok(())
}
