use clap::{Args, Parser, Subcommand, ValueEnum};
use latentnet::error::{Error, Result};
use latentnet::family::EdgeFamily;
use latentnet::inference::{compare_networks, edge_mean_se, entry_se, InferenceReport, Target};
use latentnet::io::{
    load_network, save_edge_list, save_trace_csv, write_comparison_csv, write_convergence_csv,
    write_normality_csv, write_reports_csv, FitArtifact,
};
use latentnet::likelihood::theta;
use latentnet::pgd::{fit, EtaInit, EtaMode, PgdConfig, StopRule};
use latentnet::rasvt::{default_config, ra_svt, RasvtConfig};
use latentnet::simulation::{
    coverage_95, gen_truth, ks_distance_to_std_normal, run_convergence_study, run_normality_study,
    sample_network, TruthSpec,
};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "latentnet",
    version,
    about = "Latent space network models: fitting, inference, simulation"
)]
struct Cli {
    /// Edge weight family.
    #[arg(long, global = true, default_value = "poisson")]
    family: EdgeFamily,

    /// Latent space dimension.
    #[arg(long, global = true, default_value_t = 2)]
    k: usize,

    /// RNG seed for anything stochastic.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker thread count (accepted for interface stability; the numeric
    /// kernels currently run single-threaded).
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a network from a synthetic ground-truth model.
    Simulate {
        /// Number of nodes.
        #[arg(long)]
        n: usize,
    },
    /// Fit the model to an edge list by projected gradient descent.
    Fit(FitArgs),
    /// Standard errors and confidence intervals from a saved fit.
    Infer(InferArgs),
    /// Test all pairwise latent similarities between two fits.
    Compare {
        /// First fit artifact (JSON).
        fit_a: PathBuf,
        /// Second fit artifact (JSON).
        fit_b: PathBuf,
        /// Confidence level, also the false discovery rate for the
        /// multiplicity correction.
        #[arg(long, default_value_t = 0.95)]
        level: f64,
    },
    /// Monte Carlo studies of the optimizer and of inferential calibration.
    Study(StudyArgs),
}

#[derive(Args)]
struct FitArgs {
    /// Edge list CSV (source,target,weight).
    network: PathBuf,

    /// Initialization: "rasvt" or "file:<fit.json>".
    #[arg(long, default_value = "rasvt")]
    init: String,

    /// Singular value threshold override for the spectral initializer.
    #[arg(long)]
    tau: Option<f64>,

    /// Trimming order override for the spectral initializer.
    #[arg(long)]
    gamma: Option<usize>,

    #[arg(long, default_value_t = 2000)]
    max_iters: usize,

    /// Backtracking contraction factor.
    #[arg(long, default_value_t = 0.5)]
    beta: f64,

    /// Line-search sufficient-decrease constant.
    #[arg(long, default_value_t = 1.0)]
    c_ls: f64,

    /// Initial step size: "auto" (closed form) or a positive number.
    #[arg(long, default_value = "auto")]
    eta_init: String,

    #[arg(long, value_enum, default_value_t = EtaModeArg::Fixed)]
    eta_mode: EtaModeArg,

    #[arg(long, default_value_t = 0.01)]
    stop_tol: f64,

    #[arg(long, value_enum, default_value_t = StopRuleArg::Score)]
    stop_rule: StopRuleArg,

    /// Run plain fixed-step gradient descent instead of backtracking.
    #[arg(long)]
    no_line_search: bool,
}

#[derive(Copy, Clone, ValueEnum)]
enum EtaModeArg {
    Fixed,
    Refresh,
}

#[derive(Copy, Clone, ValueEnum)]
enum StopRuleArg {
    Score,
    Grad,
    None,
}

#[derive(Args)]
struct InferArgs {
    /// Fit artifact (JSON).
    fit: PathBuf,

    /// Report coordinate-wise intervals for this node's latent position
    /// and degree parameter.
    #[arg(long)]
    node: Option<String>,

    /// "A,B": report the expected edge weight between nodes A and B.
    #[arg(long)]
    pair: Option<String>,

    /// Confidence level.
    #[arg(long, default_value_t = 0.95)]
    level: f64,

    /// Edge list the fit was computed from; defaults to the path recorded
    /// in the artifact.
    #[arg(long)]
    network: Option<PathBuf>,
}

#[derive(Args)]
struct StudyArgs {
    #[command(subcommand)]
    kind: StudyKind,
}

#[derive(Subcommand)]
enum StudyKind {
    /// Convergence proportions of adaptive vs fixed step sizes over a grid
    /// of initial step scales.
    Convergence {
        #[arg(long, default_value_t = 500)]
        n: usize,
        #[arg(long, default_value_t = 20)]
        reps: usize,
        /// Multiples of the baseline step size to sweep.
        #[arg(long, value_delimiter = ',', default_values_t = vec![10.0, 5.0, 1.0, 0.2])]
        scales: Vec<f64>,
    },
    /// Sampling distribution of standardized estimates against N(0,1).
    Normality {
        #[arg(long, default_value_t = 500)]
        n: usize,
        #[arg(long, default_value_t = 200)]
        reps: usize,
    },
}

#[derive(Serialize)]
struct TruthFile {
    family: EdgeFamily,
    n: usize,
    k: usize,
    seed: u64,
    z: Vec<Vec<f64>>,
    alpha: Vec<f64>,
}

fn load_fit_network(art: &FitArtifact, explicit: Option<&Path>) -> Result<latentnet::Network64> {
    let path = match explicit {
        Some(p) => p.to_path_buf(),
        None => PathBuf::from(art.network_path.as_deref().ok_or_else(|| {
            Error::Config(
                "fit artifact records no network path; pass --network <edge list>".into(),
            )
        })?),
    };
    let net = load_network(&path, art.family)?;
    if net.labels() != art.labels.as_slice() {
        return Err(Error::LabelMismatch(
            "edge list node labels do not match the fit artifact".into(),
        ));
    }
    Ok(net)
}

fn run(cli: Cli) -> Result<()> {
    std::fs::create_dir_all(&cli.out)?;
    match cli.command {
        Command::Simulate { n } => {
            let spec = TruthSpec {
                n,
                k: cli.k,
                family: cli.family,
                seed: cli.seed,
            };
            let truth = gen_truth(&spec)?;
            let net = sample_network(&truth, cli.family, cli.seed);
            save_edge_list(&net, &cli.out.join("network.csv"))?;
            let tf = TruthFile {
                family: cli.family,
                n,
                k: cli.k,
                seed: cli.seed,
                z: (0..n)
                    .map(|i| (0..cli.k).map(|c| truth.z[(i, c)]).collect())
                    .collect(),
                alpha: truth.alpha.iter().copied().collect(),
            };
            let f = std::fs::File::create(cli.out.join("truth.json"))?;
            serde_json::to_writer_pretty(f, &tf)?;
            println!(
                "simulated {} ({} nodes, k = {}) -> {}",
                cli.family,
                n,
                cli.k,
                cli.out.display()
            );
        }
        Command::Fit(args) => {
            let net = load_network(&args.network, cli.family)?;
            let (y0, rasvt_cfg) = match args.init.as_str() {
                "rasvt" => {
                    let mut cfg = default_config(&net, cli.k)?;
                    if let Some(t) = args.tau {
                        cfg.tau = t;
                    }
                    if let Some(g) = args.gamma {
                        cfg.gamma = g;
                    }
                    (ra_svt(&net, cli.family, &cfg)?, Some(cfg))
                }
                other => match other.strip_prefix("file:") {
                    Some(p) => {
                        let prev = FitArtifact::load(Path::new(p))?;
                        (prev.state(), None::<RasvtConfig<f64>>)
                    }
                    None => {
                        return Err(Error::Config(format!(
                            "--init must be 'rasvt' or 'file:<path>', got '{other}'"
                        )))
                    }
                },
            };
            let eta_init = match args.eta_init.as_str() {
                "auto" => EtaInit::Auto,
                v => {
                    let x: f64 = v.parse().map_err(|_| {
                        Error::Config(format!("--eta-init must be 'auto' or a number, got '{v}'"))
                    })?;
                    EtaInit::Fixed(x)
                }
            };
            let cfg = PgdConfig {
                c_ls: args.c_ls,
                beta: args.beta,
                max_iters: args.max_iters,
                backtrack_budget: None,
                eta_init,
                eta_mode: match args.eta_mode {
                    EtaModeArg::Fixed => EtaMode::FixedInit,
                    EtaModeArg::Refresh => EtaMode::RefreshEachIter,
                },
                stop_tol: args.stop_tol,
                stop_rule: match args.stop_rule {
                    StopRuleArg::Score => StopRule::MaxAbsScore,
                    StopRuleArg::Grad => StopRule::GradFroNorm,
                    StopRuleArg::None => StopRule::None,
                },
                line_search: !args.no_line_search,
            };
            let res = fit(&net, cli.family, &y0, &cfg)?;
            let trace_path = cli.out.join("trace.csv");
            save_trace_csv(&res.trace, &trace_path)?;
            let art = FitArtifact::from_fit(
                &net,
                cli.family,
                &res,
                &cfg,
                rasvt_cfg,
                Some(trace_path.display().to_string()),
                Some(args.network.display().to_string()),
            );
            art.save(&cli.out.join("fit.json"))?;
            println!(
                "fit {} nodes in {} iterations, converged = {}, final score = {:.3e}",
                net.n(),
                res.trace.len(),
                res.converged,
                res.trace.last().map(|t| t.max_abs_score).unwrap_or(f64::NAN)
            );
            if !res.converged {
                eprintln!("warning: stopping rule not met within the iteration cap");
            }
        }
        Command::Infer(args) => {
            let art = FitArtifact::load(&args.fit)?;
            let net = load_fit_network(&art, args.network.as_deref())?;
            let y = art.state();
            let mut reports: Vec<InferenceReport<f64>> = Vec::new();
            if args.node.is_none() && args.pair.is_none() {
                return Err(Error::Config("pass --node <label> or --pair <a,b>".into()));
            }
            if let Some(label) = &args.node {
                let i = art.node_index(label)?;
                for c in 0..=art.k {
                    let est = if c < art.k { y.z[(i, c)] } else { y.alpha[i] };
                    let se = entry_se(&y, &net, art.family, i, c)?;
                    reports.push(InferenceReport::from_estimate(
                        Target::Entry {
                            node: label.clone(),
                            coord: c,
                        },
                        est,
                        se,
                        0.0,
                        args.level,
                    ));
                }
            }
            if let Some(pair) = &args.pair {
                let (a, b) = pair.split_once(',').ok_or_else(|| {
                    Error::Config(format!("--pair expects 'labelA,labelB', got '{pair}'"))
                })?;
                let i = art.node_index(a.trim())?;
                let j = art.node_index(b.trim())?;
                let th = theta(&y);
                let est = art.family.mean(th[(i, j)]);
                let se = edge_mean_se(&y, &net, art.family, i, j)?;
                reports.push(InferenceReport::from_estimate(
                    Target::EdgeMean {
                        i: a.trim().to_string(),
                        j: b.trim().to_string(),
                    },
                    est,
                    se,
                    0.0,
                    args.level,
                ));
            }
            let out = std::fs::File::create(cli.out.join("inference.csv"))?;
            write_reports_csv(&reports, out)?;
            write_reports_csv(&reports, std::io::stdout().lock())?;
        }
        Command::Compare { fit_a, fit_b, level } => {
            let art_a = FitArtifact::load(&fit_a)?;
            let art_b = FitArtifact::load(&fit_b)?;
            let net_a = load_fit_network(&art_a, None)?;
            let net_b = load_fit_network(&art_b, None)?;
            let cmp = compare_networks(
                &art_a.state(),
                &net_a,
                art_a.family,
                &art_b.state(),
                &net_b,
                art_b.family,
                1.0 - level,
            )?;
            write_comparison_csv(
                &cmp,
                net_a.labels(),
                &cli.out.join("pairs.csv"),
                &cli.out.join("node_rates.csv"),
            )?;
            let rejected = cmp.tests.iter().filter(|t| t.rejected).count();
            println!(
                "compared {} pairs, {} rejected at FDR {:.2}",
                cmp.tests.len(),
                rejected,
                1.0 - level
            );
        }
        Command::Study(args) => {
            let spec = TruthSpec {
                n: 0,
                k: cli.k,
                family: cli.family,
                seed: cli.seed,
            };
            match args.kind {
                StudyKind::Convergence { n, reps, scales } => {
                    let spec = TruthSpec { n, ..spec };
                    let base = PgdConfig::default();
                    let mut rows = run_convergence_study(&spec, &scales, true, reps, &base)?;
                    rows.extend(run_convergence_study(&spec, &scales, false, reps, &base)?);
                    write_convergence_csv(&rows, &cli.out.join("convergence.csv"))?;
                    for r in &rows {
                        println!(
                            "scale {:>5} {:8} converged {}/{} (mean iter {:.1})",
                            r.eta_scale,
                            if r.adaptive { "adaptive" } else { "fixed" },
                            r.converged,
                            r.reps,
                            r.mean_conv_iter
                        );
                    }
                }
                StudyKind::Normality { n, reps } => {
                    let spec = TruthSpec { n, ..spec };
                    let base = PgdConfig::default();
                    let study = run_normality_study(&spec, reps, &base)?;
                    write_normality_csv(&study, &cli.out.join("normality.csv"))?;
                    let t1: Vec<f64> = study.reps.iter().map(|r| r.t_z11).collect();
                    let t2: Vec<f64> = study.reps.iter().map(|r| r.t_mu12).collect();
                    println!(
                        "embedding entry:   coverage95 = {:.3}, KS = {:.3}",
                        coverage_95(&t1),
                        ks_distance_to_std_normal(&t1)
                    );
                    println!(
                        "expected edge:     coverage95 = {:.3}, KS = {:.3}",
                        coverage_95(&t2),
                        ks_distance_to_std_normal(&t2)
                    );
                    if study.non_converged > 0 {
                        eprintln!(
                            "warning: {} of {} replications did not converge",
                            study.non_converged, reps
                        );
                    }
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // Help and version requests are not usage errors.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
