use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use spiked::experiments::{
    run_covariance_sweep, run_esd_trials, run_wigner_sweep, summarize, table1_records, GroupBy,
    SweepRun, TABLE1_LAMBDA,
};
use spiked::recover::PenaltyVariant;
use spiked::{
    bbp_covariance_prediction, bbp_wigner_prediction, RecoveryConfig, Seed, SignalVector,
};

use crate::manifest::write_manifest;
use crate::{resolve_seed, EigArgs, GenArgs, RecoverArgs, SweepArgs, SweepKind};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(std::io::Error),
    Core(spiked::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Io(e) => write!(f, "{e}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<spiked::Error> for CliError {
    fn from(e: spiked::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

type CliResult = Result<(), CliError>;

fn ensure_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(CliError::Io)
}

pub fn cmd_gen(mut args: GenArgs) -> CliResult {
    let seed = resolve_seed(args.seed).map_err(CliError::Usage)?;
    args.seed = Some(seed);
    ensure_dir(&args.out)?;

    let block = spiked::make_signal_block(args.n, args.block_fraction)?;
    let signal = SignalVector::from_entries(block.entries().to_vec(), args.tau)?;
    let noise = spiked::sample_goe(args.n, Seed::new(seed))?;
    let observed = spiked::assemble_spiked(args.lambda, &signal, &noise)?;

    let matrix_path = args.out.join("matrix.bin");
    let signal_path = args.out.join("signal.bin");
    spiked::io::write_matrix_file(&observed, &matrix_path)?;
    spiked::io::write_vector_file(signal.entries(), &signal_path)?;
    if args.csv {
        spiked::io::write_matrix_csv_file(&observed, &args.out.join("matrix.csv"))?;
        spiked::io::write_vector_csv_file(signal.entries(), &args.out.join("signal.csv"))?;
    }
    write_manifest(&args.out, "gen", seed, &args)?;
    println!(
        "wrote {} and {} (n = {}, lambda = {}, seed = {seed})",
        matrix_path.display(),
        signal_path.display(),
        args.n,
        args.lambda
    );
    Ok(())
}

pub fn cmd_eig(mut args: EigArgs) -> CliResult {
    let seed = resolve_seed(args.seed).map_err(CliError::Usage)?;
    args.seed = Some(seed);
    let matrix = spiked::io::read_matrix_file(&args.input)?;
    ensure_dir(&args.out)?;

    let pair = spiked::leading_eigenpair_seeded(&matrix, args.tol, args.max_iter, Seed::new(seed))?;
    spiked::io::write_vector_file(&pair.vector, &args.out.join("eigenvector.bin"))?;

    let mut report = serde_json::json!({
        "n": matrix.n(),
        "leading_eigenvalue": pair.value,
        "tol": args.tol,
        "max_iter": args.max_iter,
    });
    if args.full {
        let spectrum = spiked::full_spectrum_capped(&matrix, args.cap)?;
        let esd = spiked::esd_of(&spectrum, 1.0)?;
        write_esd_csv(&esd, &args.out.join("spectrum.csv"))?;
        report["spectrum_file"] = serde_json::json!("spectrum.csv");
        report["smallest_eigenvalue"] = serde_json::json!(spectrum.min());
    }
    let mut w = BufWriter::new(File::create(args.out.join("eigen.json"))?);
    serde_json::to_writer_pretty(&mut w, &report).map_err(std::io::Error::other)?;
    w.write_all(b"\n")?;
    w.flush()?;

    write_manifest(&args.out, "eig", seed, &args)?;
    println!("leading eigenvalue: {}", pair.value);
    Ok(())
}

pub fn cmd_recover(mut args: RecoverArgs) -> CliResult {
    let seed = resolve_seed(args.seed).map_err(CliError::Usage)?;
    args.seed = Some(seed);
    let matrix = spiked::io::read_matrix_file(&args.input)?;

    let mut config = match &args.config {
        Some(path) => RecoveryConfig::from_kv_str(&std::fs::read_to_string(path)?)?,
        None => RecoveryConfig::default(),
    };
    if let Some(v) = args.alpha {
        config.alpha = v;
    }
    if let Some(v) = args.gamma {
        config.gamma = v;
    }
    if let Some(v) = args.tol {
        config.tol = v;
    }
    if let Some(v) = args.max_iter {
        config.max_iter = v;
    }
    if let Some(v) = args.tau {
        config.tau = v;
    }
    if let Some(v) = &args.penalty_variant {
        config.penalty = PenaltyVariant::parse(v)?;
    }
    config.validate()?;
    ensure_dir(&args.out)?;

    let result = spiked::run_descent(&matrix, &config, Seed::new(seed))?;
    spiked::io::write_vector_file(&result.x_hat, &args.out.join("recovered.bin"))?;
    spiked::io::write_vector_csv_file(&result.x_hat, &args.out.join("recovered.csv"))?;

    let relative_error = match &args.true_vector {
        Some(path) => {
            let entries = spiked::io::read_vector_file(path)?;
            let truth = SignalVector::from_entries(entries, config.tau)?;
            Some(spiked::relative_error(&truth, &result.x_hat)?)
        }
        None => None,
    };

    let report = serde_json::json!({
        "n": matrix.n(),
        "converged": result.converged,
        "iterations": result.iterations,
        "relative_error_percent": relative_error,
        "config": config,
    });
    let mut w = BufWriter::new(File::create(args.out.join("result.json"))?);
    serde_json::to_writer_pretty(&mut w, &report).map_err(std::io::Error::other)?;
    w.write_all(b"\n")?;
    w.flush()?;

    write_manifest(&args.out, "recover", seed, &args)?;
    match relative_error {
        Some(err) => println!(
            "converged = {}, iterations = {}, relative error = {err:.3}%",
            result.converged, result.iterations
        ),
        None => println!("converged = {}, iterations = {}", result.converged, result.iterations),
    }
    Ok(())
}

pub fn cmd_sweep(mut args: SweepArgs) -> CliResult {
    let seed = resolve_seed(args.seed).map_err(CliError::Usage)?;
    args.seed = Some(seed);
    ensure_dir(&args.out)?;

    match args.kind {
        SweepKind::Wigner => {
            let ns = args.ns.clone().unwrap_or_else(|| vec![1000]);
            let run = run_with_threads(args.threads, || {
                run_wigner_sweep(&args.lambdas, &ns, args.trials, Seed::new(seed))
            })?;
            write_wigner_predictions(&args.lambdas, &args.out.join("predictions.csv"))?;
            finish_sweep(&args, seed, run, "wigner")
        }
        SweepKind::Covariance => {
            let run = run_with_threads(args.threads, || {
                run_covariance_sweep(&args.lambda1s, args.p, args.samples, args.trials, Seed::new(seed))
            })?;
            let c = args.p as f64 / args.samples as f64;
            write_covariance_predictions(&args.lambda1s, c, &args.out.join("predictions.csv"))?;
            finish_sweep(&args, seed, run, "covariance")
        }
        SweepKind::Table1 => {
            let ns = args.ns.clone().unwrap_or_else(|| vec![500, 1000, 2500, 5000]);
            let config = RecoveryConfig {
                alpha: args.alpha,
                gamma: args.gamma,
                tol: args.tol,
                max_iter: args.max_iter,
                tau: args.tau,
                penalty: PenaltyVariant::parse(&args.penalty_variant)?,
            };
            let run = run_with_threads(args.threads, || {
                table1_records(&ns, args.trials, &config, TABLE1_LAMBDA, Seed::new(seed))
            })?;
            finish_sweep(&args, seed, run, "table1")
        }
        SweepKind::Esd => {
            let distances = run_with_threads(args.threads, || {
                run_esd_trials(args.n, args.trials, Seed::new(seed))
            })?;
            let mean = distances.iter().sum::<f64>() / distances.len() as f64;
            let mut w = BufWriter::new(File::create(args.out.join("distances.csv"))?);
            writeln!(w, "trial,ks_distance")?;
            for (t, d) in distances.iter().enumerate() {
                writeln!(w, "{t},{d:?}")?;
            }
            w.flush()?;
            write_manifest(&args.out, "sweep", seed, &args)?;
            println!("mean KS distance over {} trials at n = {}: {mean:.6}", args.trials, args.n);
            Ok(())
        }
    }
}

fn finish_sweep(args: &SweepArgs, seed: u64, run: SweepRun, label: &str) -> CliResult {
    let trials_path = args.out.join("trials.csv");
    let summary_path = args.out.join("summary.csv");
    let trials_file = BufWriter::new(File::create(&trials_path)?);
    spiked::experiments::write_trials_csv(&run.records, trials_file)?;
    let summaries = summarize(&run.records, GroupBy::NAndLambda);
    let summary_file = BufWriter::new(File::create(&summary_path)?);
    spiked::experiments::write_summaries_csv(&summaries, summary_file)?;

    if !run.failures.is_empty() {
        let mut w = BufWriter::new(File::create(args.out.join("exclusions.csv"))?);
        writeln!(w, "n,lambda,trial,seed,message")?;
        for f in &run.failures {
            writeln!(w, "{},{:?},{},{},{:?}", f.n, f.lambda, f.trial, f.seed, f.message)?;
        }
        w.flush()?;
    }
    if args.json {
        let mut w = BufWriter::new(File::create(args.out.join("trials.json"))?);
        serde_json::to_writer_pretty(&mut w, &run.records).map_err(std::io::Error::other)?;
        w.write_all(b"\n")?;
        let mut w = BufWriter::new(File::create(args.out.join("summary.json"))?);
        serde_json::to_writer_pretty(&mut w, &summaries).map_err(std::io::Error::other)?;
        w.write_all(b"\n")?;
    }
    write_manifest(&args.out, "sweep", seed, args)?;

    println!(
        "{label} sweep: {} records, {} excluded -> {}",
        run.records.len(),
        run.excluded(),
        trials_path.display()
    );
    for s in &summaries {
        let group = match (s.n, s.lambda) {
            (Some(n), Some(l)) => format!("n = {n}, lambda = {l}"),
            (Some(n), None) => format!("n = {n}"),
            (None, Some(l)) => format!("lambda = {l}"),
            (None, None) => "all".to_string(),
        };
        let mut line = format!(
            "  {group}: trials = {}, mean lambda_hat = {:.4} (sd {:.4})",
            s.trials, s.mean_lambda_hat, s.sd_lambda_hat
        );
        if let (Some(m), Some(sd)) = (s.mean_overlap, s.sd_overlap) {
            line.push_str(&format!(", mean overlap = {m:.4} (sd {sd:.4})"));
        }
        if let (Some(opt), Some(raw), Some(al)) =
            (s.mean_err_opt, s.mean_err_eig_raw, s.mean_err_eig_aligned)
        {
            line.push_str(&format!(
                ", err: opt = {opt:.2}%, eig raw = {raw:.2}%, eig aligned = {al:.2}%"
            ));
        }
        println!("{line}");
    }
    Ok(())
}

fn write_esd_csv(esd: &spiked::Esd, path: &Path) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "location,weight")?;
    let weight = esd.weight();
    for p in esd.points() {
        writeln!(w, "{p:?},{weight:?}")?;
    }
    w.flush()?;
    Ok(())
}

fn write_wigner_predictions(lambdas: &[f64], path: &Path) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "lambda,eigenvalue_limit,overlap_limit")?;
    for &l in lambdas {
        match bbp_wigner_prediction(l) {
            Ok(p) => writeln!(w, "{:?},{:?},{:?}", p.lambda, p.eigenvalue_limit, p.overlap_limit)?,
            Err(e) => log::warn!("no prediction for lambda = {l}: {e}"),
        }
    }
    w.flush()?;
    Ok(())
}

fn write_covariance_predictions(lambda1s: &[f64], c: f64, path: &Path) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "lambda1,c,eigenvalue_limit")?;
    for &l in lambda1s {
        match bbp_covariance_prediction(l, c) {
            Ok(p) => writeln!(w, "{:?},{:?},{:?}", p.lambda1, p.c, p.eigenvalue_limit)?,
            Err(e) => log::warn!("no prediction for lambda1 = {l}: {e}"),
        }
    }
    w.flush()?;
    Ok(())
}

pub fn run_with_threads<T>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> T
where
    T: Send,
{
    match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .expect("thread pool")
            .install(f),
        None => f(),
    }
}
