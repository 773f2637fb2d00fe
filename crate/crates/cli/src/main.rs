use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use dampwave::duhamel::{
    diamond_march, fuzz_interpolation, verify_apriori, AprioriKind, AprioriOptions, MarchStatus,
};
use dampwave::error::{Error, Result};
use dampwave::fd::{solve_ivp2, FdOptions, UniformGrid};
use dampwave::functional::{
    compute_f, holder_lower_bound_check, ode_comparison_lifespan, pointwise_bound_check,
    slicing_cascade, trace_from_rows, Rk45Options, INEQUALITY_SLACK,
};
use dampwave::harness::{
    compare_with_theory, emit_outputs, fit_exponent, fit_windows, read_records, run_sweep,
    surrogate_for, ExperimentConfig, FitModel, OutputPaths, SolverChoice,
};
use dampwave::io::{write_dump, write_json, write_slicing, write_trace, FieldDump};
use dampwave::lattice::CharacteristicGrid;
use dampwave::scaling::{classify_regime, predicted_lifespan, ProblemParams, Reference};

#[derive(Parser, Debug)]
#[command(
    name = "dampwave",
    version,
    about = "Blow-up experiments for 1D damped semilinear waves"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    solver: Option<String>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Grid points per support radius k.
    #[arg(long, global = true)]
    resolution: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Single run: field dump, functional trace and inequality checks.
    Solve {
        #[arg(long, default_value_t = 1.0)]
        eps: f64,
        /// Overrides the configured t_max.
        #[arg(long)]
        t_max: Option<f64>,
        /// Also write the field as x,t,value CSV.
        #[arg(long)]
        csv: bool,
    },
    /// Amplitude sweep to records CSV (and fits when a model is configured).
    Sweep,
    /// Fit lifespan records against the predicted form.
    Fit {
        #[arg(long)]
        records: PathBuf,
        /// power, b_eps or exponential; defaults to the predicted form.
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        window: Option<usize>,
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Numerical checks of the analytic ingredients.
    Verify {
        #[command(subcommand)]
        what: Verify,
    },
    /// Predicted lifespan forms for the given p, mu, n.
    Predict {
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 2.0)]
        mu: f64,
        #[arg(long, default_value_t = 1)]
        n: u32,
    },
}

#[derive(Subcommand, Debug)]
enum Verify {
    /// Weighted estimates for L over a list of horizons.
    Apriori {
        /// linear_31, annulus_32, main_33 or mixed_34.
        #[arg(long, default_value = "main_33")]
        which: String,
        #[arg(long, value_delimiter = ',', default_value = "10,20,40,80")]
        horizons: Vec<f64>,
    },
    /// Random samples of the interpolation inequality.
    Fuzz {
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
    },
    /// Critical-power slicing cascade.
    Slicing {
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
        /// Cascade constant C in D0 = C eps^3.
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long, default_value_t = 30)]
        j_max: u32,
    },
}

fn load_config(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = &common.solver {
        cfg.solver = s.parse()?;
    }
    if let Some(o) = &common.out {
        cfg.out_dir = o.clone();
    }
    if let Some(r) = common.resolution {
        cfg.resolutions = vec![r];
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    cfg.validated()
}

fn print_json(value: &serde_json::Value) {
    use std::io::Write;
    let text = serde_json::to_string_pretty(value).unwrap_or_default();
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn failed(what: &str) -> Error {
    Error::Numerical(format!("{what} check failed"))
}

fn solve(cfg: &ExperimentConfig, eps: f64, t_max: Option<f64>, csv: bool) -> Result<()> {
    let params = cfg.params()?.with_eps(eps);
    let t_max = t_max.unwrap_or(cfg.t_max);
    let out = &cfg.out_dir;
    if cfg.solver == SolverChoice::Ode {
        let sur = surrogate_for(cfg)?;
        let rec = ode_comparison_lifespan(
            eps,
            &params,
            sur.c1,
            sur.c2,
            sur.f0,
            &Rk45Options::default(),
        )?;
        write_json(&out.join("record.json"), &rec)?;
        print_json(&json!({ "record": rec }));
        return Ok(());
    }
    let profile = cfg.profile()?;
    let n = cfg.resolutions.first().copied().unwrap_or(16);
    let (dump, trace, pointwise, status) = match cfg.solver {
        SolverChoice::Diamond => {
            let grid = CharacteristicGrid::covering(params.k, n, t_max)?;
            let (field, status) = diamond_march(&profile, &params, &grid, cfg.threshold)?;
            let trace = compute_f(&field, &params, status)?;
            let pw = if profile.flags().thm22 {
                Some(pointwise_bound_check(
                    &field,
                    &profile,
                    &params,
                    INEQUALITY_SLACK,
                )?)
            } else {
                None
            };
            (FieldDump::from_lattice(&field), trace, pw, status)
        }
        _ => {
            let grid = UniformGrid::covering(params.k, n, t_max)?;
            let tr = solve_ivp2(
                &profile,
                &params,
                &grid,
                FdOptions {
                    threshold: cfg.threshold,
                    ..Default::default()
                },
            )?;
            let levels: Vec<&[f64]> = tr.levels.iter().map(Vec::as_slice).collect();
            let trace = trace_from_rows(levels, grid.dx(), grid.dt(), &params, tr.status)?;
            let t_last = tr.times.last().copied().unwrap_or(0.0);
            let dump = FieldDump::from_levels(grid.dx(), grid.x_max(), t_last, &tr.levels)?;
            (dump, trace, None, tr.status)
        }
    };
    write_dump(&out.join("field.bin"), &dump)?;
    if csv {
        let dt = if dump.rows() > 1 {
            dump.t_max / (dump.rows() - 1) as f64
        } else {
            0.0
        };
        dampwave::io::write_text(&out.join("field.csv"), &dump.to_csv(dt))?;
    }
    write_trace(&out.join("trace.csv"), &trace)?;
    let holder = profile
        .flags()
        .thm22
        .then(|| holder_lower_bound_check(&trace, INEQUALITY_SLACK));
    let blowup = match status {
        MarchStatus::BlewUp { t_b } => json!(t_b),
        _ => serde_json::Value::Null,
    };
    print_json(&json!({
        "status": status,
        "t_blowup": blowup,
        "identity_residual": trace.identity_residual(),
        "monotone_convex": trace.monotone_convex(),
        "holder": holder,
        "pointwise": pointwise,
    }));
    Ok(())
}

fn sweep(cfg: &ExperimentConfig) -> Result<()> {
    let records = run_sweep(cfg)?;
    let mut fits = Vec::new();
    if let Some(model) = cfg.fit_model {
        match fit_exponent(&records, model) {
            Ok(f) => fits.push(f),
            Err(e) => eprintln!("fit skipped: {e}"),
        }
    }
    emit_outputs(&records, &fits, &OutputPaths::in_dir(&cfg.out_dir))?;
    let resolved = records.iter().filter(|r| r.t_blowup.is_some()).count();
    println!(
        "{} records ({resolved} with a blow-up time) written to {}",
        records.len(),
        cfg.out_dir.display()
    );
    Ok(())
}

fn fit(
    cfg: &ExperimentConfig,
    path: &Path,
    model: Option<&str>,
    window: Option<usize>,
    tol: Option<f64>,
) -> Result<()> {
    let records = read_records(path)?;
    let p = records
        .first()
        .map(|r| r.p)
        .ok_or_else(|| Error::InsufficientData(format!("{} holds no records", path.display())))?;
    let params = ProblemParams::damped_1d(p, cfg.k, 1.0)?;
    let prediction = predicted_lifespan(&params, Reference::New1d)?;
    let model = match model {
        Some(m) => m.parse()?,
        None => cfg
            .fit_model
            .map_or_else(|| FitModel::for_form(prediction.form), Ok)?,
    };
    let fit = fit_exponent(&records, model)?;
    let verdict = compare_with_theory(&fit, &prediction, tol.unwrap_or(cfg.fit_tolerance))?;
    let windows = match window.or((cfg.fit_window > 0).then_some(cfg.fit_window)) {
        Some(w) => fit_windows(&records, model, w)?,
        None => Vec::new(),
    };
    emit_outputs(
        &records,
        std::slice::from_ref(&fit),
        &OutputPaths::in_dir(&cfg.out_dir),
    )?;
    let report = json!({ "fit": fit, "verdict": verdict, "windows": windows });
    write_json(&cfg.out_dir.join("verdict.json"), &report)?;
    print_json(&report);
    Ok(())
}

fn verify(cfg: &ExperimentConfig, what: &Verify) -> Result<()> {
    match what {
        Verify::Apriori { which, horizons } => {
            let kind: AprioriKind = which.parse()?;
            let params = cfg.params()?;
            let mut opts = AprioriOptions::new(cfg.k)?;
            opts.profile = cfg.profile()?;
            if let Some(n) = cfg.resolutions.first() {
                opts.n_per_k = *n;
            }
            let rep = verify_apriori(kind, &params, horizons, &opts)?;
            write_json(&cfg.out_dir.join(format!("apriori_{which}.json")), &rep)?;
            print_json(&json!(rep));
            if rep.majorant_holds == Some(false) {
                return Err(failed("majorant"));
            }
        }
        Verify::Fuzz { samples } => {
            let rep = fuzz_interpolation(*samples, cfg.seed);
            print_json(&json!(rep));
            if rep.violations > 0 {
                return Err(failed("interpolation inequality"));
            }
        }
        Verify::Slicing { eps, c, j_max } => {
            let params = ProblemParams::damped_1d(3.0, cfg.k, 1.0)?;
            let rep = slicing_cascade(*eps, *c, &params, *j_max)?;
            write_slicing(&cfg.out_dir.join("slicing.json"), &rep)?;
            print_json(&json!({
                "d0": rep.d0,
                "s": rep.s,
                "ln_bound": rep.ln_bound,
                "ln_bound_sharp": rep.ln_bound_sharp,
                "closed_form_matches": rep.closed_form_matches,
                "printed_bound_holds": rep.printed_bound_holds,
                "corrected_bound_holds": rep.corrected_bound_holds,
            }));
            if !rep.closed_form_matches || !rep.corrected_bound_holds {
                return Err(failed("slicing"));
            }
        }
    }
    Ok(())
}

fn predict(p: f64, mu: f64, n: u32) -> Result<()> {
    let params = ProblemParams::new(p, n, mu, 2.0, 1.0)?;
    let mut forms = serde_json::Map::new();
    for (name, r) in [
        ("heat", Reference::Heat),
        ("wave", Reference::Wave),
        ("zero_moment_1d", Reference::New1d),
        ("undamped", Reference::Nondamped),
    ] {
        let v = match predicted_lifespan(&params, r) {
            Ok(pred) if r != Reference::New1d || (n == 1 && mu == 2.0) => json!(pred),
            Ok(_) => json!("zero-moment prediction is for n = 1, mu = 2"),
            Err(e) => json!(e.to_string()),
        };
        forms.insert(name.into(), v);
    }
    print_json(&json!({
        "p": p,
        "mu": mu,
        "n": n,
        "damping_regime": classify_regime(&params),
        "forms": forms,
    }));
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    if let Command::Predict { p, mu, n } = cli.command {
        return predict(p, mu, n);
    }
    let cfg = load_config(&cli.common)?;
    match &cli.command {
        Command::Solve { eps, t_max, csv } => solve(&cfg, *eps, *t_max, *csv),
        Command::Sweep => sweep(&cfg),
        Command::Fit {
            records,
            model,
            window,
            tolerance,
        } => fit(&cfg, records, model.as_deref(), *window, *tolerance),
        Command::Verify { what } => verify(&cfg, what),
        Command::Predict { .. } => unreachable!(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
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
