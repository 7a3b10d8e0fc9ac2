use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::json;

use hartogs_lab::approximant::{build_smooth_approximant, verify_approximant, ModeSign};
use hartogs_lab::extension::{builtin, cauchy_slice_extend, default_rho, BUILTIN_NAMES};
use hartogs_lab::families::{
    annulus_map, certify_family, default_eta_radius, default_r_schedule, disc_map, eta_grid, limit_graph,
    write_slices_csv, FamilyKind,
};
use hartogs_lab::hypothesis::classify;
use hartogs_lab::input::{LoadedInput, ModeForm};
use hartogs_lab::polar::{RadialModeSeries, TubeNeighborhood};
use hartogs_lab::pseudoconvexity::wermer_delta_star_bound;
use hartogs_lab::report::{block, to_json_string, RunReport, Timings};
use hartogs_lab::worked::{cutoff_example, rosay_example, wermer_example, ExampleReport};
use hartogs_lab::{LabError, Result};

const AFTER_HELP: &str = "\
Inputs:
  mode form   JSON {\"m\", \"grid\"?, \"components\": [[{\"n\", \"profile\"}]]}
  sample form CSV with header r,theta,j,re,im on a polar grid

Slice CSV (family --csv) columns:
  r, eta_index, abs_zeta, arg_zeta, component, re, im

Exit codes: 0 ok, 2 parse or usage, 3 hypothesis, 4 budget, 5 certificate.
HARTOGS_LAB_THREADS caps the worker thread count.";

#[derive(Parser)]
#[command(name = "hartogs-lab", version, about = "Numerical checks for Hartogs-Chirka extension configurations", after_help = AFTER_HELP)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct Output {
    /// Report path (default stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Include wall-clock timings in the report.
    #[arg(long, global = true)]
    timings: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Classify a map against the extension theorems.
    Analyze { input: PathBuf },
    /// Build and verify a smooth approximant.
    Approximate {
        input: PathBuf,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, value_enum, default_value_t = SignArg::Auto)]
        mode_sign: SignArg,
        /// Where to write the approximant (mode form plus ledger).
        #[arg(long)]
        approximant_out: Option<PathBuf>,
    },
    /// Certify the annulus or disc family of an approximant.
    Family {
        approximant: PathBuf,
        /// Map whose graph the tube surrounds (default: the approximant).
        #[arg(long)]
        center: Option<PathBuf>,
        #[arg(long, default_value_t = 0.2)]
        tube_rg: f64,
        #[arg(long, default_value_t = 0.1)]
        tube_rb: f64,
        #[arg(long, default_value_t = 40)]
        slices: usize,
        /// Translates per axis of the eta square.
        #[arg(long, default_value_t = 5)]
        eta_grid: usize,
        /// Translate radius (default: derived from the slack).
        #[arg(long)]
        eta_radius: Option<f64>,
        #[arg(long, value_enum, default_value_t = KindArg::Annulus)]
        kind: KindArg,
        /// Slice dump path (CSV).
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Reproduce the worked examples.
    Examples {
        #[command(subcommand)]
        which: Example,
    },
    /// Evaluate the Cauchy-slice extension of a built-in reference function.
    #[command(
        after_help = "Built-ins: inv3 1/(3-z-w), monomial z^2 w^3, w-pole 1/(w-2), product 1/((2-z)(2+w)),\n\
quadric 1/(4-z^2-w^2), shifted (1+zw)/(z-3i-w), double-pole w/(2.5-z)^2"
    )]
    Extend {
        #[arg(long = "f")]
        function: String,
        /// `re,im`
        #[arg(long, allow_hyphen_values = true)]
        z: String,
        /// `re,im[,re,im...]`
        #[arg(long, allow_hyphen_values = true)]
        w: String,
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long, default_value_t = 0.1)]
        collar_width: f64,
        #[arg(long, default_value_t = 256)]
        nodes: usize,
    },
}

#[derive(Subcommand)]
enum Example {
    Cutoff {
        #[arg(long = "n", default_value_t = 3)]
        n: u32,
    },
    Wermer,
    Rosay {
        #[arg(long, default_value_t = 0.1)]
        s: f64,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        #[arg(long = "bigN")]
        big_n: Option<u32>,
        #[arg(long)]
        alpha: Option<f64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SignArg {
    Auto,
    TwoSided,
    Nonneg,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    /// Disc for approximants built from nonnegative modes, annulus otherwise.
    Auto,
    Annulus,
    Disc,
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| LabError::Parse(format!("{}: {e}", path.display())))
}

fn text(bytes: &[u8], path: &Path) -> Result<String> {
    String::from_utf8(bytes.to_vec()).map_err(|_| LabError::Parse(format!("{}: not UTF-8", path.display())))
}

fn load_series(path: &Path) -> Result<(Vec<u8>, RadialModeSeries)> {
    let bytes = read(path)?;
    let series = LoadedInput::parse(&text(&bytes, path)?)?.series()?;
    Ok((bytes, series))
}

fn parse_complex_list(s: &str, field: &str) -> Result<Vec<Complex64>> {
    let nums = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|_| LabError::Parse(format!("--{field}: expected comma-separated numbers, got {s:?}")))?;
    if nums.is_empty() || nums.len() % 2 != 0 {
        return Err(LabError::Parse(format!("--{field}: expected re,im pairs, got {s:?}")));
    }
    Ok(nums.chunks(2).map(|p| Complex64::new(p[0], p[1])).collect())
}

fn example_block(rep: &mut RunReport, ex: &ExampleReport) -> Result<()> {
    rep.examples = Some(block(ex)?);
    if !ex.pass() {
        let failed: Vec<&str> = ex.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
        return Err(LabError::Certificate(format!(
            "{} example checks failed: {}",
            ex.name,
            failed.join(", ")
        )));
    }
    Ok(())
}

fn run(cmd: Cmd, rep: &mut RunReport, t: &mut Timings) -> Result<()> {
    match cmd {
        Cmd::Analyze { input, .. } => {
            let (bytes, series) = t.time("parse", || load_series(&input))?;
            rep.input_digest = Some(hartogs_lab::report::digest(&bytes));
            let hyp = t.time("classify", || classify(&series));
            rep.hypothesis = Some(block(&hyp)?);
        }
        Cmd::Approximate {
            input,
            epsilon,
            mode_sign,
            approximant_out,
            ..
        } => {
            if !(epsilon > 0.0 && epsilon.is_finite()) {
                return Err(LabError::Parameter(format!(
                    "--epsilon must be positive, got {epsilon}"
                )));
            }
            let (bytes, series) = t.time("parse", || load_series(&input))?;
            rep.input_digest = Some(hartogs_lab::report::digest(&bytes));
            rep.hypothesis = Some(block(&classify(&series))?);
            let sign = match mode_sign {
                SignArg::Auto => None,
                SignArg::TwoSided => Some(ModeSign::TwoSided),
                SignArg::Nonneg => Some(ModeSign::Nonneg),
            };
            let g = t.time("approximate", || build_smooth_approximant(&series, epsilon, sign))?;
            rep.ledger = Some(block(&g.ledger)?);
            let v = t.time("verify", || verify_approximant(&series, &g));
            rep.verify = Some(block(&v)?);
            if let Some(path) = approximant_out {
                fs::write(&path, to_json_string(&ModeForm::from_approximant(&g))?)?;
            }
            if !v.pass {
                let worst = v.worst().map(|f| (f.name.clone(), f.worst_slack)).unwrap_or_default();
                return Err(LabError::Construction {
                    budget: worst.0,
                    slack: worst.1,
                });
            }
        }
        Cmd::Family {
            approximant,
            center,
            tube_rg,
            tube_rb,
            slices,
            eta_grid: per_axis,
            eta_radius,
            kind,
            csv,
            ..
        } => {
            let bytes = read(&approximant)?;
            rep.input_digest = Some(hartogs_lab::report::digest(&bytes));
            let form = LoadedInput::parse(&text(&bytes, &approximant)?)?;
            let LoadedInput::Modes(form) = form else {
                return Err(LabError::Parse("family needs an approximant in mode form".into()));
            };
            let g = form.approximant()?;
            let f = match &center {
                Some(p) => load_series(p)?.1,
                None => g.series.clone(),
            };
            let kind = match kind {
                KindArg::Annulus => FamilyKind::Annulus,
                KindArg::Disc => FamilyKind::Disc,
                KindArg::Auto if g.mode_sign == ModeSign::Nonneg => FamilyKind::Disc,
                KindArg::Auto => FamilyKind::Annulus,
            };
            if !(tube_rg > 0.0) || !(tube_rb >= 0.0) {
                return Err(LabError::Parameter(
                    "--tube-rg must be positive and --tube-rb nonnegative".into(),
                ));
            }
            let tube = TubeNeighborhood::new(tube_rg, tube_rb, f.clone())?;
            let radius = match eta_radius {
                Some(r) => r,
                None => default_eta_radius(&f, &g.series, &tube, kind),
            };
            let etas = eta_grid(g.series.m(), radius, per_axis);
            let sched = default_r_schedule(kind, g.series.grid.r_min(), slices);
            let cert = t.time("certify", || certify_family(&g.series, &tube, kind, &etas, &sched))?;
            let psi = limit_graph(&g.series, kind, &vec![Complex64::new(0.0, 0.0); g.series.m()])?;
            rep.kontinuitaetssatz = Some(json!({
                "certificate": block(&cert)?,
                "eta_radius": radius,
                "psi": block(&psi)?,
            }));
            if let Some(path) = csv {
                let mut dump = Vec::new();
                for &r in &sched {
                    for (i, e) in etas.iter().enumerate() {
                        let s = match kind {
                            FamilyKind::Annulus => annulus_map(&g.series, r, e),
                            FamilyKind::Disc => disc_map(&g.series, r, e),
                        };
                        // Slices past the certificate's first failure are still dumped when defined.
                        if let Ok(s) = s {
                            dump.push((i, s));
                        }
                    }
                }
                write_slices_csv(fs::File::create(&path)?, &dump)?;
            }
            if !cert.pass {
                return Err(LabError::Certificate(
                    cert.first_failure.unwrap_or_else(|| "unknown".into()),
                ));
            }
        }
        Cmd::Examples { which, .. } => match which {
            Example::Cutoff { n } => {
                let ex = t.time("cutoff", || cutoff_example(n))?;
                example_block(rep, &ex)?;
            }
            Example::Wermer => {
                let ex = t.time("wermer", wermer_example)?;
                rep.pseudoconvexity = Some(json!({
                    "delta_star": block(&wermer_delta_star_bound())?,
                    "total_reality_margin": ex.constants.get("total_reality_margin"),
                }));
                example_block(rep, &ex)?;
            }
            Example::Rosay { s, delta, big_n, alpha } => {
                let ex = t.time("rosay", || rosay_example(s, delta, big_n, alpha))?;
                example_block(rep, &ex)?;
            }
        },
        Cmd::Extend {
            function,
            z,
            w,
            rho,
            collar_width,
            nodes,
            ..
        } => {
            let f = builtin(&function).ok_or_else(|| {
                LabError::Parse(format!(
                    "--f: unknown function {function:?}; built-ins: {}",
                    BUILTIN_NAMES.join(", ")
                ))
            })?;
            let z = parse_complex_list(&z, "z")?;
            if z.len() != 1 {
                return Err(LabError::Parse("--z: expected a single re,im pair".into()));
            }
            let w = parse_complex_list(&w, "w")?;
            let rho = rho.unwrap_or_else(|| default_rho(collar_width));
            let value = cauchy_slice_extend(&f, rho, z[0], &w, nodes)?;
            let reference = f.extension(z[0], &w);
            rep.extension = Some(json!({
                "function": f.name,
                "singularity": f.singularity,
                "z": block(&z[0])?,
                "w": block(&w)?,
                "rho": rho,
                "quad_nodes": nodes,
                "value": block(&value)?,
                "reference": reference.map(|r| block(&r)).transpose()?,
                "abs_deviation": reference.map(|r| (r - value).norm()),
            }));
        }
    }
    Ok(())
}

fn init_threads() {
    if let Ok(v) = std::env::var("HARTOGS_LAB_THREADS") {
        match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => eprintln!("warning: ignoring HARTOGS_LAB_THREADS={v:?}"),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads();
    let name = match &cli.cmd {
        Cmd::Analyze { .. } => "analyze",
        Cmd::Approximate { .. } => "approximate",
        Cmd::Family { .. } => "family",
        Cmd::Examples { .. } => "examples",
        Cmd::Extend { .. } => "extend",
    };
    let Output { out, timings } = cli.output;
    let mut rep = RunReport::new(name);
    let mut t = Timings::default();
    if let Err(e) = run(cli.cmd, &mut rep, &mut t) {
        eprintln!("error: {e}");
        rep.fail(&e);
    }
    if timings {
        rep.timings = Some(t.into_map());
    }
    let written = rep.to_json().and_then(|s| match &out {
        Some(p) => fs::write(p, s).map_err(LabError::from),
        None => {
            print!("{s}");
            Ok(())
        }
    });
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    ExitCode::from(rep.status.exit_code as u8)
}
