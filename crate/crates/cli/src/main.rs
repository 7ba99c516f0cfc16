use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use hlab::cones::SolverOptions;
use hlab::corpus;
use hlab::deform::{parse_family, sweep, tau_section, DeformationFamily, Grid, SweepOptions};
use hlab::metric::{HermitianMetric, IdentityName};
use hlab::parser::{parse_metric, parse_model};
use hlab::report::{
    analyze, claim_statement, analyze_text, cones, cones_text, identities, identities_text, serialize_report, sweep_text, AnalyzeConfig,
    FullReport,
};
use hlab::scalar::parse_q;
use hlab::{LieComplexModel, Q};

#[derive(Parser, Debug)]
#[command(name = "hlab", version, about = "Cohomology, metric identities, cones and deformations of complex nilmanifold models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Cohomology tables, Frölicher pages, property verdicts and metric feasibility.
    Analyze {
        /// Corpus name or path to a model file.
        model: String,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        solver: Solver,
        /// Degrees for the per-degree checks (repeatable); all degrees by default.
        #[arg(long = "k")]
        ks: Vec<usize>,
        /// Skip the metric feasibility searches.
        #[arg(long)]
        no_feasibility: bool,
    },
    /// Evaluate the operator identity registry.
    Identities {
        model: String,
        #[command(flatten)]
        common: Common,
        /// Identity ids to check (repeatable); all by default.
        #[arg(long = "id")]
        ids: Vec<String>,
        /// Evaluate Kähler-only identities on non-Kähler metrics and report their residuals.
        #[arg(long)]
        expect_violation: bool,
    },
    /// Sweep a deformation family over a symmetric grid of t.
    Sweep {
        /// Corpus family name or path to a family file.
        family: String,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        solver: Solver,
        /// Grid as step:count, giving 2*count+1 points.
        #[arg(long, default_value = "1/8:8")]
        grid: String,
        #[arg(long)]
        no_feasibility: bool,
        /// Also compute the section t -> τ_ω(t) for the metric.
        #[arg(long)]
        tau: bool,
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Metric feasibility, the E_2 sG class, j_ω and cone memberships.
    Cones {
        model: String,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        solver: Solver,
    },
    /// Analyze, identities and cones in one report.
    Report {
        model: String,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        solver: Solver,
        #[arg(long)]
        expect_violation: bool,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Nonzero rational h (repeatable), e.g. --h 2 --h -1/3. Defaults to 1, and to 1 and 2 for identities and report.
    #[arg(long = "h", allow_hyphen_values = true, value_parser = parse_h)]
    hs: Vec<Q>,
    /// `identity`, `model` (the file's metric block, else identity) or a metric file.
    #[arg(long, default_value = "model")]
    metric: String,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct Solver {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    restarts: Option<usize>,
    /// Largest denominator tried when rationalizing certificates.
    #[arg(long)]
    rationalize_bound: Option<u64>,
}

impl Solver {
    fn options(&self, default_restarts: usize) -> SolverOptions {
        let mut o = SolverOptions { seed: self.seed, restarts: self.restarts.unwrap_or(default_restarts), ..SolverOptions::default() };
        if let Some(b) = self.rationalize_bound {
            o.bound = b;
        }
        o
    }
}

#[derive(Clone, Copy, Debug, PartialEq, ValueEnum)]
enum Format {
    Text,
    Json,
}

fn parse_h(s: &str) -> Result<Q, String> {
    let h = parse_q(s).ok_or_else(|| format!("not a rational number: {s}"))?;
    if h == Q::from_integer(0.into()) {
        return Err("h must be nonzero".into());
    }
    Ok(h)
}

/// Ordinary failure (exit 1).
struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

fn source(arg: &str, bundled: fn(&str) -> Option<&'static str>) -> Result<String, Failure> {
    let p = Path::new(arg);
    if p.is_file() {
        return std::fs::read_to_string(p).map_err(|e| Failure(format!("{arg}: {e}")));
    }
    bundled(arg).map(str::to_string).ok_or_else(|| Failure(format!("{arg}: no such file or bundled name")))
}

fn load_model(arg: &str) -> Result<LieComplexModel, Failure> {
    let text = source(arg, corpus::model_source)?;
    parse_model(&text).map_err(|e| Failure(format!("{arg}:{e}")))
}

fn load_family(arg: &str) -> Result<DeformationFamily, Failure> {
    let text = source(arg, corpus::family_source)?;
    parse_family(&text).map_err(|e| Failure(format!("{arg}: {e}")))
}

fn load_metric(sel: &str, model: &LieComplexModel) -> Result<HermitianMetric, Failure> {
    let n = model.n();
    match sel {
        "identity" => Ok(HermitianMetric::identity(n)),
        "model" => Ok(HermitianMetric::for_model(model)?),
        path => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure(format!("{path}: {e}")))?;
            let g = parse_metric(&text, n).map_err(|e| Failure(format!("{path}:{e}")))?;
            Ok(HermitianMetric::new(g)?)
        }
    }
}

fn hs(common: &Common, default: &[i64]) -> Vec<Q> {
    if common.hs.is_empty() {
        default.iter().map(|h| Q::from_integer((*h).into())).collect()
    } else {
        common.hs.clone()
    }
}

fn emit(common: &Common, json: String, text: String) -> Result<(), Failure> {
    let body = match common.format {
        Format::Json => json,
        Format::Text => text,
    };
    match &common.out {
        Some(p) => std::fs::write(p, body).map_err(|e| Failure(format!("{}: {e}", p.display()))),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

/// Runs a command; `Ok(true)` means a falsified-theorem event.
fn run(cmd: Command) -> Result<bool, Failure> {
    match cmd {
        Command::Analyze { model, common, solver, ks, no_feasibility } => {
            let m = load_model(&model)?;
            let cfg = AnalyzeConfig {
                hs: hs(&common, &[1]),
                ks: (!ks.is_empty()).then_some(ks),
                metric: Some(load_metric(&common.metric, &m)?),
                solver: solver.options(SolverOptions::default().restarts),
                feasibility: !no_feasibility,
            };
            let r = analyze(&m, &cfg);
            emit(&common, serialize_report(&r), analyze_text(&r))?;
            report_violations(r.violations.iter().map(|v| (&v.check, &v.statement, &v.detail)))
        }
        Command::Identities { model, common, ids, expect_violation } => {
            let m = load_model(&model)?;
            let g = load_metric(&common.metric, &m)?;
            let ids = if ids.is_empty() {
                IdentityName::ALL.to_vec()
            } else {
                ids.iter()
                    .map(|s| IdentityName::parse(s).ok_or_else(|| Failure(format!("unknown identity id: {s}"))))
                    .collect::<Result<Vec<_>, _>>()?
            };
            let r = identities(&m, &g, &ids, &hs(&common, &[1, 2]), expect_violation);
            emit(&common, serialize_report(&r), identities_text(&r))?;
            report_violations(r.violations.iter().map(|v| (&v.check, &v.statement, &v.detail)))
        }
        Command::Sweep { family, common, solver, grid, no_feasibility, tau, inject_fault } => {
            let fam = load_family(&family)?;
            let grid = Grid::parse(&grid)?;
            let opts = SweepOptions {
                hs: hs(&common, &[1]),
                solver: solver.options(SweepOptions::default().solver.restarts),
                feasibility: !no_feasibility,
                inject_fault,
            };
            let r = sweep(&fam, &grid, &opts)?;
            let mut json = serde_json::to_value(&r)?;
            let mut text = sweep_text(&r);
            if tau {
                let g = load_metric(&common.metric, &fam.base)?;
                let section = tau_section(&fam, &g, &grid, opts.solver.bound)?.summary();
                text += &format!(
                    "tau: max jump {:.6} (grid) {:.6} (refined), root residual {:e}, all closed {}\n",
                    section.jump_coarse, section.jump_fine, section.max_root_residual, section.all_closed
                );
                json["tau"] = serde_json::to_value(&section)?;
            }
            emit(&common, serialize_report(&json), text)?;
            let bad: Vec<(String, String, String)> = r
                .claims
                .iter()
                .filter(|c| c.applicable && !c.holds)
                .flat_map(|c| c.violations.iter().map(move |v| (c.claim.clone(), claim_statement(&c.claim).to_string(), format!("t = {}: {}", v.t, v.detail))))
                .collect();
            report_violations(bad.iter().map(|(a, b, c)| (a, b, c)))
        }
        Command::Cones { model, common, solver } => {
            let m = load_model(&model)?;
            let g = load_metric(&common.metric, &m)?;
            let r = cones(&m, &g, &solver.options(SolverOptions::default().restarts));
            emit(&common, serialize_report(&r), cones_text(&r))?;
            report_violations(r.violations.iter().map(|v| (&v.check, &v.statement, &v.detail)))
        }
        Command::Report { model, common, solver, expect_violation } => {
            let m = load_model(&model)?;
            let g = load_metric(&common.metric, &m)?;
            let so = solver.options(SolverOptions::default().restarts);
            let hs = hs(&common, &[1, 2]);
            let cfg = AnalyzeConfig { hs: hs.clone(), ks: None, metric: Some(g.clone()), solver: so, feasibility: true };
            let r = FullReport {
                analyze: analyze(&m, &cfg),
                identities: identities(&m, &g, &IdentityName::ALL, &hs, expect_violation),
                cones: cones(&m, &g, &so),
            };
            let text = format!("{}\n{}\n{}", analyze_text(&r.analyze), identities_text(&r.identities), cones_text(&r.cones));
            emit(&common, serialize_report(&r), text)?;
            let all = r.analyze.violations.iter().chain(&r.identities.violations).chain(&r.cones.violations);
            report_violations(all.map(|v| (&v.check, &v.statement, &v.detail)))
        }
    }
}

fn report_violations<'a>(vs: impl Iterator<Item = (&'a String, &'a String, &'a String)>) -> Result<bool, Failure> {
    let mut any = false;
    for (check, statement, detail) in vs {
        eprintln!("hlab: FALSIFIED {check}: {statement}; witness: {detail}");
        any = true;
    }
    Ok(any)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(2),
        Err(Failure(msg)) => {
            eprintln!("hlab: {msg}");
            ExitCode::from(1)
        }
    }
}
