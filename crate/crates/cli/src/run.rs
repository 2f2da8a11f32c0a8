//! Subcommand implementations. Every command writes plain CSV and `key = value`
//! text files into the output directory and returns the text echoed to stdout.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use dphase::eigen::{signed_pow, solve_first_eigenpair_with, EigenPair};
use dphase::function::FemFunction;
use dphase::nonlinearity::{check_hf, HfSampling, Nonlinearity};
use dphase::orlicz::{check_hypotheses, check_sandwich, critical_exponent, luxemburg_norm};
use dphase::solver::{find_lower_constant, find_upper_constant, sample_points, solve_branch, Branch, SolveReport, DEFAULT_CAP};
use dphase::verify::{check_hg, moser_identity_check, sup_norm_report, weak_residual, GrowthConstants, HgSampling};
use dphase::{Point, Problem};

use crate::config::{ConfigError, ExperimentConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error:\n{0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Solver(#[from] dphase::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use dphase::Error as E;
        match self {
            CliError::Config(_) | CliError::Usage(_) => 2,
            CliError::Io { .. } => 1,
            CliError::Solver(e) => match e {
                E::InvalidInput(_) | E::UnknownStrategy { .. } | E::Superlinearity { .. } => 2,
                E::Gate { .. } => 3,
                E::Convergence { .. } | E::Positivity { .. } | E::Seed { .. } => 4,
                E::Verification(_) => 5,
                E::Io(_) => 1,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Eigen,
    Solve,
    Sweep,
    Verify,
    Check,
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out: PathBuf,
    /// Solution CSV read by `verify`; defaults to `u_plus.csv` in the output directory.
    pub solution: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub summary: String,
    pub files: Vec<PathBuf>,
}

fn write(dir: &Path, name: &str, text: &str, files: &mut Vec<PathBuf>) -> Result<(), CliError> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    files.push(path);
    Ok(())
}

pub fn run(cmd: Command, cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunOutcome, CliError> {
    fs::create_dir_all(&opts.out).map_err(|source| CliError::Io {
        path: opts.out.clone(),
        source,
    })?;
    match cmd {
        Command::Eigen => run_eigen(cfg, &opts.out),
        Command::Solve => run_solve(cfg, &opts.out),
        Command::Sweep => run_sweep(cfg, &opts.out),
        Command::Verify => {
            let path = opts.solution.clone().unwrap_or_else(|| opts.out.join("u_plus.csv"));
            run_verify(cfg, &path, &opts.out)
        }
        Command::Check => run_check(cfg, &opts.out),
    }
}

fn eigenpair(cfg: &ExperimentConfig, problem: &Problem) -> Result<EigenPair, CliError> {
    Ok(solve_first_eigenpair_with(problem.mesh(), problem.p(), &cfg.eigen_options())?)
}

fn run_eigen(cfg: &ExperimentConfig, out: &Path) -> Result<RunOutcome, CliError> {
    let problem = cfg.build_problem()?;
    let pair = eigenpair(cfg, &problem)?;
    let mut files = Vec::new();
    let summary = format!("{}\n", pair.summary_line());
    write(out, "eigenpair.csv", &pair.eigenfunction.to_csv(), &mut files)?;
    write(out, "eigen_summary.txt", &summary, &mut files)?;
    Ok(RunOutcome { summary, files })
}

pub const TABLE_HEADER: &str = "lambda,lambda1,u_bar,v_bar,phi_plus,phi_minus,sup_plus,sup_minus,\
residual_plus,residual_minus,original_residual_plus,original_residual_minus,iterations_plus,iterations_minus,status";

/// Both branches at one `λ`.
pub struct PairOutcome {
    pub lambda: f64,
    pub lambda1: f64,
    pub result: Result<(SolveReport, SolveReport), dphase::Error>,
}

impl PairOutcome {
    pub fn table_row(&self) -> String {
        match &self.result {
            Ok((pos, neg)) => {
                let opt = |v: Option<f64>| v.map_or(String::new(), |v| v.to_string());
                format!(
                    "{},{},{},{},{},{},{},{},{:e},{:e},{:e},{:e},{},{},ok",
                    self.lambda,
                    self.lambda1,
                    opt(pos.bar),
                    opt(neg.bar),
                    pos.phi_value,
                    neg.phi_value,
                    pos.solution.sup_norm(),
                    neg.solution.sup_norm(),
                    pos.residual_dual_norm,
                    neg.residual_dual_norm,
                    pos.original_residual,
                    neg.original_residual,
                    pos.iterations,
                    neg.iterations
                )
            }
            Err(e) => {
                let status = match e {
                    dphase::Error::Gate { .. } => "gate error".to_string(),
                    other => other.to_string().replace([',', '\n'], ";"),
                };
                format!("{},{},,,,,,,,,,,,,{status}", self.lambda, self.lambda1)
            }
        }
    }
}

pub fn solve_pair(cfg: &ExperimentConfig, problem: &Problem, f: &Arc<dyn Nonlinearity>, eigen: &EigenPair, lambda: f64) -> PairOutcome {
    let opts = cfg.solve_options();
    let (pos, neg) = rayon::join(
        || solve_branch(problem, f.clone(), lambda, Branch::Positive, eigen, &opts),
        || solve_branch(problem, f.clone(), lambda, Branch::Negative, eigen, &opts),
    );
    PairOutcome {
        lambda,
        lambda1: eigen.lambda,
        result: pos.and_then(|p| neg.map(|n| (p, n))),
    }
}

fn run_solve(cfg: &ExperimentConfig, out: &Path) -> Result<RunOutcome, CliError> {
    let problem = cfg.build_problem()?;
    let f = cfg.build_f()?;
    let eigen = eigenpair(cfg, &problem)?;
    let lambdas = cfg.lambda.resolve(eigen.lambda);
    if lambdas.len() != 1 {
        return Err(CliError::Usage(format!(
            "solve takes a single lambda but {} were given; use sweep",
            lambdas.len()
        )));
    }
    let outcome = solve_pair(cfg, &problem, &f, &eigen, lambdas[0]);
    let row = outcome.table_row();
    let (pos, neg) = outcome.result?;

    let mut files = Vec::new();
    write(out, "eigenpair.csv", &eigen.eigenfunction.to_csv(), &mut files)?;
    write(out, "u_plus.csv", &pos.solution.to_csv(), &mut files)?;
    write(out, "u_minus.csv", &neg.solution.to_csv(), &mut files)?;
    write(out, "summary.csv", &format!("{TABLE_HEADER}\n{row}\n"), &mut files)?;
    let detail = format!(
        "{}\n[positive]\n{}\n[negative]\n{}",
        eigen.summary_line(),
        pos.to_summary(),
        neg.to_summary()
    );
    write(out, "solve_summary.txt", &detail, &mut files)?;
    Ok(RunOutcome {
        summary: format!("{TABLE_HEADER}\n{row}\n"),
        files,
    })
}

fn run_sweep(cfg: &ExperimentConfig, out: &Path) -> Result<RunOutcome, CliError> {
    let problem = cfg.build_problem()?;
    let f = cfg.build_f()?;
    let eigen = eigenpair(cfg, &problem)?;
    let lambdas = cfg.lambda.resolve(eigen.lambda);
    let outcomes: Vec<PairOutcome> = lambdas
        .par_iter()
        .map(|&lambda| solve_pair(cfg, &problem, &f, &eigen, lambda))
        .collect();

    let mut files = Vec::new();
    write(out, "eigenpair.csv", &eigen.eigenfunction.to_csv(), &mut files)?;
    for (i, o) in outcomes.iter().enumerate() {
        if let Ok((pos, neg)) = &o.result {
            write(out, &format!("u_plus_{i}.csv"), &pos.solution.to_csv(), &mut files)?;
            write(out, &format!("u_minus_{i}.csv"), &neg.solution.to_csv(), &mut files)?;
        }
    }
    let mut table = format!("{TABLE_HEADER}\n");
    for o in &outcomes {
        table.push_str(&o.table_row());
        table.push('\n');
    }
    write(out, "sweep.csv", &table, &mut files)?;
    Ok(RunOutcome { summary: table, files })
}

fn single_lambda(cfg: &ExperimentConfig, problem: &Problem) -> Result<(f64, Option<f64>), CliError> {
    if cfg.lambda.values.len() != 1 {
        return Err(CliError::Usage("this command takes a single lambda".into()));
    }
    match cfg.lambda.mode {
        crate::config::LambdaMode::Absolute => Ok((cfg.lambda.values[0], None)),
        crate::config::LambdaMode::Multiple => {
            let l1 = eigenpair(cfg, problem)?.lambda;
            Ok((cfg.lambda.values[0] * l1, Some(l1)))
        }
    }
}

fn run_verify(cfg: &ExperimentConfig, solution: &Path, out: &Path) -> Result<RunOutcome, CliError> {
    let problem = cfg.build_problem()?;
    let f = cfg.build_f()?;
    let text = fs::read_to_string(solution).map_err(|source| CliError::Io {
        path: solution.to_path_buf(),
        source,
    })?;
    let u = FemFunction::from_csv(problem.mesh().clone(), &text)?;
    let (lambda, _) = single_lambda(cfg, &problem)?;
    let p = problem.p();
    let rhs = |x: &Point, s: f64| lambda * signed_pow(s, p - 1.0) - f.value(x, s);
    let residual = weak_residual(&problem, &u, &rhs);

    let mut s = format!("solution = {}\nlambda = {lambda}\n", solution.display());
    s.push_str(&format!(
        "residual_max = {:e}\nresidual_euclidean = {:e}\n",
        residual.max_abs, residual.euclidean
    ));
    let mut failures = Vec::new();
    if !(residual.euclidean <= cfg.solver.tol) {
        failures.push(format!("residual {:e} exceeds {:e}", residual.euclidean, cfg.solver.tol));
    }

    // Nonpositive solutions are checked through -u with the mirrored right-hand side.
    let sign = if u.min_value() >= -1e-10 {
        Some(1.0)
    } else if u.max_value() <= 1e-10 {
        Some(-1.0)
    } else {
        None
    };
    let samples = sample_points(&problem);
    match sign {
        None => s.push_str("sign = mixed\nmoser = skipped\n"),
        Some(sg) => {
            s.push_str(&format!("sign = {}\n", if sg > 0.0 { "nonnegative" } else { "nonpositive" }));
            let bar = if sg > 0.0 {
                find_upper_constant(f.as_ref(), lambda, p, &samples, DEFAULT_CAP)
            } else {
                find_lower_constant(f.as_ref(), lambda, p, &samples, DEFAULT_CAP)
            };
            match bar {
                Ok(bar) => {
                    let sup = sup_norm_report(&u, Some(bar));
                    s.push_str(&format!("bar = {bar}\nsup = {}\nwithin_bar = {}\n", sup.sup, sup.within_bar == Some(true)));
                    if sup.within_bar != Some(true) {
                        failures.push(format!("sup norm {} exceeds |bar| = {}", sup.sup, bar.abs()));
                    }
                }
                Err(e) => s.push_str(&format!("bar = none ({e})\n")),
            }
            let w = u.scaled(sg);
            let g = |x: &Point, t: f64, _: &Point| sg * rhs(x, sg * t);
            let h = w.sup_norm() / 2.0;
            if h > 0.0 {
                let moser = moser_identity_check(&problem, &w, &g, h, 1.0)?;
                s.push_str(&moser.to_summary());
                if !moser.mu_terms_nonnegative(1e-12) {
                    failures.push("negative μ-weighted terms in the truncated test identity".into());
                }
            } else {
                s.push_str("moser = skipped\n");
            }
        }
    }
    s.push_str(&format!("status = {}\n", if failures.is_empty() { "ok" } else { "failed" }));
    let mut files = Vec::new();
    write(out, "verify_summary.txt", &s, &mut files)?;
    if !failures.is_empty() {
        return Err(dphase::Error::Verification(failures.join("; ")).into());
    }
    Ok(RunOutcome { summary: s, files })
}

/// Random nodal values in `[-scale, scale]` with a random scale over several decades.
fn random_function(problem: &Problem, rng: &mut ChaCha8Rng) -> FemFunction {
    let scale = 10f64.powf(rng.gen_range(-2.0..2.0));
    let n = problem.mesh().num_dofs();
    let dofs: Vec<f64> = (0..n).map(|_| scale * rng.gen_range(-1.0..1.0)).collect();
    FemFunction::from_dofs(problem.mesh().clone(), &dofs)
}

fn run_check(cfg: &ExperimentConfig, out: &Path) -> Result<RunOutcome, CliError> {
    let problem = cfg.build_problem()?;
    let f = cfg.build_f()?;
    let exps = problem.exps();
    let mut s = String::new();
    let hyp = check_hypotheses(exps, problem.mu().as_ref(), problem.mesh());
    s.push_str(&hyp.to_summary());
    let verts = problem.mesh().vertices();
    let stride = (verts.len() / 25).max(1);
    let pts: Vec<Point> = verts.iter().step_by(stride).copied().collect();
    let hf = check_hf(f.as_ref(), exps.p, exps.q, &HfSampling::new(pts.clone()));
    s.push_str(&hf.to_summary());

    // Growth of the full right-hand side at λ = 1, with r taken from f when it has one.
    let crit = critical_exponent(exps.p, exps.n);
    let r = cfg
        .f_params
        .get("r")
        .filter(|&r| r > exps.q && r <= crit)
        .unwrap_or(if crit.is_finite() { 0.5 * (exps.q + crit) } else { exps.q + 1.0 });
    let p = exps.p;
    let g = |x: &Point, t: f64, _: &Point| signed_pow(t, p - 1.0) - f.value(x, t);
    let unit = GrowthConstants::new(1.0, 1.0, 1.0, r, exps.p, exps.q, exps.n)?;
    let hg = check_hg(&g, &unit, p, &HgSampling::new(pts));
    s.push_str(&format!("hg_r = {r}\n"));
    s.push_str(&hg.to_summary());

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.solver.seed);
    let mut sandwich_violations = 0;
    let mut homogeneity_violations = 0;
    let mut monotonicity_violations = 0;
    let mut worst_gap = f64::INFINITY;
    for _ in 0..cfg.solver.samples {
        let u = random_function(&problem, &mut rng);
        let v = random_function(&problem, &mut rng);
        if !check_sandwich(&u, problem.mu().as_ref(), exps)?.holds {
            sandwich_violations += 1;
        }
        let t = rng.gen_range(-3.0..3.0);
        let nu = luxemburg_norm(&u, problem.mu().as_ref(), exps)?;
        let ntu = luxemburg_norm(&u.scaled(t), problem.mu().as_ref(), exps)?;
        if (ntu - t.abs() * nu).abs() > 1e-8 * (1.0 + t.abs() * nu) {
            homogeneity_violations += 1;
        }
        let gap = problem.monotonicity_gap(&u, &v);
        worst_gap = worst_gap.min(gap);
        if gap < -1e-12 {
            monotonicity_violations += 1;
        }
    }
    s.push_str(&format!(
        "property_seed = {}\nproperty_samples = {}\nsandwich_violations = {sandwich_violations}\n\
homogeneity_violations = {homogeneity_violations}\nmonotonicity_violations = {monotonicity_violations}\n\
min_monotonicity_gap = {worst_gap:e}\n",
        cfg.solver.seed, cfg.solver.samples
    ));
    let mut files = Vec::new();
    write(out, "check_summary.txt", &s, &mut files)?;
    let total = sandwich_violations + homogeneity_violations + monotonicity_violations;
    if total > 0 {
        return Err(dphase::Error::Verification(format!("{total} property violations")).into());
    }
    Ok(RunOutcome { summary: s, files })
}
