//! `swl`: command-line driver for the lattice Seiberg–Witten solver.
//!
//! Exit status: 0 on success, 1 on invalid input, 2 when a solve does not
//! converge or a numerical check fails.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use swlattice::bounds::{cubic_bound, cubic_solve, phi_bound_check, regularity_report};
use swlattice::fields::apply_gauge;
use swlattice::functional::{sw_energy, sw_gradient};
use swlattice::gauge::coulomb_fix;
use swlattice::io::{parse_dims, read_form, write_form, FieldFile, FieldKind, Report, RunConfig};
use swlattice::lattice::{lp_norm, DIM};
use swlattice::refine::{run_study, Study};
use swlattice::rng::SplitMix64;
use swlattice::solver::{manufacture, random_perturbation, residual, smooth_seed, solve, TraceRow};
use swlattice::{
    BoundaryData, Domain, FieldPair, Form, GaugeTransform, KgSpec, Mode, SourcePair, Spinor,
};

const EXIT_INVALID: u8 = 1;
const EXIT_UNCONVERGED: u8 = 2;

#[derive(Parser)]
#[command(
    name = "swl",
    version,
    about = "Lattice Seiberg-Witten boundary value problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Minimise the functional for a source and boundary data.
    Solve {
        #[arg(long)]
        mode: Option<Mode>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// 1-form source; zero when omitted.
        #[arg(long)]
        theta: Option<PathBuf>,
        /// Spinor source; zero when omitted.
        #[arg(long)]
        sigma: Option<PathBuf>,
        /// Prefix of `<prefix>.A` and `<prefix>.phi` holding the boundary data.
        #[arg(long)]
        boundary: Option<String>,
        /// Prefix of `<prefix>.A` and `<prefix>.phi` holding the start point.
        #[arg(long)]
        init: Option<String>,
        #[arg(long)]
        out: Option<String>,
    },
    /// Put a connection into Coulomb gauge.
    GaugeFix {
        #[arg(long)]
        field: PathBuf,
        #[arg(long, default_value = "neumann")]
        mode: Mode,
        #[arg(long)]
        out: String,
    },
    /// Compare the gradient with central differences of the energy.
    Gradcheck {
        #[arg(long, default_value = "3,3,3,3")]
        dims: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        h: f64,
        #[arg(long, default_value_t = 0.5)]
        kg: f64,
        #[arg(long, default_value_t = 20)]
        directions: usize,
        #[arg(long, default_value_t = 1e-5)]
        step: f64,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Check the a priori bounds on a solution.
    VerifyBounds {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        mode: Option<Mode>,
        #[arg(long = "A")]
        a: PathBuf,
        #[arg(long)]
        phi: PathBuf,
        #[arg(long)]
        sigma: Option<PathBuf>,
        #[arg(long)]
        theta: Option<PathBuf>,
        /// Gauge written by `solve`; rotates σ into the gauge of the fields.
        #[arg(long)]
        gauge: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Roots, discriminant and root bound of x³ + p x + q.
    #[command(allow_negative_numbers = true)]
    Cubic { p: f64, q: f64 },
    /// Build the source and boundary data that make a seed a solution.
    Manufacture {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        mode: Option<Mode>,
        /// Seed connection; the built-in smooth seed when omitted.
        #[arg(long = "A", requires = "phi")]
        a: Option<PathBuf>,
        #[arg(long, requires = "a")]
        phi: Option<PathBuf>,
        #[arg(long)]
        out: Option<String>,
    },
    /// Observed convergence orders under grid refinement.
    RefineStudy {
        /// commutator, phi-star, gradient-operator or all.
        #[arg(long, default_value = "all")]
        check: String,
        #[arg(long, default_value_t = 0.2)]
        h: f64,
        #[arg(long, default_value_t = 0.8)]
        length: f64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INVALID)
        }
    }
}

fn run(cmd: Command) -> Result<u8> {
    match cmd {
        Command::Solve {
            mode,
            config,
            theta,
            sigma,
            boundary,
            init,
            out,
        } => cmd_solve(mode, config, theta, sigma, boundary, init, out),
        Command::GaugeFix { field, mode, out } => cmd_gauge_fix(&field, mode, &out),
        Command::Gradcheck {
            dims,
            seed,
            h,
            kg,
            directions,
            step,
            tol,
        } => cmd_gradcheck(&dims, seed, h, kg, directions, step, tol),
        Command::VerifyBounds {
            config,
            mode,
            a,
            phi,
            sigma,
            theta,
            gauge,
            out,
        } => cmd_verify_bounds(config, mode, &a, &phi, sigma, theta, gauge, out),
        Command::Cubic { p, q } => cmd_cubic(p, q),
        Command::Manufacture {
            config,
            mode,
            a,
            phi,
            out,
        } => cmd_manufacture(config, mode, a, phi, out),
        Command::RefineStudy { check, h, length } => cmd_refine(&check, h, length),
    }
}

fn load_config(path: Option<&Path>, mode: Option<Mode>) -> Result<(RunConfig, Domain)> {
    let mut cfg = match path {
        Some(p) => {
            let text =
                std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            RunConfig::parse(&text).with_context(|| format!("{}", p.display()))?
        }
        None => RunConfig::default(),
    };
    if let Some(m) = mode {
        cfg.solver.mode = m;
    }
    let base = path.and_then(Path::parent);
    let domain = cfg.domain(base)?;
    Ok((cfg, domain))
}

fn suffixed(prefix: &str, ext: &str) -> PathBuf {
    PathBuf::from(format!("{prefix}.{ext}"))
}

fn read_pair(domain: &Domain, prefix: &str) -> Result<FieldPair> {
    let a = read_form(&suffixed(prefix, "A"), domain, FieldKind::OneForm)?;
    let phi = read_form(&suffixed(prefix, "phi"), domain, FieldKind::Spinor)?;
    Ok(FieldPair::new(a, phi))
}

fn write_pair(domain: &Domain, prefix: &str, x: &FieldPair) -> Result<()> {
    write_form(&suffixed(prefix, "A"), domain, FieldKind::OneForm, &x.a)?;
    write_form(&suffixed(prefix, "phi"), domain, FieldKind::Spinor, &x.phi)?;
    Ok(())
}

fn read_source(domain: &Domain, theta: Option<&Path>, sigma: Option<&Path>) -> Result<SourcePair> {
    let mut src = SourcePair::zeros(domain);
    if let Some(p) = theta {
        src.theta = read_form(p, domain, FieldKind::OneForm)?;
    }
    if let Some(p) = sigma {
        src.sigma = read_form(p, domain, FieldKind::Spinor)?;
    }
    Ok(src)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn cmd_solve(
    mode: Option<Mode>,
    config: Option<PathBuf>,
    theta: Option<PathBuf>,
    sigma: Option<PathBuf>,
    boundary: Option<String>,
    init: Option<String>,
    out: Option<String>,
) -> Result<u8> {
    let (cfg, domain) = load_config(config.as_deref(), mode)?;
    let mode = cfg.solver.mode;
    let source = read_source(&domain, theta.as_deref(), sigma.as_deref())?;
    let boundary = match (mode, boundary) {
        (Mode::Dirichlet, Some(prefix)) => {
            let x = read_pair(&domain, &prefix)?;
            Some(BoundaryData::trace_of(&domain, &x.a, &x.phi))
        }
        (Mode::Dirichlet, None) => bail!("--boundary: dirichlet mode needs boundary data"),
        (Mode::Neumann, Some(_)) => bail!("--boundary: neumann mode takes no boundary data"),
        (Mode::Neumann, None) => None,
    };
    let mut start = match init {
        Some(prefix) => read_pair(&domain, &prefix)?,
        None => {
            let size = cfg.init_scale * domain.volume().sqrt();
            random_perturbation(&domain, mode, size, cfg.solver.seed)?
        }
    };
    if let Some(bd) = &boundary {
        bd.impose(&domain, &mut start);
    }
    let sol = solve(&domain, &source, boundary.as_ref(), &start, &cfg.solver)?;
    let out = out.unwrap_or_else(|| cfg.out.clone());

    write_pair(
        &domain,
        &out,
        &FieldPair::new(sol.a.clone(), sol.phi.clone()),
    )?;
    write_form(
        &suffixed(&out, "gauge"),
        &domain,
        FieldKind::Scalar,
        &sol.gauge.as_form(&domain)?,
    )?;
    let mut csv = String::from(TraceRow::CSV_HEADER);
    csv.push('\n');
    for row in &sol.trace {
        csv.push_str(&row.csv_row());
        csv.push('\n');
    }
    write_text(&suffixed(&out, "trace.csv"), &csv)?;

    let h = &sol.report;
    let mut rep = Report::new();
    rep.push("mode", mode)
        .push("converged", sol.converged)
        .push("iterations", sol.iterations)
        .num("tol", cfg.solver.tol)
        .num("residual_l2", sol.residual_l2)
        .num("residual_sup", sol.residual_sup)
        .num("boundary_row_sup", sol.boundary_row_sup)
        .num("energy", sol.energy.total)
        .num("energy_curvature", sol.energy.curvature)
        .num("energy_dirichlet", sol.energy.dirichlet)
        .num("energy_quartic", sol.energy.quartic)
        .num("energy_coupling", sol.energy.coupling)
        .num("energy_topological", sol.energy.topological)
        .num(
            "phi_sup",
            sol.phi.values().iter().fold(0.0, |m, v| m.max(v.abs())),
        )
        .num(
            "curvature_l2",
            lp_norm(
                &domain,
                &swlattice::fields::curvature(&domain, &sol.a)?,
                2.0,
            )?,
        )
        .push("energy_bound_ok", h.energy_bound_ok)
        .num("energy_sup", h.energy_sup)
        .push("sup_norm_ok", h.sup_norm_ok)
        .num("phi_sup_trace", h.phi_sup)
        .num("weak_convergence_gap", h.weak_convergence_gap);
    let conc: Vec<String> = h
        .concentration_trace
        .iter()
        .map(|(i, v)| format!("{i}:{v:e}"))
        .collect();
    rep.push("concentration_trace", conc.join(";"));
    write_text(&suffixed(&out, "report"), &rep.to_string())?;
    print!("{rep}");
    Ok(if sol.converged { 0 } else { EXIT_UNCONVERGED })
}

fn cmd_gauge_fix(field: &Path, mode: Mode, out: &str) -> Result<u8> {
    let text =
        std::fs::read_to_string(field).with_context(|| format!("reading {}", field.display()))?;
    let file = FieldFile::parse(&text).with_context(|| format!("{}", field.display()))?;
    let domain = file.header.domain()?;
    let a: Form<f64> = file
        .to_form(&domain, FieldKind::OneForm)
        .with_context(|| format!("{}", field.display()))?;
    let (fixed, g, cr) = coulomb_fix(&domain, &a, mode)?;
    write_form(&suffixed(out, "A"), &domain, FieldKind::OneForm, &fixed)?;
    write_form(
        &suffixed(out, "theta"),
        &domain,
        FieldKind::Scalar,
        &g.as_form(&domain)?,
    )?;
    let mut rep = Report::new();
    rep.push("mode", mode)
        .num("div_residual", cr.div_residual)
        .num("normal_residual", cr.normal_residual)
        .num("normal_link_max", cr.normal_link_max)
        .num("tangential_residual", cr.tangential_residual)
        .opt("uhlenbeck_ratio", cr.uhlenbeck_ratio)
        .push("iterations", cr.iterations);
    write_text(&suffixed(out, "report"), &rep.to_string())?;
    print!("{rep}");
    Ok(0)
}

fn cmd_gradcheck(
    dims: &str,
    seed: u64,
    h: f64,
    kg: f64,
    directions: usize,
    step: f64,
    tol: f64,
) -> Result<u8> {
    let dims: [usize; DIM] = parse_dims(dims).context("--dims")?;
    if step.is_nan() || step <= 0.0 {
        bail!("--step must be positive");
    }
    let domain = Domain::new(dims, h, KgSpec::Constant(kg), 0.0)?;
    let mut r = SplitMix64::new(seed);
    let mut random = |amp: f64| {
        let a = Form::from_fn(&domain, 1, |_, _| amp * r.symmetric());
        let phi = Form::from_fn(&domain, 0, |_, _| {
            Spinor::from_parts(r.symmetric(), r.symmetric(), r.symmetric(), r.symmetric()) * amp
        });
        FieldPair::new(a, phi)
    };
    let x = random(0.8);
    let g = sw_gradient(&domain, &x.a, &x.phi)?;
    let energy = |y: &FieldPair| sw_energy(&domain, &y.a, &y.phi).map(|e| e.total);
    let mut worst = 0.0f64;
    for _ in 0..directions {
        let xi = random(1.0);
        let fd = (energy(&x.axpy(step, &xi))? - energy(&x.axpy(-step, &xi))?) / (2.0 * step);
        let an = g.pairing(&domain, &xi)?;
        worst = worst.max((fd - an).abs() / an.abs().max(fd.abs()).max(1e-12));
    }
    let pass = worst <= tol;
    let mut rep = Report::new();
    rep.push("directions", directions)
        .num("step", step)
        .num("max_rel_error", worst)
        .push("pass", pass);
    print!("{rep}");
    Ok(if pass { 0 } else { EXIT_UNCONVERGED })
}

#[allow(clippy::too_many_arguments)]
fn cmd_verify_bounds(
    config: Option<PathBuf>,
    mode: Option<Mode>,
    a: &Path,
    phi: &Path,
    sigma: Option<PathBuf>,
    theta: Option<PathBuf>,
    gauge: Option<PathBuf>,
    out: Option<PathBuf>,
) -> Result<u8> {
    let (cfg, domain) = load_config(config.as_deref(), mode)?;
    let mode = cfg.solver.mode;
    let a: Form<f64> = read_form(a, &domain, FieldKind::OneForm)?;
    let phi: Form<Spinor> = read_form(phi, &domain, FieldKind::Spinor)?;
    let mut source = read_source(&domain, theta.as_deref(), sigma.as_deref())?;
    if let Some(p) = gauge {
        let g: Form<f64> = read_form(&p, &domain, FieldKind::Scalar)?;
        let zero: Form<f64> = Form::zeros(&domain, 1);
        let theta = GaugeTransform::new(g.values().to_vec());
        source.sigma = apply_gauge(&domain, &theta, &zero, &source.sigma)?.1;
    }
    let bd = (mode == Mode::Dirichlet).then(|| BoundaryData::trace_of(&domain, &a, &phi));
    let res = residual(&domain, mode, &a, &phi, &source, bd.as_ref())?;
    let tol = cfg.solver.tol;
    let pb = phi_bound_check(&domain, &phi, &source.sigma, mode, 10.0 * tol)?;
    let rr = regularity_report(
        &domain,
        &a,
        &phi,
        &source.sigma,
        cfg.epsilon,
        cfg.p,
        res.l2,
        tol,
    )?;

    let mut rep = Report::new();
    rep.push("mode", mode)
        .num("residual_l2", res.l2)
        .push("checked_sites", pb.checked_sites)
        .num("max_violation", pb.max_violation)
        .num("violating_fraction", pb.violating_fraction)
        .num("max_q_value", pb.max_q_value)
        .num("slack", pb.slack)
        .num("phi_sup", pb.phi_sup)
        .num("kxg", pb.kxg)
        .num("kxg_vol", pb.kxg_vol)
        .push(
            "sup_bound_ok",
            pb.sup_bound_ok
                .map_or("none".to_string(), |b| b.to_string()),
        )
        .num("epsilon", rr.epsilon)
        .num("p", rr.p)
        .push("regularity_applicable", rr.applicable)
        .num("laplacian_norm", rr.laplacian_norm)
        .num("gradient_norm", rr.gradient_norm)
        .num("curvature_on_phi_norm", rr.curvature_on_phi_norm)
        .num("curvature_on_gradient_norm", rr.curvature_on_gradient_norm)
        .num("divergence_term_1", rr.divergence_term_1)
        .num("divergence_term_2", rr.divergence_term_2)
        .num("second_derivative_norm", rr.second_derivative_norm);
    for (q, v) in &rr.curvature_lq {
        rep.num(&format!("curvature_l{q}"), *v);
    }
    rep.num("estimate_max_excess", rr.estimate_max_excess)
        .num("estimate_slack", rr.estimate_slack)
        .push(
            "estimate_ok",
            rr.estimate_ok.map_or("none".to_string(), |b| b.to_string()),
        )
        .num("holder_rhs", rr.holder_rhs)
        .push("holder_ok", rr.holder_ok);
    if let Some(p) = out {
        write_text(&p, &rep.to_string())?;
    }
    print!("{rep}");
    Ok(0)
}

fn cmd_cubic(p: f64, q: f64) -> Result<u8> {
    let sol = cubic_solve(p, q)?;
    let mut rep = Report::new();
    rep.num("p", p).num("q", q);
    for (i, z) in sol.roots.iter().enumerate() {
        rep.push(&format!("root{}", i + 1), format!("{:e}{:+e}i", z.re, z.im));
    }
    let real: Vec<String> = sol.real_roots().iter().map(|x| format!("{x:e}")).collect();
    rep.push("real_roots", real.join(","))
        .num("discriminant", sol.discriminant);
    match cubic_bound(p, q) {
        Ok((b, branch)) => {
            rep.num("bound", b).push("branch", branch);
        }
        Err(e) => {
            rep.push("bound", "none").push("bound_note", e);
        }
    }
    print!("{rep}");
    Ok(0)
}

fn cmd_manufacture(
    config: Option<PathBuf>,
    mode: Option<Mode>,
    a: Option<PathBuf>,
    phi: Option<PathBuf>,
    out: Option<String>,
) -> Result<u8> {
    let (cfg, domain) = load_config(config.as_deref(), mode)?;
    let mode = cfg.solver.mode;
    let seed = match (a, phi) {
        (Some(a), Some(phi)) => FieldPair::new(
            read_form(&a, &domain, FieldKind::OneForm)?,
            read_form(&phi, &domain, FieldKind::Spinor)?,
        ),
        _ => smooth_seed(&domain),
    };
    let (src, bd) = manufacture(&domain, &seed.a, &seed.phi, mode)?;
    let out = out.unwrap_or_else(|| cfg.out.clone());
    write_form(
        &suffixed(&out, "theta"),
        &domain,
        FieldKind::OneForm,
        &src.theta,
    )?;
    write_form(
        &suffixed(&out, "sigma"),
        &domain,
        FieldKind::Spinor,
        &src.sigma,
    )?;
    write_pair(&domain, &format!("{out}.seed"), &seed)?;
    if mode == Mode::Dirichlet {
        write_pair(
            &domain,
            &format!("{out}.bd"),
            &FieldPair::new(bd.a0.clone(), bd.phi0.clone()),
        )?;
    }
    let bd = (mode == Mode::Dirichlet).then_some(bd);
    let res = residual(&domain, mode, &seed.a, &seed.phi, &src, bd.as_ref())?;
    let mut rep = Report::new();
    rep.push("mode", mode)
        .num("seed_residual_l2", res.l2)
        .num("source_l2", src.l2_norm(&domain)?)
        .num("sigma_sup", src.sigma_sup());
    print!("{rep}");
    Ok(0)
}

fn cmd_refine(check: &str, h: f64, length: f64) -> Result<u8> {
    let studies: Vec<Study> = if check == "all" {
        Study::ALL.to_vec()
    } else {
        vec![check.parse::<Study>()?]
    };
    let spacings = [h, h / 2.0, h / 4.0];
    let mut ok = true;
    let mut rep = Report::new();
    for study in studies {
        let res = run_study(study, &spacings, length)?;
        let errs: Vec<String> = res.errors.iter().map(|e| format!("{e:e}")).collect();
        let orders: Vec<String> = res.orders.iter().map(|o| format!("{o:.4}")).collect();
        rep.push(&format!("{study}.errors"), errs.join(","))
            .push(&format!("{study}.orders"), orders.join(","))
            .push(
                &format!("{study}.observed_order"),
                format!("{:.4}", res.observed_order),
            );
        ok &= res.observed_order >= 1.0;
    }
    rep.push("pass", ok);
    print!("{rep}");
    Ok(if ok { 0 } else { EXIT_UNCONVERGED })
}
