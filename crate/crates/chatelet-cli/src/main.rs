//! `chatelet`: point counts, local densities and the leading constant for a Châtelet surface
//! given as a JSON file `{"f1":[a,b],"f2":[a,b],"f3":[a,b,c]}` (forms `a u + b v` and
//! `a u² + b v² + c uv`).

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use chatelet::count::{self, CountReport};
use chatelet::densities::{self, Cutoffs, DensityValue};
use chatelet::forms::{validate_nh, LinearForm, QuadraticForm, SignVector, Surface, SurfaceFile};
use chatelet::{peyre, Error};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

#[derive(Parser)]
#[command(name = "chatelet", version, about = "Rational points and local densities on Châtelet surfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "CHATELET_THREADS")]
    threads: Option<usize>,
    /// Write the output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Exit with status 3 when a density has not stabilized to --tolerance.
    #[arg(long, global = true)]
    strict: bool,
    /// Stabilization tolerance used by --strict.
    #[arg(long, global = true, default_value_t = 1e-6)]
    tolerance: f64,
}

#[derive(Args, Clone)]
struct SurfaceArg {
    /// Surface JSON file.
    #[arg(long)]
    surface: PathBuf,
}

#[derive(Args, Clone, Copy)]
struct CutoffArgs {
    /// Largest prime in Euler products.
    #[arg(long, default_value_t = densities::DEFAULT_PRIME_CUTOFF)]
    prime_cutoff: u64,
    /// Exponent cutoff of the σ_p series.
    #[arg(long, default_value_t = densities::DEFAULT_NU_MAX)]
    nu_max: u32,
    /// Exponent cutoff of the ρ* series.
    #[arg(long, default_value_t = densities::DEFAULT_STAR_NU_MAX)]
    star_nu_max: u32,
}

impl CutoffArgs {
    fn cutoffs(&self) -> Cutoffs {
        Cutoffs { prime_cutoff: self.prime_cutoff, nu_max: self.nu_max, star_nu_max: self.star_nu_max }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check the standing hypotheses on the forms.
    Validate(SurfaceArg),
    /// N(B) against c_S B log B.
    Count {
        #[command(flatten)]
        surface: SurfaceArg,
        /// Height bound; scientific notation such as 1e5 is accepted.
        #[arg(short = 'B', long = "bound", value_parser = parse_integer)]
        bound: u64,
        #[command(flatten)]
        cutoffs: CutoffArgs,
    },
    /// S(X) or S(X, d, D) against its main term.
    Sum {
        #[command(flatten)]
        surface: SurfaceArg,
        /// Box size X (comma-separated list allowed).
        #[arg(short = 'X', long = "x", value_delimiter = ',', value_parser = parse_integer)]
        x: Vec<u64>,
        #[arg(long, value_parser = parse_triple, default_value = "1,1,1")]
        d: [u64; 3],
        #[arg(long = "D", value_parser = parse_triple, default_value = "1,1,1")]
        big_d: [u64; 3],
        /// Sign vector ε.
        #[arg(long, value_parser = parse_signs, default_value = "1,1,1")]
        eps: SignVector,
        #[command(flatten)]
        cutoffs: CutoffArgs,
    },
    /// ω_{λ,μ}(p) at a finite level, compared with σ_p(d, D) for d = p^λ, D = p^μ.
    Density {
        #[command(flatten)]
        surface: SurfaceArg,
        #[arg(long)]
        p: u64,
        #[arg(long, value_parser = parse_exponents, default_value = "0,0,0")]
        lambda: [u32; 3],
        #[arg(long, value_parser = parse_exponents, default_value = "0,0,0")]
        mu: [u32; 3],
        /// Level n of the count modulo p^n.
        #[arg(long)]
        level: u32,
        #[arg(long, default_value_t = densities::DEFAULT_NU_MAX)]
        nu_max: u32,
    },
    /// σ₂(d) by direct counting, through n(k), and as an exact limit.
    Sigma2 {
        #[command(flatten)]
        surface: SurfaceArg,
        #[arg(long, value_parser = parse_triple, default_value = "1,1,1")]
        d: [u64; 3],
        #[arg(long, default_value_t = densities::DEFAULT_DYADIC_LEVEL)]
        level: u32,
        #[arg(long, default_value_t = densities::DEFAULT_DYADIC_LEVEL)]
        k_max: u32,
    },
    /// The constant c_S with its (ε, m) terms.
    Peyre {
        #[command(flatten)]
        surface: SurfaceArg,
        #[command(flatten)]
        cutoffs: CutoffArgs,
        /// Monte-Carlo samples for an independent ω_∞ estimate (0 to skip).
        #[arg(long, default_value_t = 0, value_parser = parse_integer)]
        mc_samples: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// N(B) for several bounds.
    Verify {
        #[command(flatten)]
        surface: SurfaceArg,
        #[arg(short = 'B', long = "bound", value_delimiter = ',', value_parser = parse_integer)]
        bound: Vec<u64>,
        #[command(flatten)]
        cutoffs: CutoffArgs,
    },
}

fn parse_integer(s: &str) -> Result<u64, String> {
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let f: f64 = s.parse().map_err(|_| format!("not a number: {s}"))?;
    if !f.is_finite() || f < 0.0 || f.fract() != 0.0 || f > 9.0e15 {
        return Err(format!("not a nonnegative integer: {s}"));
    }
    Ok(f as u64)
}

fn parse_list<T: std::str::FromStr>(s: &str) -> Result<[T; 3], String> {
    let parts: Vec<T> = s
        .split(',')
        .map(|x| x.trim().parse::<T>().map_err(|_| format!("bad entry in {s}")))
        .collect::<Result<_, _>>()?;
    parts.try_into().map_err(|_| format!("expected three comma-separated values, got {s}"))
}

fn parse_triple(s: &str) -> Result<[u64; 3], String> {
    parse_list(s)
}

fn parse_exponents(s: &str) -> Result<[u32; 3], String> {
    parse_list(s)
}

fn parse_signs(s: &str) -> Result<SignVector, String> {
    let e: [i8; 3] = parse_list(s)?;
    SignVector::new(e[0], e[1], e[2]).map_err(|e| e.to_string())
}

enum Failure {
    Input(String),
    Nh(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NotAdmissible(m) => Failure::Nh(m),
            other => Failure::Input(other.to_string()),
        }
    }
}

struct Output {
    text: String,
    unstable: Vec<String>,
    nh_failed: bool,
}

fn read_file(path: &PathBuf) -> Result<SurfaceFile, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load(arg: &SurfaceArg) -> Result<Surface, Failure> {
    Ok(Surface::from_file(&read_file(&arg.surface)?)?)
}

fn check(unstable: &mut Vec<String>, name: &str, v: &DensityValue, tol: f64) {
    if v.flagged(tol) {
        unstable.push(format!("{name}: stabilization delta {:e}", v.stabilization_delta));
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable report");
    s.push('\n');
    s
}

fn csv(header_comments: &[String], first_column: &str, rows: &[CountReport]) -> String {
    let mut s = String::new();
    for c in header_comments {
        writeln!(s, "# {c}").unwrap();
    }
    let mut body = Vec::new();
    count::write_csv(&mut body, rows).expect("writing to memory");
    let body = String::from_utf8(body).expect("ascii");
    s.push_str(&body.replacen("B,", &format!("{first_column},"), 1));
    s
}

fn cutoff_comment(c: &Cutoffs) -> String {
    format!("prime_cutoff={} nu_max={} star_nu_max={}", c.prime_cutoff, c.nu_max, c.star_nu_max)
}

fn run(cli: &Cli) -> Result<Output, Failure> {
    let tol = cli.tolerance;
    let mut unstable = Vec::new();
    let text = match &cli.command {
        Command::Validate(arg) => {
            let f = read_file(&arg.surface)?;
            let report = validate_nh(
                LinearForm::new(f.f1[0], f.f1[1]),
                LinearForm::new(f.f2[0], f.f2[1]),
                QuadraticForm::new(f.f3[0], f.f3[1], f.f3[2]),
            );
            let mut value = json!({ "surface": f, "passed": report.passed, "failures": report.failures });
            if report.passed {
                let s = Surface::from_file(&f)?;
                let i = s.invariants();
                value["invariants"] = json!({
                    "delta": i.delta.to_string(),
                    "delta12": i.delta12.to_string(),
                    "delta13": i.delta13.to_string(),
                    "delta23": i.delta23.to_string(),
                    "delta_star": i.delta_star.to_string(),
                    "contents": i.contents,
                    "rad3": i.rad3,
                });
            }
            let text = to_json(&value);
            return Ok(Output { text, unstable, nh_failed: !report.passed });
        }
        Command::Count { surface, bound, cutoffs } => {
            let s = load(surface)?;
            let c = cutoffs.cutoffs();
            let cs = peyre::c_s(&s, &c)?;
            check(&mut unstable, "c_S", &cs.c_s, tol);
            let row = count::n_b(*bound, &s, cs.c_s.value)?;
            csv(&[format!("c_S={:.12}", cs.c_s.value), cutoff_comment(&c)], "B", &[row])
        }
        Command::Verify { surface, bound, cutoffs } => {
            let s = load(surface)?;
            let c = cutoffs.cutoffs();
            let cs = peyre::c_s(&s, &c)?;
            check(&mut unstable, "c_S", &cs.c_s, tol);
            let rows = count::verify(bound, &s, cs.c_s.value)?;
            csv(&[format!("c_S={:.12}", cs.c_s.value), cutoff_comment(&c)], "B", &rows)
        }
        Command::Sum { surface, x, d, big_d, eps, cutoffs } => {
            let s = load(surface)?;
            if x.is_empty() {
                return Err(Failure::Input("no value of X given".into()));
            }
            let c = cutoffs.cutoffs();
            let density = densities::global_density(&s, *d, *big_d, &c)?;
            check(&mut unstable, "density", &density, tol);
            let rows: Vec<CountReport> =
                x.iter().map(|&x| count::s_x_dd(x, *d, *big_d, &s, *eps, density.value)).collect::<Result<_, _>>()?;
            let comments = [
                format!("d={:?} D={:?} eps={}", d, big_d, eps),
                format!("density={:.12}", density.value),
                cutoff_comment(&c),
            ];
            csv(&comments, "X", &rows)
        }
        Command::Density { surface, p, lambda, mu, level, nu_max } => {
            let s = load(surface)?;
            let d = lambda.map(|l| p.pow(l));
            let big_d = mu.map(|m| p.pow(m));
            let series = densities::sigma_p_dd(*p, d, big_d, &s, *nu_max)?;
            let omega = densities::omega_lambda_mu(*p, *lambda, *mu, &s, *level)?;
            let limit = densities::omega_lambda_mu_limit(*p, *lambda, *mu, &s)?;
            check(&mut unstable, "omega", &omega, tol);
            check(&mut unstable, "sigma_p_dD", &series, tol);
            to_json(&json!({
                "p": p, "lambda": lambda, "mu": mu, "level": level, "nu_max": nu_max,
                "omega": omega,
                "sigma_p_dD": series,
                "difference": (omega.value - series.value).abs(),
                "omega_limit": limit,
                "limit_difference": (limit.value - series.value).abs(),
            }))
        }
        Command::Sigma2 { surface, d, level, k_max } => {
            let s = load(surface)?;
            let direct = densities::sigma_2(*d, &s, *level)?;
            let limit = densities::sigma_2_limit(*d, &s)?;
            let omega = densities::omega_d2(*d, &s, *level)?;
            check(&mut unstable, "sigma_2", &direct, tol);
            check(&mut unstable, "omega_d2", &omega, tol);
            let mut value = json!({
                "d": d, "level": level,
                "direct": direct,
                "limit": limit,
                "omega_d2": omega,
            });
            if *d == [1, 1, 1] {
                let nk = densities::sigma_2_via_nk(&s, *k_max)?;
                check(&mut unstable, "sigma_2_via_nk", &nk.density, tol);
                value["k_max"] = json!(k_max);
                value["via_nk"] = json!(nk);
                value["difference"] = json!((direct.value - nk.density.value).abs());
            }
            to_json(&value)
        }
        Command::Peyre { surface, cutoffs, mc_samples, seed } => {
            let s = load(surface)?;
            let report = peyre::c_s(&s, &cutoffs.cutoffs())?;
            check(&mut unstable, "c_S", &report.c_s, tol);
            for t in &report.terms {
                for f in &t.flags {
                    unstable.push(format!("eps={} m={:?}: {f}", t.eps, t.m));
                }
            }
            let mut value = serde_json::to_value(&report).expect("serializable report");
            if *mc_samples > 0 {
                let mc: Vec<_> = peyre::enumerate_sigma()
                    .into_iter()
                    .map(|eps| {
                        json!({
                            "eps": eps,
                            "exact": densities::omega_infty(&s, eps),
                            "monte_carlo": densities::omega_infty_mc(&s, eps, *mc_samples, *seed),
                        })
                    })
                    .collect();
                value["omega_infty_check"] = json!({ "samples": mc_samples, "seed": seed, "values": mc });
            }
            to_json(&value)
        }
    };
    Ok(Output { text, unstable, nh_failed: false })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let out = match run(&cli) {
        Ok(o) => o,
        Err(Failure::Input(m)) => {
            eprintln!("error: {m}");
            return ExitCode::from(1);
        }
        Err(Failure::Nh(m)) => {
            eprintln!("error: {m}");
            return ExitCode::from(2);
        }
    };
    let written = match &cli.out {
        Some(path) => std::fs::write(path, &out.text).map_err(|e| format!("{}: {e}", path.display())),
        None => {
            print!("{}", out.text);
            Ok(())
        }
    };
    if let Err(m) = written {
        eprintln!("error: {m}");
        return ExitCode::from(1);
    }
    if out.nh_failed {
        return ExitCode::from(2);
    }
    if cli.strict && !out.unstable.is_empty() {
        for u in &out.unstable {
            eprintln!("not stabilized: {u}");
        }
        return ExitCode::from(3);
    }
    ExitCode::SUCCESS
}
