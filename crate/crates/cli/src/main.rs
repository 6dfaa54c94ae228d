use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use num_rational::Ratio;
use serde_json::Value;
use thinzeta_core::additive_basis::{self, ResidueMode};
use thinzeta_core::characters::{pi_minus, rho_estimate, sign_agreement_count, thin_character_split};
use thinzeta_core::random_model::{identity_check, lil_statistic, splitmix64, SignAssignment};
use thinzeta_core::zeta::{self, TruncationParams, MAX_EM_TERMS};
use thinzeta_core::{sieve, CharacterSpec, Error, PrimeCache, PrimeTable, SetDescriptor, Sign};

mod config;
mod output;
mod parse;

use config::ConfigFile;
use output::{certified, csv_float, emit, float, json_text, Csv, Obj};

#[derive(Parser, Debug)]
#[command(name = "thinzeta", version, about = "Thin prime sets, their zeta functions and additive bases")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Flat `key = value` file; flags take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for cached prime tables (default: $THINZETA_CACHE, else no cache)
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    /// Sieve bound; must cover every x used by the command
    #[arg(long, global = true, value_parser = parse::count)]
    sieve_limit: Option<u64>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write results here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Kind {
    Index,
    Beatty,
    Random,
    Explicit,
}

#[derive(Args, Debug, Default)]
struct SetArgs {
    #[arg(long, value_enum)]
    kind: Option<Kind>,
    /// Index progression modulus
    #[arg(long, value_parser = parse::count)]
    k: Option<u64>,
    /// Index progression residue (normalized into [1, k])
    #[arg(long, allow_hyphen_values = true)]
    b: Option<i64>,
    /// Beatty slope, decimal or sqrt(n)
    #[arg(long)]
    kappa: Option<String>,
    /// Beatty offset
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<String>,
    #[arg(long)]
    precision_bits: Option<u32>,
    /// Random-sign seed
    #[arg(long, value_parser = parse::count)]
    seed: Option<u64>,
    /// Random-sign class: plus or minus
    #[arg(long)]
    sign: Option<String>,
    /// Explicit prime list, comma separated
    #[arg(long)]
    primes: Option<String>,
    /// Nominal density of an explicit list, as p/q
    #[arg(long)]
    delta: Option<String>,
}

#[derive(Args, Debug, Default)]
struct TruncArgs {
    /// Prime cutoff X
    #[arg(long = "X", value_parser = parse::count)]
    x: Option<u64>,
    /// Cutoff J of the series over j
    #[arg(long = "J")]
    j: Option<u32>,
    /// Euler–Maclaurin split point
    #[arg(long, value_parser = parse::count)]
    em_m: Option<u64>,
    /// Euler–Maclaurin correction terms (1..=15)
    #[arg(long)]
    em_terms: Option<u32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SetOp {
    List,
    Count,
    Progression,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum CharOp {
    PiMinus,
    Split,
    Rho,
    Agreement,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ZetaOp {
    /// ζ_P(s) = ζ(s) exp(f_P(s))
    Thin,
    /// f_P(s)
    FP,
    /// f_{P,j}(s) for the j given by --j-index
    FPj,
    /// ζ(s) alone
    Zeta,
    /// log of the thin Euler product (Re s > 1)
    LogProduct,
    /// log ζ_P against log ζ + f_P (Re s > 1)
    Relation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum LfunOp {
    Value,
    LogThin,
    Relation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum RandomOp {
    Lil,
    Identity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum BasisOp {
    Cover,
    Certify,
    Congruence,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    Theoretical,
    Empirical,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sieve primes, optionally storing a TZPT table
    Sieve {
        #[arg(long, value_parser = parse::count)]
        limit: u64,
        /// Write the table in TZPT format
        #[arg(long)]
        write: Option<PathBuf>,
    },
    /// Enumerate or count a thin prime set
    Set {
        #[command(flatten)]
        set: SetArgs,
        #[arg(long, value_parser = parse::count)]
        xmax: u64,
        #[arg(long, value_enum, default_value = "list")]
        op: SetOp,
        /// Residue for --op progression
        #[arg(long, value_parser = parse::count)]
        c: Option<u64>,
        /// Modulus for --op progression
        #[arg(long, value_parser = parse::count)]
        modulus: Option<u64>,
        /// Members wanted for --op progression
        #[arg(long, default_value = "10")]
        count: usize,
    },
    /// Quadratic character counts
    Char {
        /// Fundamental discriminant
        #[arg(long, allow_hyphen_values = true)]
        disc: i64,
        #[arg(long, value_enum, default_value = "pi-minus")]
        op: CharOp,
        #[arg(long, value_parser = parse::count)]
        x: Option<u64>,
        /// Ascending grid for --op rho
        #[arg(long, value_delimiter = ',', value_parser = parse::count)]
        grid: Option<Vec<u64>>,
        #[command(flatten)]
        set: SetArgs,
    },
    /// ζ, ζ_P and the kernel f_P
    Zeta {
        #[command(flatten)]
        set: SetArgs,
        /// Point a+bi
        #[arg(long, allow_hyphen_values = true, value_parser = parse::complex)]
        s: Option<Complex64>,
        #[command(flatten)]
        trunc: TruncArgs,
        #[arg(long, value_enum, default_value = "thin")]
        op: ZetaOp,
        #[arg(long, default_value = "1")]
        j_index: u32,
        /// Grid over sigma as lo:hi:n (CSV output)
        #[arg(long)]
        sigma_grid: Option<String>,
        /// Grid over t as lo:hi:n (CSV output)
        #[arg(long)]
        t_grid: Option<String>,
    },
    /// Dirichlet L-functions of quadratic characters
    Lfun {
        #[arg(long, allow_hyphen_values = true)]
        disc: i64,
        #[arg(long, allow_hyphen_values = true, value_parser = parse::complex)]
        s: Complex64,
        #[arg(long, value_enum, default_value = "value")]
        op: LfunOp,
        /// Terms summed directly before the Euler–Maclaurin tail
        #[arg(long, value_parser = parse::count, default_value = "1000")]
        n: u64,
        #[arg(long = "A", default_value = "1")]
        a: u64,
        #[arg(long = "B", default_value = "1")]
        b_coef: u64,
        #[command(flatten)]
        set: SetArgs,
        #[command(flatten)]
        trunc: TruncArgs,
    },
    /// Random-sign model
    Random {
        /// Number of seeds, spread as splitmix64(0..n)
        #[arg(long, value_parser = parse::count)]
        seeds: Option<u64>,
        /// Explicit seeds, comma separated (overrides --seeds)
        #[arg(long, value_delimiter = ',', value_parser = parse::count)]
        seed_list: Option<Vec<u64>>,
        #[arg(long, value_enum, default_value = "lil")]
        op: RandomOp,
        #[arg(long, value_parser = parse::count)]
        xmax: Option<u64>,
        #[arg(long, value_delimiter = ',', value_parser = parse::count)]
        grid: Option<Vec<u64>>,
        #[arg(long, allow_hyphen_values = true, value_parser = parse::complex)]
        s: Option<Complex64>,
    },
    /// h-fold sumsets and residue reachability
    Basis {
        #[command(flatten)]
        set: SetArgs,
        #[arg(long = "N", value_parser = parse::count)]
        n: u64,
        /// lo:hi
        #[arg(long, value_parser = parse::window)]
        window: Option<(u64, u64)>,
        #[arg(long, default_value = "64")]
        hmax: u32,
        #[arg(long, value_enum, default_value = "cover")]
        op: BasisOp,
        /// Layer for --op certify
        #[arg(long)]
        h: Option<u32>,
        /// Write the final layer as a TZCV bitmap
        #[arg(long)]
        export: Option<PathBuf>,
        /// Modulus for --op congruence
        #[arg(long, value_parser = parse::count)]
        modulus: Option<u64>,
        #[arg(long, default_value = "64")]
        smax: u32,
        #[arg(long, value_enum, default_value = "theoretical")]
        mode: Mode,
    },
    /// Record runs of consecutive primes ≡ c (mod d)
    Shiu {
        #[arg(long, value_parser = parse::count)]
        c: u64,
        #[arg(long, value_parser = parse::count)]
        d: u64,
        #[arg(long, value_parser = parse::count)]
        limit: u64,
    },
    /// N as s primes, each 2 or at least N/12
    Vinny {
        #[arg(long = "N", value_parser = parse::count)]
        n: u64,
        #[arg(long)]
        s: u64,
    },
    /// Odd n as three primes near n/3
    Haselgrove {
        #[arg(long, value_parser = parse::count)]
        n: u64,
        #[arg(long, default_value = "0.99")]
        theta: f64,
    },
    /// Error term E(u) of a set on a grid
    Profile {
        #[command(flatten)]
        set: SetArgs,
        #[arg(long, value_delimiter = ',', value_parser = parse::count)]
        grid: Vec<u64>,
    },
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Core(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

type Outcome<T> = std::result::Result<T, CliError>;

fn usage<T>(msg: impl Into<String>) -> Outcome<T> {
    Err(CliError::Usage(msg.into()))
}

fn domain<T>(msg: impl Into<String>) -> Outcome<T> {
    Err(CliError::Core(Error::Domain(msg.into())))
}

struct Run {
    file: ConfigFile,
    sieve_limit: Option<u64>,
    cache: Option<PrimeCache>,
    format: Option<Format>,
    out: Option<PathBuf>,
}

impl Run {
    fn new(g: &Global) -> Outcome<Run> {
        let file = match &g.config {
            Some(p) => ConfigFile::load(p).map_err(CliError::Usage)?,
            None => ConfigFile::default(),
        };
        let sieve_limit = file.pick(g.sieve_limit, "sieve_limit", parse::count).map_err(CliError::Usage)?;
        let format = file
            .pick(g.format, "format", |s| Format::from_str(s, true))
            .map_err(CliError::Usage)?;
        let env_cache = std::env::var_os("THINZETA_CACHE").map(PathBuf::from);
        let cache_dir = g
            .cache_dir
            .clone()
            .or_else(|| file.get("cache_dir").map(PathBuf::from))
            .or(env_cache);
        Ok(Run {
            file,
            sieve_limit,
            cache: cache_dir.map(PrimeCache::new),
            format,
            out: g.out.clone(),
        })
    }

    fn format_or(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }

    /// A table covering `needed`, honoring `sieve_limit`.
    fn table(&self, needed: u64) -> Outcome<PrimeTable> {
        let limit = match self.sieve_limit {
            Some(l) if l < needed => {
                return domain(format!("x = {needed} exceeds sieve_limit = {l}"));
            }
            Some(l) => l,
            None => needed.max(2),
        };
        Ok(match &self.cache {
            Some(c) => c.get(limit)?,
            None => sieve(limit)?,
        })
    }

    fn emit(&self, text: &str) -> Outcome<()> {
        Ok(emit(text, self.out.as_deref())?)
    }

    fn emit_json(&self, v: Value) -> Outcome<()> {
        self.emit(&json_text(&v))
    }

    fn pick<T>(&self, flag: Option<T>, key: &str, parse: impl Fn(&str) -> Result<T, String>) -> Outcome<Option<T>> {
        self.file.pick(flag, key, parse).map_err(CliError::Usage)
    }

    fn descriptor(&self, a: &SetArgs) -> Outcome<SetDescriptor> {
        let kind = self
            .pick(a.kind, "kind", |s| Kind::from_str(s, true))?
            .ok_or_else(|| CliError::Usage("--kind is required".into()))?;
        let int = |s: &str| s.parse::<i64>().map_err(|e| e.to_string());
        let text = |s: &str| Ok::<_, String>(s.to_string());
        Ok(match kind {
            Kind::Index => {
                let k = self.pick(a.k, "k", parse::count)?.unwrap_or(1);
                let b = self.pick(a.b, "b", int)?.unwrap_or(1);
                SetDescriptor::index_progression(k, b)?
            }
            Kind::Beatty => {
                let kappa = self
                    .pick(a.kappa.clone(), "kappa", text)?
                    .ok_or_else(|| CliError::Usage("--kappa is required for Beatty sets".into()))?;
                let lambda = self.pick(a.lambda.clone(), "lambda", text)?.unwrap_or_else(|| "0".into());
                let bits = self.pick(a.precision_bits, "precision_bits", |s| s.parse::<u32>().map_err(|e| e.to_string()))?;
                SetDescriptor::beatty_str(&kappa, &lambda, bits)?
            }
            Kind::Random => {
                let seed = self.pick(a.seed, "seed", parse::count)?.unwrap_or(0);
                let sign = match self.pick(a.sign.clone(), "sign", text)?.as_deref() {
                    None | Some("plus") | Some("+") => Sign::Plus,
                    Some("minus") | Some("-") => Sign::Minus,
                    Some(other) => return usage(format!("--sign must be plus or minus, got {other:?}")),
                };
                SetDescriptor::random_sign(seed, sign)
            }
            Kind::Explicit => {
                let list = match self.pick(a.primes.clone(), "primes", text)? {
                    Some(l) => parse::count_list(&l).map_err(CliError::Usage)?,
                    None => Vec::new(),
                };
                let delta = match self.pick(a.delta.clone(), "delta", text)? {
                    None => Ratio::new(1, 1),
                    Some(d) => d.parse::<Ratio<u64>>().map_err(|e| CliError::Usage(format!("--delta {d:?}: {e}")))?,
                };
                SetDescriptor::explicit(list, delta)?
            }
        })
    }

    fn truncation(&self, a: &TruncArgs, s: Complex64) -> Outcome<TruncationParams> {
        let mut p = TruncationParams::default_for(s);
        let small = |s: &str| s.parse::<u32>().map_err(|e| e.to_string());
        if let Some(x) = self.pick(a.x, "X", parse::count)? {
            p.x = x;
        }
        if let Some(j) = self.pick(a.j, "J", small)? {
            p.j = j;
        }
        if let Some(m) = self.pick(a.em_m, "em_m", parse::count)? {
            p.em_m = m;
        }
        if let Some(k) = self.pick(a.em_terms, "em_terms", small)? {
            if k > MAX_EM_TERMS {
                return domain(format!("em_terms must be at most {MAX_EM_TERMS}"));
            }
            p.em_terms = k;
        }
        p.validate()?;
        Ok(p)
    }

    fn seeds(&self, count: Option<u64>, list: &Option<Vec<u64>>) -> Outcome<Vec<u64>> {
        if let Some(l) = list {
            return Ok(l.clone());
        }
        let n = self.pick(count, "seeds", parse::count)?.unwrap_or(32);
        Ok((0..n).map(splitmix64).collect())
    }
}

fn grid_axis(text: &str) -> Outcome<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || CliError::Usage(format!("expected lo:hi:n, got {text:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].parse().map_err(|_| bad())?;
    let n = parse::count(parts[2]).map_err(CliError::Usage)?;
    if n == 0 {
        return Err(bad());
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect())
}

fn run(cli: Cli) -> Outcome<()> {
    let run = Run::new(&cli.global)?;
    match cli.command {
        Command::Sieve { limit, write } => {
            let t = run.table(limit)?;
            let t = if t.limit() == limit { t } else { t.truncated(limit)? };
            if let Some(path) = &write {
                t.save(path)?;
            }
            let largest = t.primes().last().copied().unwrap_or(0);
            match run.format_or(Format::Json) {
                Format::Json => run.emit_json(
                    Obj::new()
                        .put("limit", limit)
                        .put("count", t.count() as u64)
                        .put("largest", largest)
                        .value(),
                ),
                Format::Csv => {
                    let mut csv = Csv::new(&["limit", "count", "largest"]);
                    csv.row([limit.to_string(), t.count().to_string(), largest.to_string()]);
                    run.emit(&csv.finish())
                }
            }
        }
        Command::Set {
            set,
            xmax,
            op,
            c,
            modulus,
            count,
        } => {
            let d = run.descriptor(&set)?;
            let t = run.table(xmax)?;
            match op {
                SetOp::List => run.emit(&d.export_text(xmax, &t)?),
                SetOp::Count => {
                    let n = d.count_up_to(xmax, &t)?;
                    run.emit_json(Obj::new().put("x", xmax).put("count", n as u64).value())
                }
                SetOp::Progression => {
                    let (Some(c), Some(m)) = (c, modulus) else {
                        return usage("--op progression needs --c and --modulus");
                    };
                    let hits = additive_basis::prop_statue_check(&d, c, m, count, &t)?;
                    run.emit_json(
                        Obj::new()
                            .put("c", c)
                            .put("modulus", m)
                            .put("primes", hits.primes)
                            .put("exhausted", hits.exhausted)
                            .value(),
                    )
                }
            }
        }
        Command::Char { disc, op, x, grid, set } => {
            let chi = CharacterSpec::new(disc)?;
            match op {
                CharOp::PiMinus => {
                    let x = x.ok_or_else(|| CliError::Usage("--x is required".into()))?;
                    let t = run.table(x)?;
                    let count = pi_minus(x, &chi, &t)?;
                    let pi = t.pi(x)?;
                    let ratio = if pi == 0 { f64::NAN } else { count as f64 / pi as f64 };
                    run.emit_json(Obj::new().put("x", x).put("count", count as u64).num("ratio", ratio).value())
                }
                CharOp::Split | CharOp::Agreement => {
                    let x = x.ok_or_else(|| CliError::Usage("--x is required".into()))?;
                    let d = run.descriptor(&set)?;
                    let t = run.table(x)?;
                    if op == CharOp::Split {
                        let [plus, minus, zero] = thin_character_split(&d, x, &chi, &t)?;
                        run.emit_json(
                            Obj::new()
                                .put("x", x)
                                .put("plus", plus as u64)
                                .put("minus", minus as u64)
                                .put("ramified", zero as u64)
                                .value(),
                        )
                    } else {
                        let n = sign_agreement_count(&d, &chi, x, &t)?;
                        run.emit_json(Obj::new().put("x", x).put("count", n as u64).value())
                    }
                }
                CharOp::Rho => {
                    let grid = grid.ok_or_else(|| CliError::Usage("--grid is required".into()))?;
                    let d = run.descriptor(&set)?;
                    let t = run.table(grid.iter().copied().max().unwrap_or(2))?;
                    let r = rho_estimate(&d, &chi, &grid, &t)?;
                    run.emit_json(Obj::new().num("rho_hat", r.rho_hat).value())
                }
            }
        }
        Command::Zeta {
            set,
            s,
            trunc,
            op,
            j_index,
            sigma_grid,
            t_grid,
        } => {
            let points: Vec<Complex64> = match (&sigma_grid, &t_grid, s) {
                (None, None, Some(s)) => vec![s],
                (None, None, None) => return usage("--s or a grid is required"),
                (sg, tg, s) => {
                    let base = s.unwrap_or_default();
                    let sig = match sg {
                        Some(g) => grid_axis(g)?,
                        None => vec![base.re],
                    };
                    let ts = match tg {
                        Some(g) => grid_axis(g)?,
                        None => vec![base.im],
                    };
                    sig.iter().flat_map(|&a| ts.iter().map(move |&b| Complex64::new(a, b))).collect()
                }
            };
            let grid_mode = sigma_grid.is_some() || t_grid.is_some();
            let needs_set = op != ZetaOp::Zeta;
            let d = if needs_set { Some(run.descriptor(&set)?) } else { None };
            let params0 = run.truncation(&trunc, points[0])?;
            let table = if needs_set { Some(run.table(params0.x)?) } else { None };
            let mut rows = Vec::new();
            for s in points {
                let mut p = run.truncation(&trunc, s)?;
                p.x = params0.x;
                let (t, d) = (table.as_ref(), d.as_ref());
                let v = match op {
                    ZetaOp::Zeta => zeta::zeta_em(s, &p)?,
                    ZetaOp::Thin => zeta::zeta_thin(d.unwrap(), s, &p, t.unwrap())?,
                    ZetaOp::FP => zeta::f_p(d.unwrap(), s, &p, t.unwrap())?,
                    ZetaOp::FPj => zeta::f_pj(d.unwrap(), j_index, s, p.x, t.unwrap())?,
                    ZetaOp::LogProduct => zeta::log_euler_product_thin(d.unwrap(), s, p.x, t.unwrap())?,
                    ZetaOp::Relation => {
                        if grid_mode {
                            return usage("--op relation takes a single --s");
                        }
                        let r = zeta::relation_check(d.unwrap(), s, &p, t.unwrap())?;
                        return run.emit_json(
                            Obj::new()
                                .num("residual", r.residual)
                                .num("budget", r.budget)
                                .num("value_budget", r.value_budget)
                                .put("certified", r.certified)
                                .put("pass", r.pass)
                                .put("lhs", certified(&r.lhs))
                                .put("rhs", certified(&r.rhs))
                                .value(),
                        );
                    }
                };
                rows.push((s, v));
            }
            match run.format_or(if grid_mode { Format::Csv } else { Format::Json }) {
                Format::Csv => {
                    let mut csv = Csv::new(&["sigma", "t", "re", "im", "err", "certified"]);
                    for (s, v) in rows {
                        csv.row([
                            csv_float(s.re),
                            csv_float(s.im),
                            csv_float(v.value.re),
                            csv_float(v.value.im),
                            csv_float(v.err),
                            v.certified.to_string(),
                        ]);
                    }
                    run.emit(&csv.finish())
                }
                Format::Json => {
                    let items: Vec<Value> = rows
                        .iter()
                        .map(|(s, v)| {
                            Obj::new()
                                .num("sigma", s.re)
                                .num("t", s.im)
                                .num("value_re", v.value.re)
                                .num("value_im", v.value.im)
                                .num("err", v.err)
                                .put("certified", v.certified)
                                .value()
                        })
                        .collect();
                    if grid_mode {
                        run.emit_json(Value::Array(items))
                    } else {
                        run.emit_json(items.into_iter().next().unwrap())
                    }
                }
            }
        }
        Command::Lfun {
            disc,
            s,
            op,
            n,
            a,
            b_coef,
            set,
            trunc,
        } => {
            let chi = CharacterSpec::new(disc)?;
            match op {
                LfunOp::Value => {
                    let v = zeta::dirichlet_l(&chi, s, n)?;
                    run.emit_json(certified(&v))
                }
                LfunOp::LogThin => {
                    let d = run.descriptor(&set)?;
                    let p = run.truncation(&trunc, s)?;
                    let t = run.table(p.x)?;
                    let v = zeta::log_l_thin(&d, &chi, s, p.x, &t)?;
                    run.emit_json(certified(&v))
                }
                LfunOp::Relation => {
                    let d = run.descriptor(&set)?;
                    let p = run.truncation(&trunc, s)?;
                    let t = run.table(p.x)?;
                    let q = zeta::quadratic_relation_check(&d, &chi, a, b_coef, s, &p, &t)?;
                    run.emit_json(
                        Obj::new()
                            .num("residual", q.residual)
                            .num("budget", q.budget)
                            .num("value_budget", q.value_budget)
                            .put("certified", q.certified)
                            .put("pass", q.pass)
                            .num("rho_hat", q.rho_hat)
                            .put("model_mismatch", q.model_mismatch)
                            .num("case_split_gap", q.case_split_gap)
                            .value(),
                    )
                }
            }
        }
        Command::Random {
            seeds,
            seed_list,
            op,
            xmax,
            grid,
            s,
        } => {
            let seeds = run.seeds(seeds, &seed_list)?;
            match op {
                RandomOp::Lil => {
                    let grid = match (grid, xmax) {
                        (Some(g), _) => g,
                        (None, Some(x)) => {
                            let mut g = Vec::new();
                            let mut v = 10_000u64;
                            while v < x {
                                g.push(v);
                                v *= 10;
                            }
                            g.push(x);
                            g
                        }
                        (None, None) => return usage("--op lil needs --xmax or --grid"),
                    };
                    let t = run.table(grid.iter().copied().max().unwrap_or(2))?;
                    let mut rows = Vec::new();
                    for &seed in &seeds {
                        for pt in lil_statistic(&SignAssignment::seeded(seed), &grid, &t)? {
                            rows.push((seed, pt));
                        }
                    }
                    match run.format_or(Format::Csv) {
                        Format::Csv => {
                            let mut csv = Csv::new(&["seed", "x", "S", "T"]);
                            for (seed, pt) in rows {
                                csv.row([seed.to_string(), pt.x.to_string(), pt.s.to_string(), csv_float(pt.t)]);
                            }
                            run.emit(&csv.finish())
                        }
                        Format::Json => run.emit_json(Value::Array(
                            rows.iter()
                                .map(|(seed, pt)| {
                                    Obj::new().put("seed", *seed).put("x", pt.x).put("S", pt.s).num("T", pt.t).value()
                                })
                                .collect(),
                        )),
                    }
                }
                RandomOp::Identity => {
                    let s = s.unwrap_or(Complex64::new(2.0, 0.0));
                    let x = xmax.unwrap_or(1_000_000);
                    let t = run.table(x)?;
                    let mut items = Vec::new();
                    for &seed in &seeds {
                        let r = identity_check(&SignAssignment::seeded(seed), s, x, &t)?;
                        items.push(
                            Obj::new()
                                .put("seed", seed)
                                .num("residual", r.residual)
                                .num("rounding", r.rounding)
                                .value(),
                        );
                    }
                    run.emit_json(Obj::new().num("sigma", s.re).num("t", s.im).put("x", x).put("residuals", items).value())
                }
            }
        }
        Command::Basis {
            set,
            n,
            window,
            hmax,
            op,
            h,
            export,
            modulus,
            smax,
            mode,
        } => {
            let d = run.descriptor(&set)?;
            match op {
                BasisOp::Cover => {
                    let window = window.ok_or_else(|| CliError::Usage("--window is required".into()))?;
                    let t = run.table(n)?;
                    let r = additive_basis::minimal_h_cover(&d, n, window, hmax, &t)?;
                    if let Some(path) = &export {
                        let layer = additive_basis::sumset_layer(&d.enumerate(n, &t)?, n, r.h)?;
                        layer.write_coverage(r.h as u64, std::fs::File::create(path).map_err(Error::from)?)?;
                    }
                    match run.format_or(Format::Json) {
                        Format::Csv => {
                            let mut csv = Csv::new(&["h", "covered_fraction", "exceptional_count"]);
                            for c in &r.per_h {
                                csv.row([c.h.to_string(), csv_float(c.covered_fraction), c.exceptional_count.to_string()]);
                            }
                            run.emit(&csv.finish())
                        }
                        Format::Json => run.emit_json(
                            Obj::new()
                                .put("h", r.h)
                                .put("N", r.n_max)
                                .put("window", vec![r.window.0, r.window.1])
                                .put("covered_in_window", r.covered_in_window)
                                .put("minimal_h", r.minimal_h)
                                .put("exceptional_count", r.exceptional.len() as u64)
                                .put("exceptional", r.exceptional)
                                .put(
                                    "per_h",
                                    r.per_h
                                        .iter()
                                        .map(|c| {
                                            Obj::new()
                                                .put("h", c.h)
                                                .num("covered_fraction", c.covered_fraction)
                                                .put("exceptional_count", c.exceptional_count)
                                                .value()
                                        })
                                        .collect::<Vec<_>>(),
                                )
                                .value(),
                        ),
                    }
                }
                BasisOp::Certify => {
                    let h = h.ok_or_else(|| CliError::Usage("--op certify needs --h".into()))?;
                    let n0 = window.map(|w| w.0).unwrap_or(1);
                    let t = run.table(n)?;
                    let c = additive_basis::basis_certificate(&d, h, n, n0, &t)?;
                    run.emit_json(
                        Obj::new()
                            .put("h", c.h)
                            .put("N", c.n_max)
                            .put("n0", c.n0)
                            .put("verified", c.verified)
                            .put("window_gap", c.window_gap)
                            .put("exceptional_below_n0", c.exceptional_below_n0)
                            .value(),
                    )
                }
                BasisOp::Congruence => {
                    let b = modulus.ok_or_else(|| CliError::Usage("--op congruence needs --modulus".into()))?;
                    let t = run.table(n)?;
                    let mode = match mode {
                        Mode::Theoretical => ResidueMode::Theoretical,
                        Mode::Empirical => ResidueMode::Empirical { x: n },
                    };
                    let tab = additive_basis::congruence_solvability(&d, b, smax, mode, &t)?;
                    run.emit_json(
                        Obj::new()
                            .put("b", tab.b)
                            .put("residues", tab.residues.clone())
                            .put("s1", tab.s1)
                            .put("period", tab.period.map(|(a, l)| vec![a, l]))
                            .put("s_max", tab.s_max)
                            .value(),
                    )
                }
            }
        }
        Command::Shiu { c, d, limit } => {
            let t = run.table(limit)?;
            let t = if t.limit() == limit { t } else { t.truncated(limit)? };
            let runs = additive_basis::shiu_scan(c, d, &t)?;
            match run.format_or(Format::Csv) {
                Format::Csv => {
                    let mut csv = Csv::new(&["r", "start_prime", "length", "ratio"]);
                    for r in runs {
                        csv.row([
                            r.r.to_string(),
                            r.start_prime.to_string(),
                            r.length.to_string(),
                            r.ratio.map(csv_float).unwrap_or_default(),
                        ]);
                    }
                    run.emit(&csv.finish())
                }
                Format::Json => run.emit_json(Value::Array(
                    runs.iter()
                        .map(|r| {
                            Obj::new()
                                .put("r", r.r)
                                .put("start_prime", r.start_prime)
                                .put("length", r.length)
                                .put("ratio", r.ratio.map(float).unwrap_or(Value::Null))
                                .value()
                        })
                        .collect(),
                )),
            }
        }
        Command::Vinny { n, s } => {
            let t = run.table(n)?;
            let found = additive_basis::vinny_decompose(n, s, &t)?;
            run.emit_json(match found {
                Some(d) => Obj::new()
                    .put("N", n)
                    .put("s", s)
                    .put("found", true)
                    .put("constructive", d.constructive)
                    .put("parts", d.parts)
                    .value(),
                None => Obj::new().put("N", n).put("s", s).put("found", false).value(),
            })
        }
        Command::Haselgrove { n, theta } => {
            let t = run.table(n)?;
            let found = additive_basis::haselgrove_decompose(n, theta, &t)?;
            run.emit_json(
                Obj::new()
                    .put("n", n)
                    .num("theta", theta)
                    .put("found", found.is_some())
                    .put("parts", found.map(|p| p.to_vec()))
                    .value(),
            )
        }
        Command::Profile { set, grid } => {
            let d = run.descriptor(&set)?;
            let t = run.table(grid.iter().copied().max().unwrap_or(2))?;
            let p = d.error_term_profile(&grid, &t)?;
            match run.format_or(Format::Csv) {
                Format::Csv => {
                    let mut csv = Csv::new(&["x", "E", "running_sup"]);
                    for s in &p.samples {
                        csv.row([s.x.to_string(), csv_float(s.e), csv_float(s.running_sup)]);
                    }
                    run.emit(&csv.finish())
                }
                Format::Json => run.emit_json(
                    Obj::new()
                        .num("sup_abs", p.sup_abs)
                        .put("fitted_exponent", p.fitted_exponent.map(float).unwrap_or(Value::Null))
                        .put(
                            "samples",
                            p.samples
                                .iter()
                                .map(|s| Obj::new().put("x", s.x).num("E", s.e).num("running_sup", s.running_sup).value())
                                .collect::<Vec<_>>(),
                        )
                        .value(),
                ),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}\nrun `thinzeta --help` for the grammar");
            ExitCode::from(2)
        }
        Err(CliError::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
