//! Command-line front end.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or input error,
//! 3 precondition violation (e.g. a bound beyond a set's truncation).

pub mod cache;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde_json::{json, Value};

use crate::circle::{
    check_dilated_eval, check_elliptic, check_log_weighted_sum, check_no_kernel_inequality,
    check_parseval, check_power_sum_lower, check_product_grid, check_product_inequality,
    smoothing_length, CheckReport, LogSequence, ProductParams,
};
use crate::compositions::{enumerate_compositions, group_by_partition, Order};
use crate::erdosfuchs::{
    check_main_identity, fit_exponent, mean_squared_error, parse_rational, ErrorProfile,
};
use crate::error::{Error, Result};
use crate::intset::{construct_family, Family, FamilySpec, IntegerSet};
use crate::repcount::{
    count_full, count_full_dp, count_gf, count_linear_form, count_ordered_le, count_ordered_lt,
    parse_coeffs, set_series, verify_identity, Method, RepTable, Star, SCHEMA_VERSION,
};
use cache::{Cache, CacheKey, Lookup, CACHE_ENV};

#[derive(Parser, Debug)]
#[command(name = "ordrep", version, about = "Exact ordered representation functions of integer sets")]
struct Cli {
    /// Directory for cached count tables (default: $ORDREP_CACHE_DIR, else no cache).
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    /// Upper bound on worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a truncation of a named family to a set file.
    Construct(ConstructArgs),
    /// Tabulate r_k, r<=_k or r<_k.
    Count(CountArgs),
    /// Tabulate the linear-form count r_{k1..kl}.
    CountForm(CountFormArgs),
    /// Compare the DP table against the generating-function encoding.
    Verify(TableArgs),
    /// Partial sums e_n, mean squared error E_n and the normalized statistic.
    ErrorScan(ScanArgs),
    /// Check (1-z) sum e_n z^n + c/(1-z) against the weighted dilation products.
    MainIdentity(IdentityArgs),
    /// List compositions of k with their weights.
    Compositions(CompositionArgs),
    /// Circle-integral checks.
    Circle(CircleArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FamilyName {
    Naturals,
    Arithmetic,
    Powers,
    MianChowla,
    Moser,
    Bernoulli,
}

#[derive(Args, Debug)]
struct ConstructArgs {
    #[arg(long, value_enum)]
    family: FamilyName,
    #[arg(long)]
    limit: u64,
    #[arg(short, long)]
    output: PathBuf,
    /// First term of an arithmetic progression.
    #[arg(long, default_value_t = 0)]
    start: u64,
    /// Common difference of an arithmetic progression.
    #[arg(long, default_value_t = 1)]
    step: u64,
    /// Exponent for `powers`.
    #[arg(long, default_value_t = 2)]
    exponent: u32,
    /// Base parameter for `moser` and `bernoulli`.
    #[arg(long, default_value_t = 2)]
    k: u32,
    /// Density constant for `bernoulli`.
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum StarArg {
    Le,
    Lt,
    Full,
}

impl StarArg {
    fn order(self) -> Result<Order> {
        match self {
            StarArg::Le => Ok(Order::Le),
            StarArg::Lt => Ok(Order::Lt),
            StarArg::Full => Err(Error::Syntax("--star full here; use le or lt".into())),
        }
    }

    fn star(self) -> Star {
        match self {
            StarArg::Le => Star::Le,
            StarArg::Lt => Star::Lt,
            StarArg::Full => Star::Full,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Dp,
    Gf,
    Both,
}

#[derive(Args, Debug)]
struct TableArgs {
    #[arg(long)]
    set: PathBuf,
    #[arg(long)]
    k: u32,
    #[arg(long, value_enum)]
    star: StarArg,
    #[arg(long)]
    limit: usize,
}

#[derive(Args, Debug)]
struct CountArgs {
    #[command(flatten)]
    table: TableArgs,
    #[arg(long, value_enum, default_value_t = MethodArg::Dp)]
    method: MethodArg,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CountFormArgs {
    #[arg(long)]
    set: PathBuf,
    /// Comma-separated positive coefficients, e.g. `1,2`.
    #[arg(long)]
    coeffs: String,
    #[arg(long)]
    limit: usize,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ScanArgs {
    #[command(flatten)]
    table: TableArgs,
    /// Constant `c` as `p/q` or a decimal.
    #[arg(long)]
    c: String,
    /// Fit |e_n| ~ n^alpha over `from:to`.
    #[arg(long)]
    fit: Option<String>,
}

#[derive(Args, Debug)]
struct IdentityArgs {
    #[command(flatten)]
    table: TableArgs,
    #[arg(long)]
    c: String,
}

#[derive(Args, Debug)]
struct CompositionArgs {
    #[arg(long)]
    k: u32,
    #[arg(long, value_enum, default_value_t = StarArg::Le)]
    star: StarArg,
    /// Merge compositions that are rearrangements of one partition.
    #[arg(long)]
    grouped: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum CheckName {
    Parseval,
    Product,
    Nokernel,
    Dilated,
    Elliptic,
    Powersum,
    Logsum,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SequenceName {
    Zero,
    QuarterOverLog,
    Boundary,
}

#[derive(Args, Debug)]
struct CircleArgs {
    #[arg(long, value_enum)]
    check: CheckName,
    /// Set file for parseval, product, nokernel and dilated.
    #[arg(long)]
    set: Option<PathBuf>,
    /// Comma-separated radii.
    #[arg(long)]
    r: Option<String>,
    #[arg(long, default_value_t = 2)]
    k: u32,
    #[arg(long, default_value_t = 1)]
    m: u32,
    #[arg(long, default_value_t = 1)]
    i: u32,
    /// Smoothing length; defaults to the value chosen from r, k and --eps.
    #[arg(long = "M")]
    kernel_length: Option<u64>,
    #[arg(long, default_value_t = 1.0)]
    eps: f64,
    /// Also require the grid trend to decrease (product).
    #[arg(long)]
    trend: bool,
    #[arg(long)]
    nodes: Option<usize>,
    /// Series order for parseval and dilated (default: the set's limit).
    #[arg(long)]
    order: Option<usize>,
    /// Exponents for the parseval lower bound.
    #[arg(long, default_value = "2,3,4")]
    ks: String,
    /// Scale D for powersum, as `p/q` or a decimal.
    #[arg(long, default_value = "1")]
    d: String,
    #[arg(long, value_enum, default_value_t = SequenceName::QuarterOverLog)]
    sequence: SequenceName,
}

/// Runs the CLI on `args` (including the program name) against the process's stdout and stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(rendered.as_bytes())
            } else {
                err.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    let cache = cli
        .cache_dir
        .clone()
        .or_else(|| std::env::var_os(CACHE_ENV).map(PathBuf::from))
        .map(Cache::new);
    // Output is buffered so the work can run inside a thread pool.
    let mut ctx = Context {
        format: cli.format,
        cache,
        out: Vec::new(),
        err: Vec::new(),
    };
    let result = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
            Ok(pool) => pool.install(|| dispatch(&cli.command, &mut ctx)),
            Err(e) => Err(Error::InvalidParameter(format!("thread pool: {e}"))),
        },
        None => dispatch(&cli.command, &mut ctx),
    };
    let code = match result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            let _ = writeln!(ctx.err, "error: {e}");
            if e.is_precondition() {
                3
            } else {
                2
            }
        }
    };
    let _ = out.write_all(&ctx.out);
    let _ = err.write_all(&ctx.err);
    code
}

struct Context {
    format: Format,
    cache: Option<Cache>,
    out: Vec<u8>,
    err: Vec<u8>,
}

impl Context {
    fn emit(&mut self, body: &str, output: Option<&Path>) -> Result<()> {
        match output {
            Some(path) => std::fs::write(path, body).map_err(|e| Error::io(path, e)),
            None => self
                .out
                .write_all(body.as_bytes())
                .map_err(|e| Error::io("<stdout>", e)),
        }
    }

    fn warn(&mut self, msg: &str) {
        let _ = writeln!(self.err, "warning: {msg}");
    }

    /// Looks the table up in the cache, computing and storing it on a miss.
    fn cached(&mut self, key: CacheKey, compute: impl FnOnce() -> Result<RepTable>) -> Result<RepTable> {
        let Some(cache) = self.cache.clone() else {
            return compute();
        };
        match cache.lookup(&key) {
            Lookup::Hit(table) => return Ok(table),
            Lookup::Miss => {}
            Lookup::Corrupt(reason) => self.warn(&format!("ignoring cache entry {reason}")),
        }
        let table = compute()?;
        if let Err(e) = cache.store(&table) {
            self.warn(&format!("could not store cache entry: {e}"));
        }
        Ok(table)
    }
}

fn dispatch(command: &Command, ctx: &mut Context) -> Result<bool> {
    match command {
        Command::Construct(a) => construct(a, ctx),
        Command::Count(a) => count(a, ctx),
        Command::CountForm(a) => count_form(a, ctx),
        Command::Verify(a) => verify(a, ctx),
        Command::ErrorScan(a) => error_scan(a, ctx),
        Command::MainIdentity(a) => main_identity(a, ctx),
        Command::Compositions(a) => compositions(a, ctx),
        Command::Circle(a) => circle(a, ctx),
    }
}

/// `# key: value` lines heading every CSV body.
fn csv_header(command: &str, params: &[(&str, String)], digest: Option<&str>) -> String {
    let mut out = format!("# schema_version: {SCHEMA_VERSION}\n# command: {command}\n");
    for (k, v) in params {
        out.push_str(&format!("# {k}: {v}\n"));
    }
    if let Some(d) = digest {
        out.push_str(&format!("# set_digest: {d}\n"));
    }
    out
}

/// Canonical JSON envelope: sorted keys, parameters echoed.
fn json_envelope(command: &str, params: &[(&str, String)], digest: Option<&str>, result: Value) -> String {
    let params: serde_json::Map<String, Value> = params
        .iter()
        .map(|(k, v)| (k.to_string(), Value::String(v.clone())))
        .collect();
    let value = json!({
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "params": params,
        "set_digest": digest,
        "result": result,
    });
    serde_json::to_string_pretty(&value).expect("value serializes") + "\n"
}

fn load_set(path: &Path) -> Result<IntegerSet> {
    IntegerSet::from_file(path)
}

fn construct(a: &ConstructArgs, ctx: &mut Context) -> Result<bool> {
    let family = match a.family {
        FamilyName::Naturals => Family::Naturals,
        FamilyName::Arithmetic => Family::Arithmetic { start: a.start, step: a.step },
        FamilyName::Powers => Family::Powers { exponent: a.exponent },
        FamilyName::MianChowla => Family::MianChowla,
        FamilyName::Moser => Family::Moser { k: a.k as u64 },
        FamilyName::Bernoulli => Family::Bernoulli { k: a.k, c: a.c, seed: a.seed },
    };
    let set = construct_family(&FamilySpec::new(family, a.limit))?;
    set.write_file(&a.output)?;
    let _ = writeln!(
        ctx.err,
        "wrote {} elements up to {} to {}",
        set.len(),
        set.limit(),
        a.output.display()
    );
    Ok(true)
}

fn table_params(t: &TableArgs) -> Vec<(&'static str, String)> {
    vec![
        ("set", t.set.display().to_string()),
        ("k", t.k.to_string()),
        ("star", t.star.star().to_string()),
        ("limit", t.limit.to_string()),
    ]
}

fn compute_table(set: &IntegerSet, star: StarArg, k: u32, n: usize, method: Method) -> Result<RepTable> {
    match (star, method) {
        (StarArg::Le, Method::Dp) => count_ordered_le(set, k, n),
        (StarArg::Lt, Method::Dp) => count_ordered_lt(set, k, n),
        (StarArg::Full, Method::Dp) => count_full_dp(set, k, n),
        (StarArg::Full, Method::Gf) => count_full(set, k, n),
        (s, Method::Gf) => count_gf(set, k, s.order()?, n),
    }
}

fn emit_table(table: &RepTable, params: &[(&str, String)], ctx: &mut Context, output: Option<&Path>) -> Result<()> {
    let body = match ctx.format {
        Format::Json => table.to_json(),
        Format::Csv => csv_header("count", params, Some(&table.set_digest)) + &table.to_csv(),
    };
    ctx.emit(&body, output)
}

fn count(a: &CountArgs, ctx: &mut Context) -> Result<bool> {
    let t = &a.table;
    let set = load_set(&t.set)?;
    let methods: &[Method] = match a.method {
        MethodArg::Dp => &[Method::Dp],
        MethodArg::Gf => &[Method::Gf],
        MethodArg::Both => &[Method::Dp, Method::Gf],
    };
    let mut tables = Vec::new();
    for &method in methods {
        let key = CacheKey {
            set_digest: set.digest(),
            k: t.k,
            star: t.star.star(),
            limit: t.limit,
            method,
        };
        tables.push(ctx.cached(key, || compute_table(&set, t.star, t.k, t.limit, method))?);
    }
    let mut params = table_params(t);
    params.push(("method", format!("{:?}", a.method).to_lowercase()));
    emit_table(&tables[0], &params, ctx, a.output.as_deref())?;
    if let [dp, gf] = tables.as_slice() {
        if let Some(n) = dp.first_difference(gf) {
            let _ = writeln!(
                ctx.err,
                "dp and gf differ first at n = {n}: {} vs {}",
                dp.counts[n], gf.counts[n]
            );
            return Ok(false);
        }
    }
    Ok(true)
}

fn count_form(a: &CountFormArgs, ctx: &mut Context) -> Result<bool> {
    let set = load_set(&a.set)?;
    let coeffs = parse_coeffs(&a.coeffs)?;
    let key = CacheKey {
        set_digest: set.digest(),
        k: coeffs.len() as u32,
        star: Star::LinearForm(coeffs.clone()),
        limit: a.limit,
        method: Method::Gf,
    };
    let table = ctx.cached(key, || count_linear_form(&set, &coeffs, a.limit))?;
    let params = [
        ("set", a.set.display().to_string()),
        ("coeffs", a.coeffs.clone()),
        ("limit", a.limit.to_string()),
    ];
    emit_table(&table, &params, ctx, a.output.as_deref())?;
    Ok(true)
}

fn verify(a: &TableArgs, ctx: &mut Context) -> Result<bool> {
    let set = load_set(&a.set)?;
    let (mismatch, detail) = match a.star {
        StarArg::Full => {
            let dp = count_full_dp(&set, a.k, a.limit)?;
            let gf = count_full(&set, a.k, a.limit)?;
            let n = dp.first_difference(&gf);
            (n, n.map(|n| (dp.counts[n].to_string(), gf.counts[n].to_string())))
        }
        s => {
            let report = verify_identity(&set, a.k, s.order()?, a.limit)?;
            let m = report.first_mismatch;
            (m.as_ref().map(|m| m.n), m.map(|m| (m.dp.to_string(), m.gf.to_string())))
        }
    };
    let params = table_params(a);
    let digest = set.digest();
    let body = match ctx.format {
        Format::Json => json_envelope(
            "verify",
            &params,
            Some(&digest),
            json!({
                "agree": mismatch.is_none(),
                "first_mismatch": mismatch,
                "dp": detail.as_ref().map(|d| d.0.clone()),
                "gf": detail.as_ref().map(|d| d.1.clone()),
            }),
        ),
        Format::Csv => {
            let mut s = csv_header("verify", &params, Some(&digest));
            s.push_str("agree,first_mismatch,dp,gf\n");
            match (mismatch, detail) {
                (Some(n), Some((dp, gf))) => s.push_str(&format!("false,{n},{dp},{gf}\n")),
                _ => s.push_str("true,,,\n"),
            }
            s
        }
    };
    ctx.emit(&body, None)?;
    Ok(mismatch.is_none())
}

fn table_for_scan(set: &IntegerSet, t: &TableArgs, ctx: &mut Context) -> Result<RepTable> {
    let key = CacheKey {
        set_digest: set.digest(),
        k: t.k,
        star: t.star.star(),
        limit: t.limit,
        method: Method::Dp,
    };
    ctx.cached(key, || compute_table(set, t.star, t.k, t.limit, Method::Dp))
}

fn parse_window(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::Syntax(format!("window {s:?}, expected FROM:TO"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

fn profile_rows(p: &ErrorProfile) -> Vec<Value> {
    (0..p.e.len())
        .map(|n| {
            json!({
                "n": n,
                "e": p.e[n].to_string(),
                "mse": p.mse_at(n).map(|q| q.to_string()),
                "ef_stat": p.ef_stat_at(n),
            })
        })
        .collect()
}

fn error_scan(a: &ScanArgs, ctx: &mut Context) -> Result<bool> {
    let t = &a.table;
    let set = load_set(&t.set)?;
    let c = parse_rational(&a.c)?;
    let table = table_for_scan(&set, t, ctx)?;
    let (profile, tail) = mean_squared_error(&table, &c)?;
    let fit = match &a.fit {
        Some(w) => {
            let (from, to) = parse_window(w)?;
            let abs_e: Vec<f64> = profile
                .e
                .iter()
                .map(|e| e.to_f64().map(f64::abs).unwrap_or(f64::NAN))
                .collect();
            Some(fit_exponent(&abs_e, from..=to)?)
        }
        None => None,
    };
    let mut params = table_params(t);
    params.push(("c", c.to_string()));
    if let Some(w) = &a.fit {
        params.push(("fit", w.clone()));
    }
    let digest = table.set_digest.clone();
    let tail_json = serde_json::to_value(&tail).expect("tail serializes");
    let fit_json = fit.map(|f| json!({"alpha": f.alpha, "r_squared": f.r_squared}));
    let body = match ctx.format {
        Format::Json => json_envelope(
            "error-scan",
            &params,
            Some(&digest),
            json!({"tail": tail_json, "fit": fit_json, "rows": profile_rows(&profile)}),
        ),
        Format::Csv => {
            let mut s = csv_header("error-scan", &params, Some(&digest));
            s.push_str(&format!("# tail: {}\n", serde_json::to_string(&tail_json).expect("serializes")));
            if let Some(f) = fit {
                s.push_str(&format!("# fit: alpha={:e} r_squared={:e}\n", f.alpha, f.r_squared));
            }
            s + &profile.to_csv()
        }
    };
    ctx.emit(&body, None)?;
    Ok(true)
}

fn main_identity(a: &IdentityArgs, ctx: &mut Context) -> Result<bool> {
    let t = &a.table;
    let set = load_set(&t.set)?;
    let c = parse_rational(&a.c)?;
    let report = check_main_identity(&set, t.k, t.star.order()?, &c, t.limit)?;
    let mut params = table_params(t);
    params.push(("c", c.to_string()));
    let digest = set.digest();
    let body = match ctx.format {
        Format::Json => json_envelope(
            "main-identity",
            &params,
            Some(&digest),
            json!({"holds": report.holds(), "first_mismatch": report.first_mismatch}),
        ),
        Format::Csv => {
            let m = report.first_mismatch.map(|n| n.to_string()).unwrap_or_default();
            csv_header("main-identity", &params, Some(&digest))
                + &format!("holds,first_mismatch\n{},{m}\n", report.holds())
        }
    };
    ctx.emit(&body, None)?;
    Ok(report.holds())
}

fn join_parts(parts: &[u32]) -> String {
    parts.iter().map(u32::to_string).collect::<Vec<_>>().join("+")
}

fn compositions(a: &CompositionArgs, ctx: &mut Context) -> Result<bool> {
    let order = a.star.order()?;
    let rows: Vec<(String, usize, BigRational)> = if a.grouped {
        group_by_partition(a.k, order)?
            .into_iter()
            .map(|t| (join_parts(&t.flat_parts()), t.m() as usize, t.weight))
            .collect()
    } else {
        enumerate_compositions(a.k)?
            .into_iter()
            .map(|c| (join_parts(&c.parts), c.m(), c.weight(order).clone()))
            .collect()
    };
    let params = [
        ("k", a.k.to_string()),
        ("star", order.to_string()),
        ("grouped", a.grouped.to_string()),
    ];
    let body = match ctx.format {
        Format::Json => json_envelope(
            "compositions",
            &params,
            None,
            Value::Array(
                rows.iter()
                    .map(|(p, m, w)| json!({"parts": p, "m": m, "weight": w.to_string()}))
                    .collect(),
            ),
        ),
        Format::Csv => {
            let mut s = csv_header("compositions", &params, None);
            s.push_str("parts,m,numerator,denominator\n");
            for (p, m, w) in &rows {
                s.push_str(&format!("{p},{m},{},{}\n", w.numer(), w.denom()));
            }
            s
        }
    };
    ctx.emit(&body, None)?;
    Ok(true)
}

fn parse_grid(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| Error::Syntax(format!("radius {x:?}")))
        })
        .collect()
}

fn merge(reports: Vec<CheckReport>) -> CheckReport {
    let mut iter = reports.into_iter();
    let mut first = iter.next().expect("at least one report");
    for r in iter {
        first.passed &= r.passed;
        first.rows.extend(r.rows);
        if let Some(note) = r.note {
            first.note = Some(match first.note.take() {
                Some(n) => format!("{n}; {note}"),
                None => note,
            });
        }
    }
    first
}

fn circle(a: &CircleArgs, ctx: &mut Context) -> Result<bool> {
    let default_grid = match a.check {
        CheckName::Logsum => "0.9,0.99,0.999",
        CheckName::Elliptic => "0.8,0.9,0.99",
        _ => "0.8,0.9,0.95",
    };
    let grid = parse_grid(a.r.as_deref().unwrap_or(default_grid))?;
    let set = a.set.as_deref().map(load_set).transpose()?;
    let need_set = || {
        set.as_ref()
            .ok_or_else(|| Error::Syntax("missing --set for this check".into()))
    };
    let series_order = |s: &IntegerSet| a.order.unwrap_or(s.limit() as usize);
    let report = match a.check {
        CheckName::Parseval => {
            let s = need_set()?;
            let g = set_series(s, series_order(s))?;
            let ks = parse_coeffs(&a.ks)?;
            let nodes = a.nodes.unwrap_or(2 * g.order() + 1);
            let reports = grid
                .iter()
                .map(|&r| check_parseval(&g, r, nodes, &ks))
                .collect::<Result<Vec<_>>>()?;
            merge(reports)
        }
        CheckName::Product => {
            let s = need_set()?;
            match a.kernel_length {
                Some(m_kernel) => {
                    let p = ProductParams { m_kernel, k: a.k, m: a.m, i: a.i };
                    check_product_grid(s, p, &grid, a.trend)?
                }
                None => {
                    let rows = grid
                        .iter()
                        .map(|&r| {
                            let m_kernel = smoothing_length(r, a.k, a.eps)?;
                            let p = ProductParams { m_kernel, k: a.k, m: a.m, i: a.i };
                            check_product_inequality(s, p, r)
                        })
                        .collect::<Result<Vec<_>>>()?;
                    let passed = rows.iter().all(|r| r.pass);
                    CheckReport {
                        check: "product".into(),
                        params: [("eps", a.eps.to_string())]
                            .into_iter()
                            .map(|(k, v)| (k.to_string(), v))
                            .collect(),
                        rows,
                        asserted: true,
                        passed,
                        note: None,
                    }
                }
            }
        }
        CheckName::Nokernel => check_no_kernel_inequality(need_set()?, a.k, a.m, a.i, &grid)?,
        CheckName::Dilated => {
            let s = need_set()?;
            check_dilated_eval(&set_series(s, series_order(s))?, a.i, &grid)?
        }
        CheckName::Elliptic => check_elliptic(&grid, a.nodes)?,
        CheckName::Powersum => check_power_sum_lower(&parse_rational(&a.d)?, a.k, &grid)?,
        CheckName::Logsum => {
            let (seq, asserted) = match a.sequence {
                SequenceName::Zero => (LogSequence::Zero, true),
                SequenceName::QuarterOverLog => (LogSequence::QuarterOverLog, true),
                SequenceName::Boundary => (LogSequence::Boundary, false),
            };
            check_log_weighted_sum(&seq, &grid, asserted)?
        }
    };
    let digest = set.as_ref().map(IntegerSet::digest);
    let params = [
        ("check", format!("{:?}", a.check).to_lowercase()),
        ("r", grid.iter().map(f64::to_string).collect::<Vec<_>>().join(",")),
    ];
    let body = match ctx.format {
        Format::Json => json_envelope(
            "circle",
            &params,
            digest.as_deref(),
            serde_json::to_value(&report).expect("report serializes"),
        ),
        Format::Csv => {
            let mut s = csv_header("circle", &params, digest.as_deref());
            if let Some(note) = &report.note {
                s.push_str(&format!("# note: {note}\n"));
            }
            s + &report.to_csv()
        }
    };
    ctx.emit(&body, None)?;
    Ok(report.passed)
}
