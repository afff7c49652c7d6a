use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gw_core::derived::{
    abelian_engine, abelian_sixsecants, curve_secant_engine, format_rational, is_enumerative,
    make_table, secant_numbers, tangency_count, TableEngines, TableId, TangencyQuery,
};
use gw_core::engine::cache;
use gw_core::homology::parse_curve_class;
use gw_core::ring::{parse_ring_file_with, ClassKind};
use gw_core::verify::{
    bundled_fixture, diff_tables, divisor_suite, permutation_suite, ptexc_suite, residual_suite,
    termination_suite, vanishing_suite, SuiteReport,
};
use gw_core::{Engine, GwError};

#[derive(Parser)]
#[command(name = "gw", version, about = "Exact genus-zero Gromov-Witten invariants of blow-ups")]
struct Cli {
    /// Directory of persisted memo tables, one file per target.
    #[arg(long, global = true, env = "GW_CACHE")]
    cache: Option<PathBuf>,
    /// Worker threads for independent table cells.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one invariant.
    Gw(GwArgs),
    /// Recompute one of the standard tables.
    Table(TableArgs),
    /// Curves tangent to a k-plane at a fixed point.
    Tangency(TangencyArgs),
    /// Trisecants meeting a line and quadrisecants of a space curve.
    Secant(SecantArgs),
    /// Six-secant lines of an abelian surface in P^4.
    Abelian,
    /// Run a consistency suite.
    Verify(VerifyArgs),
    /// List persisted memo tables.
    CacheInfo,
}

#[derive(Args)]
struct Target {
    /// Dimension of the projective space.
    #[arg(long, default_value_t = 2)]
    r: usize,
    /// Number of blown-up points.
    #[arg(long, default_value_t = 0)]
    s: usize,
    /// Ring file describing another target instead of P^r(s).
    #[arg(long, conflicts_with_all = ["r", "s"])]
    ring: Option<PathBuf>,
    /// Ring file parameter, as NAME=VALUE.
    #[arg(long = "param", requires = "ring")]
    params: Vec<String>,
}

#[derive(Args)]
struct GwArgs {
    #[command(flatten)]
    target: Target,
    /// Curve class coefficients, e.g. `5,-2,-2`.
    #[arg(long, allow_hyphen_values = true)]
    beta: String,
    /// Insertions, e.g. `pt^6,H2^1,E1.2^3`.
    #[arg(long, default_value = "")]
    classes: String,
    /// Also say what the number counts when that is known.
    #[arg(long)]
    enumerative: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Tsv,
    Md,
}

#[derive(Args)]
struct TableArgs {
    /// p2-1, p3-1, p3-2, p4-1 or ex-tangency.
    #[arg(long)]
    id: String,
    /// Largest degree column.
    #[arg(long)]
    dmax: Option<i64>,
    #[arg(long, value_enum, default_value_t = Format::Tsv)]
    format: Format,
}

#[derive(Args)]
struct TangencyArgs {
    #[arg(long)]
    r: usize,
    /// Dimension of the tangent plane.
    #[arg(long)]
    k: usize,
    #[arg(long)]
    d: i64,
    /// Further constraints as classes of P^r, e.g. `pt^9` or `pt^4,H2`.
    #[arg(long, default_value = "")]
    pattern: String,
}

#[derive(Args)]
struct SecantArgs {
    /// Degree of the curve.
    #[arg(long)]
    d: i64,
    /// Genus of the curve.
    #[arg(long)]
    g: i64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Residual,
    Tables,
    Ptexc,
    Vanishing,
    Divisor,
    Permutation,
    Descent,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum)]
    suite: Suite,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Target P^r(s) for sampled suites.
    #[arg(long, default_value_t = 3)]
    r: usize,
    #[arg(long, default_value_t = 2)]
    s: usize,
    /// Largest sampled degree.
    #[arg(long, default_value_t = 3)]
    dmax: i64,
    /// Restrict `tables` to one table.
    #[arg(long)]
    id: Option<String>,
}

/// Failure of a command together with its exit status.
struct Failure {
    code: u8,
    message: String,
}

impl From<GwError> for Failure {
    fn from(e: GwError) -> Self {
        let code = match e {
            GwError::Unsupported(_) => 3,
            GwError::Parse { .. }
            | GwError::Inconsistent(_)
            | GwError::UnknownClass(_)
            | GwError::InvalidCurveClass(_)
            | GwError::NotADivisor
            | GwError::Balance { .. }
            | GwError::Precondition(_) => 2,
            _ => 1,
        };
        Failure { code, message: e.to_string() }
    }
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

/// Printed output, and whether the command's checks all passed.
type Output = Result<(String, bool), Failure>;

fn done(text: String) -> Output {
    Ok((text, true))
}

/// Memo persistence: `<dir>/<basis hash>.gwcache`.
struct CacheDir(Option<PathBuf>);

impl CacheDir {
    fn path(dir: &Path, e: &Engine) -> PathBuf {
        dir.join(format!("{}.gwcache", e.target().basis_hash()))
    }

    fn attach(&self, e: &Engine) -> Result<(), Failure> {
        if let Some(dir) = &self.0 {
            let p = Self::path(dir, e);
            if p.exists() {
                cache::load(e, &p)?;
            }
        }
        Ok(())
    }

    fn persist(&self, e: &Engine) -> Result<(), Failure> {
        if let Some(dir) = &self.0 {
            fs::create_dir_all(dir).map_err(GwError::from)?;
            cache::save(e, &Self::path(dir, e))?;
        }
        Ok(())
    }

    /// Run `f` with the engines' memo tables loaded before and saved after.
    fn around<T>(&self, engines: &[&Engine], f: impl FnOnce() -> Result<T, Failure>) -> Result<T, Failure> {
        for e in engines {
            self.attach(e)?;
        }
        let out = f();
        for e in engines {
            self.persist(e)?;
        }
        out
    }
}

fn target_engine(t: &Target) -> Result<Engine, Failure> {
    match &t.ring {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| invalid(format!("{}: {e}", path.display())))?;
            let mut params = Vec::new();
            for p in &t.params {
                let (k, v) = p
                    .split_once('=')
                    .ok_or_else(|| invalid(format!("parameter `{p}` is not NAME=VALUE")))?;
                let v: i64 = v
                    .trim()
                    .parse()
                    .map_err(|_| invalid(format!("parameter `{p}` needs an integer value")))?;
                params.push((k.trim().to_string(), v));
            }
            let params: Vec<(&str, i64)> = params.iter().map(|(k, v)| (k.as_str(), *v)).collect();
            Ok(Engine::new(parse_ring_file_with(&text, &params)?)?)
        }
        None => {
            if t.r < 2 {
                return Err(invalid("--r must be at least 2"));
            }
            Ok(Engine::blowup(t.r, t.s))
        }
    }
}

fn enumerative_reading(e: &Engine, beta: &gw_core::CurveClass) -> String {
    let t = e.target();
    let mut s = format!(
        "counts irreducible rational curves of degree {} in P^{} meeting the given general cycles",
        beta.degree(),
        t.dim
    );
    let through: Vec<String> = (1..=t.points)
        .filter(|&i| beta.e(i) != 0)
        .map(|i| format!("P{i} with multiplicity {}", -beta.e(i)))
        .collect();
    if !through.is_empty() {
        s.push_str(" and passing through ");
        s.push_str(&through.join(", "));
    }
    s
}

fn cmd_gw(args: &GwArgs, cache: &CacheDir) -> Output {
    let e = target_engine(&args.target)?;
    let t = e.target();
    let beta = parse_curve_class(t, &args.beta)?;
    let classes = t.parse_classes(&args.classes)?;
    let expanded: Vec<usize> = classes.expanded().collect();
    let value = cache.around(&[&e], || Ok(e.gw_basis(&beta, &expanded)?))?;
    let mut out = format_rational(&value);
    if args.enumerative && is_enumerative(t, &beta, &classes) {
        out.push('\n');
        out.push_str(&enumerative_reading(&e, &beta));
    }
    done(out)
}

fn table_id(name: &str) -> Result<TableId, Failure> {
    TableId::parse(name).ok_or_else(|| {
        let known: Vec<&str> = TableId::ALL.iter().map(|t| t.name()).collect();
        invalid(format!("unknown table `{name}`; known: {}", known.join(", ")))
    })
}

fn table_engines(e: &TableEngines) -> Vec<&Engine> {
    match e {
        TableEngines::Blowup(e) => vec![e],
        TableEngines::Tangency(list) => list.iter().collect(),
    }
}

fn cmd_table(args: &TableArgs, cache: &CacheDir) -> Output {
    let id = table_id(&args.id)?;
    let dmax = args.dmax.unwrap_or(id.default_dmax());
    if dmax < id.dmin() {
        return Err(invalid(format!("--dmax must be at least {}", id.dmin())));
    }
    let engines = TableEngines::new(id);
    let table = cache.around(&table_engines(&engines), || Ok(make_table(id, &engines, dmax)?))?;
    let text = match args.format {
        Format::Tsv => table.to_tsv(),
        Format::Md => table.to_markdown(),
    };
    done(text.trim_end().to_string())
}

fn cmd_tangency(args: &TangencyArgs, cache: &CacheDir) -> Output {
    if args.r < 2 {
        return Err(invalid("--r must be at least 2"));
    }
    let e = Engine::blowup(args.r, 1);
    let plain = e.base().expect("blow-up has a base");
    let mut extra = Vec::new();
    for c in plain.target().parse_classes(&args.pattern)?.expanded() {
        match plain.target().kind(c) {
            ClassKind::Ambient(a) if a > 0 => extra.push(a),
            _ => return Err(invalid(format!("`{}` is not a constraint", plain.target().class_name(c)))),
        }
    }
    let q = TangencyQuery { r: args.r, d: args.d, k: args.k, extra };
    let v = cache.around(&[&e], || Ok(tangency_count(&e, &q)?))?;
    done(format_rational(&v))
}

fn cmd_secant(args: &SecantArgs, cache: &CacheDir) -> Output {
    if args.d < 1 || args.g < 0 {
        return Err(invalid("need --d >= 1 and --g >= 0"));
    }
    let e = curve_secant_engine(args.d, args.g);
    let s = cache.around(&[&e], || Ok(secant_numbers(&e)?))?;
    done(format!("t={} q={}", format_rational(&s.t), format_rational(&s.q)))
}

fn cmd_abelian(cache: &CacheDir) -> Output {
    let e = abelian_engine();
    let v = cache.around(&[&e], || Ok(abelian_sixsecants(&e)?))?;
    done(format_rational(&v))
}

fn report_lines(reports: &[SuiteReport]) -> (String, bool) {
    let mut out = Vec::new();
    let mut ok = true;
    for r in reports {
        out.push(r.summary());
        for f in &r.failures {
            out.push(format!("  {f}"));
        }
        ok &= r.ok();
    }
    (out.join("\n"), ok)
}

fn cmd_verify(args: &VerifyArgs, cache: &CacheDir) -> Output {
    let (text, ok) = match args.suite {
        Suite::Tables => {
            let ids = match &args.id {
                Some(name) => vec![table_id(name)?],
                None => TableId::ALL.to_vec(),
            };
            let mut lines = Vec::new();
            let mut ok = true;
            for id in ids {
                let engines = TableEngines::new(id);
                let dmax = id.default_dmax();
                let table = cache.around(&table_engines(&engines), || Ok(make_table(id, &engines, dmax)?))?;
                let diffs = diff_tables(&bundled_fixture(id), &table);
                let cells = table.cells.iter().flatten().count();
                lines.push(format!("{}: {cells} cells through d = {dmax}, {} mismatches", id.name(), diffs.len()));
                lines.extend(diffs.iter().map(|d| format!("  {d}")));
                ok &= diffs.is_empty();
            }
            (lines.join("\n"), ok)
        }
        suite => {
            if args.r < 2 {
                return Err(invalid("--r must be at least 2"));
            }
            let e = Engine::blowup(args.r, args.s);
            let needs_points = match suite {
                Suite::Permutation => 2,
                Suite::Ptexc | Suite::Descent => 1,
                _ => 0,
            };
            if args.s < needs_points {
                return Err(invalid(format!("this suite needs --s >= {needs_points}")));
            }
            if args.dmax < 1 {
                return Err(invalid("--dmax must be at least 1"));
            }
            let run = match suite {
                Suite::Residual => residual_suite,
                Suite::Ptexc => ptexc_suite,
                Suite::Vanishing => vanishing_suite,
                Suite::Divisor => divisor_suite,
                Suite::Permutation => permutation_suite,
                Suite::Descent => termination_suite,
                Suite::Tables => unreachable!(),
            };
            let report = cache.around(&[&e], || Ok(run(&e, args.samples, args.seed, args.dmax)))?;
            report_lines(&[report])
        }
    };
    Ok((text, ok))
}

fn cmd_cache_info(cache: &CacheDir) -> Output {
    let Some(dir) = &cache.0 else {
        return Err(invalid("no cache directory; pass --cache or set GW_CACHE"));
    };
    let mut entries: Vec<PathBuf> = match fs::read_dir(dir) {
        Ok(rd) => rd
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "gwcache"))
            .collect(),
        Err(_) => Vec::new(),
    };
    entries.sort();
    let mut out = vec![format!("{}: {} memo table(s)", dir.display(), entries.len())];
    for p in entries {
        let text = fs::read_to_string(&p).map_err(GwError::from)?;
        let mut lines = text.lines();
        let header = lines.next().unwrap_or("");
        let mut per_target = std::collections::BTreeMap::<String, usize>::new();
        for l in lines.filter(|l| !l.is_empty()) {
            let target = l.split('|').nth(1).unwrap_or("?").to_string();
            *per_target.entry(target).or_default() += 1;
        }
        let counts: Vec<String> = per_target
            .iter()
            .map(|(t, n)| {
                let (r, s) = t.split_once(' ').unwrap_or((t, "?"));
                format!("P^{r}({s}): {n}")
            })
            .collect();
        out.push(format!(
            "{}  [{}]  {}",
            p.file_name().unwrap_or_default().to_string_lossy(),
            header,
            counts.join(", ")
        ));
    }
    done(out.join("\n"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(j) = cli.jobs {
        if j == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .expect("thread pool is configured once");
    }
    let cache = CacheDir(cli.cache.clone());
    let result = match &cli.command {
        Command::Gw(a) => cmd_gw(a, &cache),
        Command::Table(a) => cmd_table(a, &cache),
        Command::Tangency(a) => cmd_tangency(a, &cache),
        Command::Secant(a) => cmd_secant(a, &cache),
        Command::Abelian => cmd_abelian(&cache),
        Command::Verify(a) => cmd_verify(a, &cache),
        Command::CacheInfo => cmd_cache_info(&cache),
    };
    match result {
        Ok((text, ok)) => {
            println!("{text}");
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
