use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};

use coverfam::amplify::{composite_chain, iterate_chain, ChainParams, CompositeChainParams, IterationStats};
use coverfam::bounds::{bound_grid, bound_report, BoundReport, CertificateTable, Provenance};
use coverfam::constructions::{build, concatenate, pad_zeros, ConstructionRecipe, RecipeName};
use coverfam::product::{family_to_representation, q_lower_bound, q_upper_bound, verify_representation, QStep};
use coverfam::search::{run, Decision, SearchConfig, SearchMode, SearchStatus, Symmetry};
use coverfam::stars::{decompose, verify_forest, BipartiteGraph};
use coverfam::store::CertificateStore;
use coverfam::{family_is_covering, Alphabet, CoverTarget, Error, Family, Symbol};

#[derive(Parser)]
#[command(name = "coverfam", version, about = "Covering families over Z_s and product dimension bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check that every ordered difference of a family covers a target set.
    Verify(VerifyArgs),
    /// Emit a family from a named construction.
    Construct(ConstructArgs),
    /// Exact or randomized search for large covering families.
    Search(SearchArgs),
    /// Chain amplification for prime s.
    Amplify(AmplifyArgs),
    /// Chain amplification over an integer band, reduced mod s.
    AmplifyComposite(CompositeArgs),
    /// Turn a covering family into colorings of a clique factor.
    Transform(TransformArgs),
    /// Bounds on the product dimension Q(s, r).
    Qbounds(QboundsArgs),
    /// Bounds on R(s, q).
    Bounds(BoundsArgs),
    /// Star decomposition of a biregular bipartite graph.
    Stars(StarsArgs),
    /// Inspect or update the certificate store.
    Cache {
        #[command(subcommand)]
        action: CacheAction,
    },
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    family: PathBuf,
    /// full, units, zero-one, signed-powers:ALPHA:T, band:S, punctured:M, or a comma list.
    #[arg(long, allow_hyphen_values = true)]
    target: Option<String>,
}

#[derive(Args)]
struct ConstructArgs {
    /// binary, cyclic, ternary, concatenate, pad-zeros, z15
    #[arg(long)]
    recipe: String,
    /// Integer parameter as key=value; repeatable.
    #[arg(long = "param", value_parser = parse_param)]
    params: Vec<(String, i64)>,
    /// Operand families for concatenate and pad-zeros.
    #[arg(long)]
    family: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    Decide,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum SymmetryArg {
    Translation,
    Full,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long)]
    s: u32,
    #[arg(long)]
    q: usize,
    #[arg(long, value_enum, default_value = "exact")]
    mode: ModeArg,
    /// Size to decide in `decide` mode.
    #[arg(long)]
    r: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Node budget.
    #[arg(long)]
    budget: Option<u64>,
    /// Wall-clock limit in seconds for the exact modes.
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, value_enum)]
    symmetry: Option<SymmetryArg>,
    #[arg(long, allow_hyphen_values = true)]
    target: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AmplifyArgs {
    #[arg(long)]
    s: u32,
    /// Primitive root; the smallest one by default.
    #[arg(long)]
    alpha: Option<u32>,
    #[arg(long)]
    q: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    iterations: Option<u32>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    max_words: Option<usize>,
    #[arg(long)]
    layer_width: Option<usize>,
    /// Append this many zero columns to the output.
    #[arg(long, default_value_t = 0)]
    pad: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompositeArgs {
    #[arg(long)]
    s: u32,
    #[arg(long)]
    q: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    max_words: Option<usize>,
    #[arg(long)]
    layer_width: Option<usize>,
    /// Write the reduced family here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the band family here.
    #[arg(long)]
    band_out: Option<PathBuf>,
}

#[derive(Args)]
struct TransformArgs {
    #[arg(long)]
    family: PathBuf,
    /// Number of cliques; all rows by default.
    #[arg(long)]
    r: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct QboundsArgs {
    #[arg(long)]
    s: u32,
    #[arg(long)]
    r: u64,
    /// Certificate store whose witnesses extend the lower bounds on R.
    #[arg(long)]
    table: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Csv,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long, required_unless_present = "grid")]
    s: Option<u32>,
    #[arg(long, required_unless_present = "grid")]
    q: Option<usize>,
    #[arg(long)]
    table: Option<PathBuf>,
    /// Two ranges: `s1..s2 q1..q2`.
    #[arg(long, num_args = 2, value_names = ["S_RANGE", "Q_RANGE"])]
    grid: Option<Vec<String>>,
    #[arg(long, value_enum, default_value = "text")]
    format: FormatArg,
    /// Mark cells whose upper/lower ratio exceeds this (text format).
    #[arg(long)]
    gap_ratio: Option<f64>,
}

#[derive(Args)]
struct StarsArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    retries: u32,
}

#[derive(Subcommand)]
enum CacheAction {
    /// List the stored bounds.
    Show,
    /// Merge a search certificate or a family into the store.
    Import {
        file: PathBuf,
        /// Provenance recorded for a plain family, e.g. PaperZ15.
        #[arg(long)]
        provenance: Option<String>,
    },
    /// Drop quarantined entries and cells the constructions already give.
    Gc,
}

fn parse_param(text: &str) -> Result<(String, i64), String> {
    let (k, v) = text.split_once('=').ok_or("expected key=value")?;
    let v = v.trim().parse().map_err(|_| format!("{v:?} is not an integer"))?;
    Ok((k.trim().to_string(), v))
}

fn usage(msg: impl Into<String>) -> Error {
    Error::Input(msg.into())
}

/// 1 for a failed check, 2 for bad input, 3 for exhausted resources.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Verification(_)
        | Error::HallViolation { .. }
        | Error::AnchorTooSparse
        | Error::InconsistentBounds { .. } => 1,
        Error::Input(_) | Error::Io(_) | Error::Json(_) => 2,
        Error::Resource(_) | Error::BudgetExhausted { .. } | Error::RandomnessExhausted { .. } => 3,
    }
}

fn now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

/// A family file, or the witness inside a search certificate.
fn load_family(path: &Path) -> Result<Family, Error> {
    let text = read(path)?;
    match Family::from_json(&text) {
        Ok(f) => Ok(f),
        Err(e) => coverfam::search::SearchCertificate::from_json(&text)
            .map(|c| c.family)
            .map_err(|_| e),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Error> {
    match out {
        Some(p) => fs::write(p, format!("{text}\n")).map_err(Error::from),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn parse_target(spec: Option<&str>, alphabet: Alphabet) -> Result<CoverTarget, Error> {
    let modulus = alphabet.modulus();
    let need_mod = |what: &str| modulus.ok_or_else(|| usage(format!("target {what} needs a Z_s family")));
    let num = |t: &str| -> Result<u32, Error> { t.parse().map_err(|_| usage(format!("bad number {t:?}"))) };
    let Some(spec) = spec else {
        return match modulus {
            Some(s) => CoverTarget::full(s),
            None => Err(usage("band families need an explicit --target")),
        };
    };
    let (head, rest) = spec.split_once(':').unwrap_or((spec, ""));
    match head {
        "full" => CoverTarget::full(need_mod("full")?),
        "units" => CoverTarget::units(need_mod("units")?),
        "zero-one" => CoverTarget::zero_one(need_mod("zero-one")?),
        "signed-powers" => {
            let (a, t) = rest
                .split_once(':')
                .ok_or_else(|| usage("signed-powers:ALPHA:T"))?;
            CoverTarget::signed_powers(need_mod("signed-powers")?, num(a)?, num(t)?)
        }
        "band" => CoverTarget::integer_band(num(rest)?),
        "punctured" => CoverTarget::punctured_band(num(rest)?),
        _ => {
            let symbols = spec
                .split(',')
                .map(|t| t.trim().parse::<Symbol>().map_err(|_| usage(format!("bad target {spec:?}"))))
                .collect::<Result<Vec<_>, _>>()?;
            CoverTarget::from_symbols(alphabet.difference_alphabet(), symbols)
        }
    }
}

fn cmd_verify(a: VerifyArgs) -> Result<u8, Error> {
    let f = load_family(&a.family)?;
    let target = parse_target(a.target.as_deref(), f.alphabet())?;
    let report = family_is_covering(&f, &target)?;
    match report.failure {
        None => {
            println!("PASS: {} rows, {} ordered pairs checked", f.len(), report.pairs_checked);
            Ok(0)
        }
        Some(p) => {
            println!("FAIL: rows {} - {} miss {:?}", p.i, p.j, p.missing);
            println!("  row {}: {:?}", p.i, f.rows()[p.i]);
            println!("  row {}: {:?}", p.j, f.rows()[p.j]);
            Ok(1)
        }
    }
}

fn cmd_construct(a: ConstructArgs) -> Result<u8, Error> {
    let name = RecipeName::parse(&a.recipe)?;
    let built = match name {
        RecipeName::Concatenate => {
            let [f1, f2] = &a.family[..] else {
                return Err(usage("concatenate needs two --family files"));
            };
            concatenate(&load_family(f1)?, &load_family(f2)?)?
        }
        RecipeName::PadZeros => {
            let [f] = &a.family[..] else {
                return Err(usage("pad-zeros needs one --family file"));
            };
            let extra = a
                .params
                .iter()
                .find(|(k, _)| k == "extra")
                .map(|&(_, v)| v)
                .ok_or_else(|| usage("pad-zeros needs --param extra=K"))?;
            let extra = usize::try_from(extra).map_err(|_| usage("extra must be non-negative"))?;
            pad_zeros(&load_family(f)?, extra)?
        }
        _ => build(&ConstructionRecipe {
            name,
            params: a.params.into_iter().collect(),
        })?,
    };
    eprintln!("{:?}: {} rows of length {}", built.recipe.name, built.family.len(), built.family.q());
    emit(a.out.as_deref(), &built.family.to_json())?;
    Ok(0)
}

fn cmd_search(a: SearchArgs) -> Result<u8, Error> {
    let mode = match a.mode {
        ModeArg::Exact => SearchMode::ExactMax,
        ModeArg::Decide => SearchMode::DecideAtLeast(a.r.ok_or_else(|| usage("decide mode needs --r"))?),
        ModeArg::Random => SearchMode::RandomGreedy,
    };
    let mut cfg = SearchConfig::new(a.s, a.q, mode)?.with_seed(a.seed);
    if let Some(spec) = &a.target {
        cfg = cfg.with_target(parse_target(Some(spec), Alphabet::modring(a.s)?)?);
    }
    if let Some(b) = a.budget {
        cfg = cfg.with_budget(b);
    }
    if let Some(secs) = a.time_limit {
        let limit = Duration::try_from_secs_f64(secs).map_err(|_| usage("--time-limit must be a non-negative number"))?;
        cfg = cfg.with_time_limit(limit);
    }
    if let Some(w) = a.workers {
        cfg = cfg.with_workers(w);
    }
    if let Some(sym) = a.symmetry {
        cfg = cfg.with_symmetry(match sym {
            SymmetryArg::Translation => Symmetry::Translation,
            SymmetryArg::Full => Symmetry::Full,
        });
    }
    match run(&cfg)? {
        Decision::Witness(cert) => {
            println!("{}", cert.claim);
            eprintln!("{} nodes explored", cert.nodes_explored);
            if let Some(out) = &a.out {
                emit(Some(out), &cert.to_json())?;
            }
            Ok(0)
        }
        Decision::Refuted { nodes_explored } => {
            println!("Refuted");
            eprintln!("{nodes_explored} nodes explored");
            Ok(1)
        }
        Decision::Incomplete(cert) => {
            println!("{} (budget exhausted)", cert.claim);
            eprintln!("{} nodes explored", cert.nodes_explored);
            if let Some(out) = &a.out {
                emit(Some(out), &cert.to_json())?;
            }
            debug_assert_eq!(cert.status, SearchStatus::Incomplete);
            Ok(3)
        }
    }
}

fn print_stats(stats: &[IterationStats]) {
    for st in stats {
        eprintln!(
            "round {}: length {}, {} chains available, {} words kept",
            st.iteration, st.length, st.available, st.emitted
        );
    }
}

fn cmd_amplify(a: AmplifyArgs) -> Result<u8, Error> {
    let base = ChainParams::preset(a.s).unwrap_or_else(|| ChainParams::new(a.s, 0, 0, 0));
    let mut p = ChainParams {
        alpha: a.alpha,
        seed: a.seed,
        ..base
    };
    if let Some(q) = a.q {
        p.q = q;
    }
    if let Some(n) = a.n {
        p.n = n;
    }
    if let Some(t) = a.iterations {
        p.iterations = t;
    }
    if let Some(m) = a.max_words {
        p.max_words = m;
    }
    if let Some(w) = a.layer_width {
        p.layer_width = w;
    }
    if p.q == 0 || p.n == 0 || p.iterations == 0 {
        return Err(usage(format!("no preset for s = {}; pass --q, --n and --iterations", a.s)));
    }
    let outcome = iterate_chain(&p)?;
    print_stats(&outcome.stats);
    eprintln!(
        "alpha = {}, {} words cover {:?}",
        outcome.alpha,
        outcome.family.len(),
        outcome.target.symbols()
    );
    let family = if a.pad > 0 {
        pad_zeros(&outcome.family, a.pad)?.family
    } else {
        outcome.family
    };
    emit(a.out.as_deref(), &family.to_json())?;
    Ok(0)
}

fn cmd_composite(a: CompositeArgs) -> Result<u8, Error> {
    let mut p = CompositeChainParams {
        seed: a.seed,
        ..CompositeChainParams::preset(a.s)
    };
    if let Some(q) = a.q {
        p.q = q;
    }
    if let Some(n) = a.n {
        p.n = n;
    }
    if let Some(m) = a.max_words {
        p.max_words = m;
    }
    if let Some(w) = a.layer_width {
        p.layer_width = w;
    }
    let outcome = composite_chain(&p)?;
    print_stats(&outcome.stats);
    eprintln!(
        "{} words over [1, {}]; reduced length {}",
        outcome.family.len(),
        p.q,
        outcome.reduced.q()
    );
    if let Some(b) = &a.band_out {
        emit(Some(b), &outcome.family.to_json())?;
    }
    emit(a.out.as_deref(), &outcome.reduced.to_json())?;
    Ok(0)
}

fn cmd_transform(a: TransformArgs) -> Result<u8, Error> {
    let f = load_family(&a.family)?;
    let r = a.r.unwrap_or(f.len());
    let rep = family_to_representation(&f, r)?;
    let report = verify_representation(&rep);
    if !report.passed {
        println!("FAIL: {:?}", report.violation);
        return Ok(1);
    }
    eprintln!("K_{}({}) in dimension {}", rep.graph.s, rep.graph.r, rep.q);
    emit(a.out.as_deref(), &rep.to_json())?;
    Ok(0)
}

fn load_table(path: Option<&Path>) -> Result<CertificateTable, Error> {
    let Some(path) = path else {
        return Ok(CertificateTable::new());
    };
    let store = CertificateStore::from_json(path, &read(path)?)?;
    for w in store.warnings() {
        eprintln!("warning: {w}");
    }
    Ok(store.table())
}

fn cmd_qbounds(a: QboundsArgs) -> Result<u8, Error> {
    let table = load_table(a.table.as_deref())?;
    let lower = q_lower_bound(a.s, a.r);
    let upper = q_upper_bound(a.s, a.r, &table)?;
    println!("Q({}, {}): {} <= Q <= {}", a.s, a.r, lower, upper.value);
    for step in &upper.trace {
        match step {
            QStep::Direct { r, q, lower } => {
                println!("  R({}, {q}) >= {} ({}) covers r = {r}", a.s, lower.value, lower.provenance)
            }
            QStep::Split { r, r1, r2, q } => println!("  r = {r} <= {r1} * {r2}: q = {q}"),
        }
    }
    Ok(0)
}

fn parse_range(text: &str) -> Result<(u64, u64), Error> {
    let (lo, hi) = text
        .split_once("..")
        .ok_or_else(|| usage(format!("expected a range like 2..8, got {text:?}")))?;
    let p = |t: &str| t.trim().trim_start_matches('=').parse::<u64>().map_err(|_| usage(format!("bad range {text:?}")));
    let (lo, hi) = (p(lo)?, p(hi)?);
    if lo > hi {
        return Err(usage(format!("empty range {text:?}")));
    }
    Ok((lo, hi))
}

fn print_reports(reports: &[BoundReport], format: FormatArg, gap_ratio: Option<f64>) {
    match format {
        FormatArg::Csv => {
            println!("{}", BoundReport::CSV_HEADER);
            for r in reports {
                println!("{}", r.csv_row());
            }
        }
        FormatArg::Text => {
            for r in reports {
                let exact = if r.is_exact() { "  exact" } else { "" };
                let wide = match gap_ratio {
                    Some(g) if r.gap_ratio() > g => "  wide gap",
                    _ => "",
                };
                println!(
                    "R({}, {}): {} ({}) <= R <= {} ({}){exact}{wide}",
                    r.s, r.q, r.lower.value, r.lower.provenance, r.upper.value, r.upper.provenance
                );
            }
        }
    }
}

fn cmd_bounds(a: BoundsArgs) -> Result<u8, Error> {
    let table = load_table(a.table.as_deref())?;
    let reports = match &a.grid {
        Some(g) => {
            let (s1, s2) = parse_range(&g[0])?;
            let (q1, q2) = parse_range(&g[1])?;
            let to32 = |x: u64| u32::try_from(x).map_err(|_| usage("s out of range"));
            bound_grid(to32(s1)?..=to32(s2)?, q1 as usize..=q2 as usize, &table)?
        }
        None => {
            let (s, q) = (a.s.expect("clap enforces --s"), a.q.expect("clap enforces --q"));
            vec![bound_report(s, q, &table)?]
        }
    };
    print_reports(&reports, a.format, a.gap_ratio);
    Ok(0)
}

fn cmd_stars(a: StarsArgs) -> Result<u8, Error> {
    let g = BipartiteGraph::from_text(&read(&a.graph)?)?;
    let forest = decompose(&g, a.seed, a.retries)?;
    let min = g.guaranteed_min_size();
    if !verify_forest(&g, &forest, min) {
        println!("FAIL: forest does not verify");
        return Ok(1);
    }
    let stars = forest.stars();
    println!(
        "{} stars, min size {} (guaranteed {min}), {} attempts",
        stars.len(),
        forest.min_size,
        forest.attempts
    );
    for (c, leaves) in stars {
        let list: Vec<String> = leaves.iter().map(u32::to_string).collect();
        println!("{c}: {}", list.join(" "));
    }
    Ok(0)
}

fn parse_provenance(name: &str) -> Result<Provenance, Error> {
    serde_json::from_value(serde_json::Value::String(name.to_string()))
        .map_err(|_| usage(format!("unknown provenance {name:?}")))
}

fn cmd_cache(action: CacheAction) -> Result<u8, Error> {
    let mut store = CertificateStore::open_default()?;
    for w in store.warnings() {
        eprintln!("warning: {w}");
    }
    match action {
        CacheAction::Show => {
            println!("{} ({} cells)", store.path().display(), store.len());
            for e in store.entries() {
                let lower = e
                    .lower
                    .as_ref()
                    .map_or("-".to_string(), |l| format!("{} ({})", l.value, l.provenance));
                let upper = e
                    .upper
                    .as_ref()
                    .map_or("-".to_string(), |u| format!("{} ({})", u.value, u.provenance));
                println!("R({}, {}): lower {lower}, upper {upper}", e.s, e.q);
            }
            for q in store.quarantine() {
                println!("quarantined R({}, {}): {}", q.entry.s, q.entry.q, q.reason);
            }
            Ok(0)
        }
        CacheAction::Import { file, provenance } => {
            let text = read(&file)?;
            let source = file.display().to_string();
            let changed = if let Ok(cert) = coverfam::search::SearchCertificate::from_json(&text) {
                store.import_certificate(&cert, now())?.changed()
            } else {
                let family = Family::from_json(&text)?;
                let prov = provenance
                    .as_deref()
                    .ok_or_else(|| usage("importing a plain family needs --provenance"))?;
                store.merge_lower(family, parse_provenance(prov)?, &source, now())?
            };
            if changed {
                store.save()?;
                println!("updated");
            } else {
                println!("no change");
            }
            Ok(0)
        }
        CacheAction::Gc => {
            let removed = store.gc()?;
            store.save()?;
            println!("removed {removed}");
            Ok(0)
        }
    }
}

fn dispatch(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Verify(a) => cmd_verify(a),
        Command::Construct(a) => cmd_construct(a),
        Command::Search(a) => cmd_search(a),
        Command::Amplify(a) => cmd_amplify(a),
        Command::AmplifyComposite(a) => cmd_composite(a),
        Command::Transform(a) => cmd_transform(a),
        Command::Qbounds(a) => cmd_qbounds(a),
        Command::Bounds(a) => cmd_bounds(a),
        Command::Stars(a) => cmd_stars(a),
        Command::Cache { action } => cmd_cache(action),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
