use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde::Serialize;

use stacksort::game::{apply_move, final_state, state_of_permutation, SystemConfig};
use stacksort::pipeline::{
    bound_stage, gf_stage, optimum_stage, GfArtifact, GfForm, OptimumArtifact, StageConfig, WeightMode,
};
use stacksort::relations::{discover_relations_with_progress, DiscoveryConfig, RuleFile};
use stacksort::{
    compute_kn, derive_forbidden, generable_perms, series_coefficients, verify_rules, ForbiddenWordSet, KnEntry,
    MoveString, MultiPoly, Perm, RationalGF, RewriteRule, SearchBudget,
};

#[derive(Parser)]
#[command(name = "stacksort", version, about = "Lower bounds for sorting with stacks in series")]
struct Cli {
    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Play a move string on a permutation and print every state.
    Simulate {
        /// Input permutation, e.g. 4231 or 10,2,3,...
        permutation: String,
        /// Digit-encoded moves, e.g. 121121232333.
        moves: String,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long)]
        json: bool,
    },
    /// Minimum number of stacks sorting every permutation of each length.
    KnTable {
        #[arg(long)]
        max_n: usize,
        #[command(flatten)]
        budget: BudgetArgs,
        #[command(flatten)]
        report: ReportArgs,
    },
    /// Permutations generated by k stacks.
    Perms {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        k: usize,
        /// Also list the permutations.
        #[arg(long)]
        list: bool,
        #[command(flatten)]
        budget: BudgetArgs,
        #[command(flatten)]
        report: ReportArgs,
    },
    /// Discover or check rewrite rules between move strings.
    Relations {
        #[command(subcommand)]
        action: RelationsCommand,
    },
    /// Generating function of the strings avoiding a forbidden set.
    Gf {
        #[command(flatten)]
        source: ForbiddenSource,
        #[command(flatten)]
        weights: WeightArgs,
        /// Print series coefficients up to this degree (univariate only).
        #[arg(long)]
        series: Option<u32>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Optimal letter weights for a generating function.
    Optimize {
        /// gf.json from `gf`, or a bare polynomial (JSON term list).
        #[arg(long)]
        gf: PathBuf,
        /// Letter-to-variable map for a bare polynomial in letter variables.
        #[arg(long, value_delimiter = ',')]
        identify: Option<Vec<usize>>,
        /// Forbidden set, needed when gf.json holds a numeric form.
        #[command(flatten)]
        source: ForbiddenSource,
        #[arg(long, default_value_t = 8)]
        max_weight: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Full chain from relations to the bound constant, with artifacts.
    Bound {
        /// Maximum relation length; optional with --rules-file.
        #[arg(long)]
        max_len: Option<usize>,
        /// Reuse a rules.json instead of running discovery.
        #[arg(long)]
        rules_file: Option<PathBuf>,
        #[command(flatten)]
        weights: WeightArgs,
        #[arg(long, default_value_t = 8)]
        max_weight: u32,
        #[arg(long, default_value_t = 1 << 27)]
        max_strings: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Subcommand)]
enum RelationsCommand {
    Discover {
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long)]
        max_len: usize,
        #[arg(long, default_value_t = 1 << 27)]
        max_strings: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    Verify {
        rules: PathBuf,
    },
}

#[derive(Args)]
struct BudgetArgs {
    /// Distinct states one search may visit.
    #[arg(long, default_value_t = SearchBudget::default().max_states)]
    max_states: usize,
}

#[derive(Args)]
struct ReportArgs {
    /// Print JSON instead of a table.
    #[arg(long)]
    json: bool,
    /// Also write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ForbiddenSource {
    /// rules.json whose left-hand sides are forbidden.
    #[arg(long, conflicts_with = "forbidden")]
    rules_file: Option<PathBuf>,
    /// Comma-separated forbidden words, e.g. 13,1223,1232.
    #[arg(long, value_delimiter = ',')]
    forbidden: Option<Vec<String>>,
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightChoice {
    Uniform,
    Optimized,
}

#[derive(Args)]
struct WeightArgs {
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, value_enum, default_value = "uniform")]
    weights: WeightChoice,
    /// Letter-to-variable map for optimized weights, e.g. 0,1,0.
    #[arg(long, value_delimiter = ',')]
    identify: Option<Vec<usize>>,
}

impl WeightArgs {
    fn stage_config(&self, max_weight: u32) -> Result<StageConfig> {
        SystemConfig::new(self.k)?;
        let mode = match self.weights {
            WeightChoice::Uniform => WeightMode::Uniform,
            WeightChoice::Optimized => WeightMode::Optimized,
        };
        if let Some(map) = &self.identify {
            if map.len() != self.k + 1 {
                bail!("--identify needs {} entries, got {}", self.k + 1, map.len());
            }
        }
        let mut cfg = StageConfig::new(self.k, mode);
        cfg.identification = self.identify.clone();
        cfg.max_weight = max_weight;
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Simulate { permutation, moves, k, json } => simulate(&permutation, &moves, k, json),
        Command::KnTable { max_n, budget, report } => kn_table(max_n, budget, report),
        Command::Perms { n, k, list, budget, report } => perms(n, k, list, budget, report),
        Command::Relations { action } => relations(action),
        Command::Gf { source, weights, series, out } => gf(source, weights, series, out),
        Command::Optimize { gf, identify, source, max_weight, out } => optimize(&gf, identify, source, max_weight, out),
        Command::Bound { max_len, rules_file, weights, max_weight, max_strings, out_dir } => {
            bound(max_len, rules_file, weights, max_weight, max_strings, &out_dir)
        }
    }
}

// ── Helpers ──

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, to_json(value)?).with_context(|| format!("writing {}", path.display()))
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>, stdout_json: bool) -> Result<()> {
    if let Some(p) = out {
        write_json(p, value)?;
    }
    if stdout_json {
        print!("{}", to_json(value)?);
    }
    Ok(())
}

fn read_rules(path: &Path) -> Result<RuleFile> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    RuleFile::from_json(&text).with_context(|| format!("parsing {}", path.display()))
}

impl ForbiddenSource {
    fn load(&self) -> Result<Option<ForbiddenWordSet>> {
        if let Some(p) = &self.rules_file {
            let rules = read_rules(p)?;
            return Ok(Some(derive_forbidden(&rules.rules)));
        }
        if let Some(words) = &self.forbidden {
            let words: Vec<&str> = words.iter().map(String::as_str).collect();
            return Ok(Some(ForbiddenWordSet::parse_list(&words)?));
        }
        Ok(None)
    }
}

fn check_alphabet(forbidden: &ForbiddenWordSet, k: usize) -> Result<()> {
    if let Some(w) = forbidden.words().iter().find(|w| !w.fits(k)) {
        bail!("forbidden word {w} uses a letter above {}", k + 1);
    }
    Ok(())
}

// ── Commands ──

#[derive(Serialize)]
struct TraceStep {
    step: usize,
    #[serde(rename = "move")]
    mv: Option<usize>,
    state: String,
}

#[derive(Serialize)]
struct Trace {
    permutation: String,
    moves: String,
    k: usize,
    steps: Vec<TraceStep>,
    sorted: bool,
}

fn simulate(permutation: &str, moves: &str, k: usize, json: bool) -> Result<ExitCode> {
    SystemConfig::new(k)?;
    let pi: Perm = permutation.parse()?;
    let w = MoveString::parse_for(moves, k)?;
    let mut state = state_of_permutation(&pi, k);
    let mut steps = vec![TraceStep { step: 0, mv: None, state: state.to_string() }];
    for (i, m) in w.iter().enumerate() {
        state = apply_move(m, &state);
        steps.push(TraceStep { step: i + 1, mv: Some(m.index()), state: state.to_string() });
        if state.is_illegal() {
            break;
        }
    }
    let sorted = state == final_state(pi.len(), k);
    let trace = Trace { permutation: pi.to_string(), moves: w.to_string(), k, steps, sorted };
    if json {
        print!("{}", to_json(&trace)?);
    } else {
        for s in &trace.steps {
            match s.mv {
                None => println!("step {:>3}       {}", s.step, s.state),
                Some(m) if s.state == "illegal" => println!("step {:>3}  m{m}  ILLEGAL", s.step),
                Some(m) => println!("step {:>3}  m{m}  {}", s.step, s.state),
            }
        }
        println!("{}", if sorted { "sorted" } else { "not sorted" });
    }
    Ok(if sorted { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

#[derive(Serialize)]
struct KnRow {
    n: usize,
    k_n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn kn_table(max_n: usize, budget: BudgetArgs, report: ReportArgs) -> Result<ExitCode> {
    let budget = SearchBudget { max_states: budget.max_states };
    let mut rows = Vec::new();
    for n in 0..=max_n {
        let row = match compute_kn(n, budget) {
            Ok(KnEntry { n, k_n }) => KnRow { n, k_n: Some(k_n), error: None },
            Err(e) => KnRow { n, k_n: None, error: Some(e.to_string()) },
        };
        info!("n = {n}: {}", row.k_n.map_or_else(|| "failed".into(), |k| k.to_string()));
        rows.push(row);
    }
    emit(&rows, report.out.as_deref(), report.json)?;
    if !report.json {
        println!("{:>3}  {:>4}", "n", "k_n");
        for r in &rows {
            match (&r.k_n, &r.error) {
                (Some(k), _) => println!("{:>3}  {:>4}", r.n, k),
                (None, e) => println!("{:>3}  {:>4}  {}", r.n, "?", e.as_deref().unwrap_or("")),
            }
        }
    }
    let failed = rows.iter().any(|r| r.error.is_some());
    Ok(if failed { ExitCode::from(3) } else { ExitCode::SUCCESS })
}

#[derive(Serialize)]
struct PermsRecord {
    n: usize,
    k: usize,
    count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    perms: Option<Vec<String>>,
}

fn perms(n: usize, k: usize, list: bool, budget: BudgetArgs, report: ReportArgs) -> Result<ExitCode> {
    let set = generable_perms(n, k, SearchBudget { max_states: budget.max_states })?;
    let listed: Option<Vec<String>> = list.then(|| {
        set.members.iter().map(Perm::to_string).collect()
    });
    let record = PermsRecord { n, k, count: set.len(), perms: listed };
    emit(&record, report.out.as_deref(), report.json)?;
    if !report.json {
        println!("|P({n},{k})| = {}", record.count);
        for p in record.perms.iter().flatten() {
            println!("{p}");
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn discover(k: usize, max_len: usize, max_strings: u64) -> Result<RuleFile> {
    SystemConfig::new(k)?;
    let config = DiscoveryConfig { max_strings, ..DiscoveryConfig::new(k, max_len) };
    let d = discover_relations_with_progress(config, |s| {
        info!(
            "length {:>2}: {} strings, {} classes, {} new rules",
            s.len, s.strings, s.classes, s.rules
        )
    })?;
    info!("{} rules up to length {max_len}", d.rules.len());
    Ok(RuleFile::from_discovery(&d))
}

fn relations(action: RelationsCommand) -> Result<ExitCode> {
    match action {
        RelationsCommand::Discover { k, max_len, max_strings, out } => {
            let file = discover(k, max_len, max_strings)?;
            match out {
                Some(p) => write_json(&p, &file)?,
                None => print!("{}", to_json(&file)?),
            }
            Ok(ExitCode::SUCCESS)
        }
        RelationsCommand::Verify { rules } => {
            let file = read_rules(&rules)?;
            match verify_rules(&file.rules, file.header.k) {
                Ok(()) => {
                    println!("ok: {} rules verified for k = {}", file.rules.len(), file.header.k);
                    Ok(ExitCode::SUCCESS)
                }
                Err(e) => {
                    println!("invalid: {e}");
                    Ok(ExitCode::from(1))
                }
            }
        }
    }
}

#[derive(Serialize)]
struct GfReport<'a> {
    #[serde(flatten)]
    gf: &'a GfArtifact,
    #[serde(skip_serializing_if = "Option::is_none")]
    series: Option<Vec<String>>,
}

fn gf(source: ForbiddenSource, weights: WeightArgs, series: Option<u32>, out: Option<PathBuf>) -> Result<ExitCode> {
    let forbidden = source.load()?.context("give --rules-file or --forbidden")?;
    check_alphabet(&forbidden, weights.k)?;
    let cfg = weights.stage_config(8)?;
    let artifact = gf_stage(&forbidden, &cfg)?;
    let series = match (series, &artifact.form) {
        (None, _) => None,
        (Some(d), GfForm::Exact { gf }) if gf.nvars() == 1 => Some(
            series_coefficients(gf, d)?
                .univariate()?
                .into_iter()
                .map(|c| c.to_string())
                .collect(),
        ),
        (Some(_), _) => bail!("--series needs an exact univariate generating function"),
    };
    let report = GfReport { gf: &artifact, series };
    match out {
        Some(p) => write_json(&p, &report)?,
        None => print!("{}", to_json(&report)?),
    }
    Ok(ExitCode::SUCCESS)
}

fn load_gf(path: &Path, identify: Option<Vec<usize>>) -> Result<GfArtifact> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if let Ok(a) = serde_json::from_str::<GfArtifact>(&text) {
        return Ok(a);
    }
    let den: MultiPoly = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let map = identify.unwrap_or_else(|| (0..den.nvars()).collect());
    let groups = map.iter().max().map_or(0, |&m| m + 1);
    let den = if den.nvars() == map.len() && den.nvars() != groups {
        den.merge_variables(&map, groups)?
    } else {
        den
    };
    Ok(GfArtifact {
        weights: WeightMode::Optimized,
        letter_map: map,
        form: GfForm::Exact { gf: RationalGF::reciprocal(den)? },
    })
}

fn optimize(
    path: &Path,
    identify: Option<Vec<usize>>,
    source: ForbiddenSource,
    max_weight: u32,
    out: Option<PathBuf>,
) -> Result<ExitCode> {
    let artifact = load_gf(path, identify)?;
    let forbidden = match (&artifact.form, source.load()?) {
        (GfForm::Numeric { .. }, None) => bail!("numeric generating function: give --rules-file or --forbidden"),
        (_, Some(f)) => f,
        (_, None) => ForbiddenWordSet::default(),
    };
    let k = artifact.letter_map.len() - 1;
    let mut cfg = StageConfig::new(k, WeightMode::Optimized);
    cfg.max_weight = max_weight;
    let optimum = optimum_stage(&artifact, &forbidden, &cfg)?;
    match out {
        Some(p) => write_json(&p, &optimum)?,
        None => print!("{}", to_json(&optimum)?),
    }
    Ok(ExitCode::SUCCESS)
}

fn stage<T>(name: &str, r: stacksort::Result<T>) -> Result<T> {
    r.with_context(|| format!("stage {name} failed"))
}

fn bound(
    max_len: Option<usize>,
    rules_file: Option<PathBuf>,
    weights: WeightArgs,
    max_weight: u32,
    max_strings: u64,
    out_dir: &Path,
) -> Result<ExitCode> {
    let cfg = weights.stage_config(max_weight)?;
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;

    let rules = match rules_file {
        Some(p) => {
            let file = read_rules(&p)?;
            if file.header.k != cfg.k {
                bail!("{} was discovered for k = {}, not {}", p.display(), file.header.k, cfg.k);
            }
            let max_len = max_len.unwrap_or(file.header.max_len);
            if max_len > file.header.max_len {
                bail!("{} only covers lengths up to {}", p.display(), file.header.max_len);
            }
            // rules of length L depend only on shorter ones, so a prefix of
            // the file equals a fresh discovery at the smaller length
            let rules: Vec<RewriteRule> = file.rules.into_iter().filter(|r| r.from.len() <= max_len).collect();
            RuleFile { header: stacksort::relations::RuleFileHeader { max_len, ..file.header }, rules }
        }
        None => {
            let max_len = max_len.context("give --max-len or --rules-file")?;
            discover(cfg.k, max_len, max_strings).context("stage discover failed")?
        }
    };
    write_json(&out_dir.join("rules.json"), &rules)?;

    let forbidden = derive_forbidden(&rules.rules);
    info!("{} forbidden words", forbidden.len());
    write_json(&out_dir.join("forbidden.json"), &forbidden)?;

    let gf = stage("gf", gf_stage(&forbidden, &cfg))?;
    if let GfForm::Numeric { overlaps, largest_cyclic_component, .. } = &gf.form {
        info!("numeric cluster form: {overlaps} overlaps, largest cyclic component {largest_cyclic_component}");
    }
    write_json(&out_dir.join("gf.json"), &gf)?;

    let optimum: Option<OptimumArtifact> = match cfg.weights {
        WeightMode::Uniform => None,
        WeightMode::Optimized => {
            let o = stage("optimize", optimum_stage(&gf, &forbidden, &cfg))?;
            write_json(&out_dir.join("optimum.json"), &o)?;
            Some(o)
        }
    };

    let report = stage("bound", bound_stage(&gf, &forbidden, optimum.as_ref(), &cfg))?;
    write_json(&out_dir.join("bound.json"), &report)?;
    print!("{}", to_json(&report)?);
    Ok(ExitCode::SUCCESS)
}
