use std::collections::BTreeMap;
use std::io::{self, BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chainpart::analytics::{
    c_upper_bound, characterize_small_w, estimate_c, maxw_scan, monotonicity_check, power_bound_check, solve_roots,
};
use chainpart::graph23::{connectivity_check, random_walk, TransitionGraph};
use chainpart::selftest::{run_all, Options, Profile};
use chainpart::{
    chain_pow, lattice_decode, lattice_encode, sigma, sigma_stats, tree_decode, tree_encode, validate, w_general,
    CountTable, Enumerator, Method, PQSystem, Partition, RawMultiset, Sampler, TreeWord,
};
use clap::{Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

const DEFAULT_CEILING: u128 = 1_000_000;
const CEILING_ENV: &str = "CHAINPART_CEILING";

#[derive(Parser)]
#[command(name = "chainpart", version, about = "Strictly chained (p,q)-ary partitions")]
struct Cli {
    /// First base (default 2).
    #[arg(long, global = true)]
    p: Option<u64>,
    /// Second base (default 3).
    #[arg(long, global = true)]
    q: Option<u64>,
    /// Seed for every random choice (default 0).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parallel scans (default 1).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Largest set size an enumeration may produce.
    #[arg(long, global = true)]
    ceiling: Option<u128>,
    /// File of `key = value` lines; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Number of partitions of U.
    Count {
        #[arg(long)]
        u: u128,
        #[arg(long, value_enum, default_value = "general")]
        method: MethodArg,
    },
    /// All partitions of U, one per line.
    Enumerate {
        #[arg(long)]
        u: u128,
        #[arg(long, value_enum, default_value = "json")]
        format: EnumFormat,
    },
    /// Partitions (parts separated by `+`, `,` or spaces) to words.
    Encode {
        #[arg(long, value_enum, default_value = "lattice")]
        code: Code,
        /// Read from stdin when empty.
        inputs: Vec<String>,
    },
    /// Words to partitions.
    Decode {
        #[arg(long, value_enum, default_value = "lattice")]
        code: Code,
        #[arg(long, value_enum, default_value = "values")]
        format: PartFormat,
        inputs: Vec<String>,
    },
    /// Uniformly random partitions of U.
    Sample {
        #[arg(long)]
        u: u128,
        #[arg(long, default_value_t = 1)]
        count: u64,
        #[arg(long, value_enum, default_value = "json")]
        format: PartFormat,
    },
    /// Fewest parts in a partition of U.
    Sigma {
        #[arg(long)]
        u: u128,
        #[arg(long)]
        witness: bool,
    },
    /// Distribution of the fewest-parts count over [2, limit].
    SigmaStats {
        #[arg(long)]
        limit: u128,
        #[arg(long, value_enum, default_value = "csv")]
        emit: Emit,
    },
    /// g^U mod M along a shortest partition of U.
    Chainpow {
        #[arg(long)]
        g: BigUint,
        #[arg(long)]
        u: u128,
        #[arg(long = "mod")]
        modulus: BigUint,
    },
    /// Transition graph on the partitions of U (p = 2, q = 3).
    Graph {
        #[arg(long)]
        u: u128,
        #[arg(long)]
        dot: bool,
    },
    /// Lazy random walk on the transition graph from the binary partition.
    Walk {
        #[arg(long)]
        u: u128,
        #[arg(long)]
        steps: u64,
    },
    /// Table scans up to a limit.
    Scan {
        #[arg(value_enum, default_value = "count")]
        kind: ScanKind,
        #[arg(long)]
        limit: u128,
        #[arg(long, value_enum, default_value = "csv")]
        emit: Emit,
    },
    /// Exponents of the count growth and the bound on the sum constant.
    Alpha,
    /// Partial sums of the counts at dyadic points.
    Sumfn {
        #[arg(long)]
        xmax: u128,
        #[arg(long, value_enum, default_value = "csv")]
        emit: Emit,
    },
    /// Runs the acceptance suite; exit status 2 on failure.
    Selftest {
        #[arg(value_enum)]
        profile: Option<ProfileArg>,
        #[arg(long, conflicts_with_all = ["profile", "full"])]
        quick: bool,
        #[arg(long, conflicts_with = "profile")]
        full: bool,
        #[arg(long, value_enum, default_value = "json")]
        format: ReportFormat,
        #[arg(long, hide = true)]
        corrupt_memo: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    General,
    P2,
    Theorem2,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum EnumFormat {
    Json,
    Csv,
    /// Lattice words.
    Words,
    /// Tree words (p = 2 only).
    Tree,
}

#[derive(Clone, Copy, ValueEnum)]
enum Code {
    Lattice,
    Tree,
}

#[derive(Clone, Copy, ValueEnum)]
enum PartFormat {
    Json,
    Values,
}

#[derive(Clone, Copy, ValueEnum)]
enum Emit {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScanKind {
    Count,
    Maxw,
    Theorem4,
    Smallw,
    Bound,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    Quick,
    Full,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Json,
    Text,
}

enum Failure {
    Lib(chainpart::Error),
    Io(io::Error),
    Usage(String),
    /// A check ran and found a violation.
    Check(String),
}

impl From<chainpart::Error> for Failure {
    fn from(e: chainpart::Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

type CliResult<T = ()> = Result<T, Failure>;

struct RunConfig {
    sys: PQSystem,
    seed: u64,
    threads: usize,
    ceiling: u128,
}

fn read_config(path: &Path) -> CliResult<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let mut map = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("config line {}: expected key = value", n + 1)))?;
        let k = k.trim().to_string();
        if !["p", "q", "seed", "threads", "ceiling"].contains(&k.as_str()) {
            return Err(Failure::Usage(format!("config line {}: unknown key {k:?}", n + 1)));
        }
        map.insert(k, v.trim().to_string());
    }
    Ok(map)
}

fn setting<T: std::str::FromStr>(flag: Option<T>, file: &BTreeMap<String, String>, key: &str, default: T) -> CliResult<T> {
    if let Some(v) = flag {
        return Ok(v);
    }
    match file.get(key) {
        Some(s) => s
            .parse()
            .map_err(|_| Failure::Usage(format!("config value for {key} is not a number: {s:?}"))),
        None => Ok(default),
    }
}

impl RunConfig {
    fn resolve(cli: &Cli) -> CliResult<RunConfig> {
        let file = match &cli.config {
            Some(path) => read_config(path)?,
            None => BTreeMap::new(),
        };
        let p = setting(cli.p, &file, "p", 2)?;
        let q = setting(cli.q, &file, "q", 3)?;
        let seed = setting(cli.seed, &file, "seed", 0)?;
        let threads = setting(cli.threads, &file, "threads", 1)?;
        let env = match std::env::var(CEILING_ENV) {
            Ok(s) => Some(
                s.trim()
                    .parse()
                    .map_err(|_| Failure::Usage(format!("{CEILING_ENV} is not a number: {s:?}")))?,
            ),
            Err(_) => None,
        };
        let ceiling = setting(cli.ceiling.or(env), &file, "ceiling", DEFAULT_CEILING)?;
        Ok(RunConfig {
            sys: PQSystem::new(p, q)?,
            seed,
            threads: threads.max(1),
            ceiling,
        })
    }

    /// Refuses enumerations of more than `ceiling` partitions.
    fn check_ceiling(&self, u: u128) -> CliResult {
        let w = w_general(u, &self.sys)?;
        let too_big = u128::try_from(&w).map_or(true, |w| w > self.ceiling);
        if too_big {
            return Err(chainpart::Error::CeilingExceeded {
                what: "partition count",
                value: u128::try_from(&w).unwrap_or(u128::MAX),
                ceiling: self.ceiling,
            }
            .into());
        }
        Ok(())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(f) => {
            let (code, msg) = match f {
                Failure::Lib(e) if e.is_invariant() => (2, e.to_string()),
                Failure::Lib(e) => (1, e.to_string()),
                Failure::Io(e) => (1, e.to_string()),
                Failure::Usage(m) => (1, m),
                Failure::Check(m) => (2, m),
            };
            eprintln!("chainpart: {msg}");
            ExitCode::from(code)
        }
    }
}

fn run(cli: Cli) -> CliResult {
    let cfg = RunConfig::resolve(&cli)?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build_global()
        .map_err(|e| Failure::Usage(e.to_string()))?;
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    dispatch(cli.command, &cfg, &mut out)?;
    out.flush()?;
    Ok(())
}

fn dispatch(command: Command, cfg: &RunConfig, out: &mut impl Write) -> CliResult {
    let sys = &cfg.sys;
    match command {
        Command::Count { u, method } => count(u, method, sys, out),
        Command::Enumerate { u, format } => {
            cfg.check_ceiling(u)?;
            let members = Enumerator::new(*sys).general(u)?;
            if let EnumFormat::Csv = format {
                writeln!(out, "parts,values")?;
            }
            for m in members.iter() {
                match format {
                    EnumFormat::Json => writeln!(out, "{}", m.to_json(sys))?,
                    EnumFormat::Csv => writeln!(out, "{},{}", m.len(), m.display(sys))?,
                    EnumFormat::Words => writeln!(out, "{}", lattice_encode(m)?)?,
                    EnumFormat::Tree => writeln!(out, "{}", tree_encode(m, sys)?)?,
                }
            }
            Ok(())
        }
        Command::Encode { code, inputs } => {
            for line in input_lines(inputs)? {
                let pt = parse_partition(&line, sys)?;
                match code {
                    Code::Lattice => writeln!(out, "{}", lattice_encode(&pt)?)?,
                    Code::Tree => writeln!(out, "{}", tree_encode(&pt, sys)?)?,
                }
            }
            Ok(())
        }
        Command::Decode { code, format, inputs } => {
            for line in input_lines(inputs)? {
                let pt = match code {
                    Code::Lattice => lattice_decode(&line)?,
                    Code::Tree => tree_decode(&TreeWord::parse(&line, sys.q())?, sys)?.1,
                };
                write_partition(out, &pt, sys, format)?;
            }
            Ok(())
        }
        Command::Sample { u, count, format } => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let mut sampler = Sampler::new(*sys);
            for _ in 0..count {
                let pt = sampler.sample(u, &mut rng)?;
                write_partition(out, &pt, sys, format)?;
            }
            Ok(())
        }
        Command::Sigma { u, witness } => {
            let r = sigma(u, sys)?;
            if witness {
                writeln!(out, "{} {}", r.sigma, r.witness.display(sys))?;
            } else {
                writeln!(out, "{}", r.sigma)?;
            }
            Ok(())
        }
        Command::SigmaStats { limit, emit } => {
            let stats = sigma_stats(limit, sys)?;
            match emit {
                Emit::Json => writeln!(out, "{}", json!(stats))?,
                Emit::Csv => {
                    writeln!(out, "sigma,count")?;
                    for (s, n) in stats.histogram.iter().enumerate().filter(|(_, n)| **n > 0) {
                        writeln!(out, "{s},{n}")?;
                    }
                }
            }
            Ok(())
        }
        Command::Chainpow { g, u, modulus } => {
            let r = chain_pow(&g, u, &modulus, sys)?;
            let line = json!({
                "value": r.value.to_string(),
                "witness": r.witness.display(sys),
                "cost": r.cost,
            });
            writeln!(out, "{line}")?;
            Ok(())
        }
        Command::Graph { u, dot } => {
            cfg.check_ceiling(u)?;
            if dot {
                write!(out, "{}", TransitionGraph::build(u, sys)?.to_dot())?;
            } else {
                let c = connectivity_check(u, sys)?;
                writeln!(out, "{}", json!(c))?;
            }
            Ok(())
        }
        Command::Walk { u, steps } => {
            let pt = random_walk(u, steps, cfg.seed, sys)?;
            writeln!(out, "{}", pt.display(sys))?;
            Ok(())
        }
        Command::Scan { kind, limit, emit } => scan(kind, limit, emit, sys, out),
        Command::Alpha => {
            let r = solve_roots(sys)?;
            let line = json!({
                "p": sys.p(),
                "q": sys.q(),
                "alpha": r.alpha,
                "beta": r.beta,
                "alpha_residual": r.alpha_residual,
                "beta_residual": r.beta_residual,
                "c_upper": c_upper_bound(sys, r.alpha),
            });
            writeln!(out, "{line}")?;
            Ok(())
        }
        Command::Sumfn { xmax, emit } => {
            let e = estimate_c(sys, xmax)?;
            match emit {
                Emit::Json => writeln!(out, "{}", json!(e))?,
                Emit::Csv => {
                    writeln!(out, "x,S(x),S(x)/x^alpha,C_upper")?;
                    for s in &e.samples {
                        writeln!(out, "{},{},{},{}", s.x, s.s, s.ratio, e.upper_bound)?;
                    }
                }
            }
            Ok(())
        }
        Command::Selftest {
            profile,
            quick,
            full,
            format,
            corrupt_memo,
        } => {
            let profile = match (profile, quick, full) {
                (Some(ProfileArg::Full), _, _) | (None, false, true) => Profile::Full,
                _ => Profile::Quick,
            };
            let mut opts = Options::new(profile);
            opts.seed = cfg.seed;
            opts.corrupt_memo = corrupt_memo;
            let mut failed = Vec::new();
            for o in run_all(&opts) {
                match format {
                    ReportFormat::Json => writeln!(out, "{}", json!(o))?,
                    ReportFormat::Text => writeln!(out, "{}", o.line())?,
                }
                out.flush()?;
                if !o.hard_passed {
                    failed.push(o.id);
                }
            }
            if failed.is_empty() {
                Ok(())
            } else {
                Err(Failure::Check(format!("failed criteria: {failed:?}")))
            }
        }
    }
}

fn count(u: u128, method: MethodArg, sys: &PQSystem, out: &mut impl Write) -> CliResult {
    let get = |m: Method| CountTable::new(*sys, m)?.get(u);
    match method {
        MethodArg::General => writeln!(out, "{}", get(Method::General)?)?,
        MethodArg::P2 => writeln!(out, "{}", get(Method::P2)?)?,
        MethodArg::Theorem2 => writeln!(out, "{}", get(Method::Amount { skips: true })?)?,
        MethodArg::All => {
            let mut values = Vec::new();
            for m in Method::ALL {
                if m == Method::P2 && sys.p() != 2 {
                    continue;
                }
                values.push((m.name(), get(m)?));
            }
            for (name, v) in &values {
                writeln!(out, "{name} {v}")?;
            }
            if values.iter().any(|(_, v)| *v != values[0].1) {
                return Err(Failure::Check(format!("counting engines disagree at {u}")));
            }
        }
    }
    Ok(())
}

fn scan(kind: ScanKind, limit: u128, emit: Emit, sys: &PQSystem, out: &mut impl Write) -> CliResult {
    match kind {
        ScanKind::Count => {
            let mut t = CountTable::general(*sys);
            t.fill_to(limit)?;
            match emit {
                Emit::Csv => writeln!(out, "u,w")?,
                Emit::Json => {}
            }
            for (u, w) in t.dense().iter().enumerate().take(limit as usize + 1) {
                match emit {
                    Emit::Csv => writeln!(out, "{u},{w}")?,
                    Emit::Json => writeln!(out, "{}", json!({"u": u, "w": w.to_string()}))?,
                }
            }
        }
        ScanKind::Maxw => {
            let r = maxw_scan(limit, sys)?;
            match emit {
                Emit::Json => writeln!(out, "{}", json!(r))?,
                Emit::Csv => {
                    writeln!(out, "x,w")?;
                    for j in &r.jumps {
                        writeln!(out, "{},{}", j.x, j.value)?;
                    }
                    if !r.conjecture_exceptions.is_empty() {
                        eprintln!("jumps not at odd multiples of q: {:?}", r.conjecture_exceptions);
                    }
                }
            }
        }
        ScanKind::Theorem4 => {
            let v = monotonicity_check(limit, sys)?;
            match emit {
                Emit::Json => writeln!(out, "{}", json!({"limit": limit, "violations": v}))?,
                Emit::Csv => {
                    writeln!(out, "n,relation")?;
                    for x in &v {
                        writeln!(out, "{},{}", x.n, x.relation)?;
                    }
                }
            }
            if !v.is_empty() {
                return Err(Failure::Check(format!("{} monotonicity violations", v.len())));
            }
        }
        ScanKind::Smallw => {
            if (sys.p(), sys.q()) != (2, 3) {
                return Err(chainpart::Error::UnsupportedSystem("p = 2, q = 3").into());
            }
            let r = characterize_small_w(limit)?;
            match emit {
                Emit::Json => writeln!(out, "{}", json!(r))?,
                Emit::Csv => {
                    writeln!(out, "w,u")?;
                    for u in &r.ones {
                        writeln!(out, "1,{u}")?;
                    }
                    for u in &r.twos {
                        writeln!(out, "2,{u}")?;
                    }
                }
            }
        }
        ScanKind::Bound => {
            let r = power_bound_check(limit, sys)?;
            match emit {
                Emit::Json => writeln!(out, "{}", json!(r))?,
                Emit::Csv => {
                    writeln!(out, "beta,checked,violations,max_exponent")?;
                    writeln!(out, "{},{},{},{}", r.beta, r.checked, r.violations.len(), r.max_exponent)?;
                }
            }
            if !r.violations.is_empty() {
                return Err(Failure::Check(format!("{} power bound violations", r.violations.len())));
            }
        }
    }
    Ok(())
}

fn input_lines(inputs: Vec<String>) -> CliResult<Vec<String>> {
    let lines = if inputs.is_empty() {
        io::stdin().lock().lines().collect::<io::Result<Vec<_>>>()?
    } else {
        inputs
    };
    Ok(lines
        .into_iter()
        .map(|l| l.trim().to_string())
        .filter(|l| !l.is_empty())
        .collect())
}

fn parse_partition(line: &str, sys: &PQSystem) -> CliResult<Partition> {
    let values = line
        .split(|c: char| c == '+' || c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<BigUint>()
                .map_err(|_| Failure::Usage(format!("not a part: {s:?}")))
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(validate(&RawMultiset::new(values), sys)?)
}

fn write_partition(out: &mut impl Write, pt: &Partition, sys: &PQSystem, format: PartFormat) -> io::Result<()> {
    match format {
        PartFormat::Json => writeln!(out, "{}", pt.to_json(sys)),
        PartFormat::Values => writeln!(out, "{}", pt.display(sys)),
    }
}
