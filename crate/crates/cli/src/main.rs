use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use serde_json::{json, Value};

use osidh::attack::recover_naive;
use osidh::graphstats::{
    enumerate_ss, forgetful_csv, forgetful_table, reproduce_353, reproduce_71, ss_count_formula,
    supersingular_start, surjective_depth, volcano_components,
};
use osidh::wire;
use osidh::{
    Error, FieldParams, Fp2, ModPolyDb, ModularChain, ModularSystem, OrderParams, PublicData,
    SecretKey, Session, SharedSecret,
};

#[derive(Parser)]
#[command(name = "osidh", version, about = "Oriented isogeny key exchange on modular chains")]
struct Cli {
    /// Directory of phi_<m>.txt modular polynomial files (default: shipped set).
    #[arg(long, env = "OSIDH_MODPOLY_DIR", global = true)]
    modpoly_dir: Option<PathBuf>,

    /// Write the artifact here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ParamArgs {
    #[arg(long)]
    p: u64,
    #[arg(long, default_value_t = -3, allow_hyphen_values = true)]
    disc: i64,
    #[arg(long, default_value_t = 2)]
    ell: u64,
    #[arg(long)]
    n: usize,
    #[arg(long, value_delimiter = ',', required = true)]
    primes: Vec<u64>,
    #[arg(long, default_value_t = 2)]
    r: u32,
    #[arg(long)]
    seed: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Naive,
    Full,
}

#[derive(Subcommand)]
enum Command {
    /// Generate public parameters.
    Params(ParamArgs),
    /// Draw a secret key.
    Keygen {
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        seed: u64,
    },
    /// Compute the public message for a key.
    Publish {
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        key: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Full)]
        mode: Mode,
    },
    /// Derive the shared secret from a key and the other party's message.
    Derive {
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        key: PathBuf,
        /// A published chain (naive) or public data (full).
        #[arg(long)]
        other: PathBuf,
    },
    /// Run both parties in-process and compare secrets.
    ExchangeDemo {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_enum, default_value_t = Mode::Full)]
        mode: Mode,
    },
    /// Recover the secret class from a naive exchange transcript.
    AttackNaive {
        /// JSON object {"params", "e_chain", "f_chain"} of wire messages.
        #[arg(long, conflicts_with_all = ["params", "f_chain"])]
        transcript: Option<PathBuf>,
        #[arg(long, requires = "f_chain")]
        params: Option<PathBuf>,
        #[arg(long)]
        f_chain: Option<PathBuf>,
    },
    /// Count supersingular j-invariants by BFS and by formula.
    SsCount {
        #[arg(long)]
        p: u64,
        #[arg(long, default_value_t = 2)]
        ell: u32,
        /// Also write the graph in DOT format.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// CSV of distinct chain ends per depth.
    ForgetfulTable {
        #[arg(long)]
        p: u64,
        #[arg(long, default_value_t = -3, allow_hyphen_values = true)]
        disc: i64,
        #[arg(long, default_value_t = 2)]
        ell: u64,
        #[arg(long)]
        max_depth: u32,
    },
    /// Explore an isogeny graph from a j-invariant.
    Volcano {
        #[arg(long)]
        p: u64,
        #[arg(long, default_value_t = 2)]
        ell: u32,
        /// Integer or a+b*u.
        #[arg(long)]
        start: String,
        /// Only follow j-invariants in F_p.
        #[arg(long)]
        restrict_fp: bool,
        /// Extra levels used to reach other components.
        #[arg(long, value_delimiter = ',')]
        connectors: Vec<u32>,
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Worked example over F_71.
    #[command(name = "repro-71")]
    Repro71,
    /// Worked example over F_353.
    #[command(name = "repro-353")]
    Repro353,
}

/// Failure with its exit status.
struct Failure {
    code: u8,
    kind: String,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_ambiguous() {
            3
        } else if e.is_validation() {
            2
        } else {
            1
        };
        let debug = format!("{e:?}");
        let kind = debug
            .split(|c: char| !c.is_alphanumeric())
            .next()
            .unwrap_or("Error")
            .to_string();
        Failure {
            code,
            kind,
            message: e.to_string(),
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure {
        code: 1,
        kind: "Io".into(),
        message: format!("{}: {e}", path.display()),
    }
}

type CliResult<T> = Result<T, Failure>;

fn db(cli: &Cli) -> CliResult<ModPolyDb> {
    match &cli.modpoly_dir {
        Some(dir) => Ok(ModPolyDb::load(dir)?),
        None => Ok(ModPolyDb::shipped()),
    }
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| io_failure(path, e))
}

fn emit(cli: &Cli, text: &str) -> CliResult<()> {
    match &cli.out {
        Some(path) => fs::write(path, format!("{text}\n")).map_err(|e| io_failure(path, e)),
        None => {
            // a closed pipe (e.g. `| head`) is not an error worth reporting
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            Ok(())
        }
    }
}

fn emit_json(cli: &Cli, v: &Value) -> CliResult<()> {
    emit(cli, &serde_json::to_string_pretty(&wire::canonicalize(v.clone())).expect("json"))
}

fn system(db: &ModPolyDb, p: u64) -> CliResult<ModularSystem> {
    Ok(db.reduce(&FieldParams::new(p)?))
}

fn generate(db: &ModPolyDb, a: &ParamArgs) -> CliResult<Session> {
    let s = Session::generate(db, a.p, a.disc, a.ell, a.n, &a.primes, a.r, a.seed)?;
    if let Some(w) = s.params().sizing_warning() {
        warn!("{w}");
    }
    Ok(s)
}

fn load_session(db: &ModPolyDb, path: &Path) -> CliResult<Session> {
    Ok(Session::from_wire(&read(path)?, db)?)
}

fn kind_of(text: &str) -> Option<String> {
    let v: Value = serde_json::from_str(text).ok()?;
    v.get("kind")?.as_str().map(str::to_string)
}

fn to_value(text: String) -> Value {
    serde_json::from_str(&text).expect("wire output is JSON")
}

fn parse_j(field: &FieldParams, s: &str) -> CliResult<Fp2> {
    match s.parse::<u64>() {
        Ok(v) if v < field.p() => Ok(field.from_u64(v)),
        Ok(_) => Err(Error::InvariantViolation(format!("{s} is not reduced mod p")).into()),
        Err(_) => Ok(field.parse(s)?),
    }
}

fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Params(a) => {
            let s = generate(&db(cli)?, a)?;
            emit(cli, &wire::encode(s.params()))
        }
        Command::Keygen { params, seed } => {
            let s = load_session(&db(cli)?, params)?;
            emit(cli, &wire::encode(&s.keygen(*seed)))
        }
        Command::Publish { params, key, mode } => {
            let s = load_session(&db(cli)?, params)?;
            let sk = s.decode_secret_key(&read(key)?)?;
            match mode {
                Mode::Naive => emit(cli, &wire::encode(&s.naive_public(&sk)?)),
                Mode::Full => emit(cli, &wire::encode(&s.public_data(&sk)?)),
            }
        }
        Command::Derive { params, key, other } => {
            let s = load_session(&db(cli)?, params)?;
            let sk = s.decode_secret_key(&read(key)?)?;
            let text = read(other)?;
            let shared = match kind_of(&text).as_deref() {
                Some("chain") => s.naive_shared(&sk, &s.decode_chain(&text)?)?,
                _ => s.derive(&sk, &s.decode_public_data(&text)?)?,
            };
            emit(cli, &wire::encode(&shared))
        }
        Command::ExchangeDemo { params, mode } => exchange_demo(cli, params, *mode),
        Command::AttackNaive {
            transcript,
            params,
            f_chain,
        } => {
            let db = db(cli)?;
            let (s, e, f) = match (transcript, params, f_chain) {
                (Some(path), _, _) => {
                    let v: Value = serde_json::from_str(&read(path)?).map_err(|e| Error::Malformed {
                        pointer: String::new(),
                        message: e.to_string(),
                    })?;
                    let field = |name: &str| -> CliResult<String> {
                        v.get(name).map(Value::to_string).ok_or_else(|| {
                            Error::Malformed {
                                pointer: format!("/{name}"),
                                message: "missing".into(),
                            }
                            .into()
                        })
                    };
                    let s = Session::from_wire(&field("params")?, &db)?;
                    let e = s.decode_chain(&field("e_chain")?)?;
                    let f = s.decode_chain(&field("f_chain")?)?;
                    (s, e, f)
                }
                (None, Some(p), Some(fc)) => {
                    let s = load_session(&db, p)?;
                    let f = s.decode_chain(&read(fc)?)?;
                    let e = s.params().chain.clone();
                    (s, e, f)
                }
                _ => {
                    return Err(Failure {
                        code: 2,
                        kind: "Usage".into(),
                        message: "give --transcript, or --params with --f-chain".into(),
                    })
                }
            };
            let t = recover_naive(&s, &e, &f)?;
            emit_json(cli, &serde_json::to_value(&t).expect("json"))
        }
        Command::SsCount { p, ell, dot } => {
            let sys = system(&db(cli)?, *p)?;
            let (disc, start) = supersingular_start(sys.field())?;
            let g = enumerate_ss(&sys, *ell, start)?;
            if let Some(path) = dot {
                fs::write(path, g.to_dot()).map_err(|e| io_failure(path, e))?;
            }
            let formula = ss_count_formula(*p);
            emit_json(
                cli,
                &json!({
                    "p": p,
                    "start_disc": disc,
                    "start_j": start.to_string(),
                    "bfs": g.vertices.len(),
                    "formula": formula,
                    "components": g.components.len(),
                    "equal": g.vertices.len() as u64 == formula,
                }),
            )
        }
        Command::ForgetfulTable {
            p,
            disc,
            ell,
            max_depth,
        } => {
            let sys = system(&db(cli)?, *p)?;
            let order = OrderParams::new(*disc, *ell)?;
            let rows = forgetful_table(&sys, &order, *max_depth)?;
            let (start_disc, start) = supersingular_start(sys.field())?;
            let ss = enumerate_ss(&sys, *ell as u32, start)?.vertices.len() as u64;
            match surjective_depth(&rows, ss) {
                Some(d) => info!("all {ss} supersingular j reached by depth {d} (start disc {start_disc})"),
                None => info!("{ss} supersingular j not all reached by depth {max_depth}"),
            }
            emit(cli, forgetful_csv(&rows).trim_end())
        }
        Command::Volcano {
            p,
            ell,
            start,
            restrict_fp,
            connectors,
            dot,
        } => {
            let sys = system(&db(cli)?, *p)?;
            let j = parse_j(sys.field(), start)?;
            let g = volcano_components(&sys, *ell, connectors, *restrict_fp, j)?;
            g.validate(&sys)?;
            if let Some(path) = dot {
                fs::write(path, g.to_dot()).map_err(|e| io_failure(path, e))?;
            }
            emit_json(cli, &serde_json::to_value(&g).expect("json"))
        }
        Command::Repro71 => {
            let r = reproduce_71(&system(&db(cli)?, 71)?)?;
            emit_json(cli, &serde_json::to_value(&r).expect("json"))?;
            scenario_status(r.all_pass())
        }
        Command::Repro353 => {
            let (r, g) = reproduce_353(&system(&db(cli)?, 353)?)?;
            emit_json(
                cli,
                &json!({
                    "report": serde_json::to_value(&r).expect("json"),
                    "graph": serde_json::to_value(&g).expect("json"),
                }),
            )?;
            scenario_status(r.all_pass())
        }
    }
}

fn scenario_status(pass: bool) -> CliResult<()> {
    if pass {
        Ok(())
    } else {
        Err(Failure {
            code: 1,
            kind: "ScenarioFailed".into(),
            message: "some reproduced facts do not hold".into(),
        })
    }
}

/// Outcome of one attempted exchange.
struct Exchange {
    alice: (SecretKey, Value),
    bob: (SecretKey, Value),
    secrets: (SharedSecret, SharedSecret),
}

fn one_exchange(s: &Session, seed: u64, mode: Mode) -> Result<Exchange, Error> {
    let a = s.keygen(seed);
    let b = s.keygen(seed ^ 0x5bd1_e995);
    let (ma, mb, sa, sb) = match mode {
        Mode::Naive => {
            let fa: ModularChain = s.naive_public(&a)?;
            let fb = s.naive_public(&b)?;
            let sa = s.naive_shared(&a, &fb)?;
            let sb = s.naive_shared(&b, &fa)?;
            (to_value(wire::encode(&fa)), to_value(wire::encode(&fb)), sa, sb)
        }
        Mode::Full => {
            let da: PublicData = s.public_data(&a)?;
            let db = s.public_data(&b)?;
            let sa = s.derive(&a, &db)?;
            let sb = s.derive(&b, &da)?;
            (to_value(wire::encode(&da)), to_value(wire::encode(&db)), sa, sb)
        }
    };
    Ok(Exchange {
        alice: (a, ma),
        bob: (b, mb),
        secrets: (sa, sb),
    })
}

const MAX_RETRIES: u64 = 3;

fn exchange_demo(cli: &Cli, a: &ParamArgs, mode: Mode) -> CliResult<()> {
    let s = generate(&db(cli)?, a)?;
    let mut aborts = Vec::new();
    for attempt in 0..=MAX_RETRIES {
        let seed = a.seed.wrapping_mul(0x9e37_79b9).wrapping_add(attempt);
        match one_exchange(&s, seed, mode) {
            Ok(x) => {
                let equal = x.secrets.0 == x.secrets.1;
                let party = |(sk, msg): &(SecretKey, Value), secret: &SharedSecret| {
                    json!({
                        "key": to_value(wire::encode(sk)),
                        "message": msg,
                        "secret": to_value(wire::encode(secret)),
                    })
                };
                emit_json(
                    cli,
                    &json!({
                        "mode": if mode == Mode::Naive { "naive" } else { "full" },
                        "p": s.params().p,
                        "n": s.params().n,
                        "primes": s.params().primes.iter().map(|i| i.q).collect::<Vec<_>>(),
                        "r": s.params().r,
                        "public_chain_end": s.params().chain.end().to_string(),
                        "alice": party(&x.alice, &x.secrets.0),
                        "bob": party(&x.bob, &x.secrets.1),
                        "equal": equal,
                        "retries": attempt,
                        "aborts": aborts,
                    }),
                )?;
                return if equal {
                    Ok(())
                } else {
                    Err(Failure {
                        code: 1,
                        kind: "SecretsDiffer".into(),
                        message: "the two parties derived different secrets".into(),
                    })
                };
            }
            Err(e) if e.is_ambiguous() => {
                info!("attempt {attempt} aborted: {e}");
                aborts.push(e.to_string());
            }
            Err(e) => return Err(e.into()),
        }
    }
    Err(Failure {
        code: 3,
        kind: "Ambiguous".into(),
        message: format!("{} attempts aborted: {}", aborts.len(), aborts.join("; ")),
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!(
                "{}",
                json!({"error": f.kind, "message": f.message, "exit_code": f.code})
            );
            ExitCode::from(f.code)
        }
    }
}
