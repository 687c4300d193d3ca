//! `v2xcms` command line: PKI lifecycle over a state directory, message
//! signing and verification, benchmarks and golden fixtures.
//!
//! Exit codes: 0 success, 1 verification or protocol failure, 2 usage error.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;
use v2xcms_core::bench::{
    BenchError, BenchReport, E2eOperation, PkiState, ReportFormat, crypto_suite_specs, e2e_verify_scalar_muls,
    emit_report, expected_ordering_held, run_e2e_bench, run_micro_bench,
};
use v2xcms_core::cert::{PSID_BSM, time32_from_unix};
use v2xcms_core::crypto::CryptoProfile;
use v2xcms_core::fixtures::{stale_fixtures, write_fixtures};
use v2xcms_core::flows::{FlowError, MessageBus, derive_rng};
use v2xcms_core::secured::{HashIdPolicy, RejectReason, SignedData, SignerMode, sign_data, verify_signed_data};

mod state;

pub use state::{Event, STATE_FILE, StateFile, World};

/// Environment variable that fixes the seed when `--seed` is absent.
pub const SEED_ENV: &str = "V2XCMS_SEED";
/// Unix time used as the PKI clock of seeded runs.
pub const SEEDED_UNIX_TIME: u64 = 1_700_000_000;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error("{0}")]
    Rejected(String),
    #[error(transparent)]
    Bench(#[from] BenchError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Flow(_) | CliError::Rejected(_) => 1,
            CliError::Usage(_) | CliError::Io(_) | CliError::Bench(_) => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "v2xcms", version, about = "V2X credential management: SCMS, CCMS and C-SCMS")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Create a root and authorities in a fresh state directory.
    Init {
        #[arg(long)]
        profile: CryptoProfile,
        #[arg(long)]
        dir: PathBuf,
        /// Seed for all randomness; falls back to $V2XCMS_SEED, then the OS.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Provision an end entity with its canonical key.
    Bootstrap(EntityArgs),
    /// Run the enrollment flow for an end entity.
    Enroll {
        #[command(flatten)]
        entity: EntityArgs,
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
    /// Run the authorization flow for an enrolled end entity.
    Authorize {
        #[command(flatten)]
        entity: EntityArgs,
        #[arg(long, default_value_t = 1)]
        batch: u32,
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
    /// Sign a payload with the entity's latest authorization certificate.
    Sign {
        #[command(flatten)]
        entity: EntityArgs,
        #[arg(long)]
        payload: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = SignerArg::Cert)]
        signer: SignerArg,
        /// `sha256` puts SHA-256 in the hashId regardless of profile.
        #[arg(long = "hash-id", value_enum, default_value_t = HashIdArg::Profile)]
        hash_id: HashIdArg,
    },
    /// Verify a signed message against the directory's trust store.
    Verify {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        msg: PathBuf,
    },
    #[command(subcommand)]
    Bench(BenchCommand),
    /// Check the golden fixtures, or rewrite them with --regen.
    Fixtures {
        #[arg(long)]
        regen: bool,
        #[arg(long, default_value = "fixtures")]
        dir: PathBuf,
    },
}

#[derive(Debug, Args)]
struct EntityArgs {
    #[arg(long)]
    dir: PathBuf,
    #[arg(long)]
    name: String,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SignerArg {
    Cert,
    Digest,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum HashIdArg {
    Profile,
    Sha256,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
enum BenchCommand {
    /// Micro-benchmarks of every primitive in every suite.
    Crypto {
        #[arg(long, default_value_t = v2xcms_core::bench::DEFAULT_MICRO_ITERATIONS)]
        iters: u32,
        #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
        format: FormatArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// End-to-end BSM generation and verification.
    E2e {
        /// `all` or one profile name.
        #[arg(long, default_value = "all")]
        profile: String,
        #[arg(long, default_value_t = v2xcms_core::bench::DEFAULT_E2E_ITERATIONS)]
        iters: u32,
        /// Benchmark an existing state directory instead of a fresh PKI.
        #[arg(long)]
        dir: Option<PathBuf>,
        /// End entity in --dir whose credential signs.
        #[arg(long)]
        name: Option<String>,
        #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
        format: FormatArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Runs the CLI on `argv` (program name first) and returns the exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Init { profile, dir, seed } => init(profile, &dir, seed),
        Command::Bootstrap(EntityArgs { dir, name }) => lifecycle(&dir, Event::Bootstrap { name }, None),
        Command::Enroll { entity, transcript } => {
            lifecycle(&entity.dir, Event::Enroll { name: entity.name }, transcript.as_deref())
        }
        Command::Authorize { entity, batch, transcript } => {
            lifecycle(&entity.dir, Event::Authorize { name: entity.name, batch }, transcript.as_deref())
        }
        Command::Sign { entity, payload, out, signer, hash_id } => sign(&entity, &payload, &out, signer, hash_id),
        Command::Verify { dir, msg } => verify(&dir, &msg),
        Command::Bench(BenchCommand::Crypto { iters, format, out }) => bench_crypto(iters, format, out.as_deref()),
        Command::Bench(BenchCommand::E2e { profile, iters, dir, name, format, out }) => {
            bench_e2e(&profile, iters, dir.as_deref(), name.as_deref(), format, out.as_deref())
        }
        Command::Fixtures { regen, dir } => fixtures(regen, &dir),
    }
}

fn resolve_seed(seed: Option<u64>) -> Result<Option<u64>, CliError> {
    if seed.is_some() {
        return Ok(seed);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| CliError::Usage(format!("{SEED_ENV} must be an unsigned integer, got `{v}`"))),
        Err(_) => Ok(None),
    }
}

fn init(profile: CryptoProfile, dir: &Path, seed: Option<u64>) -> Result<(), CliError> {
    if dir.join(STATE_FILE).exists() {
        return Err(CliError::Usage(format!("{} already holds PKI state", dir.display())));
    }
    // Seeded runs also fix the clock, otherwise validity periods would
    // differ between two runs of the same seed.
    let (seed, now) = match resolve_seed(seed)? {
        Some(s) => (s, time32_from_unix(SEEDED_UNIX_TIME)),
        None => {
            let unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(SEEDED_UNIX_TIME);
            (rand::random(), time32_from_unix(unix))
        }
    };
    let state = StateFile::new(profile, seed, now);
    let world = state.replay()?;
    state.save(dir)?;
    world.write_artifacts(dir)?;
    println!("initialised {profile} PKI in {} (root {})", dir.display(), world.deployment.root.hashed_id8(profile));
    Ok(())
}

fn lifecycle(dir: &Path, event: Event, transcript: Option<&Path>) -> Result<(), CliError> {
    let mut state = StateFile::load(dir)?;
    let mut world = state.replay()?;
    let mut bus = MessageBus::new();
    let held = |w: &World, name: &str| w.entities.get(name).map_or(0, |e| e.authorization.len());
    let before = match &event {
        Event::Authorize { name, .. } => held(&world, name),
        _ => 0,
    };
    world.apply(&event, &mut bus)?;
    if let Some(path) = transcript {
        fs::write(path, bus.transcript().dump())?;
    }
    state.events.push(event.clone());
    state.save(dir)?;
    world.write_artifacts(dir)?;
    let messages = bus.transcript().len();
    match &event {
        Event::Bootstrap { name } => println!("bootstrapped {name}"),
        Event::Enroll { name } => println!("enrolled {name} ({messages} messages)"),
        // CCMS issues one ticket per request whatever the batch size.
        Event::Authorize { name, .. } => {
            println!("authorized {name}: {} certificate(s), {messages} messages", held(&world, name) - before)
        }
    }
    Ok(())
}

fn sign(entity: &EntityArgs, payload: &Path, out: &Path, signer: SignerArg, hash_id: HashIdArg) -> Result<(), CliError> {
    let mut state = StateFile::load(&entity.dir)?;
    let world = state.replay()?;
    let ee = world
        .entities
        .get(&entity.name)
        .ok_or_else(|| CliError::Usage(format!("unknown end entity `{}`", entity.name)))?;
    let credential = ee
        .authorization
        .last()
        .ok_or_else(|| CliError::Usage(format!("`{}` holds no authorization certificate; run `authorize`", entity.name)))?;
    let data = fs::read(payload).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", payload.display())))?;
    let mode = match signer {
        SignerArg::Cert => SignerMode::Certificate,
        SignerArg::Digest => SignerMode::Digest,
    };
    let policy = match hash_id {
        HashIdArg::Profile => HashIdPolicy::Profile,
        HashIdArg::Sha256 => HashIdPolicy::Sha256,
    };
    let mut rng = derive_rng(state.seed, &format!("sign/{}/{}", entity.name, state.signatures));
    let gen_time = u64::from(state.now) * 1_000_000;
    let msg = sign_data(state.profile, &data, PSID_BSM, credential, mode, policy, gen_time, &mut rng)
        .map_err(|e| CliError::Rejected(format!("signing failed: {e}")))?;
    fs::write(out, msg.to_bytes())?;
    state.signatures += 1;
    state.save(&entity.dir)?;
    println!("signed {} bytes -> {}", data.len(), out.display());
    Ok(())
}

fn verify(dir: &Path, msg_path: &Path) -> Result<(), CliError> {
    let state = StateFile::load(dir)?;
    let world = state.replay()?;
    let bytes = fs::read(msg_path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", msg_path.display())))?;
    let msg = SignedData::from_bytes(&bytes).map_err(|e| {
        println!("FAIL - decode {e}");
        CliError::Rejected(format!("malformed message: {e}"))
    })?;
    let outcome = verify_signed_data(state.profile, &msg, &world.issued(), &world.trust(), state.now);
    match outcome.verdict {
        Ok(path) => {
            println!("OK {path:?}");
            Ok(())
        }
        Err(reason) => {
            match reason {
                RejectReason::ChainInvalid(c) => println!("FAIL {} {}", c.index, c.reason),
                other => println!("FAIL - {other}"),
            }
            Err(CliError::Rejected(format!("verification failed: {reason}")))
        }
    }
}

fn write_output(out: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, bytes)?,
        None => io::stdout().write_all(bytes)?,
    }
    Ok(())
}

fn report_format(f: FormatArg) -> ReportFormat {
    match f {
        FormatArg::Json => ReportFormat::Json,
        FormatArg::Csv => ReportFormat::Csv,
    }
}

fn bench_crypto(iters: u32, format: FormatArg, out: Option<&Path>) -> Result<(), CliError> {
    let reports = crypto_suite_specs(iters).iter().map(run_micro_bench).collect::<Result<Vec<BenchReport>, _>>()?;
    write_output(out, &emit_report(&reports, report_format(format)))?;
    for verdict in expected_ordering_held(&reports) {
        eprintln!("{verdict}");
    }
    Ok(())
}

fn bench_e2e(
    profile: &str,
    iters: u32,
    dir: Option<&Path>,
    name: Option<&str>,
    format: FormatArg,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let profiles: Vec<CryptoProfile> = if profile == "all" {
        CryptoProfile::ALL.to_vec()
    } else {
        vec![profile.parse().map_err(|_| CliError::Usage(format!("unknown profile `{profile}`")))?]
    };
    let from_dir = match dir {
        Some(dir) => Some(state_pki(dir, name)?),
        None => None,
    };
    let mut reports = Vec::new();
    for p in profiles {
        let provisioned;
        let state = match &from_dir {
            Some(s) => Some(s),
            None => {
                provisioned = PkiState::provision(p, resolve_seed(None)?.unwrap_or(0))?;
                Some(&provisioned)
            }
        };
        for op in [E2eOperation::Generate, E2eOperation::Verify] {
            reports.push(run_e2e_bench(state, p, op, iters)?);
        }
        if let Some(s) = state.filter(|s| s.profile == p) {
            eprintln!("{p}: warm verify performs {} scalar multiplications", e2e_verify_scalar_muls(s));
        }
    }
    write_output(out, &emit_report(&reports, report_format(format)))?;
    for verdict in expected_ordering_held(&reports) {
        eprintln!("{verdict}");
    }
    Ok(())
}

/// The e2e benchmark state of an existing directory: an entity's latest
/// authorization credential (the first authorized entity by default).
fn state_pki(dir: &Path, name: Option<&str>) -> Result<PkiState, CliError> {
    let state = StateFile::load(dir)?;
    let world = state.replay()?;
    let ee = match name {
        Some(n) => world.entities.get(n).ok_or_else(|| CliError::Usage(format!("unknown end entity `{n}`")))?,
        None => world
            .entities
            .values()
            .find(|e| !e.authorization.is_empty())
            .ok_or_else(|| CliError::Usage("no authorized end entity in state directory".into()))?,
    };
    let credential = ee
        .authorization
        .last()
        .cloned()
        .ok_or_else(|| CliError::Usage(format!("`{}` holds no authorization certificate", ee.name)))?;
    Ok(PkiState::new(state.profile, state.now, credential, world.trust()))
}

fn fixtures(regen: bool, dir: &Path) -> Result<(), CliError> {
    if regen {
        let written = write_fixtures(dir)?;
        println!("wrote {} fixture files under {}", written.len(), dir.display());
        return Ok(());
    }
    let stale = stale_fixtures(dir);
    if stale.is_empty() {
        println!("fixtures up to date");
        Ok(())
    } else {
        for path in &stale {
            println!("stale {path}");
        }
        Err(CliError::Rejected(format!("{} fixture file(s) missing or stale; rerun with --regen", stale.len())))
    }
}
