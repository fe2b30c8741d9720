//! `scpabe`: authority, distributor and consumer workflows over files.
//!
//! Exit codes: 0 success, 1 I/O, 2 invalid input, 3 cryptographic or
//! authentication failure, 4 nothing accessible.

mod exit;

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use scpabe::abe::{self, PublicKey};
use scpabe::bench;
use scpabe::envelope;
use scpabe::lattice::{AccessPolicy, Attribute, Dimensions, LayerCoord, PolicyLattice};
use scpabe::pairing::{Pairing, ProviderId, Transparent, TypeA};
use scpabe::tree::build_tree;
use scpabe::vault::{self, layer_file_name, write_atomic, MediaPackage};

use exit::{fail, Classify, Code, Failure, Outcome};

const SEED_ENV: &str = "SCPABE_TEST_SEED";

#[derive(Parser)]
#[command(
    name = "scpabe",
    version,
    about = "Layered media access control with multi-message CP-ABE"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a public key and master key.
    Setup {
        #[arg(long, value_enum, default_value = "type-a")]
        provider: Provider,
        #[arg(long)]
        pk: PathBuf,
        #[arg(long)]
        mk: PathBuf,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Issue a user key for a set of attributes.
    Keygen {
        #[arg(long)]
        pk: PathBuf,
        #[arg(long)]
        mk: PathBuf,
        #[command(flatten)]
        shape: ShapeArg,
        /// Comma-separated attribute labels.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        attrs: Vec<String>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Derive a key for a subset of an existing key's attributes.
    Delegate {
        #[arg(long)]
        pk: PathBuf,
        #[arg(long)]
        sk: PathBuf,
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        attrs: Vec<String>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Seal a directory of layer files into a package directory.
    Package {
        #[arg(long)]
        pk: PathBuf,
        #[arg(long)]
        policy: PathBuf,
        /// Directory of payloads named by coordinate, e.g. `1_2` or `layer-1_2.bin`.
        #[arg(long)]
        layers: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Open every layer a key is entitled to.
    Unpackage {
        #[arg(long)]
        pk: PathBuf,
        #[arg(long)]
        sk: PathBuf,
        #[arg(long = "package")]
        package: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the access tree of a policy document.
    Tree {
        #[arg(long)]
        policy: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: TreeFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cost measurements as CSV.
    #[command(subcommand)]
    Bench(BenchCommand),
    /// Policy document checks.
    #[command(subcommand)]
    Policy(PolicyCommand),
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Keygen, encrypt and decrypt time against tree leaf count.
    Linearity {
        #[arg(long, value_enum, default_value = "type-a")]
        provider: Provider,
        #[arg(long, default_value = "2x2")]
        dims: Dimensions,
        #[arg(long, default_value_t = 10)]
        min: usize,
        #[arg(long, default_value_t = 100)]
        max: usize,
        #[arg(long, default_value_t = 10)]
        step: usize,
        #[arg(long, default_value_t = 5)]
        reps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Shared-tree leaf count against separate per-layer encryption.
    Savings {
        #[arg(long, required = true, num_args = 1..)]
        policy: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum PolicyCommand {
    /// Check a policy document against the lattice rules.
    Validate {
        #[arg(long)]
        policy: PathBuf,
    },
}

#[derive(Args)]
struct SeedArg {
    /// Deterministic randomness for tests. Transparent provider only.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct ShapeArg {
    /// Policy document whose layer grid the key is for.
    #[arg(long)]
    policy: Option<PathBuf>,
    /// Layer grid such as `2x3`.
    #[arg(long)]
    dims: Option<Dimensions>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Provider {
    TypeA,
    Transparent,
}

impl From<Provider> for ProviderId {
    fn from(p: Provider) -> ProviderId {
        match p {
            Provider::TypeA => ProviderId::TypeA,
            Provider::Transparent => ProviderId::Transparent,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TreeFormat {
    Text,
    Dot,
}

/// Per-command stream so seeded commands do not reuse each other's draws.
#[derive(Clone, Copy)]
enum Stream {
    Setup = 1,
    Keygen = 2,
    Delegate = 3,
    Package = 4,
    Bench = 5,
}

/// Seeds are honored only for the transparent provider. An explicit seed
/// with the real curve is refused unless `allow_curve` is set; the
/// environment variable is then ignored.
fn make_rng(
    provider: ProviderId,
    seed: &SeedArg,
    stream: Stream,
    allow_curve: bool,
) -> Outcome<ChaCha20Rng> {
    let from_env = match std::env::var(SEED_ENV) {
        Ok(v) => Some(
            v.trim()
                .parse::<u64>()
                .map_err(|_| anyhow!("{SEED_ENV} must be an unsigned integer"))
                .invalid()?,
        ),
        Err(_) => None,
    };
    let chosen = match provider {
        ProviderId::Transparent => seed.seed.or(from_env),
        ProviderId::TypeA => match seed.seed {
            Some(_) if !allow_curve => {
                return fail(
                    Code::Invalid,
                    "--seed is a test facility and is refused for type-a key material",
                )
            }
            s => s,
        },
    };
    let mut rng = match chosen {
        Some(s) => ChaCha20Rng::seed_from_u64(s),
        None => ChaCha20Rng::from_entropy(),
    };
    rng.set_stream(stream as u64);
    Ok(rng)
}

fn read_text(path: &Path) -> Outcome<String> {
    fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .io()
}

fn write_out(path: &Path, bytes: &[u8]) -> Outcome {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)
            .with_context(|| format!("creating {}", dir.display()))
            .io()?;
    }
    write_atomic(path, bytes).io()
}

fn emit(out: Option<&Path>, text: &str) -> Outcome {
    match out {
        Some(p) => write_out(p, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_policy(path: &Path) -> Outcome<PolicyLattice> {
    let text = read_text(path)?;
    PolicyLattice::from_json(&text)
        .with_context(|| format!("policy {}", path.display()))
        .invalid()
}

fn parse_attrs(labels: &[String]) -> Outcome<AccessPolicy> {
    AccessPolicy::parse(labels.iter().map(|s| s.trim().to_string())).invalid()
}

fn provider_of(path: &Path, text: &str) -> Outcome<ProviderId> {
    envelope::provider_of(text)
        .with_context(|| format!("{}", path.display()))
        .invalid()
}

fn load_pk<P: Pairing>(group: P, path: &Path, text: &str) -> Outcome<PublicKey<P>> {
    envelope::decode_public_key(group, text)
        .with_context(|| format!("public key {}", path.display()))
        .invalid()
}

/// Runs `$body` with `$group` bound to the provider named by `$id`.
macro_rules! with_provider {
    ($id:expr, $group:ident => $body:expr) => {
        match $id {
            ProviderId::TypeA => {
                let $group = TypeA;
                $body
            }
            ProviderId::Transparent => {
                let $group = Transparent;
                $body
            }
        }
    };
}

fn setup(provider: ProviderId, pk: &Path, mk: &Path, seed: &SeedArg) -> Outcome {
    let mut rng = make_rng(provider, seed, Stream::Setup, false)?;
    with_provider!(provider, group => {
        let (p, m) = abe::setup(group, &mut rng);
        write_out(pk, envelope::encode_public_key(&p).as_bytes())?;
        write_out(mk, envelope::encode_master_key(&group, &m).as_bytes())?;
    });
    eprintln!("wrote {} and {} ({provider})", pk.display(), mk.display());
    Ok(())
}

fn keygen(
    pk: &Path,
    mk: &Path,
    shape: &ShapeArg,
    attrs: &[String],
    out: &Path,
    seed: &SeedArg,
) -> Outcome {
    let pk_text = read_text(pk)?;
    let provider = provider_of(pk, &pk_text)?;
    let attrs = parse_attrs(attrs)?;
    let dims = match (&shape.policy, &shape.dims) {
        (Some(p), _) => load_policy(p)?.dims().clone(),
        (None, Some(d)) => d.clone(),
        (None, None) => return fail(Code::Invalid, "one of --policy or --dims is required"),
    };
    let mk_text = read_text(mk)?;
    let mut rng = make_rng(provider, seed, Stream::Keygen, false)?;
    with_provider!(provider, group => {
        let p = load_pk(group, pk, &pk_text)?;
        let m = envelope::decode_master_key(&group, &mk_text)
            .with_context(|| format!("master key {}", mk.display()))
            .invalid()?;
        let uk = abe::keygen(&p, &m, &attrs, &dims, &mut rng).invalid()?;
        write_out(out, envelope::encode_user_key(&group, &uk).as_bytes())?;
    });
    eprintln!(
        "wrote {} ({} attributes, {dims} layers)",
        out.display(),
        attrs.len()
    );
    Ok(())
}

fn delegate(pk: &Path, sk: &Path, attrs: &[String], out: &Path, seed: &SeedArg) -> Outcome {
    let pk_text = read_text(pk)?;
    let provider = provider_of(pk, &pk_text)?;
    let subset: BTreeSet<Attribute> = parse_attrs(attrs)?.attrs().clone();
    let sk_text = read_text(sk)?;
    let mut rng = make_rng(provider, seed, Stream::Delegate, false)?;
    with_provider!(provider, group => {
        let p = load_pk(group, pk, &pk_text)?;
        let uk = envelope::decode_user_key(&group, &sk_text)
            .with_context(|| format!("user key {}", sk.display()))
            .invalid()?;
        let dk = abe::delegate(&p, &uk, &subset, &mut rng).invalid()?;
        write_out(out, envelope::encode_user_key(&group, &dk).as_bytes())?;
    });
    eprintln!("wrote {}", out.display());
    Ok(())
}

/// Reads payload files named by coordinate: `1_2`, `1,2`, `layer-1_2`,
/// with any extension.
fn read_layers(dir: &Path) -> Outcome<Vec<(LayerCoord, Vec<u8>)>> {
    let mut out = Vec::new();
    let entries = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))
        .io()?;
    for entry in entries {
        let path = entry.io()?.path();
        if !path.is_file() {
            continue;
        }
        let name = path
            .file_name()
            .unwrap_or_default()
            .to_string_lossy()
            .into_owned();
        let stem = name.split('.').next().unwrap_or_default();
        let stem = stem.strip_prefix("layer-").unwrap_or(stem);
        let coord: LayerCoord = stem
            .parse()
            .with_context(|| format!("layer file `{name}` is not named by a coordinate"))
            .invalid()?;
        let bytes = fs::read(&path)
            .with_context(|| format!("reading {}", path.display()))
            .io()?;
        out.push((coord, bytes));
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}

fn vault_code(e: &vault::VaultError) -> Code {
    use vault::VaultError::*;
    match e {
        Io { .. } => Code::Io,
        DuplicateLayer(_) | MissingLayer(_) | UnknownLayer(_) | Lattice(_) => Code::Invalid,
        _ => Code::Crypto,
    }
}

fn package(pk: &Path, policy: &Path, layers: &Path, out: &Path, seed: &SeedArg) -> Outcome {
    let pk_text = read_text(pk)?;
    let provider = provider_of(pk, &pk_text)?;
    let lat = load_policy(policy)?;
    let payloads = read_layers(layers)?;
    let mut rng = make_rng(provider, seed, Stream::Package, false)?;
    let pkg = with_provider!(provider, group => {
        let p = load_pk(group, pk, &pk_text)?;
        vault::package(&p, &lat, payloads, &mut rng).map_err(|e| Failure::new(vault_code(&e), e))?
    });
    pkg.write_dir(out)
        .map_err(|e| Failure::new(vault_code(&e), e))?;
    eprintln!("sealed {} layers into {}", pkg.records.len(), out.display());
    Ok(())
}

fn unpackage(pk: &Path, sk: &Path, pkg_dir: &Path, out: &Path) -> Outcome {
    let pk_text = read_text(pk)?;
    let provider = provider_of(pk, &pk_text)?;
    let sk_text = read_text(sk)?;
    let pkg = MediaPackage::read_dir(pkg_dir).map_err(|e| Failure::new(vault_code(&e), e))?;
    let opened = with_provider!(provider, group => {
        let p = load_pk(group, pk, &pk_text)?;
        let uk = envelope::decode_user_key(&group, &sk_text)
            .with_context(|| format!("user key {}", sk.display()))
            .invalid()?;
        vault::unpackage(&p, &uk, &pkg).map_err(|e| Failure::new(vault_code(&e), e))?
    });
    if !opened.layers.is_empty() {
        fs::create_dir_all(out)
            .with_context(|| format!("creating {}", out.display()))
            .io()?;
    }
    for (c, bytes) in &opened.layers {
        write_out(&out.join(layer_file_name(c)), bytes)?;
    }
    let names: Vec<String> = opened.layers.keys().map(|c| c.to_string()).collect();
    eprintln!("opened {} layers: {}", names.len(), names.join(" "));
    if !opened.tampered.is_empty() {
        let bad: Vec<String> = opened.tampered.iter().map(|c| c.to_string()).collect();
        return fail(
            Code::Crypto,
            format!("authentication failed for layers {}", bad.join(" ")),
        );
    }
    if opened.layers.is_empty() {
        return fail(Code::NoAccess, "the key does not open any layer");
    }
    Ok(())
}

fn tree(policy: &Path, format: TreeFormat, out: Option<&Path>) -> Outcome {
    let lat = load_policy(policy)?;
    let t = build_tree(&lat);
    let text = match format {
        TreeFormat::Text => t.render_text(),
        TreeFormat::Dot => t.render_dot(),
    };
    emit(out, &text)
}

#[allow(clippy::too_many_arguments)]
fn bench_linearity(
    provider: ProviderId,
    dims: &Dimensions,
    min: usize,
    max: usize,
    step: usize,
    reps: usize,
    out: Option<&Path>,
    seed: &SeedArg,
) -> Outcome {
    if step == 0 || min > max {
        return fail(Code::Invalid, "need --min <= --max and --step > 0");
    }
    let floor = bench::min_leaves(dims);
    if min < floor {
        return fail(
            Code::Invalid,
            format!("{dims} needs at least {floor} leaves"),
        );
    }
    let counts: Vec<usize> = (min..=max).step_by(step).collect();
    if counts.len() < 2 {
        return fail(Code::Invalid, "need at least two leaf counts");
    }
    let mut rng = make_rng(provider, seed, Stream::Bench, true)?;
    let timings = with_provider!(provider, group => {
        bench::measure(group, dims, &counts, reps, &mut rng).crypto()?
    });
    let mut csv = String::from("leaves,keygen_ms,encrypt_ms,decrypt_ms\n");
    for t in &timings {
        csv.push_str(&format!(
            "{},{:.3},{:.3},{:.3}\n",
            t.leaves,
            t.keygen.as_secs_f64() * 1e3,
            t.encrypt.as_secs_f64() * 1e3,
            t.decrypt.as_secs_f64() * 1e3
        ));
    }
    emit(out, &csv)?;
    let [kg, enc, dec] = bench::fits(&timings);
    for (name, f) in [("keygen", kg), ("encrypt", enc), ("decrypt", dec)] {
        eprintln!(
            "{name}: {:.3} ms/leaf + {:.3} ms, R^2 = {:.4}",
            f.slope * 1e3,
            f.intercept * 1e3,
            f.r_squared
        );
    }
    Ok(())
}

fn bench_savings(policies: &[PathBuf], out: Option<&Path>) -> Outcome {
    let mut csv = String::from("policy,layers,tree_leaves,naive_leaves\n");
    for path in policies {
        let lat = load_policy(path)?;
        let s = bench::savings(&lat);
        let name = path.file_name().unwrap_or_default().to_string_lossy();
        csv.push_str(&format!(
            "{name},{},{},{}\n",
            lat.dims().layer_count(),
            s.tree_leaves,
            s.naive_leaves
        ));
    }
    emit(out, &csv)
}

fn validate(policy: &Path) -> Outcome {
    let lat = load_policy(policy)?;
    println!(
        "ok: {} layers over {}, {} attributes",
        lat.dims().layer_count(),
        lat.dims(),
        lat.alphabet().len()
    );
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Setup {
            provider,
            pk,
            mk,
            seed,
        } => setup(provider.into(), &pk, &mk, &seed),
        Command::Keygen {
            pk,
            mk,
            shape,
            attrs,
            out,
            seed,
        } => keygen(&pk, &mk, &shape, &attrs, &out, &seed),
        Command::Delegate {
            pk,
            sk,
            attrs,
            out,
            seed,
        } => delegate(&pk, &sk, &attrs, &out, &seed),
        Command::Package {
            pk,
            policy,
            layers,
            out,
            seed,
        } => package(&pk, &policy, &layers, &out, &seed),
        Command::Unpackage {
            pk,
            sk,
            package,
            out,
        } => unpackage(&pk, &sk, &package, &out),
        Command::Tree {
            policy,
            format,
            out,
        } => tree(&policy, format, out.as_deref()),
        Command::Bench(BenchCommand::Linearity {
            provider,
            dims,
            min,
            max,
            step,
            reps,
            out,
            seed,
        }) => bench_linearity(
            provider.into(),
            &dims,
            min,
            max,
            step,
            reps,
            out.as_deref(),
            &seed,
        ),
        Command::Bench(BenchCommand::Savings { policy, out }) => {
            bench_savings(&policy, out.as_deref())
        }
        Command::Policy(PolicyCommand::Validate { policy }) => validate(&policy),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            f.exit_code()
        }
    }
}
