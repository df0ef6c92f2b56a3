//! Command-line surface: argument parsing, report formats, and the on-disk
//! cache of computed tables.

use std::fs::{self, File, OpenOptions};
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use fs2::FileExt;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::admissible_ops::DEFAULT_STEP_BUDGET;
use crate::fp_core::PrimeField;
use crate::qx_homology::{generator_set, monomial_dims, DegreewiseHopfAlgebra, SpaceKind, SpaceSpec};
use crate::series_assembly::{
    assemble_omega_odd, assemble_omega_p2, assemble_sigma_odd, consistency_emss, suspension_consistency_p2,
    GenKind, Generator, SeriesError,
};
use crate::transfer::{
    q_del, regression_mmm, s0_algebra, verify_coker, verify_image_bigraded, verify_kernel_bidegrees,
    verify_p_surjective_p2, verify_right_ideal, TransferError, Verdict,
};
use crate::unstable_modules::letters_of_degree;

/// Bumped whenever cached tables would change meaning.
pub const ARTIFACT_VERSION: u32 = 1;

pub const CACHE_ENV: &str = "DL_ENGINE_CACHE";

#[derive(Debug, Parser)]
#[command(name = "dl-engine", version, about = "Dyer-Lashof homology tables and checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-degree dimensions of a homology algebra.
    Dims(DimsArgs),
    /// Run one verification suite and report a verdict.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
pub enum Space {
    S0,
    Cp,
    SigmaCp,
    OmegaSigma,
    Omega,
}

impl Space {
    pub fn name(&self) -> &'static str {
        match self {
            Space::S0 => "s0",
            Space::Cp => "cp",
            Space::SigmaCp => "sigma-cp",
            Space::OmegaSigma => "omega-sigma",
            Space::Omega => "omega",
        }
    }

    fn kind(&self) -> Option<SpaceKind> {
        match self {
            Space::S0 => Some(SpaceKind::S0),
            Space::Cp => Some(SpaceKind::CP),
            Space::SigmaCp => Some(SpaceKind::SigmaCP),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Theorem {
    RightIdeal,
    ImageBigraded,
    KernelBidegrees,
    Coker,
    PSurjective,
    RegressionMmm,
    EmssConsistency,
    SuspensionConsistency,
    HopfAxioms,
    MilnorMoore,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    #[arg(long)]
    pub prime: u32,
    #[arg(long, default_value_t = 40)]
    pub max_degree: i64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_STEP_BUDGET)]
    pub step_budget: u64,
}

#[derive(Debug, Clone, Args)]
pub struct DimsArgs {
    #[arg(long, value_enum)]
    pub space: Space,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub theorem: Theorem,
    /// Restricts hopf-axioms and milnor-moore to one space.
    #[arg(long, value_enum)]
    pub space: Option<Space>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("pipeline integrity failure: {0}")]
    Internal(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 2,
            _ => 1,
        }
    }
}

impl From<TransferError> for CliError {
    fn from(e: TransferError) -> Self {
        match e {
            TransferError::WrongPrime { .. } | TransferError::Field(_) => CliError::Invalid(e.to_string()),
            _ => CliError::Internal(e.to_string()),
        }
    }
}

impl From<SeriesError> for CliError {
    fn from(e: SeriesError) -> Self {
        match e {
            SeriesError::Transfer(t) => t.into(),
            SeriesError::Field(_) => CliError::Invalid(e.to_string()),
            _ => CliError::Internal(e.to_string()),
        }
    }
}

/// The machine-readable output of both commands.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub prime: u32,
    pub max_degree: i64,
    pub space: Option<String>,
    pub dims: Vec<u64>,
    pub generators: Vec<Generator>,
    pub verdicts: Vec<Verdict>,
}

// ---- cache ----

#[derive(Debug, Serialize, Deserialize)]
struct CacheEntry {
    version: u32,
    key: String,
    sha256: String,
    payload: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CacheKey {
    pub prime: u32,
    pub space: String,
    pub max_degree: i64,
    pub version: u32,
}

impl CacheKey {
    pub fn new(prime: u32, space: &str, max_degree: i64) -> Self {
        CacheKey { prime, space: space.into(), max_degree, version: ARTIFACT_VERSION }
    }

    pub fn file_stem(&self) -> String {
        format!("v{}-{}-p{}-n{}", self.version, self.space, self.prime, self.max_degree)
    }
}

/// One JSON file per key; writes go to a temporary file under an exclusive
/// lock and are renamed into place, so readers never see partial entries.
pub struct Cache {
    dir: PathBuf,
}

fn digest(s: &str) -> String {
    hex::encode(Sha256::digest(s.as_bytes()))
}

impl Cache {
    pub fn open(dir: &Path) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Cache { dir: dir.to_path_buf() })
    }

    /// `--cache-dir`, overridden by DL_ENGINE_CACHE when set.
    pub fn resolve_dir(flag: Option<&Path>) -> Option<PathBuf> {
        match std::env::var_os(CACHE_ENV) {
            Some(v) if !v.is_empty() => Some(PathBuf::from(v)),
            _ => flag.map(Path::to_path_buf),
        }
    }

    fn path(&self, key: &CacheKey) -> PathBuf {
        self.dir.join(format!("{}.json", key.file_stem()))
    }

    pub fn store<T: Serialize>(&self, key: &CacheKey, value: &T) -> io::Result<()> {
        let payload = serde_json::to_string(value)?;
        let entry = CacheEntry { version: key.version, key: key.file_stem(), sha256: digest(&payload), payload };
        let lock = OpenOptions::new().create(true).truncate(false).write(true).open(self.dir.join(format!("{}.lock", key.file_stem())))?;
        lock.lock_exclusive()?;
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        serde_json::to_writer(&mut tmp, &entry)?;
        tmp.flush()?;
        tmp.persist(self.path(key)).map_err(|e| e.error)?;
        lock.unlock()
    }

    /// None on a miss. Entries that fail to parse, carry another version or
    /// key, or whose checksum does not match are removed with a warning.
    pub fn load<T: DeserializeOwned>(&self, key: &CacheKey) -> Option<T> {
        let path = self.path(key);
        let mut file = File::open(&path).ok()?;
        let _ = file.lock_shared();
        let mut text = String::new();
        let read = file.read_to_string(&mut text);
        let _ = file.unlock();
        let parsed = read.ok().and_then(|_| serde_json::from_str::<CacheEntry>(&text).ok());
        let valid = parsed.filter(|e| {
            e.version == key.version && e.key == key.file_stem() && e.sha256 == digest(&e.payload)
        });
        match valid.and_then(|e| serde_json::from_str(&e.payload).ok()) {
            Some(v) => Some(v),
            None => {
                log::warn!("discarding corrupt cache entry {}", path.display());
                let _ = fs::remove_file(&path);
                None
            }
        }
    }
}

// ---- commands ----

fn field(p: u32) -> Result<PrimeField, CliError> {
    PrimeField::new(p as u64).map_err(|e| CliError::Invalid(e.to_string()))
}

fn check_common(c: &Common) -> Result<PrimeField, CliError> {
    if c.max_degree < 0 {
        return Err(CliError::Invalid("max-degree must be >= 0".into()));
    }
    if c.threads == Some(0) {
        return Err(CliError::Invalid("threads must be >= 1".into()));
    }
    field(c.prime)
}

pub fn compute_dims(space: Space, p: u32, n: i64, budget: u64) -> Result<Report, CliError> {
    let f = field(p)?;
    let mut report =
        Report { prime: p, max_degree: n, space: Some(space.name().into()), dims: Vec::new(), generators: Vec::new(), verdicts: Vec::new() };
    match space {
        Space::S0 | Space::Cp | Space::SigmaCp => {
            let spec = SpaceSpec::new(space.kind().unwrap(), f);
            report.dims = monomial_dims(&spec, n);
            report.generators = generator_set(&spec, n)
                .into_iter()
                .map(|g| Generator {
                    degree: g.degree,
                    kind: if p != 2 && g.degree % 2 == 1 { GenKind::Ext } else { GenKind::Poly },
                    label: g.label,
                })
                .collect();
        }
        Space::OmegaSigma => {
            if p == 2 {
                return Err(CliError::Invalid("omega-sigma needs an odd prime".into()));
            }
            let s = assemble_sigma_odd(p, n, budget)?;
            report.dims = s.series.coeffs.clone();
            for (kind, map) in [(GenKind::Ext, &s.factorization.exterior), (GenKind::Poly, &s.factorization.polynomial)] {
                for (&d, &k) in map {
                    for i in 0..k {
                        report.generators.push(Generator { degree: d, kind, label: format!("x{}.{}", d, i) });
                    }
                }
            }
            report.generators.sort_by(|a, b| (a.degree, a.kind, &a.label).cmp(&(b.degree, b.kind, &b.label)));
        }
        Space::Omega => {
            if p == 2 {
                report.dims = assemble_omega_p2(n, budget)?.series.coeffs;
            } else {
                let (_, o) = assemble_omega_odd(p, n, budget)?;
                report.dims = o.series.coeffs;
                report.generators = o.generators;
            }
        }
    }
    Ok(report)
}

fn hopf_spaces(space: Option<Space>) -> Result<Vec<SpaceKind>, CliError> {
    match space {
        None => Ok(vec![SpaceKind::S0, SpaceKind::CP, SpaceKind::SigmaCP]),
        Some(s) => s.kind().map(|k| vec![k]).ok_or_else(|| CliError::Invalid(format!("{} has no Hopf table", s.name()))),
    }
}

/// Bialgebra, coassociativity, cocommutativity, counit, Frobenius
/// injectivity and R-action/coproduct compatibility through degree n.
pub fn verify_hopf_axioms(kind: SpaceKind, p: u32, n: i64, budget: u64) -> Result<Verdict, CliError> {
    let f = field(p)?;
    let h = DegreewiseHopfAlgebra::with_budget(SpaceSpec::new(kind, f), n, budget);
    let mut v = Verdict { theorem: format!("hopf-axioms/{}", kind.name()), prime: p, max_degree: n, pass: true, witnesses: Vec::new() };
    let internal = |e: crate::qx_homology::HopfError| CliError::Internal(e.to_string());
    if let Some((a, b)) = h.check_bialgebra(n).map_err(internal)? {
        v.pass = false;
        v.witnesses.push(format!("Δ({} {}) differs from Δ({})Δ({})", a, b, a, b));
    }
    if let Some((g, law)) = h.check_coalgebra(n).map_err(internal)? {
        v.pass = false;
        v.witnesses.push(format!("{} fails {}", g, law));
    }
    for k in 1..=n / p as i64 {
        if !h.frobenius_injective(k) {
            v.pass = false;
            v.witnesses.push(format!("Frobenius not injective on the polynomial part in degree {}", k));
        }
    }
    let mut pairs = 0;
    for g in 0..h.gens.len() as u32 {
        let dg = h.gens[g as usize].degree;
        for d in 1..=(n - dg) {
            for l in letters_of_degree(p, d) {
                pairs += 1;
                if !h.check_action_coproduct(l, &h.generator_elem(g)).map_err(internal)? {
                    v.pass = false;
                    v.witnesses.push(format!("Δ({} {}) mismatch", l, h.generator_label(g)));
                }
            }
        }
    }
    v.witnesses.push(format!("{} generators, {} letter/generator pairs", h.gens.len(), pairs));
    Ok(v)
}

pub fn verify_milnor_moore(kind: SpaceKind, p: u32, n: i64, budget: u64) -> Result<Verdict, CliError> {
    let f = field(p)?;
    let h = DegreewiseHopfAlgebra::with_budget(SpaceSpec::new(kind, f), n, budget);
    let rows = h.milnor_moore(n).map_err(|e| CliError::Internal(e.to_string()))?;
    let mut v = Verdict { theorem: format!("milnor-moore/{}", kind.name()), prime: p, max_degree: n, pass: true, witnesses: Vec::new() };
    for r in &rows {
        if r.residual() != 0 {
            v.pass = false;
            v.witnesses.push(format!("degree {}: {:?}", r.degree, r));
        }
    }
    v.witnesses.push(format!("P dims {:?}", rows.iter().map(|r| r.prim).collect::<Vec<_>>()));
    Ok(v)
}

pub fn run_verify(args: &VerifyArgs) -> Result<Vec<Verdict>, CliError> {
    let c = &args.common;
    check_common(c)?;
    let (p, n, b) = (c.prime, c.max_degree, c.step_budget);
    let odd_only = |name: &str| if p == 2 { Err(CliError::Invalid(format!("{} needs an odd prime", name))) } else { Ok(()) };
    let two_only = |name: &str| if p != 2 { Err(CliError::Invalid(format!("{} needs p = 2", name))) } else { Ok(()) };
    let out = match args.theorem {
        Theorem::RightIdeal => vec![verify_right_ideal(p, n, b)?],
        Theorem::ImageBigraded => {
            odd_only("image-bigraded")?;
            vec![verify_image_bigraded(&q_del(p, n, b)?)?]
        }
        Theorem::KernelBidegrees => {
            odd_only("kernel-bidegrees")?;
            vec![verify_kernel_bidegrees(&q_del(p, n, b)?)?]
        }
        Theorem::Coker => {
            let td = q_del(p, n, b)?;
            let h = s0_algebra(p, n, b)?;
            vec![verify_coker(&td, Some(&h), n)?]
        }
        Theorem::PSurjective => {
            two_only("p-surjective")?;
            let td = q_del(p, n, b)?;
            let h = s0_algebra(p, n, b)?;
            vec![verify_p_surjective_p2(&td, &h)?]
        }
        Theorem::RegressionMmm => {
            two_only("regression-mmm")?;
            vec![regression_mmm(&q_del(p, n.max(4), b)?)?]
        }
        Theorem::EmssConsistency => {
            odd_only("emss-consistency")?;
            vec![consistency_emss(p, n, b)?]
        }
        Theorem::SuspensionConsistency => {
            two_only("suspension-consistency")?;
            vec![suspension_consistency_p2(n, b)?]
        }
        Theorem::HopfAxioms => {
            hopf_spaces(args.space)?.into_iter().map(|k| verify_hopf_axioms(k, p, n, b)).collect::<Result<_, _>>()?
        }
        Theorem::MilnorMoore => {
            hopf_spaces(args.space)?.into_iter().map(|k| verify_milnor_moore(k, p, n, b)).collect::<Result<_, _>>()?
        }
    };
    Ok(out)
}

pub fn write_report(out: &mut dyn Write, r: &Report, format: Format) -> Result<(), CliError> {
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut *out, r).map_err(io::Error::from)?;
            writeln!(out)?;
        }
        Format::Csv => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(&mut *out);
            if r.verdicts.is_empty() {
                for (d, x) in r.dims.iter().enumerate() {
                    w.serialize((d, x)).map_err(|e| CliError::Io(e.into()))?;
                }
            } else {
                for v in &r.verdicts {
                    w.serialize((&v.theorem, v.prime, v.max_degree, v.pass)).map_err(|e| CliError::Io(e.into()))?;
                }
            }
            w.flush()?;
        }
        Format::Text => {
            if r.verdicts.is_empty() {
                writeln!(out, "{}", r.dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(","))?;
            }
            for v in &r.verdicts {
                writeln!(out, "{} p={} N={}: {}", v.theorem, v.prime, v.max_degree, if v.pass { "pass" } else { "FAIL" })?;
                for w in &v.witnesses {
                    writeln!(out, "  {}", w)?;
                }
            }
        }
    }
    Ok(())
}

fn init_threads(t: Option<usize>) {
    if let Some(t) = t {
        // a second initialization in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
}

/// Runs a parsed command, writing the report to `out`; returns the exit code.
pub fn run(cli: &Cli, out: &mut dyn Write) -> i32 {
    let result = match &cli.command {
        Command::Dims(a) => run_dims(a, out),
        Command::Verify(a) => run_verify_cmd(a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("dl-engine: {}", e);
            e.exit_code()
        }
    }
}

fn run_dims(a: &DimsArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let c = &a.common;
    check_common(c)?;
    init_threads(c.threads);
    let key = CacheKey::new(c.prime, a.space.name(), c.max_degree);
    let cache = match Cache::resolve_dir(c.cache_dir.as_deref()) {
        Some(d) => Some(Cache::open(&d)?),
        None => None,
    };
    let cached = cache.as_ref().and_then(|k| k.load::<Report>(&key));
    let report = match cached {
        Some(r) => r,
        None => {
            let r = compute_dims(a.space, c.prime, c.max_degree, c.step_budget)?;
            if let Some(k) = &cache {
                k.store(&key, &r)?;
            }
            r
        }
    };
    write_report(out, &report, c.format)?;
    Ok(0)
}

fn run_verify_cmd(a: &VerifyArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let c = &a.common;
    init_threads(c.threads);
    let verdicts = run_verify(a)?;
    let pass = verdicts.iter().all(|v| v.pass);
    let report = Report {
        prime: c.prime,
        max_degree: c.max_degree,
        space: a.space.map(|s| s.name().to_string()),
        dims: Vec::new(),
        generators: Vec::new(),
        verdicts,
    };
    write_report(out, &report, c.format)?;
    Ok(if pass { 0 } else { 1 })
}
