//! `monogamy` command-line tool. [`run`] parses arguments, executes one
//! command and returns the exit code together with the JSON report (stdout)
//! and a short human-readable summary (stderr).

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use monogamy::bell::{chsh_forms, chsh_max_2qubit, chsh_value, correlation_matrix, joint_table, lhv_from_extension, lhv_table, local_2x2_membership_detail, Scenario};
use monogamy::entanglement::{is_ppt, negativity, partial_transpose_spectrum};
use monogamy::extendibility::{
    ab_marginal, bisect_threshold, check_problem, hierarchy_with, verify_extension, Criterion, ExtendibilityResult, ExtensionProblem, Family, Variant,
    DEFAULT_MAX_DIM, THRESHOLD_WIDTH,
};
use monogamy::io::{load_measurements, load_state, save_state};
use monogamy::sdp::SdpStatus;
use monogamy::states::{bdsw_tripartite, bush_rumsfeld, max_entangled, random_density, werner};
use monogamy::{DensityMatrix, Error};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_BORDERLINE: i32 = 4;

/// Environment variable overriding the extension dimension cap.
pub const MAX_DIM_VAR: &str = "MONOGAMY_MAX_DIM";

#[derive(Parser, Debug)]
#[command(name = "monogamy", version, about = "Entanglement, symmetric-extension and Bell-locality checks for bipartite states")]
struct Cli {
    /// Exit with code 4 when a solver verdict is Borderline.
    #[arg(long, global = true)]
    strict: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StateName {
    #[value(name = "phi_plus")]
    PhiPlus,
    Werner,
    #[value(name = "bush_rumsfeld")]
    BushRumsfeld,
    Bdsw,
    Random,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum VariantArg {
    Perm,
    Marginals,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Perm => Variant::PermutationInvariant,
            VariantArg::Marginals => Variant::EqualMarginals,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FamilyArg {
    Werner,
    #[value(name = "bush_rumsfeld")]
    BushRumsfeld,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a named state to a file.
    Gen {
        name: StateName,
        #[arg(short = 'o', long)]
        output: PathBuf,
        /// Werner mixing parameter.
        #[arg(long)]
        p: Option<f64>,
        /// Bush-Rumsfeld weight of |11>.
        #[arg(long)]
        eps: Option<f64>,
        /// Local dimension for phi_plus.
        #[arg(long, default_value_t = 2)]
        d: usize,
        /// Subsystem dimensions for random, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "2,2")]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Spectrum of the partial transpose.
    Ppt {
        file: PathBuf,
        #[arg(long, default_value_t = 1)]
        index: usize,
    },
    Negativity {
        file: PathBuf,
        #[arg(long, default_value_t = 1)]
        index: usize,
    },
    /// Decide k-extendibility of a bipartite state.
    Extend {
        file: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u32).range(2..))]
        k: u32,
        #[arg(long, value_enum, default_value = "perm")]
        variant: VariantArg,
        /// Write the extension to this state file when Feasible.
        #[arg(long)]
        witness: Option<PathBuf>,
        /// Write the infeasibility certificate here when Infeasible.
        #[arg(long)]
        certificate: Option<PathBuf>,
    },
    /// Extendibility for k = 2 … kmax.
    Hierarchy {
        file: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u32).range(2..))]
        kmax: u32,
        #[arg(long, value_enum, default_value = "perm")]
        variant: VariantArg,
    },
    /// Maximal CHSH value of a two-qubit state.
    Chsh { file: PathBuf },
    /// Hidden-variable model from a k-extension, compared with the quantum table.
    Lhv {
        /// Bipartite state, or a state on [dA, dB, …, dB] used as the extension directly.
        file: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u32).range(2..))]
        k: u32,
        #[arg(long)]
        alice: PathBuf,
        #[arg(long)]
        bob: PathBuf,
        #[arg(long, value_enum, default_value = "perm")]
        variant: VariantArg,
    },
    /// Keep the listed subsystems and trace out the rest.
    Reduce {
        file: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        keep: Vec<usize>,
        #[arg(short = 'o', long)]
        output: PathBuf,
    },
    /// Re-check an extension file against a state.
    Verify {
        extension: PathBuf,
        #[arg(long)]
        state: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u32).range(2..))]
        k: u32,
        #[arg(long, value_enum, default_value = "perm")]
        variant: VariantArg,
    },
    /// Bisect the extendibility (or PPT, without --k) threshold of a family.
    Threshold {
        #[arg(long, value_enum)]
        family: FamilyArg,
        #[arg(long, value_parser = clap::value_parser!(u32).range(2..))]
        k: Option<u32>,
        #[arg(long, default_value_t = 0.0)]
        lo: f64,
        #[arg(long, default_value_t = 1.0)]
        hi: f64,
        #[arg(long, default_value_t = THRESHOLD_WIDTH)]
        width: f64,
    },
}

/// Result of one invocation.
#[derive(Debug)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

#[derive(Serialize)]
struct Report {
    command: Vec<String>,
    input_digest: Option<String>,
    result: Value,
    files: Map<String, Value>,
    wall_clock_seconds: f64,
}

enum Failure {
    Usage(String),
    Validation(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Validation(e.to_string())
    }
}

type CmdResult = std::result::Result<Response, Failure>;

struct Response {
    result: Value,
    files: Map<String, Value>,
    inputs: Vec<PathBuf>,
    summary: String,
    borderline: bool,
}

impl Response {
    fn new(result: Value, summary: String) -> Self {
        Self { result, files: Map::new(), inputs: Vec::new(), summary, borderline: false }
    }

    fn input(mut self, path: &Path) -> Self {
        self.inputs.push(path.to_path_buf());
        self
    }
}

/// Rounds to 12 significant digits; non-finite values become `null`.
fn num(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    let rounded: f64 = format!("{x:.11e}").parse().unwrap_or(x);
    json!(rounded)
}

fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

fn status_name(s: SdpStatus) -> &'static str {
    match s {
        SdpStatus::Feasible => "Feasible",
        SdpStatus::Infeasible => "Infeasible",
        SdpStatus::Borderline => "Borderline",
    }
}

fn max_dim() -> std::result::Result<usize, Failure> {
    match std::env::var(MAX_DIM_VAR) {
        Ok(v) => v.trim().parse().map_err(|_| Failure::Usage(format!("{MAX_DIM_VAR} must be a positive integer, got {v:?}"))),
        Err(_) => Ok(DEFAULT_MAX_DIM),
    }
}

fn load(path: &Path) -> std::result::Result<DensityMatrix, Failure> {
    load_state(path).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))
}

fn require_bipartite(rho: &DensityMatrix, path: &Path) -> std::result::Result<(), Failure> {
    if rho.dims().len() != 2 {
        return Err(Failure::Validation(format!(
            "{}: expected a bipartite state, dims are {:?} (use `reduce` first)",
            path.display(),
            rho.dims()
        )));
    }
    Ok(())
}

fn extension_problem(rho: DensityMatrix, k: usize, variant: Variant) -> std::result::Result<ExtensionProblem, Failure> {
    let cap = max_dim()?;
    ExtensionProblem::with_cap(rho, k, variant, cap).map_err(|e| match e {
        Error::DimensionCap { dim, cap } => Failure::Validation(format!(
            "extension variable of side {dim} exceeds the dimension cap {cap}; lower k or raise {MAX_DIM_VAR}"
        )),
        other => other.into(),
    })
}

fn result_json(r: &ExtendibilityResult) -> Value {
    json!({
        "k": r.k,
        "variant": r.variant.to_string(),
        "status": status_name(r.status),
        "margin": num(r.margin),
        "iterations": r.iterations,
        "face_dimension": r.face_dimension,
    })
}

fn digest(paths: &[PathBuf]) -> Option<String> {
    if paths.is_empty() {
        return None;
    }
    let mut h = Sha256::new();
    for p in paths {
        h.update(fs::read(p).ok()?);
    }
    Some(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

fn write_json(path: &Path, v: &Value) -> std::result::Result<(), Failure> {
    fs::write(path, serde_json::to_string(v).expect("values serialize")).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))
}

fn gen(name: StateName, output: &Path, p: Option<f64>, eps: Option<f64>, d: usize, dims: &[usize], seed: u64) -> CmdResult {
    let (rho, label) = match name {
        StateName::PhiPlus => (max_entangled(d)?, "phi_plus".to_string()),
        StateName::Werner => {
            let p = p.ok_or_else(|| Failure::Usage("gen werner requires --p".into()))?;
            (werner(p)?, format!("werner_{p}"))
        }
        StateName::BushRumsfeld => {
            let eps = eps.ok_or_else(|| Failure::Usage("gen bush_rumsfeld requires --eps".into()))?;
            (bush_rumsfeld(eps)?, format!("bush_rumsfeld_{eps}"))
        }
        StateName::Bdsw => (bdsw_tripartite(), "bdsw".to_string()),
        StateName::Random => {
            if dims.is_empty() || dims.contains(&0) {
                return Err(Failure::Usage(format!("invalid --dims {dims:?}")));
            }
            (random_density(dims, seed)?, format!("random_seed{seed}"))
        }
    };
    save_state(output, &rho, Some(&label)).map_err(|e| Failure::Validation(format!("{}: {e}", output.display())))?;
    let mut r = Response::new(json!({"label": label, "dims": rho.dims()}), format!("wrote {label} with dims {:?}", rho.dims()));
    r.files.insert("state".into(), json!(output.display().to_string()));
    Ok(r)
}

fn ppt(file: &Path, index: usize) -> CmdResult {
    let rho = load(file)?;
    let spectrum = partial_transpose_spectrum(&rho, index)?;
    let ppt = is_ppt(&rho, index)?;
    let summary = format!("partial transpose on subsystem {index}: min eigenvalue {:.6e}, {}", spectrum[0], if ppt { "PPT" } else { "NPT (entangled)" });
    Ok(Response::new(json!({"index": index, "min_eigenvalue": num(spectrum[0]), "spectrum": nums(&spectrum), "ppt": ppt}), summary).input(file))
}

fn negativity_cmd(file: &Path, index: usize) -> CmdResult {
    let rho = load(file)?;
    let n = negativity(&rho, index)?;
    Ok(Response::new(json!({"index": index, "negativity": num(n)}), format!("negativity {n:.12}")).input(file))
}

fn extend(file: &Path, k: usize, variant: Variant, witness: Option<&Path>, certificate: Option<&Path>) -> CmdResult {
    let rho = load(file)?;
    require_bipartite(&rho, file)?;
    let problem = extension_problem(rho, k, variant)?;
    let r = check_problem(&problem)?;
    let mut resp = Response::new(result_json(&r), format!("{k}-extendibility ({variant}): {} (margin {:.6e})", status_name(r.status), r.margin)).input(file);
    resp.borderline = r.status == SdpStatus::Borderline;
    if let (Some(path), Some(ext)) = (witness, &r.extension) {
        save_state(path, ext, Some(&format!("extension_k{k}"))).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?;
        resp.files.insert("witness".into(), json!(path.display().to_string()));
    }
    if let (Some(path), Some(y)) = (certificate, &r.certificate) {
        write_json(path, &json!({"k": k, "variant": variant.to_string(), "constraints": y.len(), "certificate": y}))?;
        resp.files.insert("certificate".into(), json!(path.display().to_string()));
    }
    Ok(resp)
}

fn hierarchy_cmd(file: &Path, kmax: usize, variant: Variant) -> CmdResult {
    let rho = load(file)?;
    require_bipartite(&rho, file)?;
    let cap = max_dim()?;
    // the first level has to fit
    extension_problem(rho.clone(), 2, variant)?;
    let h = hierarchy_with(&rho, kmax, variant, cap)?;
    let levels: Vec<Value> = h.results.iter().map(result_json).collect();
    let mut summary: Vec<String> = h.results.iter().map(|r| format!("k={}: {}", r.k, status_name(r.status))).collect();
    if let Some(k) = h.truncated_at {
        summary.push(format!("truncated at k={k} (dimension cap {cap})"));
    }
    let mut resp = Response::new(
        json!({
            "variant": variant.to_string(),
            "levels": levels,
            "truncated_at": h.truncated_at,
            "entangled": h.certifies_entanglement(),
        }),
        summary.join(", "),
    )
    .input(file);
    resp.borderline = h.results.iter().any(|r| r.status == SdpStatus::Borderline);
    Ok(resp)
}

fn chsh(file: &Path) -> CmdResult {
    let rho = load(file)?;
    let value = chsh_max_2qubit(&rho)?;
    let t = correlation_matrix(&rho)?;
    let rows: Vec<Value> = (0..3).map(|i| nums(t.row(i))).collect();
    let violates = value > 2.0;
    Ok(Response::new(
        json!({"chsh_max": num(value), "violates": violates, "correlation_matrix": rows}),
        format!("maximal CHSH value {value:.12} ({})", if violates { "violates the local bound 2" } else { "within the local bound 2" }),
    )
    .input(file))
}

fn lhv(file: &Path, k: usize, alice: &Path, bob: &Path, variant: Variant) -> CmdResult {
    let state = load(file)?;
    let load_ms = |p: &Path| load_measurements(p).map_err(|e| Failure::Validation(format!("{}: {e}", p.display())));
    let scenario = Scenario::new(load_ms(alice)?, load_ms(bob)?)?;
    if scenario.bob.len() != k {
        return Err(Failure::Validation(format!("{} holds {} Bob measurements, expected k = {k}", bob.display(), scenario.bob.len())));
    }
    let (rho, extension, ext_json) = if state.dims().len() == k + 1 {
        let rho = ab_marginal(&state, 1)?;
        (rho, Some(state), json!({"source": "file"}))
    } else {
        require_bipartite(&state, file)?;
        let r = check_problem(&extension_problem(state.clone(), k, variant)?)?;
        let j = result_json(&r);
        (state, r.extension, j)
    };
    let mut result = Map::new();
    result.insert("extension".into(), ext_json);
    let Some(extension) = extension else {
        let status = result["extension"]["status"].as_str().unwrap_or("Borderline").to_string();
        result.insert("model".into(), Value::Null);
        let mut resp = Response::new(Value::Object(result), format!("no {k}-extension ({status}); no hidden-variable model built")).input(file).input(alice).input(bob);
        resp.borderline = status == "Borderline";
        return Ok(resp);
    };
    let model = lhv_from_extension(&extension, &scenario)?;
    let quantum = joint_table(&rho, &scenario)?;
    let local = lhv_table(&model, &scenario)?;
    let diff = quantum.max_abs_diff(&local)?;
    let mut summary = format!("hidden-variable model with {} branches; max table difference {diff:.3e}", model.len());
    result.insert("lambdas".into(), json!(model.len()));
    result.insert("weights".into(), nums(model.weights()));
    result.insert("max_table_difference".into(), num(diff));
    if quantum.is_dichotomic_2x2() {
        let s = chsh_value(&local)?;
        let worst = chsh_forms(&local)?.into_iter().fold(f64::NEG_INFINITY, f64::max);
        let membership = local_2x2_membership_detail(&local)?;
        result.insert("chsh_value".into(), num(s));
        result.insert("chsh_max_form".into(), num(worst));
        result.insert("local_polytope_member".into(), json!(membership.member));
        result.insert("membership_borderline".into(), json!(membership.borderline));
        summary.push_str(&format!("; CHSH {s:.6}, local polytope member: {}", membership.member));
    }
    Ok(Response::new(Value::Object(result), summary).input(file).input(alice).input(bob))
}

fn reduce(file: &Path, keep: &[usize], output: &Path) -> CmdResult {
    let rho = load(file)?;
    let n = rho.dims().len();
    if let Some(&bad) = keep.iter().find(|&&i| i >= n) {
        return Err(Error::IndexOutOfRange { index: bad, count: n }.into());
    }
    let traced: Vec<usize> = (0..n).filter(|i| !keep.contains(i)).collect();
    let reduced = rho.partial_trace(&traced)?;
    save_state(output, &reduced, Some("reduced")).map_err(|e| Failure::Validation(format!("{}: {e}", output.display())))?;
    let mut r = Response::new(json!({"kept": keep, "dims": reduced.dims()}), format!("kept subsystems {keep:?}, dims {:?}", reduced.dims())).input(file);
    r.files.insert("state".into(), json!(output.display().to_string()));
    Ok(r)
}

fn verify(extension: &Path, state: &Path, k: usize, variant: Variant) -> CmdResult {
    let ext = load(extension)?;
    let rho = load(state)?;
    let ok = verify_extension(&ext, &rho, k, variant)?;
    Ok(Response::new(json!({"k": k, "variant": variant.to_string(), "valid": ok}), format!("extension {}", if ok { "verified" } else { "rejected" }))
        .input(extension)
        .input(state))
}

fn threshold(family: Family, k: Option<usize>, lo: f64, hi: f64, width: f64) -> CmdResult {
    if !(width > 0.0) {
        return Err(Failure::Usage(format!("--width must be positive, got {width}")));
    }
    let criterion = match k {
        Some(k) => {
            extension_problem(family.state(lo)?, k, Variant::PermutationInvariant)?;
            Criterion::Extendible { k, variant: Variant::PermutationInvariant }
        }
        None => Criterion::Ppt,
    };
    let t = bisect_threshold(family, criterion, lo, hi, width)?;
    let flagged: Vec<f64> = t.steps.iter().filter(|s| s.borderline).map(|s| s.p).collect();
    let mut resp = Response::new(
        json!({
            "criterion": match criterion { Criterion::Ppt => "ppt".to_string(), Criterion::Extendible { k, .. } => format!("extend_k{k}") },
            "threshold": num(t.threshold),
            "upper": num(t.upper),
            "width": num(width),
            "steps": t.steps.len(),
            "borderline_points": nums(&flagged),
        }),
        format!("threshold in [{:.8}, {:.8}]", t.threshold, t.upper),
    );
    resp.borderline = !flagged.is_empty();
    Ok(resp)
}

fn dispatch(cli: &Cli) -> CmdResult {
    match &cli.command {
        Command::Gen { name, output, p, eps, d, dims, seed } => gen(*name, output, *p, *eps, *d, dims, *seed),
        Command::Ppt { file, index } => ppt(file, *index),
        Command::Negativity { file, index } => negativity_cmd(file, *index),
        Command::Extend { file, k, variant, witness, certificate } => extend(file, *k as usize, (*variant).into(), witness.as_deref(), certificate.as_deref()),
        Command::Hierarchy { file, kmax, variant } => hierarchy_cmd(file, *kmax as usize, (*variant).into()),
        Command::Chsh { file } => chsh(file),
        Command::Lhv { file, k, alice, bob, variant } => lhv(file, *k as usize, alice, bob, (*variant).into()),
        Command::Reduce { file, keep, output } => reduce(file, keep, output),
        Command::Verify { extension, state, k, variant } => verify(extension, state, *k as usize, (*variant).into()),
        Command::Threshold { family, k, lo, hi, width } => {
            let family = match family {
                FamilyArg::Werner => Family::Werner,
                FamilyArg::BushRumsfeld => Family::BushRumsfeld,
            };
            threshold(family, k.map(|k| k as usize), *lo, *hi, *width)
        }
    }
}

/// Runs one invocation; `args` includes the program name.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<String>,
{
    let args: Vec<String> = args.into_iter().map(Into::into).collect();
    let start = Instant::now();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            return if code == EXIT_OK {
                Outcome { code, stdout: text, stderr: String::new() }
            } else {
                Outcome { code, stdout: String::new(), stderr: text }
            };
        }
    };
    match dispatch(&cli) {
        Ok(resp) => {
            let report = Report {
                command: args.iter().skip(1).cloned().collect(),
                input_digest: digest(&resp.inputs),
                result: resp.result,
                files: resp.files,
                wall_clock_seconds: num(start.elapsed().as_secs_f64()).as_f64().unwrap_or(0.0),
            };
            let code = if cli.strict && resp.borderline { EXIT_BORDERLINE } else { EXIT_OK };
            let mut stderr = resp.summary;
            if code == EXIT_BORDERLINE {
                stderr.push_str("\nBorderline verdict under --strict");
            }
            stderr.push('\n');
            Outcome { code, stdout: serde_json::to_string_pretty(&report).expect("reports serialize") + "\n", stderr }
        }
        Err(Failure::Usage(msg)) => Outcome { code: EXIT_USAGE, stdout: String::new(), stderr: format!("usage error: {msg}\n") },
        Err(Failure::Validation(msg)) => Outcome { code: EXIT_VALIDATION, stdout: String::new(), stderr: format!("error: {msg}\n") },
    }
}
