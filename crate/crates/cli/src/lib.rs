//! Command-line front-end: argument parsing, input decoding, dispatch and
//! canonical output.

pub mod report;

use std::collections::BTreeSet;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use hnstrata::exact::{int, RatStr, Rational};
use hnstrata::hilbert::{
    beta_nm, collision_search, fixed_locus_weight_check, gamma_of_beta, ordering_label,
    rudakov_cmp, HilbertPoly, PoolBounds, SheafHnType,
};
use hnstrata::instability::{
    grassmann_stratum, stratify_weight_sets, StratumLabel, WeightContext, WeightSet,
};
use hnstrata::p1sheaf::{threshold_grid, verify_ack_hn, verify_multi_vertex, SheafP1};
use hnstrata::quiver::{
    hn_filtration_quiver, parse_matrix, verify_hn_equals_hesselink, HnOptions, OracleKind,
    QuiverRepresentation, RepresentationJson, StabilityPair, SubspaceTuple, VerifyBudget,
};

use report::{
    BetaReport, CollisionReport, CompetitorJson, GrassmannReport, HesselinkReport, OrderReport,
    PointStratum, QuiverHnReport, Render, SubspaceJson, TorusStrataReport,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid input: {0}")]
    Input(String),
    #[error("{op}: {message}")]
    Domain { op: &'static str, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Input(_) | CliError::Domain { .. } => 2,
        }
    }
}

fn domain<E: std::fmt::Display>(op: &'static str) -> impl Fn(E) -> CliError {
    move |e| CliError::Domain {
        op,
        message: e.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Parser)]
#[command(
    name = "hnstrata",
    version,
    about = "Exact Hesselink and Harder-Narasimhan stratifications"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Read the request from a JSON file.
    #[arg(long, global = true, conflicts_with = "inline")]
    pub input: Option<PathBuf>,
    /// Pass the request as inline JSON.
    #[arg(long, global = true)]
    pub inline: Option<String>,
    #[arg(long, global = true, value_enum, default_value = "json")]
    pub format: Format,
    /// Subspace enumeration budget, or the pool budget for `collisions`.
    #[arg(long, global = true)]
    pub budget: Option<u128>,
    /// Primes for the multi-prime oracle.
    #[arg(long, global = true, value_delimiter = ',')]
    pub primes: Option<Vec<u64>>,
    /// Seed for sampled competitor frames.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Hesselink strata of torus weight sets.
    TorusStrata,
    /// Stratum of a matrix in the Grassmannian example.
    Grassmann {
        /// Rows of rational strings.
        #[arg(long)]
        matrix: Option<String>,
    },
    /// HN filtration of a quiver representation.
    QuiverHn,
    /// Checks that the HN filtration yields the adapted 1-PS.
    VerifyQuiverHesselink {
        /// Competitor weights range over [-bound, bound].
        #[arg(long, default_value_t = 3)]
        bound: i64,
        /// Number of random frames besides the HN-adapted one.
        #[arg(long, default_value_t = 100)]
        conjugates: usize,
    },
    /// Rudakov comparison of two Hilbert polynomials.
    HilbertOrder {
        #[arg(long)]
        p: Option<String>,
        #[arg(long)]
        q: Option<String>,
    },
    /// Quot-scheme index of an HN type and the induced quiver HN type.
    BetaIndex,
    /// HN types with equal Kronecker HN types.
    Collisions,
    /// Compares quiver and sheaf HN types at one (n, m).
    AckVerify,
    /// Runs `ack-verify` over a grid of (n, m).
    AckGrid,
    /// Chain-quiver comparison at several points.
    MultiVertex,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TorusInput {
    dim: usize,
    metric: Option<Vec<i64>>,
    rho: Vec<i64>,
    weight_sets: Vec<Vec<Vec<i64>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GrassmannInput {
    matrix: Vec<Vec<String>>,
}

#[derive(Debug, Deserialize)]
struct QuiverInput {
    #[serde(flatten)]
    representation: RepresentationJson,
    theta: Vec<i64>,
    alpha: Option<Vec<i64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct OrderInput {
    p: HilbertPoly,
    q: HilbertPoly,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BetaInput {
    entries: Vec<HilbertPoly>,
    total: Option<HilbertPoly>,
    n: i64,
    m: i64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CollisionInput {
    n: i64,
    m: i64,
    deg_bound: usize,
    coeff_bound: i64,
    parts_bound: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AckInput {
    sheaf: SheafP1,
    n: i64,
    m: i64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridInput {
    sheaf: SheafP1,
    n_max: i64,
    m_max: i64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MultiInput {
    sheaf: SheafP1,
    ns: Vec<i64>,
}

/// Default pool budget for `collisions`.
const COLLISION_BUDGET: u128 = 1_000_000;
/// Largest grid accepted by `ack-grid`.
const GRID_LIMIT: i64 = 40;

/// Parsed output of one command, ready for rendering.
pub struct Output {
    json: serde_json::Value,
    text: String,
}

impl Output {
    fn new<R: Serialize + Render>(r: &R) -> Result<Self, CliError> {
        let json = serde_json::to_value(r).map_err(|e| CliError::Input(e.to_string()))?;
        Ok(Output {
            json,
            text: r.text(),
        })
    }

    /// Canonical JSON (sorted keys) or line-oriented text.
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.json).expect("serializable value");
                s.push('\n');
                s
            }
            Format::Text => self.text.clone(),
        }
    }
}

fn read_source(cli: &Cli) -> Result<Option<String>, CliError> {
    if let Some(path) = &cli.input {
        return std::fs::read_to_string(path)
            .map(Some)
            .map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            });
    }
    Ok(cli.inline.clone())
}

fn decode<T: DeserializeOwned>(text: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Input(e.to_string()))
}

fn request<T: DeserializeOwned>(cli: &Cli) -> Result<T, CliError> {
    let text = read_source(cli)?
        .ok_or_else(|| CliError::Input("provide --input FILE or --inline JSON".into()))?;
    decode(&text)
}

fn hn_options(cli: &Cli) -> HnOptions {
    let mut opts = HnOptions::default();
    if let Some(b) = cli.budget {
        opts.budget = b;
    }
    if let Some(p) = &cli.primes {
        opts.primes = p.clone();
    }
    opts
}

fn labels(oracles: &[OracleKind]) -> Vec<String> {
    let set: BTreeSet<&str> = oracles.iter().map(|o| o.label()).collect();
    set.into_iter().map(String::from).collect()
}

fn rat_str(q: &Rational) -> RatStr {
    RatStr(q.clone())
}

fn subspace_json(rep: &QuiverRepresentation, s: &SubspaceTuple) -> SubspaceJson {
    rep.quiver()
        .vertices()
        .iter()
        .cloned()
        .zip(
            s.iter()
                .map(|b| b.iter().map(|v| v.iter().map(rat_str).collect()).collect()),
        )
        .collect()
}

fn quiver_request(cli: &Cli) -> Result<(QuiverRepresentation, StabilityPair), CliError> {
    let input: QuiverInput = request(cli)?;
    let rep = input
        .representation
        .into_representation()
        .map_err(|e| CliError::Input(e.to_string()))?;
    let alpha = input.alpha.unwrap_or_else(|| vec![1; rep.dims().len()]);
    let sp = StabilityPair::new(input.theta, alpha, rep.dims().to_vec())
        .map_err(domain("stability_pair"))?;
    Ok((rep, sp))
}

fn torus_strata(cli: &Cli) -> Result<Output, CliError> {
    let input: TorusInput = request(cli)?;
    let metric = input.metric.unwrap_or_else(|| vec![1; input.dim]);
    let ctx = WeightContext::new(input.dim, metric, input.rho)
        .map_err(|e| CliError::Input(e.to_string()))?;
    let points: Vec<WeightSet> = input.weight_sets.into_iter().map(WeightSet::new).collect();
    let labels = stratify_weight_sets(&points, &ctx).map_err(domain("stratify_weight_sets"))?;
    let points = labels
        .into_iter()
        .map(|l| match l {
            StratumLabel::Semistable => PointStratum::Semistable {
                status: "semistable".into(),
            },
            StratumLabel::Unstable(a) => PointStratum::Unstable {
                pairing: rat_str(&a.value.pairing),
                norm_sq: rat_str(&a.value.norm_sq),
                lambda: a.lambda,
            },
        })
        .collect();
    Output::new(&TorusStrataReport { points })
}

fn grassmann(cli: &Cli, matrix: &Option<String>) -> Result<Output, CliError> {
    let input: GrassmannInput = match matrix {
        Some(m) => GrassmannInput { matrix: decode(m)? },
        None => request(cli)?,
    };
    let m = parse_matrix(&input.matrix).map_err(|e| CliError::Input(e.to_string()))?;
    let g = grassmann_stratum(&m).map_err(domain("grassmann_stratum"))?;
    Output::new(&GrassmannReport {
        rank: g.rank,
        lambda: g.lambda,
    })
}

fn quiver_hn(cli: &Cli) -> Result<Output, CliError> {
    let (rep, sp) = quiver_request(cli)?;
    let hn = hn_filtration_quiver(&rep, &sp, &hn_options(cli))
        .map_err(domain("hn_filtration_quiver"))?;
    Output::new(&QuiverHnReport {
        slopes: hn.slopes.iter().map(rat_str).collect(),
        filtration: hn
            .filtration
            .as_ref()
            .map(|f| f.iter().map(|s| subspace_json(&rep, s)).collect()),
        oracles: labels(&hn.oracles),
        primes: hn.primes_used,
        gamma: hn.gamma,
    })
}

fn verify_hesselink(cli: &Cli, bound: i64, conjugates: usize) -> Result<Output, CliError> {
    let (rep, sp) = quiver_request(cli)?;
    let budget = VerifyBudget {
        bound,
        conjugates,
        seed: cli.seed,
    };
    let r = verify_hn_equals_hesselink(&rep, &sp, &budget, &hn_options(cli))
        .map_err(domain("verify_hn_equals_hesselink"))?;
    Output::new(&HesselinkReport {
        gamma: r.gamma,
        lambda: r
            .lambda
            .weights
            .iter()
            .map(|w| w.iter().map(rat_str).collect())
            .collect(),
        lambda_primitive: r.lambda.primitive,
        pairing: rat_str(&r.value.pairing),
        norm_sq: rat_str(&r.value.norm_sq),
        semistable: r.semistable,
        limit_exists: r.limit_exists,
        frames: r.frames,
        competitors: r.competitors,
        best: r.best.map(|c| CompetitorJson {
            pairing: rat_str(&c.value.pairing),
            norm_sq: rat_str(&c.value.norm_sq),
            lambda: c.lambda,
        }),
        violations: r.violations,
        passed: r.passed,
    })
}

fn hilbert_order(cli: &Cli, p: &Option<String>, q: &Option<String>) -> Result<Output, CliError> {
    let input = match (p, q) {
        (Some(p), Some(q)) => OrderInput {
            p: decode(p)?,
            q: decode(q)?,
        },
        (None, None) => request(cli)?,
        _ => return Err(CliError::Input("--p and --q must be given together".into())),
    };
    for poly in [&input.p, &input.q] {
        poly.validate()
            .map_err(|e| CliError::Input(e.to_string()))?;
    }
    let order = rudakov_cmp(&input.p, &input.q).map_err(domain("rudakov_cmp"))?;
    Output::new(&OrderReport {
        order: ordering_label(order).into(),
        p: input.p,
        q: input.q,
    })
}

fn beta_index(cli: &Cli) -> Result<Output, CliError> {
    let input: BetaInput = request(cli)?;
    let tau = match input.total {
        Some(t) => SheafHnType::with_total(input.entries, t),
        None => SheafHnType::new(input.entries),
    }
    .map_err(|e| CliError::Input(e.to_string()))?;
    let beta = beta_nm(&tau, input.n, input.m).map_err(domain("beta_nm"))?;
    let gamma = gamma_of_beta(&beta, input.m).map_err(domain("gamma_of_beta"))?;
    let pm: Vec<Rational> = gamma.iter().map(|d| int(d[1])).collect();
    let l: Vec<Rational> = gamma.iter().map(|d| int(d[0])).collect();
    let w = fixed_locus_weight_check(&beta.weights(), &pm, &l)
        .map_err(domain("fixed_locus_weight_check"))?;
    Output::new(&BetaReport {
        tau,
        m: input.m,
        beta,
        gamma,
        fixed_locus_weight: RatStr(w),
    })
}

fn collisions(cli: &Cli) -> Result<Output, CliError> {
    let input: CollisionInput = request(cli)?;
    let bounds = PoolBounds {
        deg_bound: input.deg_bound,
        coeff_bound: input.coeff_bound,
        parts_bound: input.parts_bound,
        budget: cli.budget.unwrap_or(COLLISION_BUDGET),
    };
    let found = collision_search(input.n, input.m, &bounds).map_err(domain("collision_search"))?;
    let mut collisions: Vec<[SheafHnType; 2]> = found.into_iter().map(|(a, b)| [a, b]).collect();
    collisions.sort_by_key(|pair| serde_json::to_string(pair).expect("serializable"));
    Output::new(&CollisionReport {
        n: input.n,
        m: input.m,
        deg_bound: input.deg_bound,
        coeff_bound: input.coeff_bound,
        parts_bound: input.parts_bound,
        count: collisions.len(),
        collisions,
    })
}

fn ack_verify(cli: &Cli) -> Result<Output, CliError> {
    let input: AckInput = request(cli)?;
    let r = verify_ack_hn(&input.sheaf, input.n, input.m, &hn_options(cli))
        .map_err(domain("verify_ack_hn"))?;
    Output::new(&r)
}

fn ack_grid(cli: &Cli) -> Result<Output, CliError> {
    let input: GridInput = request(cli)?;
    if input.n_max > GRID_LIMIT || input.m_max > GRID_LIMIT {
        return Err(CliError::Input(format!("grid bounds above {GRID_LIMIT}")));
    }
    let r = threshold_grid(&input.sheaf, input.n_max, input.m_max, &hn_options(cli));
    Output::new(&r)
}

fn multi_vertex(cli: &Cli) -> Result<Output, CliError> {
    let input: MultiInput = request(cli)?;
    let r = verify_multi_vertex(&input.sheaf, &input.ns, &hn_options(cli))
        .map_err(domain("verify_multi_vertex"))?;
    Output::new(&r)
}

/// Runs one parsed command.
pub fn run(cli: &Cli) -> Result<Output, CliError> {
    match &cli.command {
        Command::TorusStrata => torus_strata(cli),
        Command::Grassmann { matrix } => grassmann(cli, matrix),
        Command::QuiverHn => quiver_hn(cli),
        Command::VerifyQuiverHesselink { bound, conjugates } => {
            verify_hesselink(cli, *bound, *conjugates)
        }
        Command::HilbertOrder { p, q } => hilbert_order(cli, p, q),
        Command::BetaIndex => beta_index(cli),
        Command::Collisions => collisions(cli),
        Command::AckVerify => ack_verify(cli),
        Command::AckGrid => ack_grid(cli),
        Command::MultiVertex => multi_vertex(cli),
    }
}
