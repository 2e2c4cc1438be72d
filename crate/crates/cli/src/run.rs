//! Pipeline dispatch: validates parameters, runs the named pipeline and
//! assembles the run record.

use std::io::Write;
use std::path::PathBuf;

use serde::Deserialize;
use serde_json::{json, Value};

use circle_core::arcs::{minor_sup_scan, ArcParams};
use circle_core::count::{compare_with_prediction, count_prime_points, CountMode};
use circle_core::local::{local_factor, local_solubility, singular_series, Solubility};
use circle_core::poly::VariableSplit;
use circle_core::rank::{
    birch_rank_estimate, linear_rank, quadratic_birch_rank, quadratic_schmidt_rank_complex,
};
use circle_core::regularize::{regularize, regularize_parametric, select_split, RankTargetFamily, TargetFn};
use circle_core::sieve::SieveTable;
use circle_core::{arch, Error, Result};

use crate::config::{load_system, make_record, ExperimentConfig, Pipeline, RunRecord};

/// Sieve tables are cached on disk keyed by N; the directory comes from
/// `CIRCLE_CACHE_DIR` (default: a `circle-cache` folder under the
/// system temp directory).
fn sieve_cached(n: u64) -> Result<SieveTable> {
    let dir = std::env::var_os("CIRCLE_CACHE_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("circle-cache"));
    let path = dir.join(format!("sieve-{n}.bin"));
    if let Ok(table) = SieveTable::read_cache(&path) {
        if table.n == n {
            return Ok(table);
        }
    }
    let table = SieveTable::new(n)?;
    if std::fs::create_dir_all(&dir).is_ok() {
        let _ = table.write_cache(&path);
    }
    Ok(table)
}

fn take_params<'a, T: Deserialize<'a>>(config: &ExperimentConfig) -> Result<T> {
    let v = Value::Object(config.parameters.clone());
    T::deserialize(v).map_err(|e| Error::BadArgument(format!("invalid parameters: {e}")))
}

fn system_of(config: &ExperimentConfig) -> Result<circle_core::poly::PolynomialSystem> {
    let source = config
        .system
        .as_ref()
        .ok_or_else(|| Error::BadArgument("this pipeline requires a system".into()))?;
    load_system(source)
}

fn write_csv(path: &str, header: &str, rows: &[String]) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "{header}")?;
    for row in rows {
        writeln!(f, "{row}")?;
    }
    Ok(())
}

fn parse_json_str(s: String) -> Value {
    serde_json::from_str(&s).unwrap_or(Value::String(s))
}

pub fn execute(config: &ExperimentConfig) -> Result<RunRecord> {
    let results = match config.pipeline {
        Pipeline::Count => run_count(config)?,
        Pipeline::Compare => run_compare(config)?,
        Pipeline::Local => run_local(config)?,
        Pipeline::Series => run_series(config)?,
        Pipeline::Jint => run_jint(config)?,
        Pipeline::ArcsScan => run_arcs_scan(config)?,
        Pipeline::Regularize => run_regularize(config)?,
        Pipeline::Rank => run_rank(config)?,
        Pipeline::Split => run_split(config)?,
    };
    Ok(make_record(config, results))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CountParams {
    n: u64,
    s: Vec<i64>,
    #[serde(default)]
    mode: Option<String>,
}

fn run_count(config: &ExperimentConfig) -> Result<Value> {
    let p: CountParams = take_params(config)?;
    let system = system_of(config)?;
    let mode = match p.mode.as_deref() {
        None | Some("weighted") => CountMode::Weighted,
        Some("prime-only") => CountMode::PrimeOnly,
        Some(other) => {
            return Err(Error::BadArgument(format!(
                "mode must be weighted or prime-only, got '{other}'"
            )))
        }
    };
    let sieve = sieve_cached(p.n)?;
    let c = count_prime_points(&system, &p.s, p.n, &sieve)?;
    Ok(json!({
        "N": c.n_bound,
        "s": c.s,
        "weighted": c.weighted,
        "prime_only": c.prime_only,
        "prime_power_weighted": c.prime_power_weighted,
        "mode_value": c.by_mode(mode),
    }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CompareParams {
    n: u64,
    s: Vec<i64>,
    q: u64,
    phi: f64,
    #[serde(default)]
    csv: Option<String>,
}

fn run_compare(config: &ExperimentConfig) -> Result<Value> {
    let p: CompareParams = take_params(config)?;
    let system = system_of(config)?;
    let sieve = sieve_cached(p.n)?;
    let c = compare_with_prediction(&system, &p.s, p.n, p.q, p.phi, &sieve)?;
    if let Some(csv) = &p.csv {
        let s_str = c
            .s
            .iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join(";");
        write_csv(
            csv,
            "N,s,count_weighted,count_prime_only,predicted,relative_error",
            &[format!(
                "{},{},{},{},{},{}",
                c.n_bound, s_str, c.count_weighted, c.count_prime_only, c.predicted, c.relative_error
            )],
        )?;
    }
    Ok(c.to_json())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LocalParams {
    p: u64,
    s: Vec<i64>,
    #[serde(default = "default_t_max")]
    t_max: u32,
    #[serde(default)]
    solubility: bool,
    #[serde(default = "default_t_max")]
    t_cap: u32,
}

fn default_t_max() -> u32 {
    4
}

fn solubility_json(v: &Solubility) -> Value {
    match v {
        Solubility::NonsingularSolution { t, witness } => json!({
            "verdict": "nonsingular-solution",
            "t": t,
            "witness": witness,
        }),
        Solubility::NoSolutionMod { modulus } => json!({
            "verdict": "no-solution-mod",
            "modulus": modulus,
        }),
        Solubility::Inconclusive => json!({ "verdict": "inconclusive" }),
    }
}

fn run_local(config: &ExperimentConfig) -> Result<Value> {
    let p: LocalParams = take_params(config)?;
    let system = system_of(config)?;
    let factor = local_factor(&system, &p.s, p.p, p.t_max)?;
    let mut out = json!({ "factor": factor.to_json() });
    if p.solubility {
        let v = local_solubility(&system, &p.s, p.p, p.t_cap)?;
        out["solubility"] = solubility_json(&v);
    }
    Ok(out)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SeriesParams {
    s: Vec<i64>,
    q: u64,
}

fn run_series(config: &ExperimentConfig) -> Result<Value> {
    let p: SeriesParams = take_params(config)?;
    let system = system_of(config)?;
    let est = singular_series(&system, &p.s, p.q)?;
    Ok(json!({
        "s": est.s,
        "Q": est.q_max,
        "value": est.value,
        "euler": est.euler,
        "per_q": est.per_q,
    }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JintParams {
    mu: Vec<f64>,
    phi: f64,
    #[serde(default)]
    csv: Option<String>,
}

fn run_jint(config: &ExperimentConfig) -> Result<Value> {
    let p: JintParams = take_params(config)?;
    let system = system_of(config)?;
    let est = arch::singular_integral(&system, &p.mu, p.phi)?;
    let mut ladder = Vec::new();
    if p.csv.is_some() {
        let mut phi = 4.0f64;
        let mut prev: Option<f64> = None;
        while phi <= p.phi {
            let step = arch::singular_integral(&system, &p.mu, phi)?;
            let diff = prev.map_or(f64::NAN, |v| (step.value - v).abs());
            ladder.push((phi, step.value, diff));
            prev = Some(step.value);
            phi *= 2.0;
        }
    }
    if let Some(csv) = &p.csv {
        let rows: Vec<String> = ladder
            .iter()
            .map(|(phi, v, d)| format!("{phi},{v},{d}"))
            .collect();
        write_csv(csv, "Phi,value,doubling_diff", &rows)?;
    }
    Ok(json!({
        "mu": est.mu,
        "Phi": est.phi,
        "value": est.value,
        "tail_bound": est.tail_bound,
        "quad_error": est.quad_error,
        "imag_residual": est.imag_residual,
        "ladder": ladder.iter().map(|(phi, v, d)| json!({
            "Phi": phi, "value": v, "doubling_diff": d,
        })).collect::<Vec<_>>(),
    }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ArcsScanParams {
    c: f64,
    d: u32,
    /// "lo:hi" range of exponents, N = 2^k
    ladder: String,
    samples: usize,
    #[serde(default)]
    csv: Option<String>,
}

fn run_arcs_scan(config: &ExperimentConfig) -> Result<Value> {
    let p: ArcsScanParams = take_params(config)?;
    let (lo, hi) = p
        .ladder
        .split_once(':')
        .and_then(|(a, b)| Some((a.parse::<u32>().ok()?, b.parse::<u32>().ok()?)))
        .ok_or_else(|| Error::BadArgument(format!("bad ladder spec '{}'", p.ladder)))?;
    if lo > hi || hi > 26 {
        return Err(Error::BadArgument("ladder exponents must satisfy lo <= hi <= 26".into()));
    }
    let mut table = Vec::new();
    for k in lo..=hi {
        let n = 1u64 << k;
        let params = ArcParams::new(n, p.c, p.d, 1)?;
        let sieve = sieve_cached(n)?;
        let scan = minor_sup_scan(&sieve, &params, p.samples)?;
        table.push(json!({
            "N": n,
            "sup_ratio": scan.sup_ratio,
            "minor_hits": scan.minor_hits,
            "samples": scan.samples_requested,
        }));
    }
    if let Some(csv) = &p.csv {
        let rows: Vec<String> = table
            .iter()
            .map(|row| {
                format!(
                    "{},{},{}",
                    row["N"],
                    row["sup_ratio"].as_f64().unwrap_or(f64::NAN),
                    row["minor_hits"]
                )
            })
            .collect();
        write_csv(csv, "N,sup_ratio,samples", &rows)?;
    }
    Ok(json!({ "ladder": table }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RegularizeParams {
    /// shared target for degree-2 forms, e.g. "const:4"
    #[serde(default)]
    target: Option<String>,
    /// per-degree targets, keys are degrees
    #[serde(default)]
    targets: Option<std::collections::BTreeMap<u32, String>>,
    /// parametric mode: y-side variable indices (0-based)
    #[serde(default)]
    y_block: Option<Vec<usize>>,
}

fn run_regularize(config: &ExperimentConfig) -> Result<Value> {
    let p: RegularizeParams = take_params(config)?;
    let system = system_of(config)?;
    let mut family = RankTargetFamily::default();
    match (&p.target, &p.targets) {
        (Some(t), None) => {
            family.f.insert(2, TargetFn::parse(t)?);
        }
        (None, Some(map)) => {
            for (deg, t) in map {
                family.f.insert(*deg, TargetFn::parse(t)?);
            }
        }
        (None, None) => {
            family.f.insert(2, TargetFn::constant(4));
        }
        (Some(_), Some(_)) => {
            return Err(Error::BadArgument(
                "give either 'target' or 'targets', not both".into(),
            ))
        }
    }
    family.validate()?;
    let reg = match &p.y_block {
        None => regularize(&system, &family)?,
        Some(y) => {
            let z: Vec<usize> = (0..system.n).filter(|i| !y.contains(i)).collect();
            let split = VariableSplit::yz(y.iter().copied(), z);
            regularize_parametric(&system, &split, &family)?
        }
    };
    Ok(parse_json_str(reg.to_json()))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RankParams {
    #[serde(default = "default_primes")]
    primes: Vec<u64>,
    #[serde(default = "default_budget")]
    budget: u64,
    #[serde(default)]
    solubility_primes: Vec<u64>,
    #[serde(default)]
    s: Option<Vec<i64>>,
    #[serde(default = "default_t_max")]
    t_cap: u32,
}

fn default_primes() -> Vec<u64> {
    vec![101, 103]
}

fn default_budget() -> u64 {
    200_000
}

fn run_rank(config: &ExperimentConfig) -> Result<Value> {
    let p: RankParams = take_params(config)?;
    let system = system_of(config)?;
    let mut out = serde_json::Map::new();
    if system.degree() == Some(1) {
        out.insert(
            "linear".to_string(),
            parse_json_str(linear_rank(&system)?.to_json()),
        );
    }
    if system.r() == 1 && system.polys[0].degree() == Some(2) {
        out.insert(
            "quadratic_birch".to_string(),
            parse_json_str(quadratic_birch_rank(&system.polys[0])?.to_json()),
        );
        out.insert(
            "schmidt_complex".to_string(),
            parse_json_str(quadratic_schmidt_rank_complex(&system.polys[0])?.to_json()),
        );
    }
    out.insert(
        "birch_estimate".to_string(),
        parse_json_str(
            birch_rank_estimate(&system, &p.primes, p.budget, config.seed)?.to_json(),
        ),
    );
    if !p.solubility_primes.is_empty() {
        let s = p
            .s
            .clone()
            .ok_or_else(|| Error::BadArgument("solubility check needs 's'".into()))?;
        let mut sol = serde_json::Map::new();
        for &prime in &p.solubility_primes {
            let v = local_solubility(&system, &s, prime, p.t_cap)?;
            sol.insert(prime.to_string(), solubility_json(&v));
        }
        out.insert("solubility".to_string(), Value::Object(sol));
    }
    Ok(Value::Object(out))
}

fn forms_of(sys: &circle_core::poly::PolynomialSystem) -> Vec<String> {
    sys.polys.iter().map(|p| p.to_string()).collect()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SplitParams {
    c1: i64,
    c2: i64,
}

fn run_split(config: &ExperimentConfig) -> Result<Value> {
    let p: SplitParams = take_params(config)?;
    let system = system_of(config)?;
    let (split, decomp, (rank_f1g, rank_f2)) = select_split(&system, p.c1, p.c2)?;
    Ok(json!({
        "y_block": split.y_block.iter().collect::<Vec<_>>(),
        "z_block": split.z_block.iter().collect::<Vec<_>>(),
        "f1": forms_of(&decomp.f1),
        "g": forms_of(&decomp.g),
        "f2": forms_of(&decomp.f2),
        "rank_f1_plus_g": parse_json_str(rank_f1g.to_json()),
        "rank_f2": parse_json_str(rank_f2.to_json()),
    }))
}
