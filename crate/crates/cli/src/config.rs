use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use qsynth::gates::{GateSet, TwoQubitKind};
use qsynth::optimizer::OptimizerKind;
use qsynth::search::SearchConfig;
use qsynth::topology::Topology;

use crate::commands::CliError;
use crate::SynthArgs;

const KNOWN_KEYS: &[&str] = &[
    "topology", "gate-set", "epsilon", "delta", "beam", "slope", "jobs", "seed", "restarts", "optimizer", "time-limit", "native",
    "trace", "output", "summary",
];

/// `key = value` lines; `#` starts a comment. Underscores in keys are
/// treated as dashes.
pub fn parse_config(text: &str) -> Result<HashMap<String, String>, CliError> {
    let mut out = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Input(format!("config line {}: expected key=value", i + 1)))?;
        let key = k.trim().replace('_', "-");
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(CliError::Input(format!("config line {}: unknown key `{key}`", i + 1)));
        }
        out.insert(key, v.trim().to_string());
    }
    Ok(out)
}

pub fn parse_topology(spec: &str) -> Result<Topology, CliError> {
    let bad = |e: String| CliError::Input(format!("topology `{spec}`: {e}"));
    if spec == "triangle" {
        return Ok(Topology::triangle());
    }
    if let Some(path) = spec.strip_prefix("file:") {
        let text = read_file(Path::new(path))?;
        return Topology::parse_edge_list(&text).map_err(|e| bad(e.to_string()));
    }
    let (kind, n) = spec
        .split_once(':')
        .ok_or_else(|| bad("expected line:N, triangle, full:N or file:PATH".into()))?;
    let n: usize = n.parse().map_err(|_| bad(format!("`{n}` is not a qubit count")))?;
    match kind {
        "line" => Topology::line(n),
        "full" => Topology::fully_connected(n),
        other => return Err(bad(format!("unknown topology kind `{other}`"))),
    }
    .map_err(|e| bad(e.to_string()))
}

pub fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

/// Synthesis settings after merging flags over the config file.
#[derive(Debug)]
pub struct Resolved {
    /// `None` means "the complete graph on the target's qubits".
    pub topology: Option<String>,
    pub gate_set: GateSet,
    pub search: SearchConfig,
    pub native: bool,
    pub trace: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub summary: Option<PathBuf>,
}

fn pick<T: FromStr>(flag: Option<T>, file: &HashMap<String, String>, key: &str) -> Result<Option<T>, CliError> {
    if flag.is_some() {
        return Ok(flag);
    }
    match file.get(key) {
        Some(v) => v
            .parse()
            .map(Some)
            .map_err(|_| CliError::Input(format!("config key `{key}`: cannot parse `{v}`"))),
        None => Ok(None),
    }
}

pub fn resolve(args: &SynthArgs) -> Result<Resolved, CliError> {
    let file = match &args.config {
        Some(p) => parse_config(&read_file(p)?)?,
        None => HashMap::new(),
    };
    let gate_name = pick(args.gate_set.clone(), &file, "gate-set")?.unwrap_or_else(|| "cnot".into());
    let kind = TwoQubitKind::from_str(&gate_name).map_err(|e| CliError::Input(e.to_string()))?;
    let gate_set = match kind {
        TwoQubitKind::Cnot => GateSet::cnot(),
        TwoQubitKind::Crz => GateSet::crz(),
    };
    let defaults = SearchConfig::default();
    let optimizer = match pick(args.optimizer.clone(), &file, "optimizer")? {
        Some(name) => OptimizerKind::from_str(&name).map_err(|e| CliError::Input(e.to_string()))?,
        None => defaults.optimizer,
    };
    let time_limit = match pick(args.time_limit, &file, "time-limit")? {
        Some(s) if s.is_finite() && s >= 0.0 => Some(Duration::from_secs_f64(s)),
        Some(s) => return Err(CliError::Input(format!("time limit `{s}` must be a non-negative number of seconds"))),
        None => None,
    };
    let search = SearchConfig {
        epsilon: pick(args.epsilon, &file, "epsilon")?.unwrap_or(defaults.epsilon),
        delta: pick(args.delta, &file, "delta")?,
        heuristic_slope: pick(args.slope, &file, "slope")?.unwrap_or(defaults.heuristic_slope),
        beam_width: pick(args.beam, &file, "beam")?.unwrap_or(defaults.beam_width),
        parallelism: pick(args.jobs, &file, "jobs")?.unwrap_or(defaults.parallelism),
        rng_seed: pick(args.seed, &file, "seed")?.unwrap_or(defaults.rng_seed),
        restarts: pick(args.restarts, &file, "restarts")?.unwrap_or(defaults.restarts),
        optimizer,
        time_limit,
        ..defaults
    };
    search.validate().map_err(|e| CliError::Input(e.to_string()))?;
    let native = args.native || pick(None::<bool>, &file, "native")?.unwrap_or(false);
    Ok(Resolved {
        topology: pick(args.topology.clone(), &file, "topology")?,
        gate_set,
        search,
        native,
        trace: pick(args.trace.clone(), &file, "trace")?,
        output: pick(args.output.clone(), &file, "output")?,
        summary: pick(args.summary.clone(), &file, "summary")?,
    })
}
