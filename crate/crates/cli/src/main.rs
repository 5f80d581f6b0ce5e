//! Command-line front end: execute protocol runs from JSON configs, print
//! the built-in reports, and run the acceptance selftest.
//!
//! Exit codes: 0 on success (a recovered run), 1 on usage or configuration
//! errors, 2 when a run aborts (eavesdropping detected), so pipelines can
//! tell detection apart from misuse.

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use qsr::attacks::{self, AttackScenario, LeakageReport, ScenarioOutcome};
use qsr::protocol::{self, demo, Engine, OutcomePlan, RunSpec, Transcript, Verdict};
use qsr::shares::{self, ShareConfig};
use qsr::statevec::Statevector;
use qsr::{analysis, selftest};

#[derive(Parser)]
#[command(name = "qsr", version, about = "Cluster-state quantum secret reconstruction simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a protocol run described by a JSON config file.
    Run {
        /// Path to the run configuration (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Where to write the transcript JSON.
        #[arg(long)]
        out: PathBuf,
    },
    /// Print a built-in report: example, experiment, cost or attacks.
    Report {
        /// One of: example, experiment, cost, attacks.
        kind: String,
        /// Parties, for the cost table.
        #[arg(long, default_value_t = 3)]
        n: usize,
        /// Bits per share, for the cost table.
        #[arg(long = "q-bits", default_value_t = 2)]
        q_bits: u32,
        /// Shared states, for the cost table.
        #[arg(long, default_value_t = 1)]
        m: usize,
        /// Shots, for the experiment histogram.
        #[arg(long, default_value_t = 5000)]
        shots: u32,
        /// Seed for sampled reports.
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Run config to attack instead of the built-in example.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Emit JSON instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Run the acceptance criteria and print one pass/fail line each.
    Selftest,
}

const SETUP_SALT: u64 = 0x53455455;

fn default_decoys() -> usize {
    16
}

/// One run, as configured on disk.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    n: usize,
    q: u64,
    k_a: KaSpec,
    secret: SecretSpec,
    seed: u64,
    #[serde(default)]
    shares: Option<Vec<u64>>,
    #[serde(default)]
    s: Option<u64>,
    #[serde(default = "default_decoys")]
    decoys: usize,
    #[serde(default)]
    threshold: f64,
    #[serde(default)]
    outcomes: OutcomeSpec,
    #[serde(default)]
    masks: Option<Vec<f64>>,
    #[serde(default)]
    engine: EngineSpec,
    #[serde(default)]
    attack: Option<AttackSpec>,
    #[serde(default)]
    qmss: Option<QmssSpec>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum KaSpec {
    Value(u64),
    Keyword(String),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum SecretSpec {
    Preset(String),
    Amplitudes([[f64; 2]; 2]),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum OutcomeSpec {
    Keyword(String),
    Bits(Vec<u8>),
}

impl Default for OutcomeSpec {
    fn default() -> Self {
        OutcomeSpec::Keyword("sample".into())
    }
}

#[derive(Debug, Serialize, Deserialize, Default, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
enum EngineSpec {
    #[default]
    Lazy,
    Eager,
}

#[derive(Debug, Serialize, Deserialize, Clone)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum AttackSpec {
    External,
    CombinerFake { bits: Vec<u8> },
    CollusionI,
    CollusionIi { honest: usize },
}

#[derive(Debug, Serialize, Deserialize, Clone)]
#[serde(deny_unknown_fields)]
struct QmssSpec {
    w: usize,
    randomizers: Vec<u64>,
}

fn build_secret(spec: &SecretSpec) -> Result<Statevector, String> {
    match spec {
        SecretSpec::Preset(name) if name == "paper-example" => Ok(demo::secret_state()),
        SecretSpec::Preset(name) => Err(format!("unknown secret preset {name:?}")),
        SecretSpec::Amplitudes(amps) => Statevector::qubit(
            Complex64::new(amps[0][0], amps[0][1]),
            Complex64::new(amps[1][0], amps[1][1]),
        )
        .map_err(|e| e.to_string()),
    }
}

fn build_spec(config: &RunConfig) -> Result<RunSpec, String> {
    let mut setup_rng = ChaCha8Rng::seed_from_u64(config.seed ^ SETUP_SALT);
    if config.n < 2 {
        return Err("InvalidArity: need at least two shareholders".into());
    }
    let dealer_secret = match &config.k_a {
        KaSpec::Value(v) => *v,
        KaSpec::Keyword(word) if word == "random" => setup_rng.random_range(0..config.q.max(1)),
        KaSpec::Keyword(word) => return Err(format!("unknown dealer secret spec {word:?}")),
    };
    let shares = match &config.shares {
        Some(values) => {
            if values.len() != config.n - 1 {
                return Err(format!(
                    "InvalidArity: {} shares listed for n = {}",
                    values.len(),
                    config.n
                ));
            }
            let s = config
                .s
                .unwrap_or_else(|| setup_rng.random_range(1..config.q.max(2)));
            ShareConfig::with_shares(dealer_secret, values.clone(), config.q, s)
                .map_err(|e| e.to_string())?
        }
        None => {
            let mut cfg =
                shares::split_secret(dealer_secret, config.n, config.q, setup_rng.random())
                    .map_err(|e| e.to_string())?;
            if let Some(s) = config.s {
                if s == 0 || s >= config.q {
                    return Err(format!("BadRandomizer: {s} outside 1..{}", config.q));
                }
                cfg.randomizer = s;
            }
            cfg
        }
    };
    let outcomes = match &config.outcomes {
        OutcomeSpec::Keyword(word) if word == "sample" => OutcomePlan::Sampled,
        OutcomeSpec::Keyword(word) => return Err(format!("unknown outcome policy {word:?}")),
        OutcomeSpec::Bits(bits) => {
            if bits.len() != config.n - 1 {
                return Err(format!(
                    "DimensionError: {} outcome bits for n = {}",
                    bits.len(),
                    config.n
                ));
            }
            OutcomePlan::Forced(bits.clone())
        }
    };
    let mut spec = RunSpec::new(shares, build_secret(&config.secret)?, config.seed);
    spec.decoys = config.decoys;
    spec.threshold = config.threshold;
    spec.outcomes = outcomes;
    spec.masks = config.masks.clone();
    spec.engine = match config.engine {
        EngineSpec::Lazy => Engine::Lazy,
        EngineSpec::Eager => Engine::Eager,
    };
    if let Some(AttackSpec::External) = &config.attack {
        spec.eavesdropper = Some(protocol::Eavesdropper::InterceptResend);
    }
    Ok(spec)
}

/// Transcript plus the optional attack report, in schema order.
#[derive(Serialize)]
struct TranscriptDoc<'a> {
    #[serde(flatten)]
    transcript: &'a Transcript,
    #[serde(skip_serializing_if = "Option::is_none")]
    attack_report: Option<&'a LeakageReport>,
}

fn attack_report_for(config: &RunConfig, spec: &RunSpec) -> Result<Option<LeakageReport>, String> {
    let scenario = match &config.attack {
        None | Some(AttackSpec::External) => return Ok(None),
        Some(AttackSpec::CombinerFake { bits }) => {
            AttackScenario::CombinerFakeResults(bits.clone())
        }
        Some(AttackSpec::CollusionI) => AttackScenario::CollusionI,
        Some(AttackSpec::CollusionIi { honest }) => AttackScenario::CollusionII {
            honest_index: *honest,
        },
    };
    match attacks::run_scenario(spec, &scenario, config.seed ^ SETUP_SALT)
        .map_err(|e| e.to_string())?
    {
        ScenarioOutcome::Leakage(report) => Ok(Some(report)),
        ScenarioOutcome::Channel(_) => Ok(None),
    }
}

fn cmd_run(config_path: &Path, out_path: &Path) -> Result<ExitCode, String> {
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| format!("cannot read {}: {e}", config_path.display()))?;
    let config: RunConfig =
        serde_json::from_str(&text).map_err(|e| format!("invalid config: {e}"))?;
    let spec = build_spec(&config)?;

    if let Some(qmss) = &config.qmss {
        if qmss.randomizers.len() != qmss.w {
            return Err(format!(
                "DimensionError: {} randomizers for w = {}",
                qmss.randomizers.len(),
                qmss.w
            ));
        }
        let secrets = vec![spec.secret.clone(); qmss.w];
        let transcripts = protocol::run_multi_secret(&spec, &secrets, &qmss.randomizers)
            .map_err(|e| e.to_string())?;
        let json = serde_json::to_string_pretty(&transcripts).map_err(|e| e.to_string())?;
        std::fs::write(out_path, json.as_bytes())
            .map_err(|e| format!("cannot write {}: {e}", out_path.display()))?;
        let mut all_recovered = true;
        for (i, t) in transcripts.iter().enumerate() {
            println!(
                "run {i}: fidelity {} verdict {}",
                t.fidelity.map_or("n/a".into(), |f| format!("{f:.9}")),
                t.verdict
            );
            all_recovered &= t.verdict == Verdict::Recovered;
        }
        return Ok(if all_recovered {
            ExitCode::SUCCESS
        } else {
            ExitCode::from(2)
        });
    }

    let transcript = protocol::run_protocol(&spec).map_err(|e| e.to_string())?;
    let attack_report = attack_report_for(&config, &spec)?;
    let doc = TranscriptDoc {
        transcript: &transcript,
        attack_report: attack_report.as_ref(),
    };
    let json = serde_json::to_string_pretty(&doc).map_err(|e| e.to_string())?;
    std::fs::write(out_path, json.as_bytes())
        .map_err(|e| format!("cannot write {}: {e}", out_path.display()))?;
    println!(
        "fidelity {} verdict {}",
        transcript.fidelity.map_or("n/a".into(), |f| format!("{f:.9}")),
        transcript.verdict
    );
    Ok(match transcript.verdict {
        Verdict::Recovered => ExitCode::SUCCESS,
        Verdict::Aborted(_) => ExitCode::from(2),
    })
}

fn report_example(json: bool) -> Result<(), String> {
    let rows = demo::trace().map_err(|e| e.to_string())?;
    if json {
        #[derive(Serialize)]
        struct Row<'a> {
            label: &'a str,
            amplitudes: Vec<[f64; 2]>,
        }
        let out: Vec<Row> = rows
            .iter()
            .map(|r| Row {
                label: r.label,
                amplitudes: r.state.amplitudes().iter().map(|a| [a.re, a.im]).collect(),
            })
            .collect();
        println!(
            "{}",
            serde_json::to_string_pretty(&out).map_err(|e| e.to_string())?
        );
        return Ok(());
    }
    for (i, row) in rows.iter().enumerate() {
        println!("step {}: {}", i + 1, row.label);
        let amps = row.state.amplitudes();
        for (idx, amp) in amps.iter().enumerate() {
            if amp.norm() > 1e-12 {
                println!(
                    "  |{idx:0width$b}>  {re:+.9} {im:+.9}i",
                    width = row.state.num_qubits(),
                    re = amp.re,
                    im = amp.im
                );
            }
        }
    }
    Ok(())
}

fn report_experiment(shots: u32, seed: u64, json: bool) -> Result<(), String> {
    let counts = analysis::run_experiment(shots, seed).map_err(|e| e.to_string())?;
    if json {
        #[derive(Serialize)]
        struct Out<'a> {
            shots: u32,
            seed: u64,
            histogram: &'a std::collections::BTreeMap<String, u64>,
        }
        let out = Out {
            shots,
            seed,
            histogram: &counts,
        };
        println!(
            "{}",
            serde_json::to_string_pretty(&out).map_err(|e| e.to_string())?
        );
        return Ok(());
    }
    println!("{:<6} {:>8} {:>10}", "key", "count", "frequency");
    for (key, count) in &counts {
        println!(
            "{:<6} {:>8} {:>10.4}",
            key,
            count,
            *count as f64 / shots as f64
        );
    }
    Ok(())
}

fn report_cost(n: usize, q_bits: u32, m: usize, json: bool) -> Result<(), String> {
    let model = analysis::CostModel::new(n, m, q_bits).map_err(|e| e.to_string())?;
    let rows = analysis::comparison_table(&model);
    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(&rows).map_err(|e| e.to_string())?
        );
        return Ok(());
    }
    println!(
        "{:<14} {:<14} {:<22} {:<6}",
        "scheme", "distribution", "computation", "reuse"
    );
    for row in &rows {
        println!(
            "{:<14} {:<14} {:<22} {:<6}",
            row.scheme,
            row.distribution_class,
            row.computation_class,
            if row.share_reuse { "yes" } else { "no" }
        );
    }
    let dc = analysis::distribution_cost(&model);
    let cc = analysis::computation_cost(&model);
    println!();
    println!(
        "proposed, exactly: {dc} bits/state; {} additions/state; {} multiplications per angle/state",
        cc.additions_per_state, cc.multiplications_per_angle
    );
    Ok(())
}

fn leakage_summary(name: &str, report: &LeakageReport) {
    let max_guess = report
        .guess_probabilities
        .iter()
        .cloned()
        .fold(f64::NAN, f64::max);
    println!("{name}:");
    println!("  best guess fidelity    {:.6}", report.best_guess_fidelity);
    if max_guess.is_finite() {
        println!("  max guess probability  {max_guess:.6}");
    }
    if !report.z_statistics.is_empty() {
        let stats: Vec<String> = report
            .z_statistics
            .iter()
            .map(|p| format!("{p:.4}"))
            .collect();
        println!("  Z statistics           [{}]", stats.join(", "));
    }
}

fn report_attacks(config: Option<&Path>, seed: u64, json: bool) -> Result<(), String> {
    let spec = match config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            let config: RunConfig =
                serde_json::from_str(&text).map_err(|e| format!("invalid config: {e}"))?;
            build_spec(&config)?
        }
        None => demo::run_spec(seed),
    };
    let rounds = spec.shares.party_count() - 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fake_bits: Vec<u8> = (0..rounds).map(|_| rng.random_range(0..2)).collect();
    let scenarios = [
        ("external", AttackScenario::ExternalInterceptResend),
        ("combiner-fake", AttackScenario::CombinerFakeResults(fake_bits)),
        ("collusion-i", AttackScenario::CollusionI),
        ("collusion-ii", AttackScenario::CollusionII { honest_index: 1 }),
    ];

    let mut json_out = serde_json::Map::new();
    for (name, scenario) in scenarios {
        match attacks::run_scenario(&spec, &scenario, rng.random()).map_err(|e| e.to_string())? {
            ScenarioOutcome::Channel(t) => {
                if json {
                    json_out.insert(
                        name.into(),
                        serde_json::to_value(&*t).map_err(|e| e.to_string())?,
                    );
                } else {
                    println!("{name}:");
                    println!("  verdict                {}", t.verdict);
                    if let Some(report) = t.channel_reports.last() {
                        println!(
                            "  channel error rate     {:.4} over {} decoys",
                            report.error_rate, report.decoys_checked
                        );
                    }
                }
            }
            ScenarioOutcome::Leakage(report) => {
                if json {
                    json_out.insert(
                        name.into(),
                        serde_json::to_value(&report).map_err(|e| e.to_string())?,
                    );
                } else {
                    leakage_summary(name, &report);
                }
            }
        }
    }
    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(&serde_json::Value::Object(json_out))
                .map_err(|e| e.to_string())?
        );
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_report(
    kind: &str,
    n: usize,
    q_bits: u32,
    m: usize,
    shots: u32,
    seed: u64,
    config: Option<&Path>,
    json: bool,
) -> Result<ExitCode, String> {
    match kind {
        "example" => report_example(json)?,
        "experiment" => report_experiment(shots, seed, json)?,
        "cost" => report_cost(n, q_bits, m, json)?,
        "attacks" => report_attacks(config, seed, json)?,
        other => return Err(format!("unknown report kind {other:?}")),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_selftest() -> ExitCode {
    let results = selftest::run_all();
    let mut all_passed = true;
    for result in &results {
        println!("{}", result.line());
        all_passed &= result.passed;
    }
    let total: f64 = results.iter().map(|r| r.elapsed.as_secs_f64()).sum();
    println!(
        "{}/{} criteria passed in {total:.2}s",
        results.iter().filter(|r| r.passed).count(),
        results.len()
    );
    if all_passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Run { config, out } => cmd_run(&config, &out),
        Command::Report {
            kind,
            n,
            q_bits,
            m,
            shots,
            seed,
            config,
            json,
        } => cmd_report(&kind, n, q_bits, m, shots, seed, config.as_deref(), json),
        Command::Selftest => Ok(cmd_selftest()),
    };
    match outcome {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}
