//! `qstar` — command-line entry point for the five-qubit workbench.
//!
//! Every subcommand runs one experiment, writes a JSON report (config
//! echo, per-point results with standard errors, theory values, seed,
//! wall clock) and optionally a CSV plot-data file. Exit codes: 0 on
//! success, 2 on configuration errors, 1 on execution errors.

mod config;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use config::{load_config, output_path, resolve_backend, write_output, CliError, ExperimentConfig};
use qstar_core::backend::Backend;
use qstar_core::mitigation::RemMode;
use qstar_experiments::report::{ExperimentReport, MitigationConfig};
use qstar_experiments::{chsh, ghz, jones, maxcut, neutrino, vqe};

#[derive(Parser)]
#[command(
    name = "qstar",
    version,
    about = "Five-qubit workbench: noisy simulation, native-gate transpilation, error mitigation and experiment suites"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum RemModeArg {
    Correlated,
    Local,
}

impl From<RemModeArg> for RemMode {
    fn from(m: RemModeArg) -> RemMode {
        match m {
            RemModeArg::Correlated => RemMode::Correlated,
            RemModeArg::Local => RemMode::Local,
        }
    }
}

#[derive(Args, Default)]
struct CommonArgs {
    /// Experiment config file (JSON); command-line flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Noise profile JSON path, or "noiseless".
    #[arg(long)]
    profile: Option<String>,
    /// Master seed for all randomness.
    #[arg(long)]
    seed: Option<u64>,
    /// Shots per circuit (meaning is per-experiment).
    #[arg(long)]
    shots: Option<u64>,
    /// JSON report path (default: `$QSTAR_OUT_DIR/<experiment>.json`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV plot-data path (optional).
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Enable readout error mitigation.
    #[arg(long)]
    rem: bool,
    /// REM calibration mode.
    #[arg(long, value_enum)]
    rem_mode: Option<RemModeArg>,
    /// Calibration shots per basis state.
    #[arg(long)]
    rem_shots: Option<u64>,
    /// Randomized compilations per circuit (0 disables RC).
    #[arg(long)]
    rc: Option<usize>,
    /// Comma-separated odd ZNE fold scales, e.g. "1,3,5".
    #[arg(long)]
    zne: Option<String>,
    /// Bootstrap resamples for error bars.
    #[arg(long)]
    bootstrap: Option<usize>,
}

/// Effective run settings after merging config file and flags.
struct Effective {
    backend: Backend,
    backend_label: String,
    seed: u64,
    shots: u64,
    mitigation: MitigationConfig,
    params: serde_json::Map<String, serde_json::Value>,
}

impl CommonArgs {
    fn resolve(&self, experiment: &str, default_shots: u64) -> Result<Effective, CliError> {
        let file = match &self.config {
            Some(path) => {
                let cfg = load_config(path)?;
                if let Some(exp) = &cfg.experiment {
                    if exp != experiment {
                        return Err(CliError::Config(format!(
                            "config file is for experiment `{exp}`, not `{experiment}`"
                        )));
                    }
                }
                cfg
            }
            None => ExperimentConfig::default(),
        };
        let backend_spec = self
            .profile
            .clone()
            .or_else(|| file.backend.clone());
        let backend = resolve_backend(backend_spec.as_deref())?;
        let backend_label = backend.label();

        let mut mitigation = file.mitigation.clone().unwrap_or_default();
        if self.rem {
            mitigation.rem = true;
        }
        if let Some(mode) = self.rem_mode {
            mitigation.rem_mode = mode.into();
        }
        if let Some(shots) = self.rem_shots {
            mitigation.rem_shots_per_state = shots;
        }
        if let Some(rc) = self.rc {
            mitigation.rc = rc;
        }
        if let Some(zne) = &self.zne {
            mitigation.zne = zne
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<u64>()
                        .map_err(|_| CliError::Config(format!("bad ZNE scale `{t}`")))
                })
                .collect::<Result<Vec<_>, _>>()?;
        }
        if let Some(b) = self.bootstrap {
            mitigation.bootstrap = b;
        }
        mitigation
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;

        Ok(Effective {
            backend,
            backend_label,
            seed: self.seed.or(file.seed).unwrap_or(2024),
            shots: self.shots.or(file.shots).unwrap_or(default_shots),
            mitigation,
            params: file.params,
        })
    }
}

fn param_u64(e: &Effective, key: &str) -> Result<Option<u64>, CliError> {
    match e.params.get(key) {
        None => Ok(None),
        Some(v) => v
            .as_u64()
            .map(Some)
            .ok_or_else(|| CliError::Config(format!("param `{key}` must be an integer"))),
    }
}

fn param_f64(e: &Effective, key: &str) -> Result<Option<f64>, CliError> {
    match e.params.get(key) {
        None => Ok(None),
        Some(v) => v
            .as_f64()
            .map(Some)
            .ok_or_else(|| CliError::Config(format!("param `{key}` must be a number"))),
    }
}

#[derive(Subcommand)]
enum Command {
    /// CHSH inequality scan over the state rotation angle.
    Chsh {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of θ points in [0, 2π).
        #[arg(long, default_value_t = 32)]
        points: usize,
    },
    /// GHZ preparation, tomographic entanglement entropies, fidelity.
    Ghz {
        #[command(flatten)]
        common: CommonArgs,
        /// Shots per tomography setting.
        #[arg(long, default_value_t = 3500)]
        shots_per_setting: u64,
    },
    /// Mermin polynomial estimate from all 16 monomials.
    Mermin {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Single Maxcut instance via one-layer QAOA with a virtual node.
    Maxcut {
        #[command(flatten)]
        common: CommonArgs,
        /// Edge-list file (1-based node labels, one edge per line).
        #[arg(long)]
        graph: Option<PathBuf>,
        /// Random-instance node count (used when no graph file is given).
        #[arg(long, default_value_t = 6)]
        nodes: usize,
        #[arg(long, default_value_t = 0.5)]
        edge_probability: f64,
    },
    /// Q-score benchmark sweep over graph sizes.
    Qscore {
        #[command(flatten)]
        common: CommonArgs,
        /// Sizes as an inclusive range "lo..hi" or comma list.
        #[arg(long, default_value = "3..6")]
        sizes: String,
        #[arg(long, default_value_t = 100)]
        instances: usize,
        #[arg(long, default_value_t = 0.5)]
        edge_probability: f64,
    },
    /// Three-flavor neutrino oscillation scan over L/E.
    Neutrino {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 64)]
        points: usize,
        /// Largest L/E in km/GeV.
        #[arg(long, default_value_t = 16000.0)]
        lmax: f64,
    },
    /// Jones-polynomial trace estimation for a braid closure.
    Jones {
        #[command(flatten)]
        common: CommonArgs,
        /// Knot: "hopf", "trefoil", or `word=<letters>` (e.g. word=1,1,1).
        #[arg(long, default_value = "trefoil")]
        knot: String,
        /// Number of θ grid points over the admissible intervals.
        #[arg(long, default_value_t = 24)]
        thetas: usize,
        /// Skip the default mitigation stack (REM + RC 30 + ZNE 1,3,5).
        #[arg(long)]
        raw_only: bool,
    },
    /// VQE ground-state search for the Anderson impurity model.
    Vqe {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 0.0)]
        eps_d: f64,
        #[arg(long, default_value_t = 0.0)]
        eps1: f64,
        #[arg(long, default_value_t = 0.0)]
        mu: f64,
        #[arg(long, default_value_t = 2.0)]
        u: f64,
        #[arg(long, default_value_t = 1.0)]
        v: f64,
        #[arg(long, default_value_t = 200)]
        max_iters: usize,
        /// Use exact expectation values instead of shots.
        #[arg(long)]
        exact: bool,
    },
    /// Fit qutrit relaxation rates from a population trace.
    QutritFit {
        #[command(flatten)]
        common: CommonArgs,
        /// Trace JSON file: `{delays_us: [...], populations: [[p0,p1,p2], ...]}`.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Synthesize a trace from these inverse rates instead.
        #[arg(long, default_value_t = 44.4)]
        t10: f64,
        #[arg(long, default_value_t = 35.0)]
        t21: f64,
        #[arg(long, default_value_t = 69.2)]
        t20: f64,
        #[arg(long, default_value_t = 30)]
        delays: usize,
        /// Gaussian population noise added to the synthetic trace.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
    },
    /// Transpile a circuit file (JSON or QASM) to the native gate set.
    Transpile {
        #[command(flatten)]
        common: CommonArgs,
        /// Input circuit: .json (circuit schema) or .qasm.
        #[arg(long)]
        input: PathBuf,
        /// Device size.
        #[arg(long, default_value_t = 5)]
        qubits: usize,
        /// Star center index.
        #[arg(long, default_value_t = 2)]
        center: usize,
        /// Also write the native circuit as QASM here.
        #[arg(long)]
        qasm_out: Option<PathBuf>,
    },
}

fn emit<T: Serialize>(
    experiment: &str,
    effective: &Effective,
    started: Instant,
    results: T,
    out: Option<&PathBuf>,
    csv: Option<(&PathBuf, String)>,
) -> Result<(), CliError> {
    let report = ExperimentReport::new(
        experiment,
        effective.backend_label.clone(),
        effective.seed,
        effective.shots,
        effective.mitigation.clone(),
        started.elapsed().as_secs_f64(),
        results,
    );
    let json = report.to_json();
    let path = output_path(out.map(|p| p.as_path()), &format!("{experiment}.json"));
    write_output(&path, &json)?;
    println!("wrote {}", path.display());
    if let Some((path, contents)) = csv {
        write_output(path, &contents)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Chsh { common, points } => {
            let e = common.resolve("chsh", 10_000)?;
            let n_points = param_u64(&e, "points")?.map(|v| v as usize).unwrap_or(points);
            let started = Instant::now();
            let thetas = chsh::default_theta_grid(n_points);
            let results = chsh::chsh_scan(&thetas, e.shots, &e.mitigation, &e.backend, e.seed)?;
            let csv = common.csv.as_ref().map(|p| (p, chsh::to_csv(&results)));
            emit("chsh", &e, started, results, common.out.as_ref(), csv)
        }
        Command::Ghz {
            common,
            shots_per_setting,
        } => {
            let e = common.resolve("ghz", shots_per_setting)?;
            let started = Instant::now();
            let entropy = ghz::entropy_experiment(e.shots, &e.mitigation, &e.backend, e.seed)?;
            let preparation_fidelity = ghz::ghz_preparation_fidelity(&e.backend)?;
            #[derive(Serialize)]
            struct GhzResults {
                entropy: ghz::GhzEntropyReport,
                preparation_fidelity: f64,
            }
            emit(
                "ghz",
                &e,
                started,
                GhzResults {
                    entropy,
                    preparation_fidelity,
                },
                common.out.as_ref(),
                None,
            )
        }
        Command::Mermin { common } => {
            let e = common.resolve("mermin", 10_000)?;
            let started = Instant::now();
            let results = ghz::mermin_estimate(e.shots, &e.mitigation, &e.backend, e.seed)?;
            let csv = common.csv.as_ref().map(|p| (p, ghz::mermin_to_csv(&results)));
            emit("mermin", &e, started, results, common.out.as_ref(), csv)
        }
        Command::Maxcut {
            common,
            graph,
            nodes,
            edge_probability,
        } => {
            let e = common.resolve("maxcut", 10_000)?;
            let started = Instant::now();
            let graph = match graph {
                Some(path) => {
                    let text = std::fs::read_to_string(&path).map_err(|err| {
                        CliError::Config(format!("cannot read {}: {err}", path.display()))
                    })?;
                    maxcut::Graph::from_edge_list(&text)
                        .map_err(|err| CliError::Config(err.to_string()))?
                }
                None => maxcut::Graph::random(nodes, edge_probability, e.seed),
            };
            let problem = maxcut::reduce_virtual_node(&graph)?;
            let outcome = maxcut::optimize_qaoa(&problem, e.shots, &e.backend, e.seed)?;
            let (best_cut, best_assignment) = maxcut::brute_force_maxcut(&graph)?;
            let average_cut = maxcut::average_cut_from_counts(&graph, &outcome.counts)?;
            let most_probable = outcome
                .counts
                .iter()
                .max_by_key(|(_, &c)| c)
                .map(|(bits, _)| format!("{bits}1"))
                .unwrap_or_default();
            let most_probable_cut = maxcut::cut_value(
                &graph,
                &most_probable
                    .bytes()
                    .map(|b| (b == b'1') as u8)
                    .collect::<Vec<_>>(),
            )?;
            #[derive(Serialize)]
            struct MaxcutResults {
                graph: maxcut::Graph,
                outcome: maxcut::QaoaOutcome,
                average_cut: f64,
                most_probable_assignment: String,
                most_probable_cut: usize,
                brute_force_cut: usize,
                brute_force_assignment: Vec<u8>,
            }
            emit(
                "maxcut",
                &e,
                started,
                MaxcutResults {
                    graph,
                    outcome,
                    average_cut,
                    most_probable_assignment: most_probable,
                    most_probable_cut,
                    brute_force_cut: best_cut,
                    brute_force_assignment: best_assignment,
                },
                common.out.as_ref(),
                None,
            )
        }
        Command::Qscore {
            common,
            sizes,
            instances,
            edge_probability,
        } => {
            let e = common.resolve("qscore", 2048)?;
            let sizes = parse_sizes(&sizes)?;
            let instances = param_u64(&e, "instances")?
                .map(|v| v as usize)
                .unwrap_or(instances);
            let edge_probability = param_f64(&e, "edge_probability")?.unwrap_or(edge_probability);
            let started = Instant::now();
            let results = maxcut::qscore_run(
                &sizes,
                instances,
                e.shots,
                edge_probability,
                &e.backend,
                e.seed,
            )?;
            let csv = common
                .csv
                .as_ref()
                .map(|p| (p, maxcut::qscore_to_csv(&results)));
            emit("qscore", &e, started, results, common.out.as_ref(), csv)
        }
        Command::Neutrino {
            common,
            points,
            lmax,
        } => {
            let e = common.resolve("neutrino", 5000)?;
            let n_points = param_u64(&e, "points")?.map(|v| v as usize).unwrap_or(points);
            let lmax = param_f64(&e, "lmax")?.unwrap_or(lmax);
            let started = Instant::now();
            let grid = neutrino::default_scan_grid(n_points, lmax);
            let points = neutrino::oscillation_scan(&grid, e.shots, &e.mitigation, &e.backend, e.seed)?;
            #[derive(Serialize)]
            struct NeutrinoResults {
                /// Convention note carried with every run.
                flavor_convention: &'static str,
                points: Vec<neutrino::OscillationPoint>,
            }
            let csv = common.csv.as_ref().map(|p| (p, neutrino::to_csv(&points)));
            emit(
                "neutrino",
                &e,
                started,
                NeutrinoResults {
                    flavor_convention: "nu_mu prepared as basis index 1 (|01>); outcomes 00, 01, 10, 11 map to nu_e, nu_mu, nu_tau, nu_X",
                    points,
                },
                common.out.as_ref(),
                csv,
            )
        }
        Command::Jones {
            common,
            knot,
            thetas,
            raw_only,
        } => {
            let mut e = common.resolve("jones", 20_000)?;
            // The experiment default is the full stack (REM + 30 randomized
            // compilations + fold scales 1,3,5) unless configured otherwise.
            let untouched = common.config.is_none()
                && !common.rem
                && common.rc.is_none()
                && common.zne.is_none();
            if untouched && !raw_only {
                let bootstrap = e.mitigation.bootstrap;
                e.mitigation = jones::default_mitigation();
                e.mitigation.bootstrap = bootstrap;
                if let Some(shots) = common.rem_shots {
                    e.mitigation.rem_shots_per_state = shots;
                }
            }
            if raw_only {
                e.mitigation = MitigationConfig {
                    bootstrap: e.mitigation.bootstrap,
                    ..MitigationConfig::default()
                };
            }
            let word = parse_knot(&knot)?;
            let started = Instant::now();
            let grid = jones::default_theta_grid(thetas);
            let results = jones::estimate_knot_trace(
                &word,
                &grid,
                e.shots,
                &e.mitigation,
                &e.backend,
                e.seed,
            )?;
            #[derive(Serialize)]
            struct JonesResults {
                knot: String,
                braid_word: Vec<i8>,
                writhe: i64,
                points: Vec<jones::KnotPoint>,
            }
            let csv = common.csv.as_ref().map(|p| (p, jones::to_csv(&results)));
            emit(
                "jones",
                &e,
                started,
                JonesResults {
                    knot,
                    braid_word: word.letters.clone(),
                    writhe: word.writhe(),
                    points: results,
                },
                common.out.as_ref(),
                csv,
            )
        }
        Command::Vqe {
            common,
            eps_d,
            eps1,
            mu,
            u,
            v,
            max_iters,
            exact,
        } => {
            let e = common.resolve("vqe", 5000)?;
            let params = vqe::AimParams {
                eps_d: param_f64(&e, "eps_d")?.unwrap_or(eps_d),
                eps_1: param_f64(&e, "eps_1")?.unwrap_or(eps1),
                mu: param_f64(&e, "mu")?.unwrap_or(mu),
                u: param_f64(&e, "u")?.unwrap_or(u),
                v1: param_f64(&e, "v")?.unwrap_or(v),
            };
            let mode = if exact {
                vqe::EnergyMode::Exact
            } else {
                vqe::EnergyMode::Shots(e.shots)
            };
            let started = Instant::now();
            let results =
                vqe::vqe_optimize(&params, mode, max_iters, &e.mitigation, &e.backend, e.seed)?;
            let csv = common
                .csv
                .as_ref()
                .map(|p| (p, vqe::trace_to_csv(&results)));
            emit("vqe", &e, started, results, common.out.as_ref(), csv)
        }
        Command::QutritFit {
            common,
            trace,
            t10,
            t21,
            t20,
            delays,
            noise,
        } => {
            use qstar_core::qutrit::{fit_qutrit_rates, QutritRates, QutritTrace};
            let e = common.resolve("qutrit-fit", 1)?;
            let started = Instant::now();
            let trace_data = match trace {
                Some(path) => {
                    let text = std::fs::read_to_string(&path).map_err(|err| {
                        CliError::Config(format!("cannot read {}: {err}", path.display()))
                    })?;
                    let t: QutritTrace = serde_json::from_str(&text)
                        .map_err(|err| CliError::Config(format!("invalid trace: {err}")))?;
                    t
                }
                None => {
                    let rates = QutritRates::from_inverse_us(t10, t21, t20)
                        .map_err(|err| CliError::Config(err.to_string()))?;
                    let grid: Vec<f64> =
                        (0..delays).map(|i| 1.0 + 5.5 * i as f64).collect();
                    let mut synthetic = QutritTrace::synthetic(&rates, &grid);
                    if noise > 0.0 {
                        let mut rng = qstar_core::rng::rng_from_seed(e.seed);
                        for p in synthetic.populations.iter_mut() {
                            let mut q = [0.0f64; 3];
                            for i in 0..3 {
                                q[i] = (p[i] + noise * qstar_core::math::gaussian(&mut rng))
                                    .clamp(0.0, 1.0);
                            }
                            let total: f64 = q.iter().sum();
                            *p = [q[0] / total, q[1] / total, q[2] / total];
                        }
                    }
                    synthetic
                }
            };
            let fit = fit_qutrit_rates(&trace_data)?;
            #[derive(Serialize)]
            struct QutritResults {
                fit: qstar_core::qutrit::QutritFit,
                inverse_rates_us: (f64, f64, f64),
                trace: QutritTrace,
            }
            let inverse = fit.rates.inverse_us();
            emit(
                "qutrit-fit",
                &e,
                started,
                QutritResults {
                    fit,
                    inverse_rates_us: inverse,
                    trace: trace_data,
                },
                common.out.as_ref(),
                None,
            )
        }
        Command::Transpile {
            common,
            input,
            qubits,
            center,
            qasm_out,
        } => {
            let e = common.resolve("transpile", 1)?;
            let text = std::fs::read_to_string(&input)
                .map_err(|err| CliError::Config(format!("cannot read {}: {err}", input.display())))?;
            let circuit = if input.extension().and_then(|x| x.to_str()) == Some("qasm") {
                qstar_core::qasm::from_qasm(&text).map_err(|err| CliError::Config(err.to_string()))?
            } else {
                qstar_core::circuit::Circuit::from_json(&text)
                    .map_err(|err| CliError::Config(err.to_string()))?
            };
            if center >= qubits {
                return Err(CliError::Config(format!(
                    "center {center} out of range for {qubits} qubits"
                )));
            }
            let topology = qstar_core::transpiler::Topology::star(qubits, center);
            let started = Instant::now();
            let native = qstar_core::transpiler::transpile(&circuit, &topology)?;
            if let Some(path) = &qasm_out {
                let qasm = qstar_core::qasm::to_qasm(&native.circuit)?;
                write_output(path, &qasm)?;
                println!("wrote {}", path.display());
            }
            #[derive(Serialize)]
            struct TranspileResults {
                input_gates: usize,
                native_gates: usize,
                cz_count: usize,
                layout: Vec<usize>,
                initial_layout: Vec<usize>,
                final_rz: Vec<f64>,
                circuit_json: serde_json::Value,
            }
            let circuit_json: serde_json::Value =
                serde_json::from_str(&native.circuit.to_json()).expect("valid circuit json");
            emit(
                "transpile",
                &e,
                started,
                TranspileResults {
                    input_gates: circuit.gate_count(),
                    native_gates: native.circuit.gate_count(),
                    cz_count: native.circuit.count_of("cz"),
                    layout: native.layout.clone(),
                    initial_layout: native.initial_layout.clone(),
                    final_rz: native.final_rz.clone(),
                    circuit_json,
                },
                common.out.as_ref(),
                None,
            )
        }
    }
}

fn parse_sizes(text: &str) -> Result<Vec<usize>, CliError> {
    if let Some((lo, hi)) = text.split_once("..") {
        let lo: usize = lo
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("bad size range `{text}`")))?;
        let hi: usize = hi
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("bad size range `{text}`")))?;
        if lo > hi {
            return Err(CliError::Config(format!("empty size range `{text}`")));
        }
        Ok((lo..=hi).collect())
    } else {
        text.split(',')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| CliError::Config(format!("bad size `{t}`")))
            })
            .collect()
    }
}

fn parse_knot(text: &str) -> Result<jones::BraidWord, CliError> {
    match text {
        "hopf" => Ok(jones::BraidWord::hopf_link()),
        "trefoil" => Ok(jones::BraidWord::trefoil()),
        other => {
            let word = other
                .strip_prefix("word=")
                .ok_or_else(|| {
                    CliError::Config(format!(
                        "knot must be `hopf`, `trefoil` or `word=<letters>`, got `{other}`"
                    ))
                })?;
            jones::BraidWord::parse(word).map_err(|e| CliError::Config(e.to_string()))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ CliError::Config(_)) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
        Err(e @ CliError::Run(_)) => {
            eprintln!("{e}");
            ExitCode::from(1)
        }
    }
}
