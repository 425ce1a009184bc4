mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use tas_core::scenario::{
    apply_attack, build_club_example, build_eigentrust_example, parse_props, suggested_bounds, write_props,
    AttackKind, Params, Property, ScenarioBundle,
};
use tas_core::semantics::{build_tlts, export_dot, export_json, Bounds, Configuration, Tlts};
use tas_core::system::{parse_system, validate_spec, SystemSpec};
use tas_core::trust::{SpecTrustModel, TrustModel};
use tas_core::ttl::{check_tlts, parse_formula};

use report::{digest, Failure, RunReport, TrustReport, VerdictReport};

const FORMULA_HELP: &str = "\
Formulas:
  phi := true | false | <PATTERN> | VAR REL NUMBER
       | not phi | phi and phi | phi or phi | (phi)
       | EX<PATTERN>(phi) | EX(phi) | EF(phi) | AG(phi)
       | EU(phi, phi) | AU(phi, phi)
  VAR := t[I,J] | tf[sum|min|max|count,I,J]
  REL := >= | > | <= | < | =
  PATTERN := * | I.tau | I.* | I.a | I.a*J.b   (`*` or `?` as wildcard)";

const EXIT_HELP: &str = "\
Exit codes: 0 success or property true, 1 property false, 2 usage or spec
error, 3 verdict or exploration cut short by the bounds.";

#[derive(Parser, Debug)]
#[command(name = "tas", version, about = "Explore and model check trust adaptive systems", after_help = EXIT_HELP)]
struct Cli {
    /// Report errors on stderr as JSON objects
    #[arg(long, global = true)]
    json_errors: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Copy)]
struct BoundArgs {
    /// Stop exploring after this many states
    #[arg(long, value_name = "N")]
    max_states: Option<usize>,
    /// Stop exploring below this BFS depth
    #[arg(long, value_name = "N")]
    max_depth: Option<usize>,
    /// Saturate opinion multiplicities at N
    #[arg(long, value_name = "N")]
    opinion_cap: Option<u32>,
    /// Worker threads for exploration (output does not depend on it)
    #[arg(long, value_name = "N", default_value_t = 1)]
    threads: usize,
}

impl BoundArgs {
    fn resolve(&self, fallback: Bounds) -> Result<Bounds, Failure> {
        Bounds::new(
            self.max_states.unwrap_or(fallback.max_states),
            self.max_depth.unwrap_or(fallback.max_depth),
            self.opinion_cap.unwrap_or(fallback.opinion_cap),
        )
        .map_err(|e| Failure::usage(e.to_string()))
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse a system file and report static diagnostics
    Validate {
        /// System file
        file: PathBuf,
    },
    /// Build the transition system and optionally export it
    Explore {
        /// System file
        file: PathBuf,
        #[command(flatten)]
        bounds: BoundArgs,
        /// Write Graphviz output here
        #[arg(long, value_name = "OUT")]
        dot: Option<PathBuf>,
        /// Write canonical JSON here
        #[arg(long, value_name = "OUT")]
        json: Option<PathBuf>,
    },
    /// Print the trust matrix at one state
    Trust {
        /// System file
        file: PathBuf,
        /// State index in the explored system
        #[arg(long, value_name = "IDX", conflicts_with = "initial", required_unless_present = "initial")]
        state: Option<usize>,
        /// Use the initial configuration without exploring
        #[arg(long)]
        initial: bool,
        #[command(flatten)]
        bounds: BoundArgs,
    },
    /// Check temporal trust properties
    #[command(after_help = FORMULA_HELP)]
    Check {
        /// System file
        file: PathBuf,
        /// A single formula
        #[arg(long, value_name = "FORMULA", conflicts_with = "props", required_unless_present = "props")]
        prop: Option<String>,
        /// A properties file with lines `name: formula  # expect: true`
        #[arg(long, value_name = "FILE")]
        props: Option<PathBuf>,
        #[command(flatten)]
        bounds: BoundArgs,
    },
    /// Add adversaries to a system
    #[command(after_help = "Kinds: bad-mouthing, ballot-stuffing, collusion, on-off, sybil, white-washing.\n\
        Parameters: n_attackers, target, observer, accomplice, period, nondeterministic, n_identities.")]
    Attack {
        /// System to attack
        file: PathBuf,
        /// Attack template
        #[arg(long)]
        kind: String,
        /// Template parameters as K=V,...
        #[arg(long, value_name = "K=V,...", default_value = "")]
        params: String,
        /// Explore the result and check the attack's properties
        #[arg(long)]
        check: bool,
        /// Write the system and its `.props` sidecar here
        #[arg(long, value_name = "FILE")]
        emit: Option<PathBuf>,
        #[command(flatten)]
        bounds: BoundArgs,
    },
    /// Generate a bundled example system
    Scenario {
        #[command(subcommand)]
        which: ScenarioCommand,
    },
}

#[derive(Subcommand, Debug)]
enum ScenarioCommand {
    /// Consumers, producers and club managers
    Club {
        /// Producers per club
        #[arg(long, default_value_t = 1)]
        producers: usize,
        /// Number of clubs (1 or 2)
        #[arg(long, default_value_t = 1)]
        clubs: usize,
        /// Club model parameter in (0, 1)
        #[arg(long, default_value_t = 0.5)]
        lambda: f64,
        /// Write the system and its `.props` sidecar here
        #[arg(long, value_name = "FILE")]
        emit: PathBuf,
    },
    /// Peers rating each other under EigenTrust
    Eigentrust {
        /// Number of peers (at least 2)
        #[arg(long, default_value_t = 2)]
        peers: usize,
        /// Write the system and its `.props` sidecar here
        #[arg(long, value_name = "FILE")]
        emit: PathBuf,
    },
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let json_errors = argv.iter().any(|a| a == "--json-errors");
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                stdout(&e.to_string());
                return ExitCode::SUCCESS;
            }
            if json_errors {
                Failure::usage(e.to_string().trim_end()).emit(true);
            } else {
                eprint!("{e}");
            }
            return ExitCode::from(2);
        }
    };
    let started = Instant::now();
    let mut report = RunReport::new(argv[1..].to_vec());
    match run(&cli.command, &mut report) {
        Ok(code) => {
            if !report.suppressed {
                report.duration_ms = started.elapsed().as_millis() as u64;
                stdout(&format!("{}\n", report.to_json()));
            }
            ExitCode::from(code)
        }
        Err(f) => {
            f.emit(cli.json_errors);
            ExitCode::from(f.code)
        }
    }
}

fn run(cmd: &Command, report: &mut RunReport) -> Result<u8, Failure> {
    match cmd {
        Command::Validate { file } => {
            let spec = load(file, report)?;
            let diags = validate_spec(&spec);
            report.diagnostics = Some(diags.iter().map(ToString::to_string).collect());
            if diags.is_empty() {
                Ok(0)
            } else {
                Err(Failure::spec(format!("{}: {} diagnostic(s)", file.display(), diags.len()))
                    .with_details(diags.iter().map(ToString::to_string).collect()))
            }
        }
        Command::Explore { file, bounds, dot, json } => {
            let spec = load(file, report)?;
            let (tlts, _) = explore(&spec, bounds.resolve(Bounds::default())?, bounds.threads, report)?;
            if let Some(out) = dot {
                write(out, &export_dot(&tlts))?;
            }
            if let Some(out) = json {
                write(out, &export_json(&tlts))?;
            }
            Ok(if tlts.any_truncated() { 3 } else { 0 })
        }
        Command::Trust {
            file,
            state,
            initial,
            bounds,
        } => {
            let spec = load(file, report)?;
            let model = model_of(&spec)?;
            let (idx, config) = if *initial {
                (None, Configuration::initial(&spec))
            } else {
                let idx = state.expect("clap enforces --state or --initial");
                let (tlts, _) = explore(&spec, bounds.resolve(Bounds::default())?, bounds.threads, report)?;
                if idx >= tlts.state_count() {
                    return Err(Failure::usage(format!(
                        "state {idx} does not exist; the system has {} states",
                        tlts.state_count()
                    )));
                }
                (Some(idx), tlts.state(idx).clone())
            };
            let agents: Vec<String> = spec.agents.iter().map(|a| a.name.clone()).collect();
            let matrix = model
                .trust_matrix(spec.agents.len(), &config.groups, &config.opinions)
                .into_iter()
                .map(|row| row.into_iter().map(|t| t.map(|t| t.get())).collect())
                .collect();
            report.trust = Some(TrustReport {
                state: idx,
                agents,
                matrix,
            });
            Ok(0)
        }
        Command::Check {
            file,
            prop,
            props,
            bounds,
        } => {
            let spec = load(file, report)?;
            let properties = match (prop, props) {
                (Some(text), _) => vec![Property {
                    name: "prop".into(),
                    formula: parse_formula(text).map_err(|e| Failure::usage(format!("formula: {e}")))?,
                    expected: None,
                }],
                (None, Some(path)) => {
                    let text = read(path)?;
                    parse_props(&text).map_err(|e| Failure::spec(format!("{}:{e}", path.display())))?
                }
                (None, None) => unreachable!("clap enforces --prop or --props"),
            };
            let (tlts, model) = explore(&spec, bounds.resolve(Bounds::default())?, bounds.threads, report)?;
            check_all(&tlts, &model, &properties, report)
        }
        Command::Attack {
            file,
            kind,
            params,
            check,
            emit,
            bounds,
        } => {
            let spec = load(file, report)?;
            let kind: AttackKind = kind.parse().map_err(|e: tas_core::scenario::ScenarioError| Failure::usage(e.to_string()))?;
            let params = parse_params(params)?;
            let base = ScenarioBundle::from_spec(spec, Vec::new());
            let bundle = apply_attack(&base, kind, &params).map_err(|e| Failure::usage(e.to_string()))?;
            if let Some(out) = emit {
                emit_bundle(out, &bundle)?;
            }
            if !check {
                if emit.is_none() {
                    stdout(&bundle.spec.to_string());
                    report.suppressed = true;
                }
                return Ok(0);
            }
            let (tlts, model) = explore(&bundle.spec, bounds.resolve(suggested_bounds())?, bounds.threads, report)?;
            check_all(&tlts, &model, &bundle.properties, report)
        }
        Command::Scenario { which } => {
            let (bundle, out) = match which {
                ScenarioCommand::Club {
                    producers,
                    clubs,
                    lambda,
                    emit,
                } => (build_club_example(*producers, *clubs, *lambda), emit),
                ScenarioCommand::Eigentrust { peers, emit } => (build_eigentrust_example(*peers), emit),
            };
            let bundle = bundle.map_err(|e| Failure::usage(e.to_string()))?;
            emit_bundle(out, &bundle)?;
            report.spec_digest = Some(digest(bundle.spec.to_string().as_bytes()));
            Ok(0)
        }
    }
}

/// Checks every property. With expectations present the exit code reports
/// whether they were met; otherwise whether every property holds.
fn check_all(tlts: &Tlts, model: &SpecTrustModel, props: &[Property], report: &mut RunReport) -> Result<u8, Failure> {
    let mut any_false = false;
    let mut any_bounded = false;
    for p in props {
        let r = check_tlts(tlts, &p.formula, model).map_err(|e| Failure::usage(format!("{}: {e}", p.name)))?;
        let ok = match p.expected {
            Some(e) => r.verdict.holds() == e,
            None => r.verdict.holds(),
        };
        any_false |= !ok && !r.verdict.is_bounded();
        any_bounded |= r.verdict.is_bounded();
        report.verdicts.push(VerdictReport::new(p, &r, tlts.agents()));
    }
    Ok(if any_false {
        1
    } else if any_bounded {
        3
    } else {
        0
    })
}

/// Writes to stdout; a closed pipe (e.g. `| head`) is not an error.
fn stdout(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|()| out.flush());
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn load(path: &Path, report: &mut RunReport) -> Result<SystemSpec, Failure> {
    let text = read(path)?;
    report.spec_digest = Some(digest(text.as_bytes()));
    parse_system(&text).map_err(|e| Failure::spec(format!("{}:{e}", path.display())))
}

fn model_of(spec: &SystemSpec) -> Result<SpecTrustModel, Failure> {
    SpecTrustModel::from_spec(spec).map_err(|e| Failure::spec(e.to_string()))
}

fn explore(
    spec: &SystemSpec,
    bounds: Bounds,
    threads: usize,
    report: &mut RunReport,
) -> Result<(Tlts, SpecTrustModel), Failure> {
    let model = model_of(spec)?;
    let tlts = build_tlts(spec, &model, bounds, threads.max(1)).map_err(|e| {
        let details = match &e {
            tas_core::semantics::SemanticsError::InvalidSpec(d) => d.iter().map(ToString::to_string).collect(),
            _ => Vec::new(),
        };
        Failure::spec(e.to_string()).with_details(details)
    })?;
    report.record_exploration(&tlts);
    Ok((tlts, model))
}

fn parse_params(text: &str) -> Result<Params, Failure> {
    let mut out = Params::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Failure::usage(format!("parameter `{item}` is not K=V")))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

fn emit_bundle(path: &Path, bundle: &ScenarioBundle) -> Result<(), Failure> {
    write(path, &bundle.spec.to_string())?;
    write(&path.with_extension("props"), &write_props(&bundle.properties))
}
