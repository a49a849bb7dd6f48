//! `cso`: operator command line over one state directory of append-only
//! store logs. Every subcommand is a thin wrapper over the core library;
//! results are identical to the equivalent direct calls.
//!
//! Exit codes: 0 success, 1 usage error, 2 validation or ingest failure,
//! 3 provenance tamper detected, 4 missing reference.

mod lock;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use cso_core::exchange::{decode, encode, serialize_record, RecordEnvelope, TypedRecord};
use cso_core::graph::Locus;
use cso_core::ontology::{EntityKind, OntologySchema, OperationDomain, StandardId, StoreKind};
use cso_core::provenance::{create_payload, Operation};
use cso_core::records::Warning;
use cso_core::scoring::{aggregate_service_score, cvss_base, ScoreVector, SecurityScore};
use cso_core::state::{CsoState, StateError};

use lock::DirLock;

const EXIT_OK: i32 = 0;
const EXIT_USAGE: i32 = 1;
const EXIT_VALIDATION: i32 = 2;
const EXIT_TAMPER: i32 = 3;
const EXIT_MISSING_REF: i32 = 4;

#[derive(Parser)]
#[command(name = "cso", version, about = "Cybersecurity-operations state, stores and scoring")]
struct Cli {
    /// State directory; defaults to $CSO_STATE_DIR, then ./csostate.
    #[arg(long, global = true, value_name = "DIR")]
    state_dir: Option<PathBuf>,
    /// Print canonical single-line documents instead of tables.
    #[arg(long, global = true)]
    machine: bool,
    /// Timestamp to record on written envelopes; defaults to the current
    /// UTC time.
    #[arg(long, global = true, value_name = "TS")]
    ts: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Import a file of record lines; invalid lines are reported, not fatal.
    Ingest { file: PathBuf },
    /// Maintain the resource dependency graph.
    Resource {
        #[command(subcommand)]
        cmd: ResourceCmd,
    },
    /// List records of one store, optionally filtered by key=value pairs.
    Query {
        store: String,
        /// Filters like kind=resource, id=srv-1, entity=administrator, or
        /// any body field name; all must match.
        filters: Vec<String>,
    },
    /// Route warnings for a risk.
    Warn {
        #[command(subcommand)]
        cmd: WarnCmd,
    },
    /// Manipulation history and chain integrity of data objects.
    Provenance {
        #[command(subcommand)]
        cmd: ProvenanceCmd,
    },
    /// Security scores.
    Score {
        #[command(subcommand)]
        cmd: ScoreCmd,
    },
    /// The fixed ontology.
    Taxonomy {
        #[command(subcommand)]
        cmd: TaxonomyCmd,
    },
    /// Schema as an exchange document.
    Schema {
        #[command(subcommand)]
        cmd: SchemaCmd,
    },
    /// Check every cross-store reference; dangling ones exit 4.
    VerifyRefs,
}

#[derive(Subcommand)]
enum ResourceCmd {
    /// Register a resource on a layer.
    Add {
        #[arg(long)]
        id: String,
        #[arg(long)]
        name: String,
        #[arg(long)]
        layer: String,
        #[arg(long)]
        owner: String,
        #[arg(long, value_enum, default_value_t = LocusArg::Local)]
        locus: LocusArg,
        /// provider/service token backing a cloud resource.
        #[arg(long)]
        provider: Option<String>,
    },
    /// Record that one resource depends on another.
    Dep {
        #[arg(long)]
        dependent: String,
        #[arg(long)]
        dependee: String,
    },
    /// Transitive closure from a resource.
    Closure {
        id: String,
        #[arg(long, value_enum, default_value_t = Direction::Dependents)]
        direction: Direction,
    },
    /// Layers reached by a resource's impact range.
    Layers { id: String },
}

#[derive(Clone, Copy, ValueEnum)]
enum LocusArg {
    Local,
    Cloud,
}

#[derive(Clone, Copy, ValueEnum)]
enum Direction {
    /// Everything that depends on the resource (its impact range).
    Dependents,
    /// Everything the resource is built upon.
    Dependees,
}

#[derive(Subcommand)]
enum WarnCmd {
    /// Compute, store and print the warnings a risk triggers.
    Simulate {
        /// Vulnerability or incident id.
        #[arg(long)]
        risk: String,
        /// Attach a severity computed from this base vector.
        #[arg(long)]
        severity: Option<String>,
    },
}

#[derive(Subcommand)]
enum ProvenanceCmd {
    /// Chain one manipulation event onto a data object's history.
    Append {
        #[arg(long)]
        data: String,
        #[arg(long)]
        actor: String,
        #[arg(long)]
        op: String,
        /// JSON payload; create events default to a fresh-creation payload.
        #[arg(long)]
        payload: Option<String>,
        #[arg(long, default_value = "administrator")]
        entity: String,
    },
    /// Recompute digests; the first bad position exits 3.
    Verify {
        #[arg(long)]
        data: Option<String>,
    },
    /// Print a data object's chained history.
    History {
        #[arg(long)]
        data: String,
    },
}

#[derive(Subcommand)]
enum ScoreCmd {
    /// Base score of one vector like AV:N/AC:L/Au:N/C:C/I:C/A:C.
    Base {
        #[arg(long)]
        vector: String,
    },
    /// Worst component score across everything a service is built upon.
    Aggregate {
        #[arg(long)]
        service: String,
        /// Component scores as <resource>=<vector>, repeatable.
        #[arg(long = "component", value_name = "RES=VECTOR")]
        components: Vec<String>,
        /// Ignore closure members without a component score.
        #[arg(long)]
        skip_unscored: bool,
    },
}

#[derive(Subcommand)]
enum TaxonomyCmd {
    /// Domains, entities, stores and the standards they track.
    List,
}

#[derive(Subcommand)]
enum SchemaCmd {
    /// Print the ontology as one canonical document.
    Export,
}

struct CliError {
    code: i32,
    message: String,
}

impl CliError {
    fn validation(message: impl Into<String>) -> CliError {
        CliError { code: EXIT_VALIDATION, message: message.into() }
    }
}

impl From<StateError> for CliError {
    fn from(err: StateError) -> CliError {
        CliError::validation(err.to_string())
    }
}

fn main() {
    // Die quietly when a downstream pager or head(1) closes the pipe.
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = err.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {}", err.message);
            err.code
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    let machine = cli.machine;
    let ts = cli
        .ts
        .clone()
        .unwrap_or_else(|| {
            time::OffsetDateTime::now_utc()
                .format(&time::format_description::well_known::Rfc3339)
                .expect("UTC formats as RFC 3339")
        });

    // Stateless commands first; they neither lock nor touch the directory.
    match &cli.command {
        Command::Score { cmd: ScoreCmd::Base { vector } } => return score_base(vector, machine),
        Command::Taxonomy { cmd: TaxonomyCmd::List } => return taxonomy_list(machine),
        Command::Schema { cmd: SchemaCmd::Export } => return schema_export(),
        _ => {}
    }

    let dir = state_dir(cli.state_dir.clone());
    let _lock = DirLock::acquire(&dir).map_err(CliError::validation)?;
    let mut state = CsoState::load(&dir)?;

    match cli.command {
        Command::Ingest { file } => ingest(&mut state, &file, machine),
        Command::Resource { cmd } => resource(&mut state, cmd, machine, &ts),
        Command::Query { store, filters } => query(&state, &store, &filters, machine),
        Command::Warn { cmd: WarnCmd::Simulate { risk, severity } } => {
            warn_simulate(&mut state, &risk, severity.as_deref(), machine, &ts)
        }
        Command::Provenance { cmd } => provenance(&mut state, cmd, machine, &ts),
        Command::Score { cmd: ScoreCmd::Aggregate { service, components, skip_unscored } } => {
            score_aggregate(&state, &service, &components, skip_unscored, machine)
        }
        Command::VerifyRefs => verify_refs(&state, machine),
        Command::Score { .. } | Command::Taxonomy { .. } | Command::Schema { .. } => {
            unreachable!("handled above")
        }
    }
}

fn state_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("CSO_STATE_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("./csostate"))
}

fn print_doc(value: &Value) {
    println!("{}", serde_json::to_string(value).expect("documents serialize"));
}

fn print_envelope(envelope: &RecordEnvelope) {
    println!(
        "{}",
        String::from_utf8(serialize_record(envelope)).expect("canonical bytes are utf-8")
    );
}

fn ingest(state: &mut CsoState, file: &std::path::Path, machine: bool) -> Result<i32, CliError> {
    let report = state
        .ingest_file(file)
        .map_err(|e| CliError::validation(format!("{}: {e}", file.display())))?;
    if machine {
        print_doc(&serde_json::to_value(&report).expect("report serializes"));
    } else {
        println!("ingested {} record(s), rejected {}", report.ingested, report.rejected);
        for (store, count) in &report.per_store {
            println!("  {store}: {count}");
        }
        for err in &report.errors {
            eprintln!("line {}: {}", err.line, err.message);
        }
    }
    if report.ingested == 0 && report.rejected > 0 {
        return Ok(EXIT_VALIDATION);
    }
    Ok(EXIT_OK)
}

fn resource(
    state: &mut CsoState,
    cmd: ResourceCmd,
    machine: bool,
    ts: &str,
) -> Result<i32, CliError> {
    match cmd {
        ResourceCmd::Add { id, name, layer, owner, locus, provider } => {
            let record = TypedRecord::Resource(cso_core::graph::Resource {
                id: id.into(),
                name,
                layer: layer.into(),
                owner_org: owner.into(),
                locus: match locus {
                    LocusArg::Local => Locus::Local,
                    LocusArg::Cloud => Locus::Cloud,
                },
                provider,
            });
            let envelope = encode(&record, EntityKind::Administrator, ts);
            let applied = state.apply(envelope.clone())?;
            if machine {
                print_envelope(&envelope);
            } else {
                println!("added resource {} to {}", applied.id, applied.store);
            }
            Ok(EXIT_OK)
        }
        ResourceCmd::Dep { dependent, dependee } => {
            let record = TypedRecord::Dependency(cso_core::graph::DependencyEdge {
                dependent: dependent.into(),
                dependee: dependee.into(),
            });
            let envelope = encode(&record, EntityKind::Administrator, ts);
            let applied = state.apply(envelope.clone())?;
            if machine {
                print_envelope(&envelope);
            } else {
                println!("added dependency {}", applied.id);
            }
            Ok(EXIT_OK)
        }
        ResourceCmd::Closure { id, direction } => {
            let id = cso_core::graph::ResourceId::from(id);
            let members = match direction {
                Direction::Dependents => state.graph().dependents_closure(&id),
                Direction::Dependees => state.graph().dependees_closure(&id),
            }
            .map_err(|e| CliError::validation(e.to_string()))?;
            if machine {
                print_doc(&json!({
                    "resource": id.to_string(),
                    "direction": match direction {
                        Direction::Dependents => "dependents",
                        Direction::Dependees => "dependees",
                    },
                    "members": members.iter().map(|m| m.to_string()).collect::<Vec<_>>(),
                }));
            } else {
                for member in &members {
                    println!("{member}");
                }
            }
            Ok(EXIT_OK)
        }
        ResourceCmd::Layers { id } => {
            let id = cso_core::graph::ResourceId::from(id);
            let layers = state
                .graph()
                .impact_layers(&id)
                .map_err(|e| CliError::validation(e.to_string()))?;
            if machine {
                print_doc(&json!({
                    "resource": id.to_string(),
                    "layers": layers.iter().map(|l| l.to_string()).collect::<Vec<_>>(),
                }));
            } else {
                for layer in &layers {
                    println!("{layer}");
                }
            }
            Ok(EXIT_OK)
        }
    }
}

fn query(state: &CsoState, store: &str, filters: &[String], machine: bool) -> Result<i32, CliError> {
    let store = StoreKind::parse(store)
        .ok_or_else(|| CliError::validation(format!("unknown store {store}")))?;
    let mut pairs = Vec::new();
    for filter in filters {
        let (key, want) = filter
            .split_once('=')
            .ok_or_else(|| CliError::validation(format!("filter {filter} is not key=value")))?;
        pairs.push((key.to_string(), want.to_string()));
    }
    for envelope in state.repo().iter(store) {
        let id = decode(envelope).map(|t| t.record_id()).unwrap_or_default();
        let matched = pairs.iter().all(|(key, want)| match key.as_str() {
            "id" => id == *want,
            "kind" => envelope.kind.as_str() == want,
            "entity" => envelope.entity.as_str() == want,
            "ts" => envelope.ts == *want,
            _ => envelope.body.get(key).is_some_and(|v| value_matches(v, want)),
        });
        if !matched {
            continue;
        }
        if machine {
            print_envelope(envelope);
        } else {
            println!("{}  {}  {}  {}", envelope.kind, id, envelope.entity, envelope.ts);
        }
    }
    Ok(EXIT_OK)
}

fn value_matches(value: &Value, want: &str) -> bool {
    match value {
        Value::String(s) => s == want,
        other => serde_json::to_string(other).map(|s| s == want).unwrap_or(false),
    }
}

fn warn_simulate(
    state: &mut CsoState,
    risk: &str,
    severity: Option<&str>,
    machine: bool,
    ts: &str,
) -> Result<i32, CliError> {
    let severity = severity
        .map(|v| ScoreVector::from_str(v).map(|vec| cvss_base(&vec)))
        .transpose()
        .map_err(|e| CliError::validation(e.to_string()))?;
    let warnings = state.warn(risk, severity, ts)?;
    for warning in &warnings {
        if machine {
            print_envelope(&encode(
                &TypedRecord::Warning(warning.clone()),
                EntityKind::Coordinator,
                ts,
            ));
        } else {
            print_warning(warning);
        }
    }
    Ok(EXIT_OK)
}

fn print_warning(warning: &Warning) {
    let recipients: Vec<&str> = warning.recipients.iter().map(|o| o.as_str()).collect();
    let severity = warning
        .severity
        .map(|s| format!(" severity {s}"))
        .unwrap_or_default();
    if warning.dependency_path.is_empty() {
        println!("{} -> {}{}  (direct)", warning.id, recipients.join(","), severity);
    } else {
        let path: Vec<&str> = warning.dependency_path.iter().map(|r| r.as_str()).collect();
        println!(
            "{} -> {}{}  via {}",
            warning.id,
            recipients.join(","),
            severity,
            path.join(" -> ")
        );
    }
}

fn provenance(
    state: &mut CsoState,
    cmd: ProvenanceCmd,
    machine: bool,
    ts: &str,
) -> Result<i32, CliError> {
    match cmd {
        ProvenanceCmd::Append { data, actor, op, payload, entity } => {
            let operation = Operation::parse(&op)
                .ok_or_else(|| CliError::validation(format!("unknown operation {op}")))?;
            let payload = match payload {
                Some(text) => serde_json::from_str(&text)
                    .map_err(|e| CliError::validation(format!("payload: {e}")))?,
                None if operation == Operation::Create => create_payload(false, ""),
                None => json!({}),
            };
            let entity = parse_entity(&entity)?;
            let event =
                state.append_provenance(data.into(), actor, operation, payload, entity, ts)?;
            match event {
                Some(event) => {
                    if machine {
                        print_envelope(&encode(&TypedRecord::Provenance(event), entity, ts));
                    } else {
                        println!("chained seq {} ({})", event.seq, event.digest);
                    }
                }
                None if !machine => println!("authorized; read logging is off"),
                None => {}
            }
            Ok(EXIT_OK)
        }
        ProvenanceCmd::Verify { data } => match data {
            Some(data) => {
                let data = cso_core::records::DataId::from(data);
                let outcome = state
                    .ledger()
                    .verify(&data)
                    .map_err(|e| CliError::validation(e.to_string()))?;
                report_verify(outcome.map_err(|seq| (data, seq)), machine)
            }
            None => report_verify(state.verify_provenance(), machine),
        },
        ProvenanceCmd::History { data } => {
            let data_id = cso_core::records::DataId::from(data.clone());
            let events = state
                .ledger()
                .history(&data_id)
                .map_err(|e| CliError::validation(e.to_string()))?;
            if machine {
                for envelope in state.repo().iter(StoreKind::IncidentDb) {
                    if envelope.kind == cso_core::exchange::RecordKind::Provenance
                        && envelope.body.get("data").and_then(Value::as_str) == Some(&data)
                    {
                        print_envelope(envelope);
                    }
                }
            } else {
                for event in events {
                    println!(
                        "{}  {}  by {}  {}",
                        event.seq,
                        event.operation.as_str(),
                        event.actor,
                        event.digest
                    );
                }
            }
            Ok(EXIT_OK)
        }
    }
}

fn report_verify(
    outcome: Result<(), (cso_core::records::DataId, u64)>,
    machine: bool,
) -> Result<i32, CliError> {
    match outcome {
        Ok(()) => {
            if machine {
                print_doc(&json!({"ok": true}));
            } else {
                println!("all chains verify");
            }
            Ok(EXIT_OK)
        }
        Err((data, seq)) => {
            if machine {
                print_doc(&json!({"ok": false, "data": data.to_string(), "seq": seq}));
            } else {
                println!("tampered: data {data} first bad seq {seq}");
            }
            Ok(EXIT_TAMPER)
        }
    }
}

fn parse_entity(token: &str) -> Result<EntityKind, CliError> {
    EntityKind::ALL
        .into_iter()
        .find(|e| e.as_str() == token)
        .ok_or_else(|| CliError::validation(format!("unknown entity {token}")))
}

fn score_base(vector: &str, machine: bool) -> Result<i32, CliError> {
    let vector = ScoreVector::from_str(vector).map_err(|e| CliError::validation(e.to_string()))?;
    let score = cvss_base(&vector);
    print_score(&score, machine);
    Ok(EXIT_OK)
}

fn print_score(score: &SecurityScore, machine: bool) {
    if machine {
        print_doc(&serde_json::to_value(score).expect("scores serialize"));
    } else {
        println!("{score}");
    }
}

fn score_aggregate(
    state: &CsoState,
    service: &str,
    components: &[String],
    skip_unscored: bool,
    machine: bool,
) -> Result<i32, CliError> {
    let mut scores = BTreeMap::new();
    for component in components {
        let (resource, vector) = component.split_once('=').ok_or_else(|| {
            CliError::validation(format!("component {component} is not RES=VECTOR"))
        })?;
        let vector =
            ScoreVector::from_str(vector).map_err(|e| CliError::validation(e.to_string()))?;
        scores.insert(resource.into(), cvss_base(&vector));
    }
    let score = aggregate_service_score(state.graph(), &service.into(), &scores, skip_unscored)
        .map_err(|e| CliError::validation(e.to_string()))?;
    print_score(&score, machine);
    Ok(EXIT_OK)
}

fn taxonomy_list(machine: bool) -> Result<i32, CliError> {
    let schema = OntologySchema::new();
    if machine {
        print_doc(&json!({
            "domains": OperationDomain::ALL.iter().map(|d| d.as_str()).collect::<Vec<_>>(),
            "entities": EntityKind::ALL.iter().map(|e| e.as_str()).collect::<Vec<_>>(),
            "standards": StandardId::ALL.iter().map(|s| s.as_str()).collect::<Vec<_>>(),
            "stores": serde_json::to_value(&schema.stores).expect("profiles serialize"),
        }));
        return Ok(EXIT_OK);
    }
    println!("domains:");
    for domain in OperationDomain::ALL {
        println!("  {domain}");
    }
    println!("entities:");
    for entity in EntityKind::ALL {
        println!("  {entity} ({})", entity.domain());
    }
    println!("stores:");
    for profile in &schema.stores {
        let manipulators: Vec<&str> =
            profile.manipulators.iter().map(|m| m.as_str()).collect();
        let standards: Vec<&str> = profile.standards.iter().map(|s| s.as_str()).collect();
        let group = profile
            .group
            .map(|g| format!(" [{g}]"))
            .unwrap_or_default();
        println!(
            "  {}{}  domain={}  manipulators={}  standards={}",
            profile.store,
            group,
            profile.domain,
            manipulators.join(","),
            if standards.is_empty() { "-".into() } else { standards.join(",") },
        );
    }
    Ok(EXIT_OK)
}

fn schema_export() -> Result<i32, CliError> {
    let schema = OntologySchema::new();
    print_doc(&serde_json::to_value(&schema).expect("schema serializes"));
    Ok(EXIT_OK)
}

fn verify_refs(state: &CsoState, machine: bool) -> Result<i32, CliError> {
    let missing = state.verify_refs();
    if machine {
        print_doc(&json!({
            "missing": serde_json::to_value(&missing).expect("refs serialize"),
        }));
    } else {
        for item in &missing {
            println!("{item}");
        }
        if missing.is_empty() {
            println!("all references resolve");
        }
    }
    if missing.is_empty() {
        Ok(EXIT_OK)
    } else {
        Ok(EXIT_MISSING_REF)
    }
}
