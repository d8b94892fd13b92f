//! `qualflow` command-line tool.
//!
//! Exit codes: 0 success, 1 usage error, 2 input or validation error,
//! 3 protocol error. Diagnostics go to stderr; data goes to files or stdout.

mod args;

use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::Parser;
use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use qualflow::config::RunConfig;
use qualflow::ingest::{parse_coil_csv, synth_coil, write_coil_csv, write_labels_csv, SynthParams};
use qualflow::model::Timestamp;
use qualflow::qas::{allocate, build_feedback, certify};
use qualflow::qgs::run_qgs;
use qualflow::qxs::{
    decode_certificate, decode_feedback, encode_canonical, encode_certificate, send_certificate,
    send_feedback, Ack, AuditLog, OrderBook, Server,
};
use qualflow::{AllocationDecision, CustomerProfile, OrderSpec, QualityRecord};

use args::{Cli, Command};

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Protocol(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Protocol(_) => 3,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn input(msg: impl std::fmt::Display) -> CliError {
    CliError::Input(msg.to_string())
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| input(format!("cannot read {}: {e}", path.display())))
}

fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_slice(&read(path)?).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn load_record(path: &Path) -> Result<QualityRecord> {
    let record: QualityRecord = load_json(path)?;
    record
        .validate()
        .map_err(|e| input(format!("{}: {e}", path.display())))?;
    Ok(record)
}

fn load_order(path: &Path) -> Result<OrderSpec> {
    let order: OrderSpec = load_json(path)?;
    order
        .validate()
        .map_err(|e| input(format!("{}: {e}", path.display())))?;
    Ok(order)
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => RunConfig::from_json(&read(p)?).map_err(|e| input(format!("{}: {e}", p.display()))),
    }
}

/// Writes to `path`, or to stdout with a trailing newline.
fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| input(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)
                .and_then(|_| out.write_all(b"\n"))
                .and_then(|_| out.flush())
                .map_err(|e| input(format!("stdout: {e}")))
        }
    }
}

fn emit_json<T: Serialize>(path: Option<&Path>, doc: &T) -> Result<()> {
    emit(path, &encode_canonical(doc))
}

fn gen(a: args::Gen) -> Result<()> {
    let mut params: SynthParams = match &a.params {
        Some(p) => load_json(p)?,
        None => SynthParams::default(),
    };
    if let Some(seed) = a.seed {
        params.seed = seed;
    }
    if let Some(n) = a.samples {
        params.n_samples = n;
    }
    if let Some(w) = a.width {
        params.width = w;
    }
    if let Some(step) = a.step {
        params.sample_step_m = step;
    }
    if let Some(id) = a.coil_id {
        params.coil_id = id;
    }
    params.anomalies.extend(a.spike.into_iter().map(|s| s.0));
    params.anomalies.extend(a.stuck.into_iter().map(|s| s.0));
    params.anomalies.extend(a.burst.into_iter().map(|s| s.0));
    let (coil, labels) = synth_coil(&params).map_err(input)?;
    emit(Some(&a.output), &write_coil_csv(&coil))?;
    if let Some(path) = a.labels {
        emit(Some(&path), &write_labels_csv(&labels))?;
    }
    Ok(())
}

fn qgs(a: args::Qgs) -> Result<()> {
    let coil = parse_coil_csv(&read(&a.coil)?).map_err(|e| input(format!("{}: {e}", a.coil.display())))?;
    let config = load_config(a.config.as_deref())?;
    let record = run_qgs(&coil, &config).map_err(input)?;
    emit_json(a.output.as_deref(), &record)
}

fn allocate_cmd(a: args::Allocate) -> Result<()> {
    let record = load_record(&a.record)?;
    let order = load_order(&a.order)?;
    let decision = allocate(&record, &order).map_err(input)?;
    emit_json(a.output.as_deref(), &decision)
}

fn certify_cmd(a: args::Certify) -> Result<()> {
    let record = load_record(&a.record)?;
    let decision: AllocationDecision = load_json(&a.decision)?;
    if decision.coil_id != record.coil_id {
        return Err(input(format!(
            "decision is for coil {}, record is coil {}",
            decision.coil_id, record.coil_id
        )));
    }
    if !decision.is_consistent() {
        return Err(input("decision verdict and reasons disagree"));
    }
    let profile: CustomerProfile = load_json(&a.profile)?;
    let at = match a.generated_at {
        Some(s) => s.parse::<Timestamp>().map_err(input)?,
        None => Timestamp::now(),
    };
    let cert = certify(&record, &decision, &profile, at);
    cert.validate().map_err(input)?;
    emit(a.output.as_deref(), &encode_certificate(&cert))
}

fn feedback_cmd(a: args::Feedback) -> Result<()> {
    let record = load_record(&a.record)?;
    let order = load_order(&a.order)?;
    let cert_id = match (&a.certificate, &a.certificate_id) {
        (Some(path), _) => {
            let cert = decode_certificate(&read(path)?).map_err(|e| input(format!("{}: {e}", path.display())))?;
            if cert.coil_id != record.coil_id {
                return Err(input(format!(
                    "certificate is for coil {}, record is coil {}",
                    cert.coil_id, record.coil_id
                )));
            }
            cert.certificate_id
        }
        (None, Some(id)) => id.clone(),
        (None, None) => unreachable!("clap requires one of the two"),
    };
    let report = build_feedback(&record, &order, &cert_id);
    if !report.is_well_formed() {
        return Err(input(format!("invalid certificate id {cert_id:?}")));
    }
    emit_json(a.output.as_deref(), &report)
}

fn serve(a: args::Serve) -> Result<()> {
    let mut orders: Vec<String> = Vec::new();
    if let Some(path) = &a.config {
        orders.extend(load_config(Some(path))?.orders.into_iter().map(|o| o.order_id));
    }
    for path in &a.order {
        orders.push(load_order(path)?.order_id);
    }
    let mut book = OrderBook::new(orders);
    if let Some(dir) = &a.inbox {
        fs::create_dir_all(dir).map_err(|e| input(format!("cannot create {}: {e}", dir.display())))?;
        book = book.with_inbox(dir);
    }
    let audit = match &a.audit {
        Some(p) => AuditLog::with_file(p).map_err(|e| input(format!("cannot open {}: {e}", p.display())))?,
        None => AuditLog::in_memory(),
    };
    let server = Server::bind(&a.listen, Arc::new(book), Arc::new(audit))
        .map_err(|e| CliError::Protocol(e.to_string()))?;
    // Announce the bound address so callers can use port 0.
    emit(None, server.local_addr().to_string().as_bytes())?;
    eprintln!("serving on {}", server.local_addr());
    server.run();
    Ok(())
}

fn print_ack(ack: &Ack) -> Result<()> {
    emit_json(None, ack)
}

fn send_cert(a: args::SendCert) -> Result<()> {
    let cert = decode_certificate(&read(&a.cert)?).map_err(|e| input(format!("{}: {e}", a.cert.display())))?;
    let ack = send_certificate(&a.to, &cert, Duration::from_secs(a.timeout))
        .map_err(|e| CliError::Protocol(e.to_string()))?;
    print_ack(&ack)
}

fn send_feedback_cmd(a: args::SendFeedback) -> Result<()> {
    let report = decode_feedback(&read(&a.report)?).map_err(|e| input(format!("{}: {e}", a.report.display())))?;
    let ack = send_feedback(&a.to, &report, Duration::from_secs(a.timeout))
        .map_err(|e| CliError::Protocol(e.to_string()))?;
    print_ack(&ack)
}

/// One row per sample: values and PVs per channel, combined PV, detector
/// scores and outlier level.
fn report(a: args::Report) -> Result<()> {
    let record = load_record(&a.record)?;
    let mut out = String::from("index,position_m");
    for name in record.channels.keys() {
        out.push_str(&format!(",{name},{name}_pv"));
    }
    out.push_str(",combined_pv,g,d,c,l,outlier_level\n");
    for j in 0..record.len() {
        out.push_str(&format!("{j},{}", record.positions_m[j]));
        for series in record.channels.values() {
            out.push_str(&format!(",{},{}", series.values[j], series.pv[j].get()));
        }
        let s = record.detector_scores[j];
        out.push_str(&format!(
            ",{},{},{},{},{},{}\n",
            record.combined_pv[j].get(),
            s.g,
            s.d,
            s.c,
            s.l,
            record.outlier_levels[j].get()
        ));
    }
    match &a.output {
        Some(p) => emit(Some(p), out.as_bytes()),
        None => emit(None, out.trim_end().as_bytes()),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen(a) => gen(a),
        Command::Qgs(a) => qgs(a),
        Command::Allocate(a) => allocate_cmd(a),
        Command::Certify(a) => certify_cmd(a),
        Command::Feedback(a) => feedback_cmd(a),
        Command::Serve(a) => serve(a),
        Command::SendCert(a) => send_cert(a),
        Command::SendFeedback(a) => send_feedback_cmd(a),
        Command::Report(a) => report(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
