use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use qualflow::ingest::Anomaly;

#[derive(Debug, Parser)]
#[command(name = "qualflow", version, about = "Coil quality data: plausibility, outliers, allocation, exchange")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic coil and its anomaly labels.
    Gen(Gen),
    /// Compute plausibility values and outlier levels for a coil.
    Qgs(Qgs),
    /// Decide whether a quality record fits an order.
    Allocate(Allocate),
    /// Build the certificate for a decision and a customer profile.
    Certify(Certify),
    /// Build the supplier feedback report for a record and an order.
    Feedback(Feedback),
    /// Run an exchange peer that acknowledges certificates and feedback.
    Serve(Serve),
    /// Send a certificate to a peer.
    SendCert(SendCert),
    /// Send a feedback report to a peer.
    SendFeedback(SendFeedback),
    /// Write a per-sample CSV of a quality record.
    Report(Report),
}

fn parts<const N: usize>(s: &str, shape: &str) -> Result<[String; N], String> {
    let v: Vec<String> = s.split(':').map(str::to_owned).collect();
    v.try_into().map_err(|_| format!("expected {shape}, got {s:?}"))
}

fn num<T: FromStr>(s: &str, what: &str) -> Result<T, String> {
    s.parse().map_err(|_| format!("bad {what} {s:?}"))
}

/// `CH:IDX:MAG`
#[derive(Debug, Clone)]
pub struct SpikeArg(pub Anomaly);

impl FromStr for SpikeArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let [ch, idx, mag] = parts(s, "CH:IDX:MAG")?;
        Ok(Self(Anomaly::spike(&ch, num(&idx, "index")?, num(&mag, "magnitude")?)))
    }
}

/// `CH:IDX:LEN`
#[derive(Debug, Clone)]
pub struct StuckArg(pub Anomaly);

impl FromStr for StuckArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let [ch, idx, len] = parts(s, "CH:IDX:LEN")?;
        Ok(Self(Anomaly::stuck(&ch, num(&idx, "index")?, num(&len, "length")?)))
    }
}

/// `IDX:LEN:COL:COLS:MAG`
#[derive(Debug, Clone)]
pub struct BurstArg(pub Anomaly);

impl FromStr for BurstArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let [idx, len, col, cols, mag] = parts(s, "IDX:LEN:COL:COLS:MAG")?;
        Ok(Self(Anomaly::surface_burst(
            num(&idx, "index")?,
            num(&len, "length")?,
            num(&col, "column")?,
            num(&cols, "column count")?,
            num(&mag, "magnitude")?,
        )))
    }
}

#[derive(Debug, Args)]
pub struct Gen {
    /// Generator parameters as JSON; flags below override it.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub samples: Option<usize>,
    /// Surface map width.
    #[arg(long)]
    pub width: Option<usize>,
    /// Sample spacing in metres.
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long)]
    pub coil_id: Option<String>,
    /// Spike of MAG sigmas, as CH:IDX:MAG. Repeatable.
    #[arg(long, value_name = "CH:IDX:MAG")]
    pub spike: Vec<SpikeArg>,
    /// Stuck run, as CH:IDX:LEN. Repeatable.
    #[arg(long, value_name = "CH:IDX:LEN")]
    pub stuck: Vec<StuckArg>,
    /// Surface burst on p4, as IDX:LEN:COL:COLS:MAG. Repeatable.
    #[arg(long, value_name = "IDX:LEN:COL:COLS:MAG")]
    pub burst: Vec<BurstArg>,
    /// Coil CSV to write.
    #[arg(short, long)]
    pub output: PathBuf,
    /// Labels CSV to write.
    #[arg(long)]
    pub labels: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Qgs {
    #[arg(long)]
    pub coil: PathBuf,
    /// Run configuration (assessment trees, detector settings).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Allocate {
    #[arg(long)]
    pub record: PathBuf,
    #[arg(long)]
    pub order: PathBuf,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Certify {
    #[arg(long)]
    pub record: PathBuf,
    #[arg(long)]
    pub decision: PathBuf,
    #[arg(long)]
    pub profile: PathBuf,
    /// Fixed RFC 3339 timestamp (whole seconds) instead of the current time.
    #[arg(long)]
    pub generated_at: Option<String>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("cert").required(true).args(["certificate", "certificate_id"])))]
pub struct Feedback {
    #[arg(long)]
    pub record: PathBuf,
    #[arg(long)]
    pub order: PathBuf,
    /// Certificate the feedback answers.
    #[arg(long)]
    pub certificate: Option<PathBuf>,
    #[arg(long)]
    pub certificate_id: Option<String>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Serve {
    #[arg(long, default_value = "127.0.0.1:0")]
    pub listen: String,
    /// Order document whose certificates are accepted. Repeatable.
    #[arg(long)]
    pub order: Vec<PathBuf>,
    /// Run configuration whose orders are accepted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Append audit lines to this file.
    #[arg(long)]
    pub audit: Option<PathBuf>,
    /// Store received documents in this directory.
    #[arg(long)]
    pub inbox: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SendCert {
    #[arg(long)]
    pub to: String,
    #[arg(long)]
    pub cert: PathBuf,
    /// Seconds.
    #[arg(long, default_value_t = 10)]
    pub timeout: u64,
}

#[derive(Debug, Args)]
pub struct SendFeedback {
    #[arg(long)]
    pub to: String,
    #[arg(long)]
    pub report: PathBuf,
    /// Seconds.
    #[arg(long, default_value_t = 10)]
    pub timeout: u64,
}

#[derive(Debug, Args)]
pub struct Report {
    #[arg(long)]
    pub record: PathBuf,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}
