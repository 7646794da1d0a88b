//! File formats: metric-profile input, report envelopes, trace and
//! excursion CSV, and plot manifests.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use geoblock_core::asymptotics::ExcursionProfile;
use geoblock_core::flow::{clairaut, GeodesicTrace};
use geoblock_core::{MetricProfile, ProfileKind};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// A profile together with the hash of its canonical JSON form.
#[derive(Debug, Clone)]
pub struct LoadedProfile {
    pub profile: MetricProfile,
    pub hash: String,
}

pub fn parse_profile(text: &str, origin: &str) -> Result<LoadedProfile, CliError> {
    let kind: ProfileKind = serde_json::from_str(text).map_err(|e| CliError::Parse { path: origin.to_owned(), message: e.to_string() })?;
    let hash = profile_hash(&kind);
    let profile = MetricProfile::new(kind).map_err(|e| CliError::Parse { path: origin.to_owned(), message: e.to_string() })?;
    Ok(LoadedProfile { profile, hash })
}

pub fn load_profile(path: &Path) -> Result<LoadedProfile, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Read { path: path.display().to_string(), source: e })?;
    parse_profile(&text, &path.display().to_string())
}

/// SHA-256 of the profile serialized with sorted keys and no whitespace.
pub fn profile_hash(kind: &ProfileKind) -> String {
    let value = serde_json::to_value(kind).expect("profiles serialize");
    let canonical = serde_json::to_string(&value).expect("values serialize");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

/// Metadata wrapped around every JSON report.
#[derive(Debug, Serialize)]
pub struct Envelope<'a, T: Serialize> {
    pub command: &'a str,
    pub version: &'a str,
    pub profile: ProfileKind,
    pub profile_hash: &'a str,
    pub seed: u64,
    pub tolerances: serde_json::Value,
    pub report: T,
}

impl<'a, T: Serialize> Envelope<'a, T> {
    pub fn new(command: &'a str, loaded: &'a LoadedProfile, seed: u64, tolerances: impl Serialize, report: T) -> Self {
        Envelope {
            command,
            version: VERSION,
            profile: loaded.profile.kind().clone(),
            profile_hash: &loaded.hash,
            seed,
            tolerances: serde_json::to_value(tolerances).expect("options serialize"),
            report,
        }
    }
}

/// Writes `bytes` to `dir/name` through a temporary file and a rename.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
    let target = dir.join(name);
    let io = |e: std::io::Error| CliError::Write { path: target.display().to_string(), source: e };
    fs::create_dir_all(dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(&target).map_err(|e| io(e.error))?;
    Ok(target)
}

pub fn write_json(dir: &Path, name: &str, value: &impl Serialize) -> Result<PathBuf, CliError> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("reports serialize");
    bytes.push(b'\n');
    write_atomic(dir, name, &bytes)
}

pub fn csv_bytes<R: Serialize>(rows: impl IntoIterator<Item = R>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("rows serialize");
    }
    w.into_inner().expect("in-memory writer")
}

#[derive(Debug, Serialize)]
pub struct TraceRow {
    pub t: f64,
    #[serde(rename = "X")]
    pub x: f64,
    #[serde(rename = "Y")]
    pub y: f64,
    pub xi: f64,
    pub eta: f64,
    pub clairaut: f64,
}

pub fn trace_rows<'a>(profile: &'a MetricProfile, trace: &'a GeodesicTrace) -> impl Iterator<Item = TraceRow> + 'a {
    trace.samples().iter().map(move |s| TraceRow {
        t: s.t,
        x: s.state.pos.x,
        y: s.state.pos.y,
        xi: s.state.xi,
        eta: s.state.eta,
        clairaut: clairaut(profile, &s.state),
    })
}

pub fn trace_csv(profile: &MetricProfile, trace: &GeodesicTrace) -> Vec<u8> {
    csv_bytes(trace_rows(profile, trace))
}

/// Summary of a trace stored next to its CSV.
#[derive(Debug, Serialize)]
pub struct TraceMeta {
    pub csv: String,
    pub length: f64,
    /// Lift displacement `(ΔX, ΔY)` over the whole trace.
    pub winding: [f64; 2],
    pub samples: usize,
    pub clairaut_drift: f64,
}

impl TraceMeta {
    pub fn new(profile: &MetricProfile, trace: &GeodesicTrace, csv: &str) -> Self {
        let c0 = clairaut(profile, &trace.start());
        let drift = trace.samples().iter().map(|s| (clairaut(profile, &s.state) - c0).abs()).fold(0.0, f64::max);
        let (dx, dy) = trace.displacement();
        TraceMeta { csv: csv.to_owned(), length: trace.length(), winding: [dx, dy], samples: trace.samples().len(), clairaut_drift: drift }
    }
}

#[derive(Debug, Serialize)]
pub struct ExcursionRow {
    pub n: i64,
    #[serde(rename = "L_n")]
    pub length: f64,
    pub eps: f64,
    pub entry: f64,
    pub exit: f64,
    pub maxdist: f64,
}

pub fn excursion_csv(profile: &ExcursionProfile) -> Vec<u8> {
    csv_bytes(profile.records.iter().map(|r| ExcursionRow { n: r.n, length: r.length, eps: r.eps, entry: r.entry, exit: r.exit, maxdist: r.max_dist }))
}

/// Names the data file and axes of a plot; rendering is left to the reader.
#[derive(Debug, Serialize)]
pub struct PlotManifest<'a> {
    pub data: &'a str,
    pub x: &'a str,
    pub y: &'a [&'a str],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub group_by: Option<&'a str>,
    pub title: &'a str,
}
