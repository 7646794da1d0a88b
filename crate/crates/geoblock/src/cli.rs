use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use geoblock_core::asymptotics::{detect_cylinders, excursion_profile, AdmissibleCylinder, CylinderOptions, ExcursionOptions};
use geoblock_core::connect::{enumerate_joining, minimal_periodic, shoot, EnumerateOptions, HomologyClass, MinimalOptions, ShootOptions, StripOptions};
use geoblock_core::flow::{integrate, FlowConfig, PhaseState};
use geoblock_core::security::{
    escape_test, g_conditions, involution_for_pair, insecurity_certificate, verify_blocking, BlockingOptions, CertificateOptions, CertificateVerdict, GOptions,
    Verdict, DEFAULT_CLASSES,
};
use geoblock_core::{CoverPoint, TorusPoint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::format::{self, csv_bytes, trace_csv, write_atomic, write_json, Envelope, LoadedProfile, PlotManifest, TraceMeta};
use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "geoblock", version, about = "Geodesic blocking on tori of revolution", allow_negative_numbers = true)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Metric-profile file (JSON).
    #[arg(long, global = true, default_value = "profile.json")]
    pub profile: PathBuf,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Integration tolerance (rtol = atol).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Seed for randomized initial loops and blockers.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate one geodesic.
    Integrate {
        #[arg(long, value_parser = parse_pair, default_value = "0,0")]
        start: (f64, f64),
        /// Initial metric angle with the x direction, in radians.
        #[arg(long, default_value_t = 0.0)]
        angle: f64,
        #[arg(long, default_value_t = 10.0)]
        length: f64,
    },
    /// Shoot a geodesic from p to a chosen lift of q.
    Connect {
        #[arg(long, value_parser = parse_pair)]
        p: (f64, f64),
        #[arg(long, value_parser = parse_pair)]
        q: (f64, f64),
        /// Deck translation `m,n` of the target lift.
        #[arg(long, value_parser = parse_class, default_value = "0,0")]
        offset: (i64, i64),
        #[arg(long, default_value_t = 10.0)]
        lmax: f64,
    },
    /// All joining geodesics from p to q up to a length.
    Enumerate {
        #[arg(long, value_parser = parse_pair)]
        p: (f64, f64),
        #[arg(long, value_parser = parse_pair)]
        q: (f64, f64),
        #[arg(long, default_value_t = 5.0)]
        lmax: f64,
        /// Initial number of sweep directions.
        #[arg(long)]
        sweep: Option<usize>,
    },
    /// Minimal closed geodesics in a free homotopy class.
    Minimal {
        #[arg(long, value_parser = parse_class, default_value = "1,0")]
        class: (i64, i64),
        /// Number of curve-shortening seeds.
        #[arg(long)]
        sweep: Option<usize>,
    },
    /// Cylinders between minimal closed geodesics of a class.
    Cylinders {
        #[arg(long, value_parser = parse_class, default_value = "1,0")]
        class: (i64, i64),
        #[arg(long)]
        sweep: Option<usize>,
    },
    /// Check the involution blocking set for a pair on a symmetric latitude.
    Block {
        #[arg(long, value_parser = parse_pair)]
        p: (f64, f64),
        #[arg(long, value_parser = parse_pair)]
        q: (f64, f64),
        #[arg(long, default_value_t = 30.0)]
        lmax: f64,
        #[arg(long, default_value_t = 1e-4)]
        delta: f64,
        /// Symmetry latitude; defaults to the height of p.
        #[arg(long)]
        latitude: Option<f64>,
        #[arg(long)]
        sweep: Option<usize>,
    },
    /// Insecurity certificate for a pair inside an admissible cylinder.
    Insecure {
        #[command(flatten)]
        pair: CylinderPair,
        /// Random interior blockers handed to the escape test.
        #[arg(long, default_value_t = 5)]
        blockers: usize,
        #[arg(long, default_value_t = 1e-3)]
        delta: f64,
    },
    /// Diagnostics for the genericity conditions.
    Gcheck {
        #[arg(long)]
        sweep: Option<usize>,
    },
    /// Excursion profile of the joining geodesics inside a cylinder.
    Excursion {
        #[command(flatten)]
        pair: CylinderPair,
    },
}

#[derive(Debug, Args)]
pub struct CylinderPair {
    #[arg(long, value_parser = parse_pair)]
    pub p: (f64, f64),
    #[arg(long, value_parser = parse_pair)]
    pub q: (f64, f64),
    #[arg(long, default_value_t = 8)]
    pub nmax: i64,
    #[arg(long, value_delimiter = ',', default_value = "0.02,0.05,0.1")]
    pub eps: Vec<f64>,
    #[arg(long, value_parser = parse_class, default_value = "1,0")]
    pub class: (i64, i64),
    /// Curve-shortening seeds for cylinder detection.
    #[arg(long)]
    pub sweep: Option<usize>,
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected `a,b`, got `{s}`"))?;
    let f = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}"));
    Ok((f(a)?, f(b)?))
}

fn parse_class(s: &str) -> Result<(i64, i64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected `m,n`, got `{s}`"))?;
    let f = |v: &str| v.trim().parse::<i64>().map_err(|e| format!("`{v}`: {e}"));
    Ok((f(a)?, f(b)?))
}

/// Sets the global rayon pool from `GEOBLOCK_THREADS` if present.
pub fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("GEOBLOCK_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().map_err(|_| CliError::Input(format!("GEOBLOCK_THREADS must be a positive integer, got `{v}`")))?;
    if n == 0 {
        return Err(CliError::Input("GEOBLOCK_THREADS must be positive".into()));
    }
    // A pool that is already built (repeated runs in one process) is kept.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Aligned two-column table.
struct Table(Vec<(String, String)>);

impl Table {
    fn new() -> Self {
        Table(Vec::new())
    }

    fn row(&mut self, k: &str, v: impl ToString) -> &mut Self {
        self.0.push((k.to_owned(), v.to_string()));
        self
    }

    fn render(&self) -> String {
        let w = self.0.iter().map(|r| r.0.len()).max().unwrap_or(0);
        let mut s = String::new();
        for (k, v) in &self.0 {
            let _ = writeln!(s, "{k:<w$}  {v}");
        }
        s
    }
}

fn point(p: (f64, f64)) -> TorusPoint {
    TorusPoint::new(p.0, p.1)
}

fn flow(tol: Option<f64>) -> FlowConfig {
    match tol {
        Some(t) => FlowConfig { rtol: t, atol: t, ..FlowConfig::default() },
        None => FlowConfig::default(),
    }
}

fn check_tol(tol: Option<f64>) -> Result<(), CliError> {
    match tol {
        Some(t) if !(t > 0.0 && t < 1.0) => Err(CliError::Input(format!("--tol must lie in (0, 1), got {t}"))),
        _ => Ok(()),
    }
}

fn enumerate_opts(tol: Option<f64>, sweep: Option<usize>) -> EnumerateOptions {
    let mut o = EnumerateOptions::default();
    if let Some(n) = sweep {
        o.sweep = n;
        o.max_sweep = o.max_sweep.max(n);
    }
    o.shoot.flow = flow(tol).with_relative_transverse();
    o
}

fn strip_opts(tol: Option<f64>) -> StripOptions {
    StripOptions { flow: flow(tol).with_relative_transverse(), ..StripOptions::default() }
}

fn cylinder_opts(tol: Option<f64>, sweep: Option<usize>, seed: u64) -> CylinderOptions {
    let mut o = CylinderOptions::default();
    o.minimal.seed = seed;
    o.minimal.flow = flow(tol);
    if let Some(n) = sweep {
        o.minimal.seeds = n;
    }
    o
}

struct Ctx<'a> {
    loaded: &'a LoadedProfile,
    out: &'a Path,
    seed: u64,
}

impl Ctx<'_> {
    fn report(&self, name: &str, tolerances: impl Serialize, report: impl Serialize) -> Result<(), CliError> {
        write_json(self.out, &format!("{name}.json"), &Envelope::new(name, self.loaded, self.seed, tolerances, report))?;
        Ok(())
    }

    fn csv(&self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        write_atomic(self.out, name, bytes)?;
        Ok(())
    }

    fn manifest(&self, name: &str, m: &PlotManifest) -> Result<(), CliError> {
        write_json(self.out, &format!("{name}.plot.json"), m)?;
        Ok(())
    }
}

/// Runs one subcommand and returns the summary table.
pub fn run(cli: &Cli) -> Result<String, CliError> {
    init_threads()?;
    let c = &cli.common;
    check_tol(c.tol)?;
    let loaded = format::load_profile(&c.profile)?;
    let ctx = Ctx { loaded: &loaded, out: &c.out, seed: c.seed };
    let profile = &loaded.profile;
    let mut t = Table::new();
    t.row("profile", &loaded.hash[..16]);
    match &cli.command {
        Command::Integrate { start, angle, length } => {
            if length.is_nan() || *length <= 0.0 {
                return Err(CliError::Input("--length must be positive".into()));
            }
            let cfg = flow(c.tol);
            let s = PhaseState::from_angle(profile, CoverPoint::new(start.0, start.1), *angle);
            let trace = integrate(profile, s, *length, &cfg)?;
            ctx.csv("trace.csv", &trace_csv(profile, &trace))?;
            let meta = TraceMeta::new(profile, &trace, "trace.csv");
            t.row("length", meta.length).row("winding", format!("{:.6}, {:.6}", meta.winding[0], meta.winding[1])).row("clairaut drift", format!("{:.3e}", meta.clairaut_drift));
            ctx.report("integrate", cfg, meta)?;
        }
        Command::Connect { p, q, offset, lmax } => {
            let opts = ShootOptions { flow: flow(c.tol).with_relative_transverse(), ..ShootOptions::default() };
            let from = point(*p).lift();
            let target = point(*q).lift().translate(offset.0, offset.1);
            let theta0 = (target.y - from.y).atan2(profile.value(from.y) * (target.x - from.x));
            let g = shoot(profile, point(*p), target, theta0, *lmax, &opts)?;
            ctx.csv("connect.csv", &trace_csv(profile, &g.trace))?;
            #[derive(Serialize)]
            struct Report {
                offset_m: i64,
                offset_n: i64,
                angle: f64,
                hit_error: f64,
                trace: TraceMeta,
            }
            let r = Report { offset_m: g.offset.m, offset_n: g.offset.n, angle: g.angle, hit_error: g.hit_error, trace: TraceMeta::new(profile, &g.trace, "connect.csv") };
            t.row("length", r.trace.length).row("hit error", format!("{:.3e}", r.hit_error)).row("angle", r.angle);
            ctx.report("connect", opts, r)?;
        }
        Command::Enumerate { p, q, lmax, sweep } => {
            let opts = enumerate_opts(c.tol, *sweep);
            let en = enumerate_joining(profile, point(*p), point(*q), *lmax, &opts);
            #[derive(Serialize)]
            struct Row {
                offset_m: i64,
                offset_n: i64,
                length: f64,
                hit_error: f64,
                angle: f64,
                minimal: bool,
            }
            // Shortest found geodesic in its lift.
            let rows: Vec<Row> = en
                .geodesics
                .iter()
                .enumerate()
                .map(|(i, g)| Row {
                    offset_m: g.offset.m,
                    offset_n: g.offset.n,
                    length: g.length(),
                    hit_error: g.hit_error,
                    angle: g.angle,
                    minimal: !en.geodesics[..i].iter().any(|h| h.offset == g.offset),
                })
                .collect();
            ctx.csv("enumerate.csv", &csv_bytes(&rows))?;
            ctx.manifest("enumerate", &PlotManifest { data: "enumerate.csv", x: "angle", y: &["length"], group_by: Some("minimal"), title: "joining geodesics" })?;
            #[derive(Serialize)]
            struct Report {
                p: (f64, f64),
                q: (f64, f64),
                lmax: f64,
                sweep: usize,
                new_in_last_doubling: usize,
                geodesics: Vec<Row>,
            }
            t.row("geodesics", rows.len()).row("minimal", rows.iter().filter(|r| r.minimal).count()).row("sweep", en.sweep).row("new in last doubling", en.new_in_last_doubling);
            ctx.report("enumerate", opts, Report { p: *p, q: *q, lmax: *lmax, sweep: en.sweep, new_in_last_doubling: en.new_in_last_doubling, geodesics: rows })?;
        }
        Command::Minimal { class, sweep } => {
            let mut opts = MinimalOptions { seed: c.seed, flow: flow(c.tol), ..MinimalOptions::default() };
            if let Some(n) = sweep {
                opts.seeds = *n;
            }
            let h = HomologyClass::new(class.0, class.1);
            let loops = minimal_periodic(profile, h, &opts)?;
            #[derive(Serialize)]
            struct Row {
                index: usize,
                length: f64,
                key: f64,
                csv: String,
            }
            let mut rows = Vec::new();
            for (i, l) in loops.iter().enumerate() {
                let name = format!("minimal_{i}.csv");
                ctx.csv(&name, &trace_csv(profile, &l.trace))?;
                rows.push(Row { index: i, length: l.length(), key: l.key, csv: name });
            }
            ctx.csv("minimal.csv", &csv_bytes(&rows))?;
            let min = rows.iter().map(|r| r.length).fold(f64::INFINITY, f64::min);
            t.row("class", h).row("loops", rows.len()).row("min length", min);
            #[derive(Serialize)]
            struct Report {
                class: HomologyClass,
                loops: Vec<Row>,
            }
            ctx.report("minimal", opts, Report { class: h, loops: rows })?;
        }
        Command::Cylinders { class, sweep } => {
            let opts = cylinder_opts(c.tol, *sweep, c.seed);
            let h = HomologyClass::new(class.0, class.1);
            let scan = geoblock_core::asymptotics::cylinder_scan(profile, h, &opts)?;
            #[derive(Serialize)]
            struct Row {
                a_low: f64,
                a_high: f64,
            }
            let rows: Vec<Row> = scan.cylinders.iter().map(|c| Row { a_low: c.a_low, a_high: c.a_high }).collect();
            ctx.csv("cylinders.csv", &csv_bytes(&rows))?;
            t.row("class", h).row("minimal loops", scan.loops.len()).row("foliated", scan.foliated).row("cylinders", rows.len());
            for (i, r) in rows.iter().enumerate() {
                t.row(&format!("cylinder {i}"), format!("[{:.9}, {:.9}]", r.a_low, r.a_high));
            }
            #[derive(Serialize)]
            struct Report {
                class: HomologyClass,
                loops: usize,
                foliated: bool,
                cylinders: Vec<Row>,
            }
            ctx.report("cylinders", opts, Report { class: h, loops: scan.loops.len(), foliated: scan.foliated, cylinders: rows })?;
        }
        Command::Block { p, q, lmax, delta, latitude, sweep } => {
            let opts = BlockingOptions { enumerate: enumerate_opts(c.tol, *sweep), ..BlockingOptions::default() };
            let a = latitude.unwrap_or(p.1);
            let inv = involution_for_pair(profile, a, p.0, q.0, 1e-9)?;
            let cand = inv.blocking_candidates(point(*p), point(*q), *delta);
            let rep = verify_blocking(profile, point(*p), point(*q), &cand, *lmax, *delta, &opts)?;
            ctx.csv("block.csv", &csv_bytes(&rep.geodesics))?;
            ctx.manifest("block", &PlotManifest { data: "block.csv", x: "length", y: &["distance"], group_by: Some("nearest"), title: "distance to the blocking set" })?;
            let worst = rep.geodesics.iter().map(|g| g.distance).fold(0.0, f64::max);
            let verdict = match &rep.verdict {
                Verdict::BlockedAtScale => "BLOCKED_AT_SCALE".to_owned(),
                Verdict::UnblockedWitnesses(w) => format!("UNBLOCKED ({} witnesses)", w.len()),
            };
            t.row("geodesics", rep.geodesics.len()).row("candidates", rep.candidates.len()).row("worst distance", format!("{worst:.3e}")).row("sweep", rep.sweep).row("verdict", verdict);
            ctx.report("block", opts, rep)?;
        }
        Command::Insecure { pair, blockers, delta } => {
            let opts = CertificateOptions { strip: strip_opts(c.tol), ..CertificateOptions::default() };
            let (cyl, p, q) = cylinder_for(profile, pair, c)?;
            let cert = insecurity_certificate(profile, &cyl, p, q, pair.nmax, &pair.eps, &opts)?;
            ctx.csv("excursion.csv", &format::excursion_csv(&cert.excursion))?;
            ctx.manifest("excursion", &excursion_manifest())?;
            let escape = if cert.verdict == CertificateVerdict::Valid {
                let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
                let pts: Vec<TorusPoint> = (0..*blockers)
                    .map(|_| {
                        let y = cyl.a_low + (cyl.a_high - cyl.a_low) * rng.random_range(0.05..0.95);
                        TorusPoint::new(rng.random_range(0.0..1.0), y)
                    })
                    .collect();
                let w = escape_test(profile, &cert, &pts, *delta, &opts.strip.flow)?;
                Some((pts, w))
            } else {
                None
            };
            let verdict = match cert.verdict {
                CertificateVerdict::Valid => "VALID",
                CertificateVerdict::Invalid => "INVALID",
            };
            t.row("cylinder", format!("[{:.9}, {:.9}]", cert.cylinder_low, cert.cylinder_high))
                .row("one-sided", cert.one_sided)
                .row("lengths", cert.lengths_ok)
                .row("avoids boundary", cert.avoids_boundary)
                .row("no conjugate points", cert.no_conjugate_points)
                .row("excursion bounded", cert.excursion_bounded);
            for &e in &cert.eps {
                t.row(&format!("T({e})"), format!("{:.6}", cert.excursion.t_eps(e, pair.nmax)));
            }
            if let Some((_, w)) = &escape {
                t.row("escape", w.as_ref().map_or("none".to_owned(), |w| format!("n = {} at distance {:.3e}", w.n, w.distance)));
            }
            t.row("verdict", verdict);
            #[derive(Serialize)]
            struct Report {
                certificate: geoblock_core::security::InsecurityCertificate,
                blockers: Vec<TorusPoint>,
                delta: f64,
                escape: Option<geoblock_core::security::EscapeWitness>,
            }
            let (pts, w) = escape.unwrap_or_default();
            ctx.report("insecure", opts, Report { certificate: cert, blockers: pts, delta: *delta, escape: w })?;
        }
        Command::Gcheck { sweep } => {
            let opts = GOptions { cylinders: cylinder_opts(c.tol, *sweep, c.seed), ..GOptions::default() };
            let rep = g_conditions(profile, &DEFAULT_CLASSES, &opts)?;
            ctx.csv("gcheck.csv", &csv_bytes(rep.classes.iter().map(GRow::from)))?;
            let pass = |b: bool| if b { "pass" } else { "fail" };
            t.row("G1", pass(rep.g1)).row("G2", rep.g2.map_or("fail".to_owned(), |(a, b)| format!("pass {a} {b}"))).row("G3", pass(rep.g3));
            for d in &rep.classes {
                t.row(&format!("class {}", d.class), format!("clusters {} foliated {} cylinders {}", d.clusters, d.foliated, d.cylinders));
            }
            ctx.report("gcheck", opts, rep)?;
        }
        Command::Excursion { pair } => {
            let opts = ExcursionOptions { strip: strip_opts(c.tol), ..ExcursionOptions::default() };
            let (cyl, p, q) = cylinder_for(profile, pair, c)?;
            let ns: Vec<i64> = (1..=pair.nmax).collect();
            let ex = excursion_profile(profile, &cyl, p, q, &ns, &pair.eps, &opts)?;
            ctx.csv("excursion.csv", &format::excursion_csv(&ex))?;
            ctx.manifest("excursion", &excursion_manifest())?;
            t.row("one-sided", ex.one_sided).row("records", ex.records.len());
            for &e in &pair.eps {
                t.row(&format!("T({e})"), format!("{:.6}", ex.t_eps(e, pair.nmax)));
            }
            ctx.report("excursion", opts, ex)?;
        }
    }
    Ok(t.render())
}

#[derive(Serialize)]
struct GRow {
    m: i64,
    n: i64,
    clusters: usize,
    min_length: f64,
    foliated: bool,
    cylinders: usize,
    eigen_gap: Option<f64>,
}

impl From<&geoblock_core::security::ClassDiagnostic> for GRow {
    fn from(d: &geoblock_core::security::ClassDiagnostic) -> Self {
        GRow { m: d.class.m, n: d.class.n, clusters: d.clusters, min_length: d.min_length, foliated: d.foliated, cylinders: d.cylinders, eigen_gap: d.eigen_gap }
    }
}

fn excursion_manifest() -> PlotManifest<'static> {
    PlotManifest { data: "excursion.csv", x: "n", y: &["entry", "exit", "maxdist"], group_by: Some("eps"), title: "excursion from the cylinder boundary" }
}

/// The detected cylinder of the class that contains `p`.
fn cylinder_for(profile: &geoblock_core::MetricProfile, pair: &CylinderPair, c: &Common) -> Result<(AdmissibleCylinder, TorusPoint, TorusPoint), CliError> {
    if pair.nmax < 1 {
        return Err(CliError::Input("--nmax must be at least 1".into()));
    }
    if pair.eps.is_empty() || pair.eps.iter().any(|e| e.is_nan() || *e <= 0.0) {
        return Err(CliError::Input("--eps must list positive numbers".into()));
    }
    let h = HomologyClass::new(pair.class.0, pair.class.1);
    let (p, q) = (point(pair.p), point(pair.q));
    let cyls = detect_cylinders(profile, h, &cylinder_opts(c.tol, pair.sweep, c.seed))?;
    let first = cyls.first().cloned().ok_or(geoblock_core::Error::NoCylinder("minimal geodesics of the class foliate the torus"))?;
    let cyl = cyls.into_iter().find(|cy| cy.lift_pair(p, q, 1e-9).is_ok()).unwrap_or(first);
    Ok((cyl, p, q))
}
