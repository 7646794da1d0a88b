//! Acceptance criteria. Runs sequentially so the timing budgets are not
//! distorted by other tests, prints one line per criterion and exits
//! nonzero if any of them fails.

use std::f64::consts::PI;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use geoblock_core::asymptotics::{busemann_estimate, coray_residual, detect_cylinders, BusemannOptions, CylinderOptions, RaySpec};
use geoblock_core::connect::{enumerate_joining, shoot_from, EnumerateOptions, HomologyClass, ShootOptions};
use geoblock_core::flow::{clairaut, has_conjugate_points, integrate, jacobi, monodromy, FlowConfig, PhaseState};
use geoblock_core::security::{
    endpoint_velocity_gap, escape_test, insecurity_certificate, intersection_count, involution_for_pair, midpoint_clusters, verify_blocking, BlockingOptions,
    CertificateOptions, CertificateVerdict, InsecurityCertificate, Verdict,
};
use geoblock_core::{CoverPoint, MetricProfile, TorusPoint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn round() -> MetricProfile {
    MetricProfile::round(1.0, 2.0).unwrap()
}

fn check(ok: bool, what: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what.into())
    }
}

fn within(elapsed: Duration, secs: u64) -> Result<(), String> {
    check(elapsed <= Duration::from_secs(secs), format!("runtime {elapsed:.1?} exceeds {secs} s"))
}

fn conservation() -> Outcome {
    let t0 = Instant::now();
    let profiles = [round(), MetricProfile::fourier(2.0, vec![0.3, 0.1], vec![0.2]).unwrap()];
    let cfg = FlowConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut worst_c, mut worst_s) = (0.0f64, 0.0f64);
    for p in &profiles {
        for _ in 0..100 {
            let pos = CoverPoint::new(rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
            let s = PhaseState::from_turns(p, pos, rng.random_range(0.0..1.0));
            let tr = integrate(p, s, 100.0, &cfg).map_err(|e| e.to_string())?;
            let c0 = clairaut(p, &s);
            let scale = c0.abs().max(p.min_value());
            for q in tr.samples() {
                let st = q.state;
                worst_c = worst_c.max((clairaut(p, &st) - c0).abs() / scale);
                let f = p.value(st.pos.y);
                worst_s = worst_s.max(((f * st.xi).hypot(st.eta) - 1.0).abs());
            }
        }
    }
    let el = t0.elapsed();
    check(worst_c < 1e-9, format!("Clairaut drift {worst_c:e}"))?;
    check(worst_s < 1e-9, format!("speed drift {worst_s:e}"))?;
    within(el, 10)?;
    Ok(format!("clairaut {worst_c:.2e}, speed {worst_s:.2e}, {el:.1?}"))
}

fn flat_oracle() -> Outcome {
    let flat = MetricProfile::flat();
    let (p, q) = (TorusPoint::new(0.0, 0.0), TorusPoint::new(0.5, 0.3));
    let opts = EnumerateOptions::default();
    let en = enumerate_joining(&flat, p, q, 5.0, &opts);
    let mut expected = Vec::new();
    for m in -6i64..=6 {
        for n in -6i64..=6 {
            let l = (0.5 + m as f64).hypot(0.3 + n as f64);
            if l <= 5.0 {
                expected.push(((m, n), l));
            }
        }
    }
    check(en.geodesics.len() == expected.len(), format!("{} geodesics, lattice count {}", en.geodesics.len(), expected.len()))?;
    let mut worst: f64 = 0.0;
    for ((m, n), l) in &expected {
        let g = en.geodesics.iter().find(|g| g.offset == HomologyClass::new(*m, *n)).ok_or(format!("lift ({m}, {n}) missing"))?;
        worst = worst.max((g.length() - l).abs());
    }
    check(worst <= 1e-9, format!("length error {worst:e}"))?;
    let mid = midpoint_clusters(&flat, &en.geodesics, p, q, 1e-9, &opts.shoot.flow);
    check(mid.clusters.len() == 4, format!("{} midpoint classes", mid.clusters.len()))?;
    for c in &mid.clusters {
        let ok = [(0.25, 0.15), (0.75, 0.15), (0.25, 0.65), (0.75, 0.65)].iter().any(|&(x, y)| (c.center.x - x).abs() < 1e-9 && (c.center.y - y).abs() < 1e-9);
        check(ok, format!("unexpected midpoint class {:?}", c.center))?;
    }
    Ok(format!("{} geodesics, length error {worst:.1e}, 4 midpoint classes", expected.len()))
}

fn secure_side() -> Outcome {
    let t0 = Instant::now();
    let p = round();
    let (a, b) = (TorusPoint::new(0.1, 0.0), TorusPoint::new(0.37, 0.0));
    let delta = 1e-4;
    let inv = involution_for_pair(&p, 0.0, a.x, b.x, 1e-9).map_err(|e| e.to_string())?;
    let cand = inv.blocking_candidates(a, b, delta);
    check(cand.len() <= 4, format!("{} candidates", cand.len()))?;
    let rep = verify_blocking(&p, a, b, &cand, 30.0, delta, &BlockingOptions::default()).map_err(|e| e.to_string())?;
    let el = t0.elapsed();
    check(rep.geodesics.len() >= 20, format!("only {} geodesics", rep.geodesics.len()))?;
    let worst = rep.geodesics.iter().map(|g| g.distance).fold(0.0, f64::max);
    check(rep.geodesics.iter().all(|g| g.blocked && g.distance <= delta), format!("worst distance {worst:e}"))?;
    check(rep.verdict == Verdict::BlockedAtScale, "verdict is not BLOCKED_AT_SCALE")?;
    let gap = rep.traces.iter().map(|g| endpoint_velocity_gap(&g.trace)).fold(0.0, f64::max);
    check(gap <= 1e-6, format!("endpoint velocity gap {gap:e}"))?;
    within(el, 60)?;
    Ok(format!("{} geodesics, worst distance {worst:.2e}, velocity gap {gap:.1e}, {el:.1?}", rep.geodesics.len()))
}

fn certificate(q: TorusPoint) -> Result<InsecurityCertificate, String> {
    let p = round();
    let opts = CylinderOptions::default();
    let cyl = detect_cylinders(&p, HomologyClass::new(1, 0), &opts).map_err(|e| e.to_string())?;
    let cyl = cyl.first().ok_or("no cylinder for (1, 0)")?;
    insecurity_certificate(&p, cyl, TorusPoint::new(0.1, 0.25), q, 8, &[0.02, 0.05, 0.1], &CertificateOptions::default()).map_err(|e| e.to_string())
}

fn certificate_checks(cert: &InsecurityCertificate) -> Result<(), String> {
    check(cert.verdict == CertificateVerdict::Valid, "certificate is INVALID")?;
    // Equator period: f(0) = R − r.
    let period = 1.0;
    for w in cert.entries.windows(2) {
        let gap = w[1].length - w[0].length;
        check(gap > 0.0 && (gap - period).abs() <= 0.2 * period, format!("length gap {gap} at n = {}", w[1].n))?;
    }
    check(cert.entries.iter().all(|e| e.min_boundary_distance > 0.0), "an interior touches the boundary")?;
    check(cert.entries.iter().all(|e| e.conjugate_point.is_none()), "conjugate point found")?;
    for &eps in &cert.eps {
        let t4 = cert.excursion.t_n(eps, 4).ok_or("missing T_4")?;
        for n in 5..=8 {
            let tn = cert.excursion.t_n(eps, n).ok_or("missing T_n")?;
            check(tn <= 2.0 * t4, format!("T_{n}({eps}) = {tn} vs T_4 = {t4}"))?;
        }
    }
    Ok(())
}

fn insecure_side() -> Outcome {
    let t0 = Instant::now();
    let cert = certificate(TorusPoint::new(0.37, 0.25))?;
    certificate_checks(&cert)?;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let blockers: Vec<TorusPoint> = (0..5).map(|_| TorusPoint::new(rng.random_range(0.0..1.0), rng.random_range(0.05..0.95))).collect();
    let w = escape_test(&round(), &cert, &blockers, 1e-3, &FlowConfig::default()).map_err(|e| e.to_string())?;
    let w = w.ok_or("blockers were not escaped")?;
    let el = t0.elapsed();
    within(el, 120)?;
    Ok(format!("VALID, escape at n = {} (distance {:.2e}), {el:.1?}", w.n, w.distance))
}

fn boundary_case() -> Outcome {
    let cert = certificate(TorusPoint::new(0.5, 0.0))?;
    check(cert.one_sided, "certificate is not one-sided")?;
    certificate_checks(&cert)?;
    Ok(format!("VALID one-sided, {} geodesics", cert.entries.len()))
}

fn intersections() -> Outcome {
    let p = round();
    let cfg = FlowConfig::default();
    let eq = integrate(&p, PhaseState::from_turns(&p, CoverPoint::new(0.0, 0.0), 0.0), 1.0, &cfg).map_err(|e| e.to_string())?;
    let mer = integrate(&p, PhaseState::from_turns(&p, CoverPoint::new(0.3, 0.0), 0.25), 1.0, &cfg).map_err(|e| e.to_string())?;
    let c = intersection_count(&p, &eq, &mer, &cfg).map_err(|e| e.to_string())?;
    check(c.count == 1, format!("equator x meridian: {} crossings", c.count))?;
    let flat = MetricProfile::flat();
    let lat = integrate(&flat, PhaseState::from_turns(&flat, CoverPoint::new(0.0, 0.3), 0.0), 1.0, &cfg).map_err(|e| e.to_string())?;
    let diag = integrate(&flat, PhaseState::from_angle(&flat, CoverPoint::new(0.1, 0.0), 2.0f64.atan2(1.0)), 5.0f64.sqrt(), &cfg).map_err(|e| e.to_string())?;
    let d = intersection_count(&flat, &lat, &diag, &cfg).map_err(|e| e.to_string())?;
    check(d.count == 2, format!("(1,0) x (1,2): {} crossings", d.count))?;
    let s0 = d.crossings[0].sign;
    check(d.crossings.iter().all(|x| x.sign == s0), "crossing signs differ")?;
    Ok(format!("1 and 2 crossings, sign {s0}"))
}

fn jacobi_oracles() -> Outcome {
    let p = round();
    let cfg = FlowConfig::default();
    let eq = integrate(&p, PhaseState::from_turns(&p, CoverPoint::new(0.0, 0.0), 0.0), 3.0, &cfg).map_err(|e| e.to_string())?;
    let sol = jacobi(&p, &eq, 0.0, 1.0, &cfg).map_err(|e| e.to_string())?;
    // K = −f''/f = −4π² on y = 0.
    let k = 2.0 * PI;
    let mut worst: f64 = 0.0;
    for &(t, j, _) in &sol.samples[1..] {
        let exact = (k * t).sinh() / k;
        worst = worst.max(((j - exact) / exact).abs());
    }
    check(worst <= 1e-7, format!("sinh mismatch {worst:e}"))?;
    let loop1 = integrate(&p, PhaseState::from_turns(&p, CoverPoint::new(0.0, 0.0), 0.0), 1.0, &cfg).map_err(|e| e.to_string())?;
    let m = monodromy(&p, &loop1, &cfg).map_err(|e| e.to_string())?;
    let det = (m.det() - 1.0).abs();
    check(det <= 1e-8, format!("det − 1 = {det:e}"))?;
    check(m.distance_from_one() > 1e-6, "monodromy eigenvalue equals 1")?;
    let outer = integrate(&p, PhaseState::from_turns(&p, CoverPoint::new(0.0, 0.5), 0.0), 2.0, &cfg).map_err(|e| e.to_string())?;
    let tc = has_conjugate_points(&p, &outer, &cfg).map_err(|e| e.to_string())?.ok_or("no conjugate point on the outer equator")?;
    // f = 3, f'' = −4π² at y = 1/2.
    let want = PI / (4.0 * PI * PI / 3.0).sqrt();
    check((tc - want).abs() <= 1e-7, format!("conjugate point {tc} vs {want}"))?;
    Ok(format!("sinh {worst:.1e}, det {det:.1e}, conjugate point error {:.1e}", (tc - want).abs()))
}

fn busemann_suite() -> Outcome {
    let p = round();
    let o = BusemannOptions::default();
    let cfg = FlowConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let pts: Vec<(CoverPoint, CoverPoint)> = (0..50)
        .map(|_| {
            let a = CoverPoint::new(rng.random_range(0.0..1.0), rng.random_range(-0.45..0.45));
            let phi = rng.random_range(0.0..2.0 * PI);
            (a, CoverPoint::new(a.x + 0.05 * phi.cos(), a.y + 0.05 * phi.sin()))
        })
        .collect();
    let dist: Vec<f64> = pts
        .iter()
        .map(|(a, b)| {
            let th = (b.y - a.y).atan2(p.value(a.y) * (b.x - a.x));
            shoot_from(&p, *a, *b, th, 1.0, &ShootOptions::default()).map(|g| g.length()).map_err(|e| e.to_string())
        })
        .collect::<Result<_, _>>()?;
    let mut lip: f64 = f64::NEG_INFINITY;
    for h in [50.0, 100.0, 200.0] {
        let ray = RaySpec::latitude(&p, 0.0, 0.0, true, h, &cfg).map_err(|e| e.to_string())?;
        for ((a, b), d) in pts.iter().zip(&dist) {
            let est = |x: CoverPoint, t: f64| busemann_estimate(&p, &ray, x, t, &o).map_err(|e| e.to_string());
            let ts = [0.25 * h, 0.5 * h, h];
            let ba: Vec<f64> = ts.iter().map(|&t| est(*a, t)).collect::<Result<_, _>>()?;
            check(ba[1] <= ba[0] + 1e-12 && ba[2] <= ba[1] + 1e-12, format!("not monotone at {a:?}: {ba:?}"))?;
            let bb = est(*b, h)?;
            lip = lip.max((ba[2] - bb).abs() - d);
            check((ba[2] - bb).abs() <= d + 1e-12, format!("Lipschitz bound fails at {a:?}: {} > {d}", (ba[2] - bb).abs()))?;
        }
    }
    let ray = RaySpec::latitude(&p, 0.0, 0.0, true, 200.0, &cfg).map_err(|e| e.to_string())?;
    let own = coray_residual(&p, &ray, &ray.carrier, 0.0, 10.0, &o).map_err(|e| e.to_string())?;
    check(own < 1e-9, format!("ray residual {own:e}"))?;
    let flat = MetricProfile::flat();
    let fray = RaySpec::asserted(integrate(&flat, PhaseState::from_turns(&flat, CoverPoint::new(0.0, 0.0), 0.0), 200.0, &cfg).map_err(|e| e.to_string())?);
    let up = integrate(&flat, PhaseState::from_turns(&flat, CoverPoint::new(0.3, 0.1), 0.25), 2.0, &cfg).map_err(|e| e.to_string())?;
    let perp = coray_residual(&flat, &fray, &up, 0.0, 1.0, &o).map_err(|e| e.to_string())?;
    check(perp >= 0.5, format!("perpendicular residual {perp}"))?;
    Ok(format!("Lipschitz margin {:.2e}, ray residual {own:.1e}, perpendicular {perp:.3}", -lip))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let profile = dir.path().join("round.json");
    std::fs::write(&profile, r#"{"kind":"round","r":1.0,"R":2.0}"#).map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let st = Command::new(env!("CARGO_BIN_EXE_geoblock"))
            .args(["--profile", profile.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "17", "insecure", "--p", "0.1,0.25", "--q", "0.37,0.25", "--sweep", "256"])
            .output()
            .map_err(|e| e.to_string())?;
        check(st.status.success(), format!("run {run} failed: {}", String::from_utf8_lossy(&st.stderr)))?;
        outputs.push(std::fs::read(out.join("insecure.json")).map_err(|e| e.to_string())?);
    }
    check(outputs[0] == outputs[1], "insecure.json differs between runs")?;
    Ok(format!("{} identical bytes", outputs[0].len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("conservation", conservation),
        ("flat oracle", flat_oracle),
        ("secure side", secure_side),
        ("insecure side", insecure_side),
        ("boundary case", boundary_case),
        ("intersection count", intersections),
        ("jacobi and monodromy", jacobi_oracles),
        ("busemann suite", busemann_suite),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(msg) => println!("criterion {} {name}: PASS ({msg})", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({msg})", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
