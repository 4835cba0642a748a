//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on
//! any failure.

use std::collections::BTreeMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use astro_float::{BigFloat, Consts, Radix, RoundingMode};
use espim_cli::collector::{serve_on, CollectorConfig};
use espim_core::fixation::{detect_fixations, FixationParams, GazeSample};
use espim_core::geometry::Point;
use espim_core::model::{espim, estimate_anf, EspimInputs, ScreenSpec};
use espim_core::session::parse_session;
use espim_core::spatial::kmeans;
use espim_core::stats::{descriptives, paired_t_test, pearson, resolution_diff, Resolution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::statistics::Statistics;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(f64::MIN_POSITIVE)
}

fn root() -> PathBuf {
    [env!("CARGO_MANIFEST_DIR"), "..", ".."].iter().collect()
}

// Score

const P: usize = 256;
const RM: RoundingMode = RoundingMode::ToEven;

fn espim_bigfloat(i: &EspimInputs, cc: &mut Consts) -> f64 {
    let b = |v: f64| BigFloat::from_f64(v, P);
    let aos = b(i.screen.width).mul(&b(i.screen.height), P, RM);
    let id = b(1.0).add(&b(i.d).div(&b(i.w), P, RM), P, RM).log2(P, RM, cc);
    let num = aos.div(&b(i.aot), P, RM).mul(&id, P, RM).mul(&b(i.anf), P, RM).add(&b(1.0), P, RM);
    let score = num.div(&b(i.td).add(&b(1.0), P, RM), P, RM).sqrt(P, RM);
    score.format(Radix::Dec, RM, cc).unwrap().parse().unwrap()
}

fn random_inputs(rng: &mut impl Rng) -> EspimInputs {
    let width = rng.random_range(320.0..7680.0f64);
    let height = rng.random_range(240.0..4320.0f64);
    let screen = ScreenSpec::new(width, height).unwrap();
    EspimInputs {
        screen,
        aot: rng.random_range(1.0..width * height / 2.0),
        d: rng.random_range(1.0..screen.diagonal()),
        w: rng.random_range(4.0..width.min(height) / 2.0),
        anf: rng.random_range(1.0..2000.0),
        td: rng.random_range(0.5..3600.0),
    }
}

fn score(i: &EspimInputs) -> f64 {
    espim(i).unwrap().value()
}

fn oracle_equivalence() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0001);
    let cases: Vec<EspimInputs> = (0..1000).map(|_| random_inputs(&mut rng)).collect();
    let start = Instant::now();
    let got: Vec<f64> = cases.iter().map(score).collect();
    let elapsed = start.elapsed();
    let mut cc = Consts::new().unwrap();
    let mut worst = 0.0f64;
    for (i, g) in cases.iter().zip(&got) {
        let want = espim_bigfloat(i, &mut cc);
        worst = worst.max(rel_err(*g, want));
    }
    ensure(worst <= 1e-12, || format!("max relative error {worst:e}"))?;
    ensure(elapsed.as_secs_f64() < 1.0, || format!("1000 evaluations took {elapsed:?}"))?;
    Ok(format!("1000 cases, max rel err {worst:.1e}, {:.3} ms", elapsed.as_secs_f64() * 1e3))
}

fn scale_invariance() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0002);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let i = random_inputs(&mut rng);
        let s = rng.random_range(0.1..=10.0);
        let scaled = EspimInputs {
            screen: ScreenSpec::new(i.screen.width * s, i.screen.height * s).unwrap(),
            aot: i.aot * s * s,
            d: i.d * s,
            w: i.w * s,
            ..i
        };
        worst = worst.max(rel_err(score(&scaled), score(&i)));
    }
    ensure(worst <= 1e-9, || format!("max relative change {worst:e}"))?;
    Ok(format!("200 cases, s in [0.1, 10], max rel change {worst:.1e}"))
}

fn monotonicity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0003);
    let mut violations = BTreeMap::from([("anf", 0), ("d", 0), ("td", 0), ("w", 0)]);
    for _ in 0..100 {
        let i = random_inputs(&mut rng);
        let f = rng.random_range(1.01..3.0);
        let base = score(&i);
        if score(&EspimInputs { anf: i.anf * f, ..i }) <= base {
            *violations.get_mut("anf").unwrap() += 1;
        }
        // d and w grow part of the way to their on-screen limits.
        let d = i.d + rng.random_range(0.05..1.0) * (i.screen.diagonal() - i.d);
        if score(&EspimInputs { d, ..i }) <= base {
            *violations.get_mut("d").unwrap() += 1;
        }
        if score(&EspimInputs { td: i.td * f, ..i }) >= base {
            *violations.get_mut("td").unwrap() += 1;
        }
        let w = i.w + rng.random_range(0.05..1.0) * (i.screen.width.min(i.screen.height) - i.w);
        if score(&EspimInputs { w, ..i }) >= base {
            *violations.get_mut("w").unwrap() += 1;
        }
    }
    let total: usize = violations.values().sum();
    ensure(total == 0, || format!("violations {violations:?}"))?;
    Ok("100 cases each for anf, d (increasing) and td, w (decreasing), 0 violations".into())
}

// Published tables

fn table2() -> Check {
    let resolutions = [(1280, 720), (1280, 800), (1368, 912), (1920, 1080), (2048, 1152), (2560, 1440), (3440, 1440)];
    let series = [
        ("9-to-5", [33.38, 22.10, 23.21, 34.34, 42.59, 38.18, 32.01], [33.38, -11.28, 1.11, 11.13, 8.25, -4.41, -6.17], 32.01),
        ("flexible", [20.98, 22.08, 24.81, 33.39, 43.25, 39.22, 32.11], [20.98, 1.10, 2.73, 8.58, 9.86, -4.03, -7.11], 32.11),
    ];
    let mut totals = Vec::new();
    for (label, p, diffs, sum) in series {
        let points: Vec<(Resolution, f64)> =
            resolutions.iter().zip(p).map(|(&(w, h), v)| (Resolution::new(w, h), v)).collect();
        let table = resolution_diff(&points).map_err(|e| e.to_string())?;
        for (row, want) in table.rows.iter().zip(diffs) {
            ensure((row.diff - want).abs() <= 0.005, || format!("{label} {}: {} vs {want}", row.resolution, row.diff))?;
        }
        ensure((table.total - sum).abs() <= 0.005, || format!("{label} total {} vs {sum}", table.total))?;
        totals.push(format!("{label} {:.2}", table.total));
    }
    Ok(format!("diff columns reproduced, totals {}", totals.join(", ")))
}

fn table1() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0005);
    for (min, max, range) in [(322.0, 1443.0, 1121.0), (315.0, 1336.0, 1021.0)] {
        for _ in 0..20 {
            let n = rng.random_range(3..40);
            let mut xs: Vec<f64> = (0..n).map(|_| rng.random_range(min..max)).collect();
            xs.push(min);
            xs.push(max);
            for i in (1..xs.len()).rev() {
                xs.swap(i, rng.random_range(0..=i));
            }
            let d = descriptives(&xs).map_err(|e| e.to_string())?;
            ensure(d.min == min && d.max == max && d.range == range, || {
                format!("min {} max {} range {}", d.min, d.max, d.range)
            })?;
        }
    }
    Ok("ranges 1121 (322..1443) and 1021 (315..1336) on 40 datasets".into())
}

// Statistics

fn two_tailed(t: f64, df: f64) -> f64 {
    2.0 * StudentsT::new(0.0, 1.0, df).unwrap().sf(t.abs())
}

fn statistics_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0006);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let (mut dt, mut dr, mut dp) = (0.0f64, 0.0f64, 0.0f64);
    for case in 0..100 {
        let n = rng.random_range(3..30);
        let slope = rng.random_range(-2.0..2.0);
        let xs: Vec<f64> = (0..n).map(|_| 10.0 + 3.0 * noise.sample(&mut rng)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| slope * x + 2.0 * noise.sample(&mut rng)).collect();

        let diffs: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| x - y).collect();
        let nf = n as f64;
        let t_ref = diffs.iter().mean() / (diffs.iter().std_dev() / nf.sqrt());
        let t = paired_t_test(&xs, &ys).map_err(|e| e.to_string())?;
        ensure(t.df as usize == n - 1, || format!("case {case}: df {}", t.df))?;
        dt = dt.max((t.t - t_ref).abs() / t_ref.abs().max(1.0));
        dp = dp.max((t.p - two_tailed(t_ref, nf - 1.0)).abs());

        let r_ref = xs.iter().covariance(ys.iter()) / (xs.iter().std_dev() * ys.iter().std_dev());
        let c = pearson(&xs, &ys).map_err(|e| e.to_string())?;
        dr = dr.max((c.r - r_ref).abs());
        let tr = r_ref * ((nf - 2.0) / (1.0 - r_ref * r_ref)).sqrt();
        dp = dp.max((c.p - two_tailed(tr, nf - 2.0)).abs());
    }
    ensure(dt <= 1e-9 && dr <= 1e-9, || format!("t err {dt:e}, r err {dr:e}"))?;
    ensure(dp <= 1e-6, || format!("p err {dp:e}"))?;

    let hand = paired_t_test(&[1.0, 2.0, 3.0], &[0.0; 3]).map_err(|e| e.to_string())?;
    ensure((hand.t - 3.464102).abs() < 5e-7 && hand.df == 2, || format!("hand case t {} df {}", hand.t, hand.df))?;
    Ok(format!("100 datasets, t err {dt:.1e}, r err {dr:.1e}, p err {dp:.1e}; hand case t = {:.6}, df = 2", hand.t))
}

fn synthetic_correlation() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_000B);
    let z = Normal::new(0.0, 1.0).unwrap();
    let rho: f64 = 0.8;
    let mut score = Vec::new();
    let mut errors = Vec::new();
    for _ in 0..200 {
        let (a, b) = (z.sample(&mut rng), z.sample(&mut rng));
        score.push(40.0 + 8.0 * a);
        errors.push(5.0 + 2.0 * (rho * a + (1.0 - rho * rho).sqrt() * b));
    }
    let r = pearson(&score, &errors).map_err(|e| e.to_string())?.r;
    ensure((r - rho).abs() <= 0.05, || format!("recovered r = {r:.4}"))?;
    Ok(format!("n = 200, rho = 0.8, recovered r = {r:.4}"))
}

// Fixations

const PERIOD: f64 = 1000.0 / 90.0;

fn fixation_detection() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0007);
    let params = FixationParams::default();
    let mut planted_total = 0;
    let mut worst_px = 0.0f64;
    for trace in 0..20 {
        let k = rng.random_range(3..10);
        let mut samples = Vec::new();
        let mut centers: Vec<Point> = Vec::new();
        let mut t = 0.0;
        for i in 0..k {
            let x = if i % 2 == 0 { rng.random_range(60.0..700.0) } else { rng.random_range(1200.0..1860.0) };
            let center = Point::new(x, rng.random_range(60.0..1020.0));
            if let Some(&from) = centers.last() {
                for s in 1..=4 {
                    let f = s as f64 / 5.0;
                    samples.push(GazeSample::new(t, from.x + f * (center.x - from.x), from.y + f * (center.y - from.y)));
                    t += PERIOD;
                }
            }
            let duration: f64 = rng.random_range(200.0..=600.0);
            for _ in 0..=(duration / PERIOD).ceil() as usize {
                let (dx, dy) = (rng.random_range(-1.5..=1.5), rng.random_range(-1.5..=1.5));
                samples.push(GazeSample::new(t, center.x + dx, center.y + dy));
                t += PERIOD;
            }
            centers.push(center);
        }
        let found = detect_fixations(&samples, &params).map_err(|e| e.to_string())?;
        ensure(found.len() == k, || format!("trace {trace}: {} fixations, planted {k}", found.len()))?;
        for (f, c) in found.iter().zip(&centers) {
            worst_px = worst_px.max(f.centroid.distance(*c));
        }
        let td = samples.last().unwrap().t / 1000.0;
        let est = estimate_anf(td).map_err(|e| e.to_string())?;
        ensure(est.low <= k as f64 && k as f64 <= est.high, || {
            format!("trace {trace}: estimate [{:.2}, {:.2}] misses {k}", est.low, est.high)
        })?;
        planted_total += k;
    }
    ensure(worst_px <= 1.0, || format!("centroid off by {worst_px:.3} px"))?;
    Ok(format!("20 traces, {planted_total} planted fixations found, max centroid error {worst_px:.3} px"))
}

// Clustering

fn partitions(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(i: usize, n: usize, k: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == n {
            if max == k {
                out.push(cur.clone());
            }
            return;
        }
        for b in 0..=max.min(k - 1) {
            cur.push(b);
            go(i + 1, n, k, max.max(b + 1), cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, 0, &mut Vec::new(), &mut out);
    out
}

fn sse(points: &[Point], labels: &[usize], k: usize) -> f64 {
    (0..k)
        .map(|b| {
            let m: Vec<Point> = points.iter().zip(labels).filter(|(_, &l)| l == b).map(|(p, _)| *p).collect();
            let n = m.len() as f64;
            let c = Point::new(m.iter().map(|p| p.x).sum::<f64>() / n, m.iter().map(|p| p.y).sum::<f64>() / n);
            m.iter().map(|p| p.distance_sq(c)).sum::<f64>()
        })
        .sum()
}

fn canonical(labels: &[usize]) -> Vec<usize> {
    let mut seen = Vec::new();
    labels
        .iter()
        .map(|l| match seen.iter().position(|m| m == l) {
            Some(i) => i,
            None => {
                seen.push(*l);
                seen.len() - 1
            }
        })
        .collect()
}

fn kmeans_optimality() -> Check {
    let all = partitions(8, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0008);
    let mut worst = 0.0f64;
    for case in 0..20u64 {
        let mut points = Vec::new();
        for &(x, y) in &[(300.0, 200.0), (1600.0, 250.0), (350.0, 900.0), (1500.0, 850.0)] {
            let (cx, cy) = (x + rng.random_range(-100.0..100.0), y + rng.random_range(-100.0..100.0));
            for _ in 0..2 {
                points.push(Point::new(cx + rng.random_range(-15.0..15.0), cy + rng.random_range(-15.0..15.0)));
            }
        }
        for i in (1..points.len()).rev() {
            points.swap(i, rng.random_range(0..=i));
        }
        let (best, best_sse) = all
            .iter()
            .map(|l| (l, sse(&points, l, 4)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        let c = kmeans(&points, 4, case).map_err(|e| e.to_string())?;
        ensure(canonical(&c.assignments) == *best, || format!("case {case}: partition differs from the optimum"))?;
        let err = (c.inertia - best_sse).abs();
        ensure(err <= 1e-9 * (1.0 + best_sse), || format!("case {case}: inertia {} vs {best_sse}", c.inertia))?;
        worst = worst.max(err);
        ensure(kmeans(&points, 4, case).map_err(|e| e.to_string())? == c, || format!("case {case}: not deterministic"))?;
    }
    Ok(format!("20 instances of 8 points, exhaustive over {} partitions, max inertia gap {worst:.1e}", all.len()))
}

// End to end

fn run_analyze(out: &Path) -> Result<(), String> {
    let o = Command::new(env!("CARGO_BIN_EXE_espim"))
        .args(["analyze", "fixtures/corpus", "--out"])
        .arg(out)
        .current_dir(root())
        .env("RUST_LOG", "error")
        .output()
        .map_err(|e| e.to_string())?;
    ensure(o.status.success(), || format!("analyze failed: {}", String::from_utf8_lossy(&o.stderr)))
}

fn end_to_end() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    run_analyze(&a)?;
    run_analyze(&b)?;
    let mut names: Vec<_> = fs::read_dir(&a).map_err(|e| e.to_string())?.map(|e| e.unwrap().file_name()).collect();
    names.sort();
    for name in &names {
        let (x, y) = (fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap());
        ensure(x == y, || format!("{name:?} differs between runs"))?;
    }

    let report: serde_json::Value = serde_json::from_slice(&fs::read(a.join("report.json")).unwrap()).unwrap();
    let oracle: BTreeMap<String, serde_json::Value> =
        serde_json::from_slice(&fs::read(root().join("fixtures/expected_metrics.json")).unwrap()).unwrap();
    let sessions = report["sessions"].as_array().ok_or("report has no sessions")?;
    ensure(sessions.len() == 2, || format!("{} sessions in report", sessions.len()))?;
    let mut worst = 0.0f64;
    for s in sessions {
        let id = s["session_id"].as_str().unwrap();
        let want = oracle.get(id).ok_or_else(|| format!("no oracle entry for {id}"))?;
        for (key, value) in want.as_object().unwrap() {
            let got = &s["metrics"][key];
            if value.is_u64() {
                ensure(got == value, || format!("{id} {key}: {got} vs {value}"))?;
            } else {
                let (g, w) = (got.as_f64().unwrap_or(f64::NAN), value.as_f64().unwrap());
                let err = (g - w).abs() / w.abs().max(1.0);
                ensure(err <= 1e-9, || format!("{id} {key}: {g} vs {w}"))?;
                worst = worst.max(err);
            }
        }
    }
    Ok(format!("{} files byte-identical across runs, 2 sessions match the oracle (max rel err {worst:.1e})", names.len()))
}

// Collector

fn minimal_with_id(id: &str) -> Vec<u8> {
    let mut v: serde_json::Value =
        serde_json::from_slice(&fs::read(root().join("fixtures/minimal_session.json")).unwrap()).unwrap();
    v["session_id"] = id.into();
    serde_json::to_vec_pretty(&v).unwrap()
}

fn collector_integrity() -> Check {
    let runtime = tokio::runtime::Builder::new_multi_thread().worker_threads(4).enable_all().build().unwrap();
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dir = tmp.path().to_path_buf();
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.map_err(|e| e.to_string())?;
        let url = format!("http://{}/v1/sessions", listener.local_addr().unwrap());
        let (stop, stopped) = tokio::sync::oneshot::channel::<()>();
        let server = tokio::spawn(serve_on(listener, CollectorConfig::new(&dir), async {
            let _ = stopped.await;
        }));
        let client = reqwest::Client::new();

        let bodies: Vec<(String, Vec<u8>)> =
            (0..50).map(|i| (format!("acc-{i:02}"), minimal_with_id(&format!("acc-{i:02}")))).collect();
        let tasks: Vec<_> = bodies
            .iter()
            .map(|(_, body)| {
                let (client, url, body) = (client.clone(), url.clone(), body.clone());
                tokio::spawn(async move { client.post(url).body(body).send().await.map(|r| r.status()) })
            })
            .collect();
        for t in tasks {
            let status = t.await.unwrap().map_err(|e| e.to_string())?;
            ensure(status.as_u16() == 201, || format!("upload answered {status}"))?;
        }
        for (id, body) in &bodies {
            let stored = fs::read(dir.join(format!("{id}.json"))).map_err(|e| format!("{id}: {e}"))?;
            ensure(&stored == body, || format!("{id}: stored bytes differ"))?;
            let parsed = parse_session(&stored).map_err(|e| format!("{id}: {e}"))?;
            ensure(parsed == parse_session(body).unwrap(), || format!("{id}: re-parse differs"))?;
        }

        let mut truncated = minimal_with_id("acc-trunc");
        truncated.truncate(truncated.len() / 2);
        let invalid: Vec<Vec<u8>> = vec![
            fs::read(root().join("fixtures/invalid/strain_rating_6.json")).unwrap(),
            fs::read(root().join("fixtures/invalid/truncated.json")).unwrap(),
            truncated,
            b"{\"version\": 1}".to_vec(),
            b"\x00\xff garbage".to_vec(),
        ];
        for body in &invalid {
            let status = client.post(&url).body(body.clone()).send().await.map_err(|e| e.to_string())?.status();
            ensure(status.as_u16() == 422, || format!("invalid payload answered {status}"))?;
        }
        let count = fs::read_dir(&dir).unwrap().count();
        ensure(count == 50, || format!("{count} files on disk after invalid uploads"))?;

        stop.send(()).unwrap();
        server.await.unwrap().map_err(|e| e.to_string())?;
        Ok(format!("50 concurrent uploads stored intact, {} invalid payloads left no files", invalid.len()))
    })
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("score matches high-precision oracle", oracle_equivalence),
        ("score scale invariance", scale_invariance),
        ("score monotonicity", monotonicity),
        ("resolution difference table", table2),
        ("descriptive range table", table1),
        ("statistics oracle", statistics_oracle),
        ("fixation detection on planted traces", fixation_detection),
        ("k-means small-instance optimality", kmeans_optimality),
        ("end-to-end determinism", end_to_end),
        ("collector integrity", collector_integrity),
        ("synthetic correlation recovery", synthetic_correlation),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|panic| {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
