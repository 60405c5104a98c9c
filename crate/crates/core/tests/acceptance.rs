//! Acceptance suite. Prints one PASS/FAIL line per criterion and fails if
//! any criterion fails. Run with `--nocapture` to see the table.

use std::thread;
use std::time::{Duration, Instant};

use phtel::analysis::{nernst_slope, power_totals, PowerBudget};
use phtel::daq::ExportFormat;
use phtel::device::{input_impedance, AfeParams};
use phtel::protocol::{
    crc16_ccitt, decode, encode, AckFrame, ConfigFrame, DataFrame, StatusFrame, TelemetryFrame,
};
use phtel::sim::SimRun;
use phtel::{analyze, AnalysisOptions, Metrics, Rig, Scenario};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEEDS: u64 = 20;

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn check(name: &'static str, pass: bool, detail: String) -> Outcome {
    Outcome { name, pass, detail }
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol + 1e-9
}

fn fig2_runs() -> Vec<(SimRun, Metrics)> {
    let threads = thread::available_parallelism()
        .map_or(4, |n| n.get())
        .min(SEEDS as usize);
    let mut out: Vec<Option<(SimRun, Metrics)>> = (0..SEEDS).map(|_| None).collect();
    thread::scope(|s| {
        for (w, chunk) in out
            .chunks_mut((SEEDS as usize).div_ceil(threads))
            .enumerate()
        {
            let base = w * (SEEDS as usize).div_ceil(threads);
            s.spawn(move || {
                for (i, slot) in chunk.iter_mut().enumerate() {
                    let seed = (base + i) as u64 + 1;
                    let run = Rig::run(&Scenario::fig2().with_seed(seed)).unwrap();
                    let m = analyze(&run.session, &AnalysisOptions::default()).unwrap();
                    *slot = Some((run, m));
                }
            });
        }
    });
    out.into_iter().map(Option::unwrap).collect()
}

fn eq1() -> Outcome {
    let afe = AfeParams {
        c_gs_pf: 3.0,
        c_gd_pf: 1.0,
        ..AfeParams::default()
    };
    let z = input_impedance(&afe, 1.0).unwrap();
    check(
        "Input impedance at 1 Hz",
        within(z, 39.79, 39.79 * 0.005),
        format!("Z(4 pF, 1 Hz) = {z:.3} GΩ, target 39.79 ± 0.5%"),
    )
}

fn table_i() -> Outcome {
    let t = power_totals(&PowerBudget::table_i());
    check(
        "Power budget totals",
        within(t.total_mw, 15.81, 0.01) && within(t.total_without_optional_mw, 8.89, 0.01),
        format!(
            "total {:.2} mW (15.81 ± 0.01), without LED {:.2} mW (8.89 ± 0.01)",
            t.total_mw, t.total_without_optional_mw
        ),
    )
}

fn fig2(m: &Metrics) -> Outcome {
    let injected = Scenario::fig2().electrode().drift_mv_per_min;
    let rate = m.drift.map(|d| d.model.rate_mv_per_min).unwrap_or(f64::NAN);
    let err = (rate - injected).abs() / injected;
    let a = m
        .window("cal-ph7-a")
        .and_then(|w| w.mean_ph)
        .unwrap_or(f64::NAN);
    let b = m
        .window("cal-ph7-b")
        .and_then(|w| w.mean_ph)
        .unwrap_or(f64::NAN);
    check(
        "Drift recovery over 7 → 10 → 4 → 7",
        err <= 0.05 && (a - b).abs() <= 0.02,
        format!(
            "drift {rate:.5} mV/min vs injected {injected} ({:.2}% off, limit 5%); corrected pH-7 means {a:.4} / {b:.4} (Δ {:.2e}, limit 0.02)",
            err * 100.0,
            (a - b).abs()
        ),
    )
}

fn sensitivity(m: &Metrics) -> Outcome {
    let s = m
        .sensitivity
        .map(|s| s.model.slope_mv_per_ph)
        .unwrap_or(f64::NAN);
    let n = nernst_slope(25.0).unwrap();
    check(
        "Sensitivity and Nernst slope",
        within(s, 31.0, 0.31) && within(n, 59.16, 0.01),
        format!("fitted {s:.3} mV/pH (31 ± 1%), nernst(25 °C) = {n:.4} mV/pH (59.16 ± 0.01)"),
    )
}

fn response(runs: &[(SimRun, Metrics)]) -> Outcome {
    let r: Vec<_> = runs
        .iter()
        .map(|(_, m)| *m.response(10.0, 4.0).expect("10→4 response"))
        .collect();
    let ok = r
        .iter()
        .all(|r| within(r.settling_s, 3.2, 0.1) && within(r.rate_ph_per_s, 1.875, 0.06));
    let (lo, hi) = r.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), r| {
        (lo.min(r.settling_s), hi.max(r.settling_s))
    });
    check(
        "Response 10 → 4",
        ok,
        format!(
            "seed 1: {:.3} s, {:.3} pH/s; {SEEDS} seeds: settling {lo:.3}..{hi:.3} s (3.2 ± 0.1), rates {:.3}..{:.3} pH/s (1.875 ± 0.06)",
            r[0].settling_s,
            r[0].rate_ph_per_s,
            6.0 / hi,
            6.0 / lo
        ),
    )
}

fn stability(runs: &[(SimRun, Metrics)]) -> Outcome {
    let worst = runs
        .iter()
        .map(|(_, m)| {
            m.window("cal-ph7-a")
                .and_then(|w| w.stability_ph)
                .unwrap_or(f64::INFINITY)
        })
        .fold(0.0f64, f64::max);
    check(
        "Stability over 90 min at pH 7",
        worst < 0.15,
        format!("worst of {SEEDS} seeds ±{worst:.4} pH (limit 0.15)"),
    )
}

fn random_frame(rng: &mut ChaCha8Rng) -> TelemetryFrame {
    match rng.random_range(0..6) {
        0 => TelemetryFrame::Data(DataFrame {
            seq: rng.random(),
            t_ms: rng.random(),
            ph_raw: rng.random_range(0..=4095),
            temp_raw: rng.random_range(0..=4095),
        }),
        1 => TelemetryFrame::Status(StatusFrame {
            battery_mv: rng.random(),
            flags: rng.random(),
        }),
        2 => TelemetryFrame::CmdStart,
        3 => TelemetryFrame::CmdStop,
        4 => TelemetryFrame::CmdConfig(ConfigFrame {
            sample_hz: rng.random(),
            avg_n: rng.random(),
            ma_window: rng.random(),
        }),
        _ => TelemetryFrame::Ack(AckFrame {
            cmd: rng.random(),
            status: rng.random(),
        }),
    }
}

fn protocol() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let frames: Vec<_> = (0..10_000).map(|_| random_frame(&mut rng)).collect();
    let single = frames.iter().all(|f| {
        let d = decode(&encode(f));
        d.frames == [*f] && d.diagnostics.is_empty()
    });
    let stream: Vec<u8> = frames.iter().flat_map(encode).collect();
    let joined = decode(&stream);
    let round_trip = single && joined.frames == frames && joined.diagnostics.is_empty();

    let samples = [
        TelemetryFrame::Data(DataFrame {
            seq: 1,
            t_ms: 100,
            ph_raw: 2048,
            temp_raw: 2099,
        }),
        TelemetryFrame::Status(StatusFrame {
            battery_mv: 4150,
            flags: 0x06,
        }),
        TelemetryFrame::CmdStart,
        TelemetryFrame::CmdStop,
        TelemetryFrame::CmdConfig(ConfigFrame {
            sample_hz: 100,
            avg_n: 10,
            ma_window: 5,
        }),
        TelemetryFrame::Ack(AckFrame {
            cmd: 0x10,
            status: 0,
        }),
    ];
    let mut flips = 0;
    let mut accepted = 0;
    for f in &samples {
        let bytes = encode(f);
        for bit in 0..bytes.len() * 8 {
            let mut b = bytes.clone();
            b[bit / 8] ^= 1 << (bit % 8);
            let d = decode(&b);
            flips += 1;
            if !d.frames.is_empty() || d.diagnostics.is_empty() {
                accepted += 1;
            }
        }
    }
    let crc = crc16_ccitt(b"123456789");
    check(
        "Protocol properties",
        round_trip && accepted == 0 && crc == 0x29B1,
        format!(
            "10000 random frames round-trip: {round_trip}; {flips} single-bit flips over 6 frame types, {accepted} accepted; CRC(\"123456789\") = 0x{crc:04X}"
        ),
    )
}

fn rate(run: &SimRun) -> Outcome {
    let t: Vec<u32> = run.session.samples().map(|r| r.t_ms).collect();
    let spacing = t.first() == Some(&100) && t.windows(2).all(|w| w[1] - w[0] == 100);
    let expected = Scenario::fig2().duration_ms() / 100;
    let count_ok =
        t.len() as u64 == u64::from(expected) && run.truth.frames_sent == u64::from(expected);

    let mut lossy = Scenario::fig2();
    lossy.link.drop_prob = 0.1;
    let l = Rig::run(&lossy).unwrap();
    let stored = l.session.stored_count() as u64;
    let missing = l.session.missing_count();
    let gap_events = l.session.gaps().count();
    let balanced = stored + missing == l.truth.frames_sent - l.truth.tail_dropped;
    check(
        "Rate invariant and gap accounting",
        spacing && count_ok && balanced && l.truth.tail_dropped == 0,
        format!(
            "{} frames, all 100 ms apart: {spacing}; lossy run: {stored} stored + {missing} missing in {gap_events} gap events = {} of {} sent (tail losses {})",
            t.len(),
            stored + missing,
            l.truth.frames_sent,
            l.truth.tail_dropped
        ),
    )
}

fn determinism(first: &(SimRun, Metrics)) -> Outcome {
    let again = Rig::run(&Scenario::fig2()).unwrap();
    let a = first.0.session.export(ExportFormat::Jsonl);
    let b = again.session.export(ExportFormat::Jsonl);
    let m1 = first.1.to_json();
    let m2 = analyze(&again.session, &AnalysisOptions::default())
        .unwrap()
        .to_json();
    check(
        "Determinism",
        a == b && m1 == m2,
        format!(
            "export {} bytes identical: {}; metrics identical: {}",
            a.len(),
            a == b,
            m1 == m2
        ),
    )
}

fn wall_time() -> Outcome {
    let t0 = Instant::now();
    let run = Rig::run(&Scenario::fig2()).unwrap();
    let bytes = run.session.export(ExportFormat::Jsonl);
    let m = analyze(&run.session, &AnalysisOptions::default()).unwrap();
    let elapsed = t0.elapsed();
    check(
        "Five-hour scenario wall time",
        elapsed < Duration::from_secs(30) && !bytes.is_empty() && m.samples > 0,
        format!(
            "simulate + export + analyze in {:.2} s (limit 30 s)",
            elapsed.as_secs_f64()
        ),
    )
}

#[test]
fn acceptance() {
    let wall = wall_time();
    let runs = fig2_runs();
    let seed1 = &runs[0];
    let results = [
        eq1(),
        table_i(),
        fig2(&seed1.1),
        sensitivity(&seed1.1),
        response(&runs),
        stability(&runs),
        protocol(),
        rate(&seed1.0),
        determinism(seed1),
        wall,
    ];
    println!();
    for r in &results {
        println!(
            "{} {}: {}",
            if r.pass { "PASS" } else { "FAIL" },
            r.name,
            r.detail
        );
    }
    let failed: Vec<_> = results.iter().filter(|r| !r.pass).map(|r| r.name).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
