// SPDX-License-Identifier: Apache-2.0

//! Acceptance checks A1-A9. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails. Set `BITTIDE_FULL_TORUS=1` to also run the
//! 22x22x22 torus.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use bittide_core::buffers::{
    ddc_occupancy, extend, gray_decode, gray_encode, reframe, sample_gray, DdcOccupancy,
    ExtendedCounter, WrappingCounter,
};
use bittide_core::clock::Direction;
use bittide_core::controller::{decide, ControllerState};
use bittide_core::engine::{
    convergence_stats, discrete_oracle, rtt_logical_latency, simulate, Mode, SimConfig, Telemetry,
};
use bittide_core::harness::{suite_config, Scale};
use bittide_core::topology::{generate, TopologyKind, DEFAULT_LINK_LATENCY};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn timed_run(cfg: &SimConfig) -> Result<(Telemetry, Duration), String> {
    let start = Instant::now();
    let tel = simulate(cfg).map_err(|e| e.to_string())?;
    Ok((tel, start.elapsed()))
}

fn a1() -> Outcome {
    let cfg = suite_config("fully_connected", Scale::Desk).map_err(|e| e.to_string())?;
    let (tel, wall) = timed_run(&cfg.sim)?;
    let stats = convergence_stats(&tel, 1.0, &[]);
    let ttb = stats.time_to_band.ok_or("spread never settled below 1 ppm")?;
    let last = *stats.times.last().unwrap();
    let detail = format!(
        "converged at {ttb:.2} s, held {:.2} s, final spread {:.3} ppm, {:.1} s wall clock",
        last - ttb,
        stats.final_spread,
        wall.as_secs_f64()
    );
    if last - ttb < 2.0 {
        return Err(format!("{detail}: fewer than 2 s observed past convergence"));
    }
    if wall > Duration::from_secs(60) {
        return Err(format!("{detail}: over the 60 s budget"));
    }
    Ok(detail)
}

fn a2() -> Outcome {
    let cfg = suite_config("realistic", Scale::Desk).map_err(|e| e.to_string())?;
    let (tel, wall) = timed_run(&cfg.sim)?;
    let stats = convergence_stats(&tel, 1.0, &[]);
    let ttb = stats.time_to_band.ok_or("spread never settled below 1 ppm")?;
    let detail = format!(
        "below 1 ppm from {:.0} ms, {:.1} s wall clock",
        ttb * 1e3,
        wall.as_secs_f64()
    );
    if ttb > 0.6 || wall > Duration::from_secs(30) {
        return Err(detail);
    }
    Ok(detail)
}

fn a3() -> Outcome {
    let cfg = suite_config("long_link", Scale::Desk).map_err(|e| e.to_string())?;
    let (tel, _) = timed_run(&cfg.sim)?;
    let n = tel.n_nodes;
    let rtt = |i, j| rtt_logical_latency(&tel, i, j).map_err(|e| e.to_string());
    let long = rtt(0, 2)?;
    let mut others = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            if rtt(i, j)? != rtt(j, i)? {
                return Err(format!("rtt({i},{j}) != rtt({j},{i})"));
            }
            if (i, j) != (0, 2) && (i, j) != (2, 0) {
                others.push(rtt(i, j)?);
            }
        }
    }
    let lo = *others.iter().min().unwrap();
    let hi = *others.iter().max().unwrap();
    let detail = format!("long rtt {long}, others {lo}..{hi}, increase {}..{}", long - hi, long - lo);
    if lo < 67 || hi > 70 {
        return Err(format!("{detail}: short links outside 67-70"));
    }
    if (long - hi - 1230).abs() > 10 || (long - lo - 1230).abs() > 10 {
        return Err(format!("{detail}: increase outside 1230 +- 10"));
    }
    Ok(detail)
}

fn oracle_config(n: usize, mode: Mode, seed: u64, duration: f64) -> SimConfig {
    let topo = generate(&TopologyKind::Complete { n }, DEFAULT_LINK_LATENCY).unwrap();
    let mut cfg = SimConfig::new(topo).realistic();
    cfg.mode = mode;
    cfg.seed = seed;
    cfg.duration = duration;
    cfg.cadence = 1e-4;
    cfg
}

fn a4() -> Outcome {
    let mut min_frames = u64::MAX;
    for n in [2, 3] {
        for mode in [Mode::Ddc, Mode::Elastic] {
            let cfg = oracle_config(n, mode, 11, 1e-3);
            let tel = discrete_oracle(&cfg).map_err(|e| e.to_string())?;
            for (e, ledger) in tel.ledger.iter().enumerate() {
                min_frames = min_frames.min(ledger.frames());
                let lambdas = ledger.lambdas();
                if lambdas.len() != 1 {
                    return Err(format!("{mode} complete({n}) link {e}: latencies {lambdas:?}"));
                }
                if lambdas[0] != tel.links[e].lambda {
                    return Err(format!("link {e}: ledger {} vs model {}", lambdas[0], tel.links[e].lambda));
                }
            }
        }
    }
    if min_frames < 100_000 {
        return Err(format!("only {min_frames} frames on some link"));
    }
    let mut cfg = oracle_config(3, Mode::DdcThenReframe, 5, 1.5e-3);
    cfg.reframe_at = Some(0.5e-3);
    let tel = discrete_oracle(&cfg).map_err(|e| e.to_string())?;
    for r in &tel.reframes {
        let lambdas = tel.ledger[r.link].lambdas();
        if lambdas.len() != 2 || lambdas[1] - lambdas[0] != r.lambda_delta {
            return Err(format!(
                "link {} after reframe: latencies {lambdas:?}, reported shift {}",
                r.link, r.lambda_delta
            ));
        }
    }
    Ok(format!(
        "one latency per link over >= {min_frames} frames; {} reframed links shifted by their reported delta",
        tel.reframes.len()
    ))
}

fn a5() -> Outcome {
    let mut instants = 0usize;
    let mut cases = Vec::new();
    for n in [2, 3, 4] {
        for mode in [Mode::Ddc, Mode::Elastic] {
            cases.push((n, mode, false, 0));
        }
    }
    cases.push((3, Mode::Ddc, true, 0));
    cases.push((3, Mode::Ddc, false, 40));
    for (i, (n, mode, emulate, delay)) in cases.into_iter().enumerate() {
        let mut cfg = oracle_config(n, mode, 100 + i as u64, 0.01);
        cfg.record_measurements = true;
        cfg.buffers.emulate_counters = emulate;
        cfg.controller.delay_ticks = delay;
        if mode == Mode::Elastic {
            // Real buffers only hold 32 frames; start close to agreement.
            cfg.clock.offset_bound_ppm = 1.0;
        }
        let model = simulate(&cfg).map_err(|e| e.to_string())?;
        let oracle = discrete_oracle(&cfg).map_err(|e| e.to_string())?;
        if model.measurements.len() != oracle.measurements.len() {
            return Err(format!("complete({n}) {mode}: measurement counts differ"));
        }
        for (a, b) in model.measurements.iter().zip(&oracle.measurements) {
            if a.occupancies != b.occupancies {
                return Err(format!(
                    "complete({n}) {mode} node {} k {}: model {:?} oracle {:?}",
                    a.node, a.k, a.occupancies, b.occupancies
                ));
            }
        }
        if model.occupancy != oracle.occupancy {
            return Err(format!("complete({n}) {mode}: sampled occupancies differ"));
        }
        instants += model.measurements.len();
    }
    Ok(format!("{instants} measurement instants identical across 8 configurations"))
}

fn a6() -> Outcome {
    let cfg = suite_config("hourglass", Scale::Desk).map_err(|e| e.to_string())?;
    let (tel, _) = timed_run(&cfg.sim)?;
    let stats = convergence_stats(&tel, 1.0, &cfg.partition);
    let global = stats.time_to_band.ok_or("global spread never below 1 ppm")?;
    let mut parts = Vec::new();
    for g in &stats.groups {
        let t = g.time_to_band.ok_or(format!("clique {:?} never below 1 ppm", g.nodes))?;
        if t >= global {
            return Err(format!("clique {:?} at {t:.2} s, global at {global:.2} s", g.nodes));
        }
        parts.push(format!("{t:.2}"));
    }
    Ok(format!("cliques below 1 ppm at {} s, whole network at {global:.2} s", parts.join(", ")))
}

fn settles_monotonically(cfg: &SimConfig, transient: f64) -> Outcome {
    let (tel, wall) = timed_run(cfg)?;
    let stats = convergence_stats(&tel, 1.0, &[]);
    let slack = 2.0 * cfg.clock.step_ppm;
    let mut envelope = f64::INFINITY;
    for (t, s) in stats.times.iter().zip(&stats.spread) {
        if *t < transient {
            continue;
        }
        if *s > envelope + slack {
            return Err(format!("spread rose to {s:.3} ppm at {t:.2} s (running min {envelope:.3})"));
        }
        envelope = envelope.min(*s);
    }
    let bound = 2.0 * cfg.clock.step_ppm + 1.0;
    let detail = format!(
        "{} nodes, final spread {:.3} ppm (bound {bound}), {:.1} s wall clock",
        tel.n_nodes,
        stats.final_spread,
        wall.as_secs_f64()
    );
    if stats.final_spread > bound {
        return Err(detail);
    }
    Ok(detail)
}

fn a7() -> Outcome {
    let cfg = suite_config("torus", Scale::Desk).map_err(|e| e.to_string())?;
    let mut detail = settles_monotonically(&cfg.sim, 0.1)?;
    if std::env::var_os("BITTIDE_FULL_TORUS").is_some() {
        let full = suite_config("torus", Scale::Full).map_err(|e| e.to_string())?;
        let (tel, wall) = timed_run(&full.sim)?;
        detail.push_str(&format!(
            "; 22^3 ran fault-free in {:.0} s",
            wall.as_secs_f64()
        ));
        drop(tel);
    } else {
        detail.push_str("; 22^3 not run (set BITTIDE_FULL_TORUS=1)");
    }
    Ok(detail)
}

fn a8() -> Outcome {
    for bits in 1..=16u32 {
        let size = 1u64 << bits;
        for x in 0..size {
            let g = gray_encode(x);
            if gray_decode(g) != x || g >= size {
                return Err(format!("round trip fails at {x} ({bits} bits)"));
            }
            let next = gray_encode((x + 1) % size);
            if (g ^ next).count_ones() != 1 {
                return Err(format!("codes {x} and {} differ in more than one bit", x + 1));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for bits in [2u32, 3, 6, 12] {
        let mut wrap = WrappingCounter::new(bits).unwrap();
        let mut ext = ExtendedCounter::new(bits).unwrap();
        let mut truth = 0u64;
        let limit = 1u64 << (bits - 1);
        for step in 0..1_000_000 {
            let adv = rng.gen_range(0..limit);
            truth += adv;
            wrap.set(truth);
            let mid = adv > 0 && rng.gen_bool(0.1);
            let low = gray_decode(sample_gray(&wrap, mid, &mut rng));
            ext = extend(ext, low).map_err(|e| e.to_string())?;
            let expected = if low == wrap.value() { truth } else { truth - 1 };
            if ext.extended() != expected {
                return Err(format!(
                    "{bits}-bit extension at step {step}: {} vs {expected}",
                    ext.extended()
                ));
            }
            if low != wrap.value() {
                // The next clean sample must recover the true count.
                ext = extend(ext, wrap.value()).map_err(|e| e.to_string())?;
                if ext.extended() != truth {
                    return Err(format!("{bits}-bit extension did not recover at step {step}"));
                }
            }
        }
    }
    let at = |rx: u64, tx: u64| ddc_occupancy(ExtendedCounter::from_count(6, rx), ExtendedCounter::from_count(6, tx)).value();
    let checks = [
        (at(100, 100), 0),
        (at(105, 100), 5),
        (at(100, 105), -5),
        (at((1 << 40) + 7, 1 << 40), 7),
        (at(1 << 32, 0), 0),
        (at((1 << 31) - 1, 0), i32::MAX),
        (at(1 << 31, 0), i32::MIN),
    ];
    if let Some((got, want)) = checks.iter().find(|(g, w)| g != w) {
        return Err(format!("ddc occupancy {got}, expected {want}"));
    }
    let r = reframe(DdcOccupancy(0), 16, 32).map_err(|e| e.to_string())?;
    if r.buffer.occupancy() != 16 || r.lambda_delta != 16 {
        return Err("zero does not map to a half-full buffer".into());
    }
    Ok("Gray exhaustive to 16 bits, 4 x 10^6 extension steps exact, signed 32-bit mapping".into())
}

fn a9() -> Outcome {
    for step in [0.01, 0.1] {
        for c_rel in [0.0, 0.005, 0.3, -0.3, 1.0, -2.37, 5.55, 17.0] {
            let mut state = ControllerState::default();
            let need = (f64::abs(c_rel) / step - 1e-9).ceil() as usize;
            let mut history = Vec::new();
            for _ in 0..need + 200 {
                let dir = decide(c_rel, &state);
                state = state.commit(dir, step);
                history.push(state.c_est_ppm());
            }
            let reached = if need == 0 {
                (state.c_est_ppm() - c_rel).abs() <= step
            } else {
                (history[need - 1] - c_rel).abs() <= step + 1e-9
            };
            if !reached {
                return Err(format!("c_rel {c_rel}: not within one step after {need} samples"));
            }
            let tail = &history[need.max(1) - 1..];
            let lo = tail.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if hi - lo > step + 1e-9 || tail.iter().any(|v| (v - c_rel).abs() > step + 1e-9) {
                return Err(format!("c_rel {c_rel}: tail swings {lo}..{hi}"));
            }
        }
    }
    let state = ControllerState::default();
    if decide(0.0, &state) != Direction::Hold {
        return Err("zero demand should hold".into());
    }
    Ok("reaches within f_s in ceil(|c_rel|/f_s) samples, then dithers within f_s".into())
}

fn main() -> ExitCode {
    let criteria: [(&str, &str, fn() -> Outcome); 9] = [
        ("A1", "frequency alignment, complete(8), slow gain", a1),
        ("A2", "realistic settings converge within 600 ms", a2),
        ("A3", "long link round trip", a3),
        ("A4", "logical latency constancy", a4),
        ("A5", "model equals frame oracle", a5),
        ("A6", "hourglass cliques settle first", a6),
        ("A7", "torus convergence", a7),
        ("A8", "counters and Gray coding", a8),
        ("A9", "quantized tracking", a9),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (id, what, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| f == id) {
            continue;
        }
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("{id} PASS {what}: {detail} [{secs:.1} s]"),
            Err(detail) => {
                failed += 1;
                println!("{id} FAIL {what}: {detail} [{secs:.1} s]");
            }
        }
    }
    if failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
