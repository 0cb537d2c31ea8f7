use std::fmt::Write as _;

use serde_json::json;

use super::{
    io_err, CalibrateArgs, CliError, Context, FsaArgs, LimArgs, LockArgs, MvlAddArgs, Outcome, PufArgs, TrngArgs,
};
use crate::device::LevelConfig;
use crate::limc::{
    emit_spice, execute_schedule, input_vector, logical_sim, parse_netlist, schedule_with, tech_map_with, TechMapConfig,
};
use crate::mvl::{adder_cells, run_automaton, ternary_add, AutomatonConfig, TritVector};
use crate::sec::{
    calibrate_trng, crp_csv, lock_with_puf, pack_bits, puf_metrics, randomness_tests, schedule_challenge, trng_stream,
    unlock_with_puf, Challenge, LockedWeights, Mlp, PufInstance, MIN_TEST_BITS,
};
use crate::seed;
use crate::xbar::{calibrate_templates, energy_report, Crossbar, ExecutionTrace, Phase, MAX_COLS};

const MAX_EXHAUSTIVE_INPUTS: usize = 10;

fn bit_string(bits: &[bool]) -> String {
    bits.iter().map(|b| if *b { '1' } else { '0' }).collect()
}

fn parse_bits(s: &str, n: usize) -> Result<Vec<bool>, CliError> {
    let bits: Option<Vec<bool>> = s
        .chars()
        .map(|c| match c {
            '0' => Some(false),
            '1' => Some(true),
            _ => None,
        })
        .collect();
    match bits {
        Some(b) if b.len() == n => Ok(b),
        _ => Err(CliError::Usage(format!(
            "--inputs must be {n} characters of 0/1, got `{s}`"
        ))),
    }
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn outcome(ok: bool) -> Outcome {
    if ok {
        Outcome::Pass
    } else {
        Outcome::Fail
    }
}

fn pretty(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).expect("json serializes") + "\n"
}

pub fn lim(ctx: &Context, args: &LimArgs) -> Result<Outcome, CliError> {
    let cfg = &ctx.cfg;
    let text = std::fs::read_to_string(&args.blif).map_err(|e| io_err(&args.blif, e))?;
    let net = parse_netlist(&text)?;
    let graph = tech_map_with(
        &net,
        &TechMapConfig {
            max_fanout: cfg.lim.max_fanout,
        },
    )?;
    let (rows, cols) = (cfg.lim.rows, cfg.lim.cols);
    let sched = schedule_with(&graph, rows, cols, &cfg.templates, &cfg.xbar)?;
    let n = net.inputs.len();
    let vectors: Vec<Vec<bool>> = if args.exhaustive {
        if n > MAX_EXHAUSTIVE_INPUTS {
            return Err(CliError::Usage(format!(
                "--exhaustive supports at most {MAX_EXHAUSTIVE_INPUTS} inputs, netlist has {n}"
            )));
        }
        (0..1u64 << n).map(|k| input_vector(k, n)).collect()
    } else {
        vec![parse_bits(args.inputs.as_deref().unwrap_or_default(), n)?]
    };

    let mut xb = Crossbar::with_config(
        rows,
        cols,
        cfg.device,
        cfg.variation,
        seed::split(ctx.seed, "lim", 0),
        cfg.xbar,
    )?;
    xb.set_templates(cfg.templates);
    xb.set_recording(false);
    let mut merged = ExecutionTrace::new(rows, cols);
    let mut table = String::from("vector,inputs,outputs,expected,match\n");
    let mut mismatches = 0;
    println!(
        "{}: {} inputs, {} outputs, {} cells on {rows}x{cols}",
        net.model,
        n,
        net.outputs.len(),
        sched.cells_used()
    );
    println!("inputs {} -> outputs {}", net.inputs.join(" "), net.outputs.join(" "));
    for (k, bits) in vectors.iter().enumerate() {
        let (got, tr) = execute_schedule(&mut xb, &sched, bits)?;
        let want = logical_sim(&net, bits)?;
        let ok = got == want;
        mismatches += !ok as usize;
        merged.merge(&tr);
        let _ = writeln!(
            table,
            "{k},{},{},{},{}",
            bit_string(bits),
            bit_string(&got),
            bit_string(&want),
            ok as u8
        );
        if vectors.len() <= 64 {
            println!(
                "{} -> {}{}",
                bit_string(bits),
                bit_string(&got),
                if ok { "" } else { " (mismatch)" }
            );
        }
    }
    let rep = energy_report(&merged);
    let identity = rep.identity_error();
    println!(
        "energy: total {:.6e} J, init {:.6e} J, evaluate {:.6e} J, identity error {:.2e}",
        rep.total,
        rep.phase(Phase::Init),
        rep.phase(Phase::Evaluate),
        identity
    );
    println!(
        "truth table: {} ({mismatches} mismatches over {} vectors)",
        verdict(mismatches == 0),
        vectors.len()
    );

    let stem: String = net
        .model
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '_' || c == '-' {
                c
            } else {
                '_'
            }
        })
        .collect();
    let stem = if stem.is_empty() { "circuit".to_string() } else { stem };
    ctx.write("outputs.csv", table)?;
    ctx.write(&format!("{stem}.sp"), emit_spice(&sched, &vectors[0], &cfg.device)?)?;
    ctx.write("schedule.json", pretty(&sched.to_json()))?;
    ctx.write("energy.csv", merged.energy_csv())?;
    let phases: serde_json::Map<String, serde_json::Value> = Phase::ALL
        .iter()
        .map(|p| (p.as_str().to_string(), json!(rep.phase(*p))))
        .collect();
    ctx.write(
        "energy_summary.json",
        pretty(&json!({
            "vectors": vectors.len(),
            "total": rep.total,
            "per_phase": phases,
            "identity_error": identity,
        })),
    )?;
    Ok(outcome(mismatches == 0 && identity <= 1e-9))
}

fn significant(t: &TritVector) -> usize {
    t.digits().iter().rposition(|d| *d != 0).map_or(1, |i| i + 1)
}

pub fn mvl_add(ctx: &Context, args: &MvlAddArgs) -> Result<Outcome, CliError> {
    let cfg = &ctx.cfg;
    let (a, b) = match args.trits {
        Some(n) => (TritVector::parse(&args.a, n)?, TritVector::parse(&args.b, n)?),
        None => {
            let a = TritVector::parse(&args.a, 41)?;
            let b = TritVector::parse(&args.b, 41)?;
            let n = significant(&a).max(significant(&b));
            (
                TritVector::new(a.digits()[..n].to_vec())?,
                TritVector::new(b.digits()[..n].to_vec())?,
            )
        }
    };
    let n = a.len();
    let cells = adder_cells(n);
    let cols = cells.min(MAX_COLS);
    let rows = cells.div_ceil(cols);
    let mut xb = Crossbar::with_config(
        rows,
        cols,
        cfg.device,
        cfg.variation,
        seed::split(ctx.seed, "mvl", 0),
        cfg.xbar,
    )?;
    xb.set_recording(false);
    let sum = ternary_add(&mut xb, &a, &b, &cfg.levels())?;
    let oracle = a.to_u128().zip(b.to_u128()).and_then(|(x, y)| x.checked_add(y));
    let got = sum.to_u128();
    let ok = oracle.is_none() || oracle == got;
    let shown = sum.to_string();
    let trimmed = shown.trim_start_matches('0');
    let base3 = if trimmed.is_empty() { "0" } else { trimmed };
    let decimal = got.map_or_else(|| "overflow".to_string(), |v| v.to_string());
    println!("{n} trits, {cells} cells on {rows}x{cols}");
    println!("sum (base 3): {base3}");
    println!("sum (decimal): {decimal}");
    if !ok {
        println!("integer oracle: {} (mismatch)", oracle.unwrap_or_default());
    }
    ctx.write(
        "mvl_add.json",
        pretty(&json!({
            "a": a.to_string(),
            "b": b.to_string(),
            "trits": n,
            "cells": cells,
            "sum_base3": base3,
            "sum_decimal": decimal,
            "oracle_match": ok,
        })),
    )?;
    Ok(outcome(ok))
}

pub fn fsa(ctx: &Context, args: &FsaArgs) -> Result<Outcome, CliError> {
    let cfg = &ctx.cfg;
    if args.runs == 0 {
        return Err(CliError::Usage("--runs must be >= 1".into()));
    }
    let ladder = cfg.levels();
    let need = 2 * args.depth;
    let levels = if ladder.n_levels >= need {
        ladder
    } else {
        LevelConfig::calibrate(&cfg.device, need, ladder.pulses)?
    };
    let acfg = AutomatonConfig::new(args.depth, args.c1, args.c2);
    let window = args.steps.min(1000);
    let mut table = String::from("run,seed,action1_frequency,action2_frequency,misdetections\n");
    let mut mean = 0.0;
    let mut first = None;
    for k in 0..args.runs {
        let s = seed::split(ctx.seed, "fsa", k as u64);
        let run = run_automaton(&acfg, &levels, &cfg.device, &cfg.variation, args.steps, s)?;
        let f = run.action1_frequency(window);
        mean += f / args.runs as f64;
        let _ = writeln!(table, "{k},{s},{f},{},{}", 1.0 - f, run.misdetections);
        first.get_or_insert(run);
    }
    let first = first.expect("runs >= 1");
    println!(
        "depth {} c1 {} c2 {}: {} runs x {} steps on a {}-level ladder",
        args.depth, args.c1, args.c2, args.runs, args.steps, levels.n_levels
    );
    println!(
        "action frequencies over the last {window} steps: {mean:.4} / {:.4}",
        1.0 - mean
    );
    println!("misdetections in run 0: {}", first.misdetections);
    ctx.write("trajectory.csv", first.to_csv())?;
    ctx.write("fsa_runs.csv", table)?;
    Ok(Outcome::Pass)
}

pub fn trng(ctx: &Context, args: &TrngArgs) -> Result<Outcome, CliError> {
    let cfg = &ctx.cfg;
    let h = &cfg.harness;
    let mut tcfg = cfg.trng;
    tcfg.debias |= args.debias;
    let (r, c) = tcfg.cell;
    let mut xb = Crossbar::with_config(
        r + 1,
        c + 1,
        cfg.device,
        cfg.variation,
        seed::split(ctx.seed, "trng", 0),
        cfg.xbar,
    )?;
    xb.set_recording(false);
    if args.calibrate {
        let cal = calibrate_trng(
            &mut xb,
            &tcfg,
            h.calibration_trials,
            h.calibration_tol,
            h.calibration_max_iter,
        )?;
        println!(
            "calibrated amplitude {:.6} V (p = {:.4}, {} probes)",
            cal.amplitude, cal.p, cal.iterations
        );
        tcfg.pulse_amplitude = cal.amplitude;
    }
    let out = trng_stream(&mut xb, args.bits, &tcfg)?;
    let ones = out.bits.iter().filter(|b| **b).count();
    let len = out.bits.len();
    let bias = if len == 0 { 0.0 } else { ones as f64 / len as f64 - 0.5 };
    println!(
        "{} raw trials -> {} bits (debias {})",
        out.raw,
        len,
        if tcfg.debias { "on" } else { "off" }
    );
    println!("bias: {bias:+.5}");
    let mut stats = String::from("raw_bits,output_bits,ones,bias,monobit_z,runs_z,alpha,monobit_pass,runs_pass\n");
    let ok = if len >= MIN_TEST_BITS {
        let t = randomness_tests(&out.bits, h.alpha)?;
        println!("monobit z {:+.4} {}", t.monobit_z, verdict(t.monobit_pass));
        println!("runs z {:+.4} {}", t.runs_z, verdict(t.runs_pass));
        let _ = writeln!(
            stats,
            "{},{len},{ones},{bias},{},{},{},{},{}",
            out.raw, t.monobit_z, t.runs_z, t.alpha, t.monobit_pass as u8, t.runs_pass as u8
        );
        t.monobit_pass && t.runs_pass
    } else {
        println!("tests skipped: {len} bits, need {MIN_TEST_BITS}");
        let _ = writeln!(stats, "{},{len},{ones},{bias},,,{},,", out.raw, h.alpha);
        true
    };
    ctx.write("trng.bin", pack_bits(&out.bits))?;
    ctx.write("trng_stats.csv", stats)?;
    Ok(outcome(ok))
}

pub fn puf(ctx: &Context, args: &PufArgs) -> Result<Outcome, CliError> {
    let cfg = &ctx.cfg;
    let h = &cfg.harness;
    if args.challenges == 0 {
        return Err(CliError::Usage("--challenges must be >= 1".into()));
    }
    let schedule_id = seed::split(ctx.seed, "puf-schedule", 0);
    let challenges: Vec<Challenge> = (0..args.challenges as u64)
        .map(|k| schedule_challenge(schedule_id, k, cfg.puf.challenge_len))
        .collect();
    let mut chips = (0..args.chips as u64)
        .map(|i| {
            PufInstance::new(
                seed::split(ctx.seed, "puf-chip", i),
                &cfg.device,
                &cfg.variation,
                &cfg.puf,
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut crps = Vec::with_capacity(chips.len() * challenges.len());
    let mut grade = 0;
    for (i, chip) in chips.iter_mut().enumerate() {
        grade += chip.health(&challenges[0])?.puf_grade as usize;
        for c in &challenges {
            crps.push((i, c.clone(), chip.response(c)?));
        }
    }
    let m = puf_metrics(&mut chips, &challenges, args.reads)?;
    let [lo, hi] = h.metric_band;
    let checks = [
        ("uniqueness", m.uniqueness, (lo..=hi).contains(&m.uniqueness)),
        (
            "uniformity",
            m.mean_uniformity(),
            (lo..=hi).contains(&m.mean_uniformity()),
        ),
        (
            "reliability",
            m.mean_reliability(),
            m.mean_reliability() >= h.min_reliability,
        ),
    ];
    println!(
        "{} chips, {} challenges, {}-bit responses, m = {}; {grade} PUF-grade",
        args.chips, args.challenges, cfg.puf.response_len, args.reads
    );
    for (name, v, ok) in checks {
        println!("{name} {v:.3}% {}", verdict(ok));
    }
    ctx.write("crp.csv", crp_csv(&crps))?;
    ctx.write(
        "puf_metrics.json",
        pretty(&json!({
            "chips": args.chips,
            "challenges": args.challenges,
            "response_len": cfg.puf.response_len,
            "rereads": args.reads,
            "schedule_id": schedule_id,
            "puf_grade_chips": grade,
            "mean_uniformity": m.mean_uniformity(),
            "uniqueness": m.uniqueness,
            "mean_reliability": m.mean_reliability(),
            "uniformity": m.uniformity,
            "reliability": m.reliability,
            "bit_aliasing": m.bit_aliasing,
        })),
    )?;
    Ok(outcome(checks.iter().all(|c| c.2)))
}

fn read_weights(path: &std::path::Path) -> Result<(Vec<u8>, Vec<usize>), CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    let bad = || {
        CliError::Usage(format!(
            "{}: expected an array of levels or an object with `levels`",
            path.display()
        ))
    };
    let (levels, shape) = match &v {
        serde_json::Value::Array(_) => (&v, None),
        serde_json::Value::Object(o) => (o.get("levels").ok_or_else(bad)?, o.get("shape")),
        _ => return Err(bad()),
    };
    let levels: Vec<u8> = serde_json::from_value(levels.clone()).map_err(|_| bad())?;
    let shape: Vec<usize> = match shape {
        Some(s) => serde_json::from_value(s.clone()).map_err(|_| bad())?,
        None => vec![levels.len()],
    };
    Ok((levels, shape))
}

pub fn lock(ctx: &Context, args: &LockArgs) -> Result<Outcome, CliError> {
    let cfg = &ctx.cfg;
    let mut chip = PufInstance::new(args.chip_seed, &cfg.device, &cfg.variation, &cfg.puf)?;
    if let Some(path) = &args.unlock {
        let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        let locked: LockedWeights = serde_json::from_str(&text).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        let levels = unlock_with_puf(&locked, &mut chip)?;
        println!("unlocked {} levels with chip {}", levels.len(), args.chip_seed);
        ctx.write(
            "unlocked_weights.json",
            pretty(&json!({ "shape": locked.shape, "levels": levels })),
        )?;
        return Ok(Outcome::Pass);
    }
    let demo = Mlp::demo();
    let (levels, shape) = match &args.weights {
        Some(p) => read_weights(p)?,
        None => (demo.levels.clone(), demo.shape()),
    };
    let locked = lock_with_puf(&levels, &shape, &mut chip, args.schedule_id)?;
    let back = unlock_with_puf(&locked, &mut chip)?;
    let exact = back == levels;
    let changed = locked.levels.iter().zip(&levels).filter(|(a, b)| a != b).count();
    println!(
        "locked {} levels with chip {}; {changed} changed",
        levels.len(),
        args.chip_seed
    );
    println!("same-chip unlock {}", verdict(exact));
    let mut report = json!({
        "chip_seed": args.chip_seed,
        "schedule_id": args.schedule_id,
        "weights": levels.len(),
        "changed_by_lock": changed,
        "round_trip_exact": exact,
    });
    if args.weights.is_none() {
        let data = crate::sec::demo_dataset(1000, seed::split(ctx.seed, "lock-data", 0));
        let wrong_seed = seed::split(ctx.seed, "lock-wrong-chip", 0);
        let mut wrong = PufInstance::new(wrong_seed, &cfg.device, &cfg.variation, &cfg.puf)?;
        let wrong_levels = unlock_with_puf(&locked, &mut wrong)?;
        let clean = demo.accuracy(&data)?;
        let right = demo.with_levels(back)?.accuracy(&data)?;
        let garbled = demo.with_levels(wrong_levels)?.accuracy(&data)?;
        println!("demo accuracy: original {clean:.3}, same chip {right:.3}, chip {wrong_seed} {garbled:.3}");
        report["accuracy"] =
            json!({ "original": clean, "same_chip": right, "wrong_chip": garbled, "wrong_chip_seed": wrong_seed });
    }
    ctx.write(
        "locked_weights.json",
        pretty(&serde_json::to_value(&locked).expect("serializes")),
    )?;
    ctx.write("lock_report.json", pretty(&report))?;
    Ok(outcome(exact))
}

#[derive(serde::Serialize)]
struct Calibration {
    levels: LevelConfig,
    templates: crate::xbar::GateTemplates,
    trng: crate::sec::TrngConfig,
}

pub fn calibrate(ctx: &Context, args: &CalibrateArgs) -> Result<Outcome, CliError> {
    let cfg = &ctx.cfg;
    let h = &cfg.harness;
    let levels = LevelConfig::calibrate(&cfg.device, args.levels, cfg.levels().pulses)?;
    println!(
        "levels: {} targets, RESET amplitudes {:?}",
        levels.n_levels, levels.reset_amplitudes
    );
    let cal = calibrate_templates(&cfg.device, &cfg.variation, &cfg.xbar, &cfg.templates)?;
    let templates = cal.templates;
    println!(
        "templates: NOR {:.2} V x {:e} s with a {:.0} ohm load ({} sigma corners), COPY {:.2} V x {:e} s ({} sigma corners)",
        templates.nor_voltage,
        templates.nor_width,
        templates.nor_load_ohms,
        cal.nor_sigmas,
        templates.copy_voltage,
        templates.copy_width,
        cal.copy_sigmas
    );
    let mut trng = cfg.trng;
    let (r, c) = trng.cell;
    let mut xb = Crossbar::with_config(
        r + 1,
        c + 1,
        cfg.device,
        cfg.variation,
        seed::split(ctx.seed, "calibrate-trng", 0),
        cfg.xbar,
    )?;
    xb.set_recording(false);
    let cal = calibrate_trng(
        &mut xb,
        &trng,
        h.calibration_trials,
        h.calibration_tol,
        h.calibration_max_iter,
    )?;
    trng.pulse_amplitude = cal.amplitude;
    println!(
        "trng: {:.6} V for p = {} (measured {:.4})",
        cal.amplitude, trng.target_p, cal.p
    );
    let doc = toml::to_string(&Calibration {
        levels,
        templates,
        trng,
    })
    .expect("calibration serializes");
    ctx.write("calibration.toml", doc)?;
    Ok(Outcome::Pass)
}
