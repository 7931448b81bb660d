//! One line per acceptance criterion. Runs without the test harness so the
//! lines are printed on every `cargo test`; exits non-zero if any is red.

use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode, Output};
use std::time::{Duration, Instant};

use polyrpc_core::cs::Rule;
use polyrpc_core::erasure::UntypedProgram;
use polyrpc_core::pipeline::{
    compile_stage, erase_stage, load, on_big_stack, prepare, run_cs_stage, run_rpc, Mode, PipelineOptions,
};
use polyrpc_core::rpc::SourceProgram;
use polyrpc_core::runtime::{
    check_alternation, decode, encode, run_lockstep, run_socket_local, RuntimeOptions, WireError,
    WireMessage, WireValue,
};
use polyrpc_core::slicer::{compile_with, CompileOptions};
use polyrpc_core::surface::count_nodes;
use polyrpc_core::Side;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/corpus")
}

fn corpus_file(name: &str) -> PathBuf {
    corpus_dir().join(name)
}

fn source(name: &str) -> SourceProgram {
    let text = std::fs::read_to_string(corpus_file(name)).unwrap();
    load(&text, Side::Client)
        .map(|(p, _)| p)
        .unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn polyrpc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polyrpc"))
        .args(args)
        .env_remove("POLYRPC_BUDGET")
        .output()
        .expect("running polyrpc")
}

fn erased(p: &SourceProgram, opts: &PipelineOptions) -> Result<UntypedProgram, String> {
    let cs = compile_stage(p, opts).map_err(|e| e.to_string())?;
    erase_stage(&cs, opts).map_err(|e| e.to_string())
}

fn expect(what: &str, got: impl ToString, want: &str) -> Result<(), String> {
    let got = got.to_string();
    if got == want {
        Ok(())
    } else {
        Err(format!("{what}: got {got}, expected {want}"))
    }
}

fn running_example_end_to_end() -> Verdict {
    let start = Instant::now();
    let p = source("running.rl");
    let opts = PipelineOptions::default();
    let (v, _) = run_rpc(&p, Side::Client).map_err(|e| e.to_string())?;
    expect("source", polyrpc_core::surface::pretty_term(&v), "1")?;
    let raw = compile_with(&p, CompileOptions::default()).map_err(|e| e.to_string())?;
    expect(
        "compiled",
        run_cs_stage(&raw, false, false, &opts)
            .map_err(|e| e.to_string())?
            .value,
        "1",
    )?;
    let optimized = compile_stage(&p, &opts).map_err(|e| e.to_string())?;
    expect(
        "optimized",
        run_cs_stage(&optimized, false, false, &opts)
            .map_err(|e| e.to_string())?
            .value,
        "1",
    )?;
    let u = erase_stage(&optimized, &opts).map_err(|e| e.to_string())?;
    expect(
        "erased",
        run_lockstep(&u, &RuntimeOptions::default())
            .map_err(|e| e.to_string())?
            .value,
        "1",
    )?;
    expect(
        "socket",
        run_socket_local(&u, &RuntimeOptions::default())
            .map_err(|e| e.to_string())?
            .value,
        "1",
    )?;
    let took = start.elapsed();
    if took >= Duration::from_secs(1) {
        return Err(format!("took {took:?}"));
    }
    Ok(format!("all five stages give 1 in {took:?}"))
}

/// Generated names are `_g` and digits; renaming them all to `h` compares
/// configurations up to the choice of fresh names.
fn normalize(s: &str) -> String {
    let mut out = String::new();
    let mut chars = s.chars().peekable();
    while let Some(c) = chars.next() {
        if c == '_' && chars.peek() == Some(&'g') {
            let mut probe = chars.clone();
            probe.next();
            if probe.peek().is_some_and(char::is_ascii_digit) {
                chars.next();
                while chars.peek().is_some_and(char::is_ascii_digit) {
                    chars.next();
                }
                out.push('h');
                continue;
            }
        }
        out.push(c);
    }
    out
}

fn golden_cs_trace() -> Verdict {
    let out = polyrpc(&[
        "run",
        "--stage",
        "cs",
        "--trace",
        corpus_file("running.rl").to_str().unwrap(),
    ]);
    if !out.status.success() {
        return Err(String::from_utf8_lossy(&out.stderr).into_owned());
    }
    let text = String::from_utf8_lossy(&out.stdout).into_owned();
    let lines: Vec<&str> = text.lines().collect();
    let expected = [
        (
            Rule::LApp,
            "⟨do h <- unit clo([], f2{server}); req(h, clo([], f3)) | ε⟩",
        ),
        (Rule::Do, "⟨req(clo([], f2{server}), clo([], f3)) | ε⟩"),
        (Rule::Req, "⟨[] | clo([], f2{server})(clo([], f3))⟩"),
        (Rule::App, "⟨[] | gen(client, clo([], f3), 1)⟩"),
        (Rule::GenCS, "⟨[] | call(clo([], f3), 1)⟩"),
        (Rule::Call, "⟨clo([], f3)(1); [] | []⟩"),
        (Rule::App, "⟨unit 1; [] | []⟩"),
        (Rule::UnitC, "⟨[] | unit 1⟩"),
        (Rule::UnitS, "⟨unit 1 | ε⟩"),
    ];
    if lines.len() != expected.len() + 1 {
        return Err(format!("{} lines of output:\n{text}", lines.len()));
    }
    for (i, ((rule, config), line)) in expected.iter().zip(&lines).enumerate() {
        let got_rule = line.split_whitespace().next().unwrap_or("");
        let got_config = line.rsplit_once("  ==>  ").map_or("", |(_, c)| c);
        if got_rule != rule.name() || normalize(got_config) != *config {
            return Err(format!(
                "step {}: got `{line}`, expected {} ==> {config}",
                i + 1,
                rule.name()
            ));
        }
    }
    expect("value", lines[expected.len()], "1")?;
    Ok("9 steps match rule for rule and configuration for configuration".into())
}

fn golden_untyped_trace() -> Verdict {
    let u = erased(&source("running.rl"), &PipelineOptions::default())?;
    let run = run_lockstep(&u, &RuntimeOptions::default()).map_err(|e| e.to_string())?;
    let shape: Vec<String> = run
        .messages
        .iter()
        .map(|m| {
            format!(
                "{}({}→{})",
                m.msg.kind(),
                m.from.keyword(),
                m.from.other().keyword()
            )
        })
        .collect();
    let want = "Apply(client→server) Apply(server→client) Ret(client→server) Ret(server→client)";
    expect("messages", shape.join(" "), want)?;
    Ok(want.into())
}

fn counter(text: &str, name: &str) -> Option<usize> {
    text.lines()
        .find_map(|l| l.strip_prefix(name))
        .and_then(|rest| rest.trim().parse().ok())
}

fn ski_experiment() -> Verdict {
    let mut notes = Vec::new();
    for name in ["ski_spine.rl", "ski_full.rl"] {
        let file = corpus_file(name);
        let file = file.to_str().unwrap();
        for (mode, want_dyn) in [("dynamic", 3), ("mono", 0)] {
            let out = polyrpc(&["run", "--mode", mode, "--counters", file]);
            let text = String::from_utf8_lossy(&out.stdout).into_owned();
            expect(
                &format!("{name} {mode} value"),
                text.lines().next().unwrap_or(""),
                "123",
            )?;
            let dyn_checks = counter(&text, "dyn_checks").ok_or_else(|| format!("no counters in {text}"))?;
            if dyn_checks != want_dyn {
                return Err(format!(
                    "{name} {mode}: dyn_checks {dyn_checks}, expected {want_dyn}"
                ));
            }
        }
        let opts = PipelineOptions {
            mode: Mode::Mono,
            ..PipelineOptions::default()
        };
        let gens = compile_stage(&source(name), &opts)
            .map_err(|e| e.to_string())?
            .count_gens();
        if gens != 0 {
            return Err(format!("{name}: {gens} gen nodes after monomorphisation"));
        }
        notes.push(format!("{name} 123, dyn 3/0, mono gens 0"));
    }
    Ok(notes.join("; "))
}

fn mono_size_relations() -> Verdict {
    let sizes = |name: &str| -> Result<(usize, usize), String> {
        let p = source(name);
        let m = prepare(&p, Mode::Mono).map_err(|e| e.to_string())?;
        Ok((count_nodes(&p), count_nodes(&m)))
    };
    let (c, cm) = sizes("ski_client.rl")?;
    let (s, sm) = sizes("ski_spine.rl")?;
    let (f, fm) = sizes("ski_full.rl")?;
    if c != cm {
        return Err(format!("client-only SKI changed size: {c} -> {cm}"));
    }
    // fm/f > sm/s, cross-multiplied to stay in integers.
    if fm * s <= sm * f {
        return Err(format!(
            "full {f} -> {fm} does not grow faster than spine {s} -> {sm}"
        ));
    }
    Ok(format!("client {c} = {cm}; spine {s} -> {sm}; full {f} -> {fm}"))
}

fn theorem_suites() -> Verdict {
    let start = Instant::now();
    let out = polyrpc(&["diff", "--n", "200", "--seed", "42"]);
    let took = start.elapsed();
    let text = String::from_utf8_lossy(&out.stdout).into_owned();
    if !out.status.success() {
        return Err(format!(
            "diff failed:\n{text}{}",
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    let summary = text
        .lines()
        .find(|l| l.starts_with("random "))
        .ok_or_else(|| format!("no summary in {text}"))?;
    for ob in ["a", "b", "c", "d", "e"] {
        if !summary.contains(&format!(" {ob}:200/200")) {
            return Err(format!("obligation {ob}: {summary}"));
        }
    }
    if took >= Duration::from_secs(60) {
        return Err(format!("took {took:?}"));
    }
    Ok(format!("{summary} in {took:?}"))
}

fn protocol_conformance() -> Verdict {
    let mut sessions = 0;
    let mut entries: Vec<PathBuf> = std::fs::read_dir(corpus_dir())
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().path())
        .collect();
    entries.sort();
    for path in entries {
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        let u = erased(&source(&name), &PipelineOptions::default())?;
        let run = run_socket_local(&u, &RuntimeOptions::default()).map_err(|e| format!("{name}: {e}"))?;
        check_alternation(&run.messages).map_err(|e| format!("{name}: {e}"))?;
        sessions += 1;
    }
    let running = corpus_file("running.rl");
    for transport in ["lockstep", "socket"] {
        let out = polyrpc(&[
            "run",
            "--double-send",
            "--transport",
            transport,
            running.to_str().unwrap(),
        ]);
        if out.status.code() != Some(3) {
            return Err(format!(
                "double-send mutant over {transport} exited with {:?}",
                out.status.code()
            ));
        }
    }
    Ok(format!(
        "{sessions} socket sessions alternate; double-send exits 3"
    ))
}

fn random_value(rng: &mut ChaCha8Rng, depth: u32) -> WireValue {
    let leaf = depth == 0 || rng.gen_bool(0.35);
    match rng.gen_range(0..if leaf { 3 } else { 6 }) {
        0 => WireValue::Int(rng.gen()),
        1 => WireValue::Unit,
        2 => WireValue::Loc(if rng.gen_bool(0.5) {
            Side::Client
        } else {
            Side::Server
        }),
        3 => WireValue::Pair(
            Box::new(random_value(rng, depth - 1)),
            Box::new(random_value(rng, depth - 1)),
        ),
        4 => WireValue::Closure {
            env: (0..rng.gen_range(0..3))
                .map(|_| random_value(rng, depth - 1))
                .collect(),
            name: format!("f{}", rng.gen_range(1..100)),
        },
        _ => WireValue::Con {
            name: ["Client", "Server", "Nil", "Cons"][rng.gen_range(0..4)].into(),
            args: (0..rng.gen_range(0..3))
                .map(|_| random_value(rng, depth - 1))
                .collect(),
        },
    }
}

fn wire_codec() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    for i in 0..1000 {
        let msg = WireMessage::Ret(random_value(&mut rng, 4));
        let bytes = encode(&msg);
        let back = decode(bytes.as_bytes()).map_err(|e| format!("value {i}: {e}"))?;
        if back != msg || encode(&back) != bytes {
            return Err(format!("value {i} changed: {bytes}"));
        }
    }
    let malformed = decode(b"[\"Ret\"]\n");
    let unknown = decode(b"{\"t\":\"Yield\",\"v\":{\"t\":\"Unit\"}}\n");
    let truncated = decode(b"{\"t\":\"Ret\",\"v\":{\"t\":\"Un");
    if !matches!(malformed, Err(WireError::Malformed(_))) {
        return Err(format!("malformed frame: {malformed:?}"));
    }
    if !matches!(unknown, Err(WireError::UnknownTag(_))) {
        return Err(format!("unknown tag: {unknown:?}"));
    }
    if truncated != Err(WireError::Truncated) {
        return Err(format!("truncated frame: {truncated:?}"));
    }
    Ok("1000 values roundtrip; malformed, unknown-tag and truncated frames rejected".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("running example end-to-end", running_example_end_to_end),
        ("golden CS trace", golden_cs_trace),
        ("golden untyped trace", golden_untyped_trace),
        ("SKI experiment", ski_experiment),
        ("monomorphisation size relations", mono_size_relations),
        ("theorem suites", theorem_suites),
        ("protocol conformance", protocol_conformance),
        ("wire codec", wire_codec),
    ];
    let mut red = 0;
    for (i, (name, check)) in criteria.into_iter().enumerate() {
        let verdict = on_big_stack(check);
        match verdict {
            Ok(detail) => println!("criterion {}: pass  {name} — {detail}", i + 1),
            Err(detail) => {
                red += 1;
                println!("criterion {}: FAIL  {name} — {detail}", i + 1);
            }
        }
    }
    if red == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
