//! The running example's reduction sequence in the typed machine and its
//! conversation after erasure.

use polyrpc_core::cs::Rule;
use polyrpc_core::pipeline::{compile_stage, erase_stage, load, run_cs_stage, PipelineOptions};
use polyrpc_core::runtime::{run_lockstep, RuntimeOptions, WireMessage, WireValue};
use polyrpc_core::Side;

const RUNNING: &str = include_str!("../corpus/running.rl");

/// Generated names are `_g` followed by digits; replace each with `h`.
fn normalize(s: &str) -> String {
    let mut out = String::new();
    let mut rest = s;
    while let Some(i) = rest.find("_g") {
        out.push_str(&rest[..i]);
        let tail = &rest[i + 2..];
        let digits = tail.len() - tail.trim_start_matches(|c: char| c.is_ascii_digit()).len();
        if digits == 0 {
            out.push_str("_g");
        } else {
            out.push('h');
        }
        rest = &tail[digits..];
    }
    out.push_str(rest);
    out
}

#[test]
fn cs_trace_of_the_running_example() {
    let (p, _) = load(RUNNING, Side::Client).unwrap();
    let opts = PipelineOptions::default();
    let cs = compile_stage(&p, &opts).unwrap();
    let run = run_cs_stage(&cs, true, true, &opts).unwrap();
    let got: Vec<(Rule, String)> = run
        .trace
        .iter()
        .map(|s| (s.rule, normalize(&s.config.to_string())))
        .collect();
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
    let expected: Vec<(Rule, String)> = expected.iter().map(|(r, c)| (*r, c.to_string())).collect();
    assert_eq!(got, expected);
    assert_eq!(run.value.to_string(), "1");
}

#[test]
fn four_messages_in_order() {
    let (p, _) = load(RUNNING, Side::Client).unwrap();
    let opts = PipelineOptions::default();
    let u = erase_stage(&compile_stage(&p, &opts).unwrap(), &opts).unwrap();
    let run = run_lockstep(&u, &RuntimeOptions::default()).unwrap();
    let shape: Vec<(Side, &str)> = run.messages.iter().map(|m| (m.from, m.msg.kind())).collect();
    assert_eq!(
        shape,
        [
            (Side::Client, "Apply"),
            (Side::Server, "Apply"),
            (Side::Client, "Ret"),
            (Side::Server, "Ret"),
        ]
    );
    let f3 = WireValue::Closure {
        env: vec![],
        name: "f3".into(),
    };
    assert_eq!(
        run.messages[0].msg,
        WireMessage::Apply {
            f: WireValue::Closure {
                env: vec![WireValue::Loc(Side::Server)],
                name: "f2".into(),
            },
            a: f3.clone(),
        }
    );
    assert_eq!(
        run.messages[1].msg,
        WireMessage::Apply {
            f: f3,
            a: WireValue::Int(1)
        }
    );
    assert_eq!(run.messages[3].msg, WireMessage::Ret(WireValue::Int(1)));
    assert_eq!(run.value.to_string(), "1");
}

#[test]
fn f3_lives_only_in_the_client_store() {
    let (p, _) = load(RUNNING, Side::Client).unwrap();
    let opts = PipelineOptions::default();
    let u = erase_stage(&compile_stage(&p, &opts).unwrap(), &opts).unwrap();
    assert!(u.client_store.contains_key("f3"));
    assert!(!u.server_store.contains_key("f3"));
    assert!(u.server_store.contains_key("f2"));
}
