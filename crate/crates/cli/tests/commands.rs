use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use polyrpc_core::runtime::{read_main, read_store, CLIENT_MAIN_FILE, CLIENT_STORE_FILE, SERVER_STORE_FILE};

fn corpus(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/corpus")
        .join(name)
}

fn polyrpc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polyrpc"))
        .args(args)
        .env_remove("POLYRPC_BUDGET")
        .output()
        .expect("running polyrpc")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn ok(args: &[&str]) -> String {
    let out = polyrpc(args);
    assert!(out.status.success(), "polyrpc {args:?} failed: {}", stderr(&out));
    stdout(&out)
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn check_prints_the_type_of_main() {
    let running = corpus("running.rl");
    assert_eq!(ok(&["check", path_str(&running)]), "Int\n");
    assert_eq!(ok(&["check", "--at", "server", path_str(&running)]), "Int\n");
    assert_eq!(ok(&["check", path_str(&corpus("id_location.rl"))]), "Int * Int\n");
}

#[test]
fn ill_typed_files_exit_with_one_and_a_position() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.rl");
    std::fs::write(&bad, "main : Int = fst 1\n").unwrap();
    let out = polyrpc(&["check", path_str(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("type error at 1:18"), "{}", stderr(&out));

    std::fs::write(&bad, "main : Int = (\\x\n").unwrap();
    let out = polyrpc(&["run", path_str(&bad)]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn every_stage_runs_the_running_example() {
    let running = corpus("running.rl");
    for stage in ["rpc", "cs", "untyped"] {
        assert_eq!(
            ok(&["run", "--stage", stage, path_str(&running)]),
            "1\n",
            "stage {stage}"
        );
    }
    assert_eq!(ok(&["run", "--transport", "socket", path_str(&running)]), "1\n");
    assert_eq!(
        ok(&["run", "--stage", "rpc", path_str(&corpus("ski_spine.rl"))]),
        "123\n"
    );
}

#[test]
fn counters_follow_the_value() {
    let out = ok(&["run", "--counters", path_str(&corpus("ski_full.rl"))]);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "123");
    assert!(lines.contains(&"dyn_checks   3"), "{out}");
    let out = ok(&[
        "run",
        "--counters",
        "--mode",
        "mono",
        path_str(&corpus("ski_full.rl")),
    ]);
    assert!(out.lines().any(|l| l == "dyn_checks   0"), "{out}");
}

#[test]
fn the_budget_flag_and_variable_stop_a_run() {
    let running = corpus("running.rl");
    let out = polyrpc(&["run", "--stage", "cs", "--budget", "2", path_str(&running)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("budget of 2"), "{}", stderr(&out));

    let out = Command::new(env!("CARGO_BIN_EXE_polyrpc"))
        .args(["run", path_str(&running)])
        .env("POLYRPC_BUDGET", "3")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("budget of 3"), "{}", stderr(&out));
}

#[test]
fn compiled_stores_keep_client_code_on_the_client() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    ok(&[
        "compile",
        "--emit",
        "untyped",
        "--out",
        path_str(&out),
        path_str(&corpus("running.rl")),
    ]);
    let client = read_store(&std::fs::read_to_string(out.join(CLIENT_STORE_FILE)).unwrap()).unwrap();
    let server = read_store(&std::fs::read_to_string(out.join(SERVER_STORE_FILE)).unwrap()).unwrap();
    read_main(&std::fs::read_to_string(out.join(CLIENT_MAIN_FILE)).unwrap()).unwrap();
    assert!(client.contains_key("f3"));
    assert!(!server.contains_key("f3"));
    assert!(client.contains_key("f2") && server.contains_key("f2"));
}

#[test]
fn compiling_is_deterministic() {
    let ski = corpus("ski_full.rl");
    let first = ok(&["compile", path_str(&ski)]);
    assert_eq!(first, ok(&["compile", path_str(&ski)]));
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        ok(&[
            "compile",
            "--emit",
            "untyped",
            "--out",
            path_str(d),
            path_str(&ski),
        ]);
    }
    for f in [CLIENT_STORE_FILE, SERVER_STORE_FILE, CLIENT_MAIN_FILE] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn mono_compilation_has_no_gen() {
    let ski = corpus("ski_full.rl");
    assert!(ok(&["compile", path_str(&ski)]).contains("gen("));
    assert!(!ok(&["compile", "--mode", "mono", path_str(&ski)]).contains("gen("));
}

#[test]
fn unwritable_output_is_a_user_error() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("plain");
    std::fs::write(&file, "").unwrap();
    let out = polyrpc(&[
        "compile",
        "--out",
        path_str(&file.join("sub")),
        path_str(&corpus("running.rl")),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

/// Starts `serve` on an ephemeral port and returns it with its address.
fn spawn_server(store: &Path) -> (std::process::Child, String) {
    let mut child = Command::new(env!("CARGO_BIN_EXE_polyrpc"))
        .args(["serve", path_str(store), "--listen", "127.0.0.1:0"])
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap())
        .read_line(&mut line)
        .unwrap();
    let addr = line
        .trim()
        .strip_prefix("listening on ")
        .expect("a listening line")
        .to_string();
    (child, addr)
}

fn split(file: &str) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "compile",
        "--emit",
        "untyped",
        "--out",
        path_str(dir.path()),
        path_str(&corpus(file)),
    ]);
    dir
}

#[test]
fn split_deployment_over_localhost() {
    let dir = split("running.rl");
    let (server, addr) = spawn_server(&dir.path().join(SERVER_STORE_FILE));
    let out = ok(&[
        "client",
        path_str(&dir.path().join(CLIENT_STORE_FILE)),
        path_str(&dir.path().join(CLIENT_MAIN_FILE)),
        "--connect",
        &addr,
    ]);
    assert_eq!(out, "1\n");
    let status = server.wait_with_output().unwrap();
    assert!(status.status.success(), "{}", stderr(&status));
}

#[test]
fn a_server_with_the_wrong_store_aborts_on_missing_code() {
    let running = split("running.rl");
    let empty = running.path().join("empty.json");
    std::fs::write(&empty, "{}\n").unwrap();
    let (server, addr) = spawn_server(&empty);
    let client = polyrpc(&[
        "client",
        path_str(&running.path().join(CLIENT_STORE_FILE)),
        path_str(&running.path().join(CLIENT_MAIN_FILE)),
        "--connect",
        &addr,
    ]);
    assert!(!client.status.success());
    let server = server.wait_with_output().unwrap();
    assert!(stderr(&server).contains("missing code"), "{}", stderr(&server));
}

#[test]
fn connecting_to_nobody_is_a_transport_failure() {
    let dir = split("running.rl");
    let port = std::net::TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap();
    let out = polyrpc(&[
        "client",
        path_str(&dir.path().join(CLIENT_STORE_FILE)),
        path_str(&dir.path().join(CLIENT_MAIN_FILE)),
        "--connect",
        &port.to_string(),
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

#[test]
fn double_send_is_a_protocol_violation_on_both_transports() {
    let running = corpus("running.rl");
    for transport in ["lockstep", "socket"] {
        let out = polyrpc(&[
            "run",
            "--double-send",
            "--transport",
            transport,
            path_str(&running),
        ]);
        assert_eq!(out.status.code(), Some(3), "{transport}: {}", stderr(&out));
        assert!(stderr(&out).contains("double send"), "{}", stderr(&out));
    }
}

#[test]
fn diff_passes_the_corpus_and_is_deterministic() {
    let dir = corpus("");
    let first = ok(&["diff", path_str(&dir), "--n", "50", "--seed", "7"]);
    assert_eq!(
        first.lines().filter(|l| l.ends_with("mono:pass")).count(),
        5,
        "{first}"
    );
    assert!(first.contains("random seed=7 n=50  a:50/50"), "{first}");
    assert_eq!(first, ok(&["diff", path_str(&dir), "--n", "50", "--seed", "7"]));
}

#[test]
fn diff_reports_a_minimized_program_for_the_swap_mutant() {
    let out = polyrpc(&["diff", "--mutate-swap-req-call", path_str(&corpus("running.rl"))]);
    assert_eq!(out.status.code(), Some(2));
    let text = stdout(&out);
    assert!(text.contains("e:FAIL"), "{text}");
    assert!(text.contains("minimized: "), "{text}");
}
