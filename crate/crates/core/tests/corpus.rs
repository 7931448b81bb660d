//! End-to-end runs of the bundled example programs.

use std::path::PathBuf;

use polyrpc_core::pipeline::{
    check_obligations, compile_stage, erase_stage, load, on_big_stack, report, run_rpc, DiffOptions, Mode,
    Observable, PipelineOptions,
};
use polyrpc_core::runtime::{run_pair, RuntimeOptions, Transport};
use polyrpc_core::surface::{count_nodes, pretty_term};
use polyrpc_core::Side;

fn corpus(name: &str) -> String {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "corpus", name].iter().collect();
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn mode(mode: Mode) -> PipelineOptions {
    PipelineOptions {
        mode,
        ..PipelineOptions::default()
    }
}

const ALL: [&str; 5] = [
    "running.rl",
    "ski_client.rl",
    "ski_spine.rl",
    "ski_full.rl",
    "id_location.rl",
];

#[test]
fn running_example_is_one_everywhere() {
    on_big_stack(|| {
        let (p, ty) = load(&corpus("running.rl"), Side::Client).unwrap();
        assert_eq!(ty.to_string(), "Int");
        let (v, _) = run_rpc(&p, Side::Client).unwrap();
        assert_eq!(pretty_term(&v), "1");
        for transport in [Transport::Lockstep, Transport::Socket] {
            let opts = PipelineOptions {
                transport,
                ..PipelineOptions::default()
            };
            let r = report(&p, &opts).unwrap();
            assert!(r.pass, "{r}");
            assert_eq!(r.untyped, Observable::Int(1));
            assert_eq!(r.runtime.wire_msgs, 4);
        }
    });
}

#[test]
fn ski_programs_give_123_with_three_dynamic_checks() {
    on_big_stack(|| {
        for name in ["ski_spine.rl", "ski_full.rl"] {
            let (p, _) = load(&corpus(name), Side::Client).unwrap();
            let dynamic = report(&p, &mode(Mode::Dynamic)).unwrap();
            assert!(dynamic.pass, "{name}\n{dynamic}");
            assert_eq!(dynamic.source, Observable::Int(123), "{name}");
            assert_eq!(dynamic.runtime.dyn_checks, 3, "{name}\n{dynamic}");
            let mono = report(&p, &mode(Mode::Mono)).unwrap();
            assert!(mono.pass, "{name}\n{mono}");
            assert_eq!(mono.runtime.dyn_checks, 0, "{name}");
            assert_eq!(mono.cs_gens, 0, "{name}");
        }
    });
}

#[test]
fn monomorphisation_growth_is_ordered() {
    on_big_stack(|| {
        let size = |name: &str| {
            let (p, _) = load(&corpus(name), Side::Client).unwrap();
            let m = polyrpc_core::rpc::monomorphise(&p).unwrap();
            (count_nodes(&p), count_nodes(&m))
        };
        let (client, client_mono) = size("ski_client.rl");
        assert_eq!(client, client_mono);
        let (spine, spine_mono) = size("ski_spine.rl");
        let (full, full_mono) = size("ski_full.rl");
        assert!(
            full_mono * spine > spine_mono * full,
            "spine {spine}->{spine_mono}, full {full}->{full_mono}"
        );
    });
}

#[test]
fn every_obligation_holds_on_the_corpus() {
    on_big_stack(|| {
        let opts = DiffOptions {
            sockets: true,
            ..DiffOptions::default()
        };
        for name in ALL {
            let (p, ty) = load(&corpus(name), Side::Client).unwrap();
            for ob in check_obligations(&p, &ty, &opts) {
                assert!(ob.passed, "{name} obligation {}: {}", ob.name, ob.detail);
            }
        }
    });
}

#[test]
fn lockstep_and_socket_agree() {
    on_big_stack(|| {
        for name in ALL {
            let (p, _) = load(&corpus(name), Side::Client).unwrap();
            let opts = PipelineOptions::default();
            let u = erase_stage(&compile_stage(&p, &opts).unwrap(), &opts).unwrap();
            let a = run_pair(&u, Transport::Lockstep, &RuntimeOptions::default()).unwrap();
            let b = run_pair(&u, Transport::Socket, &RuntimeOptions::default()).unwrap();
            assert_eq!(a.value, b.value, "{name}");
            assert_eq!(a.messages, b.messages, "{name}");
        }
    });
}
