//! The correctness obligations over seeded random programs.

use polyrpc_core::gen::{generate, shrink, GenConfig};
use polyrpc_core::pipeline::{check_obligations, on_big_stack, DiffOptions};
use polyrpc_core::rpc::{eval, typecheck, EvalCounters, SourceProgram, TypeEnv};
use polyrpc_core::surface::{parse_term, pretty_term};
use polyrpc_core::{Loc, Side};

#[test]
fn obligations_hold_on_300_programs() {
    on_big_stack(|| {
        let opts = DiffOptions::default();
        let mut failures = Vec::new();
        for (i, (p, ty)) in generate(42, 300, GenConfig::default()).into_iter().enumerate() {
            for ob in check_obligations(&p, &ty, &opts) {
                if !ob.passed {
                    let small = shrink(&p.main, |t| {
                        let q = SourceProgram::from_main(t.clone());
                        let ty = typecheck(&TypeEnv::new(), &Loc::Client, t).unwrap();
                        check_obligations(&q, &ty, &opts)
                            .iter()
                            .any(|o| o.name == ob.name && !o.passed)
                    });
                    failures.push(format!(
                        "#{i} ({}): {}\n  minimized: {}",
                        ob.name,
                        ob.detail,
                        pretty_term(&small)
                    ));
                }
            }
        }
        assert!(
            failures.is_empty(),
            "{} failures:\n{}",
            failures.len(),
            failures.join("\n")
        );
    });
}

#[test]
fn evaluation_preserves_types() {
    on_big_stack(|| {
        for (p, ty) in generate(5, 200, GenConfig::default()) {
            let mut c = EvalCounters::default();
            let v = eval(&p.main, Side::Client, &mut c).unwrap();
            let vty = typecheck(&TypeEnv::new(), &Loc::Client, &v).unwrap();
            assert!(
                vty.alpha_eq(&ty),
                "{} : {ty} evaluated to {} : {vty}",
                pretty_term(&p.main),
                pretty_term(&v)
            );
        }
    });
}

#[test]
fn printing_then_parsing_is_the_identity() {
    for (p, _) in generate(9, 300, GenConfig::default()) {
        let printed = pretty_term(&p.main);
        let back = parse_term(&printed).unwrap_or_else(|e| panic!("{printed}: {e}"));
        assert_eq!(back, p.main, "{printed}");
    }
}

/// The suite is only as good as its inputs: make sure they contain remote
/// calls, dynamically dispatched ones, and location abstractions.
#[test]
fn generated_programs_exercise_the_interesting_paths() {
    use polyrpc_core::pipeline::{report, PipelineOptions};
    use polyrpc_core::rpc::TermKind;
    on_big_stack(|| {
        let programs = generate(42, 300, GenConfig::default());
        let (mut remote, mut dynamic, mut labs, mut gens) = (0, 0, 0, 0);
        for (p, _) in &programs {
            let r = report(p, &PipelineOptions::default()).unwrap();
            remote += usize::from(r.runtime.wire_msgs > 0);
            dynamic += usize::from(r.runtime.dyn_checks > 0);
            gens += usize::from(r.cs_gens > 0);
            labs += usize::from(
                p.main
                    .subterms()
                    .iter()
                    .any(|t| matches!(t.kind, TermKind::LAbs { .. })),
            );
        }
        println!(
            "remote {remote} dynamic {dynamic} gens {gens} labs {labs} of {}",
            programs.len()
        );
        assert!(remote >= 90, "only {remote} programs talk to the server");
        assert!(labs >= 30, "only {labs} programs abstract over locations");
        assert!(gens >= 15, "only {gens} programs keep a gen");
        assert!(
            dynamic >= 5,
            "only {dynamic} programs check a location at run time"
        );
    });
}
