//! `polyrpc diff`: the stage-agreement obligations over files and generated
//! programs, with failing programs shrunk before they are reported.

use std::fs;
use std::path::{Path, PathBuf};

use polyrpc_core::gen::{generate, shrink, GenConfig};
use polyrpc_core::pipeline::{check_obligations, DiffOptions, Obligation, PipelineOptions, OBLIGATIONS};
use polyrpc_core::rpc::{typecheck, RpcTerm, SourceProgram, TypeEnv};
use polyrpc_core::surface::pretty_term;
use polyrpc_core::{Loc, Side};

use crate::{load_file, Failure, Outcome};

fn source_files(path: &Path) -> Result<Vec<PathBuf>, Failure> {
    if !path.is_dir() {
        return Ok(vec![path.to_path_buf()]);
    }
    let entries = fs::read_dir(path).map_err(|e| Failure::user(format!("{}: {e}", path.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "rl"))
        .collect();
    files.sort();
    Ok(files)
}

fn verdicts(obs: &[Obligation]) -> String {
    obs.iter()
        .map(|o| format!("{}:{}", o.name, if o.passed { "pass" } else { "FAIL" }))
        .collect::<Vec<_>>()
        .join(" ")
}

/// The smallest subterm-derived program that still fails obligation `name`.
fn minimize(main: &RpcTerm, name: &str, opts: &DiffOptions) -> RpcTerm {
    shrink(main, |t| {
        let Ok(ty) = typecheck(&TypeEnv::new(), &Loc::Client, t) else {
            return false;
        };
        let q = SourceProgram::from_main(t.clone());
        check_obligations(&q, &ty, opts)
            .iter()
            .any(|o| o.name == name && !o.passed)
    })
}

fn report_failures(program: &SourceProgram, obs: &[Obligation], opts: &DiffOptions) {
    let main = program.desugar();
    for o in obs.iter().filter(|o| !o.passed) {
        println!("  {} failed: {}", o.name, o.detail);
        let small = minimize(&main, o.name, opts);
        println!("  minimized: {}", pretty_term(&small));
    }
}

pub fn diff(path: Option<&Path>, n: usize, seed: u64, pipeline: PipelineOptions) -> Outcome {
    let mut failed = 0usize;

    if let Some(path) = path {
        let opts = DiffOptions {
            pipeline,
            sockets: true,
        };
        for file in source_files(path)? {
            let (program, ty) = load_file(&file, Side::Client)?;
            let obs = check_obligations(&program, &ty, &opts);
            let name = file
                .file_name()
                .map_or_else(|| file.display().to_string(), |s| s.to_string_lossy().into());
            println!("{name:<16} {}", verdicts(&obs));
            if obs.iter().any(|o| !o.passed) {
                failed += 1;
                report_failures(&program, &obs, &opts);
            }
        }
    }

    if n > 0 {
        let opts = DiffOptions {
            pipeline,
            sockets: false,
        };
        let mut passes = [0usize; OBLIGATIONS.len()];
        for (i, (program, ty)) in generate(seed, n, GenConfig::default()).into_iter().enumerate() {
            let obs = check_obligations(&program, &ty, &opts);
            for (k, o) in obs.iter().enumerate() {
                passes[k] += usize::from(o.passed);
            }
            if obs.iter().any(|o| !o.passed) {
                failed += 1;
                println!("random #{i:<8} {}", verdicts(&obs));
                println!("  program: {}", pretty_term(&program.main));
                report_failures(&program, &obs, &opts);
            }
        }
        let summary: Vec<String> = OBLIGATIONS
            .iter()
            .zip(passes)
            .map(|(name, p)| format!("{name}:{p}/{n}"))
            .collect();
        println!("random seed={seed} n={n}  {}", summary.join(" "));
    }

    if failed == 0 {
        Ok(())
    } else {
        Err(Failure {
            code: 2,
            message: format!("{failed} program(s) failed an obligation"),
        })
    }
}
