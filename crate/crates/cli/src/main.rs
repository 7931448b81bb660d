use std::fs;
use std::io::Write;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use polyrpc_core::cs::CsCounters;
use polyrpc_core::erasure::{pretty_untyped, EraseOptions, UStore, UTerm};
use polyrpc_core::pipeline::{
    compile_stage, erase_stage, load, on_big_stack, prepare, run_cs_stage, run_rpc, run_untyped_stage, Mode,
    PipelineError, PipelineOptions,
};
use polyrpc_core::rpc::{EvalCounters, RpcType, SourceProgram};
use polyrpc_core::runtime::{
    client_session, connect, read_main, read_store, serve_one, write_main, write_store, RuntimeCounters,
    RuntimeError, RuntimeOptions, Transport, CLIENT_MAIN_FILE, CLIENT_STORE_FILE, SERVER_STORE_FILE,
};
use polyrpc_core::slicer::Mutation;
use polyrpc_core::surface::pretty_term;
use polyrpc_core::Side;

mod diff;

#[derive(Parser)]
#[command(
    name = "polyrpc",
    version,
    about = "Slice location-polymorphic RPC programs into client and server halves"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the type of `main`.
    Check {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = At::Client)]
        at: At,
    },
    /// Run a program up to the chosen stage and print its value.
    Run {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = StageArg::Untyped)]
        stage: StageArg,
        #[arg(long, value_enum, default_value_t = ModeArg::Dynamic)]
        mode: ModeArg,
        /// Print every machine step (cs) or wire message (untyped).
        #[arg(long)]
        trace: bool,
        /// Typecheck every intermediate configuration (cs).
        #[arg(long)]
        verify: bool,
        #[arg(long)]
        counters: bool,
        #[arg(long, value_enum, default_value_t = TransportArg::Lockstep)]
        transport: TransportArg,
        #[command(flatten)]
        common: Common,
    },
    /// Compile a program and write the result.
    Compile {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Emit::Cs)]
        emit: Emit,
        #[arg(long, value_enum, default_value_t = ModeArg::Dynamic)]
        mode: ModeArg,
        /// Output directory; without it the result goes to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Serve one client connection from a server store file.
    Serve {
        store: PathBuf,
        #[arg(long, default_value = "127.0.0.1:7070")]
        listen: String,
        #[command(flatten)]
        common: Common,
    },
    /// Run the client half of a split program against a server.
    Client {
        store: PathBuf,
        main: PathBuf,
        #[arg(long)]
        connect: String,
        #[arg(long)]
        counters: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Check the stage-agreement obligations on files and random programs.
    Diff {
        /// A source file or a directory of `.rl` files.
        path: Option<PathBuf>,
        /// Number of generated programs.
        #[arg(long, default_value_t = 0)]
        n: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Clone, Copy, Default)]
struct Common {
    /// Step budget per machine or endpoint (defaults to $POLYRPC_BUDGET).
    #[arg(long)]
    budget: Option<usize>,
    /// Compile `req` as `call` and vice versa.
    #[arg(long, hide = true)]
    mutate_swap_req_call: bool,
    /// Erase every remote call into two sends.
    #[arg(long, hide = true)]
    double_send: bool,
}

impl Common {
    fn options(self) -> PipelineOptions {
        PipelineOptions {
            budget: self.budget,
            mutation: if self.mutate_swap_req_call {
                Mutation::SwapReqCall
            } else {
                Mutation::None
            },
            erase: EraseOptions {
                double_send: self.double_send,
            },
            ..PipelineOptions::default()
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum At {
    Client,
    Server,
}

#[derive(Clone, Copy, ValueEnum)]
enum StageArg {
    Rpc,
    Cs,
    Untyped,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Dynamic,
    Mono,
}

#[derive(Clone, Copy, ValueEnum)]
enum TransportArg {
    Lockstep,
    Socket,
}

#[derive(Clone, Copy, ValueEnum)]
enum Emit {
    Cs,
    Untyped,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Dynamic => Mode::Dynamic,
            ModeArg::Mono => Mode::Mono,
        }
    }
}

/// A failed command: what to print and how to exit.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn user(message: impl Into<String>) -> Failure {
        Failure {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Failure {
        Failure {
            code: e.exit_code() as u8,
            message: e.to_string(),
        }
    }
}

impl From<RuntimeError> for Failure {
    fn from(e: RuntimeError) -> Failure {
        PipelineError::from(e).into()
    }
}

type Outcome = Result<(), Failure>;

fn read_file(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::user(format!("{}: {e}", path.display())))
}

fn load_file(path: &Path, at: Side) -> Result<(SourceProgram, RpcType), Failure> {
    let src = read_file(path)?;
    load(&src, at).map_err(|e| Failure {
        code: e.exit_code() as u8,
        message: format!("{}: {e}", path.display()),
    })
}

fn write_file(path: &Path, contents: &str) -> Outcome {
    fs::write(path, contents).map_err(|e| Failure::user(format!("cannot write {}: {e}", path.display())))
}

fn print_eval_counters(c: &EvalCounters) {
    println!("beta_apps    {}", c.beta_apps);
}

fn print_cs_counters(c: &CsCounters) {
    println!("steps        {}", c.steps);
    println!("gen_checks   {}", c.gen_checks);
    println!("local_apps   {}", c.local_apps);
    println!("remote_msgs  {}", c.remote_msgs);
}

fn print_runtime_counters(c: &RuntimeCounters) {
    println!("steps        {}", c.steps);
    println!("dyn_checks   {}", c.dyn_checks);
    println!("wire_msgs    {}", c.wire_msgs);
}

fn check(file: &Path, at: At) -> Outcome {
    let side = match at {
        At::Client => Side::Client,
        At::Server => Side::Server,
    };
    let (_, ty) = load_file(file, side)?;
    println!("{ty}");
    Ok(())
}

struct RunArgs {
    stage: StageArg,
    trace: bool,
    verify: bool,
    counters: bool,
}

fn run(file: &Path, args: RunArgs, opts: PipelineOptions) -> Outcome {
    let (program, _) = load_file(file, Side::Client)?;
    match args.stage {
        StageArg::Rpc => {
            let program = prepare(&program, opts.mode)?;
            let (v, c) = run_rpc(&program, Side::Client)?;
            println!("{}", pretty_term(&v));
            if args.counters {
                print_eval_counters(&c);
            }
        }
        StageArg::Cs => {
            let cs = compile_stage(&program, &opts)?;
            let out = run_cs_stage(&cs, args.verify, args.trace, &opts)?;
            for step in &out.trace {
                println!("{step}");
            }
            println!("{}", out.value);
            if args.counters {
                print_cs_counters(&out.counters);
            }
        }
        StageArg::Untyped => {
            let cs = compile_stage(&program, &opts)?;
            let erased = erase_stage(&cs, &opts)?;
            let run = run_untyped_stage(&erased, &opts)?;
            if args.trace {
                for m in &run.messages {
                    println!("{m}");
                }
            }
            println!("{}", run.value);
            if args.counters {
                print_runtime_counters(&run.totals());
            }
        }
    }
    Ok(())
}

fn compile(file: &Path, emit: Emit, out: Option<&Path>, opts: PipelineOptions) -> Outcome {
    let (program, _) = load_file(file, Side::Client)?;
    let cs = compile_stage(&program, &opts)?;
    match emit {
        Emit::Cs => match out {
            None => print!("{cs}"),
            Some(dir) => {
                create_dir(dir)?;
                write_file(&dir.join("program.cs"), &cs.to_string())?;
            }
        },
        Emit::Untyped => {
            let erased = erase_stage(&cs, &opts)?;
            match out {
                None => print!("{}", pretty_untyped(&erased)),
                Some(dir) => {
                    create_dir(dir)?;
                    write_file(&dir.join(CLIENT_STORE_FILE), &write_store(&erased.client_store))?;
                    write_file(&dir.join(SERVER_STORE_FILE), &write_store(&erased.server_store))?;
                    write_file(&dir.join(CLIENT_MAIN_FILE), &write_main(&erased.client_main))?;
                }
            }
        }
    }
    Ok(())
}

fn create_dir(dir: &Path) -> Outcome {
    fs::create_dir_all(dir).map_err(|e| Failure::user(format!("cannot create {}: {e}", dir.display())))
}

fn load_store(path: &Path) -> Result<UStore, Failure> {
    read_store(&read_file(path)?)
        .map_err(|e| Failure::user(format!("{}: not a store file: {e}", path.display())))
}

fn load_main(path: &Path) -> Result<UTerm, Failure> {
    read_main(&read_file(path)?)
        .map_err(|e| Failure::user(format!("{}: not a main term: {e}", path.display())))
}

fn transport_failure(what: &str, e: std::io::Error) -> Failure {
    Failure {
        code: 3,
        message: format!("{what}: {e}"),
    }
}

fn serve(store: &Path, listen: &str, opts: PipelineOptions) -> Outcome {
    let store = load_store(store)?;
    let listener =
        TcpListener::bind(listen).map_err(|e| transport_failure(&format!("cannot listen on {listen}"), e))?;
    let addr = listener
        .local_addr()
        .map_err(|e| transport_failure("listener", e))?;
    println!("listening on {addr}");
    let _ = std::io::stdout().flush();
    let (stream, peer) = listener.accept().map_err(|e| transport_failure("accept", e))?;
    let session = serve_one(
        stream,
        &store,
        &RuntimeOptions {
            budget: opts.budget(),
        },
    )?;
    eprintln!("served {peer}: {} messages", session.log.len());
    Ok(())
}

fn client(store: &Path, main: &Path, addr: &str, counters: bool, opts: PipelineOptions) -> Outcome {
    let store = load_store(store)?;
    let main = load_main(main)?;
    let stream = connect(addr)?;
    let session = client_session(
        stream,
        &store,
        &main,
        &RuntimeOptions {
            budget: opts.budget(),
        },
    )?;
    let value = session.value.ok_or_else(|| {
        Failure::from(RuntimeError::Protocol(
            "the client finished without a value".into(),
        ))
    })?;
    println!("{value}");
    if counters {
        print_runtime_counters(&session.counters);
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Outcome {
    match cli.command {
        Command::Check { file, at } => check(&file, at),
        Command::Run {
            file,
            stage,
            mode,
            trace,
            verify,
            counters,
            transport,
            common,
        } => {
            let opts = PipelineOptions {
                mode: mode.into(),
                transport: match transport {
                    TransportArg::Lockstep => Transport::Lockstep,
                    TransportArg::Socket => Transport::Socket,
                },
                ..common.options()
            };
            let args = RunArgs {
                stage,
                trace,
                verify,
                counters,
            };
            run(&file, args, opts)
        }
        Command::Compile {
            file,
            emit,
            mode,
            out,
            common,
        } => {
            let opts = PipelineOptions {
                mode: mode.into(),
                ..common.options()
            };
            compile(&file, emit, out.as_deref(), opts)
        }
        Command::Serve {
            store,
            listen,
            common,
        } => serve(&store, &listen, common.options()),
        Command::Client {
            store,
            main,
            connect,
            counters,
            common,
        } => client(&store, &main, &connect, counters, common.options()),
        Command::Diff {
            path,
            n,
            seed,
            common,
        } => diff::diff(path.as_deref(), n, seed, common.options()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match on_big_stack(|| dispatch(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
