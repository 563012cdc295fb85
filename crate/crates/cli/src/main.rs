//! `counterlab`: batch front end. Every command prints one JSON document on
//! stdout; diagnostics go to stderr.
//!
//! Exit codes: 0 success, 1 validation failure, 2 disagreement found,
//! 3 budget exhausted.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use counterlab::executor::{count_accepting_paths, default_step_cap, explore, runtime_max};
use counterlab::families::{by_name, Membership, PromiseFamily};
use counterlab::icount::{complement_run_ic, guessing_mode_run, GuessOutcome, SeededChooser};
use counterlab::oracle::{check_equivalence, strings_up_to};
use counterlab::pdcomplement::{complement_decide_pd, complement_trace_pd};
use counterlab::transforms::{
    eliminate_counters, pair_counters, reduce_counters, reduce_counters_pd, Modulus,
};
use counterlab::{
    parse_machine, stack_state_complexity, state_complexity, to_json, MachineSpec, RunBudget,
    Verdict,
};

const VALIDATION: u8 = 1;
const DISAGREEMENT: u8 = 2;
const EXHAUSTED: u8 = 3;

const DEFAULT_CONFIG_CAP: usize = 1_000_000;

#[derive(Parser)]
#[command(
    name = "counterlab",
    version,
    about = "Two-way counter automata toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone, Copy)]
struct Budget {
    /// Step cap. Defaults to (n*|x|+2)^3.
    #[arg(long, env = "COUNTERLAB_CAP")]
    cap: Option<u64>,
    /// Bound on stored configurations.
    #[arg(long, default_value_t = DEFAULT_CONFIG_CAP)]
    config_cap: usize,
    /// Family index n; also the n of the default cap, which is the
    /// machine's state count if omitted.
    #[arg(long)]
    index: Option<usize>,
}

impl Budget {
    fn for_input(&self, m: &MachineSpec, input_len: usize) -> RunBudget {
        let n = self.index.unwrap_or_else(|| state_complexity(m));
        let steps = self
            .cap
            .unwrap_or_else(|| default_step_cap(n, input_len, 3));
        RunBudget::new(steps.max(1), self.config_cap.max(1))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a machine file.
    Validate { machine: PathBuf },
    /// Decide one input.
    Run {
        machine: PathBuf,
        #[arg(long)]
        input: String,
        #[command(flatten)]
        budget: Budget,
        /// Also count accepting computation paths.
        #[arg(long)]
        count_paths: bool,
        /// Include the accepting path.
        #[arg(long)]
        witness: bool,
    },
    /// Apply a transformation and write the result.
    Transform {
        machine: PathBuf,
        #[arg(long, value_enum)]
        op: Op,
        /// Counters to fuse, 1-based, as `a,b`.
        #[arg(long, value_delimiter = ',')]
        pair: Option<Vec<usize>>,
        /// Counter ceiling for `eliminate`.
        #[arg(long)]
        ceiling: Option<u32>,
        /// Pairing or packing modulus. Defaults to ceiling + 1, else 32.
        #[arg(long)]
        modulus: Option<u64>,
        #[arg(short = 'o', long)]
        output: Option<PathBuf>,
    },
    /// Decide the complement of a machine on one input.
    Complement {
        machine: PathBuf,
        #[arg(long)]
        input: String,
        #[arg(long, value_enum, default_value_t = Mode::Exact)]
        mode: Mode,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Layers for `--mode guess`; the machine's runtime if omitted.
        #[arg(long)]
        layers: Option<u64>,
        /// Use the pushdown procedure.
        #[arg(long)]
        pd: bool,
        /// With `--pd`, also run the work-stack trace.
        #[arg(long, requires = "pd")]
        trace: bool,
        #[command(flatten)]
        budget: Budget,
    },
    /// Compare two machines on every input up to a length.
    CheckEquiv {
        first: PathBuf,
        second: PathBuf,
        #[arg(long)]
        max_len: usize,
        /// Restrict to the promised inputs of family `name`, index `--index`.
        #[arg(long, requires = "index")]
        family: Option<String>,
        #[command(flatten)]
        budget: Budget,
    },
    /// Size metrics of a machine.
    Report { machine: PathBuf },
    /// List the promised instances of family `name`, index `--index`,
    /// optionally with a machine's verdicts.
    Enumerate {
        #[arg(long)]
        family: String,
        #[arg(long)]
        max_len: Option<usize>,
        #[arg(long)]
        machine: Option<PathBuf>,
        #[command(flatten)]
        budget: Budget,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Op {
    Pair,
    Reduce4,
    Reduce3pd,
    Eliminate,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Exact,
    Guess,
}

/// A failure that ends the command with a nonzero code.
struct Failure {
    code: u8,
    message: String,
}

fn invalid(message: impl ToString) -> Failure {
    Failure {
        code: VALIDATION,
        message: message.to_string(),
    }
}

type Outcome = Result<(Value, u8), Failure>;

fn load(path: &Path) -> Result<MachineSpec, Failure> {
    let text =
        std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    parse_machine(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn verdict_json(v: &Verdict, witness: bool, m: &MachineSpec) -> Value {
    let mut out = json!({ "verdict": v.label() });
    match v {
        Verdict::Accept { witness: path } if !path.is_empty() => {
            out["steps"] = json!(path.len() - 1);
            if witness {
                out["witness"] = json!(path.iter().map(|c| c.render(m)).collect::<Vec<_>>());
            }
        }
        Verdict::Unknown { exhausted } => out["exhausted"] = json!(exhausted),
        _ => {}
    }
    out
}

fn exit_for(v: &Verdict) -> u8 {
    if v.is_definite() {
        0
    } else {
        EXHAUSTED
    }
}

fn validate(path: &Path) -> Outcome {
    let m = load(path)?;
    Ok((
        json!({
            "valid": true,
            "name": m.name,
            "states": m.states.len(),
            "rules": m.transitions.len(),
        }),
        0,
    ))
}

fn run(path: &Path, x: &str, budget: Budget, count_paths: bool, witness: bool) -> Outcome {
    let m = load(path)?;
    let b = budget.for_input(&m, x.chars().count());
    let e = explore(&m, x, b).map_err(invalid)?;
    let mut out = verdict_json(&e.verdict, witness, &m);
    out["input"] = json!(x);
    out["configurations"] = json!(e.configurations);
    out["step_cap"] = json!(b.step_cap);
    let mut code = exit_for(&e.verdict);
    if count_paths {
        let paths = count_accepting_paths(&m, x, b, u64::MAX).map_err(invalid)?;
        out["accepting_paths"] = json!(paths.count);
        out["paths_exact"] = json!(paths.exact);
        if !paths.exact {
            code = EXHAUSTED;
        }
    }
    Ok((out, code))
}

fn transform(
    path: &Path,
    op: Op,
    pair: Option<Vec<usize>>,
    ceiling: Option<u32>,
    modulus: Option<u64>,
    output: Option<&Path>,
) -> Outcome {
    let m = load(path)?;
    let p = modulus.unwrap_or_else(|| ceiling.map_or(32, |r| u64::from(r) + 1));
    let result = match op {
        Op::Pair => {
            let pair = pair.ok_or_else(|| invalid("--op pair needs --pair a,b"))?;
            let (a, b) = match pair[..] {
                [a, b] if a >= 1 && b >= 1 => (a - 1, b - 1),
                _ => return Err(invalid("--pair takes two 1-based counter indices")),
            };
            pair_counters(&m, a, b, Modulus::Fixed(p))
        }
        Op::Reduce4 => reduce_counters(&m, p),
        Op::Reduce3pd => reduce_counters_pd(&m, p),
        Op::Eliminate => {
            let r = ceiling.ok_or_else(|| invalid("--op eliminate needs --ceiling"))?;
            Ok(eliminate_counters(&m, r))
        }
    }
    .map_err(invalid)?;
    let text = to_json(&result);
    let mut out = json!({
        "name": result.name,
        "states": result.states.len(),
        "counters": result.counters,
        "rules": result.transitions.len(),
        "provenance": result.provenance,
    });
    match output {
        Some(o) => {
            std::fs::write(o, &text).map_err(|e| invalid(format!("{}: {e}", o.display())))?;
            out["output"] = json!(o.display().to_string());
        }
        None => out["machine"] = serde_json::from_str(&text).expect("own output parses"),
    }
    Ok((out, 0))
}

#[allow(clippy::too_many_arguments)]
fn complement(
    path: &Path,
    x: &str,
    mode: Mode,
    seed: u64,
    layers: Option<u64>,
    pd: bool,
    trace: bool,
    budget: Budget,
) -> Outcome {
    let m = load(path)?;
    let b = budget.for_input(&m, x.chars().count());
    if pd {
        let v = complement_decide_pd(&m, x, b).map_err(invalid)?;
        let mut out = verdict_json(&v, false, &m);
        out["input"] = json!(x);
        out["procedure"] = json!("pushdown");
        let mut code = exit_for(&v);
        if trace {
            let t = complement_trace_pd(&m, x, b, false).map_err(invalid)?;
            out["trace"] = json!({
                "verdict": t.verdict().label(),
                "t_x": t.t_x,
                "conf_count": t.conf_count,
                "events": t.event_count,
                "max_height": t.max_height,
                "consecutive": t.consecutive,
            });
            if t.verdict().is_definite() && v.is_definite() && t.verdict().as_bool() != v.as_bool()
            {
                code = DISAGREEMENT;
            }
        }
        return Ok((out, code));
    }
    match mode {
        Mode::Exact => {
            let r = complement_run_ic(&m, x, b).map_err(invalid)?;
            let mut out = verdict_json(&r.verdict, false, &m);
            out["input"] = json!(x);
            out["procedure"] = json!("inductive-counting");
            out["layers"] = json!(r.layers.iter().map(|l| l.count).collect::<Vec<_>>());
            out["audit"] = json!(r.audit);
            Ok((out, exit_for(&r.verdict)))
        }
        Mode::Guess => {
            let r = match layers {
                Some(r) => r,
                None => runtime_max(&m, x, b)
                    .map_err(invalid)?
                    .steps()
                    .ok_or_else(|| Failure {
                        code: EXHAUSTED,
                        message: "runtime unknown under the budget; pass --layers".into(),
                    })?,
            };
            let g = guessing_mode_run(&m, x, r, &mut SeededChooser::new(seed), None)
                .map_err(invalid)?;
            let (verdict, code) = match &g {
                GuessOutcome::Accept => ("accept", 0),
                GuessOutcome::Reject { .. } => ("reject", 0),
                GuessOutcome::Abort { .. } => ("unknown", EXHAUSTED),
            };
            Ok((
                json!({
                    "verdict": verdict,
                    "input": x,
                    "procedure": "guessing",
                    "seed": seed,
                    "layers": r,
                    "branch": g,
                }),
                code,
            ))
        }
    }
}

fn family_of(name: &str) -> Result<Box<dyn PromiseFamily>, Failure> {
    by_name(name).map_err(invalid)
}

fn check_equiv(
    first: &Path,
    second: &Path,
    max_len: usize,
    family: Option<(String, usize)>,
    budget: Budget,
) -> Outcome {
    let m1 = load(first)?;
    let m2 = load(second)?;
    if m1.alphabet != m2.alphabet {
        return Err(invalid("the machines have different alphabets"));
    }
    let inputs = match &family {
        Some((name, n)) => family_of(name)?.promised(*n, max_len),
        None => strings_up_to(&m1.alphabet, max_len),
    };
    let b1 = budget.for_input(&m1, max_len);
    let b2 = budget.for_input(&m2, max_len);
    let report =
        check_equivalence(&m1, &m2, inputs.iter().map(String::as_str), b1, b2).map_err(invalid)?;
    let code = if !report.disagreements.is_empty() {
        DISAGREEMENT
    } else if !report.unknown.is_empty() {
        EXHAUSTED
    } else {
        0
    };
    let mut out = json!(report);
    out["equivalent"] = json!(report.equivalent());
    Ok((out, code))
}

fn report(path: &Path) -> Outcome {
    let m = load(path)?;
    Ok((
        json!({
            "name": m.name,
            "mode": m.mode,
            "sc": state_complexity(&m),
            "ssc": stack_state_complexity(&m).ok().map(|v| v.to_string()),
            "counters": m.counters,
            "rules": m.transitions.len(),
            "alphabet": m.alphabet,
            "push_size": m.stack.as_ref().map(|s| s.push_size),
        }),
        0,
    ))
}

fn enumerate(
    family: &str,
    n: usize,
    max_len: Option<usize>,
    machine: Option<&Path>,
    budget: Budget,
) -> Outcome {
    let f = family_of(family)?;
    let m = machine.map(load).transpose()?;
    let max_len = max_len.unwrap_or(2 * n + 1);
    let mut code = 0;
    let mut instances = Vec::new();
    for x in f.promised(n, max_len) {
        let membership = f.classify(n, &x);
        let mut entry = json!({ "input": x, "membership": membership });
        if let Some(m) = &m {
            let v = counterlab::decide(m, &x, budget.for_input(m, x.chars().count()))
                .map_err(invalid)?;
            entry["verdict"] = json!(v.label());
            match v.as_bool() {
                None => code = code.max(EXHAUSTED),
                Some(acc) if acc != (membership == Membership::Positive) => code = DISAGREEMENT,
                _ => {}
            }
        }
        instances.push(entry);
    }
    Ok((
        json!({ "family": f.name(), "index": n, "count": instances.len(), "instances": instances }),
        code,
    ))
}

fn dispatch(cli: Cli) -> Outcome {
    match cli.command {
        Command::Validate { machine } => validate(&machine),
        Command::Run {
            machine,
            input,
            budget,
            count_paths,
            witness,
        } => run(&machine, &input, budget, count_paths, witness),
        Command::Transform {
            machine,
            op,
            pair,
            ceiling,
            modulus,
            output,
        } => transform(&machine, op, pair, ceiling, modulus, output.as_deref()),
        Command::Complement {
            machine,
            input,
            mode,
            seed,
            layers,
            pd,
            trace,
            budget,
        } => complement(&machine, &input, mode, seed, layers, pd, trace, budget),
        Command::CheckEquiv {
            first,
            second,
            max_len,
            family,
            budget,
        } => check_equiv(&first, &second, max_len, family.zip(budget.index), budget),
        Command::Report { machine } => report(&machine),
        Command::Enumerate {
            family,
            max_len,
            machine,
            budget,
        } => {
            let n = budget
                .index
                .ok_or_else(|| invalid("enumerate needs --index"))?;
            enumerate(&family, n, max_len, machine.as_deref(), budget)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { VALIDATION } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok((value, code)) => {
            println!("{value}");
            ExitCode::from(code)
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            println!("{}", json!({ "error": f.message }));
            ExitCode::from(f.code)
        }
    }
}
