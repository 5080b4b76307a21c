use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use pdfa_core::cfg::{Block, FlowGraph};
use pdfa_core::dfa::solve_lv;
use pdfa_core::lang::{pretty_print, Label, Program};
use pdfa_core::linalg::DenseMatrix;
use pdfa_core::pai::{quality_table, Abstraction, AbstractionSpec};
use pdfa_core::prob::{
    extract_branch_probs, solve_plv, solve_prob_forward, BranchInfo, PlvSolution, Point, ProbSolution, RandomTransfer,
    SolveOptions, SolveReport,
};
use pdfa_core::semantics::{block_matrix, run_monte_carlo, test_diagonal, McOptions, StateSpace};
use serde_json::{json, Map, Value};

use crate::error::CliError;
use crate::input::{load_distribution, load_program, load_static_probs};
use crate::output::{fmt_matrix, matrix, render, vector};
use crate::{Analysis, Command, Format, ForwardArgs, RandomMode, SolverArgs};

type Doc = Map<String, Value>;

pub fn dispatch(cmd: &Command, format: Format, warn: &mut dyn Write) -> Result<String, CliError> {
    if format == Format::Dot && !matches!(cmd, Command::Cfg { .. }) {
        return Err(CliError::Input("--format dot is only available for `cfg`".into()));
    }
    match cmd {
        Command::Parse { file } => parse(file, format),
        Command::Pretty { file } => pretty(file, format),
        Command::Cfg { file } => cfg(file, format),
        Command::Analyze(Analysis::Lv { file }) => analyze_lv(file, format),
        Command::Analyze(Analysis::Plv {
            file,
            forward,
            static_probs,
            random_transfer,
            solver,
        }) => analyze_plv(
            file,
            forward,
            static_probs.as_deref(),
            *random_transfer,
            solver,
            format,
            warn,
        ),
        Command::BranchProbs { file, forward, solver } => branch_probs(file, forward, solver, format, warn),
        Command::AbstractTest { n } => abstract_test(n, format),
        Command::Exec {
            file,
            trials,
            seed,
            max_steps,
            input_dist,
        } => exec(
            file,
            McOptions {
                trials: *trials,
                seed: *seed,
                max_steps: *max_steps,
            },
            input_dist,
            format,
        ),
        Command::Ops {
            file,
            abstraction,
            label,
            concrete,
            show_abstraction,
        } => ops(
            file,
            abstraction,
            label.map(Label),
            *concrete,
            *show_abstraction,
            format,
        ),
    }
}

fn doc() -> Doc {
    Map::new()
}

fn block_info(program: &Program, g: &FlowGraph) -> Value {
    let blocks: Map<String, Value> = g
        .blocks
        .iter()
        .map(|(l, b)| {
            (
                l.to_string(),
                json!({"kind": b.kind_name(), "text": b.text(&program.decls)}),
            )
        })
        .collect();
    Value::Object(blocks)
}

fn parse(file: &Path, format: Format) -> Result<String, CliError> {
    let program = load_program(file)?;
    let g = FlowGraph::from_program(&program)?;
    if format == Format::Text {
        return Ok(pretty_print(&program));
    }
    let vars: Vec<Value> = program
        .decls
        .iter()
        .map(|(_, d)| json!({"name": d.name, "size": d.size}))
        .collect();
    let mut d = doc();
    d.insert("variables".into(), json!(vars));
    d.insert("labels".into(), json!(program.body.labels()));
    d.insert("blocks".into(), block_info(&program, &g));
    Ok(render(d))
}

fn pretty(file: &Path, format: Format) -> Result<String, CliError> {
    let program = load_program(file)?;
    let text = pretty_print(&program);
    if format == Format::Text {
        return Ok(text);
    }
    let mut d = doc();
    d.insert("program".into(), json!(text));
    Ok(render(d))
}

fn cfg(file: &Path, format: Format) -> Result<String, CliError> {
    let program = load_program(file)?;
    let g = FlowGraph::from_program(&program)?;
    match format {
        Format::Dot => Ok(g.to_dot(&program.decls)),
        Format::Text => {
            let mut s = format!(
                "init: {}\nfinal: {:?}\n",
                g.init,
                g.finals.iter().map(|l| l.0).collect::<Vec<_>>()
            );
            for e in &g.edges {
                let _ = writeln!(s, "{} -> {} ({:?})", e.from, e.to, e.branch);
            }
            Ok(s)
        }
        Format::Json => {
            let mut d = doc();
            d.insert("init".into(), json!(g.init));
            d.insert("finals".into(), json!(g.finals));
            d.insert("blocks".into(), block_info(&program, &g));
            d.insert("edges".into(), serde_json::to_value(&g.edges).expect("serialisable"));
            Ok(render(d))
        }
    }
}

fn analyze_lv(file: &Path, format: Format) -> Result<String, CliError> {
    let program = load_program(file)?;
    let g = FlowGraph::from_program(&program)?;
    let named = solve_lv(&g, &program.decls).named(&program.decls);
    if format == Format::Text {
        let mut s = String::from("label  entry      exit\n");
        for (l, sets) in &named {
            let entry = format!("{{{}}}", sets.entry.join(","));
            let _ = writeln!(s, "{:<6} {entry:<10} {{{}}}", l.to_string(), sets.exit.join(","));
        }
        return Ok(s);
    }
    let d: Doc = named
        .iter()
        .map(|(l, sets)| (l.to_string(), serde_json::to_value(sets).expect("serialisable")))
        .collect();
    Ok(render(d))
}

fn solve_options(args: &SolverArgs) -> Result<SolveOptions, CliError> {
    if !(args.tol > 0.0 && args.tol.is_finite()) {
        return Err(CliError::Input(format!("--tol must be positive, got {}", args.tol)));
    }
    Ok(SolveOptions {
        tol: args.tol,
        max_iter: args.max_iter,
        ..SolveOptions::default()
    })
}

struct Forward {
    abstraction: Abstraction,
    solution: ProbSolution,
    branches: BranchInfo,
}

fn run_forward(
    program: &Program,
    g: &FlowGraph,
    args: &ForwardArgs,
    opts: SolveOptions,
    warn: &mut dyn Write,
) -> Result<Forward, CliError> {
    let ss = StateSpace::new(&program.decls)?;
    let spec: AbstractionSpec = args.abstraction.parse()?;
    let abstraction = Abstraction::for_state_space(&ss, &spec)?;
    let rho = load_distribution(&args.input_dist, &ss)?;
    let solution = solve_prob_forward(program, g, &rho, &abstraction, opts)?;
    let branches = extract_branch_probs(&solution, g)?;
    for (_, w) in branches.warnings() {
        let _ = writeln!(warn, "pdfa: warning: {w}");
    }
    Ok(Forward {
        abstraction,
        solution,
        branches,
    })
}

fn report_json(r: &SolveReport) -> Value {
    serde_json::to_value(r).expect("serialisable")
}

fn warnings_json(b: &BranchInfo) -> Value {
    json!(b.warnings().map(|(_, w)| w).collect::<Vec<_>>())
}

fn edge_table(b: &BranchInfo) -> Vec<Value> {
    let mut rows = Vec::new();
    for (&l, bp) in &b.tests {
        rows.push(json!({"from": l, "to": bp.true_to, "branch": "true", "p": bp.p_true}));
        match bp.false_to {
            Some(to) => rows.push(json!({"from": l, "to": to, "branch": "false", "p": bp.p_false})),
            None => rows.push(json!({"from": l, "to": null, "branch": "exit", "p": bp.p_false})),
        }
    }
    rows
}

fn branch_probs(
    file: &Path,
    fwd: &ForwardArgs,
    solver: &SolverArgs,
    format: Format,
    warn: &mut dyn Write,
) -> Result<String, CliError> {
    let program = load_program(file)?;
    let g = FlowGraph::from_program(&program)?;
    let f = run_forward(&program, &g, fwd, solve_options(solver)?, warn)?;
    if format == Format::Text {
        let mut s = String::from("test  branch  to    p\n");
        for row in edge_table(&f.branches) {
            let to = row["to"].as_u64().map_or("exit".to_string(), |t| t.to_string());
            let _ = writeln!(
                s,
                "{:<5} {:<7} {:<5} {:.6}",
                row["from"].to_string(),
                row["branch"].as_str().unwrap_or(""),
                to,
                row["p"].as_f64().unwrap_or(f64::NAN)
            );
        }
        return Ok(s);
    }
    let mut d = doc();
    d.insert("abstraction".into(), json!(f.abstraction.name()));
    d.insert("input_dist".into(), json!(fwd.input_dist));
    d.insert(
        "branches".into(),
        serde_json::to_value(&f.branches).expect("serialisable"),
    );
    d.insert("edges".into(), json!(edge_table(&f.branches)));
    d.insert("solver".into(), report_json(&f.solution.report));
    d.insert("warnings".into(), warnings_json(&f.branches));
    Ok(render(d))
}

fn point_json(sol: &PlvSolution, program: &Program, l: Label, at: Point) -> Result<Value, CliError> {
    let v = sol.vector(l, at)?;
    let marginals: Map<String, Value> = program
        .decls
        .iter()
        .map(|(id, d)| Ok((d.name.clone(), json!(sol.marginal(l, at, id)?))))
        .collect::<Result<_, CliError>>()?;
    Ok(json!({
        "vector": vector(v),
        "live_sets": serde_json::to_value(sol.decompose(v, &program.decls)).expect("serialisable"),
        "marginals": marginals,
    }))
}

fn analyze_plv(
    file: &Path,
    fwd: &ForwardArgs,
    static_probs: Option<&Path>,
    mode: RandomMode,
    solver: &SolverArgs,
    format: Format,
    warn: &mut dyn Write,
) -> Result<String, CliError> {
    let program = load_program(file)?;
    let g = FlowGraph::from_program(&program)?;
    let opts = solve_options(solver)?;
    let (branches, forward_report, abstraction) = match static_probs {
        Some(path) => (BranchInfo::from_static(&g, &load_static_probs(path)?)?, None, None),
        None => {
            let f = run_forward(&program, &g, fwd, opts, warn)?;
            (
                f.branches,
                Some(f.solution.report),
                Some(f.abstraction.name().to_string()),
            )
        }
    };
    let random = match mode {
        RandomMode::Kill => RandomTransfer::Kill,
        RandomMode::Identity => RandomTransfer::Identity,
    };
    let sol = solve_plv(&g, &program.decls, &branches, random, opts)?;
    if format == Format::Text {
        let mut s = String::new();
        for l in g.labels() {
            for (name, at) in [("entry", Point::Entry), ("exit", Point::Exit)] {
                let parts: Vec<String> = sol
                    .decompose(sol.vector(l, at)?, &program.decls)
                    .iter()
                    .map(|w| format!("{:.4} {{{}}}", w.p, w.live.join(",")))
                    .collect();
                let _ = writeln!(s, "{name}({l}) = {}", parts.join(" + "));
            }
        }
        return Ok(s);
    }
    let mut labels = Map::new();
    for l in g.labels() {
        labels.insert(
            l.to_string(),
            json!({
                "entry": point_json(&sol, &program, l, Point::Entry)?,
                "exit": point_json(&sol, &program, l, Point::Exit)?,
            }),
        );
    }
    let vars: Vec<&str> = program.decls.iter().map(|(_, d)| d.name.as_str()).collect();
    let mut d = doc();
    d.insert("analysis".into(), json!("plv"));
    d.insert("variables".into(), json!(vars));
    d.insert("abstraction".into(), json!(abstraction));
    d.insert(
        "random_transfer".into(),
        json!(match mode {
            RandomMode::Kill => "kill",
            RandomMode::Identity => "identity",
        }),
    );
    d.insert(
        "branches".into(),
        serde_json::to_value(&branches).expect("serialisable"),
    );
    d.insert("labels".into(), Value::Object(labels));
    d.insert(
        "solver".into(),
        json!({"forward": forward_report.as_ref().map(report_json), "backward": report_json(&sol.report)}),
    );
    d.insert("warnings".into(), warnings_json(&branches));
    Ok(render(d))
}

const TABLE_NAMES: [&str; 4] = [
    "prime_given_parity",
    "nonprime_given_parity",
    "even_given_primality",
    "odd_given_primality",
];

const TABLE_HEADERS: [&str; 4] = [
    "prime | parity",
    "non-prime | parity",
    "even | primality",
    "odd | primality",
];

fn abstract_test(ns: &[usize], format: Format) -> Result<String, CliError> {
    let tables = ns
        .iter()
        .map(|&n| quality_table(n).map_err(|e| CliError::Input(e.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    if format == Format::Text {
        let mut s = format!("{:<8}", "n");
        for h in TABLE_HEADERS {
            let _ = write!(s, "{h:<22}");
        }
        s = s.trim_end().to_string();
        s.push('\n');
        for t in &tables {
            let rounded = t.rounded();
            for row in 0..2 {
                let mut line = if row == 0 { format!("{:<8}", t.n) } else { " ".repeat(8) };
                for m in &rounded {
                    let _ = write!(line, "{:<22}", format!("{:.2}  {:.2}", m[(row, 0)], m[(row, 1)]));
                }
                s.push_str(line.trim_end());
                s.push('\n');
            }
        }
        return Ok(s);
    }
    let rows: Vec<Value> = tables
        .iter()
        .map(|t| {
            let mut m = Map::new();
            m.insert("n".into(), json!(t.n));
            for ((name, exact), rounded) in TABLE_NAMES.iter().zip(t.matrices()).zip(t.rounded()) {
                m.insert(
                    (*name).into(),
                    json!({"values": matrix(exact), "rounded": matrix(&rounded)}),
                );
            }
            Value::Object(m)
        })
        .collect();
    let mut d = doc();
    d.insert("tables".into(), json!(rows));
    Ok(render(d))
}

fn exec(file: &Path, opts: McOptions, input_dist: &str, format: Format) -> Result<String, CliError> {
    let program = load_program(file)?;
    let ss = StateSpace::new(&program.decls)?;
    let rho = load_distribution(input_dist, &ss)?;
    let report = run_monte_carlo(&program, &rho, opts)?;
    if format == Format::Text {
        let mut s = String::from("from  to    count       freq\n");
        for e in &report.edges {
            let _ = writeln!(
                s,
                "{:<5} {:<5} {:<11} {:.6}",
                e.from.to_string(),
                e.to.to_string(),
                e.count,
                e.freq
            );
        }
        let _ = writeln!(s, "nonterminated: {}\nfaults: {}", report.nonterminated, report.faults);
        return Ok(s);
    }
    let mut d = match serde_json::to_value(&report).expect("serialisable") {
        Value::Object(m) => m,
        _ => unreachable!("report serialises to an object"),
    };
    d.insert("seed".into(), json!(opts.seed));
    d.insert("max_steps".into(), json!(opts.max_steps));
    Ok(render(d))
}

fn ops(
    file: &Path,
    spec: &str,
    only: Option<Label>,
    concrete: bool,
    show_abstraction: bool,
    format: Format,
) -> Result<String, CliError> {
    let program = load_program(file)?;
    let g = FlowGraph::from_program(&program)?;
    let ss = StateSpace::new(&program.decls)?;
    let spec: AbstractionSpec = spec.parse()?;
    let abs = Abstraction::for_state_space(&ss, &spec)?;
    if let Some(l) = only {
        if !g.blocks.contains_key(&l) {
            return Err(CliError::Input(format!("label {l} does not exist")));
        }
    }
    let mut entries: BTreeMap<Label, (DenseMatrix, Option<DenseMatrix>)> = BTreeMap::new();
    for (&l, block) in &g.blocks {
        if only.is_some_and(|o| o != l) {
            continue;
        }
        let conc = match block {
            Block::Test { cond, .. } => DenseMatrix::from_diagonal(&test_diagonal(cond, &ss)?),
            _ => block_matrix(block, &ss)?,
        };
        let lifted = match block {
            Block::Test { .. } => abs.abstract_test_diagonal(&conc.diagonal())?,
            _ => abs.lift_operator(&conc)?,
        };
        entries.insert(l, (lifted, concrete.then_some(conc)));
    }
    if format == Format::Text {
        let mut s = format!(
            "abstraction: {} ({} -> {} states)\n",
            abs.name(),
            ss.len(),
            abs.abstract_len()
        );
        for (l, (lifted, conc)) in &entries {
            let b = &g.blocks[l];
            let kind = if b.is_test() { "test" } else { "block" };
            let _ = writeln!(s, "\n[{}]^{l} ({kind}, abstract)", b.text(&program.decls));
            s.push_str(&fmt_matrix(lifted, 4));
            if let Some(c) = conc {
                let _ = writeln!(s, "[{}]^{l} (concrete)", b.text(&program.decls));
                s.push_str(&fmt_matrix(c, 4));
            }
        }
        return Ok(s);
    }
    let mut labels = Map::new();
    for (l, (lifted, conc)) in &entries {
        let b = &g.blocks[l];
        let mut m = Map::new();
        m.insert("kind".into(), json!(b.kind_name()));
        m.insert("text".into(), json!(b.text(&program.decls)));
        m.insert("abstract".into(), matrix(lifted));
        if let Some(c) = conc {
            m.insert("concrete".into(), matrix(c));
        }
        labels.insert(l.to_string(), Value::Object(m));
    }
    let mut d = doc();
    d.insert(
        "abstraction".into(),
        json!({"name": abs.name(), "states": ss.len(), "abstract_states": abs.abstract_len()}),
    );
    if show_abstraction {
        d.insert("classes".into(), json!(abs.classes()));
        d.insert("classification".into(), matrix(abs.matrix()));
        d.insert("pseudo_inverse".into(), matrix(abs.pseudo_inverse()));
    }
    d.insert("labels".into(), Value::Object(labels));
    Ok(render(d))
}
