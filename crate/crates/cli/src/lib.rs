//! Batch command-line front end. [`run`] parses arguments, dispatches to the library and writes
//! deterministic output. Exit codes: 0 success, 1 mathematical failure, 2 input error.

use std::collections::BTreeMap;
use std::io::Write;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use opgraph::graph_core::{
    add_graph, canonical_form, format_comb, graph_comb, lincomb_combine, lincomb_from_json,
    lincomb_to_json, GraphComb, GraphError, Kind, SignedGraph,
};
use opgraph::graph_operads::{
    directed_expansion, gra1_compose, gra_compose, graphs_on, operad_axiom_report, sgra1_cyclic,
    sgra_insert, sym_action,
};
use opgraph::homology::{
    betti, betti_json, enumerate_slice_capped, pdu_basis, pdu_differential, string_basis,
    HomologyError, SliceFamily, MAX_INTERNAL_CAP,
};
use opgraph::representations::{
    act_dgra, act_gra1, act_graph_comb, act_sgra, braces, moyal_star, parse_form, parse_operator,
    parse_polyvector, random_poly, schouten_bracket, star_associativity_failures,
    star_from_weights, PolyOperator, RepError, Series, SuperPoly,
};
use opgraph::scalar_linalg::{
    format_rational, kernel_basis, parse_rational, rank, Rational, SparseMatrix,
};
use opgraph::suites::Suite;
use opgraph::tree_operads::{
    br_differential, brinf_differential, enumerate_br_trees, enumerate_brinf_trees,
    format_tree_comb, ks1_compose, ks1_normalize, parse_tree, parse_tree_as,
    planar_leibniz_residual, pt_compose, tree_comb_to_json, PlanarTree, TreeComb, TreeError,
    TreeKind,
};
use opgraph::twisting::{
    apply_lc, constant_bivector_part, graphs1_differential, graphs_differential, graphs_membership,
    mc_residual, sgraphs_differential, Family, WeightSystem,
};

/// Environment variable overriding the internal-vertex cap of slice enumeration.
pub const MAX_INTERNAL_ENV: &str = "OPGRAPH_MAX_INTERNAL";

#[derive(Parser, Debug)]
#[command(
    name = "opgraph",
    version,
    about = "Graph and tree operads with exact arithmetic"
)]
struct Cli {
    /// Emit machine-readable JSON.
    #[arg(long, global = true)]
    json: bool,
    /// Seed for randomized suites and samples.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for independent slices and suites.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Operadic composition of graphs or trees.
    Compose(ComposeArgs),
    /// Differential of a graph or tree.
    Diff(DiffArgs),
    /// Checks d² = 0 on every graph or tree of a bounded sample.
    D2check(D2Args),
    /// Membership of a graph in a twisted family.
    Membership(MembershipArgs),
    /// Betti numbers of a complex slice, or the rank of a matrix.
    Betti(BettiArgs),
    /// Slice bases, the basis lemmas, or a matrix kernel.
    Basis(BasisArgs),
    /// Actions on polyvector fields, forms and polydifferential operators.
    Act {
        #[command(subcommand)]
        op: ActCmd,
    },
    /// Star products and the Maurer-Cartan residual.
    Star {
        #[command(subcommand)]
        op: StarCmd,
    },
    /// Relation suites, the planar Leibniz residual and operad axioms.
    Verify(VerifyArgs),
    /// Parses a tree expression and prints its canonical form.
    Parse(ParseArgs),
    /// Canonical forms, group actions, directed expansion and linear combination.
    Normalize(NormalizeArgs),
}

#[derive(Args, Debug)]
struct ComposeArgs {
    #[arg(long, allow_hyphen_values = true)]
    lhs: String,
    #[arg(long, allow_hyphen_values = true)]
    rhs: String,
    /// Insertion slot; not used by gra1 and ks1 compositions.
    #[arg(long)]
    slot: Option<u32>,
    /// Tree kind to read both trees as.
    #[arg(long)]
    kind: Option<String>,
}

#[derive(Args, Debug)]
struct DiffArgs {
    /// A graph literal or a tree expression.
    expr: String,
    /// Edge-contraction predual differential instead of vertex splitting.
    #[arg(long)]
    predual: bool,
    /// Weight system for sgra graphs: `default`, `moyal:N`, or JSON.
    #[arg(long)]
    weights: Option<String>,
    #[arg(long)]
    kind: Option<String>,
}

#[derive(Args, Debug)]
struct D2Args {
    /// graphs, graphs1, pdu-graphs, pdu-graphs1, br, binf or bbr.
    #[arg(long)]
    family: String,
    #[arg(long, visible_alias = "m")]
    n: Option<u32>,
    #[arg(long)]
    max_internal: Option<u32>,
    #[arg(long, default_value_t = 4)]
    max_edges: usize,
    /// Use directed graphs for the graphs family.
    #[arg(long)]
    directed: bool,
    /// Vertex bound for tree families.
    #[arg(long)]
    max_vertices: Option<usize>,
}

#[derive(Args, Debug)]
struct MembershipArgs {
    graph: String,
    /// graphs, graphs1, sgraphs or sgraphs1.
    #[arg(long)]
    family: String,
}

#[derive(Args, Debug)]
struct BettiArgs {
    #[arg(long)]
    family: Option<String>,
    #[arg(long, visible_alias = "m")]
    n: Option<u32>,
    /// A single loop order; without it slices are summed over 0..=max-loop.
    #[arg(long)]
    loop_order: Option<u32>,
    #[arg(long)]
    max_loop: Option<u32>,
    #[arg(long)]
    max_internal: Option<u32>,
    /// Rank of a matrix written `1,0;0,1`.
    #[arg(long, allow_hyphen_values = true)]
    matrix: Option<String>,
}

#[derive(Args, Debug)]
struct BasisArgs {
    /// pdu, string, or a slice family.
    #[arg(long)]
    family: Option<String>,
    #[arg(long, visible_alias = "m")]
    n: Option<u32>,
    #[arg(long, default_value_t = 0)]
    loop_order: u32,
    #[arg(long)]
    max_internal: Option<u32>,
    /// Kernel basis of a matrix written `1,-1;2,-2`.
    #[arg(long, allow_hyphen_values = true)]
    matrix: Option<String>,
}

#[derive(Args, Debug)]
struct ActArgs {
    #[arg(long)]
    graph: Option<String>,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// The form acted on by gra1 graphs.
    #[arg(long, allow_hyphen_values = true)]
    form: Option<String>,
    /// Functions to evaluate the sgra operator on.
    #[arg(long, num_args = 1.., allow_hyphen_values = true)]
    eval: Vec<String>,
    /// Polyvector or operator inputs.
    #[arg(allow_hyphen_values = true)]
    inputs: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum ActCmd {
    /// Action of a dgra graph (gra graphs act through their directed expansion).
    Dgra(ActArgs),
    /// The Schouten bracket of two polyvectors.
    Schouten(ActArgs),
    /// The polydifferential operator of an sgra graph.
    Sgra(ActArgs),
    /// Brace operation a0{a1,…,ak} on polydifferential operators.
    Braces(ActArgs),
    /// Action of a gra1 graph on polyvectors and a form.
    Gra1(ActArgs),
}

#[derive(Args, Debug)]
struct StarArgs {
    #[arg(long, allow_hyphen_values = true)]
    f: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    g: Option<String>,
    /// Third function for an associativity check.
    #[arg(long, allow_hyphen_values = true)]
    h: Option<String>,
    #[arg(long, default_value = "xi1*xi2", allow_hyphen_values = true)]
    pi: String,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 3)]
    order: u32,
    /// `default`, `moyal:N`, or a JSON weight system.
    #[arg(long, default_value = "default")]
    weights: String,
    /// Keep only terms with constant bivector coefficients.
    #[arg(long)]
    constant_bivector: bool,
    /// Number of random triples for the associativity check.
    #[arg(long, default_value_t = 0)]
    samples: usize,
}

#[derive(Subcommand, Debug)]
enum StarCmd {
    /// The Moyal product truncated at the given order.
    Moyal(StarArgs),
    /// The product defined by a weight system; checks associativity when --h or --samples is set.
    Weights(StarArgs),
    /// Residual of the Maurer-Cartan equation, per order.
    Mc(StarArgs),
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Suites to run; all by default.
    #[arg(long)]
    suite: Vec<String>,
    /// Planar Leibniz residual for generators `M,N`.
    #[arg(long)]
    leibniz: Option<String>,
    #[arg(long)]
    primed: bool,
    /// Operad axioms of the given graph kind on the graphs passed with --graph.
    #[arg(long)]
    axioms: Option<String>,
    #[arg(long)]
    graph: Vec<String>,
}

#[derive(Args, Debug)]
struct ParseArgs {
    expr: String,
    #[arg(long)]
    kind: Option<String>,
}

#[derive(Args, Debug)]
struct NormalizeArgs {
    /// A graph literal, LinComb JSON or tree expression.
    expr: String,
    /// Permutation of external labels, e.g. `2,1,3`.
    #[arg(long)]
    perm: Option<String>,
    /// Cyclic rotation of an sgra1 graph by k.
    #[arg(long, allow_hyphen_values = true)]
    cyclic: Option<i64>,
    /// Expansion of an undirected graph into directed ones.
    #[arg(long)]
    directed: bool,
    /// Second operand of `expr + coef * other`.
    #[arg(long)]
    combine: Option<String>,
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    coef: String,
    #[arg(long)]
    kind: Option<String>,
}

/// Why a command did not succeed.
#[derive(Debug)]
enum CliError {
    /// Bad input, optionally located in a literal.
    Input {
        msg: String,
        at: Option<(String, usize)>,
    },
}

impl CliError {
    fn msg(m: impl Into<String>) -> Self {
        CliError::Input {
            msg: m.into(),
            at: None,
        }
    }

    fn at(src: &str, pos: usize, m: String) -> Self {
        CliError::Input {
            msg: m,
            at: Some((src.to_string(), pos)),
        }
    }
}

impl From<HomologyError> for CliError {
    fn from(e: HomologyError) -> Self {
        CliError::msg(e.to_string())
    }
}

/// `Ok(true)` on success, `Ok(false)` on a mathematical failure.
type Outcome = Result<bool, CliError>;

struct Ctx {
    json: bool,
    seed: u64,
    out: Vec<u8>,
    max_internal_env: Option<u32>,
}

impl Ctx {
    fn line(&mut self, s: impl AsRef<str>) {
        let _ = writeln!(self.out, "{}", s.as_ref());
    }
}

/// Runs the CLI on `argv` (including the program name) and returns the exit code.
pub fn run(argv: &[String], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return if code == 0 { 0 } else { 2 };
        }
    };
    let env_cap = match std::env::var(MAX_INTERNAL_ENV) {
        Ok(v) => {
            match v.trim().parse::<u32>() {
                Ok(k) if k <= MAX_INTERNAL_CAP => Some(k),
                _ => {
                    let _ = writeln!(err, "error: {MAX_INTERNAL_ENV}={v} must be an integer at most {MAX_INTERNAL_CAP}");
                    return 2;
                }
            }
        }
        Err(_) => None,
    };
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs.unwrap_or(0))
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return 2;
        }
    };
    let mut ctx = Ctx {
        json: cli.json,
        seed: cli.seed,
        out: Vec::new(),
        max_internal_env: env_cap,
    };
    let res = pool.install(|| dispatch(&mut ctx, cli.cmd));
    let _ = out.write_all(&ctx.out);
    let _ = out.flush();
    match res {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(CliError::Input { msg, at }) => {
            let _ = writeln!(err, "error: {msg}");
            if let Some((src, pos)) = at {
                let _ = writeln!(err, "  {src}");
                let _ = writeln!(err, "  {}^", " ".repeat(pos));
            }
            2
        }
    }
}

fn dispatch(ctx: &mut Ctx, cmd: Cmd) -> Outcome {
    match cmd {
        Cmd::Compose(a) => compose(ctx, a),
        Cmd::Diff(a) => diff(ctx, a),
        Cmd::D2check(a) => d2check(ctx, a),
        Cmd::Membership(a) => membership(ctx, a),
        Cmd::Betti(a) => betti_cmd(ctx, a),
        Cmd::Basis(a) => basis_cmd(ctx, a),
        Cmd::Act { op } => act(ctx, op),
        Cmd::Star { op } => star(ctx, op),
        Cmd::Verify(a) => verify(ctx, a),
        Cmd::Parse(a) => parse_cmd(ctx, a),
        Cmd::Normalize(a) => normalize(ctx, a),
    }
}

// Input parsing.

fn is_graph_literal(s: &str) -> bool {
    s.trim_start()
        .split('{')
        .next()
        .is_some_and(|k| s.contains('{') && Kind::from_name(k.trim()).is_some())
}

fn graph_err(src: &str, e: GraphError) -> CliError {
    match e {
        GraphError::Parse { pos, msg } => {
            CliError::at(src, pos, format!("parse error at position {pos}: {msg}"))
        }
        e => CliError::msg(e.to_string()),
    }
}

fn tree_err(src: &str, e: TreeError) -> CliError {
    match e {
        TreeError::Parse { pos, msg } => {
            CliError::at(src, pos, format!("parse error at position {pos}: {msg}"))
        }
        e => CliError::msg(e.to_string()),
    }
}

fn rep_err(src: &str, e: RepError) -> CliError {
    match e {
        RepError::Parse { pos, msg } => {
            CliError::at(src, pos, format!("parse error at position {pos}: {msg}"))
        }
        e => CliError::msg(e.to_string()),
    }
}

fn math_err(e: impl std::fmt::Display) -> CliError {
    CliError::msg(e.to_string())
}

fn graph(s: &str) -> Result<SignedGraph, CliError> {
    s.parse::<SignedGraph>().map_err(|e| graph_err(s, e))
}

fn tree_kind(k: &str) -> Result<TreeKind, CliError> {
    TreeKind::from_name(k).ok_or_else(|| CliError::msg(format!("unknown tree kind `{k}`")))
}

fn tree(s: &str, kind: Option<&str>) -> Result<PlanarTree, CliError> {
    match kind {
        Some(k) => parse_tree_as(s, tree_kind(k)?),
        None => parse_tree(s),
    }
    .map_err(|e| tree_err(s, e))
}

/// A graph literal or a LinComb JSON document.
fn graph_comb_arg(s: &str) -> Result<(Kind, GraphComb), CliError> {
    if s.trim_start().starts_with('{') {
        let v: Value =
            serde_json::from_str(s).map_err(|e| CliError::msg(format!("invalid JSON: {e}")))?;
        lincomb_from_json(&v).map_err(|e| graph_err(s, e))
    } else {
        let g = graph(s)?;
        Ok((g.kind, graph_comb(&g)))
    }
}

fn poly(s: &str, d: usize) -> Result<SuperPoly, CliError> {
    parse_polyvector(s, d).map_err(|e| rep_err(s, e))
}

fn rational(s: &str) -> Result<Rational, CliError> {
    parse_rational(s.trim()).map_err(|e| CliError::at(s, 0, e.to_string()))
}

/// A matrix written row by row: entries separated by `,`, rows by `;`.
fn matrix(s: &str) -> Result<SparseMatrix, CliError> {
    let mut rows: Vec<Vec<Rational>> = Vec::new();
    let mut pos = 0;
    for row in s.split(';') {
        let mut r = Vec::new();
        for entry in row.split(',') {
            let lead = entry.chars().take_while(|c| c.is_whitespace()).count();
            let v = parse_rational(entry.trim()).map_err(|e| {
                CliError::at(
                    s,
                    pos + lead,
                    format!("bad matrix entry at position {}: {e}", pos + lead),
                )
            })?;
            r.push(v);
            pos += entry.chars().count() + 1;
        }
        if rows.first().is_some_and(|f| f.len() != r.len()) {
            return Err(CliError::at(s, pos - 1, "rows of different lengths".into()));
        }
        rows.push(r);
    }
    Ok(SparseMatrix::from_dense(&rows))
}

fn weights(s: &str) -> Result<WeightSystem, CliError> {
    let s = s.trim();
    if s == "default" {
        return Ok(WeightSystem::default_mc());
    }
    if let Some(k) = s.strip_prefix("moyal:") {
        let k: u32 = k
            .parse()
            .map_err(|_| CliError::msg(format!("bad order in `{s}`")))?;
        return WeightSystem::moyal(k).map_err(math_err);
    }
    let v: Value = serde_json::from_str(s)
        .map_err(|e| CliError::msg(format!("weights must be default, moyal:N or JSON: {e}")))?;
    WeightSystem::from_json(&v).map_err(math_err)
}

fn internal_cap(ctx: &Ctx, flag: Option<u32>, default: u32) -> Result<u32, CliError> {
    let k = flag.or(ctx.max_internal_env).unwrap_or(default);
    if k > MAX_INTERNAL_CAP {
        return Err(CliError::msg(format!(
            "at most {MAX_INTERNAL_CAP} internal vertices are supported, got {k}"
        )));
    }
    Ok(k)
}

// Output.

fn print_graphs(ctx: &mut Ctx, kind: Kind, lc: &GraphComb) {
    let s = if ctx.json {
        lincomb_to_json(kind, lc).to_string()
    } else {
        format_comb(lc)
    };
    ctx.line(s);
}

fn print_trees(ctx: &mut Ctx, kind: TreeKind, lc: &TreeComb) {
    let s = if ctx.json {
        tree_comb_to_json(kind, lc).to_string()
    } else {
        format_tree_comb(lc)
    };
    ctx.line(s);
}

fn print_signed(ctx: &mut Ctx, kind: Kind, r: Option<(SignedGraph, i8)>) {
    let mut lc = GraphComb::new();
    if let Some((g, s)) = r {
        add_graph(&mut lc, &g, &Rational::from_integer(s.into()));
    }
    print_graphs(ctx, kind, &lc);
}

fn print_poly(ctx: &mut Ctx, p: &SuperPoly) {
    let s = if ctx.json {
        json!({"dim": p.dim(), "poly": p.to_string()}).to_string()
    } else {
        p.to_string()
    };
    ctx.line(s);
}

fn print_operator(ctx: &mut Ctx, op: &PolyOperator) {
    let s = if ctx.json {
        json!({"dim": op.dim(), "arity": op.arity(), "operator": op.format()}).to_string()
    } else {
        op.format()
    };
    ctx.line(s);
}

fn print_series(ctx: &mut Ctx, s: &Series) {
    if ctx.json {
        let orders: Vec<String> = s.iter().map(|p| p.to_string()).collect();
        ctx.line(json!({"orders": orders}).to_string());
    } else {
        for (k, p) in s.iter().enumerate() {
            ctx.line(format!("eps^{k}: {p}"));
        }
    }
}

fn betti_plain(b: &BTreeMap<i64, usize>) -> String {
    let entries: Vec<String> = b
        .iter()
        .rev()
        .map(|(p, k)| format!("\"{p}\":{k}"))
        .collect();
    format!("{{{}}}", entries.join(","))
}

fn graph_list(ctx: &mut Ctx, gs: &[SignedGraph]) {
    if ctx.json {
        let v: Vec<String> = gs.iter().map(|g| g.to_string()).collect();
        ctx.line(Value::from(v).to_string());
    } else {
        for g in gs {
            ctx.line(g.to_string());
        }
    }
}

// Commands.

fn compose(ctx: &mut Ctx, a: ComposeArgs) -> Outcome {
    let need_slot = || {
        a.slot
            .ok_or_else(|| CliError::msg("this composition needs --slot"))
    };
    if is_graph_literal(&a.lhs) {
        let (g1, g2) = (graph(&a.lhs)?, graph(&a.rhs)?);
        let lc = match g1.kind {
            Kind::Gra1 => gra1_compose(&g1, &g2),
            Kind::Sgra => sgra_insert(&g1, need_slot()?, &g2),
            Kind::Gra | Kind::Dgra => gra_compose(&g1, need_slot()?, &g2),
            Kind::Sgra1 => {
                return Err(CliError::msg(
                    "composition of sgra1 graphs is not supported",
                ))
            }
        }
        .map_err(math_err)?;
        print_graphs(ctx, g1.kind, &lc);
        return Ok(true);
    }
    let t1 = tree(&a.lhs, a.kind.as_deref())?;
    let t2 = match a.kind {
        Some(_) => tree(&a.rhs, a.kind.as_deref())?,
        None => parse_tree_as(&a.rhs, t1.kind)
            .or_else(|_| tree(&a.rhs, None).map_err(|e| TreeError::Mismatch(format!("{e:?}"))))
            .map_err(|e| tree_err(&a.rhs, e))?,
    };
    let t1 = if t2.kind != t1.kind {
        tree(&a.lhs, Some(t2.kind.name()))?
    } else {
        t1
    };
    let lc = match t1.kind {
        TreeKind::Pt1 | TreeKind::Ks1 => ks1_compose(&t1, &t2),
        _ => pt_compose(&t1, need_slot()?, &t2),
    }
    .map_err(math_err)?;
    print_trees(ctx, t1.kind, &lc);
    Ok(true)
}

fn graph_differential(
    g: &SignedGraph,
    predual: bool,
    w: &WeightSystem,
) -> Result<GraphComb, CliError> {
    let family = match g.kind {
        Kind::Gra | Kind::Dgra => Family::Graphs,
        Kind::Gra1 => Family::Graphs1,
        Kind::Sgra => Family::SGraphs,
        Kind::Sgra1 => {
            return Err(CliError::msg(
                "no differential is implemented for sgra1 graphs",
            ))
        }
    };
    match (family, predual) {
        (Family::SGraphs, true) => Err(GraphError::Mismatch(
            "the predual differential is defined for gra, dgra and gra1".into(),
        )),
        (_, true) => pdu_differential(family, g),
        (Family::Graphs, false) => graphs_differential(g),
        (Family::Graphs1, false) => graphs1_differential(g),
        _ => sgraphs_differential(g, w),
    }
    .map_err(math_err)
}

fn diff(ctx: &mut Ctx, a: DiffArgs) -> Outcome {
    if is_graph_literal(&a.expr) {
        let g = graph(&a.expr)?;
        let w = weights(a.weights.as_deref().unwrap_or("default"))?;
        let lc = graph_differential(&g, a.predual, &w)?;
        print_graphs(ctx, g.kind, &lc);
        return Ok(true);
    }
    let t = tree(&a.expr, a.kind.as_deref())?;
    let lc = match t.kind {
        TreeKind::Binf | TreeKind::Bbr => brinf_differential(&t),
        _ => br_differential(&t),
    }
    .map_err(math_err)?;
    print_trees(ctx, t.kind, &lc);
    Ok(true)
}

fn d2check(ctx: &mut Ctx, a: D2Args) -> Outcome {
    let trees = match a.family.as_str() {
        "br" => Some(enumerate_br_trees(a.max_vertices.unwrap_or(6))),
        "binf" | "bbr" => {
            let kind = tree_kind(&a.family)?;
            Some(enumerate_brinf_trees(a.max_vertices.unwrap_or(5), kind))
        }
        _ => None,
    };
    if let Some(trees) = trees {
        let bad: Vec<String> = trees
            .par_iter()
            .filter_map(|t| {
                let d = match t.kind {
                    TreeKind::Binf | TreeKind::Bbr => brinf_differential(t)
                        .and_then(|x| opgraph::tree_operads::brinf_differential_lc(&x)),
                    _ => br_differential(t)
                        .and_then(|x| opgraph::tree_operads::br_differential_lc(&x)),
                };
                match d {
                    Ok(dd) if dd.is_empty() => None,
                    Ok(_) => Some(format!("d² ≠ 0 on {t}")),
                    Err(e) => Some(format!("{t}: {e}")),
                }
            })
            .collect();
        return report_d2(ctx, &a.family, None, trees.len(), &bad);
    }
    let fam = SliceFamily::from_name(&a.family).ok_or_else(|| {
        CliError::msg(format!("unknown family `{}`; expected graphs, graphs1, pdu-graphs, pdu-graphs1, br, binf or bbr", a.family))
    })?;
    let n =
        a.n.ok_or_else(|| CliError::msg("graph families need --n"))?;
    let kmax = internal_cap(ctx, a.max_internal, 2)?;
    let kind = match fam.family() {
        Family::Graphs if a.directed => Kind::Dgra,
        f => {
            if f == Family::Graphs {
                Kind::Gra
            } else {
                Kind::Gra1
            }
        }
    };
    let sample: Vec<SignedGraph> = (0..=kmax)
        .flat_map(|k| {
            graphs_on(
                &SignedGraph::new(kind, n, Vec::new()).with_internal(k),
                a.max_edges,
            )
        })
        .collect();
    let w = WeightSystem::default_mc();
    let predual = fam.is_predual();
    let bad: Vec<String> = sample
        .par_iter()
        .filter_map(|g| {
            let d = |x: &SignedGraph| {
                graph_differential(x, predual, &w)
                    .map_err(|CliError::Input { msg, .. }| GraphError::Mismatch(msg))
            };
            match d(g).and_then(|x| apply_lc(&x, &d)) {
                Ok(dd) if dd.is_empty() => None,
                Ok(dd) => Some(format!(
                    "d² ≠ 0 on {g}: {}",
                    format_comb(&dd).replace('\n', " + ")
                )),
                Err(e) => Some(format!("{g}: {e}")),
            }
        })
        .collect();
    report_d2(ctx, fam.name(), Some(n), sample.len(), &bad)
}

fn report_d2(
    ctx: &mut Ctx,
    family: &str,
    n: Option<u32>,
    checked: usize,
    bad: &[String],
) -> Outcome {
    if ctx.json {
        ctx.line(
            json!({"family": family, "n": n, "checked": checked, "failures": bad}).to_string(),
        );
    } else if bad.is_empty() {
        ctx.line(format!("d² = 0 on all {checked} elements"));
    } else {
        ctx.line(format!("d² ≠ 0 on {} of {checked} elements", bad.len()));
        for b in bad.iter().take(10) {
            ctx.line(format!("  {b}"));
        }
    }
    Ok(bad.is_empty())
}

fn membership(ctx: &mut Ctx, a: MembershipArgs) -> Outcome {
    let g = graph(&a.graph)?;
    let family = Family::from_name(&a.family).ok_or_else(|| {
        CliError::msg(format!(
            "unknown family `{}`; expected graphs, graphs1, sgraphs or sgraphs1",
            a.family
        ))
    })?;
    let m = graphs_membership(&g, family);
    let s = if ctx.json {
        json!({"graph": g.to_string(), "family": family.name(), "member": m}).to_string()
    } else {
        m.to_string()
    };
    ctx.line(s);
    Ok(true)
}

fn slice_family(name: Option<&str>) -> Result<SliceFamily, CliError> {
    let name = name.ok_or_else(|| CliError::msg("--family is required"))?;
    SliceFamily::from_name(name).ok_or_else(|| {
        CliError::msg(format!(
            "unknown family `{name}`; expected graphs, graphs1, pdu-graphs or pdu-graphs1"
        ))
    })
}

fn betti_cmd(ctx: &mut Ctx, a: BettiArgs) -> Outcome {
    if let Some(m) = &a.matrix {
        let m = matrix(m)?;
        let r = rank(&m);
        let s = if ctx.json {
            json!({"rows": m.rows(), "cols": m.cols(), "rank": r}).to_string()
        } else {
            r.to_string()
        };
        ctx.line(s);
        return Ok(true);
    }
    let fam = slice_family(a.family.as_deref())?;
    let n =
        a.n.ok_or_else(|| CliError::msg("--n (or --m) is required"))?;
    let loops: Vec<u32> = match a.loop_order {
        Some(l) => vec![l],
        None => {
            let default = if fam.family() == Family::Graphs { 2 } else { 1 };
            (0..=a.max_loop.unwrap_or(default)).collect()
        }
    };
    let caps = loops
        .iter()
        .map(|&l| internal_cap(ctx, a.max_internal, fam.default_max_internal(n, l)))
        .collect::<Result<Vec<_>, _>>()?;
    let parts = loops
        .par_iter()
        .zip(caps)
        .map(|(&l, cap)| enumerate_slice_capped(fam, n, l, cap).map(|s| betti(&s)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut total = BTreeMap::new();
    for b in parts {
        for (p, k) in b {
            *total.entry(p).or_insert(0) += k;
        }
    }
    let s = if ctx.json {
        betti_json(fam, n, &total)
    } else {
        betti_plain(&total)
    };
    ctx.line(s);
    Ok(true)
}

fn basis_cmd(ctx: &mut Ctx, a: BasisArgs) -> Outcome {
    if let Some(m) = &a.matrix {
        let m = matrix(m)?;
        let cols = m.cols();
        let dense: Vec<Vec<String>> = kernel_basis(&m)
            .iter()
            .map(|v| {
                (0..cols)
                    .map(|c| v.get(&c).map_or("0".into(), format_rational))
                    .collect()
            })
            .collect();
        if ctx.json {
            ctx.line(Value::from(dense).to_string());
        } else {
            for v in dense {
                ctx.line(format!("({})", v.join(", ")));
            }
        }
        return Ok(true);
    }
    let n = a.n.ok_or_else(|| CliError::msg("--n is required"))?;
    match a.family.as_deref() {
        Some("pdu") => graph_list(ctx, &pdu_basis(n)?),
        Some("string") => graph_list(ctx, &string_basis(n)?),
        name => {
            let fam = slice_family(name)?;
            let cap = internal_cap(
                ctx,
                a.max_internal,
                fam.default_max_internal(n, a.loop_order),
            )?;
            let s = enumerate_slice_capped(fam, n, a.loop_order, cap)?;
            if ctx.json {
                let basis: serde_json::Map<String, Value> = s
                    .basis
                    .iter()
                    .rev()
                    .map(|(p, gs)| {
                        (
                            p.to_string(),
                            Value::from(gs.iter().map(|g| g.to_string()).collect::<Vec<_>>()),
                        )
                    })
                    .collect();
                ctx.line(
                    json!({"family": fam.name(), "n": n, "loop_order": a.loop_order, "exact_degrees": s.exact_degrees(), "basis": basis})
                        .to_string(),
                );
            } else {
                for (p, gs) in s.basis.iter().rev() {
                    let note = if s.is_complete(*p) {
                        ""
                    } else {
                        " (truncated)"
                    };
                    ctx.line(format!("degree {p}: {} graphs{note}", gs.len()));
                    for g in gs {
                        ctx.line(format!("  {g}"));
                    }
                }
            }
        }
    }
    Ok(true)
}

fn act(ctx: &mut Ctx, op: ActCmd) -> Outcome {
    match op {
        ActCmd::Dgra(a) => {
            let g = graph(
                a.graph
                    .as_deref()
                    .ok_or_else(|| CliError::msg("--graph is required"))?,
            )?;
            let gam = a
                .inputs
                .iter()
                .map(|s| poly(s, a.dim))
                .collect::<Result<Vec<_>, _>>()?;
            let p = match g.kind {
                Kind::Gra => act_graph_comb(&graph_comb(&g), &gam),
                _ => act_dgra(&g, &gam),
            }
            .map_err(math_err)?;
            print_poly(ctx, &p);
        }
        ActCmd::Schouten(a) => {
            let [x, y] = a.inputs.as_slice() else {
                return Err(CliError::msg("schouten takes two polyvectors"));
            };
            let p = schouten_bracket(&poly(x, a.dim)?, &poly(y, a.dim)?).map_err(math_err)?;
            print_poly(ctx, &p);
        }
        ActCmd::Sgra(a) => {
            let g = graph(
                a.graph
                    .as_deref()
                    .ok_or_else(|| CliError::msg("--graph is required"))?,
            )?;
            let gam = a
                .inputs
                .iter()
                .map(|s| poly(s, a.dim))
                .collect::<Result<Vec<_>, _>>()?;
            let op = act_sgra(&g, &gam).map_err(math_err)?;
            if a.eval.is_empty() {
                print_operator(ctx, &op);
            } else {
                let fs = a
                    .eval
                    .iter()
                    .map(|s| poly(s, a.dim))
                    .collect::<Result<Vec<_>, _>>()?;
                print_poly(ctx, &op.eval(&fs).map_err(math_err)?);
            }
        }
        ActCmd::Braces(a) => {
            let ops = a
                .inputs
                .iter()
                .map(|s| parse_operator(s, a.dim).map_err(|e| rep_err(s, e)))
                .collect::<Result<Vec<_>, _>>()?;
            let (a0, rest) = ops
                .split_first()
                .ok_or_else(|| CliError::msg("braces needs at least one operator"))?;
            print_operator(ctx, &braces(a0, rest).map_err(math_err)?);
        }
        ActCmd::Gra1(a) => {
            let g = graph(
                a.graph
                    .as_deref()
                    .ok_or_else(|| CliError::msg("--graph is required"))?,
            )?;
            let gam = a
                .inputs
                .iter()
                .map(|s| poly(s, a.dim))
                .collect::<Result<Vec<_>, _>>()?;
            let f = a
                .form
                .as_deref()
                .ok_or_else(|| CliError::msg("--form is required"))?;
            let w = parse_form(f, a.dim).map_err(|e| rep_err(f, e))?;
            let p = act_gra1(&g, &gam, &w).map_err(math_err)?;
            let s = if ctx.json {
                json!({"dim": p.dim(), "form": p.format_form()}).to_string()
            } else {
                p.format_form()
            };
            ctx.line(s);
        }
    }
    Ok(true)
}

fn star(ctx: &mut Ctx, op: StarCmd) -> Outcome {
    match op {
        StarCmd::Moyal(a) => {
            let (f, g) = star_inputs(&a)?;
            let pi = poly(&a.pi, a.dim)?;
            print_series(ctx, &moyal_star(&f, &g, &pi, a.order).map_err(math_err)?);
            Ok(true)
        }
        StarCmd::Weights(a) => {
            let w = weights(&a.weights)?;
            let pi = poly(&a.pi, a.dim)?;
            let mut triples = Vec::new();
            if a.h.is_some() || a.samples == 0 {
                let (f, g) = star_inputs(&a)?;
                match &a.h {
                    Some(h) => triples.push((f, g, poly(h, a.dim)?)),
                    None => {
                        print_series(ctx, &star_from_weights(&w, &pi, &f, &g).map_err(math_err)?);
                        return Ok(true);
                    }
                }
            }
            let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
            for _ in 0..a.samples {
                let mut r = || random_poly(&mut rng, a.dim, 3, 0, 3);
                triples.push((r(), r(), r()));
            }
            let bad = star_associativity_failures(&w, &pi, &triples).map_err(math_err)?;
            if ctx.json {
                ctx.line(json!({"checked": triples.len(), "failing_orders": bad}).to_string());
            } else if bad.is_empty() {
                ctx.line(format!(
                    "associative through order {} on {} triples",
                    w.truncation_order,
                    triples.len()
                ));
            } else {
                let orders: Vec<String> = bad.iter().map(usize::to_string).collect();
                ctx.line(format!(
                    "associativity fails at orders {}",
                    orders.join(", ")
                ));
            }
            Ok(bad.is_empty())
        }
        StarCmd::Mc(a) => {
            let w = weights(&a.weights)?;
            let res = mc_residual(&w).map_err(math_err)?;
            let res: Vec<GraphComb> = res
                .iter()
                .map(|r| {
                    if a.constant_bivector {
                        constant_bivector_part(r)
                    } else {
                        r.clone()
                    }
                })
                .collect();
            let ok = res.iter().all(GraphComb::is_empty);
            if ctx.json {
                let orders: Vec<Value> =
                    res.iter().map(|r| lincomb_to_json(Kind::Sgra, r)).collect();
                ctx.line(json!({"orders": orders}).to_string());
            } else {
                for (k, r) in res.iter().enumerate() {
                    ctx.line(format!(
                        "order {k}: {}",
                        format_comb(r).replace('\n', " + ")
                    ));
                }
            }
            Ok(ok)
        }
    }
}

fn star_inputs(a: &StarArgs) -> Result<(SuperPoly, SuperPoly), CliError> {
    let f =
        a.f.as_deref()
            .ok_or_else(|| CliError::msg("--f is required"))?;
    let g =
        a.g.as_deref()
            .ok_or_else(|| CliError::msg("--g is required"))?;
    Ok((poly(f, a.dim)?, poly(g, a.dim)?))
}

fn verify(ctx: &mut Ctx, a: VerifyArgs) -> Outcome {
    if let Some(mn) = &a.leibniz {
        let parsed: Option<Vec<u32>> = mn.split(',').map(|x| x.trim().parse().ok()).collect();
        let [m, n] = parsed.as_deref().unwrap_or_default() else {
            return Err(CliError::msg("--leibniz expects M,N"));
        };
        let res = planar_leibniz_residual(*m, *n, a.primed).map_err(math_err)?;
        print_trees(ctx, TreeKind::Pt, &res);
        return Ok(res.is_empty());
    }
    if let Some(k) = &a.axioms {
        let kind =
            Kind::from_name(k).ok_or_else(|| CliError::msg(format!("unknown graph kind `{k}`")))?;
        let sample = a
            .graph
            .iter()
            .map(|s| graph(s))
            .collect::<Result<Vec<_>, _>>()?;
        let r = operad_axiom_report(&sample, kind);
        if ctx.json {
            ctx.line(
                json!({"kind": kind.name(), "checks": r.checks, "failure": r.failure}).to_string(),
            );
        } else {
            match &r.failure {
                None => ctx.line(format!("PASS {} checks", r.checks)),
                Some(f) => ctx.line(format!("FAIL after {} checks: {f}", r.checks)),
            }
        }
        return Ok(r.passed());
    }
    let suites = if a.suite.is_empty() {
        Suite::ALL.to_vec()
    } else {
        a.suite
            .iter()
            .map(|s| {
                Suite::from_name(s).ok_or_else(|| CliError::msg(format!("unknown suite `{s}`")))
            })
            .collect::<Result<Vec<_>, _>>()?
    };
    let seed = ctx.seed;
    let reports: Vec<_> = suites.par_iter().map(|s| s.run(seed)).collect();
    if ctx.json {
        let v: Vec<Value> = reports
            .iter()
            .map(|r| json!({"suite": r.name, "checks": r.checks, "failures": r.failures}))
            .collect();
        ctx.line(Value::from(v).to_string());
    } else {
        for r in &reports {
            ctx.line(r.to_string());
        }
    }
    Ok(reports.iter().all(|r| r.passed()))
}

fn parse_cmd(ctx: &mut Ctx, a: ParseArgs) -> Outcome {
    let t = tree(&a.expr, a.kind.as_deref())?;
    let s = if ctx.json {
        json!({"kind": t.kind.name(), "tree": t.to_string(), "arity": t.arity(), "vertices": t.vertex_count(), "degree": t.degree()})
            .to_string()
    } else {
        t.to_string()
    };
    ctx.line(s);
    Ok(true)
}

fn normalize(ctx: &mut Ctx, a: NormalizeArgs) -> Outcome {
    let modes = [
        a.perm.is_some(),
        a.cyclic.is_some(),
        a.directed,
        a.combine.is_some(),
    ];
    if modes.iter().filter(|&&m| m).count() > 1 {
        return Err(CliError::msg(
            "choose at most one of --perm, --cyclic, --directed, --combine",
        ));
    }
    if let Some(other) = &a.combine {
        let ((ka, la), (kb, lb)) = (graph_comb_arg(&a.expr)?, graph_comb_arg(other)?);
        if ka != kb {
            return Err(CliError::msg(format!(
                "cannot combine {} and {} graphs",
                ka.name(),
                kb.name()
            )));
        }
        let lc = lincomb_combine(&la, &rational(&a.coef)?, &lb).map_err(math_err)?;
        print_graphs(ctx, ka, &lc);
        return Ok(true);
    }
    if !is_graph_literal(&a.expr) {
        if modes.iter().any(|&m| m) {
            return Err(CliError::msg(
                "--perm, --cyclic and --directed apply to graphs",
            ));
        }
        let t = tree(&a.expr, a.kind.as_deref())?;
        let lc = ks1_normalize(&t).map_err(math_err)?;
        print_trees(ctx, t.kind, &lc);
        return Ok(true);
    }
    let g = graph(&a.expr)?;
    if let Some(p) = &a.perm {
        let sigma: Vec<u32> = p
            .split(',')
            .map(|x| x.trim().parse())
            .collect::<Result<_, _>>()
            .map_err(|_| CliError::msg(format!("bad permutation `{p}`")))?;
        let r = sym_action(&g, &sigma).map_err(math_err)?;
        print_signed(ctx, g.kind, r);
    } else if let Some(k) = a.cyclic {
        let len = i64::from(g.typeii.max(1)) + 1;
        let r = sgra1_cyclic(&g, k.rem_euclid(len) as u32).map_err(math_err)?;
        print_signed(ctx, g.kind, r);
    } else if a.directed {
        let lc = directed_expansion(&g).map_err(math_err)?;
        print_graphs(ctx, Kind::Dgra, &lc);
    } else {
        let r = canonical_form(&g).map_err(math_err)?;
        print_signed(ctx, g.kind, r);
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let argv: Vec<String> = std::iter::once("opgraph")
            .chain(args.iter().copied())
            .map(String::from)
            .collect();
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(&argv, &mut out, &mut err);
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn detects_graph_literals() {
        assert!(is_graph_literal("gra{n=1;e=[]}"));
        assert!(is_graph_literal(" sgra1{m=0,n=1;e=[]}"));
        assert!(!is_graph_literal("E(1;2)"));
        assert!(!is_graph_literal("K(𝟙, I(2,I(3,in)), 1)"));
    }

    #[test]
    fn matrix_literals() {
        let m = matrix("1,0;0, 1").unwrap();
        assert_eq!((m.rows(), m.cols(), rank(&m)), (2, 2, 2));
        assert!(matches!(
            matrix("1,x"),
            Err(CliError::Input {
                at: Some((_, 2)),
                ..
            })
        ));
        assert!(matches!(matrix("1,2;3"), Err(CliError::Input { .. })));
    }

    #[test]
    fn input_errors_show_a_caret() {
        let (code, _, err) = run_str(&["normalize", "gra{n=2;e=[(1,2]}"]);
        assert_eq!(code, 2);
        let lines: Vec<&str> = err.lines().collect();
        assert!(
            lines[0].starts_with("error: parse error at position 15"),
            "{err}"
        );
        assert_eq!(lines[2].find('^'), Some(2 + 15));
    }

    #[test]
    fn compose_gra_path_into_middle_vertex() {
        let (code, out, _) = run_str(&[
            "compose",
            "--lhs",
            "gra{n=3;e=[(1,2),(2,3)]}",
            "--slot",
            "2",
            "--rhs",
            "gra{n=2;e=[(1,2)]}",
        ]);
        assert_eq!(code, 0);
        assert_eq!(out.lines().count(), 4);
    }
}
