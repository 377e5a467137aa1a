//! Signed graphs: the basis atoms of all graph operads, with canonical forms and text formats.
//!
//! Edges are odd: a graph is identified with every copy of itself whose edge list has been
//! permuted, up to the sign of the permutation. Internal vertices are even and unlabeled, so
//! relabeling them is free. A graph with an automorphism that permutes its edges oddly is zero.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::Zero;
use serde_json::{json, Value};

use crate::lincomb::LinComb;
use crate::scalar_linalg::{format_rational, parse_rational, Rational};

/// Hard cap on internal vertices for brute-force canonicalization.
pub const MAX_INTERNAL: u32 = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Kind {
    /// Undirected graphs.
    Gra,
    /// Directed graphs.
    Dgra,
    /// Directed graphs with an `out` vertex (no incoming edges) and an `in` vertex (no outgoing edges).
    Gra1,
    /// Directed graphs with type-I vertices and linearly ordered type-II vertices `b1..bn`.
    Sgra,
    /// As `Sgra` plus `out` and a distinguished type-II vertex `in` (also called `b0`).
    Sgra1,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Gra => "gra",
            Kind::Dgra => "dgra",
            Kind::Gra1 => "gra1",
            Kind::Sgra => "sgra",
            Kind::Sgra1 => "sgra1",
        }
    }

    pub fn from_name(s: &str) -> Option<Kind> {
        Some(match s {
            "gra" => Kind::Gra,
            "dgra" => Kind::Dgra,
            "gra1" => Kind::Gra1,
            "sgra" => Kind::Sgra,
            "sgra1" => Kind::Sgra1,
            _ => return None,
        })
    }

    pub fn directed(self) -> bool {
        self != Kind::Gra
    }

    fn has_out_in(self) -> bool {
        matches!(self, Kind::Gra1 | Kind::Sgra1)
    }

    fn has_type_ii(self) -> bool {
        matches!(self, Kind::Sgra | Kind::Sgra1)
    }

    /// Name of the external-count field in the text format.
    fn ext_field(self) -> &'static str {
        match self {
            Kind::Gra | Kind::Dgra => "n",
            _ => "m",
        }
    }
}

/// Vertex reference. The derived order is the order used by canonical forms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum V {
    Out,
    /// Numbered (external, type-I) vertex, 1-based.
    Ext(u32),
    /// Internal vertex, 1-based.
    Int(u32),
    /// Type-II vertex `b_k`, 1-based.
    B(u32),
    /// The `in` vertex; for SGRA1 this is the type-II vertex `b0`.
    In,
}

impl V {
    pub fn is_internal(self) -> bool {
        matches!(self, V::Int(_))
    }
}

impl fmt::Display for V {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            V::Out => write!(f, "out"),
            V::Ext(k) => write!(f, "{k}"),
            V::Int(k) => write!(f, "i{k}"),
            V::B(k) => write!(f, "b{k}"),
            V::In => write!(f, "in"),
        }
    }
}

pub type Edge = (V, V);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("parse error at position {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("invalid graph: {0}")]
    Invalid(String),
    #[error("{0}")]
    Mismatch(String),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, GraphError> {
    Err(GraphError::Invalid(msg.into()))
}

/// A graph with an ordered edge list. The order of edges carries the sign.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignedGraph {
    pub kind: Kind,
    /// Numbered vertices `1..=ext` (type-I for SGRA kinds, excluding `out`).
    pub ext: u32,
    /// Unnumbered internal vertices `i1..=int`.
    pub int: u32,
    /// Type-II vertices `b1..=typeii` (SGRA1 additionally has `in` = `b0`).
    pub typeii: u32,
    pub edges: Vec<Edge>,
}

impl SignedGraph {
    pub fn new(kind: Kind, ext: u32, edges: Vec<Edge>) -> Self {
        SignedGraph {
            kind,
            ext,
            int: 0,
            typeii: 0,
            edges,
        }
    }

    pub fn with_internal(mut self, int: u32) -> Self {
        self.int = int;
        self
    }

    pub fn with_type_ii(mut self, n: u32) -> Self {
        self.typeii = n;
        self
    }

    /// Cohomological degree: internal vertices count +2, edges −1.
    pub fn degree(&self) -> i64 {
        2 * self.int as i64 - self.edges.len() as i64
    }

    /// Number of type-II vertices, counting `in` for SGRA1.
    pub fn type_ii_count(&self) -> u32 {
        match self.kind {
            Kind::Sgra => self.typeii,
            Kind::Sgra1 => self.typeii + 1,
            _ => 0,
        }
    }

    /// All vertices in canonical order.
    pub fn vertices(&self) -> Vec<V> {
        let mut vs = Vec::new();
        if self.kind.has_out_in() {
            vs.push(V::Out);
        }
        vs.extend((1..=self.ext).map(V::Ext));
        vs.extend((1..=self.int).map(V::Int));
        if self.kind.has_type_ii() {
            vs.extend((1..=self.typeii).map(V::B));
        }
        if self.kind.has_out_in() {
            vs.push(V::In);
        }
        vs
    }

    pub fn contains(&self, v: V) -> bool {
        match v {
            V::Out | V::In => self.kind.has_out_in(),
            V::Ext(k) => (1..=self.ext).contains(&k),
            V::Int(k) => (1..=self.int).contains(&k),
            V::B(k) => self.kind.has_type_ii() && (1..=self.typeii).contains(&k),
        }
    }

    pub fn valence(&self, v: V) -> usize {
        self.edges
            .iter()
            .filter(|(a, b)| *a == v || *b == v)
            .count()
    }

    pub fn in_degree(&self, v: V) -> usize {
        self.edges.iter().filter(|(_, b)| *b == v).count()
    }

    pub fn out_degree(&self, v: V) -> usize {
        self.edges.iter().filter(|(a, _)| *a == v).count()
    }

    /// Checks the structural invariants of the kind.
    pub fn validate(&self) -> Result<(), GraphError> {
        if self.int > MAX_INTERNAL {
            return invalid(format!(
                "{} internal vertices exceed the cap of {MAX_INTERNAL}",
                self.int
            ));
        }
        if !self.kind.has_type_ii() && self.typeii != 0 {
            return invalid("type-II vertices only exist for sgra kinds");
        }
        for &(a, b) in &self.edges {
            for v in [a, b] {
                if !self.contains(v) {
                    return invalid(format!(
                        "vertex {v} does not exist in this {} graph",
                        self.kind.name()
                    ));
                }
            }
            if a == b {
                return invalid(format!("tadpole at vertex {a}"));
            }
            if self.kind.has_out_in() {
                if b == V::Out {
                    return invalid("incoming edge at out");
                }
                if a == V::In {
                    return invalid("outgoing edge at in");
                }
            }
            if matches!(a, V::B(_)) {
                return invalid(format!("outgoing edge at type-II vertex {a}"));
            }
        }
        Ok(())
    }

    fn normalize_edge(&self, (a, b): Edge) -> Edge {
        if self.kind == Kind::Gra && b < a {
            (b, a)
        } else {
            (a, b)
        }
    }

    /// Relabels vertices with `f`, keeping the edge order.
    pub fn map_vertices(&self, f: impl Fn(V) -> V) -> SignedGraph {
        let mut g = self.clone();
        g.edges = self
            .edges
            .iter()
            .map(|&(a, b)| self.normalize_edge((f(a), f(b))))
            .collect();
        g
    }

    /// Loop order `#edges − #vertices + #components`, counting every vertex of the graph.
    pub fn loop_order(&self) -> i64 {
        let vs = self.vertices();
        let comps = components(&vs, &self.edges);
        self.edges.len() as i64 - vs.len() as i64 + comps as i64
    }
}

/// Component representative of each vertex of `vs` (edges read as undirected).
pub fn component_labels(vs: &[V], edges: &[Edge]) -> Vec<usize> {
    let idx: BTreeMap<V, usize> = vs.iter().enumerate().map(|(i, v)| (*v, i)).collect();
    let mut parent: Vec<usize> = (0..vs.len()).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let n = p[y];
            p[y] = r;
            y = n;
        }
        r
    }
    for (a, b) in edges {
        let (x, y) = (find(&mut parent, idx[a]), find(&mut parent, idx[b]));
        if x != y {
            parent[x] = y;
        }
    }
    (0..vs.len()).map(|i| find(&mut parent, i)).collect()
}

/// Number of connected components (edges read as undirected).
pub fn components(vs: &[V], edges: &[Edge]) -> usize {
    component_labels(vs, edges)
        .iter()
        .enumerate()
        .filter(|&(i, &r)| i == r)
        .count()
}

/// Parity of the permutation `perm` of `0..n` (true = odd).
pub fn perm_is_odd(perm: &[usize]) -> bool {
    let mut seen = vec![false; perm.len()];
    let mut transpositions = 0;
    for i in 0..perm.len() {
        if seen[i] {
            continue;
        }
        let mut j = i;
        let mut len = 0;
        while !seen[j] {
            seen[j] = true;
            j = perm[j];
            len += 1;
        }
        transpositions += len - 1;
    }
    transpositions % 2 == 1
}

/// Sorts a list and returns whether the sorting permutation is odd.
pub fn sort_with_parity<T: Ord + Clone>(items: &[T]) -> (Vec<T>, bool) {
    let mut idx: Vec<usize> = (0..items.len()).collect();
    idx.sort_by(|&a, &b| items[a].cmp(&items[b]));
    let sorted = idx.iter().map(|&i| items[i].clone()).collect();
    (sorted, perm_is_odd(&idx))
}

/// Isomorphism invariant of an internal vertex, used to restrict the relabeling search.
fn vertex_invariants(g: &SignedGraph) -> Vec<Vec<i64>> {
    let n = g.int as usize;
    let code = |v: V| -> i64 {
        match v {
            V::Out => -3,
            V::Ext(k) => k as i64,
            V::B(k) => 1000 + k as i64,
            V::In => -2,
            V::Int(_) => -1,
        }
    };
    let mut base: Vec<Vec<i64>> = vec![Vec::new(); n];
    for (i, slot) in base.iter_mut().enumerate() {
        let v = V::Int(i as u32 + 1);
        let mut nb: Vec<i64> = Vec::new();
        for &(a, b) in &g.edges {
            if a == v && !b.is_internal() {
                nb.push(2 * code(b) + 1);
            }
            if b == v && !a.is_internal() {
                nb.push(2 * code(a) + if g.kind.directed() { 0 } else { 1 });
            }
        }
        nb.sort_unstable();
        let (outd, ind) = if g.kind.directed() {
            (g.out_degree(v), g.in_degree(v))
        } else {
            (g.valence(v), 0)
        };
        *slot = vec![outd as i64, ind as i64, nb.len() as i64];
        slot.extend(nb);
    }
    // One refinement round through internal neighbors.
    let mut refined = base.clone();
    for (i, slot) in refined.iter_mut().enumerate() {
        let v = V::Int(i as u32 + 1);
        let mut nbs: Vec<Vec<i64>> = Vec::new();
        for &(a, b) in &g.edges {
            if let (true, V::Int(j)) = (a == v, b) {
                let mut t = vec![1];
                t.extend(&base[j as usize - 1]);
                nbs.push(t);
            }
            if let (V::Int(j), true) = (a, b == v) {
                let mut t = vec![if g.kind.directed() { 0 } else { 1 }];
                t.extend(&base[j as usize - 1]);
                nbs.push(t);
            }
        }
        nbs.sort();
        slot.push(-7);
        for t in nbs {
            slot.extend(t);
            slot.push(-9);
        }
    }
    refined
}

/// Visits every bijection that sends invariant class `c` onto its block of new labels.
fn for_each_class_perm(classes: &[Vec<usize>], n: usize, f: &mut dyn FnMut(&[u32])) {
    fn rec(
        classes: &[Vec<usize>],
        ci: usize,
        next: u32,
        map: &mut Vec<u32>,
        f: &mut dyn FnMut(&[u32]),
    ) {
        if ci == classes.len() {
            f(map);
            return;
        }
        let mut members = classes[ci].clone();
        permute(&mut members, 0, &mut |perm| {
            for (k, &old) in perm.iter().enumerate() {
                map[old] = next + k as u32;
            }
            rec(classes, ci + 1, next + perm.len() as u32, map, f);
        });
    }
    fn permute(xs: &mut Vec<usize>, k: usize, f: &mut dyn FnMut(&[usize])) {
        if k == xs.len() {
            f(xs);
            return;
        }
        for i in k..xs.len() {
            xs.swap(k, i);
            permute(xs, k + 1, f);
            xs.swap(k, i);
        }
    }
    let mut map = vec![0u32; n];
    rec(classes, 0, 1, &mut map, f);
}

/// Canonical representative and sign, or `None` when the graph vanishes.
///
/// The representative minimizes the sorted edge list over all relabelings of internal vertices;
/// the sign is the parity of the sort. A repeated edge, or two minimizing relabelings that sort
/// with different parity, means an odd symmetry and hence zero.
pub fn canonical_form(g: &SignedGraph) -> Result<Option<(SignedGraph, i8)>, GraphError> {
    g.validate()?;
    Ok(canonical_unchecked(g))
}

pub(crate) fn canonical_unchecked(g: &SignedGraph) -> Option<(SignedGraph, i8)> {
    let n = g.int as usize;
    let inv = vertex_invariants(g);
    let mut keys: Vec<Vec<i64>> = inv.clone();
    keys.sort();
    keys.dedup();
    let classes: Vec<Vec<usize>> = keys
        .iter()
        .map(|k| (0..n).filter(|&i| &inv[i] == k).collect())
        .collect();
    let mut best: Option<(Vec<Edge>, bool)> = None;
    let mut zero = false;
    for_each_class_perm(&classes, n, &mut |map| {
        if zero {
            return;
        }
        let relabeled: Vec<Edge> = g
            .edges
            .iter()
            .map(|&(a, b)| {
                let r = |v: V| match v {
                    V::Int(k) => V::Int(map[k as usize - 1]),
                    o => o,
                };
                g.normalize_edge((r(a), r(b)))
            })
            .collect();
        let (sorted, odd) = sort_with_parity(&relabeled);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            zero = true;
            return;
        }
        match &best {
            None => best = Some((sorted, odd)),
            Some((b, bodd)) => match sorted.cmp(b) {
                std::cmp::Ordering::Less => best = Some((sorted, odd)),
                std::cmp::Ordering::Equal if *bodd != odd => zero = true,
                _ => {}
            },
        }
    });
    if zero {
        return None;
    }
    let (edges, odd) = best.expect("at least one relabeling");
    let mut c = g.clone();
    c.edges = edges;
    Some((c, if odd { -1 } else { 1 }))
}

/// Linear combinations of canonical graphs.
pub type GraphComb = LinComb<SignedGraph>;

/// Adds `coef * g` after canonicalization; vanishing graphs are dropped.
pub fn add_graph(lc: &mut GraphComb, g: &SignedGraph, coef: &Rational) {
    if coef.is_zero() {
        return;
    }
    if let Some((c, s)) = canonical_unchecked(g) {
        let v = if s < 0 { -coef.clone() } else { coef.clone() };
        lc.add(c, v);
    }
}

/// The canonical graph as a one-term combination (empty if it vanishes).
pub fn graph_comb(g: &SignedGraph) -> GraphComb {
    let mut lc = GraphComb::new();
    add_graph(&mut lc, g, &Rational::from_integer(1.into()));
    lc
}

/// `a + c·b`, re-canonicalizing every key; kinds and arity signatures must agree.
pub fn lincomb_combine(
    a: &GraphComb,
    c: &Rational,
    b: &GraphComb,
) -> Result<GraphComb, GraphError> {
    let sig = |g: &SignedGraph| (g.kind, g.ext, g.typeii);
    let mut sigs = a.keys().chain(b.keys()).map(sig);
    if let Some(first) = sigs.next() {
        if let Some(other) = sigs.find(|s| *s != first) {
            return Err(GraphError::Mismatch(format!(
                "cannot combine {} graphs of arity {} with {} graphs of arity {}",
                first.0.name(),
                first.1,
                other.0.name(),
                other.1
            )));
        }
    }
    let mut out = GraphComb::new();
    for (g, v) in a.iter() {
        add_graph(&mut out, g, v);
    }
    for (g, v) in b.iter() {
        add_graph(&mut out, g, &(v * c));
    }
    Ok(out)
}

impl fmt::Display for SignedGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{{{}={}",
            self.kind.name(),
            self.kind.ext_field(),
            self.ext
        )?;
        if self.kind.has_type_ii() {
            write!(f, ",n={}", self.typeii)?;
        }
        if self.int > 0 {
            write!(f, ",i={}", self.int)?;
        }
        let sep = if self.kind.directed() { ">" } else { "," };
        let es: Vec<String> = self
            .edges
            .iter()
            .map(|(a, b)| format!("({a}{sep}{b})"))
            .collect();
        write!(f, "; e=[{}]}}", es.join(","))
    }
}

struct Lexer {
    chars: Vec<(usize, char)>,
    pos: usize,
}

impl Lexer {
    fn new(src: &str) -> Self {
        let chars = src
            .char_indices()
            .filter(|(_, c)| !c.is_whitespace())
            .collect();
        Lexer { chars, pos: 0 }
    }

    fn offset(&self) -> usize {
        self.chars
            .get(self.pos)
            .map_or_else(|| self.chars.last().map_or(0, |c| c.0 + 1), |c| c.0)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, GraphError> {
        Err(GraphError::Parse {
            pos: self.offset(),
            msg: msg.into(),
        })
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).map(|c| c.1)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), GraphError> {
        if self.eat(c) {
            Ok(())
        } else {
            self.err(format!("expected '{c}'"))
        }
    }

    fn word(&mut self) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == '_' {
                s.push(c);
                self.pos += 1;
            } else {
                break;
            }
        }
        s
    }

    fn number(&mut self) -> Result<u32, GraphError> {
        let w = self.word();
        match w.parse() {
            Ok(n) => Ok(n),
            Err(_) => {
                self.pos -= w.chars().count();
                self.err("expected a number")
            }
        }
    }

    fn vertex(&mut self, kind: Kind) -> Result<V, GraphError> {
        let start = self.pos;
        let w = self.word();
        let parsed = if let Ok(k) = w.parse::<u32>() {
            (k > 0).then_some(V::Ext(k))
        } else if w == "out" {
            Some(V::Out)
        } else if w == "in" {
            Some(V::In)
        } else if let Some(r) = w.strip_prefix('i') {
            r.parse::<u32>().ok().filter(|k| *k > 0).map(V::Int)
        } else if let Some(r) = w.strip_prefix('b') {
            match r.parse::<u32>() {
                Ok(0) if kind == Kind::Sgra1 => Some(V::In),
                Ok(k) if k > 0 => Some(V::B(k)),
                _ => None,
            }
        } else {
            None
        };
        match parsed {
            Some(v) => Ok(v),
            None => {
                self.pos = start;
                self.err(format!("bad vertex reference {w:?}"))
            }
        }
    }
}

impl std::str::FromStr for SignedGraph {
    type Err = GraphError;

    /// Parses the text format, e.g. `gra{n=3; e=[(1,2),(2,3)]}`, `dgra{n=2,i=1; e=[(1>i1)]}`.
    fn from_str(s: &str) -> Result<Self, GraphError> {
        let mut lx = Lexer::new(s);
        let name = lx.word();
        let kind = match Kind::from_name(&name) {
            Some(k) => k,
            None => {
                lx.pos = 0;
                return lx.err(format!("unknown graph kind {name:?}"));
            }
        };
        lx.expect('{')?;
        let mut fields: BTreeMap<String, u32> = BTreeMap::new();
        let mut edges: Option<Vec<Edge>> = None;
        loop {
            let key_pos = lx.pos;
            let key = lx.word();
            lx.expect('=')?;
            if key == "e" {
                lx.expect('[')?;
                let mut es = Vec::new();
                if !lx.eat(']') {
                    loop {
                        lx.expect('(')?;
                        let a = lx.vertex(kind)?;
                        let directed = if lx.eat('>') {
                            true
                        } else {
                            lx.expect(',')?;
                            false
                        };
                        if directed != kind.directed() {
                            lx.pos -= 1;
                            return lx.err(if kind.directed() {
                                "directed kinds use (a>b)"
                            } else {
                                "undirected graphs use (a,b)"
                            });
                        }
                        let b = lx.vertex(kind)?;
                        lx.expect(')')?;
                        es.push((a, b));
                        if lx.eat(']') {
                            break;
                        }
                        lx.expect(',')?;
                    }
                }
                edges = Some(es);
            } else {
                let allowed = [kind.ext_field(), "i"]
                    .into_iter()
                    .chain(kind.has_type_ii().then_some("n"))
                    .any(|k| k == key);
                if !allowed || fields.contains_key(&key) {
                    lx.pos = key_pos;
                    return lx.err(format!("unexpected field {key:?}"));
                }
                let v = lx.number()?;
                fields.insert(key, v);
            }
            if lx.eat('}') {
                break;
            }
            if !(lx.eat(';') || lx.eat(',')) {
                return lx.err("expected ';', ',' or '}'");
            }
        }
        if lx.peek().is_some() {
            return lx.err("trailing input");
        }
        let ext = match fields.get(kind.ext_field()) {
            Some(v) => *v,
            None => return lx.err(format!("missing field {}", kind.ext_field())),
        };
        let mut g = SignedGraph::new(kind, ext, Vec::new());
        g.int = fields.get("i").copied().unwrap_or(0);
        if kind.has_type_ii() {
            g.typeii = fields.get("n").copied().unwrap_or(0);
        }
        let es = edges.unwrap_or_default();
        g.edges = es.iter().map(|&e| g.normalize_edge(e)).collect();
        g.validate()?;
        Ok(g)
    }
}

/// JSON form `{"kind":"gra","terms":[{"coef":"-1/2","graph":"gra{...}"}]}`.
pub fn lincomb_to_json(kind: Kind, lc: &GraphComb) -> Value {
    let terms: Vec<Value> = lc
        .iter()
        .map(|(g, c)| json!({"coef": format_rational(c), "graph": g.to_string()}))
        .collect();
    json!({"kind": kind.name(), "terms": terms})
}

pub fn lincomb_from_json(v: &Value) -> Result<(Kind, GraphComb), GraphError> {
    let bad = |m: &str| GraphError::Invalid(format!("lincomb json: {m}"));
    let kind = v
        .get("kind")
        .and_then(Value::as_str)
        .and_then(Kind::from_name)
        .ok_or_else(|| bad("missing or unknown kind"))?;
    let mut lc = GraphComb::new();
    for t in v
        .get("terms")
        .and_then(Value::as_array)
        .ok_or_else(|| bad("missing terms"))?
    {
        let c = t
            .get("coef")
            .and_then(Value::as_str)
            .ok_or_else(|| bad("missing coef"))
            .and_then(|s| parse_rational(s).map_err(|e| bad(&e.to_string())))?;
        let g: SignedGraph = t
            .get("graph")
            .and_then(Value::as_str)
            .ok_or_else(|| bad("missing graph"))?
            .parse()?;
        if g.kind != kind {
            return Err(bad("term kind differs from declared kind"));
        }
        add_graph(&mut lc, &g, &c);
    }
    Ok((kind, lc))
}

/// Human-readable rendering, one signed term per line.
pub fn format_comb(lc: &GraphComb) -> String {
    if lc.is_empty() {
        return "0".to_string();
    }
    lc.iter()
        .map(|(g, c)| format!("{} * {}", format_rational(c), g))
        .collect::<Vec<_>>()
        .join("\n")
}
