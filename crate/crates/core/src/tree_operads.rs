//! Planar tree operads: PT, Br, the moperads PT1 and KS1, Br∞ and B(Br) trees, the functional
//! tree expression language and relation checks.
//!
//! Odd items are edges and blue vertices (and the out framing of `K_B`). They carry no stored
//! labels: the canonical order is depth-first preorder, visiting at each vertex its parent edge,
//! then its blue mark, then its decoration, then its children. Operations tag items, rebuild the
//! tree and read the sign off the permutation of tags. Planar trees have no automorphisms, so no
//! tree vanishes by symmetry.

use std::fmt;

use rand::Rng;
use serde_json::{json, Value};

use crate::graph_core::sort_with_parity;
use crate::lincomb::LinComb;
use crate::scalar_linalg::{format_rational, frac, parse_rational, rat, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TreeKind {
    /// Planar trees with numbered vertices only.
    Pt,
    /// Twisted PT: internal vertices of any valence.
    TwPt,
    /// Braces: internal vertices have at least two children.
    Br,
    /// Moperad PT1: out root with a marked edge, a vertex `in`.
    Pt1,
    /// KS1: PT1 with internal and unit vertices.
    Ks1,
    /// Br∞ trees with blue and red decorated vertices.
    Binf,
    /// B(Br) trees: blue decorated vertices only, degree shifted by one.
    Bbr,
    /// `K_B(...)`: a KS1 tree decorating the out vertex.
    Bks1,
}

impl TreeKind {
    pub const ALL: [TreeKind; 8] = [
        TreeKind::Pt,
        TreeKind::TwPt,
        TreeKind::Br,
        TreeKind::Pt1,
        TreeKind::Ks1,
        TreeKind::Binf,
        TreeKind::Bbr,
        TreeKind::Bks1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TreeKind::Pt => "pt",
            TreeKind::TwPt => "twpt",
            TreeKind::Br => "br",
            TreeKind::Pt1 => "pt1",
            TreeKind::Ks1 => "ks1",
            TreeKind::Binf => "binf",
            TreeKind::Bbr => "bbr",
            TreeKind::Bks1 => "bks1",
        }
    }

    pub fn from_name(s: &str) -> Option<TreeKind> {
        TreeKind::ALL.into_iter().find(|k| k.name() == s)
    }

    /// Whether a tree inferred as `self` may be read as a `target` tree.
    fn embeds_in(self, target: TreeKind) -> bool {
        use TreeKind::*;
        self == target
            || matches!(
                (self, target),
                (Pt, Br | TwPt | Binf | Bbr) | (Br, TwPt | Binf | Bbr) | (Binf, Bbr) | (Pt1, Ks1)
            )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TreeError {
    #[error("parse error at {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("invalid tree: {0}")]
    Invalid(String),
    #[error("{0}")]
    Mismatch(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Ext(u32),
    Int,
    Blue(Box<Node>),
    Red(Box<Node>),
    Unit,
    In,
    Out,
    OutBlue(Box<Node>),
}

impl Label {
    fn decoration(&self) -> Option<&Node> {
        match self {
            Label::Blue(d) | Label::Red(d) | Label::OutBlue(d) => Some(d),
            _ => None,
        }
    }

    fn decoration_mut(&mut self) -> Option<&mut Node> {
        match self {
            Label::Blue(d) | Label::Red(d) | Label::OutBlue(d) => Some(d),
            _ => None,
        }
    }

    /// Blue vertices and the decorated out vertex are odd items.
    fn is_odd(&self) -> bool {
        matches!(self, Label::Blue(_) | Label::OutBlue(_))
    }

    fn is_out(&self) -> bool {
        matches!(self, Label::Out | Label::OutBlue(_))
    }
}

/// A vertex with its ordered children. `tag` names the edge to the parent and `btag` the blue
/// mark while an operation is in progress; canonical trees have both cleared.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Node {
    pub label: Label,
    pub children: Vec<Node>,
    tag: u32,
    btag: u32,
}

impl Node {
    pub fn new(label: Label, children: Vec<Node>) -> Node {
        Node {
            label,
            children,
            tag: 0,
            btag: 0,
        }
    }

    pub fn leaf(label: Label) -> Node {
        Node::new(label, Vec::new())
    }

    pub fn ext(k: u32, children: Vec<Node>) -> Node {
        Node::new(Label::Ext(k), children)
    }

    pub fn int(children: Vec<Node>) -> Node {
        Node::new(Label::Int, children)
    }

    fn with_tag(mut self, tag: u32) -> Node {
        self.tag = tag;
        self
    }

    /// Visits this vertex, its decoration and all descendants.
    fn visit(&self, f: &mut impl FnMut(&Node)) {
        f(self);
        if let Some(d) = self.label.decoration() {
            d.visit(f);
        }
        for c in &self.children {
            c.visit(f);
        }
    }

    fn visit_mut(&mut self, f: &mut impl FnMut(&mut Node)) {
        f(self);
        if let Some(d) = self.label.decoration_mut() {
            d.visit_mut(f);
        }
        for c in &mut self.children {
            c.visit_mut(f);
        }
    }
}

/// A step from a vertex to one of its children or into its decoration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Step {
    Child(usize),
    Deco,
}

fn node_at<'a>(n: &'a Node, path: &[Step]) -> &'a Node {
    path.iter().fold(n, |n, s| match s {
        Step::Child(i) => &n.children[*i],
        Step::Deco => n.label.decoration().expect("path enters a decoration"),
    })
}

fn replace_at(n: &Node, path: &[Step], new: Node) -> Node {
    let Some((first, rest)) = path.split_first() else {
        return new;
    };
    let mut out = n.clone();
    match first {
        Step::Child(i) => out.children[*i] = replace_at(&n.children[*i], rest, new),
        Step::Deco => {
            let d = out
                .label
                .decoration_mut()
                .expect("path enters a decoration");
            *d = replace_at(d, rest, new);
        }
    }
    out
}

/// Paths to the vertices of one tree level, in preorder, not entering decorations.
fn level_paths(n: &Node, prefix: &mut Vec<Step>, acc: &mut Vec<Vec<Step>>) {
    acc.push(prefix.clone());
    for i in 0..n.children.len() {
        prefix.push(Step::Child(i));
        level_paths(&n.children[i], prefix, acc);
        prefix.pop();
    }
}

/// Paths to every vertex, including those inside decorations.
fn all_paths(n: &Node, prefix: &mut Vec<Step>, acc: &mut Vec<Vec<Step>>) {
    acc.push(prefix.clone());
    if let Some(d) = n.label.decoration() {
        prefix.push(Step::Deco);
        all_paths(d, prefix, acc);
        prefix.pop();
    }
    for i in 0..n.children.len() {
        prefix.push(Step::Child(i));
        all_paths(&n.children[i], prefix, acc);
        prefix.pop();
    }
}

fn walk_items(n: &Node, with_edge: bool, acc: &mut Vec<u32>) {
    if with_edge {
        acc.push(n.tag);
    }
    if n.label.is_odd() {
        acc.push(n.btag);
    }
    if let Some(d) = n.label.decoration() {
        walk_items(d, false, acc);
    }
    let out = n.label.is_out();
    for (i, c) in n.children.iter().enumerate() {
        walk_items(c, !(out && i == 0), acc);
    }
}

fn items(root: &Node) -> Vec<u32> {
    let mut acc = Vec::new();
    walk_items(root, false, &mut acc);
    acc
}

fn retag_from(n: &mut Node, with_edge: bool, next: &mut u32) {
    n.tag = 0;
    n.btag = 0;
    if with_edge {
        n.tag = *next;
        *next += 1;
    }
    if n.label.is_odd() {
        n.btag = *next;
        *next += 1;
    }
    if let Some(d) = n.label.decoration_mut() {
        retag_from(d, false, next);
    }
    let out = n.label.is_out();
    for (i, c) in n.children.iter_mut().enumerate() {
        retag_from(c, !(out && i == 0), next);
    }
}

/// Tags the items in canonical order starting at `start`; returns the next free tag.
fn retag(n: &mut Node, start: u32) -> u32 {
    let mut next = start;
    retag_from(n, false, &mut next);
    next
}

fn clear_tags(n: &mut Node) {
    n.visit_mut(&mut |v| {
        v.tag = 0;
        v.btag = 0;
    });
}

/// Clears tags and returns whether reading them in canonical order is an odd permutation.
fn canonicalize(mut root: Node) -> (Node, bool) {
    let seq = items(&root);
    let (_, odd) = sort_with_parity(&seq);
    clear_tags(&mut root);
    (root, odd)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PlanarTree {
    pub kind: TreeKind,
    pub root: Node,
}

pub type TreeComb = LinComb<PlanarTree>;

fn push_term(lc: &mut TreeComb, kind: TreeKind, raw: Node, coef: &Rational) {
    let (root, odd) = canonicalize(raw);
    lc.add(
        PlanarTree { kind, root },
        if odd { -coef.clone() } else { coef.clone() },
    );
}

impl PlanarTree {
    /// Checks the invariants of `kind` and clears any tags.
    pub fn new(kind: TreeKind, mut root: Node) -> Result<PlanarTree, TreeError> {
        clear_tags(&mut root);
        let inferred = infer_kind(&root)?;
        let mut red = false;
        root.visit(&mut |v| red |= matches!(v.label, Label::Red(_)));
        if !inferred.embeds_in(kind) || (kind == TreeKind::Bbr && red) {
            return Err(TreeError::Mismatch(format!(
                "a {} tree cannot be read as a {} tree",
                inferred.name(),
                kind.name()
            )));
        }
        Ok(PlanarTree { kind, root })
    }

    pub fn arity(&self) -> u32 {
        let mut n = 0;
        self.root.visit(&mut |v| {
            if matches!(v.label, Label::Ext(_)) {
                n += 1
            }
        });
        n
    }

    pub fn vertex_count(&self) -> usize {
        let mut n = 0;
        self.root.visit(&mut |_| n += 1);
        n
    }

    pub fn internal_count(&self) -> usize {
        let mut n = 0;
        self.root.visit(&mut |v| {
            if v.label == Label::Int {
                n += 1
            }
        });
        n
    }

    /// Number of odd items: edges (without the marked one) and blue vertices.
    pub fn item_count(&self) -> usize {
        items(&self.root).len()
    }

    /// `2·#internal − #edges − #blue`, one lower for B(Br) and `K_B` trees.
    pub fn degree(&self) -> i64 {
        let shift = i64::from(matches!(self.kind, TreeKind::Bbr | TreeKind::Bks1));
        2 * self.internal_count() as i64 - self.item_count() as i64 - shift
    }

    /// Applies `f` to every external label.
    pub fn relabel(&self, f: impl Fn(u32) -> u32) -> PlanarTree {
        let mut t = self.clone();
        t.root.visit_mut(&mut |v| {
            if let Label::Ext(k) = v.label {
                v.label = Label::Ext(f(k));
            }
        });
        t
    }

    /// Whether every external vertex is a leaf (the A∞ suboperad of Br).
    pub fn externals_are_leaves(&self) -> bool {
        let mut ok = true;
        self.root.visit(&mut |v| {
            if matches!(v.label, Label::Ext(_)) && !v.children.is_empty() {
                ok = false
            }
        });
        ok
    }

    /// Whether every internal vertex has at least two children.
    pub fn internal_valence_ok(&self) -> bool {
        let mut ok = true;
        self.root.visit(&mut |v| {
            if v.label == Label::Int && v.children.len() < 2 {
                ok = false
            }
        });
        ok
    }
}

// ---------------------------------------------------------------------------------------------
// Validation and kind inference

fn invalid(msg: impl Into<String>) -> TreeError {
    TreeError::Invalid(msg.into())
}

fn count_in(n: &Node) -> usize {
    let own = usize::from(n.label == Label::In);
    let deco = match &n.label {
        Label::Blue(d) | Label::Red(d) => count_in(d),
        _ => 0,
    };
    own + deco + n.children.iter().map(count_in).sum::<usize>()
}

/// Checks structural rules below `n`; `in_k` says whether `in` and units are allowed.
fn check_node(n: &Node, in_k: bool, is_root: bool) -> Result<(), TreeError> {
    match &n.label {
        Label::Unit | Label::In => {
            if !in_k {
                return Err(invalid("unit and in vertices only occur in K(...) trees"));
            }
            if !n.children.is_empty() {
                let what = if n.label == Label::Unit { "unit" } else { "in" };
                return Err(invalid(format!("the {what} vertex cannot have children")));
            }
        }
        Label::Out | Label::OutBlue(_) if !is_root => {
            return Err(invalid("K(...) may only occur at the root"));
        }
        Label::Out | Label::OutBlue(_) if n.children.is_empty() => {
            return Err(invalid("the out vertex needs a marked child"));
        }
        Label::Blue(d) | Label::Red(d) => {
            if d.children.is_empty() {
                return Err(invalid("a decoration must have at least two vertices"));
            }
            check_node(d, in_k, false)?;
        }
        Label::OutBlue(d) => {
            if d.label != Label::Out {
                return Err(invalid("K_B must be decorated by a K(...) tree"));
            }
            check_k_scope(d)?;
        }
        _ => {}
    }
    for c in &n.children {
        check_node(c, in_k, false)?;
    }
    Ok(())
}

fn check_k_scope(root: &Node) -> Result<(), TreeError> {
    check_node(root, true, true)?;
    match count_in(root) {
        1 => Ok(()),
        0 => Err(invalid("a K(...) tree needs the vertex in")),
        _ => Err(invalid("the vertex in occurs more than once")),
    }
}

fn infer_kind(root: &Node) -> Result<TreeKind, TreeError> {
    if root.label.is_out() {
        check_k_scope(root)?;
    } else {
        check_node(root, false, true)?;
    }
    let mut labels = Vec::new();
    let (mut int, mut low_int, mut unit, mut blue, mut red) = (false, false, false, false, false);
    root.visit(&mut |v| match v.label {
        Label::Ext(k) => labels.push(k),
        Label::Int => {
            int = true;
            low_int |= v.children.len() < 2;
        }
        Label::Unit => unit = true,
        Label::Blue(_) => blue = true,
        Label::Red(_) => red = true,
        _ => {}
    });
    labels.sort_unstable();
    for (i, &k) in labels.iter().enumerate() {
        if i > 0 && labels[i - 1] == k {
            return Err(invalid(format!("terminal {k} occurs more than once")));
        }
        if k as usize != i + 1 {
            return Err(invalid(format!("terminal {} is missing", i + 1)));
        }
    }
    Ok(match root.label {
        Label::OutBlue(_) => TreeKind::Bks1,
        Label::Out if int || unit || blue || red => TreeKind::Ks1,
        Label::Out => TreeKind::Pt1,
        _ if blue || red => {
            if low_int {
                return Err(invalid(
                    "internal vertex with fewer than two children in a Br∞ tree",
                ));
            }
            TreeKind::Binf
        }
        _ if low_int => TreeKind::TwPt,
        _ if int => TreeKind::Br,
        _ => TreeKind::Pt,
    })
}

// ---------------------------------------------------------------------------------------------
// Text format

fn write_node(n: &Node, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let list = |f: &mut fmt::Formatter<'_>, cs: &[Node]| -> fmt::Result {
        for (i, c) in cs.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write_node(c, f)?;
        }
        Ok(())
    };
    match &n.label {
        Label::Ext(k) if n.children.is_empty() => write!(f, "{k}"),
        Label::Ext(k) => {
            write!(f, "E({k};")?;
            list(f, &n.children)?;
            write!(f, ")")
        }
        Label::Int => {
            write!(f, "I(")?;
            list(f, &n.children)?;
            write!(f, ")")
        }
        Label::Blue(d) | Label::Red(d) | Label::OutBlue(d) => {
            let head = match n.label {
                Label::Blue(_) => "B",
                Label::Red(_) => "R",
                _ => "K_B",
            };
            write!(f, "{head}(")?;
            write_node(d, f)?;
            if !n.children.is_empty() {
                write!(f, ";")?;
                list(f, &n.children)?;
            }
            write!(f, ")")
        }
        Label::Unit => write!(f, "𝟙"),
        Label::In => write!(f, "in"),
        Label::Out => {
            write!(f, "K(")?;
            list(f, &n.children)?;
            write!(f, ")")
        }
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(self, f)
    }
}

impl fmt::Display for PlanarTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(&self.root, f)
    }
}

struct Parser {
    s: Vec<char>,
    i: usize,
}

impl Parser {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T, TreeError> {
        Err(TreeError::Parse {
            pos: self.i,
            msg: msg.into(),
        })
    }

    fn ws(&mut self) {
        while self.i < self.s.len() && self.s[self.i].is_whitespace() {
            self.i += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.ws();
        self.s.get(self.i).copied()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), TreeError> {
        if self.eat(c) {
            Ok(())
        } else {
            match self.peek() {
                Some(x) => self.err(format!("expected '{c}', found '{x}'")),
                None => self.err(format!("expected '{c}', found end of input")),
            }
        }
    }

    fn number(&mut self) -> Result<u32, TreeError> {
        self.ws();
        let start = self.i;
        while self.i < self.s.len() && self.s[self.i].is_ascii_digit() {
            self.i += 1;
        }
        if start == self.i {
            return self.err("expected a terminal number");
        }
        let text: String = self.s[start..self.i].iter().collect();
        match text.parse::<u32>() {
            Ok(0) => {
                self.i = start;
                self.err("terminals are numbered from 1")
            }
            Ok(k) => Ok(k),
            Err(_) => {
                self.i = start;
                self.err("terminal number too large")
            }
        }
    }

    /// A leaf symbol must not be followed by an argument list.
    fn no_args(&mut self, what: &str) -> Result<(), TreeError> {
        if self.peek() == Some('(') {
            return self.err(format!("{what} vertex cannot have children"));
        }
        Ok(())
    }

    fn list(&mut self, allow_empty: bool) -> Result<Vec<Node>, TreeError> {
        if allow_empty && self.peek() == Some(')') {
            return Ok(Vec::new());
        }
        let mut out = vec![self.node()?];
        while self.eat(',') {
            out.push(self.node()?);
        }
        Ok(out)
    }

    fn node(&mut self) -> Result<Node, TreeError> {
        let Some(c) = self.peek() else {
            return self.err("expected a tree, found end of input");
        };
        match c {
            '0'..='9' => {
                let k = self.number()?;
                self.no_args("a bare terminal")?;
                Ok(Node::ext(k, Vec::new()))
            }
            'I' => {
                self.i += 1;
                self.expect('(')?;
                let cs = self.list(true)?;
                self.expect(')')?;
                Ok(Node::int(cs))
            }
            'E' => {
                self.i += 1;
                self.expect('(')?;
                let k = self.number()?;
                let cs = if self.eat(';') {
                    self.list(true)?
                } else {
                    Vec::new()
                };
                self.expect(')')?;
                Ok(Node::ext(k, cs))
            }
            'B' | 'R' => {
                self.i += 1;
                self.expect('(')?;
                let d = self.node()?;
                // The decoration may be followed by ';' or ','.
                let cs = if self.eat(';') || self.eat(',') {
                    self.list(false)?
                } else {
                    Vec::new()
                };
                self.expect(')')?;
                let d = Box::new(d);
                Ok(Node::new(
                    if c == 'B' {
                        Label::Blue(d)
                    } else {
                        Label::Red(d)
                    },
                    cs,
                ))
            }
            'K' => {
                self.i += 1;
                if self.s.get(self.i) == Some(&'_') {
                    self.i += 1;
                    if self.s.get(self.i) != Some(&'B') {
                        return self.err("expected K_B");
                    }
                    self.i += 1;
                    self.expect('(')?;
                    let d = self.node()?;
                    self.expect(';')?;
                    let cs = self.list(false)?;
                    self.expect(')')?;
                    return Ok(Node::new(Label::OutBlue(Box::new(d)), cs));
                }
                self.expect('(')?;
                let cs = self.list(false)?;
                self.expect(')')?;
                Ok(Node::new(Label::Out, cs))
            }
            '𝟙' | 'U' => {
                self.i += 1;
                self.no_args("the unit")?;
                Ok(Node::leaf(Label::Unit))
            }
            'i' => {
                if self.s.get(self.i + 1) != Some(&'n') {
                    return self.err("expected 'in'");
                }
                self.i += 2;
                self.no_args("the in")?;
                Ok(Node::leaf(Label::In))
            }
            other => self.err(format!("unexpected character '{other}'")),
        }
    }
}

fn parse_node(expr: &str) -> Result<Node, TreeError> {
    let mut p = Parser {
        s: expr.chars().collect(),
        i: 0,
    };
    let n = p.node()?;
    if p.peek().is_some() {
        return p.err("trailing input");
    }
    Ok(n)
}

/// Parses the tree expression language and infers the smallest fitting kind.
pub fn parse_tree(expr: &str) -> Result<PlanarTree, TreeError> {
    let root = parse_node(expr)?;
    let kind = infer_kind(&root)?;
    Ok(PlanarTree { kind, root })
}

/// Parses a tree and reads it as a tree of the given kind.
pub fn parse_tree_as(expr: &str, kind: TreeKind) -> Result<PlanarTree, TreeError> {
    PlanarTree::new(kind, parse_node(expr)?)
}

impl std::str::FromStr for PlanarTree {
    type Err = TreeError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_tree(s)
    }
}

pub fn format_tree_comb(lc: &TreeComb) -> String {
    if lc.is_empty() {
        return "0".to_string();
    }
    lc.iter()
        .map(|(t, c)| format!("{} * {}", format_rational(c), t))
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn tree_comb_to_json(kind: TreeKind, lc: &TreeComb) -> Value {
    let terms: Vec<Value> = lc
        .iter()
        .map(|(t, c)| json!({"coef": format_rational(c), "tree": t.to_string()}))
        .collect();
    json!({"kind": kind.name(), "terms": terms})
}

pub fn tree_comb_from_json(v: &Value) -> Result<(TreeKind, TreeComb), TreeError> {
    let bad = |m: &str| invalid(format!("tree lincomb json: {m}"));
    let kind = v
        .get("kind")
        .and_then(Value::as_str)
        .and_then(TreeKind::from_name)
        .ok_or_else(|| bad("missing or unknown kind"))?;
    let mut lc = TreeComb::new();
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
        let s = t
            .get("tree")
            .and_then(Value::as_str)
            .ok_or_else(|| bad("missing tree"))?;
        lc.add(parse_tree_as(s, kind)?, c);
    }
    Ok((kind, lc))
}

// ---------------------------------------------------------------------------------------------
// Planar reconnection

/// Owners of the gaps of a tree level in contour order. A vertex with d children has d+1 gaps;
/// the out root has none before its marked child, so its gaps are cyclic.
fn gap_owners<'a>(n: &'a Node, out_root: bool, acc: &mut Vec<&'a Label>) {
    for (i, c) in n.children.iter().enumerate() {
        if !(out_root && i == 0) {
            acc.push(&n.label);
        }
        gap_owners(c, false, acc);
    }
    acc.push(&n.label);
}

/// Rebuilds a level with `assign[g]` inserted into gap `g`; an `in` vertex is replaced by `splice`.
fn fill(
    n: &Node,
    out_root: bool,
    assign: &[Vec<Node>],
    k: &mut usize,
    splice: Option<&Node>,
) -> Node {
    if let (Label::In, Some(s)) = (&n.label, splice) {
        *k += 1;
        return s.clone().with_tag(n.tag);
    }
    let mut kids = Vec::new();
    for (i, c) in n.children.iter().enumerate() {
        if !(out_root && i == 0) {
            kids.extend(assign[*k].iter().cloned());
            *k += 1;
        }
        kids.push(fill(c, false, assign, k, splice));
    }
    kids.extend(assign[*k].iter().cloned());
    *k += 1;
    Node {
        label: n.label.clone(),
        children: kids,
        tag: n.tag,
        btag: n.btag,
    }
}

/// All weakly increasing sequences of length `k` over `0..g`.
pub fn weakly_increasing(g: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(g: usize, k: usize, lo: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for x in lo..g {
            cur.push(x);
            rec(g, k, x, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(g, k, 0, &mut Vec::with_capacity(k), &mut out);
    out
}

/// Reattaches `kids`, in order, to the gaps of `host` in all order-preserving ways.
fn distribute(host: &Node, kids: &[Node]) -> Vec<Node> {
    let mut owners = Vec::new();
    gap_owners(host, false, &mut owners);
    let g = owners.len();
    weakly_increasing(g, kids.len())
        .into_iter()
        .map(|seq| {
            let mut assign = vec![Vec::new(); g];
            for (kid, &s) in kids.iter().zip(&seq) {
                assign[s].push(kid.clone());
            }
            fill(host, false, &assign, &mut 0, None)
        })
        .collect()
}

/// Number of gaps of a tree level: `2·|V| − 1`.
pub fn gap_count(t: &PlanarTree) -> usize {
    let mut owners = Vec::new();
    gap_owners(&t.root, t.root.label.is_out(), &mut owners);
    owners.len()
}

fn find_ext(n: &Node, k: u32) -> Option<Vec<Step>> {
    let mut paths = Vec::new();
    all_paths(n, &mut Vec::new(), &mut paths);
    paths
        .into_iter()
        .find(|p| node_at(n, p).label == Label::Ext(k))
}

// ---------------------------------------------------------------------------------------------
// PT and Br

fn is_pt_like(k: TreeKind) -> bool {
    matches!(k, TreeKind::Pt | TreeKind::TwPt | TreeKind::Br)
}

fn join_kind(a: TreeKind, b: TreeKind) -> TreeKind {
    use TreeKind::*;
    match (a, b) {
        (TwPt, _) | (_, TwPt) => TwPt,
        (Br, _) | (_, Br) => Br,
        _ => Pt,
    }
}

/// Inserts `t2` at vertex `j` of `t1`, reconnecting the children of `j` in all planar ways.
/// Edges of `t1` precede those of `t2`; labels of `t2` become `j..j+n2−1`.
pub fn pt_compose(t1: &PlanarTree, j: u32, t2: &PlanarTree) -> Result<TreeComb, TreeError> {
    if !is_pt_like(t1.kind) || !is_pt_like(t2.kind) {
        return Err(TreeError::Mismatch(format!(
            "pt_compose needs PT or Br trees, got {} and {}",
            t1.kind.name(),
            t2.kind.name()
        )));
    }
    let n1 = t1.arity();
    if j == 0 || j > n1 {
        return Err(invalid(format!(
            "slot {j} is not a vertex of a tree of arity {n1}"
        )));
    }
    let n2 = t2.arity();
    let mut a = t1.relabel(|k| if k > j { k + n2 - 1 } else { k }).root;
    let mut b = t2.relabel(|k| k + j - 1).root;
    let next = retag(&mut a, 1);
    retag(&mut b, next);
    let path = find_ext(&a, j).expect("slot label present");
    let v = node_at(&a, &path);
    let host = b.with_tag(v.tag);
    let kind = join_kind(t1.kind, t2.kind);
    let mut out = TreeComb::new();
    for filled in distribute(&host, &v.children) {
        push_term(&mut out, kind, replace_at(&a, &path, filled), &rat(1));
    }
    Ok(out)
}

/// Extends `pt_compose` linearly in both arguments.
pub fn pt_compose_lc(a: &TreeComb, j: u32, b: &TreeComb) -> Result<TreeComb, TreeError> {
    let mut out = TreeComb::new();
    for (t1, c1) in a.iter() {
        for (t2, c2) in b.iter() {
            out.add_scaled(&pt_compose(t1, j, t2)?, &(c1 * c2));
        }
    }
    Ok(out)
}

/// Splittings and attachments of one level; the new edge carries tag 0 and comes first.
///
/// Attaching a new internal root or a new internal leaf has coefficient 1. Splitting a vertex
/// into two joined by a new edge, either one on top, with the old children distributed over
/// the three gaps, has coefficient −1, or −½ when the split vertex is internal.
fn ds_level(root: &Node, acc: &mut Vec<(Node, Rational)>) {
    let w = Node::int(Vec::new());
    acc.push((Node::int(vec![root.clone().with_tag(0)]), rat(1)));
    for filled in distribute(root, std::slice::from_ref(&w)) {
        acc.push((filled, rat(1)));
    }
    let mut paths = Vec::new();
    level_paths(root, &mut Vec::new(), &mut paths);
    for p in paths {
        let v = node_at(root, &p);
        let coef = if v.label == Label::Int {
            frac(-1, 2)
        } else {
            rat(-1)
        };
        let bare = Node {
            children: Vec::new(),
            ..v.clone()
        };
        let below = Node {
            children: vec![w.clone()],
            ..bare.clone()
        };
        let above = Node::int(vec![bare.with_tag(0)]).with_tag(v.tag);
        for host in [below, above] {
            for filled in distribute(&host, &v.children) {
                acc.push((replace_at(root, &p, filled), coef.clone()));
            }
        }
    }
}

/// `d_s` on every level, including inside decorations.
fn ds_all(root: &Node, acc: &mut Vec<(Node, Rational)>) {
    ds_level(root, acc);
    let mut paths = Vec::new();
    level_paths(root, &mut Vec::new(), &mut paths);
    for p in paths {
        if let Some(d) = node_at(root, &p).label.decoration() {
            let mut inner = Vec::new();
            ds_all(d, &mut inner);
            let mut deco_path = p.clone();
            deco_path.push(Step::Deco);
            for (nd, c) in inner {
                acc.push((replace_at(root, &deco_path, nd), c));
            }
        }
    }
}

/// The differential of Tw PT, which restricts to Br: new internal vertices by splitting.
pub fn br_differential(t: &PlanarTree) -> Result<TreeComb, TreeError> {
    if !is_pt_like(t.kind) {
        return Err(TreeError::Mismatch(format!(
            "br_differential needs a Br tree, got {}",
            t.kind.name()
        )));
    }
    let kind = if t.kind == TreeKind::TwPt {
        TreeKind::TwPt
    } else {
        TreeKind::Br
    };
    let mut root = t.root.clone();
    retag(&mut root, 1);
    let mut raw = Vec::new();
    ds_level(&root, &mut raw);
    let mut out = TreeComb::new();
    for (n, c) in raw {
        push_term(&mut out, kind, n, &c);
    }
    Ok(out)
}

pub fn br_differential_lc(lc: &TreeComb) -> Result<TreeComb, TreeError> {
    let mut out = TreeComb::new();
    for (t, c) in lc.iter() {
        out.add_scaled(&br_differential(t)?, c);
    }
    Ok(out)
}

/// The corolla `T_n`: external root 1 with leaves `2..n+1`.
pub fn corolla(n: u32) -> PlanarTree {
    let root = Node::ext(1, (2..=n + 1).map(|k| Node::ext(k, Vec::new())).collect());
    PlanarTree {
        kind: TreeKind::Pt,
        root,
    }
}

/// The corolla `T_n′`: internal root with leaves `1..n`.
pub fn internal_corolla(n: u32) -> PlanarTree {
    let root = Node::int((1..=n).map(|k| Node::ext(k, Vec::new())).collect());
    let kind = if n >= 2 { TreeKind::Br } else { TreeKind::TwPt };
    PlanarTree { kind, root }
}

fn single_term(lc: TreeComb) -> (PlanarTree, Rational) {
    let mut it = lc.into_terms().into_iter();
    let term = it.next().expect("composition at a leaf has one term");
    debug_assert!(it.next().is_none());
    term
}

fn compositions(total_max: u32, parts: usize) -> Vec<Vec<u32>> {
    if parts == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for first in 0..=total_max {
        for mut rest in compositions(total_max - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn increasing(n: usize, k: usize) -> Vec<Vec<u32>> {
    weakly_increasing(n, k)
        .into_iter()
        .filter(|s| s.windows(2).all(|w| w[0] < w[1]))
        .map(|s| s.into_iter().map(|x| x as u32 + 1).collect())
        .collect()
}

/// `T_m ∘₁ T_n` (or `T_m ∘₁ T_n′`) minus the expansion `Σ ± T_{n+m−J} ∘ (T_{j_1}, …, T_{j_n})`.
///
/// Each tree on the right is identified with a tree on the left vertex by vertex, and its sign
/// is the parity of its natural edge order read in the edge identities of the left-hand side.
pub fn planar_leibniz_residual(m: u32, n: u32, primed: bool) -> Result<TreeComb, TreeError> {
    if m == 0 || n == 0 || m > 4 || n > 4 {
        return Err(invalid("planar_leibniz_residual needs 1 ≤ m, n ≤ 4"));
    }
    let inner = if primed {
        internal_corolla(n)
    } else {
        corolla(n)
    };
    let mut res = pt_compose(&corolla(m), 1, &inner)?;
    let offset = u32::from(!primed);
    let base_m = n + 1 + offset;
    for ks in compositions(m, n as usize) {
        let big_j: u32 = ks.iter().sum();
        let big_n = n + m - big_j;
        for is in increasing(big_n as usize, n as usize) {
            let mut cur = if primed {
                internal_corolla(big_n)
            } else {
                corolla(big_n)
            };
            let mut coef = rat(1);
            let mut shift = 0;
            for (r, &k) in ks.iter().enumerate() {
                if k > 0 {
                    let (t, c) =
                        single_term(pt_compose(&cur, is[r] + offset + shift, &corolla(k))?);
                    cur = t;
                    coef *= c;
                    shift += k;
                }
            }
            // Identify vertices with the left-hand side and read off edge identities.
            let mut root = cur.root.clone();
            let mut ident_top = Vec::new();
            let mut ident_low: Vec<Vec<usize>> = vec![Vec::new(); n as usize];
            let mut q = 0usize;
            for (p, child) in root.children.iter_mut().enumerate() {
                match is.iter().position(|&i| i as usize == p + 1) {
                    Some(r) => {
                        child.label = Label::Ext(r as u32 + 1 + offset);
                        ident_top.push(m as usize + r);
                        for g in &mut child.children {
                            g.label = Label::Ext(base_m + q as u32);
                            ident_low[r].push(q);
                            q += 1;
                        }
                    }
                    None => {
                        child.label = Label::Ext(base_m + q as u32);
                        ident_top.push(q);
                        q += 1;
                    }
                }
            }
            let seq: Vec<usize> = ident_top
                .into_iter()
                .chain(ident_low.into_iter().flatten())
                .collect();
            let (_, odd) = sort_with_parity(&seq);
            if odd {
                coef = -coef;
            }
            res.add(
                PlanarTree {
                    kind: res_kind(primed, n),
                    root,
                },
                -coef,
            );
        }
    }
    Ok(res)
}

fn res_kind(primed: bool, n: u32) -> TreeKind {
    match (primed, n) {
        (false, _) => TreeKind::Pt,
        (true, 1) => TreeKind::TwPt,
        (true, _) => TreeKind::Br,
    }
}

// ---------------------------------------------------------------------------------------------
// PT1 and KS1

fn is_ks_like(k: TreeKind) -> bool {
    matches!(k, TreeKind::Pt1 | TreeKind::Ks1)
}

/// The moperad unit `K(in)`.
pub fn ks1_unit() -> PlanarTree {
    PlanarTree {
        kind: TreeKind::Pt1,
        root: Node::new(Label::Out, vec![Node::leaf(Label::In)]),
    }
}

/// Moperadic composition: deletes `in` of `t1` and `out` of `t2`, splices the marked edge of
/// `t2` into the edge of `in`, and reattaches the other children of `out` to vertices of `t1`
/// in all ways compatible with the cyclic order starting at `in`. Edges of `t1` come first and
/// the labels of `t2` are shifted past those of `t1`. Children landing on a unit vertex give
/// zero; KS1 results are normalized.
pub fn ks1_compose(t1: &PlanarTree, t2: &PlanarTree) -> Result<TreeComb, TreeError> {
    if !is_ks_like(t1.kind) || !is_ks_like(t2.kind) {
        return Err(TreeError::Mismatch(format!(
            "ks1_compose needs PT1 or KS1 trees, got {} and {}",
            t1.kind.name(),
            t2.kind.name()
        )));
    }
    let kind = if t1.kind == TreeKind::Ks1 || t2.kind == TreeKind::Ks1 {
        TreeKind::Ks1
    } else {
        TreeKind::Pt1
    };
    let n1 = t1.arity();
    let mut a = t1.root.clone();
    let mut b = t2.relabel(|k| k + n1).root;
    let next = retag(&mut a, 1);
    retag(&mut b, next);
    let mut owners = Vec::new();
    gap_owners(&a, true, &mut owners);
    let g = owners.len();
    let in_gap = owners
        .iter()
        .position(|l| **l == Label::In)
        .ok_or_else(|| invalid("in must be a vertex of the first level"))?;
    let rotated: Vec<usize> = (1..g).map(|s| (in_gap + s) % g).collect();
    let marked = &b.children[0];
    let kids = &b.children[1..];
    let mut raw = TreeComb::new();
    for seq in weakly_increasing(rotated.len(), kids.len()) {
        let gaps: Vec<usize> = seq.iter().map(|&s| rotated[s]).collect();
        if gaps.iter().any(|&x| *owners[x] == Label::Unit) {
            continue;
        }
        let mut assign = vec![Vec::new(); g];
        for (kid, &x) in kids.iter().zip(&gaps) {
            assign[x].push(kid.clone());
        }
        push_term(
            &mut raw,
            kind,
            fill(&a, true, &assign, &mut 0, Some(marked)),
            &rat(1),
        );
    }
    if kind == TreeKind::Pt1 {
        return Ok(raw);
    }
    ks1_normalize_lc(&raw)
}

pub fn ks1_compose_lc(a: &TreeComb, b: &TreeComb) -> Result<TreeComb, TreeError> {
    let mut out = TreeComb::new();
    for (t1, c1) in a.iter() {
        for (t2, c2) in b.iter() {
            out.add_scaled(&ks1_compose(t1, t2)?, &(c1 * c2));
        }
    }
    Ok(out)
}

enum Rewrite {
    Zero,
    Merge(Vec<Step>),
}

fn find_rewrite(n: &Node, path: &mut Vec<Step>) -> Option<Rewrite> {
    for (i, c) in n.children.iter().enumerate() {
        if c.label == Label::Unit {
            match &n.label {
                Label::Int if n.children.len() >= 3 => return Some(Rewrite::Zero),
                Label::Int if n.children.len() == 2 => return Some(Rewrite::Merge(path.clone())),
                Label::Int => {}
                Label::Out | Label::OutBlue(_) if i == 0 => {}
                _ => return Some(Rewrite::Zero),
            }
        }
    }
    for i in 0..n.children.len() {
        path.push(Step::Child(i));
        let r = find_rewrite(&n.children[i], path);
        path.pop();
        if r.is_some() {
            return r;
        }
    }
    None
}

/// Reduces by the unit relations: a unit below an internal vertex with three or more children,
/// below a numbered vertex, or on an unmarked edge at out gives zero; an internal vertex with
/// two children one of which is a unit is removed together with the unit. For the removal the
/// two child edges are first moved to the front in planar order, so `I(𝟙,x) = x` and
/// `I(x,𝟙) = (−1)^{#edges of x} x`.
pub fn ks1_normalize(t: &PlanarTree) -> Result<TreeComb, TreeError> {
    if !is_ks_like(t.kind) {
        return Err(TreeError::Mismatch(format!(
            "ks1_normalize needs a KS1 tree, got {}",
            t.kind.name()
        )));
    }
    let mut root = t.root.clone();
    let mut coef = rat(1);
    loop {
        retag(&mut root, 1);
        match find_rewrite(&root, &mut Vec::new()) {
            None => break,
            Some(Rewrite::Zero) => return Ok(TreeComb::new()),
            Some(Rewrite::Merge(p)) => {
                let v = node_at(&root, &p);
                let (t1, t2) = (v.children[0].tag, v.children[1].tag);
                if (t1 + t2 + 1) % 2 == 1 {
                    coef = -coef;
                }
                let keep = if v.children[0].label == Label::Unit {
                    1
                } else {
                    0
                };
                let x = v.children[keep].clone().with_tag(v.tag);
                let (r, odd) = canonicalize(replace_at(&root, &p, x));
                if odd {
                    coef = -coef;
                }
                root = r;
            }
        }
    }
    let (root, odd) = canonicalize(root);
    if odd {
        coef = -coef;
    }
    Ok(TreeComb::single(PlanarTree { kind: t.kind, root }, coef))
}

pub fn ks1_normalize_lc(lc: &TreeComb) -> Result<TreeComb, TreeError> {
    let mut out = TreeComb::new();
    for (t, c) in lc.iter() {
        out.add_scaled(&ks1_normalize(t)?, c);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------------------------
// Br∞ and B(Br)

/// `d = d_s + d_br + d_bi`: splittings on every level including decorations, recoloring a
/// blue vertex red (Br∞ only), and inserting the decoration of a blue vertex in its place with
/// the children reconnected in all planar ways. Removing a blue mark that sits at position p in
/// canonical order costs `(−1)^p`.
pub fn brinf_differential(t: &PlanarTree) -> Result<TreeComb, TreeError> {
    if !matches!(t.kind, TreeKind::Binf | TreeKind::Bbr) {
        return Err(TreeError::Mismatch(format!(
            "brinf_differential needs a Br∞ or B(Br) tree, got {}",
            t.kind.name()
        )));
    }
    let mut root = t.root.clone();
    retag(&mut root, 1);
    let mut raw = Vec::new();
    ds_all(&root, &mut raw);
    let mut paths = Vec::new();
    all_paths(&root, &mut Vec::new(), &mut paths);
    for p in paths {
        let v = node_at(&root, &p);
        let Label::Blue(d) = &v.label else { continue };
        let sign = if v.btag % 2 == 1 { rat(1) } else { rat(-1) };
        if t.kind == TreeKind::Binf {
            let red = Node {
                label: Label::Red(d.clone()),
                btag: 0,
                ..v.clone()
            };
            raw.push((replace_at(&root, &p, red), sign.clone()));
        }
        let host = (**d).clone().with_tag(v.tag);
        for filled in distribute(&host, &v.children) {
            raw.push((replace_at(&root, &p, filled), sign.clone()));
        }
    }
    let mut out = TreeComb::new();
    for (n, c) in raw {
        push_term(&mut out, t.kind, n, &c);
    }
    Ok(out)
}

pub fn brinf_differential_lc(lc: &TreeComb) -> Result<TreeComb, TreeError> {
    let mut out = TreeComb::new();
    for (t, c) in lc.iter() {
        out.add_scaled(&brinf_differential(t)?, c);
    }
    Ok(out)
}

/// Dispatches to the differential of the tree's kind.
pub fn tree_differential(t: &PlanarTree) -> Result<TreeComb, TreeError> {
    match t.kind {
        TreeKind::Binf | TreeKind::Bbr => brinf_differential(t),
        k if is_pt_like(k) => br_differential(t),
        k => Err(TreeError::Mismatch(format!(
            "no differential implemented for {} trees",
            k.name()
        ))),
    }
}

// ---------------------------------------------------------------------------------------------
// Enumeration and sampling

/// All planar rooted tree shapes with `n` vertices, labels unset.
fn shapes(n: usize) -> Vec<Node> {
    fn forests(n: usize) -> Vec<Vec<Node>> {
        if n == 0 {
            return vec![Vec::new()];
        }
        let mut out = Vec::new();
        for s in 1..=n {
            for t in shapes(s) {
                for mut rest in forests(n - s) {
                    rest.insert(0, t.clone());
                    out.push(rest);
                }
            }
        }
        out
    }
    if n == 0 {
        return Vec::new();
    }
    forests(n - 1).into_iter().map(Node::int).collect()
}

/// Colors each vertex external or internal (internal needs ≥ 2 children), numbering externals in
/// preorder; at least one vertex is external.
fn colorings(shape: &Node) -> Vec<Node> {
    let mut paths = Vec::new();
    level_paths(shape, &mut Vec::new(), &mut paths);
    let n = paths.len();
    let mut out = Vec::new();
    for mask in 0u32..(1 << n) {
        let mut t = shape.clone();
        let mut ok = mask != (1 << n) - 1;
        let mut next = 1;
        for (i, p) in paths.iter().enumerate() {
            let internal = mask >> i & 1 == 1;
            if internal && node_at(shape, p).children.len() < 2 {
                ok = false;
                break;
            }
            let label = if internal {
                Label::Int
            } else {
                next += 1;
                Label::Ext(next - 1)
            };
            let mut v = node_at(&t, p).clone();
            v.label = label;
            t = replace_at(&t, p, v);
        }
        if ok {
            out.push(t);
        }
    }
    out
}

fn renumber_preorder(root: &mut Node) {
    let mut next = 1;
    root.visit_mut(&mut |v| {
        if let Label::Ext(_) = v.label {
            v.label = Label::Ext(next);
            next += 1;
        }
    });
}

/// Br trees with at most `max_vertices` vertices, external labels in preorder.
pub fn enumerate_br_trees(max_vertices: usize) -> Vec<PlanarTree> {
    let mut out = Vec::new();
    for n in 1..=max_vertices {
        for s in shapes(n) {
            for root in colorings(&s) {
                let kind = if root.children.is_empty() || !has_int(&root) {
                    TreeKind::Pt
                } else {
                    TreeKind::Br
                };
                out.push(PlanarTree { kind, root });
            }
        }
    }
    out
}

fn has_int(n: &Node) -> bool {
    let mut f = false;
    n.visit(&mut |v| f |= v.label == Label::Int);
    f
}

/// Br∞ (or B(Br)) trees with at most `max_vertices` vertices in total and exactly one blue or
/// red vertex, decorated by a Br tree with at least two vertices.
pub fn enumerate_brinf_trees(max_vertices: usize, kind: TreeKind) -> Vec<PlanarTree> {
    let mut out = Vec::new();
    let colors: &[bool] = if kind == TreeKind::Bbr {
        &[true]
    } else {
        &[true, false]
    };
    for outer in 1..max_vertices {
        let decos: Vec<PlanarTree> = enumerate_br_trees(max_vertices - outer)
            .into_iter()
            .filter(|d| !d.root.children.is_empty())
            .collect();
        for s in shapes(outer) {
            let mut paths = Vec::new();
            level_paths(&s, &mut Vec::new(), &mut paths);
            for base in colorings_allow_all_int(&s) {
                for p in &paths {
                    if outer == 1 && p.is_empty() {
                        continue;
                    }
                    for d in &decos {
                        for &blue in colors {
                            let mut v = node_at(&base, p).clone();
                            let deco = Box::new(d.root.clone());
                            v.label = if blue {
                                Label::Blue(deco)
                            } else {
                                Label::Red(deco)
                            };
                            let mut root = replace_at(&base, p, v);
                            renumber_preorder(&mut root);
                            if infer_kind(&root).is_ok() {
                                out.push(PlanarTree { kind, root });
                            }
                        }
                    }
                }
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

fn colorings_allow_all_int(shape: &Node) -> Vec<Node> {
    let mut paths = Vec::new();
    level_paths(shape, &mut Vec::new(), &mut paths);
    let n = paths.len();
    let mut out = Vec::new();
    for mask in 0u32..(1 << n) {
        let mut t = shape.clone();
        for (i, p) in paths.iter().enumerate() {
            let mut v = node_at(&t, p).clone();
            v.label = if mask >> i & 1 == 1 {
                Label::Int
            } else {
                Label::Ext(0)
            };
            t = replace_at(&t, p, v);
        }
        out.push(t);
    }
    out
}

/// KS1 trees: the out root over a forest with at most `max_vertices` further vertices, one of
/// them `in`, others numbered, internal or unit.
pub fn enumerate_ks1_trees(max_vertices: usize, with_units: bool) -> Vec<PlanarTree> {
    let mut out = Vec::new();
    for n in 1..=max_vertices {
        for s in shapes(n + 1) {
            let mut paths = Vec::new();
            level_paths(&s, &mut Vec::new(), &mut paths);
            let rest = &paths[1..];
            let choices = if with_units { 4u32 } else { 3 };
            let total = choices.pow(rest.len() as u32);
            for code in 0..total {
                let mut t = s.clone();
                t.label = Label::Out;
                let mut c = code;
                let mut ins = 0;
                let mut ok = true;
                for p in rest {
                    let pick = c % choices;
                    c /= choices;
                    let leaf = node_at(&s, p).children.is_empty();
                    let label = match pick {
                        0 => Label::Ext(0),
                        1 if leaf => {
                            ins += 1;
                            Label::In
                        }
                        2 if node_at(&s, p).children.len() >= 2 => Label::Int,
                        3 if leaf => Label::Unit,
                        _ => {
                            ok = false;
                            break;
                        }
                    };
                    let mut v = node_at(&t, p).clone();
                    v.label = label;
                    t = replace_at(&t, p, v);
                }
                if !ok || ins != 1 {
                    continue;
                }
                renumber_preorder(&mut t);
                if let Ok(kind) = infer_kind(&t) {
                    out.push(PlanarTree {
                        kind: if with_units { TreeKind::Ks1 } else { kind },
                        root: t,
                    });
                }
            }
        }
    }
    out
}

/// A random valid tree of the given kind with about `size` vertices and a random labeling.
pub fn random_tree(rng: &mut impl Rng, kind: TreeKind, size: usize) -> PlanarTree {
    let size = size.max(1);
    let mut root = match kind {
        TreeKind::Pt => random_shape(rng, size, &|_, _| Label::Ext(0)),
        TreeKind::Br | TreeKind::TwPt => random_br_level(rng, size),
        TreeKind::Binf | TreeKind::Bbr => {
            let outer = (size / 2).max(2);
            let mut r = random_br_level(rng, outer);
            let mut paths = Vec::new();
            level_paths(&r, &mut Vec::new(), &mut paths);
            let p = paths[rng.gen_range(0..paths.len())].clone();
            let deco = Box::new(random_br_level(rng, (size - outer).max(2)));
            let mut v = node_at(&r, &p).clone();
            v.label = if kind == TreeKind::Binf && rng.gen_bool(0.3) {
                Label::Red(deco)
            } else {
                Label::Blue(deco)
            };
            r = replace_at(&r, &p, v);
            r
        }
        TreeKind::Pt1 | TreeKind::Ks1 | TreeKind::Bks1 => {
            let units = kind != TreeKind::Pt1;
            let mut r = random_br_level(rng, size + 1);
            r.label = Label::Out;
            let mut paths = Vec::new();
            level_paths(&r, &mut Vec::new(), &mut paths);
            let leaves: Vec<_> = paths
                .iter()
                .filter(|p| !p.is_empty() && node_at(&r, p).children.is_empty())
                .cloned()
                .collect();
            let p = &leaves[rng.gen_range(0..leaves.len())];
            r = replace_at(&r, p, Node::leaf(Label::In));
            if !units {
                // PT1 has no internal vertices.
                r.visit_mut(&mut |v| {
                    if v.label == Label::Int {
                        v.label = Label::Ext(0)
                    }
                });
            } else if rng.gen_bool(0.5) {
                let mut c = r.children.clone();
                c.insert(0, Node::leaf(Label::Unit));
                r.children = c;
            }
            if kind == TreeKind::Bks1 {
                let inner = random_tree(rng, TreeKind::Ks1, 2).root;
                r.label = Label::OutBlue(Box::new(inner));
            }
            r
        }
    };
    shuffle_labels(rng, &mut root);
    let kind = infer_kind(&root)
        .map(|k| if k.embeds_in(kind) { kind } else { k })
        .expect("generator yields valid trees");
    PlanarTree { kind, root }
}

fn random_shape(rng: &mut impl Rng, size: usize, label: &dyn Fn(usize, usize) -> Label) -> Node {
    let mut nodes: Vec<(usize, Vec<usize>)> = vec![(0, Vec::new())];
    for i in 1..size {
        let parent = rng.gen_range(0..i);
        let pos = rng.gen_range(0..=nodes[parent].1.len());
        nodes[parent].1.insert(pos, i);
        nodes.push((i, Vec::new()));
    }
    fn build(
        i: usize,
        nodes: &[(usize, Vec<usize>)],
        label: &dyn Fn(usize, usize) -> Label,
    ) -> Node {
        let cs: Vec<Node> = nodes[i].1.iter().map(|&c| build(c, nodes, label)).collect();
        Node::new(label(i, cs.len()), cs)
    }
    build(0, &nodes, label)
}

/// A random shape; vertices with two or more children are internal with probability one half.
fn random_br_level(rng: &mut impl Rng, size: usize) -> Node {
    let mut root = random_shape(rng, size, &|_, _| Label::Ext(0));
    let coin: Vec<bool> = (0..size).map(|_| rng.gen_bool(0.5)).collect();
    let mut i = 0;
    root.visit_mut(&mut |v| {
        if v.children.len() >= 2 && coin[i] {
            v.label = Label::Int;
        }
        i += 1;
    });
    root
}

fn shuffle_labels(rng: &mut impl Rng, root: &mut Node) {
    let mut n = 0;
    root.visit(&mut |v| {
        if matches!(v.label, Label::Ext(_)) {
            n += 1
        }
    });
    let mut perm: Vec<u32> = (1..=n).collect();
    for i in (1..perm.len()).rev() {
        perm.swap(i, rng.gen_range(0..=i));
    }
    let mut i = 0;
    root.visit_mut(&mut |v| {
        if let Label::Ext(_) = v.label {
            v.label = Label::Ext(perm[i]);
            i += 1;
        }
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn t(s: &str) -> PlanarTree {
        parse_tree(s).unwrap_or_else(|e| panic!("{s}: {e}"))
    }

    fn tk(s: &str, k: TreeKind) -> PlanarTree {
        parse_tree_as(s, k).unwrap_or_else(|e| panic!("{s}: {e}"))
    }

    fn lc(terms: &[(&str, i64)], kind: TreeKind) -> TreeComb {
        terms.iter().map(|(s, c)| (tk(s, kind), rat(*c))).collect()
    }

    #[test]
    fn parses_the_reference_expressions() {
        let a = t("I(E(2;5,4),B(E(3;6);1))");
        assert_eq!(a.kind, TreeKind::Binf);
        assert_eq!(a.to_string(), "I(E(2;5,4),B(E(3;6);1))");
        assert_eq!(t("I(E(2;5,4),B(E(3;6),1))"), a);
        // 6 edges, 1 blue, 1 internal.
        assert_eq!(a.degree(), 2 - 7);
        assert_eq!(t("1").root, Node::ext(1, Vec::new()));
        let k = t("K(𝟙, I(2,I(3,in)), 1)");
        assert_eq!(k.kind, TreeKind::Ks1);
        assert_eq!(k.to_string(), "K(𝟙,I(2,I(3,in)),1)");
        assert_eq!(t("K(E(1;2,I(4,in)),3)").kind, TreeKind::Ks1);
        let kb = t("K_B(K(𝟙, B(E(3;4,5); 6,7), in ); 1,2,in)");
        assert_eq!(kb.kind, TreeKind::Bks1);
        assert_eq!(t(&kb.to_string()), kb);
        assert_eq!(t("K(1,in)").kind, TreeKind::Pt1);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            parse_tree("E(1;2"),
            Err(TreeError::Parse { pos: 5, .. })
        ));
        assert!(
            matches!(parse_tree("I(1,1)"), Err(TreeError::Invalid(m)) if m.contains("more than once"))
        );
        assert!(
            matches!(parse_tree("I(1,3)"), Err(TreeError::Invalid(m)) if m.contains("missing"))
        );
        assert!(matches!(
            parse_tree("K(𝟙(1),in)"),
            Err(TreeError::Parse { .. })
        ));
        assert!(parse_tree("K(1,in,in)").is_err());
        assert!(parse_tree("I(1,in)").is_err());
        assert!(parse_tree("B(1;2)").is_err(), "single-vertex decoration");
        assert!(parse_tree("E(1;K(in))").is_err());
        assert!(parse_tree("1 2").is_err());
        assert!(parse_tree("x").is_err());
        assert!(parse_tree("0").is_err());
        assert!(parse_tree_as("I(1,2)", TreeKind::Pt).is_err());
        assert!(parse_tree_as("R(E(1;2);3)", TreeKind::Bbr).is_err());
    }

    #[test]
    fn random_corpus_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for i in 0..400 {
            let kind = TreeKind::ALL[i % TreeKind::ALL.len()];
            let tr = random_tree(&mut rng, kind, 2 + i % 6);
            let s = tr.to_string();
            let back = parse_tree_as(&s, tr.kind).unwrap_or_else(|e| panic!("{s}: {e}"));
            assert_eq!(back, tr, "{s}");
        }
    }

    #[test]
    fn ks1_reference_composition_has_three_terms() {
        let two = t("E(1;2)");
        let r = pt_compose(&two, 1, &two).unwrap();
        // Edge of the outer tree first: only E(1;3,2) keeps the natural order.
        assert_eq!(
            r,
            lc(
                &[("E(1;3,2)", 1), ("E(1;E(2;3))", -1), ("E(1;2,3)", -1)],
                TreeKind::Pt
            )
        );
    }

    #[test]
    fn unit_laws() {
        let one = t("1");
        for s in ["E(1;2)", "E(2;I(1,3))", "I(E(1;3),2)", "E(1;E(2;3),4)"] {
            let x = tk(s, TreeKind::Br);
            let single = TreeComb::single(x.clone(), rat(1));
            assert_eq!(pt_compose(&one, 1, &x).unwrap(), single);
            for j in 1..=x.arity() {
                assert_eq!(pt_compose(&x, j, &one).unwrap(), single, "{s} ∘{j} 1");
            }
        }
    }

    #[test]
    fn term_count_is_number_of_placements() {
        let trees = enumerate_br_trees(4);
        for a in trees.iter().filter(|a| a.vertex_count() <= 3) {
            for b in &trees {
                for j in 1..=a.arity() {
                    let kids = node_at(&a.root, &find_ext(&a.root, j).unwrap())
                        .children
                        .len();
                    let expected = weakly_increasing(gap_count(b), kids).len();
                    assert_eq!(gap_count(b), 2 * b.vertex_count() - 1);
                    assert_eq!(pt_compose(a, j, b).unwrap().len(), expected);
                }
            }
        }
    }

    fn odd(t: &PlanarTree) -> bool {
        t.degree().rem_euclid(2) == 1
    }

    #[test]
    fn pt_composition_is_associative() {
        let trees: Vec<_> = enumerate_br_trees(3)
            .into_iter()
            .filter(|t| t.arity() >= 1)
            .collect();
        for a in &trees {
            for b in &trees {
                for c in &trees {
                    if a.vertex_count() + b.vertex_count() + c.vertex_count() > 7 {
                        continue;
                    }
                    let (na, nb) = (a.arity(), b.arity());
                    for i in 1..=na {
                        // Sequential.
                        let ab = pt_compose(a, i, b).unwrap();
                        for j in 1..=nb {
                            let lhs =
                                pt_compose_lc(&ab, i + j - 1, &TreeComb::single(c.clone(), rat(1)))
                                    .unwrap();
                            let bc = pt_compose(b, j, c).unwrap();
                            let rhs = pt_compose_lc(&TreeComb::single(a.clone(), rat(1)), i, &bc)
                                .unwrap();
                            assert_eq!(lhs, rhs, "({a} ∘{i} {b}) ∘ {c}");
                        }
                        // Parallel.
                        for k in i + 1..=na {
                            let lhs = pt_compose_lc(
                                &ab,
                                k + nb - 1,
                                &TreeComb::single(c.clone(), rat(1)),
                            )
                            .unwrap();
                            let ac = pt_compose(a, k, c).unwrap();
                            let mut rhs =
                                pt_compose_lc(&ac, i, &TreeComb::single(b.clone(), rat(1)))
                                    .unwrap();
                            if odd(b) && odd(c) {
                                rhs = rhs.scaled(&rat(-1));
                            }
                            assert_eq!(lhs, rhs, "{a} ∘{i},{k} ({b}, {c})");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn br_d_squared_vanishes() {
        for tr in enumerate_br_trees(5) {
            let d = br_differential(&tr).unwrap();
            for (s, _) in d.iter() {
                assert_eq!(s.degree(), tr.degree() + 1);
                assert!(s.internal_valence_ok(), "d({tr}) leaves {s}");
            }
            assert!(br_differential_lc(&d).unwrap().is_empty(), "d²({tr})");
        }
        for n in 1..=4 {
            assert!(br_differential_lc(&br_differential(&corolla(n)).unwrap())
                .unwrap()
                .is_empty());
            if n >= 2 {
                assert!(
                    br_differential_lc(&br_differential(&internal_corolla(n)).unwrap())
                        .unwrap()
                        .is_empty()
                );
            }
        }
    }

    #[test]
    fn gerstenhaber_homotopy() {
        let d = br_differential(&t("E(1;2)")).unwrap();
        let cup = t("I(1,2)");
        let c = d.coef(&cup);
        assert!(!c.is_zero());
        let comm: TreeComb = [(cup, rat(1)), (t("I(2,1)"), rat(-1))]
            .into_iter()
            .collect();
        assert_eq!(d, comm.scaled(&c));
    }

    #[test]
    fn differential_of_t2() {
        let d = br_differential(&corolla(2)).unwrap();
        assert!(!d.is_empty());
        for (s, _) in d.iter() {
            assert_eq!(s.internal_count(), 1);
            assert_eq!(s.arity(), 3);
            assert!(s.internal_valence_ok());
        }
    }

    #[test]
    fn leibniz_relations_hold() {
        for m in 1..=3 {
            for n in 1..=3 {
                let r = planar_leibniz_residual(m, n, false).unwrap();
                assert!(r.is_empty(), "T{m} ∘ T{n}: {}", format_tree_comb(&r));
                if n >= 2 {
                    let r = planar_leibniz_residual(m, n, true).unwrap();
                    assert!(r.is_empty(), "T{m} ∘ T{n}': {}", format_tree_comb(&r));
                }
            }
        }
    }

    #[test]
    fn a_infinity_suboperad_is_closed() {
        let leafy: Vec<_> = enumerate_br_trees(4)
            .into_iter()
            .filter(|t| t.externals_are_leaves() && t.arity() > 0)
            .collect();
        for a in &leafy {
            for (s, _) in br_differential(a).unwrap().iter() {
                assert!(s.externals_are_leaves());
            }
            for b in &leafy {
                for j in 1..=a.arity() {
                    for (s, _) in pt_compose(a, j, b).unwrap().iter() {
                        assert!(s.externals_are_leaves());
                    }
                }
            }
        }
    }

    #[test]
    fn brinf_d_squared_vanishes() {
        for kind in [TreeKind::Binf, TreeKind::Bbr] {
            let trees = enumerate_brinf_trees(5, kind);
            assert!(trees.len() >= 16);
            for tr in trees {
                let d = brinf_differential(&tr).unwrap();
                for (s, _) in d.iter() {
                    assert_eq!(s.degree(), tr.degree() + 1, "{tr} -> {s}");
                }
                let d2 = brinf_differential_lc(&d).unwrap();
                assert!(d2.is_empty(), "d²({tr}) = {}", format_tree_comb(&d2));
            }
        }
    }

    #[test]
    fn brinf_term_families() {
        let tr = t("E(1;B(E(2;3);4))");
        let d = brinf_differential(&tr).unwrap();
        let has = |s: &str| d.iter().any(|(x, _)| x.to_string() == s);
        // Recoloring.
        assert!(has("E(1;R(E(2;3);4))"));
        // Insertion of the decoration.
        assert!(has("E(1;E(2;3,4))") && has("E(1;E(2;E(3;4)))") && has("E(1;E(2;4,3))"));
        // Differential of the decoration.
        assert!(
            has("E(1;B(I(E(2;3));4))") || has("E(1;B(E(2;I(3));4))") || has("E(1;B(I(2,3);4))")
        );
        // Splitting of the blue vertex.
        assert!(d.iter().any(
            |(x, _)| x.internal_count() == 1 && matches!(&x.root.children[0].label, Label::Int)
        ));
        let bbr = brinf_differential(&tk("E(1;B(E(2;3);4))", TreeKind::Bbr)).unwrap();
        assert!(bbr.iter().all(|(x, _)| !x.to_string().contains('R')));
    }

    #[test]
    fn ks1_unit_laws() {
        let u = ks1_unit();
        for s in ["K(1,in)", "K(E(1;in),2)", "K(in,1,2)", "K(E(1;2,in))"] {
            let x = t(s);
            let single = TreeComb::single(x.clone(), rat(1));
            assert_eq!(ks1_compose(&x, &u).unwrap(), single, "{s} ∘ 1");
            assert_eq!(ks1_compose(&u, &x).unwrap(), single, "1 ∘ {s}");
        }
    }

    #[test]
    fn ks1_composition_example() {
        // Two children of out reconnect along the contour after in: five placements of the
        // unmarked child 3 over the corners of E(1;in) ∘ ..., by brute force count.
        let a = t("K(E(1;in),2)");
        let b = t("K(E(1;in),2)");
        let r = ks1_compose(&a, &b).unwrap();
        // Corners of a without in: E1 before in, E1 after in, out after E1, 2, out after 2.
        assert_eq!(r.len(), 5);
        assert!(r
            .iter()
            .any(|(x, _)| x.to_string() == "K(E(1;E(3;in),4),2)"));
        assert!(r.iter().all(|(x, _)| x.vertex_count() == 6));
    }

    #[test]
    fn ks1_normalization_rules() {
        let k = |s: &str| tk(s, TreeKind::Ks1);
        assert!(ks1_normalize(&k("K(I(𝟙,1,2),in)")).unwrap().is_empty());
        assert!(ks1_normalize(&k("K(E(1;𝟙),in)")).unwrap().is_empty());
        assert!(ks1_normalize(&k("K(in,𝟙)")).unwrap().is_empty());
        assert_eq!(
            ks1_normalize(&k("K(𝟙,in)")).unwrap(),
            TreeComb::single(k("K(𝟙,in)"), rat(1))
        );
        assert_eq!(
            ks1_normalize(&k("K(E(1;I(𝟙,E(2;in))))")).unwrap(),
            TreeComb::single(k("K(E(1;E(2;in)))"), rat(1))
        );
        // The unit on the right passes over the one edge of E(2;in).
        assert_eq!(
            ks1_normalize(&k("K(E(1;I(E(2;in),𝟙)))")).unwrap(),
            TreeComb::single(k("K(E(1;E(2;in)))"), rat(-1))
        );
        let plain = k("K(E(1;in),2)");
        assert_eq!(
            ks1_normalize(&plain).unwrap(),
            TreeComb::single(plain.clone(), rat(1))
        );
    }

    #[test]
    fn ks1_normalize_is_idempotent_and_compatible() {
        let trees: Vec<_> = enumerate_ks1_trees(4, true);
        assert!(trees.len() > 100);
        for x in &trees {
            let n1 = ks1_normalize(x).unwrap();
            assert_eq!(ks1_normalize_lc(&n1).unwrap(), n1, "{x}");
        }
        let small: Vec<_> = trees.iter().filter(|t| t.vertex_count() <= 4).collect();
        for a in &small {
            for b in &small {
                let direct = ks1_compose(a, b).unwrap();
                let na = ks1_normalize(a).unwrap();
                let nb = ks1_normalize(b).unwrap();
                let via = ks1_compose_lc(&na, &nb).unwrap();
                assert_eq!(direct, via, "{a} ∘ {b}");
            }
        }
    }

    #[test]
    fn ks1_composition_is_associative() {
        let trees: Vec<_> = enumerate_ks1_trees(3, false)
            .into_iter()
            .filter(|t| t.vertex_count() <= 4)
            .collect();
        for a in &trees {
            for b in &trees {
                for c in &trees {
                    let one = |x: &PlanarTree| TreeComb::single(x.clone(), rat(1));
                    let lhs = ks1_compose_lc(&ks1_compose(a, b).unwrap(), &one(c)).unwrap();
                    let rhs = ks1_compose_lc(&one(a), &ks1_compose(b, c).unwrap()).unwrap();
                    assert_eq!(lhs, rhs, "({a} ∘ {b}) ∘ {c}");
                }
            }
        }
    }

    /// Vertex names along the cyclic contour, starting at the marked child.
    fn contour(n: &Node, acc: &mut Vec<String>) {
        let name = match &n.label {
            Label::Ext(k) => k.to_string(),
            Label::In => "in".into(),
            Label::Unit => "u".into(),
            Label::Int => "i".into(),
            _ => String::new(),
        };
        if !name.is_empty() {
            acc.push(name);
        }
        for c in &n.children {
            contour(c, acc);
        }
    }

    #[test]
    fn ks1_planarity_by_brute_force() {
        let trees: Vec<_> = enumerate_ks1_trees(3, false)
            .into_iter()
            .filter(|t| t.kind == TreeKind::Pt1 && t.vertex_count() <= 4)
            .collect();
        for a in &trees {
            for b in &trees {
                let n1 = a.arity();
                let mut ca = Vec::new();
                contour(&a.root, &mut ca);
                let mut cb = Vec::new();
                contour(&b.relabel(|k| k + n1).root, &mut cb);
                let r = ks1_compose(a, b).unwrap();
                for (x, _) in r.iter() {
                    let mut cx = Vec::new();
                    contour(&x.root, &mut cx);
                    let from_a: Vec<_> = cx
                        .iter()
                        .filter(|s| ca.contains(s) && *s != "in")
                        .cloned()
                        .collect();
                    let expect_a: Vec<_> = ca.iter().filter(|s| *s != "in").cloned().collect();
                    assert_eq!(from_a, expect_a, "{a} ∘ {b} -> {x}");
                    // The vertices of b, read cyclically from its marked child, keep their order.
                    let from_b: Vec<_> = cx.iter().filter(|s| cb.contains(s)).cloned().collect();
                    let start = from_b.iter().position(|s| *s == cb[0]).unwrap();
                    let rotated: Vec<_> = from_b[start..]
                        .iter()
                        .chain(&from_b[..start])
                        .cloned()
                        .collect();
                    assert_eq!(rotated, cb, "{a} ∘ {b} -> {x}");
                }
                // Brute force: placements over all corners except in, counted directly.
                let corners = gap_count(a) - 1;
                let kids = b.root.children.len() - 1;
                assert_eq!(r.len(), weakly_increasing(corners, kids).len());
            }
        }
    }
}
