//! Operadic and moperadic compositions of graphs, symmetric and cyclic actions, and an axiom
//! harness for the colored-operad conventions.
//!
//! Every composition first produces raw graphs (all reconnections of the freed edge ends) with
//! the outer graph's edges listed before the inner graph's, then canonicalizes. Cancellations
//! such as double edges therefore come out of the sign rule alone.

use num_traits::One;

use crate::graph_core::{
    add_graph, canonical_unchecked, Edge, GraphComb, GraphError, Kind, SignedGraph, V,
};
use crate::scalar_linalg::{rat, Rational};

/// Placeholders for freed edge ends; labels 0 never occur in real graphs.
pub(crate) const HOLE_A: V = V::Ext(0);
const HOLE_B: V = V::B(0);

fn mismatch<T>(msg: impl Into<String>) -> Result<T, GraphError> {
    Err(GraphError::Mismatch(msg.into()))
}

/// Every way of replacing each occurrence of a hole by one of its candidates.
pub(crate) fn reconnect(edges: &[Edge], holes: &[(V, Vec<V>)]) -> Vec<Vec<Edge>> {
    let mut slots: Vec<(usize, bool, &Vec<V>)> = Vec::new();
    for (i, (a, b)) in edges.iter().enumerate() {
        for (h, cands) in holes {
            if a == h {
                slots.push((i, false, cands));
            }
            if b == h {
                slots.push((i, true, cands));
            }
        }
    }
    let mut out = Vec::new();
    let mut cur = edges.to_vec();
    fn rec(
        k: usize,
        slots: &[(usize, bool, &Vec<V>)],
        cur: &mut Vec<Edge>,
        out: &mut Vec<Vec<Edge>>,
    ) {
        if k == slots.len() {
            out.push(cur.clone());
            return;
        }
        let (i, head, cands) = slots[k];
        for &c in cands.iter() {
            if head {
                cur[i].1 = c;
            } else {
                cur[i].0 = c;
            }
            rec(k + 1, slots, cur, out);
        }
    }
    rec(0, &slots, &mut cur, &mut out);
    out
}

fn finish(template: &SignedGraph, raws: Vec<Vec<Edge>>) -> Vec<SignedGraph> {
    raws.into_iter()
        .map(|es| {
            let mut g = template.clone();
            g.edges = es;
            g.map_vertices(|v| v)
        })
        .collect()
}

fn collect(raws: &[SignedGraph]) -> GraphComb {
    let mut lc = GraphComb::new();
    let one = Rational::one();
    for g in raws {
        if g.edges.iter().all(|(a, b)| a != b) {
            add_graph(&mut lc, g, &one);
        }
    }
    lc
}

/// Raw terms of `g1 ∘_j g2` before canonicalization, in enumeration order.
///
/// Vertices of `g1` below `j` keep their labels, those of `g2` become `j..j+n2−1`, and later
/// vertices of `g1` shift up. Internal vertices of `g1` come before those of `g2`. Each edge end
/// at `j` is reconnected to every vertex of `g2`, internal ones included.
pub fn gra_compose_raw(
    g1: &SignedGraph,
    j: u32,
    g2: &SignedGraph,
) -> Result<Vec<SignedGraph>, GraphError> {
    let ok_kinds = matches!(
        (g1.kind, g2.kind),
        (Kind::Gra, Kind::Gra)
            | (Kind::Dgra, Kind::Dgra)
            | (Kind::Sgra, Kind::Dgra)
            | (Kind::Gra1, Kind::Dgra)
            | (Kind::Sgra1, Kind::Dgra)
    );
    if !ok_kinds {
        return mismatch(format!(
            "cannot compose {} with {} at a numbered vertex",
            g1.kind.name(),
            g2.kind.name()
        ));
    }
    if j == 0 || j > g1.ext {
        return mismatch(format!("slot {j} out of range 1..={}", g1.ext));
    }
    let n2 = g2.ext;
    let int1 = g1.int;
    let map1 = |v: V| match v {
        V::Ext(k) if k == j => HOLE_A,
        V::Ext(k) if k > j => V::Ext(k + n2 - 1),
        o => o,
    };
    let map2 = |v: V| match v {
        V::Ext(k) => V::Ext(j + k - 1),
        V::Int(k) => V::Int(int1 + k),
        o => o,
    };
    let mut edges: Vec<Edge> = g1.edges.iter().map(|&(a, b)| (map1(a), map1(b))).collect();
    edges.extend(g2.edges.iter().map(|&(a, b)| (map2(a), map2(b))));
    let cands: Vec<V> = g2.vertices().into_iter().map(map2).collect();
    let mut template = g1.clone();
    template.ext = g1.ext + n2 - 1;
    template.int = g1.int + g2.int;
    Ok(finish(&template, reconnect(&edges, &[(HOLE_A, cands)])))
}

/// Operadic composition `g1 ∘_j g2` in Gra or dGra, and the right dGra action on the other kinds.
pub fn gra_compose(g1: &SignedGraph, j: u32, g2: &SignedGraph) -> Result<GraphComb, GraphError> {
    Ok(collect(&gra_compose_raw(g1, j, g2)?))
}

/// Bilinear extension of a composition to linear combinations.
pub fn compose_lc(
    a: &GraphComb,
    b: &GraphComb,
    mut f: impl FnMut(&SignedGraph, &SignedGraph) -> Result<GraphComb, GraphError>,
) -> Result<GraphComb, GraphError> {
    let mut out = GraphComb::new();
    for (x, cx) in a.iter() {
        for (y, cy) in b.iter() {
            out.add_scaled(&f(x, y)?, &(cx * cy));
        }
    }
    Ok(out)
}

/// Sum over both orientations of every edge, without signs.
pub fn directed_expansion(g: &SignedGraph) -> Result<GraphComb, GraphError> {
    if g.kind != Kind::Gra {
        return mismatch("directed_expansion expects an undirected graph");
    }
    let e = g.edges.len();
    let mut raws = Vec::with_capacity(1 << e);
    for mask in 0u64..(1u64 << e) {
        let mut d = g.clone();
        d.kind = Kind::Dgra;
        d.edges = g
            .edges
            .iter()
            .enumerate()
            .map(|(i, &(a, b))| if mask >> i & 1 == 1 { (b, a) } else { (a, b) })
            .collect();
        raws.push(d);
    }
    Ok(collect(&raws))
}

/// Linear extension of [`directed_expansion`].
pub fn directed_expansion_lc(lc: &GraphComb) -> Result<GraphComb, GraphError> {
    let mut out = GraphComb::new();
    for (g, c) in lc.iter() {
        out.add_scaled(&directed_expansion(g)?, c);
    }
    Ok(out)
}

/// Raw terms of the moperadic composition `g1 ∘ g2` in Gra1.
///
/// The vertex `in` of `g1` and `out` of `g2` are deleted. Edges that pointed into `in` of `g1`
/// are reattached to every vertex of `g2`; edges leaving `out` of `g2` are reattached to every
/// vertex of `g1`. Numbered vertices of `g2` follow those of `g1`.
pub fn gra1_compose_raw(
    g1: &SignedGraph,
    g2: &SignedGraph,
) -> Result<Vec<SignedGraph>, GraphError> {
    if g1.kind != Kind::Gra1 || g2.kind != Kind::Gra1 {
        return mismatch("gra1_compose expects two gra1 graphs");
    }
    let (m1, int1) = (g1.ext, g1.int);
    let map1 = |v: V| if v == V::In { HOLE_A } else { v };
    let map2 = |v: V| match v {
        V::Out => HOLE_B,
        V::Ext(k) => V::Ext(m1 + k),
        V::Int(k) => V::Int(int1 + k),
        o => o,
    };
    let mut edges: Vec<Edge> = g1.edges.iter().map(|&(a, b)| (map1(a), map1(b))).collect();
    edges.extend(g2.edges.iter().map(|&(a, b)| (map2(a), map2(b))));
    let into_g2: Vec<V> = g2
        .vertices()
        .into_iter()
        .filter(|v| *v != V::Out)
        .map(map2)
        .collect();
    let into_g1: Vec<V> = g1.vertices().into_iter().filter(|v| *v != V::In).collect();
    let mut template = g1.clone();
    template.ext = g1.ext + g2.ext;
    template.int = g1.int + g2.int;
    Ok(finish(
        &template,
        reconnect(&edges, &[(HOLE_A, into_g2), (HOLE_B, into_g1)]),
    ))
}

pub fn gra1_compose(g1: &SignedGraph, g2: &SignedGraph) -> Result<GraphComb, GraphError> {
    Ok(collect(&gra1_compose_raw(g1, g2)?))
}

/// Inserts `g2` (SGRA) into the type-II vertex `b_j` of `g1` (SGRA or SGRA1).
///
/// Edges that ended at `b_j` are reattached to every vertex of `g2`; the type-II vertices of
/// `g2` take the place of `b_j` in the linear order and type-I vertices of `g2` follow those
/// of `g1`.
pub fn sgra_insert(g1: &SignedGraph, j: u32, g2: &SignedGraph) -> Result<GraphComb, GraphError> {
    Ok(collect(&sgra_insert_raw(g1, j, g2)?))
}

pub fn sgra_insert_raw(
    g1: &SignedGraph,
    j: u32,
    g2: &SignedGraph,
) -> Result<Vec<SignedGraph>, GraphError> {
    if !matches!(g1.kind, Kind::Sgra | Kind::Sgra1) || g2.kind != Kind::Sgra {
        return mismatch(
            "type-II insertion expects an sgra graph inserted into an sgra or sgra1 graph",
        );
    }
    if j == 0 || j > g1.typeii {
        return mismatch(format!("type-II slot b{j} out of range"));
    }
    let (m1, int1, n2) = (g1.ext, g1.int, g2.typeii);
    let map1 = |v: V| match v {
        V::B(k) if k == j => HOLE_A,
        V::B(k) if k > j => V::B(k + n2 - 1),
        o => o,
    };
    let map2 = |v: V| match v {
        V::Ext(k) => V::Ext(m1 + k),
        V::Int(k) => V::Int(int1 + k),
        V::B(k) => V::B(j + k - 1),
        o => o,
    };
    let mut edges: Vec<Edge> = g1.edges.iter().map(|&(a, b)| (map1(a), map1(b))).collect();
    edges.extend(g2.edges.iter().map(|&(a, b)| (map2(a), map2(b))));
    let cands: Vec<V> = g2.vertices().into_iter().map(map2).collect();
    let mut template = g1.clone();
    template.ext = g1.ext + g2.ext;
    template.int = g1.int + g2.int;
    template.typeii = g1.typeii + n2 - 1;
    Ok(finish(&template, reconnect(&edges, &[(HOLE_A, cands)])))
}

/// Relabels numbered vertex `k` as `sigma[k-1]` and canonicalizes; `None` if the graph vanishes.
pub fn sym_action(g: &SignedGraph, sigma: &[u32]) -> Result<Option<(SignedGraph, i8)>, GraphError> {
    if sigma.len() != g.ext as usize {
        return mismatch(format!(
            "permutation of size {} acting on {} vertices",
            sigma.len(),
            g.ext
        ));
    }
    let mut seen = vec![false; sigma.len()];
    for &s in sigma {
        if s == 0 || s as usize > sigma.len() || seen[s as usize - 1] {
            return mismatch("not a permutation");
        }
        seen[s as usize - 1] = true;
    }
    g.validate()?;
    Ok(canonical_unchecked(&g.map_vertices(|v| match v {
        V::Ext(k) => V::Ext(sigma[k as usize - 1]),
        o => o,
    })))
}

/// Cyclic rotation of the type-II vertices `in = b0, b1, …, bn` of an SGRA1 graph by `k` steps.
pub fn sgra1_cyclic(g: &SignedGraph, k: u32) -> Result<Option<(SignedGraph, i8)>, GraphError> {
    if g.kind != Kind::Sgra1 {
        return mismatch("cyclic action needs an sgra1 graph");
    }
    let n1 = g.type_ii_count();
    if k >= n1 {
        return mismatch(format!("rotation {k} out of range 0..{n1}"));
    }
    let idx = |v: V| match v {
        V::In => Some(0),
        V::B(i) => Some(i),
        _ => None,
    };
    let rotated = g.map_vertices(|v| match idx(v) {
        Some(i) => match (i + k) % n1 {
            0 => V::In,
            r => V::B(r),
        },
        None => v,
    });
    // Rotating may make `in` a tail only if some b had outgoing edges, which validation forbids.
    Ok(canonical_unchecked(&rotated))
}

/// Outcome of an exhaustive axiom check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AxiomReport {
    pub checks: usize,
    pub failure: Option<String>,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

type ComposeFn<'a> = dyn Fn(&SignedGraph, u32, &SignedGraph) -> Result<GraphComb, GraphError> + 'a;

fn relabel_comb(lc: &GraphComb, sigma: &[u32]) -> GraphComb {
    let mut out = GraphComb::new();
    for (g, c) in lc.iter() {
        let h = g.map_vertices(|v| match v {
            V::Ext(k) => V::Ext(sigma[k as usize - 1]),
            o => o,
        });
        add_graph(&mut out, &h, c);
    }
    out
}

fn all_perms(n: u32) -> Vec<Vec<u32>> {
    fn rec(cur: &mut Vec<u32>, used: &mut Vec<bool>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                cur.push(i as u32 + 1);
                rec(cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n as usize], &mut out);
    out
}

fn sign(s: bool) -> Rational {
    if s {
        rat(-1)
    } else {
        rat(1)
    }
}

/// Checks unit, nested and parallel associativity and equivariance of an operadic composition
/// on every combination drawn from `sample`.
pub fn operad_axiom_report_with(
    sample: &[SignedGraph],
    kind: Kind,
    compose: &ComposeFn,
) -> AxiomReport {
    let mut checks = 0;
    let fail = |checks, msg: String| AxiomReport {
        checks,
        failure: Some(msg),
    };
    let unit = SignedGraph::new(kind, 1, Vec::new());
    let comp_lc = |a: &GraphComb, j: u32, b: &GraphComb| compose_lc(a, b, |x, y| compose(x, j, y));
    for g in sample {
        let gl = crate::graph_core::graph_comb(g);
        checks += 1;
        match compose(&unit, 1, g) {
            Ok(r) if r == gl => {}
            r => return fail(checks, format!("left unit fails on {g}: got {r:?}")),
        }
        for j in 1..=g.ext {
            checks += 1;
            match compose(g, j, &unit) {
                Ok(r) if r == gl => {}
                r => {
                    return fail(
                        checks,
                        format!("right unit fails on {g} at slot {j}: got {r:?}"),
                    )
                }
            }
        }
    }
    for g1 in sample {
        for g2 in sample {
            for g3 in sample {
                let (l1, l2, l3) = (
                    crate::graph_core::graph_comb(g1),
                    crate::graph_core::graph_comb(g2),
                    crate::graph_core::graph_comb(g3),
                );
                for i in 1..=g1.ext {
                    let a = match compose(g1, i, g2) {
                        Ok(a) => a,
                        Err(e) => return fail(checks, e.to_string()),
                    };
                    // Nested: (g1 ∘_i g2) ∘_{i+j-1} g3 = g1 ∘_i (g2 ∘_j g3).
                    for j in 1..=g2.ext {
                        checks += 1;
                        let lhs = comp_lc(&a, i + j - 1, &l3);
                        let inner = comp_lc(&l2, j, &l3);
                        let rhs = inner.and_then(|b| comp_lc(&l1, i, &b));
                        if lhs != rhs {
                            return fail(
                                checks,
                                format!(
                                    "nested associativity fails: ({g1} o{i} {g2}) o{} {g3}",
                                    i + j - 1
                                ),
                            );
                        }
                    }
                    // Parallel: (g1 ∘_i g2) ∘_{k+n2-1} g3 = (−1)^{e2 e3} (g1 ∘_k g3) ∘_i g2 for i < k.
                    for k in (i + 1)..=g1.ext {
                        checks += 1;
                        let lhs = comp_lc(&a, k + g2.ext - 1, &l3);
                        let rhs = compose(g1, k, g3)
                            .and_then(|b| comp_lc(&b, i, &l2))
                            .map(|b| b.scaled(&sign(g2.edges.len() * g3.edges.len() % 2 == 1)));
                        if lhs != rhs {
                            return fail(checks, format!("parallel associativity fails: {g1} slots {i},{k} with {g2}, {g3}"));
                        }
                    }
                }
            }
        }
    }
    // Equivariance in both arguments.
    for g1 in sample {
        for g2 in sample {
            let l2 = crate::graph_core::graph_comb(g2);
            for j in 1..=g1.ext {
                let base = match compose(g1, j, g2) {
                    Ok(b) => b,
                    Err(e) => return fail(checks, e.to_string()),
                };
                let (n1, n2) = (g1.ext, g2.ext);
                for sigma in all_perms(n1) {
                    checks += 1;
                    let moved = relabel_comb(&crate::graph_core::graph_comb(g1), &sigma);
                    let sj = sigma[j as usize - 1];
                    let lhs = comp_lc(&moved, sj, &l2);
                    let block: Vec<u32> = (1..n1 + n2)
                        .map(|x| {
                            let lab = |s: u32| if s < sj { s } else { s + n2 - 1 };
                            if x < j {
                                lab(sigma[x as usize - 1])
                            } else if x >= j + n2 {
                                lab(sigma[(x - n2 + 1) as usize - 1])
                            } else {
                                sj + x - j
                            }
                        })
                        .collect();
                    if lhs != Ok(relabel_comb(&base, &block)) {
                        return fail(
                            checks,
                            format!("equivariance fails for {g1} o{j} {g2} under {sigma:?}"),
                        );
                    }
                }
                for tau in all_perms(n2) {
                    checks += 1;
                    let moved = relabel_comb(&l2, &tau);
                    let lhs = comp_lc(&crate::graph_core::graph_comb(g1), j, &moved);
                    let block: Vec<u32> = (1..n1 + n2)
                        .map(|x| {
                            if x < j || x >= j + n2 {
                                x
                            } else {
                                j + tau[(x - j) as usize] - 1
                            }
                        })
                        .collect();
                    if lhs != Ok(relabel_comb(&base, &block)) {
                        return fail(
                            checks,
                            format!("equivariance fails for {g1} o{j} {g2} under inner {tau:?}"),
                        );
                    }
                }
            }
        }
    }
    AxiomReport {
        checks,
        failure: None,
    }
}

/// Axiom report for the standard composition of `kind` (GRA, DGRA or GRA1).
pub fn operad_axiom_report(sample: &[SignedGraph], kind: Kind) -> AxiomReport {
    match kind {
        Kind::Gra1 => moperad_axiom_report(sample),
        _ => operad_axiom_report_with(sample, kind, &|a, j, b| gra_compose(a, j, b)),
    }
}

/// Unit and associativity of the Gra1 moperad, and compatibility with the right dGra action.
pub fn moperad_axiom_report(sample: &[SignedGraph]) -> AxiomReport {
    let mut checks = 0;
    let fail = |checks, msg: String| AxiomReport {
        checks,
        failure: Some(msg),
    };
    let unit = SignedGraph::new(Kind::Gra1, 0, Vec::new());
    let c = |a: &GraphComb, b: &GraphComb| compose_lc(a, b, gra1_compose);
    let dunit = SignedGraph::new(Kind::Dgra, 1, Vec::new());
    let actions = [
        dunit.clone(),
        SignedGraph::new(Kind::Dgra, 2, vec![(V::Ext(1), V::Ext(2))]),
        SignedGraph::new(Kind::Dgra, 2, Vec::new()),
    ];
    for g in sample {
        let gl = crate::graph_core::graph_comb(g);
        checks += 2;
        if gra1_compose(&unit, g).ok() != Some(gl.clone())
            || gra1_compose(g, &unit).ok() != Some(gl.clone())
        {
            return fail(checks, format!("moperad unit fails on {g}"));
        }
        for j in 1..=g.ext {
            checks += 1;
            if gra_compose(g, j, &dunit).ok() != Some(gl.clone()) {
                return fail(checks, format!("right dgra unit fails on {g} at {j}"));
            }
        }
    }
    for g1 in sample {
        for g2 in sample {
            let (l1, l2) = (
                crate::graph_core::graph_comb(g1),
                crate::graph_core::graph_comb(g2),
            );
            let a = match gra1_compose(g1, g2) {
                Ok(a) => a,
                Err(e) => return fail(checks, e.to_string()),
            };
            for g3 in sample {
                checks += 1;
                let l3 = crate::graph_core::graph_comb(g3);
                let lhs = c(&a, &l3);
                let rhs = c(&l2, &l3).and_then(|b| c(&l1, &b));
                if lhs != rhs {
                    return fail(
                        checks,
                        format!("moperad associativity fails on {g1}, {g2}, {g3}"),
                    );
                }
            }
            // (g1 ∘ g2) ∘_j h: slots of g1 act before the composition, slots of g2 after.
            for h in &actions {
                let hl = crate::graph_core::graph_comb(h);
                for j in 1..=(g1.ext + g2.ext) {
                    checks += 1;
                    let lhs = compose_lc(&a, &hl, |x, y| gra_compose(x, j, y));
                    let rhs = if j <= g1.ext {
                        compose_lc(&l1, &hl, |x, y| gra_compose(x, j, y))
                            .and_then(|b| c(&b, &l2))
                            .map(|b| b.scaled(&sign(g2.edges.len() * h.edges.len() % 2 == 1)))
                    } else {
                        compose_lc(&l2, &hl, |x, y| gra_compose(x, j - g1.ext, y))
                            .and_then(|b| c(&l1, &b))
                    };
                    if lhs != rhs {
                        return fail(
                            checks,
                            format!("right action incompatible: ({g1} o {g2}) o{j} {h}"),
                        );
                    }
                }
            }
        }
    }
    AxiomReport {
        checks,
        failure: None,
    }
}

/// All graphs of a kind with `n` numbered vertices and at most `max_edges` edges (no internal
/// vertices), one canonical representative each.
pub fn small_graphs(kind: Kind, n: u32, max_edges: usize) -> Vec<SignedGraph> {
    graphs_on(&SignedGraph::new(kind, n, Vec::new()), max_edges)
}

/// All nonvanishing canonical graphs on the vertex set of `base` with at most `max_edges` edges.
pub fn graphs_on(base: &SignedGraph, max_edges: usize) -> Vec<SignedGraph> {
    let kind = base.kind;
    let vs = base.vertices();
    let mut pairs = Vec::new();
    for &a in &vs {
        for &b in &vs {
            let mut g = base.clone();
            g.edges = vec![(a, b)];
            if (kind.directed() || a < b) && g.validate().is_ok() {
                pairs.push((a, b));
            }
        }
    }
    let mut out = std::collections::BTreeSet::new();
    fn rec(
        pairs: &[(V, V)],
        start: usize,
        left: usize,
        cur: &mut Vec<Edge>,
        base: &SignedGraph,
        out: &mut std::collections::BTreeSet<SignedGraph>,
    ) {
        let mut g = base.clone();
        g.edges = cur.clone();
        if let Some((c, _)) = canonical_unchecked(&g) {
            out.insert(c);
        }
        if left == 0 {
            return;
        }
        for i in start..pairs.len() {
            cur.push(pairs[i]);
            rec(pairs, i + 1, left - 1, cur, base, out);
            cur.pop();
        }
    }
    rec(&pairs, 0, max_edges, &mut Vec::new(), base, &mut out);
    out.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph_core::graph_comb;

    fn g(s: &str) -> SignedGraph {
        s.parse().unwrap()
    }

    #[test]
    fn gra_path_composition_has_four_terms() {
        let r = gra_compose(
            &g("gra{n=3; e=[(1,2),(2,3)]}"),
            2,
            &g("gra{n=2; e=[(1,2)]}"),
        )
        .unwrap();
        let mut expected = GraphComb::new();
        for s in [
            "gra{n=4; e=[(1,2),(2,4),(2,3)]}",
            "gra{n=4; e=[(1,2),(3,4),(2,3)]}",
            "gra{n=4; e=[(1,3),(2,4),(2,3)]}",
            "gra{n=4; e=[(1,3),(3,4),(2,3)]}",
        ] {
            add_graph(&mut expected, &g(s), &rat(1));
        }
        assert_eq!(r.len(), 4);
        assert_eq!(r, expected);
    }

    #[test]
    fn raw_term_count_is_power_of_vertex_count() {
        let g1 = g("gra{n=3; e=[(1,2),(2,3),(1,3)]}");
        let g2 = g("gra{n=3,i=1; e=[(1,i1)]}");
        for j in 1..=3 {
            let val = g1.valence(V::Ext(j)) as u32;
            assert_eq!(gra_compose_raw(&g1, j, &g2).unwrap().len(), 4usize.pow(val));
        }
    }

    #[test]
    fn composition_unit() {
        let x = g("gra{n=3; e=[(1,2),(2,3)]}");
        let u = g("gra{n=1; e=[]}");
        for j in 1..=3 {
            assert_eq!(gra_compose(&x, j, &u).unwrap(), graph_comb(&x));
        }
        assert_eq!(gra_compose(&u, 1, &x).unwrap(), graph_comb(&x));
        assert!(gra_compose(&x, 4, &u).is_err());
        assert!(gra_compose(&x, 1, &g("dgra{n=1; e=[]}")).is_err());
    }

    #[test]
    fn directed_expansion_examples() {
        let e = directed_expansion(&g("gra{n=2; e=[(1,2)]}")).unwrap();
        let mut expected = GraphComb::new();
        add_graph(&mut expected, &g("dgra{n=2; e=[(1>2)]}"), &rat(1));
        add_graph(&mut expected, &g("dgra{n=2; e=[(2>1)]}"), &rat(1));
        assert_eq!(e, expected);
        assert_eq!(
            directed_expansion(&g("gra{n=2; e=[]}")).unwrap(),
            graph_comb(&g("dgra{n=2; e=[]}"))
        );
        assert_eq!(
            directed_expansion(&g("gra{n=3; e=[(1,2),(2,3)]}"))
                .unwrap()
                .len(),
            4
        );
    }

    #[test]
    fn gra1_reference_composition_and_unit() {
        let raw =
            gra1_compose_raw(&g("gra1{m=1; e=[(1>in)]}"), &g("gra1{m=1; e=[(out>1)]}")).unwrap();
        assert_eq!(raw.len(), 4);
        let r = gra1_compose(&g("gra1{m=1; e=[(1>in)]}"), &g("gra1{m=1; e=[(out>1)]}")).unwrap();
        assert_eq!(r.len(), 3);
        assert!(r.keys().all(|k| k.edges.len() == 2));
        let unit = g("gra1{m=0; e=[]}");
        let x = g("gra1{m=2; e=[(out>1),(1>in),(2>1)]}");
        assert_eq!(gra1_compose(&x, &unit).unwrap(), graph_comb(&x));
        assert_eq!(gra1_compose(&unit, &x).unwrap(), graph_comb(&x));
        let b = g("gra1{m=0; e=[(out>in)]}");
        assert!(gra1_compose(&b, &b).unwrap().is_empty());
    }

    #[test]
    fn symmetric_action_examples() {
        let one = g("gra{n=2; e=[(1,2)]}");
        assert_eq!(sym_action(&one, &[1, 2]).unwrap(), Some((one.clone(), 1)));
        assert_eq!(sym_action(&one, &[2, 1]).unwrap(), Some((one.clone(), 1)));
        let two = g("gra{n=3; e=[(1,2),(1,3)]}");
        assert_eq!(
            sym_action(&two, &[1, 3, 2]).unwrap(),
            Some((two.clone(), -1))
        );
        assert!(sym_action(&two, &[1, 2]).is_err());
        assert!(sym_action(&two, &[1, 1, 2]).is_err());
    }

    #[test]
    fn cyclic_rotations_compose() {
        let x = g("sgra1{m=1,n=2; e=[(out>in),(1>b1),(out>b2),(1>b2)]}");
        assert_eq!(sgra1_cyclic(&x, 0).unwrap(), canonical_unchecked(&x));
        assert!(sgra1_cyclic(&x, 3).is_err());
        let (r1, s1) = sgra1_cyclic(&x, 1).unwrap().unwrap();
        let (r11, s11) = sgra1_cyclic(&r1, 1).unwrap().unwrap();
        let (r2, s2) = sgra1_cyclic(&x, 2).unwrap().unwrap();
        assert_eq!((r11, s1 * s11), (r2.clone(), s2));
        let (r3, s3) = sgra1_cyclic(&r2, 1).unwrap().unwrap();
        assert_eq!(Some((r3, s2 * s3)), canonical_unchecked(&x));
    }

    #[test]
    fn type_ii_insertion_preserves_order() {
        let outer = g("sgra{m=1,n=2; e=[(1>b1),(1>b2)]}");
        let wedge = g("sgra{m=0,n=2; e=[]}");
        let r = sgra_insert(&outer, 1, &wedge).unwrap();
        let mut expected = GraphComb::new();
        add_graph(
            &mut expected,
            &g("sgra{m=1,n=3; e=[(1>b1),(1>b3)]}"),
            &rat(1),
        );
        add_graph(
            &mut expected,
            &g("sgra{m=1,n=3; e=[(1>b2),(1>b3)]}"),
            &rat(1),
        );
        assert_eq!(r, expected);
    }

    #[test]
    fn gra_axioms_hold() {
        let mut sample = Vec::new();
        for n in 1..=3 {
            sample.extend(small_graphs(Kind::Gra, n, 1));
        }
        sample.push(g("gra{n=3; e=[(1,2),(2,3)]}"));
        let r = operad_axiom_report(&sample, Kind::Gra);
        assert!(r.passed(), "{:?}", r.failure);
        assert!(r.checks > 1000);
    }

    #[test]
    fn dgra_axioms_hold() {
        let mut sample = small_graphs(Kind::Dgra, 1, 0);
        sample.extend(small_graphs(Kind::Dgra, 2, 1));
        sample.push(g("dgra{n=3; e=[(1>2),(3>2)]}"));
        let r = operad_axiom_report(&sample, Kind::Dgra);
        assert!(r.passed(), "{:?}", r.failure);
    }

    #[test]
    fn gra1_axioms_hold() {
        let mut sample = small_graphs(Kind::Gra1, 0, 1);
        sample.extend(small_graphs(Kind::Gra1, 1, 1));
        sample.push(g("gra1{m=1; e=[(out>1),(1>in)]}"));
        let r = operad_axiom_report(&sample, Kind::Gra1);
        assert!(r.passed(), "{:?}", r.failure);
    }

    #[test]
    fn corrupted_composition_is_caught() {
        let sample = small_graphs(Kind::Gra, 2, 1);
        let bad = |a: &SignedGraph, j: u32, b: &SignedGraph| {
            gra_compose(a, j, b).map(|r| {
                if j.is_multiple_of(2) {
                    r.scaled(&rat(-1))
                } else {
                    r
                }
            })
        };
        let r = operad_axiom_report_with(&sample, Kind::Gra, &bad);
        assert!(!r.passed());
        assert!(r.failure.unwrap().contains("unit"));
    }

    #[test]
    fn directed_expansion_is_an_operad_map() {
        let mut sample = small_graphs(Kind::Gra, 2, 1);
        sample.push(g("gra{n=3; e=[(1,2),(2,3)]}"));
        sample.push(g("gra{n=3; e=[(1,2),(1,3),(2,3)]}"));
        for a in &sample {
            for b in &sample {
                for j in 1..=a.ext {
                    let lhs = directed_expansion_lc(&gra_compose(a, j, b).unwrap()).unwrap();
                    let rhs = compose_lc(
                        &directed_expansion(a).unwrap(),
                        &directed_expansion(b).unwrap(),
                        |x, y| gra_compose(x, j, y),
                    )
                    .unwrap();
                    assert_eq!(lhs, rhs, "{a} o{j} {b}");
                }
            }
        }
    }
}
