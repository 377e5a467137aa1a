//! Twisted graph complexes: internal vertices, twisted differentials, membership predicates,
//! weight systems and the Maurer-Cartan equation.
//!
//! Splitting and attaching terms are generated with the new edge listed first. In that form the
//! twisted differential of Graphs reads
//! `δΓ = Σ_v attach(v) − Σ_{v external} split(v) − ½ Σ_{v internal} split(v)`,
//! which equals `μ∘Γ − (−1)^{|Γ|} Σ_v Γ∘_v μ` in the natural composition order.

use std::collections::BTreeMap;

use num_traits::One;
use serde_json::{json, Value};

use crate::graph_core::{
    add_graph, component_labels, Edge, GraphComb, GraphError, Kind, SignedGraph, V,
};
use crate::graph_operads::{gra1_compose_raw, reconnect, sgra_insert_raw, HOLE_A};
use crate::scalar_linalg::{format_rational, frac, parse_rational, rat, Rational};

/// Subcomplex families cut out by membership predicates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    Graphs,
    Graphs1,
    SGraphs,
    SGraphs1,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Graphs => "graphs",
            Family::Graphs1 => "graphs1",
            Family::SGraphs => "sgraphs",
            Family::SGraphs1 => "sgraphs1",
        }
    }

    pub fn from_name(s: &str) -> Option<Family> {
        Some(match s {
            "graphs" => Family::Graphs,
            "graphs1" => Family::Graphs1,
            "sgraphs" => Family::SGraphs,
            "sgraphs1" => Family::SGraphs1,
            _ => return None,
        })
    }
}

fn mismatch<T>(msg: impl Into<String>) -> Result<T, GraphError> {
    Err(GraphError::Mismatch(msg.into()))
}

fn internal_vertices(g: &SignedGraph) -> impl Iterator<Item = V> {
    (1..=g.int).map(V::Int)
}

/// Raw splittings of `v`: a new internal vertex `w` joined to `v` by a new first edge (both
/// orientations for directed kinds), each edge end at `v` moved to `v` or `w`.
fn split_raw(g: &SignedGraph, v: V) -> Vec<SignedGraph> {
    let w = V::Int(g.int + 1);
    let holed: Vec<Edge> = g
        .edges
        .iter()
        .map(|&(a, b)| {
            (
                if a == v { HOLE_A } else { a },
                if b == v { HOLE_A } else { b },
            )
        })
        .collect();
    let mut new_edges = vec![(v, w)];
    if g.kind.directed() {
        new_edges.push((w, v));
    }
    let mut out = Vec::new();
    for es in reconnect(&holed, &[(HOLE_A, vec![v, w])]) {
        for &ne in &new_edges {
            let mut h = g.clone();
            h.int += 1;
            h.edges = std::iter::once(ne).chain(es.iter().copied()).collect();
            out.push(h.map_vertices(|x| x));
        }
    }
    out
}

/// Raw attachings of a new univalent internal vertex to `v`, new edge first.
fn attach_raw(g: &SignedGraph, v: V) -> Vec<SignedGraph> {
    let w = V::Int(g.int + 1);
    let mut new_edges = vec![(w, v)];
    if g.kind.directed() {
        new_edges.push((v, w));
    }
    new_edges
        .into_iter()
        .map(|ne| {
            let mut h = g.clone();
            h.int += 1;
            h.edges = std::iter::once(ne).chain(g.edges.iter().copied()).collect();
            h.map_vertices(|x| x)
        })
        .collect()
}

fn add_raws(lc: &mut GraphComb, raws: &[SignedGraph], coef: &Rational) {
    for h in raws {
        if h.edges.iter().all(|(a, b)| a != b) {
            add_graph(lc, h, coef);
        }
    }
}

/// `−Σ_{numbered} split − ½ Σ_{internal} split` on the type-I vertices.
fn splitting_terms(g: &SignedGraph, lc: &mut GraphComb) {
    let (m1, mhalf) = (rat(-1), frac(-1, 2));
    for k in 1..=g.ext {
        add_raws(lc, &split_raw(g, V::Ext(k)), &m1);
    }
    for v in internal_vertices(g) {
        add_raws(lc, &split_raw(g, v), &mhalf);
    }
}

/// Twisted differential of (f)Graphs on an undirected or directed graph with internal vertices.
pub fn graphs_differential(g: &SignedGraph) -> Result<GraphComb, GraphError> {
    if !matches!(g.kind, Kind::Gra | Kind::Dgra) {
        return mismatch(format!(
            "graphs_differential expects gra or dgra, got {}",
            g.kind.name()
        ));
    }
    g.validate()?;
    let mut lc = GraphComb::new();
    let one = Rational::one();
    for v in g.vertices() {
        add_raws(&mut lc, &attach_raw(g, v), &one);
    }
    splitting_terms(g, &mut lc);
    Ok(lc)
}

/// The Maurer-Cartan element twisting Gra1: `(w→in) − (out→w)`.
///
/// The overall sign is fixed relative to the Graphs twist so that the univalent vertices it
/// attaches cancel against splittings.
pub fn graphs1_mc() -> GraphComb {
    let w = V::Int(1);
    let mut lc = GraphComb::new();
    let base = SignedGraph::new(Kind::Gra1, 0, Vec::new()).with_internal(1);
    let mut a = base.clone();
    a.edges = vec![(V::Out, w)];
    let mut b = base;
    b.edges = vec![(w, V::In)];
    add_graph(&mut lc, &a, &rat(-1));
    add_graph(&mut lc, &b, &rat(1));
    lc
}

/// Twisted differential of Graphs1: `ν∘Γ − (−1)^{|Γ|} Γ∘ν` with the MC element `ν`, plus the
/// splitting of numbered and internal vertices by the right Graphs action.
pub fn graphs1_differential(g: &SignedGraph) -> Result<GraphComb, GraphError> {
    if g.kind != Kind::Gra1 {
        return mismatch(format!(
            "graphs1_differential expects gra1, got {}",
            g.kind.name()
        ));
    }
    g.validate()?;
    let mut lc = GraphComb::new();
    let right = if g.degree() % 2 == 0 { rat(-1) } else { rat(1) };
    for (nu, c) in graphs1_mc().iter() {
        add_raws(&mut lc, &gra1_compose_raw(nu, g)?, c);
        add_raws(&mut lc, &gra1_compose_raw(g, nu)?, &(c * &right));
    }
    splitting_terms(g, &mut lc);
    Ok(lc)
}

/// Linear extension of a differential.
pub fn apply_lc(
    lc: &GraphComb,
    mut d: impl FnMut(&SignedGraph) -> Result<GraphComb, GraphError>,
) -> Result<GraphComb, GraphError> {
    let mut out = GraphComb::new();
    for (g, c) in lc.iter() {
        out.add_scaled(&d(g)?, c);
    }
    Ok(out)
}

/// A truncated Maurer-Cartan element of SGraphs(0): SGRA graphs without numbered vertices,
/// graded by the number of internal type-I vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightSystem {
    weights: BTreeMap<u32, GraphComb>,
    pub truncation_order: u32,
}

/// Largest supported truncation order.
pub const MAX_TRUNCATION: u32 = 3;

impl WeightSystem {
    pub fn new(truncation_order: u32) -> Result<Self, GraphError> {
        if truncation_order > MAX_TRUNCATION {
            return Err(GraphError::Invalid(format!(
                "truncation order {truncation_order} exceeds {MAX_TRUNCATION}"
            )));
        }
        Ok(WeightSystem {
            weights: BTreeMap::new(),
            truncation_order,
        })
    }

    /// Adds `coef·g`; the order of `g` is its number of internal vertices.
    pub fn insert(&mut self, g: &SignedGraph, coef: &Rational) -> Result<(), GraphError> {
        if g.kind != Kind::Sgra || g.ext != 0 {
            return Err(GraphError::Invalid(
                "weights live on sgra graphs without numbered vertices".into(),
            ));
        }
        g.validate()?;
        if g.int > self.truncation_order {
            return Err(GraphError::Invalid(format!(
                "graph of order {} beyond truncation order {}",
                g.int, self.truncation_order
            )));
        }
        add_graph(self.weights.entry(g.int).or_default(), g, coef);
        Ok(())
    }

    /// The component of order `k` (internal vertex count).
    pub fn order(&self, k: u32) -> GraphComb {
        self.weights.get(&k).cloned().unwrap_or_default()
    }

    /// The graph with two type-II vertices and no edges.
    pub fn wedge() -> SignedGraph {
        SignedGraph::new(Kind::Sgra, 0, Vec::new()).with_type_ii(2)
    }

    /// The graph with one internal vertex and one edge into a single type-II vertex.
    pub fn attach_graph() -> SignedGraph {
        SignedGraph::new(Kind::Sgra, 0, vec![(V::Int(1), V::B(1))])
            .with_internal(1)
            .with_type_ii(1)
    }

    /// Wedge at order 0 plus the univalent attaching graph at order 1; a Maurer-Cartan element
    /// through order 1.
    pub fn default_mc() -> Self {
        let mut w = WeightSystem::new(1).expect("order 1 is allowed");
        w.insert(&Self::wedge(), &rat(1)).expect("valid");
        w.insert(&Self::attach_graph(), &rat(1)).expect("valid");
        w
    }

    /// The graph with `k` internal vertices, each with edges to `b1` then `b2`.
    pub fn moyal_graph(k: u32) -> SignedGraph {
        let edges = (1..=k)
            .flat_map(|i| [(V::Int(i), V::B(1)), (V::Int(i), V::B(2))])
            .collect();
        SignedGraph::new(Kind::Sgra, 0, edges)
            .with_internal(k)
            .with_type_ii(2)
    }

    /// Moyal weights `1/(2^k k!)` on the wedge-power graphs through `order`.
    pub fn moyal(order: u32) -> Result<Self, GraphError> {
        let mut w = WeightSystem::new(order)?;
        let mut denom: i64 = 1;
        for k in 0..=order {
            if k > 0 {
                denom *= 2 * k as i64;
            }
            w.insert(&Self::moyal_graph(k), &frac(1, denom))?;
        }
        Ok(w)
    }

    pub fn to_json(&self) -> Value {
        let weights: Vec<Value> = self
            .weights
            .values()
            .flat_map(|lc| {
                lc.iter()
                    .map(|(g, c)| json!({"graph": g.to_string(), "coef": format_rational(c)}))
            })
            .collect();
        json!({"order": self.truncation_order, "weights": weights})
    }

    pub fn from_json(v: &Value) -> Result<Self, GraphError> {
        let bad = |m: &str| GraphError::Invalid(format!("weight system JSON: {m}"));
        let order = v
            .get("order")
            .and_then(Value::as_u64)
            .ok_or_else(|| bad("missing integer \"order\""))?;
        let mut w = WeightSystem::new(u32::try_from(order).map_err(|_| bad("order too large"))?)?;
        let entries = v
            .get("weights")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("missing \"weights\" array"))?;
        for e in entries {
            let g: SignedGraph = e
                .get("graph")
                .and_then(Value::as_str)
                .ok_or_else(|| bad("entry without \"graph\""))?
                .parse()?;
            let c = e
                .get("coef")
                .and_then(Value::as_str)
                .ok_or_else(|| bad("entry without \"coef\""))?;
            let c = parse_rational(c).map_err(|e| bad(&e.to_string()))?;
            w.insert(&g, &c)?;
        }
        Ok(w)
    }
}

fn parity(x: i64) -> bool {
    x.rem_euclid(2) == 1
}

fn signed(odd: bool) -> Rational {
    if odd {
        rat(-1)
    } else {
        rat(1)
    }
}

/// Cochain degree of an SGRA graph: `(#type-II − 1) + 2·#internal − #edges`.
pub fn sgra_degree(g: &SignedGraph) -> i64 {
    g.typeii as i64 - 1 + g.degree()
}

/// Pre-Lie product `f•g = Σ_i (−1)^{(i−1)(n_g−1) + (n_f−1)e_g} f ∘_{b_i} g` on SGRA graphs,
/// where `n` counts type-II vertices and `e` edges.
pub fn pre_lie(f: &SignedGraph, g: &SignedGraph) -> Result<GraphComb, GraphError> {
    let mut lc = GraphComb::new();
    let (nf, ng, eg) = (f.typeii as i64, g.typeii as i64, g.edges.len() as i64);
    for i in 1..=f.typeii {
        let s = parity((i as i64 - 1) * (ng - 1) + (nf - 1) * eg);
        add_raws(&mut lc, &sgra_insert_raw(f, i, g)?, &signed(s));
    }
    Ok(lc)
}

/// Gerstenhaber bracket `[f, g] = f•g − (−1)^{|f||g|} g•f` with the degree of [`sgra_degree`].
pub fn gerstenhaber_bracket(f: &SignedGraph, g: &SignedGraph) -> Result<GraphComb, GraphError> {
    let mut lc = pre_lie(f, g)?;
    let s = parity(sgra_degree(f) * sgra_degree(g));
    lc.add_scaled(&pre_lie(g, f)?, &signed(!s));
    Ok(lc)
}

/// Terms of the SGraphs differential grouped by the number of internal vertices they add:
/// entry `k` holds `[m_k, Γ]` plus, for `k = 1`, the type-I splitting terms.
pub fn sgraphs_differential_by_order(
    g: &SignedGraph,
    w: &WeightSystem,
) -> Result<Vec<GraphComb>, GraphError> {
    if g.kind != Kind::Sgra {
        return mismatch(format!(
            "sgraphs_differential expects sgra, got {}",
            g.kind.name()
        ));
    }
    g.validate()?;
    let mut out = vec![GraphComb::new(); w.truncation_order as usize + 1];
    for (k, slot) in out.iter_mut().enumerate() {
        for (m, c) in w.order(k as u32).iter() {
            slot.add_scaled(&gerstenhaber_bracket(m, g)?, c);
        }
    }
    if w.truncation_order >= 1 {
        splitting_terms(g, &mut out[1]);
    }
    Ok(out)
}

/// The SGraphs differential truncated at the weight system's order.
pub fn sgraphs_differential(g: &SignedGraph, w: &WeightSystem) -> Result<GraphComb, GraphError> {
    let mut lc = GraphComb::new();
    for part in sgraphs_differential_by_order(g, w)? {
        lc.add_scaled(&part, &rat(1));
    }
    Ok(lc)
}

/// `d∘d` on `g`, keeping only terms that add at most `truncation_order` internal vertices.
pub fn sgraphs_d_squared(g: &SignedGraph, w: &WeightSystem) -> Result<GraphComb, GraphError> {
    let top = w.truncation_order as usize;
    let first = sgraphs_differential_by_order(g, w)?;
    let mut out = GraphComb::new();
    for (k1, part) in first.iter().enumerate() {
        for (h, c) in part.iter() {
            let second = sgraphs_differential_by_order(h, w)?;
            for (k2, p2) in second.iter().enumerate() {
                if k1 + k2 <= top {
                    out.add_scaled(p2, c);
                }
            }
        }
    }
    Ok(out)
}

/// Maurer-Cartan residual order by order:
/// `R_k = split(m_{k−1}) + ½ Σ_{i+j=k} [m_i, m_j]`.
pub fn mc_residual(w: &WeightSystem) -> Result<Vec<GraphComb>, GraphError> {
    let half = frac(1, 2);
    let mut out = Vec::new();
    for k in 0..=w.truncation_order {
        let mut r = GraphComb::new();
        if k >= 1 {
            for (m, c) in w.order(k - 1).iter() {
                let mut split = GraphComb::new();
                splitting_terms(m, &mut split);
                r.add_scaled(&split, c);
            }
        }
        for i in 0..=k {
            for (a, ca) in w.order(i).iter() {
                for (b, cb) in w.order(k - i).iter() {
                    r.add_scaled(&gerstenhaber_bracket(a, b)?, &(ca * cb * &half));
                }
            }
        }
        out.push(r);
    }
    Ok(out)
}

/// Keeps the graphs that survive evaluation at a constant bivector field: every internal vertex
/// has exactly two outgoing and no incoming edges.
pub fn constant_bivector_part(lc: &GraphComb) -> GraphComb {
    let mut out = lc.clone();
    out.retain(|g| internal_vertices(g).all(|v| g.in_degree(v) == 0 && g.out_degree(v) == 2));
    out
}

fn has_forbidden_low_valence(g: &SignedGraph, v: V) -> bool {
    matches!((g.valence(v), g.out_degree(v)), (0, _) | (1, 1) | (2, 1))
}

/// Membership in the subcomplex cut out by `family`.
pub fn graphs_membership(g: &SignedGraph, family: Family) -> bool {
    match family {
        Family::Graphs => {
            if !matches!(g.kind, Kind::Gra | Kind::Dgra) {
                return false;
            }
            if internal_vertices(g).any(|v| g.valence(v) < 3) {
                return false;
            }
            no_internal_only_component(g, &[])
        }
        Family::Graphs1 => {
            if g.kind != Kind::Gra1 {
                return false;
            }
            let bad = internal_vertices(g).any(|v| {
                let val = g.valence(v);
                val < 2 || (val == 2 && g.out_degree(v) == 1)
            });
            !bad && no_internal_only_component(g, &[V::Out, V::In])
        }
        Family::SGraphs => {
            g.kind == Kind::Sgra
                && g.ext + g.typeii >= 1
                && !internal_vertices(g).any(|v| has_forbidden_low_valence(g, v))
        }
        Family::SGraphs1 => {
            g.kind == Kind::Sgra1 && !internal_vertices(g).any(|v| has_forbidden_low_valence(g, v))
        }
    }
}

/// True if every component of `g` minus `removed` that contains an internal vertex also
/// contains a numbered vertex.
fn no_internal_only_component(g: &SignedGraph, removed: &[V]) -> bool {
    let vs: Vec<V> = g
        .vertices()
        .into_iter()
        .filter(|v| !removed.contains(v))
        .collect();
    let es: Vec<Edge> = g
        .edges
        .iter()
        .copied()
        .filter(|(a, b)| !removed.contains(a) && !removed.contains(b))
        .collect();
    let labels = component_labels(&vs, &es);
    let with_ext: std::collections::BTreeSet<usize> = vs
        .iter()
        .zip(&labels)
        .filter(|(v, _)| !v.is_internal())
        .map(|(_, &l)| l)
        .collect();
    vs.iter()
        .zip(&labels)
        .all(|(v, l)| !v.is_internal() || with_ext.contains(l))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph_operads::graphs_on;

    fn g(s: &str) -> SignedGraph {
        s.parse().unwrap()
    }

    fn sample(kind: Kind, ext: u32, int: u32, typeii: u32, max_edges: usize) -> Vec<SignedGraph> {
        let mut base = SignedGraph::new(kind, ext, Vec::new()).with_internal(int);
        base.typeii = typeii;
        graphs_on(&base, max_edges)
    }

    fn d2_empty(gs: &[SignedGraph], d: impl Fn(&SignedGraph) -> Result<GraphComb, GraphError>) {
        for x in gs {
            let dx = d(x).unwrap();
            let ddx = apply_lc(&dx, &d).unwrap();
            assert!(
                ddx.is_empty(),
                "d² ≠ 0 on {x}: {}",
                crate::graph_core::format_comb(&ddx)
            );
            for h in dx.keys() {
                assert_eq!(h.degree(), x.degree() + 1);
            }
        }
    }

    #[test]
    fn graphs_d_squared_vanishes() {
        for n in 1..=3 {
            for int in 0..=2 {
                d2_empty(&sample(Kind::Gra, n, int, 0, 4), graphs_differential);
            }
        }
        d2_empty(&sample(Kind::Dgra, 2, 0, 0, 2), graphs_differential);
        d2_empty(&sample(Kind::Dgra, 1, 1, 0, 2), graphs_differential);
    }

    #[test]
    fn one_edge_graph_has_four_raw_splittings() {
        let x = g("gra{n=2; e=[(1,2)]}");
        let raw = split_raw(&x, V::Ext(1)).len() + split_raw(&x, V::Ext(2)).len();
        assert_eq!(raw, 4);
        let d = graphs_differential(&x).unwrap();
        // Univalent internal vertices cancel between attaching and splitting.
        assert!(d.is_empty(), "{}", crate::graph_core::format_comb(&d));
    }

    #[test]
    fn graphs_membership_closed_and_loop_order_preserved() {
        for n in 1..=3 {
            for int in 0..=2 {
                for x in sample(Kind::Gra, n, int, 0, 4) {
                    let d = graphs_differential(&x).unwrap();
                    for h in d.keys() {
                        assert_eq!(h.loop_order(), x.loop_order());
                        if graphs_membership(&x, Family::Graphs) {
                            assert!(graphs_membership(h, Family::Graphs), "{x} ↦ {h}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn bivalent_vertices_cancel_in_pairs() {
        // Subdividing the edge from either end gives the same graph with opposite signs.
        let x = g("gra{n=3,i=1; e=[(1,2),(1,i1),(2,i1),(3,i1)]}");
        assert!(graphs_membership(&x, Family::Graphs));
        let d = graphs_differential(&x).unwrap();
        assert!(d
            .keys()
            .all(|h| internal_vertices(h).all(|v| h.valence(v) >= 3)));
    }

    #[test]
    fn graphs_membership_examples() {
        assert!(graphs_membership(&g("gra{n=2; e=[]}"), Family::Graphs));
        assert!(!graphs_membership(
            &g("gra{n=1,i=1; e=[(1,i1)]}"),
            Family::Graphs
        ));
        assert!(graphs_membership(
            &g("gra{n=3,i=1; e=[(1,i1),(2,i1),(3,i1)]}"),
            Family::Graphs
        ));
        let vacuum = g("gra{n=1,i=4; e=[(i1,i2),(i1,i3),(i1,i4),(i2,i3),(i2,i4),(i3,i4)]}");
        assert!(!graphs_membership(&vacuum, Family::Graphs));
    }

    #[test]
    fn graphs1_examples() {
        let left = g("gra1{m=1,i=1; e=[(out>i1),(i1>1),(i1>in)]}");
        let middle = g("gra1{m=1; e=[(out>1),(1>in),(out>in)]}");
        let right = g("gra1{m=1,i=2; e=[(out>i1),(i1>i2),(i2>in),(out>i2),(i1>in),(out>1)]}");
        assert!(graphs_membership(&left, Family::Graphs1));
        assert!(graphs_membership(&middle, Family::Graphs1));
        assert!(!graphs_membership(&right, Family::Graphs1));
        assert!(!graphs_membership(
            &g("gra1{m=0,i=1; e=[(out>i1),(i1>in)]}"),
            Family::Graphs1
        ));
    }

    #[test]
    fn graphs1_d_squared_and_b_cocycle() {
        let b = g("gra1{m=0; e=[(out>in)]}");
        assert!(graphs1_differential(&b).unwrap().is_empty());
        for m in 0..=1 {
            for int in 0..=2 {
                d2_empty(&sample(Kind::Gra1, m, int, 0, 3), graphs1_differential);
            }
        }
    }

    #[test]
    fn graphs1_membership_closed() {
        for m in 0..=1 {
            for int in 0..=2 {
                for x in sample(Kind::Gra1, m, int, 0, 4) {
                    if !graphs_membership(&x, Family::Graphs1) {
                        continue;
                    }
                    for h in graphs1_differential(&x).unwrap().keys() {
                        assert!(graphs_membership(h, Family::Graphs1), "{x} ↦ {h}");
                    }
                }
            }
        }
    }

    #[test]
    fn graphs1_bivalent_terms_cancel() {
        // Splitting either end of an edge can produce a 1-in/1-out vertex; the two cancel.
        let x = g("gra1{m=1; e=[(out>1),(1>in)]}");
        let d = graphs1_differential(&x).unwrap();
        for h in d.keys() {
            assert!(
                internal_vertices(h).all(|v| !(h.valence(v) == 2 && h.out_degree(v) == 1)),
                "{h}"
            );
        }
    }

    #[test]
    fn hochschild_part_on_a_derivation_vanishes() {
        let w = WeightSystem::wedge();
        let x = g("sgra{m=1,n=1; e=[(1>b1)]}");
        let outer = pre_lie(&w, &x).unwrap();
        let inner = pre_lie(&x, &w).unwrap();
        let a = g("sgra{m=1,n=2; e=[(1>b1)]}");
        let b = g("sgra{m=1,n=2; e=[(1>b2)]}");
        assert_eq!(outer.len(), 2);
        assert_eq!(inner.len(), 2);
        assert_eq!(outer.coef(&a), -inner.coef(&a));
        assert_eq!(outer.coef(&b), -inner.coef(&b));
        assert!(gerstenhaber_bracket(&w, &x).unwrap().is_empty());
        // A second-order operator is not a Hochschild cocycle: only cross terms survive.
        let y = g("sgra{m=2,n=1; e=[(1>b1),(2>b1)]}");
        let d = gerstenhaber_bracket(&w, &y).unwrap();
        assert_eq!(d.len(), 2, "{}", crate::graph_core::format_comb(&d));
        for h in d.keys() {
            assert!(h.valence(V::B(1)) == 1 && h.valence(V::B(2)) == 1);
        }
    }

    fn sgra_sample(max_int: u32, max_edges: usize) -> Vec<SignedGraph> {
        let mut gs = Vec::new();
        for ext in 0..=1 {
            for int in 0..=max_int {
                for t in 1..=2 {
                    gs.extend(sample(Kind::Sgra, ext, int, t, max_edges));
                }
            }
        }
        gs
    }

    #[test]
    fn sgraphs_d_squared_and_closure() {
        let w = WeightSystem::default_mc();
        for x in sgra_sample(1, 3) {
            assert!(
                sgraphs_d_squared(&x, &w).unwrap().is_empty(),
                "d² ≠ 0 on {x}"
            );
            let d = sgraphs_differential(&x, &w).unwrap();
            for h in d.keys() {
                assert_eq!(sgra_degree(h), sgra_degree(&x) + 1);
                if graphs_membership(&x, Family::SGraphs) {
                    assert!(graphs_membership(h, Family::SGraphs), "{x} ↦ {h}");
                }
            }
        }
    }

    #[test]
    fn type_ii_valence_zero_terms_cancel() {
        let w = WeightSystem::new(0).unwrap();
        let mut w = w;
        w.insert(&WeightSystem::wedge(), &rat(1)).unwrap();
        for x in sgra_sample(1, 3) {
            let sgra_ok = |h: &SignedGraph| (1..=h.typeii).all(|k| h.in_degree(V::B(k)) >= 1);
            if !sgra_ok(&x) {
                continue;
            }
            for h in sgraphs_differential(&x, &w).unwrap().keys() {
                assert!(sgra_ok(h), "{x} ↦ {h}");
            }
        }
    }

    #[test]
    fn default_mc_element_is_mc() {
        for r in mc_residual(&WeightSystem::default_mc()).unwrap() {
            assert!(r.is_empty());
        }
    }

    #[test]
    fn moyal_weights_solve_mc_on_constant_bivectors() {
        let w = WeightSystem::moyal(3).unwrap();
        for r in mc_residual(&w).unwrap() {
            assert!(constant_bivector_part(&r).is_empty());
        }
        let mut bad = w.clone();
        bad.insert(&WeightSystem::moyal_graph(2), &rat(1)).unwrap();
        let res = mc_residual(&bad).unwrap();
        assert!(res.iter().any(|r| !constant_bivector_part(r).is_empty()));
    }

    #[test]
    fn weight_system_json_round_trip() {
        let w = WeightSystem::moyal(2).unwrap();
        let back = WeightSystem::from_json(&w.to_json()).unwrap();
        assert_eq!(w, back);
        assert!(WeightSystem::from_json(&serde_json::json!({"order": 9, "weights": []})).is_err());
    }

    fn check_derivation(
        outer: &[SignedGraph],
        inner: &[SignedGraph],
        d_outer: impl Fn(&SignedGraph) -> Result<GraphComb, GraphError>,
    ) {
        use crate::graph_core::graph_comb;
        use crate::graph_operads::{compose_lc, gra_compose};
        for x in outer {
            for y in inner {
                for j in 1..=x.ext {
                    let comp = |a: &GraphComb, b: &GraphComb| {
                        compose_lc(a, b, |p, q| gra_compose(p, j, q)).unwrap()
                    };
                    let lhs = apply_lc(&comp(&graph_comb(x), &graph_comb(y)), &d_outer).unwrap();
                    let mut rhs = comp(&d_outer(x).unwrap(), &graph_comb(y));
                    let s = if x.degree() % 2 == 0 { rat(1) } else { rat(-1) };
                    rhs.add_scaled(&comp(&graph_comb(x), &graphs_differential(y).unwrap()), &s);
                    assert_eq!(lhs, rhs, "derivation fails for {x} ∘_{j} {y}");
                }
            }
        }
    }

    #[test]
    fn differentials_are_derivations_of_insertion() {
        let inner: Vec<SignedGraph> = sample(Kind::Gra, 2, 0, 0, 1)
            .into_iter()
            .chain(sample(Kind::Gra, 1, 1, 0, 1))
            .collect();
        let outer = sample(Kind::Gra, 2, 0, 0, 1)
            .into_iter()
            .chain(sample(Kind::Gra, 2, 1, 0, 2))
            .collect::<Vec<_>>();
        check_derivation(&outer, &inner, graphs_differential);
        let dinner: Vec<SignedGraph> = sample(Kind::Dgra, 2, 0, 0, 1)
            .into_iter()
            .chain(sample(Kind::Dgra, 1, 1, 0, 1))
            .collect();
        let outer1: Vec<SignedGraph> = sample(Kind::Gra1, 1, 0, 0, 2)
            .into_iter()
            .chain(sample(Kind::Gra1, 1, 1, 0, 2))
            .collect();
        check_derivation(&outer1, &dinner, graphs1_differential);
    }
}
