//! Polynomial models of polyvector fields, polydifferential operators and differential forms in
//! a small dimension `d`, the graph and tree actions on them, and independent reference oracles.
//!
//! All three carriers share one engine, [`SuperPoly`]: a polynomial in even variables `x_k` and
//! odd variables that anticommute. For polyvector fields the odd variables are `ξ_k`, for forms
//! they are `dx_k`. Indices are 0-based internally and 1-based in text.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};
use rand::Rng;

use crate::graph_core::{Kind, SignedGraph, V};
use crate::lincomb::LinComb;
use crate::scalar_linalg::{format_rational, frac, parse_rational, rat, Rational};
use crate::tree_operads::{Label, Node, PlanarTree};
use crate::twisting::WeightSystem;

/// Largest supported dimension.
pub const MAX_DIM: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RepError {
    #[error("parse error at position {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("{0}")]
    Mismatch(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

fn mismatch<T>(msg: impl Into<String>) -> Result<T, RepError> {
    Err(RepError::Mismatch(msg.into()))
}

fn sign(odd: bool) -> Rational {
    if odd {
        rat(-1)
    } else {
        rat(1)
    }
}

/// A monomial `x^a · θ_S` with `S` stored as a bitmask in ascending order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial {
    pub x: Vec<u32>,
    pub odd: u64,
}

impl Monomial {
    pub fn one(nvars: usize) -> Self {
        Monomial {
            x: vec![0; nvars],
            odd: 0,
        }
    }

    pub fn odd_degree(&self) -> u32 {
        self.odd.count_ones()
    }

    pub fn x_degree(&self) -> u32 {
        self.x.iter().sum()
    }

    /// Product with its sign; `None` if an odd variable repeats.
    fn mul(&self, other: &Monomial) -> Option<(Monomial, bool)> {
        if self.odd & other.odd != 0 {
            return None;
        }
        let mut odd_sign = false;
        let mut rest = other.odd;
        while rest != 0 {
            let j = rest.trailing_zeros();
            rest &= rest - 1;
            odd_sign ^= (self.odd >> (j + 1)).count_ones() % 2 == 1;
        }
        let x = self.x.iter().zip(&other.x).map(|(a, b)| a + b).collect();
        Some((
            Monomial {
                x,
                odd: self.odd | other.odd,
            },
            odd_sign,
        ))
    }
}

/// Polynomial in `nvars` even and `nvars` odd variables with rational coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SuperPoly {
    nvars: usize,
    terms: LinComb<Monomial>,
}

/// Polyvector field: odd variables are `ξ_1..ξ_d`.
pub type PolyVector = SuperPoly;
/// Differential form: odd variables are `dx_1..dx_d`.
pub type PolyForm = SuperPoly;

impl SuperPoly {
    pub fn zero(nvars: usize) -> Self {
        assert!(nvars <= 64, "at most 64 odd variables");
        SuperPoly {
            nvars,
            terms: LinComb::new(),
        }
    }

    pub fn constant(nvars: usize, c: Rational) -> Self {
        let mut p = Self::zero(nvars);
        p.terms.add(Monomial::one(nvars), c);
        p
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, rat(1))
    }

    /// The even variable `x_k` (0-based).
    pub fn x(nvars: usize, k: usize) -> Self {
        let mut m = Monomial::one(nvars);
        m.x[k] = 1;
        Self::monomial(nvars, m, rat(1))
    }

    /// The odd variable `θ_k` (0-based): `ξ_k` or `dx_k`.
    pub fn odd(nvars: usize, k: usize) -> Self {
        let mut m = Monomial::one(nvars);
        m.odd = 1 << k;
        Self::monomial(nvars, m, rat(1))
    }

    /// Product of the odd variables in `mask`, in ascending order.
    pub fn odd_monomial(nvars: usize, mask: u64) -> Self {
        let mut m = Monomial::one(nvars);
        m.odd = mask;
        Self::monomial(nvars, m, rat(1))
    }

    pub fn monomial(nvars: usize, m: Monomial, c: Rational) -> Self {
        assert_eq!(m.x.len(), nvars);
        let mut p = Self::zero(nvars);
        p.terms.add(m, c);
        p
    }

    pub fn dim(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn coef(&self, m: &Monomial) -> Rational {
        self.terms.coef(m)
    }

    fn push(&mut self, m: Monomial, c: Rational) {
        self.terms.add(m, c);
    }

    pub fn add(&self, other: &SuperPoly) -> SuperPoly {
        let mut out = self.clone();
        out.add_assign_scaled(other, &rat(1));
        out
    }

    pub fn sub(&self, other: &SuperPoly) -> SuperPoly {
        let mut out = self.clone();
        out.add_assign_scaled(other, &rat(-1));
        out
    }

    pub fn add_assign_scaled(&mut self, other: &SuperPoly, c: &Rational) {
        assert_eq!(self.nvars, other.nvars, "dimension mismatch");
        self.terms.add_scaled(&other.terms, c);
    }

    pub fn scaled(&self, c: &Rational) -> SuperPoly {
        SuperPoly {
            nvars: self.nvars,
            terms: self.terms.scaled(c),
        }
    }

    pub fn neg(&self) -> SuperPoly {
        self.scaled(&rat(-1))
    }

    pub fn mul(&self, other: &SuperPoly) -> SuperPoly {
        assert_eq!(self.nvars, other.nvars, "dimension mismatch");
        let mut out = Self::zero(self.nvars);
        for (a, ca) in self.iter() {
            for (b, cb) in other.iter() {
                if let Some((m, odd)) = a.mul(b) {
                    let c = ca * cb;
                    out.push(m, if odd { -c } else { c });
                }
            }
        }
        out
    }

    /// `∂/∂x_k`.
    pub fn d_x(&self, k: usize) -> SuperPoly {
        let mut out = Self::zero(self.nvars);
        for (m, c) in self.iter() {
            if m.x[k] > 0 {
                let mut m2 = m.clone();
                m2.x[k] -= 1;
                out.push(m2, c * rat(m.x[k] as i64));
            }
        }
        out
    }

    /// `∂^α` for a multi-index over the even variables.
    pub fn d_multi(&self, alpha: &[u32]) -> SuperPoly {
        let mut p = self.clone();
        for (k, &a) in alpha.iter().enumerate() {
            for _ in 0..a {
                p = p.d_x(k);
            }
        }
        p
    }

    /// Left derivative in the odd variable `θ_k`.
    pub fn d_odd(&self, k: usize) -> SuperPoly {
        let mut out = Self::zero(self.nvars);
        let below = (1u64 << k) - 1;
        for (m, c) in self.iter() {
            if m.odd >> k & 1 == 1 {
                let mut m2 = m.clone();
                m2.odd &= !(1 << k);
                let odd = (m.odd & below).count_ones() % 2 == 1;
                out.push(m2, if odd { -c.clone() } else { c.clone() });
            }
        }
        out
    }

    /// Right derivative in the odd variable `θ_k`.
    pub fn d_odd_right(&self, k: usize) -> SuperPoly {
        let mut out = Self::zero(self.nvars);
        for (m, c) in self.iter() {
            if m.odd >> k & 1 == 1 {
                let mut m2 = m.clone();
                m2.odd &= !(1 << k);
                let odd = (m.odd >> (k + 1)).count_ones() % 2 == 1;
                out.push(m2, if odd { -c.clone() } else { c.clone() });
            }
        }
        out
    }

    /// Odd degree if homogeneous (zero counts as degree 0).
    pub fn odd_degree(&self) -> Option<u32> {
        let mut degs = self.iter().map(|(m, _)| m.odd_degree());
        let first = degs.next().unwrap_or(0);
        degs.all(|d| d == first).then_some(first)
    }

    /// Largest total degree in the even variables.
    pub fn x_degree(&self) -> u32 {
        self.iter().map(|(m, _)| m.x_degree()).max().unwrap_or(0)
    }

    /// True if no even variable occurs.
    pub fn is_constant_coefficient(&self) -> bool {
        self.iter().all(|(m, _)| m.x_degree() == 0)
    }

    /// The part of odd degree `p`.
    pub fn odd_part(&self, p: u32) -> SuperPoly {
        let mut out = self.clone();
        out.terms.retain(|m| m.odd_degree() == p);
        out
    }

    /// Copies this polynomial into block `copy` of a tensor power with `copies` blocks.
    pub fn embed(&self, copy: usize, copies: usize) -> SuperPoly {
        let n = self.nvars;
        let mut out = Self::zero(n * copies);
        for (m, c) in self.iter() {
            let mut x = vec![0; n * copies];
            x[copy * n..(copy + 1) * n].copy_from_slice(&m.x);
            out.push(
                Monomial {
                    x,
                    odd: m.odd << (copy * n),
                },
                c.clone(),
            );
        }
        out
    }

    /// Multiplication map from a tensor power with `copies` blocks of `nvars / copies` variables.
    pub fn collapse(&self, copies: usize) -> SuperPoly {
        let n = self.nvars / copies;
        let mut out = Self::zero(n);
        'terms: for (m, c) in self.iter() {
            let mut x = vec![0; n];
            for (i, e) in m.x.iter().enumerate() {
                x[i % n] += e;
            }
            let mut mask = 0u64;
            let mut odd = false;
            let mut rest = m.odd;
            while rest != 0 {
                let b = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                let k = b % n;
                if mask >> k & 1 == 1 {
                    continue 'terms;
                }
                odd ^= (mask >> (k + 1)).count_ones() % 2 == 1;
                mask |= 1 << k;
            }
            out.push(
                Monomial { x, odd: mask },
                if odd { -c.clone() } else { c.clone() },
            );
        }
        out
    }

    /// Text form with the given odd variable name (`xi` or `dx`).
    pub fn format_with(&self, odd_name: &str) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut s = String::new();
        for (i, (m, c)) in self.iter().enumerate() {
            let mut factors = Vec::new();
            for (k, &e) in m.x.iter().enumerate() {
                match e {
                    0 => {}
                    1 => factors.push(format!("x{}", k + 1)),
                    _ => factors.push(format!("x{}^{}", k + 1, e)),
                }
            }
            let odd: Vec<String> = (0..self.nvars)
                .filter(|k| m.odd >> k & 1 == 1)
                .map(|k| format!("{odd_name}{}", k + 1))
                .collect();
            if !odd.is_empty() {
                factors.push(odd.join(if odd_name == "dx" { "^" } else { "*" }));
            }
            let neg = c.is_negative();
            let a = c.abs();
            if i == 0 {
                if neg {
                    s.push('-');
                }
            } else {
                s.push_str(if neg { " - " } else { " + " });
            }
            if factors.is_empty() {
                s.push_str(&format_rational(&a));
            } else {
                if !a.is_one() {
                    s.push_str(&format_rational(&a));
                    s.push('*');
                }
                s.push_str(&factors.join("*"));
            }
        }
        s
    }

    pub fn format_vector(&self) -> String {
        self.format_with("xi")
    }

    pub fn format_form(&self) -> String {
        self.format_with("dx")
    }
}

impl fmt::Display for SuperPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.format_vector())
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum OddName {
    Xi,
    Dx,
}

/// Parses a polyvector literal such as `x1^2*xi1 + 3/2*x2` in dimension `d`.
pub fn parse_polyvector(s: &str, d: usize) -> Result<PolyVector, RepError> {
    parse_super(s, d, OddName::Xi)
}

/// Parses a form literal such as `x1*dx1^dx2 - 2*dx2` in dimension `d`.
pub fn parse_form(s: &str, d: usize) -> Result<PolyForm, RepError> {
    parse_super(s, d, OddName::Dx)
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
}

impl Lexer {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T, RepError> {
        Err(RepError::Parse {
            pos: self.pos,
            msg: msg.into(),
        })
    }

    fn skip_ws(&mut self) {
        while self.chars.get(self.pos).is_some_and(|c| c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn eat_str(&mut self, t: &str) -> bool {
        let n = t.chars().count();
        if self.pos + n <= self.chars.len()
            && self.chars[self.pos..self.pos + n]
                .iter()
                .copied()
                .eq(t.chars())
        {
            self.pos += n;
            true
        } else {
            false
        }
    }

    fn digits(&mut self) -> Option<String> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        (self.pos > start).then(|| self.chars[start..self.pos].iter().collect())
    }

    fn index(&mut self, d: usize) -> Result<usize, RepError> {
        let at = self.pos;
        let Some(t) = self.digits() else {
            return self.err("expected a variable index");
        };
        match t.parse::<usize>() {
            Ok(k) if (1..=d).contains(&k) => Ok(k - 1),
            _ => Err(RepError::Parse {
                pos: at,
                msg: format!("variable index must lie in 1..={d}"),
            }),
        }
    }
}

fn parse_super(s: &str, d: usize, name: OddName) -> Result<SuperPoly, RepError> {
    if d == 0 || d > MAX_DIM {
        return Err(RepError::Invalid(format!(
            "dimension must lie in 1..={MAX_DIM}"
        )));
    }
    let mut lx = Lexer {
        chars: s.chars().collect(),
        pos: 0,
    };
    let mut out = SuperPoly::zero(d);
    let mut first = true;
    loop {
        lx.skip_ws();
        let mut neg = false;
        match lx.peek() {
            Some('+') if !first => lx.pos += 1,
            Some('-') => {
                lx.pos += 1;
                neg = true;
            }
            None if first => return lx.err("empty polynomial"),
            None => break,
            _ if !first => return lx.err("expected '+' or '-'"),
            _ => {}
        }
        first = false;
        lx.skip_ws();
        let mut term = SuperPoly::one(d);
        let mut after_odd;
        loop {
            lx.skip_ws();
            let factor =
                if lx.peek().is_some_and(|c| c.is_ascii_digit()) {
                    let at = lx.pos;
                    let mut t = lx.digits().unwrap_or_default();
                    if lx.peek() == Some('/') {
                        lx.pos += 1;
                        match lx.digits() {
                            Some(den) => t = format!("{t}/{den}"),
                            None => return lx.err("expected a denominator"),
                        }
                    }
                    let c = parse_rational(&t).map_err(|e| RepError::Parse {
                        pos: at,
                        msg: e.to_string(),
                    })?;
                    after_odd = false;
                    SuperPoly::constant(d, c)
                } else if lx.eat_str("xi") || lx.eat_str("ξ") {
                    if name != OddName::Xi {
                        return lx.err("odd variables of a form are written dx");
                    }
                    after_odd = true;
                    SuperPoly::odd(d, lx.index(d)?)
                } else if lx.eat_str("dx") {
                    if name != OddName::Dx {
                        return lx.err("odd variables of a polyvector are written xi");
                    }
                    after_odd = true;
                    SuperPoly::odd(d, lx.index(d)?)
                } else if lx.eat_str("x") {
                    let k = lx.index(d)?;
                    let mut e = 1u32;
                    if lx.peek() == Some('^')
                        && lx.chars.get(lx.pos + 1).is_some_and(|c| c.is_ascii_digit())
                    {
                        lx.pos += 1;
                        let at = lx.pos;
                        e = lx.digits().unwrap_or_default().parse().map_err(|_| {
                            RepError::Parse {
                                pos: at,
                                msg: "exponent too large".into(),
                            }
                        })?;
                    }
                    let mut m = Monomial::one(d);
                    m.x[k] = e;
                    after_odd = false;
                    SuperPoly::monomial(d, m, rat(1))
                } else {
                    return lx.err("expected a number or a variable");
                };
            term = term.mul(&factor);
            lx.skip_ws();
            match lx.peek() {
                Some('*') => lx.pos += 1,
                Some('^') if after_odd && name == OddName::Dx => lx.pos += 1,
                _ => break,
            }
        }
        out.add_assign_scaled(&term, &if neg { rat(-1) } else { rat(1) });
    }
    Ok(out)
}

/// Random polynomial with small integer coefficients, odd degree `odd_deg` and even degree at
/// most `max_x_deg`.
pub fn random_poly<R: Rng>(
    rng: &mut R,
    d: usize,
    max_x_deg: u32,
    odd_deg: u32,
    nterms: usize,
) -> SuperPoly {
    let masks: Vec<u64> = (0u64..1 << d)
        .filter(|m| m.count_ones() == odd_deg)
        .collect();
    let mut p = SuperPoly::zero(d);
    if masks.is_empty() {
        return p;
    }
    for _ in 0..nterms {
        let mut x = vec![0u32; d];
        let deg = rng.gen_range(0..=max_x_deg);
        for _ in 0..deg {
            x[rng.gen_range(0..d)] += 1;
        }
        let odd = masks[rng.gen_range(0..masks.len())];
        let c = loop {
            let c = rng.gen_range(-3i64..=3);
            if c != 0 {
                break c;
            }
        };
        p.push(Monomial { x, odd }, rat(c));
    }
    p
}

/// Head of an edge in the action engine.
#[derive(Clone, Copy, Debug)]
enum Head {
    /// A polyvector slot.
    Slot(usize),
    /// A function slot of the resulting polydifferential operator.
    Fun(usize),
}

/// Applies `∏_{(i,j)} Σ_k ∂/∂x_k^{(j)} ∂/∂ξ_k^{(i)}` to `γ_1 ⊗ … ⊗ γ_n`, the last edge acting first,
/// then multiplies the copies. Edges into function slot `b` raise the multi-index of `b` instead
/// of differentiating a copy. Returns the coefficient of each multi-index tuple.
fn act_engine(
    inputs: &[SuperPoly],
    d: usize,
    edges: &[(usize, Head)],
    nfun: usize,
) -> Result<BTreeMap<Vec<Vec<u32>>, SuperPoly>, RepError> {
    let n = inputs.len();
    if n * d > 64 {
        return Err(RepError::Invalid(
            "too many slots for the odd-variable mask".into(),
        ));
    }
    let mut big = SuperPoly::one(n * d);
    for (i, g) in inputs.iter().enumerate() {
        if g.dim() != d {
            return mismatch("inputs of different dimensions");
        }
        big = big.mul(&g.embed(i, n));
    }
    let mut state: BTreeMap<Vec<Vec<u32>>, SuperPoly> = BTreeMap::new();
    state.insert(vec![vec![0; d]; nfun], big);
    for &(tail, head) in edges.iter().rev() {
        let mut next: BTreeMap<Vec<Vec<u32>>, SuperPoly> = BTreeMap::new();
        for (alpha, p) in &state {
            for k in 0..d {
                let q = p.d_odd(tail * d + k);
                if q.is_zero() {
                    continue;
                }
                let (key, q) = match head {
                    Head::Slot(h) => (alpha.clone(), q.d_x(h * d + k)),
                    Head::Fun(b) => {
                        let mut a = alpha.clone();
                        a[b][k] += 1;
                        (a, q)
                    }
                };
                if !q.is_zero() {
                    next.entry(key)
                        .or_insert_with(|| SuperPoly::zero(n * d))
                        .add_assign_scaled(&q, &rat(1));
                }
            }
        }
        next.retain(|_, p| !p.is_zero());
        state = next;
    }
    Ok(state
        .into_iter()
        .map(|(a, p)| {
            let p = if n == 0 {
                SuperPoly::constant(d, p.coef(&Monomial::one(0)))
            } else {
                p.collapse(n)
            };
            (a, p)
        })
        .filter(|(_, p)| !p.is_zero())
        .collect())
}

fn common_dim(inputs: &[SuperPoly]) -> Result<usize, RepError> {
    let d = inputs.first().map(SuperPoly::dim).unwrap_or(1);
    if inputs.iter().any(|p| p.dim() != d) {
        return mismatch("inputs of different dimensions");
    }
    Ok(d)
}

/// Action of a directed graph on polyvector fields.
pub fn act_dgra(g: &SignedGraph, gammas: &[PolyVector]) -> Result<PolyVector, RepError> {
    if g.kind != Kind::Dgra {
        return mismatch(format!(
            "act_dgra expects a dgra graph, got {}",
            g.kind.name()
        ));
    }
    if g.int != 0 {
        return mismatch("act_dgra acts with graphs without internal vertices");
    }
    if gammas.len() != g.ext as usize {
        return mismatch(format!(
            "graph has {} vertices but {} inputs were given",
            g.ext,
            gammas.len()
        ));
    }
    let d = common_dim(gammas)?;
    let slot = |v: V| match v {
        V::Ext(k) => Ok(k as usize - 1),
        o => Err(RepError::Invalid(format!(
            "unexpected vertex {o} in a dgra graph"
        ))),
    };
    let edges = g
        .edges
        .iter()
        .map(|&(a, b)| Ok((slot(a)?, Head::Slot(slot(b)?))))
        .collect::<Result<Vec<_>, RepError>>()?;
    let mut res = act_engine(gammas, d, &edges, 0)?;
    Ok(res
        .remove(&Vec::new())
        .unwrap_or_else(|| SuperPoly::zero(d)))
}

/// Linear extension of [`act_dgra`]; undirected graphs act through their directed expansion.
pub fn act_graph_comb(
    lc: &LinComb<SignedGraph>,
    gammas: &[PolyVector],
) -> Result<PolyVector, RepError> {
    let d = common_dim(gammas)?;
    let mut out = SuperPoly::zero(d);
    for (g, c) in lc.iter() {
        let p = if g.kind == Kind::Gra {
            let exp = crate::graph_operads::directed_expansion(g)
                .map_err(|e| RepError::Invalid(e.to_string()))?;
            act_graph_comb(&exp, gammas)?
        } else {
            act_dgra(g, gammas)?
        };
        out.add_assign_scaled(&p, c);
    }
    Ok(out)
}

/// Odd Poisson bracket on `C^∞(T*[1]R^d)`, written as the odd operator `Σ_k ∂_{ξ_k} ⊗ ∂_{x_k} +
/// ∂_{x_k} ⊗ ∂_{ξ_k}` applied to `a ⊗ b` with Koszul signs, then multiplied.
///
/// This is `(−1)^{|a|+1}` times the Schouten bracket written with a right `ξ`-derivative on `a`.
pub fn schouten_bracket(a: &PolyVector, b: &PolyVector) -> Result<PolyVector, RepError> {
    if a.dim() != b.dim() {
        return mismatch("schouten_bracket: dimension mismatch");
    }
    let d = a.dim();
    let mut out = SuperPoly::zero(d);
    for (ma, ca) in a.iter() {
        let ta = SuperPoly::monomial(d, ma.clone(), ca.clone());
        let koszul = sign(ma.odd_degree() % 2 == 1);
        for k in 0..d {
            out.add_assign_scaled(&ta.d_odd(k).mul(&b.d_x(k)), &rat(1));
            out.add_assign_scaled(&ta.d_x(k).mul(&b.d_odd(k)), &koszul);
        }
    }
    Ok(out)
}

/// A polydifferential operator `f_1 ⊗ … ⊗ f_k ↦ Σ c · ∂^{α_1} f_1 ⋯ ∂^{α_k} f_k`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PolyOperator {
    dim: usize,
    arity: usize,
    /// Keys: one multi-index per slot, then the coefficient monomial.
    terms: LinComb<(Vec<Vec<u32>>, Monomial)>,
}

impl PolyOperator {
    pub fn zero(dim: usize, arity: usize) -> Self {
        PolyOperator {
            dim,
            arity,
            terms: LinComb::new(),
        }
    }

    /// The `k`-fold multiplication `f_1 ⋯ f_k`.
    pub fn multiplication(dim: usize, k: usize) -> Self {
        let mut op = Self::zero(dim, k);
        op.add_term(vec![vec![0; dim]; k], &SuperPoly::one(dim));
        op
    }

    /// The operator `f ↦ c · ∂^α f` applied slotwise: one multi-index per slot.
    pub fn from_term(dim: usize, alphas: Vec<Vec<u32>>, coef: &SuperPoly) -> Self {
        let mut op = Self::zero(dim, alphas.len());
        op.add_term(alphas, coef);
        op
    }

    pub fn add_term(&mut self, alphas: Vec<Vec<u32>>, coef: &SuperPoly) {
        assert_eq!(alphas.len(), self.arity);
        assert_eq!(coef.dim(), self.dim);
        for (m, c) in coef.iter() {
            self.terms.add((alphas.clone(), m.clone()), c.clone());
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Hochschild degree, the arity.
    pub fn degree(&self) -> usize {
        self.arity
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &PolyOperator) -> PolyOperator {
        let mut out = self.clone();
        out.add_assign_scaled(other, &rat(1));
        out
    }

    pub fn sub(&self, other: &PolyOperator) -> PolyOperator {
        let mut out = self.clone();
        out.add_assign_scaled(other, &rat(-1));
        out
    }

    pub fn add_assign_scaled(&mut self, other: &PolyOperator, c: &Rational) {
        assert_eq!(
            (self.dim, self.arity),
            (other.dim, other.arity),
            "operator shape mismatch"
        );
        self.terms.add_scaled(&other.terms, c);
    }

    pub fn scaled(&self, c: &Rational) -> PolyOperator {
        PolyOperator {
            dim: self.dim,
            arity: self.arity,
            terms: self.terms.scaled(c),
        }
    }

    /// Coefficient polynomial for each tuple of multi-indices.
    pub fn grouped(&self) -> BTreeMap<Vec<Vec<u32>>, SuperPoly> {
        let mut out: BTreeMap<Vec<Vec<u32>>, SuperPoly> = BTreeMap::new();
        for ((alphas, m), c) in self.terms.iter() {
            out.entry(alphas.clone())
                .or_insert_with(|| SuperPoly::zero(self.dim))
                .push(m.clone(), c.clone());
        }
        out
    }

    /// True if every term differentiates every slot, so the operator vanishes on constants.
    pub fn is_normalized(&self) -> bool {
        self.terms
            .keys()
            .all(|(alphas, _)| alphas.iter().all(|a| a.iter().any(|&e| e > 0)))
    }

    pub fn eval(&self, args: &[SuperPoly]) -> Result<SuperPoly, RepError> {
        if args.len() != self.arity {
            return mismatch(format!(
                "operator of arity {} applied to {} arguments",
                self.arity,
                args.len()
            ));
        }
        if args.iter().any(|a| a.dim() != self.dim) {
            return mismatch("argument of a different dimension");
        }
        let mut out = SuperPoly::zero(self.dim);
        for (alphas, coef) in self.grouped() {
            let mut p = coef;
            for (a, f) in alphas.iter().zip(args) {
                p = p.mul(&f.d_multi(a));
                if p.is_zero() {
                    break;
                }
            }
            out.add_assign_scaled(&p, &rat(1));
        }
        Ok(out)
    }

    /// Partial composition `self ∘_j other` (1-based), expanding `∂^α (c · ∏ ∂^β f)` by Leibniz.
    pub fn compose(&self, j: usize, other: &PolyOperator) -> Result<PolyOperator, RepError> {
        if self.dim != other.dim {
            return mismatch("operators of different dimensions");
        }
        if j == 0 || j > self.arity {
            return mismatch(format!("slot {j} out of range 1..={}", self.arity));
        }
        let k2 = other.arity;
        let mut out = PolyOperator::zero(self.dim, self.arity + k2 - 1);
        let inner = other.grouped();
        for (alphas, c1) in self.grouped() {
            for (betas, c2) in &inner {
                for (parts, mult) in leibniz_splits(&alphas[j - 1], k2 + 1) {
                    let coef = c1.mul(&c2.d_multi(&parts[0])).scaled(&mult);
                    if coef.is_zero() {
                        continue;
                    }
                    let mut slots = alphas[..j - 1].to_vec();
                    for (b, p) in betas.iter().zip(&parts[1..]) {
                        slots.push(b.iter().zip(p).map(|(x, y)| x + y).collect());
                    }
                    slots.extend_from_slice(&alphas[j..]);
                    out.add_term(slots, &coef);
                }
            }
        }
        Ok(out)
    }

    pub fn format(&self) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let parts: Vec<String> = self
            .grouped()
            .into_iter()
            .map(|(alphas, c)| {
                let slots: Vec<String> = alphas
                    .iter()
                    .map(|a| {
                        format!(
                            "({})",
                            a.iter().map(u32::to_string).collect::<Vec<_>>().join(",")
                        )
                    })
                    .collect();
                format!("({})*D[{}]", c.format_vector(), slots.join(";"))
            })
            .collect();
        parts.join(" + ")
    }
}

impl fmt::Display for PolyOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.format())
    }
}

/// Parses the output of [`PolyOperator::format`], e.g. `(x1)*D[(1,0);(0,0)] + (-1/2)*D[(0,1);(0,0)]`.
/// The zero operator is written `0` and gets arity 0.
pub fn parse_operator(s: &str, d: usize) -> Result<PolyOperator, RepError> {
    if d == 0 || d > MAX_DIM {
        return Err(RepError::Invalid(format!(
            "dimension must lie in 1..={MAX_DIM}"
        )));
    }
    if s.trim() == "0" {
        return Ok(PolyOperator::zero(d, 0));
    }
    let mut lx = Lexer {
        chars: s.chars().collect(),
        pos: 0,
    };
    let mut out: Option<PolyOperator> = None;
    loop {
        lx.skip_ws();
        if out.is_some() {
            match lx.peek() {
                None => break,
                Some('+') => lx.pos += 1,
                _ => return lx.err("expected '+'"),
            }
            lx.skip_ws();
        }
        if !lx.eat_str("(") {
            return lx.err("expected '(' opening a coefficient");
        }
        let start = lx.pos;
        let mut depth = 1;
        while depth > 0 {
            match lx.peek() {
                Some('(') => depth += 1,
                Some(')') => depth -= 1,
                None => return lx.err("unclosed coefficient"),
                _ => {}
            }
            lx.pos += 1;
        }
        let inner: String = lx.chars[start..lx.pos - 1].iter().collect();
        let coef = parse_polyvector(&inner, d).map_err(|e| match e {
            RepError::Parse { pos, msg } => RepError::Parse {
                pos: pos + start,
                msg,
            },
            e => e,
        })?;
        if coef.odd_degree().is_some_and(|p| p > 0) {
            return Err(RepError::Parse {
                pos: start,
                msg: "coefficients must be functions".into(),
            });
        }
        lx.skip_ws();
        if !lx.eat_str("*D[") {
            return lx.err("expected '*D['");
        }
        let mut alphas = Vec::new();
        loop {
            if !lx.eat_str("(") {
                return lx.err("expected '(' opening a multi-index");
            }
            let mut alpha = Vec::new();
            loop {
                lx.skip_ws();
                let at = lx.pos;
                match lx.digits().and_then(|t| t.parse::<u32>().ok()) {
                    Some(a) => alpha.push(a),
                    None => {
                        return Err(RepError::Parse {
                            pos: at,
                            msg: "expected a derivative order".into(),
                        })
                    }
                }
                lx.skip_ws();
                if lx.eat_str(")") {
                    break;
                }
                if !lx.eat_str(",") {
                    return lx.err("expected ',' or ')'");
                }
            }
            if alpha.len() != d {
                return lx.err(format!("multi-index needs {d} entries"));
            }
            alphas.push(alpha);
            if lx.eat_str("]") {
                break;
            }
            if !lx.eat_str(";") {
                return lx.err("expected ';' or ']'");
            }
        }
        let op = out.get_or_insert_with(|| PolyOperator::zero(d, alphas.len()));
        if op.arity() != alphas.len() {
            return lx.err(format!("expected {} slots", op.arity()));
        }
        op.add_term(alphas, &coef);
    }
    Ok(out.expect("at least one term"))
}

/// All ways to write the multi-index `alpha` as an ordered sum of `parts` multi-indices, with
/// multinomial coefficients.
fn leibniz_splits(alpha: &[u32], parts: usize) -> Vec<(Vec<Vec<u32>>, Rational)> {
    let mut acc: Vec<(Vec<Vec<u32>>, Rational)> = vec![(vec![Vec::new(); parts], rat(1))];
    for &a in alpha {
        let mut next = Vec::new();
        for comp in compositions(a, parts) {
            let mut mult = factorial(a);
            for &c in &comp {
                mult /= factorial(c);
            }
            for (split, m) in &acc {
                let mut s = split.clone();
                for (p, &c) in s.iter_mut().zip(&comp) {
                    p.push(c);
                }
                next.push((s, m * &mult));
            }
        }
        acc = next;
    }
    acc
}

fn compositions(n: u32, parts: usize) -> Vec<Vec<u32>> {
    if parts == 1 {
        return vec![vec![n]];
    }
    let mut out = Vec::new();
    for first in 0..=n {
        for mut rest in compositions(n - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn factorial(n: u32) -> Rational {
    (1..=n as i64).fold(rat(1), |acc, k| acc * rat(k))
}

/// Action of an SGRA graph: the polydifferential operator `D_Γ(γ)` with
/// `D_Γ(γ)(a_1,…,a_n) = Γ(γ, a_1,…,a_n)`.
pub fn act_sgra(g: &SignedGraph, gammas: &[PolyVector]) -> Result<PolyOperator, RepError> {
    act_sgra_filled(g, gammas, None)
}

/// As [`act_sgra`], with every internal vertex filled by `fill`.
pub fn act_sgra_filled(
    g: &SignedGraph,
    gammas: &[PolyVector],
    fill: Option<&PolyVector>,
) -> Result<PolyOperator, RepError> {
    if g.kind != Kind::Sgra {
        return mismatch(format!(
            "act_sgra expects an sgra graph, got {}",
            g.kind.name()
        ));
    }
    if gammas.len() != g.ext as usize {
        return mismatch(format!(
            "graph has {} type-I vertices but {} inputs were given",
            g.ext,
            gammas.len()
        ));
    }
    let mut inputs = gammas.to_vec();
    match fill {
        Some(p) => inputs.extend(std::iter::repeat_n(p.clone(), g.int as usize)),
        None if g.int > 0 => return mismatch("internal vertices need a filling polyvector"),
        None => {}
    }
    let d = match fill {
        Some(p) if gammas.is_empty() => p.dim(),
        _ => common_dim(&inputs)?,
    };
    common_dim(&inputs)?;
    let m = g.ext as usize;
    let slot = |v: V| match v {
        V::Ext(k) => Ok(k as usize - 1),
        V::Int(k) => Ok(m + k as usize - 1),
        o => Err(RepError::Invalid(format!("edge leaving {o}"))),
    };
    let mut edges = Vec::with_capacity(g.edges.len());
    for &(a, b) in &g.edges {
        let head = match b {
            V::B(j) => Head::Fun(j as usize - 1),
            o => Head::Slot(slot(o)?),
        };
        edges.push((slot(a)?, head));
    }
    let n = g.typeii as usize;
    let mut op = PolyOperator::zero(d, n);
    if inputs.is_empty() {
        // No type-I vertices: edges cannot exist, the operator is plain multiplication.
        if !edges.is_empty() {
            return Err(RepError::Invalid("edges without type-I vertices".into()));
        }
        return Ok(PolyOperator::multiplication(d, n));
    }
    for (alphas, coef) in act_engine(&inputs, d, &edges, n)? {
        op.add_term(alphas, &coef);
    }
    Ok(op)
}

/// The directed graph underlying an SGRA graph, with `b_j` renumbered as vertex `m + j`.
pub fn sgra_underlying_dgra(g: &SignedGraph) -> SignedGraph {
    let m = g.ext;
    let map = |v: V| match v {
        V::B(j) => V::Ext(m + j),
        o => o,
    };
    let mut out = SignedGraph::new(
        Kind::Dgra,
        m + g.typeii,
        g.edges.iter().map(|&(a, b)| (map(a), map(b))).collect(),
    );
    out.int = g.int;
    out
}

/// Brace operation `a_0{a_1,…,a_k} = Σ_{j_1<…<j_k} (−1)^{Σ(|a_i|+1)(j_i−1)} a_0 ∘_{j_1,…,j_k}(a_1,…,a_k)`
/// with `|a| = arity`.
pub fn braces(a0: &PolyOperator, args: &[PolyOperator]) -> Result<PolyOperator, RepError> {
    let k = args.len();
    if args.iter().any(|a| a.dim != a0.dim) {
        return mismatch("operators of different dimensions");
    }
    let arity = (a0.arity + args.iter().map(|a| a.arity).sum::<usize>()).saturating_sub(k);
    if k > a0.arity {
        return Ok(PolyOperator::zero(a0.dim, arity));
    }
    let mut out = PolyOperator::zero(a0.dim, arity);
    for js in increasing_tuples(a0.arity, k) {
        let mut t = a0.clone();
        for (i, &j) in js.iter().enumerate().rev() {
            t = t.compose(j, &args[i])?;
        }
        let odd = js
            .iter()
            .zip(args)
            .map(|(&j, a)| (a.arity + 1) * (j - 1))
            .sum::<usize>()
            % 2
            == 1;
        out.add_assign_scaled(&t, &sign(odd));
    }
    Ok(out)
}

fn increasing_tuples(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for j in start..=n {
            cur.push(j);
            go(j + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(1, n, k, &mut Vec::new(), &mut out);
    out
}

/// Gerstenhaber bracket `[a,b] = a{b} − (−1)^{(|a|+1)(|b|+1)} b{a}`.
pub fn gerstenhaber_bracket(a: &PolyOperator, b: &PolyOperator) -> Result<PolyOperator, RepError> {
    let ab = braces(a, std::slice::from_ref(b))?;
    let ba = braces(b, std::slice::from_ref(a))?;
    let odd = (a.arity + 1) * (b.arity + 1) % 2 == 1;
    Ok(ab.sub(&ba.scaled(&sign(odd))))
}

/// Cup product `(a ∪ b)(f_1,…,f_{p+q}) = a(f_1,…,f_p) · b(f_{p+1},…,f_{p+q})`.
pub fn cup_product(a: &PolyOperator, b: &PolyOperator) -> Result<PolyOperator, RepError> {
    if a.dim != b.dim {
        return mismatch("operators of different dimensions");
    }
    let mut out = PolyOperator::zero(a.dim, a.arity + b.arity);
    for (al, ca) in a.grouped() {
        for (bl, cb) in b.grouped() {
            let mut slots = al.clone();
            slots.extend(bl.iter().cloned());
            out.add_term(slots, &ca.mul(&cb));
        }
    }
    Ok(out)
}

/// Action of a planar tree with numbered vertices only: each vertex `v` with children
/// `c_1,…,c_k` becomes `a_v{T(c_1),…,T(c_k)}`.
pub fn act_planar_tree(t: &PlanarTree, ops: &[PolyOperator]) -> Result<PolyOperator, RepError> {
    fn go(n: &Node, ops: &[PolyOperator]) -> Result<PolyOperator, RepError> {
        let Label::Ext(k) = n.label else {
            return mismatch("only trees with numbered vertices act on operators");
        };
        let a = ops
            .get(k as usize - 1)
            .ok_or_else(|| RepError::Mismatch(format!("no operator for vertex {k}")))?;
        let kids = n
            .children
            .iter()
            .map(|c| go(c, ops))
            .collect::<Result<Vec<_>, _>>()?;
        braces(a, &kids)
    }
    if t.arity() as usize != ops.len() {
        return mismatch(format!(
            "tree of arity {} applied to {} operators",
            t.arity(),
            ops.len()
        ));
    }
    go(&t.root, ops)
}

/// The de Rham differential `d(f dx_J) = Σ_k ∂_k f dx_k ∧ dx_J`.
pub fn de_rham(omega: &PolyForm) -> PolyForm {
    let d = omega.dim();
    let mut out = SuperPoly::zero(d);
    for k in 0..d {
        out.add_assign_scaled(&SuperPoly::odd(d, k).mul(&omega.d_x(k)), &rat(1));
    }
    out
}

/// Contraction of a form by a single odd direction: the left derivative in `dx_k`.
fn iota_basic(k: usize, omega: &PolyForm) -> PolyForm {
    omega.d_odd(k)
}

/// Contraction `ι_γ ω`. For `γ = g·ξ_{i_1}⋯ξ_{i_p}` this is `g · ι_{ξ_{i_p}}⋯ι_{ξ_{i_1}} ω`, so
/// `ι_{ab} = ι_b ι_a`.
pub fn contraction(gamma: &PolyVector, omega: &PolyForm) -> Result<PolyForm, RepError> {
    if gamma.dim() != omega.dim() {
        return mismatch("contraction: dimension mismatch");
    }
    let d = gamma.dim();
    let mut out = SuperPoly::zero(d);
    for (m, c) in gamma.iter() {
        let mut w = omega.clone();
        for k in 0..d {
            if m.odd >> k & 1 == 1 {
                w = iota_basic(k, &w);
            }
        }
        let coef = SuperPoly::monomial(
            d,
            Monomial {
                x: m.x.clone(),
                odd: 0,
            },
            c.clone(),
        );
        out.add_assign_scaled(&coef.mul(&w), &rat(1));
    }
    Ok(out)
}

/// Lie derivative `L_γ = [d, ι_γ] = d ι_γ − (−1)^{|γ|} ι_γ d` for homogeneous `γ`.
pub fn lie_derivative(gamma: &PolyVector, omega: &PolyForm) -> Result<PolyForm, RepError> {
    let p = gamma
        .odd_degree()
        .ok_or_else(|| RepError::Invalid("Lie derivative needs a homogeneous polyvector".into()))?;
    let a = de_rham(&contraction(gamma, omega)?);
    let b = contraction(gamma, &de_rham(omega))?;
    Ok(a.sub(&b.scaled(&sign(p % 2 == 1))))
}

/// Action of a Gra1 graph on `(γ_1,…,γ_m; ω)`: the form `η` whose pairing with every `ξ_I`
/// is `ι_{ξ_I} η = (−1)^{|Γ|·Σ|γ_i|} ι_{Γ′(γ_1,…,γ_m,ξ_I,f)} ω_0` in form degree 0, summed over the
/// `ω = f ω_0` summands. `Γ′` is the graph in dGra(m+2) with `out = m+1` and `in = m+2`.
///
/// With these signs `out → in` acts as `d`, the edgeless graph as `ι`, and
/// `act(Γ_1∘Γ_2)(γ_1,γ_2;ω) = (−1)^{e_1e_2 + e_2|γ_1| + |γ_1||γ_2|} act(Γ_1)(γ_1; act(Γ_2)(γ_2;ω))`
/// with `e_i` the edge counts.
pub fn act_gra1(
    g: &SignedGraph,
    gammas: &[PolyVector],
    omega: &PolyForm,
) -> Result<PolyForm, RepError> {
    if g.kind != Kind::Gra1 {
        return mismatch(format!(
            "act_gra1 expects a gra1 graph, got {}",
            g.kind.name()
        ));
    }
    if g.int != 0 {
        return mismatch("act_gra1 acts with graphs without internal vertices");
    }
    if gammas.len() != g.ext as usize {
        return mismatch(format!(
            "graph has {} numbered vertices but {} inputs were given",
            g.ext,
            gammas.len()
        ));
    }
    let d = omega.dim();
    if gammas.iter().any(|p| p.dim() != d) {
        return mismatch("inputs of different dimensions");
    }
    let m = gammas.len();
    let slot = |v: V| match v {
        V::Ext(k) => Ok(k as usize - 1),
        V::Out => Ok(m),
        V::In => Ok(m + 1),
        o => Err(RepError::Invalid(format!(
            "unexpected vertex {o} in a gra1 graph"
        ))),
    };
    let edges = g
        .edges
        .iter()
        .map(|&(a, b)| Ok((slot(a)?, Head::Slot(slot(b)?))))
        .collect::<Result<Vec<_>, RepError>>()?;
    let graph_odd = g.edges.len() % 2 == 1;
    // Split every input into even and odd parts so the Koszul sign is well defined.
    let split: Vec<[SuperPoly; 2]> = gammas
        .iter()
        .map(|p| {
            let mut even = p.clone();
            even.terms.retain(|m| m.odd_degree() % 2 == 0);
            [even.clone(), p.sub(&even)]
        })
        .collect();
    let mut out = SuperPoly::zero(d);
    for choice in 0u64..1 << m {
        let parts: Vec<SuperPoly> = (0..m)
            .map(|i| split[i][(choice >> i & 1) as usize].clone())
            .collect();
        if parts.iter().any(SuperPoly::is_zero) {
            continue;
        }
        let koszul = sign(graph_odd && choice.count_ones() % 2 == 1);
        for (mono, c) in omega.iter() {
            let f = SuperPoly::monomial(
                d,
                Monomial {
                    x: mono.x.clone(),
                    odd: 0,
                },
                c.clone(),
            );
            let omega0 = SuperPoly::odd_monomial(d, mono.odd);
            for mask in 0u64..1 << d {
                let xi_i = SuperPoly::odd_monomial(d, mask);
                let mut inputs = parts.clone();
                inputs.push(xi_i.clone());
                inputs.push(f.clone());
                let mut res = act_engine(&inputs, d, &edges, 0)?;
                let p = res
                    .remove(&Vec::new())
                    .unwrap_or_else(|| SuperPoly::zero(d));
                let rhs = contraction(&p, &omega0)?.odd_part(0);
                if rhs.is_zero() {
                    continue;
                }
                let dx_i = SuperPoly::odd_monomial(d, mask);
                let t = contraction(&xi_i, &dx_i)?.coef(&Monomial::one(d));
                out.add_assign_scaled(&rhs.mul(&dx_i), &(&koszul / t));
            }
        }
    }
    Ok(out)
}

/// Linear extension of [`act_gra1`].
pub fn act_gra1_comb(
    lc: &LinComb<SignedGraph>,
    gammas: &[PolyVector],
    omega: &PolyForm,
) -> Result<PolyForm, RepError> {
    let mut out = SuperPoly::zero(omega.dim());
    for (g, c) in lc.iter() {
        out.add_assign_scaled(&act_gra1(g, gammas, omega)?, c);
    }
    Ok(out)
}

/// The Gra1 graph `out → in`, acting as the de Rham differential.
pub fn gra1_d_graph() -> SignedGraph {
    SignedGraph::new(Kind::Gra1, 0, vec![(V::Out, V::In)])
}

/// The edgeless Gra1 graph with one numbered vertex, acting as the contraction.
pub fn gra1_iota_graph() -> SignedGraph {
    SignedGraph::new(Kind::Gra1, 1, Vec::new())
}

/// Power series in a formal parameter, indexed by order.
pub type Series = Vec<SuperPoly>;

/// Constant bivector components `π^{ij}`, antisymmetric, from `Σ_{i<j} c_{ij} ξ_i ξ_j`.
fn bivector_matrix(pi: &PolyVector) -> Result<Vec<Vec<Rational>>, RepError> {
    if !pi.is_constant_coefficient() || pi.iter().any(|(m, _)| m.odd_degree() != 2) {
        return Err(RepError::Invalid(
            "moyal_star needs a constant bivector".into(),
        ));
    }
    let d = pi.dim();
    let mut p = vec![vec![rat(0); d]; d];
    for (m, c) in pi.iter() {
        let i = m.odd.trailing_zeros() as usize;
        let j = 63 - m.odd.leading_zeros() as usize;
        p[i][j] += c;
        p[j][i] -= c;
    }
    Ok(p)
}

/// Moyal product `f ⋆ g = Σ_{n≤N} εⁿ/(2ⁿ n!) π^{i_1j_1}⋯π^{i_nj_n} ∂_I f ∂_J g` for a constant
/// bivector `π`, as the coefficients of `ε⁰,…,ε^N`.
pub fn moyal_star(
    f: &SuperPoly,
    g: &SuperPoly,
    pi: &PolyVector,
    order: u32,
) -> Result<Series, RepError> {
    if f.dim() != g.dim() || f.dim() != pi.dim() {
        return mismatch("moyal_star: dimension mismatch");
    }
    if order > 3 {
        return Err(RepError::Invalid(
            "moyal_star supports orders up to 3".into(),
        ));
    }
    let d = f.dim();
    let p = bivector_matrix(pi)?;
    let mut cur = f.embed(0, 2).mul(&g.embed(1, 2));
    let mut out = vec![cur.collapse(2)];
    let mut denom = rat(1);
    for n in 1..=order {
        let mut next = SuperPoly::zero(2 * d);
        for (i, row) in p.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                if !c.is_zero() {
                    next.add_assign_scaled(&cur.d_x(i).d_x(d + j), c);
                }
            }
        }
        cur = next;
        denom *= rat(2 * n as i64);
        out.push(cur.collapse(2).scaled(&(rat(1) / &denom)));
    }
    Ok(out)
}

/// Star product from a weight system: `Σ_k ε^k Σ_Γ w_Γ D_Γ(π,…,π)(f,g)`.
pub fn star_from_weights(
    w: &WeightSystem,
    pi: &PolyVector,
    f: &SuperPoly,
    g: &SuperPoly,
) -> Result<Series, RepError> {
    let mut out = Vec::new();
    for k in 0..=w.truncation_order {
        let mut acc = SuperPoly::zero(f.dim());
        for (gr, c) in w.order(k).iter() {
            if gr.typeii != 2 || gr.ext != 0 {
                return mismatch("star products need weight graphs with two type-II vertices");
            }
            let op = act_sgra_filled(gr, &[], Some(pi))?;
            acc.add_assign_scaled(&op.eval(&[f.clone(), g.clone()])?, c);
        }
        out.push(acc);
    }
    Ok(out)
}

/// Truncated product of two series.
fn series_star(
    a: &Series,
    b: &Series,
    order: usize,
    star: &dyn Fn(&SuperPoly, &SuperPoly) -> Result<Series, RepError>,
) -> Result<Series, RepError> {
    let d = a.first().or(b.first()).map(SuperPoly::dim).unwrap_or(1);
    let mut out = vec![SuperPoly::zero(d); order + 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            if i + j > order || x.is_zero() || y.is_zero() {
                continue;
            }
            for (k, z) in star(x, y)?.into_iter().enumerate() {
                if i + j + k <= order {
                    out[i + j + k].add_assign_scaled(&z, &rat(1));
                }
            }
        }
    }
    Ok(out)
}

/// `(f⋆g)⋆h − f⋆(g⋆h)` through `ε^order` for a bilinear star given by its series.
pub fn associator(
    f: &SuperPoly,
    g: &SuperPoly,
    h: &SuperPoly,
    order: usize,
    star: &dyn Fn(&SuperPoly, &SuperPoly) -> Result<Series, RepError>,
) -> Result<Series, RepError> {
    let one = |p: &SuperPoly| vec![p.clone()];
    let left = series_star(
        &series_star(&one(f), &one(g), order, star)?,
        &one(h),
        order,
        star,
    )?;
    let right = series_star(
        &one(f),
        &series_star(&one(g), &one(h), order, star)?,
        order,
        star,
    )?;
    Ok(left.iter().zip(&right).map(|(l, r)| l.sub(r)).collect())
}

/// Orders at which the associator of the weight-system star product is nonzero, on the given
/// test triples.
pub fn star_associativity_failures(
    w: &WeightSystem,
    pi: &PolyVector,
    triples: &[(SuperPoly, SuperPoly, SuperPoly)],
) -> Result<Vec<usize>, RepError> {
    let order = w.truncation_order as usize;
    let star = |a: &SuperPoly, b: &SuperPoly| star_from_weights(w, pi, a, b);
    let mut bad = std::collections::BTreeSet::new();
    for (f, g, h) in triples {
        for (k, r) in associator(f, g, h, order, &star)?.iter().enumerate() {
            if !r.is_zero() {
                bad.insert(k);
            }
        }
    }
    Ok(bad.into_iter().collect())
}

/// `1/(2^k k!)` as used by the Moyal weights.
pub fn moyal_weight(k: u32) -> Rational {
    let mut denom = 1i64;
    for i in 1..=k as i64 {
        denom *= 2 * i;
    }
    frac(1, denom)
}
