//! Finite formal sums of basis keys with exact rational coefficients.

use std::collections::BTreeMap;

use num_traits::Zero;

use crate::scalar_linalg::Rational;

/// A linear combination; zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinComb<K: Ord> {
    terms: BTreeMap<K, Rational>,
}

impl<K: Ord> Default for LinComb<K> {
    fn default() -> Self {
        LinComb {
            terms: BTreeMap::new(),
        }
    }
}

impl<K: Ord + Clone> LinComb<K> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn single(k: K, c: Rational) -> Self {
        let mut l = Self::new();
        l.add(k, c);
        l
    }

    pub fn add(&mut self, k: K, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(k) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    /// `self += c * other`.
    pub fn add_scaled(&mut self, other: &LinComb<K>, c: &Rational) {
        if c.is_zero() {
            return;
        }
        for (k, v) in &other.terms {
            self.add(k.clone(), v * c);
        }
    }

    pub fn scaled(&self, c: &Rational) -> Self {
        let mut out = Self::new();
        out.add_scaled(self, c);
        out
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn coef(&self, k: &K) -> Rational {
        self.terms.get(k).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, &Rational)> {
        self.terms.iter()
    }

    pub fn keys(&self) -> impl Iterator<Item = &K> {
        self.terms.keys()
    }

    pub fn into_terms(self) -> BTreeMap<K, Rational> {
        self.terms
    }

    /// Applies a linear map given on basis keys.
    pub fn map_linear<K2: Ord + Clone>(&self, mut f: impl FnMut(&K) -> LinComb<K2>) -> LinComb<K2> {
        let mut out = LinComb::new();
        for (k, c) in &self.terms {
            out.add_scaled(&f(k), c);
        }
        out
    }

    pub fn retain(&mut self, mut keep: impl FnMut(&K) -> bool) {
        self.terms.retain(|k, _| keep(k));
    }
}

impl<K: Ord + Clone> FromIterator<(K, Rational)> for LinComb<K> {
    fn from_iter<I: IntoIterator<Item = (K, Rational)>>(iter: I) -> Self {
        let mut l = Self::new();
        for (k, c) in iter {
            l.add(k, c);
        }
        l
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar_linalg::{frac, rat};

    #[test]
    fn cancellation_drops_keys() {
        let mut a = LinComb::single("x", rat(2));
        a.add("y", frac(1, 2));
        let b = a.clone();
        a.add_scaled(&b, &rat(-1));
        assert!(a.is_empty());
    }

    #[test]
    fn zero_scale_is_identity() {
        let a = LinComb::single(1u8, rat(3));
        let mut c = a.clone();
        c.add_scaled(&LinComb::single(2u8, rat(5)), &rat(0));
        assert_eq!(a, c);
    }
}
