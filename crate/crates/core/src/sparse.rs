//! Finitely supported non-negative functions on tree or bi-tree nodes.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::node::{DomainKind, Node};
use crate::scalar::{Mode, Scalar};

/// A non-negative function with finite support. Absent nodes read as zero
/// and zero values are never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseFn<N, S> {
    entries: BTreeMap<N, S>,
}

impl<N: Node, S: Scalar> Default for SparseFn<N, S> {
    fn default() -> Self {
        Self::new()
    }
}

impl<N: Node, S: Scalar> SparseFn<N, S> {
    pub fn new() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }

    /// Unit mass at the root.
    pub fn unit_root() -> Self {
        let mut f = Self::new();
        f.entries.insert(N::root(), S::one());
        f
    }

    pub fn delta(node: N, value: S) -> Result<Self> {
        let mut f = Self::new();
        f.set(node, value)?;
        Ok(f)
    }

    pub fn from_pairs<I: IntoIterator<Item = (N, S)>>(pairs: I) -> Result<Self> {
        let mut f = Self::new();
        for (n, v) in pairs {
            f.set(n, v)?;
        }
        Ok(f)
    }

    pub fn kind(&self) -> DomainKind {
        N::KIND
    }

    pub fn mode(&self) -> Mode {
        S::MODE
    }

    pub fn get(&self, n: &N) -> S {
        self.entries.get(n).cloned().unwrap_or_else(S::zero)
    }

    pub fn get_ref(&self, n: &N) -> Option<&S> {
        self.entries.get(n)
    }

    /// Sets `f(n) = v`; rejects negative values and erases zeros.
    pub fn set(&mut self, n: N, v: S) -> Result<()> {
        if v < S::zero() {
            return Err(Error::NegativeValue {
                node: n.to_string(),
                value: v.to_value().to_string(),
            });
        }
        if v.is_zero() {
            self.entries.remove(&n);
        } else {
            self.entries.insert(n, v);
        }
        Ok(())
    }

    pub fn add(&mut self, n: N, v: S) -> Result<()> {
        let cur = self.get(&n);
        self.set(n, cur + v)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&N, &S)> {
        self.entries.iter()
    }

    pub fn support(&self) -> impl Iterator<Item = &N> {
        self.entries.keys()
    }

    pub fn contains(&self, n: &N) -> bool {
        self.entries.contains_key(n)
    }

    pub fn check_domain(&self, d: &N::Domain) -> Result<()> {
        self.support().try_for_each(|n| n.check_domain(d))
    }

    pub fn sum(&self) -> S {
        self.entries.values().cloned().fold(S::zero(), |a, b| a + b)
    }

    pub fn max_value(&self) -> S {
        self.entries.values().cloned().fold(S::zero(), S::max_of)
    }

    /// Pointwise `f^p`.
    pub fn pow(&self, p: f64) -> Result<Self> {
        let mut out = Self::new();
        for (n, v) in &self.entries {
            out.set(n.clone(), v.powf(p)?)?;
        }
        Ok(out)
    }

    pub fn scale(&self, t: &S) -> Result<Self> {
        let mut out = Self::new();
        for (n, v) in &self.entries {
            out.set(n.clone(), v.clone() * t.clone())?;
        }
        Ok(out)
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Self) -> Self {
        let (small, big) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        let entries = small
            .entries
            .iter()
            .filter_map(|(n, v)| big.entries.get(n).map(|w| (n.clone(), v.clone() * w.clone())))
            .filter(|(_, v)| !v.is_zero())
            .collect();
        Self { entries }
    }

    /// Pointwise sum.
    pub fn plus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (n, v) in &other.entries {
            let cur = out.get(n);
            out.entries.insert(n.clone(), cur + v.clone());
        }
        out
    }

    /// Keeps only the entries whose node satisfies `keep`.
    pub fn restrict<F: FnMut(&N) -> bool>(&self, mut keep: F) -> Self {
        Self {
            entries: self
                .entries
                .iter()
                .filter(|(n, _)| keep(n))
                .map(|(n, v)| (n.clone(), v.clone()))
                .collect(),
        }
    }

    pub fn into_map(self) -> BTreeMap<N, S> {
        self.entries
    }

    pub fn as_map(&self) -> &BTreeMap<N, S> {
        &self.entries
    }

    /// Builds from a map whose values are already known to be non-negative.
    pub(crate) fn from_map_unchecked(mut entries: BTreeMap<N, S>) -> Self {
        entries.retain(|_, v| !v.is_zero());
        debug_assert!(entries.values().all(|v| *v >= S::zero()));
        Self { entries }
    }

    pub fn to_f64(&self) -> SparseFn<N, f64> {
        SparseFn {
            entries: self
                .entries
                .iter()
                .map(|(n, v)| (n.clone(), v.to_f64()))
                .collect(),
        }
    }
}
