//! Named parameter storage shared by all model modules.

use std::collections::BTreeMap;

use crate::scalar::Scalar;
use crate::tensor::Tensor;

pub struct ParamEntry<E: Scalar> {
    pub value: Tensor<E>,
    /// Trainable entries receive gradients; the rest are buffers
    /// (batch-norm running statistics).
    pub trainable: bool,
}

/// Flat map from dotted path names ("backbone.stack2.conv0.weight") to
/// tensors. Iteration order is the sorted name order, which keeps
/// checkpoints and optimizer traversal deterministic.
pub struct ParamStore<E: Scalar> {
    entries: BTreeMap<String, ParamEntry<E>>,
}

impl<E: Scalar> Default for ParamStore<E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<E: Scalar> ParamStore<E> {
    pub fn new() -> Self {
        ParamStore {
            entries: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, name: &str, value: Tensor<E>, trainable: bool) {
        let prev = self.entries.insert(
            name.to_string(),
            ParamEntry { value, trainable },
        );
        assert!(prev.is_none(), "duplicate parameter {name}");
    }

    pub fn entry(&self, name: &str) -> &ParamEntry<E> {
        self.entries
            .get(name)
            .unwrap_or_else(|| panic!("unknown parameter {name}"))
    }

    pub fn get(&self, name: &str) -> &Tensor<E> {
        &self.entry(name).value
    }

    pub fn get_mut(&mut self, name: &str) -> &mut Tensor<E> {
        &mut self
            .entries
            .get_mut(name)
            .unwrap_or_else(|| panic!("unknown parameter {name}"))
            .value
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(|s| s.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &ParamEntry<E>)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Names under a dotted prefix ("decoder." matches "decoder.gru.w_x").
    pub fn names_with_prefix<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a str> {
        self.entries
            .keys()
            .filter(move |k| k.starts_with(prefix))
            .map(|s| s.as_str())
    }
}
