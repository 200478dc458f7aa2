//! Variable declarations and ordered variable spaces.
//!
//! Every symbolic value in the crate lives over a [`VarSpace`]: an ordered,
//! append-only list of named variables. The declaration order fixes the
//! monomial order (graded lexicographic), so two structurally equal
//! expressions over the same space have identical representations.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Index of a variable inside its `VarSpace`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub u32);

impl VarId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Role of a variable. Fixed at declaration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarKind {
    /// Independent direction of the connection (e.g. `x`).
    Base,
    /// Parameter held constant along base flows (e.g. `alpha`, `a1`).
    Param,
    /// Fiber coordinate, an order-0 jet (e.g. `w`, `u11`).
    Fiber,
    /// Higher-order jet coordinate (e.g. `w_ab`).
    Jet,
    /// Auxiliary symbol (e.g. integration constants `mu0`).
    Aux,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Var {
    pub name: String,
    pub kind: VarKind,
}

/// Ordered set of declared variables. Names are unique.
#[derive(Debug, Default, Clone)]
pub struct VarSpace {
    vars: Vec<Var>,
    by_name: HashMap<String, VarId>,
}

impl PartialEq for VarSpace {
    fn eq(&self, other: &Self) -> bool {
        self.vars == other.vars
    }
}
impl Eq for VarSpace {}

impl VarSpace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn declare(&mut self, name: &str, kind: VarKind) -> Result<VarId> {
        if self.by_name.contains_key(name) {
            return Err(Error::DuplicateVariable(name.to_string()));
        }
        let id = VarId(self.vars.len() as u32);
        self.vars.push(Var {
            name: name.to_string(),
            kind,
        });
        self.by_name.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn declare_all(&mut self, names: &[&str], kind: VarKind) -> Result<Vec<VarId>> {
        names.iter().map(|n| self.declare(n, kind)).collect()
    }

    pub fn lookup(&self, name: &str) -> Option<VarId> {
        self.by_name.get(name).copied()
    }

    pub fn var(&self, id: VarId) -> &Var {
        &self.vars[id.index()]
    }

    pub fn name(&self, id: VarId) -> &str {
        &self.vars[id.index()].name
    }

    pub fn kind(&self, id: VarId) -> VarKind {
        self.vars[id.index()].kind
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = VarId> + '_ {
        (0..self.vars.len()).map(|i| VarId(i as u32))
    }

    pub fn ids_of_kind(&self, kind: VarKind) -> Vec<VarId> {
        self.ids().filter(|&id| self.kind(id) == kind).collect()
    }

    /// A new space with the same variables plus `extra` appended.
    pub fn extended(&self, extra: &[(String, VarKind)]) -> Result<VarSpace> {
        let mut out = self.clone();
        for (name, kind) in extra {
            out.declare(name, *kind)?;
        }
        Ok(out)
    }

    /// True if `self`'s variables are an initial segment of `other`'s.
    pub fn is_prefix_of(&self, other: &VarSpace) -> bool {
        self.vars.len() <= other.vars.len() && self.vars[..] == other.vars[..self.vars.len()]
    }
}

/// Align two spaces for a binary operation: returns the larger space if one
/// is a prefix-extension of the other.
pub fn common_space(a: &Arc<VarSpace>, b: &Arc<VarSpace>) -> Arc<VarSpace> {
    if Arc::ptr_eq(a, b) {
        return a.clone();
    }
    if a.len() >= b.len() {
        assert!(
            b.is_prefix_of(a),
            "incompatible variable spaces: {:?} vs {:?}",
            b, a
        );
        a.clone()
    } else {
        assert!(
            a.is_prefix_of(b),
            "incompatible variable spaces: {:?} vs {:?}",
            a, b
        );
        b.clone()
    }
}
