//! Named exact comparisons, so reports can list what was verified and by how much.

use alloc::string::String;

use crate::rational::Q;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    AtMost,
    Below,
    Equal,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Check {
    pub name: String,
    pub lhs: Q,
    pub rhs: Q,
    pub relation: Relation,
}

impl Check {
    pub fn at_most(name: impl Into<String>, lhs: Q, rhs: Q) -> Self {
        Self {
            name: name.into(),
            lhs,
            rhs,
            relation: Relation::AtMost,
        }
    }

    pub fn below(name: impl Into<String>, lhs: Q, rhs: Q) -> Self {
        Self {
            name: name.into(),
            lhs,
            rhs,
            relation: Relation::Below,
        }
    }

    pub fn equal(name: impl Into<String>, lhs: Q, rhs: Q) -> Self {
        Self {
            name: name.into(),
            lhs,
            rhs,
            relation: Relation::Equal,
        }
    }

    pub fn holds(&self) -> bool {
        match self.relation {
            Relation::AtMost => self.lhs <= self.rhs,
            Relation::Below => self.lhs < self.rhs,
            Relation::Equal => self.lhs == self.rhs,
        }
    }

    /// `rhs - lhs`; negative means violated.
    pub fn margin(&self) -> Q {
        &self.rhs - &self.lhs
    }
}
