//! Hardy operators on dyadic trees and bi-trees, verifiers for the Carleson
//! embedding lemmas, exact counterexample generators and a bi-tree capacity
//! solver.

pub mod capacity;
pub mod cex;
pub mod error;
pub mod experiment;
pub mod hardy;
pub mod lemmas;
pub mod node;
pub mod random;
pub mod report;
pub mod scalar;
pub mod sparse;
pub mod structure;
pub mod suites;

pub use error::{Error, Result};
pub use hardy::{energy, eval_hardy_down, eval_hardy_up, potential, PointMeasure};
pub use node::{BiNode, BiTreeDomain, DomainKind, Node, NodeAddress, TreeDomain};
pub use report::LemmaReport;
pub use scalar::{Mode, Scalar, ScalarValue};
pub use sparse::SparseFn;
