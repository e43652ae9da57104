//! Experience-based planning: learn activity schemata from solved problems,
//! infer their scope of applicability with canonical abstraction, retrieve
//! an applicable schema for a new problem and refine its plan to concrete
//! actions.

pub mod domains;
pub mod learner;
pub mod logic;
pub mod loops;
pub mod model;
pub mod parser;
pub mod planner;
pub mod scope;
pub mod sexpr;

pub use logic::{LogicalStructure, NodeClass, TruthValue, Valence};
pub use model::*;
pub use parser::{parse_any, Document, ParseError, ParseErrorKind};
