//! Slow, obviously-correct reference implementations and input generators
//! for testing `tabqa-core`. Nothing here shares code with the algorithms
//! under test; only data types are borrowed.

pub mod chrf;
pub mod generate;
pub mod llm;
pub mod ted;
