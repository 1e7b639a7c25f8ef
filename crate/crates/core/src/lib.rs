//! Verification condition generation and checking for annotated sequential
//! hybrid programs.

pub mod backend;
pub mod corpus;
pub mod expr;
pub mod labels;
pub mod odesolve;
pub mod parser;
pub mod report;
pub mod sim;
pub mod vcgen;
