//! Verification toolkit for adaptable processes and for choreographies with
//! dynamic updates.

pub mod automaton;
pub mod choreo;
pub mod logic;
pub mod orch;
pub mod process;
pub mod syntax;
pub mod update;
pub mod verdict;
pub mod lts;
pub mod verify;
pub mod connectedness;
