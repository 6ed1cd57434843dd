pub mod assignment;
pub mod cli;
pub mod feasibility;
pub mod graph;
pub mod instance;
pub mod oracle;
pub mod ordering;
pub mod planner;
