pub mod demo;
pub mod exploit;
pub mod matches;
pub mod offtree;
pub mod resolve;
pub mod train;
pub mod values;
