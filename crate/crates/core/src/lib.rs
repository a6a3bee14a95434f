pub mod audit;
pub mod belief;
pub mod credal;
pub mod error;
pub mod lp;
pub mod measure;
pub mod rational;
pub mod rules;
