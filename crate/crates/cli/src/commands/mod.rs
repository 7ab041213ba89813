pub mod baselines;
pub mod rescore;
pub mod simulate;
pub mod truncate;
