#![allow(dead_code)]

pub mod fourier_motzkin;
pub mod random_instances;
pub mod sat_oracle;
