pub mod cli;
pub mod device;
pub mod limc;
pub mod mvl;
pub mod sec;
pub mod seed;
pub mod xbar;
