//! The four evolved heuristics.

mod blind_medium_2;
mod blind_medium_conf;
mod blind_none_3;
mod ff_none_3;

pub use blind_medium_2::BlindMedium2;
pub use blind_medium_conf::BlindMediumConf;
pub use blind_none_3::{BlindNone3, WeightedDtgTables};
pub use ff_none_3::FfNone3;
