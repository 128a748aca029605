//! File formats: line lists, distribution specs, power configs and reports.

mod distribution;
mod linelist;
mod power_config;
mod report;

pub use distribution::{format_distribution, parse_distribution};
pub use linelist::{parse_line_list, read_line_list, write_line_list, LineList, LINE_LIST_HEADER};
pub use power_config::PowerConfig;
pub use report::{DistributionEcho, FitEcho, SimulationTruth, TestConfigEcho, TestReport, SCHEMA_VERSION};
