//! Scenario files, CSV output and SVG plots.

mod csv_out;
mod plot;
mod scenario;

pub use csv_out::{
    fmt_f64, to_file, write_agents_csv, write_certificates_csv, write_edges_csv, write_observer_csv, write_pe_csv, AGENT_COLUMNS, CERTIFICATE_COLUMNS, EDGE_COLUMNS,
    OBSERVER_COLUMNS, PE_COLUMNS,
};
pub use plot::{render_line_plot, render_trajectory_plot, write_svg, Path3, PlotSpec, Series};
pub use scenario::{parse_scenario, parse_scenario_str, write_scenario, ObserverSettings, PeSettings, ScenarioFile};
