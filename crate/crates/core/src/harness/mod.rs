//! JSON configuration, the `simulate` / `verify` / `constants` runs and
//! their report files.

mod config;
mod report;
mod run;

pub use config::{
    load_config, parse_config, BForm, ConstantsBlock, DiagnosticsBlock, GridBlock, InitialBlock, KernelBlock, LoadedConfig, MaxwellianBlock, RunConfig,
    VerifyBlock,
};
pub use report::{
    write_json, Manifest, RunStatus, SeriesRow, SeriesWriter, CONSTANTS_FILE, MANIFEST_FILE, RECORDS_FILE, SERIES_FILE, SERIES_HEADER,
};
pub use run::{
    constants_table, decay_records, n1_records, n2_records, ray_records, run_constants, run_simulate, run_verify, ConstantsTable, GInfinityRow,
    RejectedRow, RunOutcome, Tally, EXIT_ERROR, EXIT_FAIL, EXIT_INCONCLUSIVE, EXIT_OK,
};
