//! Runs every randomized property experiment and writes a CSV report to stdout.

use martblocks::experiment::{emit_report, run_experiment, ExperimentSpec, Format, Kind};

fn main() -> martblocks::Result<()> {
    for kind in Kind::ALL {
        let report = run_experiment(&ExperimentSpec::new(kind, 50, 1))?;
        let s = &report.summary;
        eprintln!(
            "{kind}: {}/{} passed, max ratio {:?}",
            s.passes, s.trials, s.max_ratio
        );
    }
    let report = run_experiment(&ExperimentSpec::new(Kind::Step2Constant, 5, 1))?;
    emit_report(&report.rows, Format::Csv, std::io::stdout().lock())
}
