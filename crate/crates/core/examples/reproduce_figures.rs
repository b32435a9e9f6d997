//! Every figure and table bundle with its targets and PASS/FAIL status.

use rcw_cim::experiments::{reproduce, ExperimentSetup, Figure};

fn main() -> rcw_cim::Result<()> {
    let setup = ExperimentSetup::default();
    for fig in Figure::ALL {
        for row in reproduce(fig, &setup)? {
            println!("{}", row.summary());
        }
    }
    Ok(())
}
