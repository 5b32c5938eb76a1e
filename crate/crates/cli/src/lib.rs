//! Configuration, dispatch and CSV output for the `irs-sim` command.

pub mod config;
pub mod run;
pub mod selfcheck;

use irs_core::analysis::{eta, eta_db, mean_phase_factor};

/// Text table of the closed-form quantization loss for `bits`.
pub fn eta_table(bits: &[u32]) -> String {
    let mut out = format!("{:>4}  {:>10}  {:>10}  {:>10}\n", "b", "E[e^jdθ]", "eta", "eta [dB]");
    for &b in bits {
        out.push_str(&format!("{b:>4}  {:>10.6}  {:>10.6}  {:>10.4}\n", mean_phase_factor(b), eta(b), eta_db(b)));
    }
    out
}
