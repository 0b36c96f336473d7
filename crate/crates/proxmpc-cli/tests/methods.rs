//! Behavioral differences between the proposed and conventional methods.

use proxmpc_cli::{run_experiment, ExperimentConfig, Method};

fn conventional(epsilon: f64, sim_steps: usize) -> ExperimentConfig {
    ExperimentConfig {
        method: Method::Conventional,
        epsilon: Some(epsilon),
        sim_steps,
        ..Default::default()
    }
}

/// The smoothed stationarity rows cannot produce exact zeros: while the state
/// is still being driven (t < 10 s) every input channel stays strictly away
/// from zero.
#[test]
fn conventional_inputs_never_exactly_zero_early() {
    let trace = run_experiment(&conventional(1e-2, 200)).unwrap();
    for record in &trace.records {
        if record.time < 10.0 {
            for (i, u) in record.input.iter().enumerate() {
                assert!(
                    u.abs() > 1e-6,
                    "u{} = {u:.3e} at t = {:.2}",
                    i + 1,
                    record.time
                );
            }
        }
    }
}

/// Tighter smoothing pushes the off-interval inputs closer to zero: the
/// largest input magnitude over t in [10, 20] shrinks as epsilon shrinks.
#[test]
fn smaller_epsilon_yields_smaller_off_interval_inputs() {
    let coarse = run_experiment(&conventional(1e-1, 400)).unwrap();
    let fine = run_experiment(&conventional(1e-2, 400)).unwrap();
    let tail_max = |trace: &proxmpc::SimTrace| {
        trace
            .records
            .iter()
            .filter(|r| r.time >= 10.0)
            .map(|r| r.input.amax())
            .fold(0.0f64, f64::max)
    };
    let coarse_max = tail_max(&coarse);
    let fine_max = tail_max(&fine);
    assert!(
        fine_max < coarse_max,
        "epsilon 1e-2 tail max {fine_max:.3e} vs epsilon 1e-1 tail max {coarse_max:.3e}"
    );
}
