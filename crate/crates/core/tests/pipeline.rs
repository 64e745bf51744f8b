use std::f64::consts::PI;

use ddsynth_core::cost_functions::{cost_dephasing, DephasingSpec};
use ddsynth_core::evaluator::{error_sweep, evolve, gate_fidelity, trace_fidelity, ErrorAxis, SimulatedSystem};
use ddsynth_core::linalg::DenseOperator;
use ddsynth_core::modulation::{FrameOrdering, ModulationMatrix};
use ddsynth_core::optimizer::{gradient_fd, DephasingObjective, FrameSettings, Objective};
use ddsynth_core::reference::{make_qdd, make_udd, SequenceBudget};
use ddsynth_core::waveform::{tables, Drive, FourierWaveform};
use rand::{Rng, SeedableRng};

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[test]
fn cycles_compose_for_closed_frames() {
    let sys = SimulatedSystem::build_dipolar_chain(3, 1.0).unwrap();
    let w = tables::dipolar(1.0);
    let one = evolve(&sys, &w, 1).unwrap();
    let two = evolve(&sys, &w, 2).unwrap();
    assert!(two.max_abs_diff(&(&one * &one)) < 1e-8);
}

#[test]
fn reference_dipolar_beats_free_chain() {
    let sys = SimulatedSystem::build_dipolar_chain(4, 1.0).unwrap();
    let id = DenseOperator::identity(16);
    let driven = trace_fidelity(&evolve(&sys, &tables::dipolar(1.0), 1).unwrap(), &id).unwrap();
    let free = trace_fidelity(&evolve(&sys, &FourierWaveform::zero(1.0, 1), 1).unwrap(), &id).unwrap();
    assert!(driven > free, "{driven} vs {free}");
}

#[test]
fn pulse_families_peak_at_zero_flip_error() {
    let sys = SimulatedSystem::build_reference_dephasing(1.0).unwrap();
    let udd = make_udd(12, 1.0, &SequenceBudget::new(12.0 * PI, 20.0).unwrap()).unwrap();
    let qdd = make_qdd(3, 1.0, &SequenceBudget::new(16.0 * PI, 22.0).unwrap()).unwrap();
    let seqs: Vec<(&str, &dyn Drive)> = vec![("udd", &udd), ("qdd", &qdd)];
    let grid = [-0.04, -0.02, 0.0, 0.02, 0.04];
    let rows = error_sweep(&sys, &seqs, ErrorAxis::FlipAngle, &grid, 1).unwrap();
    for label in ["udd", "qdd"] {
        let f: Vec<f64> = rows.iter().filter(|r| r.label == label).map(|r| r.fidelity).collect();
        let best = f.iter().cloned().fold(f64::MIN, f64::max);
        assert_eq!(f[2], best, "{label}: {f:?}");
    }
}

#[test]
fn reference_dephasing_is_near_stationary_in_its_own_frame() {
    // the reference dephasing waveform is a zeroth-order optimum when frames follow dU/dt = iVU
    let frame = FrameSettings { ordering: FrameOrdering::Literal, steps: 2048, ..Default::default() };
    let obj = DephasingObjective { spec: DephasingSpec::default(), frame };
    let f = |z: &[f64]| obj.evaluate(z).map(|e| e.total(0.0));
    let table = tables::dephasing(1.0).params();
    let g_table = norm(&gradient_fd(&f, &table, 1e-4).unwrap());
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let mut smaller = 0;
    for _ in 0..4 {
        let z: Vec<f64> = table.iter().map(|v| v + rng.random_range(-1.0..1.0)).collect();
        if g_table < norm(&gradient_fd(&f, &z, 1e-4).unwrap()) {
            smaller += 1;
        }
    }
    assert_eq!(smaller, 4, "gradient norm at table {g_table:e}");
}

#[test]
fn low_cost_predicts_high_fidelity() {
    // a weak x drive barely modulates the z coupling
    let sys = SimulatedSystem::build_reference_dephasing(1.0).unwrap();
    let spec = DephasingSpec { g: None, ..Default::default() };
    let eval = |w: &FourierWaveform| {
        let m = ModulationMatrix::from_drive(w, 2048, FrameOrdering::Interaction).unwrap();
        let cost = cost_dephasing(&m, w, &spec, 0.0).unwrap().rms();
        let fid = gate_fidelity(&evolve(&sys, w, 1).unwrap(), 4).unwrap();
        (cost, fid)
    };
    let weak = FourierWaveform::new(1.0, vec![0.3], vec![0.0]).unwrap();
    let (c_weak, f_weak) = eval(&weak);
    let (c_table, f_table) = eval(&tables::dephasing(1.0));
    assert!(c_table < c_weak && f_table > f_weak, "{c_table} {f_table} / {c_weak} {f_weak}");
}
