use deom_core::bath::{matsubara_expansion, pade_expansion, ScalarFamily, SpectralDensitySpec};
use deom_core::frames::{FrameTrajectory, RotationSpec, TranslationSpec};
use deom_core::hierarchy::{initial_hierarchy, propagate_trajectory, Dynamics, PropagateOptions};
use deom_core::model::{FieldFrameMode, Pauli, SystemModel};
use deom_core::observables::reduced_density;
use deom_core::operators::{Operator, C64};
use deom_core::oracles::{closed_system_oracle, gibbs_oracle, pure_dephasing_oracle, DephasingKernel};
use nalgebra::Vector3;

fn plus_state(model: &SystemModel) -> Operator {
    let s = C64::new(0.5f64.sqrt(), 0.0);
    Operator::pure_state(&model.basis, &[s, s]).unwrap()
}

#[test]
fn hierarchy_reproduces_pure_dephasing() {
    let model = SystemModel::two_level(1.0, 0.0, 1.0, 1.0, &[(2, Pauli::Z)]).unwrap();
    let spec = SpectralDensitySpec::Isotropic(ScalarFamily::Drude { lambda: 0.1, gamma: 1.0 });
    let exp = pade_expansion(&spec, 1.0, 2).unwrap();
    let rho0 = plus_state(&model);
    let dynamics = Dynamics::new(model, FrameTrajectory::inertial(), FieldFrameMode::Static, exp.clone(), None).unwrap();
    let mut state = initial_hierarchy(&rho0, dynamics.catalog(10, None).unwrap()).unwrap();
    let opts = PropagateOptions { stride: 50, ..Default::default() };
    let traj = propagate_trajectory(&dynamics, &mut state, 5.0, 0.01, &opts).unwrap();
    let times: Vec<f64> = traj.iter().map(|s| s.time()).collect();
    let oracle = pure_dephasing_oracle(1.0, 1.0, DephasingKernel::Expansion(&exp), &rho0, &times).unwrap();
    let got: Vec<_> = traj.iter().map(|s| reduced_density(s).into_matrix()).collect();
    let dev = oracle.max_deviation(&got);
    assert!(dev < 1e-6, "deviation {dev}");
}

#[test]
fn dephasing_rate_scales_with_charge_squared() {
    // Q_z = (e/m) σ_z
    let spec = SpectralDensitySpec::Isotropic(ScalarFamily::Drude { lambda: 0.1, gamma: 1.0 });
    let exp = matsubara_expansion(&spec, 1.0, 3).unwrap();
    let model = SystemModel::two_level(1.0, 0.0, 2.0, 1.2, &[(2, Pauli::Z)]).unwrap();
    let rho0 = plus_state(&model);
    let dynamics = Dynamics::new(model, FrameTrajectory::inertial(), FieldFrameMode::Static, exp.clone(), None).unwrap();
    let mut state = initial_hierarchy(&rho0, dynamics.catalog(5, None).unwrap()).unwrap();
    let traj = propagate_trajectory(&dynamics, &mut state, 4.0, 0.01, &PropagateOptions { stride: 100, ..Default::default() }).unwrap();
    let times: Vec<f64> = traj.iter().map(|s| s.time()).collect();
    let oracle = pure_dephasing_oracle(1.0, 0.6, DephasingKernel::Expansion(&exp), &rho0, &times).unwrap();
    let got: Vec<_> = traj.iter().map(|s| reduced_density(s).into_matrix()).collect();
    assert!(oracle.max_deviation(&got) < 1e-6);
}

#[test]
fn uncoupled_rotating_ring_matches_unitary() {
    let model = SystemModel::ring(3, 1.0, 1.0, 0.0, 0.2).unwrap();
    let frame = FrameTrajectory::rotating(Vector3::z(), 0.3).unwrap();
    let spec = SpectralDensitySpec::Isotropic(ScalarFamily::Drude { lambda: 0.5, gamma: 1.0 });
    let exp = pade_expansion(&spec, 1.0, 2).unwrap();
    let d = model.basis.dim();
    let amp: Vec<C64> = (0..d).map(|k| C64::new(1.0 + k as f64, 0.5 * k as f64)).collect();
    let norm = amp.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    let amp: Vec<C64> = amp.iter().map(|a| a / norm).collect();
    let rho0 = Operator::pure_state(&model.basis, &amp).unwrap();
    let dynamics = Dynamics::new(model.clone(), frame.clone(), FieldFrameMode::Static, exp, None).unwrap();
    let mut state = initial_hierarchy(&rho0, dynamics.catalog(2, None).unwrap()).unwrap();
    let traj = propagate_trajectory(&dynamics, &mut state, 3.0, 1e-3, &PropagateOptions { stride: 1000, ..Default::default() }).unwrap();
    let times: Vec<f64> = traj.iter().map(|s| s.time()).collect();
    let oracle = closed_system_oracle(&model, &frame, &rho0, &times).unwrap();
    let got: Vec<_> = traj.iter().map(|s| reduced_density(s).into_matrix()).collect();
    assert!(oracle.max_deviation(&got) < 1e-8);
}

#[test]
fn uncoupled_time_dependent_frame_matches_product_formula() {
    let model = SystemModel::oscillator(6, 1.0, 1.0, 0.0).unwrap();
    let frame = FrameTrajectory::new(
        RotationSpec::None,
        TranslationSpec::Callback { path: std::sync::Arc::new(|t: f64| Vector3::new(0.3 * t.sin(), 0.0, 0.0)), step: 1e-3 },
    )
    .unwrap();
    let spec = SpectralDensitySpec::Isotropic(ScalarFamily::Drude { lambda: 0.5, gamma: 1.0 });
    let exp = pade_expansion(&spec, 1.0, 1).unwrap();
    let d = model.basis.dim();
    let diag: Vec<f64> = (0..d).map(|k| if k == 0 { 1.0 } else { 0.0 }).collect();
    let rho0 = Operator::from_real_diagonal(&model.basis, &diag).unwrap();
    let dynamics = Dynamics::new(model.clone(), frame.clone(), FieldFrameMode::Static, exp, Some(vec![0])).unwrap();
    let mut state = initial_hierarchy(&rho0, dynamics.catalog(1, None).unwrap()).unwrap();
    let traj = propagate_trajectory(&dynamics, &mut state, 2.0, 1e-3, &PropagateOptions { stride: 500, ..Default::default() }).unwrap();
    let times: Vec<f64> = traj.iter().map(|s| s.time()).collect();
    let oracle = closed_system_oracle(&model, &frame, &rho0, &times).unwrap();
    let got: Vec<_> = traj.iter().map(|s| reduced_density(s).into_matrix()).collect();
    let dev = oracle.max_deviation(&got);
    // midpoint product at step 1e-4 carries an O(h²) error of its own
    assert!(dev < 1e-6, "deviation {dev}");
    assert!(got.last().unwrap()[(1, 1)].re > 1e-3, "the drive should excite the oscillator");
}

#[test]
fn weak_coupling_relaxes_towards_gibbs() {
    let model = SystemModel::two_level(1.0, 0.0, 1.0, 1.0, &[(0, Pauli::X)]).unwrap();
    let spec = SpectralDensitySpec::Isotropic(ScalarFamily::Drude { lambda: 0.05, gamma: 1.0 });
    let exp = pade_expansion(&spec, 1.0, 2).unwrap();
    let b = Operator::from_real_diagonal(&model.basis, &[0.0, 1.0]).unwrap();
    let h = model.bare_hamiltonian();
    let dynamics = Dynamics::new(model, FrameTrajectory::inertial(), FieldFrameMode::Static, exp, None).unwrap();
    let mut state = initial_hierarchy(&b, dynamics.catalog(4, None).unwrap()).unwrap();
    let traj = propagate_trajectory(&dynamics, &mut state, 60.0, 0.02, &PropagateOptions { stride: 3000, ..Default::default() }).unwrap();
    let g = gibbs_oracle(&h, 1.0).unwrap();
    let last = traj.last().unwrap().raw(0);
    let rel = ((last[(0, 0)].re - g.matrix()[(0, 0)].re) / g.matrix()[(0, 0)].re).abs();
    assert!(rel < 0.05, "relative deviation {rel}");
}
