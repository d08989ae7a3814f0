//! Acceptance suite: one pass/fail line per criterion.

use std::fs;
use std::ops::ControlFlow;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use nalgebra::{DMatrix, Matrix3, Vector3};
use num_complex::Complex64;
use serde_json::json;

use deom_core::bath::{
    fit_report, fit_report_at, matsubara_expansion, pade_expansion, time_reversal_consistent, validate_symmetry, BathExpansion,
    CavityMode, ScalarFamily, SpectralDensitySpec, SpectralTerm,
};
use deom_core::frames::{rotation_at, FrameTrajectory, RotationSegment, RotationSpec, TranslationSpec};
use deom_core::hierarchy::{initial_hierarchy, propagate, Dynamics, HierarchyState, PropagateOptions};
use deom_core::model::{
    coupling_operators_at, system_hamiltonian_at, verify_transformation_identities, FieldFrameMode, Pauli, SystemModel,
};
use deom_core::observables::{reduced_density, trace_drift};
use deom_core::operators::{CMatrix, Operator};
use deom_core::oracles::{closed_system_oracle, gibbs_oracle, pure_dephasing_oracle, DephasingKernel};

type C64 = Complex64;

/// Criteria that cannot hold as stated; they still print FAIL but do not
/// change the exit status. The reason is printed with the line.
const KNOWN_UNATTAINABLE: &[u32] = &[2];

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn drude(lambda: f64, gamma: f64) -> SpectralDensitySpec {
    SpectralDensitySpec::Isotropic(ScalarFamily::Drude { lambda, gamma })
}

fn lorentzian() -> ScalarFamily {
    ScalarFamily::LorentzianMode { lambda: 0.2, omega0: 1.5, gamma: 0.3 }
}

fn composite() -> SpectralDensitySpec {
    let w1 = Matrix3::new(1.0, 0.4, 0.0, 0.4, 0.5, 0.0, 0.0, 0.0, 0.2);
    let w2 = Matrix3::new(0.3, 0.0, 0.1, 0.0, 0.0, 0.0, 0.1, 0.0, 0.6);
    SpectralDensitySpec::Matrix(vec![
        SpectralTerm { family: ScalarFamily::Drude { lambda: 0.3, gamma: 1.2 }, weight: w1 },
        SpectralTerm { family: lorentzian(), weight: w2 },
    ])
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn evolve(d: &Dynamics, rho0: &Operator, tier: usize, t_end: f64, dt: f64, stride: u64) -> Vec<HierarchyState> {
    let mut s = initial_hierarchy(rho0, d.catalog(tier, None).unwrap()).unwrap();
    let mut out = Vec::new();
    let opts = PropagateOptions { stride, ..Default::default() };
    propagate(d, &mut s, t_end, dt, &opts, |s, snap| {
        if snap {
            out.push(s.clone());
        }
        ControlFlow::Continue(())
    })
    .unwrap();
    out
}

fn c1_spectral_symmetry() -> Outcome {
    let grid: Vec<f64> = (0..1000).map(|k| k as f64 * 0.02).collect();
    let specs = [
        ("drude", drude(0.5, 1.0)),
        ("ohmic_exponential", SpectralDensitySpec::Isotropic(ScalarFamily::OhmicExponential { eta: 0.1, cutoff: 2.0 })),
        ("lorentzian_mode", SpectralDensitySpec::Isotropic(lorentzian())),
        ("matrix composite", composite()),
    ];
    let clock = Instant::now();
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, spec) in &specs {
        let r = validate_symmetry(spec, &grid).unwrap();
        ok &= r.passed();
        parts.push(format!("{name} {:.1e}", r.max_residual));
    }
    let secs = clock.elapsed().as_secs_f64();
    outcome(ok && secs < 1.0, format!("max residuals: {}; {secs:.3} s", parts.join(", ")))
}

fn c2_fdt_consistency() -> Outcome {
    let spec = drude(0.5, 1.0);
    let clock = Instant::now();
    let pade = pade_expansion(&spec, 1.0, 6).unwrap();
    let mats = matsubara_expansion(&spec, 1.0, 6).unwrap();
    let full = fit_report(&pade, &spec, (0.0, 5.0), 201);
    // the same grid without its t = 0 point, where C itself is infinite
    let grid: Vec<f64> = (1..=200).map(|k| 5.0 * k as f64 / 200.0).collect();
    let inner_p = fit_report_at(&pade, &spec, &grid).unwrap();
    let inner_m = fit_report_at(&mats, &spec, &grid).unwrap();
    let worse = inner_m.max_absolute_error > inner_p.max_absolute_error;
    let secs = clock.elapsed().as_secs_f64();
    let info = format!(
        "on the grid without t = 0: Padé {:.1e} (worst at t = {}), Matsubara {:.1e}, Matsubara worse: {worse}; {secs:.2} s",
        inner_p.max_relative_error, inner_p.worst_time, inner_m.max_relative_error
    );
    match full {
        Ok(r) => outcome(r.max_relative_error < 1e-6 && worse && secs < 10.0, format!("on [0, 5]: {:.1e}; {info}", r.max_relative_error)),
        Err(e) => outcome(false, format!("on [0, 5]: {e}; Drude C(t) diverges logarithmically as t -> 0, no finite expansion can match it; {info}")),
    }
}

fn c3_time_reversal() -> Outcome {
    let cavity = SpectralDensitySpec::discrete_modes(&[
        CavityMode { frequency: 1.0, weight: 0.1, polarizations: vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], width: None },
        CavityMode { frequency: 2.3, weight: 0.05, polarizations: vec![[0.0, 0.0, 1.0]], width: Some(0.1) },
    ])
    .unwrap();
    let specs = [
        drude(0.5, 1.0),
        SpectralDensitySpec::Isotropic(lorentzian()),
        SpectralDensitySpec::Isotropic(ScalarFamily::LorentzianMode { lambda: 0.3, omega0: 0.5, gamma: 2.0 }),
        SpectralDensitySpec::Isotropic(ScalarFamily::BroadenedLine { frequency: 1.2, weight: 0.2, width: 0.05 }),
        composite(),
        cavity,
    ];
    let mut checked = 0;
    let mut failed = Vec::new();
    for (s, spec) in specs.iter().enumerate() {
        for beta in [0.5, 1.0, 4.0] {
            for k in [0, 1, 3, 6] {
                for (scheme, exp) in [("pade", pade_expansion(spec, beta, k)), ("matsubara", matsubara_expansion(spec, beta, k))] {
                    let exp = exp.unwrap();
                    // the stored form is what a reader of the expansion document sees
                    let stored = BathExpansion::from_json(&exp.to_json().unwrap()).unwrap();
                    checked += 1;
                    if !(time_reversal_consistent(&exp) && time_reversal_consistent(&stored) && stored == exp) {
                        failed.push(format!("spec {s} {scheme} K={k} beta={beta}"));
                    }
                }
            }
        }
    }
    outcome(failed.is_empty(), format!("{checked} expansions checked; failures: {failed:?}"))
}

fn c4_closed_system() -> Outcome {
    let clock = Instant::now();
    let bath = pade_expansion(&drude(0.2, 1.0), 1.0, 2).unwrap();
    let cases: Vec<(&str, SystemModel, FrameTrajectory, Vec<C64>)> = vec![
        (
            "two-level",
            SystemModel::two_level(1.0, 0.3, 1.0, 0.0, &[(0, Pauli::X)]).unwrap(),
            FrameTrajectory::inertial(),
            vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)],
        ),
        (
            "ring",
            SystemModel::ring(3, 1.0, 1.0, 0.0, 0.0).unwrap(),
            FrameTrajectory::rotating(Vector3::z(), 0.3).unwrap(),
            [0.1, 0.3, -0.2, 0.5, 0.4, -0.3, 0.2].iter().zip([0.0, 0.2, 0.1, 0.0, -0.3, 0.1, 0.2]).map(|(&a, b)| C64::new(a, b)).collect(),
        ),
    ];
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, model, frame, amp) in cases {
        let norm = amp.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let amp: Vec<C64> = amp.iter().map(|z| z / norm).collect();
        let rho0 = Operator::pure_state(&model.basis, &amp).unwrap();
        let d = Dynamics::new(model.clone(), frame.clone(), FieldFrameMode::Static, bath.clone(), None).unwrap();
        let states = evolve(&d, &rho0, 2, 10.0, 1e-3, 10_000);
        let last = states.last().unwrap();
        let oracle = closed_system_oracle(&model, &frame, &rho0, &[last.time()]).unwrap();
        let dev = oracle.max_deviation(&[reduced_density(last).into_matrix()]);
        ok &= dev < 1e-8 && (last.time() - 10.0).abs() < 1e-9;
        parts.push(format!("{name} {dev:.1e}"));
    }
    let secs = clock.elapsed().as_secs_f64();
    outcome(ok && secs < 10.0, format!("max element deviation at t = 10: {}; {secs:.2} s", parts.join(", ")))
}

struct DephasingRuns {
    dynamics: Dynamics,
    rho0: Operator,
    shallow: Vec<HierarchyState>,
    deep: Vec<HierarchyState>,
    secs: f64,
}

fn dephasing_runs() -> DephasingRuns {
    let clock = Instant::now();
    let model = SystemModel::two_level(1.0, 0.0, 1.0, 1.0, &[(2, Pauli::Z)]).unwrap();
    let bath = pade_expansion(&drude(0.05, 1.0), 1.0, 4).unwrap();
    let dynamics = Dynamics::new(model, FrameTrajectory::inertial(), FieldFrameMode::Static, bath, None).unwrap();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let rho0 = Operator::pure_state(&dynamics.model.basis, &[C64::new(h, 0.0), C64::new(h, 0.0)]).unwrap();
    let shallow = evolve(&dynamics, &rho0, 8, 20.0, 2e-3, 50);
    let deep = evolve(&dynamics, &rho0, 10, 20.0, 2e-3, 50);
    DephasingRuns { dynamics, rho0, shallow, deep, secs: clock.elapsed().as_secs_f64() }
}

fn c5_pure_dephasing(r: &DephasingRuns) -> Outcome {
    let times: Vec<f64> = r.shallow.iter().map(|s| s.time()).collect();
    let kernel = DephasingKernel::Expansion(&r.dynamics.expansion);
    let oracle = pure_dephasing_oracle(1.0, 1.0, kernel, &r.rho0, &times).unwrap();
    let spectral = DephasingKernel::Spectral { spec: &drude(0.05, 1.0), beta: 1.0 };
    let exact = pure_dephasing_oracle(1.0, 1.0, spectral, &r.rho0, &times).unwrap();
    let (mut modulus, mut element, mut shift, mut vs_exact) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for (k, s) in r.shallow.iter().enumerate() {
        let got = reduced_density(s).into_matrix();
        let want = &oracle.values[k];
        modulus = modulus.max((got[(0, 1)].norm() - want[(0, 1)].norm()).abs());
        element = element.max(max_abs(&(&got - want)));
        vs_exact = vs_exact.max((got[(0, 1)].norm() - exact.values[k][(0, 1)].norm()).abs());
        shift = shift.max(max_abs(&(got - reduced_density(&r.deep[k]).into_matrix())));
    }
    let span_ok = times.first() == Some(&0.0) && (times.last().unwrap() - 20.0).abs() < 1e-9;
    outcome(
        modulus < 1e-4 && element < 1e-4 && shift < 1e-6 && span_ok && r.secs < 120.0,
        format!(
            "||coherence| - oracle| {modulus:.1e}, element {element:.1e}, L=8 -> 10 shift {shift:.1e}, vs spectral-route Γ {vs_exact:.1e}; {} snapshots; {:.1} s",
            times.len(),
            r.secs
        ),
    )
}

fn c6_conservation(r: &DephasingRuns) -> Outcome {
    let trace = r.shallow.iter().map(trace_drift).fold(0.0, f64::max);
    let conj = r.shallow.iter().map(|s| r.dynamics.conjugacy_residual(s).unwrap()).fold(0.0, f64::max);
    outcome(trace < 1e-8 && conj < 1e-8, format!("max |tr - 1| {trace:.1e}, max conjugacy residual {conj:.1e} over {} snapshots", r.shallow.len()))
}

fn c7_free_decay() -> Outcome {
    let model = SystemModel::two_level(0.0, 0.0, 1.0, 0.0, &[(2, Pauli::Z)]).unwrap();
    let bath = pade_expansion(&SpectralDensitySpec::Isotropic(lorentzian()), 1.0, 2).unwrap();
    let d = Dynamics::new(model, FrameTrajectory::inertial(), FieldFrameMode::Static, bath, None).unwrap();
    let rho0 = Operator::pure_state(&d.model.basis, &[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]).unwrap();
    let mut s = initial_hierarchy(&rho0, d.catalog(2, None).unwrap()).unwrap();
    let labels = d.labels().len();
    let seeds: Vec<CMatrix> = (0..labels)
        .map(|a| {
            let x = a as f64 + 1.0;
            CMatrix::from_row_slice(2, 2, &[C64::new(0.3 * x, 0.1), C64::new(0.1, 0.2 * x), C64::new(-0.4, 0.1 * x), C64::new(0.2, -0.3)])
        })
        .collect();
    for (a, seed) in seeds.iter().enumerate() {
        let slot = s.catalog().single(a).unwrap();
        *s.raw_mut(slot) = seed.clone();
    }
    let horizon: Vec<f64> = (0..labels).map(|a| 3.0 / d.exponent(a).re).collect();
    let t_end = horizon.iter().copied().fold(0.0, f64::max);
    let mut worst = 0.0f64;
    let mut samples = 0usize;
    propagate(&d, &mut s, t_end, 1e-3, &PropagateOptions { stride: 10, ..Default::default() }, |st, snap| {
        if snap {
            for a in 0..labels {
                if st.time() <= horizon[a] {
                    let want = &seeds[a] * (-d.exponent(a) * st.time()).exp();
                    let got = st.ddo(st.catalog().single(a).unwrap());
                    worst = worst.max((got - &want).norm() / want.norm());
                    samples += 1;
                }
            }
        }
        ControlFlow::Continue(())
    })
    .unwrap();
    let rates: Vec<String> = (0..labels).map(|a| format!("{:.3}", d.exponent(a))).collect();
    outcome(worst < 1e-8, format!("max relative deviation {worst:.1e} over {samples} samples, exponents [{}]", rates.join(", ")))
}

fn c8_non_inertial() -> Outcome {
    // (a) rotating ring spectrum
    let (inertia, omega) = (1.7, 0.3);
    let ring = SystemModel::ring(5, inertia, 1.0, 0.0, 0.0).unwrap();
    let rot = FrameTrajectory::rotating(Vector3::z(), omega).unwrap();
    let mut spectrum = 0.0f64;
    let mut scale = 0.0f64;
    for t in [0.0, 1.3, 7.9] {
        let h = system_hamiltonian_at(&ring, &rot, t).unwrap();
        for (i, &mi) in ring.basis.labels().iter().enumerate() {
            let m = mi as f64;
            let e = m * m / (2.0 * inertia) - omega * m;
            scale = scale.max(e.abs());
            for j in 0..ring.basis.dim() {
                let want = if i == j { e } else { 0.0 };
                spectrum = spectrum.max((h.matrix()[(i, j)] - want).norm());
            }
        }
    }
    let a_ok = spectrum <= 4.0 * f64::EPSILON * scale;

    // (b) displacement and rotation identities
    let osc = SystemModel::oscillator(60, 1.0, 1.0, 0.0).unwrap();
    let moving = [
        FrameTrajectory::translating(TranslationSpec::Boost { velocity: Vector3::new(0.5, 0.0, 0.0) }).unwrap(),
        FrameTrajectory::translating(TranslationSpec::ConstantAccel { acceleration: Vector3::new(0.3, 0.0, 0.0) }).unwrap(),
    ];
    let mut identities = 0.0f64;
    let mut interior = 0;
    for f in &moving {
        for t in [0.5, 1.5] {
            let r = verify_transformation_identities(&osc, f, t, 20, 1e-6).unwrap();
            identities = identities.max(r.max_residual());
            interior = r.interior;
        }
    }
    for t in [0.4, 2.2] {
        let r = verify_transformation_identities(&ring, &rot, t, 0, 1e-6).unwrap();
        identities = identities.max(r.max_residual());
    }
    let b_ok = identities < 1e-6;

    // (c) static-field coupling of a rotating charged ring
    let charged = SystemModel::ring(3, 1.0, 1.3, 0.7, 0.0).unwrap();
    let frames = [
        FrameTrajectory::rotating(Vector3::z(), 0.8).unwrap(),
        FrameTrajectory::rotating(Vector3::new(1.0, 1.0, 1.0).normalize(), -0.5).unwrap(),
        FrameTrajectory::new(
            RotationSpec::Piecewise(vec![
                RotationSegment { start: 0.0, axis: Vector3::z(), omega: 0.4 },
                RotationSegment { start: 1.0, axis: Vector3::x(), omega: 1.1 },
            ]),
            TranslationSpec::None,
        )
        .unwrap(),
    ];
    let q = charged.charge / charged.mass;
    let mut mixing = 0.0f64;
    for f in &frames {
        for t in [0.0, 0.7, 1.9, 3.4] {
            let r = rotation_at(f, t).unwrap();
            let set = coupling_operators_at(&charged, f, &FieldFrameMode::Static, t).unwrap();
            for i in 0..3 {
                let mut want = DMatrix::<C64>::zeros(charged.basis.dim(), charged.basis.dim());
                for j in 0..3 {
                    if let Some(p) = &charged.momentum[j] {
                        want += p.matrix() * C64::new(q * r[(i, j)], 0.0);
                    }
                }
                mixing = mixing.max(max_abs(&(set.components[i].operator.matrix() - &want)));
            }
        }
    }
    let c_ok = mixing < 1e-12;
    outcome(
        a_ok && b_ok && c_ok,
        format!("(a) ring spectrum {spectrum:.1e}; (b) identity residual {identities:.1e} on a {interior}-state block; (c) coupling mixing {mixing:.1e}"),
    )
}

fn c9_thermalization() -> Outcome {
    let clock = Instant::now();
    let beta = 1.0;
    let model = SystemModel::two_level(1.0, 0.0, 1.0, 1.0, &[(0, Pauli::X)]).unwrap();
    let bath = pade_expansion(&drude(0.01, 1.0), beta, 2).unwrap();
    let d = Dynamics::new(model, FrameTrajectory::inertial(), FieldFrameMode::Static, bath, None).unwrap();
    let rho0 = Operator::pure_state(&d.model.basis, &[C64::new(0.0, 0.0), C64::new(1.0, 0.0)]).unwrap();
    let t_end = 200.0;
    let states = evolve(&d, &rho0, 4, t_end, 0.01, 20_000);
    let last = reduced_density(states.last().unwrap()).into_matrix();
    let gibbs = gibbs_oracle(&d.model.bare_hamiltonian(), beta).unwrap();
    let rel = (0..2).map(|i| (last[(i, i)].re - gibbs.matrix()[(i, i)].re).abs() / gibbs.matrix()[(i, i)].re).fold(0.0, f64::max);
    let secs = clock.elapsed().as_secs_f64();
    outcome(
        rel < 0.02 && secs < 300.0,
        format!(
            "populations at t = {t_end}: ({:.5}, {:.5}) vs Gibbs ({:.5}, {:.5}), max relative {rel:.2e}; {secs:.1} s",
            last[(0, 0)].re,
            last[(1, 1)].re,
            gibbs.matrix()[(0, 0)].re,
            gibbs.matrix()[(1, 1)].re
        ),
    )
}

fn deom(args: &[&str], threads: &str) -> Result<(), String> {
    let o = Command::new(env!("CARGO_BIN_EXE_deom")).args(args).env("DEOM_THREADS", threads).output().map_err(|e| e.to_string())?;
    if o.status.success() {
        Ok(())
    } else {
        Err(format!("deom {args:?} exited with {:?}: {}", o.status.code(), String::from_utf8_lossy(&o.stderr)))
    }
}

fn c10_determinism_and_resume() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let config = json!({
        "system": {"type": "ring", "m_max": 2, "charge": 0.5, "v_cos": 0.2},
        "initial_state": {"type": "pure", "amplitudes": [0, [0.6, 0], 0, [0, 0.8], 0]},
        "frame": {"rotation": {"type": "constant", "axis": [0, 0, 1], "omega": 0.3}},
        "bath": {"spectral": {"family": "drude", "lambda": 0.1, "gamma": 1.0}, "beta": 1.0, "terms": 2},
        "hierarchy": {"max_tier": 3, "dt": 0.01, "t_final": 2.0, "stride": 4, "scaling": true},
        "output": {"observables": ["population:0", "coherence:1:3", "expectation:L_z", "coupling_energy"]}
    });
    let cfg = dir.path().join("config.json");
    fs::write(&cfg, config.to_string()).unwrap();
    let out = |name: &str| dir.path().join(name);
    let path = |p: &Path| p.to_str().unwrap().to_string();
    let steps = || -> Result<(bool, bool), String> {
        deom(&["run", &path(&cfg), "--output", &path(&out("a"))], "1")?;
        deom(&["run", &path(&cfg), "--output", &path(&out("b"))], "4")?;
        deom(&["run", &path(&cfg), "--output", &path(&out("c")), "--stop-after-steps", "77"], "2")?;
        deom(&["resume", &path(&out("c").join("checkpoint.json"))], "3")?;
        let read = |d: &str| fs::read(out(d).join("timeseries.csv")).map_err(|e| e.to_string());
        let a = read("a")?;
        Ok((a == read("b")?, a == read("c")?))
    };
    match steps() {
        Ok((same, resumed)) => outcome(same && resumed, format!("repeat run byte-identical (1 vs 4 threads): {same}; stop at step 77 + resume byte-identical: {resumed}")),
        Err(e) => outcome(false, e),
    }
}

fn main() {
    let clock = Instant::now();
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let mut report = |n: u32, name: &'static str, o: Outcome| {
        let tag = if o.passed { "PASS" } else { "FAIL" };
        println!("[{tag}] criterion {n:>2} {name}: {}", o.detail);
        results.push((n, name, o));
    };
    report(1, "spectral symmetry", c1_spectral_symmetry());
    report(2, "FDT/expansion consistency", c2_fdt_consistency());
    report(3, "time-reversal pairing", c3_time_reversal());
    report(4, "closed-system equivalence", c4_closed_system());
    let runs = dephasing_runs();
    report(5, "pure-dephasing exactness", c5_pure_dephasing(&runs));
    report(6, "conservation", c6_conservation(&runs));
    report(7, "free decay", c7_free_decay());
    report(8, "non-inertial structure", c8_non_inertial());
    report(9, "thermalization", c9_thermalization());
    report(10, "determinism and resume", c10_determinism_and_resume());

    let passed = results.iter().filter(|r| r.2.passed).count();
    let unexpected: Vec<u32> = results.iter().filter(|r| !r.2.passed && !KNOWN_UNATTAINABLE.contains(&r.0)).map(|r| r.0).collect();
    let known: Vec<u32> = results.iter().filter(|r| !r.2.passed && KNOWN_UNATTAINABLE.contains(&r.0)).map(|r| r.0).collect();
    println!(
        "acceptance: {passed}/{} passed; known unattainable failing: {known:?}; unexpected failures: {unexpected:?}; {:.1} s",
        results.len(),
        clock.elapsed().as_secs_f64()
    );
    if !unexpected.is_empty() {
        std::process::exit(1);
    }
}
