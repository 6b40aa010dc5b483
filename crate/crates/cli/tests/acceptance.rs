//! Acceptance suite: one test per release criterion, each printing a
//! `[criterion N] PASS` / `FAIL` line with the failure details below it.
//!
//! The criteria pin every tolerance in code: transform fidelity against a
//! direct DFT, projection exactness, integrating-factor exactness, advective
//! annihilation on closed-form flows, second-order energy-equality residuals,
//! hydrostatic reconstruction against quadrature, the randomized inequality
//! reports, vanishing-perturbation convergence with a scalar closed form,
//! perturbed-data stability with a fitted envelope, dual-norm uniformity of
//! the time derivative, and byte-stable CLI reruns.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;

use ndarray::Array3;
use num_complex::Complex64;

use hypervisc::{
    difference_study, difference_trajectory_norm, divergence, divergence_h, forward_transform,
    gronwall_fit, hydrostatic_project, inverse_transform, leray_project, nonlinearity_ns,
    nonlinearity_pe, random_hydrostatic, random_solenoidal, run, time_derivative_norm,
    verify_interpolation, verify_mixed_derivative, verify_ns_estimate, verify_pe_estimate,
    vertical_velocity, AmplitudeEnvelope, EnsembleSpec, FieldConstraint, Forcing, Grid,
    GronwallOutcome, NavierStokes, NormSpec, OperatorSpec, OperatorVariant, Parity,
    PrimitiveEquations, RunOutput, SolverSettings, SpectralField, VectorField, WaveIndex,
    TIME_DERIVATIVE_DUAL_ORDER,
};

// ---------------------------------------------------------------------------
// reporting helpers

fn check(failures: &mut Vec<String>, ok: bool, msg: String) {
    if !ok {
        failures.push(msg);
    }
}

fn report(criterion: u32, failures: Vec<String>) {
    if failures.is_empty() {
        println!("[criterion {criterion}] PASS");
    } else {
        println!("[criterion {criterion}] FAIL");
        for f in &failures {
            println!("  - {f}");
        }
        panic!("criterion {criterion} failed:\n  {}", failures.join("\n  "));
    }
}

// ---------------------------------------------------------------------------
// field fixtures

/// splitmix64: tiny deterministic value stream for oracle-side sampling.
struct SplitMix(u64);

impl SplitMix {
    fn next_f64(&mut self) -> f64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
        (z >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    }
}

/// Curl eigenfield on the pair `{k, -k}` with coefficient-space norm `a`.
fn beltrami(grid: Grid, mode: [i64; 3], amplitude: f64) -> VectorField<3> {
    let k = WaveIndex::new(mode[0], mode[1], mode[2]);
    let kappa = k.kappa();
    let kh = k.kappa_h_sq().sqrt();
    let lambda = k.kappa_sq().sqrt();
    let e1 = [kappa[1] / kh, -kappa[0] / kh, 0.0];
    let e2 = [
        (kappa[1] * e1[2] - kappa[2] * e1[1]) / lambda,
        (kappa[2] * e1[0] - kappa[0] * e1[2]) / lambda,
        (kappa[0] * e1[1] - kappa[1] * e1[0]) / lambda,
    ];
    let mut field = VectorField::<3>::zeros(grid);
    for i in 0..3 {
        let c = 0.5 * amplitude * Complex64::new(e1[i], e2[i]);
        field
            .component_mut(i)
            .set_mode_pair(k, c)
            .expect("retained mode");
    }
    field
}

/// Depth-independent cellular flow `(a sin cos, -a cos sin)` sampled and
/// transformed.
fn taylor_green(grid: Grid, amplitude: f64) -> (SpectralField, SpectralField) {
    let [n1, n2, n3] = grid.n();
    let mut s1 = Array3::zeros((n1, n2, n3));
    let mut s2 = Array3::zeros((n1, n2, n3));
    for j1 in 0..n1 {
        for j2 in 0..n2 {
            for j3 in 0..n3 {
                let [x, y, _] = grid.point(j1, j2, j3);
                s1[(j1, j2, j3)] = amplitude * (TAU * x).sin() * (TAU * y).cos();
                s2[(j1, j2, j3)] = -amplitude * (TAU * x).cos() * (TAU * y).sin();
            }
        }
    }
    (
        forward_transform(grid, &s1).expect("transform"),
        forward_transform(grid, &s2).expect("transform"),
    )
}

fn ns_op(nu: f64, eps: f64) -> OperatorSpec {
    OperatorSpec::new(OperatorVariant::FullHyper, nu, eps, 1.25).expect("valid operator")
}

fn pe_op(nu: f64, eps: f64) -> OperatorSpec {
    OperatorSpec::new(OperatorVariant::FullHyper, nu, eps, 1.6).expect("valid operator")
}

// ---------------------------------------------------------------------------
// criterion 1: transform fidelity against a direct DFT, and Parseval

#[test]
fn criterion_01_transform_fidelity() {
    let mut failures = Vec::new();
    let grid = Grid::new(8, 8, 8).unwrap();
    let [n1, n2, n3] = grid.n();
    let total = grid.len() as f64;

    let mut rng = SplitMix(0x5EED_0001);
    let mut samples = Array3::zeros((n1, n2, n3));
    for v in samples.iter_mut() {
        *v = rng.next_f64();
    }
    let hat = forward_transform(grid, &samples).unwrap();

    let mut max_dev = 0.0f64;
    let mut max_mag = 0.0f64;
    for ((i1, i2, i3), k) in grid.indexed_modes() {
        let kappa = k.kappa();
        let mut acc = Complex64::new(0.0, 0.0);
        for j1 in 0..n1 {
            for j2 in 0..n2 {
                for j3 in 0..n3 {
                    let [x, y, z] = grid.point(j1, j2, j3);
                    let phase = kappa[0] * x + kappa[1] * y + kappa[2] * z;
                    acc += samples[(j1, j2, j3)] * Complex64::new(0.0, -phase).exp();
                }
            }
        }
        acc /= total;
        let got = hat.data()[(i1, i2, i3)];
        max_dev = max_dev.max((got - acc).norm());
        max_mag = max_mag.max(acc.norm());
    }
    check(
        &mut failures,
        max_dev <= 1e-10 * max_mag,
        format!("fft vs direct dft: max deviation {max_dev:.3e} > 1e-10 * {max_mag:.3e}"),
    );

    let physical_energy = samples.iter().map(|v| v * v).sum::<f64>() / total;
    let spectral_energy = hat.l2_norm_sq();
    check(
        &mut failures,
        (spectral_energy - physical_energy).abs() <= 1e-12 * physical_energy,
        format!(
            "parseval: spectral {spectral_energy:.15e} vs physical {physical_energy:.15e}"
        ),
    );

    report(1, failures);
}

// ---------------------------------------------------------------------------
// criterion 2: projection exactness at 32^3

#[test]
fn criterion_02_projection_exactness() {
    let mut failures = Vec::new();
    let grid = Grid::new(32, 32, 32).unwrap();

    // solenoidal projection on a deliberately non-solenoidal random field
    let ens = EnsembleSpec::new(1, 4021, 1.5, FieldConstraint::Solenoidal3d).unwrap();
    let u = random_solenoidal(grid, &ens, 0).unwrap();
    let mixed = VectorField::new([
        {
            let mut c = u.component(1).clone();
            c.add_scaled(0.5, u.component(0)).unwrap();
            c
        },
        u.component(2).clone(),
        u.component(0).clone(),
    ])
    .unwrap();
    check(
        &mut failures,
        divergence(&mixed).l2_norm() > 1e-3,
        "component-mixed field is unexpectedly solenoidal already".into(),
    );
    let projected = leray_project(&mixed);
    let unit = projected.scaled(1.0 / projected.l2_norm());
    let div_norm = divergence(&unit).l2_norm();
    check(
        &mut failures,
        div_norm <= 1e-13,
        format!("divergence after projection: {div_norm:.3e} > 1e-13"),
    );
    let mut idem = leray_project(&unit);
    idem.add_scaled(-1.0, &unit).unwrap();
    check(
        &mut failures,
        idem.l2_norm() <= 1e-13,
        format!("solenoidal idempotency: {:.3e} > 1e-13", idem.l2_norm()),
    );

    // column-balanced projection on a deliberately unbalanced even field
    let ens2 = EnsembleSpec::new(1, 4022, 1.5, FieldConstraint::Hydrostatic2d).unwrap();
    let v = random_hydrostatic(grid, &ens2, 0).unwrap();
    let mixed2 = VectorField::new([
        {
            let mut c = v.component(1).clone();
            c.add_scaled(0.5, v.component(0)).unwrap();
            c
        },
        v.component(0).clone(),
    ])
    .unwrap();
    let balanced = hydrostatic_project(&mixed2).unwrap();
    let unit2 = balanced.scaled(1.0 / balanced.l2_norm());
    let dh = divergence_h(&unit2);
    let mut slab_norm_sq = 0.0;
    for ((i1, i2, i3), k) in grid.indexed_modes() {
        if k.k3 == 0 {
            slab_norm_sq += dh.data()[(i1, i2, i3)].norm_sqr();
        }
    }
    let slab_norm = slab_norm_sq.sqrt();
    check(
        &mut failures,
        slab_norm <= 1e-13,
        format!("column balance after projection: {slab_norm:.3e} > 1e-13"),
    );
    let mut idem2 = hydrostatic_project(&unit2).unwrap();
    idem2.add_scaled(-1.0, &unit2).unwrap();
    check(
        &mut failures,
        idem2.l2_norm() <= 1e-13,
        format!("hydrostatic idempotency: {:.3e} > 1e-13", idem2.l2_norm()),
    );

    report(2, failures);
}

// ---------------------------------------------------------------------------
// criterion 3: integrating-factor exactness over 1000 steps, both variants

#[test]
fn criterion_03_exact_linear_decay() {
    let mut failures = Vec::new();
    let grid = Grid::new(8, 8, 8).unwrap();
    let dt = 1e-4;
    let steps = 1000usize;
    let t_final = dt * steps as f64;

    let variants = [
        OperatorSpec::new(OperatorVariant::FullHyper, 0.01, 0.02, 1.25).unwrap(),
        OperatorSpec::new(OperatorVariant::HorizontalHyper, 0.01, 0.02, 2.0).unwrap(),
    ];

    for op in variants {
        // three-component branch: transverse single mode
        let k = WaveIndex::new(0, 2, 1);
        let c0 = Complex64::new(0.3, -0.2);
        let mut u = VectorField::<3>::zeros(grid);
        u.component_mut(0).set_mode_pair(k, c0).unwrap();
        let mut settings = SolverSettings::new(op, dt, t_final);
        settings.nonlinearity = false;
        settings.record_every = steps;
        let out = run::<3, NavierStokes>(&settings, &Forcing::none(), &u).unwrap();
        let final_coeff = out.snapshots.last().unwrap().field.component(0).coeff(k).unwrap();
        let exact = c0 * (-op.symbol(&k) * t_final).exp();
        let rel = (final_coeff - exact).norm() / exact.norm();
        check(
            &mut failures,
            rel <= 1e-12,
            format!(
                "{:?} three-component decay: relative amplitude error {rel:.3e} > 1e-12",
                op.variant()
            ),
        );

        // two-component branch: even pair in the vertical
        let k_pe = WaveIndex::new(1, 0, 1);
        let k_pe_m = WaveIndex::new(1, 0, -1);
        let c_pe = Complex64::new(-0.1, 0.25);
        let mut v = VectorField::<2>::zeros(grid);
        v.component_mut(1).set_mode_pair(k_pe, c_pe).unwrap();
        v.component_mut(1).set_mode_pair(k_pe_m, c_pe).unwrap();
        let out_pe = run::<2, PrimitiveEquations>(&settings, &Forcing::none(), &v).unwrap();
        let final_pe = out_pe.snapshots.last().unwrap().field.component(1).coeff(k_pe).unwrap();
        let exact_pe = c_pe * (-op.symbol(&k_pe) * t_final).exp();
        let rel_pe = (final_pe - exact_pe).norm() / exact_pe.norm();
        check(
            &mut failures,
            rel_pe <= 1e-12,
            format!(
                "{:?} two-component decay: relative amplitude error {rel_pe:.3e} > 1e-12",
                op.variant()
            ),
        );
    }

    report(3, failures);
}

// ---------------------------------------------------------------------------
// criterion 4: advective annihilation and the consequent exponential decay

#[test]
fn criterion_04_nonlinearity_annihilation() {
    let mut failures = Vec::new();
    let grid = Grid::new(16, 16, 16).unwrap();

    // curl eigenfield: projected advective term vanishes identically
    let u = beltrami(grid, [1, 1, 2], 1.0);
    let n_ns = nonlinearity_ns(&u).unwrap();
    check(
        &mut failures,
        n_ns.l2_norm() <= 1e-12,
        format!("beltrami annihilation: |P(u.grad u)| = {:.3e} > 1e-12", n_ns.l2_norm()),
    );

    // depth-independent cellular flow: projected advective term vanishes
    let (v1, v2) = taylor_green(grid, 1.0);
    let v = VectorField::new([v1, v2]).unwrap();
    let n_pe = nonlinearity_pe(&v).unwrap();
    check(
        &mut failures,
        n_pe.l2_norm() <= 1e-12,
        format!(
            "cellular-flow annihilation: |P(w dz v + v.grad_H v)| = {:.3e} > 1e-12",
            n_pe.l2_norm()
        ),
    );

    // full nonlinear runs ride the pure exponential
    let t_final = 0.5;
    let op = ns_op(0.005, 0.002);
    let mut settings = SolverSettings::new(op, 2.5e-3, t_final);
    settings.record_every = 1000;
    let out = run::<3, NavierStokes>(&settings, &Forcing::none(), &u).unwrap();
    let a = op.symbol(&WaveIndex::new(1, 1, 2));
    let kin0 = u.l2_norm_sq();
    let exact = kin0 * (-2.0 * a * t_final).exp();
    let got = out.snapshots.last().unwrap().field.l2_norm_sq();
    let rel = (got - exact).abs() / exact;
    check(
        &mut failures,
        rel <= 1e-6,
        format!("beltrami nonlinear run vs exponential decay: relative error {rel:.3e} > 1e-6"),
    );

    let op_pe = pe_op(0.005, 0.002);
    let mut settings_pe = SolverSettings::new(op_pe, 2.5e-3, t_final);
    settings_pe.record_every = 1000;
    let v_run = VectorField::new([taylor_green(grid, 0.4).0, taylor_green(grid, 0.4).1]).unwrap();
    let out_pe = run::<2, PrimitiveEquations>(&settings_pe, &Forcing::none(), &v_run).unwrap();
    let a_pe = op_pe.symbol(&WaveIndex::new(1, 1, 0));
    let kin0_pe = v_run.l2_norm_sq();
    let exact_pe = kin0_pe * (-2.0 * a_pe * t_final).exp();
    let got_pe = out_pe.snapshots.last().unwrap().field.l2_norm_sq();
    let rel_pe = (got_pe - exact_pe).abs() / exact_pe;
    check(
        &mut failures,
        rel_pe <= 1e-6,
        format!(
            "cellular-flow nonlinear run vs exponential decay: relative error {rel_pe:.3e} > 1e-6"
        ),
    );

    report(4, failures);
}

// ---------------------------------------------------------------------------
// criterion 5: energy-equality residual is second order in dt

fn ns_energy_setup(grid: Grid) -> (VectorField<3>, Forcing<3>) {
    let mut initial = beltrami(grid, [1, 1, 2], 0.18);
    initial
        .component_mut(0)
        .set_mode_pair(WaveIndex::new(0, 1, 1), Complex64::new(0.12, 0.06))
        .unwrap();
    let mut shape = VectorField::<3>::zeros(grid);
    shape
        .component_mut(1)
        .set_mode_pair(WaveIndex::new(1, 0, 0), Complex64::new(0.06, 0.0))
        .unwrap();
    let forcing = Forcing::Applied {
        field: shape,
        envelope: AmplitudeEnvelope::Cosine {
            mean: 1.0,
            amplitude: 0.5,
            omega: 2.0,
        },
    };
    (initial, forcing)
}

fn pe_energy_setup(grid: Grid) -> (VectorField<2>, Forcing<2>) {
    let (v1, v2) = taylor_green(grid, 0.18);
    let mut raw = VectorField::new([v1, v2]).unwrap();
    raw.component_mut(0)
        .set_mode_pair(WaveIndex::new(0, 1, 1), Complex64::new(0.06, -0.03))
        .unwrap();
    raw.component_mut(0)
        .set_mode_pair(WaveIndex::new(0, 1, -1), Complex64::new(0.06, -0.03))
        .unwrap();
    let initial = hydrostatic_project(&raw).unwrap();
    let mut shape = VectorField::<2>::zeros(grid);
    shape
        .component_mut(0)
        .set_mode_pair(WaveIndex::new(0, 1, 0), Complex64::new(0.06, 0.0))
        .unwrap();
    let forcing = Forcing::Applied {
        field: shape,
        envelope: AmplitudeEnvelope::Cosine {
            mean: 1.0,
            amplitude: 0.5,
            omega: 2.0,
        },
    };
    (initial, forcing)
}

#[test]
fn criterion_05_energy_equality_convergence() {
    let mut failures = Vec::new();
    let grid = Grid::new(32, 32, 32).unwrap();
    let dts = [2.5e-3, 1.25e-3, 6.25e-4];
    let t_final = 0.5;

    let (ns_initial, ns_forcing) = ns_energy_setup(grid);
    let op = ns_op(0.05, 0.01);
    let mut ns_residuals = Vec::new();
    for &dt in &dts {
        let mut settings = SolverSettings::new(op, dt, t_final);
        settings.record_every = 10_000;
        let out = run::<3, NavierStokes>(&settings, &ns_forcing, &ns_initial).unwrap();
        ns_residuals.push(out.ledger.max_abs_residual());
    }

    let (pe_initial, pe_forcing) = pe_energy_setup(grid);
    let op_pe = pe_op(0.05, 0.01);
    let mut pe_residuals = Vec::new();
    for &dt in &dts {
        let mut settings = SolverSettings::new(op_pe, dt, t_final);
        settings.record_every = 10_000;
        let out = run::<2, PrimitiveEquations>(&settings, &pe_forcing, &pe_initial).unwrap();
        pe_residuals.push(out.ledger.max_abs_residual());
    }

    for (name, residuals) in [("ns", &ns_residuals), ("pe", &pe_residuals)] {
        for w in residuals.windows(2) {
            let ratio = w[0] / w[1];
            check(
                &mut failures,
                (3.5..=4.5).contains(&ratio),
                format!(
                    "{name} residual ratio under dt halving: {ratio:.3} outside [3.5, 4.5] \
                     (residuals {residuals:?})"
                ),
            );
        }
        let finest = *residuals.last().unwrap();
        check(
            &mut failures,
            finest <= 1e-6,
            format!("{name} residual at finest dt: {finest:.3e} > 1e-6"),
        );
    }

    report(5, failures);
}

// ---------------------------------------------------------------------------
// criterion 6: hydrostatic vertical-velocity reconstruction

#[test]
fn criterion_06_hydrostatic_reconstruction() {
    let mut failures = Vec::new();
    let grid = Grid::new(16, 16, 16).unwrap();
    let [n1, n2, n3] = grid.n();

    // v = (cos(2 pi x) cos(pi z), 0); w = 2 sin(2 pi x) sin(pi z)
    let mut s1 = Array3::zeros((n1, n2, n3));
    for j1 in 0..n1 {
        for j2 in 0..n2 {
            for j3 in 0..n3 {
                let [x, _, z] = grid.point(j1, j2, j3);
                s1[(j1, j2, j3)] = (TAU * x).cos() * (PI * z).cos();
            }
        }
    }
    let v = VectorField::new([
        forward_transform(grid, &s1).unwrap(),
        SpectralField::zeros(grid),
    ])
    .unwrap();

    let w = vertical_velocity(&v).unwrap();
    let odd_dev = w.parity_deviation(Parity::Odd);
    check(
        &mut failures,
        odd_dev <= 1e-12 * (1.0 + w.max_abs()),
        format!("w parity: deviation from odd {odd_dev:.3e}"),
    );

    let w_samples = inverse_transform(&w).unwrap();
    let mut boundary_sup = 0.0f64;
    for j1 in 0..n1 {
        for j2 in 0..n2 {
            boundary_sup = boundary_sup.max(w_samples[(j1, j2, 0)].abs());
        }
    }
    check(
        &mut failures,
        boundary_sup <= 1e-10,
        format!("w at the vertical boundary: sup {boundary_sup:.3e} > 1e-10"),
    );

    // quadrature oracle: w(x, z) = -int_{-1}^{z} div_H v dz' by composite
    // Simpson on the closed-form integrand
    let simpson = |x: f64, z: f64| -> f64 {
        let a = -1.0f64;
        let m = 1000usize;
        let h = (z - a) / m as f64;
        if h == 0.0 {
            return 0.0;
        }
        let f = |zp: f64| TAU * (TAU * x).sin() * (PI * zp).cos();
        let mut acc = f(a) + f(z);
        for i in 1..m {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(a + i as f64 * h);
        }
        acc * h / 3.0
    };
    let mut quad_dev = 0.0f64;
    let mut closed_dev = 0.0f64;
    for j1 in 0..n1 {
        for j3 in 0..n3 {
            let [x, _, z] = grid.point(j1, 0, j3);
            let oracle = simpson(x, z);
            let closed = 2.0 * (TAU * x).sin() * (PI * z).sin();
            for j2 in 0..n2 {
                let got = w_samples[(j1, j2, j3)];
                quad_dev = quad_dev.max((got - oracle).abs());
                closed_dev = closed_dev.max((got - closed).abs());
            }
        }
    }
    check(
        &mut failures,
        quad_dev <= 1e-10,
        format!("w vs quadrature oracle: sup deviation {quad_dev:.3e} > 1e-10"),
    );
    check(
        &mut failures,
        closed_dev <= 1e-10,
        format!("w vs closed form: sup deviation {closed_dev:.3e} > 1e-10"),
    );

    report(6, failures);
}

// ---------------------------------------------------------------------------
// criterion 7: inequality suites on large ensembles and a full index sweep

#[test]
fn criterion_07_inequality_suites() {
    let mut failures = Vec::new();
    let grid = Grid::new(16, 16, 16).unwrap();
    let op_ns = ns_op(0.05, 0.1);
    let op_pe = pe_op(0.0, 0.1);

    let ens_ns = EnsembleSpec::new(1000, 2718, 1.5, FieldConstraint::Solenoidal3d).unwrap();
    match verify_interpolation(grid, &op_ns, &ens_ns) {
        Ok(r) => check(
            &mut failures,
            r.count == 1000,
            format!("interpolation (solenoidal): {} members checked, expected 1000", r.count),
        ),
        Err(e) => failures.push(format!("interpolation (solenoidal) failed: {e}")),
    }
    let ens_pe = EnsembleSpec::new(1000, 2719, 1.5, FieldConstraint::Hydrostatic2d).unwrap();
    match verify_interpolation(grid, &op_pe, &ens_pe) {
        Ok(r) => check(
            &mut failures,
            r.count == 1000,
            format!("interpolation (hydrostatic): {} members checked, expected 1000", r.count),
        ),
        Err(e) => failures.push(format!("interpolation (hydrostatic) failed: {e}")),
    }

    let mixed_op = OperatorSpec::new(OperatorVariant::HorizontalHyper, 0.05, 0.1, 2.0).unwrap();
    let grid64 = Grid::new(64, 64, 64).unwrap();
    match verify_mixed_derivative(&mixed_op, grid64) {
        Ok(r) => {
            check(
                &mut failures,
                r.violations == 0,
                format!("mixed-derivative sweep: {} violations", r.violations),
            );
            check(
                &mut failures,
                r.modes_checked == 64 * 64 * 64,
                format!("mixed-derivative sweep covered {} modes, expected 64^3", r.modes_checked),
            );
        }
        Err(e) => failures.push(format!("mixed-derivative sweep failed: {e}")),
    }

    let ratio_ns_a = verify_ns_estimate(grid, &op_ns, &ens_ns).unwrap();
    let ratio_ns_b = verify_ns_estimate(grid, &op_ns, &ens_ns).unwrap();
    check(
        &mut failures,
        ratio_ns_a.max.is_finite() && ratio_ns_a.max > 0.0,
        format!("ns ratio report max {} not finite positive", ratio_ns_a.max),
    );
    check(
        &mut failures,
        ratio_ns_a.max == ratio_ns_b.max && ratio_ns_a.mean == ratio_ns_b.mean,
        format!(
            "ns ratio report not seed-reproducible: max {} vs {}",
            ratio_ns_a.max, ratio_ns_b.max
        ),
    );

    let ratio_pe_a = verify_pe_estimate(grid, &op_pe, &ens_pe).unwrap();
    let ratio_pe_b = verify_pe_estimate(grid, &op_pe, &ens_pe).unwrap();
    check(
        &mut failures,
        ratio_pe_a.max.is_finite() && ratio_pe_a.max > 0.0,
        format!("pe ratio report max {} not finite positive", ratio_pe_a.max),
    );
    check(
        &mut failures,
        ratio_pe_a.max == ratio_pe_b.max && ratio_pe_a.mean == ratio_pe_b.mean,
        format!(
            "pe ratio report not seed-reproducible: max {} vs {}",
            ratio_pe_a.max, ratio_pe_b.max
        ),
    );

    report(7, failures);
}

// ---------------------------------------------------------------------------
// criteria 8 and 10 share one vanishing-perturbation sweep

const SWEEP_EPS: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];

struct BranchSweep {
    errors: Vec<f64>,
    derivative_norms: Vec<f64>,
}

struct SweepData {
    ns: BranchSweep,
    pe: BranchSweep,
}

static SWEEP: OnceLock<SweepData> = OnceLock::new();

fn sweep_runs<const N: usize, B: hypervisc::Branch<N>>(
    base_op: OperatorSpec,
    initial: &VectorField<N>,
) -> BranchSweep {
    let forcing = Forcing::none();
    let mut settings = SolverSettings::new(base_op.with_eps(0.0).unwrap(), 5e-3, 0.5);
    settings.record_every = 5;
    let reference: RunOutput<N> = run::<N, B>(&settings, &forcing, initial).unwrap();

    let mut errors = Vec::new();
    let mut derivative_norms = Vec::new();
    for &eps in &SWEEP_EPS {
        settings.operator = base_op.with_eps(eps).unwrap();
        let out = run::<N, B>(&settings, &forcing, initial).unwrap();
        errors.push(
            difference_trajectory_norm(
                &out.snapshots,
                &reference.snapshots,
                &NormSpec::Sobolev { s: 0.0 },
            )
            .unwrap(),
        );
        derivative_norms.push(
            time_derivative_norm::<N, B>(
                &out.snapshots,
                &settings.operator,
                &forcing,
                settings.nonlinearity,
                TIME_DERIVATIVE_DUAL_ORDER,
            )
            .unwrap(),
        );
    }
    BranchSweep {
        errors,
        derivative_norms,
    }
}

fn sweep_data() -> &'static SweepData {
    SWEEP.get_or_init(|| {
        let grid = Grid::new(32, 32, 32).unwrap();
        let ens_ns = EnsembleSpec::new(1, 314, 2.0, FieldConstraint::Solenoidal3d).unwrap();
        let u0 = random_solenoidal(grid, &ens_ns, 0).unwrap().scaled(0.4);
        let ns = sweep_runs::<3, NavierStokes>(ns_op(0.05, 0.1), &u0);

        let ens_pe = EnsembleSpec::new(1, 315, 2.0, FieldConstraint::Hydrostatic2d).unwrap();
        let v0 = random_hydrostatic(grid, &ens_pe, 0).unwrap().scaled(0.4);
        let pe = sweep_runs::<2, PrimitiveEquations>(pe_op(0.05, 0.1), &v0);

        SweepData { ns, pe }
    })
}

#[test]
fn criterion_08_vanishing_perturbation_convergence() {
    let mut failures = Vec::new();
    let data = sweep_data();

    for (name, sweep) in [("ns", &data.ns), ("pe", &data.pe)] {
        for (i, w) in sweep.errors.windows(2).enumerate() {
            check(
                &mut failures,
                w[1] < w[0] && w[1] > 0.0,
                format!(
                    "{name} errors not strictly decreasing at step {i}: {:?}",
                    sweep.errors
                ),
            );
        }
    }

    // linear-only ladder against the scalar closed form of the mode amplitude
    let grid = Grid::new(32, 32, 32).unwrap();
    let k = WaveIndex::new(0, 2, 1);
    let c0 = Complex64::new(0.3, -0.2);
    let mut u = VectorField::<3>::zeros(grid);
    u.component_mut(0).set_mode_pair(k, c0).unwrap();
    let base_op = ns_op(0.05, 0.1);
    let mut settings = SolverSettings::new(base_op.with_eps(0.0).unwrap(), 5e-3, 0.5);
    settings.nonlinearity = false;
    settings.record_every = 2;
    let reference = run::<3, NavierStokes>(&settings, &Forcing::none(), &u).unwrap();
    let a0 = settings.operator.symbol(&k);
    for &eps in &SWEEP_EPS {
        settings.operator = base_op.with_eps(eps).unwrap();
        let out = run::<3, NavierStokes>(&settings, &Forcing::none(), &u).unwrap();
        let numeric = difference_trajectory_norm(
            &out.snapshots,
            &reference.snapshots,
            &NormSpec::Sobolev { s: 0.0 },
        )
        .unwrap();
        let a_eps = settings.operator.symbol(&k);
        let times: Vec<f64> = out.snapshots.iter().map(|s| s.time).collect();
        let values: Vec<f64> = times
            .iter()
            .map(|&t| {
                let gap = ((-a_eps * t).exp() - (-a0 * t).exp()).abs();
                2.0 * (c0.norm() * gap).powi(2)
            })
            .collect();
        let mut integral = 0.0;
        for i in 1..times.len() {
            integral += 0.5 * (times[i] - times[i - 1]) * (values[i] + values[i - 1]);
        }
        let oracle = integral.sqrt();
        let rel = (numeric - oracle).abs() / oracle;
        check(
            &mut failures,
            rel <= 1e-8,
            format!("linear ladder at eps {eps:.0e}: {rel:.3e} from scalar closed form > 1e-8"),
        );
    }

    report(8, failures);
}

// ---------------------------------------------------------------------------
// criterion 9: perturbed-data stability with a fitted integral envelope

#[test]
fn criterion_09_weak_strong_stability() {
    let mut failures = Vec::new();
    let grid = Grid::new(32, 32, 32).unwrap();
    let op = pe_op(0.05, 0.1);
    let mut settings = SolverSettings::new(op, 5e-3, 0.25);
    settings.record_every = 2;

    let ens = EnsembleSpec::new(1, 99, 2.0, FieldConstraint::Hydrostatic2d).unwrap();
    let base_initial = random_hydrostatic(grid, &ens, 0).unwrap().scaled(0.3);
    let base = run::<2, PrimitiveEquations>(&settings, &Forcing::none(), &base_initial).unwrap();

    let dir_ens = EnsembleSpec::new(1, 7, 1.5, FieldConstraint::Hydrostatic2d).unwrap();
    let raw_dir = random_hydrostatic(grid, &dir_ens, 0).unwrap();
    let direction = raw_dir.scaled(1.0 / raw_dir.l2_norm());

    let sizes = [1e-2, 1e-3, 1e-4];
    let mut ratios = Vec::new();
    for &size in &sizes {
        let mut initial = base_initial.clone();
        initial.add_scaled(size, &direction).unwrap();
        let perturbed =
            run::<2, PrimitiveEquations>(&settings, &Forcing::none(), &initial).unwrap();
        let study = difference_study(&perturbed.snapshots, &base.snapshots, &op).unwrap();
        let ratio = study.sup_delta() / size;
        ratios.push(ratio);
        match gronwall_fit(&study, &base.snapshots, &op).unwrap() {
            GronwallOutcome::Fit(fit) => check(
                &mut failures,
                fit.feasible,
                format!("size {size:.0e}: fitted envelope infeasible (c_hat {:.3e})", fit.c_hat),
            ),
            GronwallOutcome::DeterminismCheck { .. } => {
                failures.push(format!("size {size:.0e}: unexpectedly treated as zero gap"));
            }
        }
    }

    // one constant must cover every size: each amplification is modest and
    // they agree with each other to a factor of two
    let max_ratio = ratios.iter().cloned().fold(f64::MIN, f64::max);
    let min_ratio = ratios.iter().cloned().fold(f64::MAX, f64::min);
    check(
        &mut failures,
        max_ratio <= 10.0,
        format!("amplification {max_ratio:.3} exceeds the pinned bound 10 (ratios {ratios:?})"),
    );
    check(
        &mut failures,
        max_ratio / min_ratio <= 2.0,
        format!("amplification spread {:.3} exceeds 2 (ratios {ratios:?})", max_ratio / min_ratio),
    );

    report(9, failures);
}

// ---------------------------------------------------------------------------
// criterion 10: dual-norm uniformity of the time derivative across the sweep

#[test]
fn criterion_10_time_derivative_uniformity() {
    let mut failures = Vec::new();
    let data = sweep_data();

    for (name, sweep) in [("ns", &data.ns), ("pe", &data.pe)] {
        for (i, &d) in sweep.derivative_norms.iter().enumerate() {
            check(
                &mut failures,
                d.is_finite() && d > 0.0,
                format!("{name} derivative norm at eps {:.0e} not finite positive: {d}", SWEEP_EPS[i]),
            );
        }
        let max = sweep.derivative_norms.iter().cloned().fold(f64::MIN, f64::max);
        let min = sweep.derivative_norms.iter().cloned().fold(f64::MAX, f64::min);
        check(
            &mut failures,
            max / min <= 10.0,
            format!(
                "{name} dual-norm spread {:.3} exceeds 10 (norms {:?})",
                max / min,
                sweep.derivative_norms
            ),
        );
    }

    report(10, failures);
}

// ---------------------------------------------------------------------------
// criterion 11: byte-identical artifacts from repeated seeded CLI runs

fn run_cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_hypervisc"))
        .args(args)
        .output()
        .expect("binary launches")
}

fn collect_files(root: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).expect("readable dir") {
            let path = entry.expect("entry").path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&path).expect("readable file"));
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

fn assert_identical_trees(failures: &mut Vec<String>, label: &str, a: &Path, b: &Path) {
    let fa = collect_files(a);
    let fb = collect_files(b);
    let names_a: Vec<&String> = fa.keys().collect();
    let names_b: Vec<&String> = fb.keys().collect();
    if names_a != names_b {
        failures.push(format!("{label}: file sets differ: {names_a:?} vs {names_b:?}"));
        return;
    }
    for (name, bytes) in &fa {
        if fb[name] != *bytes {
            failures.push(format!("{label}: {name} differs between reruns"));
        }
    }
}

#[test]
fn criterion_11_cli_determinism() {
    let mut failures = Vec::new();
    let work = tempfile::tempdir().unwrap();
    let base = work.path();

    let run_cfg = base.join("run.toml");
    std::fs::write(
        &run_cfg,
        r#"
[equation]
branch = "ns"

[grid]
n = [8, 8, 8]

[operator]
variant = "full-hyper"
nu = 0.02
eps = 0.05
l = 1.25

[time]
dt = 0.01
t_final = 0.05

[initial]
kind = "random"
seed = 12
amplitude = 0.3

[sweep]
epsilons = [1e-1, 1e-2]

[stability]
perturbation_sizes = [0.0, 1e-3]
seed = 5

[verify]
count = 4
seed = 42
ns_operator = { variant = "full-hyper", nu = 0.05, eps = 0.1, l = 1.25 }
pe_operator = { variant = "full-hyper", nu = 0.0, eps = 0.1, l = 1.6 }
mixed_operator = { variant = "horizontal-hyper", nu = 0.05, eps = 0.1, l = 2.0 }
"#,
    )
    .unwrap();

    let pe_cfg = base.join("pe.toml");
    std::fs::write(
        &pe_cfg,
        r#"
[equation]
branch = "pe"

[grid]
n = [8, 8, 8]

[operator]
variant = "full-hyper"
nu = 0.05
eps = 0.05
l = 1.6

[time]
dt = 0.01
t_final = 0.05

[initial]
kind = "taylor-green"
amplitude = 0.4

[stability]
perturbation_sizes = [0.0, 1e-3]
seed = 5
"#,
    )
    .unwrap();

    let cfg = run_cfg.to_str().unwrap();
    let pe = pe_cfg.to_str().unwrap();
    let dir = |name: &str| base.join(name).to_str().unwrap().to_string();

    let subcommands: Vec<(&str, Vec<String>)> = vec![
        (
            "run",
            vec!["run".into(), "--config".into(), cfg.into()],
        ),
        (
            "sweep-eps",
            vec!["sweep-eps".into(), "--config".into(), cfg.into()],
        ),
        (
            "stability",
            vec!["stability".into(), "--config".into(), pe.into()],
        ),
        (
            "verify",
            vec!["verify".into(), "--config".into(), cfg.into()],
        ),
    ];

    for (name, args) in &subcommands {
        for attempt in ["a", "b"] {
            let out_dir = dir(&format!("{name}_{attempt}"));
            let mut full: Vec<String> = args.clone();
            full.extend([
                "--out".into(),
                out_dir,
                "--deterministic".into(),
            ]);
            let argv: Vec<&str> = full.iter().map(String::as_str).collect();
            let output = run_cli(&argv);
            check(
                &mut failures,
                output.status.success(),
                format!(
                    "{name} ({attempt}) exited nonzero: {}",
                    String::from_utf8_lossy(&output.stderr)
                ),
            );
        }
        assert_identical_trees(
            &mut failures,
            name,
            &base.join(format!("{name}_a")),
            &base.join(format!("{name}_b")),
        );
    }

    // diagnose twice over the same artifacts
    for attempt in ["a", "b"] {
        let output = run_cli(&[
            "diagnose",
            &dir("run_a"),
            "--out",
            &dir(&format!("diag_{attempt}")),
            "--deterministic",
        ]);
        check(
            &mut failures,
            output.status.success(),
            format!(
                "diagnose ({attempt}) exited nonzero: {}",
                String::from_utf8_lossy(&output.stderr)
            ),
        );
    }
    assert_identical_trees(
        &mut failures,
        "diagnose",
        &base.join("diag_a"),
        &base.join("diag_b"),
    );

    report(11, failures);
}
