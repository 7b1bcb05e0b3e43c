//! Acceptance criteria 1-10. Runs every criterion, prints one PASS/FAIL line
//! each and exits non-zero if any failed.

use std::f64::consts::{FRAC_PI_2, PI};
use std::time::Instant;

use ndarray::Array2;
use septrap_core::constants::angular;
use septrap_core::coulomb::{
    coupling_g, exchange_evolve, exchange_unitary, frequency_shift, full_coupling_propagate, FullCouplingOptions,
    IonSpecies, TrapPair,
};
use septrap_core::fockspace::{
    build_mode_operator, displacement_operator, expm, propagate, FockBasis, HybridState, Level, OperatorKind,
    PropagateOptions, C64,
};
use septrap_core::laser_ion::{
    full_interaction_propagate, rabi_mk, rwa_hamiltonian, sideband_evolve, sideband_unitary, solve_cnot_duration,
    FullModelOptions, LaserPulse,
};
use septrap_core::protocol::{
    build_schedule, chain_cnot_duration, exchange_hold, expected_truth_table, run_protocol, sideband_pi_half,
    LaserParams, Phases, ProtocolInput, ScheduleOptions,
};
use septrap_core::sweep::{exchange_step, gamma_nm, sweep_propagate, RampDirection, SweepOptions, SweepSpec};

const NU: f64 = 4.04e6;
const ETA: f64 = 0.33;
const TAU: f64 = 9e-6;
const SWEEP_DELTA: f64 = 1e5;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn within(value: f64, target: f64, rel: f64) -> bool {
    (value - target).abs() <= rel * target.abs()
}

fn pair(d: f64) -> TrapPair {
    TrapPair::symmetric(IonSpecies::beryllium9(), angular(NU), d).unwrap()
}

fn ramp() -> SweepSpec {
    SweepSpec::new(SWEEP_DELTA, TAU, RampDirection::On).unwrap()
}

fn criterion_1() -> Outcome {
    let far = coupling_g(&pair(40e-6));
    let near = coupling_g(&pair(20e-6));
    check(
        within(far, angular(1.5e3), 0.02) && within(near, angular(12e3), 0.02),
        format!(
            "g/2pi = {:.1} Hz at 40 um (1.5 kHz +-2%), {:.1} Hz at 20 um (12 kHz +-2%)",
            far / (2.0 * PI),
            near / (2.0 * PI)
        ),
    )
}

fn criterion_2() -> Outcome {
    let p = pair(40e-6);
    let shifts = [frequency_shift(&p, 0).unwrap(), frequency_shift(&p, 1).unwrap()];
    check(
        shifts.iter().all(|&s| within(s, angular(1.5e3), 0.02)),
        format!("shift/2pi = {:.1}, {:.1} Hz (1.5 kHz +-2%)", shifts[0] / (2.0 * PI), shifts[1] / (2.0 * PI)),
    )
}

fn criterion_3() -> Outcome {
    let p = pair(40e-6);
    let at = angular(NU);
    let g20 = gamma_nm(&p, &ramp(), 2, 0, at).unwrap();
    let g31 = gamma_nm(&p, &ramp(), 3, 1, at).unwrap();
    check(
        g20 <= 3.1e-6 && g31 <= 5.3e-6 && within(g20, 3.05e-6, 0.03) && within(g31, 5.28e-6, 0.03),
        format!("gamma_20 = {g20:.4e} (<=3.1e-6, 3.05e-6 +-3%), gamma_31 = {g31:.4e} (<=5.3e-6, 5.28e-6 +-3%)"),
    )
}

fn criterion_4() -> Outcome {
    let rabi = angular(500e3);
    let t1 = FRAC_PI_2 / rabi_mk(rabi, ETA, 0, 1);
    let t3 = solve_cnot_duration(rabi, ETA, 1e-2, 100e-6).unwrap().duration;
    check(
        within(t1, 3.2e-6, 0.02) && within(t3, 29.6e-6, 0.01),
        format!("t1 = {:.3} us (3.2 +-2%), t3 = {:.3} us (29.6 +-1%)", t1 * 1e6, t3 * 1e6),
    )
}

fn two_ion_total(rabi_hz: f64, g_hz: f64) -> f64 {
    let laser = LaserParams { rabi: angular(rabi_hz), eta: ETA };
    let opts = ScheduleOptions { coupling: Some(angular(g_hz)), ..Default::default() };
    let s = build_schedule(&pair(40e-6), laser, ramp(), Phases::default(), opts).unwrap();
    s.total_duration()
}

fn criterion_5() -> Outcome {
    let slow = two_ion_total(500e3, 1.5e3);
    let fast = two_ion_total(1.6e6, 12e3);
    let laser = LaserParams { rabi: angular(1.6e6), eta: ETA };
    let t3 = solve_cnot_duration(laser.rabi, ETA, 1e-2, 100e-6).unwrap().duration;
    let chain = chain_cnot_duration(10, sideband_pi_half(&laser), exchange_hold(angular(12e3)), t3, TAU);
    check(
        within(slow, 405.4e-6, 0.01) && within(fast, 88.9e-6, 0.01) && within(chain, 709.7e-6, 0.01),
        format!(
            "totals {:.2} us (405.4), {:.2} us (88.9), chain {:.2} us (709.7), each +-1%",
            slow * 1e6,
            fast * 1e6,
            chain * 1e6
        ),
    )
}

fn criterion_6() -> Outcome {
    let laser = LaserParams { rabi: angular(500e3), eta: ETA };
    let opts = ScheduleOptions { coupling: Some(angular(1.5e3)), n_max: 4, ..Default::default() };
    let mut worst: f64 = 0.0;
    let mut state = 0x2545_f491_4f6c_dd1d_u64;
    let mut next = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 * PI - PI
    };
    for _ in 0..100 {
        let phases = Phases::new(next(), next(), next());
        let s = build_schedule(&pair(40e-6), laser, ramp(), phases, opts).unwrap();
        let r = run_protocol(&s, &ProtocolInput::Basis(0)).unwrap();
        worst = worst.max(max_abs_diff(r.truth_table.view(), expected_truth_table(&phases).view()));
    }
    let s = build_schedule(&pair(40e-6), laser, ramp(), Phases::default(), opts).unwrap();
    let fid = run_protocol(&s, &ProtocolInput::Basis(0)).unwrap().fidelity;
    check(
        worst < 1e-10 && (fid - 1.0).abs() < 1e-12,
        format!(
            "max truth-table deviation {worst:.2e} over 100 triples (<1e-10), CNOT fidelity 1 - {:.2e} (<1e-12)",
            1.0 - fid
        ),
    )
}

fn displacement_oracle(rabi: f64, eta: f64, m: usize, k: usize) -> f64 {
    let basis = FockBasis::new(60).unwrap();
    let x = build_mode_operator(basis, OperatorKind::Position, Some(1.0)).unwrap();
    let gen = x.matrix().mapv(|z| z * C64::new(0.0, eta));
    0.5 * rabi * expm(&gen)[[m + k, m]].norm()
}

fn criterion_7() -> Outcome {
    let rabi = angular(500e3);
    let mut worst: f64 = 0.0;
    for eta in [0.1, 0.33, 0.5, 0.9] {
        for m in 0..=10 {
            for k in 0..=3 {
                let want = displacement_oracle(rabi, eta, m, k);
                worst = worst.max((rabi_mk(rabi, eta, m, k).abs() - want).abs() / want);
            }
        }
    }
    check(worst < 1e-10, format!("max relative deviation {worst:.2e} (<1e-10)"))
}

fn criterion_8() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();

    let p = pair(40e-6);
    let g = coupling_g(&p);
    let b = FockBasis::new(8).unwrap();
    let start = HybridState::modes(&[1, 0], b).unwrap();
    let t = FRAC_PI_2 / g;
    let opts = FullCouplingOptions { propagation: PropagateOptions::with_tol(1e-5), ..Default::default() };
    let (full, _) = full_coupling_propagate(&start, &p, t, &opts).unwrap();
    let closed = exchange_evolve(&start, g, t).unwrap();
    let inf = 1.0 - full.overlap(&closed).unwrap();
    pass &= inf < 1e-3;
    parts.push(format!("exchange infidelity {inf:.2e} (<1e-3)"));

    for (rabi_hz, limit) in [(500e3, 2e-2), (5e3, 1e-4)] {
        let rabi = angular(rabi_hz);
        let pulse = LaserPulse::new(rabi, ETA, 1, 0.0, FRAC_PI_2 / rabi_mk(rabi, ETA, 0, 1)).unwrap();
        let mut worst: f64 = 0.0;
        for level in [Level::Ground, Level::Excited] {
            let s = HybridState::ion(level, 0, FockBasis::new(10).unwrap()).unwrap();
            let full = full_interaction_propagate(&s, &pulse, angular(NU), &FullModelOptions::default()).unwrap();
            let closed = sideband_evolve(&s, &pulse).unwrap();
            worst = worst.max(1.0 - full.overlap(&closed).unwrap());
        }
        pass &= worst < limit;
        parts.push(format!("step I at rabi/nu = {:.4}: worst infidelity {worst:.2e} (<{limit:.0e})", rabi_hz / NU));
    }
    check(pass, parts.join("; "))
}

fn criterion_9() -> Outcome {
    let p = pair(40e-6);
    let b = FockBasis::new(6).unwrap();
    let vacuum = HybridState::modes(&[0, 0], b).unwrap();
    let leak = sweep_propagate(&vacuum, &p, &ramp(), true).unwrap().leakage;

    let g = coupling_g(&p);
    let start = HybridState::modes(&[1, 0], FockBasis::new(4).unwrap()).unwrap();
    let out = exchange_step(&start, [0, 1], &p, SWEEP_DELTA, TAU, exchange_hold(g), &SweepOptions::default()).unwrap();
    let amp = out.state.amplitude(&[0, 1]).unwrap().norm();
    let formula = (FRAC_PI_2 + 2.0 * g * TAU).sin();
    check(
        leak < 1e-4 && (amp - formula).abs() < 1e-2 && (amp - 0.9856).abs() < 1e-2,
        format!("leakage {leak:.2e} (<1e-4); exchange amplitude {amp:.5} vs sin(pi/2 + 2 g tau) = {formula:.5} and 0.9856 (+-1e-2)"),
    )
}

fn embed_diff(small: &HybridState, large: &HybridState) -> f64 {
    let dims = small.dims();
    let mut idx = vec![0usize; dims.len()];
    let mut worst: f64 = 0.0;
    loop {
        let a = small.amplitude(&idx).unwrap();
        let b = large.amplitude(&idx).unwrap();
        worst = worst.max((a - b).norm());
        let mut f = dims.len();
        loop {
            if f == 0 {
                return worst;
            }
            f -= 1;
            idx[f] += 1;
            if idx[f] < dims[f] {
                break;
            }
            idx[f] = 0;
        }
    }
}

fn max_abs_diff(a: ndarray::ArrayView2<C64>, b: ndarray::ArrayView2<C64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn unitarity(u: &Array2<C64>) -> f64 {
    max_abs_diff(u.t().mapv(|z| z.conj()).dot(u).view(), Array2::<C64>::eye(u.nrows()).view())
}

fn criterion_10() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    let mut record = |name: &str, value: f64, limit: f64| {
        pass &= value < limit;
        parts.push(format!("{name} {value:.1e}"));
    };

    let b = FockBasis::new(12).unwrap();
    let rabi = angular(500e3);
    let mut worst_u: f64 = 0.0;
    for k in 0..3 {
        let pulse = LaserPulse::new(rabi, ETA, k, 0.7, 2.3e-6).unwrap();
        worst_u = worst_u.max(unitarity(&sideband_unitary(b, &pulse)));
    }
    worst_u = worst_u.max(unitarity(&exchange_unitary(b, b, 0.9).unwrap()));
    record("unitarity", worst_u, 1e-12);

    let g = angular(1.5e3);
    let mixed = HybridState::normalized(
        HybridState::modes(&[0, 0], FockBasis::new(5).unwrap()).unwrap().factors().to_vec(),
        ndarray::Array1::from_shape_fn(36, |i| {
            C64::new((i as f64 * 0.37).sin(), (i as f64 * 1.3).cos()) * if i / 6 + i % 6 <= 5 { 1.0 } else { 0.0 }
        }),
    )
    .unwrap();
    let moved = exchange_evolve(&mixed, g, 1.234e-4).unwrap();
    record("norm", (moved.norm() - 1.0).abs(), 1e-10);

    let total = |s: &HybridState| -> f64 {
        let mut mean = 0.0;
        for n1 in 0..6 {
            for n2 in 0..6 {
                mean += (n1 + n2) as f64 * s.probability(&[n1, n2]).unwrap();
            }
        }
        mean
    };
    record("excitation", (total(&moved) - total(&mixed)).abs(), 1e-10);

    let back = exchange_evolve(&moved, g, -1.234e-4).unwrap();
    let pulse = LaserPulse::new(rabi, ETA, 1, 0.4, 1.7e-6).unwrap();
    let reverse = LaserPulse { phase: 0.4 + PI, ..pulse };
    let ion = HybridState::ion(Level::Excited, 2, b).unwrap();
    let ion_back = sideband_evolve(&sideband_evolve(&ion, &pulse).unwrap(), &reverse).unwrap();
    record("time reversal", back.max_abs_diff(&mixed).unwrap().max(ion_back.max_abs_diff(&ion).unwrap()), 1e-12);

    let h = rwa_hamiltonian(b, &pulse).unwrap();
    let integrated = propagate(&ion, &h, (0.0, pulse.duration), &PropagateOptions::with_tol(1e-10)).unwrap();
    record("rwa closed form", integrated.max_abs_diff(&sideband_evolve(&ion, &pulse).unwrap()).unwrap(), 1e-8);

    let mut trunc: f64 = 0.0;
    for n in [4usize, 6] {
        let small = FockBasis::new(n).unwrap();
        let large = FockBasis::new(n + 5).unwrap();
        let s = |basis| HybridState::ions(&[(Level::Excited, 0), (Level::Ground, 1)], basis).unwrap();
        let step = |st: &HybridState| {
            let st = septrap_core::laser_ion::sideband_evolve_ion(st, 0, &pulse).unwrap();
            septrap_core::coulomb::exchange_evolve_modes(&st, [1, 3], g, 2e-4).unwrap()
        };
        trunc = trunc.max(embed_diff(&step(&s(small)), &step(&s(large))));
        let v = |basis| HybridState::modes(&[0, 0], basis).unwrap();
        let sw = |st: &HybridState| sweep_propagate(st, &pair(40e-6), &ramp(), true).unwrap().state;
        trunc = trunc.max(embed_diff(&sw(&v(small)), &sw(&v(large))));
    }
    let laser = LaserParams { rabi, eta: ETA };
    let proto = |n| {
        let opts = ScheduleOptions { coupling: Some(g), n_max: n, ..Default::default() };
        let s = build_schedule(&pair(40e-6), laser, ramp(), Phases::default(), opts).unwrap();
        run_protocol(&s, &ProtocolInput::Basis(3)).unwrap().truth_table
    };
    trunc = trunc.max(max_abs_diff(proto(4).view(), proto(9).view()));
    let d_small = displacement_operator(FockBasis::new(10).unwrap(), C64::new(0.3, 0.1)).unwrap();
    let d_large = displacement_operator(FockBasis::new(15).unwrap(), C64::new(0.3, 0.1)).unwrap();
    trunc = trunc.max(max_abs_diff(
        d_small.matrix().slice(ndarray::s![..4, ..4]),
        d_large.matrix().slice(ndarray::s![..4, ..4]),
    ));
    record("truncation", trunc, 1e-6);

    check(
        pass,
        format!(
            "{} (unitarity/norm/excitation <1e-10, reversal <1e-12, rwa <1e-8, truncation <1e-6)",
            parts.join(", ")
        ),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("coupling strength", criterion_1),
        ("frequency renormalization", criterion_2),
        ("adiabaticity bounds", criterion_3),
        ("pulse durations", criterion_4),
        ("timing budgets", criterion_5),
        ("truth table", criterion_6),
        ("rabi frequency oracle", criterion_7),
        ("rotating-wave validation", criterion_8),
        ("sweep leakage", criterion_9),
        ("invariant suite", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let now = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            check(false, format!("panicked: {}", msg.unwrap_or_default()))
        });
        let verdict = if outcome.pass { "PASS" } else { "FAIL" };
        if !outcome.pass {
            failed += 1;
        }
        println!("criterion {:>2} {verdict} {name}: {} [{:.1?}]", i + 1, outcome.detail, now.elapsed());
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
