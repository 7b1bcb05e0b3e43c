use std::f64::consts::FRAC_PI_2;

use criterion::{black_box, criterion_group, criterion_main, Criterion};
use septrap_core::constants::angular;
use septrap_core::coulomb::{
    coupling_g, exchange_evolve, full_coupling_propagate, FullCouplingOptions, IonSpecies, TrapPair,
};
use septrap_core::fockspace::{FockBasis, HybridState, Level, PropagateOptions};
use septrap_core::laser_ion::{rabi_mk, sideband_evolve, solve_cnot_duration, LaserPulse};
use septrap_core::protocol::{build_schedule, run_protocol, LaserParams, Phases, ProtocolInput, ScheduleOptions};
use septrap_core::sweep::{RampDirection, SweepSpec};

fn pair() -> TrapPair {
    TrapPair::symmetric(IonSpecies::beryllium9(), angular(4.04e6), 40e-6).unwrap()
}

fn closed_form(c: &mut Criterion) {
    let rabi = angular(500e3);
    c.bench_function("rabi_mk m=30 k=3", |b| b.iter(|| rabi_mk(black_box(rabi), black_box(0.33), 30, 3)));

    let basis = FockBasis::new(20).unwrap();
    let state = HybridState::ion(Level::Excited, 3, basis).unwrap();
    let pulse = LaserPulse::new(rabi, 0.33, 1, 0.2, 3.2e-6).unwrap();
    c.bench_function("sideband_evolve n_max=20", |b| b.iter(|| sideband_evolve(black_box(&state), &pulse).unwrap()));

    let modes = HybridState::modes(&[3, 1], FockBasis::new(12).unwrap()).unwrap();
    c.bench_function("exchange_evolve n_max=12", |b| b.iter(|| exchange_evolve(black_box(&modes), 1.0, 0.7).unwrap()));

    c.bench_function("solve_cnot_duration", |b| {
        b.iter(|| solve_cnot_duration(black_box(rabi), 0.33, 1e-2, 100e-6).unwrap())
    });

    let laser = LaserParams { rabi, eta: 0.33 };
    let ramp = SweepSpec::new(1e5, 9e-6, RampDirection::On).unwrap();
    let schedule = build_schedule(&pair(), laser, ramp, Phases::default(), ScheduleOptions::default()).unwrap();
    c.bench_function("run_protocol closed form", |b| {
        b.iter(|| run_protocol(black_box(&schedule), &ProtocolInput::Basis(3)).unwrap())
    });
}

fn propagation(c: &mut Criterion) {
    let p = pair();
    let t = 0.05 * FRAC_PI_2 / coupling_g(&p);
    let start = HybridState::modes(&[1, 0], FockBasis::new(6).unwrap()).unwrap();
    let opts = FullCouplingOptions { propagation: PropagateOptions::with_tol(1e-5), ..Default::default() };
    let mut group = c.benchmark_group("propagation");
    group.sample_size(10);
    group.bench_function("full coupling, 5% of a quarter exchange", |b| {
        b.iter(|| full_coupling_propagate(black_box(&start), &p, t, &opts).unwrap())
    });
    group.finish();
}

criterion_group!(benches, closed_form, propagation);
criterion_main!(benches);
