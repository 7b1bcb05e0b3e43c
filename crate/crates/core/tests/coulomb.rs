use std::f64::consts::PI;

use proptest::prelude::*;
use septrap_core::constants::angular;
use septrap_core::coulomb::{
    coupling_g, exchange_evolve, exchange_unitary, frequency_shift, full_coupling_propagate, renormalized_frequency,
    CouplingFrame, FullCouplingOptions, IonSpecies, TrapPair,
};
use septrap_core::fockspace::{
    build_mode_operator, expm, tensor, FockBasis, HybridState, ModeOperator, OperatorKind, PropagateOptions, C64,
};

fn be(d: f64) -> TrapPair {
    TrapPair::symmetric(IonSpecies::beryllium9(), angular(4.04e6), d).unwrap()
}

fn mean_excitation(s: &HybridState) -> f64 {
    let pops = |f| s.populations(f).unwrap();
    [0, 1].iter().map(|&f| pops(f).iter().enumerate().map(|(n, p)| n as f64 * p).sum::<f64>()).sum()
}

#[test]
fn exchange_unitary_matches_full_space_exponential() {
    for (n1, n2) in [(3, 3), (5, 2), (1, 4)] {
        let (b1, b2) = (FockBasis::new(n1).unwrap(), FockBasis::new(n2).unwrap());
        let a = |b| build_mode_operator(b, OperatorKind::Annihilation, None).unwrap();
        let a1 = tensor(&[a(b1), ModeOperator::identity(b2.dim())]).unwrap();
        let a2 = tensor(&[ModeOperator::identity(b1.dim()), a(b2)]).unwrap();
        let hop = a1.checked_mul(&a2.dagger()).unwrap();
        let gen = (hop.matrix() + hop.dagger().matrix()).mapv(|z| z * C64::new(0.0, 0.83));
        let want = expm(&gen);
        let got = exchange_unitary(b1, b2, 0.83).unwrap();
        let dev = got.iter().zip(want.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(dev < 1e-12, "({n1}, {n2}): {dev}");
    }
}

#[test]
fn coupling_scales_with_inverse_cube_of_distance() {
    let near = coupling_g(&be(20e-6));
    let far = coupling_g(&be(40e-6));
    assert!((near / far - 8.0).abs() < 1e-12);
}

#[test]
fn coupling_is_symmetric_in_the_ions() {
    let ca = IonSpecies::new(40.0 * 1.660539067e-27, 1.602176634e-19).unwrap();
    let pair = TrapPair::new([IonSpecies::beryllium9(), ca], [angular(4.0e6), angular(2.5e6)], 30e-6).unwrap();
    let swapped = pair.swapped();
    assert!((coupling_g(&pair) - coupling_g(&swapped)).abs() < 1e-12 * coupling_g(&pair));
    assert!((frequency_shift(&pair, 0).unwrap() - frequency_shift(&swapped, 1).unwrap()).abs() < 1e-9);
}

#[test]
fn decoupled_limit_restores_bare_frequency() {
    let pair = be(1.0);
    let nu = angular(4.04e6);
    assert!((renormalized_frequency(&pair, 0).unwrap() - nu).abs() < 1e-6 * (nu * 1e-12).max(1.0));
}

#[test]
fn quarter_and_half_exchange() {
    let b = FockBasis::new(10).unwrap();
    let g = coupling_g(&be(40e-6));
    let out = exchange_evolve(&HybridState::modes(&[1, 0], b).unwrap(), g, PI / (2.0 * g)).unwrap();
    assert!((out.amplitude(&[0, 1]).unwrap() - C64::new(0.0, 1.0)).norm() < 1e-12);

    let vac = HybridState::modes(&[0, 0], b).unwrap();
    assert!(exchange_evolve(&vac, g, 1.3e-4).unwrap().max_abs_diff(&vac).unwrap() < 1e-14);

    let s01 = HybridState::modes(&[0, 1], b).unwrap();
    let out = exchange_evolve(&s01, g, PI / g).unwrap();
    assert!((out.amplitude(&[0, 1]).unwrap() + C64::new(1.0, 0.0)).norm() < 1e-12);
}

#[test]
fn population_follows_cosine_squared() {
    let b = FockBasis::new(6).unwrap();
    let g = coupling_g(&be(40e-6));
    let s = HybridState::modes(&[0, 1], b).unwrap();
    let period = PI / g;
    for i in 0..20 {
        let t = period * i as f64 / 20.0;
        let p = exchange_evolve(&s, g, t).unwrap().probability(&[0, 1]).unwrap();
        assert!((p - (g * t).cos().powi(2)).abs() < 1e-10);
    }
}

#[test]
fn far_separated_traps_only_rotate_freely() {
    let b = FockBasis::new(4).unwrap();
    let s = HybridState::modes(&[1, 0], b).unwrap();
    let opts = FullCouplingOptions { frame: CouplingFrame::TrapMinimum, propagation: PropagateOptions::with_tol(1e-9) };
    let (out, _) = full_coupling_propagate(&s, &be(10.0), 5e-6, &opts).unwrap();
    assert!(out.overlap(&s).unwrap() > 1.0 - 1e-10);
}

#[test]
fn detuned_traps_barely_exchange() {
    let pair = be(40e-6).with_nu(0, angular(4.04e6) + 1e5).unwrap();
    let g = coupling_g(&be(40e-6));
    let b = FockBasis::new(6).unwrap();
    let s = HybridState::modes(&[1, 0], b).unwrap();
    let opts = FullCouplingOptions { propagation: PropagateOptions::with_tol(1e-4), ..Default::default() };
    let (out, _) = full_coupling_propagate(&s, &pair, PI / (2.0 * g), &opts).unwrap();
    let lost = 1.0 - out.probability(&[1, 0]).unwrap();
    assert!(lost < (2.0 * g / 1e5).powi(2), "lost {lost}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exchange_conserves_excitations_and_reverses(
        n1 in 0usize..5, n2 in 0usize..5, re in -1.0f64..1.0, im in -1.0f64..1.0, gt in -4.0f64..4.0,
    ) {
        let b = FockBasis::new(10).unwrap();
        let mut amps = HybridState::modes(&[n1, n2], b).unwrap().amplitudes().clone();
        amps[b.dim() * n2 + n1] += C64::new(re, im);
        let s = HybridState::normalized(HybridState::modes(&[0, 0], b).unwrap().factors().to_vec(), amps).unwrap();
        let g = 1.0e4;
        let out = exchange_evolve(&s, g, gt / g).unwrap();
        prop_assert!((mean_excitation(&out) - mean_excitation(&s)).abs() < 1e-12);
        let back = exchange_evolve(&out, g, -gt / g).unwrap();
        prop_assert!(back.max_abs_diff(&s).unwrap() < 1e-12);
    }
}
