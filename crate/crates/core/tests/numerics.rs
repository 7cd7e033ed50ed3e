//! Convergence and limiting cases of the kernel propagator.

use num_complex::Complex64;

use quasibath::model::{build_system_hamiltonian, closed_spectrum};
use quasibath::oracle::{build_full, exact_propagate, recurrence_time, site_state};
use quasibath::propagator::{dt_check, propagate, Initial, Trajectory};
use quasibath::ModelConfig;

fn gap(coarse: &Trajectory, fine: &Trajectory) -> f64 {
    let stride = (coarse.dt() / fine.dt()).round() as usize;
    (0..coarse.len())
        .flat_map(|i| (1..=coarse.n_s).map(move |n| (i, n)))
        .map(|(i, n)| (coarse.amp(i, n) - fine.amp(i * stride, n)).norm())
        .fold(0.0, f64::max)
}

#[test]
fn step_halving_is_second_order() {
    for d in [1, 2, 3] {
        let base = ModelConfig { d, g: 0.3, t_max: 15.0, ..ModelConfig::default() };
        let runs: Vec<Trajectory> =
            [0.2, 0.1, 0.05].iter().map(|&dt| propagate(&ModelConfig { dt, ..base.clone() }, &Initial::Site(11)).unwrap()).collect();
        let order = (gap(&runs[0], &runs[1]) / gap(&runs[1], &runs[2])).log2();
        assert!(order >= 1.8, "d={d}: observed order {order}");
    }
}

#[test]
fn decoupled_chain_follows_its_own_hamiltonian() {
    for delta in [0.5, 1.0, 3.0] {
        let cfg = ModelConfig { delta, g: 0.0, dt: 0.1, t_max: 100.0, ..ModelConfig::default() };
        let tr = propagate(&cfg, &Initial::Site(3)).unwrap();
        let cs = closed_spectrum(&build_system_hamiltonian(&cfg)).unwrap();
        for (i, &t) in tr.times.iter().enumerate().step_by(37) {
            for n in 1..=cfg.n_s {
                let exact: Complex64 =
                    (0..cs.len()).map(|q| Complex64::from_polar(cs.states[(n - 1, q)] * cs.states[(2, q)], -cs.energies[q] * t)).sum();
                assert!((tr.amp(i, n) - exact).norm() < 1e-8);
            }
        }
    }
}

#[test]
fn dt_check_does_not_flag_default_step() {
    let cfg = ModelConfig { t_max: 40.0, ..ModelConfig::default() };
    let c = dt_check(&cfg, &Initial::Site(1)).unwrap();
    assert!(!c.flagged, "{c:?}");
}

/// Kernel against the finite-bath oracle for the higher-dimensional baths,
/// before the first recurrence.
#[test]
fn kernel_matches_oracle_in_two_and_three_dimensions() {
    for (d, n_b, n_s) in [(2usize, 61usize, 9usize), (3, 25, 7)] {
        let mut cfg = ModelConfig { d, n_b, n_s, g: 0.2, dt: 0.02, t_max: 1.0, ..ModelConfig::default() };
        cfg.t_max = (0.8 * recurrence_time(&cfg)).floor();
        let tr = propagate(&cfg, &Initial::Site(2)).unwrap();
        let h = build_full(&cfg).unwrap();
        let run = exact_propagate(&h, &site_state(&h, 2).unwrap(), &tr.times).unwrap();
        let mut dev: f64 = 0.0;
        for i in 0..tr.len() {
            for n in 1..=n_s {
                dev = dev.max((tr.amp(i, n) - run.chain_amp(i, n)).norm());
            }
        }
        assert!(dev < 1e-4, "d={d}: deviation {dev:e} up to t={}", cfg.t_max);
    }
}
