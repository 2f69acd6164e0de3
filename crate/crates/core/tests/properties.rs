use optomech_core::backaction::{self_consistent_frequencies, FrequencyMode};
use optomech_core::calibration::CALIBRATION;
use optomech_core::dynamics::{build_diffusion, build_drift, evolve_covariance, max_step, DriftDiffusion, DriftVariant, NoiseStructure};
use optomech_core::fullmodel::build_full;
use optomech_core::gaussian::{GaussianState, PHYSICALITY_TOL, VACUUM_VARIANCE};
use optomech_core::model::{CavityConfig, CouplingKind, Drive, MechanicalMode, SystemConfig};
use optomech_core::noise::NoiseModel;
use optomech_core::Error;
use proptest::prelude::*;

fn single(nu: f64, g: f64, gamma: f64, n_th: f64) -> SystemConfig {
    SystemConfig::new(
        CavityConfig { kappa: 1.0, delta_c: 0.0, drive: Drive::PhotonNumber(1.0) },
        vec![MechanicalMode { omega: nu, gamma, coupling: g, n_th }],
        CouplingKind::Linear,
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn reduced_trajectories_stay_physical(
        nu in 0.5f64..3.0,
        g in 0.0f64..0.05,
        gamma in 0.0f64..0.01,
        n_th in 0.0f64..5.0,
        d in -3.0f64..-0.1,
        n0 in 0.0f64..3.0,
        n in 0.0f64..5.0,
        phase in -1.6f64..1.6,
    ) {
        let s = single(nu, g, gamma, n_th);
        let ba = self_consistent_frequencies(&s, d, FrequencyMode::WeakCoupling).unwrap();
        let noise = NoiseModel::squeezed_relative(n, phase, d, 1.0).unwrap();
        let dd = DriftDiffusion {
            m: build_drift(&s, &ba, DriftVariant::Full).unwrap(),
            d: build_diffusion(&s, &ba, &noise, d, NoiseStructure::MomentumRows, CALIBRATION),
        };
        let grid: Vec<f64> = (0..=20).map(|k| k as f64 * 2.0).collect();
        let states = evolve_covariance(&dd, &GaussianState::thermal(1, n0), &grid, Some(max_step(&dd.m))).unwrap();
        for st in states {
            prop_assert!(st.min_symplectic() >= VACUUM_VARIANCE - PHYSICALITY_TOL);
        }
    }

    #[test]
    fn full_diffusion_is_psd(g in 0.0f64..0.1, d in -3.0f64..3.0, n in 0.0f64..10.0, th in -3.2f64..3.2) {
        let s = single(1.0, g, 0.01, 1.0);
        let noise = NoiseModel::squeezed(n, th).unwrap();
        let dd = build_full(&s, d, &noise).unwrap();
        let eig = dd.d.clone().symmetric_eigen();
        prop_assert!(eig.eigenvalues.iter().all(|e| *e >= -1e-12));
    }
}

#[test]
fn step_too_large_is_typed() {
    let s = single(1.0, 0.01, 0.01, 0.0);
    let ba = self_consistent_frequencies(&s, -1.0, FrequencyMode::WeakCoupling).unwrap();
    let dd = DriftDiffusion {
        m: build_drift(&s, &ba, DriftVariant::Full).unwrap(),
        d: build_diffusion(&s, &ba, &NoiseModel::Vacuum, -1.0, NoiseStructure::MomentumRows, CALIBRATION),
    };
    let r = evolve_covariance(&dd, &GaussianState::vacuum(1), &[0.0, 1.0], Some(1.0));
    assert!(matches!(r, Err(Error::StepTooLarge { .. })));
}
