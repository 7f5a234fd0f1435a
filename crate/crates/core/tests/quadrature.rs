use rtscts::analysis::{mean_interference, AnalysisError, QuadratureConfig, ThinningType};
use rtscts::{oracle, NetworkParams};

fn params(lambda_p: f64, r_cs: f64, r_tx: f64) -> NetworkParams {
    let mut p = NetworkParams::reference(lambda_p);
    p.r_cs = r_cs;
    p.r_tx = r_tx;
    p
}

fn interference(thinning: ThinningType, p: &NetworkParams, r_max: f64) -> f64 {
    mean_interference(thinning, p, &QuadratureConfig::with_r_max(r_max))
        .expect("converges")
        .mean_interference
}

#[test]
fn small_density_limit_matches_polar_oracle() {
    let lp = 1e-6;
    let cases = [
        (ThinningType::TypeI, params(lp, 2.0, 1.0)),
        (ThinningType::TypeI, params(lp, 3.0, 1.0)),
        (ThinningType::TypeII, params(lp, 3.0, 1.0)),
        (ThinningType::TypeII, params(lp, 3.0, 0.5)),
    ];
    for (t, p) in cases {
        let quad = interference(t, &p, 20.0) / lp;
        let exact = oracle::small_density_limit(t, &p, 20.0);
        assert!(
            ((quad - exact) / exact).abs() < 2e-3,
            "{t} {p:?}: {quad} vs {exact}"
        );
    }
}

#[test]
fn larger_guard_zones_reduce_interference() {
    let lp = 0.05;
    let sweeps = [
        (ThinningType::TypeI, [(2.0, 1.0), (2.5, 1.0), (3.0, 1.0)]),
        (ThinningType::TypeI, [(2.0, 0.5), (2.0, 1.0), (2.0, 1.5)]),
        (ThinningType::TypeII, [(3.0, 1.0), (3.5, 1.0), (4.0, 1.0)]),
        (ThinningType::TypeII, [(3.0, 0.5), (3.0, 0.75), (3.0, 1.0)]),
    ];
    for (t, sweep) in sweeps {
        let values: Vec<f64> = sweep
            .iter()
            .map(|&(c, x)| interference(t, &params(lp, c, x), 20.0))
            .collect();
        for w in values.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-3), "{t} {sweep:?}: {values:?}");
        }
    }
}

// With d + r_tx > r_cs a type II interferer may sit inside the CTS disk of the
// typical receiver, so the integral is only held finite by the near-field cutoff.
#[test]
fn type2_reference_geometry_does_not_converge() {
    let p = NetworkParams::reference(0.05);
    match mean_interference(
        ThinningType::TypeII,
        &p,
        &QuadratureConfig::with_r_max(20.0),
    ) {
        Err(AnalysisError::NotConverged { history }) => {
            assert_eq!(history.len(), 5);
            assert!(history.windows(2).all(|w| w[1] > 2.0 * w[0]), "{history:?}");
        }
        other => panic!("expected divergence, got {other:?}"),
    }
}

#[test]
fn single_precision_core_agrees() {
    let q64 = QuadratureConfig {
        refine_levels: 0,
        ..QuadratureConfig::with_r_max(12.0)
    };
    let q32 = rtscts::analysis::QuadratureConfig::<f32> {
        r_max: 12.0,
        n_r: q64.n_r,
        n_phi: q64.n_phi,
        n_theta: q64.n_theta,
        refine_levels: 0,
        rel_tol: 1.0,
    };
    let single = rtscts::params::NetworkParams::<f32>::reference(0.05);
    let a = mean_interference(ThinningType::TypeI, &NetworkParams::reference(0.05), &q64);
    let b = mean_interference(ThinningType::TypeI, &single, &q32);
    // One level cannot converge; compare the recorded estimates.
    let first = |e: &AnalysisError| match e {
        AnalysisError::NotConverged { history } => history[0],
        other => panic!("{other}"),
    };
    let x = first(&a.unwrap_err());
    let y = first(&b.unwrap_err());
    assert!(((x - y) / x).abs() < 1e-4, "{x} vs {y}");
}
