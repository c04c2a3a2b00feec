use num_complex::Complex64;
use wavegate::initial_state::{ExponentialSum, InitialData};
use wavegate::kernel::phi;
use wavegate::propagator::{
    propagate, propagate_asymptotic, propagate_closed_delta, propagate_closed_reflectionless,
    propagate_quadrature, propagate_series, rel_l2, Grid, PropagationMethod,
};
use wavegate::special_fn::{faddeeva, sqrt_it};
use wavegate::transmission::{t_coeff, TransmissionModel};
use wavegate::SolverError;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn step() -> InitialData {
    InitialData::Exponentials(ExponentialSum::constant(c(1.0, 0.0)))
}

fn decaying_pair() -> ExponentialSum {
    ExponentialSum::new(vec![
        (c(0.7, 0.0), c(0.5, 0.0)),
        (c(0.1, -0.3), c(1.0, 2.0)),
    ])
    .unwrap()
}

#[test]
fn free_shutter_matches_the_explicit_formula() {
    let grid = Grid::new(vec![1.0, 2.5, 4.0], vec![0.3, 0.7]);
    let wf = propagate(&TransmissionModel::Free, &step(), &grid, PropagationMethod::Closed)
        .unwrap();
    for (i, &t) in grid.ts.iter().enumerate() {
        for (j, &x) in grid.xs.iter().enumerate() {
            let arg = sqrt_it(t).unwrap() * (x / (2.0 * t));
            let want = 0.5 * Complex64::from_polar(1.0, x * x / (4.0 * t))
                * faddeeva(arg).unwrap();
            assert!(
                (wf.psi[i][j] - want).norm() < 1e-13,
                "x = {x}, t = {t}: {} vs {want}",
                wf.psi[i][j]
            );
        }
    }
}

#[test]
fn closed_delta_agrees_with_the_kernel_dispatch() {
    let model = TransmissionModel::Delta { lambda: 1.5 };
    let f = decaying_pair();
    let grid = Grid::new(vec![1.5, 3.0], vec![0.4, 0.9]);
    let wf = propagate_closed_delta(1.5, &f, &grid).unwrap();
    for (i, &t) in grid.ts.iter().enumerate() {
        for (j, &x) in grid.xs.iter().enumerate() {
            let mut want = c(0.0, 0.0);
            for (ck, mu) in f.terms() {
                want += ck * phi(&model, -Complex64::i() * mu, x, t).unwrap().value;
            }
            assert!(
                (wf.psi[i][j] - want).norm() < 1e-12,
                "x = {x}, t = {t}"
            );
        }
    }
}

#[test]
fn closed_reflectionless_agrees_with_the_kernel_dispatch() {
    let model = TransmissionModel::Reflectionless { a: 2.0 };
    let f = decaying_pair();
    let grid = Grid::new(vec![1.0, 2.0], vec![0.35, 0.8]);
    let wf = propagate_closed_reflectionless(2.0, &f, &grid).unwrap();
    for (i, &t) in grid.ts.iter().enumerate() {
        for (j, &x) in grid.xs.iter().enumerate() {
            let mut want = c(0.0, 0.0);
            for (ck, mu) in f.terms() {
                want += ck * phi(&model, -Complex64::i() * mu, x, t).unwrap().value;
            }
            assert!(
                (wf.psi[i][j] - want).norm() < 1e-12,
                "x = {x}, t = {t}"
            );
        }
    }
}

#[test]
fn three_routes_agree_on_a_delta_barrier() {
    // near-field point so the boundary series converges fast
    let model = TransmissionModel::Delta { lambda: 1.0 };
    let f = ExponentialSum::single(c(1.0, 0.0), c(1.0, 0.0)).unwrap();
    let fd = InitialData::Exponentials(f.clone());
    let grid = Grid::new(vec![2.0, 2.6], vec![0.2, 0.3]);
    let closed = propagate_closed_delta(1.0, &f, &grid).unwrap();
    let quad = propagate_quadrature(&model, &f, &grid).unwrap();
    let series = propagate_series(&model, &fd, &grid, 10).unwrap();
    assert!(rel_l2(&quad, &closed).unwrap() < 5e-6);
    assert!(rel_l2(&series, &closed).unwrap() < 1e-4);
}

#[test]
fn asymptotic_tracks_the_closed_form_far_out() {
    let f = ExponentialSum::single(c(1.0, 0.0), c(1.0, 0.0)).unwrap();
    let fd = InitialData::Exponentials(f.clone());
    let model = TransmissionModel::Delta { lambda: 1.0 };
    let grid = Grid::new(vec![40.0, 55.0], vec![1.0]);
    let lead = propagate_asymptotic(&model, &fd, &grid).unwrap();
    let closed = propagate_closed_delta(1.0, &f, &grid).unwrap();
    assert!(lead.warnings.is_empty());
    for j in 0..grid.xs.len() {
        let rel = (lead.psi[0][j] - closed.psi[0][j]).norm() / closed.psi[0][j].norm();
        // error of the leading term is the next order, ~2t/x here
        assert!(rel < 0.1, "x = {}: rel = {rel:.3e}", grid.xs[j]);
        assert!(rel < lead.err[0][j] / closed.psi[0][j].norm() * 3.0);
    }
}

#[test]
fn asymptotic_density_obeys_the_sink_free_law() {
    let model = TransmissionModel::Rectangular { v0: 2.0, half_width: 0.5 };
    let grid = Grid::new(vec![30.0, 45.0, 60.0], vec![0.9]);
    let wf = propagate_asymptotic(&model, &step(), &grid).unwrap();
    let t = grid.ts[0];
    for (j, &x) in grid.xs.iter().enumerate() {
        let tk = t_coeff(&model, c(x / (2.0 * t), 0.0)).unwrap();
        let law = tk.norm_sqr() * t / (std::f64::consts::PI * x * x);
        let rho = wf.psi[0][j].norm_sqr();
        assert!((rho / law - 1.0).abs() < 1e-12, "x = {x}");
    }
}

#[test]
fn asymptotic_regime_gates() {
    let model = TransmissionModel::Free;
    // x^2/4t = 4: refused outright
    let near = Grid::new(vec![2.0], vec![0.25]);
    assert!(matches!(
        propagate_asymptotic(&model, &step(), &near),
        Err(SolverError::Regime(_))
    ));
    // x^2/4t = 36: allowed with a marginal-regime warning
    let mid = Grid::new(vec![6.0], vec![0.25]);
    let wf = propagate_asymptotic(&model, &step(), &mid).unwrap();
    assert_eq!(wf.warnings.len(), 1);
    assert!(wf.warnings[0].contains("marginal"));
}

#[test]
fn quadrature_needs_decay() {
    let f = ExponentialSum::constant(c(1.0, 0.0));
    let grid = Grid::new(vec![3.0], vec![0.5]);
    assert!(matches!(
        propagate_quadrature(&TransmissionModel::Free, &f, &grid),
        Err(SolverError::Divergence(_))
    ));
}

#[test]
fn auto_dispatch_picks_sensible_routes() {
    let near = Grid::new(vec![2.0, 3.0], vec![0.5]);
    let far = Grid::new(vec![40.0, 50.0], vec![0.5]);
    let rect = TransmissionModel::Rectangular { v0: 1.0, half_width: 0.25 };
    let f = step();

    let a = propagate(&TransmissionModel::Free, &f, &near, PropagationMethod::Auto).unwrap();
    assert_eq!(a.method, "closed");
    let b = propagate(&rect, &f, &near, PropagationMethod::Auto).unwrap();
    assert_eq!(b.method, "series");
    let c_ = propagate(&rect, &f, &far, PropagationMethod::Auto).unwrap();
    assert_eq!(c_.method, "asymptotic");

    let derivs = InitialData::BoundaryDerivatives(vec![c(1.0, 0.0), c(0.4, 0.1)]);
    let d = propagate(&TransmissionModel::Free, &derivs, &near, PropagationMethod::Auto)
        .unwrap();
    assert_eq!(d.method, "series");
}

#[test]
fn closed_route_rejects_derivative_only_data() {
    let derivs = InitialData::BoundaryDerivatives(vec![c(1.0, 0.0)]);
    let grid = Grid::new(vec![2.0], vec![0.5]);
    assert!(matches!(
        propagate(&TransmissionModel::Free, &derivs, &grid, PropagationMethod::Closed),
        Err(SolverError::InvalidInput(_))
    ));
}

#[test]
fn series_truncates_to_supplied_derivatives() {
    let model = TransmissionModel::Delta { lambda: 0.5 };
    let grid = Grid::new(vec![2.0], vec![0.4]);
    let one = InitialData::BoundaryDerivatives(vec![c(1.0, 0.0)]);
    let wf = propagate_series(&model, &one, &grid, 8).unwrap();
    let sc = wavegate::kernel::series_a(&model, 2.0, 0.4, 0).unwrap();
    assert!((wf.psi[0][0] - sc.a[0]).norm() < 1e-15);
    assert!(wf.err[0][0] >= sc.a[0].norm());
}

#[test]
fn csv_round_trips_at_full_precision() {
    let grid = Grid::new(vec![1.25], vec![0.375]);
    let wf = propagate(&TransmissionModel::Free, &step(), &grid, PropagationMethod::Closed)
        .unwrap();
    let csv = wf.to_csv();
    let row = csv.lines().nth(1).unwrap();
    let cols: Vec<&str> = row.split(',').collect();
    assert_eq!(cols.len(), 7);
    assert_eq!(cols[0].parse::<f64>().unwrap(), 0.375);
    assert_eq!(cols[2].parse::<f64>().unwrap(), wf.psi[0][0].re);
    assert_eq!(cols[3].parse::<f64>().unwrap(), wf.psi[0][0].im);
    assert_eq!(cols[6], "closed");
}

#[test]
fn rel_l2_guards_grid_mismatch() {
    let g1 = Grid::new(vec![1.0, 2.0], vec![0.5]);
    let g2 = Grid::new(vec![1.0], vec![0.5]);
    let a = propagate(&TransmissionModel::Free, &step(), &g1, PropagationMethod::Closed)
        .unwrap();
    let b = propagate(&TransmissionModel::Free, &step(), &g2, PropagationMethod::Closed)
        .unwrap();
    assert!(rel_l2(&a, &b).is_err());
}
