use alloc::vec;

use super::*;
use crate::linalg::{CVector, C64};
use crate::problem::User;

fn inst(w1: HermitianMatrix, users: &[(HermitianMatrix, f64)], pt: f64) -> ProblemInstance {
    let users = users
        .iter()
        .map(|(g, c)| User {
            gram: g.clone(),
            cap: *c,
        })
        .collect();
    ProblemInstance::new(w1, users, pt).unwrap()
}

fn beam(cap: f64) -> ProblemInstance {
    let s = 0.5_f64.sqrt();
    let u = CVector::from_vec(vec![C64::new(s, 0.0), C64::new(s, 0.0)]);
    inst(
        HermitianMatrix::outer(&u).scale(2.0),
        &[(HermitianMatrix::from_diagonal(&[1.0, 4.0]), cap)],
        1.0,
    )
}

fn interference_limited() -> ProblemInstance {
    inst(
        HermitianMatrix::identity(2),
        &[(HermitianMatrix::from_diagonal(&[1.0, 2.0]), 3.0)],
        4.0,
    )
}

fn rank1_interferer() -> ProblemInstance {
    inst(
        HermitianMatrix::identity(2),
        &[(HermitianMatrix::from_diagonal(&[1.0, 0.0]), 0.4)],
        2.0,
    )
}

fn zero_capacity() -> ProblemInstance {
    let s = 0.5_f64.sqrt();
    let u = CVector::from_vec(vec![C64::new(s, 0.0), C64::new(0.0, s)]);
    let g = HermitianMatrix::outer(&u);
    inst(g.clone(), &[(g, 0.0)], 1.0)
}

#[test]
fn projected_gradient_fixtures() {
    let s = OracleSettings::default();
    let wf = inst(HermitianMatrix::from_diagonal(&[4.0, 1.0]), &[], 1.0);
    let run = projected_gradient(&wf, &s).unwrap();
    assert!((run.solution.capacity_nats - (4.5_f64.ln() + 1.125_f64.ln())).abs() < 1e-5);
    let run = projected_gradient(&interference_limited(), &s).unwrap();
    assert!((run.solution.capacity_nats - 4.5_f64.ln()).abs() < 1e-4);
    let run = projected_gradient(&zero_capacity(), &s).unwrap();
    assert!(run.solution.capacity_nats <= 1e-8);
}

#[test]
fn interior_point_fixtures() {
    let s = OracleSettings::default();
    let run = interior_point(&interference_limited(), &s).unwrap();
    assert!(run.converged);
    assert!((run.solution.capacity_nats - 4.5_f64.ln()).abs() < 1e-8);
    let run = interior_point(&rank1_interferer(), &s).unwrap();
    assert!((run.solution.capacity_nats - (1.4_f64.ln() + 2.6_f64.ln())).abs() < 1e-8);
    let run = interior_point(&zero_capacity(), &s).unwrap();
    assert_eq!(run.solution.capacity_nats, 0.0);
}

#[test]
fn grid_fixtures() {
    let s = OracleSettings::default();
    let free = inst(HermitianMatrix::identity(2), &[], 2.0);
    let run = bruteforce_2x2(&free, &s).unwrap();
    assert!((run.solution.capacity_nats - 2.0 * 2.0_f64.ln()).abs() < 2e-3);
    let run = bruteforce_2x2(&beam(1.0), &s).unwrap();
    assert!((run.solution.capacity_nats - 2.25_f64.ln()).abs() < 2e-3);
    let run = bruteforce_2x2(&rank1_interferer(), &s).unwrap();
    assert!((run.solution.capacity_nats - (1.4_f64.ln() + 2.6_f64.ln())).abs() < 2e-3);
}

#[test]
fn grid_rejects_other_dimensions() {
    let i = inst(HermitianMatrix::identity(3), &[], 1.0);
    assert_eq!(
        bruteforce_2x2(&i, &OracleSettings::default()).unwrap_err(),
        SolverError::OracleDimension(3)
    );
}

#[test]
fn oracles_agree_on_small_fixtures() {
    let s = OracleSettings::default();
    for i in [beam(1.0), beam(1.8), beam(3.0), interference_limited(), rank1_interferer()] {
        let a = projected_gradient(&i, &s).unwrap().solution.capacity_nats;
        let b = bruteforce_2x2(&i, &s).unwrap().solution.capacity_nats;
        assert!((a - b).abs() < 5e-3, "{a} vs {b}");
    }
}

#[test]
fn compare_reports() {
    let i = interference_limited();
    let a = crate::solver::solve(&i).unwrap();
    let r = compare(&i, &a, &a, 1e-12).unwrap();
    assert_eq!(r.capacity_gap, 0.0);
    assert!(r.pass && r.feasible_a && r.feasible_b);

    let wf = inst(HermitianMatrix::from_diagonal(&[4.0, 1.0]), &[], 1.0);
    let exact = crate::solver::solve(&wf).unwrap();
    let run = projected_gradient(&wf, &OracleSettings::default()).unwrap();
    assert!(compare(&wf, &exact, &run.solution, 1e-5).unwrap().pass);
}

#[test]
fn settings_validation() {
    let bad = OracleSettings {
        grid_points: 1,
        ..OracleSettings::default()
    };
    assert_eq!(bad.validate(), Err(SolverError::InvalidSettings));
}
