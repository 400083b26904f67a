mod common;

use ipad_core::framework::{BlockPoint, NnpProblem};
use ipad_core::linalg::Mat;
use ipad_core::sdl::{grad_h_d, grad_h_w, sdl_objective, SdlInstance};

use common::{frob, gaussian, rng, sparse_codes, unit_columns};

/// Shape classes `(n, m, p, fill)`: dense and sparse codes reach different
/// product kernels.
const SHAPES: [(usize, usize, usize, f64); 4] = [(5, 4, 7, 1.0), (3, 8, 12, 0.5), (8, 20, 200, 0.05), (16, 6, 40, 0.2)];

/// Central difference of `h` along every entry of `u`.
fn central_difference(u: &Mat, step: f64, h: impl Fn(&Mat) -> f64) -> Mat {
    let mut out = Mat::zeros(u.dim());
    for idx in ndarray::indices(u.dim()) {
        let mut plus = u.clone();
        plus[idx] += step;
        let mut minus = u.clone();
        minus[idx] -= step;
        out[idx] = (h(&plus) - h(&minus)) / (2.0 * step);
    }
    out
}

fn rel_diff(a: &Mat, b: &Mat) -> f64 {
    frob(&(a - b)) / frob(b).max(1e-300)
}

/// `½‖I - D Wᵀ‖² + λ‖W‖₀` with explicit loops.
fn objective_by_loops(data: &Mat, d: &Mat, w: &Mat, lambda: f64) -> f64 {
    let (n, p) = data.dim();
    let m = d.ncols();
    let mut fit = 0.0;
    for i in 0..n {
        for j in 0..p {
            let mut model = 0.0;
            for k in 0..m {
                model += d[[i, k]] * w[[j, k]];
            }
            let r = data[[i, j]] - model;
            fit += r * r;
        }
    }
    let nonzeros = w.iter().filter(|v| **v != 0.0).count();
    0.5 * fit + lambda * nonzeros as f64
}

fn random_instance(n: usize, m: usize, p: usize, seed: u64) -> SdlInstance {
    let mut r = rng(seed);
    SdlInstance::new(gaussian(n, p, &mut r), m, 0.1, None).unwrap()
}

#[test]
fn code_gradient_matches_central_differences() {
    for point in 0..20 {
        let (n, m, p, fill) = SHAPES[point % SHAPES.len()];
        let inst = random_instance(n, m, p, 1000 + point as u64);
        let mut r = rng(point as u64);
        let d = unit_columns(n, m, &mut r);
        let w = sparse_codes(p, m, fill, &mut r);
        let g = grad_h_w(&inst, &d, &w).unwrap();
        let fd = central_difference(&w, 1e-4, |w| inst.h_value(w, &d));
        let rel = rel_diff(&fd, &g);
        assert!(rel < 1e-6, "point {point}: relative difference {rel}");
    }
}

#[test]
fn dictionary_gradient_matches_central_differences() {
    for point in 0..20 {
        let (n, m, p, fill) = SHAPES[point % SHAPES.len()];
        let inst = random_instance(n, m, p, 2000 + point as u64);
        let mut r = rng(50 + point as u64);
        let d = unit_columns(n, m, &mut r);
        let w = sparse_codes(p, m, fill, &mut r);
        let g = grad_h_d(&inst, &d, &w).unwrap();
        // H is evaluated off the sphere too; only g carries the constraint.
        let fd = central_difference(&d, 1e-4, |d| inst.h_value(&w, d));
        let rel = rel_diff(&fd, &g);
        assert!(rel < 1e-6, "point {point}: relative difference {rel}");
    }
}

#[test]
fn objective_matches_an_independent_recomputation() {
    for seed in 0..20u64 {
        let (n, m, p, fill) = SHAPES[seed as usize % SHAPES.len()];
        let inst = random_instance(n, m, p, seed);
        let mut r = rng(300 + seed);
        let d = unit_columns(n, m, &mut r);
        let w = sparse_codes(p, m, fill, &mut r);
        let got = sdl_objective(&inst, &d, &w).unwrap();
        let want = objective_by_loops(inst.data(), &d, &w, inst.lambda());
        assert!((got - want).abs() <= 1e-12 * want.abs(), "seed {seed}: {got} vs {want}");
    }
}

#[test]
fn objective_is_the_sum_of_its_pieces() {
    for seed in 0..20u64 {
        let inst = random_instance(6, 5, 30, seed);
        let mut r = rng(seed);
        let d = unit_columns(6, 5, &mut r);
        let w = sparse_codes(30, 5, 0.3, &mut r);
        let z = BlockPoint::new(w.clone(), d.clone());
        let pieces = inst.f_value(&w) + inst.g_value(&d) + inst.h_value(&w, &d);
        assert_eq!(inst.g_value(&d), 0.0);
        assert_eq!(inst.psi(&z), pieces);
        assert_eq!(sdl_objective(&inst, &d, &w).unwrap(), pieces);
    }
}

#[test]
fn box_violations_and_off_sphere_dictionaries_are_infeasible() {
    let mut r = rng(4);
    let data = gaussian(4, 10, &mut r);
    let inst = SdlInstance::new(data, 3, 0.2, Some(1.0)).unwrap();
    let d = unit_columns(4, 3, &mut r);
    let mut w = Mat::zeros((10, 3));
    w[[2, 1]] = 1.0;
    assert!(inst.psi(&BlockPoint::new(w.clone(), d.clone())).is_finite());
    w[[2, 1]] = 1.5;
    assert_eq!(inst.psi(&BlockPoint::new(w.clone(), d.clone())), f64::INFINITY);
    w[[2, 1]] = 0.5;
    assert_eq!(inst.psi(&BlockPoint::new(w, &d * 1.1)), f64::INFINITY);
}

#[test]
fn gradients_vanish_at_an_exact_factorization() {
    let mut r = rng(9);
    let d = unit_columns(6, 4, &mut r);
    let w = sparse_codes(15, 4, 0.4, &mut r);
    let data = d.dot(&w.t());
    let inst = SdlInstance::new(data, 4, 0.3, None).unwrap();
    let nonzeros = w.iter().filter(|v| **v != 0.0).count();
    let psi = sdl_objective(&inst, &d, &w).unwrap();
    assert!((psi - 0.3 * nonzeros as f64).abs() < 1e-12);
    assert!(common::max_abs(&grad_h_d(&inst, &d, &w).unwrap()) < 1e-12);
    assert!(common::max_abs(&grad_h_w(&inst, &d, &w).unwrap()) < 1e-12);
}

#[test]
fn oracles_are_pure_under_concurrent_use() {
    let inst = random_instance(8, 20, 200, 77);
    let points: Vec<(Mat, Mat)> = (0..8u64)
        .map(|s| {
            let mut r = rng(s);
            (unit_columns(8, 20, &mut r), sparse_codes(200, 20, 0.1, &mut r))
        })
        .collect();
    let serial: Vec<(Mat, Mat, f64)> = points
        .iter()
        .map(|(d, w)| (inst.grad_h_x(w, d), inst.grad_h_y(w, d), inst.h_value(w, d)))
        .collect();
    std::thread::scope(|s| {
        let handles: Vec<_> = points
            .iter()
            .rev()
            .map(|(d, w)| {
                let inst = &inst;
                s.spawn(move || (inst.grad_h_x(w, d), inst.grad_h_y(w, d), inst.h_value(w, d)))
            })
            .collect();
        for (h, want) in handles.into_iter().zip(serial.iter().rev()) {
            let got = h.join().unwrap();
            assert_eq!(got.0, want.0);
            assert_eq!(got.1, want.1);
            assert_eq!(got.2.to_bits(), want.2.to_bits());
        }
    });
}
