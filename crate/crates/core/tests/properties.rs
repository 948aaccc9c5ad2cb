//! Property tests for the structural invariants: orthogonality of the
//! transforms, adjoint transfers, Galerkin symmetry, exact I/O and the
//! linearity of the learnable cycle.

use proptest::prelude::*;

use m2no_core::io::{decode_records, encode_records, Record};
use m2no_core::m2no::{learnable_mg_cycle, ModelConfig, ModelParams};
use m2no_core::multigrid::{self, MgConfig, MgHierarchy};
use m2no_core::mwtransform::{decompose, reconstruct};
use m2no_core::pdegrid::{interior_spacing, poisson_operator, Field};
use m2no_core::polywavelet::derive_filter_bank;
use m2no_core::spectral::radial_spectrum;

fn values(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, n)
}

/// `(k, levels, shape, data)` with every axis `k·2^m`, `m ≥ levels`.
fn pyramid_input() -> impl Strategy<Value = (usize, usize, Vec<usize>, Vec<f64>)> {
    (1usize..=4, 1usize..=3, 1usize..=2, 0usize..=2).prop_flat_map(|(k, levels, dim, extra)| {
        let n = k << (levels + extra);
        let shape = vec![n; dim];
        values(n.pow(dim as u32)).prop_map(move |d| (k, levels, shape.clone(), d))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn transform_is_orthogonal((k, levels, shape, data) in pyramid_input()) {
        let bank = derive_filter_bank(k).unwrap();
        let f = Field::from_data(&shape, data).unwrap();
        let p = decompose(&f, &bank, levels).unwrap();
        let energy: f64 = f.data().iter().map(|v| v * v).sum();
        prop_assert!((p.energy() - energy).abs() <= 1e-12 * energy.max(1e-300));
        let back = reconstruct(&p, &bank).unwrap();
        prop_assert!(back.relative_error(&f).unwrap() < 1e-12);
    }

    #[test]
    fn transfers_are_adjoint(k in 1usize..=4, dim in 1usize..=2, x in values(4096), y in values(1024)) {
        let bank = derive_filter_bank(k).unwrap();
        let n = k * if dim == 1 { 16 } else { 8 };
        let fine = Field::from_data(&vec![n; dim], x[..n.pow(dim as u32)].to_vec()).unwrap();
        let coarse = Field::from_data(&vec![n / 2; dim], y[..(n / 2).pow(dim as u32)].to_vec()).unwrap();
        let lhs = multigrid::restrict(&fine, &bank).unwrap().dot(&coarse).unwrap();
        let rhs = fine.dot(&multigrid::prolong(&coarse, &bank).unwrap()).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
    }

    #[test]
    fn galerkin_operators_stay_symmetric(k in 1usize..=3, dim in 1usize..=2) {
        let n = k * if dim == 1 { 32 } else { 8 };
        let op = poisson_operator(dim, n).unwrap();
        let cfg = MgConfig { depth: 2, ..MgConfig::default() };
        let hier = MgHierarchy::from_stencil(&op, derive_filter_bank(k).unwrap(), &cfg).unwrap();
        for level in hier.levels() {
            let a = level.op.to_dense();
            prop_assert!((&a - a.transpose()).amax() <= 1e-12 * a.amax());
        }
    }

    #[test]
    fn records_round_trip_bitwise(dim in 1usize..=2, n in 1usize..=9, channels in 1usize..=3, scale in -300i32..300) {
        let shape = vec![n; dim];
        let len = n.pow(dim as u32) * channels;
        let data: Vec<f64> = (0..len).map(|i| (i as f64 + 0.1).sin() * 10f64.powi(scale)).collect();
        let spacing = vec![interior_spacing(n); dim];
        let f = Field::new(shape, channels, spacing, data).unwrap();
        let r = Record::new("f", f.clone()).with_attr("note", "x");
        let back = decode_records(&encode_records(std::slice::from_ref(&r)).unwrap()).unwrap();
        prop_assert_eq!(back.len(), 1);
        let same = back[0].field.data().iter().zip(f.data()).all(|(a, b)| a.to_bits() == b.to_bits());
        prop_assert!(same && back[0].field.shape() == f.shape() && back[0].attrs == r.attrs);
    }

    #[test]
    fn learnable_cycle_is_linear(seed in 0u64..1000, alpha in -2.0f64..2.0, beta in -2.0f64..2.0, x in values(64), y in values(64)) {
        let cfg = ModelConfig { k: 2, c: 2, layers: 0, depth: 3, steps: vec![1, 2, 1], detail_maps: true, ..ModelConfig::default() };
        let p = ModelParams::init(cfg, seed).unwrap();
        let mk = |d: &[f64]| Field::new(vec![32], 2, vec![interior_spacing(32)], d.to_vec()).unwrap();
        let (h1, h2) = (mk(&x), mk(&y));
        let mut comb = h1.scaled(alpha);
        comb.axpy(beta, &h2).unwrap();
        let lhs = learnable_mg_cycle(&p, 0, &comb).unwrap();
        let mut rhs = learnable_mg_cycle(&p, 0, &h1).unwrap().scaled(alpha);
        rhs.axpy(beta, &learnable_mg_cycle(&p, 0, &h2).unwrap()).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().max_abs() <= 1e-12 * (1.0 + rhs.max_abs()));
    }

    #[test]
    fn spectrum_ignores_rotation_and_keeps_energy(data in values(256)) {
        let n = 16;
        let f = Field::from_data(&[n, n], data.clone()).unwrap();
        let rotated: Vec<f64> = (0..n * n).map(|i| {
            let (y, x) = (i / n, i % n);
            data[x * n + (n - 1 - y)]
        }).collect();
        let a = radial_spectrum(&f).unwrap();
        let b = radial_spectrum(&Field::from_data(&[n, n], rotated).unwrap()).unwrap();
        for (p, q) in a.bins.iter().zip(&b.bins) {
            prop_assert!((p.average_energy - q.average_energy).abs() <= 1e-10 * p.average_energy.max(1e-12));
        }
        let direct = (n * n) as f64 * data.iter().map(|v| v * v).sum::<f64>();
        prop_assert!((a.total_energy() - direct).abs() <= 1e-10 * direct);
    }
}
