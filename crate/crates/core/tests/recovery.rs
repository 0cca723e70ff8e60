use bcs_core::partition::{PartitionMap, PartitionSpec, Strategy};
use bcs_core::recovery::{
    lw_omp, omp, parallel_bcs, parallel_bcs_with, serial_bcs, RecoveryConfig, Schedule, SerialBcs, SupportPrior,
};
use bcs_core::scalar::Scalar;
use bcs_core::sensing::{draw_sensor, measure, BlockSensor, Ensemble, MeasurementSet};
use bcs_core::signals::{generate_clustered, Amplitude, ClusterSpec};
use bcs_core::tensor::{convolve, ConvMode, Shape, Tensor};
use bcs_core::{seed, CorrelationKernel, Field, Matrix};
use num_complex::Complex64;

fn sensor<T: Scalar>(dims: &[usize], m: usize, beta: usize, strategy: Strategy, s: u64) -> BlockSensor<T> {
    let shape = Shape::new(dims.to_vec()).unwrap();
    let n = shape.size();
    let map = PartitionMap::new(PartitionSpec::auto(shape, beta, strategy).unwrap());
    let ensemble = match T::FIELD {
        Field::Real => Ensemble::Gaussian,
        Field::Complex => Ensemble::ComplexGaussian,
    };
    draw_sensor(m, n, beta, map, s, ensemble).unwrap()
}

fn config(max_iters: usize, noise_var: f64) -> RecoveryConfig {
    RecoveryConfig {
        max_iters,
        noise_var,
        ..RecoveryConfig::default()
    }
}

fn clustered(dims: &[usize], k: usize, s: u64) -> Tensor<f64> {
    generate_clustered(&ClusterSpec {
        dims: Shape::new(dims.to_vec()).unwrap(),
        field: Field::Real,
        num_clusters: 2,
        cluster_radius: 1,
        sparsity: k,
        amplitude: Amplitude::ComplexGaussian,
        seed: s,
    })
    .unwrap()
}

fn kernel_2d() -> CorrelationKernel {
    let v = vec![0.1, 0.4, 0.1, 0.4, 0.0, 0.4, 0.1, 0.4, 0.1];
    CorrelationKernel::new(Tensor::from_vec(Shape::new(vec![3, 3]).unwrap(), v).unwrap()).unwrap()
}

/// Prior after solving `solved` blocks, via a dense same-centred convolution
/// of the magnitudes of each block estimate embedded in a zero tensor.
fn dense_prior(
    shape: &Shape,
    s_avg: f64,
    kernel: &CorrelationKernel,
    map: &PartitionMap,
    estimate: &Tensor<f64>,
    solved: &[usize],
) -> Vec<f64> {
    let mut p = vec![s_avg / shape.size() as f64; shape.size()];
    for &b in solved {
        let mut ext = Tensor::<f64>::zeros(shape.clone());
        for &i in map.block_indices(b) {
            ext.data_mut()[i] = estimate.data()[i].abs();
        }
        let c = convolve(&ext, kernel.values(), ConvMode::SameCentered).unwrap();
        for (pi, ci) in p.iter_mut().zip(c.data()) {
            *pi += ci.abs();
        }
    }
    p
}

#[test]
fn serial_prior_update_and_order_follow_dense_oracle() {
    let dims = [8, 8];
    let shape = Shape::new(dims.to_vec()).unwrap();
    let kernel = kernel_2d();
    let s_avg = 6.0;
    for trial in 0..10u64 {
        let a = sensor::<f64>(&dims, 32, 16, Strategy::Comb, trial);
        let x = clustered(&dims, 6, 100 + trial);
        let meas = measure(&a, &x, 0.05, trial).unwrap();
        let cfg = config(1, 0.05 * 0.05);

        let full = serial_bcs(&meas, &a, &kernel, s_avg, &cfg).unwrap();
        assert_eq!(full.order[0], 0);

        let mut stepper = SerialBcs::new(&meas, &a, &kernel, s_avg, &cfg).unwrap();
        let mut solved = Vec::new();
        while let Some(b) = stepper.next_block() {
            // Next block maximizes fresh prior mass over unsolved blocks, lowest id on ties.
            if !solved.is_empty() {
                let p = stepper.prior().values().data();
                let masses: Vec<f64> = (0..16)
                    .map(|k| a.partition().block_indices(k).iter().map(|&i| p[i]).sum())
                    .collect();
                let mut want = None;
                for k in (0..16).filter(|k| !solved.contains(k)) {
                    if want.is_none_or(|w: usize| masses[k] > masses[w]) {
                        want = Some(k);
                    }
                }
                assert_eq!(Some(b), want);
                assert_eq!(stepper.block_mass(b), masses[b]);
            }
            assert_eq!(stepper.step(), Some(b));
            solved.push(b);
            let oracle = dense_prior(&shape, s_avg, &kernel, a.partition(), &full.estimate, &solved);
            for (got, want) in stepper.prior().values().data().iter().zip(&oracle) {
                assert!((got - want).abs() <= 1e-14 * want.abs().max(1.0), "{got} vs {want}");
            }
        }
        assert_eq!(solved, full.order);
        assert_eq!(stepper.finish().estimate, full.estimate);
    }
}

#[test]
fn serial_visits_every_block_once() {
    let a = sensor::<f64>(&[8, 8], 32, 16, Strategy::Comb, 4);
    let x = clustered(&[8, 8], 6, 4);
    let meas = measure(&a, &x, 0.1, 4).unwrap();
    let r = serial_bcs(&meas, &a, &kernel_2d(), 6.0, &config(1, 0.01)).unwrap();
    let mut order = r.order.clone();
    order.sort();
    assert_eq!(order, (0..16).collect::<Vec<_>>());
    assert_eq!(r.iterations.len(), 16);
    assert_eq!(r.block_ms.len(), 16);
}

#[test]
fn zero_kernel_keeps_id_order() {
    // Without correlation every block keeps the uniform mass; ties go to the lowest id.
    let a = sensor::<f64>(&[8, 8], 32, 4, Strategy::Comb, 2);
    let x = clustered(&[8, 8], 6, 2);
    let meas = measure(&a, &x, 0.1, 2).unwrap();
    let r = serial_bcs(&meas, &a, &CorrelationKernel::zeros(2).unwrap(), 6.0, &config(2, 0.01)).unwrap();
    assert_eq!(r.order, vec![0, 1, 2, 3]);
}

#[test]
fn serial_with_one_block_is_omp() {
    let a = sensor::<f64>(&[6, 6], 18, 1, Strategy::Comb, 8);
    for t in 0..20 {
        let x = clustered(&[6, 6], 5, t);
        let meas = measure(&a, &x, 0.2, t).unwrap();
        let cfg = config(6, 0.04);
        let serial = serial_bcs(&meas, &a, &kernel_2d(), 5.0, &cfg).unwrap();
        let plain = omp(&meas.blocks[0], a.operator(0), &cfg).unwrap();
        assert_eq!(serial.supports[0], plain.support);
    }
}

#[test]
fn noiseless_clustered_recovery_is_exact() {
    let dims = [8, 8];
    let a = sensor::<f64>(&dims, 48, 4, Strategy::Comb, 21);
    for t in 0..10 {
        let x = clustered(&dims, 4, 50 + t);
        let meas = measure(&a, &x, 0.0, t).unwrap();
        let cfg = config(4, 0.0);
        for r in [
            parallel_bcs(&meas, &a, &cfg).unwrap(),
            serial_bcs(&meas, &a, &kernel_2d(), 4.0, &cfg).unwrap(),
        ] {
            let err: f64 = x
                .data()
                .iter()
                .zip(r.estimate.data())
                .map(|(u, v)| (u - v).powi(2))
                .sum();
            assert!(err <= 1e-18 * x.energy(), "trial {t}: {err}");
            assert!(r.failed_blocks.is_empty());
        }
    }
}

#[test]
fn schedules_agree() {
    let a = sensor::<Complex64>(&[4, 4, 4], 32, 8, Strategy::Contiguous, 5);
    let spec = ClusterSpec {
        dims: Shape::new(vec![4, 4, 4]).unwrap(),
        field: Field::Complex,
        num_clusters: 1,
        cluster_radius: 1,
        sparsity: 5,
        amplitude: Amplitude::ComplexGaussian,
        seed: 5,
    };
    let x: Tensor<Complex64> = generate_clustered(&spec).unwrap();
    let meas = measure(&a, &x, 0.1, 5).unwrap();
    let cfg = config(2, 0.01);
    let base = parallel_bcs(&meas, &a, &cfg).unwrap();
    assert_eq!(base.order, (0..8).collect::<Vec<_>>());
    let seq = parallel_bcs_with(&meas, &a, &cfg, Schedule::Sequential).unwrap();
    let rev = parallel_bcs_with(&meas, &a, &cfg, Schedule::Order((0..8).rev().collect())).unwrap();
    assert_eq!(seq.estimate, base.estimate);
    assert_eq!(rev.estimate, base.estimate);
    assert_eq!(rev.order, (0..8).rev().collect::<Vec<_>>());
    assert!(parallel_bcs_with(&meas, &a, &cfg, Schedule::Order(vec![0, 0, 1, 2, 3, 4, 5, 6])).is_err());
}

#[test]
fn non_finite_block_is_zeroed_and_reported() {
    let a = sensor::<f64>(&[8, 8], 32, 4, Strategy::Comb, 6);
    let x = clustered(&[8, 8], 6, 6);
    let mut meas = measure(&a, &x, 0.01, 6).unwrap();
    meas.blocks[2][0] = f64::NAN;
    let cfg = config(2, 1e-4);
    for r in [
        parallel_bcs(&meas, &a, &cfg).unwrap(),
        serial_bcs(&meas, &a, &kernel_2d(), 6.0, &cfg).unwrap(),
    ] {
        assert_eq!(r.failed_blocks, vec![2]);
        assert!(a
            .partition()
            .block_indices(2)
            .iter()
            .all(|&i| r.estimate.data()[i] == 0.0));
        assert!(r.estimate.data().iter().all(|v| v.is_finite()));
    }
}

#[test]
fn mismatched_inputs_are_rejected() {
    let a = sensor::<f64>(&[8, 8], 32, 4, Strategy::Comb, 7);
    let x = clustered(&[8, 8], 4, 7);
    let meas = measure(&a, &x, 0.1, 7).unwrap();
    let cfg = config(2, 0.01);
    let k1 = CorrelationKernel::from_json_str(r#"{"order":1,"values":[0.5,0.0,0.5]}"#).unwrap();
    assert!(serial_bcs(&meas, &a, &k1, 4.0, &cfg).is_err());
    let short = MeasurementSet {
        blocks: meas.blocks[..3].to_vec(),
        noise: meas.noise[..3].to_vec(),
    };
    assert!(parallel_bcs(&short, &a, &cfg).is_err());
    assert!(parallel_bcs(&meas, &a, &config(9, 0.01)).is_err());
}

#[test]
fn uniform_prior_reduces_lw_omp_to_omp_complex() {
    let a = sensor::<Complex64>(&[64], 24, 1, Strategy::Comb, 3);
    let op = a.operator(0);
    let mut rng = seed::rng(3);
    for _ in 0..30 {
        let y: Vec<Complex64> = (0..24).map(|_| Complex64::standard_normal(&mut rng)).collect();
        let cfg = config(8, 0.5);
        let plain = omp(&y, op, &cfg).unwrap();
        let weighted = lw_omp(&y, op, &vec![0.3; 64], &cfg).unwrap();
        assert_eq!(plain.support, weighted.support);
        assert_eq!(plain.x, weighted.x);
    }
}

#[test]
fn residual_is_orthogonal_to_selected_atoms() {
    let a = sensor::<f64>(&[128], 40, 1, Strategy::Comb, 12);
    let op = a.operator(0);
    let mut rng = seed::rng(12);
    let y: Vec<f64> = (0..40).map(|_| f64::standard_normal(&mut rng)).collect();
    let sol = omp(&y, op, &config(10, 0.0)).unwrap();
    let fit = op.apply(&sol.x);
    let r: Vec<f64> = y.iter().zip(&fit).map(|(u, v)| u - v).collect();
    let corr = op.adjoint(&r);
    for &k in &sol.support {
        assert!(corr[k].abs() < 1e-10, "atom {k}: {}", corr[k]);
    }
    let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!((norm - sol.residual_norm()).abs() < 1e-10);
}

#[test]
fn oracle_prior_helps_support_recovery_at_10_db() {
    let (m, n, s) = (32usize, 128usize, 6usize);
    let a = sensor::<f64>(&[n], m, 1, Strategy::Comb, 40);
    let op = a.operator(0);
    let trials = 200;
    let (mut hits_omp, mut hits_lw) = (0usize, 0usize);
    for t in 0..trials {
        let mut rng = seed::rng(seed::derive(41, &[t]));
        let mut support: Vec<usize> = rand::seq::index::sample(&mut rng, n, s).into_vec();
        support.sort();
        let mut x = vec![0.0; n];
        for &i in &support {
            x[i] = f64::standard_normal(&mut rng);
        }
        let clean = op.apply(&x);
        let energy: f64 = clean.iter().map(|v| v * v).sum();
        let sigma2 = energy / m as f64 / 10.0;
        let y: Vec<f64> = clean
            .iter()
            .map(|&v| v + sigma2.sqrt() * f64::standard_normal(&mut rng))
            .collect();
        let cfg = RecoveryConfig {
            max_iters: s,
            residual_tol_factor: 0.0,
            noise_var: sigma2,
            ..RecoveryConfig::default()
        };
        let prior: Vec<f64> = (0..n).map(|i| if support.contains(&i) { 1.0 } else { 0.0 }).collect();
        let mut got = omp(&y, op, &cfg).unwrap().support;
        got.sort();
        hits_omp += usize::from(got == support);
        let mut got = lw_omp(&y, op, &prior, &cfg).unwrap().support;
        got.sort();
        hits_lw += usize::from(got == support);
    }
    assert!(hits_lw >= hits_omp, "lw-omp {hits_lw} vs omp {hits_omp}");
}

#[test]
fn prior_validation() {
    let shape = Shape::new(vec![4]).unwrap();
    assert!(SupportPrior::new(Tensor::from_vec(shape.clone(), vec![0.1, -0.1, 0.0, 0.0]).unwrap()).is_err());
    let u = SupportPrior::uniform(shape, 2.0).unwrap();
    assert_eq!(u.values().data(), &[0.5; 4]);
}

#[test]
fn explicit_operator_matches_sensor_blocks() {
    let a = sensor::<f64>(&[4, 4], 8, 2, Strategy::Comb, 9);
    let block: &Matrix<f64> = a.block(1);
    let op = a.operator(1);
    assert_eq!((op.rows(), op.cols()), (4, 8));
    for k in 0..8 {
        assert_eq!(op.column(k), block.col(k).to_vec());
    }
}
