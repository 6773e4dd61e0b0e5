#![allow(dead_code)]

use std::f64::consts::PI;

use isac_core::array::{bundles_for, ArrayConfig, CMatrix, SteeringBundle};
use isac_core::contour::{
    partition_los_with, ContourPartition, IntermediateForm, PartitionOptions, TargetPose, TfsContour,
};
use isac_core::crb::SensingParams;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub struct Instance {
    pub array: ArrayConfig,
    pub contour: TfsContour,
    pub pose: TargetPose,
    pub partition: ContourPartition,
    pub bundles: Vec<SteeringBundle>,
    pub sensing: SensingParams,
}

pub fn cn<R: Rng>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// `G G^H` with a complex Gaussian `n x rank` factor, scaled to trace `p`.
pub fn random_psd<R: Rng>(rng: &mut R, n: usize, rank: usize, p: f64) -> CMatrix {
    let g = CMatrix::from_fn(n, rank, |_, _| cn(rng));
    let r = &g * g.adjoint();
    let t = r.trace().re;
    r * Complex64::new(p / t, 0.0)
}

pub fn random_contour<R: Rng>(rng: &mut R) -> TfsContour {
    let base = if rng.random::<bool>() { TfsContour::vehicle() } else { TfsContour::uav() };
    let jitter = |v: &[f64], rng: &mut R| -> Vec<f64> {
        v.iter().enumerate().map(|(i, x)| if i == 0 { *x } else { x + 0.02 * rng.random_range(-1.0..1.0) }).collect()
    };
    let m = jitter(base.m(), rng);
    let n = jitter(base.n(), rng);
    TfsContour::new(m, n).unwrap()
}

pub fn instance(
    array: ArrayConfig,
    contour: TfsContour,
    pose: TargetPose,
    k: usize,
    normalize: bool,
    form: IntermediateForm,
    sigma_s2: f64,
) -> Instance {
    let partition = partition_los_with(&contour, &pose, [0.0, 0.0], PartitionOptions { k, normalize, form }).unwrap();
    let bundles = bundles_for(&array, &partition);
    let sensing = SensingParams::new(pose.d_o, sigma_s2, 1.0, 10e6);
    Instance { array, contour, pose, partition, bundles, sensing }
}

pub fn random_instance<R: Rng>(rng: &mut R) -> Instance {
    let array = ArrayConfig::new(rng.random_range(4..=16), rng.random_range(4..=16));
    let contour = random_contour(rng);
    let pose =
        TargetPose::new(rng.random_range(15.0..200.0), rng.random_range(-1.0..1.0), rng.random_range(-PI..PI)).unwrap();
    let k = rng.random_range(2..=8);
    instance(array, contour, pose, k, false, IntermediateForm::Printed, 1e-11)
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
