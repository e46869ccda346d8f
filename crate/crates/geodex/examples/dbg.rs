use geodex::expansion::*;
use geodex::synthetic::*;
use geodex::regression::KernelParams;

fn run(name: &str, sample: &geodex::sample::SampleSet, labels: &[bool], lambda_rel: Option<f64>) {
    // compute var(v) to translate relative lambda
    let cloud = geodex::variogram::empirical_semivariance(sample).unwrap();
    let vm = cloud.pairs.iter().map(|p| p.v).sum::<f64>() / cloud.pairs.len() as f64;
    let vv = cloud.pairs.iter().map(|p| (p.v - vm).powi(2)).sum::<f64>() / (cloud.pairs.len() as f64 - 1.0);
    let lambda = lambda_rel.map(|r| r * vv);
    let cfg = ExpansionConfig { lambda, max_iters: 40, ..Default::default() };
    let exp = learn_expansion(sample, &cfg).unwrap();
    let rep = stationarity_report(sample, &exp).unwrap();
    let z_norm = exp.z_prime.iter().map(|v| v * v).sum::<f64>().sqrt();
    let pb = if labels.is_empty() { f64::NAN } else {
        let scores: Vec<f64> = exp.z_prime.column(0).iter().cloned().collect();
        point_biserial(&scores, labels).unwrap_or(f64::NAN)
    };
    println!("{name} lam_rel={:?} lam={:.3}: ratio={:.3} zn={:.2} pb={:.3} conv={} sill={:.2} range={:.2} psd={:.2e}",
        lambda_rel, lambda.unwrap_or(1e-3*vv), rep.improvement_ratio, z_norm, pb, exp.converged,
        exp.phi_hat.sill, exp.phi_hat.range, rep.psd_min_eigenvalue);
}

fn main() {
    let fixture = two_regime_fixture(7).unwrap();
    let params = KernelParams::new(1.0, 2.0, 1e-4).unwrap();
    let spec = FieldSpec { nx: 20, ny: 20, spacing: 1.0, generator: Generator::StationaryGp { params }, seed: 7 };
    let field = sample_stationary_field(&spec).unwrap();
    let stat_sample = random_subsample(&field, 20, 7).unwrap();

    for lr in [Some(0.001), Some(0.01), Some(0.1), Some(0.3), Some(1.0), Some(3.0), Some(10.0)] {
        run("two-regime", &fixture.sample, &fixture.sample_labels, lr);
        run("stationary", &stat_sample, &[], lr);
    }
}
