// Scratch diagnostics; not part of the deliverable surface.
use minn_core::minn::{train, MinnSystem, TrainConfig, TrainingDataset};
use minn_core::profile::{CurrentProfile, Interp};
use minn_core::toy::ToySystem;

fn main() {
    let sys = ToySystem::default();
    let times: Vec<f64> = (0..21).map(|k| k as f64 * 0.1).collect();
    let values: Vec<f64> = times.iter().map(|t| (1.7 * t).sin()).collect();
    let profile = CurrentProfile::new(times, values, Interp::Linear).unwrap();
    let h_d0 = vec![0.8, 0.2];
    let samples = profile.uniform_samples(21);
    let (_, outs) = sys.reference(&h_d0, &profile, (0.0, 2.0), &samples).unwrap();
    let data = TrainingDataset::new(profile, h_d0, samples, outs).unwrap();

    let config = TrainConfig {
        hidden: vec![8, 8],
        max_epochs: 800,
        learning_rate: 5e-3,
        rtol: 1e-6,
        atol: 1e-8,
        seed: 1,
        ..Default::default()
    };
    let (params, log) = train(&sys, &data, &config).unwrap();
    for e in log.epochs.iter().step_by(25) {
        println!(
            "epoch {:4}  L_y {:10.3e}  L_g {:10.3e}  lambda {:8.3}  t {:6.2}s",
            e.epoch, e.l_y, e.l_g, e.lambda, e.seconds
        );
    }
    println!("epochs run: {}", log.epochs.len());

    let samples = data.profile.uniform_samples(41);
    let (states, _) = sys.reference(&data.h_d0, &data.profile, (0.0, 2.0), &samples).unwrap();
    let mut worst: f64 = 0.0;
    for (y, &t) in states.iter().zip(&samples) {
        let u = data.profile.eval(t);
        let z_hat = sys.predict(&params.layer_sizes, &params.theta, y, u).unwrap()[0];
        let z_true = sys.explicit_root(y, u);
        worst = worst.max((z_hat - z_true).abs());
    }
    println!("max root error {worst:.3e}");
}
