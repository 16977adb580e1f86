//! Trains the triangle network on a handful of synthetic meshes and saves it.
//!
//! cargo run --release --example train_network -- [steps] [out.oopt]

use offsetopt::network::{save_params, NetConfig, NetworkParams};
use offsetopt::trainer::{
    generate_training_mesh, icosphere, loss_trace_csv, train_epoch, MeshSpec, PrimitiveKind, TrainConfig, TrainState,
    TrainingSet,
};

fn main() -> offsetopt::Result<()> {
    let mut args = std::env::args().skip(1);
    let steps: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(600);
    let out = args.next().unwrap_or_else(|| "net.oopt".into());

    let mut meshes = vec![icosphere(3)];
    for seed in 0..3 {
        for kind in [PrimitiveKind::Sphere, PrimitiveKind::Torus, PrimitiveKind::RoundedBox, PrimitiveKind::HeightField] {
            meshes.push(generate_training_mesh(&MeshSpec { kind, edge: 0.08, seed })?);
        }
    }
    let set = TrainingSet::new(meshes)?;
    let cfg = TrainConfig { k: 16, batch: 128, steps, clip: Some(1.0), ..TrainConfig::default() };
    let mut state = TrainState::new(NetworkParams::init(NetConfig::default(), 0));
    let mut trace = Vec::new();
    let report_every = (steps / 10).max(1);
    while state.step < steps {
        let chunk = report_every.min(steps - state.step);
        let part = train_epoch(&mut state, &set, &cfg, chunk)?;
        let mean = part.iter().map(|p| p.loss).sum::<f64>() / part.len().max(1) as f64;
        println!("step {:5}  loss {mean:.4}", state.step);
        trace.extend(part);
    }
    save_params(&state.params, &out)?;
    std::fs::write(format!("{out}.loss.csv"), loss_trace_csv(&trace)).expect("write loss trace");
    println!("saved {out} (checksum {:016x})", state.params.checksum());
    Ok(())
}
