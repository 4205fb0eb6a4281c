//! Builds the default network, prints per-layer parameter counts and times one
//! forward pass and one training step at a few input sizes.

use std::time::Instant;

use pixgrasp::network::{build_network, Mode, NetworkConfig};
use pixgrasp_nn::{Module, Tensor};

fn main() -> pixgrasp::Result<()> {
    let mut net = build_network(NetworkConfig::default(), 0)?;
    let mut groups: Vec<(String, usize)> = Vec::new();
    net.visit_params("", &mut |name, p| {
        if !p.trainable {
            return;
        }
        let layer = name.rsplitn(3, '.').last().unwrap_or(name).to_string();
        match groups.last_mut() {
            Some((l, n)) if *l == layer => *n += p.len(),
            _ => groups.push((layer, p.len())),
        }
    });
    for (layer, n) in &groups {
        println!("{layer:<16} {n:>9}");
    }
    println!("{:<16} {:>9}", "total", net.count_parameters());

    let sizes: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let sizes = if sizes.is_empty() { vec![224] } else { sizes };
    for size in sizes {
        let x = Tensor::full([1, 4, size, size], 0.1f32);
        let t = Instant::now();
        let y = net.infer(&x)?;
        let fwd = t.elapsed();
        let t = Instant::now();
        let y2 = net.forward(&x, Mode::Train)?;
        net.backward(&Tensor::full(y2.shape(), 1e-3))?;
        println!("{size}x{size}: output {:?}, inference {fwd:.2?}, train step {:.2?}", y.shape(), t.elapsed());
    }
    Ok(())
}
