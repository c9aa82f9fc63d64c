//! Layer tables of the built-in benchmark networks.
//!
//! ResNets use ImageNet geometry (224x224 input) and the torchvision layout:
//! stride sits on the first 3x3 conv of a stage, and each stage that changes
//! shape gets a 1x1 projection shortcut, listed after the block's main convs.

use super::{LayerDesc, NetError, NetworkGraph};

pub const BENCHMARK_NAMES: [&str; 5] = ["mlp_mnist", "resnet18", "resnet34", "resnet50", "resnet101"];

pub fn builtin_benchmark(name: &str) -> Result<NetworkGraph, NetError> {
    let layers = match name {
        "mlp_mnist" => mlp_mnist(),
        "resnet18" => resnet_basic(&[2, 2, 2, 2]),
        "resnet34" => resnet_basic(&[3, 4, 6, 3]),
        "resnet50" => resnet_bottleneck(&[3, 4, 6, 3]),
        "resnet101" => resnet_bottleneck(&[3, 4, 23, 3]),
        _ => return Err(NetError::UnknownBenchmark { name: name.to_string() }),
    };
    NetworkGraph::new(name, layers)
}

fn mlp_mnist() -> Vec<LayerDesc> {
    let widths = [784, 1024, 4096, 4096, 1024, 10];
    widths.windows(2).enumerate().map(|(i, w)| LayerDesc::fc(format!("fc{}", i + 1), w[0], w[1])).collect()
}

const STAGE_WIDTHS: [u32; 4] = [64, 128, 256, 512];

/// conv1 (7x7/2) followed by a 3x3/2 max-pool: 224 -> 112 -> 56.
fn stem() -> (Vec<LayerDesc>, u32) {
    let conv1 = LayerDesc::conv("conv1", 7, 3, 64, 224, 2, 3);
    let pooled = super::conv_out_width(conv1.out_width, 3, 2, 1).expect("stem pool");
    (vec![conv1], pooled)
}

fn resnet_basic(blocks: &[usize; 4]) -> Vec<LayerDesc> {
    let (mut layers, mut width) = stem();
    let mut in_ch = 64;
    for (stage, (&n_blocks, &out_ch)) in blocks.iter().zip(&STAGE_WIDTHS).enumerate() {
        for b in 0..n_blocks {
            let stride = if b == 0 && stage > 0 { 2 } else { 1 };
            let p = format!("layer{}.{b}", stage + 1);
            let c1 = LayerDesc::conv(format!("{p}.conv1"), 3, in_ch, out_ch, width, stride, 1);
            let out_w = c1.out_width;
            let c2 = LayerDesc::conv(format!("{p}.conv2"), 3, out_ch, out_ch, out_w, 1, 1);
            layers.push(c1);
            layers.push(c2);
            if stride != 1 || in_ch != out_ch {
                layers.push(LayerDesc::conv(format!("{p}.downsample"), 1, in_ch, out_ch, width, stride, 0));
            }
            in_ch = out_ch;
            width = out_w;
        }
    }
    layers.push(LayerDesc::fc("fc", in_ch, 1000));
    layers
}

fn resnet_bottleneck(blocks: &[usize; 4]) -> Vec<LayerDesc> {
    const EXPANSION: u32 = 4;
    let (mut layers, mut width) = stem();
    let mut in_ch = 64;
    for (stage, (&n_blocks, &mid)) in blocks.iter().zip(&STAGE_WIDTHS).enumerate() {
        let out_ch = mid * EXPANSION;
        for b in 0..n_blocks {
            let stride = if b == 0 && stage > 0 { 2 } else { 1 };
            let p = format!("layer{}.{b}", stage + 1);
            let c1 = LayerDesc::conv(format!("{p}.conv1"), 1, in_ch, mid, width, 1, 0);
            let c2 = LayerDesc::conv(format!("{p}.conv2"), 3, mid, mid, width, stride, 1);
            let out_w = c2.out_width;
            let c3 = LayerDesc::conv(format!("{p}.conv3"), 1, mid, out_ch, out_w, 1, 0);
            layers.extend([c1, c2, c3]);
            if stride != 1 || in_ch != out_ch {
                layers.push(LayerDesc::conv(format!("{p}.downsample"), 1, in_ch, out_ch, width, stride, 0));
            }
            in_ch = out_ch;
            width = out_w;
        }
    }
    layers.push(LayerDesc::fc("fc", in_ch, 1000));
    layers
}
