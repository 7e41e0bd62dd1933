//! Saturating fixed-point arithmetic and one quantized PE layer.
//!
//! cargo run --example fixed_point

use ndarray::Array2;
use vibnn::bnn::{pe_forward, pe_forward_fx, sample_weights_fx, FxLayerSpec};
use vibnn::fxp::{fx_add, fx_mul, quantize, FixedSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let q = FixedSpec::Q8_5;
    println!("{q}: range [{}, {}], step {}", q.min_value(), q.max_value(), q.step());
    let a = quantize(1.3, q);
    let b = quantize(-0.7, q);
    println!("1.3 -> raw {} = {}", a.raw(), a.to_f64());
    println!("1.3 * -0.7 = {}", fx_mul(a, b)?.to_f64());
    let big = quantize(3.5, q);
    let s = fx_add(big, big)?;
    println!("3.5 + 3.5 = {} (saturated: {})", s.to_f64(), s.saturated());

    // w = mu + eps * sigma on the weight updater.
    let mut w = [0i64; 3];
    let sat = sample_weights_fx(&[16, 16, 120], &[8, 8, 64], &[-64, 0, 64], q, q, &mut w);
    println!("sampled weights {:?} ({sat} saturated)", w.map(|r| q.raw_to_real(r)));

    // A 4x16 layer in float and in 8 bits.
    let weights = Array2::from_shape_fn((4, 16), |(o, i)| ((o * 16 + i) as f64 * 0.37).sin() * 0.5);
    let bias = [0.1, -0.2, 0.05, 0.0];
    let x: Vec<f64> = (0..16).map(|i| i as f64 / 16.0).collect();
    let float = pe_forward(&x, &weights, &bias, 8, true)?;
    let specs = FxLayerSpec {
        input: FixedSpec::unsigned(8, 7)?,
        weight: FixedSpec::signed(8, 7)?,
        bias: FixedSpec::signed(8, 7)?,
        output: FixedSpec::unsigned(8, 5)?,
    };
    let xq: Vec<i64> = x.iter().map(|&v| specs.input.quantize_raw(v).0).collect();
    let wq: Vec<i64> = weights.iter().map(|&v| specs.weight.quantize_raw(v).0).collect();
    let bq: Vec<i64> = bias.iter().map(|&v| specs.bias.quantize_raw(v).0).collect();
    let mut out = Vec::new();
    pe_forward_fx(&xq, &wq, &bq, &specs, true, &mut out)?;
    for (f, r) in float.iter().zip(&out) {
        println!("float {f:.4}  fixed {:.4}", specs.output.raw_to_real(*r));
    }
    Ok(())
}
