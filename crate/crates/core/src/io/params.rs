//! `VIBP` (float variational parameters) and `VIBQ` (quantized) files.
//!
//! Both are little-endian. `VIBP` stores every `w_mu`, then every `w_rho`,
//! then every `b_mu`, then every `b_rho` as f32, layer-major and row-major.
//! `VIBQ` stores the ε format, per-layer operand formats and then the raw
//! integers of every μ (weights then biases, layer by layer) followed by
//! every σ in the same order, each in `ceil(total_bits / 8)` bytes.

use std::path::Path;

use ndarray::{Array1, Array2};

use super::{read_file, write_file, IoError, Reader};
use crate::bnn::{FxLayerSpec, LayerParams, NetworkTopology, QLayer, QuantizedParams, VariationalParams};
use crate::fxp::FixedSpec;

const PARAMS_MAGIC: &[u8; 4] = b"VIBP";
const QUANT_MAGIC: &[u8; 4] = b"VIBQ";
const VERSION: u16 = 1;

fn header(r: &mut Reader<'_>, magic: &[u8; 4]) -> Result<(), IoError> {
    let m = r.take(4)?;
    if m != magic {
        return Err(IoError::format(0, format!("magic {:?}, expected {:?}", String::from_utf8_lossy(m), String::from_utf8_lossy(magic))));
    }
    let v = r.u16_le()?;
    if v != VERSION {
        return Err(IoError::format(4, format!("unsupported version {v}")));
    }
    Ok(())
}

/// Reads `layer_count` then checks each `(rows, cols)` pair as it arrives.
fn shapes(r: &mut Reader<'_>, mut per_layer: impl FnMut(&mut Reader<'_>) -> Result<(), IoError>) -> Result<Vec<(usize, usize)>, IoError> {
    let offset = r.pos;
    let count = r.u16_le()? as usize;
    if count == 0 {
        return Err(IoError::format(offset, "layer_count is 0"));
    }
    let mut out = Vec::with_capacity(count);
    for l in 0..count {
        let at = r.pos;
        let rows = r.u32_le()? as usize;
        let cols = r.u32_le()? as usize;
        if rows == 0 || cols == 0 {
            return Err(IoError::format(at, format!("layer {l} has an empty dimension")));
        }
        if let Some(&(prev_rows, _)) = out.last() {
            if prev_rows != cols {
                return Err(IoError::format(at, format!("layer {l} has {cols} inputs, previous layer {prev_rows} outputs")));
            }
        }
        per_layer(r)?;
        out.push((rows, cols));
    }
    Ok(out)
}

fn expect_payload(r: &Reader<'_>, bytes: Option<usize>) -> Result<usize, IoError> {
    let bytes = bytes.ok_or_else(|| IoError::format(r.pos, "declared shapes overflow"))?;
    if r.remaining() < bytes {
        return Err(IoError::Truncated {
            expected: r.pos.saturating_add(bytes),
            actual: r.buf.len(),
        });
    }
    if r.remaining() > bytes {
        return Err(IoError::format(r.pos + bytes, format!("{} trailing bytes after payload", r.remaining() - bytes)));
    }
    Ok(bytes)
}

fn topology(shapes: &[(usize, usize)]) -> Result<NetworkTopology, IoError> {
    let sizes = std::iter::once(shapes[0].1).chain(shapes.iter().map(|s| s.0)).collect();
    Ok(NetworkTopology::new(sizes)?)
}

pub fn encode_params(p: &VariationalParams) -> Vec<u8> {
    let mut b = PARAMS_MAGIC.to_vec();
    b.extend(VERSION.to_le_bytes());
    b.extend((p.layers.len() as u16).to_le_bytes());
    for l in &p.layers {
        b.extend((l.fan_out() as u32).to_le_bytes());
        b.extend((l.fan_in() as u32).to_le_bytes());
    }
    let mut put = |it: &mut dyn Iterator<Item = &f64>| {
        for &v in it {
            b.extend((v as f32).to_le_bytes());
        }
    };
    for l in &p.layers {
        put(&mut l.w_mu.iter());
    }
    for l in &p.layers {
        put(&mut l.w_rho.iter());
    }
    for l in &p.layers {
        put(&mut l.b_mu.iter());
    }
    for l in &p.layers {
        put(&mut l.b_rho.iter());
    }
    b
}

pub fn decode_params(bytes: &[u8]) -> Result<VariationalParams, IoError> {
    let mut r = Reader::new(bytes);
    header(&mut r, PARAMS_MAGIC)?;
    let shapes = shapes(&mut r, |_| Ok(()))?;
    let count = shapes
        .iter()
        .try_fold(0usize, |acc, &(o, i)| o.checked_mul(i)?.checked_add(o)?.checked_add(acc));
    expect_payload(&r, count.and_then(|c| c.checked_mul(8)))?;
    let mut floats = |n: usize, name: &str, allow_neg_inf: bool| -> Result<Vec<f64>, IoError> {
        let start = r.pos;
        let raw = r.take(n * 4)?;
        raw.chunks_exact(4)
            .enumerate()
            .map(|(k, c)| {
                let v = f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64;
                if v.is_finite() || (allow_neg_inf && v == f64::NEG_INFINITY) {
                    Ok(v)
                } else {
                    Err(IoError::format(start + 4 * k, format!("{name} value {v} is not allowed")))
                }
            })
            .collect()
    };
    let w_mu: Vec<Vec<f64>> = shapes.iter().map(|&(o, i)| floats(o * i, "w_mu", false)).collect::<Result<_, _>>()?;
    let w_rho: Vec<Vec<f64>> = shapes.iter().map(|&(o, i)| floats(o * i, "w_rho", true)).collect::<Result<_, _>>()?;
    let b_mu: Vec<Vec<f64>> = shapes.iter().map(|&(o, _)| floats(o, "b_mu", false)).collect::<Result<_, _>>()?;
    let b_rho: Vec<Vec<f64>> = shapes.iter().map(|&(o, _)| floats(o, "b_rho", true)).collect::<Result<_, _>>()?;
    let layers = shapes
        .iter()
        .zip(w_mu.into_iter().zip(w_rho))
        .zip(b_mu.into_iter().zip(b_rho))
        .map(|((&(o, i), (wm, wr)), (bm, br))| LayerParams {
            w_mu: Array2::from_shape_vec((o, i), wm).expect("sized"),
            w_rho: Array2::from_shape_vec((o, i), wr).expect("sized"),
            b_mu: Array1::from(bm),
            b_rho: Array1::from(br),
        })
        .collect();
    Ok(VariationalParams::from_layers(layers)?)
}

fn value_bytes(spec: FixedSpec) -> usize {
    (spec.total_bits() as usize).div_ceil(8)
}

fn put_spec(b: &mut Vec<u8>, s: FixedSpec) {
    b.extend([s.total_bits(), s.frac_bits(), s.is_signed() as u8]);
}

fn get_spec(r: &mut Reader<'_>) -> Result<FixedSpec, IoError> {
    let at = r.pos;
    let (total, frac, signed) = (r.u8()?, r.u8()?, r.u8()?);
    if signed > 1 {
        return Err(IoError::format(at + 2, format!("signedness flag {signed}")));
    }
    FixedSpec::new(total, frac, signed == 1).map_err(|e| IoError::format(at, e.to_string()))
}

fn put_raw(b: &mut Vec<u8>, values: &[i64], spec: FixedSpec) {
    let w = value_bytes(spec);
    for &v in values {
        b.extend(&v.to_le_bytes()[..w]);
    }
}

fn get_raw(r: &mut Reader<'_>, n: usize, spec: FixedSpec) -> Result<Vec<i64>, IoError> {
    let w = value_bytes(spec);
    let start = r.pos;
    let bits = spec.total_bits() as u32;
    r.take(n * w)?
        .chunks_exact(w)
        .enumerate()
        .map(|(k, c)| {
            let mut buf = [0u8; 8];
            buf[..w].copy_from_slice(c);
            let u = u64::from_le_bytes(buf) & ((1u64 << bits) - 1);
            let v = if spec.is_signed() && u >> (bits - 1) == 1 {
                u as i64 - (1i64 << bits)
            } else {
                u as i64
            };
            if v < spec.min_raw() || v > spec.max_raw() || v.to_le_bytes()[..w] != *c {
                return Err(IoError::format(start + k * w, format!("raw value outside {spec}")));
            }
            Ok(v)
        })
        .collect()
}

pub fn encode_quant(q: &QuantizedParams) -> Vec<u8> {
    let mut b = QUANT_MAGIC.to_vec();
    b.extend(VERSION.to_le_bytes());
    b.extend([q.eps_spec.total_bits(), q.eps_spec.frac_bits()]);
    b.extend((q.layers.len() as u16).to_le_bytes());
    for l in &q.layers {
        b.extend((l.rows as u32).to_le_bytes());
        b.extend((l.cols as u32).to_le_bytes());
        for s in [l.specs.input, l.specs.weight, l.specs.bias, l.specs.output] {
            put_spec(&mut b, s);
        }
    }
    for l in &q.layers {
        put_raw(&mut b, &l.w_mu, l.specs.weight);
        put_raw(&mut b, &l.b_mu, l.specs.bias);
    }
    for l in &q.layers {
        put_raw(&mut b, &l.w_sigma, l.specs.weight);
        put_raw(&mut b, &l.b_sigma, l.specs.bias);
    }
    b
}

pub fn decode_quant(bytes: &[u8]) -> Result<QuantizedParams, IoError> {
    let mut r = Reader::new(bytes);
    header(&mut r, QUANT_MAGIC)?;
    let at = r.pos;
    let (total, frac) = (r.u8()?, r.u8()?);
    let eps_spec = FixedSpec::signed(total, frac).map_err(|e| IoError::format(at, e.to_string()))?;
    let mut specs = Vec::new();
    let shapes = shapes(&mut r, |r| {
        specs.push(FxLayerSpec {
            input: get_spec(r)?,
            weight: get_spec(r)?,
            bias: get_spec(r)?,
            output: get_spec(r)?,
        });
        Ok(())
    })?;
    let payload = shapes.iter().zip(&specs).try_fold(0usize, |acc, (&(o, i), s)| {
        let w = o.checked_mul(i)?.checked_mul(value_bytes(s.weight))?;
        let b = o.checked_mul(value_bytes(s.bias))?;
        acc.checked_add(w.checked_add(b)?.checked_mul(2)?)
    });
    expect_payload(&r, payload)?;
    let mut mus = Vec::with_capacity(shapes.len());
    for (&(o, i), s) in shapes.iter().zip(&specs) {
        mus.push((get_raw(&mut r, o * i, s.weight)?, get_raw(&mut r, o, s.bias)?));
    }
    let mut layers = Vec::with_capacity(shapes.len());
    for ((&(o, i), s), (w_mu, b_mu)) in shapes.iter().zip(&specs).zip(mus) {
        let w_sigma = get_raw(&mut r, o * i, s.weight)?;
        let b_sigma = get_raw(&mut r, o, s.bias)?;
        layers.push(QLayer {
            rows: o,
            cols: i,
            specs: *s,
            w_mu,
            w_sigma,
            b_mu,
            b_sigma,
        });
    }
    Ok(QuantizedParams {
        topology: topology(&shapes)?,
        eps_spec,
        layers,
    })
}

pub fn write_params(path: &Path, p: &VariationalParams) -> Result<(), IoError> {
    write_file(path, &encode_params(p))
}

pub fn read_params(path: &Path) -> Result<VariationalParams, IoError> {
    decode_params(&read_file(path)?)
}

pub fn write_quant(path: &Path, q: &QuantizedParams) -> Result<(), IoError> {
    write_file(path, &encode_quant(q))
}

pub fn read_quant(path: &Path) -> Result<QuantizedParams, IoError> {
    decode_quant(&read_file(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bnn::{quantize_params, QuantPlan};

    fn params() -> VariationalParams {
        let mut p = VariationalParams::init(&"5,4,3".parse().unwrap(), -3.0, 9);
        for l in &mut p.layers {
            l.w_mu.mapv_inplace(|v| v as f32 as f64);
        }
        p
    }

    #[test]
    fn params_round_trip() {
        let p = params();
        let b = encode_params(&p);
        assert_eq!(b.len(), 4 + 2 + 2 + 16 + 4 * 2 * (20 + 4 + 12 + 3));
        assert_eq!(decode_params(&b).unwrap(), p);
    }

    #[test]
    fn neg_inf_rho_survives() {
        let p = VariationalParams::deterministic(vec![(Array2::from_elem((2, 3), 0.5), Array1::zeros(2))]).unwrap();
        assert!(decode_params(&encode_params(&p)).unwrap().is_deterministic());
    }

    #[test]
    fn quant_round_trip_is_bit_identical() {
        for plan in [QuantPlan::Uniform(FixedSpec::Q8_5), QuantPlan::Calibrated { bits: 12 }] {
            let (q, _) = quantize_params(&params(), plan, None).unwrap();
            let b = encode_quant(&q);
            let back = decode_quant(&b).unwrap();
            assert_eq!(back, q);
            assert_eq!(encode_quant(&back), b);
        }
    }

    #[test]
    fn malformed_inputs_rejected() {
        let b = encode_params(&params());
        for cut in [0, 3, 7, 12, b.len() - 1] {
            assert!(decode_params(&b[..cut]).is_err(), "cut {cut}");
        }
        let mut long = b.clone();
        long.push(0);
        assert!(decode_params(&long).is_err());
        let mut bad = b.clone();
        bad[0] = b'X';
        assert!(decode_params(&bad).is_err());
        let mut nan = b.clone();
        nan[24..28].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(decode_params(&nan).is_err());
        assert!(decode_quant(&b).is_err());
    }
}
