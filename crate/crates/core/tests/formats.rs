use ndarray::{Array1, Array2};
use proptest::prelude::*;
use vibnn::bnn::{quantize_params, LayerParams, QuantPlan, VariationalParams};
use vibnn::io::{decode_params, decode_quant, encode_params, encode_quant, parse_idx};

fn params() -> impl Strategy<Value = VariationalParams> {
    prop::collection::vec(1usize..6, 2..5)
        .prop_flat_map(|sizes| {
            let n: usize = sizes.windows(2).map(|w| 2 * (w[0] * w[1] + w[1])).sum();
            (Just(sizes), prop::collection::vec(-8.0f32..8.0, n))
        })
        .prop_map(|(sizes, vals)| {
            let mut it = vals.into_iter();
            let mut next = || f64::from(it.next().unwrap());
            let layers = sizes
                .windows(2)
                .map(|w| LayerParams {
                    w_mu: Array2::from_shape_fn((w[1], w[0]), |_| next()),
                    w_rho: Array2::from_shape_fn((w[1], w[0]), |_| -next().abs()),
                    b_mu: Array1::from_shape_fn(w[1], |_| next()),
                    b_rho: Array1::from_shape_fn(w[1], |_| -next().abs()),
                })
                .collect();
            VariationalParams::from_layers(layers).unwrap()
        })
}

proptest! {
    #[test]
    fn params_round_trip_bit_exact(p in params()) {
        let bytes = encode_params(&p);
        prop_assert_eq!(decode_params(&bytes).unwrap(), p);
    }

    #[test]
    fn quant_round_trip(p in params(), bits in prop::sample::select(vec![4u8, 6, 8, 12, 16, 24])) {
        let (q, _) = quantize_params(&p, QuantPlan::Calibrated { bits }, None).unwrap();
        let bytes = encode_quant(&q);
        prop_assert_eq!(decode_quant(&bytes).unwrap(), q);
    }

    #[test]
    fn decoders_never_panic_on_noise(bytes in prop::collection::vec(any::<u8>(), 0..256)) {
        let _ = decode_params(&bytes);
        let _ = decode_quant(&bytes);
        let _ = parse_idx(&bytes, 0x803);
        let _ = parse_idx(&bytes, 0x801);
    }

    #[test]
    fn corrupted_files_are_rejected_or_decoded(p in params(), edits in prop::collection::vec((any::<prop::sample::Index>(), any::<u8>()), 1..8), cut in any::<prop::sample::Index>()) {
        let (q, _) = quantize_params(&p, QuantPlan::Calibrated { bits: 8 }, None).unwrap();
        for mut bytes in [encode_params(&p), encode_quant(&q)] {
            for (i, v) in &edits {
                let k = i.index(bytes.len());
                bytes[k] = *v;
            }
            let _ = decode_params(&bytes);
            let _ = decode_quant(&bytes);
            let keep = cut.index(bytes.len());
            prop_assert!(decode_params(&bytes[..keep]).is_err());
            prop_assert!(decode_quant(&bytes[..keep]).is_err());
        }
    }

    #[test]
    fn idx_with_any_header_never_panics(dims in prop::collection::vec(any::<u32>(), 0..4), tail in prop::collection::vec(any::<u8>(), 0..64)) {
        let mut bytes = vec![0, 0, 8, dims.len() as u8];
        for d in &dims {
            bytes.extend(d.to_be_bytes());
        }
        bytes.extend(tail);
        let _ = parse_idx(&bytes, 0x800 | dims.len() as u32);
    }
}
