mod common;

use common::{hp, matrix};
use proptest::prelude::*;
use spartan_core::formats::wmark::SUPPORTED_VALUE_BITS;
use spartan_core::formats::{decode_wmark, encode_wmark, Variant, WMarkMatrix};
use spartan_core::pruner::{apply_hp, HpConfig};
use spartan_core::WeightMatrix;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn encode_decode_is_exact(w in matrix(30, 30), cfg in hp(12)) {
        let pm = apply_hp(&w, &cfg).unwrap();
        let m = encode_wmark(&pm, 32, 10).unwrap();
        m.validate().unwrap();
        prop_assert_eq!(m.nnz(), pm.kept_count());
        let expect = if cfg.pruned_columns(w.cols()) == 0 { Variant::Sf2 } else { Variant::Sf1 };
        prop_assert_eq!(m.variant(), expect);
        prop_assert_eq!(m.col_idx(0).is_some(), expect == Variant::Sf1);
        prop_assert_eq!(&decode_wmark(&m, w.rows(), w.cols()).unwrap(), pm.dense());
        let back = m.to_pruned().unwrap();
        prop_assert_eq!(back.dense(), pm.dense());
        prop_assert_eq!(back.mask(), pm.mask());
    }

    #[test]
    fn byte_layout_round_trips(w in matrix(30, 30), cfg in hp(12)) {
        let pm = apply_hp(&w, &cfg).unwrap();
        let m = encode_wmark(&pm, 32, 10).unwrap();
        let bytes = m.to_bytes();
        let back = WMarkMatrix::from_bytes(&bytes).unwrap();
        prop_assert_eq!(&back, &m);
        prop_assert_eq!(back.to_bytes(), bytes);
    }

    #[test]
    fn narrow_values_keep_the_structure(w in matrix(20, 20), cfg in hp(8), vb_i in 0usize..4) {
        let vb = SUPPORTED_VALUE_BITS[vb_i];
        let pm = apply_hp(&w, &cfg).unwrap();
        let m = encode_wmark(&pm, vb, 10).unwrap();
        let back = WMarkMatrix::from_bytes(&m.to_bytes()).unwrap();
        back.validate().unwrap();
        prop_assert_eq!(back.value_bits(), vb);
        let bp = back.to_pruned().unwrap();
        prop_assert_eq!(bp.mask(), pm.mask());
        prop_assert_eq!(bp.all_slots(), pm.all_slots());
        let max = w.values().iter().fold(0.0f32, |a, v| a.max(v.abs()));
        let tol = match vb { 4 => max / 7.0 * 0.51, 8 => max / 127.0 * 0.51, 16 => max * 1e-3, _ => 0.0 };
        for b in 0..m.n_blocks() {
            for (x, y) in m.values(b).iter().zip(back.values(b)) {
                prop_assert!((x - y).abs() <= tol);
            }
        }
    }

    #[test]
    fn truncated_or_corrupt_bytes_are_rejected(w in matrix(12, 12), cfg in hp(6), cut in 1usize..8) {
        let pm = apply_hp(&w, &cfg).unwrap();
        let bytes = encode_wmark(&pm, 32, 10).unwrap().to_bytes();
        prop_assert!(WMarkMatrix::from_bytes(&bytes[..bytes.len().saturating_sub(cut)]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        prop_assert!(WMarkMatrix::from_bytes(&bad).is_err());
    }
}

#[test]
fn index_width_must_cover_columns() {
    let w = WeightMatrix::new(4, 40, (1..=160).map(|v| v as f32).collect()).unwrap();
    let pm = apply_hp(&w, &HpConfig::new(2, 0.5, 1).unwrap()).unwrap();
    assert!(encode_wmark(&pm, 32, 5).is_err());
    assert!(encode_wmark(&pm, 32, 6).is_ok());
    assert!(encode_wmark(&pm, 12, 6).is_err());
}

#[test]
fn fully_pruned_columns() {
    let w = WeightMatrix::new(4, 4, (1..=16).map(|v| v as f32).collect()).unwrap();
    let pm = apply_hp(&w, &HpConfig::new(2, 0.99, 1).unwrap()).unwrap();
    let m = encode_wmark(&pm, 32, 4).unwrap();
    assert_eq!(m.nnz(), 0);
    assert_eq!(decode_wmark(&m, 4, 4).unwrap(), WeightMatrix::zeros(4, 4).unwrap());
    assert_eq!(WMarkMatrix::from_bytes(&m.to_bytes()).unwrap(), m);
}
