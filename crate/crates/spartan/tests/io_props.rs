use proptest::prelude::*;
use spartan::container::{matrix_bytes, parse_matrix};
use spartan::pruned::{load_pruned, write_pruned};
use spartan_core::pruner::{apply_hp, HpConfig};
use spartan_core::WeightMatrix;

fn matrix() -> impl Strategy<Value = WeightMatrix> {
    (1usize..=24, 1usize..=24).prop_flat_map(|(r, c)| {
        prop::collection::vec(any::<u32>().prop_map(f32::from_bits), r * c)
            .prop_map(move |v| WeightMatrix::new(r, c, v).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// Any bit pattern, NaN payloads included, survives a round trip.
    #[test]
    fn container_round_trip_is_byte_identical(w in matrix()) {
        let bytes = matrix_bytes(&w);
        let back = parse_matrix(&bytes).unwrap();
        prop_assert_eq!(matrix_bytes(&back), bytes);
    }

    #[test]
    fn truncated_or_padded_payloads_are_rejected(w in matrix(), cut in 1usize..4, pad in 1usize..4) {
        let bytes = matrix_bytes(&w);
        prop_assert!(parse_matrix(&bytes[..bytes.len() - cut]).is_err());
        let mut long = bytes.clone();
        long.extend(std::iter::repeat_n(0u8, pad));
        prop_assert!(parse_matrix(&long).is_err());
    }

    /// The sidecar keeps kept weights that are exactly zero.
    #[test]
    fn pruned_round_trip(r in 1usize..=20, c in 1usize..=20, p in 1usize..=8, s in 0usize..10, kk in 1usize..=8, zeros in prop::collection::vec(any::<bool>(), 400)) {
        let v: Vec<f32> = (0..r * c).map(|i| if zeros[i] { 0.0 } else { (i % 13) as f32 - 6.5 }).collect();
        let w = WeightMatrix::new(r, c, v).unwrap();
        let hp = HpConfig::new(p, s as f64 / 10.0, kk.min(p)).unwrap();
        let pm = apply_hp(&w, &hp).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.hp");
        write_pruned(&path, &pm, &hp).unwrap();
        let (back, _) = load_pruned(&path).unwrap();
        prop_assert_eq!(back, pm);
    }
}
