use fwsvm::data::{parse_svmlight, synth_blobs, BlobConfig, Dataset};
use fwsvm::model::SparseVector;
use proptest::prelude::*;

fn sparse_rows() -> impl Strategy<Value = Vec<(usize, Vec<(usize, f64)>)>> {
    prop::collection::vec(
        (
            0..5usize,
            prop::collection::btree_map(0..30usize, -1e6..1e6f64, 0..8)
                .prop_map(|m| m.into_iter().collect::<Vec<_>>()),
        ),
        1..30,
    )
}

proptest! {
    #[test]
    fn svmlight_round_trip_is_exact(rows in sparse_rows()) {
        let names: Vec<String> = ["a", "b", "c", "d", "e"].iter().map(|s| s.to_string()).collect();
        let labels: Vec<usize> = rows.iter().map(|(y, _)| *y).collect();
        let features: Vec<SparseVector> = rows
            .iter()
            .map(|(_, entries)| {
                let (idx, val): (Vec<usize>, Vec<f64>) = entries.iter().copied().unzip();
                SparseVector::new(idx, val, 30).unwrap()
            })
            .collect();
        let data = Dataset::new(features, labels, 30, names).unwrap();
        let mut buf = Vec::new();
        data.write_svmlight(&mut buf).unwrap();
        let back = parse_svmlight(buf.as_slice()).unwrap();
        prop_assert_eq!(back.len(), data.len());
        let back = back.align_labels(data.label_names()).unwrap();
        prop_assert_eq!(back.labels(), data.labels());
        for (a, b) in back.features().iter().zip(data.features()) {
            prop_assert_eq!(a.indices(), b.indices());
            let same = a.values().iter().zip(b.values()).all(|(x, y)| x.to_bits() == y.to_bits());
            prop_assert!(same);
        }
    }

    #[test]
    fn split_partitions_examples(seed in any::<u64>(), fraction in 0.1..0.9f64) {
        let data = synth_blobs(&BlobConfig { per_class: 3, classes: 4, dim: 3, ..BlobConfig::standard(seed) }).unwrap();
        let (a, b) = data.split(fraction, seed).unwrap();
        prop_assert_eq!(a.len() + b.len(), data.len());
        prop_assert_eq!(a.classes(), data.classes());
    }
}

#[test]
fn zero_sigma_rows_repeat_within_class() {
    let data = synth_blobs(&BlobConfig {
        sigma: 0.0,
        ..BlobConfig::standard(2)
    })
    .unwrap();
    for (x, y) in data.iter() {
        let first = data.iter().find(|(_, z)| *z == y).unwrap().0;
        assert_eq!(x, first);
    }
}

#[test]
fn blobs_are_reproducible() {
    let a = synth_blobs(&BlobConfig::standard(4)).unwrap();
    let b = synth_blobs(&BlobConfig::standard(4)).unwrap();
    let c = synth_blobs(&BlobConfig::standard(5)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}
