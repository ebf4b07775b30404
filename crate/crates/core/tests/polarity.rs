use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sempol_core::polarity::{build_series, sp_bruteforce, sp_fast};
use sempol_core::store::{write_store, EmbeddingRecord, EmbeddingStore, StoreMetadata};
use sempol_core::types::{Bucket, Granularity, SourceId, SourcePair, YearMonth, YearWindow};

fn vec_set(max_n: usize, d: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-1.0f64..1.0, d), 1..=max_n)
        .prop_filter("nonzero", |s| s.iter().all(|v| v.iter().any(|x| x.abs() > 1e-6)))
}

fn pair_of_sets() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    (1usize..=32).prop_flat_map(|d| (vec_set(50, d), vec_set(50, d)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn fast_matches_bruteforce((c, f) in pair_of_sets()) {
        let brute = sp_bruteforce(&c, &f).unwrap();
        let fast = sp_fast(&c, &f).unwrap();
        prop_assert!((brute.value - fast.value).abs() < 1e-9);
        prop_assert_eq!((fast.n1, fast.n2), (c.len(), f.len()));
    }

    #[test]
    fn bounds_symmetry_scale((c, f) in pair_of_sets(), scales in prop::collection::vec(1e-3f64..1e3, 50)) {
        let sp = sp_fast(&c, &f).unwrap().value;
        prop_assert!((0.0..=2.0).contains(&sp));
        prop_assert_eq!(sp, sp_fast(&f, &c).unwrap().value);
        let scaled: Vec<Vec<f64>> = c.iter().zip(&scales).map(|(v, s)| v.iter().map(|x| x * s).collect()).collect();
        prop_assert!((sp_fast(&scaled, &f).unwrap().value - sp).abs() < 1e-12);
    }

    #[test]
    fn colinear_sets_have_zero_sp(dir in prop::collection::vec(-1.0f64..1.0, 2..16), scales in prop::collection::vec(0.01f64..100.0, 2..20)) {
        prop_assume!(dir.iter().any(|x| x.abs() > 1e-3));
        let (a, b) = scales.split_at(scales.len() / 2);
        let c: Vec<Vec<f64>> = a.iter().map(|s| dir.iter().map(|x| x * s).collect()).collect();
        let f: Vec<Vec<f64>> = b.iter().map(|s| dir.iter().map(|x| x * s).collect()).collect();
        prop_assert!(sp_fast(&c, &f).unwrap().value < 1e-12);
        prop_assert!(sp_bruteforce(&c, &f).unwrap().value < 1e-12);
    }
}

#[test]
fn opposite_vectors_reach_upper_bound() {
    let c = vec![vec![1.0, 2.0]];
    let f = vec![vec![-2.0, -4.0], vec![-0.5, -1.0]];
    assert!((sp_fast(&c, &f).unwrap().value - 2.0).abs() < 1e-12);
    assert!((sp_bruteforce(&c, &f).unwrap().value - 2.0).abs() < 1e-12);
}

fn src(s: &str) -> SourceId {
    SourceId::new(s).unwrap()
}

fn rec(id: usize, source: &str, year: i32, month: u32, v: Vec<f32>) -> EmbeddingRecord {
    EmbeddingRecord { turn_id: format!("r{id}"), source: src(source), keyword_id: 4, date: YearMonth::new(year, month).unwrap(), vector: v }
}

fn store_of(recs: &[EmbeddingRecord]) -> (tempfile::TempDir, EmbeddingStore) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.dlns");
    let meta = StoreMetadata { sources: vec![src("cnn"), src("foxnews")], ..Default::default() };
    write_store(&path, recs[0].vector.len(), &meta, recs).unwrap();
    let store = EmbeddingStore::open(&path).unwrap();
    (dir, store)
}

fn pair() -> SourcePair {
    SourcePair::new(src("cnn"), src("foxnews"))
}

#[test]
fn rotated_2015_spikes_to_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut recs = Vec::new();
    for year in 2010..=2020 {
        for month in 1..=12 {
            for k in 0..3 {
                let s: f32 = rng.gen_range(0.5..2.0);
                recs.push(rec(recs.len(), "cnn", year, month, vec![s, 0.0, 0.0]));
                let v = if year == 2015 { vec![0.0, s, 0.0] } else { vec![s * (1 + k) as f32, 0.0, 0.0] };
                recs.push(rec(recs.len(), "foxnews", year, month, v));
            }
        }
    }
    let (_d, store) = store_of(&recs);
    let (yearly, diag) = build_series(&store, 4, &pair(), Granularity::Yearly, YearWindow::default()).unwrap();
    assert!(diag.filled.is_empty());
    assert_eq!(yearly.len(), 11);
    for p in &yearly.points {
        let expect = if p.bucket == Bucket::Year(2015) { 1.0 } else { 0.0 };
        assert!((p.value - expect).abs() < 1e-12, "{:?}", p);
    }
    assert_eq!(yearly.argmax().unwrap().bucket, Bucket::Year(2015));
    let (monthly, _) = build_series(&store, 4, &pair(), Granularity::Monthly, YearWindow::default()).unwrap();
    assert_eq!(monthly.len(), 132);
    assert!(monthly.points.windows(2).all(|w| w[0].bucket < w[1].bucket));
}

#[test]
fn identical_vectors_give_flat_zero_series() {
    let recs: Vec<EmbeddingRecord> = (0..40)
        .map(|i| rec(i, if i % 2 == 0 { "cnn" } else { "foxnews" }, 2010 + (i as i32 % 11), 1 + (i as u32 % 12), vec![0.3, 0.4]))
        .collect();
    let (_d, store) = store_of(&recs);
    let (s, _) = build_series(&store, 4, &pair(), Granularity::Yearly, YearWindow::default()).unwrap();
    assert!(s.values().iter().all(|v| *v == 0.0));
}

#[test]
fn missing_month_is_interpolated_and_flagged() {
    // cos 0.8 in January, cos 0.6 in March, nothing for foxnews in February
    let recs = vec![
        rec(0, "cnn", 2012, 1, vec![1.0, 0.0]),
        rec(1, "foxnews", 2012, 1, vec![0.8, 0.6]),
        rec(2, "cnn", 2012, 2, vec![1.0, 0.0]),
        rec(3, "cnn", 2012, 3, vec![1.0, 0.0]),
        rec(4, "foxnews", 2012, 3, vec![0.6, 0.8]),
    ];
    let (_d, store) = store_of(&recs);
    let w = YearWindow::new(2012, 2012).unwrap();
    let (s, diag) = build_series(&store, 4, &pair(), Granularity::Monthly, w).unwrap();
    assert!((s.points[0].value - 0.2).abs() < 1e-6);
    assert!((s.points[1].value - 0.3).abs() < 1e-6);
    assert!(s.points[1].filled && !s.points[0].filled && !s.points[2].filled);
    assert!((s.points[2].value - 0.4).abs() < 1e-6);
    // trailing months carry the last measured value
    assert!(s.points[3..].iter().all(|p| p.filled && (p.value - 0.4).abs() < 1e-6));
    assert_eq!(diag.filled.len(), 10);
}

#[test]
fn yearly_value_is_union_not_mean_of_months() {
    let recs = vec![
        rec(0, "cnn", 2011, 1, vec![1.0, 0.0]),
        rec(1, "foxnews", 2011, 1, vec![1.0, 0.0]),
        rec(2, "cnn", 2011, 6, vec![0.0, 1.0]),
        rec(3, "cnn", 2011, 6, vec![0.0, 2.0]),
        rec(4, "cnn", 2011, 6, vec![0.0, 3.0]),
        rec(5, "foxnews", 2011, 6, vec![1.0, 0.0]),
    ];
    let (_d, store) = store_of(&recs);
    let w = YearWindow::new(2011, 2011).unwrap();
    let (yearly, _) = build_series(&store, 4, &pair(), Granularity::Yearly, w).unwrap();
    let (monthly, _) = build_series(&store, 4, &pair(), Granularity::Monthly, w).unwrap();
    let measured: Vec<f64> = monthly.measured().map(|v| v.value).collect();
    let mean_of_months = measured.iter().sum::<f64>() / measured.len() as f64;
    let c = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 2.0], vec![0.0, 3.0]];
    let f = vec![vec![1.0, 0.0]; 2];
    let union = sp_bruteforce(&c, &f).unwrap().value;
    assert!((yearly.points[0].value - union).abs() < 1e-12);
    assert!((yearly.points[0].value - mean_of_months).abs() > 1e-3);
}

#[test]
fn empty_side_is_an_error() {
    let recs = vec![rec(0, "cnn", 2011, 1, vec![1.0, 0.0])];
    let (_d, store) = store_of(&recs);
    assert!(build_series(&store, 4, &pair(), Granularity::Yearly, YearWindow::default()).is_err());
}
