use std::collections::HashSet;

use cholcomm::chol::{factor, CholVariant, RunConfig};
use cholcomm::report::{parse_table1_csv, table1_csv, Table1Row};
use cholcomm::{reference_cholesky, FlopCounter, Layout, LayoutKind, Matrix, Scalar};
use proptest::prelude::*;

fn layout_kind() -> impl Strategy<Value = LayoutKind> {
    prop_oneof![
        Just(LayoutKind::ColumnMajor),
        (1usize..9).prop_map(|block| LayoutKind::Blocked { block }),
        Just(LayoutKind::BlockRecursive),
    ]
}

fn variant() -> impl Strategy<Value = CholVariant> {
    prop_oneof![
        Just(CholVariant::NaiveLeft),
        Just(CholVariant::NaiveRight),
        Just(CholVariant::BlockedPotrf { block: 0 }),
        Just(CholVariant::RectangularRecursive),
        Just(CholVariant::SquareRecursive),
    ]
}

fn scalar() -> impl Strategy<Value = Scalar> {
    prop_oneof![
        Just(Scalar::StarOne),
        Just(Scalar::StarZero),
        (-1000i32..1000).prop_map(|x| Scalar::Real(x as f64)),
    ]
}

proptest! {
    #[test]
    fn layout_is_a_bijection_into_its_footprint(kind in layout_kind(), n in 1usize..24) {
        let l = Layout::new(kind, n).unwrap();
        let mut seen = HashSet::new();
        for i in 0..n {
            for j in 0..n {
                let a = l.address(i, j).unwrap();
                prop_assert!(a < l.footprint());
                prop_assert!(seen.insert(a));
            }
        }
    }

    #[test]
    fn address_set_is_exact_and_maximal(
        kind in layout_kind(),
        n in 1usize..20,
        r in (0usize..20, 0usize..20),
        c in (0usize..20, 0usize..20),
    ) {
        let (r0, r1) = ((r.0 % n).min(r.1 % n), (r.0 % n).max(r.1 % n) + 1);
        let (c0, c1) = ((c.0 % n).min(c.1 % n), (c.0 % n).max(c.1 % n) + 1);
        let l = Layout::new(kind, n).unwrap();
        let runs = l.address_set(r0..r1, c0..c1).unwrap();
        let mut from_runs: Vec<usize> = runs.iter().flat_map(|r| r.addr..r.addr + r.len).collect();
        let mut direct: Vec<usize> = (r0..r1)
            .flat_map(|i| (c0..c1).map(move |j| (i, j)))
            .map(|(i, j)| l.address(i, j).unwrap())
            .collect();
        from_runs.sort_unstable();
        direct.sort_unstable();
        prop_assert_eq!(from_runs, direct);
        for w in runs.windows(2) {
            prop_assert!(w[0].addr + w[0].len < w[1].addr, "runs not ascending and separated");
        }
    }

    #[test]
    fn aligned_blocks_are_contiguous(n in 1usize..40, b in 1usize..9, bi in 0usize..8, bj in 0usize..8) {
        let l = Layout::new(LayoutKind::Blocked { block: b }, n).unwrap();
        let (r0, c0) = ((bi * b) % l.padded_n(), (bj * b) % l.padded_n());
        if r0 + b <= n && c0 + b <= n {
            prop_assert_eq!(l.address_set(r0..r0 + b, c0..c0 + b).unwrap().len(), 1);
        }
        let size = 1usize << (bi % 4);
        let m = Layout::new(LayoutKind::BlockRecursive, n).unwrap();
        let (q0, q1) = ((bi * size) % m.padded_n(), (bj * size) % m.padded_n());
        if q0 + size <= n && q1 + size <= n {
            prop_assert_eq!(m.address_set(q0..q0 + size, q1..q1 + size).unwrap().len(), 1);
        }
    }

    #[test]
    fn scalar_add_mul_commute_and_associate(x in scalar(), y in scalar(), z in scalar()) {
        prop_assert_eq!(x.add(y), y.add(x));
        prop_assert_eq!(x.mul(y), y.mul(x));
        prop_assert_eq!(x.add(y).add(z), x.add(y.add(z)));
        prop_assert_eq!(x.mul(y).mul(z), x.mul(y.mul(z)));
    }

    #[test]
    fn table_csv_round_trips(
        rows in prop::collection::vec(
            (
                "[a-z-]{1,12}",
                "[a-z()0-9-]{1,14}",
                1usize..5000,
                1usize..5000,
                prop::option::of(1usize..64),
                any::<u32>(),
                any::<u32>(),
                any::<u32>(),
                0.0f64..1e9,
                0.0f64..1e6,
                prop::option::of(0.0f64..1e3),
                prop::option::of(0.0f64..1e3),
            ),
            0..8,
        )
    ) {
        let rows: Vec<Table1Row> = rows
            .into_iter()
            .map(|(variant, layout, n, m, b, w, msg, f, lw, lm, rw, rm)| Table1Row {
                variant,
                layout,
                n,
                m_fast: m,
                b,
                words: w as u64,
                messages: msg as u64,
                flops: f as u64,
                lb_words: lw,
                lb_msgs: lm,
                ratio_words: rw,
                ratio_msgs: rm,
            })
            .collect();
        let text = table1_csv(&rows).unwrap();
        prop_assert_eq!(parse_table1_csv(&text).unwrap(), rows);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn every_variant_factors_correctly(
        v in variant(),
        kind in layout_kind(),
        n in 1usize..48,
        cap in 12usize..400,
        seed in any::<u64>(),
    ) {
        let a = Matrix::random_spd(n, seed);
        let f = factor(&a, &RunConfig::new(v, kind, cap)).unwrap();
        prop_assert!(a.factor_residual(&f.l) <= 1e-12);
        let want = reference_cholesky(&a, &mut FlopCounter::new()).unwrap();
        prop_assert_eq!(&f.l, &want);
        prop_assert!(f.report.peak_occupancy <= cap);
        prop_assert!(f.counters.words_read >= (n * (n + 1) / 2) as u64);
        prop_assert!(f.counters.words_written >= (n * (n + 1) / 2) as u64);
    }
}
