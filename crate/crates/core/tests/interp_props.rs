use proptest::prelude::*;
use stodyn_core::{GridFunction, RectGrid};

fn axes(max_dim: usize) -> impl Strategy<Value = Vec<(f64, f64, usize)>> {
    prop::collection::vec((-10.0..10.0f64, 0.01..20.0f64, 1usize..7), 1..=max_dim)
        .prop_map(|v| v.into_iter().map(|(lo, w, n)| (lo, if n == 1 { lo } else { lo + w }, n)).collect())
}

fn clamp_to(grid: &RectGrid, x: &[f64]) -> Vec<f64> {
    x.iter().zip(grid.axes()).map(|(&v, a)| v.clamp(a.lo(), a.hi())).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn reproduces_node_values(shape in axes(4), seed in any::<u64>()) {
        let grid = RectGrid::new(&shape).unwrap();
        let mut s = seed;
        let f = GridFunction::from_fn(grid.clone(), |_| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64 * 200.0 - 100.0
        }).unwrap();
        let mut x = vec![0.0; grid.dim()];
        for i in 0..grid.len() {
            grid.write_node(i, &mut x);
            prop_assert_eq!(f.interpolate(&x).unwrap(), f.values()[i]);
        }
    }

    #[test]
    fn reproduces_affine_functions(
        shape in axes(4),
        coef in prop::collection::vec(-3.0..3.0f64, 5),
        pts in prop::collection::vec(-15.0..15.0f64, 4 * 40),
    ) {
        let grid = RectGrid::new(&shape).unwrap();
        let d = grid.dim();
        let affine = |x: &[f64]| coef[d] + x.iter().zip(&coef).map(|(a, b)| a * b).sum::<f64>();
        let f = GridFunction::from_fn(grid.clone(), affine).unwrap();
        for p in pts.chunks_exact(4) {
            let p = &p[..d];
            let got = f.interpolate(p).unwrap();
            let want = affine(&clamp_to(&grid, p));
            prop_assert!((got - want).abs() <= 1e-12 * (1.0 + want.abs()), "{} vs {}", got, want);
        }
    }

    #[test]
    fn stays_within_cell_corner_values(
        shape in axes(4),
        vals in prop::collection::vec(-1e3..1e3f64, 4096),
        pts in prop::collection::vec(-15.0..15.0f64, 4 * 20),
    ) {
        let grid = RectGrid::new(&shape).unwrap();
        let d = grid.dim();
        let f = GridFunction::new(grid.clone(), vals[..grid.len()].to_vec()).unwrap();
        for p in pts.chunks_exact(4) {
            let p = &p[..d];
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            grid.for_each_corner(p, |i, _| {
                lo = lo.min(f.values()[i]);
                hi = hi.max(f.values()[i]);
            });
            let v = f.interpolate(p).unwrap();
            prop_assert!(v >= lo && v <= hi, "{} not in [{}, {}]", v, lo, hi);
        }
    }

    #[test]
    fn outside_points_equal_clamped_points(shape in axes(3), pts in prop::collection::vec(-40.0..40.0f64, 3 * 20)) {
        let grid = RectGrid::new(&shape).unwrap();
        let d = grid.dim();
        let f = GridFunction::from_fn(grid.clone(), |x| x.iter().map(|v| v.sin()).product()).unwrap();
        for p in pts.chunks_exact(3) {
            let p = &p[..d];
            prop_assert_eq!(f.interpolate(p).unwrap(), f.interpolate(&clamp_to(&grid, p)).unwrap());
        }
    }

    #[test]
    fn batch_matches_scalar(shape in axes(4), pts in prop::collection::vec(-15.0..15.0f64, 4 * 16)) {
        let grid = RectGrid::new(&shape).unwrap();
        let d = grid.dim();
        let f = GridFunction::from_fn(grid.clone(), |x| x.iter().enumerate().map(|(k, v)| (k as f64 + 1.0) * v * v).sum()).unwrap();
        let flat: Vec<f64> = pts.chunks_exact(4).flat_map(|p| p[..d].to_vec()).collect();
        let batch = f.interpolate_batch(&flat).unwrap();
        for (p, b) in flat.chunks_exact(d).zip(batch) {
            prop_assert_eq!(f.interpolate(p).unwrap(), b);
        }
    }

    #[test]
    fn corner_weights_form_a_partition_of_unity(shape in axes(4), pts in prop::collection::vec(-15.0..15.0f64, 4)) {
        let grid = RectGrid::new(&shape).unwrap();
        let mut total = 0.0;
        let mut count = 0;
        grid.for_each_corner(&pts[..grid.dim()], |i, w| {
            assert!(i < grid.len() && w > 0.0);
            total += w;
            count += 1;
        });
        prop_assert!((total - 1.0).abs() < 1e-14);
        prop_assert!(count <= 1 << grid.dim());
    }
}
