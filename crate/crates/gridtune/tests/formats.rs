use gridtune::io::{parse_histogram_csv, parse_points_csv, write_histogram_csv, write_points_csv};
use gridtune_core::{GridSpec, NoisyHistogram, Point, PointSet, Rect};
use proptest::prelude::*;

fn unit() -> Rect {
    Rect::new(0.0, 0.0, 1.0, 1.0).unwrap()
}

proptest! {
    #[test]
    fn points_csv_round_trips(pts in proptest::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), 1..100)) {
        let ps = PointSet::new(unit(), pts.iter().map(|&(x, y)| Point::new(x, y).unwrap()).collect()).unwrap();
        let mut buf = Vec::new();
        write_points_csv(&mut buf, &ps).unwrap();
        let back = parse_points_csv(std::str::from_utf8(&buf).unwrap(), Some(unit())).unwrap();
        prop_assert_eq!(back.rejected, 0);
        prop_assert_eq!(back.points, ps);
    }

    #[test]
    fn histogram_csv_round_trips(g in 1u32..12, seed in any::<u64>()) {
        let grid = GridSpec::new(unit(), g).unwrap();
        let counts: Vec<f64> = (0..grid.n_cells())
            .map(|i| ((seed ^ (i as u64).wrapping_mul(0x9E37_79B9)) % 10_000) as f64 / 7.0 - 500.0)
            .collect();
        let h = NoisyHistogram::from_counts(grid, counts).unwrap();
        let mut buf = Vec::new();
        write_histogram_csv(&mut buf, &h).unwrap();
        let back = parse_histogram_csv(std::str::from_utf8(&buf).unwrap(), unit()).unwrap();
        prop_assert_eq!(back, h);
    }
}

#[test]
fn points_outside_explicit_domain_are_counted() {
    let lp = parse_points_csv("x,y\n0.5,0.5\n2,2\n-1,0.3\n", Some(unit())).unwrap();
    assert_eq!(lp.points.len(), 1);
    assert_eq!(lp.rejected, 2);
}
