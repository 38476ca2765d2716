//! Property tests for the rectangle calculus.

use proptest::prelude::*;
use smu_core::{g_volume, grid_join, vertex_signs, Grid, Point, Rect, RectClosure};

fn coord() -> impl Strategy<Value = f64> {
    (1u32..4000).prop_map(|k| k as f64 / 100.0)
}

fn point(dim: usize) -> impl Strategy<Value = Point> {
    prop::collection::vec(coord(), dim)
        .prop_map(|c| Point::new(c).expect("strategy yields valid coordinates"))
}

fn rect(dim: usize) -> impl Strategy<Value = Rect> {
    (point(dim), point(dim)).prop_map(|(a, b)| {
        Rect::new(a.meet(&b), a.join(&b), RectClosure::LowerClosedUpperOpen).expect("ordered")
    })
}

proptest! {
    #[test]
    fn sign_parity_splits_evenly(r in (1usize..=4).prop_flat_map(rect)) {
        let signs = vertex_signs(&r);
        prop_assert_eq!(signs.len(), 1 << r.dim());
        let plus = signs.iter().filter(|sv| sv.sign == 1).count();
        prop_assert_eq!(plus * 2, signs.len());
        prop_assert_eq!(signs.iter().map(|sv| i32::from(sv.sign)).sum::<i32>(), 0);
    }

    #[test]
    fn adjacent_vertices_have_opposite_signs(r in (1usize..=3).prop_flat_map(rect)) {
        // vertex identity is by value, so only non-degenerate rectangles
        // carry the combinatorial adjacency structure
        let d = r.dim();
        prop_assume!((0..d).all(|i| r.lower().get(i) < r.upper().get(i)));
        let signs = vertex_signs(&r);
        for a in &signs {
            for b in &signs {
                let differing = (0..d)
                    .filter(|&i| a.vertex.get(i) != b.vertex.get(i))
                    .count();
                if differing == 1 {
                    prop_assert_eq!(a.sign, -b.sign);
                }
            }
        }
    }

    #[test]
    fn volume_is_additive_under_splits(
        r in (1usize..=3).prop_flat_map(rect),
        axis_sel in any::<prop::sample::Index>(),
        frac in 0.05f64..0.95,
    ) {
        // g: a mixture-like product form, smooth enough to evaluate anywhere
        let g = |p: &Point| {
            p.coords().iter().map(|&x| (-0.3 * x).exp() + 1.0 / (1.0 + x)).product::<f64>()
        };
        let d = r.dim();
        let axis = axis_sel.index(d);
        let (lo, hi) = (r.lower().get(axis), r.upper().get(axis));
        let cut = lo + frac * (hi - lo);
        prop_assume!(cut > lo && cut < hi);
        let mut mid_lower = r.lower().coords().to_vec();
        mid_lower[axis] = cut;
        let mut mid_upper = r.upper().coords().to_vec();
        mid_upper[axis] = cut;
        let left = Rect::half_open(r.lower().clone(), Point::new(mid_upper).unwrap()).unwrap();
        let right = Rect::half_open(Point::new(mid_lower).unwrap(), r.upper().clone()).unwrap();
        let whole = g_volume(g, &r).unwrap();
        let parts = g_volume(g, &left).unwrap() + g_volume(g, &right).unwrap();
        prop_assert!((whole - parts).abs() <= 1e-12 * whole.abs().max(1.0));
    }

    #[test]
    fn degenerate_rectangles_have_zero_volume(p in (1usize..=3).prop_flat_map(point)) {
        let r = Rect::half_open(p.clone(), p).unwrap();
        let g = |q: &Point| q.coords().iter().sum::<f64>().exp();
        prop_assert_eq!(g_volume(g, &r).unwrap(), 0.0);
    }

    #[test]
    fn d1_volume_reduces_to_difference(a in coord(), b in coord()) {
        let (lo, hi) = (a.min(b), a.max(b));
        let r = Rect::half_open(Point::from_slice(&[lo]), Point::from_slice(&[hi])).unwrap();
        let g = |p: &Point| (-p.get(0)).exp();
        let v = g_volume(g, &r).unwrap();
        prop_assert_eq!(v, (-hi).exp() - (-lo).exp());
    }

    #[test]
    fn grid_join_of_subsets_lies_on_the_grid(
        data in prop::collection::vec(point(2), 1..12),
        picks in prop::collection::vec(any::<prop::sample::Index>(), 1..6),
    ) {
        let grid = Grid::from_data(&data).unwrap();
        let subset: Vec<Point> = picks.iter().map(|ix| data[ix.index(data.len())].clone()).collect();
        let join = grid_join(&subset).unwrap();
        prop_assert!(grid.contains(&join), "join {:?} off the grid", join);
    }

    #[test]
    fn grid_iteration_is_lexicographic(data in prop::collection::vec(point(2), 1..10)) {
        let grid = Grid::from_data(&data).unwrap();
        let pts: Vec<Point> = grid.iter_points().collect();
        prop_assert_eq!(pts.len() as u64, grid.len());
        for w in pts.windows(2) {
            prop_assert!(w[0].coords() < w[1].coords());
        }
    }
}
