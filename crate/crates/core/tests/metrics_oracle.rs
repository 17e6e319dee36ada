use proptest::prelude::*;
use stc_core::metrics::*;
use stc_core::BoundingBox;

/// Counts unit cells of the integer lattice covered by each box.
fn lattice_iou(a: (i32, i32, i32, i32), b: (i32, i32, i32, i32)) -> f64 {
    let inside = |bx: (i32, i32, i32, i32), x: i32, y: i32| x >= bx.0 && x < bx.0 + bx.2 && y >= bx.1 && y < bx.1 + bx.3;
    let (mut inter, mut union) = (0u32, 0u32);
    for y in -30..60 {
        for x in -30..60 {
            let (ia, ib) = (inside(a, x, y), inside(b, x, y));
            inter += (ia && ib) as u32;
            union += (ia || ib) as u32;
        }
    }
    inter as f64 / union as f64
}

fn as_box(b: (i32, i32, i32, i32)) -> BoundingBox {
    BoundingBox::new(b.0 as f64, b.1 as f64, b.2 as f64, b.3 as f64)
}

#[test]
fn one_seventh_hand_case() {
    let oracle = lattice_iou((0, 0, 2, 2), (1, 1, 2, 2));
    assert!((oracle - 1.0 / 7.0).abs() < 1e-12);
    let got = overlap_score(&as_box((0, 0, 2, 2)), &as_box((1, 1, 2, 2)));
    assert!((got - oracle).abs() <= 1e-9);
}

fn int_box() -> impl Strategy<Value = (i32, i32, i32, i32)> {
    (-10i32..20, -10i32..20, 1i32..=20, 1i32..=20)
}

fn real_box() -> impl Strategy<Value = BoundingBox> {
    (-20.0f64..20.0, -20.0f64..20.0, 0.1f64..20.0, 0.1f64..20.0).prop_map(|(x, y, w, h)| BoundingBox::new(x, y, w, h))
}

proptest! {
    #[test]
    fn overlap_agrees_with_lattice(a in int_box(), b in int_box()) {
        let got = overlap_score(&as_box(a), &as_box(b));
        prop_assert!((got - lattice_iou(a, b)).abs() <= 1e-9);
    }

    #[test]
    fn overlap_symmetric_bounded(a in real_box(), b in real_box()) {
        let (ab, ba) = (overlap_score(&a, &b), overlap_score(&b, &a));
        prop_assert_eq!(ab, ba);
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert_eq!(overlap_score(&a, &a), 1.0);
        if a != b {
            prop_assert!(ab < 1.0);
        }
    }

    #[test]
    fn success_rate_monotone(pairs in prop::collection::vec((real_box(), real_box()), 1..30), t1 in 0.0f64..1.0, t2 in 0.0f64..1.0) {
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let (r, g): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        prop_assert!(success_rate(&r, &g, hi).unwrap() <= success_rate(&r, &g, lo).unwrap());
    }

    #[test]
    fn center_error_triangle(a in real_box(), b in real_box(), c in real_box()) {
        prop_assert!(center_error(&a, &c) <= center_error(&a, &b) + center_error(&b, &c) + 1e-9);
    }
}
