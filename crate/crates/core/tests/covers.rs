use fiberwise::box_cover::{
    build_cover, rat, verify_cover, CompactRegion, NeighborhoodFamily, RegionBox, TorusQuotient,
};
use num_rational::BigRational;
use proptest::prelude::*;

fn region_case() -> impl Strategy<Value = (usize, usize, Vec<(Vec<f64>, Vec<f64>)>, f64)> {
    (1usize..=2).prop_flat_map(|n| {
        let corner = prop::collection::vec((-1.0f64..1.0, 0.0f64..0.6), n).prop_map(|axes| {
            axes.iter()
                .map(|(a, w)| (*a, a + w))
                .unzip::<f64, f64, Vec<f64>, Vec<f64>>()
        });
        (
            Just(n),
            0..=n,
            prop::collection::vec(corner, 1..3),
            0.15f64..0.6,
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn covers_are_certified_and_thin((n, m, boxes, radius) in region_case()) {
        let space = TorusQuotient::new(n, m).unwrap();
        let boxes = boxes.iter().map(|(lo, hi)| RegionBox::from_f64(lo, hi).unwrap()).collect();
        let region = CompactRegion::from_boxes(&space, boxes).unwrap();
        let family = NeighborhoodFamily::constant(radius).unwrap();
        let cover = build_cover(&space, &region, &family).unwrap();
        prop_assert!(cover.multiplicity <= 1 << n);
        let side = BigRational::new(11.into(), 10.into()) / BigRational::from_integer((1u64 << cover.k_final).into());
        prop_assert!(cover.boxes.iter().all(|b| b.width == side));
        prop_assert!(cover.epsilon <= rat(radius).unwrap());
        let check = verify_cover(&region, &family, &cover, 4000).unwrap();
        prop_assert!(check.passed(), "{:?}", check);
    }
}

#[test]
fn whole_circle_uses_two_overlapping_levels() {
    let space = TorusQuotient::new(1, 1).unwrap();
    let region = CompactRegion::whole(&space).unwrap();
    let family = NeighborhoodFamily::constant(0.5).unwrap();
    let cover = build_cover(&space, &region, &family).unwrap();
    assert_eq!(cover.multiplicity, 2);
    assert!(verify_cover(&region, &family, &cover, 1000)
        .unwrap()
        .passed());
}
