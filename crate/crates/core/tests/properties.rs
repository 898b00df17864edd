use proptest::prelude::*;

use c2f_reg::evaluation::mae;
use c2f_reg::fields::{compose_add, upsample_field_to, DisplacementField};
use c2f_reg::grids::{LandmarkSet, Volume};
use c2f_reg::io::landmark_file::{format_landmarks, parse_landmarks};
use c2f_reg::io::{read_field, read_volume, write_field, write_volume};
use c2f_reg::objectives::local_ncc;

fn field(dims: [usize; 3]) -> impl Strategy<Value = DisplacementField> {
    let n = dims.iter().product::<usize>();
    prop::collection::vec(prop::array::uniform3(-4.0f64..4.0), n)
        .prop_map(move |v| DisplacementField::new(dims, v).unwrap())
}

fn coords(n: usize) -> impl Strategy<Value = Vec<[f64; 3]>> {
    prop::collection::vec(prop::array::uniform3(-500.0f64..500.0), n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn compose_add_commutes_and_associates(
        a in field([3, 2, 4]),
        b in field([3, 2, 4]),
        c in field([3, 2, 4]),
    ) {
        prop_assert_eq!(compose_add(&a, &b).unwrap(), compose_add(&b, &a).unwrap());
        let left = compose_add(&compose_add(&a, &b).unwrap(), &c).unwrap();
        let right = compose_add(&a, &compose_add(&b, &c).unwrap()).unwrap();
        for (u, v) in left.vectors().iter().zip(right.vectors()) {
            for k in 0..3 {
                prop_assert!((u[k] - v[k]).abs() < 1e-12);
            }
        }
        prop_assert!(compose_add(&a, &a.scaled(-1.0)).unwrap().is_zero());
    }

    #[test]
    fn upsampling_preserves_constants(v in prop::array::uniform3(-3.0f64..3.0)) {
        let f = DisplacementField::constant([3, 4, 5], v);
        let up = upsample_field_to(&f, [6, 8, 10].into());
        for u in up.vectors() {
            for k in 0..3 {
                prop_assert!((u[k] - 2.0 * v[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ncc_ignores_positive_affine_maps(
        data in prop::collection::vec(0.0f64..1.0, 5 * 4 * 6),
        scale in 0.1f64..10.0,
        shift in -5.0f64..5.0,
    ) {
        let a = Volume::from_vec([5, 4, 6], data.clone());
        let b = Volume::from_vec([5, 4, 6], data.iter().map(|v| scale * v + shift).collect());
        let ab = local_ncc(&a, &b, 3).unwrap();
        let aa = local_ncc(&a, &a, 3).unwrap();
        prop_assert!((ab - aa).abs() < 1e-6);
    }

    #[test]
    fn mae_symmetric_and_translation_invariant(
        pts in coords(6),
        other in coords(6),
        t in prop::array::uniform3(-50.0f64..50.0),
    ) {
        let a = LandmarkSet::from_coords(pts);
        let b = LandmarkSet::from_coords(other);
        let ab = mae(&a, &b).unwrap();
        prop_assert_eq!(ab, mae(&b, &a).unwrap());
        let moved = mae(&a.translated(t), &b.translated(t)).unwrap();
        prop_assert!((moved - ab).abs() <= 1e-9 * ab.max(1.0));
    }

    #[test]
    fn landmark_text_rewrites_identically(pts in coords(5)) {
        let first = format_landmarks(&LandmarkSet::from_coords(pts));
        let parsed = parse_landmarks(&first, std::path::Path::new("mem")).unwrap();
        prop_assert_eq!(format_landmarks(&parsed), first);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn volume_and_field_files_rewrite_identically(
        data in prop::collection::vec(-1e3f64..1e3, 2 * 3 * 4),
        f in field([2, 3, 4]),
        spacing in prop::array::uniform3(0.1f64..4.0),
    ) {
        let dir = tempfile::tempdir().unwrap();
        let p = |name: &str| dir.path().join(name);
        let v = Volume::new([2, 3, 4], data, spacing).unwrap();
        write_volume(&p("a.vhdr"), &v).unwrap();
        write_volume(&p("b.vhdr"), &read_volume(&p("a.vhdr")).unwrap()).unwrap();
        write_field(&p("fa.vhdr"), &f, spacing).unwrap();
        write_field(&p("fb.vhdr"), &read_field(&p("fa.vhdr")).unwrap(), spacing).unwrap();
        for (x, y) in [("a", "b"), ("fa", "fb")] {
            for ext in ["vhdr", "raw"] {
                let l = std::fs::read(p(&format!("{x}.{ext}"))).unwrap();
                let r = std::fs::read(p(&format!("{y}.{ext}"))).unwrap();
                prop_assert_eq!(l, r);
            }
        }
    }
}
