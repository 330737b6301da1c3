use std::ptr;

use hoi_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 256];
    let n = unsafe { hoi_last_error_message(buf.as_mut_ptr(), buf.len()) };
    let bytes: Vec<u8> = buf[..n.min(255)].iter().map(|&c| c as u8).collect();
    String::from_utf8(bytes).unwrap()
}

#[test]
fn template_lifecycle_and_posing() {
    let mut t: *mut HoiTemplate = ptr::null_mut();
    assert_eq!(unsafe { hoi_template_new(&mut t) }, HoiStatus::Ok);
    let nv = unsafe { hoi_template_vertex_count(t) };
    let nf = unsafe { hoi_template_face_count(t) };
    assert!(nv > 0 && nf > 0);
    let mut faces = vec![0u32; 3 * nf];
    assert_eq!(unsafe { hoi_template_faces(t, faces.as_mut_ptr()) }, HoiStatus::Ok);
    assert!(faces.iter().all(|&f| (f as usize) < nv));

    let mut p = hoi_hand_params_default();
    let mut rest = vec![0.0; 3 * nv];
    assert_eq!(unsafe { hoi_pose_hand(t, &p, rest.as_mut_ptr(), ptr::null_mut()) }, HoiStatus::Ok);
    p.trans = [1.0, 2.0, 3.0];
    let mut moved = vec![0.0; 3 * nv];
    let mut joints = vec![0.0; 3 * hoi_joint_count()];
    assert_eq!(unsafe { hoi_pose_hand(t, &p, moved.as_mut_ptr(), joints.as_mut_ptr()) }, HoiStatus::Ok);
    for (r, m) in rest.chunks(3).zip(moved.chunks(3)) {
        for a in 0..3 {
            assert!((m[a] - r[a] - p.trans[a]).abs() < 1e-9);
        }
    }
    p.shape[0] = f64::NAN;
    assert_eq!(unsafe { hoi_pose_hand(t, &p, moved.as_mut_ptr(), ptr::null_mut()) }, HoiStatus::InvalidArgument);
    assert!(!last_error().is_empty());
    unsafe { hoi_template_free(t) };
    unsafe { hoi_template_free(ptr::null_mut()) };
}

#[test]
fn null_pointers_are_reported() {
    assert_eq!(unsafe { hoi_template_new(ptr::null_mut()) }, HoiStatus::NullPointer);
    assert_eq!(last_error(), "out is null");
    let mut out = 0.0;
    assert_eq!(unsafe { hoi_rotation_angle(ptr::null(), &mut out) }, HoiStatus::NullPointer);
    assert_eq!(unsafe { hoi_template_vertex_count(ptr::null()) }, 0);
}

#[test]
fn contact_maps_match_core() {
    let obj: Vec<f64> = (0..50).flat_map(|i| [i as f64, 0.0, 0.0]).collect();
    let hand: Vec<f64> = (0..20).flat_map(|i| [i as f64 * 0.5, 1.0, 0.0]).collect();
    let (mut co, mut ch) = (vec![9u8; 50], vec![9u8; 20]);
    let p = hoi_contact_params_default();
    let s = unsafe { hoi_contact_maps(obj.as_ptr(), 50, hand.as_ptr(), 20, &p, co.as_mut_ptr(), ch.as_mut_ptr()) };
    assert_eq!(s, HoiStatus::Ok);
    let to_cloud = |v: &[f64]| {
        hoi_core::geom::PointCloud::new(v.chunks(3).map(|c| hoi_core::geom::Vec3::new(c[0], c[1], c[2])).collect()).unwrap()
    };
    let (eo, eh) = hoi_core::contact::compute_contact_maps(&to_cloud(&obj), &to_cloud(&hand), &Default::default()).unwrap();
    assert_eq!(co, eo.bits().iter().map(|&b| u8::from(b)).collect::<Vec<_>>());
    assert_eq!(ch, eh.bits().iter().map(|&b| u8::from(b)).collect::<Vec<_>>());
    let s = unsafe { hoi_contact_maps(obj.as_ptr(), 0, hand.as_ptr(), 20, ptr::null(), co.as_mut_ptr(), ch.as_mut_ptr()) };
    assert_eq!(s, HoiStatus::InvalidArgument);
}

#[test]
fn frechet_and_rotation() {
    let mu_a = [0.0, 0.0];
    let mu_b = [3.0, 4.0];
    let cov = [1.0, 0.0, 0.0, 1.0];
    let mut d = -1.0;
    let s = unsafe { hoi_frechet_distance(2, mu_a.as_ptr(), cov.as_ptr(), mu_b.as_ptr(), cov.as_ptr(), &mut d) };
    assert_eq!(s, HoiStatus::Ok);
    assert!((d - 25.0).abs() < 1e-12);
    let asym = [1.0, 0.5, 0.0, 1.0];
    let s = unsafe { hoi_frechet_distance(2, mu_a.as_ptr(), asym.as_ptr(), mu_b.as_ptr(), cov.as_ptr(), &mut d) };
    assert_eq!(s, HoiStatus::InvalidArgument);

    let (sn, cs) = 30f64.to_radians().sin_cos();
    let a = [2.0 * cs, -2.0 * sn, 5.0, 2.0 * sn, 2.0 * cs, -1.0];
    let mut angle = 0.0;
    assert_eq!(unsafe { hoi_rotation_angle(a.as_ptr(), &mut angle) }, HoiStatus::Ok);
    assert!((angle - 30.0).abs() < 1e-9);
    let singular = [1.0, 2.0, 0.0, 2.0, 4.0, 0.0];
    assert_eq!(unsafe { hoi_rotation_angle(singular.as_ptr(), &mut angle) }, HoiStatus::Degenerate);
}

#[test]
fn frame_rule_cases() {
    let cases: [([f64; 3], [f64; 3], usize, HoiSelectionCase); 3] = [
        ([3.0, 2.0, 6.0], [0.5, 0.7, 0.6], 1, HoiSelectionCase::MinAngle),
        ([0.2, 0.5, 0.3], [0.90, 0.98, 0.97], 2, HoiSelectionCase::StableNearMax),
        ([0.5, 8.0, 0.9], [0.8, 0.95, 0.9], 0, HoiSelectionCase::ConstrainedNearMax),
    ];
    for (theta, iou, want, case) in cases {
        let (mut i, mut c) = (99usize, HoiSelectionCase::MinAngle);
        let s = unsafe { hoi_select_hoi_frame(3, theta.as_ptr(), iou.as_ptr(), ptr::null(), ptr::null(), &mut i, &mut c) };
        assert_eq!(s, HoiStatus::Ok);
        assert_eq!((i, c), (want, case));
    }
    let valid = [0u8; 3];
    let th = hoi_selection_thresholds_default();
    let (mut i, mut c) = (0usize, HoiSelectionCase::MinAngle);
    let s = unsafe { hoi_select_hoi_frame(3, [1.0; 3].as_ptr(), [1.0; 3].as_ptr(), valid.as_ptr(), &th, &mut i, &mut c) };
    assert_eq!(s, HoiStatus::NoValidFrames);
}
