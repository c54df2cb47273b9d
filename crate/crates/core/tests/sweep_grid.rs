use std::collections::BTreeSet;

use synthlidar_core::scene::{instantiate_sweep, sweep_points, Background, ClassId, Scene, SweepSpec};

#[test]
fn documented_grid_cardinality_and_cells() {
    let spec = SweepSpec::xy_grid((0..15).collect());
    let pts = sweep_points(&spec).unwrap();
    assert_eq!(pts.len(), 2250);
    for b in 0..15 {
        let cells: BTreeSet<(i64, i64)> = pts
            .iter()
            .filter(|p| p.background_id == b)
            .map(|p| (p.x as i64, p.y as i64))
            .collect();
        assert_eq!(cells.len(), 150);
        let expected: BTreeSet<(i64, i64)> = (-5..=4).flat_map(|x| (5..=19).map(move |y| (x, y))).collect();
        assert_eq!(cells, expected);
    }
    for p in &pts {
        assert_eq!(f64::from(p.cell.ix) - 5.0, p.x);
        assert_eq!(f64::from(p.cell.iy) + 5.0, p.y);
    }
}

#[test]
fn each_sweep_scene_has_exactly_one_labeled_car() {
    let spec = SweepSpec::xy_grid(vec![0, 9]);
    let scenes = instantiate_sweep(&spec, &Scene::new(Background::empty())).unwrap();
    assert_eq!(scenes.len(), 300);
    for s in scenes.iter().step_by(37) {
        let cars: Vec<_> = s.scene.labels().iter().filter(|l| l.class_id == ClassId::CAR).collect();
        assert!(!cars.is_empty());
        assert!(cars.iter().all(|l| l.instance_id == 1));
        assert_eq!(s.scene.background().id, s.point.background_id);
    }
}
