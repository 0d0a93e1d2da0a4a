use mudae::certify::{certify_box, certify_point, construct_z_star, grow_box};
use mudae::io::{
    aux_from_json, box_from_certificate_json, certificate_to_json, certified_box_to_json, eigs_csv, model_from_json,
    model_to_json, rootlocus_csv, scan_csv, sensitivity_csv,
};
use mudae::model::{build_two_bus, TwoBusParams};
use mudae::regionscan::{scan_grid, AxisVar, ScanAxis, ScanMode};
use mudae::spectra::{pencil_finite_spectrum, root_locus_sweep, sensitivity_sweep};

#[test]
fn grown_box_reloads_to_the_same_zeta() {
    let model = build_two_bus(TwoBusParams::default()).unwrap();
    let x = model.base_point().to_vec();
    let aux = construct_z_star(&model, &model.evaluate_lift(&x)).unwrap().aux.unwrap();
    let (_, grown) = grow_box(&model, &x, &[1.0, 0.0, 1.0, 1.0], &aux, 1e-3).unwrap();
    let text = certified_box_to_json(&grown).unwrap();
    let reloaded_aux = aux_from_json(&text).unwrap();
    let reloaded_box = box_from_certificate_json(&text).unwrap();
    assert_eq!(reloaded_aux, aux);
    assert_eq!(reloaded_box, grown.physical);
    let again = certify_box(&model, &reloaded_box, &reloaded_aux).unwrap();
    assert_eq!(again.zeta_star.to_bits(), grown.zeta_star.to_bits());
}

#[test]
fn point_certificate_round_trips_z() {
    let model = build_two_bus(TwoBusParams::default()).unwrap();
    let z = model.evaluate_lift(model.base_point());
    let cert = certify_point(&model, &z, None).unwrap();
    let text = certificate_to_json(&cert).unwrap();
    assert_eq!(&aux_from_json(&text).unwrap(), cert.aux.as_ref().unwrap());
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(value["mode"], "at_point");
    assert_eq!(value["certified"], true);
}

#[test]
fn exported_model_reimports_with_identical_spectrum() {
    let model = build_two_bus(TwoBusParams::default()).unwrap();
    let back = model_from_json(&model_to_json(&model).unwrap()).unwrap();
    let z = model.evaluate_lift(model.base_point());
    assert_eq!(pencil_finite_spectrum(&model, &z).unwrap(), pencil_finite_spectrum(&back, &z).unwrap());
}

#[test]
fn csv_layouts() {
    let model = build_two_bus(TwoBusParams::default()).unwrap();
    let x0 = model.base_point().to_vec();
    let z = model.evaluate_lift(&x0);

    let eigs = eigs_csv(&pencil_finite_spectrum(&model, &z).unwrap());
    assert!(eigs.starts_with("re,im,infinite_count\n"));
    assert_eq!(eigs.lines().count(), 3);

    let rows = root_locus_sweep(&model, 0, x0[0], 2.0, 5).unwrap();
    let locus = rootlocus_csv(&rows, model.n());
    let mut lines = locus.lines();
    assert_eq!(lines.next(), Some("var,re_1,im_1,re_2,im_2,critical_index,crossing_flag,feasible"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first.len(), 8);
    assert_eq!(first[0].parse::<f64>().unwrap(), x0[0]);
    assert!(first[0].contains('e'));

    let srows = sensitivity_sweep(&model, 0, x0[0], 1.0, 3, 0, &[0, 4]).unwrap();
    let sens = sensitivity_csv(&srows, &model, 0, &[0, 4]);
    assert!(sens.starts_with("var,coord_name,re_dlambda,im_dlambda\n"));
    assert!(sens.contains(",sin(delta)*vx,"));
    assert!(sens.contains(",d/ddelta,"));
    assert_eq!(sens.lines().count(), 1 + 3 * 3);

    let grid = scan_grid(
        &model,
        &x0,
        ScanAxis { var: AxisVar::Physical(0), lo: 0.0, hi: 1.0, steps: 2 },
        ScanAxis { var: AxisVar::Magnitude { x: 2, y: 3 }, lo: 0.9, hi: 1.1, steps: 3 },
        &[ScanMode::Exact, ScanMode::BmiAtPoint],
    )
    .unwrap();
    let scan = scan_csv(&grid, &model);
    let lines: Vec<&str> = scan.lines().collect();
    assert!(lines[0].starts_with("# pinned: "));
    assert_eq!(lines[1], "delta,|vx+jvy|,class_exact,class_bmi_at_point");
    assert_eq!(lines.len(), 2 + 6);
}
