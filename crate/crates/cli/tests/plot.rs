use critflow::report::{loglog, EstimateReport, CSV_HEADER};
use critflow_cli::{emit_plot_data, CliError};

fn holder_csv(seed: u64, scales: &[f64]) -> String {
    let mut rep = EstimateReport::new("holder_moments_t", seed);
    let moments: Vec<f64> = scales.iter().map(|h| 15.0 * h * h).collect();
    for (h, m) in scales.iter().zip(&moments) {
        rep.row("t", *h, "moment", *m, 0.01 * m);
    }
    rep.fit(loglog("holder_t", scales, &moments));
    rep.to_csv()
}

#[test]
fn empty_input_gives_header_only() {
    for view in ["holder", "mlevel", "picard"] {
        let csv = emit_plot_data(&[], view).unwrap();
        assert_eq!(csv.lines().count(), 1, "{view}");
        let csv = emit_plot_data(&[format!("{CSV_HEADER}\n")], view).unwrap();
        assert_eq!(csv.lines().count(), 1, "{view}");
    }
}

#[test]
fn holder_view_has_one_row_per_scale_and_a_slope_row() {
    let scales = [0.01, 0.02, 0.04, 0.08, 0.16];
    let csv = emit_plot_data(&[holder_csv(3, &scales)], "holder").unwrap();
    let lines: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(lines.iter().filter(|l| l.contains(",point,")).count(), 5);
    let slope: Vec<&str> = lines.iter().filter(|l| l.contains(",slope,")).cloned().collect();
    assert_eq!(slope.len(), 1);
    let s: f64 = slope[0].rsplit(',').next().unwrap().parse().unwrap();
    assert!((s - 2.0).abs() < 1e-12);
    let first: Vec<&str> = lines[0].split(',').collect();
    assert!((first[4].parse::<f64>().unwrap() - 0.01f64.ln()).abs() < 1e-15);
}

#[test]
fn mixed_seeds_are_grouped_by_seed() {
    let scales = [0.01, 0.02, 0.04, 0.08];
    let inputs = vec![holder_csv(7, &scales), holder_csv(2, &scales), holder_csv(7, &scales)];
    let csv = emit_plot_data(&inputs, "holder").unwrap();
    let seeds: Vec<u64> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(seeds.iter().filter(|&&s| s == 2).count(), 5);
    assert_eq!(seeds.iter().filter(|&&s| s == 7).count(), 9);
    let first_seven = seeds.iter().position(|&s| s == 7).unwrap();
    assert!(seeds[..first_seven].iter().all(|&s| s == 2));
    let points: Vec<u64> = csv.lines().skip(1).filter(|l| l.contains(",point,")).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert!(points.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn mlevel_and_picard_views_reshape_their_axes() {
    let mut rep = EstimateReport::new("krylov", 1);
    for m in [4.0, 8.0, 16.0] {
        rep.row("m", m, "constant", 1.0 / m, 0.0);
    }
    rep.row("iteration", 1.0, "residual_w0", 0.02, 0.0).row("iteration", 2.0, "residual_w0", 1e-6, 0.0);
    let csv = rep.to_csv();
    let m = emit_plot_data(&[csv.clone()], "mlevel").unwrap();
    assert_eq!(m.lines().count(), 4);
    let p = emit_plot_data(&[csv], "picard").unwrap();
    assert_eq!(p.lines().nth(2).unwrap(), "1,krylov,0,2,1e-6");
}

#[test]
fn missing_columns_and_unknown_views_are_view_errors() {
    let bad = "experiment,seed,axis,value\nx,1,t,0.5\n".to_string();
    assert!(matches!(emit_plot_data(&[bad], "holder"), Err(CliError::View(_))));
    assert!(matches!(emit_plot_data(&[], "nope"), Err(CliError::View(_))));
}
