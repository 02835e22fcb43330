use gigecon_core::experiments::{
    builtin_table1, builtin_table2, elasticity_overrides, sweep, table1_base, table2_base, Trend,
};
use gigecon_core::numerics::rel_diff;
use gigecon_core::params::ParamField;
use gigecon_core::steady_state::VariantPolicy;

#[test]
fn builtin_tables_are_feasible_and_ordered() {
    let t1 = builtin_table1(VariantPolicy::default());
    let t2 = builtin_table2(VariantPolicy::default());
    assert_eq!(t1.rows.iter().map(|r| r.label.as_str()).collect::<Vec<_>>(), ["S1,1", "S1,2", "S1,3"]);
    assert_eq!(t2.rows.len(), 9);
    assert!(t1.rows.iter().chain(&t2.rows).all(|r| r.is_feasible()));
}

#[test]
fn table1_row_s12() {
    let t = builtin_table1(VariantPolicy::default());
    let ss = t.row("S1,2").unwrap().steady_state().unwrap();
    assert!((ss.h_p - 0.093).abs() < 0.0005, "{}", ss.h_p);
    assert!((ss.h_d - 0.410).abs() < 0.0005, "{}", ss.h_d);
}

#[test]
fn table2_spot_values() {
    let t = builtin_table2(VariantPolicy::default());
    let s29 = t.row("S2,9").unwrap().steady_state().unwrap();
    assert!(rel_diff(s29.y, 49.5432802, 0.0) < 1e-7);
    assert!(rel_diff(s29.d, 0.61420982, 0.0) < 1e-7);
    let s27 = t.row("S2,7").unwrap().steady_state().unwrap();
    assert!(rel_diff(s27.u_p, 0.9915294368, 0.0) < 1e-9);
}

#[test]
fn sign_constants_per_table() {
    let t1 = builtin_table1(VariantPolicy::default());
    assert!(t1.row("S1,1").unwrap().signs().unwrap().m4 < 0.0);
    for row in builtin_table2(VariantPolicy::default()).rows {
        assert!(row.signs().unwrap().m4 > 0.0, "{}", row.label);
    }
}

#[test]
fn physical_tfp_sweep() {
    let grid = vec![vec![0.98], vec![1.0], vec![1.02]];
    let r = sweep(&table1_base(), &[ParamField::Ap], &grid, VariantPolicy::default()).unwrap();
    let m = &r.monotonicity;
    assert_eq!(m.trend("h_p"), Some(Trend::Increasing));
    assert_eq!(m.trend("h_d"), Some(Trend::Decreasing));
    assert_eq!(m.trend("y"), Some(Trend::Decreasing));
    assert_eq!(m.trend("c"), Some(Trend::Increasing));
}

#[test]
fn data_elasticity_sweep() {
    let grid: Vec<Vec<f64>> = [[0.5, 0.3, 0.2], [0.5, 0.2, 0.3], [0.5, 0.1, 0.4]].iter().map(|b| b.to_vec()).collect();
    let fields = [ParamField::B1, ParamField::B2, ParamField::B3];
    let r = sweep(&table2_base(), &fields, &grid, VariantPolicy::default()).unwrap();
    let m = &r.monotonicity;
    assert_eq!(m.trend("d"), Some(Trend::Increasing));
    assert_eq!(m.trend("h_d"), Some(Trend::Increasing));
    assert_eq!(m.trend("h_p"), Some(Trend::Decreasing));
}

#[test]
fn single_point_sweep_is_constant() {
    let r = sweep(&table1_base(), &[ParamField::Ad], &[vec![1.0]], VariantPolicy::default()).unwrap();
    assert!(r.monotonicity.columns.iter().all(|c| c.trend == Trend::Constant));
}

#[test]
fn reruns_serialize_identically() {
    let a = to_toml(&builtin_table2(VariantPolicy::default()));
    let b = to_toml(&builtin_table2(VariantPolicy::default()));
    assert_eq!(a, b);
}

fn to_toml(t: &gigecon_core::ScenarioTable) -> String {
    toml::to_string(t).unwrap()
}

#[test]
fn joint_overrides_keep_the_simplex() {
    let s = gigecon_core::Scenario::new("b", table2_base(), elasticity_overrides([0.1, 0.7, 0.2]));
    let p = s.params().unwrap();
    assert_eq!(p.tech().b1, 0.1);
}
