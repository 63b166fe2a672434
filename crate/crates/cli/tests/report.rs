use jsda_cli::report::{write_report, Cell, Format, Table};
use tempfile::TempDir;

const COLUMNS: [&str; 4] = ["name", "value", "holds", "count"];

#[test]
fn empty_results_give_a_header_only_csv() {
    let d = TempDir::new().unwrap();
    let path = d.path().join("empty.csv");
    write_report(&Table::new(COLUMNS), Format::Csv, Some(&path)).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), "name,value,holds,count\n");
}

#[test]
fn json_round_trip_keeps_every_value() {
    let mut t = Table::new(COLUMNS);
    t.push(vec!["a".into(), 0.1234567890123.into(), true.into(), 3usize.into()]);
    t.push(vec!["b".into(), (-2.5e-300).into(), false.into(), Cell::Null]);
    let d = TempDir::new().unwrap();
    let path = d.path().join("r.json");
    write_report(&t, Format::Json, Some(&path)).unwrap();
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(Table::from_json(&COLUMNS, &v).unwrap(), t);
}

#[test]
fn csv_keeps_column_order_and_six_digits() {
    let mut t = Table::new(COLUMNS);
    t.push(vec!["pi".into(), std::f64::consts::PI.into(), true.into(), 7usize.into()]);
    let text = String::from_utf8(t.render(Format::Csv).unwrap()).unwrap();
    assert_eq!(text, "name,value,holds,count\npi,3.14159,true,7\n");
}

#[test]
fn unwritable_path_is_an_error() {
    let d = TempDir::new().unwrap();
    let path = d.path().join("no/such/dir/r.csv");
    let e = write_report(&Table::new(COLUMNS), Format::Csv, Some(&path)).unwrap_err();
    assert!(format!("{e:#}").contains("cannot create"));
}
