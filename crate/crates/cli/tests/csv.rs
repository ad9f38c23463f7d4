use fhn_cli::{read_field_csv, write_field_csv, CliError};
use fhn_core::field::{Field, FieldMeta};
use fhn_core::FhnParams;
use proptest::prelude::*;

fn meta() -> FieldMeta {
    FieldMeta {
        params: FhnParams::unit(),
        description: "test field".into(),
    }
}

#[test]
fn two_by_two_field_layout() {
    let f = Field::new(vec![0.0, 1.0], vec![0.5, 1.0], vec![vec![1.0, 2.0], vec![3.0, 0.1]], meta()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.csv");
    write_field_csv(&f, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5);
    assert_eq!(lines[0], "x,t,value");
    assert_eq!(lines[2], "1.0000000000000000e0,5.0000000000000000e-1,2.0000000000000000e0");
    assert_eq!(lines[4], "1.0000000000000000e0,1.0000000000000000e0,1.0000000000000001e-1");
    assert_eq!(read_field_csv(&path, meta()).unwrap(), f);
}

#[test]
fn non_finite_values_are_refused() {
    let mut f = Field::new(vec![0.0, 1.0], vec![1.0], vec![vec![0.0, 0.0]], meta()).unwrap();
    f.values[0][1] = f64::NAN;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nan.csv");
    let e = write_field_csv(&f, &path).unwrap_err();
    assert!(e.to_string().contains("NaN") && e.to_string().contains("x=1"), "{e}");
    assert!(!path.exists());
}

#[test]
fn malformed_files_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    for (text, code) in [
        ("x,t,val\n0,1,2\n", 5),
        ("x,t,value\n0,1\n", 5),
        ("x,t,value\n0,1,abc\n", 5),
        ("x,t,value\n0,1,2\n1,1,2\n0,2,2\n", 2),
        ("x,t,value\n", 2),
    ] {
        std::fs::write(&path, text).unwrap();
        let e: CliError = read_field_csv(&path, meta()).unwrap_err();
        assert_eq!(e.exit_code(), code, "{text}: {e}");
    }
    assert_eq!(read_field_csv(&dir.path().join("none.csv"), meta()).unwrap_err().exit_code(), 4);
}

fn finite() -> impl Strategy<Value = f64> {
    any::<f64>().prop_filter("finite", |v| v.is_finite())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn round_trip_is_bit_exact(nx in 1usize..6, nt in 1usize..5, seed in prop::collection::vec(finite(), 30)) {
        let xs: Vec<f64> = (0..nx).map(|j| j as f64 / 7.0).collect();
        let ts: Vec<f64> = (1..=nt).map(|n| n as f64 * 0.1).collect();
        let values: Vec<Vec<f64>> = (0..nt).map(|n| (0..nx).map(|j| seed[n * nx + j]).collect()).collect();
        let f = Field::new(xs, ts, values, meta()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        write_field_csv(&f, &path).unwrap();
        let back = read_field_csv(&path, meta()).unwrap();
        for (a, b) in f.values.iter().flatten().zip(back.values.iter().flatten()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
        prop_assert_eq!(back, f);
    }
}
