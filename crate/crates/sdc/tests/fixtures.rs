use std::path::PathBuf;

use sdc::schema::Schema;
use sdc::tabular::{emit_table, load_table, read_table};
use sdc_core::nonperturbative::{enforce_k_anonymity, generalize, verify_l_diversity};
use sdc_core::perturbative::{code_extremes, recode_ranges, swap_values, RecodeSpec, Threshold};
use sdc_core::table::{column_stats, partition_horizontal, partition_vertical, ColumnSummary};
use sdc_core::{AttributeKind, Cell, DataClass, Table};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn load(stem: &str) -> Table {
    let schema = Schema::read(&fixture(&format!("{stem}.schema"))).unwrap();
    read_table(&fixture(&format!("{stem}.csv")), schema.attributes).unwrap()
}

fn texts(t: &Table, attr: &str) -> Vec<String> {
    t.column(t.index_of(attr).unwrap())
        .map(ToString::to_string)
        .collect()
}

#[test]
fn patients_kinds_follow_the_header_bands() {
    let t = load("patients");
    assert_eq!(t.len(), 10);
    let kinds: Vec<(&str, AttributeKind)> = t
        .schema()
        .iter()
        .map(|m| (m.name.as_str(), m.kind))
        .collect();
    use AttributeKind::*;
    assert_eq!(
        kinds,
        [
            ("FName", Pii),
            ("LName", Pii),
            ("SSN", Pii),
            ("Date of Birth", Quasi),
            ("Age", Quasi),
            ("Gender", Quasi),
            ("Zip Code", Quasi),
            ("City", NonSensitive),
            ("Income", NonSensitive),
            ("Diagnosis", Sensitive),
        ]
    );
}

#[test]
fn patients_round_trips_through_csv() {
    let t = load("patients");
    let mut buf = Vec::new();
    emit_table(&t, &mut buf).unwrap();
    let again = load_table(buf.as_slice(), t.schema().to_vec()).unwrap();
    assert_eq!(again, t);
}

#[test]
fn patients_income_top_coding() {
    let t = load("patients");
    let out = code_extremes(
        &t,
        "Income",
        Threshold::Value(f64::NEG_INFINITY),
        Threshold::Value(75000.0),
        "<",
        ">75000",
    )
    .unwrap();
    let coded = texts(&out, "Income");
    assert_eq!(coded.iter().filter(|c| *c == ">75000").count(), 1);
    assert_eq!(coded[7], ">75000");
    assert_eq!(coded[4], "75000");
    assert_eq!(
        out.attribute("Income").unwrap().class,
        DataClass::Categorical
    );
}

#[test]
fn patient_partitions() {
    let t = load("patients");
    let h = partition_horizontal(&t, &[5, 5]).unwrap();
    assert_eq!(h.pieces[1].cell(0, 0), &Cell::text("Anne"));
    assert_eq!(h.reassemble().unwrap(), t);
    assert!(partition_horizontal(&t, &[7, 4]).is_err());

    let rest: Vec<&str> = t
        .names()
        .filter(|n| !["LName", "Diagnosis", "Age", "Income"].contains(n))
        .collect();
    let v = partition_vertical(&t, &[vec!["LName", "Diagnosis", "Age", "Income"], rest]).unwrap();
    let names: Vec<&str> = v.pieces[0].names().collect();
    assert_eq!(names, ["LName", "Age", "Income", "Diagnosis"]);
    assert_eq!(v.pieces[0].len(), 10);
    let missing_age: Vec<&str> = t.names().filter(|n| *n != "Age").collect();
    assert!(partition_vertical(&t, &[missing_age]).is_err());
}

#[test]
fn age_bands() {
    let labels = [
        "16 - 19",
        "20 - 30",
        "31 - 40",
        "41 - 50",
        "51 - 60",
        "61 - 70",
        "71 - 80",
        "81 - 90",
        "91 - 100",
        "101 - 120",
    ];
    let spec = RecodeSpec::new(
        "Age",
        vec![
            16.0, 20.0, 31.0, 41.0, 51.0, 61.0, 71.0, 81.0, 91.0, 101.0, 120.0,
        ],
        labels.iter().map(|s| s.to_string()).collect(),
    )
    .unwrap();
    for (age, band) in [
        (16.0, "16 - 19"),
        (19.0, "16 - 19"),
        (20.0, "20 - 30"),
        (53.0, "51 - 60"),
        (120.0, "101 - 120"),
    ] {
        assert_eq!(spec.label_for(age), Some(band), "{age}");
    }
    let out = recode_ranges(&load("patients"), &spec).unwrap();
    assert_eq!(texts(&out, "Age")[..3], ["51 - 60", "41 - 50", "41 - 50"]);
}

#[test]
fn diagnoses_smith_class_fails_l_diversity() {
    let t = load("diagnoses");
    let v = verify_l_diversity(&t, &["Lname"], "Diagnosis", 2, 2).unwrap();
    assert!(!v.passed);
    let failing: Vec<(String, usize)> = v
        .failing_classes
        .iter()
        .map(|&i| {
            let c = &v.assessment.classes[i];
            (c.key[0].to_string(), c.sensitive_distinct[0])
        })
        .collect();
    assert_eq!(
        failing,
        [("Smith".to_string(), 1), ("Johns".to_string(), 1)]
    );
    assert_eq!(v.assessment.k_achieved, Some(2));
}

#[test]
fn zip_example_suppresses_the_unique_code() {
    let t = load("zip");
    let (out, report) = enforce_k_anonymity(&t, &["Zip Code"], 2).unwrap();
    assert_eq!(
        texts(&out, "Zip Code"),
        ["20001", "20001", "20005", "20005"]
    );
    assert_eq!(report.suppressed, [1]);
}

#[test]
fn birthdate_hierarchy_levels() {
    let t = load("dob");
    let month = generalize(&t, "Birthdate", 1).unwrap();
    let year = generalize(&t, "Birthdate", 2).unwrap();
    assert_eq!(texts(&month, "Birthdate")[0], "1961-01");
    assert_eq!(texts(&year, "Birthdate")[0], "1961");
    assert_eq!(generalize(&month, "Birthdate", 2).unwrap(), year);
}

#[test]
fn swap_example() {
    let t = load("swap");
    let out = swap_values(&t, &["Age", "Income"], &[(0, 1)]).unwrap();
    assert_eq!(out.numbers(1), [30.0, 20.0]);
    assert_eq!(out.numbers(2), [30000.0, 10000.0]);
    assert_eq!(texts(&out, "Employee"), ["A", "B"]);
}

#[test]
fn iris_sepal_length_stats_match_raw_file() {
    let path = fixture("../data/iris.data");
    let raw = std::fs::read_to_string(&path).unwrap();
    let t = sdc::iris::load_iris(raw.as_bytes()).unwrap();
    assert_eq!(t.len(), 150);
    // One pass over the first field of every non-blank line (Welford).
    let (mut n, mut mean, mut m2) = (0.0, 0.0, 0.0);
    for line in raw.lines().filter(|l| !l.trim().is_empty()) {
        let x: f64 = line.split(',').next().unwrap().parse().unwrap();
        n += 1.0;
        let d = x - mean;
        mean += d / n;
        m2 += d * (x - mean);
    }
    let sd = (m2 / (n - 1.0)).sqrt();
    let ColumnSummary::Continuous {
        count,
        mean: Some(m),
        std_dev: Some(s),
        ..
    } = column_stats(&t, "sepal_length").unwrap()
    else {
        panic!("sepal_length is continuous");
    };
    assert_eq!(count, 150);
    assert!(
        (m - mean).abs() < 1e-12 && (s - sd).abs() < 1e-12,
        "{m} {s} vs {mean} {sd}"
    );
}
