//! The ten acceptance criteria, one PASS/FAIL line each.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::fs;
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use sdc::config::PipelineConfig;
use sdc::pipeline::{execute, render_outputs};
use sdc::schema::Schema;
use sdc::tabular::read_table;
use sdc_core::dp::{
    check_indistinguishability, check_indistinguishability_with, dp_answer, laplace_scale,
    sensitivity, BudgetLedger, DpQuery, NeighborPair, Sensitivity,
};
use sdc_core::nonperturbative::{
    enforce_k_anonymity, generalize, verify_k_anonymity, verify_l_diversity,
};
use sdc_core::perturbative::{add_noise, random_swap, swap_values, NoiseSpec};
use sdc_core::rng::Rng;
use sdc_core::utility::ks_statistic;
use sdc_core::{AttributeKind, AttributeMeta, Cell, DataClass, Error, Table};

type Outcome = Result<String, String>;
type Criterion = (u8, &'static str, fn() -> Outcome, Option<Duration>);

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn load(stem: &str) -> Table {
    let dir = root().join("fixtures");
    let schema = Schema::read(&dir.join(format!("{stem}.schema"))).unwrap();
    read_table(&dir.join(format!("{stem}.csv")), schema.attributes).unwrap()
}

fn texts(t: &Table, col: usize) -> Vec<String> {
    t.column(col).map(ToString::to_string).collect()
}

fn check(ok: bool, detail: impl Into<String>) -> Outcome {
    let detail = detail.into();
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn zip_example() -> Outcome {
    let t = load("zip");
    let (out, report) = enforce_k_anonymity(&t, &["Zip Code"], 2).map_err(|e| e.to_string())?;
    let k = verify_k_anonymity(&out, &["Zip Code"], 2)
        .unwrap()
        .assessment
        .k_achieved;
    let z = texts(&out, 0);
    check(
        z == ["20001", "20001", "20005", "20005"] && report.suppressed == [1] && k == Some(2),
        format!(
            "z' = {z:?}, suppressed {:?}, k_achieved {k:?}",
            report.suppressed
        ),
    )
}

fn birthdate_hierarchy() -> Outcome {
    let t = load("dob");
    let l1 = generalize(&t, "Birthdate", 1).map_err(|e| e.to_string())?;
    let l2 = generalize(&t, "Birthdate", 2).map_err(|e| e.to_string())?;
    let (a, b) = (l1.cell(0, 0).to_string(), l2.cell(0, 0).to_string());
    check(
        a == "1961-01" && b == "1961",
        format!("1961-01-01 -> {a} -> {b}"),
    )
}

fn smith_l_diversity() -> Outcome {
    let t = load("diagnoses");
    let v = verify_l_diversity(&t, &["Lname"], "Diagnosis", 2, 2).map_err(|e| e.to_string())?;
    let failing: Vec<String> = v
        .failing_classes
        .iter()
        .map(|&i| v.assessment.classes[i].key[0].to_string())
        .collect();
    check(
        !v.passed && failing.contains(&"Smith".to_string()),
        format!("passed={}, failing classes {failing:?}", v.passed),
    )
}

fn swapping() -> Outcome {
    let t = load("swap");
    let out = swap_values(&t, &["Age", "Income"], &[(0, 1)]).map_err(|e| e.to_string())?;
    let exact = out.numbers(1) == [30.0, 20.0] && out.numbers(2) == [30000.0, 10000.0];
    let mut violations = 0;
    for seed in 0..1000u64 {
        let mut rng = Rng::seed_from_u64(seed);
        let rows = rng.index(60);
        let schema = vec![
            AttributeMeta::new("a", AttributeKind::Quasi, DataClass::Continuous),
            AttributeMeta::new("b", AttributeKind::Sensitive, DataClass::Categorical),
            AttributeMeta::new("c", AttributeKind::Sensitive, DataClass::Continuous),
        ];
        let records = (0..rows)
            .map(|_| {
                vec![
                    Cell::Number(rng.index(20) as f64),
                    if rng.bernoulli(0.1) {
                        Cell::Missing
                    } else {
                        Cell::text(["x", "y", "z"][rng.index(3)])
                    },
                    Cell::Number(rng.normal(0.0, 10.0)),
                ]
            })
            .collect();
        let t = Table::new(schema, records).unwrap();
        let fraction = rng.next_f64();
        let out = random_swap(&t, &["a", "b", "c"], fraction, seed).map_err(|e| e.to_string())?;
        for c in 0..3 {
            let mut x: Vec<&Cell> = t.column(c).collect();
            let mut y: Vec<&Cell> = out.column(c).collect();
            x.sort();
            y.sort();
            if x != y {
                violations += 1;
            }
        }
    }
    check(
        exact && violations == 0,
        format!("A'/B' exact: {exact}; multiset violations over 1000 tables: {violations}"),
    )
}

fn oracle_equivalence() -> Outcome {
    let mut mismatches = Vec::new();
    let mut enforced = 0;
    for seed in 0..500u64 {
        let quasi = 1 + (seed % 4) as usize;
        let t = support::random_table(seed, 100, quasi, 0.05);
        let q = support::quasi_names(quasi);
        let k = 2 + (seed % 3) as usize;
        let l = 1 + (seed % 3) as usize;
        let vk = verify_k_anonymity(&t, &q, k).unwrap();
        let vl = verify_l_diversity(&t, &q, "s", k, l).unwrap();
        let rows = |v: &sdc_core::nonperturbative::Verdict| -> std::collections::BTreeSet<usize> {
            v.failing_classes
                .iter()
                .flat_map(|&i| v.assessment.classes[i].members.clone())
                .collect()
        };
        if vk.assessment.k_achieved != support::brute_k(&t, &q)
            || rows(&vk) != support::brute_violators(&t, &q, k, None)
            || vk.passed != support::brute_violators(&t, &q, k, None).is_empty()
            || vl.assessment.l_for("s") != support::brute_l(&t, &q, "s")
            || rows(&vl) != support::brute_violators(&t, &q, k, Some(("s", l)))
            || vl.passed != support::brute_violators(&t, &q, k, Some(("s", l))).is_empty()
        {
            mismatches.push(format!("verify seed {seed}"));
        }
        match enforce_k_anonymity(&t, &q, k) {
            Ok((out, _)) => {
                enforced += 1;
                if !verify_k_anonymity(&out, &q, k).unwrap().passed {
                    mismatches.push(format!("enforce seed {seed}"));
                }
            }
            Err(Error::KAnonymityUnachievable { .. }) => {}
            Err(e) => mismatches.push(format!("enforce seed {seed}: {e}")),
        }
    }
    check(
        mismatches.is_empty(),
        format!("500 tables, {enforced} enforced, mismatches: {mismatches:?}"),
    )
}

fn noise_moments() -> Outcome {
    let n = 10_000;
    let mut rng = Rng::seed_from_u64(2024);
    let schema = vec![AttributeMeta::new(
        "x",
        AttributeKind::Sensitive,
        DataClass::Continuous,
    )];
    let x: Vec<f64> = (0..n).map(|_| rng.normal(50.0, 5.0)).collect();
    let t = Table::new(schema, x.iter().map(|&v| vec![Cell::Number(v)]).collect()).unwrap();
    let mean_bound = 3.0 * 2.0 / (n as f64).sqrt();
    let (mut worst_mean, mut worst_var) = (0.0f64, 0.0f64);
    let mut failures = 0;
    for seed in 0..50 {
        let z = add_noise(&t, "x", &NoiseSpec::additive(4.0, seed).unwrap())
            .unwrap()
            .numbers(0);
        let d = z.iter().zip(&x).map(|(z, x)| z - x).sum::<f64>() / n as f64;
        let mz = z.iter().sum::<f64>() / n as f64;
        let var = z.iter().map(|v| (v - mz).powi(2)).sum::<f64>() / (n - 1) as f64;
        let rel = (var - 29.0).abs() / 29.0;
        worst_mean = worst_mean.max(d.abs());
        worst_var = worst_var.max(rel);
        if d.abs() > mean_bound || rel > 0.05 {
            failures += 1;
        }
    }
    check(
        failures == 0,
        format!("50 seeds: max |mean(Z-X)| {worst_mean:.4} (bound {mean_bound:.4}), max |Var(Z)/29 - 1| {worst_var:.4}; {failures} seeds out of tolerance"),
    )
}

fn dp_mechanism() -> Outcome {
    let mut problems = Vec::new();
    for delta in [0.0, 0.5, 1.0, 3.0, 10.0, 1e-4, 1e4] {
        for eps in [0.01, 0.1, 0.25, 0.5, 1.0, 2.0, 7.0] {
            let b = laplace_scale(Sensitivity::new(delta).unwrap(), eps).unwrap();
            if b.to_bits() != (delta / eps).to_bits() {
                problems.push(format!("b({delta},{eps})={b}"));
            }
        }
    }
    // Exhaustive neighbours over tables of up to 4 records from {0..10}.
    let schema = vec![AttributeMeta::new(
        "v",
        AttributeKind::Sensitive,
        DataClass::Continuous,
    )];
    let build = |v: &[u8]| {
        Table::new(
            schema.clone(),
            v.iter().map(|&x| vec![Cell::Number(x as f64)]).collect(),
        )
        .unwrap()
    };
    let mut tables: Vec<Vec<u8>> = vec![vec![]];
    let mut layer: Vec<Vec<u8>> = vec![vec![]];
    for _ in 0..4 {
        layer = layer
            .iter()
            .flat_map(|t| (0..=10u8).map(move |v| [t.as_slice(), &[v]].concat()))
            .collect();
        tables.extend(layer.iter().cloned());
    }
    let queries = [
        (DpQuery::count(), None),
        (DpQuery::sum("v", 0.0, 10.0), None),
        (DpQuery::mean("v", 0.0, 10.0, 2), Some(2)),
        (DpQuery::mean("v", 0.0, 10.0, 3), Some(3)),
        (DpQuery::mean("v", 0.0, 10.0, 4), Some(4)),
    ];
    for (q, n) in &queries {
        let mut worst: f64 = 0.0;
        for v in tables
            .iter()
            .filter(|v| !v.is_empty() && n.is_none_or(|n| v.len() == n))
        {
            let f = q.evaluate(&build(v)).unwrap();
            for i in 0..v.len() {
                let mut w = v.clone();
                w.remove(i);
                worst = worst.max((f - q.evaluate(&build(&w)).unwrap()).abs());
            }
        }
        let delta = sensitivity(q, n.unwrap_or(0)).unwrap().value();
        if (worst - delta).abs() > 1e-12 {
            problems.push(format!("{q}: enumerated {worst} vs {delta}"));
        }
    }
    let t = build(&[1, 2, 3]);
    let mut ledger = BudgetLedger::new(1.0).unwrap();
    for eps in [0.4, 0.4, 0.2] {
        if dp_answer(&t, &DpQuery::count(), eps, &mut ledger, 0).is_err() {
            problems.push(format!("charge {eps} refused before exhaustion"));
        }
    }
    let before = ledger.clone();
    if !matches!(
        dp_answer(&t, &DpQuery::count(), 1e-6, &mut ledger, 0),
        Err(Error::BudgetExhausted { .. })
    ) || ledger != before
    {
        problems.push("exhausted ledger accepted a charge".into());
    }
    let mut fresh = BudgetLedger::new(1.0).unwrap();
    dp_answer(&t, &DpQuery::count(), 0.6, &mut fresh, 0).unwrap();
    if dp_answer(&t, &DpQuery::count(), 0.6, &mut fresh, 1).is_ok() {
        problems.push("0.6 + 0.6 accepted against 1.0".into());
    }
    check(
        problems.is_empty(),
        format!(
            "49 scale cases, {} tables enumerated, budget checks; problems: {problems:?}",
            tables.len()
        ),
    )
}

fn empirical_indistinguishability() -> Outcome {
    let schema = vec![AttributeMeta::new(
        "v",
        AttributeKind::Sensitive,
        DataClass::Categorical,
    )];
    let rows = |n: usize| Table::parse(schema.clone(), (0..n).map(|i| [format!("r{i}")])).unwrap();
    let pair = NeighborPair::new(rows(10), rows(9)).map_err(|e| e.to_string())?;
    let mut lines = Vec::new();
    let mut ok = true;
    for eps in [0.5, 1.0] {
        let q = DpQuery::count();
        let good = check_indistinguishability(&pair, &q, eps, 100_000, 0.5, 17)
            .map_err(|e| e.to_string())?;
        let bad = check_indistinguishability_with(&pair, &q, eps, 100_000, 0.5, 17, |f, b, rng| {
            f + rng.laplace(b / 2.0)
        })
        .map_err(|e| e.to_string())?;
        ok &= good.passed && !bad.passed;
        lines.push(format!(
            "eps={eps}: mechanism max ratio {:.3} (e^eps {:.3}) {}, mutant max ratio {:.3} {}",
            good.max_ratio,
            eps.exp(),
            if good.passed { "pass" } else { "fail" },
            bad.max_ratio,
            if bad.passed { "pass" } else { "fail" },
        ));
    }
    check(ok, lines.join("; "))
}

fn iris_noise_separability() -> Outcome {
    let raw = fs::read(root().join("data/iris.data")).map_err(|e| e.to_string())?;
    let original = sdc::iris::load_iris(raw.as_slice()).map_err(|e| e.to_string())?;
    let mut drops = 0;
    let mut min_ks = f64::INFINITY;
    let mut ks_failures = 0;
    for seed in 0..100u64 {
        let privatized = sdc::iris::privatize(&original, 1.0, seed).map_err(|e| e.to_string())?;
        let (report, _) =
            sdc::iris::report(&original, &privatized, seed).map_err(|e| e.to_string())?;
        let g = report.gauge.ok_or("gauge missing")?;
        if g.privatized_accuracy < g.baseline_accuracy {
            drops += 1;
        }
        for c in 0..4 {
            let ks = ks_statistic(&original.numbers(c), &privatized.numbers(c));
            min_ks = min_ks.min(ks);
            if ks <= 0.05 {
                ks_failures += 1;
            }
        }
    }
    check(
        drops >= 95 && ks_failures == 0,
        format!("accuracy dropped in {drops}/100 seeds; min KS {min_ks:.3}, {ks_failures} attribute-runs at or below 0.05"),
    )
}

fn determinism() -> Outcome {
    let fixtures = root().join("fixtures");
    let configs = [
        "method: add_noise\nattribute = Income\nsigma = 1000\nmethod: multiply_noise\nattribute = Age\nsigma = 0.05\n",
        "method: random_swap\nattributes = City, Income\nfraction = 0.6\nmethod: add_noise\nattribute = Age\n",
        "quasi = Gender, Zip Code\nmethod: k_anonymity\nk = 2\nmethod: log_noise\nattribute = Income\nvariance = 0.01\n",
        "method: synthesize\n",
    ];
    let schema = Schema::read(&fixtures.join("patients.schema")).unwrap();
    let table = load("patients");
    let mut problems = Vec::new();
    for (i, text) in configs.iter().enumerate() {
        let config = PipelineConfig::parse(text, "config").map_err(|e| e.to_string())?;
        let render = |seed| {
            let out = execute(&config, &table, seed).unwrap();
            let (csv, _, report) = render_outputs(&out, &schema).unwrap();
            (csv, report)
        };
        let (a, b, c) = (render(9), render(9), render(10));
        if a != b {
            problems.push(format!("config {i}: same seed differs"));
        }
        if a.0 == c.0 {
            problems.push(format!("config {i}: new seed, same table"));
        }
    }
    // Once more through the binary, end to end.
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    for f in ["patients.csv", "patients.schema"] {
        fs::copy(fixtures.join(f), dir.path().join(f)).unwrap();
    }
    let config = dir.path().join("run.config");
    fs::write(
        &config,
        format!(
            "input = patients.csv\nschema = patients.schema\noutput = out.csv\nreport = out.txt\n{}",
            configs[0]
        ),
    )
    .unwrap();
    let mut runs = Vec::new();
    for seed in ["4", "4", "5"] {
        let status = Command::new(env!("CARGO_BIN_EXE_sdc"))
            .args([
                "anonymize",
                "--config",
                config.to_str().unwrap(),
                "--seed",
                seed,
            ])
            .env_remove("SDC_SEED")
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(String::from_utf8_lossy(&status.stderr).into_owned());
        }
        runs.push((
            fs::read(dir.path().join("out.csv")).unwrap(),
            fs::read(dir.path().join("out.txt")).unwrap(),
        ));
    }
    if runs[0] != runs[1] || runs[0].0 == runs[2].0 {
        problems.push("cli runs".into());
    }
    check(
        problems.is_empty(),
        format!(
            "{} configs x 3 runs + CLI; problems: {problems:?}",
            configs.len()
        ),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        (
            1,
            "zip-code k=2 fixture",
            zip_example,
            Some(Duration::from_secs(1)),
        ),
        (2, "birthdate hierarchy fixture", birthdate_hierarchy, None),
        (
            3,
            "Smith/Cancer l-diversity fixture",
            smith_l_diversity,
            None,
        ),
        (
            4,
            "data swapping fixture and multiset property",
            swapping,
            None,
        ),
        (
            5,
            "verifier/enforcer oracle equivalence",
            oracle_equivalence,
            Some(Duration::from_secs(60)),
        ),
        (6, "additive noise moments", noise_moments, None),
        (7, "Laplace scale, sensitivity, budget", dp_mechanism, None),
        (
            8,
            "empirical indistinguishability",
            empirical_indistinguishability,
            Some(Duration::from_secs(30)),
        ),
        (
            9,
            "Iris separability and KS",
            iris_noise_separability,
            Some(Duration::from_secs(60)),
        ),
        (10, "pipeline determinism", determinism, None),
    ];
    let mut failed = 0;
    for (n, name, run, limit) in criteria {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let late = limit.is_some_and(|l| elapsed > l);
        let (verdict, detail) = match &outcome {
            Ok(d) if !late => ("PASS", d.clone()),
            Ok(d) => (
                "FAIL",
                format!("{d}; took longer than {:?}", limit.unwrap()),
            ),
            Err(d) => ("FAIL", d.clone()),
        };
        if verdict == "FAIL" {
            failed += 1;
        }
        println!(
            "criterion {n:>2} {verdict} [{:.2}s] {name}: {detail}",
            elapsed.as_secs_f64()
        );
    }
    println!("{} of 10 criteria passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
