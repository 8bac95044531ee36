use super::*;
use crate::metrics::{BelebeleResult, CrowsCategoryMetrics};

fn report(model: &str, lang: &str) -> MetricReport {
    MetricReport {
        run_id: format!("{model}-{lang}"),
        model_id: model.into(),
        model_size: Some("2.6B".into()),
        language: lang.into(),
        crows: vec![],
        bbq: vec![],
        belebele: None,
    }
}

fn crows(category: BiasCategory, pct: f64, n: usize) -> CrowsCategoryMetrics {
    CrowsCategoryMetrics {
        category,
        pct_stereotype: pct,
        mean_diff: 0.0,
        n,
    }
}

fn bbq(category: BiasCategory, amb: (usize, usize), dis: (usize, usize), s_dis: f64, s_amb: f64) -> BbqCategoryMetrics {
    let acc = |(c, n): (usize, usize)| (n > 0).then(|| c as f64 / n as f64);
    BbqCategoryMetrics {
        category,
        n_ambiguous: amb.1,
        n_disambiguated: dis.1,
        correct_ambiguous: amb.0,
        correct_disambiguated: dis.0,
        acc_ambiguous: acc(amb),
        acc_disambiguated: acc(dis),
        acc_overall: acc((amb.0 + dis.0, amb.1 + dis.1)),
        n_bias_ans: 0,
        n_non_unknown: 0,
        s_dis: Some(s_dis),
        n_bias_ans_ambiguous: 0,
        n_non_unknown_ambiguous: 0,
        s_dis_ambiguous: None,
        s_amb: Some(s_amb),
        s_amb_overall_accuracy: None,
    }
}

#[test]
fn transforms_and_formatting() {
    assert_eq!(format_value(Transform::PctMinus50.apply(0.5)), "0.0");
    assert_eq!(Transform::PctMinus50.apply(1.0), 50.0);
    assert_eq!(Transform::PctMinus50.apply(0.0), -50.0);
    assert_eq!(format_value(Transform::Times100.apply(-1.0)), "-100.0");
    assert_eq!(format_value(Transform::Times100.apply(0.608)), "60.8");
    assert!(Transform::Times100.apply(-0.0).is_sign_positive());
    assert_eq!(format_value(-0.04), "0.0");
    assert_eq!(Transform::Identity.apply(0.25), 0.25);
}

#[test]
fn shape_is_checked() {
    let bad = HeatmapSpec::new(
        "t",
        vec!["a".into()],
        vec!["x".into(), "y".into()],
        vec![vec![Some(1.0)]],
        Transform::Identity,
        ColorScale::Diverging { bound: 1.0 },
    );
    assert!(matches!(bad, Err(ReportError::Shape { .. })));
    let bad = HeatmapSpec::new("t", vec![], vec![], vec![vec![]], Transform::Identity, ColorScale::Diverging { bound: 1.0 });
    assert!(bad.is_err());
}

#[test]
fn crows_two_models_three_categories() {
    let mut a = report("b-model", "en");
    a.crows = vec![
        crows(BiasCategory::Race, 0.6, 100),
        crows(BiasCategory::Gender, 0.5, 50),
        crows(BiasCategory::Age, 0.75, 50),
    ];
    let mut b = report("a-model", "en");
    b.crows = vec![crows(BiasCategory::Race, 0.4, 10), crows(BiasCategory::Age, 1.0, 30)];
    let spec = crows_heatmap(&[a, b]).unwrap();
    assert_eq!(spec.rows, ["a-model", "b-model"]);
    assert_eq!(spec.cols, ["race", "gender", "age", MICROAVERAGE]);
    // a-model: (0.4·10 + 1.0·30) / 40 = 0.85; b-model: (60 + 25 + 37.5) / 200 = 0.6125
    let csv = heatmap_csv(&spec);
    assert_eq!(
        csv,
        "model,race,gender,age,microaverage\na-model,-10.0,,50.0,35.0\nb-model,10.0,0.0,25.0,11.3\n"
    );
    let md = heatmap_markdown(&spec);
    assert!(md.contains("| a-model | -10.0 | n/a | 50.0 | 35.0 |"), "{md}");
}

#[test]
fn rows_carry_language_when_mixed() {
    let mut a = report("m", "en");
    a.crows = vec![crows(BiasCategory::Race, 0.5, 1)];
    let mut b = report("m", "de");
    b.crows = vec![crows(BiasCategory::Race, 0.5, 1)];
    assert_eq!(crows_heatmap(&[a, b]).unwrap().rows, ["m (de)", "m (en)"]);
}

#[test]
fn bbq_views() {
    let mut r = report("m", "en");
    r.bbq = vec![
        bbq(BiasCategory::Age, (3, 4), (9, 10), -1.0, 0.25),
        bbq(BiasCategory::Gender, (1, 6), (5, 10), 0.5, -0.5),
    ];
    let maps = bbq_heatmaps(&[r]).unwrap();
    assert_eq!(maps.len(), 5);
    let values: Vec<Vec<Option<f64>>> = maps.iter().map(|(_, s)| s.rendered().remove(0)).collect();
    let fmt = |row: &Vec<Option<f64>>| row.iter().map(|v| format_value(v.unwrap())).collect::<Vec<_>>();
    // columns follow the fixed category order: gender, age, microaverage
    assert_eq!(fmt(&values[0]), ["37.5", "85.7", "60.0"]); // 6/16, 12/14, 18/30
    assert_eq!(fmt(&values[1]), ["16.7", "75.0", "40.0"]); // 1/6, 3/4, 4/10
    assert_eq!(fmt(&values[2]), ["50.0", "90.0", "70.0"]);
    assert_eq!(fmt(&values[3]), ["-50.0", "25.0", "-20.0"]); // (-0.5·6 + 0.25·4) / 10
    assert_eq!(fmt(&values[4]), ["50.0", "-100.0", "-25.0"]);
    assert_eq!(maps[4].1.scale, ColorScale::Diverging { bound: 100.0 });
    assert_eq!(maps[0].1.scale, ColorScale::Sequential { min: 0.0, max: 100.0 });
}

#[test]
fn colors_follow_scale() {
    let div = ColorScale::Diverging { bound: 50.0 };
    assert_eq!(render::color(div, 0.0), "#ffffff");
    assert_eq!(render::color(div, 50.0), "#b2182b");
    assert_eq!(render::color(div, -80.0), "#2166ac");
    let seq = ColorScale::Sequential { min: 0.0, max: 100.0 };
    assert_eq!(render::color(seq, 0.0), "#ffffff");
    assert_eq!(render::color(seq, 100.0), "#08306b");
}

#[test]
fn belebele_table_row_and_order() {
    let mut rows = Vec::new();
    for (model, lang, acc) in [("en-mono", "en", 0.317), ("de-mono", "de", 0.353), ("Falcon", "fr", 0.39), ("Falcon", "de", 0.331)] {
        let mut r = report(model, lang);
        r.belebele = Some(BelebeleResult { accuracy: acc, n: 900 });
        rows.push(r);
    }
    rows.push(report("no-belebele", "en"));
    let table = belebele_rows(&rows);
    assert_eq!(
        table.iter().map(|r| (r.model.as_str(), r.language.as_str())).collect::<Vec<_>>(),
        [("Falcon", "German"), ("Falcon", "French"), ("de-mono", "German"), ("en-mono", "English")]
    );
    assert_eq!(table[3].cells(), ["en-mono", "2.6B", "English", "31.7"]);
    let md = belebele_table_markdown(&table);
    assert!(md.contains("| en-mono | 2.6B | English | 31.7 |\n"), "{md}");
    assert_eq!(
        belebele_table_markdown(&[]),
        "| Model | Parameter Size | Language | Acc |\n|---|---|---|---:|\n"
    );
    assert_eq!(belebele_table_csv(&[]), "Model,Parameter Size,Language,Acc\n");
}

#[test]
fn bundle_is_byte_identical_on_rerender() {
    let mut a = report("m1", "en");
    a.crows = vec![crows(BiasCategory::Race, 0.55, 20)];
    a.bbq = vec![bbq(BiasCategory::Age, (1, 2), (2, 2), 0.0, 0.0)];
    a.belebele = Some(BelebeleResult { accuracy: 0.5, n: 2 });
    let b = report("m2", "en");
    let reports = [a, b];
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    let w1 = write_report_bundle(&reports, d1.path()).unwrap();
    let w2 = write_report_bundle(&reports, d2.path()).unwrap();
    assert_eq!(w1.len(), 3 + 15 + 2);
    for (p1, p2) in w1.iter().zip(&w2) {
        assert_eq!(p1.file_name(), p2.file_name());
        assert_eq!(std::fs::read(p1).unwrap(), std::fs::read(p2).unwrap());
    }
    let svg = std::fs::read_to_string(d1.path().join("crows_heatmap.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
    assert!(svg.contains(">5.0</text>") && svg.contains(">n/a</text>"));
}
