use geomatch::diagram::{build_diagram, DiagramKind};
use geomatch::io::{export_svg, gen_grid_instance, gen_random_instance, SvgOptions};
use geomatch::{CostExponent, Error, Instance, MatchingDiagram, TranslationVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn instance(seed: u64, p: CostExponent) -> Instance {
    gen_random_instance(5, 6, 3, p, 10.0, seed).unwrap().instance
}

fn queries(seed: u64, count: usize) -> Vec<TranslationVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| TranslationVector::new(rng.gen_range(-12.0..12.0), rng.gen_range(-12.0..12.0)))
        .collect()
}

#[test]
fn json_round_trip_keeps_memoized_faces() {
    let inst = instance(1, CostExponent::Finite(2.0));
    for kind in [
        DiagramKind::Voronoi3,
        DiagramKind::EpsT,
        DiagramKind::EpsCluster,
        DiagramKind::ClusterVoronoi,
    ] {
        let d = build_diagram(&inst, kind, 0.5, 0.25).unwrap();
        let answers: Vec<_> = queries(2, 40).into_iter().map(|t| d.query(&inst, t).unwrap()).collect();
        let text = d.to_json();
        assert!(!text.contains('\n'));
        let back = MatchingDiagram::from_json(&text).unwrap();
        assert_eq!(back.to_json(), text);
        assert_eq!(back.memoized_faces(), d.memoized_faces());
        assert_eq!(back.face_count(), d.face_count());
        assert_eq!(back.guarantee_factor(), d.guarantee_factor());
        for (t, ans) in queries(2, 40).into_iter().zip(&answers) {
            let again = back.query(&inst, t).unwrap();
            assert_eq!(again.matching, ans.matching);
            assert_eq!(again.cost, ans.cost);
            assert_eq!(again.face, ans.face);
        }
        // nothing new was solved on reload
        assert_eq!(back.memoized_faces().len(), d.memoized_faces().len());
    }
}

#[test]
fn corrupted_json_is_rejected() {
    let inst = instance(3, CostExponent::Finite(1.0));
    let d = build_diagram(&inst, DiagramKind::EpsT, 0.5, 0.0).unwrap();
    d.query(&inst, TranslationVector::new(1.0, 1.0)).unwrap();
    let text = d.to_json();
    let mut value: serde_json::Value = serde_json::from_str(&text).unwrap();

    let broken = [
        text[..text.len() / 2].to_string(),
        String::new(),
        "[]".to_string(),
        {
            let mut v = value.clone();
            v["kind"] = "TRIANGLES".into();
            v.to_string()
        },
        {
            let mut v = value.clone();
            v["sites"] = serde_json::json!([]);
            v.to_string()
        },
        {
            let mut v = value.clone();
            v["perSiteBaseValue"] = serde_json::json!([1.0]);
            v.to_string()
        },
        {
            let mut v = value.clone();
            v["memoizedFaces"][0]["site"] = 999.into();
            v.to_string()
        },
    ];
    for text in &broken {
        match MatchingDiagram::from_json(text) {
            Err(Error::MalformedDiagram(_)) => {}
            other => panic!("accepted {text:?}: {other:?}"),
        }
    }

    value["memoizedFaces"][0]["matching"] = serde_json::json!([[0, 0], [0, 1], [1, 2]]);
    assert!(MatchingDiagram::from_json(&value.to_string()).is_err());
}

#[test]
fn query_rejects_other_instance() {
    let inst = instance(4, CostExponent::Infinity);
    let other = instance(5, CostExponent::Infinity);
    let d = build_diagram(&inst, DiagramKind::Voronoi3, 0.5, 0.0).unwrap();
    match d.query(&other, TranslationVector::ZERO) {
        Err(Error::InstanceMismatch { .. }) => {}
        other => panic!("expected mismatch, got {other:?}"),
    }
}

#[test]
fn svg_is_well_formed() {
    let inst = instance(6, CostExponent::Finite(3.0));
    for (kind, eps) in [(DiagramKind::Voronoi3, 1.0), (DiagramKind::EpsT, 0.5), (DiagramKind::EpsCluster, 0.25)] {
        let d = build_diagram(&inst, kind, eps, 0.0).unwrap();
        for grid in [true, false] {
            let svg = export_svg(&d, &SvgOptions { grid, cells: true });
            let doc = roxmltree::Document::parse(&svg).unwrap();
            let root = doc.root_element();
            assert_eq!(root.tag_name().name(), "svg");
            assert_eq!(root.attribute("viewBox"), Some("0 0 1000 1000"));
            let class_count = |tag: &str, class: &str| {
                doc.descendants()
                    .filter(|n| n.tag_name().name() == tag && n.attribute("class") == Some(class))
                    .count()
            };
            let sites = d.sites().len();
            let refined = (0..sites).filter(|&s| d.is_site_refined(s)).count();
            assert_eq!(class_count("circle", "site"), sites);
            assert_eq!(class_count("polygon", "cell"), sites);
            assert_eq!(
                class_count("rect", "bsquare"),
                refined * (d.level_count() as usize + 1)
            );
            assert_eq!(class_count("path", "grid") > 0, grid && refined > 0);
            for n in doc.descendants().filter(|n| n.tag_name().name() == "circle") {
                for attr in ["cx", "cy"] {
                    let v: f64 = n.attribute(attr).unwrap().parse().unwrap();
                    assert!((0.0..=1000.0).contains(&v));
                }
            }
        }
    }
}

#[test]
fn svg_of_a_single_site() {
    let inst = gen_grid_instance(1, 1, 1, CostExponent::Finite(2.0)).unwrap().instance;
    let d = build_diagram(&inst, DiagramKind::EpsT, 0.5, 0.0).unwrap();
    let svg = export_svg(&d, &SvgOptions::default());
    roxmltree::Document::parse(&svg).unwrap();
}
