use autoforecast::par::Parallelism;
use autoforecast::pipeline::{run_slice, RunConfig, SliceSettings};
use autoforecast::reporter::{render_report, PLOTS};
use autoforecast::{synthetic, Series};

fn bundle() -> autoforecast::reporter::ReportBundle {
    let v = synthetic::bundled();
    let input = Series::from_options(v[..512].to_vec()).unwrap();
    let settings = SliceSettings {
        parallelism: Parallelism::Sequential,
        ..SliceSettings::from_config(&RunConfig::default(), 96)
    };
    let (a, log) = run_slice(0, &input, || v[512..608].to_vec(), &settings).unwrap();
    render_report(&a, &log).unwrap()
}

fn paths(doc: &roxmltree::Document) -> Vec<String> {
    doc.descendants()
        .filter(|n| n.has_tag_name("path"))
        .filter_map(|n| n.attribute("data-series").map(str::to_string))
        .collect()
}

#[test]
fn every_plot_parses_and_lists_its_paths() {
    let b = bundle();
    assert_eq!(b.plots.iter().map(|(n, _)| n.as_str()).collect::<Vec<_>>(), PLOTS);
    for (name, svg) in &b.plots {
        let doc = roxmltree::Document::parse(svg).unwrap_or_else(|e| panic!("{name}: {e}"));
        let root = doc.root_element();
        assert!(root.has_tag_name("svg"));
        let listed: Vec<String> = root.attribute("data-series").unwrap().split(',').map(str::to_string).collect();
        assert_eq!(paths(&doc), listed, "{name}");
    }
}

#[test]
fn plot_contents() {
    let b = bundle();
    let doc = |name| roxmltree::Document::parse(b.plot(name).unwrap()).unwrap().root_element().attribute("data-series").unwrap().to_string();
    assert_eq!(doc("overview"), "raw,rolling_mean,rolling_std");
    assert_eq!(doc("decomposition"), "observed,trend,seasonal,residual");
    assert_eq!(doc("correlogram"), "acf,pacf");
    let forecast = doc("ensemble_forecast");
    assert!(forecast.starts_with("history,"));
    assert!(forecast.ends_with("actual,ensemble"));

    let svg = b.plot("ensemble_forecast").unwrap();
    let parsed = roxmltree::Document::parse(svg).unwrap();
    let band = parsed
        .descendants()
        .find(|n| n.has_tag_name("polygon") && n.attribute("class") == Some("interval"))
        .expect("interval band");
    assert_eq!(band.attribute("data-level"), Some("95"));
    // 96 upper points then 96 lower points
    assert_eq!(band.attribute("points").unwrap().split_whitespace().count(), 192);

    let corr = roxmltree::Document::parse(b.plot("correlogram").unwrap()).unwrap();
    let bands: Vec<f64> = corr
        .descendants()
        .filter(|n| n.attribute("class") == Some("band"))
        .map(|n| n.attribute("data-band").unwrap().parse().unwrap())
        .collect();
    assert_eq!(bands.len(), 4);
    let expect = 1.96 / (512f64).sqrt();
    assert!(bands.iter().all(|b| (b.abs() - expect).abs() < 1e-3), "{bands:?}");
}

#[test]
fn grid_lines_are_not_paths() {
    let b = bundle();
    let doc = roxmltree::Document::parse(b.plot("overview").unwrap()).unwrap();
    let major = doc.descendants().filter(|n| n.attribute("class") == Some("grid-major")).count();
    let minor = doc.descendants().filter(|n| n.attribute("class") == Some("grid-minor")).count();
    assert!(major > 0 && minor > 0);
    assert!(doc
        .descendants()
        .filter(|n| n.attribute("class") == Some("grid-major"))
        .all(|n| n.has_tag_name("line") && n.attribute("stroke-opacity") == Some("0.5")));
}
