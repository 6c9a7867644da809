//! Generated HTML parses without errors, including hostile input text.

mod common;

use html5ever::tendril::TendrilSink;
use markup5ever_rcdom::RcDom;
use xlod::attribution::{attribute_text, render_html, AttributionConfig};
use xlod::classifier::{ModelConfig, TrainingConfig};
use xlod::corpus::synthetic::SyntheticCatalogSpec;
use xlod::corpus::{Language, Split};
use xlod::protocols::Harness;
use xlod::report::{emit_report, ReportFormat};

fn parse_errors(html: &str) -> Vec<String> {
    let dom = html5ever::parse_document(RcDom::default(), Default::default())
        .from_utf8()
        .read_from(&mut html.as_bytes())
        .unwrap();
    let errors = dom.errors.borrow().iter().map(|e| e.to_string()).collect();
    errors
}

#[test]
fn attribution_pages_are_well_formed() {
    let (corpus, checkpoint) = common::desk_fixture();
    let config = AttributionConfig {
        num_steps: 8,
        ..AttributionConfig::default()
    };
    let mut texts: Vec<String> = corpus.split(Split::Test)[..3].iter().map(|e| e.text.clone()).collect();
    texts.push(r#"aw1 <script>alert("x")</script> & "quoted" 'single' aw2"#.to_string());
    for text in &texts {
        let result = attribute_text(&checkpoint.classifier, text, 0.5, &config).unwrap();
        let html = render_html(&result);
        assert_eq!(parse_errors(&html), Vec::<String>::new(), "{html}");
        assert!(!html.contains("<script>"));
    }
}

#[test]
fn report_page_is_well_formed() {
    let catalog = SyntheticCatalogSpec::disjoint(2, 0).generate().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let training = TrainingConfig {
        epochs: 5,
        ..TrainingConfig::desk()
    };
    let harness = Harness::new(&catalog, ModelConfig::desk(), training)
        .unwrap()
        .with_output(dir.path(), false, false);
    harness.run_zero_shot_matrix().unwrap();
    let (a, b) = (Language::Synthetic(0), Language::Synthetic(1));
    harness.run_few_shot_curve(a, Some(b), &[0.5, 1.0]).unwrap();
    let written = emit_report(dir.path(), ReportFormat::Html).unwrap();
    let html = std::fs::read_to_string(&written[0]).unwrap();
    assert_eq!(parse_errors(&html), Vec::<String>::new());
    assert!(html.contains("<svg"));
}
