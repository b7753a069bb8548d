use std::collections::BTreeMap;

use serde::Deserialize;
use soundstage_core::templates::{TemplateError, TemplateId, TemplateRegistry, Variables};

#[derive(Deserialize)]
#[serde(untagged)]
enum Value {
    Text(String),
    List(Vec<String>),
}

#[derive(Deserialize)]
struct Case {
    template: String,
    variables: BTreeMap<String, Value>,
}

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/templates");

fn cases() -> BTreeMap<String, Case> {
    serde_json::from_str(&std::fs::read_to_string(format!("{FIXTURES}/cases.json")).unwrap()).unwrap()
}

fn vars(case: &Case) -> Variables {
    case.variables.iter().fold(Variables::new(), |v, (k, val)| match val {
        Value::Text(s) => v.text(k, s.clone()),
        Value::List(items) => v.list(k, items.clone()),
    })
}

fn check(name: &str) {
    let all = cases();
    let case = &all[name];
    let id: TemplateId = case.template.parse().unwrap();
    let got = TemplateRegistry::builtin().render(id, &vars(case)).unwrap();
    let want = std::fs::read_to_string(format!("{FIXTURES}/{name}.txt")).unwrap();
    assert!(got.as_bytes() == want.as_bytes(), "{name} differs from its fixture:\n{got}");
}

#[test]
fn video_analysis_matches_fixture() {
    check("video_analysis");
}

#[test]
fn music_analysis_octopus_branch_matches_fixture() {
    check("music_analysis__octopus");
}

#[test]
fn music_analysis_default_branch_matches_fixture() {
    check("music_analysis__other");
}

#[test]
fn edit_expansion_matches_fixture() {
    check("edit_expansion");
}

#[test]
fn blend_expansion_two_inputs_matches_fixture() {
    check("blend_expansion__two");
}

#[test]
fn blend_expansion_three_inputs_matches_fixture() {
    check("blend_expansion__three");
    let text = std::fs::read_to_string(format!("{FIXTURES}/blend_expansion__three.txt")).unwrap();
    for k in ["\"desc_1\"", "\"desc_2\"", "\"desc_3\""] {
        assert!(text.contains(k));
    }
}

#[test]
fn prompt_modifiers_matches_fixture() {
    check("prompt_modifiers");
}

#[test]
fn visual_anchors_matches_fixture() {
    check("visual_anchors");
}

#[test]
fn scene_keywords_matches_fixture() {
    check("scene_keywords");
}

#[test]
fn baseline_thumbnail_matches_fixture() {
    check("baseline_thumbnail");
}

#[test]
fn every_template_has_a_case() {
    let all = cases();
    for id in TemplateId::ALL {
        assert!(all.values().any(|c| c.template == id.as_str()), "{id}");
    }
}

#[test]
fn missing_variable_fails_fast() {
    let all = cases();
    for case in all.values() {
        let id: TemplateId = case.template.parse().unwrap();
        for drop in case.variables.keys() {
            let mut v = vars(case);
            v.0.remove(drop);
            match TemplateRegistry::builtin().render(id, &v) {
                Err(TemplateError::MissingVariable(name)) => assert_eq!(&name, drop),
                other => panic!("{id} without {drop}: {other:?}"),
            }
        }
    }
}
