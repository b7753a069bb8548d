use serde_json::{json, Value};
use soundstage_core::model::TagCategory;
use soundstage_engine::schema::{
    parse_anchors, parse_blend_plan, parse_edit_plan, parse_image_prompt, parse_keyword_pools, parse_modifiers,
    parse_music_analysis, parse_video_analysis, Rule,
};

const VIDEO: &str = include_str!("fixtures/responses/video_analysis.json");
const MUSIC: &str = include_str!("fixtures/responses/music_analysis.json");
const EDIT: &str = include_str!("fixtures/responses/edit_expansion.json");
const BLEND: &str = include_str!("fixtures/responses/blend_expansion.json");
const VIDEO_S: f64 = 95.0;

fn val(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

#[test]
fn valid_fixtures_are_accepted() {
    let v = parse_video_analysis(VIDEO, VIDEO_S).unwrap();
    assert_eq!(v.scenes.len(), 3);
    assert_eq!(parse_video_analysis(&v.to_response().to_string(), VIDEO_S).unwrap(), v);
    parse_music_analysis(MUSIC).unwrap();
    assert_eq!(parse_edit_plan(EDIT, "make it calmer").unwrap().variations.len(), 4);
    assert_eq!(parse_blend_plan(BLEND).unwrap().variations.len(), 4);
    parse_modifiers(include_str!("fixtures/responses/prompt_modifiers.json")).unwrap();
    parse_keyword_pools(include_str!("fixtures/responses/scene_keywords.json")).unwrap();
    parse_anchors(include_str!("fixtures/responses/visual_anchors.json")).unwrap();
    parse_image_prompt(include_str!("fixtures/responses/baseline_thumbnail.json")).unwrap();
}

#[test]
fn tag_colors_are_fixed() {
    assert_eq!(TagCategory::Genre.color(), "#8B5CF6");
    assert_eq!(TagCategory::Mood.color(), "#10B981");
    assert_eq!(TagCategory::Instrument.color(), "#06B6D4");
}

#[test]
fn fenced_json_is_accepted() {
    let fenced = format!("Here you go:\n```json\n{MUSIC}\n```\n");
    parse_music_analysis(&fenced).unwrap();
}

type Mutation = fn(&mut Value);

fn scene(start: &str, end: &str, id: u64) -> Value {
    let mut s = val(VIDEO)["videoAnalysis"]["scenes"][0].clone();
    s["sceneId"] = json!(id);
    s["startTime"] = json!(start);
    s["endTime"] = json!(end);
    s
}

fn music_cases() -> Vec<(&'static str, Mutation, Rule)> {
    vec![
        ("genre tag in mood color", |v| v["prominentTags"][0]["color"] = json!("#10B981"), Rule::TagColor),
        ("instrument tag off by one digit", |v| v["prominentTags"][2]["color"] = json!("#06B6D5"), Rule::TagColor),
        ("three-word fit reason", |v| v["fitAnalysis"]["reasons"][0] = json!("Too much bass"), Rule::FitReasonWords),
        (
            "eight-word fit reason",
            |v| v["fitAnalysis"]["reasons"][0] = json!("The bass line is far too loud here"),
            Rule::FitReasonWords,
        ),
        ("unknown verdict", |v| v["fitAnalysis"]["verdict"] = json!("maybe"), Rule::FitVerdict),
        (
            "good verdict with one reason",
            |v| {
                v["fitAnalysis"]["verdict"] = json!("good");
                v["fitAnalysis"]["reasons"] = json!(["Warm guitar suits the scene"]);
            },
            Rule::FitReasonCount,
        ),
        (
            "two genre tags",
            |v| {
                v["prominentTags"][1]["category"] = json!("genre");
                v["prominentTags"][1]["color"] = json!("#8B5CF6");
            },
            Rule::TagCategories,
        ),
        (
            "four tags",
            |v| {
                let extra = v["prominentTags"][0].clone();
                v["prominentTags"].as_array_mut().unwrap().push(extra);
            },
            Rule::TagCount,
        ),
        ("two-sentence image description", |v| v["imageDescription"] = json!("One. Two."), Rule::ImageDescriptionSentences),
        (
            "description without tempo",
            |v| v["detailedMusicDescription"] = json!("Soft guitar over warm pads."),
            Rule::DetailedDescription,
        ),
        ("missing tags", |v| drop(v.as_object_mut().unwrap().remove("prominentTags")), Rule::MissingField),
    ]
}

fn plan_cases() -> Vec<(&'static str, Mutation, Rule)> {
    vec![
        (
            "five-word edit title",
            |v| v["variations"][0]["title"] = json!("Overall Rhythmic Textural Enhancement Pass"),
            Rule::EditTitleWords,
        ),
        ("one-word edit title", |v| v["variations"][1]["title"] = json!("Calmer"), Rule::EditTitleWords),
        (
            "three edit variations",
            |v| drop(v["variations"].as_array_mut().unwrap().pop()),
            Rule::EditVariationCount,
        ),
        ("blank edit description", |v| v["variations"][2]["description"] = json!("  "), Rule::EditDescription),
    ]
}

fn blend_cases() -> Vec<(&'static str, Mutation, Rule)> {
    vec![
        ("empty common description", |v| v["commonDescription"] = json!(""), Rule::BlendCommonDescription),
        (
            "five blend variations",
            |v| {
                let extra = v["variations"][0].clone();
                v["variations"].as_array_mut().unwrap().push(extra);
            },
            Rule::BlendVariationCount,
        ),
    ]
}

fn video_cases() -> Vec<(&'static str, Mutation, Rule)> {
    vec![
        (
            "overlapping scenes",
            |v| v["videoAnalysis"]["scenes"][1]["startTime"] = json!("00:25"),
            Rule::SceneOverlap,
        ),
        (
            "seven scenes",
            |v| {
                let scenes: Vec<Value> = (0..7)
                    .map(|i| {
                        let (a, b) = (i * 15, (i + 1) * 15);
                        scene(&format!("{:02}:{:02}", a / 60, a % 60), &format!("{:02}:{:02}", b / 60, b % 60), i + 1)
                    })
                    .collect();
                v["videoAnalysis"]["scenes"] = json!(scenes);
            },
            Rule::SceneCount,
        ),
        ("gap between scenes", |v| v["videoAnalysis"]["scenes"][2]["startTime"] = json!("01:08"), Rule::SceneGap),
        ("malformed timestamp", |v| v["videoAnalysis"]["scenes"][0]["endTime"] = json!("0:3x"), Rule::SceneTimestamp),
        (
            "scenes stop short of the end",
            |v| v["videoAnalysis"]["scenes"][2]["endTime"] = json!("01:20"),
            Rule::SceneCoverage,
        ),
        (
            "thin keyword pool",
            |v| v["videoAnalysis"]["scenes"][0]["musicKeywords"]["moods"] = json!(["calm", "warm", "soft"]),
            Rule::KeywordPool,
        ),
        (
            "three dominant genres",
            |v| drop(v["videoAnalysis"]["overallKeywords"]["dominantGenres"].as_array_mut().unwrap().pop()),
            Rule::OverallKeywords,
        ),
    ]
}

#[test]
fn adversarial_responses_name_the_broken_rule() {
    let mut total = 0;
    let mut check = |name: &str, base: &str, m: Mutation, rule: Rule, parse: &dyn Fn(&str) -> Option<Rule>| {
        let mut v = val(base);
        m(&mut v);
        let got = parse(&v.to_string());
        assert_eq!(got, Some(rule), "{name}");
        total += 1;
    };
    for (name, m, rule) in music_cases() {
        check(name, MUSIC, m, rule, &|t| parse_music_analysis(t).err().map(|e| e.rule));
    }
    for (name, m, rule) in plan_cases() {
        check(name, EDIT, m, rule, &|t| parse_edit_plan(t, "make it calmer").err().map(|e| e.rule));
    }
    for (name, m, rule) in blend_cases() {
        check(name, BLEND, m, rule, &|t| parse_blend_plan(t).err().map(|e| e.rule));
    }
    for (name, m, rule) in video_cases() {
        check(name, VIDEO, m, rule, &|t| parse_video_analysis(t, VIDEO_S).err().map(|e| e.rule));
    }
    assert!(total >= 20, "{total}");
}

#[test]
fn non_json_is_malformed() {
    for text in ["", "sure thing!", "{\"fitAnalysis\": ", "[1, 2"] {
        assert_eq!(parse_music_analysis(text).unwrap_err().rule, Rule::MalformedJson, "{text:?}");
    }
}

#[test]
fn short_scene_breaks_duration_rule() {
    let mut v = val(VIDEO);
    v["videoAnalysis"]["scenes"] = json!([scene("00:00", "00:10", 1), scene("00:10", "01:35", 2)]);
    assert_eq!(parse_video_analysis(&v.to_string(), VIDEO_S).unwrap_err().rule, Rule::SceneDuration);
}
