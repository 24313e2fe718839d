//! Prompt templates shipped with the crate. Placeholders are substituted in
//! a single pass, and doubled braces collapse to literal braces afterwards,
//! so substituted JSON is never re-interpreted.

pub const PREPROCESS_SYSTEM: &str = include_str!("../../prompts/preprocess_system.txt");
pub const DATA_ANALYSIS: &str = include_str!("../../prompts/data_analysis.txt");
pub const MODEL_SELECTION_SYSTEM: &str = include_str!("../../prompts/model_selection_system.txt");
pub const MODEL_SELECTION: &str = include_str!("../../prompts/model_selection.txt");
pub const ENSEMBLE_SYSTEM: &str = include_str!("../../prompts/ensemble_system.txt");
pub const ENSEMBLE_DECISION: &str = include_str!("../../prompts/ensemble_decision.txt");

/// Replace each `(placeholder, value)` literal, then unescape `{{` and `}}`.
pub fn render(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    'scan: while !rest.is_empty() {
        for (key, value) in vars {
            if let Some(tail) = rest.strip_prefix(key) {
                out.push_str(value);
                rest = tail;
                continue 'scan;
            }
        }
        if let Some(tail) = rest.strip_prefix("{{").or_else(|| rest.strip_prefix("}}")) {
            out.push_str(&rest[..1]);
            rest = tail;
            continue;
        }
        let ch = rest.chars().next().expect("non-empty");
        out.push(ch);
        rest = &rest[ch.len_utf8()..];
    }
    out
}

pub fn data_analysis(sample: &str) -> String {
    render(DATA_ANALYSIS, &[("{{sample}}", sample)])
}

pub fn model_selection(analysis: &str, available_models: &str, n_candidates: usize) -> String {
    let n = n_candidates.to_string();
    render(
        MODEL_SELECTION,
        &[
            ("{analysis}", analysis),
            ("{available_models}", available_models),
            ("{n_candidates}", &n),
        ],
    )
}

pub fn ensemble_decision(individual_forecasts: &str, viz_info: &str) -> String {
    render(
        ENSEMBLE_DECISION,
        &[
            ("{json.dumps(individual_forecasts, indent=2)}", individual_forecasts),
            ("{{viz_info}}", viz_info),
        ],
    )
}
