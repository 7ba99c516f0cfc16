//! Bundled example models and deformation families.

use crate::model::LieComplexModel;
use crate::parser::parse_model;

pub const MODEL_SOURCES: &[(&str, &str)] = &[
    ("torus2", include_str!("../corpus/torus2.model")),
    ("torus3", include_str!("../corpus/torus3.model")),
    ("kodaira_thurston", include_str!("../corpus/kodaira_thurston.model")),
    ("kaehler_solv", include_str!("../corpus/kaehler_solv.model")),
    ("iwasawa", include_str!("../corpus/iwasawa.model")),
    ("nil_h3", include_str!("../corpus/nil_h3.model")),
    ("nil_mixed", include_str!("../corpus/nil_mixed.model")),
    ("nil_3step", include_str!("../corpus/nil_3step.model")),
];

pub const FAMILY_SOURCES: &[(&str, &str)] = &[
    ("iwasawa", include_str!("../corpus/iwasawa.family")),
    ("torus2", include_str!("../corpus/torus2.family")),
    ("kaehler_solv", include_str!("../corpus/kaehler_solv.family")),
    ("constant", include_str!("../corpus/constant.family")),
    ("iwasawa_drift", include_str!("../corpus/iwasawa_drift.family")),
    ("broken", include_str!("../corpus/broken.family")),
];

pub fn model_source(name: &str) -> Option<&'static str> {
    MODEL_SOURCES.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn family_source(name: &str) -> Option<&'static str> {
    FAMILY_SOURCES.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn model(name: &str) -> Option<LieComplexModel> {
    model_source(name).map(|s| parse_model(s).expect("bundled model parses"))
}

pub fn models() -> Vec<LieComplexModel> {
    MODEL_SOURCES.iter().map(|(_, s)| parse_model(s).expect("bundled model parses")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_bundled_models_parse() {
        let ms = models();
        assert_eq!(ms.len(), MODEL_SOURCES.len());
        for (m, (name, _)) in ms.iter().zip(MODEL_SOURCES) {
            assert_eq!(m.name(), *name);
        }
    }
}
