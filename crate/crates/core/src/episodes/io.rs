//! JSON episode files: `{scene_id, split, seed, embodiment, episodes: [...]}`.
//! Unknown fields are ignored with a warning so newer writers stay readable.

use std::path::Path;

use log::warn;
use serde_json::{Map, Value};

use super::{Episode, EpisodeError, EpisodeSet};

const TOP_FIELDS: &[&str] = &["scene_id", "split", "seed", "embodiment", "episodes"];
const EPISODE_FIELDS: &[&str] = &[
    "episode_id",
    "scene_id",
    "start_position",
    "start_yaw",
    "goal_position",
    "goal_yaw",
    "geodesic_length",
];
const EMBODIMENT_FIELDS: &[&str] = &[
    "height",
    "radius",
    "camera_height",
    "hfov_deg",
    "image_width",
    "image_height",
    "forward_step",
    "turn_angle_deg",
    "success_radius",
    "angle_success_deg",
];

/// Pretty-printed JSON; deterministic for a given set.
pub fn to_json(set: &EpisodeSet) -> Result<String, EpisodeError> {
    serde_json::to_string_pretty(set).map_err(|e| EpisodeError::Schema(e.to_string()))
}

pub fn save_episodes(set: &EpisodeSet, path: impl AsRef<Path>) -> Result<(), EpisodeError> {
    let mut text = to_json(set)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn unknown_keys(obj: &Map<String, Value>, known: &[&str], context: &str, warnings: &mut Vec<String>) {
    for k in obj.keys() {
        if !known.contains(&k.as_str()) {
            warnings.push(format!("{context}: ignoring unknown field `{k}`"));
        }
    }
}

/// Parses an episode file, returning the set and any forward-compatibility
/// warnings (unknown fields).
pub fn parse_episodes(text: &str) -> Result<(EpisodeSet, Vec<String>), EpisodeError> {
    let schema = |msg: String| EpisodeError::Schema(msg);
    let root: Value = serde_json::from_str(text).map_err(|e| schema(format!("invalid JSON: {e}")))?;
    let Value::Object(top) = root else {
        return Err(schema("top level must be an object".into()));
    };
    let mut warnings = Vec::new();
    unknown_keys(&top, TOP_FIELDS, "file", &mut warnings);
    for f in TOP_FIELDS {
        if !top.contains_key(*f) {
            return Err(schema(format!("missing field `{f}`")));
        }
    }
    if let Some(Value::Object(e)) = top.get("embodiment") {
        unknown_keys(e, EMBODIMENT_FIELDS, "embodiment", &mut warnings);
    }
    let field = |name: &str| top.get(name).cloned().unwrap_or(Value::Null);
    let scene_id = serde_json::from_value(field("scene_id")).map_err(|e| schema(format!("scene_id: {e}")))?;
    let split = serde_json::from_value(field("split")).map_err(|e| schema(format!("split: {e}")))?;
    let seed = serde_json::from_value(field("seed")).map_err(|e| schema(format!("seed: {e}")))?;
    let embodiment = serde_json::from_value(field("embodiment")).map_err(|e| schema(format!("embodiment: {e}")))?;
    let Value::Array(items) = field("episodes") else {
        return Err(schema("`episodes` must be an array".into()));
    };
    let mut episodes = Vec::with_capacity(items.len());
    for (i, item) in items.into_iter().enumerate() {
        if let Value::Object(obj) = &item {
            unknown_keys(obj, EPISODE_FIELDS, &format!("episodes[{i}]"), &mut warnings);
        }
        let ep: Episode = serde_json::from_value(item).map_err(|e| schema(format!("episodes[{i}]: {e}")))?;
        episodes.push(ep);
    }
    let set = EpisodeSet {
        scene_id,
        split,
        seed,
        embodiment,
        episodes,
    };
    set.check_ids()?;
    Ok((set, warnings))
}

pub fn load_episodes_with_warnings(path: impl AsRef<Path>) -> Result<(EpisodeSet, Vec<String>), EpisodeError> {
    let text = std::fs::read_to_string(path)?;
    parse_episodes(&text)
}

/// Loads an episode file, logging forward-compatibility warnings.
pub fn load_episodes(path: impl AsRef<Path>) -> Result<EpisodeSet, EpisodeError> {
    let (set, warnings) = load_episodes_with_warnings(path)?;
    for w in warnings {
        warn!("{w}");
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::episodes::{generate_episodes, Split};
    use crate::geom::Vec3;
    use crate::navmesh::{Embodiment, NavGrid};

    fn sample_set() -> EpisodeSet {
        let cs = 0.05f32 as f64;
        let g = NavGrid::from_parts(Vec3::zeros(), cs, 100, 80, vec![true; 8000], vec![0.0; 8000]).unwrap();
        generate_episodes(&g, &Embodiment::default(), 5, 1, "scene", Split::Val).unwrap()
    }

    #[test]
    fn save_load_round_trip() {
        let set = sample_set();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("val.json");
        save_episodes(&set, &p).unwrap();
        assert_eq!(load_episodes(&p).unwrap(), set);
    }

    #[test]
    fn missing_field_is_named() {
        let set = sample_set();
        let mut v: Value = serde_json::from_str(&to_json(&set).unwrap()).unwrap();
        v["episodes"][2].as_object_mut().unwrap().remove("geodesic_length");
        let err = parse_episodes(&v.to_string()).unwrap_err().to_string();
        assert!(err.contains("geodesic_length") && err.contains("episodes[2]"), "{err}");

        let mut v: Value = serde_json::from_str(&to_json(&set).unwrap()).unwrap();
        v.as_object_mut().unwrap().remove("seed");
        assert!(parse_episodes(&v.to_string()).unwrap_err().to_string().contains("seed"));
    }

    #[test]
    fn unknown_fields_warn() {
        let set = sample_set();
        let mut v: Value = serde_json::from_str(&to_json(&set).unwrap()).unwrap();
        v["generator"] = Value::from("v2");
        v["episodes"][0]["difficulty"] = Value::from("easy");
        v["embodiment"]["wheel_base"] = Value::from(0.3);
        let (back, warnings) = parse_episodes(&v.to_string()).unwrap();
        assert_eq!(back, set);
        assert_eq!(warnings.len(), 3);
        assert!(warnings.iter().any(|w| w.contains("difficulty")));
    }

    #[test]
    fn ids_must_be_dense() {
        let mut set = sample_set();
        set.episodes[1].episode_id = 7;
        let text = serde_json::to_string(&set).unwrap();
        assert!(parse_episodes(&text).is_err());
    }
}
