use std::path::Path;

use keelson::dynamics::{load_model, DynamicsError};

fn readme_example() -> String {
    let text = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("models/README.md")).unwrap();
    let start = text.find("```toml\n").unwrap() + "```toml\n".len();
    let end = start + text[start..].find("```").unwrap();
    text[start..end].to_string()
}

#[test]
fn readme_example_loads() {
    let params = load_model(&readme_example()).unwrap();
    assert_eq!(params.name(), "skiff");
    assert_eq!(params.thrusters().len(), 1);
}

#[test]
fn templates_name_their_missing_coefficients() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("models/templates");
    let mut names: Vec<String> = Vec::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        let doc: toml::Table = toml::from_str(&text).unwrap();
        names.push(doc["name"].as_str().unwrap().to_string());
        match load_model(&text) {
            Err(DynamicsError::Parse(msg)) => assert!(msg.contains("missing field `length`"), "{}: {msg}", path.display()),
            other => panic!("{}: unfilled template loaded: {other:?}", path.display()),
        }
    }
    names.sort();
    assert_eq!(names, ["cybership-ii", "mariner", "milliampere", "qiuxin-no5"]);
}

fn uncomment(line: &str) -> bool {
    const KEYS: [&str; 11] =
        ["length", "mass_matrix", "damping_linear", "damping_quadratic", "rigid_body_mass", "x_g", "x", "y", "max_force", "angle_min", "angle_max"];
    let key = line.split(" = ").next().unwrap_or("");
    KEYS.contains(&key) || line.trim_start().starts_with('[') || line == "]"
}

/// Uncommenting every field yields a complete document; only the values are missing.
#[test]
fn uncommented_templates_are_complete() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("models/templates");
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        let filled: String = text
            .lines()
            .map(|l| match l.strip_prefix("# ") {
                Some(rest) if uncomment(rest) => rest.to_string(),
                _ => l.to_string(),
            })
            .collect::<Vec<_>>()
            .join("\n");
        // All-zero coefficients parse but are rejected as a model.
        let err = load_model(&filled).unwrap_err();
        assert!(!matches!(err, DynamicsError::Parse(_)), "{}: {err}", path.display());
    }
}
