//! Corpus replay. Each example is a TRL file whose `#@ key: value` comment
//! lines direct the run (mode, goal, theta, synonyms); the expected output
//! sits beside it in golden/<name>.json. Settings layer as flag over
//! directive over config file, so a `--theta` override reaches every example.

use std::fs;
use std::path::{Path, PathBuf};

use natl_core::config::Config;
use natl_core::reason::TRACE_VERSION;
use natl_core::syntax;

use crate::{
    apply_overrides, file_config, print_json, reason, render, CliError, Format, Globals,
    ReasonMode,
};

pub fn run(globals: &Globals, dir: Option<&Path>, bless: bool) -> Result<u8, CliError> {
    let dir = dir
        .map(Path::to_path_buf)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus"));
    let mut examples = list_examples(&dir)?;
    examples.sort();
    if examples.is_empty() {
        return Err(CliError::Corpus(format!("no .trl examples in {}", dir.display())));
    }
    let base = file_config(globals)?;
    let mut reports = Vec::new();
    for path in &examples {
        reports.push(run_example(&dir, path, &base, globals, bless)?);
    }
    let failed = reports.iter().filter(|r| r.status == Status::Fail).count();
    match globals.format {
        Format::Human => {
            for r in &reports {
                match (&r.status, &r.detail) {
                    (Status::Ok, _) => println!("ok {}", r.name),
                    (Status::Blessed, _) => println!("blessed {}", r.name),
                    (Status::Fail, Some(detail)) => println!("FAIL {}: {detail}", r.name),
                    (Status::Fail, None) => println!("FAIL {}", r.name),
                }
            }
            println!("{} passed, {} failed", reports.len() - failed, failed);
        }
        Format::Structured => {
            let examples: Vec<serde_json::Value> = reports
                .iter()
                .map(|r| {
                    serde_json::json!({
                        "name": r.name,
                        "status": r.status.word(),
                        "detail": r.detail,
                    })
                })
                .collect();
            print_json(&serde_json::json!({
                "version": TRACE_VERSION,
                "dir": dir.display().to_string(),
                "examples": examples,
                "passed": reports.len() - failed,
                "failed": failed,
            }));
        }
    }
    Ok(if failed > 0 { 1 } else { 0 })
}

fn list_examples(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let entries = fs::read_dir(dir)
        .map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry
            .map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?
            .path();
        if path.extension().is_some_and(|ext| ext == "trl") {
            out.push(path);
        }
    }
    Ok(out)
}

#[derive(PartialEq, Eq)]
enum Status {
    Ok,
    Fail,
    Blessed,
}

impl Status {
    fn word(&self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Fail => "fail",
            Status::Blessed => "blessed",
        }
    }
}

struct Report {
    name: String,
    status: Status,
    detail: Option<String>,
}

struct Directives {
    goal: Option<String>,
    theta: Option<f64>,
    synonyms: Option<String>,
}

/// Parse-only examples carry no goal; reasoning ones must.
enum ExampleMode {
    Parse,
    Reason(ReasonMode),
}

fn run_example(
    dir: &Path,
    path: &Path,
    base: &Config,
    globals: &Globals,
    bless: bool,
) -> Result<Report, CliError> {
    let name = path
        .file_stem()
        .expect("listed as *.trl")
        .to_string_lossy()
        .into_owned();
    let text =
        fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    let (mode, directives) = directives(&name, &text)?;

    let mut config = base.clone();
    if let Some(rel) = &directives.synonyms {
        config.synonyms = Some(dir.join(rel));
    }
    if let Some(theta) = directives.theta {
        config.settings.theta = theta;
    }
    apply_overrides(&mut config, globals)?;

    let actual = match mode {
        ExampleMode::Parse => {
            let registry = config.registry()?;
            let sources = syntax::parse_kb(&text, &registry)
                .map_err(|source| CliError::Kb { path: path.to_path_buf(), source })?;
            let doc = serde_json::json!({
                "version": TRACE_VERSION,
                "judgments": sources.iter().map(render::judgment_json).collect::<Vec<_>>(),
            });
            let mut s = serde_json::to_string_pretty(&doc).expect("JSON output serializes");
            s.push('\n');
            s
        }
        ExampleMode::Reason(reason_mode) => {
            let goal = directives
                .goal
                .as_deref()
                .ok_or_else(|| CliError::Corpus(format!("{name}: missing `#@ goal:` directive")))?;
            // The golden freezes the whole trace, outcome included, so a
            // run that exhausts under an override shows up as a mismatch.
            reason(&config, &[path.to_path_buf()], goal, reason_mode)?.trace.to_json()
        }
    };

    let golden_path = dir.join("golden").join(format!("{name}.json"));
    if bless {
        fs::create_dir_all(golden_path.parent().expect("golden path has a parent"))
            .and_then(|_| fs::write(&golden_path, &actual))
            .map_err(|source| CliError::Io { path: golden_path.clone(), source })?;
        return Ok(Report { name, status: Status::Blessed, detail: None });
    }
    let golden = match fs::read_to_string(&golden_path) {
        Ok(text) => text,
        Err(_) => {
            return Ok(Report {
                name,
                status: Status::Fail,
                detail: Some(format!("missing golden {}", golden_path.display())),
            })
        }
    };
    Ok(match compare(&actual, &golden) {
        None => Report { name, status: Status::Ok, detail: None },
        Some(detail) => Report { name, status: Status::Fail, detail: Some(detail) },
    })
}

fn directives(name: &str, text: &str) -> Result<(ExampleMode, Directives), CliError> {
    let mut d = Directives { goal: None, theta: None, synonyms: None };
    let mut mode = None;
    for (i, line) in text.lines().enumerate() {
        let Some(rest) = line.trim_start().strip_prefix("#@") else { continue };
        let bad = |what: String| CliError::Corpus(format!("{name} line {}: {what}", i + 1));
        let Some((key, value)) = rest.split_once(':') else {
            return Err(bad(format!("directive `{}` wants `key: value`", rest.trim())));
        };
        let value = value.trim();
        match key.trim() {
            "mode" => {
                mode = Some(match value {
                    "parse" => ExampleMode::Parse,
                    "solve" => ExampleMode::Reason(ReasonMode::Solve),
                    "explain" => ExampleMode::Reason(ReasonMode::Explain),
                    _ => return Err(bad(format!("unknown mode `{value}`"))),
                });
            }
            "goal" => d.goal = Some(value.to_string()),
            "synonyms" => d.synonyms = Some(value.to_string()),
            "theta" => {
                let theta: f64 = value
                    .parse()
                    .ok()
                    .filter(|t| (0.0..=1.0).contains(t))
                    .ok_or_else(|| bad(format!("theta wants a number in [0, 1], got `{value}`")))?;
                d.theta = Some(theta);
            }
            other => return Err(bad(format!("unknown directive `{other}`"))),
        }
    }
    let mode = mode.ok_or_else(|| {
        CliError::Corpus(format!("{name}: missing `#@ mode:` directive"))
    })?;
    if matches!(mode, ExampleMode::Parse) && d.goal.is_some() {
        return Err(CliError::Corpus(format!("{name}: parse mode takes no goal")));
    }
    Ok((mode, d))
}

/// None when equal as JSON values; otherwise a short account of the first
/// difference that matters. The `config` block only echoes the settings of
/// the run, so overrides would fail every example through it; the comparison
/// covers the derivation itself.
fn compare(actual: &str, golden: &str) -> Option<String> {
    let parse = |text: &str, which: &str| -> Result<serde_json::Value, String> {
        let mut value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| format!("{which} is not valid JSON: {e}"))?;
        if let Some(doc) = value.as_object_mut() {
            doc.remove("config");
        }
        Ok(value)
    };
    let a = match parse(actual, "output") {
        Ok(v) => v,
        Err(e) => return Some(e),
    };
    let g = match parse(golden, "golden") {
        Ok(v) => v,
        Err(e) => return Some(e),
    };
    if a == g {
        return None;
    }
    let status = |v: &serde_json::Value| {
        v.get("outcome")
            .and_then(|o| o.get("status"))
            .and_then(|s| s.as_str())
            .map(str::to_owned)
    };
    match (status(&a), status(&g)) {
        (Some(actual), Some(expected)) if actual != expected => {
            Some(format!("outcome {actual}, golden says {expected}"))
        }
        _ => Some("output differs from golden".to_string()),
    }
}
