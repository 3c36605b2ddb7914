//! Trial corpus loading and result-table rendering.
//!
//! Corpus layout: `<root>/<trial_id>/gt.json` holds the ground-truth plan;
//! sibling `<setup>.json` files hold predictions; `scene.csv` and
//! `scene.png`/`scene.jpg` hold the environment description. A trial whose
//! `gt.json` carries a `scene_ref` field borrows the scene files of the
//! named sibling directory (several trials can share one scene).

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::plan::{validate_plan, Plan};

/// Which evaluation setup produced a prediction, derived from the
/// prediction's file stem.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Setup {
    SingleTable,
    MultiTable,
    SingleImage,
    MultiImage,
    Custom(String),
}

impl Setup {
    pub fn from_stem(stem: &str) -> Setup {
        match stem {
            "single_table" => Setup::SingleTable,
            "multi_table" => Setup::MultiTable,
            "single_image" => Setup::SingleImage,
            "multi_image" => Setup::MultiImage,
            other => Setup::Custom(other.to_string()),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Setup::SingleTable => "single_table".to_string(),
            Setup::MultiTable => "multi_table".to_string(),
            Setup::SingleImage => "single_image".to_string(),
            Setup::MultiImage => "multi_image".to_string(),
            Setup::Custom(name) => format!("custom:{name}"),
        }
    }

    fn rank(&self) -> usize {
        match self {
            Setup::SingleTable => 0,
            Setup::MultiTable => 1,
            Setup::SingleImage => 2,
            Setup::MultiImage => 3,
            Setup::Custom(_) => 4,
        }
    }
}

impl Ord for Setup {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.rank()
            .cmp(&other.rank())
            .then_with(|| self.label().cmp(&other.label()))
    }
}

impl PartialOrd for Setup {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Setup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// One trial: a ground-truth plan plus any predictions found beside it.
#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub trial_id: String,
    pub goal: String,
    pub gt_plan: Plan,
    pub predictions: BTreeMap<Setup, Plan>,
    pub scene_ref: Option<String>,
    pub scene_csv: Option<PathBuf>,
    pub scene_image: Option<PathBuf>,
}

#[derive(Debug, Error)]
#[error("{file}: {reason}")]
pub struct CorpusFormatError {
    pub file: PathBuf,
    pub reason: String,
}

impl CorpusFormatError {
    fn new(file: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        CorpusFormatError {
            file: file.into(),
            reason: reason.into(),
        }
    }
}

#[derive(Deserialize)]
struct GtExtras {
    #[serde(default)]
    scene_ref: Option<String>,
}

fn read_plan(path: &Path) -> Result<Plan, CorpusFormatError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CorpusFormatError::new(path, e.to_string()))?;
    let plan = Plan::from_json(&text).map_err(|e| CorpusFormatError::new(path, e.to_string()))?;
    validate_plan(plan).map_err(|e| CorpusFormatError::new(path, e.to_string()))
}

fn scene_files(dir: &Path) -> (Option<PathBuf>, Option<PathBuf>) {
    let csv = dir.join("scene.csv");
    let csv = csv.is_file().then_some(csv);
    let image = ["scene.png", "scene.jpg"]
        .iter()
        .map(|name| dir.join(name))
        .find(|p| p.is_file());
    (csv, image)
}

fn load_trial(dir: &Path, root: &Path) -> Result<TrialRecord, CorpusFormatError> {
    let trial_id = dir
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| CorpusFormatError::new(dir, "trial directory name is not UTF-8"))?
        .to_string();

    let gt_path = dir.join("gt.json");
    if !gt_path.is_file() {
        return Err(CorpusFormatError::new(
            &gt_path,
            "missing ground-truth plan",
        ));
    }
    let mut gt_plan = read_plan(&gt_path)?;
    if gt_plan.trial_id.is_empty() {
        gt_plan.trial_id = trial_id.clone();
    } else if gt_plan.trial_id != trial_id {
        return Err(CorpusFormatError::new(
            &gt_path,
            format!(
                "trial_id {:?} does not match directory name {trial_id:?}",
                gt_plan.trial_id
            ),
        ));
    }
    let gt_text = std::fs::read_to_string(&gt_path)
        .map_err(|e| CorpusFormatError::new(&gt_path, e.to_string()))?;
    let extras: GtExtras = serde_json::from_str(&gt_text)
        .map_err(|e| CorpusFormatError::new(&gt_path, e.to_string()))?;

    let mut predictions = BTreeMap::new();
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| CorpusFormatError::new(dir, e.to_string()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .collect();
    entries.sort();
    for path in entries {
        if !path.is_file() || path.extension().and_then(|e| e.to_str()) != Some("json") {
            continue;
        }
        let stem = match path.file_stem().and_then(|s| s.to_str()) {
            Some(stem) if stem != "gt" => stem.to_string(),
            _ => continue,
        };
        let prediction = read_plan(&path)?;
        if prediction.goal != gt_plan.goal {
            return Err(CorpusFormatError::new(
                &path,
                format!(
                    "prediction goal {:?} differs from ground-truth goal {:?}",
                    prediction.goal, gt_plan.goal
                ),
            ));
        }
        predictions.insert(Setup::from_stem(&stem), prediction);
    }

    // Scene files live beside the trial unless scene_ref points at a
    // sibling directory.
    let scene_dir = match &extras.scene_ref {
        Some(reference) => root.join(reference),
        None => dir.to_path_buf(),
    };
    let (scene_csv, scene_image) = scene_files(&scene_dir);

    Ok(TrialRecord {
        goal: gt_plan.goal.clone(),
        trial_id,
        gt_plan,
        predictions,
        scene_ref: extras.scene_ref,
        scene_csv,
        scene_image,
    })
}

/// Loads every trial directory under `root`, sorted by trial ID. Missing
/// predictions are allowed; malformed files are errors naming the file.
pub fn load_corpus(root: &Path) -> Result<Vec<TrialRecord>, CorpusFormatError> {
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(root)
        .map_err(|e| CorpusFormatError::new(root, e.to_string()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    dirs.iter().map(|dir| load_trial(dir, root)).collect()
}

/// A scene described as one row per object plus named attribute columns.
#[derive(Debug, Clone, Default)]
pub struct EnvironmentTable {
    /// Attribute column names, in file order.
    pub columns: Vec<String>,
    pub rows: Vec<TableRow>,
}

#[derive(Debug, Clone)]
pub struct TableRow {
    pub object_name: String,
    pub attributes: HashMap<String, String>,
}

impl EnvironmentTable {
    /// Pipe-separated text form, used when a table stands in for an image
    /// in a prompt.
    pub fn render_text(&self) -> String {
        let mut out = String::from("object");
        for column in &self.columns {
            out.push_str(" | ");
            out.push_str(column);
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.object_name);
            for column in &self.columns {
                out.push_str(" | ");
                out.push_str(row.attributes.get(column).map_or("", |v| v.as_str()));
            }
            out.push('\n');
        }
        out
    }
}

/// Reads a headered CSV into an [`EnvironmentTable`]. The first column is
/// the object name; the rest become attributes.
pub fn load_environment_table(path: &Path) -> Result<EnvironmentTable, CorpusFormatError> {
    let mut reader =
        csv::Reader::from_path(path).map_err(|e| CorpusFormatError::new(path, e.to_string()))?;
    let headers = reader
        .headers()
        .map_err(|e| CorpusFormatError::new(path, e.to_string()))?
        .clone();
    if headers.is_empty() {
        return Err(CorpusFormatError::new(path, "missing header row"));
    }
    let columns: Vec<String> = headers.iter().skip(1).map(|h| h.to_string()).collect();
    let mut rows = Vec::new();
    for (index, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CorpusFormatError::new(path, e.to_string()))?;
        let object_name = record.get(0).unwrap_or("").trim().to_string();
        if object_name.is_empty() {
            return Err(CorpusFormatError::new(
                path,
                format!("row {} has an empty object name", index + 2),
            ));
        }
        let attributes = columns
            .iter()
            .enumerate()
            .map(|(i, column)| {
                (
                    column.clone(),
                    record.get(i + 1).unwrap_or("").trim().to_string(),
                )
            })
            .collect();
        rows.push(TableRow {
            object_name,
            attributes,
        });
    }
    Ok(EnvironmentTable { columns, rows })
}

/// One evaluated trial×setup result, ready for rendering.
#[derive(Debug, Clone)]
pub struct EvaluationRow {
    pub trial_id: String,
    pub setup: Setup,
    pub pg2s: f64,
    pub kas: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

fn format_kas(kas: Option<f64>) -> String {
    match kas {
        Some(value) => format!("{value:.2}"),
        None => "None".to_string(),
    }
}

/// Renders rows sorted by trial ID then setup. Scores use two decimals;
/// undefined KAS renders as the literal `None`.
pub fn render_report(rows: &[EvaluationRow], format: ReportFormat) -> String {
    let mut rows: Vec<&EvaluationRow> = rows.iter().collect();
    rows.sort_by(|a, b| {
        a.trial_id
            .cmp(&b.trial_id)
            .then_with(|| a.setup.cmp(&b.setup))
    });
    match format {
        ReportFormat::Csv => {
            let mut writer = csv::Writer::from_writer(Vec::new());
            writer
                .write_record(["trial_id", "setup", "pg2s", "kas"])
                .expect("writing to memory cannot fail");
            for row in rows {
                writer
                    .write_record([
                        row.trial_id.as_str(),
                        &row.setup.label(),
                        &format!("{:.2}", row.pg2s),
                        &format_kas(row.kas),
                    ])
                    .expect("writing to memory cannot fail");
            }
            String::from_utf8(writer.into_inner().expect("memory writer never errors"))
                .expect("report rows are UTF-8")
        }
        ReportFormat::Markdown => {
            let mut out =
                String::from("| trial_id | setup | pg2s | kas |\n| --- | --- | --- | --- |\n");
            for row in rows {
                out.push_str(&format!(
                    "| {} | {} | {:.2} | {} |\n",
                    row.trial_id,
                    row.setup.label(),
                    row.pg2s,
                    format_kas(row.kas)
                ));
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write_plan(path: &Path, trial_id: &str, goal: &str, steps: &[&str]) {
        let plan = Plan::with_trial_id(
            trial_id,
            goal,
            steps.iter().map(|s| s.to_string()).collect(),
        );
        fs::write(path, plan.to_json()).unwrap();
    }

    #[test]
    fn loads_a_trial_with_one_prediction() {
        let root = tempfile::tempdir().unwrap();
        let dir = root.path().join("trial_a");
        fs::create_dir(&dir).unwrap();
        write_plan(&dir.join("gt.json"), "trial_a", "tidy up", &["Walk."]);
        write_plan(&dir.join("multi_image.json"), "", "tidy up", &["Run."]);
        let records = load_corpus(root.path()).unwrap();
        assert_eq!(records.len(), 1);
        let record = &records[0];
        assert_eq!(record.trial_id, "trial_a");
        assert_eq!(record.predictions.len(), 1);
        assert!(record.predictions.contains_key(&Setup::MultiImage));
    }

    #[test]
    fn empty_root_yields_empty_corpus() {
        let root = tempfile::tempdir().unwrap();
        assert!(load_corpus(root.path()).unwrap().is_empty());
    }

    #[test]
    fn empty_gt_steps_fail_naming_the_file() {
        let root = tempfile::tempdir().unwrap();
        let dir = root.path().join("trial_a");
        fs::create_dir(&dir).unwrap();
        write_plan(&dir.join("gt.json"), "trial_a", "tidy up", &[]);
        let err = load_corpus(root.path()).unwrap_err();
        assert!(err.file.ends_with("trial_a/gt.json"));
        assert!(err.reason.contains("no steps"));
    }

    #[test]
    fn malformed_json_fails_naming_the_file() {
        let root = tempfile::tempdir().unwrap();
        let dir = root.path().join("trial_a");
        fs::create_dir(&dir).unwrap();
        fs::write(dir.join("gt.json"), "{not json").unwrap();
        let err = load_corpus(root.path()).unwrap_err();
        assert!(err.file.ends_with("trial_a/gt.json"));
    }

    #[test]
    fn missing_gt_is_an_error() {
        let root = tempfile::tempdir().unwrap();
        fs::create_dir(root.path().join("trial_a")).unwrap();
        let err = load_corpus(root.path()).unwrap_err();
        assert!(err.reason.contains("missing ground-truth"));
    }

    #[test]
    fn trial_id_mismatch_is_an_error() {
        let root = tempfile::tempdir().unwrap();
        let dir = root.path().join("trial_a");
        fs::create_dir(&dir).unwrap();
        write_plan(&dir.join("gt.json"), "trial_b", "tidy up", &["Walk."]);
        let err = load_corpus(root.path()).unwrap_err();
        assert!(err.reason.contains("does not match directory name"));
    }

    #[test]
    fn prediction_goal_mismatch_is_an_error() {
        let root = tempfile::tempdir().unwrap();
        let dir = root.path().join("trial_a");
        fs::create_dir(&dir).unwrap();
        write_plan(&dir.join("gt.json"), "trial_a", "tidy up", &["Walk."]);
        write_plan(
            &dir.join("single_image.json"),
            "",
            "different goal",
            &["Run."],
        );
        let err = load_corpus(root.path()).unwrap_err();
        assert!(err.file.ends_with("single_image.json"));
        assert!(err.reason.contains("differs from ground-truth goal"));
    }

    #[test]
    fn unknown_stems_become_custom_setups() {
        let root = tempfile::tempdir().unwrap();
        let dir = root.path().join("trial_a");
        fs::create_dir(&dir).unwrap();
        write_plan(&dir.join("gt.json"), "trial_a", "tidy up", &["Walk."]);
        write_plan(&dir.join("ablation.json"), "", "tidy up", &["Run."]);
        let records = load_corpus(root.path()).unwrap();
        let setup = records[0].predictions.keys().next().unwrap();
        assert_eq!(setup, &Setup::Custom("ablation".to_string()));
        assert_eq!(setup.label(), "custom:ablation");
    }

    #[test]
    fn scene_ref_borrows_a_sibling_scene() {
        let root = tempfile::tempdir().unwrap();
        let shared = root.path().join("trial_a-1");
        fs::create_dir(&shared).unwrap();
        write_plan(&shared.join("gt.json"), "trial_a-1", "tidy up", &["Walk."]);
        fs::write(shared.join("scene.csv"), "object,location\n").unwrap();
        fs::write(shared.join("scene.png"), [0u8; 4]).unwrap();

        let borrower = root.path().join("trial_a-2");
        fs::create_dir(&borrower).unwrap();
        let plan = serde_json::json!({
            "trial_id": "trial_a-2",
            "goal": "tidy more",
            "steps": ["Walk."],
            "scene_ref": "trial_a-1",
        });
        fs::write(borrower.join("gt.json"), plan.to_string()).unwrap();

        let records = load_corpus(root.path()).unwrap();
        let borrowed = records.iter().find(|r| r.trial_id == "trial_a-2").unwrap();
        assert_eq!(borrowed.scene_ref.as_deref(), Some("trial_a-1"));
        assert!(borrowed
            .scene_csv
            .as_ref()
            .unwrap()
            .ends_with("trial_a-1/scene.csv"));
        assert!(borrowed
            .scene_image
            .as_ref()
            .unwrap()
            .ends_with("trial_a-1/scene.png"));
    }

    #[test]
    fn setups_order_by_table_then_image_then_custom() {
        let mut setups = [
            Setup::Custom("b".into()),
            Setup::MultiImage,
            Setup::SingleTable,
            Setup::Custom("a".into()),
            Setup::SingleImage,
            Setup::MultiTable,
        ];
        setups.sort();
        let labels: Vec<String> = setups.iter().map(Setup::label).collect();
        assert_eq!(
            labels,
            vec![
                "single_table",
                "multi_table",
                "single_image",
                "multi_image",
                "custom:a",
                "custom:b"
            ]
        );
    }

    #[test]
    fn environment_table_parses_objects_and_attributes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scene.csv");
        fs::write(
            &path,
            "object,location,state\ntomato,kitchen island,ripe\nknife,counter,clean\nknife,drawer,dull\n",
        )
        .unwrap();
        let table = load_environment_table(&path).unwrap();
        assert_eq!(table.columns, vec!["location", "state"]);
        assert_eq!(table.rows.len(), 3);
        assert_eq!(table.rows[0].object_name, "tomato");
        assert_eq!(
            table.rows[0].attributes.get("location").unwrap(),
            "kitchen island"
        );
        // Duplicate object names are kept.
        assert_eq!(table.rows[1].object_name, "knife");
        assert_eq!(table.rows[2].object_name, "knife");
    }

    #[test]
    fn header_only_table_is_empty() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scene.csv");
        fs::write(&path, "object,location\n").unwrap();
        let table = load_environment_table(&path).unwrap();
        assert!(table.rows.is_empty());
        assert_eq!(table.columns, vec!["location"]);
    }

    #[test]
    fn empty_object_name_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scene.csv");
        fs::write(&path, "object,location\n,counter\n").unwrap();
        let err = load_environment_table(&path).unwrap_err();
        assert!(err.reason.contains("empty object name"));
    }

    #[test]
    fn table_renders_in_column_order() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scene.csv");
        fs::write(&path, "object,location\ntomato,kitchen island\n").unwrap();
        let table = load_environment_table(&path).unwrap();
        assert_eq!(
            table.render_text(),
            "object | location\ntomato | kitchen island\n"
        );
    }

    #[test]
    fn csv_report_matches_the_wire_format() {
        let rows = vec![
            EvaluationRow {
                trial_id: "trial_b".into(),
                setup: Setup::SingleImage,
                pg2s: 1.0,
                kas: Some(0.666),
            },
            EvaluationRow {
                trial_id: "trial_a".into(),
                setup: Setup::MultiImage,
                pg2s: 0.43,
                kas: None,
            },
        ];
        let report = render_report(&rows, ReportFormat::Csv);
        assert_eq!(
            report,
            "trial_id,setup,pg2s,kas\n\
             trial_a,multi_image,0.43,None\n\
             trial_b,single_image,1.00,0.67\n"
        );
    }

    #[test]
    fn empty_report_is_header_only() {
        assert_eq!(
            render_report(&[], ReportFormat::Csv),
            "trial_id,setup,pg2s,kas\n"
        );
        assert_eq!(
            render_report(&[], ReportFormat::Markdown),
            "| trial_id | setup | pg2s | kas |\n| --- | --- | --- | --- |\n"
        );
    }

    #[test]
    fn markdown_report_renders_rows() {
        let rows = vec![EvaluationRow {
            trial_id: "trial_a".into(),
            setup: Setup::SingleTable,
            pg2s: 0.5,
            kas: None,
        }];
        assert_eq!(
            render_report(&rows, ReportFormat::Markdown),
            "| trial_id | setup | pg2s | kas |\n| --- | --- | --- | --- |\n| trial_a | single_table | 0.50 | None |\n"
        );
    }

    #[test]
    fn rows_sort_by_trial_then_setup_regardless_of_input_order() {
        let rows = vec![
            EvaluationRow {
                trial_id: "t1".into(),
                setup: Setup::MultiImage,
                pg2s: 0.1,
                kas: None,
            },
            EvaluationRow {
                trial_id: "t1".into(),
                setup: Setup::SingleTable,
                pg2s: 0.2,
                kas: None,
            },
            EvaluationRow {
                trial_id: "t0".into(),
                setup: Setup::MultiImage,
                pg2s: 0.3,
                kas: None,
            },
        ];
        let report = render_report(&rows, ReportFormat::Csv);
        let lines: Vec<&str> = report.lines().collect();
        assert!(lines[1].starts_with("t0,multi_image"));
        assert!(lines[2].starts_with("t1,single_table"));
        assert!(lines[3].starts_with("t1,multi_image"));
    }

    #[test]
    fn corpus_round_trip_keeps_every_trial_id() {
        let root = tempfile::tempdir().unwrap();
        for trial in ["trial_a", "trial_b"] {
            let dir = root.path().join(trial);
            fs::create_dir(&dir).unwrap();
            write_plan(&dir.join("gt.json"), trial, "tidy up", &["Walk."]);
            write_plan(&dir.join("multi_image.json"), "", "tidy up", &["Run."]);
        }
        let records = load_corpus(root.path()).unwrap();
        let rows: Vec<EvaluationRow> = records
            .iter()
            .flat_map(|record| {
                record.predictions.keys().map(|setup| EvaluationRow {
                    trial_id: record.trial_id.clone(),
                    setup: setup.clone(),
                    pg2s: 0.0,
                    kas: None,
                })
            })
            .collect();
        assert_eq!(rows.len(), 2);
        let report = render_report(&rows, ReportFormat::Csv);
        for record in &records {
            assert!(report.contains(&record.trial_id));
        }
    }
}
