//! Directory ingestion in the 20 Newsgroups layout and the catalog of
//! cross-domain tasks built from it.
//!
//! Each binary task pairs two top-level categories; the source and target
//! domains use disjoint sub-groups of each category, so the label is the
//! top-level category name.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use walkdir::WalkDir;

use super::{corpus_from_raw, merge_datasets, Corpus, CorpusOptions, RawDocument};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NewsgroupsTask {
    pub name: &'static str,
    pub source: [&'static str; 4],
    pub target: [&'static str; 4],
}

pub const BINARY_TASKS: [NewsgroupsTask; 6] = [
    NewsgroupsTask {
        name: "comp-vs-rec",
        source: ["comp.graphics", "comp.sys.ibm.pc.hardware", "rec.motorcycles", "rec.sport.baseball"],
        target: ["comp.os.ms-windows.misc", "comp.sys.mac.hardware", "rec.autos", "rec.sport.hockey"],
    },
    NewsgroupsTask {
        name: "comp-vs-sci",
        source: ["comp.os.ms-windows.misc", "comp.sys.ibm.pc.hardware", "sci.electronics", "sci.space"],
        target: ["comp.graphics", "comp.sys.mac.hardware", "sci.crypt", "sci.med"],
    },
    NewsgroupsTask {
        name: "comp-vs-talk",
        source: ["comp.os.ms-windows.misc", "comp.sys.ibm.pc.hardware", "talk.politics.mideast", "talk.politics.misc"],
        target: ["comp.graphics", "comp.sys.mac.hardware", "talk.politics.guns", "talk.religion.misc"],
    },
    NewsgroupsTask {
        name: "rec-vs-sci",
        source: ["rec.autos", "rec.sport.baseball", "sci.crypt", "sci.med"],
        target: ["rec.motorcycles", "rec.sport.hockey", "sci.electronics", "sci.space"],
    },
    NewsgroupsTask {
        name: "rec-vs-talk",
        source: ["rec.autos", "rec.sport.baseball", "talk.politics.mideast", "talk.politics.misc"],
        target: ["rec.motorcycles", "rec.sport.hockey", "talk.politics.guns", "talk.religion.misc"],
    },
    NewsgroupsTask {
        name: "sci-vs-talk",
        source: ["sci.crypt", "sci.med", "talk.politics.misc", "talk.religion.misc"],
        target: ["sci.electronics", "sci.space", "talk.politics.guns", "talk.politics.mideast"],
    },
];

/// 4-class tasks, each the union of two binary tasks with disjoint labels.
pub const FOUR_CLASS_TASKS: [(&str, &str); 3] = [
    ("comp-vs-rec", "sci-vs-talk"),
    ("comp-vs-sci", "rec-vs-talk"),
    ("comp-vs-talk", "rec-vs-sci"),
];

pub fn binary_task(name: &str) -> Option<&'static NewsgroupsTask> {
    BINARY_TASKS.iter().find(|t| t.name == name)
}

/// Names of every task in the catalog: the six binary tasks followed by the
/// three 4-class combinations (`a+b`).
pub fn task_names() -> Vec<String> {
    BINARY_TASKS
        .iter()
        .map(|t| t.name.to_owned())
        .chain(FOUR_CLASS_TASKS.iter().map(|(a, b)| format!("{a}+{b}")))
        .collect()
}

/// Builds a catalog task from a newsgroups tree rooted at `root`. Group
/// directories may sit at any depth below `root` (for instance split into
/// train/test halves); all files of every matching directory are used.
pub fn build_task_corpus(root: &Path, task: &str, opts: &CorpusOptions) -> Result<Corpus> {
    if let Some((a, b)) = task.split_once('+') {
        let a = build_task_corpus(root, a, opts)?;
        let b = build_task_corpus(root, b, opts)?;
        return merge_datasets(&a, &b);
    }
    let spec = binary_task(task)
        .ok_or_else(|| Error::InvalidCorpus(format!("unknown task `{task}`; known: {}", task_names().join(", "))))?;
    let dirs = index_group_dirs(root);
    let collect = |groups: &[&str]| -> Result<Vec<RawDocument>> {
        let mut docs = Vec::new();
        for group in groups {
            let found = dirs.get(*group).ok_or_else(|| {
                Error::InvalidCorpus(format!("newsgroup `{group}` not found under {}", root.display()))
            })?;
            let label = top_level(group).to_owned();
            for dir in found {
                for (name, text) in read_dir_files(dir)? {
                    docs.push(RawDocument {
                        id: format!("{group}/{name}"),
                        label: Some(label.clone()),
                        text,
                    });
                }
            }
        }
        Ok(docs)
    };
    let source = collect(&spec.source)?;
    let target = collect(&spec.target)?;
    corpus_from_raw(source, target, opts)
}

fn top_level(group: &str) -> &str {
    group.split('.').next().unwrap_or(group)
}

fn index_group_dirs(root: &Path) -> BTreeMap<String, Vec<PathBuf>> {
    let mut out: BTreeMap<String, Vec<PathBuf>> = BTreeMap::new();
    for entry in WalkDir::new(root)
        .follow_links(true)
        .sort_by_file_name()
        .into_iter()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_type().is_dir())
    {
        if let Some(name) = entry.file_name().to_str() {
            out.entry(name.to_owned()).or_default().push(entry.into_path());
        }
    }
    out
}

fn read_dir_files(dir: &Path) -> Result<Vec<(String, String)>> {
    let mut files = Vec::new();
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if !path.is_file() {
            continue;
        }
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        files.push((name, String::from_utf8_lossy(&bytes).into_owned()));
    }
    files.sort();
    Ok(files)
}

/// Reads `<root>/<label>/<file>` documents. With `top_level_labels` the label
/// is the directory name up to its first `.`.
pub fn read_label_dirs(root: &Path, top_level_labels: bool) -> Result<Vec<RawDocument>> {
    let mut labels: Vec<PathBuf> = fs::read_dir(root)
        .map_err(|e| Error::io(root, e))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_dir())
        .collect();
    labels.sort();
    let mut docs = Vec::new();
    for dir in labels {
        let dir_name = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let label = if top_level_labels {
            top_level(&dir_name).to_owned()
        } else {
            dir_name.clone()
        };
        for (name, text) in read_dir_files(&dir)? {
            docs.push(RawDocument {
                id: format!("{dir_name}/{name}"),
                label: Some(label.clone()),
                text,
            });
        }
    }
    Ok(docs)
}
