use std::collections::HashSet;
use std::io::BufReader;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceType {
    Scientific,
    Ngo,
    Upload,
}

/// A source text: a scientific publication, an NGO report or a user upload.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub title: String,
    pub source_type: SourceType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doi: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub website: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filename: Option<String>,
    pub text: String,
}

impl Document {
    /// A plain-text upload; `filename` doubles as id and title.
    pub fn upload(filename: &str, text: String) -> Self {
        let stem = Path::new(filename)
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| filename.to_owned());
        Document {
            id: stem.clone(),
            title: stem,
            source_type: SourceType::Upload,
            doi: None,
            website: None,
            filename: Some(filename.to_owned()),
            text,
        }
    }

    /// Checks that the field required by `source_type` is present.
    pub fn validate(&self) -> Result<()> {
        let missing = |field: &str| Error::Document {
            id: self.id.clone(),
            message: format!("{:?} documents require a non-empty `{field}`", self.source_type),
        };
        let present = |v: &Option<String>| v.as_deref().is_some_and(|s| !s.trim().is_empty());
        if self.id.is_empty() {
            return Err(Error::Document {
                id: String::new(),
                message: "empty id".into(),
            });
        }
        match self.source_type {
            SourceType::Scientific if !present(&self.doi) => Err(missing("doi")),
            SourceType::Ngo if !present(&self.website) => Err(missing("website")),
            SourceType::Upload if !present(&self.filename) => Err(missing("filename")),
            _ => Ok(()),
        }
    }

    /// Where a reader can find the original text: a DOI resolver URL for
    /// publications, the NGO website, or the uploaded file name.
    pub fn source_link(&self) -> String {
        match self.source_type {
            SourceType::Scientific => {
                format!("https://doi.org/{}", self.doi.as_deref().unwrap_or_default())
            }
            SourceType::Ngo => self.website.clone().unwrap_or_default(),
            SourceType::Upload => self.filename.clone().unwrap_or_default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DocumentFormat {
    Jsonl,
    Txt,
}

/// Loads documents from a JSON Lines file, or from one `.txt` file / a
/// directory of `.txt` files (each becoming an upload document).
pub fn load_documents(path: impl AsRef<Path>, format: DocumentFormat) -> Result<Vec<Document>> {
    let path = path.as_ref();
    let docs = match format {
        DocumentFormat::Jsonl => {
            let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
            let docs: Vec<Document> = crate::io::parse_jsonl(BufReader::new(file), path)?;
            for (i, doc) in docs.iter().enumerate() {
                doc.validate().map_err(|e| Error::Record {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message: e.to_string(),
                })?;
            }
            docs
        }
        DocumentFormat::Txt => {
            let files = if path.is_dir() {
                let mut files: Vec<_> = std::fs::read_dir(path)
                    .map_err(|e| Error::io(path, e))?
                    .filter_map(|e| e.ok().map(|e| e.path()))
                    .filter(|p| p.extension().is_some_and(|x| x == "txt"))
                    .collect();
                files.sort();
                files
            } else {
                vec![path.to_path_buf()]
            };
            let mut docs = Vec::with_capacity(files.len());
            for file in files {
                let text = std::fs::read_to_string(&file).map_err(|e| Error::io(&file, e))?;
                let name = file
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default();
                docs.push(Document::upload(&name, text));
            }
            docs
        }
    };
    let mut seen = HashSet::new();
    for doc in &docs {
        if !seen.insert(doc.id.as_str()) {
            return Err(Error::Document {
                id: doc.id.clone(),
                message: "duplicate document id".into(),
            });
        }
    }
    Ok(docs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn two_line_jsonl() {
        let f = write(concat!(
            r#"{"id":"d1","title":"A","source_type":"scientific","doi":"10.1/x","text":"Hi."}"#,
            "\n",
            r#"{"id":"d2","title":"B","source_type":"ngo","website":"https://ngo.example","text":"Yo."}"#,
            "\n"
        ));
        let docs = load_documents(f.path(), DocumentFormat::Jsonl).unwrap();
        assert_eq!(docs.len(), 2);
        assert_eq!(docs[0].id, "d1");
        assert_eq!(docs[1].id, "d2");
    }

    #[test]
    fn empty_file_gives_no_documents() {
        let f = write("");
        assert!(load_documents(f.path(), DocumentFormat::Jsonl).unwrap().is_empty());
    }

    #[test]
    fn scientific_without_doi_is_rejected_with_line() {
        let f = write(concat!(
            r#"{"id":"ok","title":"A","source_type":"upload","filename":"a.txt","text":"x"}"#,
            "\n",
            r#"{"id":"bad","title":"B","source_type":"scientific","text":"x"}"#,
            "\n"
        ));
        let err = load_documents(f.path(), DocumentFormat::Jsonl).unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::Record { line: 2, .. }), "{msg}");
        assert!(msg.contains("doi"), "{msg}");
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let f = write("{\"id\":\n");
        match load_documents(f.path(), DocumentFormat::Jsonl) {
            Err(Error::Record { line, .. }) => assert_eq!(line, 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn duplicate_ids_rejected() {
        let rec = r#"{"id":"d","title":"A","source_type":"upload","filename":"a.txt","text":"x"}"#;
        let f = write(&format!("{rec}\n{rec}\n"));
        assert!(load_documents(f.path(), DocumentFormat::Jsonl).is_err());
    }

    #[test]
    fn txt_directory_one_document_per_file() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("b.txt"), "Second.").unwrap();
        std::fs::write(dir.path().join("a.txt"), "First.").unwrap();
        std::fs::write(dir.path().join("skip.md"), "no").unwrap();
        let docs = load_documents(dir.path(), DocumentFormat::Txt).unwrap();
        assert_eq!(docs.len(), 2);
        assert_eq!(docs[0].filename.as_deref(), Some("a.txt"));
        assert_eq!(docs[0].source_type, SourceType::Upload);
    }

    #[test]
    fn unreadable_path() {
        assert!(matches!(
            load_documents("/nonexistent/x.jsonl", DocumentFormat::Jsonl),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn source_links() {
        let mut d = Document::upload("report.txt", String::new());
        assert_eq!(d.source_link(), "report.txt");
        d.source_type = SourceType::Scientific;
        d.doi = Some("10.1234/abc".into());
        assert_eq!(d.source_link(), "https://doi.org/10.1234/abc");
        d.source_type = SourceType::Ngo;
        d.website = Some("https://cleanclothes.example".into());
        assert_eq!(d.source_link(), "https://cleanclothes.example");
    }
}
