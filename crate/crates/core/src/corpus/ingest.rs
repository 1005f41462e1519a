use std::io::BufRead;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{parse_timestamp, tokenize, Corpus, CorpusError, DocKind, Document, Granularity, TokenizerConfig};

/// Field names used to pull document attributes out of raw JSON records.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub id: String,
    pub authors: String,
    pub timestamp: String,
    pub text: String,
    pub producer: String,
    pub kind: String,
}

impl Default for Schema {
    fn default() -> Self {
        Self {
            id: "id".into(),
            authors: "authors".into(),
            timestamp: "timestamp".into(),
            text: "text".into(),
            producer: "producer".into(),
            kind: "kind".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestOptions {
    pub schema: Schema,
    pub tokenizer: TokenizerConfig,
    pub granularity: Granularity,
    /// Timestamp of bucket 0. Defaults to the earliest document.
    pub epoch: Option<i64>,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            schema: Schema::default(),
            tokenizer: TokenizerConfig::default(),
            granularity: Granularity::Week,
            epoch: None,
        }
    }
}

/// Parses JSON-lines input. Blank lines are ignored; errors carry the 1-based line number.
pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Vec<Value>, CorpusError> {
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|e| CorpusError::InvalidJson {
            line: idx + 1,
            reason: e.to_string(),
        })?;
        records.push(value);
    }
    Ok(records)
}

fn scalar_string(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

struct RecordRef<'a> {
    position: usize,
    value: &'a Value,
    id: Option<String>,
}

impl RecordRef<'_> {
    fn label(&self) -> String {
        match &self.id {
            Some(id) => format!("#{} (id '{}')", self.position, id),
            None => format!("#{}", self.position),
        }
    }

    fn malformed(&self, reason: impl Into<String>) -> CorpusError {
        CorpusError::MalformedRecord {
            record: self.label(),
            reason: reason.into(),
        }
    }

    fn field(&self, name: &str) -> Option<&Value> {
        self.value.get(name).filter(|v| !v.is_null())
    }
}

fn parse_record(rec: &RecordRef<'_>, opts: &IngestOptions) -> Result<Option<Document>, CorpusError> {
    let schema = &opts.schema;
    if !rec.value.is_object() {
        return Err(rec.malformed("record is not a JSON object"));
    }
    let doc_id = rec
        .id
        .clone()
        .ok_or_else(|| rec.malformed(format!("missing field '{}'", schema.id)))?;

    let authors: Vec<String> = match rec.field(&schema.authors) {
        None => return Err(rec.malformed(format!("missing field '{}'", schema.authors))),
        Some(Value::Array(items)) => items
            .iter()
            .map(|v| {
                scalar_string(v)
                    .ok_or_else(|| rec.malformed(format!("field '{}' has a non-scalar entry", schema.authors)))
            })
            .collect::<Result<_, _>>()?,
        Some(v) => vec![scalar_string(v)
            .ok_or_else(|| rec.malformed(format!("field '{}' must be a string or list", schema.authors)))?],
    };
    if authors.is_empty() {
        return Err(rec.malformed(format!("field '{}' is empty", schema.authors)));
    }

    let timestamp = match rec.field(&schema.timestamp) {
        None => return Err(rec.malformed(format!("missing field '{}'", schema.timestamp))),
        Some(Value::Number(n)) => n
            .as_i64()
            .ok_or_else(|| rec.malformed(format!("field '{}' is not an integer", schema.timestamp)))?,
        Some(Value::String(s)) => {
            parse_timestamp(s).ok_or_else(|| rec.malformed(format!("unparsable timestamp '{s}'")))?
        }
        Some(_) => return Err(rec.malformed(format!("field '{}' has the wrong type", schema.timestamp))),
    };

    let text = match rec.field(&schema.text) {
        Some(Value::String(s)) => s.as_str(),
        Some(_) => return Err(rec.malformed(format!("field '{}' must be a string", schema.text))),
        None => return Err(rec.malformed(format!("missing field '{}'", schema.text))),
    };

    let producer_id = rec.field(&schema.producer).and_then(scalar_string);
    let kind = rec
        .field(&schema.kind)
        .and_then(scalar_string)
        .map(|s| DocKind::parse(&s));

    let author_ids: Vec<String> = authors.into_iter().filter(|a| !opts.tokenizer.is_excluded(a)).collect();
    if author_ids.is_empty() {
        return Ok(None);
    }

    Ok(Some(Document {
        doc_id,
        author_ids,
        timestamp,
        tokens: tokenize(text, &opts.tokenizer),
        producer_id,
        kind,
    }))
}

/// Builds a corpus from raw JSON records.
///
/// Excluded authors are dropped from each record's author list; a record
/// left without authors is dropped entirely.
pub fn ingest<'a, I>(records: I, opts: &IngestOptions) -> Result<Corpus, CorpusError>
where
    I: IntoIterator<Item = &'a Value>,
{
    let mut documents = Vec::new();
    let mut any = false;
    for (idx, value) in records.into_iter().enumerate() {
        any = true;
        let rec = RecordRef {
            position: idx + 1,
            value,
            id: value.get(&opts.schema.id).and_then(scalar_string),
        };
        if let Some(doc) = parse_record(&rec, opts)? {
            documents.push(doc);
        }
    }
    if !any {
        return Err(CorpusError::EmptyInput);
    }
    Corpus::from_documents(documents, opts.granularity, opts.epoch)
}
