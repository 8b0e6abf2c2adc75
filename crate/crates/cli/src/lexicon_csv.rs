//! Label files: `node_id,lemmas,gloss` with lemmas separated by `;`.

use std::path::Path;

use anyhow::Context;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelRow {
    pub node_id: String,
    pub lemmas: Vec<String>,
    pub gloss: Option<String>,
}

pub fn read(path: &Path) -> anyhow::Result<Vec<LabelRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("{}: row {}", path.display(), i + 2))?;
        let node_id = record.get(0).unwrap_or_default().to_string();
        if node_id.is_empty() {
            continue;
        }
        let lemmas = record
            .get(1)
            .unwrap_or_default()
            .split(';')
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(str::to_string)
            .collect();
        let gloss = record.get(2).filter(|g| !g.is_empty()).map(str::to_string);
        rows.push(LabelRow {
            node_id,
            lemmas,
            gloss,
        });
    }
    Ok(rows)
}
