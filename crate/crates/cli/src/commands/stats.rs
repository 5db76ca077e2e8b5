use std::collections::BTreeMap;
use std::path::PathBuf;

use tabqa_core::dataset::{corpus_stats, CorpusStats};

use crate::error::CliError;
use crate::io::write_json;
use crate::records::{parse_table, read_documents, read_questions};

#[derive(Debug, Clone)]
pub struct StatsArgs {
    pub triples: PathBuf,
    pub docs: Option<PathBuf>,
    /// Also write the statistics as JSON here.
    pub out: Option<PathBuf>,
}

/// Corpus statistics over triples; token counts need the documents.
pub fn cmd_stats(args: &StatsArgs) -> Result<CorpusStats, CliError> {
    let records = read_questions(&args.triples)?;
    let mut tables = Vec::with_capacity(records.len());
    for (line, record) in &records {
        let Some(html) = &record.table_html else {
            return Err(CliError::input(
                &args.triples,
                Some(*line),
                Some("table_html"),
                "missing field `table_html`",
            ));
        };
        tables.push(parse_table(&args.triples, *line, html)?);
    }
    let tokens: Option<BTreeMap<String, usize>> = match &args.docs {
        Some(path) => Some(
            read_documents(path)?
                .into_iter()
                .map(|(_, d)| (d.doc_id.clone(), d.token_count()))
                .collect(),
        ),
        None => None,
    };
    let doc_ids: Vec<&str> = records.iter().map(|(_, r)| r.doc_id.as_str()).collect();
    let stats = corpus_stats(&tables, &doc_ids, tokens.as_ref());
    if let Some(out) = &args.out {
        write_json(out, &stats)?;
    }
    Ok(stats)
}

pub fn stats_text(stats: &CorpusStats) -> String {
    let mut out = String::new();
    out.push_str(&format!("Triples              {}\n", stats.triples));
    if let Some(t) = stats.mean_input_tokens {
        out.push_str(&format!("Mean input tokens    {t:.2}\n"));
    }
    out.push_str(&format!("Mean rows            {:.2}\n", stats.mean_rows));
    out.push_str(&format!("Mean columns         {:.2}\n", stats.mean_cols));
    out.push_str(&format!("Flat tables          {}\n", stats.flat_tables));
    out.push_str(&format!("Hierarchical tables  {}\n", stats.hierarchical_tables));
    out
}
