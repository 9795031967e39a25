//! Named experiment grids: metric, n-gram and rule-bigram variants crossed
//! with both classifiers.

use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    cross_validate, ClassifierKind, EvaluationReport, PipelineConfig, PipelineError, Resources,
    RuleScope,
};
use crate::corpus::Corpus;
use crate::features::{Metric, NgramMode, RuleMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridTable {
    Table1,
    Table2,
    Table3,
    Table4,
}

impl GridTable {
    pub const ALL: [GridTable; 4] = [
        GridTable::Table1,
        GridTable::Table2,
        GridTable::Table3,
        GridTable::Table4,
    ];

    pub fn title(self) -> &'static str {
        match self {
            GridTable::Table1 => "Accuracy, no preprocessing",
            GridTable::Table2 => "Accuracy, with preprocessing",
            GridTable::Table3 => "Accuracy, bigrams",
            GridTable::Table4 => "Accuracy, rule bigrams",
        }
    }
}

impl FromStr for GridTable {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "table1" => Ok(GridTable::Table1),
            "table2" => Ok(GridTable::Table2),
            "table3" => Ok(GridTable::Table3),
            "table4" => Ok(GridTable::Table4),
            _ => Err(format!("unknown grid {s:?} (expected table1..table4)")),
        }
    }
}

/// One cell: `block` groups rows (empty for single-block tables).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub block: String,
    pub row: String,
    pub classifier: ClassifierKind,
    pub config: PipelineConfig,
}

const CLASSIFIERS: [ClassifierKind; 2] = [ClassifierKind::Svm, ClassifierKind::Nb];

/// Expands a grid into cells, in display order. Hyperparameters, seed and
/// `min_count` come from `base`.
///
/// Tables 2 to 4 enable stop-word removal and stemming. In table 4 the rule
/// mode is taken from `base` when it is not `off`; otherwise presence rows
/// use merged tags and ifrequency rows use signed counts.
pub fn grid_cells(table: GridTable, base: &PipelineConfig) -> Vec<GridCell> {
    let plain = PipelineConfig {
        ngram: NgramMode::Unigrams,
        rule_mode: RuleMode::Off,
        stop_words: table != GridTable::Table1,
        stemming: table != GridTable::Table1,
        ..*base
    };
    let mut cells = Vec::new();
    let mut push = |block: &str, row: &str, config: PipelineConfig| {
        for classifier in CLASSIFIERS {
            cells.push(GridCell {
                block: block.to_string(),
                row: row.to_string(),
                classifier,
                config: PipelineConfig {
                    classifier,
                    ..config
                },
            });
        }
    };
    match table {
        GridTable::Table1 | GridTable::Table2 => {
            for metric in Metric::ALL {
                push("", metric.name(), PipelineConfig { metric, ..plain });
            }
        }
        GridTable::Table3 => {
            for metric in [Metric::Presence, Metric::IFrequency] {
                for (row, ngram) in [
                    ("Unigrams only", NgramMode::Unigrams),
                    ("Bigrams only", NgramMode::Bigrams),
                    ("Unigrams bigrams", NgramMode::UnigramsBigrams),
                ] {
                    push(
                        metric.name(),
                        row,
                        PipelineConfig {
                            metric,
                            ngram,
                            ..plain
                        },
                    );
                }
            }
        }
        GridTable::Table4 => {
            for metric in [Metric::Presence, Metric::IFrequency] {
                let rule_mode = match (base.rule_mode, metric) {
                    (RuleMode::Off, Metric::Presence) => RuleMode::Tag,
                    (RuleMode::Off, _) => RuleMode::SignedCount,
                    (mode, _) => mode,
                };
                push(metric.name(), "Unigram", PipelineConfig { metric, ..plain });
                for (row, rule_scope) in [
                    ("Negations only", RuleScope::Negation),
                    ("Emphasizers only", RuleScope::Emphasis),
                    ("Both", RuleScope::Both),
                ] {
                    push(
                        metric.name(),
                        row,
                        PipelineConfig {
                            metric,
                            rule_mode,
                            rule_scope,
                            ..plain
                        },
                    );
                }
            }
        }
    }
    cells
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCellReport {
    pub block: String,
    pub row: String,
    pub classifier: ClassifierKind,
    pub report: EvaluationReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub table: GridTable,
    pub title: String,
    pub cells: Vec<GridCellReport>,
}

/// Cross-validates every cell of `table`. Without a stop list, the
/// preprocessing tables fall back to stemming only.
pub fn run_grid(
    corpus: &Corpus,
    table: GridTable,
    base: &PipelineConfig,
    resources: &Resources,
    k: usize,
) -> Result<GridReport, PipelineError> {
    let mut cells = grid_cells(table, base);
    if resources.stop_list.is_none() && cells.iter().any(|c| c.config.stop_words) {
        log::warn!("no stop list supplied; {table:?} runs with stemming only");
        for c in &mut cells {
            c.config.stop_words = false;
        }
    }
    let cells = cells
        .into_par_iter()
        .map(|cell| {
            let report = cross_validate(corpus, &cell.config, resources, k)?;
            Ok(GridCellReport {
                block: cell.block,
                row: cell.row,
                classifier: cell.classifier,
                report,
            })
        })
        .collect::<Result<Vec<_>, PipelineError>>()?;
    Ok(GridReport {
        table,
        title: table.title().to_string(),
        cells,
    })
}

impl GridReport {
    /// Distinct `(block, row)` pairs in display order.
    pub fn rows(&self) -> Vec<(&str, &str)> {
        let mut rows: Vec<(&str, &str)> = Vec::new();
        for c in &self.cells {
            let key = (c.block.as_str(), c.row.as_str());
            if !rows.contains(&key) {
                rows.push(key);
            }
        }
        rows
    }

    pub fn cell(
        &self,
        block: &str,
        row: &str,
        classifier: ClassifierKind,
    ) -> Option<&GridCellReport> {
        self.cells
            .iter()
            .find(|c| c.block == block && c.row == row && c.classifier == classifier)
    }

    /// Plain-text table of mean end-to-end accuracies, one section per block
    /// with classifiers as columns.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.title);
        let mut current_block: Option<&str> = None;
        for (block, row) in self.rows() {
            if current_block != Some(block) {
                if current_block.is_some() {
                    out.push('\n');
                }
                let head = if block.is_empty() { "Accuracy" } else { block };
                let _ = write!(out, "{head:<18}");
                for c in CLASSIFIERS {
                    let _ = write!(out, " | {:>6}", c.name());
                }
                out.push('\n');
                let _ = writeln!(out, "{}", "-".repeat(18 + CLASSIFIERS.len() * 9));
                current_block = Some(block);
            }
            let _ = write!(out, "{row:<18}");
            for c in CLASSIFIERS {
                match self.cell(block, row, c) {
                    Some(cell) => {
                        let _ = write!(out, " | {:>6.2}", cell.report.mean_end_to_end_accuracy);
                    }
                    None => {
                        let _ = write!(out, " | {:>6}", "-");
                    }
                }
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_shapes() {
        let base = PipelineConfig::default();
        assert_eq!(grid_cells(GridTable::Table1, &base).len(), 8);
        assert_eq!(grid_cells(GridTable::Table2, &base).len(), 8);
        assert_eq!(grid_cells(GridTable::Table3, &base).len(), 12);
        let t4 = grid_cells(GridTable::Table4, &base);
        assert_eq!(t4.len(), 16);
        for block in ["Presence", "IFrequency"] {
            assert_eq!(t4.iter().filter(|c| c.block == block).count(), 8);
        }
    }

    #[test]
    fn table4_rule_modes() {
        let cells = grid_cells(GridTable::Table4, &PipelineConfig::default());
        for c in &cells {
            let expected = match (c.row.as_str(), c.config.metric) {
                ("Unigram", _) => RuleMode::Off,
                (_, Metric::Presence) => RuleMode::Tag,
                _ => RuleMode::SignedCount,
            };
            assert_eq!(c.config.rule_mode, expected, "{} / {}", c.block, c.row);
        }
        let base = PipelineConfig {
            rule_mode: RuleMode::Tag,
            ..PipelineConfig::default()
        };
        assert!(grid_cells(GridTable::Table4, &base)
            .iter()
            .all(|c| c.row == "Unigram" || c.config.rule_mode == RuleMode::Tag));
    }

    #[test]
    fn table1_has_no_preprocessing() {
        let base = PipelineConfig {
            stop_words: true,
            stemming: true,
            ..PipelineConfig::default()
        };
        assert!(grid_cells(GridTable::Table1, &base)
            .iter()
            .all(|c| !c.config.stop_words && !c.config.stemming));
    }

    #[test]
    fn parse_names() {
        assert_eq!("table3".parse::<GridTable>(), Ok(GridTable::Table3));
        assert!("table5".parse::<GridTable>().is_err());
    }
}
