use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Result, TriageError};

/// Rows are true categories, columns are predictions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    categories: Vec<String>,
    counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn from_counts(categories: Vec<String>, counts: Vec<Vec<usize>>) -> Result<Self> {
        let c = categories.len();
        if c == 0 {
            return Err(TriageError::invalid("confusion matrix needs at least one category"));
        }
        if counts.len() != c || counts.iter().any(|r| r.len() != c) {
            return Err(TriageError::invalid(format!(
                "confusion matrix must be {c}x{c}"
            )));
        }
        Ok(ConfusionMatrix { categories, counts })
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn counts(&self) -> &[Vec<usize>] {
        &self.counts
    }

    pub fn get(&self, truth: usize, predicted: usize) -> usize {
        self.counts[truth][predicted]
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> usize {
        (0..self.counts.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn support(&self, class: usize) -> usize {
        self.counts[class].iter().sum()
    }

    pub fn predicted(&self, class: usize) -> usize {
        self.counts.iter().map(|r| r[class]).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let header = std::iter::once("").chain(self.categories.iter().map(String::as_str));
        w.write_record(header).expect("in-memory write");
        for (name, row) in self.categories.iter().zip(&self.counts) {
            let mut rec = vec![name.clone()];
            rec.extend(row.iter().map(usize::to_string));
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(text.as_bytes());
        let bad = |record: usize, message: String| TriageError::Record { record, message };
        let header = r.headers().map_err(|e| bad(1, e.to_string()))?.clone();
        let categories: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let mut counts = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| bad(i + 2, e.to_string()))?;
            if rec.get(0) != categories.get(i).map(String::as_str) {
                return Err(bad(i + 2, "row label does not match header".into()));
            }
            let row = rec
                .iter()
                .skip(1)
                .map(|v| v.trim().parse::<usize>().map_err(|e| bad(i + 2, format!("{v:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            counts.push(row);
        }
        ConfusionMatrix::from_counts(categories, counts)
    }

    pub fn to_ascii(&self) -> String {
        let corner = "true \\ pred";
        let label_w = self
            .categories
            .iter()
            .map(String::len)
            .chain([corner.len()])
            .max()
            .unwrap_or(0);
        let col_w: Vec<usize> = (0..self.categories.len())
            .map(|j| {
                let widest = self.counts.iter().map(|r| r[j].to_string().len()).max().unwrap_or(1);
                widest.max(self.categories[j].len())
            })
            .collect();
        let mut out = format!("{corner:<label_w$}");
        for (name, w) in self.categories.iter().zip(&col_w) {
            write!(out, " | {name:>w$}").unwrap();
        }
        out.push('\n');
        let rule_len = out.len() - 1;
        out.push_str(&"-".repeat(rule_len));
        out.push('\n');
        for (name, row) in self.categories.iter().zip(&self.counts) {
            write!(out, "{name:<label_w$}").unwrap();
            for (v, w) in row.iter().zip(&col_w) {
                write!(out, " | {v:>w$}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn render(&self, format: MatrixFormat) -> String {
        match format {
            MatrixFormat::Csv => self.to_csv(),
            MatrixFormat::Ascii => self.to_ascii(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    Csv,
    Ascii,
}

impl FromStr for MatrixFormat {
    type Err = TriageError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(MatrixFormat::Csv),
            "ascii" => Ok(MatrixFormat::Ascii),
            other => Err(TriageError::invalid(format!("unknown matrix format {other:?}"))),
        }
    }
}

pub fn render_confusion(cm: &ConfusionMatrix, format: MatrixFormat) -> String {
    cm.render(format)
}

pub fn confusion<S: AsRef<str>>(
    y_true: &[S],
    y_pred: &[S],
    categories: &[String],
) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(TriageError::Dimension {
            expected: y_true.len(),
            actual: y_pred.len(),
        });
    }
    let index = |label: &str| {
        categories
            .iter()
            .position(|c| c == label)
            .ok_or_else(|| TriageError::UnknownCategory(label.to_string()))
    };
    let mut counts = vec![vec![0; categories.len()]; categories.len()];
    for (t, p) in y_true.iter().zip(y_pred) {
        counts[index(t.as_ref())?][index(p.as_ref())?] += 1;
    }
    ConfusionMatrix::from_counts(categories.to_vec(), counts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub category: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub classes: Vec<ClassMetrics>,
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub total: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

pub fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

pub fn report(cm: &ConfusionMatrix) -> Result<EvalReport> {
    let total = cm.total();
    if total == 0 {
        return Err(TriageError::EmptyCorpus);
    }
    let classes: Vec<ClassMetrics> = cm
        .categories()
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let tp = cm.get(i, i);
            let precision = ratio(tp, cm.predicted(i));
            let recall = ratio(tp, cm.support(i));
            ClassMetrics {
                category: name.clone(),
                precision,
                recall,
                f1: f1_score(precision, recall),
                support: cm.support(i),
            }
        })
        .collect();
    Ok(EvalReport {
        accuracy: ratio(cm.trace(), total),
        macro_precision: mean(classes.iter().map(|c| c.precision)),
        macro_recall: mean(classes.iter().map(|c| c.recall)),
        macro_f1: mean(classes.iter().map(|c| c.f1)),
        classes,
        total,
    })
}

impl EvalReport {
    /// Two-decimal text table: precision, recall, f1-score, support.
    pub fn to_text(&self) -> String {
        let w = self
            .classes
            .iter()
            .map(|c| c.category.len())
            .chain([9])
            .max()
            .unwrap();
        let mut out = format!(
            "{:>w$} {:>9} {:>9} {:>9} {:>9}\n\n",
            "", "precision", "recall", "f1-score", "support"
        );
        for c in &self.classes {
            writeln!(
                out,
                "{:>w$} {:>9.2} {:>9.2} {:>9.2} {:>9}",
                c.category, c.precision, c.recall, c.f1, c.support
            )
            .unwrap();
        }
        out.push('\n');
        writeln!(out, "{:>w$} {:>9} {:>9} {:>9.2} {:>9}", "accuracy", "", "", self.accuracy, self.total).unwrap();
        writeln!(
            out,
            "{:>w$} {:>9.2} {:>9.2} {:>9.2} {:>9}",
            "macro avg", self.macro_precision, self.macro_recall, self.macro_f1, self.total
        )
        .unwrap();
        out
    }

    /// Full-precision CSV with the same rows as the text table.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["class", "precision", "recall", "f1-score", "support"])
            .expect("in-memory write");
        for c in &self.classes {
            w.write_record([
                c.category.clone(),
                c.precision.to_string(),
                c.recall.to_string(),
                c.f1.to_string(),
                c.support.to_string(),
            ])
            .expect("in-memory write");
        }
        w.write_record(["accuracy", "", "", &self.accuracy.to_string(), &self.total.to_string()])
            .expect("in-memory write");
        w.write_record([
            "macro avg",
            &self.macro_precision.to_string(),
            &self.macro_recall.to_string(),
            &self.macro_f1.to_string(),
            &self.total.to_string(),
        ])
        .expect("in-memory write");
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("c{i}")).collect()
    }

    #[test]
    fn confusion_counts_pairs() {
        let cats = names(3);
        let cm = confusion(&["c0", "c1", "c1", "c2"], &["c0", "c1", "c2", "c2"], &cats).unwrap();
        assert_eq!(cm.counts(), [vec![1, 0, 0], vec![0, 1, 1], vec![0, 0, 1]]);
        assert_eq!(cm.total(), 4);
        assert_eq!(cm.support(1), 2);

        let cm = confusion(&["c0", "c1", "c2"], &["c0", "c0", "c0"], &cats).unwrap();
        assert_eq!(cm.predicted(0), 3);
        assert_eq!(cm.predicted(1) + cm.predicted(2), 0);

        assert!(matches!(
            confusion(&["c0", "zz"], &["c0", "c0"], &cats),
            Err(TriageError::UnknownCategory(_))
        ));
        assert!(confusion(&["c0"], &["c0", "c0"], &cats).is_err());
    }

    #[test]
    fn zero_division_is_zero() {
        let cm = ConfusionMatrix::from_counts(names(2), vec![vec![2, 0], vec![3, 0]]).unwrap();
        let r = report(&cm).unwrap();
        assert_eq!(r.classes[1].precision, 0.0);
        assert_eq!(r.classes[1].recall, 0.0);
        assert_eq!(r.classes[1].f1, 0.0);
        let empty = ConfusionMatrix::from_counts(names(2), vec![vec![0, 0], vec![0, 0]]).unwrap();
        assert!(report(&empty).is_err());
    }

    #[test]
    fn diagonal_is_perfect() {
        let cm = ConfusionMatrix::from_counts(names(3), vec![vec![4, 0, 0], vec![0, 1, 0], vec![0, 0, 9]]).unwrap();
        let r = report(&cm).unwrap();
        assert_eq!(r.accuracy, 1.0);
        assert_eq!((r.macro_precision, r.macro_recall, r.macro_f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn csv_layout_and_round_trip() {
        let cm = ConfusionMatrix::from_counts(vec!["a".into(), "b".into()], vec![vec![1, 0], vec![0, 2]]).unwrap();
        let csv = cm.to_csv();
        assert_eq!(csv, ",a,b\na,1,0\nb,0,2\n");
        assert_eq!(ConfusionMatrix::from_csv(&csv).unwrap(), cm);
        assert!(ConfusionMatrix::from_csv(",a,b\nb,1,0\na,0,2\n").is_err());
    }

    #[test]
    fn ascii_holds_every_count() {
        let cm = ConfusionMatrix::from_counts(names(3), vec![vec![11, 12, 13], vec![14, 15, 16], vec![17, 18, 19]]).unwrap();
        let text = cm.to_ascii();
        for v in 11..=19 {
            assert_eq!(text.matches(&v.to_string()).count(), 1, "{v} in\n{text}");
        }
        assert_eq!(text.lines().count(), 5);
    }

    #[test]
    fn text_report_layout() {
        let cm = ConfusionMatrix::from_counts(vec!["x".into(), "y".into()], vec![vec![1, 1], vec![0, 2]]).unwrap();
        let text = report(&cm).unwrap().to_text();
        let lines: Vec<_> = text.lines().collect();
        assert!(lines[0].contains("precision") && lines[0].ends_with("support"));
        assert!(lines[2].trim_start().starts_with("x      1.00      0.50      0.67         2"));
        assert!(lines.last().unwrap().trim_start().starts_with("macro avg"));
    }

    fn counts_strategy() -> impl Strategy<Value = Vec<Vec<usize>>> {
        (1usize..6).prop_flat_map(|c| proptest::collection::vec(proptest::collection::vec(0usize..20, c), c))
    }

    proptest! {
        #[test]
        fn report_invariants(counts in counts_strategy()) {
            let c = counts.len();
            let cm = ConfusionMatrix::from_counts(names(c), counts).unwrap();
            prop_assume!(cm.total() > 0);
            let r = report(&cm).unwrap();
            for m in &r.classes {
                for v in [m.precision, m.recall, m.f1] {
                    prop_assert!((0.0..=1.0).contains(&v));
                }
            }
            prop_assert_eq!(r.classes.iter().map(|m| m.support).sum::<usize>(), cm.total());
            prop_assert!((r.macro_f1 - mean(r.classes.iter().map(|m| m.f1))).abs() < 1e-12);
            let weighted_recall: f64 = r.classes.iter().map(|m| m.recall * m.support as f64).sum::<f64>() / cm.total() as f64;
            prop_assert!((weighted_recall - r.accuracy).abs() < 1e-12);
            prop_assert_eq!(ConfusionMatrix::from_csv(&cm.to_csv()).unwrap(), cm);
        }
    }
}
