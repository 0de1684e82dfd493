use super::data::{enumerate_pairs, Group};
use super::model::{predict_win_prob, ScorerModel};
use crate::error::{Error, Result};
use crate::metrics::{pair_agreement, pearson, relative_error, spearman, PairedScores, PredictionRecord};

#[derive(Debug, Clone, PartialEq)]
pub struct GroupReport {
    pub group: String,
    pub items: usize,
    pub accuracy: f64,
    /// `None` when the correlation is undefined (a constant score vector).
    pub pcc: Option<f64>,
    pub srcc: Option<f64>,
    pub mean_relative_error: f64,
    pub flags: Vec<&'static str>,
}

/// Unweighted means of the per-group metrics. Correlations average only the
/// groups where they are defined.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateReport {
    pub groups: usize,
    pub accuracy: f64,
    pub pcc: Option<f64>,
    pub srcc: Option<f64>,
    pub mean_relative_error: f64,
    pub excluded_pcc: usize,
    pub excluded_srcc: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub groups: Vec<GroupReport>,
    pub aggregate: AggregateReport,
}

pub const REPORT_HEADER: &str = "group,items,accuracy,pcc,srcc,mean_relative_error,flags";

fn evaluate_group(model: &ScorerModel, group: &Group) -> Result<GroupReport> {
    let scores = group.items.iter().map(|i| model.score(&i.features)).collect::<Result<Vec<_>>>()?;
    // PCC is taken against log-strengths, the same scale as model scores.
    let survey = group.log_gammas();
    let (correct, total) = pair_agreement(&survey, &scores)?;
    let paired = PairedScores::new(survey, scores)?;
    let mut flags = Vec::new();
    let pcc = match pearson(&paired) {
        Ok(r) => Some(r),
        Err(Error::UndefinedCorrelation(_)) => {
            flags.push("pcc_undefined");
            None
        }
        Err(e) => return Err(e),
    };
    let srcc = match spearman(&paired) {
        Ok(r) => Some(r),
        Err(Error::UndefinedCorrelation(_)) => {
            flags.push("srcc_undefined");
            None
        }
        Err(e) => return Err(e),
    };
    let pairs = enumerate_pairs(group)?;
    let mut err_sum = 0.0;
    for sample in &pairs {
        let p = predict_win_prob(model, &sample.left.features, &sample.right.features)?;
        err_sum += relative_error(&PredictionRecord::new(p, sample.target_prob)?);
    }
    Ok(GroupReport {
        group: group.id.clone(),
        items: group.len(),
        accuracy: correct as f64 / total as f64,
        pcc,
        srcc,
        mean_relative_error: err_sum / pairs.len() as f64,
        flags,
    })
}

fn mean_defined(values: impl Iterator<Item = Option<f64>>) -> (Option<f64>, usize) {
    let (mut sum, mut n, mut missing) = (0.0, 0usize, 0usize);
    for v in values {
        match v {
            Some(x) => {
                sum += x;
                n += 1;
            }
            None => missing += 1,
        }
    }
    ((n > 0).then(|| sum / n as f64), missing)
}

/// Scores every item and compares against the survey strengths: accuracy in
/// pairs, Pearson and Spearman correlation, and mean relative error of the
/// pairwise winning probabilities.
pub fn evaluate(model: &ScorerModel, groups: &[Group]) -> Result<EvalReport> {
    if groups.is_empty() {
        return Err(Error::domain("no groups to evaluate"));
    }
    let reports = groups.iter().map(|g| evaluate_group(model, g)).collect::<Result<Vec<_>>>()?;
    let n = reports.len() as f64;
    let (pcc, excluded_pcc) = mean_defined(reports.iter().map(|r| r.pcc));
    let (srcc, excluded_srcc) = mean_defined(reports.iter().map(|r| r.srcc));
    let aggregate = AggregateReport {
        groups: reports.len(),
        accuracy: reports.iter().map(|r| r.accuracy).sum::<f64>() / n,
        pcc,
        srcc,
        mean_relative_error: reports.iter().map(|r| r.mean_relative_error).sum::<f64>() / n,
        excluded_pcc,
        excluded_srcc,
    };
    Ok(EvalReport { groups: reports, aggregate })
}

impl EvalReport {
    /// One record per group plus a trailing `aggregate` record.
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:?}")).unwrap_or_default();
        let mut out = format!("{REPORT_HEADER}\n");
        for r in &self.groups {
            out.push_str(&format!(
                "{},{},{:?},{},{},{:?},{}\n",
                csv_field(&r.group),
                r.items,
                r.accuracy,
                opt(r.pcc),
                opt(r.srcc),
                r.mean_relative_error,
                r.flags.join(";")
            ));
        }
        let a = &self.aggregate;
        let mut flags = Vec::new();
        if a.excluded_pcc > 0 {
            flags.push(format!("pcc_excluded={}", a.excluded_pcc));
        }
        if a.excluded_srcc > 0 {
            flags.push(format!("srcc_excluded={}", a.excluded_srcc));
        }
        out.push_str(&format!(
            "aggregate,{},{:?},{},{},{:?},{}\n",
            self.groups.iter().map(|r| r.items).sum::<usize>(),
            a.accuracy,
            opt(a.pcc),
            opt(a.srcc),
            a.mean_relative_error,
            flags.join(";")
        ));
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
