use std::collections::{HashMap, HashSet};
use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::TrainConfig;
use crate::bt::pairwise_prob;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureItem {
    pub id: String,
    pub group: String,
    pub features: Vec<f64>,
    /// Fitted Bradley-Terry strength of this item within its group.
    pub survey_gamma: f64,
}

impl FeatureItem {
    pub fn new(
        id: impl Into<String>,
        group: impl Into<String>,
        features: Vec<f64>,
        survey_gamma: f64,
    ) -> Result<Self> {
        if features.iter().any(|f| !f.is_finite()) {
            return Err(Error::domain("features must be finite"));
        }
        if !(survey_gamma.is_finite() && survey_gamma > 0.0) {
            return Err(Error::domain(format!("survey gamma {survey_gamma} must be positive")));
        }
        Ok(Self { id: id.into(), group: group.into(), features, survey_gamma })
    }
}

/// Items compared against each other in the survey.
#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    pub id: String,
    pub items: Vec<FeatureItem>,
}

impl Group {
    pub fn new(id: impl Into<String>, items: Vec<FeatureItem>) -> Result<Self> {
        let id = id.into();
        let mut seen = HashSet::new();
        for item in &items {
            if item.group != id {
                return Err(Error::domain(format!(
                    "item {} belongs to group {}, not {id}",
                    item.id, item.group
                )));
            }
            if !seen.insert(item.id.as_str()) {
                return Err(Error::domain(format!("duplicate item {} in group {id}", item.id)));
            }
        }
        Ok(Self { id, items })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn log_gammas(&self) -> Vec<f64> {
        self.items.iter().map(|i| i.survey_gamma.ln()).collect()
    }
}

/// One ordered training pair and its survey winning probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairSample<'a> {
    pub left: &'a FeatureItem,
    pub right: &'a FeatureItem,
    pub target_prob: f64,
}

impl<'a> PairSample<'a> {
    pub fn new(left: &'a FeatureItem, right: &'a FeatureItem) -> Result<Self> {
        if left.group != right.group {
            return Err(Error::domain("pair items must share a group"));
        }
        if left.id == right.id {
            return Err(Error::domain("pair items must differ"));
        }
        let target_prob = pairwise_prob(left.survey_gamma, right.survey_gamma)?;
        Ok(Self { left, right, target_prob })
    }
}

/// Every unordered combination of two items in the group, each once, with
/// the earlier item on the left.
pub fn enumerate_pairs(group: &Group) -> Result<Vec<PairSample<'_>>> {
    if group.len() < 2 {
        return Err(Error::domain(format!(
            "group {} has {} item(s); need at least 2",
            group.id,
            group.len()
        )));
    }
    let items = &group.items;
    let mut out = Vec::with_capacity(items.len() * (items.len() - 1) / 2);
    for i in 0..items.len() {
        for j in i + 1..items.len() {
            out.push(PairSample::new(&items[i], &items[j])?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit {
    pub train: Vec<Group>,
    pub validation: Vec<Group>,
    pub test: Vec<Group>,
}

/// Partitions whole groups by a seeded shuffle. Validation and test sizes are
/// `floor(ratio * n)`; the remainder goes to training.
pub fn split_dataset(groups: &[Group], config: &TrainConfig) -> Result<DatasetSplit> {
    let (_, val_ratio, test_ratio) = config.split_ratios;
    let n = groups.len();
    // small epsilon so that e.g. 0.2 * 10 is not floored to 1
    let n_val = (val_ratio * n as f64 + 1e-9).floor() as usize;
    let n_test = (test_ratio * n as f64 + 1e-9).floor() as usize;
    let n_train = n.saturating_sub(n_val + n_test);
    if n_train == 0 || n_val == 0 || n_test == 0 {
        return Err(Error::domain(format!(
            "{n} groups cannot fill train/validation/test splits ({n_train}/{n_val}/{n_test})"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(config.seed));
    let pick = |idx: &[usize]| idx.iter().map(|&i| groups[i].clone()).collect::<Vec<_>>();
    Ok(DatasetSplit {
        train: pick(&order[..n_train]),
        validation: pick(&order[n_train..n_train + n_val]),
        test: pick(&order[n_train + n_val..]),
    })
}

/// Groups of feature items sharing one feature dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub dim: usize,
    pub groups: Vec<Group>,
}

impl Dataset {
    pub fn new(groups: Vec<Group>) -> Result<Self> {
        let dim = groups
            .iter()
            .flat_map(|g| g.items.first())
            .map(|i| i.features.len())
            .next()
            .ok_or_else(|| Error::domain("dataset has no items"))?;
        for item in groups.iter().flat_map(|g| &g.items) {
            if item.features.len() != dim {
                return Err(Error::Dimension { expected: dim, found: item.features.len() });
            }
        }
        Ok(Self { dim, groups })
    }

    /// Reads `group,item,gamma,f0,...` records. Items of a group need not be
    /// contiguous; groups keep their order of first appearance.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).flexible(true).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.len() < 4 || &headers[0] != "group" || &headers[1] != "item" || &headers[2] != "gamma" {
            return Err(Error::Record {
                record: 0,
                message: "header must be group,item,gamma followed by at least one feature column".into(),
            });
        }
        let dim = headers.len() - 3;
        let mut groups: Vec<(String, Vec<FeatureItem>)> = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        for (n, record) in rdr.records().enumerate() {
            let record_no = n as u64 + 1;
            let bad = |message: String| Error::Record { record: record_no, message };
            let record = record?;
            if record.len() != headers.len() {
                return Err(bad(format!("expected {} fields, found {}", headers.len(), record.len())));
            }
            let num = |k: usize| -> Result<f64> {
                record[k].parse::<f64>().map_err(|_| {
                    bad(format!("field {} ({}) is not a number: {:?}", k + 1, &headers[k], &record[k]))
                })
            };
            let gamma = num(2)?;
            let features = (3..3 + dim).map(num).collect::<Result<Vec<_>>>()?;
            let item =
                FeatureItem::new(&record[1], &record[0], features, gamma).map_err(|e| bad(e.to_string()))?;
            let slot = *index.entry(record[0].to_string()).or_insert_with(|| {
                groups.push((record[0].to_string(), Vec::new()));
                groups.len() - 1
            });
            groups[slot].1.push(item);
        }
        let groups =
            groups.into_iter().map(|(id, items)| Group::new(id, items)).collect::<Result<Vec<_>>>()?;
        Self::new(groups)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header = vec!["group".to_string(), "item".into(), "gamma".into()];
        header.extend((0..self.dim).map(|k| format!("f{k}")));
        wtr.write_record(&header)?;
        for item in self.groups.iter().flat_map(|g| &g.items) {
            let mut row = vec![item.group.clone(), item.id.clone(), format!("{:?}", item.survey_gamma)];
            row.extend(item.features.iter().map(|f| format!("{f:?}")));
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }
}
