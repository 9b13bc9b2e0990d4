use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-replica observations of `log U(t, x)` at a fixed list of points.
///
/// Rows are kept sorted by replica id, so a merge is the sorted union and
/// every statistic computed afterwards is independent of merge order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    labels: Vec<f64>,
    replicas: Vec<u64>,
    values: Vec<f64>,
}

impl SampleSet {
    pub fn new(labels: Vec<f64>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Domain("a sample set needs at least one point".into()));
        }
        if labels.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain(format!("non-finite point label in {labels:?}")));
        }
        for (i, a) in labels.iter().enumerate() {
            if labels[..i].contains(a) {
                return Err(Error::Domain(format!("duplicate point label {a}")));
            }
        }
        Ok(Self {
            labels,
            replicas: Vec::new(),
            values: Vec::new(),
        })
    }

    /// Builds a set from `(replica, row)` pairs in any order.
    pub fn from_rows(labels: Vec<f64>, mut rows: Vec<(u64, Vec<f64>)>) -> Result<Self> {
        let mut set = Self::new(labels)?;
        rows.sort_by_key(|r| r.0);
        for (id, row) in rows {
            set.push(id, &row)?;
        }
        Ok(set)
    }

    /// Adds one replica's observations.
    pub fn push(&mut self, replica: u64, row: &[f64]) -> Result<()> {
        let k = self.labels.len();
        if row.len() != k {
            return Err(Error::Contract(format!(
                "row of {} values for {k} points",
                row.len()
            )));
        }
        if let Some(bad) = row.iter().find(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite observation {bad} for replica {replica}")));
        }
        let pos = match self.replicas.binary_search(&replica) {
            Ok(_) => {
                return Err(Error::Contract(format!("replica {replica} already present")));
            }
            Err(pos) => pos,
        };
        self.replicas.insert(pos, replica);
        let at = pos * k;
        self.values.splice(at..at, row.iter().copied());
        Ok(())
    }

    /// Union of two disjoint replica sets over the same points.
    pub fn merge(&self, other: &SampleSet) -> Result<SampleSet> {
        if self.labels != other.labels {
            return Err(Error::Contract(format!(
                "merging sample sets over different points {:?} and {:?}",
                self.labels, other.labels
            )));
        }
        let k = self.labels.len();
        let mut out = SampleSet {
            labels: self.labels.clone(),
            replicas: Vec::with_capacity(self.len() + other.len()),
            values: Vec::with_capacity(self.values.len() + other.values.len()),
        };
        let (mut i, mut j) = (0, 0);
        while i < self.len() || j < other.len() {
            let take_left = match (self.replicas.get(i), other.replicas.get(j)) {
                (Some(a), Some(b)) if a == b => {
                    return Err(Error::Contract(format!("replica {a} present in both sets")));
                }
                (Some(a), Some(b)) => a < b,
                (Some(_), None) => true,
                _ => false,
            };
            if take_left {
                out.replicas.push(self.replicas[i]);
                out.values.extend_from_slice(&self.values[i * k..(i + 1) * k]);
                i += 1;
            } else {
                out.replicas.push(other.replicas[j]);
                out.values.extend_from_slice(&other.values[j * k..(j + 1) * k]);
                j += 1;
            }
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.replicas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.replicas.is_empty()
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn replicas(&self) -> &[u64] {
        &self.replicas
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let k = self.labels.len();
        &self.values[i * k..(i + 1) * k]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.labels.len())
    }

    pub fn label_index(&self, x: f64) -> Result<usize> {
        self.labels
            .iter()
            .position(|&l| (l - x).abs() <= 1e-9 * l.abs().max(1.0))
            .ok_or_else(|| Error::Domain(format!("no observations at x = {x}; points are {:?}", self.labels)))
    }

    pub fn column(&self, index: usize) -> Vec<f64> {
        self.rows().map(|r| r[index]).collect()
    }

    pub fn column_at(&self, x: f64) -> Result<Vec<f64>> {
        Ok(self.column(self.label_index(x)?))
    }

    /// Same replicas restricted to a subset of the points.
    pub fn select(&self, points: &[f64]) -> Result<SampleSet> {
        let idx = points
            .iter()
            .map(|&x| self.label_index(x))
            .collect::<Result<Vec<_>>>()?;
        let mut out = SampleSet::new(idx.iter().map(|&i| self.labels[i]).collect())?;
        out.replicas = self.replicas.clone();
        out.values = self.rows().flat_map(|r| idx.iter().map(move |&i| r[i])).collect();
        Ok(out)
    }

    /// The rows whose replica ids satisfy `keep`.
    pub fn filter_replicas(&self, keep: impl Fn(u64) -> bool) -> SampleSet {
        let mut out = SampleSet {
            labels: self.labels.clone(),
            replicas: Vec::new(),
            values: Vec::new(),
        };
        for (i, &id) in self.replicas.iter().enumerate() {
            if keep(id) {
                out.replicas.push(id);
                out.values.extend_from_slice(self.row(i));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(ids: &[u64]) -> SampleSet {
        SampleSet::from_rows(
            vec![0.0, 2.0],
            ids.iter().map(|&i| (i, vec![i as f64, -(i as f64)])).collect(),
        )
        .unwrap()
    }

    #[test]
    fn rows_are_sorted_by_replica() {
        let s = set(&[5, 1, 3]);
        assert_eq!(s.replicas(), &[1, 3, 5]);
        assert_eq!(s.column_at(2.0).unwrap(), vec![-1.0, -3.0, -5.0]);
    }

    #[test]
    fn contract_violations() {
        let mut s = set(&[1]);
        assert!(matches!(s.push(1, &[0.0, 0.0]), Err(Error::Contract(_))));
        assert!(matches!(s.push(2, &[0.0]), Err(Error::Contract(_))));
        assert!(matches!(s.push(2, &[f64::NAN, 0.0]), Err(Error::Numeric(_))));
        let other = SampleSet::new(vec![0.0, 3.0]).unwrap();
        assert!(s.merge(&other).is_err());
        assert!(s.merge(&set(&[1])).is_err());
        assert!(SampleSet::new(vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn merge_with_empty_is_identity() {
        let s = set(&[4, 2]);
        let e = SampleSet::new(vec![0.0, 2.0]).unwrap();
        assert_eq!(s.merge(&e).unwrap(), s);
        assert_eq!(e.merge(&s).unwrap(), s);
    }

    #[test]
    fn select_keeps_replicas() {
        let s = set(&[1, 2]).select(&[2.0]).unwrap();
        assert_eq!(s.labels(), &[2.0]);
        assert_eq!(s.column(0), vec![-1.0, -2.0]);
    }

    proptest! {
        #[test]
        fn merge_is_associative_and_commutative(ids in proptest::collection::btree_set(0u64..500, 0..60)) {
            let ids: Vec<u64> = ids.into_iter().collect();
            let (a, rest) = ids.split_at(ids.len() / 3);
            let (b, c) = rest.split_at(rest.len() / 2);
            let (a, b, c) = (set(a), set(b), set(c));
            let left = a.merge(&b).unwrap().merge(&c).unwrap();
            let right = a.merge(&b.merge(&c).unwrap()).unwrap();
            prop_assert_eq!(&left, &right);
            prop_assert_eq!(a.merge(&b).unwrap(), b.merge(&a).unwrap());
            prop_assert_eq!(left, set(&ids));
        }
    }
}
