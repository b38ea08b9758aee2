use std::collections::BTreeMap;
use std::io::{Read, Write};

use chrono::{Datelike, Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use super::BlockLength;
use crate::cluster::{kmeans, nearest_cluster, Clustering};
use crate::data::{DayVector, INTERVALS_PER_DAY};
use crate::error::{Error, Result};
use crate::point_models::ResidualMatrix;

/// Per-day residual vectors used as the bootstrap population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualMemory {
    entries: BTreeMap<usize, Vec<f64>>,
    block_length: BlockLength,
}

impl ResidualMemory {
    pub fn new(days: impl IntoIterator<Item = DayVector>, block_length: BlockLength) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for v in days {
            if v.values.len() != INTERVALS_PER_DAY {
                return Err(Error::InvalidArgument(format!(
                    "residual day {} has {} values",
                    v.day,
                    v.values.len()
                )));
            }
            if v.values.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite(format!("residuals of day {}", v.day)));
            }
            if entries.insert(v.day, v.values).is_some() {
                return Err(Error::InvalidArgument(format!("day {} appears twice", v.day)));
            }
        }
        if entries.is_empty() {
            return Err(Error::Empty("residual memory".into()));
        }
        Ok(Self {
            entries,
            block_length,
        })
    }

    pub fn from_residuals(residuals: ResidualMatrix, block_length: BlockLength) -> Result<Self> {
        Self::new(residuals.days, block_length)
    }

    pub fn block_length(&self) -> BlockLength {
        self.block_length
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, day: usize) -> Option<&[f64]> {
        self.entries.get(&day).map(Vec::as_slice)
    }

    pub fn days(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.keys().copied()
    }

    /// All residual vectors in ascending day order.
    pub fn pool(&self) -> Vec<&[f64]> {
        self.entries.values().map(Vec::as_slice).collect()
    }

    fn replace(&mut self, day: usize, values: Vec<f64>) {
        self.entries.insert(day, values);
    }
}

/// Residual memory partitioned by a k-means clustering of the same days'
/// demand vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteredMemory {
    memory: ResidualMemory,
    demand: BTreeMap<usize, Vec<f64>>,
    clustering: Clustering,
    /// Calendar date of day index 0, used to align test days with memory days.
    origin: NaiveDate,
}

impl ClusteredMemory {
    /// Cluster the demand vectors into `n_clusters` groups and partition `memory` accordingly.
    pub fn build(
        memory: ResidualMemory,
        demand: Vec<DayVector>,
        n_clusters: usize,
        seed: u64,
        origin: NaiveDate,
    ) -> Result<Self> {
        let clustering = kmeans(&demand, n_clusters, seed)?;
        Self::from_parts(memory, demand, clustering, origin)
    }

    pub fn from_parts(
        memory: ResidualMemory,
        demand: Vec<DayVector>,
        clustering: Clustering,
        origin: NaiveDate,
    ) -> Result<Self> {
        let demand: BTreeMap<usize, Vec<f64>> = demand.into_iter().map(|v| (v.day, v.values)).collect();
        let memory_days: Vec<usize> = memory.days().collect();
        let demand_days: Vec<usize> = demand.keys().copied().collect();
        let clustered_days: Vec<usize> = clustering.assignment.keys().copied().collect();
        if memory_days != demand_days || memory_days != clustered_days {
            return Err(Error::InvalidArgument(
                "memory, demand and clustering must cover the same days".into(),
            ));
        }
        Ok(Self {
            memory,
            demand,
            clustering,
            origin,
        })
    }

    pub fn memory(&self) -> &ResidualMemory {
        &self.memory
    }

    pub fn clustering(&self) -> &Clustering {
        &self.clustering
    }

    pub fn origin(&self) -> NaiveDate {
        self.origin
    }

    pub fn demand(&self, day: usize) -> Option<&[f64]> {
        self.demand.get(&day).map(Vec::as_slice)
    }

    /// Residual vectors of cluster `label`, ascending by day.
    pub fn partition(&self, label: usize) -> Vec<&[f64]> {
        self.clustering
            .assignment
            .iter()
            .filter(|&(_, &l)| l == label)
            .filter_map(|(&day, _)| self.memory.get(day))
            .collect()
    }

    /// Training day that test day `day` overwrites: the latest earlier memory
    /// day with the same month and day of month (29 Feb maps to 28 Feb).
    pub fn aligned_day(&self, day: usize) -> Option<usize> {
        let date = self.origin + Duration::days(day as i64);
        let (month, dom) = match (date.month(), date.day()) {
            (2, 29) => (2, 28),
            md => md,
        };
        self.memory
            .days()
            .filter(|&d| d < day)
            .filter(|&d| {
                let dd = self.origin + Duration::days(d as i64);
                dd.month() == month && dd.day() == dom
            })
            .max()
    }

    /// Overwrite the calendar-aligned training day with test day `day`'s
    /// residuals and demand, or add `day` itself when no earlier day shares
    /// its date. Reclustering refreshes centroids and membership; without it
    /// the partition is unchanged apart from an added day joining its nearest
    /// centroid. Returns the memory day written.
    pub fn update_memory(
        &mut self,
        day: usize,
        residuals: &[f64],
        demand: &[f64],
        recluster: bool,
    ) -> Result<usize> {
        if self.memory.get(day).is_some() {
            return Err(Error::InvalidArgument(format!("day {day} is already in memory")));
        }
        for (name, v) in [("residuals", residuals), ("demand", demand)] {
            if v.len() != INTERVALS_PER_DAY {
                return Err(Error::InvalidArgument(format!("{name} of day {day} has {} values", v.len())));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite(format!("{name} of day {day}")));
            }
        }
        let target = match self.aligned_day(day) {
            Some(target) => target,
            None => {
                let label = nearest_cluster(&self.clustering, demand)?;
                self.clustering.assignment.insert(day, label);
                day
            }
        };
        self.memory.replace(target, residuals.to_vec());
        self.demand.insert(target, demand.to_vec());
        if recluster {
            self.recluster()?;
        }
        Ok(target)
    }

    /// Re-run k-means on the current demand vectors with the original cluster count and seed.
    pub fn recluster(&mut self) -> Result<()> {
        let vectors: Vec<DayVector> = self
            .demand
            .iter()
            .map(|(&day, v)| DayVector {
                day,
                values: v.clone(),
            })
            .collect();
        self.clustering = kmeans(&vectors, self.clustering.n_clusters, self.clustering.seed)?;
        Ok(())
    }

    pub fn save_json<W: Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer_pretty(
            writer,
            &MemoryDocument {
                format_version: MEMORY_FORMAT_VERSION,
                memory: self.clone(),
            },
        )?;
        Ok(())
    }

    pub fn load_json<R: Read>(reader: R) -> Result<Self> {
        let doc: MemoryDocument = serde_json::from_reader(reader)?;
        if doc.format_version != MEMORY_FORMAT_VERSION {
            return Err(Error::Version {
                expected: MEMORY_FORMAT_VERSION,
                found: doc.format_version,
            });
        }
        let m = doc.memory;
        let demand = m
            .demand
            .into_iter()
            .map(|(day, values)| DayVector { day, values })
            .collect();
        Self::from_parts(m.memory, demand, m.clustering, m.origin)
    }
}

const MEMORY_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct MemoryDocument {
    format_version: u32,
    memory: ClusteredMemory,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn origin() -> NaiveDate {
        NaiveDate::from_ymd_opt(2021, 1, 1).unwrap()
    }

    fn memory_of(days: usize) -> ClusteredMemory {
        let residuals: Vec<DayVector> = (0..days)
            .map(|d| DayVector { day: d, values: vec![d as f64; 96] })
            .collect();
        let demand: Vec<DayVector> = (0..days)
            .map(|d| DayVector { day: d, values: vec![if d % 2 == 0 { 1.0 } else { 50.0 }; 96] })
            .collect();
        let memory = ResidualMemory::new(residuals, BlockLength::default()).unwrap();
        ClusteredMemory::build(memory, demand, 2, 9, origin()).unwrap()
    }

    #[test]
    fn partitions_cover_memory() {
        let m = memory_of(10);
        let sizes: Vec<usize> = (0..2).map(|k| m.partition(k).len()).collect();
        assert_eq!(sizes.iter().sum::<usize>(), 10);
        for (k, members) in m.clustering().members().iter().enumerate() {
            assert_eq!(members.len(), m.partition(k).len());
        }
    }

    #[test]
    fn calendar_alignment() {
        let m = memory_of(365);
        // 2022-01-05 is day 369; it replaces 2021-01-05, day 4.
        assert_eq!(m.aligned_day(369), Some(4));
        // 2021 has no 29 Feb; 2024-02-29 would map to 28 Feb.
        let leap = NaiveDate::from_ymd_opt(2024, 2, 29).unwrap();
        let day = (leap - origin()).num_days() as usize;
        assert_eq!(m.aligned_day(day), Some(58));
    }

    #[test]
    fn replace_then_query() {
        let mut m = memory_of(365);
        let z = vec![-3.5; 96];
        let target = m.update_memory(369, &z, &[1.0; 96], false).unwrap();
        assert_eq!(target, 4);
        assert_eq!(m.memory().get(4).unwrap(), z.as_slice());
        assert_eq!(m.memory().len(), 365);
    }

    #[test]
    fn replacing_with_same_values_is_a_no_op() {
        let mut m = memory_of(365);
        let before = m.clone();
        let z = m.memory().get(4).unwrap().to_vec();
        let y = m.demand(4).unwrap().to_vec();
        m.update_memory(369, &z, &y, false).unwrap();
        assert_eq!(m, before);
        m.update_memory(369, &z, &y, true).unwrap();
        assert_eq!(m.memory(), before.memory());
        assert_eq!(m.clustering(), before.clustering());
    }

    #[test]
    fn cardinality_is_preserved() {
        let mut m = memory_of(365);
        for day in 365..455 {
            m.update_memory(day, &[0.5; 96], &[10.0; 96], day % 7 == 0).unwrap();
        }
        assert_eq!(m.memory().len(), 365);
        assert_eq!(m.clustering().assignment.len(), 365);
    }

    #[test]
    fn unmapped_day_is_added() {
        let mut m = memory_of(10);
        let target = m.update_memory(40, &[0.5; 96], &[0.0; 96], false).unwrap();
        assert_eq!(target, 40);
        assert_eq!(m.memory().len(), 11);
        assert_eq!(m.memory().get(40).unwrap(), &[0.5; 96][..]);
        assert!(m.clustering().label_of(40).is_some());
        assert!(m.update_memory(40, &[0.5; 96], &[0.0; 96], false).is_err());
    }

    #[test]
    fn snapshot_round_trip() {
        let m = memory_of(12);
        let mut buf = Vec::new();
        m.save_json(&mut buf).unwrap();
        assert_eq!(ClusteredMemory::load_json(buf.as_slice()).unwrap(), m);
    }
}
