use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::grid::GridSpec;
use crate::synthesis::{SynthesisOutput, TransitionTable};

/// One row of the strategy comparison table.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub strategy: String,
    pub qx_counts: String,
    pub n_grid_star: usize,
    pub n_sym: Option<usize>,
    pub n_cao: Option<usize>,
    pub n_ctr: usize,
    pub cache_min: Option<usize>,
    pub cache_avg: Option<f64>,
    pub cache_median: Option<f64>,
    pub cache_max: Option<usize>,
    pub explored_frac: f64,
    pub path_avg: f64,
    pub path_max: usize,
    pub abstraction_s: f64,
    pub synthesis_s: f64,
    pub total_s: f64,
}

impl Metrics {
    pub fn write_csv(rows: &[Metrics], path: &Path) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_path(path)?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Vec<Metrics>, csv::Error> {
        csv::Reader::from_path(path)?.deserialize().collect()
    }
}

/// Worst-case number of controller steps to the target from each controlled cell, in
/// the order the cells were added. Reach cells count as zero.
pub fn path_lengths(grid: &GridSpec<f64, 3>, table: &TransitionTable, out: &SynthesisOutput) -> Vec<usize> {
    let mut depth = vec![0usize; grid.num_cells()];
    let mut lens = Vec::with_capacity(out.added.len());
    for &c in &out.added {
        let a = out.controller.get(c).expect("added cells are controlled") as usize;
        let mut d = 0;
        grid.for_each_cover(&table.last_box(grid, c, a), |n| {
            d = d.max(depth[n.index()]);
            true
        });
        depth[c.index()] = d + 1;
        lens.push(d + 1);
    }
    lens
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_header_and_empty_fields() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        let row = Metrics { strategy: "0".into(), qx_counts: "5x5x4".into(), n_ctr: 3, ..Default::default() };
        Metrics::write_csv(std::slice::from_ref(&row), &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with(
            "strategy,qx_counts,n_grid_star,n_sym,n_cao,n_ctr,cache_min,cache_avg,cache_median,cache_max,explored_frac,path_avg,path_max,abstraction_s,synthesis_s,total_s\n"
        ));
        assert!(text.contains("0,5x5x4,0,,,3,"));
        assert_eq!(Metrics::read_csv(&p).unwrap(), vec![row]);
    }
}
