//! Batch experiment driver: plans the benchmark figures as grids of
//! trial cells, runs the cells concurrently with per-trial keyed random
//! streams, and reduces the records into the trial and aggregate CSV
//! files.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use belief_bounds::DEFAULT_ENUM_CAP;
use rayon::prelude::*;

use crate::build::{EvidencePolicy, Leak};
use crate::prior::WeightPrior;
use crate::trial::{run_trial, LbMode, TrialRecord, TrialSettings, TRIAL_HEADER};

/// The four benchmark experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    /// Sigmoid accuracy sweep: oracle-checked 8-by-8 networks across a
    /// grid of prior widths, binned by the coupling statistic.
    Fig2,
    /// Sigmoid scaling study: bound spread across sizes at matched
    /// `sigma * sqrt(n)`.
    Fig3,
    /// Noisy-OR accuracy sweep, as fig2 with the activation prior.
    Fig4,
    /// Noisy-OR scaling study across sizes at matched `sqrt(n) / phi`,
    /// evidence pinned to the worst-case all-ones marginal.
    Fig5,
}

impl Figure {
    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
        }
    }

    /// Accuracy sweeps carry the oracle columns; scaling studies do not.
    pub fn oracle(self) -> bool {
        matches!(self, Figure::Fig2 | Figure::Fig4)
    }
}

/// One grid cell: a fully specified trial distribution plus the value it
/// is plotted against.
#[derive(Debug, Clone)]
pub struct CellPlan {
    pub abscissa: f64,
    pub settings: TrialSettings,
}

/// A figure run as requested on the command line.
#[derive(Debug, Clone)]
pub struct FigureJob {
    pub figure: Figure,
    /// Layer sizes; `None` keeps the figure's defaults (8 for accuracy
    /// sweeps; 8, 32, 128 for scaling studies).
    pub sizes: Option<Vec<usize>>,
    pub trials: usize,
    pub base_seed: u64,
    /// Evidence override; `None` keeps the figure's protocol (sampled,
    /// except all-ones for fig5).
    pub evidence: Option<EvidencePolicy>,
    pub leak: Option<Leak>,
    pub lb_mode: LbMode,
    pub quadratic: bool,
    pub expansion_terms: usize,
}

fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| lo * (hi / lo).powf(i as f64 / (count - 1) as f64))
        .collect()
}

/// Prior-parameter grid for the accuracy sweeps.
pub const SWEEP_GRID_POINTS: usize = 12;
/// Matched-coupling abscissas for the sigmoid scaling study.
pub const SIGMOID_SCALING_ABSCISSAS: [f64; 4] = [0.5, 1.0, 2.0, 4.0];
/// Matched-coupling abscissas for the noisy-OR scaling study.
pub const NOISY_OR_SCALING_ABSCISSAS: [f64; 4] = [0.25, 0.5, 1.0, 2.0];

/// Expand a job into its list of cells, validating feasibility.
pub fn plan_cells(job: &FigureJob) -> anyhow::Result<Vec<CellPlan>> {
    if job.trials == 0 {
        bail!("at least one trial per cell is required");
    }
    if job.leak.is_some() && matches!(job.figure, Figure::Fig2 | Figure::Fig3) {
        bail!("a leak node only makes sense for the noisy-OR figures");
    }
    let common = |prior: WeightPrior, n: usize, evidence: EvidencePolicy| TrialSettings {
        prior,
        n,
        evidence: job.evidence.unwrap_or(evidence),
        leak: job.leak,
        lb_mode: job.lb_mode,
        quadratic: job.quadratic,
        expansion_terms: job.expansion_terms,
        oracle: job.figure.oracle(),
    };

    let cells: Vec<CellPlan> = match job.figure {
        Figure::Fig2 | Figure::Fig4 => {
            let n = match job.sizes.as_deref() {
                None | Some([]) => 8,
                Some([n, ..]) => *n,
            };
            if n > DEFAULT_ENUM_CAP {
                bail!(
                    "{} is oracle-checked, so the layer size must stay within \
                     the enumeration cap of {DEFAULT_ENUM_CAP} (got {n})",
                    job.figure.name()
                );
            }
            // The noisy-OR grid stays on the branch where the coupling
            // statistic is monotone in phi: pushing phi below one makes
            // children nearly deterministic, which folds strong-coupling
            // draws back into the low end of the sigma_std axis.
            let grid = match job.figure {
                Figure::Fig2 => log_spaced(0.1, 3.0, SWEEP_GRID_POINTS),
                _ => log_spaced(1.0, 64.0, SWEEP_GRID_POINTS),
            };
            grid.into_iter()
                .map(|p| {
                    let prior = match job.figure {
                        Figure::Fig2 => WeightPrior::Gaussian { sigma: p },
                        _ => WeightPrior::Dirichlet { phi: p },
                    };
                    CellPlan {
                        abscissa: p,
                        settings: common(prior, n, EvidencePolicy::Sampled),
                    }
                })
                .collect()
        }
        Figure::Fig3 | Figure::Fig5 => {
            let sizes = match job.sizes.as_deref() {
                None | Some([]) => vec![8, 32, 128],
                Some(list) => list.to_vec(),
            };
            let mut cells = Vec::new();
            for &n in &sizes {
                if n == 0 {
                    bail!("layer size must be positive");
                }
                let root_n = (n as f64).sqrt();
                match job.figure {
                    Figure::Fig3 => {
                        for &a in &SIGMOID_SCALING_ABSCISSAS {
                            cells.push(CellPlan {
                                abscissa: a,
                                settings: common(
                                    WeightPrior::Gaussian { sigma: a / root_n },
                                    n,
                                    EvidencePolicy::Sampled,
                                ),
                            });
                        }
                    }
                    _ => {
                        for &a in &NOISY_OR_SCALING_ABSCISSAS {
                            cells.push(CellPlan {
                                abscissa: a,
                                settings: common(
                                    WeightPrior::Dirichlet { phi: root_n / a },
                                    n,
                                    EvidencePolicy::Ones,
                                ),
                            });
                        }
                    }
                }
            }
            cells
        }
    };
    Ok(cells)
}

/// Run every cell's trials concurrently. Records come back grouped by
/// cell in plan order, each group in trial order, independent of thread
/// scheduling.
pub fn run_cells(
    cells: &[CellPlan],
    trials: usize,
    base_seed: u64,
) -> anyhow::Result<Vec<Vec<TrialRecord>>> {
    let jobs: Vec<(usize, u64)> = (0..cells.len())
        .flat_map(|c| (0..trials as u64).map(move |t| (c, t)))
        .collect();
    let flat: Vec<TrialRecord> = jobs
        .par_iter()
        .map(|&(c, t)| run_trial(&cells[c].settings, base_seed, c as u64, t))
        .collect::<anyhow::Result<Vec<_>>>()?;
    Ok(flat
        .chunks(trials)
        .map(|chunk| chunk.to_vec())
        .collect())
}

/// One row of an aggregate CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct AggRow {
    pub abscissa: f64,
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub count: usize,
    pub median_rel_err_ub: Option<f64>,
    pub median_rel_err_lb: Option<f64>,
    pub median_gap: Option<f64>,
}

pub const AGG_HEADER: [&str; 7] = [
    "abscissa",
    "bin_lo",
    "bin_hi",
    "count",
    "median_rel_err_ub",
    "median_rel_err_lb",
    "median_gap",
];

/// Median with the even-count halves averaged; `None` on empty input.
pub fn median(mut values: Vec<f64>) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| a.partial_cmp(b).expect("metrics are never NaN"));
    let mid = values.len() / 2;
    Some(if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    })
}

pub const SIGMA_STD_BINS: usize = 20;
pub const SIGMA_STD_MAX: f64 = 0.5;

/// Pool accuracy-sweep records and aggregate them into equal-width bins
/// of the coupling statistic. Rows for empty bins keep their medians
/// missing rather than zero.
pub fn sigma_std_bins<'a, I>(records: I) -> Vec<AggRow>
where
    I: IntoIterator<Item = &'a TrialRecord>,
{
    let width = SIGMA_STD_MAX / SIGMA_STD_BINS as f64;
    let mut ub: Vec<Vec<f64>> = vec![Vec::new(); SIGMA_STD_BINS];
    let mut lb: Vec<Vec<f64>> = vec![Vec::new(); SIGMA_STD_BINS];
    let mut gap: Vec<Vec<f64>> = vec![Vec::new(); SIGMA_STD_BINS];
    let mut count = vec![0usize; SIGMA_STD_BINS];
    for rec in records {
        let Some(s) = rec.sigma_std else { continue };
        let bin = ((s / width) as usize).min(SIGMA_STD_BINS - 1);
        count[bin] += 1;
        if let Some(v) = rec.rel_err_ub {
            ub[bin].push(v);
        }
        if let Some(v) = rec.rel_err_lb {
            lb[bin].push(v);
        }
        if let Some(v) = rec.gap_metric {
            gap[bin].push(v);
        }
    }
    (0..SIGMA_STD_BINS)
        .map(|b| {
            let lo = b as f64 * width;
            AggRow {
                abscissa: lo + 0.5 * width,
                bin_lo: lo,
                bin_hi: lo + width,
                count: count[b],
                median_rel_err_ub: median(std::mem::take(&mut ub[b])),
                median_rel_err_lb: median(std::mem::take(&mut lb[b])),
                median_gap: median(std::mem::take(&mut gap[b])),
            }
        })
        .collect()
}

/// Aggregate a scaling study for one layer size: one row per abscissa,
/// medians taken across that cell's trials.
pub fn abscissa_rows(
    cells: &[CellPlan],
    per_cell: &[Vec<TrialRecord>],
    size: usize,
) -> Vec<AggRow> {
    cells
        .iter()
        .zip(per_cell)
        .filter(|(cell, _)| cell.settings.n == size)
        .map(|(cell, recs)| AggRow {
            abscissa: cell.abscissa,
            bin_lo: cell.abscissa,
            bin_hi: cell.abscissa,
            count: recs.len(),
            median_rel_err_ub: median(
                recs.iter().filter_map(|r| r.rel_err_ub).collect(),
            ),
            median_rel_err_lb: median(
                recs.iter().filter_map(|r| r.rel_err_lb).collect(),
            ),
            median_gap: median(recs.iter().filter_map(|r| r.gap_metric).collect()),
        })
        .collect()
}

fn fmt_f64(v: f64) -> String {
    format!("{v:e}")
}

pub fn write_trial_csv<'a, I>(path: &Path, records: I) -> anyhow::Result<()>
where
    I: IntoIterator<Item = &'a TrialRecord>,
{
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    w.write_record(TRIAL_HEADER)?;
    for rec in records {
        w.write_record(rec.csv_fields())?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_agg_csv(path: &Path, rows: &[AggRow]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    w.write_record(AGG_HEADER)?;
    for row in rows {
        w.write_record([
            fmt_f64(row.abscissa),
            fmt_f64(row.bin_lo),
            fmt_f64(row.bin_hi),
            row.count.to_string(),
            row.median_rel_err_ub.map(fmt_f64).unwrap_or_default(),
            row.median_rel_err_lb.map(fmt_f64).unwrap_or_default(),
            row.median_gap.map(fmt_f64).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Aggregate file path next to the trial file: `x.csv` becomes
/// `x_agg.csv`, or `x_agg_n32.csv` for a per-size aggregate.
pub fn agg_path(trial_path: &Path, size: Option<usize>) -> PathBuf {
    let stem = trial_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("out");
    let name = match size {
        Some(n) => format!("{stem}_agg_n{n}.csv"),
        None => format!("{stem}_agg.csv"),
    };
    trial_path.with_file_name(name)
}

/// Everything a figure run produced, for callers that want to inspect the
/// numbers without re-reading the files.
#[derive(Debug)]
pub struct FigureOutput {
    pub cells: Vec<CellPlan>,
    pub records: Vec<Vec<TrialRecord>>,
    pub trial_path: PathBuf,
    pub agg_paths: Vec<PathBuf>,
}

/// Plan, run, and write out one figure. The trial CSV lands at `out` and
/// the aggregates next to it.
pub fn run_figure(job: &FigureJob, out: &Path) -> anyhow::Result<FigureOutput> {
    let cells = plan_cells(job)?;
    let records = run_cells(&cells, job.trials, job.base_seed)?;
    write_trial_csv(out, records.iter().flatten())?;
    let mut agg_paths = Vec::new();
    if job.figure.oracle() {
        let rows = sigma_std_bins(records.iter().flatten());
        let path = agg_path(out, None);
        write_agg_csv(&path, &rows)?;
        agg_paths.push(path);
    } else {
        let mut sizes: Vec<usize> =
            cells.iter().map(|c| c.settings.n).collect();
        sizes.dedup();
        for size in sizes {
            let rows = abscissa_rows(&cells, &records, size);
            let path = agg_path(out, Some(size));
            write_agg_csv(&path, &rows)?;
            agg_paths.push(path);
        }
    }
    Ok(FigureOutput {
        cells,
        records,
        trial_path: out.to_path_buf(),
        agg_paths,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn job(figure: Figure) -> FigureJob {
        FigureJob {
            figure,
            sizes: None,
            trials: 3,
            base_seed: 5,
            evidence: None,
            leak: None,
            lb_mode: LbMode::Auto,
            quadratic: false,
            expansion_terms: 16,
        }
    }

    #[test]
    fn grids_have_documented_shapes() {
        let f2 = plan_cells(&job(Figure::Fig2)).unwrap();
        assert_eq!(f2.len(), SWEEP_GRID_POINTS);
        assert!((f2[0].abscissa - 0.1).abs() < 1e-12);
        assert!((f2.last().unwrap().abscissa - 3.0).abs() < 1e-12);
        assert!(f2.windows(2).all(|w| w[0].abscissa < w[1].abscissa));
        assert!(f2.iter().all(|c| c.settings.oracle && c.settings.n == 8));

        let f4 = plan_cells(&job(Figure::Fig4)).unwrap();
        assert_eq!(f4.len(), SWEEP_GRID_POINTS);
        assert!((f4[0].abscissa - 1.0).abs() < 1e-12);
        assert!((f4.last().unwrap().abscissa - 64.0).abs() < 1e-12);
        assert!(f4.iter().all(|c| c.settings.oracle && c.settings.n == 8));

        let f5 = plan_cells(&job(Figure::Fig5)).unwrap();
        assert_eq!(f5.len(), 12, "three sizes by four abscissas");
        assert!(f5
            .iter()
            .all(|c| c.settings.evidence == EvidencePolicy::Ones && !c.settings.oracle));
        // Matched coupling: phi = sqrt(n) / abscissa.
        for cell in &f5 {
            let phi = cell.settings.prior.param();
            let expect = (cell.settings.n as f64).sqrt() / cell.abscissa;
            assert!((phi - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn oversized_oracle_figures_are_refused() {
        let mut j = job(Figure::Fig4);
        j.sizes = Some(vec![64]);
        let err = plan_cells(&j).unwrap_err();
        assert!(err.to_string().contains("enumeration cap"));
    }

    #[test]
    fn leak_is_rejected_for_sigmoid_figures() {
        let mut j = job(Figure::Fig3);
        j.leak = Some(Leak { theta: 0.1 });
        assert!(plan_cells(&j).is_err());
    }

    #[test]
    fn median_averages_even_counts() {
        assert_eq!(median(vec![]), None);
        assert_eq!(median(vec![3.0]), Some(3.0));
        assert_eq!(median(vec![1.0, 2.0, 4.0, 8.0]), Some(3.0));
        assert_eq!(median(vec![4.0, 1.0, 2.0]), Some(2.0));
    }

    #[test]
    fn sigma_bins_cover_the_range_and_keep_empties_missing() {
        let mut rec = TrialRecord {
            seed: 0,
            n: 8,
            prior_param: 1.0,
            sigma_std: Some(0.26),
            exact_log_p: Some(-1.0),
            ub_log: -0.9,
            lb_log: -1.1,
            rel_err_ub: Some(0.1),
            rel_err_lb: Some(-0.1),
            gap_metric: Some(0.22),
            sweeps_ub: 1,
            sweeps_lb: 1,
            degenerate: false,
        };
        let rows = sigma_std_bins([&rec.clone()]);
        assert_eq!(rows.len(), SIGMA_STD_BINS);
        let hit = rows.iter().position(|r| r.count == 1).unwrap();
        assert!(rows[hit].bin_lo <= 0.26 && 0.26 < rows[hit].bin_hi);
        assert_eq!(rows[hit].median_rel_err_ub, Some(0.1));
        let empty = &rows[0];
        assert_eq!(empty.count, 0);
        assert_eq!(empty.median_rel_err_ub, None);

        // The boundary value lands in the last bin instead of overflowing.
        rec.sigma_std = Some(0.5);
        let rows = sigma_std_bins([&rec]);
        assert_eq!(rows.last().unwrap().count, 1);
    }

    #[test]
    fn agg_paths_sit_next_to_the_trial_file() {
        let p = Path::new("/tmp/run/fig3.csv");
        assert_eq!(agg_path(p, None), Path::new("/tmp/run/fig3_agg.csv"));
        assert_eq!(
            agg_path(p, Some(32)),
            Path::new("/tmp/run/fig3_agg_n32.csv")
        );
    }

    #[test]
    fn small_fig2_run_produces_consistent_files() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("fig2.csv");
        let mut j = job(Figure::Fig2);
        j.sizes = Some(vec![4]);
        j.trials = 2;
        let result = run_figure(&j, &out).unwrap();
        assert_eq!(result.records.len(), SWEEP_GRID_POINTS);
        assert!(result.records.iter().all(|c| c.len() == 2));
        let trial_text = std::fs::read_to_string(&out).unwrap();
        assert!(trial_text.starts_with(&TRIAL_HEADER.join(",")));
        assert_eq!(trial_text.lines().count(), 1 + SWEEP_GRID_POINTS * 2);
        let agg_text = std::fs::read_to_string(&result.agg_paths[0]).unwrap();
        assert!(agg_text.starts_with(&AGG_HEADER.join(",")));
        assert_eq!(agg_text.lines().count(), 1 + SIGMA_STD_BINS);
    }
}
