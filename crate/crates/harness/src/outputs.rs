//! Batch summary files: per-step curve aggregates per strategy, per-run
//! stats, and the cross-strategy comparison table.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use cegt_core::batch::BatchSummary;
use cegt_core::stats::sign_test_p;
use cegt_core::strategy::StrategyKind;
use cegt_core::BatchSummary64;

fn opt_cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Per-step aggregate curves for one strategy, CSV.
pub fn summary_csv(summary: &BatchSummary64) -> String {
    let mut header = String::from(
        "step,sim_time_s,reward_mean,reward_lo,reward_hi,\
         ttc_strict_mean,ttc_strict_lo,ttc_strict_hi,\
         ttc_signed_mean,ttc_signed_lo,ttc_signed_hi",
    );
    for i in 0..summary.n_vehicles {
        write!(
            header,
            ",speed_mean_v{id},speed_lo_v{id},speed_hi_v{id}",
            id = i + 1
        )
        .unwrap();
    }
    let mut out = header;
    out.push('\n');
    for k in 0..summary.n_steps {
        let mut line = format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            k + 1,
            (k + 1) as f64 * summary.dt,
            summary.cumulative_reward.mean[k],
            summary.cumulative_reward.lo[k],
            summary.cumulative_reward.hi[k],
            opt_cell(summary.ttc_strict.mean[k]),
            opt_cell(summary.ttc_strict.lo[k]),
            opt_cell(summary.ttc_strict.hi[k]),
            opt_cell(summary.ttc_signed.mean[k]),
            opt_cell(summary.ttc_signed.lo[k]),
            opt_cell(summary.ttc_signed.hi[k]),
        );
        for band in &summary.speeds {
            write!(line, ",{},{},{}", band.mean[k], band.lo[k], band.hi[k]).unwrap();
        }
        out.push_str(&line);
        out.push('\n');
    }
    out
}

/// Per-run stats for one strategy, CSV.
pub fn runs_csv(summary: &BatchSummary64) -> String {
    let mut out = String::from(
        "run,seed,total_collisions,final_cumulative_reward,below_ttc_fraction,mean_strict_ttc\n",
    );
    for (k, r) in summary.per_run.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            k,
            r.seed,
            r.total_collisions,
            r.final_cumulative_reward,
            r.below_ttc_fraction,
            opt_cell(r.mean_strict_ttc),
        ));
    }
    out
}

/// Cross-strategy comparison table, CSV. Sign-test columns compare each
/// strategy against the first summary's strategy, pairing runs by seed.
pub fn comparison_csv(summaries: &[BatchSummary64]) -> String {
    let mut out = String::from(
        "strategy,runs,collisions_mean,collisions_std,collisions_min,collisions_max,\
         final_reward_mean,below_ttc_fraction_mean,sign_test_p_vs_first\n",
    );
    let reference = summaries.first();
    for s in summaries {
        let final_reward_mean = s
            .per_run
            .iter()
            .map(|r| r.final_cumulative_reward)
            .sum::<f64>()
            / s.n_runs as f64;
        let p = reference
            .filter(|r| r.strategy != s.strategy)
            .map(|r| paired_sign_test(r, s))
            .map(|p| p.to_string())
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            s.strategy,
            s.n_runs,
            s.collisions.mean,
            s.collisions.std,
            s.collisions.min,
            s.collisions.max,
            final_reward_mean,
            s.below_ttc_fraction_mean,
            p,
        ));
    }
    out
}

/// One-sided paired sign test that `reference` has fewer collisions than
/// `other`, pairing runs positionally (batches share their seed layout).
pub fn paired_sign_test(reference: &BatchSummary64, other: &BatchSummary64) -> f64 {
    let mut wins = 0u32;
    let mut losses = 0u32;
    for (a, b) in reference.per_run.iter().zip(other.per_run.iter()) {
        if a.total_collisions < b.total_collisions {
            wins += 1;
        } else if a.total_collisions > b.total_collisions {
            losses += 1;
        }
    }
    sign_test_p(wins, losses)
}

/// Human-readable comparison table for stdout.
pub fn comparison_table(summaries: &[BatchSummary64]) -> String {
    let mut out = format!(
        "{:<12} {:>5} {:>12} {:>12} {:>8} {:>8} {:>16} {:>10}\n",
        "strategy", "runs", "coll_mean", "coll_std", "min", "max", "final_reward", "ttc<thr"
    );
    for s in summaries {
        let final_reward_mean = s
            .per_run
            .iter()
            .map(|r| r.final_cumulative_reward)
            .sum::<f64>()
            / s.n_runs as f64;
        out.push_str(&format!(
            "{:<12} {:>5} {:>12.3} {:>12.3} {:>8} {:>8} {:>16.1} {:>10.4}\n",
            s.strategy.to_string(),
            s.n_runs,
            s.collisions.mean,
            s.collisions.std,
            s.collisions.min,
            s.collisions.max,
            final_reward_mean,
            s.below_ttc_fraction_mean,
        ));
    }
    out
}

pub fn summary_path(out_dir: &Path, strategy: StrategyKind) -> PathBuf {
    out_dir.join(format!("summary_{strategy}.csv"))
}

pub fn runs_path(out_dir: &Path, strategy: StrategyKind) -> PathBuf {
    out_dir.join(format!("runs_{strategy}.csv"))
}

pub fn write_text(path: &Path, text: &str) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let mut f = fs::File::create(path)?;
    f.write_all(text.as_bytes())
}

/// Write the per-strategy summary files for a batch.
pub fn write_batch_files(
    out_dir: &Path,
    summary: &BatchSummary<f64>,
) -> std::io::Result<(PathBuf, PathBuf)> {
    let s_path = summary_path(out_dir, summary.strategy);
    let r_path = runs_path(out_dir, summary.strategy);
    write_text(&s_path, &summary_csv(summary))?;
    write_text(&r_path, &runs_csv(summary))?;
    Ok((s_path, r_path))
}
