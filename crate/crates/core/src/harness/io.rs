//! Result files and the summary verifier.
//!
//! Layout of an output directory:
//!
//! - `traces/<scenario>_z<zeta>_r<recovery_days>_s<seed>.csv`: one per-tick
//!   trace per cell;
//! - `summary.csv`: one row per cell;
//! - `aggregate.csv`: mean, min and max over seeds per (scenario, zeta,
//!   recovery_days).
//!
//! Floats are written in their shortest round-trip form, so summaries can be
//! recomputed from traces bit for bit.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::engine::{EpisodeTrace, TickRecord, TRACE_COLUMNS};
use crate::error::{Error, Result};
use crate::harness::{aggregate, AggregateRow, CellKey, CellResult, SummaryRow};

pub const PROVENANCE_COLUMNS: [&str; 4] = ["scenario", "zeta", "recovery_days", "seed"];
pub const SUMMARY_COLUMNS: [&str; 6] = [
    "scenario",
    "zeta",
    "recovery_days",
    "seed",
    "final_cum_infections",
    "final_cum_reward",
];
pub const AGGREGATE_COLUMNS: [&str; 10] = [
    "scenario",
    "zeta",
    "recovery_days",
    "seeds",
    "mean_cum_infections",
    "min_cum_infections",
    "max_cum_infections",
    "mean_cum_reward",
    "min_cum_reward",
    "max_cum_reward",
];

fn provenance(key: &CellKey) -> [String; 4] {
    [
        key.scenario.to_string(),
        key.zeta.to_string(),
        key.recovery_days.to_string(),
        key.seed.to_string(),
    ]
}

pub fn trace_file_name(key: &CellKey) -> String {
    format!("{}_z{}_r{}_s{}.csv", key.scenario, key.zeta, key.recovery_days, key.seed)
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))
}

pub fn write_trace(path: &Path, cell: &CellResult) -> Result<()> {
    let mut w = writer(path)?;
    let fail = |e| Error::csv(path, e);
    let header: Vec<&str> = PROVENANCE_COLUMNS.iter().chain(TRACE_COLUMNS.iter()).copied().collect();
    w.write_record(&header).map_err(fail)?;
    let prov = provenance(&cell.key);
    for r in &cell.trace.records {
        w.write_record(prov.iter().cloned().chain(r.csv_fields())).map_err(fail)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn summary_fields(row: &SummaryRow) -> Vec<String> {
    let mut f = provenance(&row.key).to_vec();
    f.push(row.final_cum_infections.to_string());
    f.push(row.final_cum_reward.to_string());
    f
}

fn aggregate_fields(row: &AggregateRow) -> Vec<String> {
    vec![
        row.scenario.to_string(),
        row.zeta.to_string(),
        row.recovery_days.to_string(),
        row.seeds.to_string(),
        row.cum_infections.mean.to_string(),
        row.cum_infections.min.to_string(),
        row.cum_infections.max.to_string(),
        row.cum_reward.mean.to_string(),
        row.cum_reward.min.to_string(),
        row.cum_reward.max.to_string(),
    ]
}

fn write_rows(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = writer(path)?;
    let fail = |e| Error::csv(path, e);
    w.write_record(header).map_err(fail)?;
    for row in rows {
        w.write_record(&row).map_err(fail)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    write_rows(path, &SUMMARY_COLUMNS, rows.iter().map(summary_fields))
}

pub fn write_aggregate(path: &Path, rows: &[AggregateRow]) -> Result<()> {
    write_rows(path, &AGGREGATE_COLUMNS, rows.iter().map(aggregate_fields))
}

/// Write traces (optional), summary and aggregate tables under `dir`.
pub fn write_results(dir: &Path, cells: &[CellResult], with_traces: bool) -> Result<()> {
    create_dir(dir)?;
    if with_traces {
        let tdir = dir.join("traces");
        create_dir(&tdir)?;
        for cell in cells {
            write_trace(&tdir.join(trace_file_name(&cell.key)), cell)?;
        }
    }
    let summaries: Vec<SummaryRow> = cells.iter().map(CellResult::summary).collect();
    write_summary(&dir.join("summary.csv"), &summaries)?;
    write_aggregate(&dir.join("aggregate.csv"), &aggregate(&summaries))
}

fn parse<T: std::str::FromStr>(path: &Path, line: u64, what: &str, s: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Data {
        path: path.to_path_buf(),
        msg: format!("line {line}: bad {what} `{s}`"),
    })
}

fn read_records(path: &Path, expected: &[&str]) -> Result<Vec<(u64, csv::StringRecord)>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let header = r.headers().map_err(|e| Error::csv(path, e))?.clone();
    if header.iter().ne(expected.iter().copied()) {
        return Err(Error::Data {
            path: path.to_path_buf(),
            msg: format!("unexpected columns {:?}", header.iter().collect::<Vec<_>>()),
        });
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        out.push((line, rec));
    }
    Ok(out)
}

fn parse_key(path: &Path, line: u64, rec: &csv::StringRecord) -> Result<CellKey> {
    Ok(CellKey {
        scenario: parse(path, line, "scenario", &rec[0])?,
        zeta: parse(path, line, "zeta", &rec[1])?,
        recovery_days: parse(path, line, "recovery_days", &rec[2])?,
        seed: parse(path, line, "seed", &rec[3])?,
    })
}

pub fn read_trace(path: &Path) -> Result<CellResult> {
    let header: Vec<&str> = PROVENANCE_COLUMNS.iter().chain(TRACE_COLUMNS.iter()).copied().collect();
    let rows = read_records(path, &header)?;
    let Some((first_line, first)) = rows.first() else {
        return Err(Error::Data {
            path: path.to_path_buf(),
            msg: "empty trace".into(),
        });
    };
    let key = parse_key(path, *first_line, first)?;
    let mut records = Vec::with_capacity(rows.len());
    for (line, rec) in &rows {
        let line = *line;
        if parse_key(path, line, rec)? != key {
            return Err(Error::Data {
                path: path.to_path_buf(),
                msg: format!("line {line}: provenance changes within one trace"),
            });
        }
        records.push(TickRecord {
            tick: parse(path, line, "tick", &rec[4])?,
            day: parse(path, line, "day", &rec[5])?,
            interactions: parse(path, line, "interactions", &rec[6])?,
            bonds: parse(path, line, "bonds", &rec[7])?,
            new_infections: parse(path, line, "new_infections", &rec[8])?,
            infected_now: parse(path, line, "infected_now", &rec[9])?,
            cum_infections: parse(path, line, "cum_infections", &rec[10])?,
            reward_step: parse(path, line, "reward_step", &rec[11])?,
            cum_reward: parse(path, line, "cum_reward", &rec[12])?,
            style_rewards: [0.0; 3],
        });
    }
    let initial_infected = (records[0].cum_infections as usize).saturating_sub(records[0].new_infections);
    Ok(CellResult {
        key,
        trace: EpisodeTrace {
            initial_infected,
            records,
        },
    })
}

fn trace_paths(dir: &Path) -> Result<Vec<PathBuf>> {
    let tdir = dir.join("traces");
    if !tdir.is_dir() {
        return Ok(Vec::new());
    }
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&tdir)
        .map_err(|e| Error::io(&tdir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|e| Error::io(&tdir, e)))
        .collect::<Result<_>>()?;
    paths.retain(|p| p.extension().is_some_and(|x| x == "csv"));
    paths.sort();
    Ok(paths)
}

/// Every trace under `dir/traces`, in file name order.
pub fn read_traces(dir: &Path) -> Result<Vec<CellResult>> {
    trace_paths(dir)?.iter().map(|p| read_trace(p)).collect()
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerifyReport {
    pub traces_checked: usize,
    pub summary_rows: usize,
    pub problems: Vec<String>,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.problems.is_empty() && self.traces_checked > 0
    }
}

/// Recompute every summary row from the raw traces, check each trace's
/// cumulative columns against its step columns, and diff both the summary
/// and aggregate tables.
pub fn verify(dir: &Path) -> Result<VerifyReport> {
    let mut report = VerifyReport::default();
    let mut recomputed: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut rows = Vec::new();
    for path in trace_paths(dir)? {
        let cell = read_trace(&path)?;
        report.traces_checked += 1;
        let mut cum_inf = cell.trace.initial_infected as u64;
        let mut cum_rew = 0.0;
        for r in &cell.trace.records {
            cum_inf += r.new_infections as u64;
            cum_rew += r.reward_step;
            if r.cum_infections != cum_inf || r.cum_reward.to_bits() != cum_rew.to_bits() {
                report
                    .problems
                    .push(format!("{}: cumulative columns disagree at tick {}", path.display(), r.tick));
                break;
            }
        }
        let row = SummaryRow {
            key: cell.key,
            final_cum_infections: cum_inf,
            final_cum_reward: cum_rew,
        };
        let fields = summary_fields(&row);
        recomputed.insert(fields[..4].join(","), fields);
        rows.push(row);
    }

    let summary_path = dir.join("summary.csv");
    let stored = read_records(&summary_path, &SUMMARY_COLUMNS)?;
    report.summary_rows = stored.len();
    let mut seen = std::collections::BTreeSet::new();
    for (line, rec) in &stored {
        let fields: Vec<String> = rec.iter().map(str::to_owned).collect();
        let key = fields[..4].join(",");
        seen.insert(key.clone());
        match recomputed.get(&key) {
            Some(expect) if *expect == fields => {}
            Some(expect) => report.problems.push(format!(
                "summary.csv line {line}: stored {} but traces give {}",
                fields[4..].join(","),
                expect[4..].join(",")
            )),
            None => report
                .problems
                .push(format!("summary.csv line {line}: no trace for {key}")),
        }
    }
    for key in recomputed.keys().filter(|k| !seen.contains(*k)) {
        report.problems.push(format!("summary.csv has no row for trace {key}"));
    }

    // Aggregates follow summary order, so rebuild them in that order.
    let order: Vec<String> = stored
        .iter()
        .map(|(_, rec)| rec.iter().take(4).collect::<Vec<_>>().join(","))
        .collect();
    rows.sort_by_key(|r| order.iter().position(|k| *k == summary_fields(r)[..4].join(",")));
    let agg_path = dir.join("aggregate.csv");
    if agg_path.exists() {
        let stored_agg = read_records(&agg_path, &AGGREGATE_COLUMNS)?;
        let expect: Vec<Vec<String>> = aggregate(&rows).iter().map(aggregate_fields).collect();
        let got: Vec<Vec<String>> = stored_agg
            .iter()
            .map(|(_, rec)| rec.iter().map(str::to_owned).collect())
            .collect();
        if got != expect {
            report
                .problems
                .push("aggregate.csv does not match the seed aggregates of the traces".into());
        }
    }
    Ok(report)
}
