//! CSV rows and the per-strategy summary.

use std::fmt::Write as _;
use std::io;

use flowbal_core::{Strategy, Time};
use flowbal_runtime::Transfer;

/// CSV column order. Changing it is a format break.
pub const HEADER: [&str; 11] = [
    "instance", "strategy", "transfer", "seed", "time", "makespan", "optimal", "nodes", "messages", "bytes",
    "status",
];

#[derive(Debug, Clone, PartialEq)]
pub enum Status {
    Ok,
    Truncated,
    Failed(String),
}

impl Status {
    fn as_field(&self) -> String {
        match self {
            Status::Ok => "ok".into(),
            Status::Truncated => "truncated".into(),
            Status::Failed(why) => format!("error: {why}"),
        }
    }
}

/// One (instance, strategy, transfer, seed) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub instance: String,
    pub strategy: Strategy,
    pub transfer: Transfer,
    pub seed: u64,
    /// Virtual time in sim mode, time units of wall clock in thread mode.
    pub time: Option<f64>,
    pub makespan: Option<Time>,
    /// The search ran to completion, so the makespan is optimal.
    pub optimal: bool,
    pub nodes: u64,
    pub messages: u64,
    pub bytes: u64,
    pub status: Status,
}

impl ReportRow {
    fn fields(&self) -> [String; 11] {
        let opt = |v: Option<String>| v.unwrap_or_default();
        [
            self.instance.clone(),
            self.strategy.to_string(),
            self.transfer.to_string(),
            self.seed.to_string(),
            opt(self.time.map(|t| format!("{t:.3}"))),
            opt(self.makespan.map(|m| m.to_string())),
            self.optimal.to_string(),
            self.nodes.to_string(),
            self.messages.to_string(),
            self.bytes.to_string(),
            self.status.as_field(),
        ]
    }
}

pub fn write_csv<W: io::Write>(rows: &[ReportRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for r in rows {
        w.write_record(r.fields())?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string(rows: &[ReportRow]) -> String {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv output is utf-8")
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupSummary {
    pub strategy: Strategy,
    pub transfer: Transfer,
    /// Cells that produced a time.
    pub cells: usize,
    pub mean_time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub groups: Vec<GroupSummary>,
    /// Index into `groups` that percentages are relative to.
    pub baseline: Option<usize>,
}

/// `(baseline - candidate) / baseline * 100`: positive when the candidate is faster.
pub fn improvement(baseline: f64, candidate: f64) -> f64 {
    (baseline - candidate) / baseline * 100.0
}

impl Summary {
    /// Groups rows by strategy and transfer in first-seen order. The
    /// baseline is the first SLD group, else the first group.
    pub fn from_rows(rows: &[ReportRow]) -> Self {
        let mut groups: Vec<(Strategy, Transfer, Vec<f64>)> = Vec::new();
        for r in rows {
            let idx = match groups.iter().position(|g| g.0 == r.strategy && g.1 == r.transfer) {
                Some(i) => i,
                None => {
                    groups.push((r.strategy, r.transfer, Vec::new()));
                    groups.len() - 1
                }
            };
            if let Some(t) = r.time {
                groups[idx].2.push(t);
            }
        }
        let groups: Vec<GroupSummary> = groups
            .into_iter()
            .map(|(strategy, transfer, times)| GroupSummary {
                strategy,
                transfer,
                cells: times.len(),
                mean_time: if times.is_empty() {
                    f64::NAN
                } else {
                    times.iter().sum::<f64>() / times.len() as f64
                },
            })
            .collect();
        let baseline = groups
            .iter()
            .position(|g| g.strategy == Strategy::Sld)
            .or(if groups.is_empty() { None } else { Some(0) });
        Self { groups, baseline }
    }

    pub fn mean(&self, strategy: Strategy, transfer: Transfer) -> Option<f64> {
        self.groups
            .iter()
            .find(|g| g.strategy == strategy && g.transfer == transfer)
            .map(|g| g.mean_time)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let base = self.baseline.map(|i| &self.groups[i]);
        let label = base.map_or("-".to_string(), |b| format!("vs {}/{}", b.strategy, b.transfer));
        let _ = writeln!(s, "{:<8} {:<8} {:>6} {:>12} {:>12}", "strategy", "transfer", "cells", "mean_time", label);
        for g in &self.groups {
            let pct = base.map_or(String::new(), |b| format!("{:+.1}%", improvement(b.mean_time, g.mean_time)));
            let _ = writeln!(
                s,
                "{:<8} {:<8} {:>6} {:>12.3} {:>12}",
                g.strategy.to_string(),
                g.transfer.to_string(),
                g.cells,
                g.mean_time,
                pct
            );
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(strategy: Strategy, transfer: Transfer, time: Option<f64>) -> ReportRow {
        ReportRow {
            instance: "a,b".into(),
            strategy,
            transfer,
            seed: 1,
            time,
            makespan: time.map(|_| 10),
            optimal: time.is_some(),
            nodes: 5,
            messages: 7,
            bytes: 99,
            status: if time.is_some() { Status::Ok } else { Status::Failed("boom".into()) },
        }
    }

    #[test]
    fn csv_layout() {
        let rows = [row(Strategy::Pfs, Transfer::MultiInOne, Some(1.5)), row(Strategy::Sld, Transfer::OneInOne, None)];
        let text = csv_string(&rows);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "instance,strategy,transfer,seed,time,makespan,optimal,nodes,messages,bytes,status");
        assert_eq!(lines[1], "\"a,b\",pfs,Min1,1,1.500,10,true,5,7,99,ok");
        assert_eq!(lines[2], "\"a,b\",sld,1in1,1,,,false,5,7,99,error: boom");
    }

    #[test]
    fn summary_relative_to_sld() {
        let rows = [
            row(Strategy::Pfs, Transfer::MultiInOne, Some(80.0)),
            row(Strategy::Sld, Transfer::OneInOne, Some(100.0)),
            row(Strategy::Pfs, Transfer::MultiInOne, Some(90.0)),
            row(Strategy::Sld, Transfer::OneInOne, Some(100.0)),
        ];
        let s = Summary::from_rows(&rows);
        assert_eq!(s.baseline, Some(1));
        assert_eq!(s.mean(Strategy::Pfs, Transfer::MultiInOne), Some(85.0));
        assert_eq!(improvement(100.0, 85.0), 15.0);
        assert!(s.render().contains("+15.0%"));
    }
}
