//! Taillard flowshop benchmark format.
//!
//! An instance is a header line `n m [seed [upper_bound [lower_bound]]]`
//! followed by `m` rows of `n` integers: row `k` lists the processing times
//! of every job on machine `k`. Instances may be concatenated. Blank lines,
//! `#` comments and the descriptive label lines of the original files
//! (`number of jobs, ...`, `processing times :`) are skipped.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::instance::{Instance, PublishedBounds, Time};

/// Parses every instance in `text`, named `instance-1`, `instance-2`, ...
pub fn parse_taillard(text: &str) -> Result<Vec<Instance>> {
    parse_taillard_named(text, "instance")
}

/// Parses every instance in `text`. A single instance is named `base`;
/// several are named `base-1`, `base-2`, ...
pub fn parse_taillard_named(text: &str, base: &str) -> Result<Vec<Instance>> {
    let mut out = Vec::new();
    let mut pending: Option<Pending> = None;
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || is_label(line) {
            continue;
        }
        let values = parse_numbers(line, line_no)?;
        match pending.as_mut() {
            None => pending = Some(Pending::from_header(&values, line_no)?),
            Some(p) => {
                if values.len() != p.jobs {
                    return Err(Error::parse(
                        line_no,
                        format!(
                            "machine row {} has {} entries, expected {}",
                            p.rows.len(),
                            values.len(),
                            p.jobs
                        ),
                    ));
                }
                p.rows.push(values);
                if p.rows.len() == p.machines {
                    out.push(pending.take().expect("pending instance").finish()?);
                }
            }
        }
    }
    if let Some(p) = pending {
        return Err(Error::parse(
            last_line.max(1),
            format!(
                "input ends after {} of {} machine rows (instance header on line {})",
                p.rows.len(),
                p.machines,
                p.header_line
            ),
        ));
    }

    let count = out.len();
    Ok(out
        .into_iter()
        .enumerate()
        .map(|(i, inst)| {
            if count == 1 {
                inst.with_name(base)
            } else {
                inst.with_name(format!("{base}-{}", i + 1))
            }
        })
        .collect())
}

fn is_label(line: &str) -> bool {
    line.chars().next().is_some_and(|c| c.is_alphabetic())
}

fn parse_numbers(line: &str, line_no: usize) -> Result<Vec<u64>> {
    line.split_whitespace()
        .map(|tok| {
            tok.parse::<u64>()
                .map_err(|_| Error::parse(line_no, format!("non-numeric token `{tok}`")))
        })
        .collect()
}

struct Pending {
    jobs: usize,
    machines: usize,
    published: PublishedBounds,
    header_line: usize,
    rows: Vec<Vec<u64>>,
}

impl Pending {
    fn from_header(values: &[u64], line_no: usize) -> Result<Self> {
        if !(2..=5).contains(&values.len()) {
            return Err(Error::parse(
                line_no,
                format!(
                    "malformed header: expected `n m [seed ub lb]`, got {} fields",
                    values.len()
                ),
            ));
        }
        let (jobs, machines) = (values[0] as usize, values[1] as usize);
        if jobs == 0 || machines == 0 {
            return Err(Error::parse(line_no, "malformed header: n and m must be positive"));
        }
        Ok(Self {
            jobs,
            machines,
            published: PublishedBounds {
                seed: values.get(2).copied(),
                upper_bound: values.get(3).copied(),
                lower_bound: values.get(4).copied(),
            },
            header_line: line_no,
            rows: Vec::with_capacity(machines),
        })
    }

    fn finish(self) -> Result<Instance> {
        let (n, m) = (self.jobs, self.machines);
        let mut times = vec![0; n * m];
        for (k, row) in self.rows.iter().enumerate() {
            for (j, &p) in row.iter().enumerate() {
                times[j * m + k] = p;
            }
        }
        Ok(Instance::from_flat("", n, m, times)?.with_published(self.published))
    }
}

/// Serializes instances in the machine-major layout of the original files.
pub fn write_taillard(instances: &[Instance]) -> String {
    let mut s = String::new();
    for inst in instances {
        let pb = inst.published();
        let mut header = vec![inst.jobs() as u64, inst.machines() as u64];
        let tail = [pb.seed, pb.upper_bound, pb.lower_bound];
        if let Some(last) = tail.iter().rposition(Option::is_some) {
            header.extend(tail[..=last].iter().map(|v| v.unwrap_or(0)));
        }
        s.push_str("number of jobs, number of machines, initial seed, upper bound and lower bound :\n");
        let header: Vec<String> = header.iter().map(|v| format!("{v:>12}")).collect();
        let _ = writeln!(s, "{}", header.join(""));
        s.push_str("processing times :\n");
        for k in 0..inst.machines() {
            let row: Vec<String> = (0..inst.jobs()).map(|j| format!("{:>3}", inst.time(j, k))).collect();
            let _ = writeln!(s, "{}", row.join(" "));
        }
    }
    s
}

/// Taillard's portable Lehmer generator (`a = 16807`, `m = 2^31 - 1`,
/// Schrage's factorisation) as used to produce the published benchmarks.
#[derive(Debug, Clone)]
pub struct TaillardRng {
    state: i64,
}

impl TaillardRng {
    const A: i64 = 16_807;
    const B: i64 = 127_773;
    const C: i64 = 2_836;
    const M: i64 = 2_147_483_647;

    pub fn new(seed: u64) -> Self {
        Self { state: seed as i64 }
    }

    /// Uniform integer in `low..=high`.
    pub fn uniform(&mut self, low: Time, high: Time) -> Time {
        let k = self.state / Self::B;
        self.state = Self::A * (self.state % Self::B) - k * Self::C;
        if self.state < 0 {
            self.state += Self::M;
        }
        let value = self.state as f64 / Self::M as f64;
        low + (value * (high - low + 1) as f64) as Time
    }
}

/// Regenerates a Taillard instance: times uniform in `1..=99`, drawn machine
/// by machine.
pub fn taillard_instance(name: &str, jobs: usize, machines: usize, seed: u64) -> Instance {
    let mut rng = TaillardRng::new(seed);
    let mut times = vec![0; jobs * machines];
    for k in 0..machines {
        for j in 0..jobs {
            times[j * machines + k] = rng.uniform(1, 99);
        }
    }
    Instance::from_flat(name, jobs, machines, times)
        .expect("dimensions must be positive")
        .with_published(PublishedBounds {
            seed: Some(seed),
            ..PublishedBounds::default()
        })
}

/// The 20-job, 20-machine set (`ta021`..`ta030`): name, generator seed and
/// the upper and lower bounds printed in the original benchmark file.
pub const TAILLARD_20X20: [(&str, u64, Time, Time); 10] = [
    ("ta021", 479_340_445, 2297, 1911),
    ("ta022", 268_827_376, 2099, 1711),
    ("ta023", 1_958_948_863, 2326, 1844),
    ("ta024", 918_272_953, 2223, 1810),
    ("ta025", 555_010_963, 2291, 1899),
    ("ta026", 2_010_851_491, 2226, 1875),
    ("ta027", 1_519_833_303, 2273, 1875),
    ("ta028", 1_748_670_931, 2200, 1880),
    ("ta029", 1_923_497_586, 2237, 1840),
    ("ta030", 1_829_909_967, 2178, 1900),
];

/// Taillard's instance lower bound: the larger of the heaviest job and the
/// best one-machine bound with minimum head and tail.
pub fn taillard_lower_bound(inst: &Instance) -> Time {
    let (n, m) = (inst.jobs(), inst.machines());
    let heaviest = inst.rows().map(|r| r.iter().sum::<Time>()).max().unwrap_or(0);
    let mut best = heaviest;
    for k in 0..m {
        let load: Time = (0..n).map(|j| inst.time(j, k)).sum();
        let head = (0..n).map(|j| inst.job_row(j)[..k].iter().sum::<Time>()).min().unwrap_or(0);
        let tail = (0..n).map(|j| inst.job_row(j)[k + 1..].iter().sum::<Time>()).min().unwrap_or(0);
        best = best.max(head + load + tail);
    }
    best
}
