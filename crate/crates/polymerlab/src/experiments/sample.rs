//! Per-replicate campaign records and their text codecs.
//!
//! The CSV schemas are fixed functions of the configuration grids;
//! readers validate the header line against the expected schema before
//! trusting any row, and all floating-point values are written in
//! shortest round-trip decimal so a parse-back reproduces them bitwise.

use crate::error::{Error, Result};
use crate::grid::MAX_DIM;

/// Fluctuation statistics of one replicate at one horizon `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleRow {
    pub n: usize,
    /// Partition value `W_n`.
    pub w_n: f64,
    /// Tail proxy `W_{Kn}`.
    pub w_proxy: f64,
    /// Rescaled tail increment `n^{(d-2)/4} (W_{Kn} - W_n)`.
    pub t_n: f64,
    /// Self-normalized increment `t_n / w_n`.
    pub u_n: f64,
    /// Rescaled log increment `n^{(d-2)/4} (log W_{Kn} - log W_n)`.
    pub l_n: f64,
    /// Truncated quadratic variation
    /// `n^{(d-2)/2} sum_{k in [n, Kn)} bracket_k`.
    pub s2: f64,
    /// Homogenized reference `coefficient * w_proxy^2`, with the exact
    /// truncated coefficient from the overlap oracle; NaN outside the
    /// square-integrable phase.
    pub abar: f64,
    /// Truncated-tail exceedance sums, one per configured level.
    pub lindeberg: Vec<f64>,
    /// Rescaled window tail masses, one per configured threshold.
    pub window: Vec<f64>,
}

/// Everything one replicate of the main campaign produces.
#[derive(Clone, Debug, PartialEq)]
pub struct FluctuationSample {
    pub replicate: u64,
    /// Conditioning scalar `W_{n0}` for the dependence split.
    pub w_event: f64,
    /// One row per configured horizon, ascending.
    pub rows: Vec<SampleRow>,
}

/// One reversed-plane concentration measurement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HomogSample {
    pub replicate: u64,
    pub k: usize,
    /// `sum_{|x| <= alpha sqrt(k)} (reversed value)^2 P(S_{k+1} = x)^2`.
    pub inner: f64,
}

/// Aggregate of one factorization-residual horizon.
#[derive(Clone, Debug, PartialEq)]
pub struct LltSummary {
    pub k: usize,
    pub depth: usize,
    pub alpha: f64,
    pub replicates: u64,
    /// Valid window sites the sup ranges over.
    pub window_sites: usize,
    /// Window sites with zero reach probability.
    pub skipped_sites: usize,
    /// `sup_x mean_r delta(x)^2` over valid sites.
    pub sup_mean_square: f64,
    /// Site attaining the sup (first `d` coordinates meaningful).
    pub arg_site: [i32; MAX_DIM],
}

/// In-memory results of a whole campaign.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CampaignData {
    /// Ascending by replicate id.
    pub samples: Vec<FluctuationSample>,
    /// Ascending by (replicate, k).
    pub homog: Vec<HomogSample>,
    /// Ascending by k.
    pub llt: Vec<LltSummary>,
}

impl CampaignData {
    /// Replicate ids present in the main-sample list.
    pub fn sample_ids(&self) -> Vec<u64> {
        self.samples.iter().map(|s| s.replicate).collect()
    }
}

/// Expected `samples.csv` header for the configured grids.
pub fn sample_header(eps_grid: &[f64], alpha_grid: &[f64]) -> String {
    let mut h = String::from("replicate,n,w_n,w_proxy,t_n,u_n,l_n,s2_trunc,abar,w_event");
    for e in eps_grid {
        h.push_str(&format!(",lind_{e}"));
    }
    for a in alpha_grid {
        h.push_str(&format!(",window_{a}"));
    }
    h
}

/// Expected `homog.csv` header.
pub fn homog_header() -> &'static str {
    "replicate,k,inner"
}

/// Expected `llt.csv` header.
pub fn llt_header() -> String {
    let mut h = String::from(
        "k,depth,alpha,replicates,window_sites,skipped_sites,sup_mean_square",
    );
    for i in 0..MAX_DIM {
        h.push_str(&format!(",arg_x{i}"));
    }
    h
}

/// Encode one sample as CSV lines (one per horizon row).
pub fn encode_sample(s: &FluctuationSample, out: &mut String) {
    for row in &s.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}",
            s.replicate,
            row.n,
            row.w_n,
            row.w_proxy,
            row.t_n,
            row.u_n,
            row.l_n,
            row.s2,
            row.abar,
            s.w_event
        ));
        for v in &row.lindeberg {
            out.push_str(&format!(",{v}"));
        }
        for v in &row.window {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
}

pub fn encode_homog(h: &HomogSample, out: &mut String) {
    out.push_str(&format!("{},{},{}\n", h.replicate, h.k, h.inner));
}

pub fn encode_llt(l: &LltSummary, out: &mut String) {
    out.push_str(&format!(
        "{},{},{},{},{},{},{}",
        l.k, l.depth, l.alpha, l.replicates, l.window_sites, l.skipped_sites, l.sup_mean_square
    ));
    for c in l.arg_site {
        out.push_str(&format!(",{c}"));
    }
    out.push('\n');
}

fn field_count(eps: usize, alphas: usize) -> usize {
    10 + eps + alphas
}

fn parse_num<T: std::str::FromStr>(field: &str, line_no: usize) -> Result<T> {
    field.parse().map_err(|_| {
        Error::RunState(format!("samples line {line_no}: bad field {field:?}"))
    })
}

/// Decode the body of `samples.csv` (after the validated header) into
/// samples grouped by replicate.  Rows of a replicate must be
/// contiguous and ascending in `n`; a trailing partially-written line is
/// reported as an error by field count, which resumption treats as an
/// incomplete replicate.
pub fn decode_samples(
    body: &str,
    n_grid: &[usize],
    eps: usize,
    alphas: usize,
) -> Result<Vec<FluctuationSample>> {
    let mut out: Vec<FluctuationSample> = Vec::new();
    for (i, line) in body.lines().enumerate() {
        let line_no = i + 2;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != field_count(eps, alphas) {
            return Err(Error::RunState(format!(
                "samples line {line_no}: {} fields, expected {}",
                fields.len(),
                field_count(eps, alphas)
            )));
        }
        let replicate: u64 = parse_num(fields[0], line_no)?;
        let n: usize = parse_num(fields[1], line_no)?;
        let row = SampleRow {
            n,
            w_n: parse_num(fields[2], line_no)?,
            w_proxy: parse_num(fields[3], line_no)?,
            t_n: parse_num(fields[4], line_no)?,
            u_n: parse_num(fields[5], line_no)?,
            l_n: parse_num(fields[6], line_no)?,
            s2: parse_num(fields[7], line_no)?,
            abar: parse_num(fields[8], line_no)?,
            lindeberg: fields[10..10 + eps]
                .iter()
                .map(|f| parse_num(f, line_no))
                .collect::<Result<_>>()?,
            window: fields[10 + eps..]
                .iter()
                .map(|f| parse_num(f, line_no))
                .collect::<Result<_>>()?,
        };
        let w_event: f64 = parse_num(fields[9], line_no)?;
        match out.last_mut() {
            Some(s) if s.replicate == replicate => {
                if s.w_event.to_bits() != w_event.to_bits() {
                    return Err(Error::RunState(format!(
                        "samples line {line_no}: conditioning value changed within \
                         replicate {replicate}"
                    )));
                }
                s.rows.push(row);
            }
            _ => {
                if out.iter().any(|s| s.replicate == replicate) {
                    return Err(Error::RunState(format!(
                        "samples line {line_no}: replicate {replicate} rows are not contiguous"
                    )));
                }
                out.push(FluctuationSample { replicate, w_event, rows: vec![row] });
            }
        }
    }
    for s in &out {
        let ns: Vec<usize> = s.rows.iter().map(|r| r.n).collect();
        if ns != n_grid {
            return Err(Error::RunState(format!(
                "replicate {}: horizons {ns:?} do not match the configured grid {n_grid:?}",
                s.replicate
            )));
        }
    }
    Ok(out)
}

/// Decode the body of `homog.csv`.
pub fn decode_homog(body: &str) -> Result<Vec<HomogSample>> {
    let mut out = Vec::new();
    for (i, line) in body.lines().enumerate() {
        let line_no = i + 2;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::RunState(format!(
                "homog line {line_no}: {} fields, expected 3",
                fields.len()
            )));
        }
        out.push(HomogSample {
            replicate: parse_num(fields[0], line_no)?,
            k: parse_num(fields[1], line_no)?,
            inner: parse_num(fields[2], line_no)?,
        });
    }
    Ok(out)
}

/// Decode the body of `llt.csv`.
pub fn decode_llt(body: &str) -> Result<Vec<LltSummary>> {
    let mut out = Vec::new();
    for (i, line) in body.lines().enumerate() {
        let line_no = i + 2;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 + MAX_DIM {
            return Err(Error::RunState(format!(
                "llt line {line_no}: {} fields, expected {}",
                fields.len(),
                7 + MAX_DIM
            )));
        }
        let mut arg_site = [0i32; MAX_DIM];
        for (slot, f) in arg_site.iter_mut().zip(&fields[7..]) {
            *slot = parse_num(f, line_no)?;
        }
        out.push(LltSummary {
            k: parse_num(fields[0], line_no)?,
            depth: parse_num(fields[1], line_no)?,
            alpha: parse_num(fields[2], line_no)?,
            replicates: parse_num(fields[3], line_no)?,
            window_sites: parse_num(fields[4], line_no)?,
            skipped_sites: parse_num(fields[5], line_no)?,
            sup_mean_square: parse_num(fields[6], line_no)?,
            arg_site,
        });
    }
    Ok(out)
}
