//! CSV input formats.
//!
//! Three UTF-8, comma-separated, header-first files feed a case:
//!
//! * `frequencies.csv`: `marker,allele,frequency` rows building the allele
//!   ladders. Frequencies off unity by at most 1e-6 are renormalized;
//!   anything worse is rejected.
//! * `peaks.csv`: `trace,marker,allele,height` rows. Omitted alleles mean "no
//!   peak"; explicit zero-height rows are accepted.
//! * `profiles.csv`: `individual,marker,allele,count` rows with counts per
//!   genotype summing to two.

use std::path::Path;

use crate::error::{Error, Result};
use crate::infer::{Profile, TraceData};
use crate::marker::AlleleLadder;

/// One peaks.csv row.
#[derive(Clone, Debug, PartialEq)]
pub struct RawPeak {
    pub trace: String,
    pub marker: String,
    pub allele: f64,
    pub height: f64,
    pub line: usize,
}

fn read_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::parse(path.display().to_string(), 0, format!("cannot read: {e}")))?;
    Ok(text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim().to_string()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .collect())
}

fn split_row<'a>(
    file: &str,
    line: usize,
    text: &'a str,
    expected: usize,
) -> Result<Vec<&'a str>> {
    let fields: Vec<&str> = text.split(',').map(str::trim).collect();
    if fields.len() != expected {
        return Err(Error::parse(
            file,
            line,
            format!("expected {expected} fields, found {}", fields.len()),
        ));
    }
    Ok(fields)
}

fn check_header(file: &str, line: usize, text: &str, expected: &[&str]) -> Result<()> {
    let fields: Vec<String> = text.split(',').map(|f| f.trim().to_lowercase()).collect();
    if fields != expected {
        return Err(Error::parse(
            file,
            line,
            format!("expected header '{}'", expected.join(",")),
        ));
    }
    Ok(())
}

fn parse_number(file: &str, line: usize, field: &str, what: &str) -> Result<f64> {
    field
        .parse::<f64>()
        .map_err(|_| Error::parse(file, line, format!("invalid {what} '{field}'")))
}

/// Parse an allele-frequency table into ladders, one per marker in file
/// order.
pub fn parse_frequencies(path: &Path) -> Result<Vec<AlleleLadder>> {
    let file = path.display().to_string();
    let lines = read_lines(path)?;
    if lines.is_empty() {
        return Err(Error::parse(&file, 0, "empty frequency file"));
    }
    check_header(&file, lines[0].0, &lines[0].1, &["marker", "allele", "frequency"])?;
    let mut order: Vec<String> = Vec::new();
    let mut per_marker: std::collections::BTreeMap<String, Vec<(f64, f64, usize)>> =
        std::collections::BTreeMap::new();
    for (line, text) in &lines[1..] {
        let fields = split_row(&file, *line, text, 3)?;
        let marker = fields[0].to_string();
        let allele = parse_number(&file, *line, fields[1], "allele label")?;
        let freq = parse_number(&file, *line, fields[2], "frequency")?;
        if freq.is_nan() || freq <= 0.0 {
            return Err(Error::parse(
                &file,
                *line,
                format!("frequency must be positive, got {freq}"),
            ));
        }
        if !per_marker.contains_key(&marker) {
            order.push(marker.clone());
        }
        let rows = per_marker.entry(marker.clone()).or_default();
        if rows.iter().any(|(a, _, _)| *a == allele) {
            return Err(Error::parse(
                &file,
                *line,
                format!("duplicate allele {fields1} for marker {marker}", fields1 = fields[1]),
            ));
        }
        rows.push((allele, freq, *line));
    }
    let mut ladders = Vec::with_capacity(order.len());
    for marker in order {
        let rows = &per_marker[&marker];
        let sum: f64 = rows.iter().map(|(_, q, _)| q).sum();
        // Inclusive 1e-6 tolerance, with one ulp of slack for the sum itself.
        if (sum - 1.0).abs() > 1e-6 + 1e-12 {
            return Err(Error::parse(
                &file,
                rows[0].2,
                format!("marker {marker}: frequencies sum to {sum}, outside the 1e-6 tolerance"),
            ));
        }
        let labels: Vec<f64> = rows.iter().map(|(a, _, _)| *a).collect();
        let freqs: Vec<f64> = rows.iter().map(|(_, q, _)| q / sum).collect();
        let ladder = AlleleLadder::new(marker, labels, freqs)
            .map_err(|e| Error::parse(&file, rows[0].2, e.to_string()))?;
        ladders.push(ladder);
    }
    Ok(ladders)
}

/// Parse peak rows; assembly against ladders and thresholds happens in the
/// case loader.
pub fn parse_peaks(path: &Path) -> Result<Vec<RawPeak>> {
    let file = path.display().to_string();
    let lines = read_lines(path)?;
    if lines.is_empty() {
        return Ok(Vec::new());
    }
    check_header(
        &file,
        lines[0].0,
        &lines[0].1,
        &["trace", "marker", "allele", "height"],
    )?;
    let mut peaks = Vec::new();
    for (line, text) in &lines[1..] {
        let fields = split_row(&file, *line, text, 4)?;
        peaks.push(RawPeak {
            trace: fields[0].to_string(),
            marker: fields[1].to_string(),
            allele: parse_number(&file, *line, fields[2], "allele label")?,
            height: parse_number(&file, *line, fields[3], "peak height")?,
            line: *line,
        });
    }
    Ok(peaks)
}

/// Attach raw peaks to traces, validating alleles against the ladders and
/// heights against each trace's threshold.
pub fn assemble_traces(
    file: &str,
    peaks: &[RawPeak],
    ladders: &[AlleleLadder],
    traces: &[(String, f64)],
) -> Result<Vec<TraceData>> {
    let mut out: Vec<TraceData> = traces
        .iter()
        .map(|(id, threshold)| TraceData {
            id: id.clone(),
            threshold: *threshold,
            heights: std::collections::BTreeMap::new(),
        })
        .collect();
    for peak in peaks {
        let trace = out
            .iter_mut()
            .find(|t| t.id == peak.trace)
            .ok_or_else(|| {
                Error::parse(
                    file,
                    peak.line,
                    format!("trace '{}' is not declared in the case file", peak.trace),
                )
            })?;
        let ladder = ladders
            .iter()
            .find(|l| l.marker == peak.marker)
            .ok_or_else(|| {
                Error::parse(
                    file,
                    peak.line,
                    format!("marker '{}' is absent from the frequency table", peak.marker),
                )
            })?;
        let allele = ladder.index_of(peak.allele).ok_or_else(|| {
            Error::parse(
                file,
                peak.line,
                format!(
                    "allele {} is absent from the ladder of marker {}",
                    peak.allele, peak.marker
                ),
            )
        })?;
        if peak.height < 0.0 {
            return Err(Error::parse(file, peak.line, "negative peak height"));
        }
        if peak.height > 0.0 && peak.height < trace.threshold {
            return Err(Error::parse(
                file,
                peak.line,
                format!(
                    "peak height {} lies strictly between 0 and the threshold {}",
                    peak.height, trace.threshold
                ),
            ));
        }
        let heights = trace
            .heights
            .entry(peak.marker.clone())
            .or_insert_with(|| vec![0.0; ladder.len()]);
        if heights[allele] != 0.0 {
            return Err(Error::parse(
                file,
                peak.line,
                format!(
                    "duplicate peak for trace {}, marker {}, allele {}",
                    peak.trace, peak.marker, peak.allele
                ),
            ));
        }
        heights[allele] = peak.height;
    }
    Ok(out)
}

/// Parse genotype profiles against the ladders.
pub fn parse_profiles(
    path: &Path,
    ladders: &[AlleleLadder],
) -> Result<std::collections::BTreeMap<String, Profile>> {
    let file = path.display().to_string();
    let lines = read_lines(path)?;
    if lines.is_empty() {
        return Ok(std::collections::BTreeMap::new());
    }
    check_header(
        &file,
        lines[0].0,
        &lines[0].1,
        &["individual", "marker", "allele", "count"],
    )?;
    let mut profiles: std::collections::BTreeMap<String, Profile> =
        std::collections::BTreeMap::new();
    for (line, text) in &lines[1..] {
        let fields = split_row(&file, *line, text, 4)?;
        let individual = fields[0].to_string();
        let marker = fields[1].to_string();
        let label = parse_number(&file, *line, fields[2], "allele label")?;
        let count: u8 = fields[3]
            .parse()
            .ok()
            .filter(|&c| c <= 2)
            .ok_or_else(|| {
                Error::parse(&file, *line, format!("invalid allele count '{}'", fields[3]))
            })?;
        let ladder = ladders
            .iter()
            .find(|l| l.marker == marker)
            .ok_or_else(|| {
                Error::parse(
                    &file,
                    *line,
                    format!("marker '{marker}' is absent from the frequency table"),
                )
            })?;
        let allele = ladder.index_of(label).ok_or_else(|| {
            Error::parse(
                &file,
                *line,
                format!("allele {label} is absent from the ladder of marker {marker}"),
            )
        })?;
        let profile = profiles.entry(individual.clone()).or_default();
        let counts = profile
            .counts
            .entry(marker.clone())
            .or_insert_with(|| vec![0u8; ladder.len()]);
        if counts[allele] != 0 {
            return Err(Error::parse(
                &file,
                *line,
                format!("duplicate profile row for {individual}, marker {marker}, allele {label}"),
            ));
        }
        counts[allele] = count;
    }
    // Genotypes must carry exactly two alleles per marker.
    for (individual, profile) in &profiles {
        for (marker, counts) in &profile.counts {
            let total: u32 = counts.iter().map(|&c| c as u32).sum();
            if total != 2 {
                return Err(Error::parse(
                    &file,
                    0,
                    format!("profile {individual}: marker {marker} counts sum to {total}, expected 2"),
                ));
            }
        }
    }
    Ok(profiles)
}

fn fmt_label(label: f64) -> String {
    format!("{label}")
}

pub fn write_frequencies(ladders: &[AlleleLadder]) -> String {
    let mut out = String::from("marker,allele,frequency\n");
    for ladder in ladders {
        for a in 0..ladder.len() {
            out.push_str(&format!(
                "{},{},{}\n",
                ladder.marker,
                fmt_label(ladder.label(a)),
                ladder.frequency(a)
            ));
        }
    }
    out
}

/// Serialize observed peaks only; absent rows mean "no peak".
pub fn write_peaks(traces: &[TraceData], ladders: &[AlleleLadder]) -> String {
    let mut out = String::from("trace,marker,allele,height\n");
    for trace in traces {
        for ladder in ladders {
            if let Some(heights) = trace.heights.get(&ladder.marker) {
                for (a, &z) in heights.iter().enumerate() {
                    if z > 0.0 {
                        out.push_str(&format!(
                            "{},{},{},{}\n",
                            trace.id,
                            ladder.marker,
                            fmt_label(ladder.label(a)),
                            z
                        ));
                    }
                }
            }
        }
    }
    out
}

pub fn write_profiles(
    profiles: &std::collections::BTreeMap<String, Profile>,
    ladders: &[AlleleLadder],
) -> String {
    let mut out = String::from("individual,marker,allele,count\n");
    for (individual, profile) in profiles {
        for ladder in ladders {
            if let Some(counts) = profile.counts.get(&ladder.marker) {
                for (a, &c) in counts.iter().enumerate() {
                    if c > 0 {
                        out.push_str(&format!(
                            "{},{},{},{}\n",
                            individual,
                            ladder.marker,
                            fmt_label(ladder.label(a)),
                            c
                        ));
                    }
                }
            }
        }
    }
    out
}
