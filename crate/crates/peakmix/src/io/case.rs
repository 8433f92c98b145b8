//! Case configuration files.
//!
//! A case file is a sectioned key-value text format naming the traces with
//! their detection thresholds, the contributor hypotheses, optional fixed
//! model parameters per (hypothesis, trace), and optimizer settings:
//!
//! ```text
//! [trace E1]
//! threshold = 50
//!
//! [hypothesis Hp]
//! contributors = K1, K2, K3
//!
//! [hypothesis Hd]
//! contributors = K1, K2, U:u
//! # optional per-trace inclusion:
//! # include E1 = K1, U:u
//!
//! [params Hd E1]
//! rho = 24
//! xi = 0.07
//! eta = 31
//! phi = K1:0.8, K2:0.06, u:0.14
//!
//! [optimizer]
//! seed = 17
//! restarts = 5
//! ```
//!
//! Unknown contributors are declared as `U:tag` in rosters and referenced by
//! bare tag elsewhere.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::infer::{CaseData, Contributor, Hypothesis, OptimizerConfig};
use crate::io::csv::{assemble_traces, parse_frequencies, parse_peaks, parse_profiles};
use crate::marker::TreeMethod;
use crate::peak::ModelParams;

/// Parsed case configuration.
#[derive(Clone, Debug)]
pub struct CaseConfig {
    /// Trace ids with detection thresholds, in file order.
    pub traces: Vec<(String, f64)>,
    pub hypotheses: Vec<Hypothesis>,
    /// Fixed parameters per (hypothesis, trace), for commands that do not
    /// fit.
    pub params: Vec<ParamSection>,
    pub optimizer: OptimizerConfig,
    pub tree: TreeMethod,
}

#[derive(Clone, Debug)]
pub struct ParamSection {
    pub hypothesis: String,
    pub trace: String,
    pub params: ModelParams,
}

impl CaseConfig {
    pub fn hypothesis(&self, name: &str) -> Result<&Hypothesis> {
        self.hypotheses
            .iter()
            .find(|h| h.name == name)
            .ok_or_else(|| Error::domain(format!("case file declares no hypothesis '{name}'")))
    }

    /// Fixed parameters for every trace under one hypothesis.
    pub fn params_for(&self, hypothesis: &str) -> Result<BTreeMap<String, ModelParams>> {
        let mut out = BTreeMap::new();
        for (trace, _) in &self.traces {
            let section = self
                .params
                .iter()
                .find(|s| s.hypothesis == hypothesis && &s.trace == trace)
                .ok_or_else(|| {
                    Error::domain(format!(
                        "no [params {hypothesis} {trace}] section; this command needs fixed parameters"
                    ))
                })?;
            out.insert(trace.clone(), section.params.clone());
        }
        Ok(out)
    }
}

struct Section {
    header: Vec<String>,
    entries: Vec<(usize, String, String)>,
    line: usize,
}

fn split_sections(file: &str, text: &str) -> Result<Vec<Section>> {
    let mut sections = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if let Some(header) = trimmed.strip_prefix('[') {
            let header = header
                .strip_suffix(']')
                .ok_or_else(|| Error::parse(file, line, "unterminated section header"))?;
            sections.push(Section {
                header: header.split_whitespace().map(String::from).collect(),
                entries: Vec::new(),
                line,
            });
        } else {
            let (key, value) = trimmed
                .split_once('=')
                .ok_or_else(|| Error::parse(file, line, "expected 'key = value'"))?;
            let section = sections
                .last_mut()
                .ok_or_else(|| Error::parse(file, line, "entry before any [section]"))?;
            section
                .entries
                .push((line, key.trim().to_string(), value.trim().to_string()));
        }
    }
    Ok(sections)
}

fn parse_contributor(token: &str) -> Contributor {
    match token.strip_prefix("U:") {
        Some(tag) => Contributor::Unknown(tag.trim().to_string()),
        None => Contributor::Known(token.to_string()),
    }
}

fn parse_list(value: &str) -> Vec<String> {
    value
        .split(',')
        .map(|t| t.trim().to_string())
        .filter(|t| !t.is_empty())
        .collect()
}

/// Parse a case configuration file.
pub fn parse_case_config(path: &Path) -> Result<CaseConfig> {
    let file = path.display().to_string();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::parse(&file, 0, format!("cannot read: {e}")))?;
    let sections = split_sections(&file, &text)?;
    let mut traces = Vec::new();
    let mut hypotheses: Vec<Hypothesis> = Vec::new();
    let mut params = Vec::new();
    let mut optimizer = OptimizerConfig::default();
    let mut tree = TreeMethod::Optimal;
    for section in &sections {
        match section.header.first().map(String::as_str) {
            Some("trace") => {
                let id = section
                    .header
                    .get(1)
                    .ok_or_else(|| Error::parse(&file, section.line, "[trace] needs a name"))?
                    .clone();
                let mut threshold = None;
                for (line, key, value) in &section.entries {
                    match key.as_str() {
                        "threshold" => {
                            threshold = Some(value.parse::<f64>().map_err(|_| {
                                Error::parse(&file, *line, format!("invalid threshold '{value}'"))
                            })?)
                        }
                        other => {
                            return Err(Error::parse(
                                &file,
                                *line,
                                format!("unknown trace key '{other}'"),
                            ))
                        }
                    }
                }
                let threshold = threshold.ok_or_else(|| {
                    Error::parse(&file, section.line, format!("trace {id} needs a threshold"))
                })?;
                traces.push((id, threshold));
            }
            Some("hypothesis") => {
                let name = section
                    .header
                    .get(1)
                    .ok_or_else(|| Error::parse(&file, section.line, "[hypothesis] needs a name"))?
                    .clone();
                let mut contributors = Vec::new();
                let mut inclusion = BTreeMap::new();
                for (line, key, value) in &section.entries {
                    if key == "contributors" {
                        contributors = parse_list(value)
                            .iter()
                            .map(|t| parse_contributor(t))
                            .collect();
                    } else if let Some(trace) = key.strip_prefix("include ") {
                        let ids: Vec<String> = parse_list(value)
                            .iter()
                            .map(|t| parse_contributor(t).id().to_string())
                            .collect();
                        inclusion.insert(trace.trim().to_string(), ids);
                    } else {
                        return Err(Error::parse(
                            &file,
                            *line,
                            format!("unknown hypothesis key '{key}'"),
                        ));
                    }
                }
                if contributors.is_empty() {
                    return Err(Error::parse(
                        &file,
                        section.line,
                        format!("hypothesis {name} lists no contributors"),
                    ));
                }
                let mut hypothesis = Hypothesis::new(name, contributors);
                hypothesis.inclusion = inclusion;
                hypotheses.push(hypothesis);
            }
            Some("params") => {
                let hypothesis = section
                    .header
                    .get(1)
                    .ok_or_else(|| {
                        Error::parse(&file, section.line, "[params] needs 'hypothesis trace'")
                    })?
                    .clone();
                let trace = section
                    .header
                    .get(2)
                    .ok_or_else(|| {
                        Error::parse(&file, section.line, "[params] needs 'hypothesis trace'")
                    })?
                    .clone();
                let threshold = traces
                    .iter()
                    .find(|(id, _)| *id == trace)
                    .map(|(_, c)| *c)
                    .ok_or_else(|| {
                        Error::parse(
                            &file,
                            section.line,
                            format!("[params {hypothesis} {trace}] precedes [trace {trace}]"),
                        )
                    })?;
                let mut rho = None;
                let mut xi = None;
                let mut eta = None;
                let mut phi = BTreeMap::new();
                for (line, key, value) in &section.entries {
                    let num = |v: &str| {
                        v.parse::<f64>().map_err(|_| {
                            Error::parse(&file, *line, format!("invalid number '{v}'"))
                        })
                    };
                    match key.as_str() {
                        "rho" => rho = Some(num(value)?),
                        "xi" => xi = Some(num(value)?),
                        "eta" => eta = Some(num(value)?),
                        "phi" => {
                            for token in parse_list(value) {
                                let (id, v) = token.rsplit_once(':').ok_or_else(|| {
                                    Error::parse(
                                        &file,
                                        *line,
                                        format!("phi entry '{token}' is not 'id:value'"),
                                    )
                                })?;
                                phi.insert(id.trim().to_string(), num(v.trim())?);
                            }
                        }
                        other => {
                            return Err(Error::parse(
                                &file,
                                *line,
                                format!("unknown params key '{other}'"),
                            ))
                        }
                    }
                }
                let missing = |what: &str| {
                    Error::parse(
                        &file,
                        section.line,
                        format!("[params {hypothesis} {trace}] misses '{what}'"),
                    )
                };
                let model = ModelParams {
                    rho: rho.ok_or_else(|| missing("rho"))?,
                    xi: xi.ok_or_else(|| missing("xi"))?,
                    eta: eta.ok_or_else(|| missing("eta"))?,
                    phi,
                    threshold,
                };
                model.validate()?;
                params.push(ParamSection {
                    hypothesis,
                    trace,
                    params: model,
                });
            }
            Some("optimizer") => {
                for (line, key, value) in &section.entries {
                    let bad =
                        |v: &str| Error::parse(&file, *line, format!("invalid value '{v}'"));
                    match key.as_str() {
                        "seed" => optimizer.seed = value.parse().map_err(|_| bad(value))?,
                        "restarts" => {
                            optimizer.restarts = value.parse().map_err(|_| bad(value))?
                        }
                        "max-iter" => {
                            optimizer.max_iter = value.parse().map_err(|_| bad(value))?
                        }
                        "tolerance" => {
                            optimizer.tolerance = value.parse().map_err(|_| bad(value))?
                        }
                        "se" => optimizer.compute_se = value.parse().map_err(|_| bad(value))?,
                        "tree" => tree = TreeMethod::parse(value)?,
                        other => {
                            return Err(Error::parse(
                                &file,
                                *line,
                                format!("unknown optimizer key '{other}'"),
                            ))
                        }
                    }
                }
            }
            Some(other) => {
                return Err(Error::parse(
                    &file,
                    section.line,
                    format!("unknown section '{other}'"),
                ))
            }
            None => return Err(Error::parse(&file, section.line, "empty section header")),
        }
    }
    if traces.is_empty() {
        return Err(Error::parse(&file, 0, "case file declares no traces"));
    }
    if hypotheses.is_empty() {
        return Err(Error::parse(&file, 0, "case file declares no hypotheses"));
    }
    Ok(CaseConfig {
        traces,
        hypotheses,
        params,
        optimizer,
        tree,
    })
}

/// Everything a command needs: parsed data, configuration and input digests.
#[derive(Clone, Debug)]
pub struct CaseBundle {
    pub data: CaseData,
    pub config: CaseConfig,
    /// (path, sha256) per input file, in load order.
    pub digests: Vec<(String, String)>,
}

impl CaseBundle {
    /// Load and cross-validate the frequency table, case configuration and
    /// optional peak and profile files.
    pub fn load(
        frequencies: &Path,
        case_file: &Path,
        peaks: Option<&Path>,
        profiles: Option<&Path>,
    ) -> Result<CaseBundle> {
        let mut digests = Vec::new();
        let mut digest = |p: &Path| -> Result<()> {
            let bytes = std::fs::read(p).map_err(|e| {
                Error::parse(p.display().to_string(), 0, format!("cannot read: {e}"))
            })?;
            digests.push((p.display().to_string(), crate::io::report::sha256_hex(&bytes)));
            Ok(())
        };
        digest(frequencies)?;
        digest(case_file)?;
        let ladders = parse_frequencies(frequencies)?;
        let config = parse_case_config(case_file)?;
        let raw_peaks = match peaks {
            Some(p) => {
                digest(p)?;
                parse_peaks(p)?
            }
            None => Vec::new(),
        };
        let peaks_file = peaks
            .map(|p| p.display().to_string())
            .unwrap_or_else(|| "peaks.csv".to_string());
        let traces = assemble_traces(&peaks_file, &raw_peaks, &ladders, &config.traces)?;
        let profiles = match profiles {
            Some(p) => {
                digest(p)?;
                parse_profiles(p, &ladders)?
            }
            None => BTreeMap::new(),
        };
        let data = CaseData {
            ladders,
            profiles,
            traces,
        };
        data.validate()?;
        for hypothesis in &config.hypotheses {
            hypothesis.validate(&data.trace_ids())?;
        }
        Ok(CaseBundle {
            data,
            config,
            digests,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn temp_file(name: &str, content: &str) -> std::path::PathBuf {
        let path = std::env::temp_dir().join(format!(
            "peakmix-case-test-{}-{name}",
            std::process::id()
        ));
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(content.as_bytes()).unwrap();
        path
    }

    const CASE: &str = "\
# comment
[trace T1]
threshold = 50

[hypothesis Hp]
contributors = K1

[hypothesis Hd]
contributors = K1, U:u

[params Hd T1]
rho = 20
xi = 0.08
eta = 30
phi = K1:0.7, u:0.3

[optimizer]
seed = 11
restarts = 2
";

    #[test]
    fn parses_sections() {
        let path = temp_file("a.cfg", CASE);
        let config = parse_case_config(&path).unwrap();
        assert_eq!(config.traces, vec![("T1".to_string(), 50.0)]);
        assert_eq!(config.hypotheses.len(), 2);
        assert_eq!(
            config.hypotheses[1].contributors,
            vec![
                Contributor::Known("K1".into()),
                Contributor::Unknown("u".into())
            ]
        );
        assert_eq!(config.optimizer.seed, 11);
        assert_eq!(config.optimizer.restarts, 2);
        let params = config.params_for("Hd").unwrap();
        assert!((params["T1"].phi["u"] - 0.3).abs() < 1e-15);
        assert!(config.params_for("Hp").is_err());
    }

    #[test]
    fn bundle_cross_validates() {
        let freq = temp_file(
            "f.csv",
            "marker,allele,frequency\nM,16,0.4\nM,17,0.6\n",
        );
        let peaks = temp_file("p.csv", "trace,marker,allele,height\nT1,M,16,64\n");
        let prof = temp_file(
            "r.csv",
            "individual,marker,allele,count\nK1,M,16,1\nK1,M,17,1\n",
        );
        let case = temp_file("c.cfg", CASE);
        let bundle = CaseBundle::load(&freq, &case, Some(&peaks), Some(&prof)).unwrap();
        assert_eq!(bundle.data.traces[0].heights["M"], vec![64.0, 0.0]);
        assert_eq!(bundle.digests.len(), 4);
        // Peaks for an undeclared trace are rejected.
        let bad_peaks = temp_file("p2.csv", "trace,marker,allele,height\nT9,M,16,64\n");
        assert!(CaseBundle::load(&freq, &case, Some(&bad_peaks), Some(&prof)).is_err());
    }

    #[test]
    fn config_errors_carry_line_numbers() {
        let path = temp_file("bad.cfg", "[trace T1]\nthreshold = fifty\n");
        match parse_case_config(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
