use serde::{Deserialize, Serialize};

use crate::adversary::EveStrategy;
use crate::error::{QsdcError, Result};
use crate::stats::theoretical_eve_error_rate;

use super::config::{parse_json, RunConfig};
use super::run::{check_name, cmd_run, expectation, RunOptions};

/// Axes to sweep. An empty axis keeps the base config's value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default)]
    pub d: Vec<usize>,
    #[serde(default)]
    pub m_bases: Vec<usize>,
    #[serde(default)]
    pub decoy_count: Vec<usize>,
    #[serde(default)]
    pub eve: Vec<EveStrategy>,
}

/// Largest number of grid points a sweep accepts.
pub const MAX_GRID_POINTS: usize = 10_000;

pub fn parse_sweep_spec(text: &str) -> Result<SweepSpec> {
    let spec: SweepSpec = parse_json(text)?;
    let points = [spec.d.len(), spec.m_bases.len(), spec.decoy_count.len(), spec.eve.len()]
        .iter()
        .try_fold(1usize, |acc, &n| acc.checked_mul(n.max(1)));
    match points {
        Some(p) if p <= MAX_GRID_POINTS => Ok(spec),
        _ => Err(QsdcError::config(
            "<root>",
            format!("sweep grid exceeds {MAX_GRID_POINTS} points"),
        )),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    /// `(d, M)` outside the built-in basis envelope.
    Unsupported,
    /// Any other configuration error at this point.
    Invalid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub d: usize,
    pub m_bases: usize,
    pub decoy_count: Option<usize>,
    pub eve: String,
    pub status: RowStatus,
    pub note: String,
    pub trials: usize,
    pub check: Option<String>,
    pub theoretical_eve_error_rate: Option<f64>,
    pub expected_rate: Option<f64>,
    pub empirical_rate: Option<f64>,
    pub errors: Option<u64>,
    pub samples: Option<u64>,
    pub ci95_lo: Option<f64>,
    pub ci95_hi: Option<f64>,
    pub abort_fraction: Option<f64>,
    pub message_fidelity: Option<f64>,
}

/// Short label such as `intercept_resend[charlie_to_bob]@3`.
pub fn eve_label(eve: &EveStrategy) -> String {
    match eve {
        EveStrategy::None => "none".into(),
        EveStrategy::DishonestServer => "dishonest_server".into(),
        EveStrategy::InterceptResend { legs, at_relay } => {
            let legs: Vec<String> = legs
                .iter()
                .map(|l| serde_json::to_value(l).expect("leg serializes").as_str().unwrap_or("").to_string())
                .collect();
            let mut s = format!("intercept_resend[{}]", legs.join("+"));
            if let Some(r) = at_relay {
                s.push_str(&format!("@{r}"));
            }
            s
        }
    }
}

fn axis<T: Clone>(values: &[T], base: T) -> Vec<T> {
    if values.is_empty() {
        vec![base]
    } else {
        values.to_vec()
    }
}

/// Every grid point of `spec` applied to `base`, in axis order
/// `d, m_bases, decoy_count, eve`.
pub fn grid(base: &RunConfig, spec: &SweepSpec) -> Vec<RunConfig> {
    let mut out = Vec::new();
    let decoys: Vec<Option<usize>> = if spec.decoy_count.is_empty() {
        vec![base.decoy_count]
    } else {
        spec.decoy_count.iter().map(|&n| Some(n)).collect()
    };
    for d in axis(&spec.d, base.d) {
        for m in axis(&spec.m_bases, base.m_bases) {
            for &decoy_count in &decoys {
                for eve in axis(&spec.eve, base.eve.clone()) {
                    let mut c = base.clone();
                    c.d = d;
                    c.m_bases = m;
                    c.decoy_count = decoy_count;
                    c.eve = eve;
                    out.push(c);
                }
            }
        }
    }
    out
}

fn blank_row(c: &RunConfig, status: RowStatus, note: String) -> SweepRow {
    SweepRow {
        d: c.d,
        m_bases: c.m_bases,
        decoy_count: c.decoy_count,
        eve: eve_label(&c.eve),
        status,
        note,
        trials: c.trials,
        check: None,
        theoretical_eve_error_rate: theoretical_eve_error_rate(c.d, c.m_bases).ok(),
        expected_rate: None,
        empirical_rate: None,
        errors: None,
        samples: None,
        ci95_lo: None,
        ci95_hi: None,
        abort_fraction: None,
        message_fidelity: None,
    }
}

/// Runs every grid point. Points that cannot run produce a marked row.
pub fn cmd_sweep(base: &RunConfig, spec: &SweepSpec, opts: &RunOptions) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for c in grid(base, spec) {
        if let Err(e) = c.validate() {
            let status = match &e {
                QsdcError::Config { field, reason } if field == "m_bases" && reason.contains("unsupported") => {
                    RowStatus::Unsupported
                }
                _ => RowStatus::Invalid,
            };
            rows.push(blank_row(&c, status, e.to_string()));
            continue;
        }
        let report = cmd_run(&c, &RunOptions { parallel: opts.parallel, transcripts: None })?;
        let a = &report.aggregate;
        let exp = expectation(&c.session_config(0))?;
        let mut row = blank_row(&c, RowStatus::Ok, String::new());
        row.check = Some(check_name(exp.check).to_string());
        row.expected_rate = Some(exp.expected_rate);
        row.empirical_rate = a.empirical.map(|e| e.rate);
        row.errors = a.empirical.map(|e| e.errors);
        row.samples = a.empirical.map(|e| e.samples);
        row.ci95_lo = a.empirical.map(|e| e.ci95.0);
        row.ci95_hi = a.empirical.map(|e| e.ci95.1);
        row.abort_fraction = Some(a.abort_fraction);
        row.message_fidelity = a.message_fidelity;
        rows.push(row);
    }
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("csv row serializes");
    }
    if rows.is_empty() {
        return String::new();
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv is utf-8")
}

#[derive(Serialize)]
struct SweepJson<'a> {
    schema_version: u32,
    rows: &'a [SweepRow],
}

pub fn sweep_json(rows: &[SweepRow]) -> String {
    let mut s = serde_json::to_string_pretty(&SweepJson {
        schema_version: super::run::REPORT_SCHEMA_VERSION,
        rows,
    })
    .expect("sweep serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::ChannelLeg;
    use crate::harness::parse_run_config;

    fn base() -> RunConfig {
        parse_run_config(r#"{"d":3,"m_bases":2,"n_pairs":200,"trials":1,"epsilon_t":0.99}"#).unwrap()
    }

    #[test]
    fn empty_spec_is_one_row() {
        let rows = cmd_sweep(&base(), &parse_sweep_spec("{}").unwrap(), &RunOptions::default()).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].status, RowStatus::Ok);
    }

    #[test]
    fn theoretical_column_over_m() {
        let spec = parse_sweep_spec(r#"{"m_bases":[2,3,4,5]}"#).unwrap();
        let rows = cmd_sweep(&base(), &spec, &RunOptions::default()).unwrap();
        let th: Vec<f64> = rows[..3].iter().map(|r| r.theoretical_eve_error_rate.unwrap()).collect();
        assert!((th[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((th[1] - 4.0 / 9.0).abs() < 1e-15);
        assert_eq!(th[2], 0.5);
        assert_eq!(rows[3].status, RowStatus::Unsupported);
        assert!(rows[3].theoretical_eve_error_rate.is_none());
    }

    #[test]
    fn theoretical_column_over_d() {
        let spec = parse_sweep_spec(r#"{"d":[2,3,5]}"#).unwrap();
        let rows = cmd_sweep(&base(), &spec, &RunOptions::default()).unwrap();
        let th: Vec<f64> = rows.iter().map(|r| r.theoretical_eve_error_rate.unwrap()).collect();
        assert_eq!(th[0], 0.25);
        assert!((th[1] - 1.0 / 3.0).abs() < 1e-15);
        assert!((th[2] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn unsupported_and_invalid_rows_do_not_stop_the_sweep() {
        let spec = parse_sweep_spec(r#"{"d":[4],"m_bases":[2,3],"decoy_count":[10,500]}"#).unwrap();
        let rows = cmd_sweep(&base(), &spec, &RunOptions::default()).unwrap();
        let st: Vec<RowStatus> = rows.iter().map(|r| r.status).collect();
        assert_eq!(
            st,
            vec![RowStatus::Ok, RowStatus::Invalid, RowStatus::Unsupported, RowStatus::Unsupported]
        );
    }

    #[test]
    fn labels_and_csv() {
        let e = EveStrategy::InterceptResend {
            legs: [ChannelLeg::CharlieToBob, ChannelLeg::BobToAlice].into(),
            at_relay: Some(2),
        };
        assert_eq!(eve_label(&e), "intercept_resend[charlie_to_bob+bob_to_alice]@2");
        let rows = cmd_sweep(&base(), &SweepSpec::default(), &RunOptions::default()).unwrap();
        let text = sweep_csv(&rows);
        assert!(text.starts_with("d,m_bases,decoy_count,eve,status,note,trials,check,theoretical_eve_error_rate"));
    }

    #[test]
    fn grid_limits() {
        let big: Vec<usize> = (0..101).collect();
        let spec = serde_json::json!({"d": big, "m_bases": big}).to_string();
        assert!(parse_sweep_spec(&spec).is_err());
        assert!(parse_sweep_spec(r#"{"d":[2],"speed":[1]}"#).is_err());
    }
}
