use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{coupler_dephasing, estimate_amplitude_t1, eta, QubitResponse, Sequence};
use crate::error::{Error, Result};

/// Measured quantity behind a rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Ramsey,
    Echo,
    T1,
}

impl Channel {
    pub const ALL: [Channel; 3] = [Channel::Ramsey, Channel::Echo, Channel::T1];

    pub fn label(&self) -> &'static str {
        match self {
            Channel::Ramsey => "ramsey",
            Channel::Echo => "echo",
            Channel::T1 => "t1",
        }
    }
}

/// One measured rate with its coupler-independent background.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub channel: Channel,
    /// Total 1/e rate (or 1/T₁), 1/s.
    pub value: f64,
    /// Background rate, 1/s.
    pub background: f64,
    pub f_c: f64,
}

/// Parses a rate table: CSV with header `channel,value,background,f_c`,
/// `#` comment lines allowed. Row indices in errors count data rows from 1.
pub fn parse_rate_table(text: &str) -> Result<Vec<RateRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::Data(format!("rate table header: {e}")))?
        .clone();
    let expected = ["channel", "value", "background", "f_c"];
    if headers.iter().ne(expected.iter().copied()) {
        return Err(Error::Data(format!(
            "rate table header must be `{}`, got `{}`",
            expected.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut rows = Vec::new();
    for (i, rec) in reader.deserialize::<RateRow>().enumerate() {
        let row = i + 1;
        let r = rec.map_err(|e| Error::InconsistentData {
            row,
            detail: format!("unreadable row: {e}"),
        })?;
        if !(r.value.is_finite() && r.background.is_finite() && r.f_c.is_finite()) {
            return Err(Error::InconsistentData {
                row,
                detail: "non-finite entry".into(),
            });
        }
        if !(r.background > 0.0) {
            return Err(Error::InconsistentData {
                row,
                detail: format!("background must be positive, got {}", r.background),
            });
        }
        if r.value < r.background {
            return Err(Error::InconsistentData {
                row,
                detail: format!("rate {} is below its background {}", r.value, r.background),
            });
        }
        rows.push(r);
    }
    if rows.is_empty() {
        return Err(Error::Data("rate table has no data rows".into()));
    }
    Ok(rows)
}

/// `n` exponents from `lo` to `hi` inclusive, computed by index.
pub fn gamma_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if n < 2 || !(hi > lo) {
        return Err(Error::Validation(format!(
            "gamma grid [{lo}, {hi}] with {n} points"
        )));
    }
    let step = (hi - lo) / (n - 1) as f64;
    Ok((0..n)
        .map(|i| if i == n - 1 { hi } else { lo + i as f64 * step })
        .collect())
}

/// Amplitude consistent with one channel's data as a function of γ.
#[derive(Debug, Clone, Serialize)]
pub struct AmplitudeCurve {
    pub channel: Channel,
    pub gammas: Vec<f64>,
    /// Mean over the channel's rows, Φ₀/√Hz.
    pub amplitudes: Vec<f64>,
}

fn response_at(responses: &[QubitResponse], f_c: f64, row: usize) -> Result<&QubitResponse> {
    responses
        .iter()
        .find(|r| (r.f_c - f_c).abs() <= 1e-12)
        .ok_or_else(|| Error::InconsistentData {
            row,
            detail: format!("no device response evaluated at f_c = {f_c}"),
        })
}

/// Amplitude implied by one row at exponent `gamma`.
pub fn row_amplitude(
    row: &RateRow,
    index: usize,
    response: &QubitResponse,
    gamma: f64,
    window: f64,
) -> Result<f64> {
    let tag = |e: Error| match e {
        Error::InconsistentData { detail, .. } => Error::InconsistentData { row: index, detail },
        Error::UnboundedAmplitude(d) => Error::UnboundedAmplitude(format!("row {index}: {d}")),
        other => other,
    };
    match row.channel {
        Channel::T1 => estimate_amplitude_t1(
            row.value,
            row.background,
            response.element_na,
            response.omega01,
            gamma,
        )
        .map_err(tag),
        Channel::Ramsey | Channel::Echo => {
            let seq = if row.channel == Channel::Ramsey {
                Sequence::Ramsey
            } else {
                Sequence::Echo
            };
            let g_phi = coupler_dephasing(row.value, row.background, gamma, index)?;
            if g_phi == 0.0 {
                return Ok(0.0);
            }
            if response.kappa == 0.0 {
                return Err(Error::UnboundedAmplitude(format!(
                    "row {index}: zero sensitivity at f_c = {}",
                    row.f_c
                )));
            }
            let eta = eta(seq, gamma, window)?;
            Ok(g_phi.powf(0.5 * (1.0 + gamma)) / (response.kappa.abs() * eta.sqrt()))
        }
    }
}

/// Per-channel amplitude curves over `gammas`. `responses` must cover every
/// row's coupler bias.
pub fn amplitude_curves(
    rows: &[RateRow],
    responses: &[QubitResponse],
    gammas: &[f64],
    window: f64,
) -> Result<Vec<AmplitudeCurve>> {
    let mut by_channel: BTreeMap<Channel, Vec<(usize, &RateRow)>> = BTreeMap::new();
    for (i, r) in rows.iter().enumerate() {
        by_channel.entry(r.channel).or_default().push((i + 1, r));
    }
    by_channel
        .into_iter()
        .map(|(channel, rs)| {
            let amplitudes = gammas
                .iter()
                .map(|&g| -> Result<f64> {
                    let mut sum = 0.0;
                    for &(idx, r) in &rs {
                        sum +=
                            row_amplitude(r, idx, response_at(responses, r.f_c, idx)?, g, window)?;
                    }
                    Ok(sum / rs.len() as f64)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(AmplitudeCurve {
                channel,
                gammas: gammas.to_vec(),
                amplitudes,
            })
        })
        .collect()
}

/// Crossing of two channels' amplitude curves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Intersection {
    pub channels: (Channel, Channel),
    pub gamma: f64,
    pub amplitude: f64,
}

/// Pairwise crossings of the channel curves and the region they bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintTriangle {
    pub vertices: Vec<Intersection>,
    /// Channel pairs whose curves do not cross on the grid.
    pub missing: Vec<(Channel, Channel)>,
    pub amplitude_bounds: Option<(f64, f64)>,
    pub gamma_bounds: Option<(f64, f64)>,
}

fn crossing(a: &AmplitudeCurve, b: &AmplitudeCurve) -> Option<(f64, f64)> {
    let d: Vec<f64> = a
        .amplitudes
        .iter()
        .zip(&b.amplitudes)
        .map(|(x, y)| x - y)
        .collect();
    for i in 0..d.len() {
        if d[i] == 0.0 {
            return Some((a.gammas[i], a.amplitudes[i]));
        }
        if i + 1 < d.len() && d[i].signum() != d[i + 1].signum() && d[i + 1] != 0.0 {
            let t = d[i] / (d[i] - d[i + 1]);
            let g = a.gammas[i] + t * (a.gammas[i + 1] - a.gammas[i]);
            let amp = a.amplitudes[i] + t * (a.amplitudes[i + 1] - a.amplitudes[i]);
            return Some((g, amp));
        }
    }
    None
}

pub fn constraint_triangle(curves: &[AmplitudeCurve]) -> ConstraintTriangle {
    let mut vertices = Vec::new();
    let mut missing = Vec::new();
    for i in 0..curves.len() {
        for j in i + 1..curves.len() {
            let pair = (curves[i].channel, curves[j].channel);
            match crossing(&curves[i], &curves[j]) {
                Some((gamma, amplitude)) => vertices.push(Intersection {
                    channels: pair,
                    gamma,
                    amplitude,
                }),
                None => missing.push(pair),
            }
        }
    }
    let bounds = |f: fn(&Intersection) -> f64| {
        (!vertices.is_empty()).then(|| {
            vertices
                .iter()
                .map(f)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
                    (lo.min(x), hi.max(x))
                })
        })
    };
    ConstraintTriangle {
        amplitude_bounds: bounds(|v| v.amplitude),
        gamma_bounds: bounds(|v| v.gamma),
        vertices,
        missing,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TABLE: &str = "# measured\nchannel,value,background,f_c\nramsey,2.0e6,1.4e5,0.45\necho, 9e5 ,1.4e5,0.45\nt1,4e5,2.857e5,0.48\n";

    #[test]
    fn parses_rows() {
        let rows = parse_rate_table(TABLE).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[1].channel, Channel::Echo);
        assert_eq!(rows[1].value, 9e5);
    }

    #[test]
    fn rate_below_background_names_row() {
        let t = "channel,value,background,f_c\nramsey,2e6,1e5,0.45\necho,1e4,1e5,0.45\n";
        match parse_rate_table(t) {
            Err(Error::InconsistentData { row, .. }) => assert_eq!(row, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_header_and_channel() {
        assert!(matches!(parse_rate_table("a,b,c,d\n"), Err(Error::Data(_))));
        assert!(matches!(
            parse_rate_table("channel,value,background,f_c\nspin,1,1,0\n"),
            Err(Error::InconsistentData { row: 1, .. })
        ));
        assert!(parse_rate_table("channel,value,background,f_c\n").is_err());
    }

    #[test]
    fn grid_has_exact_endpoints() {
        let g = gamma_grid(0.8, 1.0, 21).unwrap();
        assert_eq!((g[0], g[20]), (0.8, 1.0));
        assert!((g[11] - 0.91).abs() < 1e-12);
    }

    #[test]
    fn triangle_from_crossing_lines() {
        let gammas = gamma_grid(0.8, 1.0, 5).unwrap();
        let line = |c, a: f64, b: f64| AmplitudeCurve {
            channel: c,
            gammas: gammas.clone(),
            amplitudes: gammas.iter().map(|g| a + b * g).collect(),
        };
        let curves = [
            line(Channel::Ramsey, 0.0, 1.0),
            line(Channel::Echo, 1.8, -1.0),
            line(Channel::T1, 0.95, 0.0),
        ];
        let t = constraint_triangle(&curves);
        assert_eq!(t.vertices.len(), 3);
        let (lo, hi) = t.gamma_bounds.unwrap();
        assert!((lo - 0.85).abs() < 1e-12 && (hi - 0.95).abs() < 1e-12);
        assert!(t.missing.is_empty());
    }
}
