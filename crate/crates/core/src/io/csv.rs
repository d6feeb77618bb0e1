//! Plain-text mirrors: `#`-prefixed metadata lines, one header row, then data.

use std::io::Write;

use crate::error::Result;
use crate::helmholtz::FreqTrace;
use crate::io::Metadata;
use crate::wave::TimeTrace;

fn write_meta(w: &mut impl Write, meta: &Metadata) -> Result<()> {
    writeln!(w, "# code_version = {}", meta.code_version)?;
    for (k, v) in &meta.entries {
        writeln!(w, "# {k} = {v}")?;
    }
    Ok(())
}

/// Columns named by `header`; rows written with shortest round-trip formatting.
pub fn write_table(mut w: impl Write, meta: &Metadata, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    write_meta(&mut w, meta)?;
    writeln!(w, "{}", header.join(","))?;
    for r in rows {
        let cells: Vec<String> = r.iter().map(|v| format!("{v:?}")).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

/// One row per point: coordinates, weight, then samples at each time.
pub fn write_trace_csv(w: impl Write, trace: &TimeTrace, meta: &Metadata) -> Result<()> {
    let mut header = vec!["x1".to_string(), "x2".into(), "x3".into(), "weight".into()];
    header.extend((0..trace.n_samples()).map(|n| format!("t{n}")));
    let rows: Vec<Vec<f64>> = (0..trace.sampling.len())
        .map(|i| {
            let p = trace.sampling.points[i];
            let mut r = vec![p.x1, p.x2, p.x3, trace.sampling.weights[i]];
            r.extend_from_slice(trace.series(i));
            r
        })
        .collect();
    let h: Vec<&str> = header.iter().map(String::as_str).collect();
    write_table(w, &meta.clone().with("dt", trace.dt), &h, &rows)
}

/// One row per (point, k): coordinates, k, real and imaginary parts.
pub fn write_spectrum_csv(w: impl Write, freq: &FreqTrace, meta: &Metadata) -> Result<()> {
    let mut rows = Vec::with_capacity(freq.values.len());
    for i in 0..freq.sampling.len() {
        let p = freq.sampling.points[i];
        for (k, v) in freq.ks.values().iter().zip(freq.at_point(i)) {
            rows.push(vec![i as f64, p.x1, p.x2, p.x3, *k, v.re, v.im]);
        }
    }
    write_table(w, meta, &["point", "x1", "x2", "x3", "k", "re", "im"], &rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_values_round_trip_through_text() {
        let rows = vec![vec![0.1, 1.0 / 3.0], vec![-2.5e-300, f64::MAX]];
        let mut buf = Vec::new();
        write_table(&mut buf, &Metadata::new().with("k", 1), &["a", "b"], &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let data: Vec<Vec<f64>> = text
            .lines()
            .filter(|l| !l.starts_with('#'))
            .skip(1)
            .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
            .collect();
        assert_eq!(data, rows);
        assert!(text.contains("# k = 1"));
    }
}
