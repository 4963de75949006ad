//! Versioned CSV series format.
//!
//! Row 1 is `# superrad-series v1` followed by `key=value` metadata, row 2
//! the column header. Every column with errors is followed by `<name>_err`.
//! Numbers use the shortest representation that round-trips.

use superrad::observables::{Column, ObservableSeries, RunMeta};

pub const SCHEMA: &str = "superrad-series v1";

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "-".to_string(), |x| x.to_string())
}

pub fn to_csv(s: &ObservableSeries) -> String {
    let m = &s.meta;
    let mut out = format!(
        "# {SCHEMA} backend={} model={} n={} seed={} n_traj={} dt={} bond_dim={}\n",
        m.backend,
        m.model,
        m.n,
        opt(&m.seed),
        opt(&m.n_traj),
        m.dt,
        opt(&m.bond_dim)
    );
    let mut header = vec!["t".to_string()];
    for c in &s.columns {
        header.push(c.name.clone());
        if c.errors.is_some() {
            header.push(format!("{}_err", c.name));
        }
    }
    out.push_str(&header.join(","));
    out.push('\n');
    for (k, t) in s.times.iter().enumerate() {
        let mut row = vec![t.to_string()];
        for c in &s.columns {
            row.push(c.values[k].to_string());
            if let Some(e) = &c.errors {
                row.push(e[k].to_string());
            }
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn from_csv(text: &str) -> Result<ObservableSeries, String> {
    let mut lines = text.lines();
    let first = lines.next().ok_or("empty file")?;
    let meta_text = first
        .strip_prefix("# ")
        .and_then(|r| r.strip_prefix(SCHEMA))
        .ok_or_else(|| format!("line 1: expected `# {SCHEMA}`"))?;
    let mut meta = RunMeta::default();
    for kv in meta_text.split_whitespace() {
        let (k, v) = kv.split_once('=').ok_or_else(|| format!("line 1: malformed `{kv}`"))?;
        let bad = |_: std::num::ParseIntError| format!("line 1: bad value for {k}");
        match k {
            "backend" => meta.backend = v.into(),
            "model" => meta.model = v.into(),
            "n" => meta.n = v.parse().map_err(bad)?,
            "dt" => meta.dt = v.parse().map_err(|_| format!("line 1: bad value for {k}"))?,
            "seed" => meta.seed = (v != "-").then(|| v.parse()).transpose().map_err(bad)?,
            "n_traj" => meta.n_traj = (v != "-").then(|| v.parse()).transpose().map_err(bad)?,
            "bond_dim" => meta.bond_dim = (v != "-").then(|| v.parse()).transpose().map_err(bad)?,
            _ => return Err(format!("line 1: unknown key `{k}`")),
        }
    }
    let header: Vec<&str> = lines.next().ok_or("line 2: missing header")?.split(',').collect();
    if header.first() != Some(&"t") {
        return Err("line 2: first column must be `t`".into());
    }
    let mut times = Vec::new();
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); header.len() - 1];
    for (i, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != header.len() {
            return Err(format!("line {}: expected {} fields, got {}", i + 3, header.len(), fields.len()));
        }
        let parse = |f: &str| f.parse::<f64>().map_err(|_| format!("line {}: bad number `{f}`", i + 3));
        times.push(parse(fields[0])?);
        for (c, f) in cols.iter_mut().zip(&fields[1..]) {
            c.push(parse(f)?);
        }
    }
    let mut columns = Vec::new();
    let mut k = 1;
    while k < header.len() {
        let name = header[k].to_string();
        let has_err = header.get(k + 1).is_some_and(|h| *h == format!("{name}_err"));
        columns.push(Column {
            name,
            values: cols[k - 1].clone(),
            errors: has_err.then(|| cols[k].clone()),
        });
        k += if has_err { 2 } else { 1 };
    }
    Ok(ObservableSeries { times, columns, meta })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ObservableSeries {
        let mut s = ObservableSeries::new(
            vec![0.0, 0.1, 0.2],
            RunMeta {
                backend: "mps".into(),
                model: "squeezed".into(),
                n: 10,
                seed: Some(7),
                n_traj: Some(100),
                dt: 1e-3,
                bond_dim: Some(8),
            },
        );
        s.push("Sz_over_N", vec![0.5, 0.1 + 0.2, -1.0 / 3.0], Some(vec![0.0, 1e-3, 2e-17]));
        s.push("xi_R2", vec![f64::NAN, 1.0, 0.5], None);
        s
    }

    #[test]
    fn schema_line_and_header() {
        let text = to_csv(&sample());
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("# superrad-series v1 "));
        assert_eq!(lines.next().unwrap(), "t,Sz_over_N,Sz_over_N_err,xi_R2");
    }

    #[test]
    fn round_trip_is_exact() {
        let s = sample();
        let back = from_csv(&to_csv(&s)).unwrap();
        assert_eq!(back.meta, s.meta);
        assert_eq!(back.times, s.times);
        assert_eq!(back.columns[0], s.columns[0]);
        assert!(back.columns[1].values[0].is_nan());
        assert_eq!(to_csv(&back), to_csv(&s));
    }

    #[test]
    fn malformed_input_reports_line() {
        assert!(from_csv("t,a\n0,1\n").unwrap_err().contains("line 1"));
        let mut text = to_csv(&sample());
        text.push_str("0.3,1\n");
        assert!(from_csv(&text).unwrap_err().contains("line 6"));
    }
}
