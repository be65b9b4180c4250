//! Time-grid syntax: `start:stop:geometric|linear:count`, `start:stop:count`
//! (geometric), a comma list, or a single value.

use crate::error::{Error, Result};

fn number(s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("'{s}' is not a number")))
}

fn positive_times(ts: Vec<f64>) -> Result<Vec<f64>> {
    if let Some(t) = ts.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
        return Err(Error::Domain(format!("grid times must be positive, got {t}")));
    }
    Ok(ts)
}

pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        [single] if single.contains(',') => positive_times(single.split(',').map(number).collect::<Result<_>>()?),
        [single] => positive_times(vec![number(single)?]),
        [start, stop, count] => build(number(start)?, number(stop)?, "geometric", count),
        [start, stop, kind, count] => build(number(start)?, number(stop)?, kind.trim(), count),
        _ => Err(Error::Parse(format!("grid '{spec}' is not start:stop:geometric|linear:count"))),
    }
}

fn build(start: f64, stop: f64, kind: &str, count: &str) -> Result<Vec<f64>> {
    let count: usize =
        count.trim().parse().map_err(|_| Error::Parse(format!("grid count '{count}' is not an integer")))?;
    if count == 0 {
        return Err(Error::Domain("grid needs at least one point".into()));
    }
    positive_times(vec![start, stop])?;
    if count > 1 && stop <= start {
        return Err(Error::Domain(format!("grid stop {stop} must exceed start {start}")));
    }
    let ts = match kind {
        "geometric" | "geom" | "log" => crate::trace_expansion::geometric_grid(start, stop, count),
        "linear" | "lin" => {
            if count == 1 {
                vec![start]
            } else {
                let h = (stop - start) / (count - 1) as f64;
                (0..count).map(|i| if i + 1 == count { stop } else { start + h * i as f64 }).collect()
            }
        }
        other => return Err(Error::Parse(format!("unknown grid spacing '{other}'"))),
    };
    positive_times(ts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_grid_endpoints() {
        let g = parse_grid("0.01:10:geometric:40").unwrap();
        assert_eq!(g.len(), 40);
        assert_eq!(g[0], 0.01);
        assert_eq!(g[39], 10.0);
        assert!((g[1] / g[0] - g[39] / g[38]).abs() < 1e-12);
        assert_eq!(parse_grid("0.01:10:40").unwrap(), g);
    }

    #[test]
    fn linear_and_lists() {
        assert_eq!(parse_grid("1:3:linear:3").unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(parse_grid("0.5").unwrap(), vec![0.5]);
        assert_eq!(parse_grid("0.5,2").unwrap(), vec![0.5, 2.0]);
    }

    #[test]
    fn bad_grids() {
        assert!(matches!(parse_grid("-1"), Err(Error::Domain(_))));
        assert!(matches!(parse_grid("1:0.5:linear:3"), Err(Error::Domain(_))));
        assert!(matches!(parse_grid("1:2:cubic:3"), Err(Error::Parse(_))));
        assert!(matches!(parse_grid("a:b"), Err(Error::Parse(_))));
        assert!(matches!(parse_grid("1:2:0"), Err(Error::Domain(_))));
    }
}
