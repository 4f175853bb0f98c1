//! Grid arguments: an explicit list `a,b,c` or a spaced range
//! `lin:start:stop:n` / `log:start:stop:n`.

use std::str::FromStr;

#[derive(Clone, Debug, PartialEq)]
pub struct Grid(Vec<f64>);

impl Grid {
    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

fn number(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("'{s}' is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("'{s}' is not finite"))
    }
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let values = match s.split(':').collect::<Vec<_>>()[..] {
            [kind @ ("lin" | "log"), start, stop, n] => {
                let (start, stop) = (number(start)?, number(stop)?);
                let n: usize = n.trim().parse().map_err(|_| format!("'{n}' is not a point count"))?;
                if n == 0 {
                    return Err("a grid needs at least one point".into());
                }
                if kind == "log" && !(start > 0.0 && stop > 0.0) {
                    return Err("log grids need positive end points".into());
                }
                if n == 1 {
                    vec![start]
                } else {
                    (0..n)
                        .map(|i| {
                            let t = i as f64 / (n - 1) as f64;
                            match kind {
                                "lin" => start + t * (stop - start),
                                _ => (start.ln() + t * (stop.ln() - start.ln())).exp(),
                            }
                        })
                        .collect()
                }
            }
            [_] => s.split(',').map(number).collect::<Result<Vec<_>, _>>()?,
            _ => return Err(format!("'{s}' is neither a list nor lin:/log:start:stop:n")),
        };
        if values.is_empty() {
            return Err("grid is empty".into());
        }
        if let Some(w) = values.windows(2).find(|w| !(w[0] < w[1])) {
            return Err(format!("grid must be strictly ascending, found {} then {}", w[0], w[1]));
        }
        Ok(Grid(values))
    }
}
