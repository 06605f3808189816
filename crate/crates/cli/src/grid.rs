//! Grid specs for `scan`: `x=-1:1:21,y=-1:1:21,q=0.3`.
//!
//! An axis is `name=lo:hi:n`, a fixed coordinate is `name=value`. One or
//! two axes; coordinates left out sit at the centre of the sample box.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub coord: usize,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Axis {
    pub fn value(&self, i: usize) -> f64 {
        if self.n == 1 {
            return self.lo;
        }
        self.lo + (self.hi - self.lo) * i as f64 / (self.n - 1) as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    /// Values of the coordinates that do not vary.
    pub base: [f64; 4],
    /// Rows first, then columns.
    pub axes: Vec<Axis>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridError(pub String);

impl fmt::Display for GridError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "grid spec: {}", self.0)
    }
}

impl std::error::Error for GridError {}

const MAX_CELLS: usize = 1_000_000;

impl Grid {
    pub fn parse(spec: &str, coords: &[String; 4], sample_box: &[(f64, f64); 4]) -> Result<Grid, GridError> {
        let bad = |m: String| GridError(m);
        let mut base: [f64; 4] = std::array::from_fn(|i| 0.5 * (sample_box[i].0 + sample_box[i].1));
        let mut axes: Vec<Axis> = vec![];
        let mut seen = [false; 4];
        for part in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (name, rhs) = part.split_once('=').ok_or_else(|| bad(format!("expected name=value in `{part}`")))?;
            let name = name.trim();
            let coord = coords
                .iter()
                .position(|c| c == name)
                .ok_or_else(|| bad(format!("unknown coordinate `{name}` (have {})", coords.join(", "))))?;
            if std::mem::replace(&mut seen[coord], true) {
                return Err(bad(format!("coordinate `{name}` given twice")));
            }
            let num = |s: &str| -> Result<f64, GridError> {
                let v: f64 = s.trim().parse().map_err(|_| bad(format!("bad number `{}`", s.trim())))?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(bad(format!("non-finite value `{}`", s.trim())))
                }
            };
            let fields: Vec<&str> = rhs.split(':').collect();
            match fields.as_slice() {
                [v] => base[coord] = num(v)?,
                [lo, hi, n] => {
                    let n: usize = n.trim().parse().map_err(|_| bad(format!("bad count `{}`", n.trim())))?;
                    if n == 0 {
                        return Err(bad(format!("axis `{name}` needs at least one point")));
                    }
                    axes.push(Axis { coord, lo: num(lo)?, hi: num(hi)?, n });
                }
                _ => return Err(bad(format!("expected value or lo:hi:n for `{name}`"))),
            }
        }
        if axes.is_empty() || axes.len() > 2 {
            return Err(bad(format!("need one or two axes, got {}", axes.len())));
        }
        if axes.iter().map(|a| a.n).product::<usize>() > MAX_CELLS {
            return Err(bad(format!("more than {MAX_CELLS} cells")));
        }
        Ok(Grid { base, axes })
    }

    pub fn shape(&self) -> (usize, usize) {
        match self.axes.as_slice() {
            [a] => (1, a.n),
            [a, b] => (a.n, b.n),
            _ => unreachable!("validated on parse"),
        }
    }

    /// Coordinates of cell (row, col).
    pub fn point(&self, row: usize, col: usize) -> [f64; 4] {
        let mut p = self.base;
        match self.axes.as_slice() {
            [a] => p[a.coord] = a.value(col),
            [a, b] => {
                p[a.coord] = a.value(row);
                p[b.coord] = b.value(col);
            }
            _ => unreachable!("validated on parse"),
        }
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coords() -> [String; 4] {
        ["q", "p", "x", "y"].map(String::from)
    }

    const BOX: [(f64, f64); 4] = [(-1.0, 1.0), (0.0, 2.0), (-1.0, 1.0), (-1.0, 1.0)];

    #[test]
    fn two_axes_and_a_fixed_coordinate() {
        let g = Grid::parse("x=-1:1:5, y=0:2:3, q=0.25", &coords(), &BOX).unwrap();
        assert_eq!(g.shape(), (5, 3));
        assert_eq!(g.point(0, 0), [0.25, 1.0, -1.0, 0.0]);
        assert_eq!(g.point(4, 2), [0.25, 1.0, 1.0, 2.0]);
        assert_eq!(g.point(2, 1), [0.25, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn single_axis_is_one_row() {
        let g = Grid::parse("p=0:1:2", &coords(), &BOX).unwrap();
        assert_eq!(g.shape(), (1, 2));
        assert_eq!(g.point(0, 1), [0.0, 1.0, 0.0, 0.0]);
        let g = Grid::parse("p=0.5:1:1", &coords(), &BOX).unwrap();
        assert_eq!(g.point(0, 0)[1], 0.5);
    }

    #[test]
    fn rejects_malformed_specs() {
        for s in ["", "q=1", "z=0:1:3", "x=0:1", "x=0:1:0", "x=a:1:3", "x=0:1:3,x=0:1:3", "x=0:1:3,y=0:1:3,q=0:1:3", "x"] {
            assert!(Grid::parse(s, &coords(), &BOX).is_err(), "{s}");
        }
    }
}
