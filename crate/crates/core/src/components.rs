//! Connected components of a sampled planar set.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// Components smaller than this many cells are treated as sampling noise.
pub const MIN_CELLS: usize = 4;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Window {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Components {
    pub count: usize,
    pub step: f64,
    pub nx: usize,
    pub ny: usize,
    /// Cell counts of the retained components, in label order.
    pub sizes: Vec<usize>,
    /// Row-major labels (`y` outer): 0 outside, -1 noise, k >= 1 component k.
    #[serde(skip)]
    pub labels: Vec<i32>,
    pub window: Window,
}

impl Components {
    pub fn label(&self, i: usize, j: usize) -> i32 {
        self.labels[j * self.nx + i]
    }

    pub fn node(&self, i: usize, j: usize) -> (f64, f64) {
        (self.window.x0 + i as f64 * self.step, self.window.y0 + j as f64 * self.step)
    }

    /// `x,y,label` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,label\n");
        for j in 0..self.ny {
            for i in 0..self.nx {
                let (x, y) = self.node(i, j);
                out.push_str(&format!("{x},{y},{}\n", self.label(i, j)));
            }
        }
        out
    }
}

/// Flood fill with 4-adjacency over the lattice `x0 + i h`, `y0 + j h`.
pub fn connected_components<F: Fn(f64, f64) -> bool + Sync>(member: F, window: Window, h: f64) -> Result<Components> {
    if !(h > 0.0) || !(window.x1 > window.x0) || !(window.y1 > window.y0) {
        return Err(Error::InvalidParameter("need h > 0 and a nonempty window".into()));
    }
    let nx = ((window.x1 - window.x0) / h + 1e-9).floor() as usize + 1;
    let ny = ((window.y1 - window.y0) / h + 1e-9).floor() as usize + 1;
    let inside: Vec<bool> = (0..nx * ny)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k % nx, k / nx);
            member(window.x0 + i as f64 * h, window.y0 + j as f64 * h)
        })
        .collect();
    if !inside.iter().any(|&b| b) {
        return Err(Error::EmptyRegion("no lattice node is a member".into()));
    }
    let mut labels = vec![0i32; nx * ny];
    let mut sizes = Vec::new();
    let mut stack = Vec::new();
    let mut members = Vec::new();
    for start in 0..nx * ny {
        if !inside[start] || labels[start] != 0 {
            continue;
        }
        let provisional = -(start as i32) - 2;
        members.clear();
        stack.push(start);
        labels[start] = provisional;
        while let Some(k) = stack.pop() {
            members.push(k);
            let (i, j) = (k % nx, k / nx);
            let mut visit = |q: usize| {
                if inside[q] && labels[q] == 0 {
                    labels[q] = provisional;
                    stack.push(q);
                }
            };
            if i > 0 {
                visit(k - 1);
            }
            if i + 1 < nx {
                visit(k + 1);
            }
            if j > 0 {
                visit(k - nx);
            }
            if j + 1 < ny {
                visit(k + nx);
            }
        }
        let label = if members.len() >= MIN_CELLS {
            sizes.push(members.len());
            sizes.len() as i32
        } else {
            -1
        };
        for &k in &members {
            labels[k] = label;
        }
    }
    Ok(Components { count: sizes.len(), step: h, nx, ny, sizes, labels, window })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(r: f64) -> Window {
        Window { x0: -r, x1: r, y0: -r, y1: r }
    }

    #[test]
    fn unit_disc_is_one_component() {
        let c = connected_components(|x, y| x * x + y * y < 1.0, square(2.0), 0.05).unwrap();
        assert_eq!(c.count, 1);
    }

    #[test]
    fn two_discs() {
        let f = |x: f64, y: f64| (x - 1.5).powi(2) + y * y < 1.0 || (x + 1.5).powi(2) + y * y < 1.0;
        let c = connected_components(f, square(3.0), 0.05).unwrap();
        assert_eq!(c.count, 2);
        assert!(c.sizes[0].abs_diff(c.sizes[1]) <= 4);
    }

    #[test]
    fn tiny_specks_are_noise() {
        let f = |x: f64, y: f64| x * x + y * y < 1.0 || ((x - 1.8).abs() < 0.01 && y.abs() < 0.01);
        let c = connected_components(f, square(2.0), 0.05).unwrap();
        assert_eq!(c.count, 1);
        assert!(c.labels.contains(&-1));
    }

    #[test]
    fn empty_is_an_error() {
        assert!(connected_components(|_, _| false, square(1.0), 0.1).is_err());
    }

    #[test]
    fn csv_has_all_nodes() {
        let c = connected_components(|x, _| x > 0.0, square(1.0), 0.5).unwrap();
        assert_eq!(c.to_csv().lines().count(), 1 + c.nx * c.ny);
    }
}
