//! Grid sampling of the reachable workspace.

use std::io::{self, Write};

use thiserror::Error;

use crate::format::fixed9;
use crate::geometry::{DeltaGeometry, Position};
use crate::kinematics::reachable;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WorkspaceError {
    #[error("grid spacing must be positive and finite, got {0}")]
    BadSpacing(f64),
    #[error("grid bounds for {0} are empty or non-finite")]
    BadBounds(&'static str),
    #[error("no grid cell is reachable")]
    EmptyWorkspace,
}

/// Regular grid of sample points. Cell `(ix, iy, iz)` is centred at
/// `min + index·spacing` on each axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub min: [f64; 3],
    pub spacing: f64,
    pub counts: [usize; 3],
}

impl GridSpec {
    /// Grid covering `[lo, hi]` on each axis inclusive of both ends (up to
    /// rounding of the extent to a whole number of steps).
    pub fn from_bounds(x: (f64, f64), y: (f64, f64), z: (f64, f64), spacing: f64) -> Result<Self, WorkspaceError> {
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(WorkspaceError::BadSpacing(spacing));
        }
        let mut counts = [0usize; 3];
        for (k, (name, (lo, hi))) in [("x", x), ("y", y), ("z", z)].into_iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && hi >= lo) {
                return Err(WorkspaceError::BadBounds(name));
            }
            counts[k] = ((hi - lo) / spacing).round() as usize + 1;
        }
        Ok(Self {
            min: [x.0, y.0, z.0],
            spacing,
            counts,
        })
    }

    /// ±`lateral` in x and y, `[z_min, z_max]` in z.
    pub fn centered(lateral: f64, z_min: f64, z_max: f64, spacing: f64) -> Result<Self, WorkspaceError> {
        Self::from_bounds((-lateral, lateral), (-lateral, lateral), (z_min, z_max), spacing)
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn coord(&self, axis: usize, index: usize) -> f64 {
        self.min[axis] + index as f64 * self.spacing
    }

    fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (iz * self.counts[1] + iy) * self.counts[0] + ix
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceSummary {
    pub z: f64,
    pub disc_radius: f64,
}

#[derive(Debug, Clone)]
pub struct WorkspaceMap {
    pub grid: GridSpec,
    cells: Vec<bool>,
    pub slices: Vec<SliceSummary>,
    /// Slice height with the largest axis-centred disc.
    pub z0: f64,
    pub disc_radius: f64,
}

impl WorkspaceMap {
    pub fn is_reachable(&self, ix: usize, iy: usize, iz: usize) -> bool {
        self.cells[self.grid.index(ix, iy, iz)]
    }

    pub fn reachable_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    /// `x,y,z,reachable` with one row per cell, z-major then y then x.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "x,y,z,reachable")?;
        let [nx, ny, nz] = self.grid.counts;
        for iz in 0..nz {
            let z = fixed9(self.grid.coord(2, iz));
            for iy in 0..ny {
                let y = fixed9(self.grid.coord(1, iy));
                for ix in 0..nx {
                    writeln!(
                        out,
                        "{},{},{},{}",
                        fixed9(self.grid.coord(0, ix)),
                        y,
                        z,
                        u8::from(self.is_reachable(ix, iy, iz))
                    )?;
                }
            }
        }
        Ok(())
    }
}

/// Evaluate reachability at every cell centre and find, per slice, the
/// largest disc about the central axis that holds no unreachable centre.
///
/// A slice whose axis point is unreachable scores zero. Points beyond the
/// grid count as unreachable, so a disc never extends more than one step
/// past the grid edge.
pub fn workspace_sample(geometry: &DeltaGeometry, grid: &GridSpec) -> Result<WorkspaceMap, WorkspaceError> {
    let [nx, ny, nz] = grid.counts;
    let mut cells = vec![false; grid.len()];
    let mut slices = Vec::with_capacity(nz);

    let edge = [-grid.min[0], grid.coord(0, nx - 1), -grid.min[1], grid.coord(1, ny - 1)]
        .into_iter()
        .fold(f64::INFINITY, f64::min)
        + grid.spacing;

    for iz in 0..nz {
        let z = grid.coord(2, iz);
        let mut nearest_gap = edge.max(0.0);
        for iy in 0..ny {
            let y = grid.coord(1, iy);
            for ix in 0..nx {
                let x = grid.coord(0, ix);
                let ok = Position::new(x, y, z).map(|p| reachable(geometry, &p)).unwrap_or(false);
                cells[grid.index(ix, iy, iz)] = ok;
                if !ok {
                    nearest_gap = nearest_gap.min(x.hypot(y));
                }
            }
        }
        let axis_ok = Position::new(0.0, 0.0, z)
            .map(|p| reachable(geometry, &p))
            .unwrap_or(false);
        slices.push(SliceSummary {
            z,
            disc_radius: if axis_ok { nearest_gap } else { 0.0 },
        });
    }

    if !cells.iter().any(|&c| c) {
        return Err(WorkspaceError::EmptyWorkspace);
    }

    let best = slices
        .iter()
        .copied()
        .fold(None::<SliceSummary>, |acc, s| match acc {
            Some(b) if b.disc_radius >= s.disc_radius => Some(b),
            _ => Some(s),
        })
        .expect("grid has at least one slice");

    Ok(WorkspaceMap {
        grid: *grid,
        cells,
        slices,
        z0: best.z,
        disc_radius: best.disc_radius,
    })
}
