use rayon::prelude::*;
use serde::Serialize;

use super::SpectralCache;
use crate::config::RepresentationConfig;
use crate::events::SensorGeometry;
use crate::grid::Rect;
use crate::surfaces::{interpolate_decay_map, DecayMap, Histogram, PatchGrid};

/// A region of the patch lattice with its spectral score.
///
/// `cells` spans lattice columns `x0..x1` and rows `y0..y1`; `region` is the
/// same area in pixels. `score` is the raw high-frequency fraction.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuadTreeNode {
    pub region: Rect,
    pub cells: Rect,
    pub score: f64,
    pub children: Vec<QuadTreeNode>,
}

impl QuadTreeNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    pub fn leaves(&self) -> Vec<&QuadTreeNode> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(n) = stack.pop() {
            if n.is_leaf() {
                out.push(n);
            } else {
                stack.extend(n.children.iter().rev());
            }
        }
        out
    }

    pub fn depth(&self) -> usize {
        1 + self.children.iter().map(|c| c.depth()).max().unwrap_or(0)
    }

    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(|c| c.node_count()).sum::<usize>()
    }

    /// Lattice with every cell carrying the score of the leaf that owns it.
    pub fn to_patch_grid(&self, geometry: SensorGeometry, patch_size: usize, invert: bool) -> PatchGrid {
        let mut grid = PatchGrid::layout(geometry, patch_size);
        for leaf in self.leaves() {
            let d = if invert { 1.0 - leaf.score } else { leaf.score };
            for r in leaf.cells.y0..leaf.cells.y1 {
                for c in leaf.cells.x0..leaf.cells.x1 {
                    grid.scores[r * grid.cols + c] = leaf.score;
                    grid.decays[r * grid.cols + c] = d;
                }
            }
        }
        grid
    }
}

struct Subdivider<'a> {
    hist: &'a Histogram,
    layout: PatchGrid,
    radius: f64,
    threshold: f64,
    cache: &'a SpectralCache,
    parallel: bool,
}

impl Subdivider<'_> {
    fn pixels(&self, cells: Rect) -> Rect {
        let a = self.layout.cell(cells.y0, cells.x0);
        let b = self.layout.cell(cells.y1 - 1, cells.x1 - 1);
        Rect::new(a.x0, a.y0, b.x1, b.y1)
    }

    fn node(&self, cells: Rect) -> QuadTreeNode {
        let region = self.pixels(cells);
        let score = self.cache.region_score(&self.hist.values, region, self.radius);
        let (cols, rows) = (cells.width(), cells.height());
        let children = if score > self.threshold || cols <= 1 || rows <= 1 {
            Vec::new()
        } else {
            let cm = cells.x0 + cols / 2;
            let rm = cells.y0 + rows / 2;
            let quads = [
                Rect::new(cells.x0, cells.y0, cm, rm),
                Rect::new(cm, cells.y0, cells.x1, rm),
                Rect::new(cells.x0, rm, cm, cells.y1),
                Rect::new(cm, rm, cells.x1, cells.y1),
            ];
            if self.parallel {
                quads.par_iter().map(|&q| self.node(q)).collect()
            } else {
                quads.iter().map(|&q| self.node(q)).collect()
            }
        };
        QuadTreeNode {
            region,
            cells,
            score,
            children,
        }
    }
}

/// Scores the whole sensor, then splits any region scoring at or below
/// `t_d` into four, until a region is one patch wide or tall.
pub fn recursive_fft_grid(hist: &Histogram, config: &RepresentationConfig) -> (QuadTreeNode, PatchGrid) {
    recursive_fft_grid_with(hist, config, SpectralCache::global(), false)
}

pub(crate) fn recursive_fft_grid_with(
    hist: &Histogram,
    config: &RepresentationConfig,
    cache: &SpectralCache,
    parallel: bool,
) -> (QuadTreeNode, PatchGrid) {
    let geometry = hist.geometry();
    let patch_size = config.patch_size(geometry);
    let layout = PatchGrid::layout(geometry, patch_size);
    let root_cells = Rect::new(0, 0, layout.cols, layout.rows);
    let sub = Subdivider {
        hist,
        layout,
        radius: config.r,
        threshold: config.t_d,
        cache,
        parallel,
    };
    let tree = sub.node(root_cells);
    let grid = tree.to_patch_grid(geometry, patch_size, config.fft_invert);
    (tree, grid)
}

/// Scores every cell of the minimum-size lattice independently.
pub fn nonrecursive_fft_grid(hist: &Histogram, config: &RepresentationConfig) -> PatchGrid {
    nonrecursive_fft_grid_with(hist, config, SpectralCache::global(), false)
}

pub(crate) fn nonrecursive_fft_grid_with(
    hist: &Histogram,
    config: &RepresentationConfig,
    cache: &SpectralCache,
    parallel: bool,
) -> PatchGrid {
    let geometry = hist.geometry();
    let mut grid = PatchGrid::layout(geometry, config.patch_size(geometry));
    let cells: Vec<Rect> = grid.cells().collect();
    let score = |rect: &Rect| cache.region_score(&hist.values, *rect, config.r);
    grid.scores = if parallel {
        cells.par_iter().map(score).collect()
    } else {
        cells.iter().map(score).collect()
    };
    grid.decays = grid
        .scores
        .iter()
        .map(|&s| if config.fft_invert { 1.0 - s } else { s })
        .collect();
    grid
}

/// Fills each leaf's cells with its decay and interpolates between cell centres.
pub fn rasterize_quadtree(
    tree: &QuadTreeNode,
    geometry: SensorGeometry,
    patch_size: usize,
    invert: bool,
) -> DecayMap {
    interpolate_decay_map(&tree.to_patch_grid(geometry, patch_size, invert))
}
