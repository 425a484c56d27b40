//! D2Q9 velocity set and the cell-centered lattice.
//!
//! Direction layout (index: lattice offset):
//! ```text
//!   6   2   5
//!    \  |  /
//!   3 - 0 - 1
//!    /  |  \
//!   7   4   8
//! ```
//! Boundaries sit half a link beyond the outermost solid sites.

use crate::error::{Error, Result};
use crate::Real;

pub const Q: usize = 9;

/// Integer lattice offsets `C_i Δt / ΔX`.
pub const OFFSETS: [[i32; 2]; Q] = [
    [0, 0],
    [1, 0],
    [0, 1],
    [-1, 0],
    [0, -1],
    [1, 1],
    [-1, 1],
    [-1, -1],
    [1, -1],
];

pub const OPPOSITE: [usize; Q] = [0, 3, 4, 1, 2, 7, 8, 5, 6];

const WEIGHTS: [f64; Q] = [
    4.0 / 9.0,
    1.0 / 9.0,
    1.0 / 9.0,
    1.0 / 9.0,
    1.0 / 9.0,
    1.0 / 36.0,
    1.0 / 36.0,
    1.0 / 36.0,
    1.0 / 36.0,
];

#[derive(Clone, Debug)]
pub struct VelocitySet<T> {
    /// Lattice velocities `C_i` in physical units.
    pub c: [[T; 2]; Q],
    pub w: [T; Q],
    /// Lattice speed `ΔX / Δt`.
    pub speed: T,
    /// Shear wave speed, `C_s² = C² / 3`.
    pub cs: T,
    pub cs2: T,
    pub dx: T,
    pub dt: T,
}

impl<T: Real> VelocitySet<T> {
    pub fn d2q9(dx: T, dt: T) -> Result<Self> {
        positive("dx", dx)?;
        positive("dt", dt)?;
        let speed = dx / dt;
        let cs2 = speed * speed / T::lit(3.0);
        let c = OFFSETS.map(|[a, b]| [T::lit(a as f64) * speed, T::lit(b as f64) * speed]);
        Ok(Self {
            c,
            w: WEIGHTS.map(T::lit),
            speed,
            cs: cs2.sqrt(),
            cs2,
            dx,
            dt,
        })
    }

    #[inline]
    pub fn opposite(i: usize) -> usize {
        OPPOSITE[i]
    }
}

/// `Δt = ΔX / (√3 C_s)` with `C_s = √(μ/ρ0)`.
pub fn derive_timestep<T: Real>(dx: T, mu: T, rho0: T) -> Result<T> {
    positive("dx", dx)?;
    positive("mu", mu)?;
    positive("rho0", rho0)?;
    Ok(dx * (rho0 / mu).sqrt() / T::lit(3.0).sqrt())
}

pub(crate) fn positive<T: Real>(name: &'static str, v: T) -> Result<()> {
    if v > T::zero() && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("must be positive and finite, got {v}"),
        })
    }
}

/// Square domain `[-l/2, l/2]²` with an optional centered square hole.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeometrySpec<T> {
    pub side_length: T,
    pub dx: T,
    pub hole_side: Option<T>,
}

/// Straight boundary segments of the supported geometries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Edge {
    Left,
    Right,
    Bottom,
    Top,
    HoleLeft,
    HoleRight,
    HoleBottom,
    HoleTop,
}

impl Edge {
    pub const ALL: [Edge; 8] = [
        Edge::Left,
        Edge::Right,
        Edge::Bottom,
        Edge::Top,
        Edge::HoleLeft,
        Edge::HoleRight,
        Edge::HoleBottom,
        Edge::HoleTop,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Edge::Left => "left",
            Edge::Right => "right",
            Edge::Bottom => "bottom",
            Edge::Top => "top",
            Edge::HoleLeft => "hole_left",
            Edge::HoleRight => "hole_right",
            Edge::HoleBottom => "hole_bottom",
            Edge::HoleTop => "hole_top",
        }
    }

    pub fn from_name(name: &str) -> Option<Edge> {
        Edge::ALL.into_iter().find(|e| e.name() == name)
    }

    /// Outward unit normal of the body. Hole edges are named after the side
    /// of the hole they bound, so `HoleLeft` faces `+x1` into the hole.
    pub fn normal<T: Real>(self) -> [T; 2] {
        let (a, b) = match self {
            Edge::Left | Edge::HoleRight => (-1.0, 0.0),
            Edge::Right | Edge::HoleLeft => (1.0, 0.0),
            Edge::Bottom | Edge::HoleTop => (0.0, -1.0),
            Edge::Top | Edge::HoleBottom => (0.0, 1.0),
        };
        [T::lit(a), T::lit(b)]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryKind {
    /// Prescribed momentum density (bounce-back).
    Dirichlet,
    /// Prescribed traction (anti-bounce-back).
    Neumann,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Link {
    Interior(usize),
    Boundary(Edge, BoundaryKind),
    /// Any link of a void site.
    Void,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundaryLink {
    pub site: usize,
    /// Outgoing direction that crosses the boundary.
    pub dir: usize,
    pub edge: Edge,
    pub kind: BoundaryKind,
}

#[derive(Clone, Debug)]
pub struct Grid<T> {
    dx: T,
    n: [usize; 2],
    origin: [T; 2],
    periodic: bool,
    solid: Vec<bool>,
    links: Vec<[Link; Q]>,
    boundary_links: Vec<BoundaryLink>,
}

impl<T: Real> Grid<T> {
    /// Builds the lattice for `geometry`. `kinds[edge.index()]` decides
    /// Dirichlet-over-Neumann precedence for diagonal links through corners.
    pub fn build(geometry: &GeometrySpec<T>, kinds: &[BoundaryKind; 8]) -> Result<Self> {
        positive("side_length", geometry.side_length)?;
        positive("dx", geometry.dx)?;
        let n = integer_ratio(geometry.side_length, geometry.dx).ok_or_else(|| {
            Error::Geometry(format!(
                "side length {} is not an integer multiple of dx {}",
                geometry.side_length, geometry.dx
            ))
        })?;
        if n < 3 {
            return Err(Error::UnsupportedGeometry(format!(
                "at least 3 sites per axis required, got {n}"
            )));
        }
        let hole = match geometry.hole_side {
            None => None,
            Some(e) if e == T::zero() => None,
            Some(e) => {
                positive("hole_side", e)?;
                let m = integer_ratio(e, geometry.dx).ok_or_else(|| {
                    Error::Geometry(format!(
                        "hole side {e} is not an integer multiple of dx {}",
                        geometry.dx
                    ))
                })?;
                if m + 6 > n || (n - m) % 2 != 0 {
                    return Err(Error::Geometry(format!(
                        "hole of {m} sites does not align with the {n}-site lattice"
                    )));
                }
                let lo = (n - m) / 2;
                Some(lo..lo + m)
            }
        };

        let half = geometry.side_length * T::lit(0.5);
        let mut solid = vec![true; n * n];
        if let Some(r) = &hole {
            for k2 in r.clone() {
                for k1 in r.clone() {
                    solid[k1 + n * k2] = false;
                }
            }
        }
        let mut grid = Grid {
            dx: geometry.dx,
            n: [n, n],
            origin: [-half, -half],
            periodic: false,
            solid,
            links: Vec::new(),
            boundary_links: Vec::new(),
        };
        grid.classify_links(kinds);
        Ok(grid)
    }

    /// Fully periodic lattice without boundaries, for kernel tests and wave
    /// studies. Sites sit at `(k + 1/2) dx` from the origin.
    pub fn periodic(n1: usize, n2: usize, dx: T) -> Result<Self> {
        positive("dx", dx)?;
        if n1 == 0 || n2 == 0 {
            return Err(Error::UnsupportedGeometry("empty periodic grid".into()));
        }
        let mut grid = Grid {
            dx,
            n: [n1, n2],
            origin: [T::zero(), T::zero()],
            periodic: true,
            solid: vec![true; n1 * n2],
            links: Vec::new(),
            boundary_links: Vec::new(),
        };
        grid.classify_links(&[BoundaryKind::Neumann; 8]);
        Ok(grid)
    }

    /// Arbitrary mask on a non-periodic box, for exercising stencils.
    #[cfg(test)]
    pub(crate) fn from_mask(n1: usize, n2: usize, dx: T, solid: Vec<bool>) -> Self {
        assert_eq!(solid.len(), n1 * n2);
        let mut grid = Grid {
            dx,
            n: [n1, n2],
            origin: [T::zero(), T::zero()],
            periodic: false,
            solid,
            links: Vec::new(),
            boundary_links: Vec::new(),
        };
        grid.classify_links(&[BoundaryKind::Neumann; 8]);
        grid
    }

    fn classify_links(&mut self, kinds: &[BoundaryKind; 8]) {
        let total = self.n[0] * self.n[1];
        let mut links = vec![[Link::Void; Q]; total];
        let mut boundary = Vec::new();
        for site in 0..total {
            if !self.solid[site] {
                continue;
            }
            let [k1, k2] = self.coords(site);
            for (i, &[a, b]) in OFFSETS.iter().enumerate() {
                let link = match self.offset(site, [a, b]) {
                    Some(dest) => Link::Interior(dest),
                    None => {
                        let edge = self.crossed_edge([k1 as i64, k2 as i64], a as i64, b as i64, kinds);
                        let kind = kinds[edge.index()];
                        boundary.push(BoundaryLink {
                            site,
                            dir: i,
                            edge,
                            kind,
                        });
                        Link::Boundary(edge, kind)
                    }
                };
                links[site][i] = link;
            }
        }
        self.links = links;
        self.boundary_links = boundary;
    }

    fn blocked(&self, k: [i64; 2]) -> bool {
        !self.in_range(k) || !self.solid[k[0] as usize + self.n[0] * k[1] as usize]
    }

    fn in_range(&self, k: [i64; 2]) -> bool {
        k[0] >= 0 && k[1] >= 0 && (k[0] as usize) < self.n[0] && (k[1] as usize) < self.n[1]
    }

    /// Edge crossed by the link from `k` with offset `(a, b)`. Diagonal
    /// links pass exactly through a cell corner, so when both a vertical and
    /// a horizontal segment meet there the link is a tie: Dirichlet wins,
    /// otherwise the edge with an `x2` normal.
    fn crossed_edge(&self, k: [i64; 2], a: i64, b: i64, kinds: &[BoundaryKind; 8]) -> Edge {
        let x_edge = |kx: i64| {
            if kx < 0 {
                Edge::Left
            } else if kx as usize >= self.n[0] {
                Edge::Right
            } else if a > 0 {
                Edge::HoleLeft
            } else {
                Edge::HoleRight
            }
        };
        let y_edge = |ky: i64| {
            if ky < 0 {
                Edge::Bottom
            } else if ky as usize >= self.n[1] {
                Edge::Top
            } else if b > 0 {
                Edge::HoleBottom
            } else {
                Edge::HoleTop
            }
        };
        if b == 0 {
            return x_edge(k[0] + a);
        }
        if a == 0 {
            return y_edge(k[1] + b);
        }
        let xb = self.blocked([k[0] + a, k[1]]);
        let yb = self.blocked([k[0], k[1] + b]);
        match (xb, yb) {
            (true, false) => x_edge(k[0] + a),
            (false, true) => y_edge(k[1] + b),
            _ => {
                let ex = x_edge(k[0] + a);
                let ey = y_edge(k[1] + b);
                match (kinds[ex.index()], kinds[ey.index()]) {
                    (BoundaryKind::Dirichlet, BoundaryKind::Neumann) => ex,
                    _ => ey,
                }
            }
        }
    }

    #[inline]
    pub fn dx(&self) -> T {
        self.dx
    }

    #[inline]
    pub fn dims(&self) -> [usize; 2] {
        self.n
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.solid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.solid.is_empty()
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    #[inline]
    pub fn is_solid(&self, site: usize) -> bool {
        self.solid[site]
    }

    pub fn solid_count(&self) -> usize {
        self.solid.iter().filter(|&&s| s).count()
    }

    pub fn solid_sites(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&s| self.solid[s])
    }

    #[inline]
    pub fn index(&self, k1: usize, k2: usize) -> usize {
        k1 + self.n[0] * k2
    }

    #[inline]
    pub fn coords(&self, site: usize) -> [usize; 2] {
        [site % self.n[0], site / self.n[0]]
    }

    pub fn position(&self, site: usize) -> [T; 2] {
        let [k1, k2] = self.coords(site);
        let h = T::lit(0.5);
        [
            self.origin[0] + (T::lit(k1 as f64) + h) * self.dx,
            self.origin[1] + (T::lit(k2 as f64) + h) * self.dx,
        ]
    }

    /// Lower-left corner of the lattice bounding box.
    pub fn origin(&self) -> [T; 2] {
        self.origin
    }

    /// Solid site at lattice offset `d` from `site`, wrapping on periodic grids.
    #[inline]
    pub fn offset(&self, site: usize, d: [i32; 2]) -> Option<usize> {
        let [k1, k2] = self.coords(site);
        let mut k = [k1 as i64 + d[0] as i64, k2 as i64 + d[1] as i64];
        if self.periodic {
            k[0] = k[0].rem_euclid(self.n[0] as i64);
            k[1] = k[1].rem_euclid(self.n[1] as i64);
        } else if !self.in_range(k) {
            return None;
        }
        let s = k[0] as usize + self.n[0] * k[1] as usize;
        self.solid[s].then_some(s)
    }

    #[inline]
    pub fn link(&self, site: usize, dir: usize) -> Link {
        self.links[site][dir]
    }

    pub fn boundary_links(&self) -> &[BoundaryLink] {
        &self.boundary_links
    }

    /// Nearest solid site to `x` and its distance.
    pub fn nearest_site(&self, x: [T; 2]) -> Option<(usize, T)> {
        self.solid_sites()
            .map(|s| {
                let p = self.position(s);
                let d = ((p[0] - x[0]).powi(2) + (p[1] - x[1]).powi(2)).sqrt();
                (s, d)
            })
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
    }

    /// Mirror image of `site` across the `x2` axis.
    pub fn mirror_x1(&self, site: usize) -> usize {
        let [k1, k2] = self.coords(site);
        self.index(self.n[0] - 1 - k1, k2)
    }
}

fn integer_ratio<T: Real>(a: T, b: T) -> Option<usize> {
    let r = (a / b).to_f64_lossy();
    let k = r.round();
    ((r - k).abs() <= 1e-9 * r.max(1.0) && k >= 1.0).then_some(k as usize)
}
