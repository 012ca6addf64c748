use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use super::{Pose2D, WorldError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Cell {
    Free,
    Occupied,
    Unknown,
}

impl Cell {
    /// Unknown cells are treated as occupied everywhere.
    pub fn is_blocked(self) -> bool {
        !matches!(self, Cell::Free)
    }
}

/// Result of marching a ray through the grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RayHit {
    /// Distance from the ray origin to the first blocked cell boundary.
    pub distance: f64,
    /// Hit cell `(i, j)`, or `None` when the ray left the map.
    pub cell: Option<(usize, usize)>,
}

/// Crude occupancy map. Cell `(i, j)` covers `[i*res, (i+1)*res) x [j*res, (j+1)*res)`
/// in the map frame, whose world pose is `origin`. Storage is row-major with
/// `j` as the row index.
#[derive(Clone, Debug)]
pub struct OccupancyGrid {
    width: usize,
    height: usize,
    resolution: f64,
    origin: Pose2D,
    cells: Vec<Cell>,
    // center-to-center distance (meters) to the nearest blocked cell,
    // with everything outside the map counted as blocked
    edt: Vec<f64>,
}

impl PartialEq for OccupancyGrid {
    // the distance field is derived from the cells
    fn eq(&self, o: &Self) -> bool {
        self.width == o.width
            && self.height == o.height
            && self.resolution == o.resolution
            && self.origin == o.origin
            && self.cells == o.cells
    }
}

impl OccupancyGrid {
    pub fn new(
        width: usize,
        height: usize,
        resolution: f64,
        origin: Pose2D,
        cells: Vec<Cell>,
    ) -> Result<Self, WorldError> {
        if width == 0 || height == 0 {
            return Err(WorldError::InvalidGrid("zero-sized grid".into()));
        }
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(WorldError::InvalidGrid(format!(
                "resolution must be positive, got {resolution}"
            )));
        }
        if cells.len() != width * height {
            return Err(WorldError::DimensionMismatch {
                expected: width * height,
                found: cells.len(),
            });
        }
        let edt = distance_transform(width, height, &cells)
            .into_iter()
            .map(|d2| d2.sqrt() * resolution)
            .collect();
        Ok(Self {
            width,
            height,
            resolution,
            origin,
            cells,
            edt,
        })
    }

    /// All-free grid with its origin at the world origin.
    pub fn empty(width: usize, height: usize, resolution: f64) -> Self {
        Self::new(
            width,
            height,
            resolution,
            Pose2D::new(0.0, 0.0, 0.0),
            vec![Cell::Free; width * height],
        )
        .expect("valid empty grid")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn origin(&self) -> Pose2D {
        self.origin
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.width + i
    }

    pub fn cell(&self, i: usize, j: usize) -> Cell {
        self.cells[self.index(i, j)]
    }

    /// Cell state, with anything outside the map reported as `Unknown`.
    pub fn cell_or_unknown(&self, i: i64, j: i64) -> Cell {
        if i < 0 || j < 0 || i >= self.width as i64 || j >= self.height as i64 {
            Cell::Unknown
        } else {
            self.cells[j as usize * self.width + i as usize]
        }
    }

    pub fn count(&self, state: Cell) -> usize {
        self.cells.iter().filter(|&&c| c == state).count()
    }

    /// Returns a copy with the given cell changed.
    pub fn with_cell(&self, i: usize, j: usize, state: Cell) -> Self {
        let mut cells = self.cells.clone();
        cells[j * self.width + i] = state;
        Self::new(self.width, self.height, self.resolution, self.origin, cells).expect("same dimensions")
    }

    /// World point to map-frame point.
    pub fn to_map_frame(&self, p: [f64; 2]) -> [f64; 2] {
        self.origin.to_local(p)
    }

    pub fn to_world_frame(&self, p: [f64; 2]) -> [f64; 2] {
        self.origin.to_world(p)
    }

    /// Cell containing a world point (possibly out of bounds).
    pub fn world_to_cell_signed(&self, p: [f64; 2]) -> (i64, i64) {
        let m = self.to_map_frame(p);
        (
            (m[0] / self.resolution).floor() as i64,
            (m[1] / self.resolution).floor() as i64,
        )
    }

    pub fn world_to_cell(&self, p: [f64; 2]) -> Option<(usize, usize)> {
        let (i, j) = self.world_to_cell_signed(p);
        if i < 0 || j < 0 || i >= self.width as i64 || j >= self.height as i64 {
            None
        } else {
            Some((i as usize, j as usize))
        }
    }

    /// World coordinates of a cell center.
    pub fn cell_to_world(&self, i: usize, j: usize) -> [f64; 2] {
        self.to_world_frame([(i as f64 + 0.5) * self.resolution, (j as f64 + 0.5) * self.resolution])
    }

    pub fn in_bounds(&self, p: [f64; 2]) -> bool {
        self.world_to_cell(p).is_some()
    }

    /// Blocked test for a world point; outside the map counts as blocked.
    pub fn is_blocked_at(&self, p: [f64; 2]) -> bool {
        let (i, j) = self.world_to_cell_signed(p);
        self.cell_or_unknown(i, j).is_blocked()
    }

    /// Distance from the center of cell `(i, j)` to the center of the nearest
    /// blocked cell (meters).
    pub fn center_distance(&self, i: usize, j: usize) -> f64 {
        self.edt[self.index(i, j)]
    }

    /// Approximate obstacle clearance of a world point: distance to the
    /// nearest blocked cell surface, accurate to within one cell diagonal.
    pub fn clearance(&self, p: [f64; 2]) -> f64 {
        match self.world_to_cell(p) {
            None => 0.0,
            Some((i, j)) => {
                if self.cell(i, j).is_blocked() {
                    0.0
                } else {
                    (self.center_distance(i, j) - 0.5 * self.resolution).max(0.0)
                }
            }
        }
    }

    /// Exact test: does a disc of radius `r` centered at the world point
    /// overlap any blocked cell (or leave the map)?
    pub fn disc_collides(&self, p: [f64; 2], r: f64) -> bool {
        let Some((ci, cj)) = self.world_to_cell(p) else {
            return true;
        };
        let res = self.resolution;
        if self.center_distance(ci, cj) - std::f64::consts::SQRT_2 * res >= r {
            return false;
        }
        let m = self.to_map_frame(p);
        let i0 = ((m[0] - r) / res).floor() as i64;
        let i1 = ((m[0] + r) / res).floor() as i64;
        let j0 = ((m[1] - r) / res).floor() as i64;
        let j1 = ((m[1] + r) / res).floor() as i64;
        let r2 = r * r;
        for j in j0..=j1 {
            for i in i0..=i1 {
                if !self.cell_or_unknown(i, j).is_blocked() {
                    continue;
                }
                let x0 = i as f64 * res;
                let y0 = j as f64 * res;
                let dx = (x0 - m[0]).max(0.0).max(m[0] - (x0 + res));
                let dy = (y0 - m[1]).max(0.0).max(m[1] - (y0 + res));
                if dx * dx + dy * dy < r2 {
                    return true;
                }
            }
        }
        false
    }

    /// Grid traversal (Amanatides-Woo) from a world point along a world
    /// heading. Returns `None` when nothing blocked lies within `max_range`.
    pub fn raycast(&self, from: [f64; 2], angle: f64, max_range: f64) -> Option<RayHit> {
        let m = self.to_map_frame(from);
        let a = angle - self.origin.theta;
        let (dy, dx) = a.sin_cos();
        let res = self.resolution;
        let mut i = (m[0] / res).floor() as i64;
        let mut j = (m[1] / res).floor() as i64;
        let cell_hit = |i: i64, j: i64| -> Option<Option<(usize, usize)>> {
            let c = self.cell_or_unknown(i, j);
            if !c.is_blocked() {
                return None;
            }
            if i < 0 || j < 0 || i >= self.width as i64 || j >= self.height as i64 {
                Some(None)
            } else {
                Some(Some((i as usize, j as usize)))
            }
        };
        if let Some(cell) = cell_hit(i, j) {
            return Some(RayHit { distance: 0.0, cell });
        }
        let step_i: i64 = if dx > 0.0 { 1 } else { -1 };
        let step_j: i64 = if dy > 0.0 { 1 } else { -1 };
        let t_delta_x = if dx != 0.0 { res / dx.abs() } else { f64::INFINITY };
        let t_delta_y = if dy != 0.0 { res / dy.abs() } else { f64::INFINITY };
        let mut t_max_x = if dx > 0.0 {
            ((i + 1) as f64 * res - m[0]) / dx
        } else if dx < 0.0 {
            (i as f64 * res - m[0]) / dx
        } else {
            f64::INFINITY
        };
        let mut t_max_y = if dy > 0.0 {
            ((j + 1) as f64 * res - m[1]) / dy
        } else if dy < 0.0 {
            (j as f64 * res - m[1]) / dy
        } else {
            f64::INFINITY
        };
        loop {
            let t = if t_max_x < t_max_y {
                i += step_i;
                let t = t_max_x;
                t_max_x += t_delta_x;
                t
            } else {
                j += step_j;
                let t = t_max_y;
                t_max_y += t_delta_y;
                t
            };
            if t > max_range {
                return None;
            }
            if let Some(cell) = cell_hit(i, j) {
                return Some(RayHit {
                    distance: t.max(0.0),
                    cell,
                });
            }
        }
    }

    /// Writes the grid as a binary PGM plus its `.info` sidecar.
    pub fn save(&self, path: &Path) -> Result<(), WorldError> {
        let mut bytes = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        for r in 0..self.height {
            let j = self.height - 1 - r;
            for i in 0..self.width {
                bytes.push(if self.cell(i, j).is_blocked() { 0 } else { 254 });
            }
        }
        write_file(path, &bytes)?;
        let meta = format!(
            "resolution: {}\norigin: {} {} {}\n",
            self.resolution, self.origin.x, self.origin.y, self.origin.theta
        );
        write_file(&sidecar_path(path), meta.as_bytes())
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), WorldError> {
    let io = |source| WorldError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut f = fs::File::create(path).map_err(io)?;
    f.write_all(bytes).map_err(io)
}

/// Sidecar metadata path for a map image: `foo.pgm` -> `foo.info`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("info")
}

/// Loads a binary PGM map (pixel < 128 is occupied) and its `.info` sidecar.
/// Image row 0 is the top of the map (largest `y`).
pub fn load_map(path: &Path) -> Result<OccupancyGrid, WorldError> {
    let bytes = fs::read(path).map_err(|source| WorldError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let meta_path = sidecar_path(path);
    let meta = fs::read_to_string(&meta_path).map_err(|source| WorldError::Io {
        path: meta_path.clone(),
        source,
    })?;
    let (resolution, origin) = parse_sidecar(&meta)?;
    let (width, height, pixels) = parse_pgm(&bytes)?;
    let mut cells = vec![Cell::Free; width * height];
    for r in 0..height {
        let j = height - 1 - r;
        for i in 0..width {
            if pixels[r * width + i] < 128 {
                cells[j * width + i] = Cell::Occupied;
            }
        }
    }
    OccupancyGrid::new(width, height, resolution, origin, cells)
}

fn parse_sidecar(text: &str) -> Result<(f64, Pose2D), WorldError> {
    let mut resolution = None;
    let mut origin = None;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once(':') else {
            return Err(WorldError::Sidecar(format!("expected `key: value`, got `{line}`")));
        };
        let nums: Result<Vec<f64>, _> = value.split_whitespace().map(str::parse).collect();
        let nums = nums.map_err(|e| WorldError::Sidecar(format!("{key}: {e}")))?;
        match (key.trim(), nums.as_slice()) {
            ("resolution", [r]) => resolution = Some(*r),
            ("origin", [x, y, t]) => origin = Some(Pose2D::new(*x, *y, *t)),
            (k, _) => return Err(WorldError::Sidecar(format!("bad entry `{k}`"))),
        }
    }
    match (resolution, origin) {
        (Some(r), Some(o)) => Ok((r, o)),
        (None, _) => Err(WorldError::Sidecar("missing resolution".into())),
        (_, None) => Err(WorldError::Sidecar("missing origin".into())),
    }
}

fn parse_pgm(bytes: &[u8]) -> Result<(usize, usize, &[u8]), WorldError> {
    let bad = |msg: &str| WorldError::MalformedHeader(msg.to_string());
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(bad("missing P5 magic"));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        // skip whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                }
                Some(c) if c.is_ascii_whitespace() => pos += 1,
                Some(_) => break,
                None => return Err(bad("truncated header")),
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("expected a number"));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("number out of range"))?;
    }
    match bytes.get(pos) {
        Some(c) if c.is_ascii_whitespace() => pos += 1,
        _ => return Err(bad("missing separator before raster")),
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(bad("zero dimension"));
    }
    if maxval == 0 || maxval > 255 {
        return Err(bad("only 8-bit PGM is supported"));
    }
    let payload = &bytes[pos..];
    if payload.len() != width * height {
        return Err(WorldError::DimensionMismatch {
            expected: width * height,
            found: payload.len(),
        });
    }
    Ok((width, height, payload))
}

/// Squared Euclidean distance (in cells) from every cell center to the
/// nearest blocked cell center, with a blocked ring around the map.
fn distance_transform(width: usize, height: usize, cells: &[Cell]) -> Vec<f64> {
    let pw = width + 2;
    let ph = height + 2;
    let inf = 1e20;
    let mut f = vec![inf; pw * ph];
    for pj in 0..ph {
        for pi in 0..pw {
            let border = pi == 0 || pj == 0 || pi == pw - 1 || pj == ph - 1;
            if border || cells[(pj - 1) * width + (pi - 1)].is_blocked() {
                f[pj * pw + pi] = 0.0;
            }
        }
    }
    let n = pw.max(ph);
    let mut col = vec![0.0; n];
    let mut out = vec![0.0; n];
    let mut v = vec![0usize; n];
    let mut z = vec![0.0; n + 1];
    for pi in 0..pw {
        for pj in 0..ph {
            col[pj] = f[pj * pw + pi];
        }
        edt_1d(&col[..ph], &mut out[..ph], &mut v, &mut z);
        for pj in 0..ph {
            f[pj * pw + pi] = out[pj];
        }
    }
    for pj in 0..ph {
        let row = &f[pj * pw..(pj + 1) * pw];
        col[..pw].copy_from_slice(row);
        edt_1d(&col[..pw], &mut out[..pw], &mut v, &mut z);
        f[pj * pw..(pj + 1) * pw].copy_from_slice(&out[..pw]);
    }
    let mut result = Vec::with_capacity(width * height);
    for j in 0..height {
        for i in 0..width {
            result.push(f[(j + 1) * pw + i + 1]);
        }
    }
    result
}

/// Lower envelope of parabolas (Felzenszwalb & Huttenlocher).
fn edt_1d(f: &[f64], d: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        let fq = f[q] + (q * q) as f64;
        let mut s;
        loop {
            let p = v[k];
            s = (fq - (f[p] + (p * p) as f64)) / (2.0 * q as f64 - 2.0 * p as f64);
            // z[0] is -inf, so this never underflows
            if s <= z[k] {
                k -= 1;
            } else {
                break;
            }
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    k = 0;
    for (q, dq) in d.iter_mut().enumerate().take(n) {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let diff = q as f64 - p as f64;
        *dq = diff * diff + f[p];
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_grid(seed: u64, w: usize, h: usize, density: f64) -> OccupancyGrid {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cells = (0..w * h)
            .map(|_| {
                if rng.gen_bool(density) {
                    Cell::Occupied
                } else {
                    Cell::Free
                }
            })
            .collect();
        OccupancyGrid::new(w, h, 0.1, Pose2D::new(-1.0, 2.0, 0.3), cells).unwrap()
    }

    #[test]
    fn edt_matches_brute_force() {
        let g = random_grid(3, 23, 17, 0.05);
        for j in 0..g.height() {
            for i in 0..g.width() {
                let mut best = f64::INFINITY;
                for bj in -1..=g.height() as i64 {
                    for bi in -1..=g.width() as i64 {
                        if g.cell_or_unknown(bi, bj).is_blocked() {
                            let d = ((bi - i as i64).pow(2) + (bj - j as i64).pow(2)) as f64;
                            best = best.min(d);
                        }
                    }
                }
                let got = g.center_distance(i, j) / g.resolution();
                assert!((got - best.sqrt()).abs() < 1e-9, "({i},{j}) {got} vs {}", best.sqrt());
            }
        }
    }

    #[test]
    fn disc_check_matches_exhaustive_scan() {
        let g = random_grid(9, 30, 30, 0.03);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..2000 {
            let p = g.to_world_frame([rng.gen_range(0.0..3.0), rng.gen_range(0.0..3.0)]);
            let r = rng.gen_range(0.05..0.4);
            let m = g.to_map_frame(p);
            let mut hit = false;
            for j in -2..32i64 {
                for i in -2..32i64 {
                    if !g.cell_or_unknown(i, j).is_blocked() {
                        continue;
                    }
                    let (x0, y0) = (i as f64 * 0.1, j as f64 * 0.1);
                    let cx = m[0].clamp(x0, x0 + 0.1);
                    let cy = m[1].clamp(y0, y0 + 0.1);
                    if (cx - m[0]).hypot(cy - m[1]) < r {
                        hit = true;
                    }
                }
            }
            assert_eq!(g.disc_collides(p, r), hit);
        }
    }

    #[test]
    fn pgm_roundtrip_through_files() {
        let dir = tempfile::tempdir().unwrap();
        let g = random_grid(5, 12, 7, 0.3);
        let path = dir.path().join("m.pgm");
        g.save(&path).unwrap();
        let back = load_map(&path).unwrap();
        assert_eq!(back.cells(), g.cells());
        assert_eq!(back.resolution(), g.resolution());
        assert!(back.origin().distance(&g.origin()) < 1e-12);
    }

    #[test]
    fn header_errors_are_distinct() {
        assert!(matches!(
            parse_pgm(b"P2\n1 1\n255\n\0"),
            Err(WorldError::MalformedHeader(_))
        ));
        assert!(matches!(
            parse_pgm(b"P5\n4 x\n255\n"),
            Err(WorldError::MalformedHeader(_))
        ));
        assert!(matches!(
            parse_pgm(b"P5\n2 2\n255\n\0\0\0"),
            Err(WorldError::DimensionMismatch { expected: 4, found: 3 })
        ));
        assert!(parse_pgm(b"P5 # c\n2 1\n255\n\x10\xff").is_ok());
        assert!(matches!(
            parse_sidecar("resolution: 0.1\n"),
            Err(WorldError::Sidecar(_))
        ));
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_map(Path::new("/nonexistent/map.pgm")).unwrap_err();
        assert!(matches!(err, WorldError::Io { .. }));
    }

    proptest! {
        #[test]
        fn world_cell_roundtrip(x in 0.0f64..2.29, y in 0.0f64..1.69) {
            let g = random_grid(1, 23, 17, 0.0);
            let p = g.to_world_frame([x, y]);
            let (i, j) = g.world_to_cell(p).unwrap();
            let c = g.cell_to_world(i, j);
            prop_assert!((c[0] - p[0]).hypot(c[1] - p[1]) < g.resolution());
            prop_assert_eq!(g.world_to_cell(c), Some((i, j)));
        }
    }
}
