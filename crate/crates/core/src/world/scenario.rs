use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::hex::{cell_center, inside_hexagon, CellCoord, Grid};
use super::WorldError;
use crate::channel::{self, ChannelParams, LinkGeometry};
use crate::dec;
use crate::seed::{content_hash, rng_for};

pub const SCENARIO_SCHEMA_VERSION: u32 = 1;

/// UE count per cell for the default 5x5 layout, row-major from the bottom
/// row. Users crowd the western half; a sparse corridor runs from the source
/// along the south-east rim, with one busy cell (index 4) at its corner.
pub const DEFAULT_DENSITY_MAP: [u32; 25] = [
    0, 0, 0, 1, 5, //
    4, 3, 1, 0, 0, //
    6, 6, 3, 0, 0, //
    8, 8, 5, 1, 0, //
    8, 8, 6, 2, 0, //
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundPoint {
    #[serde(with = "dec")]
    pub x: f64,
    #[serde(with = "dec")]
    pub y: f64,
}

impl GroundPoint {
    pub fn distance(&self, other: &GroundPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Input to [`build_scenario`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub grid_cols: u32,
    pub grid_rows: u32,
    pub cell_radius_m: f64,
    /// Row-major; one entry per cell.
    pub ue_count_per_cell: Vec<u32>,
    /// Row-major index of the source cell.
    pub source_index: usize,
    /// Row-major index of the destination cell; `None` means the last cell.
    pub dest_index: Option<usize>,
    pub uav_height_m: f64,
    pub power_levels_w: Vec<f64>,
    pub dist_limit: u32,
    pub throughput_threshold_bps: f64,
    pub channel: ChannelParams,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            grid_cols: 5,
            grid_rows: 5,
            cell_radius_m: 100.0,
            ue_count_per_cell: DEFAULT_DENSITY_MAP.to_vec(),
            source_index: 0,
            dest_index: None,
            uav_height_m: 50.0,
            power_levels_w: vec![0.05, 0.08, 0.11, 0.14, 0.17, 0.20],
            dist_limit: 15,
            throughput_threshold_bps: 18.5e6,
            channel: ChannelParams::default(),
        }
    }
}

impl ScenarioConfig {
    /// Same layout with a uniform UE count in every cell.
    pub fn with_uniform_density(mut self, per_cell: u32) -> Self {
        self.ue_count_per_cell = vec![per_cell; (self.grid_cols * self.grid_rows) as usize];
        self
    }

    fn validate(&self) -> Result<(), WorldError> {
        let invalid = |field: &'static str, reason: String| Err(WorldError::InvalidConfig { field, reason });
        if self.grid_cols == 0 || self.grid_rows == 0 {
            return invalid("grid_cols", "grid dimensions must be positive".into());
        }
        let n = (self.grid_cols * self.grid_rows) as usize;
        if n < 2 {
            return invalid("grid_cols", "a 1x1 grid cannot hold distinct source and destination".into());
        }
        if !(self.cell_radius_m.is_finite() && self.cell_radius_m > 0.0) {
            return invalid("cell_radius_m", format!("must be > 0, got {}", self.cell_radius_m));
        }
        if self.ue_count_per_cell.len() != n {
            return invalid(
                "ue_count_per_cell",
                format!("expected {n} entries, got {}", self.ue_count_per_cell.len()),
            );
        }
        if self.source_index >= n {
            return invalid("source_index", format!("{} is outside the {n}-cell grid", self.source_index));
        }
        let dest = self.dest_index.unwrap_or(n - 1);
        if dest >= n {
            return invalid("dest_index", format!("{dest} is outside the {n}-cell grid"));
        }
        if dest == self.source_index {
            return invalid("dest_index", "destination must differ from source".into());
        }
        if !(self.uav_height_m.is_finite() && self.uav_height_m > 0.0) {
            return invalid("uav_height_m", format!("must be > 0, got {}", self.uav_height_m));
        }
        if self.power_levels_w.len() != 6 {
            return invalid(
                "power_levels_w",
                format!("exactly 6 power levels are required, got {}", self.power_levels_w.len()),
            );
        }
        if self.power_levels_w.iter().any(|p| !(p.is_finite() && *p > 0.0))
            || self.power_levels_w.windows(2).any(|w| w[0] >= w[1])
        {
            return invalid("power_levels_w", "levels must be positive and strictly ascending".into());
        }
        if self.dist_limit == 0 {
            return invalid("dist_limit", "hop budget must be at least 1".into());
        }
        if !(self.throughput_threshold_bps.is_finite() && self.throughput_threshold_bps >= 0.0) {
            return invalid("throughput_threshold_bps", "must be finite and >= 0".into());
        }
        self.channel.validate()?;
        Ok(())
    }
}

/// Normalisation constants for the feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureNorm {
    pub d_max: u32,
    #[serde(with = "dec")]
    pub t_max_bps: f64,
    #[serde(with = "dec")]
    pub i_max_w: f64,
}

/// Immutable world description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub schema_version: u32,
    pub grid_cols: u32,
    pub grid_rows: u32,
    #[serde(with = "dec")]
    pub cell_radius_m: f64,
    pub bs_positions: Vec<GroundPoint>,
    pub ue_placements: Vec<Vec<GroundPoint>>,
    pub ue_count_per_cell: Vec<u32>,
    pub source_cell: CellCoord,
    pub dest_cell: CellCoord,
    #[serde(with = "dec")]
    pub uav_height_m: f64,
    #[serde(with = "dec::vec")]
    pub power_levels_w: Vec<f64>,
    pub dist_limit: u32,
    pub channel: ChannelParams,
    pub seed: u64,
    #[serde(with = "dec")]
    pub throughput_threshold_bps: f64,
    pub norm: FeatureNorm,
}

pub fn build_scenario(config: &ScenarioConfig, seed: u64) -> Result<Scenario, WorldError> {
    config.validate()?;
    let grid = Grid::new(config.grid_cols, config.grid_rows);
    let radius = config.cell_radius_m;
    let bs_positions: Vec<GroundPoint> = grid
        .cells()
        .map(|c| {
            let (x, y) = cell_center(c, radius);
            GroundPoint { x, y }
        })
        .collect();

    let ue_placements = bs_positions
        .iter()
        .zip(&config.ue_count_per_cell)
        .enumerate()
        .map(|(i, (bs, &count))| {
            let mut rng = rng_for(seed, "ue_placement", i as u64);
            let mut ues = Vec::with_capacity(count as usize);
            while ues.len() < count as usize {
                let dx = rng.gen_range(-radius..radius);
                let dy = rng.gen_range(-radius..radius);
                if inside_hexagon(dx, dy, radius) {
                    ues.push(GroundPoint { x: bs.x + dx, y: bs.y + dy });
                }
            }
            ues
        })
        .collect();

    let n = grid.len();
    let mut scenario = Scenario {
        schema_version: SCENARIO_SCHEMA_VERSION,
        grid_cols: config.grid_cols,
        grid_rows: config.grid_rows,
        cell_radius_m: radius,
        bs_positions,
        ue_placements,
        ue_count_per_cell: config.ue_count_per_cell.clone(),
        source_cell: grid.cell(config.source_index).expect("validated"),
        dest_cell: grid.cell(config.dest_index.unwrap_or(n - 1)).expect("validated"),
        uav_height_m: config.uav_height_m,
        power_levels_w: config.power_levels_w.clone(),
        dist_limit: config.dist_limit,
        channel: config.channel.clone(),
        seed,
        throughput_threshold_bps: config.throughput_threshold_bps,
        norm: FeatureNorm { d_max: 1, t_max_bps: 1.0, i_max_w: 1.0 },
    };
    scenario.norm = scenario.compute_norm()?;
    Ok(scenario)
}

impl Scenario {
    pub fn grid(&self) -> Grid {
        Grid::new(self.grid_cols, self.grid_rows)
    }

    pub fn num_cells(&self) -> usize {
        self.grid().len()
    }

    pub fn total_ues(&self) -> u32 {
        self.ue_count_per_cell.iter().sum()
    }

    pub fn p_max(&self) -> f64 {
        *self.power_levels_w.last().expect("6 power levels")
    }

    /// Index of a cell; panics on an off-grid coordinate.
    pub fn cell_index(&self, c: CellCoord) -> usize {
        self.grid()
            .index_of(c)
            .unwrap_or_else(|| panic!("cell {c} is not on the {}x{} grid", self.grid_cols, self.grid_rows))
    }

    pub fn ue_count(&self, c: CellCoord) -> u32 {
        self.ue_count_per_cell[self.cell_index(c)]
    }

    pub fn uav_position(&self, c: CellCoord) -> GroundPoint {
        self.bs_positions[self.cell_index(c)]
    }

    /// Total-pathloss channel gain between the UAV hovering over `uav_cell`
    /// and the BS of `bs_cell`.
    pub fn uav_bs_gain(&self, uav_cell: CellCoord, bs_cell: CellCoord) -> Result<f64, WorldError> {
        let d = self.uav_position(uav_cell).distance(&self.bs_positions[self.cell_index(bs_cell)]);
        let geom = LinkGeometry::new(d, self.uav_height_m);
        let pl = channel::pathloss_total(&geom, &self.channel)?;
        Ok(channel::channel_gain(pl, self.channel.uav_antenna_gain))
    }

    fn compute_norm(&self) -> Result<FeatureNorm, WorldError> {
        let grid = self.grid();
        let d_max = grid.max_distance().max(1);
        let overhead = LinkGeometry::new(0.0, self.uav_height_m);
        let los_gain = channel::channel_gain(
            channel::pathloss_los(&overhead, &self.channel)?,
            self.channel.uav_antenna_gain,
        );
        let t_max_bps = channel::throughput(self.p_max(), los_gain, &self.channel);
        let mut i_max_w: f64 = 0.0;
        for c in grid.cells() {
            i_max_w = i_max_w.max(super::aggregate_interference(self, c, self.p_max())?);
        }
        if !(i_max_w > 0.0) {
            i_max_w = 1.0;
        }
        Ok(FeatureNorm { d_max, t_max_bps, i_max_w })
    }

    /// Structural checks for a scenario loaded from disk.
    pub fn validate(&self) -> Result<(), WorldError> {
        let invalid = |field: &'static str, reason: String| Err(WorldError::InvalidConfig { field, reason });
        if self.schema_version != SCENARIO_SCHEMA_VERSION {
            return invalid(
                "schema_version",
                format!("expected {SCENARIO_SCHEMA_VERSION}, got {}", self.schema_version),
            );
        }
        let grid = self.grid();
        let n = grid.len();
        if n < 2 {
            return invalid("grid_cols", "grid needs at least two cells".into());
        }
        if self.bs_positions.len() != n || self.ue_placements.len() != n || self.ue_count_per_cell.len() != n {
            return invalid("bs_positions", "per-cell arrays must match the grid size".into());
        }
        if !grid.contains(self.source_cell) || !grid.contains(self.dest_cell) || self.source_cell == self.dest_cell {
            return invalid("source_cell", "source and destination must be distinct on-grid cells".into());
        }
        if self.power_levels_w.len() != 6 || self.power_levels_w.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("power_levels_w", "exactly 6 strictly ascending levels required".into());
        }
        for (i, (ues, &count)) in self.ue_placements.iter().zip(&self.ue_count_per_cell).enumerate() {
            if ues.len() != count as usize {
                return invalid("ue_placements", format!("cell {i} lists {} UEs, density map says {count}", ues.len()));
            }
            let bs = self.bs_positions[i];
            if ues.iter().any(|u| !inside_hexagon(u.x - bs.x, u.y - bs.y, self.cell_radius_m)) {
                return invalid("ue_placements", format!("cell {i} has a UE outside its hexagon"));
            }
        }
        self.channel.validate()?;
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serialises")
    }

    pub fn from_json(s: &str) -> Result<Scenario, WorldError> {
        let sc: Scenario = serde_json::from_str(s).map_err(|e| WorldError::Parse(e.to_string()))?;
        sc.validate()?;
        Ok(sc)
    }

    /// Content hash of the canonical serialisation.
    pub fn id(&self) -> String {
        content_hash(&serde_json::to_vec(self).expect("scenario serialises"))
    }

    /// Copy with a different channel mode; normalisation is recomputed.
    pub fn with_channel_mode(&self, mode: channel::ChannelMode) -> Result<Scenario, WorldError> {
        let mut sc = self.clone();
        sc.channel.channel_mode = mode;
        sc.norm = sc.compute_norm()?;
        Ok(sc)
    }

    /// Copy starting from a different cell (unseen-start experiments).
    pub fn with_source(&self, source: CellCoord) -> Result<Scenario, WorldError> {
        if !self.grid().contains(source) || source == self.dest_cell {
            return Err(WorldError::InvalidConfig {
                field: "source_cell",
                reason: format!("{source} is off-grid or equals the destination"),
            });
        }
        let mut sc = self.clone();
        sc.source_cell = source;
        Ok(sc)
    }
}
