//! Scenario configuration: the JSON schema, presets, field overrides and the
//! resolved (linear-unit) form used by the experiment driver.

use crate::array::{AngleGrid, ArrayConfig, BeampatternSpec};
use crate::channel::{EntryLaw, ErrorModel};
use crate::optimizer::RowNormalization;
use crate::outage::UserQoS;
use crate::radar_loss::RadarLossConfig;
use crate::{db_to_linear, dbm_to_watts, DfrcError, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    #[default]
    RadarCentric,
    CommCentric,
    Baseline,
    CltValidate,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::RadarCentric => "radar-centric",
            Algorithm::CommCentric => "comm-centric",
            Algorithm::Baseline => "baseline",
            Algorithm::CltValidate => "clt-validate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArraySection {
    pub num_antennas: usize,
    /// Element spacing in wavelengths.
    pub spacing_wavelengths: f64,
    pub carrier_hz: f64,
}

impl Default for ArraySection {
    fn default() -> Self {
        ArraySection { num_antennas: 10, spacing_wavelengths: 0.5, carrier_hz: 5e9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DoiSection {
    pub angles_deg: Vec<f64>,
    /// Half-width of each ideal mainlobe.
    pub halfwidth_deg: f64,
    /// Uniform grid points over [-90, 90] degrees.
    pub grid_points: usize,
}

impl Default for DoiSection {
    fn default() -> Self {
        DoiSection { angles_deg: vec![-30.0, 0.0, 30.0], halfwidth_deg: 5.0, grid_points: 181 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UserSection {
    pub count: usize,
    /// Per-user SINR thresholds in dB; a single entry applies to every user.
    pub gamma_db: Vec<f64>,
    /// Per-user outage budgets; a single entry applies to every user.
    pub p_out: Vec<f64>,
}

impl Default for UserSection {
    fn default() -> Self {
        UserSection { count: 2, gamma_db: vec![10.0], p_out: vec![0.1] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorVariant {
    /// Independent Gaussian entries with a common variance.
    #[default]
    Independent,
    /// Entries correlated along the diagonal-by-diagonal order.
    Dependent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ErrorSection {
    pub variant: ErrorVariant,
    /// Entry variance `E|e_ij|^2`. Required for the independent variant; for
    /// the dependent one, `null` keeps the raw 1/12 component variances.
    pub sigma_e2: Option<f64>,
    pub lambda: f64,
    pub entry_law: EntryLaw,
}

impl Default for ErrorSection {
    fn default() -> Self {
        ErrorSection { variant: ErrorVariant::Independent, sigma_e2: Some(0.005), lambda: 0.5, entry_law: EntryLaw::Uniform }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossSection {
    /// Weight of the DOI cross-correlation term.
    pub delta: f64,
    /// Beampattern-matching bound of the comm-centric design.
    pub c1: f64,
    /// Cross-correlation bound of the comm-centric design.
    pub c2: f64,
}

impl Default for LossSection {
    fn default() -> Self {
        LossSection { delta: 1.0, c1: 0.3, c2: 5.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleSection {
    /// First penalty parameter; `null` uses 100 times the relaxed loss.
    pub zeta_1: Option<f64>,
    pub mu: f64,
    /// Rank-one tolerance on `lambda_2 / lambda_1`.
    pub rank_tol: f64,
    /// Bisection tolerance of the comm-centric design.
    pub bisection_tol: f64,
    pub max_outer_iters: usize,
    /// Loss-decreasing passes after the radar-centric iterate is rank one.
    pub refine_passes: usize,
    /// Radar-centric descents repeated with a larger first penalty parameter
    /// while the design stays far above the relaxed bound.
    pub restarts: usize,
}

impl Default for ScheduleSection {
    fn default() -> Self {
        ScheduleSection { zeta_1: None, mu: 0.5, rank_tol: 1e-4, bisection_tol: 1e-3, max_outer_iters: 30, refine_passes: 40, restarts: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrialSection {
    pub channel_realizations: usize,
    /// Error draws per user when measuring outage.
    pub error_realizations: usize,
}

impl Default for TrialSection {
    fn default() -> Self {
        TrialSection { channel_realizations: 100, error_realizations: 1000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineSection {
    pub candidates: usize,
    pub row_norm: RowNormalization,
}

impl Default for BaselineSection {
    fn default() -> Self {
        BaselineSection { candidates: 40_000, row_norm: RowNormalization::SquaredNorm }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CltSection {
    /// Matrix sizes of the KL curve.
    pub sizes: Vec<usize>,
    pub trials: usize,
    pub bins: usize,
    /// Entry laws compared; each gives one KL curve.
    pub entry_laws: Vec<EntryLaw>,
}

impl Default for CltSection {
    fn default() -> Self {
        CltSection {
            sizes: vec![4, 6, 8, 10, 12, 14, 16],
            trials: 100_000,
            bins: 100,
            entry_laws: vec![EntryLaw::Uniform, EntryLaw::SumOfUniforms],
        }
    }
}

/// One experiment, as read from JSON. Power and noise are in dBm, SINR
/// thresholds in dB; [`ScenarioConfig::resolve`] converts them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub algorithm: Algorithm,
    pub array: ArraySection,
    pub dois: DoiSection,
    pub users: UserSection,
    pub power_dbm: f64,
    pub noise_dbm: f64,
    pub error: ErrorSection,
    pub loss: LossSection,
    pub schedule: ScheduleSection,
    pub trials: TrialSection,
    pub baseline: BaselineSection,
    pub clt: CltSection,
    pub seed: u64,
    /// Worker threads; `null` uses the available parallelism.
    pub workers: Option<usize>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            algorithm: Algorithm::default(),
            array: ArraySection::default(),
            dois: DoiSection::default(),
            users: UserSection::default(),
            power_dbm: 30.0,
            noise_dbm: 10.0,
            error: ErrorSection::default(),
            loss: LossSection::default(),
            schedule: ScheduleSection::default(),
            trials: TrialSection::default(),
            baseline: BaselineSection::default(),
            clt: CltSection::default(),
            seed: 0,
            workers: None,
        }
    }
}

/// Fully converted scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub power_watts: f64,
    pub noise_watts: f64,
    pub qos: Vec<UserQoS>,
    pub loss: RadarLossConfig,
    pub error_model: ErrorModel,
}

fn per_user(values: &[f64], count: usize, what: &str) -> Result<Vec<f64>> {
    match values.len() {
        1 => Ok(vec![values[0]; count]),
        n if n == count => Ok(values.to_vec()),
        n => Err(DfrcError::Config(format!("{what} has {n} entries for {count} users"))),
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Desk-scale realization counts: 10 channel and 200 error realizations.
    pub fn quick(mut self) -> Self {
        self.trials = TrialSection { channel_realizations: 10, error_realizations: 200 };
        self
    }

    /// Sets the field at a dotted path (`users.gamma_db`, `seed`, ...) from a
    /// JSON literal; bare words are taken as strings.
    pub fn set(&self, path: &str, raw: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        let mut doc = serde_json::to_value(self)?;
        let mut node = &mut doc;
        for key in path.split('.') {
            node = node
                .as_object_mut()
                .and_then(|m| m.get_mut(key))
                .ok_or_else(|| DfrcError::Config(format!("unknown config field `{path}`")))?;
        }
        *node = value;
        serde_json::from_value(doc).map_err(|e| DfrcError::Config(format!("`{path}`: {e}")))
    }

    pub fn error_model(&self) -> Result<ErrorModel> {
        let n = self.array.num_antennas;
        let e = &self.error;
        let model = match e.variant {
            ErrorVariant::Independent => {
                let v = e.sigma_e2.ok_or_else(|| DfrcError::Config("independent errors need sigma_e2".into()))?;
                if !(v >= 0.0) {
                    return Err(DfrcError::Config("sigma_e2 must be nonnegative".into()));
                }
                ErrorModel::independent_uniform(n, v)
            }
            ErrorVariant::Dependent => {
                ErrorModel::Dependent { lambda_decay: e.lambda, entry_law: e.entry_law, target_variance: e.sigma_e2 }
            }
        };
        model.validate(n)?;
        Ok(model)
    }

    pub fn loss_config(&self) -> Result<RadarLossConfig> {
        let a = &self.array;
        if !(a.spacing_wavelengths > 0.0 && a.carrier_hz > 0.0) {
            return Err(DfrcError::Config("spacing and carrier must be positive".into()));
        }
        let wavelength = crate::array::SPEED_OF_LIGHT / a.carrier_hz;
        let array = ArrayConfig::new(a.num_antennas, wavelength, a.spacing_wavelengths * wavelength, a.carrier_hz)?;
        let grid = AngleGrid::uniform(self.dois.grid_points)?;
        let dois = self.dois.angles_deg.iter().map(|d| d.to_radians()).collect();
        let spec = BeampatternSpec::rectangular(grid, dois, self.dois.halfwidth_deg.to_radians())?;
        RadarLossConfig::new(self.loss.delta, array, spec)
    }

    pub fn resolve(&self) -> Result<Scenario> {
        if self.trials.channel_realizations == 0 {
            return Err(DfrcError::Config("at least one channel realization is required".into()));
        }
        if self.users.count > 0 && self.trials.error_realizations < 100 {
            return Err(DfrcError::Config("at least 100 error realizations are required".into()));
        }
        if self.workers == Some(0) {
            return Err(DfrcError::Config("workers must be positive".into()));
        }
        let k = self.users.count;
        let gammas = per_user(&self.users.gamma_db, k, "gamma_db")?;
        let p_out = per_user(&self.users.p_out, k, "p_out")?;
        let qos = gammas
            .iter()
            .zip(&p_out)
            .map(|(&g, &p)| UserQoS::new(db_to_linear(g), p))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| DfrcError::Config(e.to_string()))?;
        let needs_users = matches!(self.algorithm, Algorithm::CommCentric | Algorithm::Baseline);
        if needs_users && k == 0 {
            return Err(DfrcError::Config(format!("{} needs at least one user", self.algorithm.as_str())));
        }
        if self.algorithm == Algorithm::CltValidate {
            if self.clt.sizes.iter().any(|&n| n < 2) || self.clt.entry_laws.is_empty() || self.clt.bins == 0 {
                return Err(DfrcError::Config("CLT sizes must be at least 2, with one law and one bin".into()));
            }
            if self.clt.trials < 1000 {
                return Err(DfrcError::Config("CLT needs at least 1000 trials".into()));
            }
        }
        Ok(Scenario {
            config: self.clone(),
            power_watts: dbm_to_watts(self.power_dbm),
            noise_watts: dbm_to_watts(self.noise_dbm),
            qos,
            loss: self.loss_config()?,
            error_model: self.error_model()?,
        })
    }
}
