//! Streaming Doppler spread estimator.
//!
//! A QR-based low-rank recursion follows the dominant subspace of the
//! exponentially weighted pilot autocorrelation matrix. Per symbol the
//! estimator
//!
//! 1. updates the zero-lag recursion with `Z_0 = h(n) h(n)^H`,
//! 2. updates the lagged statistics with `h(n) h(n - beta)^H`,
//! 3. picks the order `L` by MDL on `diag(R_0)` and estimates the noise
//!    variance,
//! 4. forms `eta`, the ratio of lagged to noise-free zero-lag correlation
//!    energy in the top-`L` subspace,
//! 5. inverts `eta` into `f_d` through the series polynomial.
//!
//! Each QR recursion runs
//! `A(n) = alpha A(n-1) C(n-1) + (1 - alpha) Z(n) Q(n-1)`,
//! `A(n) = Q(n) R(n)`, `C(n) = Q(n-1)^H Q(n)`.
//!
//! Two forms of step 4 are available, see [`EtaForm`]. The default
//! projects both correlations onto the zero-lag basis so that the energy
//! the recursion loses when its basis rotates cancels in the ratio.

mod mdl;
mod qr;

pub use mdl::{mdl_order, noise_floor};

use std::collections::VecDeque;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::channel::OfdmGeometry;
use crate::frontend::PilotSnapshot;
use crate::numerics::{self, NewtonConfig, NumericsError};

/// Symbols before an estimate is emitted without the warmup flag.
pub const WARMUP_SYMBOLS: usize = 20;
pub const MAX_LAG: u32 = 4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrackerError {
    #[error("invalid tracker configuration: {0}")]
    InvalidConfig(String),
    #[error("snapshot has {got} pilots, tracker expects {expected}")]
    SnapshotLength { expected: usize, got: usize },
    #[error("snapshot {got} arrived out of order, expected {expected}")]
    OutOfOrder { expected: usize, got: usize },
    #[error("order {l_hat} leaves no noise entries among {max_rank} tracked eigenvalues")]
    NoNoiseEntries { l_hat: usize, max_rank: usize },
    #[error("eta is undefined: no signal energy above the noise floor")]
    UndefinedEta,
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// How `eta` is formed from the tracked statistics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum EtaForm {
    /// `||V^H Herm(M_b) V||_F / ||V^H M_s V - sigma^2 I||_F`, with `M_b` the
    /// lagged and `M_s` the pair-averaged zero-lag correlation
    /// (`(h(n) h(n)^H + h(n-beta) h(n-beta)^H) / 2`), both held in the
    /// zero-lag basis, `V` the top `L` eigenvectors of `M_s`, and `sigma^2`
    /// the energy outside that subspace per remaining dimension.
    #[default]
    Projected,
    /// `sqrt(sum |R_b[l,l]|^2 / sum |R_0[l,l] - sigma^2|^2)` from a second
    /// QR recursion on the lagged matrix, with `sigma^2` the mean of the
    /// trailing `diag(R_0)` entries.
    DiagRatio,
}

impl EtaForm {
    pub fn name(&self) -> &'static str {
        match self {
            EtaForm::Projected => "projected",
            EtaForm::DiagRatio => "diag-ratio",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "projected" => Some(EtaForm::Projected),
            "diag-ratio" => Some(EtaForm::DiagRatio),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackerConfig {
    /// Exponential forgetting factor.
    pub alpha: f64,
    /// Symbol lag `beta` of the second correlation matrix.
    pub lag: u32,
    /// Largest tested rank `L_m`.
    pub max_rank: usize,
    /// Series truncation order `K`.
    pub series_order: usize,
    pub newton: NewtonConfig,
    pub eta_form: EtaForm,
    pub geometry: OfdmGeometry,
}

impl TrackerConfig {
    /// `alpha = 0.995`, `beta = 1`, `L_m = 10`, `K = 8`, Newton to 1e-4 in at
    /// most 4 steps.
    pub fn reference(geometry: OfdmGeometry) -> Self {
        Self {
            alpha: 0.995,
            lag: 1,
            max_rank: 10,
            series_order: 8,
            newton: NewtonConfig::default(),
            eta_form: EtaForm::Projected,
            geometry,
        }
    }

    pub fn validate(&self) -> Result<(), TrackerError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(TrackerError::InvalidConfig(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(1..=MAX_LAG).contains(&self.lag) {
            // Beyond four symbols the polynomial has several negative roots.
            return Err(TrackerError::InvalidConfig(format!("lag must lie in 1..={MAX_LAG}, got {}", self.lag)));
        }
        if self.max_rank == 0 || self.max_rank > self.geometry.pilots() {
            return Err(TrackerError::InvalidConfig(format!(
                "max rank must lie in 1..={}, got {}",
                self.geometry.pilots(),
                self.max_rank
            )));
        }
        if self.series_order < 2 {
            return Err(TrackerError::InvalidConfig(format!("series order must be >= 2, got {}", self.series_order)));
        }
        self.newton.validate()?;
        Ok(())
    }

    /// `phi = beta (1 + r_cp)`.
    pub fn phi(&self) -> f64 {
        numerics::phi(self.lag, self.geometry.cp_ratio())
    }

    /// Effective window `1 / (1 - alpha)`.
    pub fn window(&self) -> f64 {
        1.0 / (1.0 - self.alpha)
    }
}

/// One QR-based low-rank recursion.
#[derive(Debug, Clone)]
pub struct LagTracker {
    q: DMatrix<Complex64>,
    a: DMatrix<Complex64>,
    c: DMatrix<Complex64>,
    r: DMatrix<Complex64>,
    updates: usize,
}

impl LagTracker {
    /// `Q = [I; 0]`, `A = 0`, `C = I`, `R = 0`.
    pub fn new(pilots: usize, rank: usize) -> Self {
        let mut q = DMatrix::zeros(pilots, rank);
        for i in 0..rank.min(pilots) {
            q[(i, i)] = Complex64::new(1.0, 0.0);
        }
        Self {
            q,
            a: DMatrix::zeros(pilots, rank),
            c: DMatrix::identity(rank, rank),
            r: DMatrix::zeros(rank, rank),
            updates: 0,
        }
    }

    /// Folds in `Z = newest * lagged^H`. Returns `true` if the QR step had to
    /// fill a collapsed column.
    pub fn update(&mut self, alpha: f64, newest: &DVector<Complex64>, lagged: &DVector<Complex64>) -> bool {
        // Z Q = newest (lagged^H Q), never forming the P x P outer product.
        let proj = self.q.adjoint() * lagged;
        let mut a = &self.a * &self.c;
        a *= Complex64::new(alpha, 0.0);
        a.gerc(Complex64::new(1.0 - alpha, 0.0), newest, &proj, Complex64::new(1.0, 0.0));
        let f = qr::thin_qr(&a);
        self.c = self.q.adjoint() * &f.q;
        self.q = f.q;
        self.r = f.r;
        self.a = a;
        self.updates += 1;
        f.collapsed
    }

    pub fn q(&self) -> &DMatrix<Complex64> {
        &self.q
    }

    pub fn a(&self) -> &DMatrix<Complex64> {
        &self.a
    }

    pub fn c(&self) -> &DMatrix<Complex64> {
        &self.c
    }

    pub fn r(&self) -> &DMatrix<Complex64> {
        &self.r
    }

    pub fn r_diag(&self) -> Vec<Complex64> {
        self.r.diagonal().iter().copied().collect()
    }

    pub fn updates(&self) -> usize {
        self.updates
    }

    /// Total weight `1 - alpha^updates` the recursion has accumulated from
    /// its zero start.
    pub fn accumulated_weight(&self, alpha: f64) -> f64 {
        1.0 - alpha.powi(self.updates as i32)
    }

    /// `diag(R)` divided by the accumulated weight, i.e. the diagonal the
    /// recursion would hold had it run forever on stationary input.
    pub fn normalized_r_diag(&self, alpha: f64) -> Vec<Complex64> {
        let w = self.accumulated_weight(alpha);
        if w <= 0.0 {
            return self.r_diag();
        }
        self.r.diagonal().iter().map(|v| v / w).collect()
    }

    /// `||Q^H Q - I||_F`.
    pub fn orthonormality_error(&self) -> f64 {
        let k = self.q.ncols();
        (self.q.adjoint() * &self.q - DMatrix::<Complex64>::identity(k, k)).norm()
    }
}

/// Lagged and pair-averaged zero-lag correlations held in the basis `Q_0`
/// of the zero-lag recursion, plus the pair-averaged total energy.
///
/// When `Q_0` rotates by `C`, both matrices are carried over as
/// `C^H M C`, so they lose the same out-of-subspace energy.
#[derive(Debug, Clone)]
pub struct ProjectedCorrelation {
    lag: DMatrix<Complex64>,
    pair: DMatrix<Complex64>,
    energy: f64,
    updates: usize,
}

impl ProjectedCorrelation {
    pub fn new(rank: usize) -> Self {
        Self { lag: DMatrix::zeros(rank, rank), pair: DMatrix::zeros(rank, rank), energy: 0.0, updates: 0 }
    }

    /// Re-expresses both matrices after the basis moved by `c = Q_old^H Q_new`.
    pub fn rotate(&mut self, c: &DMatrix<Complex64>) {
        if self.updates > 0 {
            self.lag = c.adjoint() * &self.lag * c;
            self.pair = c.adjoint() * &self.pair * c;
        }
    }

    /// Folds in one pair `(h(n), h(n - beta))` projected on `q`.
    pub fn update(&mut self, alpha: f64, q: &DMatrix<Complex64>, newest: &DVector<Complex64>, lagged: &DVector<Complex64>) {
        let y = q.adjoint() * newest;
        let yb = q.adjoint() * lagged;
        let keep = Complex64::new(alpha, 0.0);
        let half = Complex64::new(0.5 * (1.0 - alpha), 0.0);
        self.lag *= keep;
        self.lag.gerc(Complex64::new(1.0 - alpha, 0.0), &y, &yb, Complex64::new(1.0, 0.0));
        self.pair *= keep;
        self.pair.gerc(half, &y, &y, Complex64::new(1.0, 0.0));
        self.pair.gerc(half, &yb, &yb, Complex64::new(1.0, 0.0));
        self.energy = alpha * self.energy + 0.5 * (1.0 - alpha) * (newest.norm_squared() + lagged.norm_squared());
        self.updates += 1;
    }

    pub fn updates(&self) -> usize {
        self.updates
    }

    fn weight(&self, alpha: f64) -> f64 {
        1.0 - alpha.powi(self.updates as i32)
    }

    /// Lagged correlation divided by the accumulated weight.
    pub fn lag_matrix(&self, alpha: f64) -> DMatrix<Complex64> {
        &self.lag / Complex64::new(self.weight(alpha), 0.0)
    }

    /// Pair-averaged zero-lag correlation divided by the accumulated weight.
    pub fn pair_matrix(&self, alpha: f64) -> DMatrix<Complex64> {
        &self.pair / Complex64::new(self.weight(alpha), 0.0)
    }

    /// Pair-averaged `||h||^2` divided by the accumulated weight.
    pub fn energy(&self, alpha: f64) -> f64 {
        self.energy / self.weight(alpha)
    }
}

/// Eigenpairs of a Hermitian matrix, eigenvalues descending.
fn sorted_eigen(m: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let e = m.clone().symmetric_eigen();
    let mut idx: Vec<usize> = (0..e.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| e.eigenvalues[b].total_cmp(&e.eigenvalues[a]).then(a.cmp(&b)));
    let values = idx.iter().map(|&i| e.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), idx.len(), |r, c| e.eigenvectors[(r, idx[c])]);
    (values, vectors)
}

/// Diagnostic flags attached to each estimate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EstimateFlags {
    pub warmup: bool,
    pub eta_clamped: bool,
    pub not_converged: bool,
    pub rank_collapse: bool,
    pub no_signal: bool,
    pub inversion_failed: bool,
}

impl EstimateFlags {
    const NAMES: [&'static str; 6] =
        ["warmup", "eta_clamped", "not_converged", "rank_collapse", "no_signal", "inversion_failed"];

    fn bits(&self) -> [bool; 6] {
        [self.warmup, self.eta_clamped, self.not_converged, self.rank_collapse, self.no_signal, self.inversion_failed]
    }

    pub fn is_empty(&self) -> bool {
        !self.bits().iter().any(|&b| b)
    }

    /// Names of the raised flags.
    pub fn names(&self) -> impl Iterator<Item = &'static str> {
        Self::NAMES.into_iter().zip(self.bits()).filter(|(_, on)| *on).map(|(n, _)| n)
    }

    /// Parses the `|`-joined form written by `Display`.
    pub fn parse(field: &str) -> Option<Self> {
        let mut flags = Self::default();
        for name in field.split('|').filter(|s| !s.is_empty()) {
            match name {
                "warmup" => flags.warmup = true,
                "eta_clamped" => flags.eta_clamped = true,
                "not_converged" => flags.not_converged = true,
                "rank_collapse" => flags.rank_collapse = true,
                "no_signal" => flags.no_signal = true,
                "inversion_failed" => flags.inversion_failed = true,
                _ => return None,
            }
        }
        Some(flags)
    }
}

impl fmt::Display for EstimateFlags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, name) in self.names().enumerate() {
            if i > 0 {
                f.write_str("|")?;
            }
            f.write_str(name)?;
        }
        Ok(())
    }
}

/// Per-symbol estimator output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DopplerEstimate {
    pub index: usize,
    pub fd_hat: f64,
    /// NaN when no signal subspace was detected.
    pub eta_hat: f64,
    pub l_hat: usize,
    pub sigma_n2_hat: f64,
    pub newton_iters: usize,
    pub flags: EstimateFlags,
}

/// Outcome of the lagged recursion update for one symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LagUpdate {
    /// Fewer than `beta` earlier symbols are buffered.
    Skipped,
    Updated { collapsed: bool },
}

/// The streaming estimator for one snapshot stream.
#[derive(Debug, Clone)]
pub struct DopplerTracker {
    cfg: TrackerConfig,
    lag0: LagTracker,
    lagb: LagTracker,
    proj: ProjectedCorrelation,
    history: VecDeque<DVector<Complex64>>,
    next_index: usize,
    last_fd: f64,
}

impl DopplerTracker {
    pub fn new(cfg: TrackerConfig) -> Result<Self, TrackerError> {
        cfg.validate()?;
        let p = cfg.geometry.pilots();
        Ok(Self {
            lag0: LagTracker::new(p, cfg.max_rank),
            lagb: LagTracker::new(p, cfg.max_rank),
            proj: ProjectedCorrelation::new(cfg.max_rank),
            history: VecDeque::with_capacity(cfg.lag as usize + 1),
            next_index: 0,
            last_fd: 0.0,
            cfg,
        })
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.cfg
    }

    pub fn lag0(&self) -> &LagTracker {
        &self.lag0
    }

    pub fn lagbeta(&self) -> &LagTracker {
        &self.lagb
    }

    pub fn projected(&self) -> &ProjectedCorrelation {
        &self.proj
    }

    /// Snapshots processed so far.
    pub fn symbols(&self) -> usize {
        self.next_index
    }

    /// Buffered snapshots, current one included once `step` has run.
    pub fn buffered(&self) -> usize {
        self.history.len()
    }

    fn vector(&self, snap: &PilotSnapshot) -> Result<DVector<Complex64>, TrackerError> {
        let expected = self.cfg.geometry.pilots();
        if snap.len() != expected {
            return Err(TrackerError::SnapshotLength { expected, got: snap.len() });
        }
        Ok(DVector::from_column_slice(&snap.values))
    }

    /// Step 1 on its own: folds `h h^H` into the zero-lag recursion and
    /// carries the projected statistics into the new basis.
    pub fn update_lag0(&mut self, snap: &PilotSnapshot) -> Result<bool, TrackerError> {
        let h = self.vector(snap)?;
        let collapsed = self.lag0.update(self.cfg.alpha, &h, &h);
        self.proj.rotate(self.lag0.c());
        Ok(collapsed)
    }

    /// Step 2 on its own: folds `h(n) h(n - beta)^H` into the lagged
    /// recursion and the projected statistics, using the snapshots buffered
    /// by earlier `step` calls. Run after [`Self::update_lag0`].
    pub fn update_lagbeta(&mut self, snap: &PilotSnapshot) -> Result<LagUpdate, TrackerError> {
        let h = self.vector(snap)?;
        let lag = self.cfg.lag as usize;
        let len = self.history.len();
        if len < lag {
            return Ok(LagUpdate::Skipped);
        }
        let lagged = &self.history[len - lag];
        let collapsed = self.lagb.update(self.cfg.alpha, &h, lagged);
        self.proj.update(self.cfg.alpha, self.lag0.q(), &h, lagged);
        Ok(LagUpdate::Updated { collapsed })
    }

    /// Step 3b: noise variance for order `l_hat` under the configured form.
    ///
    /// Falls back to the trailing `diag(R_0)` mean until the projected
    /// statistics have seen a lagged pair.
    pub fn noise_estimate(&self, l_hat: usize) -> Result<f64, TrackerError> {
        let p = self.cfg.geometry.pilots();
        if self.cfg.eta_form == EtaForm::DiagRatio || self.proj.updates == 0 || l_hat >= p {
            return noise_floor(&self.eigenvalues(), l_hat);
        }
        let alpha = self.cfg.alpha;
        let (eigs, _) = sorted_eigen(&self.proj.pair_matrix(alpha));
        let captured: f64 = eigs.iter().take(l_hat).sum();
        Ok(((self.proj.energy(alpha) - captured) / (p - l_hat) as f64).max(0.0))
    }

    /// Step 4 under the configured form.
    pub fn eta_estimate(&self, l_hat: usize, sigma_n2: f64) -> Result<f64, TrackerError> {
        match self.cfg.eta_form {
            EtaForm::Projected => self.eta_projected(l_hat, sigma_n2),
            EtaForm::DiagRatio => self.eta_diag_ratio(l_hat, sigma_n2),
        }
    }

    /// `eta` from the projected statistics; see [`EtaForm::Projected`].
    pub fn eta_projected(&self, l_hat: usize, sigma_n2: f64) -> Result<f64, TrackerError> {
        if l_hat == 0 || l_hat > self.cfg.max_rank || self.proj.updates == 0 {
            return Err(TrackerError::UndefinedEta);
        }
        let alpha = self.cfg.alpha;
        let (eigs, vecs) = sorted_eigen(&self.proj.pair_matrix(alpha));
        let v = vecs.columns(0, l_hat);
        let lag = self.proj.lag_matrix(alpha);
        let herm = (&lag + lag.adjoint()) * Complex64::new(0.5, 0.0);
        let num = (v.adjoint() * herm * v).norm_squared();
        let den: f64 = eigs.iter().take(l_hat).map(|e| (e - sigma_n2).powi(2)).sum();
        if den <= 0.0 || !den.is_finite() {
            return Err(TrackerError::UndefinedEta);
        }
        Ok((num / den).sqrt())
    }

    /// `eta` over the top `l_hat` diagonal entries; see
    /// [`EtaForm::DiagRatio`].
    ///
    /// Both diagonals are first divided by their accumulated weight. The
    /// lagged recursion starts `beta` symbols late, so the raw ratio would
    /// be biased low by `(1 - alpha^(n-beta)) / (1 - alpha^n)`. `sigma_n2`
    /// is on the same normalized scale, as returned by [`Self::eigenvalues`].
    pub fn eta_diag_ratio(&self, l_hat: usize, sigma_n2: f64) -> Result<f64, TrackerError> {
        if l_hat == 0 || l_hat > self.cfg.max_rank || self.lagb.updates == 0 {
            return Err(TrackerError::UndefinedEta);
        }
        let alpha = self.cfg.alpha;
        let num: f64 = self.lagb.normalized_r_diag(alpha).iter().take(l_hat).map(|v| v.norm_sqr()).sum();
        let den: f64 = self
            .lag0
            .normalized_r_diag(alpha)
            .iter()
            .take(l_hat)
            .map(|v| (v.re - sigma_n2).powi(2) + v.im * v.im)
            .sum();
        if den <= 0.0 || !den.is_finite() {
            return Err(TrackerError::UndefinedEta);
        }
        Ok((num / den).sqrt())
    }

    /// Weight-normalized `diag(R_0)`, sorted descending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut eigs: Vec<f64> = self.lag0.normalized_r_diag(self.cfg.alpha).iter().map(|v| v.re).collect();
        eigs.sort_by(|a, b| b.total_cmp(a));
        eigs
    }

    /// Runs steps 1 to 5 for the next snapshot in the stream.
    ///
    /// Only malformed input is an error. Numerical trouble inside the
    /// estimate surfaces as flags and the previous `fd_hat` is carried over.
    pub fn step(&mut self, snap: &PilotSnapshot) -> Result<DopplerEstimate, TrackerError> {
        if snap.index != self.next_index {
            return Err(TrackerError::OutOfOrder { expected: self.next_index, got: snap.index });
        }
        let h = self.vector(snap)?;
        let n = snap.index;
        let mut flags = EstimateFlags::default();

        flags.rank_collapse |= self.update_lag0(snap)?;
        match self.update_lagbeta(snap)? {
            LagUpdate::Skipped => flags.warmup = true,
            LagUpdate::Updated { collapsed } => flags.rank_collapse |= collapsed,
        }
        self.history.push_back(h);
        while self.history.len() > self.cfg.lag as usize + 1 {
            self.history.pop_front();
        }
        self.next_index += 1;

        let eigs = self.eigenvalues();
        let n_eff = ((n + 1) as f64).min(self.cfg.window()).max(self.cfg.max_rank as f64);
        let l_hat = mdl_order(&eigs, n_eff);
        let sigma_n2_hat = self.noise_estimate(l_hat)?;

        let eta_hat = match self.eta_estimate(l_hat, sigma_n2_hat) {
            Ok(eta) => eta,
            Err(_) => {
                flags.no_signal = true;
                f64::NAN
            }
        };

        let mut fd_hat = self.last_fd;
        let mut newton_iters = 0;
        if n < WARMUP_SYMBOLS.max(self.cfg.lag as usize) {
            flags.warmup = true;
        } else if eta_hat.is_finite() {
            let g = &self.cfg.geometry;
            match numerics::invert_eta(
                eta_hat,
                self.cfg.phi(),
                self.cfg.series_order,
                &self.cfg.newton,
                g.tones(),
                g.sample_period(),
            ) {
                Ok(inv) => {
                    fd_hat = inv.doppler_hz;
                    newton_iters = inv.iterations;
                    flags.eta_clamped = inv.clamped;
                    flags.not_converged = !inv.converged;
                }
                Err(_) => flags.inversion_failed = true,
            }
        }
        self.last_fd = fd_hat;

        Ok(DopplerEstimate { index: n, fd_hat, eta_hat, l_hat, sigma_n2_hat, newton_iters, flags })
    }
}
