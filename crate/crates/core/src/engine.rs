//! One offloading episode, end to end.
//!
//! Stage 1 places users, synthesizes their encounter history, builds the
//! closeness graph and partitions it at w_T. Stage 2 walks users in arrival
//! order and sends white-area users straight to the eNB. Stage 3 serves each
//! OffSN user from its OffSN's content prior: every re-selected (old) content
//! is requested from the in-range holder with the highest closeness, and new
//! contents, failed transfers and old contents without a reachable holder are
//! served by the eNB.
//!
//! A user's session has a D2D phase followed by an eNB phase. All D2D
//! transfers of the session run concurrently on one subchannel, so each hears
//! the other holders and the eNB downlink; contents fetched from the same
//! holder share one contact, and the j-th of them needs j · X_min seconds of
//! it. The eNB phase carries new contents and fallbacks once the D2D phase is
//! over, so it sees no D2D interference.
//!
//! Randomness is split into independent ChaCha streams per concern
//! (placement, encounters, demand, radio) derived from the episode seed, so a
//! change in one stage's draws does not shift the others.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::closeness::{closeness, fit_gamma, min_contact_time, ContactLaw};
use crate::error::{Error, Result};
use crate::geometry::{uniform_disk, Point};
use crate::offsn::{best_holder_by, build_graph, partition, ClosenessGraph, OffsnPartition};
use crate::onsn::{ibp_select, ContentId, IbpState};
use crate::phy::{channel_gain, mean_gain, rate_cellular, rate_clean, rate_d2d, ChannelConfig, InterferenceTopology};
use crate::trace::{contact_stats, synthesize_trace, TraceSynthesis};
use crate::{UserId, UserPair};

/// How the old-content term of the per-user utilities is counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UtilityForm {
    /// Σ_k m_k/n over the prior before the user's draw.
    #[default]
    Expected,
    /// Number of old contents the user actually re-selected.
    Realized,
}

/// A per-content cost, either absolute or as a fraction of a reference rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cost {
    Absolute(f64),
    RateFraction(f64),
}

impl Cost {
    pub fn resolve(self, rate: f64) -> f64 {
        match self {
            Cost::Absolute(c) => c,
            Cost::RateFraction(f) => f * rate,
        }
    }

    fn value(self) -> f64 {
        match self {
            Cost::Absolute(v) | Cost::RateFraction(v) => v,
        }
    }
}

/// Per-content costs. Rate fractions resolve against R_d for `c_t`, R_c for
/// `c_m` and V_c for `c_c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostConfig {
    /// D2D transmission cost.
    pub c_t: Cost,
    /// User payment to the eNB.
    pub c_m: Cost,
    /// eNB control-signaling cost.
    pub c_c: Cost,
}

impl Default for CostConfig {
    fn default() -> Self {
        Self {
            c_t: Cost::RateFraction(0.05),
            c_m: Cost::RateFraction(0.05),
            c_c: Cost::RateFraction(0.05),
        }
    }
}

impl CostConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, c) in [("c_t", self.c_t), ("c_m", self.c_m), ("c_c", self.c_c)] {
            if !(c.value() >= 0.0) || !c.value().is_finite() {
                return Err(Error::config(format!("{name} must be finite and >= 0")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeConfig {
    pub n_users: usize,
    /// Radius of the disk users are placed in, meters.
    pub cell_radius: f64,
    /// Distance from the eNB to the centre of the user disk, meters.
    pub enb_distance: f64,
    /// Maximum D2D distance, meters.
    pub d2d_max: f64,
    /// IBP concentration α.
    pub alpha: f64,
    /// Closeness threshold w_T.
    pub w_t: f64,
    pub channel: ChannelConfig,
    pub costs: CostConfig,
    pub content_bits: f64,
    pub seed: u64,
    pub utility_form: UtilityForm,
    pub trace: TraceSynthesis,
    /// Service order; ascending labels when `None`.
    pub arrival_order: Option<Vec<UserId>>,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            n_users: 32,
            cell_radius: 80.0,
            enb_distance: 800.0,
            d2d_max: 80.0,
            alpha: 8.0,
            w_t: 0.5,
            channel: ChannelConfig::default(),
            costs: CostConfig::default(),
            content_bits: 1e6,
            seed: 1,
            utility_form: UtilityForm::Expected,
            trace: TraceSynthesis::default(),
            arrival_order: None,
        }
    }
}

impl EpisodeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_users < 2 {
            return Err(Error::config(format!("n_users must be >= 2, got {}", self.n_users)));
        }
        let checks = [
            ("cell_radius", self.cell_radius, self.cell_radius > 0.0),
            ("enb_distance", self.enb_distance, self.enb_distance >= 0.0),
            ("d2d_max", self.d2d_max, self.d2d_max >= 0.0),
            ("alpha", self.alpha, self.alpha > 0.0),
            ("w_t", self.w_t, self.w_t >= 0.0),
            ("content_bits", self.content_bits, self.content_bits > 0.0),
        ];
        for (name, v, ok) in checks {
            if !ok || !v.is_finite() {
                return Err(Error::config(format!("{name} out of range: {v}")));
            }
        }
        self.channel.validate()?;
        self.costs.validate()?;
        self.trace.validate()?;
        if let Some(order) = &self.arrival_order {
            let seen: BTreeSet<UserId> = order.iter().copied().collect();
            let expected: BTreeSet<UserId> = (0..self.n_users as u32).map(UserId).collect();
            if order.len() != self.n_users || seen != expected {
                return Err(Error::config("arrival_order must be a permutation of 0..n_users"));
            }
        }
        Ok(())
    }
}

/// Outcome for one user.
#[derive(Debug, Clone, PartialEq)]
pub struct UserMetrics {
    pub user: UserId,
    /// Index of the user's OffSN; `None` for white-area users.
    pub offsn: Option<usize>,
    /// m_n: contents selected.
    pub m_n: u64,
    /// m_n^0: never-before-selected contents.
    pub m_n0: u64,
    pub old_served_d2d: u64,
    /// Old contents whose D2D transfer failed and fell back to the eNB.
    pub d2d_failures: u64,
    /// Old contents sent to the eNB without a D2D attempt (no holder in
    /// range, or a white-area user).
    pub old_served_enb: u64,
    /// Mean interference-free cellular rate over the user's requests.
    pub v_c: f64,
    /// Mean cellular rate over the user's eNB transfers.
    pub r_c: f64,
    /// Mean D2D rate over the user's D2D transfers.
    pub r_d: f64,
    pub u_user: f64,
    pub u_enb: f64,
    pub offloaded: f64,
}

impl UserMetrics {
    /// Requests the eNB carried for this user.
    pub fn enb_served(&self) -> u64 {
        self.m_n0 + self.d2d_failures + self.old_served_enb
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Aggregates {
    /// Σ over eNB transfers of their rate, bits/s/Hz.
    pub enb_data_rate_sum: f64,
    /// Offloaded traffic per requested content.
    pub offloaded_traffic: f64,
    /// Σ of per-user offloaded traffic.
    pub offloaded_traffic_total: f64,
    /// Successful D2D transfers over attempts; 0 with no attempts.
    pub d2d_success_ratio: f64,
    pub requests: u64,
    pub d2d_attempts: u64,
    pub d2d_served: u64,
    pub n_offsns: usize,
    pub white_area_users: usize,
}

/// How one requested content was delivered.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    D2d { holder: UserId },
    EnbNew,
    EnbAfterFailure { holder: UserId },
    EnbNoHolder,
    EnbWhiteArea,
}

/// One delivered request, in service order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ServiceEvent {
    pub user: UserId,
    pub offsn: Option<usize>,
    pub content: ContentId,
    pub route: Route,
}

struct ServiceLog(Option<Vec<ServiceEvent>>);

impl ServiceLog {
    fn push(&mut self, user: UserId, offsn: Option<usize>, content: ContentId, route: Route) {
        if let Some(events) = &mut self.0 {
            events.push(ServiceEvent {
                user,
                offsn,
                content,
                route,
            });
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeMetrics {
    /// In service order.
    pub per_user: Vec<UserMetrics>,
    pub aggregates: Aggregates,
}

/// Old-content term of both utilities.
pub fn old_content_term(state_before: &IbpState, form: UtilityForm, realized_old: u64) -> f64 {
    match form {
        UtilityForm::Expected => state_before.expected_old_count(),
        UtilityForm::Realized => realized_old as f64,
    }
}

/// User utility: old·(R_d − C_t) + m_n^0·(R_c − C_m).
pub fn utility_user(old_term: f64, m_n0: u64, r_d: f64, r_c: f64, c_t: f64, c_m: f64) -> f64 {
    old_term * (r_d - c_t) + m_n0 as f64 * (r_c - c_m)
}

/// eNB utility: old·R_d + m_n^0·R_c − m_n·C_c.
pub fn utility_enb(old_term: f64, m_n0: u64, m_n: u64, r_d: f64, r_c: f64, c_c: f64) -> f64 {
    old_term * r_d + m_n0 as f64 * r_c - m_n as f64 * c_c
}

/// m_n·V_c − m_n·C_c − m_n^0·R_c, where `m_n0` counts the requests the eNB
/// actually carried.
pub fn offloaded_traffic(m_n: u64, m_n0: u64, v_c: f64, r_c: f64, c_c: f64) -> f64 {
    m_n as f64 * v_c - m_n as f64 * c_c - m_n0 as f64 * r_c
}

#[derive(Clone, Copy)]
enum Stream {
    Placement = 0,
    Encounters = 1,
    Demand = 2,
    Radio = 3,
}

fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// Power levels and geometry shared by every link in an episode.
struct Radio<'a> {
    channel: &'a ChannelConfig,
    enb: Point,
    noise: f64,
    enb_tx: f64,
    ue_tx: f64,
}

impl<'a> Radio<'a> {
    fn new(channel: &'a ChannelConfig, enb: Point) -> Self {
        Self {
            channel,
            enb,
            noise: channel.noise_mw(),
            enb_tx: channel.enb_tx_mw(),
            ue_tx: channel.ue_tx_mw(),
        }
    }

    fn eta(&self) -> f64 {
        self.channel.path_loss_exp
    }

    /// Seconds to deliver `bits` at spectral efficiency `rate`.
    fn transfer_time(&self, bits: f64, rate: f64) -> f64 {
        min_contact_time(bits, rate * self.channel.bandwidth).unwrap_or(f64::INFINITY)
    }

    /// X_min of a pair under mean fading and eNB interference, taking the
    /// slower of the two directions.
    fn nominal_x_min(&self, a: Point, b: Point, bits: f64) -> f64 {
        let signal = self.ue_tx * mean_gain(a.link_distance(b), self.eta());
        let slowest = [a, b]
            .into_iter()
            .map(|rx| {
                let enb = self.enb_tx * mean_gain(self.enb.link_distance(rx), self.eta());
                rate_d2d(signal, enb, 0.0, self.noise).unwrap_or(0.0)
            })
            .fold(f64::INFINITY, f64::min);
        self.transfer_time(bits, slowest)
    }

    fn enb_rx_power<R: Rng + ?Sized>(&self, rx: Point, rng: &mut R) -> Result<f64> {
        Ok(self.enb_tx * channel_gain(self.enb.link_distance(rx), self.eta(), rng)?.gain)
    }

    fn ue_rx_power<R: Rng + ?Sized>(&self, tx: Point, rx: Point, rng: &mut R) -> Result<f64> {
        Ok(self.ue_tx * channel_gain(tx.link_distance(rx), self.eta(), rng)?.gain)
    }
}

/// Running state of one OffSN (or of the white area).
struct Community {
    prior: IbpState,
    holders: BTreeMap<ContentId, BTreeSet<UserId>>,
}

impl Community {
    fn new(alpha: f64) -> Result<Self> {
        Ok(Self {
            prior: IbpState::new(alpha)?,
            holders: BTreeMap::new(),
        })
    }
}

/// Stage 1 artefacts, exposed for inspection and examples.
#[derive(Debug, Clone)]
pub struct SocialLayer {
    pub graph: ClosenessGraph,
    pub partition: OffsnPartition,
    pub laws: BTreeMap<UserPair, ContactLaw>,
    /// Nominal per-content contact time of each pair, seconds.
    pub x_min: BTreeMap<UserPair, f64>,
}

/// Runs stage 1 only.
pub fn build_social_layer(config: &EpisodeConfig) -> Result<SocialLayer> {
    config.validate()?;
    let positions = uniform_disk(
        config.n_users,
        config.cell_radius,
        &mut stream_rng(config.seed, Stream::Placement),
    );
    let records = synthesize_trace(
        &positions,
        &config.trace,
        &mut stream_rng(config.seed, Stream::Encounters),
    )?;
    let stats = contact_stats(&records);
    let radio = Radio::new(&config.channel, Point::new(config.enb_distance, 0.0));
    let x_min: BTreeMap<UserPair, f64> = stats
        .keys()
        .map(|pair| {
            let t = radio.nominal_x_min(positions[&pair.lo()], positions[&pair.hi()], config.content_bits);
            (*pair, t)
        })
        .collect();
    let graph = build_graph(&stats, &positions, |pair| {
        x_min.get(&pair).copied().unwrap_or(f64::INFINITY)
    })?;
    let laws = stats
        .iter()
        .map(|(pair, s)| fit_gamma(s).map(|law| (*pair, law)))
        .collect::<Result<_>>()?;
    let partition = partition(&graph, config.w_t);
    Ok(SocialLayer {
        graph,
        partition,
        laws,
        x_min,
    })
}

pub fn run_episode(config: &EpisodeConfig) -> Result<EpisodeMetrics> {
    run_inner(config, &mut ServiceLog(None))
}

/// [`run_episode`] plus the route of every request.
pub fn run_episode_logged(config: &EpisodeConfig) -> Result<(EpisodeMetrics, Vec<ServiceEvent>)> {
    let mut log = ServiceLog(Some(Vec::new()));
    let metrics = run_inner(config, &mut log)?;
    Ok((metrics, log.0.unwrap_or_default()))
}

fn run_inner(config: &EpisodeConfig, log: &mut ServiceLog) -> Result<EpisodeMetrics> {
    let social = build_social_layer(config)?;
    let radio = Radio::new(&config.channel, Point::new(config.enb_distance, 0.0));
    let mut demand_rng = stream_rng(config.seed, Stream::Demand);
    let mut radio_rng = stream_rng(config.seed, Stream::Radio);

    let mut offsns = social
        .partition
        .offsns()
        .iter()
        .map(|_| Community::new(config.alpha))
        .collect::<Result<Vec<_>>>()?;
    let mut white = Community::new(config.alpha)?;

    let order: Vec<UserId> = match &config.arrival_order {
        Some(order) => order.clone(),
        None => social.graph.users().iter().copied().collect(),
    };

    let mut per_user = Vec::with_capacity(order.len());
    let mut agg = Aggregates {
        n_offsns: social.partition.offsns().len(),
        white_area_users: social.partition.white_area().len(),
        ..Aggregates::default()
    };

    for user in order {
        let record = match social.partition.offsn_of(user) {
            Some(idx) => serve_offsn_user(
                user,
                idx,
                &mut offsns[idx],
                &social,
                &radio,
                config,
                &mut demand_rng,
                &mut radio_rng,
                log,
            )?,
            None => serve_white_user(
                user,
                &mut white,
                &social,
                &radio,
                config,
                &mut demand_rng,
                &mut radio_rng,
                log,
            )?,
        };
        agg.requests += record.m_n;
        agg.d2d_attempts += record.old_served_d2d + record.d2d_failures;
        agg.d2d_served += record.old_served_d2d;
        agg.enb_data_rate_sum += record.enb_served() as f64 * record.r_c;
        agg.offloaded_traffic_total += record.offloaded;
        per_user.push(record);
    }

    if agg.requests > 0 {
        agg.offloaded_traffic = agg.offloaded_traffic_total / agg.requests as f64;
    }
    if agg.d2d_attempts > 0 {
        agg.d2d_success_ratio = agg.d2d_served as f64 / agg.d2d_attempts as f64;
    }
    Ok(EpisodeMetrics {
        per_user,
        aggregates: agg,
    })
}

fn mean(sum: f64, count: u64) -> f64 {
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// Interference-free cellular rate for one fresh fading draw.
fn draw_clean_rate<R: Rng + ?Sized>(radio: &Radio<'_>, rx: Point, rng: &mut R) -> Result<f64> {
    rate_clean(radio.enb_rx_power(rx, rng)?, radio.noise)
}

/// A receiver's D2D bundle as planned from mean-fading powers.
struct PlannedBundle {
    holder: UserId,
    law: ContactLaw,
    power: f64,
    contents: Vec<ContentId>,
}

/// Greedy assignment of old contents to holders for one receiver.
///
/// Each content goes to the in-range holder whose choice adds the most
/// expected D2D deliveries, counting the interference a newly opened bundle
/// inflicts on the others, or to the eNB when no choice adds any.
struct SessionPlan<'r, 'c> {
    radio: &'r Radio<'c>,
    rx: Point,
    enb_power: f64,
    total_power: f64,
    bundles: Vec<PlannedBundle>,
}

impl<'r, 'c> SessionPlan<'r, 'c> {
    fn new(radio: &'r Radio<'c>, rx: Point) -> Self {
        Self {
            radio,
            rx,
            enb_power: radio.enb_tx * mean_gain(radio.enb.link_distance(rx), radio.eta()),
            total_power: 0.0,
            bundles: Vec::new(),
        }
    }

    fn power_from(&self, tx: Point) -> f64 {
        self.radio.ue_tx * mean_gain(tx.link_distance(self.rx), self.radio.eta())
    }

    /// Per-content contact time for a link of `power` under `interference`.
    fn x_min(&self, power: f64, interference: f64, bits: f64) -> Result<f64> {
        let rate = rate_d2d(power, self.enb_power, interference, self.radio.noise)?;
        Ok(self.radio.transfer_time(bits, rate))
    }

    /// Expected deliveries of a bundle of `len` contents.
    fn expected(&self, law: &ContactLaw, power: f64, others: f64, len: usize, bits: f64) -> Result<f64> {
        let x = self.x_min(power, others, bits)?;
        (1..=len).try_fold(0.0, |acc, j| Ok(acc + closeness(law, j as f64 * x)?.value()))
    }

    fn choose(
        &self,
        social: &SocialLayer,
        user: UserId,
        holders: &BTreeSet<UserId>,
        config: &EpisodeConfig,
    ) -> Result<Option<UserId>> {
        let bits = config.content_bits;
        let mut best = 0.0_f64;
        let chosen = best_holder_by(&social.graph, user, holders, config.d2d_max, |h, _| {
            let law = law_of(social, user, h)?;
            let gain = match self.bundles.iter().find(|b| b.holder == h) {
                Some(b) => {
                    let x = self.x_min(b.power, self.total_power - b.power, bits)?;
                    closeness(&law, (b.contents.len() + 1) as f64 * x)?.value()
                }
                None => {
                    let tx = social.graph.position(h).ok_or(Error::UnknownUser(h.0))?;
                    let power = self.power_from(tx);
                    let own = closeness(&law, self.x_min(power, self.total_power, bits)?)?.value();
                    if own <= best {
                        // Cannot win; harm only lowers the gain further.
                        return Ok(own);
                    }
                    let mut harm = 0.0;
                    for b in &self.bundles {
                        let others = self.total_power - b.power;
                        let n = b.contents.len();
                        harm += self.expected(&b.law, b.power, others, n, bits)?
                            - self.expected(&b.law, b.power, others + power, n, bits)?;
                    }
                    own - harm
                }
            };
            best = best.max(gain);
            Ok(gain)
        })?;
        Ok(chosen.filter(|_| best > 0.0))
    }

    fn assign(&mut self, social: &SocialLayer, user: UserId, holder: UserId, content: ContentId) -> Result<()> {
        if let Some(b) = self.bundles.iter_mut().find(|b| b.holder == holder) {
            b.contents.push(content);
            return Ok(());
        }
        let tx = social.graph.position(holder).ok_or(Error::UnknownUser(holder.0))?;
        let power = self.power_from(tx);
        self.total_power += power;
        self.bundles.push(PlannedBundle {
            holder,
            law: law_of(social, user, holder)?,
            power,
            contents: vec![content],
        });
        Ok(())
    }

    fn into_bundles(self) -> BTreeMap<UserId, Vec<ContentId>> {
        self.bundles.into_iter().map(|b| (b.holder, b.contents)).collect()
    }
}

fn law_of(social: &SocialLayer, a: UserId, b: UserId) -> Result<ContactLaw> {
    social
        .laws
        .get(&UserPair::new(a, b))
        .copied()
        .ok_or(Error::UnknownUser(b.0))
}

#[allow(clippy::too_many_arguments)]
fn serve_white_user<R: Rng + ?Sized>(
    user: UserId,
    community: &mut Community,
    social: &SocialLayer,
    radio: &Radio<'_>,
    config: &EpisodeConfig,
    demand_rng: &mut R,
    radio_rng: &mut R,
    log: &mut ServiceLog,
) -> Result<UserMetrics> {
    let rx = social.graph.position(user).ok_or(Error::UnknownUser(user.0))?;
    let selection = ibp_select(&community.prior, demand_rng);
    let fresh = community.prior.absorb(&selection)?;
    for k in selection.old_contents.iter().chain(&fresh) {
        log.push(user, None, *k, Route::EnbWhiteArea);
    }
    let m_n = selection.total();

    let mut v_sum = 0.0;
    for _ in 0..m_n {
        v_sum += draw_clean_rate(radio, rx, radio_rng)?;
    }
    let v_c = mean(v_sum, m_n);
    let old = selection.old_contents.len() as u64;
    // Everything goes to the eNB at the clean rate and no D2D signaling is
    // issued, so the old contents are paid like new ones.
    let c_m = config.costs.c_m.resolve(v_c);
    Ok(UserMetrics {
        user,
        offsn: None,
        m_n,
        m_n0: selection.n_new,
        old_served_d2d: 0,
        d2d_failures: 0,
        old_served_enb: old,
        v_c,
        r_c: v_c,
        r_d: 0.0,
        u_user: utility_user(0.0, m_n, 0.0, v_c, 0.0, c_m),
        u_enb: utility_enb(0.0, m_n, m_n, 0.0, v_c, 0.0),
        offloaded: offloaded_traffic(m_n, m_n, v_c, v_c, 0.0),
    })
}

#[allow(clippy::too_many_arguments)]
fn serve_offsn_user<R: Rng + ?Sized>(
    user: UserId,
    idx: usize,
    community: &mut Community,
    social: &SocialLayer,
    radio: &Radio<'_>,
    config: &EpisodeConfig,
    demand_rng: &mut R,
    radio_rng: &mut R,
    log: &mut ServiceLog,
) -> Result<UserMetrics> {
    let rx = social.graph.position(user).ok_or(Error::UnknownUser(user.0))?;
    let state_before = community.prior.clone();
    let selection = ibp_select(&community.prior, demand_rng);
    let m_n = selection.total();

    let mut plan = SessionPlan::new(radio, rx);
    let mut no_holder = 0u64;
    let empty = BTreeSet::new();
    for k in &selection.old_contents {
        let holders = community.holders.get(k).unwrap_or(&empty);
        match plan.choose(social, user, holders, config)? {
            Some(h) => plan.assign(social, user, h, *k)?,
            None => {
                no_holder += 1;
                log.push(user, Some(idx), *k, Route::EnbNoHolder);
            }
        }
    }
    let bundles = plan.into_bundles();

    // D2D phase: one concurrent transfer per holder.
    let mut served = 0u64;
    let mut failures = 0u64;
    let mut r_d_sum = 0.0;
    if !bundles.is_empty() {
        let enb_at_rx = radio.enb_rx_power(rx, radio_rng)?;
        let rx_power = bundles
            .keys()
            .map(|h| {
                let tx = social.graph.position(*h).ok_or(Error::UnknownUser(h.0))?;
                radio.ue_rx_power(tx, rx, radio_rng)
            })
            .collect::<Result<Vec<f64>>>()?;
        let ids: Vec<usize> = (0..bundles.len()).collect();
        let topology = InterferenceTopology::shared_subchannel(&[], &ids);
        for (d, (holder, contents)) in bundles.iter().enumerate() {
            let others = topology.d2d_interference(d, rx_power.iter().copied().enumerate());
            let r_d = rate_d2d(rx_power[d], enb_at_rx, others, radio.noise)?;
            r_d_sum += r_d;
            let x_min = radio.transfer_time(config.content_bits, r_d);
            let law = law_of(social, user, *holder)?;
            let u: f64 = radio_rng.random();
            for (j, k) in contents.iter().enumerate() {
                let holder = *holder;
                if u < closeness(&law, (j + 1) as f64 * x_min)?.value() {
                    served += 1;
                    log.push(user, Some(idx), *k, Route::D2d { holder });
                } else {
                    failures += 1;
                    log.push(user, Some(idx), *k, Route::EnbAfterFailure { holder });
                }
            }
        }
    }
    let r_d = mean(r_d_sum, bundles.len() as u64);

    // eNB phase: no D2D transfer is active, so R_c sees no interference.
    let enb_served = selection.n_new + failures + no_holder;
    let cellular: Vec<usize> = (0..enb_served as usize).collect();
    let enb_topology = InterferenceTopology::shared_subchannel(&cellular, &[]);
    let mut v_sum = 0.0;
    let mut r_c_sum = 0.0;
    for c in cellular {
        let signal = radio.enb_rx_power(rx, radio_rng)?;
        let interference = enb_topology.cellular_interference(c, std::iter::empty());
        r_c_sum += rate_cellular(signal, interference, radio.noise)?;
        v_sum += rate_clean(signal, radio.noise)?;
    }
    // What the eNB would have delivered for the requests D2D took over.
    for _ in 0..served {
        v_sum += draw_clean_rate(radio, rx, radio_rng)?;
    }
    let v_c = mean(v_sum, m_n);
    let r_c = mean(r_c_sum, enb_served);

    let old_term = old_content_term(&state_before, config.utility_form, selection.old_contents.len() as u64);
    let c_t = config.costs.c_t.resolve(r_d);
    let c_m = config.costs.c_m.resolve(r_c);
    let c_c = config.costs.c_c.resolve(v_c);

    for k in &selection.old_contents {
        community.holders.entry(*k).or_default().insert(user);
    }
    for k in community.prior.absorb(&selection)? {
        log.push(user, Some(idx), k, Route::EnbNew);
        community.holders.entry(k).or_default().insert(user);
    }

    Ok(UserMetrics {
        user,
        offsn: Some(idx),
        m_n,
        m_n0: selection.n_new,
        old_served_d2d: served,
        d2d_failures: failures,
        old_served_enb: no_holder,
        v_c,
        r_c,
        r_d,
        u_user: utility_user(old_term, selection.n_new, r_d, r_c, c_t, c_m),
        u_enb: utility_enb(old_term, selection.n_new, m_n, r_d, r_c, c_c),
        offloaded: offloaded_traffic(m_n, enb_served, v_c, r_c, c_c),
    })
}
