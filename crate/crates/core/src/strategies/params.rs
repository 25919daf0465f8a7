//! Strategy constants. Every field has a default; a run configuration may
//! override any subset of them.
//!
//! | strategy | parameter | default |
//! |---|---|---|
//! | all | `price_ceiling` (highest price ZIC/AA will ask) | 200 |
//! | ZIP | learning rate β ~ U(`beta_min`, `beta_max`) | U(0.1, 0.5) |
//! | ZIP | momentum γ ~ U(`momentum_min`, `momentum_max`) | U(0.0, 0.1) |
//! | ZIP | initial margin magnitude ~ U(`margin_min`, `margin_max`) | U(0.05, 0.35) |
//! | ZIP | target perturbation, absolute `ca` / relative `cr` | 0.05 / 0.05 |
//! | SNPR | `lurk_fraction` of the session left before sniping unconditionally | 0.2 |
//! | SNPR | `spread_fraction`, relative spread considered narrow | 0.1 |
//! | GDX | `memory`, shouts kept for belief estimation | 50 |
//! | GDX | `horizon`, bidding opportunities planned ahead | 10 |
//! | GDX | `discount` per opportunity | 0.9 |
//! | GDX | `cold_start_margin` when beliefs carry no information | 0.1 |
//! | AA | `r_shout_relative` / `r_shout_absolute` (λr / λa) | 0.05 / 0.05 |
//! | AA | short-term rate β1 ~ U(`short_rate_min`, `short_rate_max`) | U(0.1, 0.5) |
//! | AA | long-term rate β2 ~ U(`long_rate_min`, `long_rate_max`) | U(0.1, 0.5) |
//! | AA | equilibrium window / weight decay | 5 / 0.95 |
//! | AA | `offer_change_rate` η | 3.0 |
//! | AA | θ initial / min / max | −2 / −8 / 2 |
//! | AA | initial aggressiveness ~ −U(0, `initial_aggressiveness`) | 0.3 |
//! | AA | `cold_start_margin` before the first trade | 0.1 |

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StrategyParams {
    pub price_ceiling: i64,
    pub zic: ZicParams,
    pub zip: ZipParams,
    pub snpr: SniperParams,
    pub gdx: GdxParams,
    pub aa: AaParams,
}

impl Default for StrategyParams {
    fn default() -> Self {
        StrategyParams {
            price_ceiling: 200,
            zic: ZicParams::default(),
            zip: ZipParams::default(),
            snpr: SniperParams::default(),
            gdx: GdxParams::default(),
            aa: AaParams::default(),
        }
    }
}

/// ZIC draws uniformly between the price floor and the limit (buyers) or
/// between the limit and `price_ceiling` (sellers); it has no own knobs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ZicParams {}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ZipParams {
    pub beta_min: f64,
    pub beta_max: f64,
    pub momentum_min: f64,
    pub momentum_max: f64,
    pub margin_min: f64,
    pub margin_max: f64,
    pub ca: f64,
    pub cr: f64,
}

impl Default for ZipParams {
    fn default() -> Self {
        ZipParams {
            beta_min: 0.1,
            beta_max: 0.5,
            momentum_min: 0.0,
            momentum_max: 0.1,
            margin_min: 0.05,
            margin_max: 0.35,
            ca: 0.05,
            cr: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SniperParams {
    pub lurk_fraction: f64,
    pub spread_fraction: f64,
}

impl Default for SniperParams {
    fn default() -> Self {
        SniperParams {
            lurk_fraction: 0.2,
            spread_fraction: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GdxParams {
    pub memory: usize,
    pub horizon: u32,
    pub discount: f64,
    pub cold_start_margin: f64,
}

impl Default for GdxParams {
    fn default() -> Self {
        GdxParams {
            memory: 50,
            horizon: 10,
            discount: 0.9,
            cold_start_margin: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AaParams {
    pub r_shout_relative: f64,
    pub r_shout_absolute: f64,
    pub short_rate_min: f64,
    pub short_rate_max: f64,
    pub long_rate_min: f64,
    pub long_rate_max: f64,
    pub window: usize,
    pub weight_decay: f64,
    pub offer_change_rate: f64,
    pub theta_init: f64,
    pub theta_min: f64,
    pub theta_max: f64,
    pub initial_aggressiveness: f64,
    pub cold_start_margin: f64,
}

impl Default for AaParams {
    fn default() -> Self {
        AaParams {
            r_shout_relative: 0.05,
            r_shout_absolute: 0.05,
            short_rate_min: 0.1,
            short_rate_max: 0.5,
            long_rate_min: 0.1,
            long_rate_max: 0.5,
            window: 5,
            weight_decay: 0.95,
            offer_change_rate: 3.0,
            theta_init: -2.0,
            theta_min: -8.0,
            theta_max: 2.0,
            initial_aggressiveness: 0.3,
            cold_start_margin: 0.1,
        }
    }
}

/// Uniform draw on `[lo, hi]` that tolerates a degenerate interval.
pub(crate) fn draw<R: rand::Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        lo
    }
}
