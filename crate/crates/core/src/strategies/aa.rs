//! Adaptive-Aggressive trading.
//!
//! The trader keeps a weighted moving estimate of the equilibrium price and
//! an aggressiveness `r ∈ [−1, 1]`. A target price is derived from `r`, the
//! estimate, the limit and a curvature `θ`; `r` follows the aggressiveness
//! implied by observed shouts (Widrow-Hoff, short-term rate β1) and `θ`
//! tracks market volatility (long-term rate β2).

use std::collections::VecDeque;

use super::params::draw;
use super::{AaParams, CustomerOrder, QuoteContext, Strategy, StrategyKind, StrategyParams};
use crate::exchange::{LobSnapshot, MarketEvent, Side, MAX_PRICE, MIN_PRICE};
use crate::SimRng;

/// `(e^{xθ} − 1) / (e^θ − 1)`, with its `θ → 0` limit `x`.
fn curve(x: f64, theta: f64) -> f64 {
    if theta.abs() < 1e-9 {
        x
    } else {
        (x * theta).exp_m1() / theta.exp_m1()
    }
}

/// Inverse of [`curve`] in `x` for `y ∈ [0, 1]`.
fn curve_inv(y: f64, theta: f64) -> f64 {
    let y = y.clamp(0.0, 1.0);
    if theta.abs() < 1e-9 {
        y
    } else {
        (y * theta.exp_m1()).ln_1p() / theta
    }
}

#[derive(Clone, Debug)]
pub struct AdaptiveAggressive {
    side: Side,
    p: AaParams,
    ceiling: f64,
    pub aggressiveness: f64,
    pub theta: f64,
    beta1: f64,
    beta2: f64,
    transactions: VecDeque<f64>,
    pub equilibrium: Option<f64>,
    alpha_min: Option<f64>,
    alpha_max: Option<f64>,
    limit: Option<f64>,
}

impl AdaptiveAggressive {
    pub fn new(side: Side, params: &StrategyParams, rng: &mut SimRng) -> Self {
        let p = params.aa.clone();
        let beta1 = draw(rng, p.short_rate_min, p.short_rate_max);
        let beta2 = draw(rng, p.long_rate_min, p.long_rate_max);
        let aggressiveness = -draw(rng, 0.0, p.initial_aggressiveness);
        AdaptiveAggressive {
            side,
            ceiling: params.price_ceiling as f64,
            aggressiveness,
            theta: p.theta_init,
            beta1,
            beta2,
            transactions: VecDeque::new(),
            equilibrium: None,
            alpha_min: None,
            alpha_max: None,
            limit: None,
            p,
        }
    }

    /// Target price for the current limit, estimate and aggressiveness.
    pub fn target(&self, limit: f64) -> Option<f64> {
        let eq = self.equilibrium?;
        let r = self.aggressiveness;
        let th = self.theta;
        let ceiling = self.ceiling.max(limit);
        Some(match self.side {
            Side::Bid if limit > eq => {
                if r <= 0.0 {
                    eq * (1.0 - curve(-r, th))
                } else {
                    eq + (limit - eq) * curve(r, th)
                }
            }
            Side::Bid => {
                if r <= 0.0 {
                    limit * (1.0 - curve(-r, th))
                } else {
                    limit
                }
            }
            Side::Ask if limit < eq => {
                if r <= 0.0 {
                    eq + (ceiling - eq) * curve(-r, th)
                } else {
                    limit + (eq - limit) * (1.0 - curve(r, th))
                }
            }
            Side::Ask => {
                if r <= 0.0 {
                    limit + (ceiling - limit) * curve(-r, th)
                } else {
                    limit
                }
            }
        })
    }

    /// Aggressiveness whose target price would equal `price`.
    pub fn aggressiveness_for(&self, limit: f64, price: f64) -> Option<f64> {
        let eq = self.equilibrium?;
        let th = self.theta;
        let ceiling = self.ceiling.max(limit);
        let r = match self.side {
            Side::Bid if limit > eq => {
                if price <= eq {
                    -curve_inv(1.0 - price / eq, th)
                } else {
                    curve_inv((price - eq) / (limit - eq), th)
                }
            }
            Side::Bid => {
                if price >= limit {
                    0.0
                } else {
                    -curve_inv(1.0 - price / limit, th)
                }
            }
            Side::Ask if limit < eq => {
                if price >= eq {
                    -curve_inv((price - eq) / (ceiling - eq), th)
                } else {
                    curve_inv((eq - price) / (eq - limit), th)
                }
            }
            Side::Ask => {
                if price <= limit {
                    0.0
                } else {
                    -curve_inv((price - limit) / (ceiling - limit), th)
                }
            }
        };
        Some(r.clamp(-1.0, 1.0))
    }

    fn update_equilibrium(&mut self, price: f64) {
        self.transactions.push_back(price);
        while self.transactions.len() > self.p.window.max(1) {
            self.transactions.pop_front();
        }
        // most recent trade weighted 1, older ones decayed geometrically
        let (mut num, mut den, mut w) = (0.0, 0.0, 1.0);
        for &t in self.transactions.iter().rev() {
            num += w * t;
            den += w;
            w *= self.p.weight_decay;
        }
        let eq = num / den;
        self.equilibrium = Some(eq);

        let n = self.transactions.len() as f64;
        let alpha = (self
            .transactions
            .iter()
            .map(|t| (t - eq).powi(2))
            .sum::<f64>()
            / n)
            .sqrt()
            / eq;
        let lo = self.alpha_min.map_or(alpha, |a| a.min(alpha));
        let hi = self.alpha_max.map_or(alpha, |a| a.max(alpha));
        self.alpha_min = Some(lo);
        self.alpha_max = Some(hi);
        let alpha_bar = if hi > lo {
            (alpha - lo) / (hi - lo)
        } else {
            0.5
        };
        let gamma = 2.0;
        let desired = (self.p.theta_max - self.p.theta_min)
            * (1.0 - alpha_bar * (gamma * (alpha_bar - 1.0)).exp())
            + self.p.theta_min;
        self.theta += self.beta2 * (desired - self.theta);
        self.theta = self.theta.clamp(self.p.theta_min, self.p.theta_max);
    }

    fn nudge(&mut self, limit: f64, price: f64, more_aggressive: bool) {
        let Some(r_shout) = self.aggressiveness_for(limit, price) else {
            return;
        };
        let (rel, abs) = (self.p.r_shout_relative, self.p.r_shout_absolute);
        let desired = if more_aggressive {
            (1.0 + rel) * r_shout + abs
        } else {
            (1.0 - rel) * r_shout - abs
        };
        self.aggressiveness += self.beta1 * (desired - self.aggressiveness);
        self.aggressiveness = self.aggressiveness.clamp(-1.0, 1.0);
    }
}

impl Strategy for AdaptiveAggressive {
    fn kind(&self) -> StrategyKind {
        StrategyKind::AA
    }

    fn on_new_order(&mut self, order: &CustomerOrder) {
        self.limit = Some(order.limit.ticks() as f64);
    }

    fn get_quote(&mut self, ctx: &QuoteContext<'_>, _rng: &mut SimRng) -> Option<i64> {
        let limit = ctx.order.limit.ticks();
        let lf = limit as f64;
        self.limit = Some(lf);
        let Some(target) = self.target(lf) else {
            let m = self.p.cold_start_margin;
            return Some(match self.side {
                Side::Bid => ((lf * (1.0 - m)).round() as i64).clamp(MIN_PRICE, limit),
                Side::Ask => ((lf * (1.0 + m)).round() as i64).clamp(limit, MAX_PRICE),
            });
        };
        let eta = self.p.offer_change_rate;
        let quote = match self.side {
            Side::Bid => match ctx.book.best_ask.map(|a| a.ticks() as f64) {
                Some(ask) if ask <= target => ask,
                _ => {
                    let best = ctx
                        .book
                        .best_bid
                        .map_or(MIN_PRICE as f64, |b| b.ticks() as f64);
                    if best >= lf {
                        lf
                    } else {
                        best + (target.min(lf) - best) / eta
                    }
                }
            },
            Side::Ask => match ctx.book.best_bid.map(|b| b.ticks() as f64) {
                Some(bid) if bid >= target => bid,
                _ => {
                    let best = ctx
                        .book
                        .best_ask
                        .map_or(self.ceiling.max(lf), |a| a.ticks() as f64);
                    if best <= lf {
                        lf
                    } else {
                        best - (best - target.max(lf)) / eta
                    }
                }
            },
        };
        Some(match self.side {
            Side::Bid => (quote.floor() as i64).clamp(MIN_PRICE, limit),
            Side::Ask => (quote.ceil() as i64).clamp(limit, MAX_PRICE),
        })
    }

    fn on_market_event(
        &mut self,
        event: &MarketEvent,
        _book: &LobSnapshot,
        _order: Option<&CustomerOrder>,
        _rng: &mut SimRng,
    ) {
        match *event {
            MarketEvent::Trade { price, .. } => {
                let price = price.ticks() as f64;
                self.update_equilibrium(price);
                let Some(limit) = self.limit else { return };
                let Some(target) = self.target(limit) else {
                    return;
                };
                match self.side {
                    // target above the clearing price: room to be less aggressive
                    Side::Bid => self.nudge(limit, price, target < price),
                    Side::Ask => self.nudge(limit, price, target > price),
                }
            }
            MarketEvent::QuotePosted { side, price, .. } if side == self.side => {
                let Some(limit) = self.limit else { return };
                let Some(target) = self.target(limit) else {
                    return;
                };
                let price = price.ticks() as f64;
                let outbid = match side {
                    Side::Bid => target <= price,
                    Side::Ask => target >= price,
                };
                if outbid {
                    self.nudge(limit, price, true);
                }
            }
            MarketEvent::QuotePosted { .. } => {}
        }
    }
}
