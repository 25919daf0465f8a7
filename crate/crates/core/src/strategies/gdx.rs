//! Gjerstad–Dickhaut belief-based bidding with the GDX dynamic-programming
//! extension.
//!
//! The belief that a bid at `p` is accepted is estimated from recent shouts:
//!
//! ```text
//! q(p) = (TBL(p) + AL(p)) / (TBL(p) + AL(p) + RBG(p))
//! ```
//!
//! where TBL counts accepted bids at or below `p`, AL all asks at or below
//! `p`, and RBG rejected bids at or above `p`. Asks mirror this. A quote that
//! would cross the current book is accepted with belief 1; a price with no
//! supporting shouts at all has belief 0.
//!
//! Holding one unit, the value of `n` remaining opportunities is
//! `V(n) = max_p q(p)·s(p) + (1 − q(p))·δ·V(n − 1)` with `V(0) = 0`; the
//! quote is the maximizer at the current horizon. Horizon 1 is plain GD.

use std::collections::VecDeque;

use super::{CustomerOrder, GdxParams, QuoteContext, Strategy, StrategyKind, StrategyParams};
use crate::exchange::{LobSnapshot, MarketEvent, Side, MAX_PRICE, MIN_PRICE};
use crate::SimRng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Shout {
    pub side: Side,
    pub price: i64,
    pub accepted: bool,
}

/// Bounded memory of public shouts.
#[derive(Clone, Debug, Default)]
pub struct ShoutHistory {
    shouts: VecDeque<Shout>,
    capacity: usize,
}

impl ShoutHistory {
    pub fn new(capacity: usize) -> Self {
        ShoutHistory {
            shouts: VecDeque::with_capacity(capacity + 2),
            capacity: capacity.max(1),
        }
    }

    pub fn shouts(&self) -> impl Iterator<Item = &Shout> {
        self.shouts.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.shouts.is_empty()
    }

    fn push(&mut self, shout: Shout) {
        self.shouts.push_back(shout);
        while self.shouts.len() > self.capacity {
            self.shouts.pop_front();
        }
    }

    pub fn record(&mut self, event: &MarketEvent) {
        match *event {
            MarketEvent::QuotePosted { side, price, .. } => self.push(Shout {
                side,
                price: price.ticks(),
                accepted: false,
            }),
            MarketEvent::Trade {
                price, aggressor, ..
            } => {
                let price = price.ticks();
                let standing = aggressor.opposite();
                let matched = self
                    .shouts
                    .iter_mut()
                    .rev()
                    .find(|s| s.side == standing && s.price == price && !s.accepted);
                match matched {
                    Some(s) => s.accepted = true,
                    None => self.push(Shout {
                        side: standing,
                        price,
                        accepted: true,
                    }),
                }
                self.push(Shout {
                    side: aggressor,
                    price,
                    accepted: true,
                });
            }
        }
    }

    /// Acceptance belief for a quote on `side` at `price`, by direct counting.
    pub fn belief(&self, side: Side, price: i64, book: &LobSnapshot) -> f64 {
        match side {
            Side::Bid if book.best_ask.is_some_and(|a| price >= a.ticks()) => return 1.0,
            Side::Ask if book.best_bid.is_some_and(|b| price <= b.ticks()) => return 1.0,
            _ => {}
        }
        let (mut favourable, mut rejected) = (0usize, 0usize);
        for s in &self.shouts {
            match side {
                Side::Bid => {
                    let own = s.side == Side::Bid;
                    if (own && s.accepted && s.price <= price) || (!own && s.price <= price) {
                        favourable += 1;
                    }
                    if own && !s.accepted && s.price >= price {
                        rejected += 1;
                    }
                }
                Side::Ask => {
                    let own = s.side == Side::Ask;
                    if (own && s.accepted && s.price >= price) || (!own && s.price >= price) {
                        favourable += 1;
                    }
                    if own && !s.accepted && s.price <= price {
                        rejected += 1;
                    }
                }
            }
        }
        if favourable + rejected == 0 {
            0.0
        } else {
            favourable as f64 / (favourable + rejected) as f64
        }
    }

    /// Beliefs for every tick in `[lo, hi]`, computed with prefix counts.
    pub fn beliefs(&self, side: Side, lo: i64, hi: i64, book: &LobSnapshot) -> Vec<f64> {
        let len = (hi - lo + 1).max(0) as usize;
        if len == 0 {
            return Vec::new();
        }
        // favourable shouts counted from the cheap end for bids, from the dear end for asks
        let mut fav = vec![0i64; len];
        let mut rej = vec![0i64; len];
        let (mut fav_out, mut rej_out) = (0i64, 0i64);
        let idx = |p: i64| (p - lo) as usize;
        for s in &self.shouts {
            let own = s.side == side;
            let is_fav = !own || s.accepted;
            match side {
                Side::Bid => {
                    if is_fav {
                        if s.price < lo {
                            fav_out += 1;
                        } else if s.price <= hi {
                            fav[idx(s.price)] += 1;
                        }
                    } else if s.price > hi {
                        rej_out += 1;
                    } else if s.price >= lo {
                        rej[idx(s.price)] += 1;
                    }
                }
                Side::Ask => {
                    if is_fav {
                        if s.price > hi {
                            fav_out += 1;
                        } else if s.price >= lo {
                            fav[idx(s.price)] += 1;
                        }
                    } else if s.price < lo {
                        rej_out += 1;
                    } else if s.price <= hi {
                        rej[idx(s.price)] += 1;
                    }
                }
            }
        }
        let mut fav_cum = vec![0i64; len];
        let mut rej_cum = vec![0i64; len];
        match side {
            Side::Bid => {
                let mut acc = fav_out;
                for i in 0..len {
                    acc += fav[i];
                    fav_cum[i] = acc;
                }
                let mut acc = rej_out;
                for i in (0..len).rev() {
                    acc += rej[i];
                    rej_cum[i] = acc;
                }
            }
            Side::Ask => {
                let mut acc = fav_out;
                for i in (0..len).rev() {
                    acc += fav[i];
                    fav_cum[i] = acc;
                }
                let mut acc = rej_out;
                for i in 0..len {
                    acc += rej[i];
                    rej_cum[i] = acc;
                }
            }
        }
        (0..len)
            .map(|i| {
                let price = lo + i as i64;
                let crosses = match side {
                    Side::Bid => book.best_ask.is_some_and(|a| price >= a.ticks()),
                    Side::Ask => book.best_bid.is_some_and(|b| price <= b.ticks()),
                };
                if crosses {
                    1.0
                } else if fav_cum[i] + rej_cum[i] == 0 {
                    0.0
                } else {
                    fav_cum[i] as f64 / (fav_cum[i] + rej_cum[i]) as f64
                }
            })
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct Gdx {
    params: GdxParams,
    history: ShoutHistory,
    cache: Option<(CacheKey, i64)>,
    version: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct CacheKey {
    version: u64,
    limit: i64,
    side: Side,
    book: LobSnapshot,
    horizon: u32,
}

impl Gdx {
    pub fn new(params: &StrategyParams) -> Self {
        Gdx {
            params: params.gdx.clone(),
            history: ShoutHistory::new(params.gdx.memory),
            cache: None,
            version: 0,
        }
    }

    pub fn history(&self) -> &ShoutHistory {
        &self.history
    }

    /// Belief-maximizing quote over `horizon` remaining opportunities, or
    /// `None` when no price has positive expected surplus.
    pub fn optimal_quote(
        &self,
        side: Side,
        limit: i64,
        book: &LobSnapshot,
        horizon: u32,
    ) -> Option<i64> {
        let observed = self.history.shouts().map(|s| s.price);
        let (lo, hi) = match side {
            Side::Bid => {
                let floor = observed
                    .chain(book.best_ask.map(|a| a.ticks()))
                    .min()
                    .unwrap_or(limit);
                (floor.clamp(MIN_PRICE, limit), limit)
            }
            Side::Ask => {
                let roof = observed
                    .chain(book.best_bid.map(|b| b.ticks()))
                    .max()
                    .unwrap_or(limit);
                (limit, roof.clamp(limit, MAX_PRICE))
            }
        };
        let beliefs = self.history.beliefs(side, lo, hi, book);
        let surplus = |price: i64| match side {
            Side::Bid => (limit - price) as f64,
            Side::Ask => (price - limit) as f64,
        };
        // buyers scan upward, sellers downward; strict improvement keeps the
        // surplus-retaining price on ties
        let order: Vec<usize> = match side {
            Side::Bid => (0..beliefs.len()).collect(),
            Side::Ask => (0..beliefs.len()).rev().collect(),
        };
        let mut value = 0.0;
        let mut best = None;
        for _ in 0..horizon.max(1) {
            let carry = self.params.discount * value;
            let mut top = f64::NEG_INFINITY;
            let mut arg = None;
            for &i in &order {
                let q = beliefs[i];
                let v = q * surplus(lo + i as i64) + (1.0 - q) * carry;
                if v > top {
                    top = v;
                    arg = Some(lo + i as i64);
                }
            }
            value = top.max(0.0);
            best = arg;
        }
        if value > 0.0 {
            best
        } else {
            None
        }
    }
}

impl Strategy for Gdx {
    fn kind(&self) -> StrategyKind {
        StrategyKind::GDX
    }

    fn get_quote(&mut self, ctx: &QuoteContext<'_>, _rng: &mut SimRng) -> Option<i64> {
        let side = ctx.order.side;
        let limit = ctx.order.limit.ticks();
        let left = ctx.duration.saturating_sub(ctx.timestep).max(1);
        let key = CacheKey {
            version: self.version,
            limit,
            side,
            book: *ctx.book,
            horizon: left.min(self.params.horizon),
        };
        if let Some((cached, quote)) = self.cache {
            if cached == key {
                return Some(quote);
            }
        }
        let quote = self
            .optimal_quote(side, limit, ctx.book, key.horizon)
            .unwrap_or_else(|| {
                let m = self.params.cold_start_margin;
                match side {
                    Side::Bid => (limit as f64 * (1.0 - m)).round() as i64,
                    Side::Ask => (limit as f64 * (1.0 + m)).round() as i64,
                }
            });
        let quote = match side {
            Side::Bid => quote.clamp(MIN_PRICE, limit),
            Side::Ask => quote.clamp(limit, MAX_PRICE),
        };
        self.cache = Some((key, quote));
        Some(quote)
    }

    fn on_market_event(
        &mut self,
        event: &MarketEvent,
        _book: &LobSnapshot,
        _order: Option<&CustomerOrder>,
        _rng: &mut SimRng,
    ) {
        self.history.record(event);
        self.version += 1;
    }
}
