use super::params::draw;
use super::{CustomerOrder, QuoteContext, Strategy, StrategyKind, ZipParams};
use crate::exchange::{LobSnapshot, MarketEvent, Side, MAX_PRICE, MIN_PRICE};
use crate::SimRng;

/// Zero Intelligence Plus: quotes `limit·(1 + margin)` and adapts the
/// margin with a Widrow-Hoff rule plus momentum after every public event.
#[derive(Clone, Debug)]
pub struct Zip {
    side: Side,
    /// Negative for buyers, positive for sellers.
    pub margin: f64,
    pub beta: f64,
    pub momentum: f64,
    ca: f64,
    cr: f64,
    last_change: f64,
    limit: Option<i64>,
}

impl Zip {
    pub fn new(side: Side, params: &ZipParams, rng: &mut SimRng) -> Self {
        let beta = draw(rng, params.beta_min, params.beta_max);
        let momentum = draw(rng, params.momentum_min, params.momentum_max);
        let magnitude = draw(rng, params.margin_min, params.margin_max);
        let margin = match side {
            Side::Bid => -magnitude,
            Side::Ask => magnitude,
        };
        Zip {
            side,
            margin,
            beta,
            momentum,
            ca: params.ca,
            cr: params.cr,
            last_change: 0.0,
            limit: None,
        }
    }

    /// Builds a trader with explicit learning constants.
    pub fn with_constants(
        side: Side,
        margin: f64,
        beta: f64,
        momentum: f64,
        ca: f64,
        cr: f64,
    ) -> Self {
        Zip {
            side,
            margin,
            beta,
            momentum,
            ca,
            cr,
            last_change: 0.0,
            limit: None,
        }
    }

    fn raw_price(&self, limit: i64) -> f64 {
        limit as f64 * (1.0 + self.margin)
    }

    pub fn price(&self, limit: i64) -> i64 {
        let p = self.raw_price(limit).round() as i64;
        match self.side {
            Side::Bid => p.clamp(MIN_PRICE, limit),
            Side::Ask => p.clamp(limit, MAX_PRICE),
        }
    }

    fn target_up(&self, price: f64, rng: &mut SimRng) -> f64 {
        price * (1.0 + draw(rng, 0.0, self.cr)) + draw(rng, 0.0, self.ca)
    }

    fn target_down(&self, price: f64, rng: &mut SimRng) -> f64 {
        price * (1.0 - draw(rng, 0.0, self.cr)) - draw(rng, 0.0, self.ca)
    }

    /// One Widrow-Hoff step of the quote price toward `target`.
    fn move_toward(&mut self, target: f64) {
        let Some(limit) = self.limit else { return };
        let current = self.raw_price(limit);
        let change = (1.0 - self.momentum) * self.beta * (target - current)
            + self.momentum * self.last_change;
        self.last_change = change;
        let margin = (current + change) / limit as f64 - 1.0;
        self.margin = match self.side {
            Side::Bid => margin.clamp(-1.0, 0.0),
            Side::Ask => margin.max(0.0),
        };
    }
}

impl Strategy for Zip {
    fn kind(&self) -> StrategyKind {
        StrategyKind::ZIP
    }

    fn on_new_order(&mut self, order: &CustomerOrder) {
        self.limit = Some(order.limit.ticks());
    }

    fn get_quote(&mut self, ctx: &QuoteContext<'_>, _rng: &mut SimRng) -> Option<i64> {
        let limit = ctx.order.limit.ticks();
        self.limit = Some(limit);
        Some(self.price(limit))
    }

    fn on_market_event(
        &mut self,
        event: &MarketEvent,
        book: &LobSnapshot,
        order: Option<&CustomerOrder>,
        rng: &mut SimRng,
    ) {
        let Some(limit) = self.limit else { return };
        let active = order.is_some();
        let current = self.raw_price(limit);
        match (*event, self.side) {
            (
                MarketEvent::Trade {
                    price, aggressor, ..
                },
                Side::Ask,
            ) => {
                let trade = price.ticks() as f64;
                if current <= trade {
                    let t = self.target_up(trade, rng);
                    self.move_toward(t);
                } else if aggressor == Side::Bid && active {
                    // an ask was lifted below our price: undercut
                    let t = self.target_down(trade, rng);
                    self.move_toward(t);
                }
            }
            (
                MarketEvent::Trade {
                    price, aggressor, ..
                },
                Side::Bid,
            ) => {
                let trade = price.ticks() as f64;
                if current >= trade {
                    let t = self.target_down(trade, rng);
                    self.move_toward(t);
                } else if aggressor == Side::Ask && active {
                    let t = self.target_up(trade, rng);
                    self.move_toward(t);
                }
            }
            (
                MarketEvent::QuotePosted {
                    side: Side::Ask, ..
                },
                Side::Ask,
            ) => {
                if let Some(best) = book.best_ask {
                    if active && current > best.ticks() as f64 {
                        let t = self.target_down(best.ticks() as f64, rng);
                        self.move_toward(t);
                    }
                }
            }
            (
                MarketEvent::QuotePosted {
                    side: Side::Bid, ..
                },
                Side::Bid,
            ) => {
                if let Some(best) = book.best_bid {
                    if active && current < best.ticks() as f64 {
                        let t = self.target_up(best.ticks() as f64, rng);
                        self.move_toward(t);
                    }
                }
            }
            _ => {}
        }
    }
}
