use rand::Rng;

use super::{QuoteContext, Strategy, StrategyKind, StrategyParams};
use crate::exchange::{LobSnapshot, MarketEvent, Side, MIN_PRICE};
use crate::strategies::CustomerOrder;
use crate::SimRng;

/// Zero-intelligence constrained: a uniform random price on the
/// non-loss side of the limit.
#[derive(Clone, Debug)]
pub struct Zic {
    ceiling: i64,
}

impl Zic {
    pub fn new(params: &StrategyParams) -> Self {
        Zic {
            ceiling: params.price_ceiling,
        }
    }
}

impl Strategy for Zic {
    fn kind(&self) -> StrategyKind {
        StrategyKind::ZIC
    }

    fn get_quote(&mut self, ctx: &QuoteContext<'_>, rng: &mut SimRng) -> Option<i64> {
        let limit = ctx.order.limit.ticks();
        Some(match ctx.order.side {
            Side::Bid => rng.random_range(MIN_PRICE..=limit),
            Side::Ask => rng.random_range(limit..=self.ceiling.max(limit)),
        })
    }

    fn on_market_event(
        &mut self,
        _event: &MarketEvent,
        _book: &LobSnapshot,
        _order: Option<&CustomerOrder>,
        _rng: &mut SimRng,
    ) {
    }
}
