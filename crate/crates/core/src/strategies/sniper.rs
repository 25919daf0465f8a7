use super::{CustomerOrder, QuoteContext, SniperParams, Strategy, StrategyKind};
use crate::exchange::{LobSnapshot, MarketEvent, Side};
use crate::SimRng;

/// Kaplan-style sniper. Lurks until the opposite best quote is a bargain
/// (beyond every trade price seen so far), the spread is narrow, or the
/// session is nearly over; then takes the standing quote outright.
#[derive(Clone, Debug)]
pub struct Sniper {
    lurk_fraction: f64,
    spread_fraction: f64,
    min_trade: Option<i64>,
    max_trade: Option<i64>,
}

impl Sniper {
    pub fn new(params: &SniperParams) -> Self {
        Sniper {
            lurk_fraction: params.lurk_fraction,
            spread_fraction: params.spread_fraction,
            min_trade: None,
            max_trade: None,
        }
    }

    fn endgame(&self, timestep: u32, duration: u32) -> bool {
        let left = duration.saturating_sub(timestep) as f64 / duration.max(1) as f64;
        left <= self.lurk_fraction
    }

    fn narrow(&self, book: &LobSnapshot) -> bool {
        match (book.best_bid, book.best_ask) {
            (Some(b), Some(a)) => {
                let (b, a) = (b.ticks() as f64, a.ticks() as f64);
                (a - b) / a < self.spread_fraction
            }
            _ => false,
        }
    }
}

impl Strategy for Sniper {
    fn kind(&self) -> StrategyKind {
        StrategyKind::SNPR
    }

    fn get_quote(&mut self, ctx: &QuoteContext<'_>, _rng: &mut SimRng) -> Option<i64> {
        let limit = ctx.order.limit.ticks();
        let endgame = self.endgame(ctx.timestep, ctx.duration);
        let narrow = self.narrow(ctx.book);
        match ctx.order.side {
            Side::Bid => {
                if let Some(ask) = ctx.book.best_ask.map(|p| p.ticks()).filter(|&a| a <= limit) {
                    let juicy = self.min_trade.is_some_and(|m| ask <= m);
                    if juicy || narrow || endgame {
                        return Some(ask);
                    }
                }
                endgame.then(|| {
                    ctx.book
                        .best_bid
                        .map_or(limit, |b| (b.ticks() + 1).min(limit))
                })
            }
            Side::Ask => {
                if let Some(bid) = ctx.book.best_bid.map(|p| p.ticks()).filter(|&b| b >= limit) {
                    let juicy = self.max_trade.is_some_and(|m| bid >= m);
                    if juicy || narrow || endgame {
                        return Some(bid);
                    }
                }
                endgame.then(|| {
                    ctx.book
                        .best_ask
                        .map_or(limit, |a| (a.ticks() - 1).max(limit))
                })
            }
        }
    }

    fn on_market_event(
        &mut self,
        event: &MarketEvent,
        _book: &LobSnapshot,
        _order: Option<&CustomerOrder>,
        _rng: &mut SimRng,
    ) {
        if let MarketEvent::Trade { price, .. } = event {
            let p = price.ticks();
            self.min_trade = Some(self.min_trade.map_or(p, |m| m.min(p)));
            self.max_trade = Some(self.max_trade.map_or(p, |m| m.max(p)));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exchange::Price;
    use rand::SeedableRng;

    fn quote(
        s: &mut Sniper,
        side: Side,
        limit: i64,
        bid: Option<i64>,
        ask: Option<i64>,
        t: u32,
    ) -> Option<i64> {
        let order = CustomerOrder {
            side,
            limit: Price::new(limit).unwrap(),
            issued: 0,
        };
        let book = LobSnapshot {
            best_bid: bid.map(|b| Price::new(b).unwrap()),
            best_ask: ask.map(|a| Price::new(a).unwrap()),
            bid_depth: bid.is_some() as usize,
            ask_depth: ask.is_some() as usize,
        };
        let ctx = QuoteContext {
            order: &order,
            book: &book,
            timestep: t,
            duration: 240,
        };
        s.get_quote(&ctx, &mut SimRng::seed_from_u64(0))
    }

    #[test]
    fn lurks_early_with_wide_spread() {
        let mut s = Sniper::new(&SniperParams::default());
        assert_eq!(quote(&mut s, Side::Bid, 150, Some(50), Some(140), 0), None);
        assert_eq!(quote(&mut s, Side::Ask, 60, Some(70), Some(150), 0), None);
    }

    #[test]
    fn takes_narrow_spread() {
        let mut s = Sniper::new(&SniperParams::default());
        assert_eq!(
            quote(&mut s, Side::Bid, 150, Some(98), Some(100), 0),
            Some(100)
        );
        assert_eq!(
            quote(&mut s, Side::Ask, 90, Some(98), Some(100), 0),
            Some(98)
        );
    }

    #[test]
    fn takes_juicy_ask() {
        let mut s = Sniper::new(&SniperParams::default());
        let trade = MarketEvent::Trade {
            timestep: 1,
            price: Price::new(110).unwrap(),
            aggressor: Side::Bid,
        };
        s.on_market_event(
            &trade,
            &LobSnapshot::default(),
            None,
            &mut SimRng::seed_from_u64(0),
        );
        assert_eq!(
            quote(&mut s, Side::Bid, 150, Some(50), Some(105), 10),
            Some(105)
        );
        assert_eq!(quote(&mut s, Side::Bid, 150, Some(50), Some(115), 10), None);
    }

    #[test]
    fn endgame_quotes_even_without_a_bargain() {
        let mut s = Sniper::new(&SniperParams::default());
        assert_eq!(
            quote(&mut s, Side::Bid, 150, Some(50), Some(190), 230),
            Some(51)
        );
        assert_eq!(quote(&mut s, Side::Bid, 150, None, None, 230), Some(150));
        assert_eq!(
            quote(&mut s, Side::Ask, 120, None, Some(121), 230),
            Some(120)
        );
    }
}
