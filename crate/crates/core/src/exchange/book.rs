//! Limit order book with one live quote per trader and standing-price execution.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::ExchangeError;

/// Lowest admissible price, in integer ticks.
pub const MIN_PRICE: i64 = 1;
/// Highest admissible price, in integer ticks.
pub const MAX_PRICE: i64 = 1000;

/// A price in integer ticks, guaranteed to lie in `[MIN_PRICE, MAX_PRICE]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "i64")]
pub struct Price(i64);

impl Price {
    pub fn new(ticks: i64) -> Result<Self, ExchangeError> {
        if (MIN_PRICE..=MAX_PRICE).contains(&ticks) {
            Ok(Price(ticks))
        } else {
            Err(ExchangeError::PriceOutOfRange(ticks))
        }
    }

    /// Clamps an arbitrary tick count into the price domain.
    pub fn clamped(ticks: i64) -> Self {
        Price(ticks.clamp(MIN_PRICE, MAX_PRICE))
    }

    pub fn ticks(self) -> i64 {
        self.0
    }
}

impl TryFrom<i64> for Price {
    type Error = ExchangeError;

    fn try_from(value: i64) -> Result<Self, Self::Error> {
        Price::new(value)
    }
}

impl From<Price> for i64 {
    fn from(p: Price) -> i64 {
        p.0
    }
}

impl fmt::Display for Price {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Bid,
    Ask,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Bid => Side::Ask,
            Side::Ask => Side::Bid,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::Bid => f.write_str("bid"),
            Side::Ask => f.write_str("ask"),
        }
    }
}

pub type TraderId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Quote {
    pub trader_id: TraderId,
    pub side: Side,
    pub price: Price,
    pub timestep: u32,
    /// Arrival sequence number, breaks time ties inside a timestep.
    pub seq: u64,
}

/// One executed unit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trade {
    pub timestep: u32,
    pub price: Price,
    pub buyer_id: TraderId,
    pub seller_id: TraderId,
    /// Side of the incoming quote that crossed the book.
    pub aggressor: Side,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SubmitOutcome {
    Rested,
    Executed(Trade),
}

/// Public view of the book: no trader identities, no strategy kinds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LobSnapshot {
    pub best_bid: Option<Price>,
    pub best_ask: Option<Price>,
    pub bid_depth: usize,
    pub ask_depth: usize,
}

impl LobSnapshot {
    pub fn best(&self, side: Side) -> Option<Price> {
        match side {
            Side::Bid => self.best_bid,
            Side::Ask => self.best_ask,
        }
    }
}

/// Bids sorted by (price desc, arrival asc), asks by (price asc, arrival asc).
#[derive(Clone, Debug, Default)]
pub struct LimitOrderBook {
    bids: Vec<Quote>,
    asks: Vec<Quote>,
    next_seq: u64,
}

impl LimitOrderBook {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bids(&self) -> &[Quote] {
        &self.bids
    }

    pub fn asks(&self) -> &[Quote] {
        &self.asks
    }

    pub fn best_bid(&self) -> Option<&Quote> {
        self.bids.first()
    }

    pub fn best_ask(&self) -> Option<&Quote> {
        self.asks.first()
    }

    pub fn is_crossed(&self) -> bool {
        match (self.best_bid(), self.best_ask()) {
            (Some(b), Some(a)) => b.price >= a.price,
            _ => false,
        }
    }

    /// Removes the live quote of `trader_id`, if any.
    pub fn cancel(&mut self, trader_id: TraderId) -> Option<Quote> {
        for book in [&mut self.bids, &mut self.asks] {
            if let Some(pos) = book.iter().position(|q| q.trader_id == trader_id) {
                return Some(book.remove(pos));
            }
        }
        None
    }

    /// Admits a quote. A prior quote from the same trader is always withdrawn
    /// first; a crossing quote trades one unit at the standing quote's price
    /// and neither quote remains on the book.
    pub fn submit(
        &mut self,
        trader_id: TraderId,
        side: Side,
        price: i64,
        timestep: u32,
    ) -> Result<SubmitOutcome, ExchangeError> {
        let price = Price::new(price)?;
        self.cancel(trader_id);

        let crossing = match side {
            Side::Bid => self.asks.first().filter(|a| a.price <= price).is_some(),
            Side::Ask => self.bids.first().filter(|b| b.price >= price).is_some(),
        };
        if crossing {
            let standing = match side {
                Side::Bid => self.asks.remove(0),
                Side::Ask => self.bids.remove(0),
            };
            let (buyer_id, seller_id) = match side {
                Side::Bid => (trader_id, standing.trader_id),
                Side::Ask => (standing.trader_id, trader_id),
            };
            return Ok(SubmitOutcome::Executed(Trade {
                timestep,
                price: standing.price,
                buyer_id,
                seller_id,
                aggressor: side,
            }));
        }

        let quote = Quote {
            trader_id,
            side,
            price,
            timestep,
            seq: self.next_seq,
        };
        self.next_seq += 1;
        match side {
            Side::Bid => {
                let pos = self.bids.partition_point(|q| q.price >= price);
                self.bids.insert(pos, quote);
            }
            Side::Ask => {
                let pos = self.asks.partition_point(|q| q.price <= price);
                self.asks.insert(pos, quote);
            }
        }
        Ok(SubmitOutcome::Rested)
    }

    pub fn snapshot(&self) -> LobSnapshot {
        LobSnapshot {
            best_bid: self.best_bid().map(|q| q.price),
            best_ask: self.best_ask().map(|q| q.price),
            bid_depth: self.bids.len(),
            ask_depth: self.asks.len(),
        }
    }

    pub fn clear(&mut self) {
        self.bids.clear();
        self.asks.clear();
    }
}

/// Anonymized published snapshot of `book`.
pub fn lob_anonymized(book: &LimitOrderBook) -> LobSnapshot {
    book.snapshot()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crossing_bid_trades_at_standing_ask() {
        let mut book = LimitOrderBook::new();
        assert_eq!(
            book.submit(1, Side::Ask, 100, 0).unwrap(),
            SubmitOutcome::Rested
        );
        match book.submit(2, Side::Bid, 105, 1).unwrap() {
            SubmitOutcome::Executed(t) => {
                assert_eq!(t.price.ticks(), 100);
                assert_eq!((t.buyer_id, t.seller_id), (2, 1));
                assert_eq!(t.aggressor, Side::Bid);
            }
            other => panic!("expected trade, got {other:?}"),
        }
        assert!(book.bids().is_empty() && book.asks().is_empty());
    }

    #[test]
    fn crossing_ask_trades_at_standing_bid() {
        let mut book = LimitOrderBook::new();
        book.submit(1, Side::Bid, 110, 0).unwrap();
        let SubmitOutcome::Executed(t) = book.submit(2, Side::Ask, 95, 0).unwrap() else {
            panic!("no trade");
        };
        assert_eq!(t.price.ticks(), 110);
    }

    #[test]
    fn replacement_removes_prior_quote() {
        let mut book = LimitOrderBook::new();
        book.submit(1, Side::Bid, 90, 0).unwrap();
        book.submit(2, Side::Ask, 95, 0).unwrap();
        assert_eq!(
            book.submit(1, Side::Bid, 92, 1).unwrap(),
            SubmitOutcome::Rested
        );
        assert_eq!(book.bids().len(), 1);
        assert_eq!(book.best_bid().unwrap().price.ticks(), 92);
        assert_eq!(book.asks().len(), 1);
    }

    #[test]
    fn empty_book_ask_rests_as_best() {
        let mut book = LimitOrderBook::new();
        book.submit(7, Side::Ask, 120, 0).unwrap();
        assert_eq!(book.snapshot().best_ask, Some(Price(120)));
    }

    #[test]
    fn rejects_out_of_domain_prices() {
        let mut book = LimitOrderBook::new();
        assert!(matches!(
            book.submit(1, Side::Bid, 0, 0),
            Err(ExchangeError::PriceOutOfRange(0))
        ));
        assert!(book.submit(1, Side::Ask, 1001, 0).is_err());
        assert!(book.submit(1, Side::Ask, 1000, 0).is_ok());
    }

    #[test]
    fn time_priority_within_a_price_level() {
        let mut book = LimitOrderBook::new();
        book.submit(1, Side::Ask, 100, 0).unwrap();
        book.submit(2, Side::Ask, 100, 0).unwrap();
        let SubmitOutcome::Executed(t) = book.submit(3, Side::Bid, 100, 1).unwrap() else {
            panic!()
        };
        assert_eq!(t.seller_id, 1);
    }

    #[test]
    fn snapshot_examples() {
        let empty = LimitOrderBook::new().snapshot();
        assert_eq!(empty, LobSnapshot::default());

        let mut book = LimitOrderBook::new();
        book.submit(1, Side::Bid, 90, 0).unwrap();
        book.submit(2, Side::Bid, 88, 0).unwrap();
        book.submit(3, Side::Ask, 95, 0).unwrap();
        let snap = lob_anonymized(&book);
        assert_eq!(snap.best_bid.unwrap().ticks(), 90);
        assert_eq!(snap.best_ask.unwrap().ticks(), 95);
        assert_eq!((snap.bid_depth, snap.ask_depth), (2, 1));

        let mut permuted = LimitOrderBook::new();
        permuted.submit(30, Side::Bid, 90, 0).unwrap();
        permuted.submit(10, Side::Bid, 88, 0).unwrap();
        permuted.submit(20, Side::Ask, 95, 0).unwrap();
        assert_eq!(lob_anonymized(&permuted), snap);
    }
}
