//! Continuous double auction engine.
//!
//! Traders are polled once per timestep in a fresh random order. Each quote
//! either rests (replacing the trader's previous quote) or crosses the
//! opposite best and trades one unit at the standing quote's price. Every
//! quote and trade is broadcast, anonymized, to all traders.

use std::io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

mod book;
mod session;

pub use book::{
    lob_anonymized, LimitOrderBook, LobSnapshot, Price, Quote, Side, SubmitOutcome, Trade,
    TraderId, MAX_PRICE, MIN_PRICE,
};
pub use session::{run_session, KindProfit, Session, SessionResult, TraderOutcome};

use crate::schedules::ScheduleError;
use crate::strategies::StrategyError;

#[derive(Debug, Error)]
pub enum ExchangeError {
    #[error("price {0} outside [1, 1000]")]
    PriceOutOfRange(i64),
    #[error("trader {0} has no pending customer order")]
    NoPendingOrder(TraderId),
    #[error("trader {trader} quoted on the {side} side against a {pending} order")]
    WrongSide {
        trader: TraderId,
        side: Side,
        pending: Side,
    },
    #[error("unknown trader {0}")]
    UnknownTrader(TraderId),
    #[error("population is empty")]
    EmptyPopulation,
    #[error("schedule covers [0, {covered}) but the session lasts {duration}")]
    ScheduleMismatch { covered: u32, duration: u32 },
    #[error("timestep {timestep} is past the session end {duration}")]
    PastEnd { timestep: u32, duration: u32 },
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
}

/// Public, anonymized market event delivered to every trader.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MarketEvent {
    QuotePosted {
        timestep: u32,
        side: Side,
        price: Price,
    },
    Trade {
        timestep: u32,
        price: Price,
        aggressor: Side,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TapeEventKind {
    BidPosted,
    AskPosted,
    Cancelled,
    Trade,
}

/// One tape row. Trader ids are present on the tape but never in what
/// traders themselves observe.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TapeEvent {
    pub timestep: u32,
    pub event_type: TapeEventKind,
    pub price: Option<i64>,
    pub buyer_id: Option<TraderId>,
    pub seller_id: Option<TraderId>,
}

/// Append-only session history.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Tape {
    events: Vec<TapeEvent>,
}

impl Tape {
    pub fn push(&mut self, event: TapeEvent) {
        debug_assert!(self
            .events
            .last()
            .is_none_or(|e| e.timestep <= event.timestep));
        self.events.push(event);
    }

    pub fn events(&self) -> &[TapeEvent] {
        &self.events
    }

    pub fn trades(&self) -> impl Iterator<Item = &TapeEvent> {
        self.events
            .iter()
            .filter(|e| e.event_type == TapeEventKind::Trade)
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Writes `timestep,event_type,price,buyer_id,seller_id` rows.
    pub fn write_csv<W: io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for e in &self.events {
            w.serialize(e)?;
        }
        if self.events.is_empty() {
            w.write_record(["timestep", "event_type", "price", "buyer_id", "seller_id"])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tape_csv_columns_are_stable() {
        let mut tape = Tape::default();
        tape.push(TapeEvent {
            timestep: 0,
            event_type: TapeEventKind::BidPosted,
            price: Some(90),
            buyer_id: Some(2),
            seller_id: None,
        });
        tape.push(TapeEvent {
            timestep: 1,
            event_type: TapeEventKind::Trade,
            price: Some(95),
            buyer_id: Some(2),
            seller_id: Some(5),
        });
        let mut buf = Vec::new();
        tape.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "timestep,event_type,price,buyer_id,seller_id\n0,bid_posted,90,2,\n1,trade,95,2,5\n"
        );
    }

    #[test]
    fn empty_tape_still_has_header() {
        let mut buf = Vec::new();
        Tape::default().write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "timestep,event_type,price,buyer_id,seller_id\n"
        );
    }
}
