//! Trading strategies and per-trader state.
//!
//! Every strategy sees only its own customer order, the anonymized book
//! snapshot and the public event stream. None of them can quote at a loss:
//! buyers never bid above their limit, sellers never ask below it.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exchange::{LobSnapshot, MarketEvent, Price, Side, Trade, TraderId};
use crate::SimRng;

mod aa;
mod gdx;
mod params;
mod sniper;
mod zic;
mod zip;

pub use aa::AdaptiveAggressive;
pub use gdx::{Gdx, ShoutHistory};
pub use params::{AaParams, GdxParams, SniperParams, StrategyParams, ZicParams, ZipParams};
pub use sniper::Sniper;
pub use zic::Zic;
pub use zip::Zip;

#[derive(Debug, Error, PartialEq)]
pub enum StrategyError {
    #[error("trader {trader} is a {expected} trader but received a {got} order")]
    SideMismatch {
        trader: TraderId,
        expected: Side,
        got: Side,
    },
    #[error("trade at {price} violates {side} limit {limit}")]
    NegativeSurplus { limit: i64, price: i64, side: Side },
    #[error("unknown strategy kind `{0}`")]
    UnknownKind(String),
}

/// Variants are declared in lexicographic order of their names, so the
/// derived `Ord` is the name order used for tie-breaking.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum StrategyKind {
    AA,
    GDX,
    SNPR,
    ZIC,
    ZIP,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 5] = [
        StrategyKind::AA,
        StrategyKind::GDX,
        StrategyKind::SNPR,
        StrategyKind::ZIC,
        StrategyKind::ZIP,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::AA => "AA",
            StrategyKind::GDX => "GDX",
            StrategyKind::SNPR => "SNPR",
            StrategyKind::ZIC => "ZIC",
            StrategyKind::ZIP => "ZIP",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = StrategyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| StrategyError::UnknownKind(s.to_string()))
    }
}

/// An instruction to trade one unit at no worse than `limit`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CustomerOrder {
    pub side: Side,
    pub limit: Price,
    pub issued: u32,
}

/// What a strategy sees when it is polled.
#[derive(Clone, Copy, Debug)]
pub struct QuoteContext<'a> {
    pub order: &'a CustomerOrder,
    pub book: &'a LobSnapshot,
    pub timestep: u32,
    pub duration: u32,
}

pub trait Strategy: Send {
    fn kind(&self) -> StrategyKind;

    /// Called when a new customer order replaces the pending one.
    fn on_new_order(&mut self, _order: &CustomerOrder) {}

    /// Proposed quote price in ticks, or `None` to sit this step out.
    fn get_quote(&mut self, ctx: &QuoteContext<'_>, rng: &mut SimRng) -> Option<i64>;

    /// Reacts to a public event. `order` is the trader's pending order, if any.
    fn on_market_event(
        &mut self,
        event: &MarketEvent,
        book: &LobSnapshot,
        order: Option<&CustomerOrder>,
        rng: &mut SimRng,
    );
}

pub fn build_strategy(
    kind: StrategyKind,
    side: Side,
    params: &StrategyParams,
    rng: &mut SimRng,
) -> Box<dyn Strategy> {
    match kind {
        StrategyKind::ZIC => Box::new(Zic::new(params)),
        StrategyKind::ZIP => Box::new(Zip::new(side, &params.zip, rng)),
        StrategyKind::SNPR => Box::new(Sniper::new(&params.snpr)),
        StrategyKind::GDX => Box::new(Gdx::new(params)),
        StrategyKind::AA => Box::new(AdaptiveAggressive::new(side, params, rng)),
    }
}

/// Surplus earned on one unit: `limit − price` for buyers, `price − limit`
/// for sellers. A negative value means a strategy broke its constraint.
pub fn strategy_profit_per_trade(
    limit: Price,
    price: Price,
    side: Side,
) -> Result<i64, StrategyError> {
    let surplus = match side {
        Side::Bid => limit.ticks() - price.ticks(),
        Side::Ask => price.ticks() - limit.ticks(),
    };
    if surplus < 0 {
        return Err(StrategyError::NegativeSurplus {
            limit: limit.ticks(),
            price: price.ticks(),
            side,
        });
    }
    Ok(surplus)
}

/// One market participant.
pub struct TraderState {
    pub id: TraderId,
    pub kind: StrategyKind,
    /// `Bid` for buyers, `Ask` for sellers.
    pub side: Side,
    pub pending: Option<CustomerOrder>,
    pub balance: i64,
    pub blotter: Vec<Trade>,
    pub quotes_issued: u32,
    strategy: Box<dyn Strategy>,
}

impl fmt::Debug for TraderState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TraderState")
            .field("id", &self.id)
            .field("kind", &self.kind)
            .field("side", &self.side)
            .field("pending", &self.pending)
            .field("balance", &self.balance)
            .field("trades", &self.blotter.len())
            .finish()
    }
}

impl TraderState {
    pub fn new(
        id: TraderId,
        kind: StrategyKind,
        side: Side,
        params: &StrategyParams,
        rng: &mut SimRng,
    ) -> Self {
        TraderState {
            id,
            kind,
            side,
            pending: None,
            balance: 0,
            blotter: Vec::new(),
            quotes_issued: 0,
            strategy: build_strategy(kind, side, params, rng),
        }
    }

    /// Replaces any unfilled pending order with `order`.
    pub fn assign_order(&mut self, order: CustomerOrder) -> Result<(), StrategyError> {
        if order.side != self.side {
            return Err(StrategyError::SideMismatch {
                trader: self.id,
                expected: self.side,
                got: order.side,
            });
        }
        self.pending = Some(order);
        self.strategy.on_new_order(&order);
        Ok(())
    }

    /// Asks the strategy for a quote. The result always respects the limit.
    pub fn get_quote(
        &mut self,
        book: &LobSnapshot,
        timestep: u32,
        duration: u32,
        rng: &mut SimRng,
    ) -> Option<(Side, Price)> {
        let order = self.pending?;
        let ctx = QuoteContext {
            order: &order,
            book,
            timestep,
            duration,
        };
        let raw = self.strategy.get_quote(&ctx, rng)?;
        let limit = order.limit.ticks();
        debug_assert!(
            match order.side {
                Side::Bid => raw <= limit,
                Side::Ask => raw >= limit,
            },
            "{} quoted {raw} against limit {limit}",
            self.kind
        );
        let bounded = match order.side {
            Side::Bid => raw.min(limit),
            Side::Ask => raw.max(limit),
        };
        self.quotes_issued += 1;
        Some((order.side, Price::clamped(bounded)))
    }

    pub fn on_market_event(&mut self, event: &MarketEvent, book: &LobSnapshot, rng: &mut SimRng) {
        self.strategy
            .on_market_event(event, book, self.pending.as_ref(), rng);
    }

    /// Books a fill against the pending order and clears it.
    pub fn settle(&mut self, trade: Trade) -> Result<i64, StrategyError> {
        let order = self
            .pending
            .take()
            .expect("settled trader had a pending order");
        let surplus = strategy_profit_per_trade(order.limit, trade.price, self.side)?;
        self.balance += surplus;
        self.blotter.push(trade);
        Ok(surplus)
    }
}
