use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;

use super::{
    ExchangeError, LimitOrderBook, LobSnapshot, MarketEvent, Side, SubmitOutcome, Tape, TapeEvent,
    TapeEventKind, TraderId,
};
use crate::oracle::TraderPopulation;
use crate::schedules::{deployment_times, equilibrium, order_prices, OrderSchedule};
use crate::strategies::{CustomerOrder, StrategyKind, StrategyParams, TraderState};
use crate::SimRng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TraderOutcome {
    pub id: TraderId,
    pub kind: StrategyKind,
    pub side: Side,
    pub profit: i64,
    pub trades: u32,
    pub quotes: u32,
}

/// Pooled buyer and seller balances of one strategy kind.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct KindProfit {
    pub total: i64,
    pub traders: u32,
}

impl KindProfit {
    pub fn average(&self) -> Option<f64> {
        (self.traders > 0).then(|| self.total as f64 / self.traders as f64)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SessionResult {
    pub traders: Vec<TraderOutcome>,
    pub kinds: BTreeMap<StrategyKind, KindProfit>,
    pub trade_count: u64,
    /// Realized surplus over all traders.
    pub total_surplus: i64,
    /// Sum over replenishment cycles of the equilibrium surplus of the
    /// orders actually issued.
    pub theoretical_surplus: i64,
    pub tape: Tape,
}

impl SessionResult {
    pub fn kind_average(&self, kind: StrategyKind) -> Option<f64> {
        self.kinds.get(&kind).and_then(KindProfit::average)
    }

    pub fn market_average(&self) -> f64 {
        let n = self.traders.len();
        if n == 0 {
            0.0
        } else {
            self.total_surplus as f64 / n as f64
        }
    }

    /// Realized over theoretical surplus; `None` when no surplus was possible.
    pub fn efficiency(&self) -> Option<f64> {
        (self.theoretical_surplus > 0)
            .then(|| self.total_surplus as f64 / self.theoretical_surplus as f64)
    }

    /// Sessions where nothing traded. Usually a schedule whose supply sits
    /// entirely above demand.
    pub fn is_zero_trade(&self) -> bool {
        self.trade_count == 0
    }
}

/// A single market session. Strictly single-threaded; owns its RNG stream.
pub struct Session {
    schedule: OrderSchedule,
    duration: u32,
    params: StrategyParams,
    traders: Vec<TraderState>,
    buyers: Vec<TraderId>,
    sellers: Vec<TraderId>,
    book: LimitOrderBook,
    tape: Tape,
    rng: SimRng,
    arrivals: Vec<(u32, TraderId, CustomerOrder)>,
    trade_count: u64,
    total_surplus: i64,
    theoretical_surplus: i64,
}

impl Session {
    pub fn new(
        schedule: &OrderSchedule,
        population: &TraderPopulation,
        duration: u32,
        params: &StrategyParams,
        seed: u64,
    ) -> Result<Self, ExchangeError> {
        schedule.validate()?;
        if population.total() == 0 {
            return Err(ExchangeError::EmptyPopulation);
        }
        if duration == 0 || schedule.duration() < duration {
            return Err(ExchangeError::ScheduleMismatch {
                covered: schedule.duration(),
                duration,
            });
        }
        let mut rng = SimRng::seed_from_u64(seed);
        let mut traders = Vec::with_capacity(population.total() as usize);
        let mut buyers = Vec::new();
        let mut sellers = Vec::new();
        for (side, ids) in [(Side::Bid, &mut buyers), (Side::Ask, &mut sellers)] {
            for (kind, counts) in population.iter() {
                let n = match side {
                    Side::Bid => counts.buyers,
                    Side::Ask => counts.sellers,
                };
                for _ in 0..n {
                    let id = traders.len();
                    traders.push(TraderState::new(id, kind, side, params, &mut rng));
                    ids.push(id);
                }
            }
        }
        Ok(Session {
            schedule: schedule.clone(),
            duration,
            params: params.clone(),
            traders,
            buyers,
            sellers,
            book: LimitOrderBook::new(),
            tape: Tape::default(),
            rng,
            arrivals: Vec::new(),
            trade_count: 0,
            total_surplus: 0,
            theoretical_surplus: 0,
        })
    }

    pub fn traders(&self) -> &[TraderState] {
        &self.traders
    }

    pub fn traders_mut(&mut self) -> &mut [TraderState] {
        &mut self.traders
    }

    pub fn book(&self) -> &LimitOrderBook {
        &self.book
    }

    pub fn tape(&self) -> &Tape {
        &self.tape
    }

    pub fn duration(&self) -> u32 {
        self.duration
    }

    pub fn params(&self) -> &StrategyParams {
        &self.params
    }

    fn issue_orders(&mut self, start: u32) {
        let Some((supply, demand)) = self.schedule.active_at(start) else {
            return;
        };
        let (supply, demand) = (*supply, *demand);
        let mut bids = order_prices(&demand, self.buyers.len(), &mut self.rng);
        let mut asks = order_prices(&supply, self.sellers.len(), &mut self.rng);
        bids.shuffle(&mut self.rng);
        asks.shuffle(&mut self.rng);

        let eq = equilibrium(
            &asks.iter().map(|p| p.ticks()).collect::<Vec<_>>(),
            &bids.iter().map(|p| p.ticks()).collect::<Vec<_>>(),
        );
        self.theoretical_surplus += eq.surplus;

        let interval = self.schedule.interval;
        let mode = self.schedule.timemode;
        let bid_times = deployment_times(mode, start, interval, bids.len(), &mut self.rng);
        let ask_times = deployment_times(mode, start, interval, asks.len(), &mut self.rng);
        self.arrivals.clear();
        for (side, ids, prices, times) in [
            (Side::Bid, &self.buyers, &bids, &bid_times),
            (Side::Ask, &self.sellers, &asks, &ask_times),
        ] {
            for ((&id, &limit), &t) in ids.iter().zip(prices).zip(times) {
                self.arrivals.push((
                    t,
                    id,
                    CustomerOrder {
                        side,
                        limit,
                        issued: t,
                    },
                ));
            }
        }
    }

    fn deliver(&mut self, timestep: u32) -> Result<(), ExchangeError> {
        for i in 0..self.arrivals.len() {
            let (t, id, order) = self.arrivals[i];
            if t != timestep {
                continue;
            }
            if self.book.cancel(id).is_some() {
                self.tape.push(TapeEvent {
                    timestep,
                    event_type: TapeEventKind::Cancelled,
                    price: None,
                    buyer_id: (order.side == Side::Bid).then_some(id),
                    seller_id: (order.side == Side::Ask).then_some(id),
                });
            }
            self.traders[id].assign_order(order)?;
        }
        Ok(())
    }

    /// Admits a quote from `trader_id`, settling any resulting trade.
    pub fn submit_quote(
        &mut self,
        trader_id: TraderId,
        side: Side,
        price: i64,
        timestep: u32,
    ) -> Result<SubmitOutcome, ExchangeError> {
        let trader = self
            .traders
            .get(trader_id)
            .ok_or(ExchangeError::UnknownTrader(trader_id))?;
        let pending = trader
            .pending
            .ok_or(ExchangeError::NoPendingOrder(trader_id))?;
        if pending.side != side {
            return Err(ExchangeError::WrongSide {
                trader: trader_id,
                side,
                pending: pending.side,
            });
        }
        let had_quote = self
            .book
            .bids()
            .iter()
            .chain(self.book.asks())
            .any(|q| q.trader_id == trader_id);
        let outcome = self.book.submit(trader_id, side, price, timestep)?;
        let (buyer_id, seller_id) = match side {
            Side::Bid => (Some(trader_id), None),
            Side::Ask => (None, Some(trader_id)),
        };
        if had_quote {
            self.tape.push(TapeEvent {
                timestep,
                event_type: TapeEventKind::Cancelled,
                price: None,
                buyer_id,
                seller_id,
            });
        }
        match outcome {
            SubmitOutcome::Rested => self.tape.push(TapeEvent {
                timestep,
                event_type: match side {
                    Side::Bid => TapeEventKind::BidPosted,
                    Side::Ask => TapeEventKind::AskPosted,
                },
                price: Some(price),
                buyer_id,
                seller_id,
            }),
            SubmitOutcome::Executed(trade) => {
                let buyer_gain = self.traders[trade.buyer_id].settle(trade)?;
                let seller_gain = self.traders[trade.seller_id].settle(trade)?;
                self.trade_count += 1;
                self.total_surplus += buyer_gain + seller_gain;
                self.tape.push(TapeEvent {
                    timestep,
                    event_type: TapeEventKind::Trade,
                    price: Some(trade.price.ticks()),
                    buyer_id: Some(trade.buyer_id),
                    seller_id: Some(trade.seller_id),
                });
            }
        }
        Ok(outcome)
    }

    fn broadcast(&mut self, event: &MarketEvent) {
        let snapshot: LobSnapshot = self.book.snapshot();
        for trader in &mut self.traders {
            trader.on_market_event(event, &snapshot, &mut self.rng);
        }
    }

    /// Advances one timestep: issue and deliver due customer orders, then
    /// poll every trader holding an order exactly once in random order.
    pub fn step(&mut self, timestep: u32) -> Result<Vec<MarketEvent>, ExchangeError> {
        if timestep >= self.duration {
            return Err(ExchangeError::PastEnd {
                timestep,
                duration: self.duration,
            });
        }
        if timestep.is_multiple_of(self.schedule.interval) {
            self.issue_orders(timestep);
        }
        self.deliver(timestep)?;

        let mut order: Vec<TraderId> = self
            .traders
            .iter()
            .filter(|t| t.pending.is_some())
            .map(|t| t.id)
            .collect();
        order.shuffle(&mut self.rng);

        let mut events = Vec::new();
        for id in order {
            if self.traders[id].pending.is_none() {
                // filled earlier this step
                continue;
            }
            let snapshot = self.book.snapshot();
            let duration = self.duration;
            let Some((side, price)) =
                self.traders[id].get_quote(&snapshot, timestep, duration, &mut self.rng)
            else {
                continue;
            };
            let event = match self.submit_quote(id, side, price.ticks(), timestep)? {
                SubmitOutcome::Rested => MarketEvent::QuotePosted {
                    timestep,
                    side,
                    price,
                },
                SubmitOutcome::Executed(trade) => MarketEvent::Trade {
                    timestep,
                    price: trade.price,
                    aggressor: trade.aggressor,
                },
            };
            self.broadcast(&event);
            events.push(event);
        }
        Ok(events)
    }

    pub fn finish(self) -> SessionResult {
        let mut kinds: BTreeMap<StrategyKind, KindProfit> = BTreeMap::new();
        let traders: Vec<TraderOutcome> = self
            .traders
            .iter()
            .map(|t| TraderOutcome {
                id: t.id,
                kind: t.kind,
                side: t.side,
                profit: t.balance,
                trades: t.blotter.len() as u32,
                quotes: t.quotes_issued,
            })
            .collect();
        for t in &traders {
            let entry = kinds.entry(t.kind).or_default();
            entry.total += t.profit;
            entry.traders += 1;
        }
        SessionResult {
            traders,
            kinds,
            trade_count: self.trade_count,
            total_surplus: self.total_surplus,
            theoretical_surplus: self.theoretical_surplus,
            tape: self.tape,
        }
    }

    pub fn run(mut self) -> Result<SessionResult, ExchangeError> {
        for t in 0..self.duration {
            self.step(t)?;
        }
        Ok(self.finish())
    }
}

/// Runs a full session. A deterministic function of its arguments.
pub fn run_session(
    schedule: &OrderSchedule,
    population: &TraderPopulation,
    duration: u32,
    params: &StrategyParams,
    seed: u64,
) -> Result<SessionResult, ExchangeError> {
    Session::new(schedule, population, duration, params, seed)?.run()
}
