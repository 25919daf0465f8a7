/// Competitive equilibrium of unit step supply and demand curves.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Equilibrium {
    /// Units traded at equilibrium.
    pub quantity: usize,
    /// Inclusive range of clearing prices; `None` when nothing trades.
    pub price_range: Option<(i64, i64)>,
    /// Maximum total surplus: sum of (demand − supply) over traded units.
    pub surplus: i64,
}

/// Intersects step supply (ascending) with step demand (descending).
pub fn equilibrium(supply: &[i64], demand: &[i64]) -> Equilibrium {
    let mut s = supply.to_vec();
    let mut d = demand.to_vec();
    s.sort_unstable();
    d.sort_unstable_by(|a, b| b.cmp(a));

    let quantity = s.iter().zip(&d).take_while(|(s, d)| d >= s).count();
    if quantity == 0 {
        return Equilibrium {
            quantity: 0,
            price_range: None,
            surplus: 0,
        };
    }
    let q = quantity - 1;
    let mut low = s[q];
    let mut high = d[q];
    if let Some(&next_demand) = d.get(quantity) {
        low = low.max(next_demand);
    }
    if let Some(&next_supply) = s.get(quantity) {
        high = high.min(next_supply);
    }
    let surplus = s.iter().zip(&d).take(quantity).map(|(s, d)| d - s).sum();
    Equilibrium {
        quantity,
        price_range: Some((low, high)),
        surplus,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Brute force over integer prices: the clearing set is every price
    /// where the traded quantity min(S, D) is maximal and no strictly
    /// willing trader is left out.
    fn brute_force(supply: &[i64], demand: &[i64]) -> (usize, Option<(i64, i64)>) {
        let lo = supply.iter().chain(demand).min().copied().unwrap() - 1;
        let hi = supply.iter().chain(demand).max().copied().unwrap() + 1;
        let s_at = |p: i64| supply.iter().filter(|&&s| s <= p).count();
        let d_at = |p: i64| demand.iter().filter(|&&d| d >= p).count();
        let q0 = (lo..=hi).map(|p| s_at(p).min(d_at(p))).max().unwrap();
        if q0 == 0 {
            return (0, None);
        }
        let clearing: Vec<i64> = (lo..=hi)
            .filter(|&p| {
                s_at(p).min(d_at(p)) == q0
                    && supply.iter().filter(|&&s| s < p).count() <= q0
                    && demand.iter().filter(|&&d| d > p).count() <= q0
            })
            .collect();
        (q0, Some((clearing[0], *clearing.last().unwrap())))
    }

    #[test]
    fn worked_example() {
        let eq = equilibrium(&[10, 20, 30], &[35, 25, 15]);
        assert_eq!(eq.quantity, 2);
        assert_eq!(eq.price_range, Some((20, 25)));
        assert_eq!(eq.surplus, 25 + 5);
        assert_eq!(
            brute_force(&[10, 20, 30], &[35, 25, 15]),
            (2, Some((20, 25)))
        );
    }

    #[test]
    fn no_trade() {
        let eq = equilibrium(&[100], &[90]);
        assert_eq!(eq.quantity, 0);
        assert_eq!(eq.price_range, None);
        assert_eq!(eq.surplus, 0);
    }

    #[test]
    fn symmetric_schedule_clears_half_at_midprice() {
        let supply = [50, 83, 117, 150];
        let demand = [150, 117, 83, 50];
        let eq = equilibrium(&supply, &demand);
        assert_eq!(eq.quantity, 2);
        let (lo, hi) = eq.price_range.unwrap();
        assert!(lo <= 100 && 100 <= hi);
    }

    proptest! {
        #[test]
        fn matches_brute_force(
            supply in prop::collection::vec(1i64..60, 1..8),
            demand in prop::collection::vec(1i64..60, 1..8),
        ) {
            let eq = equilibrium(&supply, &demand);
            let (q0, range) = brute_force(&supply, &demand);
            prop_assert_eq!(eq.quantity, q0);
            prop_assert_eq!(eq.price_range, range);
        }
    }
}
