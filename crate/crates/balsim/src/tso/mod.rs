//! TSO balancing needs and need orders.

pub mod alternative;
pub mod frbm;
pub mod needs;
pub mod risk;
pub mod slicing;

pub use alternative::{mfrr_cost, mfrr_price, AlternativeCost, LinearAlternative, MfrrAlternative};
pub use frbm::{select_frbm_pool, FrbmAlternative, FrbmPool};
pub use needs::{bsp_overall_volume, compute_needs, raw_needs, BalancingNeeds};
pub use risk::{interp_epsilon, risk_averse_prices, risk_averse_slices, RiskSlice};
pub use slicing::{basic_elastic_prices, slice_division, SliceDivision};

use crate::error::{Error, Result};
use crate::model::{ControlArea, Horizon, MarketConfig, Minutes, Order, OrderKind};
use crate::scalar::Scalar;

fn tso_order<S: Scalar>(
    area: &str,
    t: Minutes,
    market: &MarketConfig,
    slice: Option<usize>,
    q: S,
    sigma: i8,
    price: S,
) -> Order<S> {
    let id = match slice {
        Some(i) => format!("tso.{area}.{t}.{i}"),
        None => format!("tso.{area}.{t}"),
    };
    Order {
        id,
        unit_id: None,
        area_id: area.to_string(),
        price,
        q_min: S::zero(),
        q_max: q,
        t_start: t,
        t_end: t + market.dt_minutes,
        t_ex: market.t_ex,
        sigma,
        is_tso: true,
        kind: OrderKind::Normal,
        q_acc: S::zero(),
        accepted: false,
    }
}

fn sigma_of<S: Scalar>(bn: S) -> i8 {
    if bn > S::zero() {
        -1
    } else {
        1
    }
}

/// Price limited to the market cap; an unavailable alternative bids at the cap.
fn bounded<S: Scalar>(p: Option<S>, sigma: i8, cap: S) -> S {
    match p {
        Some(p) => p.max(-cap).min(cap),
        None if sigma < 0 => cap,
        None => -cap,
    }
}

/// One divisible order per non-zero need at the price cap.
pub fn inelastic_orders<S: Scalar>(needs: &BalancingNeeds<S>, market: &MarketConfig, price_cap: S) -> Vec<Order<S>> {
    needs
        .times
        .iter()
        .zip(&needs.bn)
        .filter(|(_, &b)| b != S::zero())
        .map(|(&t, &b)| {
            let sigma = sigma_of(b);
            let price = if sigma < 0 { price_cap } else { -price_cap };
            tso_order(&needs.area_id, t, market, None, b.abs(), sigma, price)
        })
        .collect()
}

/// Need orders of one control area under its bidding strategy.
pub fn formulate_tso_orders<S: Scalar>(
    ca: &ControlArea<S>,
    needs: &BalancingNeeds<S>,
    market: &MarketConfig,
    horizon: &Horizon,
    price_cap: S,
    alt: &mut dyn AlternativeCost<S>,
) -> Result<Vec<Order<S>>> {
    let p = &ca.tso_params;
    if !p.delta_elas {
        return Ok(inelastic_orders(needs, market, price_cap));
    }
    let mut out = Vec::new();
    if !p.delta_risk {
        let div = slice_division(&needs.bn, p.v_slice);
        for (k, (&t, &b)) in needs.times.iter().zip(&needs.bn).enumerate() {
            let sigma = sigma_of(b);
            let sign = if sigma < 0 { S::one() } else { -S::one() };
            let qs = &div.per_step[k];
            let prices = basic_elastic_prices(qs, |cum| alt.cost(sign * cum, t));
            for (i, (&q, pr)) in qs.iter().zip(prices).enumerate() {
                out.push(tso_order(&ca.id, t, market, Some(i), q, sigma, bounded(pr, sigma, price_cap)));
            }
        }
        return Ok(out);
    }
    let n = p.quantiles.len();
    if n < 4 {
        return Err(Error::Config(format!(
            "control area {}: risk-averse bidding needs sentinels and at least two quantiles",
            ca.id
        )));
    }
    let alphas: Vec<S> = p.quantiles.iter().map(|q| q.alpha).collect();
    for (&t, &b) in needs.times.iter().zip(&needs.bn) {
        let eps: Vec<S> = p
            .quantiles
            .iter()
            .map(|q| q.epsilon.mean(horizon, t, t + market.dt_minutes))
            .collect();
        let slices = risk_averse_slices(b, &eps[1..n - 1])?;
        let prices = risk_averse_prices(&slices, &alphas, &eps, |dir, v| alt.cost_dir(dir, v, t));
        for (s, pr) in slices.iter().zip(prices) {
            out.push(tso_order(&ca.id, t, market, Some(s.index), s.q, s.sigma, bounded(pr, s.sigma, price_cap)));
        }
    }
    Ok(out)
}
