//! Business logic of the five transaction profiles.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::ChaincodeError;
use crate::domain::{
    Credit, Customer, CustomerSelector, DeliveryInput, District, History, Item, Money, NewOrder, NewOrderInput, Order, OrderLine,
    OrderStatusInput, PaymentInput, Stock, StockLevelInput, Warehouse, BASIS_POINTS_ONE, DISTRICTS_PER_WAREHOUSE,
};
use crate::keys;
use crate::ledger::Direction;
use crate::registry::Registry;

/// Longest `c_data` kept for bad-credit customers.
const C_DATA_MAX: usize = 500;
/// Stock Level looks at this many most recent orders.
const STOCK_LEVEL_ORDERS: u32 = 20;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewOrderLineResult {
    pub ol_supply_w_id: u32,
    pub ol_i_id: u32,
    pub i_name: String,
    pub ol_quantity: u32,
    pub s_quantity: i32,
    pub i_price: Money,
    pub ol_amount: Money,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case")]
pub enum ProfileResponse {
    NewOrder {
        w_id: u32,
        d_id: u32,
        c_id: u32,
        o_id: u32,
        o_ol_cnt: u32,
        c_last: String,
        c_credit: Credit,
        c_discount: i64,
        w_tax: i64,
        d_tax: i64,
        total_amount: Money,
        lines: Vec<NewOrderLineResult>,
    },
    /// The order referenced an unknown item and was rolled back.
    NewOrderRollback { w_id: u32, d_id: u32, c_id: u32, o_id: u32, message: String },
    Payment { w_id: u32, d_id: u32, c_w_id: u32, c_d_id: u32, c_id: u32, c_balance: Money, c_credit: Credit, h_amount: Money },
    OrderStatus { c_id: u32, c_last: String, c_balance: Money, order: Option<OrderSummary> },
    Delivery { w_id: u32, o_carrier_id: u32, delivered: Vec<DeliveredOrder>, skipped_districts: Vec<u32> },
    StockLevel { w_id: u32, d_id: u32, threshold: i32, low_stock: u32 },
    InitEntities { created: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderSummary {
    pub o_id: u32,
    pub o_entry_d: u64,
    pub o_carrier_id: Option<u32>,
    pub o_ol_cnt: u32,
    pub lines: Vec<OrderLine>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeliveredOrder {
    pub d_id: u32,
    pub o_id: u32,
    pub c_id: u32,
    pub amount: Money,
}

/// `sum * (1 - discount) * (1 + w_tax + d_tax)`, rounded half away from zero.
pub fn order_total(sum: Money, discount: i64, w_tax: i64, d_tax: i64) -> Money {
    let scale = (BASIS_POINTS_ONE as i128) * (BASIS_POINTS_ONE as i128);
    let product = sum as i128 * (BASIS_POINTS_ONE - discount) as i128 * (BASIS_POINTS_ONE + w_tax + d_tax) as i128;
    let half = scale / 2;
    (if product >= 0 { (product + half) / scale } else { (product - half) / scale }) as Money
}

/// TPC-C replenishment: drop by the ordered quantity, refilling by 91 when
/// fewer than 10 would remain.
pub fn next_stock_quantity(current: i32, ordered: u32) -> i32 {
    let ordered = ordered as i32;
    if current >= ordered + 10 {
        current - ordered
    } else {
        current - ordered + 91
    }
}

pub(super) fn new_order(reg: &mut Registry<'_>, input: &NewOrderInput) -> Result<ProfileResponse, ChaincodeError> {
    let warehouse: Warehouse = reg.read(&keys::warehouse_key(input.w_id)?)?;
    let mut district: District = reg.read(&keys::district_key(input.w_id, input.d_id)?)?;
    let customer: Customer = reg.read(&keys::customer_key(input.w_id, input.d_id, input.c_id)?)?;

    let o_id = district.d_next_o_id;
    district.d_next_o_id += 1;
    reg.update(&district)?;

    let o_ol_cnt = input.lines.len() as u32;
    let o_all_local = input.lines.iter().all(|l| l.supply_w_id == input.w_id);
    reg.create(&Order {
        o_w_id: input.w_id,
        o_d_id: input.d_id,
        o_id,
        o_c_id: input.c_id,
        o_entry_d: input.o_entry_d,
        o_carrier_id: None,
        o_ol_cnt,
        o_all_local,
    })?;
    reg.create(&NewOrder { no_w_id: input.w_id, no_d_id: input.d_id, no_o_id: o_id, no_c_id: input.c_id })?;

    let mut lines = Vec::with_capacity(input.lines.len());
    let mut sum: Money = 0;
    for (index, line) in input.lines.iter().enumerate() {
        let Some(item) = reg.try_read::<Item>(&keys::item_key(line.i_id)?)? else {
            return Ok(ProfileResponse::NewOrderRollback {
                w_id: input.w_id,
                d_id: input.d_id,
                c_id: input.c_id,
                o_id,
                message: "Item number is not valid".into(),
            });
        };
        let mut stock: Stock = reg.read(&keys::stock_key(line.supply_w_id, line.i_id)?)?;
        stock.s_quantity = next_stock_quantity(stock.s_quantity, line.quantity);
        stock.s_ytd += i64::from(line.quantity);
        stock.s_order_cnt += 1;
        if line.supply_w_id != input.w_id {
            stock.s_remote_cnt += 1;
        }
        reg.update(&stock)?;

        let ol_amount = item.i_price * Money::from(line.quantity);
        sum += ol_amount;
        reg.create(&OrderLine {
            ol_w_id: input.w_id,
            ol_d_id: input.d_id,
            ol_o_id: o_id,
            ol_number: index as u32 + 1,
            ol_i_id: line.i_id,
            ol_supply_w_id: line.supply_w_id,
            ol_delivery_d: None,
            ol_quantity: line.quantity,
            ol_amount,
            ol_dist_info: stock.s_dist.get(input.d_id as usize - 1).cloned().unwrap_or_default(),
        })?;
        lines.push(NewOrderLineResult {
            ol_supply_w_id: line.supply_w_id,
            ol_i_id: line.i_id,
            i_name: item.i_name,
            ol_quantity: line.quantity,
            s_quantity: stock.s_quantity,
            i_price: item.i_price,
            ol_amount,
        });
    }

    Ok(ProfileResponse::NewOrder {
        w_id: input.w_id,
        d_id: input.d_id,
        c_id: input.c_id,
        o_id,
        o_ol_cnt,
        total_amount: order_total(sum, customer.c_discount, warehouse.w_tax, district.d_tax),
        c_last: customer.c_last,
        c_credit: customer.c_credit,
        c_discount: customer.c_discount,
        w_tax: warehouse.w_tax,
        d_tax: district.d_tax,
        lines,
    })
}

/// Index of the customer chosen among `n` last-name matches: the
/// ⌈n/2⌉-th, counting from one.
pub fn last_name_pick(n: usize) -> Option<usize> {
    (n > 0).then(|| n.div_ceil(2) - 1)
}

fn resolve_customer(reg: &mut Registry<'_>, w_id: u32, d_id: u32, selector: &CustomerSelector) -> Result<Customer, ChaincodeError> {
    let c_id = match selector {
        CustomerSelector::ById(c_id) => *c_id,
        CustomerSelector::ByLastName(c_last) => {
            let ids = reg.customers_by_last_name(w_id, d_id, c_last)?;
            let pick = last_name_pick(ids.len()).ok_or_else(|| ChaincodeError::NoCustomer(c_last.clone()))?;
            ids[pick]
        }
    };
    Ok(reg.read(&keys::customer_key(w_id, d_id, c_id)?)?)
}

pub(super) fn payment(reg: &mut Registry<'_>, input: &PaymentInput) -> Result<ProfileResponse, ChaincodeError> {
    let mut warehouse: Warehouse = reg.read(&keys::warehouse_key(input.w_id)?)?;
    warehouse.w_ytd += input.h_amount;
    reg.update(&warehouse)?;

    let mut district: District = reg.read(&keys::district_key(input.w_id, input.d_id)?)?;
    district.d_ytd += input.h_amount;
    reg.update(&district)?;

    let mut customer = resolve_customer(reg, input.c_w_id, input.c_d_id, &input.customer)?;
    customer.c_balance -= input.h_amount;
    customer.c_ytd_payment += input.h_amount;
    customer.c_payment_cnt += 1;
    if customer.c_credit == Credit::Bad {
        let entry = format!(
            "{} {} {} {} {} {}",
            customer.c_id, customer.c_d_id, customer.c_w_id, input.d_id, input.w_id, input.h_amount
        );
        let mut data = format!("{entry} | {}", customer.c_data);
        if data.len() > C_DATA_MAX {
            let mut cut = C_DATA_MAX;
            while !data.is_char_boundary(cut) {
                cut -= 1;
            }
            data.truncate(cut);
        }
        customer.c_data = data;
    }
    reg.update(&customer)?;

    reg.create(&History {
        h_c_id: customer.c_id,
        h_c_d_id: customer.c_d_id,
        h_c_w_id: customer.c_w_id,
        h_d_id: input.d_id,
        h_w_id: input.w_id,
        h_date: input.h_date,
        h_amount: input.h_amount,
        h_data: format!("{}    {}", warehouse.w_name, district.d_name),
        h_client_id: input.client_id.clone(),
    })?;

    Ok(ProfileResponse::Payment {
        w_id: input.w_id,
        d_id: input.d_id,
        c_w_id: customer.c_w_id,
        c_d_id: customer.c_d_id,
        c_id: customer.c_id,
        c_balance: customer.c_balance,
        c_credit: customer.c_credit,
        h_amount: input.h_amount,
    })
}

pub(super) fn order_status(reg: &mut Registry<'_>, input: &OrderStatusInput) -> Result<ProfileResponse, ChaincodeError> {
    let customer = resolve_customer(reg, input.w_id, input.d_id, &input.customer)?;
    let newest: Vec<Order> = reg.read_range(&keys::order_prefix(input.w_id, input.d_id, customer.c_id)?, Some(1), Direction::Forward)?;
    let order = match newest.into_iter().next() {
        Some(o) => {
            let lines: Vec<OrderLine> = reg.read_range(&keys::order_line_prefix(o.o_w_id, o.o_d_id, o.o_id)?, None, Direction::Forward)?;
            Some(OrderSummary { o_id: o.o_id, o_entry_d: o.o_entry_d, o_carrier_id: o.o_carrier_id, o_ol_cnt: o.o_ol_cnt, lines })
        }
        None => None,
    };
    Ok(ProfileResponse::OrderStatus { c_id: customer.c_id, c_last: customer.c_last, c_balance: customer.c_balance, order })
}

pub(super) fn delivery(reg: &mut Registry<'_>, input: &DeliveryInput) -> Result<ProfileResponse, ChaincodeError> {
    reg.read::<Warehouse>(&keys::warehouse_key(input.w_id)?)?;
    let mut delivered = Vec::new();
    let mut skipped_districts = Vec::new();
    for d_id in 1..=DISTRICTS_PER_WAREHOUSE {
        let oldest: Vec<NewOrder> = reg.read_range(&keys::new_order_prefix(input.w_id, d_id)?, Some(1), Direction::Forward)?;
        let Some(new_order) = oldest.into_iter().next() else {
            skipped_districts.push(d_id);
            continue;
        };
        reg.delete(&new_order)?;

        let mut order: Order = reg.read(&keys::order_key(input.w_id, d_id, new_order.no_c_id, new_order.no_o_id)?)?;
        order.o_carrier_id = Some(input.o_carrier_id);
        reg.update(&order)?;

        let lines: Vec<OrderLine> = reg.read_range(&keys::order_line_prefix(input.w_id, d_id, order.o_id)?, None, Direction::Forward)?;
        let mut amount: Money = 0;
        for mut line in lines {
            amount += line.ol_amount;
            line.ol_delivery_d = Some(input.ol_delivery_d);
            reg.update(&line)?;
        }

        let mut customer: Customer = reg.read(&keys::customer_key(input.w_id, d_id, order.o_c_id)?)?;
        customer.c_balance += amount;
        customer.c_delivery_cnt += 1;
        reg.update(&customer)?;
        delivered.push(DeliveredOrder { d_id, o_id: order.o_id, c_id: order.o_c_id, amount });
    }
    Ok(ProfileResponse::Delivery { w_id: input.w_id, o_carrier_id: input.o_carrier_id, delivered, skipped_districts })
}

pub(super) fn stock_level(reg: &mut Registry<'_>, input: &StockLevelInput) -> Result<ProfileResponse, ChaincodeError> {
    let district: District = reg.read(&keys::district_key(input.w_id, input.d_id)?)?;
    let next = district.d_next_o_id;
    let from = next.saturating_sub(STOCK_LEVEL_ORDERS).max(1);
    let (start, end) = keys::order_line_span(input.w_id, input.d_id, from, next)?;
    let lines: Vec<OrderLine> = reg.read_span(&start, &end, None, Direction::Forward)?;
    let items: BTreeSet<u32> = lines.iter().map(|l| l.ol_i_id).collect();
    let mut low_stock = 0;
    for i_id in items {
        let stock: Stock = reg.read(&keys::stock_key(input.w_id, i_id)?)?;
        if stock.s_quantity < input.threshold {
            low_stock += 1;
        }
    }
    Ok(ProfileResponse::StockLevel { w_id: input.w_id, d_id: input.d_id, threshold: input.threshold, low_stock })
}
