//! TPC-C entities and the random generators used to populate and drive them.
//!
//! Money is stored as integer cents and rates (taxes, discounts) as integer
//! basis points, so every value has one exact textual rendering.

mod input;
mod nurand;
mod population;
pub mod random;

pub use input::{
    CustomerSelector, DeliveryInput, InputGenerator, NewOrderInput, NewOrderLine,
    OrderStatusInput, PaymentInput, ProfileInput, ProfileType, StockLevelInput, TerminalHome,
};
pub use nurand::{nurand, NurandConstants};
pub use population::{Population, PopulationCounts};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DISTRICTS_PER_WAREHOUSE: u32 = 10;
pub const CUSTOMERS_PER_DISTRICT: u32 = 3_000;
pub const ORDERS_PER_DISTRICT: u32 = 3_000;
pub const ITEM_COUNT: u32 = 100_000;
/// Orders with ids at or above this value start out undelivered.
pub const FIRST_UNDELIVERED_ORDER: u32 = 2_101;
pub const NEW_ORDERS_PER_DISTRICT: u32 = ORDERS_PER_DISTRICT - FIRST_UNDELIVERED_ORDER + 1;
/// An item id that is never loaded; New Order uses it to force a rollback.
pub const UNUSED_ITEM_ID: u32 = ITEM_COUNT + 1;

/// Cents.
pub type Money = i64;
/// Hundredths of a percent: 10_000 == 1.0.
pub type BasisPoints = i64;
pub const BASIS_POINTS_ONE: BasisPoints = 10_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DomainError {
    #[error("invalid range [{low}, {high}]")]
    InvalidRange { low: u64, high: u64 },
    #[error("home warehouse {home} outside 1..={count}")]
    HomeOutOfRange { home: u32, count: u32 },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Warehouse {
    pub w_id: u32,
    pub w_name: String,
    pub w_street_1: String,
    pub w_street_2: String,
    pub w_city: String,
    pub w_state: String,
    pub w_zip: String,
    pub w_tax: BasisPoints,
    pub w_ytd: Money,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct District {
    pub d_w_id: u32,
    pub d_id: u32,
    pub d_name: String,
    pub d_street_1: String,
    pub d_street_2: String,
    pub d_city: String,
    pub d_state: String,
    pub d_zip: String,
    pub d_tax: BasisPoints,
    pub d_ytd: Money,
    pub d_next_o_id: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Credit {
    #[serde(rename = "GC")]
    Good,
    #[serde(rename = "BC")]
    Bad,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Customer {
    pub c_w_id: u32,
    pub c_d_id: u32,
    pub c_id: u32,
    pub c_first: String,
    pub c_middle: String,
    pub c_last: String,
    pub c_street_1: String,
    pub c_street_2: String,
    pub c_city: String,
    pub c_state: String,
    pub c_zip: String,
    pub c_phone: String,
    pub c_since: u64,
    pub c_credit: Credit,
    pub c_credit_lim: Money,
    pub c_discount: BasisPoints,
    pub c_balance: Money,
    pub c_ytd_payment: Money,
    pub c_payment_cnt: u32,
    pub c_delivery_cnt: u32,
    pub c_data: String,
}

/// A payment record. TPC-C gives history rows no primary key; the row carries
/// the submitting client's id so `(customer, h_date, h_client_id)` is unique.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct History {
    pub h_c_id: u32,
    pub h_c_d_id: u32,
    pub h_c_w_id: u32,
    pub h_d_id: u32,
    pub h_w_id: u32,
    pub h_date: u64,
    pub h_amount: Money,
    pub h_data: String,
    pub h_client_id: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Item {
    pub i_id: u32,
    pub i_im_id: u32,
    pub i_name: String,
    pub i_price: Money,
    pub i_data: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stock {
    pub s_w_id: u32,
    pub s_i_id: u32,
    pub s_quantity: i32,
    /// `s_dist_01` .. `s_dist_10`.
    pub s_dist: Vec<String>,
    pub s_ytd: i64,
    pub s_order_cnt: u32,
    pub s_remote_cnt: u32,
    pub s_data: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Order {
    pub o_w_id: u32,
    pub o_d_id: u32,
    pub o_id: u32,
    pub o_c_id: u32,
    pub o_entry_d: u64,
    pub o_carrier_id: Option<u32>,
    pub o_ol_cnt: u32,
    pub o_all_local: bool,
}

/// Marker for an undelivered order. `no_c_id` lets Delivery reach the
/// customer-scoped order key without scanning.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewOrder {
    pub no_w_id: u32,
    pub no_d_id: u32,
    pub no_o_id: u32,
    pub no_c_id: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderLine {
    pub ol_w_id: u32,
    pub ol_d_id: u32,
    pub ol_o_id: u32,
    pub ol_number: u32,
    pub ol_i_id: u32,
    pub ol_supply_w_id: u32,
    pub ol_delivery_d: Option<u64>,
    pub ol_quantity: u32,
    pub ol_amount: Money,
    pub ol_dist_info: String,
}

/// Any loadable row.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "table")]
pub enum Row {
    Warehouse(Warehouse),
    District(District),
    Customer(Customer),
    History(History),
    Item(Item),
    Stock(Stock),
    Order(Order),
    NewOrder(NewOrder),
    OrderLine(OrderLine),
}

impl Row {
    pub fn table(&self) -> &'static str {
        match self {
            Row::Warehouse(_) => "WAREHOUSE",
            Row::District(_) => "DISTRICT",
            Row::Customer(_) => "CUSTOMER",
            Row::History(_) => "HISTORY",
            Row::Item(_) => "ITEM",
            Row::Stock(_) => "STOCK",
            Row::Order(_) => "ORDER",
            Row::NewOrder(_) => "NEW_ORDER",
            Row::OrderLine(_) => "ORDER_LINE",
        }
    }
}

/// `amount * rate`, rounded half away from zero to whole cents.
pub fn apply_rate(amount: Money, rate: BasisPoints) -> Money {
    let product = amount as i128 * rate as i128;
    let half = BASIS_POINTS_ONE as i128 / 2;
    let rounded = if product >= 0 { (product + half) / BASIS_POINTS_ONE as i128 } else { (product - half) / BASIS_POINTS_ONE as i128 };
    rounded as Money
}
