//! Per-transaction input generation.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::random::{last_name, uniform, uniform_u32};
use super::{nurand, DomainError, Money, NurandConstants, DISTRICTS_PER_WAREHOUSE, ITEM_COUNT, UNUSED_ITEM_ID};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ProfileType {
    NewOrder,
    Payment,
    OrderStatus,
    Delivery,
    StockLevel,
}

impl ProfileType {
    pub const ALL: [ProfileType; 5] =
        [ProfileType::NewOrder, ProfileType::Payment, ProfileType::OrderStatus, ProfileType::Delivery, ProfileType::StockLevel];

    /// Contract function name.
    pub fn function_name(self) -> &'static str {
        match self {
            ProfileType::NewOrder => "newOrder",
            ProfileType::Payment => "payment",
            ProfileType::OrderStatus => "orderStatus",
            ProfileType::Delivery => "delivery",
            ProfileType::StockLevel => "stockLevel",
        }
    }

    pub fn from_function_name(name: &str) -> Option<Self> {
        ProfileType::ALL.into_iter().find(|p| p.function_name() == name)
    }

    pub fn is_read_only(self) -> bool {
        matches!(self, ProfileType::OrderStatus | ProfileType::StockLevel)
    }
}

impl fmt::Display for ProfileType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProfileType::NewOrder => "new_order",
            ProfileType::Payment => "payment",
            ProfileType::OrderStatus => "order_status",
            ProfileType::Delivery => "delivery",
            ProfileType::StockLevel => "stock_level",
        })
    }
}

impl FromStr for ProfileType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        ProfileType::ALL.into_iter().find(|p| p.to_string() == s).ok_or_else(|| format!("unknown profile `{s}`"))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CustomerSelector {
    ById(u32),
    ByLastName(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewOrderLine {
    pub i_id: u32,
    pub supply_w_id: u32,
    pub quantity: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewOrderInput {
    pub w_id: u32,
    pub d_id: u32,
    pub c_id: u32,
    pub o_entry_d: u64,
    pub lines: Vec<NewOrderLine>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaymentInput {
    pub w_id: u32,
    pub d_id: u32,
    pub c_w_id: u32,
    pub c_d_id: u32,
    pub customer: CustomerSelector,
    pub h_amount: Money,
    pub h_date: u64,
    pub client_id: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderStatusInput {
    pub w_id: u32,
    pub d_id: u32,
    pub customer: CustomerSelector,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeliveryInput {
    pub w_id: u32,
    pub o_carrier_id: u32,
    pub ol_delivery_d: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StockLevelInput {
    pub w_id: u32,
    pub d_id: u32,
    pub threshold: i32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProfileInput {
    NewOrder(NewOrderInput),
    Payment(PaymentInput),
    OrderStatus(OrderStatusInput),
    Delivery(DeliveryInput),
    StockLevel(StockLevelInput),
}

impl ProfileInput {
    pub fn profile(&self) -> ProfileType {
        match self {
            ProfileInput::NewOrder(_) => ProfileType::NewOrder,
            ProfileInput::Payment(_) => ProfileType::Payment,
            ProfileInput::OrderStatus(_) => ProfileType::OrderStatus,
            ProfileInput::Delivery(_) => ProfileType::Delivery,
            ProfileInput::StockLevel(_) => ProfileType::StockLevel,
        }
    }
}

/// A terminal's fixed home warehouse and district.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TerminalHome {
    pub w_id: u32,
    pub d_id: u32,
}

/// Stateless argument generator; one per terminal, sharing the run constants.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputGenerator {
    pub warehouse_count: u32,
    pub constants: NurandConstants,
}

impl InputGenerator {
    pub fn new(warehouse_count: u32, constants: NurandConstants) -> Self {
        InputGenerator { warehouse_count, constants }
    }

    /// Arguments for `profile`, stamped with the submitting terminal's clock
    /// reading `now` and identity `client_id`.
    pub fn generate<R: Rng + ?Sized>(
        &self,
        profile: ProfileType,
        home: TerminalHome,
        now: u64,
        client_id: &str,
        rng: &mut R,
    ) -> Result<ProfileInput, DomainError> {
        if home.w_id == 0 || home.w_id > self.warehouse_count {
            return Err(DomainError::HomeOutOfRange { home: home.w_id, count: self.warehouse_count });
        }
        Ok(match profile {
            ProfileType::NewOrder => ProfileInput::NewOrder(self.new_order(home, now, rng)),
            ProfileType::Payment => ProfileInput::Payment(self.payment(home, now, client_id, rng)),
            ProfileType::OrderStatus => ProfileInput::OrderStatus(OrderStatusInput {
                w_id: home.w_id,
                d_id: uniform_u32(rng, 1, DISTRICTS_PER_WAREHOUSE),
                customer: self.customer_selector(rng),
            }),
            ProfileType::Delivery => {
                ProfileInput::Delivery(DeliveryInput { w_id: home.w_id, o_carrier_id: uniform_u32(rng, 1, 10), ol_delivery_d: now })
            }
            ProfileType::StockLevel => {
                ProfileInput::StockLevel(StockLevelInput { w_id: home.w_id, d_id: home.d_id, threshold: uniform(rng, 10, 20) as i32 })
            }
        })
    }

    fn new_order<R: Rng + ?Sized>(&self, home: TerminalHome, now: u64, rng: &mut R) -> NewOrderInput {
        let d_id = uniform_u32(rng, 1, DISTRICTS_PER_WAREHOUSE);
        let c_id = nurand(1023, 1, 3000, self.constants.c_id, rng).expect("static range") as u32;
        let line_count = uniform_u32(rng, 5, 15) as usize;
        let rollback = uniform(rng, 1, 100) == 1;
        let mut lines: Vec<NewOrderLine> = Vec::with_capacity(line_count);
        while lines.len() < line_count {
            let i_id = nurand(8191, 1, ITEM_COUNT as u64, self.constants.c_ol_i_id, rng).expect("static range") as u32;
            if lines.iter().any(|l| l.i_id == i_id) {
                continue;
            }
            let supply_w_id = if self.warehouse_count > 1 && uniform(rng, 1, 100) == 1 {
                self.other_warehouse(home.w_id, rng)
            } else {
                home.w_id
            };
            lines.push(NewOrderLine { i_id, supply_w_id, quantity: uniform_u32(rng, 1, 10) });
        }
        if rollback {
            lines.last_mut().expect("at least five lines").i_id = UNUSED_ITEM_ID;
        }
        NewOrderInput { w_id: home.w_id, d_id, c_id, o_entry_d: now, lines }
    }

    fn payment<R: Rng + ?Sized>(&self, home: TerminalHome, now: u64, client_id: &str, rng: &mut R) -> PaymentInput {
        let d_id = uniform_u32(rng, 1, DISTRICTS_PER_WAREHOUSE);
        let (c_w_id, c_d_id) = if self.warehouse_count > 1 && uniform(rng, 1, 100) > 85 {
            (self.other_warehouse(home.w_id, rng), uniform_u32(rng, 1, DISTRICTS_PER_WAREHOUSE))
        } else {
            (home.w_id, d_id)
        };
        PaymentInput {
            w_id: home.w_id,
            d_id,
            c_w_id,
            c_d_id,
            customer: self.customer_selector(rng),
            h_amount: uniform(rng, 100, 500_000) as Money,
            h_date: now,
            client_id: client_id.to_string(),
        }
    }

    /// 60% by last name, 40% by id.
    fn customer_selector<R: Rng + ?Sized>(&self, rng: &mut R) -> CustomerSelector {
        if uniform(rng, 1, 100) <= 60 {
            CustomerSelector::ByLastName(last_name(nurand(255, 0, 999, self.constants.c_last, rng).expect("static range")))
        } else {
            CustomerSelector::ById(nurand(1023, 1, 3000, self.constants.c_id, rng).expect("static range") as u32)
        }
    }

    fn other_warehouse<R: Rng + ?Sized>(&self, home: u32, rng: &mut R) -> u32 {
        let pick = uniform_u32(rng, 1, self.warehouse_count - 1);
        if pick >= home {
            pick + 1
        } else {
            pick
        }
    }
}
