//! Typed CRUD over the chaincode stub: each entity knows its key, values are
//! canonical JSON in field order.

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use crate::domain::{Customer, District, History, Item, NewOrder, Order, OrderLine, Row, Stock, Warehouse};
use crate::keys::{self, CompositeKey, KeyError};
use crate::ledger::{ChaincodeStub, Direction};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RegistryError {
    #[error("{0} not found")]
    NotFound(String),
    #[error("{0} already exists")]
    AlreadyExists(String),
    #[error(transparent)]
    Key(#[from] KeyError),
    #[error("cannot decode {key}: {message}")]
    Decode { key: String, message: String },
}

pub trait Entity: Serialize + DeserializeOwned {
    const TABLE: &'static str;

    fn key(&self) -> Result<CompositeKey, KeyError>;

    /// Value-less secondary keys maintained alongside the primary row.
    fn index_keys(&self) -> Result<Vec<CompositeKey>, KeyError> {
        Ok(Vec::new())
    }
}

impl Entity for Warehouse {
    const TABLE: &'static str = keys::tables::WAREHOUSE;
    fn key(&self) -> Result<CompositeKey, KeyError> {
        keys::warehouse_key(self.w_id)
    }
}

impl Entity for District {
    const TABLE: &'static str = keys::tables::DISTRICT;
    fn key(&self) -> Result<CompositeKey, KeyError> {
        keys::district_key(self.d_w_id, self.d_id)
    }
}

impl Entity for Customer {
    const TABLE: &'static str = keys::tables::CUSTOMER;
    fn key(&self) -> Result<CompositeKey, KeyError> {
        keys::customer_key(self.c_w_id, self.c_d_id, self.c_id)
    }
    fn index_keys(&self) -> Result<Vec<CompositeKey>, KeyError> {
        Ok(vec![keys::customer_last_name_key(self.c_w_id, self.c_d_id, &self.c_last, self.c_id)?])
    }
}

impl Entity for History {
    const TABLE: &'static str = keys::tables::HISTORY;
    fn key(&self) -> Result<CompositeKey, KeyError> {
        keys::history_key(self.h_c_w_id, self.h_c_d_id, self.h_c_id, self.h_date, &self.h_client_id)
    }
}

impl Entity for Item {
    const TABLE: &'static str = keys::tables::ITEM;
    fn key(&self) -> Result<CompositeKey, KeyError> {
        keys::item_key(self.i_id)
    }
}

impl Entity for Stock {
    const TABLE: &'static str = keys::tables::STOCK;
    fn key(&self) -> Result<CompositeKey, KeyError> {
        keys::stock_key(self.s_w_id, self.s_i_id)
    }
}

impl Entity for Order {
    const TABLE: &'static str = keys::tables::ORDER;
    fn key(&self) -> Result<CompositeKey, KeyError> {
        keys::order_key(self.o_w_id, self.o_d_id, self.o_c_id, self.o_id)
    }
}

impl Entity for NewOrder {
    const TABLE: &'static str = keys::tables::NEW_ORDER;
    fn key(&self) -> Result<CompositeKey, KeyError> {
        keys::new_order_key(self.no_w_id, self.no_d_id, self.no_o_id)
    }
}

impl Entity for OrderLine {
    const TABLE: &'static str = keys::tables::ORDER_LINE;
    fn key(&self) -> Result<CompositeKey, KeyError> {
        keys::order_line_key(self.ol_w_id, self.ol_d_id, self.ol_o_id, self.ol_number)
    }
}

pub fn encode<E: Entity>(entity: &E) -> Vec<u8> {
    serde_json::to_vec(entity).expect("entities serialize")
}

pub fn decode<E: Entity>(key: &str, bytes: &[u8]) -> Result<E, RegistryError> {
    serde_json::from_slice(bytes).map_err(|e| RegistryError::Decode { key: key.to_string(), message: e.to_string() })
}

/// Encoded `(key, value)` pairs a row occupies, index entries included.
pub fn row_entries(row: &Row) -> Result<Vec<(String, Vec<u8>)>, KeyError> {
    fn entries<E: Entity>(e: &E) -> Result<Vec<(String, Vec<u8>)>, KeyError> {
        let mut out = vec![(e.key()?.encode(), encode(e))];
        for index in e.index_keys()? {
            out.push((index.encode(), Vec::new()));
        }
        Ok(out)
    }
    match row {
        Row::Warehouse(e) => entries(e),
        Row::District(e) => entries(e),
        Row::Customer(e) => entries(e),
        Row::History(e) => entries(e),
        Row::Item(e) => entries(e),
        Row::Stock(e) => entries(e),
        Row::Order(e) => entries(e),
        Row::NewOrder(e) => entries(e),
        Row::OrderLine(e) => entries(e),
    }
}

/// Registry façade bound to one transaction's stub.
pub struct Registry<'a> {
    stub: &'a mut dyn ChaincodeStub,
}

impl<'a> Registry<'a> {
    pub fn new(stub: &'a mut dyn ChaincodeStub) -> Self {
        Registry { stub }
    }

    /// Fails if the primary key is already present.
    pub fn create<E: Entity>(&mut self, entity: &E) -> Result<(), RegistryError> {
        let key = entity.key()?;
        let encoded = key.encode();
        if self.stub.get_state(&encoded).is_some() {
            return Err(RegistryError::AlreadyExists(key.to_string()));
        }
        self.stub.put_state(&encoded, encode(entity));
        for index in entity.index_keys()? {
            self.stub.put_state(&index.encode(), Vec::new());
        }
        Ok(())
    }

    pub fn create_row(&mut self, row: &Row) -> Result<(), RegistryError> {
        match row {
            Row::Warehouse(e) => self.create(e),
            Row::District(e) => self.create(e),
            Row::Customer(e) => self.create(e),
            Row::History(e) => self.create(e),
            Row::Item(e) => self.create(e),
            Row::Stock(e) => self.create(e),
            Row::Order(e) => self.create(e),
            Row::NewOrder(e) => self.create(e),
            Row::OrderLine(e) => self.create(e),
        }
    }

    pub fn read<E: Entity>(&mut self, key: &CompositeKey) -> Result<E, RegistryError> {
        self.try_read(key)?.ok_or_else(|| RegistryError::NotFound(key.to_string()))
    }

    pub fn try_read<E: Entity>(&mut self, key: &CompositeKey) -> Result<Option<E>, RegistryError> {
        let encoded = key.encode();
        self.stub.get_state(&encoded).map(|bytes| decode(&encoded, &bytes)).transpose()
    }

    /// Overwrites the entity's row; index keys are assumed unchanged.
    pub fn update<E: Entity>(&mut self, entity: &E) -> Result<(), RegistryError> {
        self.stub.put_state(&entity.key()?.encode(), encode(entity));
        Ok(())
    }

    pub fn delete<E: Entity>(&mut self, entity: &E) -> Result<(), RegistryError> {
        self.stub.delete_state(&entity.key()?.encode());
        for index in entity.index_keys()? {
            self.stub.delete_state(&index.encode());
        }
        Ok(())
    }

    /// Entities under `partial`, in key order (or reverse), at most `limit`.
    pub fn read_range<E: Entity>(&mut self, partial: &CompositeKey, limit: Option<usize>, direction: Direction) -> Result<Vec<E>, RegistryError> {
        let (start, end) = partial.range();
        self.read_span(&start, &end, limit, direction)
    }

    pub fn read_span<E: Entity>(&mut self, start: &str, end: &str, limit: Option<usize>, direction: Direction) -> Result<Vec<E>, RegistryError> {
        self.stub.get_state_range(start, end, limit, direction).into_iter().map(|(k, v)| decode(&k, &v)).collect()
    }

    /// Keys under `partial`; used for value-less index entries.
    pub fn scan_keys(&mut self, partial: &CompositeKey, limit: Option<usize>) -> Result<Vec<CompositeKey>, RegistryError> {
        let (start, end) = partial.range();
        self.stub
            .get_state_range(&start, &end, limit, Direction::Forward)
            .into_iter()
            .map(|(k, _)| CompositeKey::decode(&k).map_err(RegistryError::from))
            .collect()
    }

    /// Customer ids sharing a last name within a district, ascending.
    pub fn customers_by_last_name(&mut self, w_id: u32, d_id: u32, c_last: &str) -> Result<Vec<u32>, RegistryError> {
        let prefix = keys::customer_last_name_prefix(w_id, d_id, c_last)?;
        self.scan_keys(&prefix, None)?
            .into_iter()
            .map(|k| {
                let last = k.parts().last().cloned().unwrap_or_default();
                last.parse::<u32>().map_err(|_| RegistryError::Decode { key: k.to_string(), message: "bad customer id".into() })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Credit;
    use crate::ledger::{TxContext, Version, WorldState};
    use std::sync::Arc;

    fn customer(c_id: u32, last: &str) -> Customer {
        Customer {
            c_w_id: 1,
            c_d_id: 1,
            c_id,
            c_first: format!("F{c_id}"),
            c_middle: "OE".into(),
            c_last: last.into(),
            c_street_1: String::new(),
            c_street_2: String::new(),
            c_city: String::new(),
            c_state: "XX".into(),
            c_zip: "123411111".into(),
            c_phone: "0".into(),
            c_since: 0,
            c_credit: Credit::Good,
            c_credit_lim: 5_000_000,
            c_discount: 0,
            c_balance: -1000,
            c_ytd_payment: 1000,
            c_payment_cnt: 1,
            c_delivery_cnt: 0,
            c_data: String::new(),
        }
    }

    fn order(c_id: u32, o_id: u32) -> Order {
        Order { o_w_id: 1, o_d_id: 1, o_id, o_c_id: c_id, o_entry_d: 0, o_carrier_id: None, o_ol_cnt: 5, o_all_local: true }
    }

    fn commit(state: &mut WorldState, rw: crate::ledger::ReadWriteSet) {
        rw.apply(state, Version::new(state.height(), 0));
        let h = state.height();
        state.set_height(h + 1);
    }

    #[test]
    fn create_read_round_trip_and_duplicate() {
        let state = WorldState::new();
        let mut ctx = TxContext::new(&state);
        let mut reg = Registry::new(&mut ctx);
        let c = customer(7, "BARBAR");
        reg.create(&c).unwrap();
        assert_eq!(reg.read::<Customer>(&c.key().unwrap()).unwrap(), c);
        assert!(matches!(reg.create(&c), Err(RegistryError::AlreadyExists(_))));
        assert!(matches!(reg.read::<Customer>(&keys::customer_key(1, 1, 8).unwrap()), Err(RegistryError::NotFound(_))));
        assert_eq!(reg.read_range::<Order>(&keys::order_prefix(1, 1, 7).unwrap(), None, Direction::Forward).unwrap(), vec![]);
    }

    #[test]
    fn last_name_index() {
        let mut state = WorldState::new();
        let mut ctx = TxContext::new(&state);
        let mut reg = Registry::new(&mut ctx);
        for (id, name) in [(3, "BARBAR"), (1, "BARBAR"), (2, "BAR"), (4, "BARBARA")] {
            reg.create(&customer(id, name)).unwrap();
        }
        let rw = ctx.finish().0;
        commit(&mut state, rw);
        let mut ctx = TxContext::new(&state);
        let mut reg = Registry::new(&mut ctx);
        assert_eq!(reg.customers_by_last_name(1, 1, "BARBAR").unwrap(), vec![1, 3]);
        assert_eq!(reg.customers_by_last_name(1, 1, "BAR").unwrap(), vec![2]);
        assert!(reg.customers_by_last_name(1, 1, "NONEXISTENT").unwrap().is_empty());
    }

    #[test]
    fn customer_scan_yields_newest_order_first() {
        let mut state = WorldState::new();
        let mut ctx = TxContext::new(&state);
        let mut reg = Registry::new(&mut ctx);
        for o in [3, 17, 9] {
            reg.create(&order(5, o)).unwrap();
        }
        reg.create(&order(6, 40)).unwrap();
        let rw = ctx.finish().0;
        commit(&mut state, rw);
        let mut ctx = TxContext::new(&state);
        let mut reg = Registry::new(&mut ctx);
        let newest: Vec<Order> = reg.read_range(&keys::order_prefix(1, 1, 5).unwrap(), Some(1), Direction::Forward).unwrap();
        assert_eq!(newest[0].o_id, 17);
        let all: Vec<Order> = reg.read_range(&keys::order_prefix(1, 1, 5).unwrap(), None, Direction::Forward).unwrap();
        assert_eq!(all.iter().map(|o| o.o_id).collect::<Vec<_>>(), [17, 9, 3]);
        // Stored values keep the real id.
        let (_, rw_stats) = ctx.finish();
        assert_eq!(rw_stats.range_read_count, 2);
    }

    #[test]
    fn range_equals_filtered_full_scan() {
        let mut state = WorldState::new();
        for o in 1..=50u32 {
            let ol = OrderLine {
                ol_w_id: 1,
                ol_d_id: 1 + o % 3,
                ol_o_id: o,
                ol_number: 1,
                ol_i_id: o,
                ol_supply_w_id: 1,
                ol_delivery_d: None,
                ol_quantity: 5,
                ol_amount: 0,
                ol_dist_info: String::new(),
            };
            state.apply(&ol.key().unwrap().encode(), Some(Arc::from(encode(&ol))), Version::new(1, o));
        }
        let mut ctx = TxContext::new(&state);
        let mut reg = Registry::new(&mut ctx);
        let partial = CompositeKey::new(keys::tables::ORDER_LINE).unwrap().number(1, keys::W_ID_WIDTH).unwrap().number(2, keys::D_ID_WIDTH).unwrap();
        let got: Vec<OrderLine> = reg.read_range(&partial, None, Direction::Forward).unwrap();
        let mut expected: Vec<OrderLine> = state.iter().map(|(k, e)| decode::<OrderLine>(k, &e.value).unwrap()).filter(|l| l.ol_d_id == 2).collect();
        expected.sort_by_key(|l| l.ol_o_id);
        assert_eq!(got, expected);
    }
}
