//! Initial database population at TPC-C cardinalities.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::random::{astring, data_with_original, last_name, nstring, state, uniform, uniform_u32, zip};
use super::*;

const ITEM_CHUNK: u32 = 5_000;
const STOCK_CHUNK: u32 = 5_000;

/// Row counts by table.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PopulationCounts {
    pub warehouses: u64,
    pub districts: u64,
    pub customers: u64,
    pub history: u64,
    pub items: u64,
    pub stock: u64,
    pub orders: u64,
    pub new_orders: u64,
    pub order_lines: u64,
}

impl PopulationCounts {
    pub fn record(&mut self, row: &Row) {
        match row {
            Row::Warehouse(_) => self.warehouses += 1,
            Row::District(_) => self.districts += 1,
            Row::Customer(_) => self.customers += 1,
            Row::History(_) => self.history += 1,
            Row::Item(_) => self.items += 1,
            Row::Stock(_) => self.stock += 1,
            Row::Order(_) => self.orders += 1,
            Row::NewOrder(_) => self.new_orders += 1,
            Row::OrderLine(_) => self.order_lines += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.non_item() + self.items
    }

    /// Every row except the global item catalogue.
    pub fn non_item(&self) -> u64 {
        self.warehouses + self.districts + self.customers + self.history + self.stock + self.orders + self.new_orders + self.order_lines
    }
}

#[derive(Clone, Copy, Debug)]
enum Segment {
    Items { from: u32 },
    Warehouse { w_id: u32 },
    Stock { w_id: u32, from: u32 },
    District { w_id: u32, d_id: u32 },
    Done,
}

/// Deterministic stream of every initial row for `warehouse_count`
/// warehouses. The stream is a pure function of `(warehouse_count, seed)`.
pub struct Population {
    warehouse_count: u32,
    constants: NurandConstants,
    load_time: u64,
    rng: ChaCha8Rng,
    next: Segment,
    buffer: VecDeque<Row>,
}

impl Population {
    pub fn new(warehouse_count: u32, seed: u64, constants: NurandConstants) -> Self {
        let next = if warehouse_count == 0 { Segment::Done } else { Segment::Items { from: 1 } };
        Population { warehouse_count, constants, load_time: 0, rng: ChaCha8Rng::seed_from_u64(seed), next, buffer: VecDeque::new() }
    }

    /// Virtual timestamp written into date fields.
    pub fn with_load_time(mut self, load_time: u64) -> Self {
        self.load_time = load_time;
        self
    }

    /// Exact row counts the stream will produce, except order lines, which
    /// are random (5..=15 per order).
    pub fn expected_fixed_counts(warehouse_count: u32) -> PopulationCounts {
        let w = warehouse_count as u64;
        let districts = w * DISTRICTS_PER_WAREHOUSE as u64;
        PopulationCounts {
            warehouses: w,
            districts,
            customers: districts * CUSTOMERS_PER_DISTRICT as u64,
            history: districts * CUSTOMERS_PER_DISTRICT as u64,
            items: if w == 0 { 0 } else { ITEM_COUNT as u64 },
            stock: w * ITEM_COUNT as u64,
            orders: districts * ORDERS_PER_DISTRICT as u64,
            new_orders: districts * NEW_ORDERS_PER_DISTRICT as u64,
            order_lines: 0,
        }
    }

    fn fill(&mut self) {
        match self.next {
            Segment::Items { from } => {
                let to = (from + ITEM_CHUNK - 1).min(ITEM_COUNT);
                for i_id in from..=to {
                    let item = self.item(i_id);
                    self.buffer.push_back(Row::Item(item));
                }
                self.next = if to == ITEM_COUNT { Segment::Warehouse { w_id: 1 } } else { Segment::Items { from: to + 1 } };
            }
            Segment::Warehouse { w_id } => {
                let warehouse = self.warehouse(w_id);
                self.buffer.push_back(Row::Warehouse(warehouse));
                self.next = Segment::Stock { w_id, from: 1 };
            }
            Segment::Stock { w_id, from } => {
                let to = (from + STOCK_CHUNK - 1).min(ITEM_COUNT);
                for i_id in from..=to {
                    let stock = self.stock(w_id, i_id);
                    self.buffer.push_back(Row::Stock(stock));
                }
                self.next = if to == ITEM_COUNT { Segment::District { w_id, d_id: 1 } } else { Segment::Stock { w_id, from: to + 1 } };
            }
            Segment::District { w_id, d_id } => {
                self.district(w_id, d_id);
                self.next = if d_id < DISTRICTS_PER_WAREHOUSE {
                    Segment::District { w_id, d_id: d_id + 1 }
                } else if w_id < self.warehouse_count {
                    Segment::Warehouse { w_id: w_id + 1 }
                } else {
                    Segment::Done
                };
            }
            Segment::Done => {}
        }
    }

    fn item(&mut self, i_id: u32) -> Item {
        let rng = &mut self.rng;
        Item {
            i_id,
            i_im_id: uniform_u32(rng, 1, 10_000),
            i_name: astring(rng, 14, 24),
            i_price: uniform(rng, 100, 10_000) as Money,
            i_data: data_with_original(rng),
        }
    }

    fn warehouse(&mut self, w_id: u32) -> Warehouse {
        let rng = &mut self.rng;
        Warehouse {
            w_id,
            w_name: astring(rng, 6, 10),
            w_street_1: astring(rng, 10, 20),
            w_street_2: astring(rng, 10, 20),
            w_city: astring(rng, 10, 20),
            w_state: state(rng),
            w_zip: zip(rng),
            w_tax: uniform(rng, 0, 2_000) as BasisPoints,
            w_ytd: 30_000_000,
        }
    }

    fn stock(&mut self, w_id: u32, i_id: u32) -> Stock {
        let rng = &mut self.rng;
        Stock {
            s_w_id: w_id,
            s_i_id: i_id,
            s_quantity: uniform(rng, 10, 100) as i32,
            s_dist: (0..DISTRICTS_PER_WAREHOUSE).map(|_| astring(rng, 24, 24)).collect(),
            s_ytd: 0,
            s_order_cnt: 0,
            s_remote_cnt: 0,
            s_data: data_with_original(rng),
        }
    }

    fn district(&mut self, w_id: u32, d_id: u32) {
        let now = self.load_time;
        let c_last_constant = self.constants.c_last;
        let rng = &mut self.rng;
        self.buffer.push_back(Row::District(District {
            d_w_id: w_id,
            d_id,
            d_name: astring(rng, 6, 10),
            d_street_1: astring(rng, 10, 20),
            d_street_2: astring(rng, 10, 20),
            d_city: astring(rng, 10, 20),
            d_state: state(rng),
            d_zip: zip(rng),
            d_tax: uniform(rng, 0, 2_000) as BasisPoints,
            d_ytd: 3_000_000,
            d_next_o_id: ORDERS_PER_DISTRICT + 1,
        }));

        for c_id in 1..=CUSTOMERS_PER_DISTRICT {
            let name_number = if c_id <= 1_000 {
                (c_id - 1) as u64
            } else {
                nurand(255, 0, 999, c_last_constant, rng).expect("static range")
            };
            let customer = Customer {
                c_w_id: w_id,
                c_d_id: d_id,
                c_id,
                c_first: astring(rng, 8, 16),
                c_middle: "OE".to_string(),
                c_last: last_name(name_number),
                c_street_1: astring(rng, 10, 20),
                c_street_2: astring(rng, 10, 20),
                c_city: astring(rng, 10, 20),
                c_state: state(rng),
                c_zip: zip(rng),
                c_phone: nstring(rng, 16, 16),
                c_since: now,
                c_credit: if uniform(rng, 1, 100) <= 10 { Credit::Bad } else { Credit::Good },
                c_credit_lim: 5_000_000,
                c_discount: uniform(rng, 0, 5_000) as BasisPoints,
                c_balance: -1_000,
                c_ytd_payment: 1_000,
                c_payment_cnt: 1,
                c_delivery_cnt: 0,
                c_data: astring(rng, 300, 500),
            };
            let history = History {
                h_c_id: c_id,
                h_c_d_id: d_id,
                h_c_w_id: w_id,
                h_d_id: d_id,
                h_w_id: w_id,
                h_date: now,
                h_amount: 1_000,
                h_data: astring(rng, 12, 24),
                h_client_id: "loader".to_string(),
            };
            self.buffer.push_back(Row::Customer(customer));
            self.buffer.push_back(Row::History(history));
        }

        let mut customer_ids: Vec<u32> = (1..=CUSTOMERS_PER_DISTRICT).collect();
        customer_ids.shuffle(rng);
        for o_id in 1..=ORDERS_PER_DISTRICT {
            let delivered = o_id < FIRST_UNDELIVERED_ORDER;
            let o_c_id = customer_ids[(o_id - 1) as usize];
            let o_ol_cnt = uniform_u32(rng, 5, 15);
            self.buffer.push_back(Row::Order(Order {
                o_w_id: w_id,
                o_d_id: d_id,
                o_id,
                o_c_id,
                o_entry_d: now,
                o_carrier_id: if delivered { Some(uniform_u32(rng, 1, 10)) } else { None },
                o_ol_cnt,
                o_all_local: true,
            }));
            for ol_number in 1..=o_ol_cnt {
                self.buffer.push_back(Row::OrderLine(OrderLine {
                    ol_w_id: w_id,
                    ol_d_id: d_id,
                    ol_o_id: o_id,
                    ol_number,
                    ol_i_id: uniform_u32(rng, 1, ITEM_COUNT),
                    ol_supply_w_id: w_id,
                    ol_delivery_d: if delivered { Some(now) } else { None },
                    ol_quantity: 5,
                    ol_amount: if delivered { 0 } else { uniform(rng, 1, 999_999) as Money },
                    ol_dist_info: astring(rng, 24, 24),
                }));
            }
            if !delivered {
                self.buffer.push_back(Row::NewOrder(NewOrder { no_w_id: w_id, no_d_id: d_id, no_o_id: o_id, no_c_id: o_c_id }));
            }
        }
    }
}

impl Iterator for Population {
    type Item = Row;

    fn next(&mut self) -> Option<Row> {
        while self.buffer.is_empty() {
            if matches!(self.next, Segment::Done) {
                return None;
            }
            self.fill();
        }
        self.buffer.pop_front()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use sha2::{Digest, Sha256};
    use std::collections::{BTreeMap, BTreeSet};

    fn constants() -> NurandConstants {
        NurandConstants { c_last: 157, c_id: 259, c_ol_i_id: 7911 }
    }

    #[test]
    fn zero_warehouses_is_empty() {
        assert_eq!(Population::new(0, 1, constants()).count(), 0);
    }

    #[test]
    fn one_warehouse_cardinalities() {
        let mut counts = PopulationCounts::default();
        let mut lines_per_order: BTreeMap<(u32, u32), u32> = BTreeMap::new();
        let mut line_counts: BTreeMap<(u32, u32), u32> = BTreeMap::new();
        let mut undelivered = BTreeSet::new();
        let mut new_order_ids = BTreeSet::new();
        for row in Population::new(1, 42, constants()) {
            counts.record(&row);
            match &row {
                Row::Order(o) => {
                    lines_per_order.insert((o.o_d_id, o.o_id), o.o_ol_cnt);
                    assert!((5..=15).contains(&o.o_ol_cnt));
                    if o.o_carrier_id.is_none() {
                        undelivered.insert((o.o_d_id, o.o_id));
                    }
                }
                Row::OrderLine(l) => *line_counts.entry((l.ol_d_id, l.ol_o_id)).or_default() += 1,
                Row::NewOrder(n) => {
                    new_order_ids.insert((n.no_d_id, n.no_o_id));
                }
                Row::Warehouse(w) => assert!((0..=2_000).contains(&w.w_tax)),
                _ => {}
            }
        }
        let mut expected = Population::expected_fixed_counts(1);
        expected.order_lines = counts.order_lines;
        assert_eq!(counts, expected);
        assert_eq!(counts.districts, 10);
        assert_eq!(counts.customers, 30_000);
        assert_eq!(counts.new_orders, 9_000);
        assert_eq!(counts.stock, 100_000);
        assert_eq!(lines_per_order, line_counts);
        assert_eq!(undelivered, new_order_ids);
        let non_item = counts.non_item() as f64;
        assert!((non_item - 500_000.0).abs() / 500_000.0 < 0.05, "non-item rows {non_item}");
    }

    #[test]
    fn stream_is_deterministic() {
        let digest = |seed| {
            let mut h = Sha256::new();
            for row in Population::new(1, seed, constants()).take(150_000) {
                h.update(serde_json::to_vec(&row).unwrap());
            }
            h.finalize()
        };
        assert_eq!(digest(9), digest(9));
        assert_ne!(digest(9), digest(10));
    }
}
