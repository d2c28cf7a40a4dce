use super::*;
use crate::domain::{
    Credit, Customer, CustomerSelector, DeliveryInput, District, Item, NewOrder, NewOrderInput, NewOrderLine, Order, OrderLine,
    OrderStatusInput, PaymentInput, Row, Stock, StockLevelInput, Warehouse,
};
use crate::keys;
use crate::ledger::{endorse, validate_and_commit, Endorsement, WorldState};
use crate::registry::decode;

fn warehouse(tax: i64) -> Warehouse {
    Warehouse {
        w_id: 1,
        w_name: "W".into(),
        w_street_1: String::new(),
        w_street_2: String::new(),
        w_city: String::new(),
        w_state: "XX".into(),
        w_zip: "000011111".into(),
        w_tax: tax,
        w_ytd: 30_000_000,
    }
}

fn district(d_id: u32, tax: i64, next: u32) -> District {
    District {
        d_w_id: 1,
        d_id,
        d_name: format!("D{d_id}"),
        d_street_1: String::new(),
        d_street_2: String::new(),
        d_city: String::new(),
        d_state: "XX".into(),
        d_zip: "000011111".into(),
        d_tax: tax,
        d_ytd: 3_000_000,
        d_next_o_id: next,
    }
}

fn customer(d_id: u32, c_id: u32, last: &str, credit: Credit, discount: i64) -> Customer {
    Customer {
        c_w_id: 1,
        c_d_id: d_id,
        c_id,
        c_first: format!("F{c_id}"),
        c_middle: "OE".into(),
        c_last: last.into(),
        c_street_1: String::new(),
        c_street_2: String::new(),
        c_city: String::new(),
        c_state: "XX".into(),
        c_zip: "000011111".into(),
        c_phone: "0".into(),
        c_since: 0,
        c_credit: credit,
        c_credit_lim: 5_000_000,
        c_discount: discount,
        c_balance: -1000,
        c_ytd_payment: 1000,
        c_payment_cnt: 1,
        c_delivery_cnt: 0,
        c_data: "history".into(),
    }
}

fn item(i_id: u32) -> Item {
    Item { i_id, i_im_id: i_id, i_name: format!("item{i_id}"), i_price: 100 * i64::from(i_id), i_data: String::new() }
}

fn stock(i_id: u32, quantity: i32) -> Stock {
    Stock {
        s_w_id: 1,
        s_i_id: i_id,
        s_quantity: quantity,
        s_dist: (1..=10).map(|d| format!("dist-{i_id}-{d:02}")).collect(),
        s_ytd: 0,
        s_order_cnt: 0,
        s_remote_cnt: 0,
        s_data: String::new(),
    }
}

/// One warehouse, ten districts (next order id 1), customers 1..=3 in
/// district 1 named BARBAR and customer 4 named OUGHT with bad credit,
/// items and stock 1..=20 with quantity 10 * i_id.
fn fixture(w_tax: i64, d_tax: i64, discount: i64) -> WorldState {
    let mut rows = vec![Row::Warehouse(warehouse(w_tax))];
    for d in 1..=10 {
        rows.push(Row::District(district(d, d_tax, 1)));
        rows.push(Row::Customer(customer(d, 9, "ABLE", Credit::Good, discount)));
    }
    for c in 1..=3 {
        rows.push(Row::Customer(customer(1, c, "BARBAR", Credit::Good, discount)));
    }
    rows.push(Row::Customer(customer(1, 4, "OUGHT", Credit::Bad, discount)));
    for i in 1..=20 {
        rows.push(Row::Item(item(i)));
        rows.push(Row::Stock(stock(i, 10 * i as i32)));
    }
    let mut state = WorldState::new();
    state.set_height(1);
    let e = endorse(&TpccChaincode, &state, INIT_ENTITIES, &marshal_rows(&rows));
    assert!(e.response.is_ok(), "{:?}", e.response);
    validate_and_commit(&mut state, 1, [&e.rwset]);
    state
}

fn run(state: &mut WorldState, input: &ProfileInput) -> (Endorsement, ProfileResponse) {
    let (function, args) = marshal(input);
    let e = endorse(&TpccChaincode, state, function, &args);
    let payload = e.response.clone().expect("chaincode succeeds").payload;
    if !e.is_rollback() {
        let block = state.height();
        validate_and_commit(state, block, [&e.rwset]);
    }
    (e, serde_json::from_str(&payload).unwrap())
}

fn get<E: crate::registry::Entity>(state: &WorldState, key: keys::CompositeKey) -> Option<E> {
    let k = key.encode();
    state.get(&k).map(|e| decode(&k, &e.value).unwrap())
}

fn new_order_input(d_id: u32, c_id: u32, items: &[u32]) -> ProfileInput {
    ProfileInput::NewOrder(NewOrderInput {
        w_id: 1,
        d_id,
        c_id,
        o_entry_d: 77,
        lines: items.iter().map(|&i| NewOrderLine { i_id: i, supply_w_id: 1, quantity: 3 }).collect(),
    })
}

#[test]
fn new_order_without_discount_or_tax_totals_line_amounts() {
    let mut state = fixture(0, 0, 0);
    let (e, resp) = run(&mut state, &new_order_input(1, 1, &[1, 2, 3, 4, 5]));
    let ProfileResponse::NewOrder { total_amount, o_id, lines, .. } = resp else { panic!() };
    let sum: i64 = lines.iter().map(|l| l.ol_amount).sum();
    assert_eq!(sum, 3 * 100 * (1 + 2 + 3 + 4 + 5));
    assert_eq!(total_amount, sum);
    assert_eq!(o_id, 1);
    assert_eq!(e.stats.write_count, 3 + 5 + 5);
    assert_eq!(get::<District>(&state, keys::district_key(1, 1).unwrap()).unwrap().d_next_o_id, 2);
    assert!(get::<NewOrder>(&state, keys::new_order_key(1, 1, 1).unwrap()).is_some());
}

#[test]
fn new_order_total_with_discount_and_taxes() {
    assert_eq!(order_total(10_000, 1_000, 500, 1_500), 10_800);
    assert_eq!(order_total(333, 0, 0, 0), 333);
    let mut state = fixture(1000, 500, 2000);
    let (_, resp) = run(&mut state, &new_order_input(1, 2, &[1, 2, 3, 4, 5]));
    let ProfileResponse::NewOrder { total_amount, .. } = resp else { panic!() };
    // 4500 * 0.8 * 1.15
    assert_eq!(total_amount, 4140);
}

#[test]
fn new_order_write_set_contents() {
    let mut state = fixture(0, 0, 0);
    let (e, _) = run(&mut state, &new_order_input(2, 9, &[6, 7, 8, 9, 10, 11]));
    let written: Vec<&String> = e.rwset.writes.keys().collect();
    let count = |prefix: &str| written.iter().filter(|k| k.starts_with(&format!("{prefix}\0"))).count();
    assert_eq!(count(keys::tables::DISTRICT), 1);
    assert_eq!(count(keys::tables::ORDER), 1);
    assert_eq!(count(keys::tables::NEW_ORDER), 1);
    assert_eq!(count(keys::tables::ORDER_LINE), 6);
    assert_eq!(count(keys::tables::STOCK), 6);
    let bytes: u64 = e.rwset.writes.values().map(|v| v.as_ref().map_or(0, |v| v.len() as u64)).sum();
    assert_eq!(e.stats.bytes_written, bytes);
    assert_eq!(e.stats.read_count, e.rwset.reads.len() as u64);
}

#[test]
fn stock_replenishment() {
    assert_eq!(next_stock_quantity(50, 5), 45);
    assert_eq!(next_stock_quantity(15, 5), 10);
    assert_eq!(next_stock_quantity(14, 5), 100);
    let mut state = fixture(0, 0, 0);
    run(&mut state, &new_order_input(1, 1, &[1, 20, 2, 3, 4]));
    let s1: Stock = get(&state, keys::stock_key(1, 1).unwrap()).unwrap();
    assert_eq!((s1.s_quantity, s1.s_ytd, s1.s_order_cnt), (10 - 3 + 91, 3, 1));
    let s20: Stock = get(&state, keys::stock_key(1, 20).unwrap()).unwrap();
    assert_eq!(s20.s_quantity, 197);
}

#[test]
fn unknown_item_rolls_back() {
    let mut state = fixture(0, 0, 0);
    let before = state.state_hash();
    let (e, resp) = run(&mut state, &new_order_input(1, 1, &[1, 2, 3, 4, crate::domain::UNUSED_ITEM_ID]));
    assert!(e.is_rollback());
    assert!(e.rwset.writes.is_empty());
    assert_eq!(e.stats.write_count, 0);
    assert!(matches!(resp, ProfileResponse::NewOrderRollback { .. }));
    assert_eq!(state.state_hash(), before);
}

#[test]
fn endorsement_is_deterministic() {
    let state = fixture(0, 0, 0);
    let (function, args) = marshal(&new_order_input(3, 9, &[5, 6, 7, 8, 9]));
    let a = endorse(&TpccChaincode, &state, function, &args);
    let b = endorse(&TpccChaincode, &state, function, &args);
    assert_eq!(a.rwset, b.rwset);
    assert_eq!(a.stats, b.stats);
}

fn payment_input(selector: CustomerSelector, amount: i64, h_date: u64, client: &str) -> ProfileInput {
    ProfileInput::Payment(PaymentInput {
        w_id: 1,
        d_id: 1,
        c_w_id: 1,
        c_d_id: 1,
        customer: selector,
        h_amount: amount,
        h_date,
        client_id: client.into(),
    })
}

#[test]
fn payment_bookkeeping() {
    let mut state = fixture(0, 0, 0);
    let c_before: Customer = get(&state, keys::customer_key(1, 1, 2).unwrap()).unwrap();
    let (e, _) = run(&mut state, &payment_input(CustomerSelector::ById(2), 1000, 5, "t1"));
    let c: Customer = get(&state, keys::customer_key(1, 1, 2).unwrap()).unwrap();
    assert_eq!(c.c_balance - c_before.c_balance, -1000);
    assert_eq!(c.c_ytd_payment - c_before.c_ytd_payment, 1000);
    assert_eq!(c.c_payment_cnt, c_before.c_payment_cnt + 1);
    let w: Warehouse = get(&state, keys::warehouse_key(1).unwrap()).unwrap();
    assert_eq!(w.w_ytd, 30_000_000 + 1000);
    let d: District = get(&state, keys::district_key(1, 1).unwrap()).unwrap();
    assert_eq!(d.d_ytd, 3_000_000 + 1000);
    let h: crate::domain::History = get(&state, keys::history_key(1, 1, 2, 5, "t1").unwrap()).unwrap();
    assert_eq!(h.h_amount, 1000);
    assert_eq!(c.c_data, c_before.c_data);

    let written: Vec<&String> = e.rwset.writes.keys().collect();
    for prefix in [keys::tables::WAREHOUSE, keys::tables::DISTRICT, keys::tables::CUSTOMER, keys::tables::HISTORY] {
        assert_eq!(written.iter().filter(|k| k.starts_with(&format!("{prefix}\0"))).count(), 1, "{prefix}");
    }
    assert_eq!(written.len(), 4);
}

#[test]
fn payment_history_never_overwritten() {
    let mut state = fixture(0, 0, 0);
    run(&mut state, &payment_input(CustomerSelector::ById(1), 100, 5, "t1"));
    run(&mut state, &payment_input(CustomerSelector::ById(1), 100, 6, "t1"));
    run(&mut state, &payment_input(CustomerSelector::ById(1), 100, 6, "t2"));
    let (start, end) = keys::CompositeKey::new(keys::tables::HISTORY).unwrap().range();
    assert_eq!(state.range(&start, &end).count(), 3);
}

#[test]
fn payment_by_last_name_picks_middle() {
    assert_eq!(last_name_pick(0), None);
    assert_eq!(last_name_pick(1), Some(0));
    assert_eq!(last_name_pick(3), Some(1));
    assert_eq!(last_name_pick(4), Some(1));
    let mut state = fixture(0, 0, 0);
    let (_, resp) = run(&mut state, &payment_input(CustomerSelector::ByLastName("BARBAR".into()), 500, 1, "t"));
    let ProfileResponse::Payment { c_id, .. } = resp else { panic!() };
    assert_eq!(c_id, 2);
}

#[test]
fn payment_unknown_last_name_fails() {
    let state = fixture(0, 0, 0);
    let (function, args) = marshal(&payment_input(CustomerSelector::ByLastName("NONEXISTENT".into()), 5, 1, "t"));
    let e = endorse(&TpccChaincode, &state, function, &args);
    assert!(e.response.unwrap_err().contains("NONEXISTENT"));
    assert!(e.rwset.writes.is_empty());
}

#[test]
fn bad_credit_prepends_c_data() {
    let mut state = fixture(0, 0, 0);
    run(&mut state, &payment_input(CustomerSelector::ById(4), 1234, 1, "t"));
    let c: Customer = get(&state, keys::customer_key(1, 1, 4).unwrap()).unwrap();
    assert_eq!(c.c_data, "4 1 1 1 1 1234 | history");
    for i in 0..40 {
        run(&mut state, &payment_input(CustomerSelector::ById(4), 1234, 2 + i, "t"));
    }
    let c: Customer = get(&state, keys::customer_key(1, 1, 4).unwrap()).unwrap();
    assert_eq!(c.c_data.len(), 500);
}

#[test]
fn order_status_returns_newest_order() {
    let mut state = fixture(0, 0, 0);
    run(&mut state, &new_order_input(1, 3, &[1, 2, 3, 4, 5]));
    run(&mut state, &new_order_input(1, 3, &[6, 7, 8, 9, 10, 11, 12]));
    let (e, resp) = run(&mut state, &ProfileInput::OrderStatus(OrderStatusInput { w_id: 1, d_id: 1, customer: CustomerSelector::ById(3) }));
    assert!(e.rwset.writes.is_empty());
    assert_eq!(e.stats.write_count, 0);
    let ProfileResponse::OrderStatus { order: Some(order), .. } = resp else { panic!() };
    assert_eq!(order.o_id, 2);
    let stored: Order = get(&state, keys::order_key(1, 1, 3, 2).unwrap()).unwrap();
    assert_eq!(order.lines.len() as u32, stored.o_ol_cnt);
    assert_eq!(stored.o_ol_cnt, 7);
}

#[test]
fn order_status_without_orders() {
    let mut state = fixture(0, 0, 0);
    let (_, resp) = run(&mut state, &ProfileInput::OrderStatus(OrderStatusInput { w_id: 1, d_id: 1, customer: CustomerSelector::ById(1) }));
    assert!(matches!(resp, ProfileResponse::OrderStatus { order: None, .. }));
}

#[test]
fn delivery_takes_oldest_per_district() {
    let mut state = fixture(0, 0, 0);
    // District 1 gets orders 1..=9 from customer 1; all but 5 and 9 are
    // delivered by hand first so exactly those two remain undelivered.
    for _ in 0..9 {
        run(&mut state, &new_order_input(1, 1, &[1, 2, 3, 4, 5]));
    }
    for o in [1, 2, 3, 4, 6, 7, 8] {
        state.apply(&keys::new_order_key(1, 1, o).unwrap().encode(), None, crate::ledger::Version::new(state.height(), o));
    }
    let before: Customer = get(&state, keys::customer_key(1, 1, 1).unwrap()).unwrap();
    let (_, resp) = run(&mut state, &ProfileInput::Delivery(DeliveryInput { w_id: 1, o_carrier_id: 4, ol_delivery_d: 99 }));
    let ProfileResponse::Delivery { delivered, skipped_districts, .. } = resp else { panic!() };
    assert_eq!(delivered.len(), 1);
    assert_eq!(delivered[0].o_id, 5);
    assert_eq!(skipped_districts, (2..=10).collect::<Vec<_>>());
    assert!(get::<NewOrder>(&state, keys::new_order_key(1, 1, 5).unwrap()).is_none());
    assert!(get::<NewOrder>(&state, keys::new_order_key(1, 1, 9).unwrap()).is_some());
    let order: Order = get(&state, keys::order_key(1, 1, 1, 5).unwrap()).unwrap();
    assert_eq!(order.o_carrier_id, Some(4));
    let (start, end) = keys::order_line_prefix(1, 1, 5).unwrap().range();
    let lines: Vec<OrderLine> = state.range(&start, &end).map(|(k, e)| decode(k, &e.value).unwrap()).collect();
    assert!(lines.iter().all(|l| l.ol_delivery_d == Some(99)));
    let after: Customer = get(&state, keys::customer_key(1, 1, 1).unwrap()).unwrap();
    assert_eq!(after.c_balance - before.c_balance, lines.iter().map(|l| l.ol_amount).sum::<i64>());
    assert_eq!(after.c_delivery_cnt, before.c_delivery_cnt + 1);
}

fn stock_level(state: &mut WorldState, d_id: u32, threshold: i32) -> u32 {
    let (e, resp) = run(state, &ProfileInput::StockLevel(StockLevelInput { w_id: 1, d_id, threshold }));
    assert!(e.rwset.writes.is_empty());
    let ProfileResponse::StockLevel { low_stock, .. } = resp else { panic!() };
    low_stock
}

#[test]
fn stock_level_counts_distinct_low_items() {
    let mut state = fixture(0, 0, 0);
    assert_eq!(stock_level(&mut state, 1, 20), 0);
    // Items 1 (qty 10) appear in both orders, item 2 (qty 20) once.
    run(&mut state, &new_order_input(1, 1, &[1, 5, 6, 7, 8]));
    run(&mut state, &new_order_input(1, 1, &[1, 2, 9, 10, 11]));
    // After ordering 3 twice: item1 10 -> 98 -> 95, item2 20 -> 17, item5 50 -> 47.
    assert_eq!(stock_level(&mut state, 1, 10), 0);
    assert_eq!(stock_level(&mut state, 1, 18), 1);
    assert_eq!(stock_level(&mut state, 1, 48), 2);
}

#[test]
fn stock_level_matches_full_scan() {
    let mut state = fixture(0, 0, 0);
    for k in 0..30u32 {
        let items: Vec<u32> = (0..5).map(|j| 1 + (k * 7 + j * 3) % 20).collect();
        run(&mut state, &new_order_input(1, 1 + k % 2, &items));
    }
    for threshold in [10, 15, 20, 60, 150] {
        for d_id in [1, 2] {
            let next = get::<District>(&state, keys::district_key(1, d_id).unwrap()).unwrap().d_next_o_id;
            let mut items: Vec<u32> = state
                .iter()
                .filter(|(k, _)| k.starts_with("ORDER_LINE\0"))
                .map(|(k, e)| decode::<OrderLine>(k, &e.value).unwrap())
                .filter(|l| l.ol_d_id == d_id && l.ol_o_id + 20 >= next && l.ol_o_id < next)
                .map(|l| l.ol_i_id)
                .collect();
            items.sort();
            items.dedup();
            let expected = items
                .iter()
                .filter(|&&i| get::<Stock>(&state, keys::stock_key(1, i).unwrap()).unwrap().s_quantity < threshold)
                .count() as u32;
            assert_eq!(stock_level(&mut state, d_id, threshold), expected, "d {d_id} threshold {threshold}");
        }
    }
}

#[test]
fn init_entities_rejects_duplicates() {
    let state = fixture(0, 0, 0);
    let e = endorse(&TpccChaincode, &state, INIT_ENTITIES, &marshal_rows(&[Row::Item(item(3))]));
    assert!(e.response.unwrap_err().contains("already exists"));
}
