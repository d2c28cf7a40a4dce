//! Composite keys over the ordered key space.
//!
//! A key is its table prefix followed by its parts, each terminated by
//! [`SEPARATOR`]. The separator sorts below every printable character, so
//! keys of one table stay contiguous and a partial key (a prefix of the
//! parts) bounds exactly the keys that extend it. Numeric parts are
//! zero-padded to a fixed width so lexicographic order is numeric order.

use std::fmt;

use thiserror::Error;

pub const SEPARATOR: char = '\u{0}';
const RANGE_END: char = '\u{1}';

pub const W_ID_WIDTH: usize = 6;
pub const D_ID_WIDTH: usize = 2;
pub const C_ID_WIDTH: usize = 6;
pub const O_ID_WIDTH: usize = 6;
pub const I_ID_WIDTH: usize = 6;
pub const OL_NUMBER_WIDTH: usize = 2;
pub const TIMESTAMP_WIDTH: usize = 20;

pub mod tables {
    pub const WAREHOUSE: &str = "WAREHOUSE";
    pub const DISTRICT: &str = "DISTRICT";
    pub const CUSTOMER: &str = "CUSTOMER";
    pub const CUSTOMER_LAST_NAME: &str = "CUSTOMER_LAST_NAME";
    pub const HISTORY: &str = "HISTORY";
    pub const ITEM: &str = "ITEM";
    pub const STOCK: &str = "STOCK";
    pub const ORDER: &str = "ORDER";
    pub const NEW_ORDER: &str = "NEW_ORDER";
    pub const ORDER_LINE: &str = "ORDER_LINE";
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum KeyError {
    #[error("value {value} does not fit in {width} digits")]
    Overflow { value: u64, width: usize },
    #[error("key component contains the separator or is empty: {0:?}")]
    InvalidComponent(String),
    #[error("malformed key {0:?}")]
    Malformed(String),
}

/// A table prefix plus stringified primary-key components.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CompositeKey {
    prefix: String,
    parts: Vec<String>,
}

impl CompositeKey {
    pub fn new(prefix: &str) -> Result<Self, KeyError> {
        check_component(prefix)?;
        Ok(CompositeKey { prefix: prefix.to_string(), parts: Vec::new() })
    }

    pub fn number(mut self, value: u64, width: usize) -> Result<Self, KeyError> {
        self.parts.push(pad(value, width)?);
        Ok(self)
    }

    pub fn text(mut self, value: &str) -> Result<Self, KeyError> {
        check_component(value)?;
        self.parts.push(value.to_string());
        Ok(self)
    }

    pub fn prefix(&self) -> &str {
        &self.prefix
    }

    pub fn parts(&self) -> &[String] {
        &self.parts
    }

    pub fn encode(&self) -> String {
        let mut out = String::with_capacity(self.prefix.len() + 1 + self.parts.iter().map(|p| p.len() + 1).sum::<usize>());
        out.push_str(&self.prefix);
        out.push(SEPARATOR);
        for part in &self.parts {
            out.push_str(part);
            out.push(SEPARATOR);
        }
        out
    }

    pub fn decode(encoded: &str) -> Result<Self, KeyError> {
        let body = encoded.strip_suffix(SEPARATOR).ok_or_else(|| KeyError::Malformed(encoded.to_string()))?;
        let mut pieces = body.split(SEPARATOR);
        let prefix = pieces.next().filter(|p| !p.is_empty()).ok_or_else(|| KeyError::Malformed(encoded.to_string()))?;
        let parts: Vec<String> = pieces.map(str::to_string).collect();
        if parts.iter().any(String::is_empty) {
            return Err(KeyError::Malformed(encoded.to_string()));
        }
        Ok(CompositeKey { prefix: prefix.to_string(), parts })
    }

    /// Half-open range `[start, end)` covering every key that extends this
    /// (partial) key.
    pub fn range(&self) -> (String, String) {
        let start = self.encode();
        let mut end = start.clone();
        end.pop();
        end.push(RANGE_END);
        (start, end)
    }
}

impl fmt::Display for CompositeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.prefix)?;
        for part in &self.parts {
            write!(f, "_{part}")?;
        }
        Ok(())
    }
}

fn check_component(value: &str) -> Result<(), KeyError> {
    if value.is_empty() || value.contains(SEPARATOR) || value.contains(RANGE_END) {
        Err(KeyError::InvalidComponent(value.to_string()))
    } else {
        Ok(())
    }
}

fn pad(value: u64, width: usize) -> Result<String, KeyError> {
    if width == 0 || width > 20 || (width < 20 && value >= 10u64.pow(width as u32)) {
        return Err(KeyError::Overflow { value, width });
    }
    Ok(format!("{value:0width$}"))
}

/// Builds a key whose parts are all numeric and share one pad width.
pub fn make_key(prefix: &str, parts: &[u64], pad_width: usize) -> Result<CompositeKey, KeyError> {
    parts.iter().try_fold(CompositeKey::new(prefix)?, |key, &part| key.number(part, pad_width))
}

/// `(10^width - 1) - o_id`: newer orders get smaller key components. The
/// mapping is its own inverse on `0..10^width`.
pub fn flip_order_id(o_id: u64, width: usize) -> Result<u64, KeyError> {
    if width == 0 || width > 19 {
        return Err(KeyError::Overflow { value: o_id, width });
    }
    let limit = 10u64.pow(width as u32);
    if o_id >= limit {
        return Err(KeyError::Overflow { value: o_id, width });
    }
    Ok(limit - 1 - o_id)
}

pub fn warehouse_key(w_id: u32) -> Result<CompositeKey, KeyError> {
    CompositeKey::new(tables::WAREHOUSE)?.number(w_id as u64, W_ID_WIDTH)
}

pub fn district_key(w_id: u32, d_id: u32) -> Result<CompositeKey, KeyError> {
    CompositeKey::new(tables::DISTRICT)?.number(w_id as u64, W_ID_WIDTH)?.number(d_id as u64, D_ID_WIDTH)
}

pub fn customer_key(w_id: u32, d_id: u32, c_id: u32) -> Result<CompositeKey, KeyError> {
    CompositeKey::new(tables::CUSTOMER)?
        .number(w_id as u64, W_ID_WIDTH)?
        .number(d_id as u64, D_ID_WIDTH)?
        .number(c_id as u64, C_ID_WIDTH)
}

/// Partial key over all customers of a district sharing `c_last`.
pub fn customer_last_name_prefix(w_id: u32, d_id: u32, c_last: &str) -> Result<CompositeKey, KeyError> {
    CompositeKey::new(tables::CUSTOMER_LAST_NAME)?.number(w_id as u64, W_ID_WIDTH)?.number(d_id as u64, D_ID_WIDTH)?.text(c_last)
}

/// Secondary index entry; carries no value, the customer id is in the key.
pub fn customer_last_name_key(w_id: u32, d_id: u32, c_last: &str, c_id: u32) -> Result<CompositeKey, KeyError> {
    customer_last_name_prefix(w_id, d_id, c_last)?.number(c_id as u64, C_ID_WIDTH)
}

/// History rows are keyed by their customer, the client-side timestamp and
/// the client id, so repeated payments never collide.
pub fn history_key(c_w_id: u32, c_d_id: u32, c_id: u32, client_timestamp: u64, client_id: &str) -> Result<CompositeKey, KeyError> {
    CompositeKey::new(tables::HISTORY)?
        .number(c_w_id as u64, W_ID_WIDTH)?
        .number(c_d_id as u64, D_ID_WIDTH)?
        .number(c_id as u64, C_ID_WIDTH)?
        .number(client_timestamp, TIMESTAMP_WIDTH)?
        .text(client_id)
}

pub fn item_key(i_id: u32) -> Result<CompositeKey, KeyError> {
    CompositeKey::new(tables::ITEM)?.number(i_id as u64, I_ID_WIDTH)
}

pub fn stock_key(w_id: u32, i_id: u32) -> Result<CompositeKey, KeyError> {
    CompositeKey::new(tables::STOCK)?.number(w_id as u64, W_ID_WIDTH)?.number(i_id as u64, I_ID_WIDTH)
}

/// Partial key over one customer's orders, newest first.
pub fn order_prefix(w_id: u32, d_id: u32, c_id: u32) -> Result<CompositeKey, KeyError> {
    CompositeKey::new(tables::ORDER)?.number(w_id as u64, W_ID_WIDTH)?.number(d_id as u64, D_ID_WIDTH)?.number(c_id as u64, C_ID_WIDTH)
}

pub fn order_key(w_id: u32, d_id: u32, c_id: u32, o_id: u32) -> Result<CompositeKey, KeyError> {
    order_prefix(w_id, d_id, c_id)?.number(flip_order_id(o_id as u64, O_ID_WIDTH)?, O_ID_WIDTH)
}

/// Partial key over a district's undelivered orders, oldest first.
pub fn new_order_prefix(w_id: u32, d_id: u32) -> Result<CompositeKey, KeyError> {
    CompositeKey::new(tables::NEW_ORDER)?.number(w_id as u64, W_ID_WIDTH)?.number(d_id as u64, D_ID_WIDTH)
}

pub fn new_order_key(w_id: u32, d_id: u32, o_id: u32) -> Result<CompositeKey, KeyError> {
    new_order_prefix(w_id, d_id)?.number(o_id as u64, O_ID_WIDTH)
}

pub fn order_line_prefix(w_id: u32, d_id: u32, o_id: u32) -> Result<CompositeKey, KeyError> {
    CompositeKey::new(tables::ORDER_LINE)?.number(w_id as u64, W_ID_WIDTH)?.number(d_id as u64, D_ID_WIDTH)?.number(o_id as u64, O_ID_WIDTH)
}

pub fn order_line_key(w_id: u32, d_id: u32, o_id: u32, ol_number: u32) -> Result<CompositeKey, KeyError> {
    order_line_prefix(w_id, d_id, o_id)?.number(ol_number as u64, OL_NUMBER_WIDTH)
}

/// `[start, end)` over the order lines of orders `o_from..o_to` of a district.
pub fn order_line_span(w_id: u32, d_id: u32, o_from: u32, o_to: u32) -> Result<(String, String), KeyError> {
    Ok((order_line_prefix(w_id, d_id, o_from)?.encode(), order_line_prefix(w_id, d_id, o_to)?.encode()))
}

/// How one table lays out its key space.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RegistryDescriptor {
    pub entity: &'static str,
    /// Primary-key fields with their pad width (`None` for text fields).
    pub key_fields: &'static [(&'static str, Option<usize>)],
    pub secondary_index: Option<&'static str>,
}

pub const DESCRIPTORS: [RegistryDescriptor; 9] = [
    RegistryDescriptor { entity: tables::WAREHOUSE, key_fields: &[("w_id", Some(W_ID_WIDTH))], secondary_index: None },
    RegistryDescriptor {
        entity: tables::DISTRICT,
        key_fields: &[("d_w_id", Some(W_ID_WIDTH)), ("d_id", Some(D_ID_WIDTH))],
        secondary_index: None,
    },
    RegistryDescriptor {
        entity: tables::CUSTOMER,
        key_fields: &[("c_w_id", Some(W_ID_WIDTH)), ("c_d_id", Some(D_ID_WIDTH)), ("c_id", Some(C_ID_WIDTH))],
        secondary_index: Some(tables::CUSTOMER_LAST_NAME),
    },
    RegistryDescriptor {
        entity: tables::HISTORY,
        key_fields: &[
            ("h_c_w_id", Some(W_ID_WIDTH)),
            ("h_c_d_id", Some(D_ID_WIDTH)),
            ("h_c_id", Some(C_ID_WIDTH)),
            ("h_date", Some(TIMESTAMP_WIDTH)),
            ("h_client_id", None),
        ],
        secondary_index: None,
    },
    RegistryDescriptor { entity: tables::ITEM, key_fields: &[("i_id", Some(I_ID_WIDTH))], secondary_index: None },
    RegistryDescriptor {
        entity: tables::STOCK,
        key_fields: &[("s_w_id", Some(W_ID_WIDTH)), ("s_i_id", Some(I_ID_WIDTH))],
        secondary_index: None,
    },
    RegistryDescriptor {
        entity: tables::ORDER,
        key_fields: &[
            ("o_w_id", Some(W_ID_WIDTH)),
            ("o_d_id", Some(D_ID_WIDTH)),
            ("o_c_id", Some(C_ID_WIDTH)),
            ("flipped o_id", Some(O_ID_WIDTH)),
        ],
        secondary_index: None,
    },
    RegistryDescriptor {
        entity: tables::NEW_ORDER,
        key_fields: &[("no_w_id", Some(W_ID_WIDTH)), ("no_d_id", Some(D_ID_WIDTH)), ("no_o_id", Some(O_ID_WIDTH))],
        secondary_index: None,
    },
    RegistryDescriptor {
        entity: tables::ORDER_LINE,
        key_fields: &[
            ("ol_w_id", Some(W_ID_WIDTH)),
            ("ol_d_id", Some(D_ID_WIDTH)),
            ("ol_o_id", Some(O_ID_WIDTH)),
            ("ol_number", Some(OL_NUMBER_WIDTH)),
        ],
        secondary_index: None,
    },
];

/// Checks that a configuration's warehouse count fits the warehouse pad width.
pub fn check_capacity(warehouse_count: u32) -> Result<(), KeyError> {
    pad(warehouse_count as u64, W_ID_WIDTH).map(|_| ())
}
