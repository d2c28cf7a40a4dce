//! Contract API: functions take positional string arguments.

use thiserror::Error;

use crate::domain::{
    CustomerSelector, DeliveryInput, NewOrderInput, NewOrderLine, OrderStatusInput, PaymentInput, ProfileInput, ProfileType, Row,
    StockLevelInput,
};

pub const INIT_ENTITIES: &str = "initEntities";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ApiError {
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("{function}: expected {expected} arguments, got {got}")]
    Arity { function: String, expected: String, got: usize },
    #[error("{function}: argument {index} ({value:?}) is not valid")]
    BadArgument { function: String, index: usize, value: String },
}

/// A decoded contract invocation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Request {
    Profile(ProfileInput),
    InitEntities(Vec<Row>),
}

impl Request {
    pub fn function(&self) -> &'static str {
        match self {
            Request::Profile(p) => p.profile().function_name(),
            Request::InitEntities(_) => INIT_ENTITIES,
        }
    }
}

fn selector_args(selector: &CustomerSelector) -> [String; 2] {
    match selector {
        CustomerSelector::ById(id) => ["id".into(), id.to_string()],
        CustomerSelector::ByLastName(name) => ["last".into(), name.clone()],
    }
}

/// Encodes a profile invocation as `(function, args)`.
pub fn marshal(input: &ProfileInput) -> (&'static str, Vec<String>) {
    let args = match input {
        ProfileInput::NewOrder(i) => {
            let mut args = vec![i.w_id.to_string(), i.d_id.to_string(), i.c_id.to_string(), i.o_entry_d.to_string()];
            for l in &i.lines {
                args.extend([l.i_id.to_string(), l.supply_w_id.to_string(), l.quantity.to_string()]);
            }
            args
        }
        ProfileInput::Payment(i) => {
            let [kind, value] = selector_args(&i.customer);
            vec![
                i.w_id.to_string(),
                i.d_id.to_string(),
                i.c_w_id.to_string(),
                i.c_d_id.to_string(),
                kind,
                value,
                i.h_amount.to_string(),
                i.h_date.to_string(),
                i.client_id.clone(),
            ]
        }
        ProfileInput::OrderStatus(i) => {
            let [kind, value] = selector_args(&i.customer);
            vec![i.w_id.to_string(), i.d_id.to_string(), kind, value]
        }
        ProfileInput::Delivery(i) => vec![i.w_id.to_string(), i.o_carrier_id.to_string(), i.ol_delivery_d.to_string()],
        ProfileInput::StockLevel(i) => vec![i.w_id.to_string(), i.d_id.to_string(), i.threshold.to_string()],
    };
    (input.profile().function_name(), args)
}

/// Encodes a batch of rows for `initEntities`, one JSON row per argument.
pub fn marshal_rows(rows: &[Row]) -> Vec<String> {
    rows.iter().map(|r| serde_json::to_string(r).expect("rows serialize")).collect()
}

struct Args<'a> {
    function: &'a str,
    args: &'a [String],
}

impl Args<'_> {
    fn arity(&self, expected: usize) -> Result<(), ApiError> {
        if self.args.len() == expected {
            Ok(())
        } else {
            Err(ApiError::Arity { function: self.function.into(), expected: expected.to_string(), got: self.args.len() })
        }
    }

    fn bad(&self, index: usize) -> ApiError {
        ApiError::BadArgument { function: self.function.into(), index, value: self.args[index].clone() }
    }

    fn parse<T: std::str::FromStr>(&self, index: usize) -> Result<T, ApiError> {
        self.args[index].parse().map_err(|_| self.bad(index))
    }

    fn selector(&self, index: usize) -> Result<CustomerSelector, ApiError> {
        match self.args[index].as_str() {
            "id" => Ok(CustomerSelector::ById(self.parse(index + 1)?)),
            "last" if !self.args[index + 1].is_empty() => Ok(CustomerSelector::ByLastName(self.args[index + 1].clone())),
            "last" => Err(self.bad(index + 1)),
            _ => Err(self.bad(index)),
        }
    }
}

/// Decodes `(function, args)`; unknown functions are rejected here.
pub fn unmarshal(function: &str, args: &[String]) -> Result<Request, ApiError> {
    let a = Args { function, args };
    if function == INIT_ENTITIES {
        let rows = args
            .iter()
            .enumerate()
            .map(|(i, s)| serde_json::from_str::<Row>(s).map_err(|_| a.bad(i)))
            .collect::<Result<Vec<_>, _>>()?;
        return Ok(Request::InitEntities(rows));
    }
    let profile = ProfileType::from_function_name(function).ok_or_else(|| ApiError::UnknownFunction(function.into()))?;
    let input = match profile {
        ProfileType::NewOrder => {
            if args.len() < 4 || !(args.len() - 4).is_multiple_of(3) {
                return Err(ApiError::Arity { function: function.into(), expected: "4 + 3n".into(), got: args.len() });
            }
            let lines = (4..args.len())
                .step_by(3)
                .map(|i| Ok(NewOrderLine { i_id: a.parse(i)?, supply_w_id: a.parse(i + 1)?, quantity: a.parse(i + 2)? }))
                .collect::<Result<Vec<_>, ApiError>>()?;
            ProfileInput::NewOrder(NewOrderInput { w_id: a.parse(0)?, d_id: a.parse(1)?, c_id: a.parse(2)?, o_entry_d: a.parse(3)?, lines })
        }
        ProfileType::Payment => {
            a.arity(9)?;
            ProfileInput::Payment(PaymentInput {
                w_id: a.parse(0)?,
                d_id: a.parse(1)?,
                c_w_id: a.parse(2)?,
                c_d_id: a.parse(3)?,
                customer: a.selector(4)?,
                h_amount: a.parse(6)?,
                h_date: a.parse(7)?,
                client_id: args[8].clone(),
            })
        }
        ProfileType::OrderStatus => {
            a.arity(4)?;
            ProfileInput::OrderStatus(OrderStatusInput { w_id: a.parse(0)?, d_id: a.parse(1)?, customer: a.selector(2)? })
        }
        ProfileType::Delivery => {
            a.arity(3)?;
            ProfileInput::Delivery(DeliveryInput { w_id: a.parse(0)?, o_carrier_id: a.parse(1)?, ol_delivery_d: a.parse(2)? })
        }
        ProfileType::StockLevel => {
            a.arity(3)?;
            ProfileInput::StockLevel(StockLevelInput { w_id: a.parse(0)?, d_id: a.parse(1)?, threshold: a.parse(2)? })
        }
    };
    Ok(Request::Profile(input))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{InputGenerator, NurandConstants, TerminalHome};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    proptest! {
        #[test]
        fn generated_inputs_round_trip(seed in any::<u64>(), profile in 0usize..5, w in 1u32..4, now in any::<u64>()) {
            let gen = InputGenerator::new(w, NurandConstants { c_last: 7, c_id: 11, c_ol_i_id: 13 });
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let input = gen.generate(ProfileType::ALL[profile], TerminalHome { w_id: w, d_id: 1 }, now, "client-3", &mut rng).unwrap();
            let (function, args) = marshal(&input);
            prop_assert_eq!(unmarshal(function, &args).unwrap(), Request::Profile(input));
        }
    }

    #[test]
    fn unknown_function_rejected() {
        assert_eq!(unmarshal("dropTables", &[]), Err(ApiError::UnknownFunction("dropTables".into())));
    }

    #[test]
    fn bad_arguments() {
        let args = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        assert!(matches!(unmarshal("stockLevel", &args(&["1", "2"])), Err(ApiError::Arity { .. })));
        assert!(matches!(unmarshal("stockLevel", &args(&["1", "x", "10"])), Err(ApiError::BadArgument { index: 1, .. })));
        assert!(matches!(unmarshal("newOrder", &args(&["1", "2", "3", "4", "5"])), Err(ApiError::Arity { .. })));
        assert!(matches!(unmarshal("orderStatus", &args(&["1", "2", "name", "X"])), Err(ApiError::BadArgument { index: 2, .. })));
        assert!(matches!(unmarshal(INIT_ENTITIES, &args(&["{}"])), Err(ApiError::BadArgument { index: 0, .. })));
    }
}
