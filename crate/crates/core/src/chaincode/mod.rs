//! The TPC-C smart contract: argument marshaling, profile dispatch and the
//! bulk `initEntities` loader function.

mod api;
mod profiles;

pub use api::{marshal, marshal_rows, unmarshal, ApiError, Request, INIT_ENTITIES};
pub use profiles::{
    last_name_pick, next_stock_quantity, order_total, DeliveredOrder, NewOrderLineResult, OrderSummary, ProfileResponse,
};

use thiserror::Error;

use crate::domain::ProfileInput;
use crate::keys::KeyError;
use crate::ledger::{Chaincode, ChaincodeStub, InvokeResponse};
use crate::registry::{Registry, RegistryError};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ChaincodeError {
    #[error(transparent)]
    Api(#[from] ApiError),
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error("no customer with last name {0}")]
    NoCustomer(String),
}

impl From<KeyError> for ChaincodeError {
    fn from(e: KeyError) -> Self {
        ChaincodeError::Registry(RegistryError::Key(e))
    }
}

/// Runs a decoded request against the stub.
pub fn execute(stub: &mut dyn ChaincodeStub, request: &Request) -> Result<ProfileResponse, ChaincodeError> {
    let mut reg = Registry::new(stub);
    match request {
        Request::Profile(ProfileInput::NewOrder(i)) => profiles::new_order(&mut reg, i),
        Request::Profile(ProfileInput::Payment(i)) => profiles::payment(&mut reg, i),
        Request::Profile(ProfileInput::OrderStatus(i)) => profiles::order_status(&mut reg, i),
        Request::Profile(ProfileInput::Delivery(i)) => profiles::delivery(&mut reg, i),
        Request::Profile(ProfileInput::StockLevel(i)) => profiles::stock_level(&mut reg, i),
        Request::InitEntities(rows) => {
            for row in rows {
                reg.create_row(row)?;
            }
            Ok(ProfileResponse::InitEntities { created: rows.len() })
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct TpccChaincode;

impl Chaincode for TpccChaincode {
    fn invoke(&self, stub: &mut dyn ChaincodeStub, function: &str, args: &[String]) -> Result<InvokeResponse, String> {
        let request = unmarshal(function, args).map_err(|e| e.to_string())?;
        let response = execute(stub, &request).map_err(|e| e.to_string())?;
        let rollback = matches!(response, ProfileResponse::NewOrderRollback { .. });
        Ok(InvokeResponse { payload: serde_json::to_string(&response).expect("responses serialize"), rollback })
    }
}

#[cfg(test)]
mod tests;
