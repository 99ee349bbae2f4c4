//! A single-contract, Ethereum-like ledger.
//!
//! Each submitted transaction is mined into its own block: the block number is
//! bumped first, then the call executes with `T` equal to the new block number.
//! Senders are never supplied by the caller; they are recovered from the
//! transaction signature.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::contract::{AuctionContract, CallContext, ContractCall, ContractDump, Transfer};
use crate::crypto::{keccak256, recover_signer, Address, CryptoError, Digest32, Signature, SigningKeyPair};
use crate::encoding::Encoder;
use crate::hex_serde;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ChainError {
    #[error("block advance must be at least 1")]
    ZeroAdvance,
}

/// A signed call to the hosted contract.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawTransaction {
    pub to: Address,
    pub function: String,
    #[serde(with = "hex_serde")]
    pub args: Vec<u8>,
    pub value: u128,
    pub signature: Signature,
}

impl RawTransaction {
    /// Digest the signature covers: keccak256 of the length-prefixed
    /// `to || function || args || value` fields.
    pub fn signing_digest(to: &Address, function: &str, args: &[u8], value: u128) -> Digest32 {
        keccak256(
            &Encoder::new()
                .field(&to.0)
                .field(function.as_bytes())
                .field(args)
                .u128(value)
                .finish(),
        )
    }

    pub fn sign(key: &SigningKeyPair, to: Address, call: &ContractCall, value: u128) -> Self {
        let function = call.function_name().to_string();
        let args = call.encode_args();
        let signature = key.sign(&Self::signing_digest(&to, &function, &args, value));
        Self {
            to,
            function,
            args,
            value,
            signature,
        }
    }

    pub fn digest(&self) -> Digest32 {
        Self::signing_digest(&self.to, &self.function, &self.args, self.value)
    }

    pub fn sender(&self) -> Result<Address, CryptoError> {
        recover_signer(&self.digest(), &self.signature)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TxStatus {
    Ok,
    Reverted,
    /// Dropped before execution: the sender could not be recovered.
    Invalid,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Receipt {
    pub block_number: u64,
    pub status: TxStatus,
    pub sender: Option<Address>,
    pub revert_reason: Option<String>,
}

impl Receipt {
    pub fn is_ok(&self) -> bool {
        self.status == TxStatus::Ok
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainState {
    block_number: u64,
    balances: BTreeMap<Address, u128>,
    contract: AuctionContract,
    contract_address: Address,
}

impl ChainState {
    pub fn new(contract_address: Address) -> Self {
        Self {
            block_number: 0,
            balances: BTreeMap::new(),
            contract: AuctionContract::new(),
            contract_address,
        }
    }

    pub fn block_number(&self) -> u64 {
        self.block_number
    }

    pub fn contract(&self) -> &AuctionContract {
        &self.contract
    }

    pub fn contract_address(&self) -> Address {
        self.contract_address
    }

    pub fn balance(&self, who: &Address) -> u128 {
        self.balances.get(who).copied().unwrap_or(0)
    }

    pub fn balances(&self) -> &BTreeMap<Address, u128> {
        &self.balances
    }

    /// Sum of all account balances plus everything the contract holds.
    pub fn total_supply(&self) -> u128 {
        self.balances.values().sum::<u128>() + self.contract.holdings()
    }

    /// Faucet credit used for scenario setup.
    pub fn fund(&mut self, who: Address, amount: u128) {
        if amount == 0 {
            return;
        }
        *self.balances.entry(who).or_insert(0) += amount;
    }

    pub fn advance_blocks(&mut self, n: u64) -> Result<(), ChainError> {
        if n == 0 {
            return Err(ChainError::ZeroAdvance);
        }
        self.block_number += n;
        Ok(())
    }

    /// Advances until the block number equals `target`; does nothing if it is already past.
    pub fn advance_to(&mut self, target: u64) {
        if target > self.block_number {
            self.block_number = target;
        }
    }

    /// Mines `tx` into a new block.
    pub fn submit_transaction(&mut self, tx: &RawTransaction) -> Receipt {
        self.block_number += 1;
        let block_number = self.block_number;
        let sender = match tx.sender() {
            Ok(sender) => sender,
            Err(_) => {
                return Receipt {
                    block_number,
                    status: TxStatus::Invalid,
                    sender: None,
                    revert_reason: Some(CryptoError::UnrecoverableSignature.to_string()),
                }
            }
        };
        let reverted = |reason: String| Receipt {
            block_number,
            status: TxStatus::Reverted,
            sender: Some(sender),
            revert_reason: Some(reason),
        };
        if tx.to != self.contract_address {
            return reverted("no contract at destination".into());
        }
        if self.balance(&sender) < tx.value {
            return reverted("insufficient funds".into());
        }
        let call = match ContractCall::decode(&tx.function, &tx.args) {
            Ok(call) => call,
            Err(revert) => return reverted(revert.to_string()),
        };
        let ctx = CallContext {
            sender,
            value: tx.value,
            block: block_number,
        };
        let mut next = self.contract.clone();
        match next.execute(&ctx, call) {
            Ok(transfer) => {
                self.contract = next;
                match transfer {
                    Transfer::None | Transfer::FromSender(0) => {}
                    Transfer::FromSender(amount) => {
                        let bal = self.balances.get_mut(&sender).expect("value check implies an account");
                        *bal -= amount;
                    }
                    Transfer::ToSender(amount) => self.fund(sender, amount),
                }
                Receipt {
                    block_number,
                    status: TxStatus::Ok,
                    sender: Some(sender),
                    revert_reason: None,
                }
            }
            Err(revert) => reverted(revert.to_string()),
        }
    }

    pub fn snapshot(&self) -> ChainSnapshot {
        ChainSnapshot {
            block_number: self.block_number,
            contract_address: self.contract_address,
            balances: self
                .balances
                .iter()
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .collect(),
            contract: self.contract.dump(),
        }
    }
}

/// JSON view of the chain: balances as hex address to decimal amount.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainSnapshot {
    pub block_number: u64,
    pub contract_address: Address,
    pub balances: BTreeMap<String, String>,
    pub contract: ContractDump,
}
