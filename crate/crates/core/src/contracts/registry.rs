use alloc::collections::BTreeMap;
use alloc::string::String;

use serde::{Deserialize, Serialize};

use super::{ContractError, Role};
use crate::primitives::Address;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Registration {
    pub role: Role,
    pub identity: String,
}

/// Which addresses may interact with dataset contracts, and as what.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserRegistry {
    users: BTreeMap<Address, Registration>,
}

impl UserRegistry {
    pub fn register(&mut self, caller: Address, role: Role, identity: String) -> Result<(), ContractError> {
        if self.users.contains_key(&caller) {
            return Err(ContractError::AlreadyRegistered);
        }
        if identity.is_empty() {
            return Err(ContractError::EmptyIdentity);
        }
        self.users.insert(caller, Registration { role, identity });
        Ok(())
    }

    pub fn get(&self, addr: &Address) -> Option<&Registration> {
        self.users.get(addr)
    }

    pub fn role_of(&self, addr: &Address) -> Result<Role, ContractError> {
        self.users.get(addr).map(|r| r.role).ok_or(ContractError::NotRegistered)
    }

    pub fn require(&self, addr: &Address) -> Result<&Registration, ContractError> {
        self.users.get(addr).ok_or(ContractError::NotRegistered)
    }

    pub fn require_role(&self, addr: &Address, role: Role) -> Result<(), ContractError> {
        if self.role_of(addr)? == role {
            Ok(())
        } else {
            Err(ContractError::WrongRole)
        }
    }

    /// Identity lookup, reserved to supervisory authorities.
    pub fn resolve(&self, caller: &Address, target: &Address) -> Result<&Registration, ContractError> {
        if self.role_of(caller)? != Role::SupervisoryAuthority {
            return Err(ContractError::NotAuthority);
        }
        self.users.get(target).ok_or(ContractError::UnknownAddress)
    }

    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Address, &Registration)> {
        self.users.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    #[test]
    fn register_once() {
        let mut r = UserRegistry::default();
        let a = Address([1; 20]);
        r.register(a, Role::DataProvider, "umc".to_string()).unwrap();
        assert_eq!(r.role_of(&a), Ok(Role::DataProvider));
        assert_eq!(
            r.register(a, Role::DataRequester, "again".to_string()),
            Err(ContractError::AlreadyRegistered)
        );
        assert_eq!(
            r.register(Address([2; 20]), Role::DataRequester, String::new()),
            Err(ContractError::EmptyIdentity)
        );
    }

    #[test]
    fn resolve_is_authority_only() {
        let mut r = UserRegistry::default();
        let (auth, prov, req) = (Address([1; 20]), Address([2; 20]), Address([3; 20]));
        r.register(auth, Role::SupervisoryAuthority, "dpa".to_string()).unwrap();
        r.register(prov, Role::DataProvider, "hospital".to_string()).unwrap();
        r.register(req, Role::DataRequester, "lab".to_string()).unwrap();

        let reg = r.resolve(&auth, &prov).unwrap();
        assert_eq!((reg.role, reg.identity.as_str()), (Role::DataProvider, "hospital"));
        assert_eq!(r.resolve(&req, &prov), Err(ContractError::NotAuthority));
        assert_eq!(r.resolve(&auth, &Address([9; 20])), Err(ContractError::UnknownAddress));
    }
}
