use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::ModelError;

/// Index of an object in a problem's ordered universe.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ObjId(pub u32);

impl ObjId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// The ordered object universe of a problem instance. Declaration order is
/// the object order used for ground-action ordering.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Universe {
    names: Vec<String>,
    index: HashMap<String, ObjId>,
}

impl Universe {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_names<I, S>(names: I) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut u = Universe::new();
        for name in names {
            u.push(name)?;
        }
        Ok(u)
    }

    pub fn push(&mut self, name: impl Into<String>) -> Result<ObjId, ModelError> {
        let name = name.into();
        if self.index.contains_key(&name) {
            return Err(ModelError::DuplicateObject(name));
        }
        let id = ObjId(self.names.len() as u32);
        self.index.insert(name.clone(), id);
        self.names.push(name);
        Ok(id)
    }

    pub fn get(&self, name: &str) -> Option<ObjId> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: ObjId) -> &str {
        &self.names[id.index()]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ObjId> + '_ {
        (0..self.names.len() as u32).map(ObjId)
    }
}
