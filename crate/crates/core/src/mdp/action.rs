use smallvec::SmallVec;

use super::{ModelError, ObjId, PredId, PredKind};

/// Argument of an atom inside a schema: a parameter slot or a fixed object.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Var(usize),
    Const(ObjId),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AtomTemplate {
    pub pred: PredId,
    pub args: SmallVec<[Term; 3]>,
}

impl AtomTemplate {
    pub fn new(pred: PredId, args: impl IntoIterator<Item = Term>) -> Self {
        AtomTemplate { pred, args: args.into_iter().collect() }
    }

    pub fn ground(&self, binding: &[ObjId]) -> SmallVec<[ObjId; 3]> {
        self.args
            .iter()
            .map(|t| match *t {
                Term::Var(i) => binding[i],
                Term::Const(o) => o,
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Condition {
    Atom { atom: AtomTemplate, positive: bool },
    Eq { left: Term, right: Term, positive: bool },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub probability: f64,
    pub add: Vec<AtomTemplate>,
    pub delete: Vec<AtomTemplate>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Param {
    pub name: String,
    pub ty: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ActionSchema {
    pub name: String,
    pub params: Vec<Param>,
    pub precondition: Vec<Condition>,
    pub outcomes: Vec<Outcome>,
    pub cost: f64,
}

pub const PROBABILITY_TOLERANCE: f64 = 1e-9;

impl ActionSchema {
    pub fn arity(&self) -> usize {
        self.params.len()
    }

    pub fn is_deterministic(&self) -> bool {
        self.outcomes.len() == 1
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.cost >= 0.0 && self.cost.is_finite()) {
            return Err(ModelError::NegativeCost { schema: self.name.clone(), cost: self.cost });
        }
        if self.outcomes.is_empty() {
            return Err(ModelError::Probabilities { schema: self.name.clone(), sum: 0.0 });
        }
        let mut sum = 0.0;
        for o in &self.outcomes {
            if !(0.0..=1.0).contains(&o.probability) {
                return Err(ModelError::Probabilities { schema: self.name.clone(), sum: o.probability });
            }
            sum += o.probability;
            for a in o.add.iter().chain(&o.delete) {
                if a.pred.kind != PredKind::World {
                    return Err(ModelError::NonWorldEffect(self.name.clone()));
                }
            }
        }
        if (sum - 1.0).abs() > PROBABILITY_TOLERANCE {
            return Err(ModelError::Probabilities { schema: self.name.clone(), sum });
        }
        let n = self.params.len();
        let check = |t: &Term| match t {
            Term::Var(i) if *i >= n => Err(ModelError::Arity(format!("{}: parameter {} out of range", self.name, i))),
            _ => Ok(()),
        };
        for c in &self.precondition {
            match c {
                Condition::Atom { atom, .. } => atom.args.iter().try_for_each(check)?,
                Condition::Eq { left, right, .. } => {
                    check(left)?;
                    check(right)?;
                }
            }
        }
        for o in &self.outcomes {
            for a in o.add.iter().chain(&o.delete) {
                a.args.iter().try_for_each(check)?;
            }
        }
        Ok(())
    }
}

/// Index of a schema in a domain's name-sorted schema list, so comparing ids
/// compares schema names.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SchemaId(pub u32);

/// A ground action. The derived order is the action order: schema name first,
/// then arguments by object declaration order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroundAction {
    pub schema: SchemaId,
    pub args: SmallVec<[ObjId; 4]>,
}

impl GroundAction {
    pub fn new(schema: SchemaId, args: impl IntoIterator<Item = ObjId>) -> Self {
        GroundAction { schema, args: args.into_iter().collect() }
    }
}
