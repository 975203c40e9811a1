//! Immutable validated view of a population.

use super::{Household, Person};
use crate::error::SimError;
use std::collections::HashMap;

/// A validated population. Immutable after construction; downstream stages
/// produce transformed copies rather than mutating in place.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationSnapshot {
    persons: Vec<Person>,
    households: Vec<Household>,
    household_index: HashMap<u64, usize>,
    person_index: HashMap<u64, usize>,
}

impl PopulationSnapshot {
    /// Build a snapshot, enforcing every person and household invariant plus
    /// cross-record consistency (membership, ids unique).
    pub fn new(persons: Vec<Person>, households: Vec<Household>) -> Result<Self, SimError> {
        let mut person_ids = HashMap::with_capacity(persons.len());
        for (row, p) in persons.iter().enumerate() {
            p.validate(row)?;
            if person_ids.insert(p.id, row).is_some() {
                return Err(SimError::Validation(format!(
                    "row {row}: duplicate person id {}",
                    p.id
                )));
            }
        }
        let mut household_index = HashMap::with_capacity(households.len());
        for (row, h) in households.iter().enumerate() {
            h.validate(row)?;
            if household_index.insert(h.id, row).is_some() {
                return Err(SimError::Validation(format!(
                    "row {row}: duplicate household id {}",
                    h.id
                )));
            }
        }
        for (row, p) in persons.iter().enumerate() {
            let hh = household_index.get(&p.household_id).ok_or_else(|| {
                SimError::Validation(format!(
                    "row {row}: person {} references missing household {}",
                    p.id, p.household_id
                ))
            })?;
            if !households[*hh].member_ids.contains(&p.id) {
                return Err(SimError::Validation(format!(
                    "row {row}: person {} not listed as member of household {}",
                    p.id, p.household_id
                )));
            }
        }
        Ok(PopulationSnapshot {
            persons,
            households,
            household_index,
            person_index: person_ids,
        })
    }

    pub fn persons(&self) -> &[Person] {
        &self.persons
    }

    pub fn households(&self) -> &[Household] {
        &self.households
    }

    pub fn household(&self, id: u64) -> Option<&Household> {
        self.household_index.get(&id).map(|&i| &self.households[i])
    }

    pub fn household_of(&self, p: &Person) -> &Household {
        &self.households[self.household_index[&p.household_id]]
    }

    pub fn person(&self, id: u64) -> Option<&Person> {
        self.person_index.get(&id).map(|&i| &self.persons[i])
    }

    pub fn members<'a>(&'a self, h: &'a Household) -> impl Iterator<Item = &'a Person> + 'a {
        h.member_ids.iter().filter_map(move |id| self.person(*id))
    }

    pub fn len(&self) -> usize {
        self.persons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.persons.is_empty()
    }

    /// Rebuild with a transformed person vector, revalidating everything.
    pub fn with_persons(&self, persons: Vec<Person>) -> Result<Self, SimError> {
        Self::new(persons, self.households.clone())
    }
}
