//! Population representation: persons, households, control totals,
//! CSV ingestion and synthetic generation.

mod control_totals;
mod household;
mod io;
mod person;
mod snapshot;
mod synthetic;

pub use control_totals::{apportion, CellShare, ControlTotals, GrowthFactor, TakeupCount};
pub use household::Household;
pub use io::{
    load_control_totals, load_population, write_control_totals, write_population, ColumnMap,
    POPULATION_COLUMNS,
};
pub use person::{
    CommuteMode, Contract, Education, Gender, IncomeSource, LabourState, Person, Sector,
    SourceKind, SOURCE_KINDS,
};
pub use snapshot::PopulationSnapshot;
pub use synthetic::{generate_synthetic, SyntheticSpec};
