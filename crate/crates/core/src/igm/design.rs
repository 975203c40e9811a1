//! Design-matrix construction from person attributes.
//!
//! Covariate sets are configuration: each term expands into drop-first dummy
//! columns. The default set covers age band, gender and education; work-cell
//! terms (industry, occupation) are added where the equation conditions on
//! being in work.

use crate::population::{Gender, Person};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub const N_AGE_BANDS: usize = 6;
pub const N_EDUCATION: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Covariate {
    Intercept,
    AgeBand,
    Gender,
    Education,
    Industry,
    Occupation,
}

/// Category counts the dummy expansion needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovariateContext {
    pub n_industries: usize,
    pub n_occupations: usize,
}

impl Default for CovariateContext {
    fn default() -> Self {
        CovariateContext { n_industries: 5, n_occupations: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateSpec {
    pub terms: Vec<Covariate>,
}

impl CovariateSpec {
    /// Demographic default: intercept, age band, gender, education.
    pub fn demographic() -> Self {
        CovariateSpec {
            terms: vec![
                Covariate::Intercept,
                Covariate::AgeBand,
                Covariate::Gender,
                Covariate::Education,
            ],
        }
    }

    /// Demographic terms plus industry and occupation cells.
    pub fn with_work_cells() -> Self {
        let mut s = Self::demographic();
        s.terms.push(Covariate::Industry);
        s.terms.push(Covariate::Occupation);
        s
    }

    fn term_width(&self, term: Covariate, ctx: &CovariateContext) -> usize {
        match term {
            Covariate::Intercept => 1,
            Covariate::AgeBand => N_AGE_BANDS - 1,
            Covariate::Gender => 1,
            Covariate::Education => N_EDUCATION - 1,
            Covariate::Industry => ctx.n_industries.saturating_sub(1),
            Covariate::Occupation => ctx.n_occupations.saturating_sub(1),
        }
    }

    pub fn width(&self, ctx: &CovariateContext) -> usize {
        self.terms.iter().map(|t| self.term_width(*t, ctx)).sum()
    }

    pub fn names(&self, ctx: &CovariateContext) -> Vec<String> {
        let mut out = Vec::with_capacity(self.width(ctx));
        for t in &self.terms {
            match t {
                Covariate::Intercept => out.push("intercept".into()),
                Covariate::AgeBand => {
                    for b in 1..N_AGE_BANDS {
                        out.push(format!("age_band_{b}"));
                    }
                }
                Covariate::Gender => out.push("gender_male".into()),
                Covariate::Education => {
                    for e in 1..N_EDUCATION {
                        out.push(format!("education_{e}"));
                    }
                }
                Covariate::Industry => {
                    for i in 1..ctx.n_industries {
                        out.push(format!("industry_{i}"));
                    }
                }
                Covariate::Occupation => {
                    for o in 1..ctx.n_occupations {
                        out.push(format!("occupation_{o}"));
                    }
                }
            }
        }
        out
    }

    /// Write one design row for `person` into `out` (cleared first).
    pub fn fill_row(&self, person: &Person, ctx: &CovariateContext, out: &mut Vec<f64>) {
        out.clear();
        for t in &self.terms {
            match t {
                Covariate::Intercept => out.push(1.0),
                Covariate::AgeBand => {
                    let band = person.age_band();
                    for b in 1..N_AGE_BANDS {
                        out.push(if band == b { 1.0 } else { 0.0 });
                    }
                }
                Covariate::Gender => {
                    out.push(if person.gender == Gender::Male { 1.0 } else { 0.0 })
                }
                Covariate::Education => {
                    let e = person.education.index();
                    for lvl in 1..N_EDUCATION {
                        out.push(if e == lvl { 1.0 } else { 0.0 });
                    }
                }
                Covariate::Industry => {
                    for i in 1..ctx.n_industries {
                        out.push(if person.industry as usize == i { 1.0 } else { 0.0 });
                    }
                }
                Covariate::Occupation => {
                    for o in 1..ctx.n_occupations {
                        out.push(if person.occupation as usize == o { 1.0 } else { 0.0 });
                    }
                }
            }
        }
    }

    /// Stack design rows for a set of persons.
    pub fn build<'a>(
        &self,
        persons: impl Iterator<Item = &'a Person>,
        ctx: &CovariateContext,
    ) -> DMatrix<f64> {
        let width = self.width(ctx);
        let mut data = Vec::new();
        let mut row = Vec::with_capacity(width);
        let mut rows = 0;
        for p in persons {
            self.fill_row(p, ctx, &mut row);
            data.extend_from_slice(&row);
            rows += 1;
        }
        DMatrix::from_row_slice(rows, width, &data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::population::{generate_synthetic, SyntheticSpec};

    #[test]
    fn names_match_width() {
        let ctx = CovariateContext::default();
        for spec in [CovariateSpec::demographic(), CovariateSpec::with_work_cells()] {
            assert_eq!(spec.names(&ctx).len(), spec.width(&ctx));
        }
    }

    #[test]
    fn rows_are_dummies() {
        let snap = generate_synthetic(&SyntheticSpec::default(), 50, 1).unwrap();
        let ctx = CovariateContext::default();
        let spec = CovariateSpec::with_work_cells();
        let x = spec.build(snap.persons().iter(), &ctx);
        assert_eq!(x.nrows(), 50);
        assert_eq!(x.ncols(), spec.width(&ctx));
        for v in x.iter() {
            assert!(*v == 0.0 || *v == 1.0);
        }
    }
}
