use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Role of an observable in a state-space model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    /// Exogenous state: own-lag AR(1) driven by an orthogonal shock.
    Exo,
    /// Endogenous state: determined at `t`, its lag drives the system.
    Endo,
    /// Control: determined contemporaneously by the states.
    Control,
}

/// Assignment of every observable to exogenous state, endogenous state or
/// control. This is the identity of a candidate model.
///
/// The three sets are disjoint and at least one state is present. The bound
/// `n_states <= k - 2` applies to search candidates and is enforced by the
/// search, not here.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawPartition", into = "RawPartition")]
pub struct StatePartition {
    exo_states: Vec<String>,
    endo_states: Vec<String>,
    controls: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct RawPartition {
    exo_states: Vec<String>,
    endo_states: Vec<String>,
    controls: Vec<String>,
}

impl TryFrom<RawPartition> for StatePartition {
    type Error = Error;
    fn try_from(raw: RawPartition) -> Result<Self> {
        StatePartition::new(raw.exo_states, raw.endo_states, raw.controls)
    }
}

impl From<StatePartition> for RawPartition {
    fn from(p: StatePartition) -> Self {
        RawPartition {
            exo_states: p.exo_states,
            endo_states: p.endo_states,
            controls: p.controls,
        }
    }
}

fn check_name(name: &str) -> Result<()> {
    if name.is_empty() {
        return Err(Error::InvalidPartition("empty variable name".into()));
    }
    if name.chars().any(|c| c.is_whitespace() || matches!(c, ',' | ';' | '=')) {
        return Err(Error::InvalidPartition(format!(
            "variable name `{name}` may not contain whitespace, ',', ';' or '='"
        )));
    }
    Ok(())
}

impl StatePartition {
    pub fn new<A, B, C>(
        exo_states: impl IntoIterator<Item = A>,
        endo_states: impl IntoIterator<Item = B>,
        controls: impl IntoIterator<Item = C>,
    ) -> Result<Self>
    where
        A: Into<String>,
        B: Into<String>,
        C: Into<String>,
    {
        let exo_states: Vec<String> = exo_states.into_iter().map(Into::into).collect();
        let endo_states: Vec<String> = endo_states.into_iter().map(Into::into).collect();
        let controls: Vec<String> = controls.into_iter().map(Into::into).collect();

        let mut seen = BTreeSet::new();
        for name in exo_states.iter().chain(&endo_states).chain(&controls) {
            check_name(name)?;
            if !seen.insert(name.as_str()) {
                return Err(Error::InvalidPartition(format!(
                    "variable `{name}` assigned more than once"
                )));
            }
        }
        if exo_states.is_empty() && endo_states.is_empty() {
            return Err(Error::InvalidPartition(
                "a model needs at least one state variable".into(),
            ));
        }
        Ok(Self {
            exo_states,
            endo_states,
            controls,
        })
    }

    /// Builds a partition over `names` (kept in that order) from the given
    /// exogenous and endogenous states; every other name becomes a control.
    pub fn from_states(names: &[String], exo: &[&str], endo: &[&str]) -> Result<Self> {
        for s in exo.iter().chain(endo) {
            if !names.iter().any(|n| n == s) {
                return Err(Error::UnknownVariable((*s).to_string()));
            }
        }
        let pick = |set: &[&str]| -> Vec<String> {
            names
                .iter()
                .filter(|n| set.contains(&n.as_str()))
                .cloned()
                .collect()
        };
        let controls = names
            .iter()
            .filter(|n| !exo.contains(&n.as_str()) && !endo.contains(&n.as_str()))
            .cloned()
            .collect::<Vec<_>>();
        Self::new(pick(exo), pick(endo), controls)
    }

    pub fn exo_states(&self) -> &[String] {
        &self.exo_states
    }

    pub fn endo_states(&self) -> &[String] {
        &self.endo_states
    }

    pub fn controls(&self) -> &[String] {
        &self.controls
    }

    pub fn names(&self, role: Role) -> &[String] {
        match role {
            Role::Exo => &self.exo_states,
            Role::Endo => &self.endo_states,
            Role::Control => &self.controls,
        }
    }

    pub fn n_states(&self) -> usize {
        self.exo_states.len() + self.endo_states.len()
    }

    pub fn n_endo(&self) -> usize {
        self.endo_states.len()
    }

    /// Total number of observables.
    pub fn k(&self) -> usize {
        self.n_states() + self.controls.len()
    }

    /// All observables: exogenous states, then endogenous states, then controls.
    pub fn all_names(&self) -> impl Iterator<Item = &String> {
        self.exo_states
            .iter()
            .chain(&self.endo_states)
            .chain(&self.controls)
    }

    pub fn role_of(&self, name: &str) -> Option<Role> {
        if self.exo_states.iter().any(|n| n == name) {
            Some(Role::Exo)
        } else if self.endo_states.iter().any(|n| n == name) {
            Some(Role::Endo)
        } else if self.controls.iter().any(|n| n == name) {
            Some(Role::Control)
        } else {
            None
        }
    }

    /// Order-independent encoding used as the final tie-break when ranking.
    pub fn canonical(&self) -> String {
        let sorted = |v: &[String]| {
            let mut v = v.to_vec();
            v.sort();
            v.join(",")
        };
        format!(
            "exo={};endo={}",
            sorted(&self.exo_states),
            sorted(&self.endo_states)
        )
    }

    /// True when both partitions assign every name to the same role.
    pub fn same_roles(&self, other: &StatePartition) -> bool {
        let set = |v: &[String]| v.iter().cloned().collect::<BTreeSet<_>>();
        set(&self.exo_states) == set(&other.exo_states)
            && set(&self.endo_states) == set(&other.endo_states)
            && set(&self.controls) == set(&other.controls)
    }
}

impl fmt::Display for StatePartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "exo={};endo={};controls={}",
            self.exo_states.join(","),
            self.endo_states.join(","),
            self.controls.join(",")
        )
    }
}

impl FromStr for StatePartition {
    type Err = Error;

    /// Parses `exo=a,b;endo=c;controls=d,e` (field order fixed, empty lists allowed).
    fn from_str(s: &str) -> Result<Self> {
        let mut fields = s.trim().split(';');
        let mut take = |key: &str| -> Result<Vec<String>> {
            let field = fields
                .next()
                .ok_or_else(|| Error::Parse(format!("partition `{s}` is missing `{key}=`")))?;
            let rest = field
                .trim()
                .strip_prefix(key)
                .and_then(|r| r.strip_prefix('='))
                .ok_or_else(|| Error::Parse(format!("expected `{key}=` in partition `{s}`")))?;
            Ok(rest
                .split(',')
                .map(str::trim)
                .filter(|n| !n.is_empty())
                .map(String::from)
                .collect())
        };
        let exo = take("exo")?;
        let endo = take("endo")?;
        let controls = take("controls")?;
        if fields.next().is_some() {
            return Err(Error::Parse(format!("trailing fields in partition `{s}`")));
        }
        StatePartition::new(exo, endo, controls)
    }
}
