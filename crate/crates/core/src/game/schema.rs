//! JSON document form for fully explicit games.
//!
//! Schema `gamelab.game.v1`: players, explicit action/type lists (bit strings
//! as `{len, hex}`), the type-distribution table with `"p/q"` probabilities,
//! and either a utility table or the name of a built-in rule.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::rat::{self, rat_int, Rat};

use super::{BayesianGame, Space, TypeDist, UtilityFn};

pub const GAME_SCHEMA: &str = "gamelab.game.v1";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GameDoc {
    pub schema: String,
    pub name: String,
    pub players: usize,
    pub action_spaces: Vec<Vec<BitString>>,
    pub type_spaces: Vec<Vec<BitString>>,
    pub type_dist: Vec<DistEntryDoc>,
    pub utilities: UtilityDoc,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistEntryDoc {
    pub types: Vec<BitString>,
    #[serde(with = "rat::pq")]
    pub p: Rat,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UtilityDoc {
    Table(Vec<UtilityEntryDoc>),
    Builtin(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UtilityEntryDoc {
    pub types: Vec<BitString>,
    pub actions: Vec<BitString>,
    #[serde(with = "rat::pq_vec")]
    pub values: Vec<Rat>,
}

/// Serializes a fully explicit game to its JSON document.
pub fn game_to_json(game: &BayesianGame) -> Result<String> {
    let explicit = |spaces: &[Space]| -> Result<Vec<Vec<BitString>>> {
        spaces
            .iter()
            .map(|s| {
                s.explicit().map(<[BitString]>::to_vec).ok_or_else(|| {
                    Error::UnsupportedMode(
                        "only games with explicit spaces serialize to JSON".into(),
                    )
                })
            })
            .collect()
    };
    let dist = game.type_dist().as_explicit().ok_or_else(|| {
        Error::UnsupportedMode("only explicit type distributions serialize to JSON".into())
    })?;
    let utilities = match game.utility_fn() {
        UtilityFn::Table(t) => UtilityDoc::Table(
            t.entries()
                .iter()
                .map(|(types, actions, values)| UtilityEntryDoc {
                    types: types.clone(),
                    actions: actions.clone(),
                    values: values.clone(),
                })
                .collect(),
        ),
        UtilityFn::Builtin { name, .. } => UtilityDoc::Builtin(name.clone()),
    };
    let doc = GameDoc {
        schema: GAME_SCHEMA.to_string(),
        name: game.name().to_string(),
        players: game.num_players(),
        action_spaces: explicit(&game.actions)?,
        type_spaces: explicit(&game.types)?,
        type_dist: dist
            .entries()
            .iter()
            .map(|(types, p)| DistEntryDoc {
                types: types.clone(),
                p: p.clone(),
            })
            .collect(),
        utilities,
    };
    serde_json::to_string_pretty(&doc).map_err(Into::into)
}

/// Parses a game document back into a [`BayesianGame`].
pub fn game_from_json(json: &str) -> Result<BayesianGame> {
    let doc: GameDoc = serde_json::from_str(json)?;
    if doc.schema != GAME_SCHEMA {
        return Err(Error::Parse(format!(
            "unsupported schema {:?}, expected {GAME_SCHEMA:?}",
            doc.schema
        )));
    }
    if doc.action_spaces.len() != doc.players || doc.type_spaces.len() != doc.players {
        return Err(Error::Parse("space lists must match the player count".into()));
    }
    let dist: Vec<(Vec<BitString>, Rat)> = doc
        .type_dist
        .into_iter()
        .map(|e| (e.types, e.p))
        .collect();
    match doc.utilities {
        UtilityDoc::Table(entries) => BayesianGame::from_tables(
            doc.name,
            doc.action_spaces,
            doc.type_spaces,
            dist,
            entries
                .into_iter()
                .map(|e| (e.types, e.actions, e.values))
                .collect(),
        ),
        UtilityDoc::Builtin(name) => {
            let (f, range) = builtin_utility(&name).ok_or_else(|| {
                Error::Parse(format!("unknown builtin utility {name:?}"))
            })?;
            BayesianGame::from_parts(
                doc.name,
                doc.action_spaces.into_iter().map(Space::Explicit).collect(),
                doc.type_spaces.into_iter().map(Space::Explicit).collect(),
                TypeDist::explicit(dist)?,
                UtilityFn::Builtin { name, f },
                range,
                None,
            )
        }
    }
}

type BuiltinEntry = (Arc<super::UtilityClosure>, (Rat, Rat));

/// Registry of named utility rules reconstructable from a document.
fn builtin_utility(name: &str) -> Option<BuiltinEntry> {
    match name {
        "matching_pennies" => {
            let f = Arc::new(
                |_types: &[BitString], actions: &[BitString]| -> Result<Vec<Rat>> {
                    if actions.len() != 2 {
                        return Err(Error::Argument("matching pennies is 2-player".into()));
                    }
                    Ok(if actions[0] == actions[1] {
                        vec![rat_int(1), rat_int(-1)]
                    } else {
                        vec![rat_int(-1), rat_int(1)]
                    })
                },
            );
            Some((f, (rat_int(-1), rat_int(1))))
        }
        _ => None,
    }
}
