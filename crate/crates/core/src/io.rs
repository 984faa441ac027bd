//! JSON-compatible text formats for algebras, templates and instances.
//! External labels (variable and relation names) live here; the in-memory
//! model works with 0-based indices throughout.

use crate::algebra::{FiniteAlgebra, OperationTable};
use crate::csp::{Constraint, CspInstance, Relation, RelationalTemplate};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OperationFile {
    pub name: String,
    pub arity: usize,
    pub table: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlgebraFile {
    pub name: String,
    pub size: usize,
    pub operations: Vec<OperationFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RelationFile {
    pub name: String,
    pub arity: usize,
    pub tuples: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TemplateFile {
    pub domain_size: usize,
    pub relations: Vec<RelationFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polymorphisms: Option<Vec<OperationFile>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstraintFile {
    pub relation: String,
    pub scope: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceFile {
    pub variables: Vec<String>,
    pub constraints: Vec<ConstraintFile>,
}

pub fn algebra_to_file(alg: &FiniteAlgebra) -> AlgebraFile {
    AlgebraFile {
        name: alg.name().to_string(),
        size: alg.size(),
        operations: alg
            .ops()
            .iter()
            .map(|op| OperationFile {
                name: op.name().to_string(),
                arity: op.arity(),
                table: op.table().to_vec(),
            })
            .collect(),
    }
}

pub fn algebra_from_file(file: &AlgebraFile) -> Result<FiniteAlgebra> {
    let ops = file
        .operations
        .iter()
        .map(|op| OperationTable::new(op.name.clone(), op.arity, file.size, op.table.clone()))
        .collect::<Result<Vec<_>>>()?;
    FiniteAlgebra::new(file.name.clone(), file.size, ops)
}

pub fn template_to_file(t: &RelationalTemplate) -> TemplateFile {
    TemplateFile {
        domain_size: t.domain_size(),
        relations: t
            .relations()
            .iter()
            .map(|r| RelationFile {
                name: r.name().to_string(),
                arity: r.arity(),
                tuples: r.tuples().iter().cloned().collect(),
            })
            .collect(),
        polymorphisms: if t.declared_polymorphisms().is_empty() {
            None
        } else {
            Some(
                t.declared_polymorphisms()
                    .iter()
                    .map(|op| OperationFile {
                        name: op.name().to_string(),
                        arity: op.arity(),
                        table: op.table().to_vec(),
                    })
                    .collect(),
            )
        },
    }
}

/// Loads a template; `add_singletons` applies the idempotency
/// normalization (on by default in the CLI). Declared polymorphisms are
/// re-verified during construction.
pub fn template_from_file(file: &TemplateFile, add_singletons: bool) -> Result<RelationalTemplate> {
    let relations = file
        .relations
        .iter()
        .map(|r| Relation::new(r.name.clone(), r.arity, r.tuples.iter().cloned().collect::<BTreeSet<_>>()))
        .collect::<Result<Vec<_>>>()?;
    let template = RelationalTemplate::new(file.domain_size, relations, add_singletons)?;
    match &file.polymorphisms {
        None => Ok(template),
        Some(polys) => {
            let ops = polys
                .iter()
                .map(|op| {
                    OperationTable::new(op.name.clone(), op.arity, file.domain_size, op.table.clone())
                })
                .collect::<Result<Vec<_>>>()?;
            template.with_polymorphisms(ops)
        }
    }
}

pub fn instance_to_file(i: &CspInstance, t: &RelationalTemplate) -> InstanceFile {
    InstanceFile {
        variables: i.variables().to_vec(),
        constraints: i
            .constraints()
            .iter()
            .map(|c| ConstraintFile {
                relation: t.relations()[c.relation].name().to_string(),
                scope: c.scope.iter().map(|&v| i.variables()[v].clone()).collect(),
            })
            .collect(),
    }
}

pub fn instance_from_file(file: &InstanceFile, t: &RelationalTemplate) -> Result<CspInstance> {
    let var_index = |name: &str| {
        file.variables
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| Error::InvalidInstance(format!("scope names undeclared variable {name}")))
    };
    let constraints = file
        .constraints
        .iter()
        .map(|c| {
            let relation = t
                .relation_index(&c.relation)
                .ok_or_else(|| Error::InvalidInstance(format!("unknown relation {}", c.relation)))?;
            let scope = c.scope.iter().map(|s| var_index(s)).collect::<Result<Vec<_>>>()?;
            Ok(Constraint { relation, scope })
        })
        .collect::<Result<Vec<_>>>()?;
    CspInstance::new(t, file.variables.clone(), constraints)
}

/// Canonical pretty-printed JSON with a trailing newline; byte-identical
/// for identical values.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| Error::Precondition(format!("serialization failed: {e}")))
}

pub fn from_json_str<'a, T: Deserialize<'a>>(text: &'a str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Precondition(format!("malformed JSON: {e}")))
}
