use std::collections::BTreeSet;

use super::ast::{Label, Stmt};
use super::LangError;

/// Gives every unlabelled block the smallest unused positive label, in
/// program-text order. Existing labels are kept.
pub fn assign_labels(stmt: &Stmt) -> Result<Stmt, LangError> {
    let mut used = BTreeSet::new();
    let mut dup = None;
    stmt.visit_blocks(&mut |s| {
        if let Some(l) = s.label() {
            if !used.insert(l) && dup.is_none() {
                dup = Some(l);
            }
        }
    });
    if let Some(l) = dup {
        return Err(LangError::DuplicateLabel {
            line: 0,
            col: 0,
            label: l.0,
        });
    }

    let mut out = stmt.clone();
    let mut next = 1u32;
    out.visit_blocks_mut(&mut |slot| {
        if slot.is_none() {
            while used.contains(&Label(next)) {
                next += 1;
            }
            used.insert(Label(next));
            *slot = Some(Label(next));
        }
    });
    Ok(out)
}
