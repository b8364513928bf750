//! Symbolic subgroup labels.
//!
//! Groups are never computed with; each label carries the predicates the
//! constructions consume (slender, finite, elliptic relative to the ambient
//! hierarchy) together with a declared partial subgroup order.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};

/// Identifier of the trivial group, which is always registered.
pub const TRIVIAL: &str = "1";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupRef {
    pub id: String,
    pub is_slender: bool,
    pub is_h_elliptic: bool,
    pub is_finite: bool,
    /// Declared immediate supergroups.
    pub supergroups: BTreeSet<String>,
}

impl GroupRef {
    pub fn new(id: impl Into<String>) -> Self {
        GroupRef {
            id: id.into(),
            is_slender: false,
            is_h_elliptic: false,
            is_finite: false,
            supergroups: BTreeSet::new(),
        }
    }

    pub fn slender(mut self) -> Self {
        self.is_slender = true;
        self
    }

    pub fn finite(mut self) -> Self {
        self.is_finite = true;
        self.is_slender = true;
        self
    }

    pub fn h_elliptic(mut self) -> Self {
        self.is_h_elliptic = true;
        self
    }

    pub fn within(mut self, sup: impl Into<String>) -> Self {
        self.supergroups.insert(sup.into());
        self
    }
}

/// The set of groups known to a run, with the declared subgroup order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupRegistry {
    groups: BTreeMap<String, GroupRef>,
    derived_count: usize,
    meets: BTreeMap<(String, String, bool), String>,
}

impl Default for GroupRegistry {
    fn default() -> Self {
        Self::new()
    }
}

impl GroupRegistry {
    pub fn new() -> Self {
        let mut groups = BTreeMap::new();
        groups.insert(TRIVIAL.to_string(), GroupRef::new(TRIVIAL).finite().h_elliptic());
        GroupRegistry { groups, derived_count: 0, meets: BTreeMap::new() }
    }

    /// Registers a group. Supergroups may be declared before or after; call
    /// [`GroupRegistry::validate`] once everything is loaded.
    pub fn insert(&mut self, group: GroupRef) -> Result<()> {
        if group.is_finite && !group.is_slender {
            return Err(Error::GroupInvariant {
                invariant: "finite implies slender",
                detail: group.id.clone(),
            });
        }
        if group.id == TRIVIAL {
            return Err(Error::GroupInvariant {
                invariant: "trivial group is built in",
                detail: "`1` cannot be redeclared".into(),
            });
        }
        self.groups.insert(group.id.clone(), group);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Result<&GroupRef> {
        self.groups.get(id).ok_or_else(|| Error::UnknownGroup(id.to_string()))
    }

    pub fn contains(&self, id: &str) -> bool {
        self.groups.contains_key(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &GroupRef> {
        self.groups.values()
    }

    pub fn is_slender(&self, id: &str) -> Result<bool> {
        Ok(self.get(id)?.is_slender)
    }

    pub fn is_h_elliptic(&self, id: &str) -> Result<bool> {
        Ok(self.get(id)?.is_h_elliptic)
    }

    /// Adds `sub ≤ sup` to the declared order.
    pub fn declare_subgroup(&mut self, sub: &str, sup: &str) -> Result<()> {
        let sup_slender = self.get(sup)?.is_slender;
        if sub == TRIVIAL || sub == sup {
            return Ok(());
        }
        if sup_slender && !self.get(sub)?.is_slender {
            return Err(Error::GroupInvariant {
                invariant: "subgroups of slender groups are slender",
                detail: format!("cannot place non-slender `{sub}` below slender `{sup}`"),
            });
        }
        let g = self.groups.get_mut(sub).ok_or_else(|| Error::UnknownGroup(sub.to_string()))?;
        g.supergroups.insert(sup.to_string());
        Ok(())
    }

    /// Reflexive-transitive closure of the declared order. The trivial group
    /// lies below everything.
    pub fn is_subgroup(&self, sub: &str, sup: &str) -> bool {
        if sub == sup || sub == TRIVIAL {
            return true;
        }
        let mut seen = BTreeSet::new();
        let mut stack = vec![sub];
        while let Some(g) = stack.pop() {
            if !seen.insert(g) {
                continue;
            }
            if let Some(gr) = self.groups.get(g) {
                for s in &gr.supergroups {
                    if s == sup {
                        return true;
                    }
                    stack.push(s);
                }
            }
        }
        false
    }

    pub fn is_equal(&self, a: &str, b: &str) -> bool {
        self.is_subgroup(a, b) && self.is_subgroup(b, a)
    }

    /// `sub` is a proper subgroup of `sup` in the declared order.
    pub fn is_proper_subgroup(&self, sub: &str, sup: &str) -> bool {
        self.is_subgroup(sub, sup) && !self.is_subgroup(sup, sub)
    }

    /// Checks the registry invariants: every referenced supergroup exists,
    /// slenderness is closed under passing to subgroups, and any cycle in the
    /// order is a declared equality between groups with identical flags.
    pub fn validate(&self) -> Result<()> {
        for g in self.groups.values() {
            for s in &g.supergroups {
                let sup = self.get(s)?;
                if sup.is_slender && !g.is_slender {
                    return Err(Error::GroupInvariant {
                        invariant: "subgroups of slender groups are slender",
                        detail: format!("`{}` ≤ slender `{}` but is not slender", g.id, s),
                    });
                }
                if sup.is_h_elliptic && !g.is_h_elliptic {
                    return Err(Error::GroupInvariant {
                        invariant: "subgroups of H-elliptic groups are H-elliptic",
                        detail: format!("`{}` ≤ `{}`", g.id, s),
                    });
                }
                if self.is_subgroup(s, &g.id) {
                    let same = sup.is_slender == g.is_slender
                        && sup.is_finite == g.is_finite
                        && sup.is_h_elliptic == g.is_h_elliptic;
                    if !same {
                        return Err(Error::GroupInvariant {
                            invariant: "declared order is acyclic up to declared equality",
                            detail: format!("`{}` and `{}` form a cycle but differ in flags", g.id, s),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Registers a fresh group with a name derived from `stem`.
    pub fn derive(
        &mut self,
        stem: &str,
        supergroups: &[&str],
        is_slender: bool,
        is_h_elliptic: bool,
    ) -> String {
        self.derived_count += 1;
        let id = format!("{stem}#{}", self.derived_count);
        let mut g = GroupRef::new(id.clone());
        g.is_slender = is_slender;
        g.is_h_elliptic = is_h_elliptic;
        g.supergroups = supergroups.iter().map(|s| s.to_string()).collect();
        self.groups.insert(id.clone(), g);
        id
    }

    /// Intersection of two groups. Comparable groups meet in the smaller one;
    /// otherwise a group below both is registered, slender (resp.
    /// H-elliptic) if either side is, and every known group below both sides
    /// is declared below it. `force_slender` records an external reason the
    /// intersection is slender, e.g. it lies in an edge group. Repeated
    /// meets return the same group.
    pub fn meet(&mut self, a: &str, b: &str, force_slender: bool) -> Result<String> {
        let (ga, gb) = (self.get(a)?.clone(), self.get(b)?.clone());
        if self.is_subgroup(a, b) && !(force_slender && !ga.is_slender) {
            return Ok(a.to_string());
        }
        if self.is_subgroup(b, a) && !(force_slender && !gb.is_slender) {
            return Ok(b.to_string());
        }
        let key = if a <= b { (a.to_string(), b.to_string(), force_slender) } else { (b.to_string(), a.to_string(), force_slender) };
        if let Some(m) = self.meets.get(&key) {
            return Ok(m.clone());
        }
        let slender = force_slender || ga.is_slender || gb.is_slender;
        let h_ell = ga.is_h_elliptic || gb.is_h_elliptic;
        let m = self.derive(&format!("({}∧{})", key.0, key.1), &[a, b], slender, h_ell);
        let below: Vec<String> = self
            .groups
            .values()
            .filter(|h| h.id != m && h.id != TRIVIAL && (h.is_slender || !slender))
            .filter(|h| self.is_subgroup(&h.id, a) && self.is_subgroup(&h.id, b))
            .map(|h| h.id.clone())
            .collect();
        for h in below {
            self.declare_subgroup(&h, &m)?;
        }
        self.meets.insert(key, m.clone());
        Ok(m)
    }
}
