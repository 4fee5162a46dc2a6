//! Exhaustive checks of the structural properties of `v̄` and `μ`:
//! monotonicity, subadditivity, no externalities, and the `τ`-Lipschitz bound.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::model::{full_mask, Instance, Mask};
use crate::rational::Q;
use crate::valuation::VbarTable;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PropertyReport {
    pub checked: usize,
    pub violations: Vec<String>,
}

impl PropertyReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.violations.push(what());
        }
    }
}

fn set_function(
    report: &mut PropertyReport,
    name: &str,
    instance: &Instance,
    i: usize,
    f: &dyn Fn(usize, Mask) -> Q,
) {
    let ts = instance.types(i);
    let full = full_mask(instance.m());
    for t in 0..ts.len() {
        for u in 0..=full {
            for v in 0..=full {
                let (fu, fv) = (f(t, u), f(t, v));
                if u & !v == 0 {
                    report.check(fu <= fv, || {
                        format!("{name} not monotone: t={t} U={u:b} V={v:b}")
                    });
                }
                report.check(f(t, u | v) <= &fu + &fv, || {
                    format!("{name} not subadditive: t={t} U={u:b} V={v:b}")
                });
            }
        }
        for t2 in 0..ts.len() {
            let same: Mask = (0..instance.m())
                .filter(|&j| ts.values[t][j] == ts.values[t2][j])
                .fold(0, |acc, j| acc | (1 << j));
            for s in 0..=full {
                if s & !same == 0 {
                    report.check(f(t, s) == f(t2, s), || {
                        format!("{name} has externalities: t={t} t'={t2} S={s:b}")
                    });
                }
            }
        }
    }
}

/// All properties for buyer `i` over every pair of types and pair of sets.
pub fn valuation_properties(
    instance: &Instance,
    i: usize,
    table: &VbarTable,
    tau: &Q,
) -> PropertyReport {
    let mut report = PropertyReport::default();
    set_function(&mut report, "v̄", instance, i, &|t, s| {
        table.sets[t][s as usize].clone()
    });
    set_function(&mut report, "μ", instance, i, &|t, s| {
        table.mu(t, s, tau).clone()
    });
    let ts = instance.types(i);
    let full = full_mask(instance.m());
    for t in 0..ts.len() {
        for t2 in 0..ts.len() {
            let differ: Mask = (0..instance.m())
                .filter(|&j| ts.values[t][j] != ts.values[t2][j])
                .fold(0, |acc, j| acc | (1 << j));
            for x in 0..=full {
                for y in 0..=full {
                    let a = table.mu(t, x, tau);
                    let b = table.mu(t2, y, tau);
                    let gap = if a > b { a - b } else { b - a };
                    let count = ((x ^ y).count_ones() + (x & y & differ).count_ones()) as i64;
                    report.check(gap <= tau * Q::from_integer(count.into()), || {
                        format!("μ not τ-Lipschitz: t={t} t'={t2} X={x:b} Y={y:b}")
                    });
                }
            }
        }
    }
    report
}
