//! JSON instance and mechanism files. Every rational is a `"p/q"` string.

use std::path::Path;

use anyhow::{bail, Context, Result};
use profitlab::mechanisms::{Kind, MechanismSpec};
use profitlab::model::{CostAtom, CostModel, DiscreteDist, Family, FamilyKind, Instance, Mask};
use profitlab::ocrs::SetSystem;
use profitlab::Q;
use serde::{Deserialize, Serialize};

pub fn fmt_q(x: &Q) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

pub fn parse_q(s: &str) -> Result<Q> {
    s.trim().parse::<Q>().map_err(|e| anyhow::anyhow!("not a rational: {s:?} ({e})"))
}

fn fmt_all(xs: &[Q]) -> Vec<String> {
    xs.iter().map(fmt_q).collect()
}

fn parse_all(xs: &[String]) -> Result<Vec<Q>> {
    xs.iter().map(|s| parse_q(s)).collect()
}

fn fmt_opt(x: &Option<Q>) -> Option<String> {
    x.as_ref().map(fmt_q)
}

fn parse_opt(x: &Option<String>) -> Result<Option<Q>> {
    x.as_deref().map(parse_q).transpose()
}

fn items_of(mask: Mask) -> Vec<usize> {
    (0..Mask::BITS as usize).filter(|j| mask & (1 << j) != 0).collect()
}

fn mask_of(items: &[usize]) -> Result<Mask> {
    items.iter().try_fold(0, |acc, &j| {
        if j >= Mask::BITS as usize {
            bail!("item index {j} out of range");
        }
        Ok(acc | (1 << j))
    })
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DistFile {
    pub support: Vec<String>,
    pub probs: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CostFile {
    pub vector: Vec<String>,
    pub prob: String,
}

/// `kind` is one of `additive`, `unit_demand`, `uniform`, `partition`,
/// `downward_closed`, `bases`; sets are lists of item indices.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum FamilyFile {
    Additive,
    UnitDemand,
    Uniform { rank: usize },
    Partition { parts: Vec<Vec<usize>>, capacities: Vec<usize> },
    DownwardClosed { generators: Vec<Vec<usize>> },
    Bases { bases: Vec<Vec<usize>> },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct InstanceFile {
    pub n: usize,
    pub m: usize,
    pub dists: Vec<Vec<DistFile>>,
    pub costs: Vec<CostFile>,
    pub families: Vec<FamilyFile>,
}

impl InstanceFile {
    pub fn from_instance(instance: &Instance) -> Self {
        let m = instance.m();
        let dists = instance
            .dists()
            .iter()
            .map(|row| {
                row.iter()
                    .map(|d| DistFile { support: fmt_all(d.support()), probs: fmt_all(d.probs()) })
                    .collect()
            })
            .collect();
        let costs = instance
            .atoms()
            .iter()
            .map(|a| CostFile { vector: fmt_all(&a.costs), prob: fmt_q(&a.prob) })
            .collect();
        let families = instance
            .families()
            .iter()
            .map(|f| match f.kind() {
                FamilyKind::Uniform { rank } if *rank == m => FamilyFile::Additive,
                FamilyKind::Uniform { rank } if *rank == 1 => FamilyFile::UnitDemand,
                FamilyKind::Uniform { rank } => FamilyFile::Uniform { rank: *rank },
                FamilyKind::Partition { parts, capacities } => FamilyFile::Partition {
                    parts: parts.iter().map(|&p| items_of(p)).collect(),
                    capacities: capacities.clone(),
                },
                FamilyKind::DownwardClosed { generators } => {
                    FamilyFile::DownwardClosed { generators: generators.iter().map(|&g| items_of(g)).collect() }
                }
                FamilyKind::Bases { bases } => FamilyFile::Bases { bases: bases.iter().map(|&b| items_of(b)).collect() },
            })
            .collect();
        Self { n: instance.n(), m, dists, costs, families }
    }

    pub fn to_instance(&self) -> Result<Instance> {
        if self.dists.len() != self.n || self.families.len() != self.n {
            bail!("expected {} rows of distributions and families", self.n);
        }
        let dists = self
            .dists
            .iter()
            .map(|row| {
                if row.len() != self.m {
                    bail!("expected {} distributions per buyer", self.m);
                }
                row.iter()
                    .map(|d| Ok(DiscreteDist::new(parse_all(&d.support)?, parse_all(&d.probs)?)?))
                    .collect()
            })
            .collect::<Result<Vec<Vec<_>>>>()?;
        let atoms = self
            .costs
            .iter()
            .map(|c| Ok(CostAtom { costs: parse_all(&c.vector)?, prob: parse_q(&c.prob)? }))
            .collect::<Result<Vec<_>>>()?;
        let m = self.m;
        let families = self
            .families
            .iter()
            .map(|f| {
                let kind = match f {
                    FamilyFile::Additive => FamilyKind::Uniform { rank: m },
                    FamilyFile::UnitDemand => FamilyKind::Uniform { rank: 1.min(m) },
                    FamilyFile::Uniform { rank } => FamilyKind::Uniform { rank: *rank },
                    FamilyFile::Partition { parts, capacities } => FamilyKind::Partition {
                        parts: parts.iter().map(|p| mask_of(p)).collect::<Result<_>>()?,
                        capacities: capacities.clone(),
                    },
                    FamilyFile::DownwardClosed { generators } => FamilyKind::DownwardClosed {
                        generators: generators.iter().map(|g| mask_of(g)).collect::<Result<_>>()?,
                    },
                    FamilyFile::Bases { bases } => {
                        FamilyKind::Bases { bases: bases.iter().map(|b| mask_of(b)).collect::<Result<_>>()? }
                    }
                };
                Ok(Family::new(m, kind)?)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Instance::new(dists, CostModel::new(atoms)?, families)?)
    }
}

/// An explicit set system over pairs `i·m + j`, listed by its members.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SetSystemFile {
    pub size: usize,
    pub members: Vec<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SpecFile {
    pub kind: String,
    pub label: String,
    pub item_prices: Vec<Vec<Vec<Option<String>>>>,
    pub permit_prices: Vec<Vec<Option<String>>>,
    pub bundle_prices: Vec<Option<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sub_constraint: Option<Vec<SetSystemFile>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hide_probs: Option<Vec<Vec<Vec<String>>>>,
    pub rationing: Vec<Vec<Vec<String>>>,
    pub zero_utility_accept: Vec<Vec<String>>,
    pub order: Vec<usize>,
}

fn map3<A, B>(x: &[Vec<Vec<A>>], f: impl Fn(&A) -> B) -> Vec<Vec<Vec<B>>> {
    x.iter().map(|r| r.iter().map(|s| s.iter().map(&f).collect()).collect()).collect()
}

fn try_map3<A, B>(x: &[Vec<Vec<A>>], f: impl Fn(&A) -> Result<B>) -> Result<Vec<Vec<Vec<B>>>> {
    x.iter().map(|r| r.iter().map(|s| s.iter().map(&f).collect()).collect()).collect()
}

impl SpecFile {
    pub fn from_spec(spec: &MechanismSpec) -> Self {
        Self {
            kind: spec.kind.name().to_string(),
            label: spec.label.clone(),
            item_prices: map3(&spec.item_prices, fmt_opt),
            permit_prices: spec.permit_prices.iter().map(|r| r.iter().map(fmt_opt).collect()).collect(),
            bundle_prices: spec.bundle_prices.iter().map(fmt_opt).collect(),
            sub_constraint: spec.sub_constraint.as_ref().map(|subs| {
                subs.iter().map(|s| SetSystemFile { size: s.size(), members: s.members().collect() }).collect()
            }),
            hide_probs: spec.hide_probs.as_ref().map(|h| map3(h, fmt_q)),
            rationing: map3(&spec.rationing, fmt_q),
            zero_utility_accept: spec.zero_utility_accept.iter().map(|r| fmt_all(r)).collect(),
            order: spec.order.clone(),
        }
    }

    pub fn to_spec(&self, instance: &Instance) -> Result<MechanismSpec> {
        let kind = Kind::parse(&self.kind).with_context(|| format!("unknown mechanism kind {:?}", self.kind))?;
        let sub_constraint = match &self.sub_constraint {
            None => None,
            Some(subs) => Some(
                subs.iter()
                    .map(|s| Ok(SetSystem::from_fn(s.size, |a| s.members.contains(&a))?))
                    .collect::<Result<Vec<_>>>()?,
            ),
        };
        let spec = MechanismSpec {
            kind,
            item_prices: try_map3(&self.item_prices, parse_opt)?,
            permit_prices: self.permit_prices.iter().map(|r| r.iter().map(parse_opt).collect()).collect::<Result<_>>()?,
            bundle_prices: self.bundle_prices.iter().map(parse_opt).collect::<Result<_>>()?,
            sub_constraint,
            hide_probs: self.hide_probs.as_ref().map(|h| try_map3(h, |s| parse_q(s))).transpose()?,
            rationing: try_map3(&self.rationing, |s| parse_q(s))?,
            zero_utility_accept: self.zero_utility_accept.iter().map(|r| parse_all(r)).collect::<Result<_>>()?,
            order: self.order.clone(),
            label: self.label.clone(),
        };
        spec.validate(instance)?;
        Ok(spec)
    }
}

pub fn read_instance(path: &Path) -> Result<Instance> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: InstanceFile = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    file.to_instance().with_context(|| format!("building {}", path.display()))
}

pub fn instance_json(instance: &Instance) -> String {
    serde_json::to_string_pretty(&InstanceFile::from_instance(instance)).expect("instance files always serialize")
}

pub fn read_spec(path: &Path, instance: &Instance) -> Result<MechanismSpec> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: SpecFile = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    file.to_spec(instance)
}

pub fn spec_json(spec: &MechanismSpec) -> String {
    serde_json::to_string_pretty(&SpecFile::from_spec(spec)).expect("spec files always serialize")
}
