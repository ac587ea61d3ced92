//! Column layout of the compiled program.
//!
//! Every decision variable owns one contiguous block. A block is indexed by
//! a 1-based step and a 0-based entity (bus, branch, device or trip slot):
//! `col = start + (t - 1) * width + entity`. Trip-slot blocks have a single
//! step.

use std::ops::Range;

use serde::Serialize;

use crate::scenario::Scenario;
use crate::transport::TransportIndex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Symbol {
    /// Squared bus voltage magnitude.
    V,
    /// Bus real injection.
    P,
    /// Bus reactive injection.
    Q,
    /// Squared branch current.
    L,
    BranchP,
    BranchQ,
    PGen,
    Fuel,
    Pickup,
    Charge,
    Discharge,
    /// Charging mode, 1 = charging.
    Mode,
    Soc,
    SocUpper,
    SocLower,
    /// Net SoC moved in or out by trips.
    Phi,
    TripSoc,
    TripUpper,
    TripLower,
    TripCount,
}

impl Symbol {
    pub const ALL: [Symbol; 20] = [
        Symbol::V,
        Symbol::P,
        Symbol::Q,
        Symbol::L,
        Symbol::BranchP,
        Symbol::BranchQ,
        Symbol::PGen,
        Symbol::Fuel,
        Symbol::Pickup,
        Symbol::Charge,
        Symbol::Discharge,
        Symbol::Mode,
        Symbol::Soc,
        Symbol::SocUpper,
        Symbol::SocLower,
        Symbol::Phi,
        Symbol::TripSoc,
        Symbol::TripUpper,
        Symbol::TripLower,
        Symbol::TripCount,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Symbol::V => "v",
            Symbol::P => "p",
            Symbol::Q => "q",
            Symbol::L => "l",
            Symbol::BranchP => "P",
            Symbol::BranchQ => "Q",
            Symbol::PGen => "p_gen",
            Symbol::Fuel => "f",
            Symbol::Pickup => "r",
            Symbol::Charge => "p_ch",
            Symbol::Discharge => "p_dis",
            Symbol::Mode => "d",
            Symbol::Soc => "s",
            Symbol::SocUpper => "s_up",
            Symbol::SocLower => "s_lo",
            Symbol::Phi => "phi",
            Symbol::TripSoc => "S",
            Symbol::TripUpper => "S_up",
            Symbol::TripLower => "S_lo",
            Symbol::TripCount => "k",
        }
    }

    pub fn is_trip(self) -> bool {
        matches!(
            self,
            Symbol::TripSoc | Symbol::TripUpper | Symbol::TripLower | Symbol::TripCount
        )
    }

    /// Variables carried through `T + 1` steps.
    pub fn has_terminal_step(self) -> bool {
        matches!(
            self,
            Symbol::Fuel | Symbol::Soc | Symbol::SocUpper | Symbol::SocLower | Symbol::Phi
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Block {
    pub symbol: Symbol,
    pub start: usize,
    pub width: usize,
    pub steps: usize,
}

impl Block {
    pub fn len(&self) -> usize {
        self.width * self.steps
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> Range<usize> {
        self.start..self.start + self.len()
    }

    /// Column of entity `e` at 1-based step `t`.
    pub fn col(&self, t: usize, e: usize) -> usize {
        debug_assert!(t >= 1 && t <= self.steps && e < self.width, "{:?} t={t} e={e}", self.symbol);
        self.start + (t - 1) * self.width + e
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariableAtlas {
    blocks: Vec<Block>,
    n_cols: usize,
}

impl VariableAtlas {
    pub fn new(scenario: &Scenario, index: &TransportIndex) -> Self {
        let steps = scenario.steps();
        let mut blocks = Vec::with_capacity(Symbol::ALL.len());
        let mut start = 0;
        for symbol in Symbol::ALL {
            let width = match symbol {
                Symbol::V | Symbol::P | Symbol::Q => scenario.buses.len(),
                Symbol::L | Symbol::BranchP | Symbol::BranchQ => scenario.branches.len(),
                Symbol::PGen | Symbol::Fuel => scenario.generators.len(),
                Symbol::Pickup => scenario.loads.len(),
                Symbol::Charge
                | Symbol::Discharge
                | Symbol::Mode
                | Symbol::Soc
                | Symbol::SocUpper
                | Symbol::SocLower
                | Symbol::Phi => scenario.ess.len(),
                Symbol::TripSoc | Symbol::TripUpper | Symbol::TripLower | Symbol::TripCount => index.len(),
            };
            let block_steps = if symbol.is_trip() {
                1
            } else if symbol.has_terminal_step() {
                steps + 1
            } else {
                steps
            };
            let block = Block {
                symbol,
                start,
                width,
                steps: block_steps,
            };
            start += block.len();
            blocks.push(block);
        }
        Self { blocks, n_cols: start }
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block(&self, symbol: Symbol) -> &Block {
        // Blocks are stored in `Symbol::ALL` order.
        &self.blocks[symbol as usize]
    }

    pub fn col(&self, symbol: Symbol, t: usize, e: usize) -> usize {
        self.block(symbol).col(t, e)
    }

    pub fn trip(&self, symbol: Symbol, slot: usize) -> usize {
        self.block(symbol).col(1, slot)
    }

    /// `(symbol, step, entity)` of a column.
    pub fn locate(&self, col: usize) -> Option<(Symbol, usize, usize)> {
        self.blocks.iter().find(|b| b.range().contains(&col)).map(|b| {
            let offset = col - b.start;
            (b.symbol, offset / b.width + 1, offset % b.width)
        })
    }

    /// Checks that every symbol owns exactly one block and that the blocks
    /// tile `0..n_cols` without gaps or overlaps.
    pub fn audit(&self) -> Result<(), String> {
        if self.blocks.len() != Symbol::ALL.len() {
            return Err(format!("{} blocks for {} symbols", self.blocks.len(), Symbol::ALL.len()));
        }
        let mut next = 0;
        for (block, symbol) in self.blocks.iter().zip(Symbol::ALL) {
            if block.symbol != symbol {
                return Err(format!("block for {:?} found where {:?} belongs", block.symbol, symbol));
            }
            if block.start != next {
                return Err(format!("{} starts at {} instead of {next}", symbol.name(), block.start));
            }
            next += block.len();
        }
        if next != self.n_cols {
            return Err(format!("blocks cover {next} of {} columns", self.n_cols));
        }
        Ok(())
    }

    /// Human-readable column names, e.g. `v[t3,bus5]` or `k[a0:3->7,t1,w2,n1]`.
    pub fn column_names(&self, scenario: &Scenario, index: &TransportIndex) -> Vec<String> {
        let mut names = Vec::with_capacity(self.n_cols);
        for b in &self.blocks {
            for t in 1..=b.steps {
                for e in 0..b.width {
                    let entity = match b.symbol {
                        Symbol::V | Symbol::P | Symbol::Q => format!("bus{}", scenario.buses[e].id),
                        Symbol::L | Symbol::BranchP | Symbol::BranchQ => {
                            let br = &scenario.branches[e];
                            format!("{}-{}", br.from, br.to)
                        }
                        Symbol::PGen | Symbol::Fuel => format!("gen{}", scenario.generators[e].bus),
                        Symbol::Pickup => format!("load{}", scenario.loads[e].bus),
                        Symbol::TripSoc | Symbol::TripUpper | Symbol::TripLower | Symbol::TripCount => {
                            let s = index.slot(e);
                            format!("a{}:{}->{},t{},w{},n{}", s.arc, s.from, s.to, s.depart, s.travel, s.mess_type + 1)
                        }
                        _ => format!("ess{}", scenario.ess[e].bus),
                    };
                    if b.symbol.is_trip() {
                        names.push(format!("{}[{entity}]", b.symbol.name()));
                    } else {
                        names.push(format!("{}[t{t},{entity}]", b.symbol.name()));
                    }
                }
            }
        }
        names
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances;

    #[test]
    fn desk_atlas_passes_audit() {
        let s = instances::desk();
        let index = TransportIndex::build(&s);
        let atlas = VariableAtlas::new(&s, &index);
        atlas.audit().unwrap();
        assert_eq!(atlas.block(Symbol::Soc).steps, s.steps() + 1);
        assert_eq!(atlas.block(Symbol::Charge).steps, s.steps());
        assert_eq!(atlas.block(Symbol::TripCount).width, index.len());
    }

    #[test]
    fn locate_inverts_col() {
        let s = instances::desk();
        let index = TransportIndex::build(&s);
        let atlas = VariableAtlas::new(&s, &index);
        let c = atlas.col(Symbol::SocUpper, 4, 2);
        assert_eq!(atlas.locate(c), Some((Symbol::SocUpper, 4, 2)));
        assert_eq!(atlas.locate(atlas.n_cols()), None);
    }

    #[test]
    fn names_are_unique() {
        let s = instances::desk();
        let index = TransportIndex::build(&s);
        let atlas = VariableAtlas::new(&s, &index);
        let names = atlas.column_names(&s, &index);
        let unique: std::collections::HashSet<_> = names.iter().collect();
        assert_eq!(unique.len(), names.len());
        assert_eq!(names.len(), atlas.n_cols());
    }
}
