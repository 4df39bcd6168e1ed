use std::collections::{BTreeMap, HashSet};

use ndarray::Array2;

use super::{Atom, Bond, BondOrder, MolecularGraph, SmilesError};

const PERIODIC_TABLE: [&str; 118] = [
    "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne", "Na", "Mg", "Al", "Si", "P", "S", "Cl", "Ar", "K", "Ca",
    "Sc", "Ti", "V", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As", "Se", "Br", "Kr", "Rb", "Sr", "Y",
    "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd", "In", "Sn", "Sb", "Te", "I", "Xe", "Cs", "Ba", "La", "Ce",
    "Pr", "Nd", "Pm", "Sm", "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W", "Re", "Os", "Ir",
    "Pt", "Au", "Hg", "Tl", "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th", "Pa", "U", "Np", "Pu", "Am", "Cm",
    "Bk", "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf", "Db", "Sg", "Bh", "Hs", "Mt", "Ds", "Rg", "Cn", "Nh", "Fl", "Mc",
    "Lv", "Ts", "Og",
];

/// Lowercase symbols allowed as aromatic atoms inside brackets.
const AROMATIC_BRACKET: [&str; 9] = ["se", "as", "te", "b", "c", "n", "o", "p", "s"];

fn is_element(symbol: &str) -> bool {
    PERIODIC_TABLE.contains(&symbol)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum BondSymbol {
    Explicit(BondOrder),
    /// `/` or `\`: a single bond carrying ignored stereo information.
    Stereo,
}

impl BondSymbol {
    fn order(self) -> BondOrder {
        match self {
            BondSymbol::Explicit(order) => order,
            BondSymbol::Stereo => BondOrder::Single,
        }
    }
}

struct RingOpen {
    atom: usize,
    bond: Option<BondSymbol>,
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    bond_keys: HashSet<(usize, usize)>,
    prev: Option<usize>,
    pending: Option<(BondSymbol, usize)>,
    branches: Vec<(usize, usize, usize)>,
    rings: BTreeMap<u32, RingOpen>,
    stereo: bool,
}

/// Parses a SMILES string into atoms and bonds; features are left empty.
pub fn parse_smiles(smiles: &str) -> Result<MolecularGraph, SmilesError> {
    if smiles.is_empty() {
        return Err(SmilesError::Empty);
    }
    if let Some(pos) = smiles.bytes().position(|b| !b.is_ascii()) {
        return Err(SmilesError::NonAscii(pos));
    }
    let mut parser = Parser {
        bytes: smiles.as_bytes(),
        pos: 0,
        atoms: Vec::new(),
        bonds: Vec::new(),
        bond_keys: HashSet::new(),
        prev: None,
        pending: None,
        branches: Vec::new(),
        rings: BTreeMap::new(),
        stereo: false,
    };
    parser.run()?;
    let Parser {
        mut atoms,
        bonds,
        stereo,
        ..
    } = parser;
    for bond in &bonds {
        atoms[bond.a].degree += 1;
        atoms[bond.b].degree += 1;
    }
    Ok(MolecularGraph {
        atoms,
        bonds,
        stereo_ignored: stereo,
        features: Array2::zeros((0, 0)),
    })
}

impl Parser<'_> {
    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn peek_at(&self, offset: usize) -> Option<u8> {
        self.bytes.get(self.pos + offset).copied()
    }

    fn unexpected(&self, at: usize) -> SmilesError {
        SmilesError::UnexpectedCharacter {
            character: self.bytes[at] as char,
            position: at,
        }
    }

    fn run(&mut self) -> Result<(), SmilesError> {
        while let Some(c) = self.peek() {
            let at = self.pos;
            match c {
                b'(' => {
                    let Some(prev) = self.prev else {
                        return Err(self.unexpected(at));
                    };
                    if self.pending.is_some() {
                        return Err(SmilesError::DanglingBond(at));
                    }
                    self.branches.push((prev, at, self.atoms.len()));
                    self.pos += 1;
                }
                b')' => {
                    let Some((anchor, _, atoms_at_open)) = self.branches.pop() else {
                        return Err(SmilesError::UnbalancedParenthesis(at));
                    };
                    if self.pending.is_some() {
                        return Err(SmilesError::DanglingBond(at));
                    }
                    if self.atoms.len() == atoms_at_open {
                        return Err(SmilesError::EmptyBranch(at));
                    }
                    self.prev = Some(anchor);
                    self.pos += 1;
                }
                b'-' | b'=' | b'#' | b':' | b'/' | b'\\' => {
                    if self.prev.is_none() || self.pending.is_some() {
                        return Err(self.unexpected(at));
                    }
                    let symbol = match c {
                        b'-' => BondSymbol::Explicit(BondOrder::Single),
                        b'=' => BondSymbol::Explicit(BondOrder::Double),
                        b'#' => BondSymbol::Explicit(BondOrder::Triple),
                        b':' => BondSymbol::Explicit(BondOrder::Aromatic),
                        _ => {
                            self.stereo = true;
                            BondSymbol::Stereo
                        }
                    };
                    self.pending = Some((symbol, at));
                    self.pos += 1;
                }
                b'.' => {
                    if self.pending.is_some() {
                        return Err(SmilesError::DanglingBond(at));
                    }
                    if self.prev.is_none() {
                        return Err(self.unexpected(at));
                    }
                    self.prev = None;
                    self.pos += 1;
                }
                b'0'..=b'9' | b'%' => self.ring_closure()?,
                b'[' => self.bracket_atom()?,
                _ if c.is_ascii_alphabetic() => self.organic_atom()?,
                _ => return Err(self.unexpected(at)),
            }
        }
        if let Some((_, at)) = self.pending {
            return Err(SmilesError::DanglingBond(at));
        }
        if let Some(&(_, at, _)) = self.branches.last() {
            return Err(SmilesError::UnbalancedParenthesis(at));
        }
        if let Some((&ring, _)) = self.rings.iter().next() {
            return Err(SmilesError::UnclosedRing(ring));
        }
        Ok(())
    }

    fn default_order(&self, a: usize, b: usize) -> BondOrder {
        if self.atoms[a].is_aromatic && self.atoms[b].is_aromatic {
            BondOrder::Aromatic
        } else {
            BondOrder::Single
        }
    }

    fn push_atom(&mut self, atom: Atom) {
        let idx = self.atoms.len();
        self.atoms.push(atom);
        if let Some(prev) = self.prev {
            let order = match self.pending.take() {
                Some((symbol, _)) => symbol.order(),
                None => self.default_order(prev, idx),
            };
            self.bond_keys.insert((prev.min(idx), prev.max(idx)));
            self.bonds.push(Bond { a: prev, b: idx, order });
        }
        self.prev = Some(idx);
    }

    fn ring_closure(&mut self) -> Result<(), SmilesError> {
        let at = self.pos;
        let Some(current) = self.prev else {
            return Err(self.unexpected(at));
        };
        let ring = if self.bytes[at] == b'%' {
            match (self.peek_at(1), self.peek_at(2)) {
                (Some(d1), Some(d2)) if d1.is_ascii_digit() && d2.is_ascii_digit() => {
                    self.pos += 3;
                    u32::from(d1 - b'0') * 10 + u32::from(d2 - b'0')
                }
                _ => return Err(self.unexpected(at)),
            }
        } else {
            self.pos += 1;
            u32::from(self.bytes[at] - b'0')
        };
        let pending = self.pending.take().map(|(symbol, _)| symbol);
        match self.rings.remove(&ring) {
            Some(open) => {
                let order = match (open.bond, pending) {
                    (Some(a), Some(b)) if a.order() != b.order() => {
                        return Err(SmilesError::ConflictingRingBond(ring));
                    }
                    (Some(symbol), _) | (None, Some(symbol)) => symbol.order(),
                    (None, None) => self.default_order(open.atom, current),
                };
                let key = (open.atom.min(current), open.atom.max(current));
                if open.atom == current || self.bond_keys.contains(&key) {
                    return Err(SmilesError::InvalidRingBond { ring });
                }
                self.bond_keys.insert(key);
                self.bonds.push(Bond {
                    a: open.atom,
                    b: current,
                    order,
                });
            }
            None => {
                self.rings.insert(
                    ring,
                    RingOpen {
                        atom: current,
                        bond: pending,
                    },
                );
            }
        }
        Ok(())
    }

    fn organic_atom(&mut self) -> Result<(), SmilesError> {
        let at = self.pos;
        let c = self.bytes[at];
        let next = self.peek_at(1);
        let (element, aromatic, len) = match (c, next) {
            (b'C', Some(b'l')) => ("Cl", false, 2),
            (b'B', Some(b'r')) => ("Br", false, 2),
            (b'B', _) => ("B", false, 1),
            (b'C', _) => ("C", false, 1),
            (b'N', _) => ("N", false, 1),
            (b'O', _) => ("O", false, 1),
            (b'P', _) => ("P", false, 1),
            (b'S', _) => ("S", false, 1),
            (b'F', _) => ("F", false, 1),
            (b'I', _) => ("I", false, 1),
            (b'H', _) => ("H", false, 1),
            (b'b', _) => ("B", true, 1),
            (b'c', _) => ("C", true, 1),
            (b'n', _) => ("N", true, 1),
            (b'o', _) => ("O", true, 1),
            (b'p', _) => ("P", true, 1),
            (b's', _) => ("S", true, 1),
            _ => {
                let mut end = at + 1;
                while end < self.bytes.len() && self.bytes[end].is_ascii_lowercase() {
                    end += 1;
                }
                let token = String::from_utf8_lossy(&self.bytes[at..end]).into_owned();
                return Err(SmilesError::UnknownElement { token, position: at });
            }
        };
        self.pos += len;
        self.push_atom(Atom {
            element: element.to_string(),
            formal_charge: 0,
            is_aromatic: aromatic,
            explicit_h: None,
            degree: 0,
        });
        Ok(())
    }

    fn bracket_atom(&mut self) -> Result<(), SmilesError> {
        let open = self.pos;
        let Some(len) = self.bytes[open..].iter().position(|&b| b == b']') else {
            return Err(SmilesError::MalformedBracket(open));
        };
        let body = &self.bytes[open + 1..open + len];
        self.pos = open + len + 1;

        let mut i = 0;
        // Isotope: parsed and discarded.
        while i < body.len() && body[i].is_ascii_digit() {
            i += 1;
        }
        let symbol_start = i;
        let (element, aromatic) = if i < body.len() && body[i].is_ascii_uppercase() {
            let two = (i + 1 < body.len() && body[i + 1].is_ascii_lowercase())
                .then(|| std::str::from_utf8(&body[i..i + 2]).unwrap_or(""))
                .filter(|s| is_element(s));
            match two {
                Some(symbol) => {
                    i += 2;
                    (symbol.to_string(), false)
                }
                None => {
                    let one = std::str::from_utf8(&body[i..i + 1]).unwrap_or("");
                    if !is_element(one) {
                        return Err(SmilesError::UnknownElement {
                            token: one.to_string(),
                            position: open + 1 + i,
                        });
                    }
                    i += 1;
                    (one.to_string(), false)
                }
            }
        } else if i < body.len() && body[i].is_ascii_lowercase() {
            let rest = std::str::from_utf8(&body[i..]).unwrap_or("");
            match AROMATIC_BRACKET.iter().find(|s| rest.starts_with(**s)) {
                Some(symbol) => {
                    i += symbol.len();
                    let mut upper = symbol.to_string();
                    upper[..1].make_ascii_uppercase();
                    (upper, true)
                }
                None => {
                    let end = body[i..].iter().take_while(|b| b.is_ascii_lowercase()).count();
                    return Err(SmilesError::UnknownElement {
                        token: String::from_utf8_lossy(&body[i..i + end]).into_owned(),
                        position: open + 1 + i,
                    });
                }
            }
        } else {
            let end = body[i..]
                .iter()
                .take_while(|b| !matches!(b, b'@' | b'+' | b'-' | b':'))
                .count()
                .max(1);
            let token = String::from_utf8_lossy(&body[i..(i + end).min(body.len())]).into_owned();
            return Err(SmilesError::UnknownElement {
                token,
                position: open + 1 + symbol_start,
            });
        };

        // Chirality: @, @@ and the @TH1-style classes are ignored.
        if i < body.len() && body[i] == b'@' {
            self.stereo = true;
            while i < body.len() && body[i] == b'@' {
                i += 1;
            }
            if i + 1 < body.len() && body[i].is_ascii_uppercase() && body[i + 1].is_ascii_uppercase() {
                i += 2;
                while i < body.len() && body[i].is_ascii_digit() {
                    i += 1;
                }
            }
        }

        let mut explicit_h = Some(0);
        if i < body.len() && body[i] == b'H' {
            i += 1;
            let start = i;
            while i < body.len() && body[i].is_ascii_digit() {
                i += 1;
            }
            explicit_h = Some(if start == i { 1 } else { parse_digits(&body[start..i]) });
        }

        let mut formal_charge = 0i32;
        if i < body.len() && (body[i] == b'+' || body[i] == b'-') {
            let sign = if body[i] == b'+' { 1 } else { -1 };
            let symbol = body[i];
            i += 1;
            let start = i;
            while i < body.len() && body[i].is_ascii_digit() {
                i += 1;
            }
            if start < i {
                formal_charge = sign * parse_digits(&body[start..i]) as i32;
            } else {
                let mut magnitude = 1;
                while i < body.len() && body[i] == symbol {
                    magnitude += 1;
                    i += 1;
                }
                formal_charge = sign * magnitude;
            }
        }

        // Atom class (`:n`) is ignored.
        if i < body.len() && body[i] == b':' {
            i += 1;
            let start = i;
            while i < body.len() && body[i].is_ascii_digit() {
                i += 1;
            }
            if start == i {
                return Err(SmilesError::MalformedBracket(open));
            }
        }

        if i != body.len() {
            return Err(SmilesError::MalformedBracket(open));
        }

        self.push_atom(Atom {
            element,
            formal_charge,
            is_aromatic: aromatic,
            explicit_h,
            degree: 0,
        });
        Ok(())
    }
}

fn parse_digits(digits: &[u8]) -> u32 {
    digits
        .iter()
        .fold(0u32, |acc, d| acc.saturating_mul(10).saturating_add(u32::from(d - b'0')))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(s: &str) -> (usize, usize) {
        let mol = parse_smiles(s).unwrap();
        (mol.atoms.len(), mol.bonds.len())
    }

    #[test]
    fn single_atom() {
        let mol = parse_smiles("C").unwrap();
        assert_eq!(mol.atoms.len(), 1);
        assert!(mol.bonds.is_empty());
        assert_eq!(mol.atoms[0].element, "C");
        assert_eq!(mol.atoms[0].degree, 0);
    }

    #[test]
    fn benzene_ring() {
        let mol = parse_smiles("c1ccccc1").unwrap();
        assert_eq!(mol.atoms.len(), 6);
        assert_eq!(mol.bonds.len(), 6);
        assert!(mol.atoms.iter().all(|a| a.is_aromatic && a.element == "C" && a.degree == 2));
        assert!(mol.bonds.iter().all(|b| b.order == BondOrder::Aromatic));
    }

    #[test]
    fn acetic_acid() {
        let mol = parse_smiles("CC(=O)O").unwrap();
        let elements: Vec<_> = mol.atoms.iter().map(|a| a.element.as_str()).collect();
        assert_eq!(elements, ["C", "C", "O", "O"]);
        assert_eq!(mol.bonds.len(), 3);
        let doubles = mol.bonds.iter().filter(|b| b.order == BondOrder::Double).count();
        assert_eq!(doubles, 1);
        assert_eq!(mol.atoms[1].degree, 3);
    }

    #[test]
    fn unclosed_ring() {
        assert_eq!(parse_smiles("C1CC"), Err(SmilesError::UnclosedRing(1)));
    }

    #[test]
    fn bracket_atoms() {
        let mol = parse_smiles("[13CH3][N+](=O)[O-]").unwrap();
        assert_eq!(mol.atoms[0].element, "C");
        assert_eq!(mol.atoms[0].explicit_h, Some(3));
        assert_eq!(mol.atoms[1].formal_charge, 1);
        assert_eq!(mol.atoms[3].formal_charge, -1);
        assert_eq!(mol.atoms[1].explicit_h, Some(0));
        let mol = parse_smiles("[Fe++]").unwrap();
        assert_eq!(mol.atoms[0].formal_charge, 2);
        let mol = parse_smiles("c1cc[nH]c1").unwrap();
        assert!(mol.atoms[3].is_aromatic);
        assert_eq!(mol.atoms[3].explicit_h, Some(1));
        let mol = parse_smiles("[Cl-].[Na+]").unwrap();
        assert_eq!(mol.bonds.len(), 0);
        assert_eq!(mol.atoms[1].element, "Na");
    }

    #[test]
    fn percent_ring_and_ring_bond_symbols() {
        assert_eq!(counts("C%10CCCC%10"), (5, 5));
        let mol = parse_smiles("C=1CCCCC1").unwrap();
        assert_eq!(mol.bonds.iter().filter(|b| b.order == BondOrder::Double).count(), 1);
        assert_eq!(parse_smiles("C=1CCCCC#1"), Err(SmilesError::ConflictingRingBond(1)));
    }

    #[test]
    fn stereo_is_ignored_but_flagged() {
        let mol = parse_smiles("F/C=C/F").unwrap();
        assert!(mol.stereo_ignored);
        assert_eq!(mol.bonds.len(), 3);
        let mol = parse_smiles("N[C@@H](C)C(=O)O").unwrap();
        assert!(mol.stereo_ignored);
        assert_eq!(mol.atoms.len(), 6);
        assert!(!parse_smiles("CCO").unwrap().stereo_ignored);
    }

    #[test]
    fn malformed_inputs() {
        assert!(matches!(parse_smiles("C(C"), Err(SmilesError::UnbalancedParenthesis(1))));
        assert!(matches!(parse_smiles("CC)C"), Err(SmilesError::UnbalancedParenthesis(2))));
        assert!(matches!(parse_smiles("CXC"), Err(SmilesError::UnknownElement { .. })));
        assert!(matches!(parse_smiles("C[Xx]"), Err(SmilesError::UnknownElement { .. })));
        assert!(matches!(parse_smiles("CC="), Err(SmilesError::DanglingBond(2))));
        assert!(matches!(parse_smiles("C()C"), Err(SmilesError::EmptyBranch(2))));
        assert!(matches!(parse_smiles(""), Err(SmilesError::Empty)));
        assert!(matches!(parse_smiles("C11"), Err(SmilesError::InvalidRingBond { ring: 1 })));
        assert!(matches!(parse_smiles("C[C"), Err(SmilesError::MalformedBracket(1))));
    }
}
