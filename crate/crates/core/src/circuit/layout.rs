//! Rotated surface-code geometry.
//!
//! Data sites are indexed `(i, j)` with `i` the column and `j` the row, both
//! in `0..d`; site `(i, j)` sits at doubled coordinate `(2i + 1, 2j + 1)`.
//! Stabilizer positions `(a, b)` live in `0..=d` at doubled `(2a, 2b)` and
//! cover the data sites `{a - 1, a} x {b - 1, b}` that exist.
//!
//! Interior plaquettes with `a + b` even are X-type. X-type weight-two
//! plaquettes sit on the left and right edges, Z-type ones on the top and
//! bottom, so logical Z runs down the left column and logical X along the
//! top row.
//!
//! CX schedule (offsets are doubled `(dx, dy)` from ancilla to data):
//!
//! | step | X-type   | Z-type   |
//! |------|----------|----------|
//! | 1    | (+1, +1) | (+1, +1) |
//! | 2    | (+1, -1) | (-1, +1) |
//! | 3    | (-1, +1) | (+1, -1) |
//! | 4    | (-1, -1) | (-1, -1) |
//!
//! Hook errors from the last two steps are vertical pairs for X-type and
//! horizontal pairs for Z-type, perpendicular to the logical of the same type.

use super::Basis;

pub const X_ORDER: [(i32, i32); 4] = [(1, 1), (1, -1), (-1, 1), (-1, -1)];
pub const Z_ORDER: [(i32, i32); 4] = [(1, 1), (-1, 1), (1, -1), (-1, -1)];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StabilizerSite {
    pub pos: (usize, usize),
    pub basis: Basis,
    /// Data-site indices in schedule order; `None` where the step has no partner.
    pub schedule: [Option<usize>; 4],
}

impl StabilizerSite {
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.schedule.iter().flatten().copied()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatchLayout {
    pub d: usize,
    pub stabilizers: Vec<StabilizerSite>,
}

impl PatchLayout {
    pub fn new(d: usize) -> Self {
        let mut stabilizers = Vec::new();
        for b in 0..=d {
            for a in 0..=d {
                let basis = if (a + b) % 2 == 0 { Basis::X } else { Basis::Z };
                let interior = (1..d).contains(&a) && (1..d).contains(&b);
                let keep = interior
                    || match basis {
                        // left/right edges, excluding corners
                        Basis::X => (a == 0 || a == d) && (1..d).contains(&b),
                        Basis::Z => (b == 0 || b == d) && (1..d).contains(&a),
                    };
                if !keep {
                    continue;
                }
                let order = match basis {
                    Basis::X => X_ORDER,
                    Basis::Z => Z_ORDER,
                };
                let mut schedule = [None; 4];
                for (k, &(dx, dy)) in order.iter().enumerate() {
                    let x = 2 * a as i32 + dx;
                    let y = 2 * b as i32 + dy;
                    if x > 0 && y > 0 && x < 2 * d as i32 && y < 2 * d as i32 {
                        let i = (x as usize - 1) / 2;
                        let j = (y as usize - 1) / 2;
                        schedule[k] = Some(i + d * j);
                    }
                }
                stabilizers.push(StabilizerSite {
                    pos: (a, b),
                    basis,
                    schedule,
                });
            }
        }
        PatchLayout { d, stabilizers }
    }

    pub fn num_sites(&self) -> usize {
        self.d * self.d
    }

    pub fn site(&self, i: usize, j: usize) -> usize {
        i + self.d * j
    }

    pub fn site_coord(&self, s: usize) -> (usize, usize) {
        (s % self.d, s / self.d)
    }

    /// Sites of the logical Z representative (left column).
    pub fn logical_z_sites(&self) -> Vec<usize> {
        (0..self.d).map(|j| self.site(0, j)).collect()
    }

    /// Sites of the logical X representative (top row).
    pub fn logical_x_sites(&self) -> Vec<usize> {
        (0..self.d).map(|i| self.site(i, 0)).collect()
    }

    /// Quarter-turn used by the transversal Hadamard relabeling.
    pub fn rotate_site(&self, s: usize) -> usize {
        let (i, j) = self.site_coord(s);
        self.site(j, self.d - 1 - i)
    }

    pub fn rotate_pos(&self, pos: (usize, usize)) -> (usize, usize) {
        (pos.1, self.d - pos.0)
    }

    pub fn stabilizer_index(&self, pos: (usize, usize)) -> Option<usize> {
        self.stabilizers.iter().position(|s| s.pos == pos)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stabilizer_counts() {
        for d in [3, 5, 7] {
            let l = PatchLayout::new(d);
            assert_eq!(l.stabilizers.len(), d * d - 1);
            let x = l.stabilizers.iter().filter(|s| s.basis == Basis::X).count();
            assert_eq!(x, (d * d - 1) / 2);
        }
    }

    #[test]
    fn stabilizers_commute() {
        let l = PatchLayout::new(5);
        for a in l.stabilizers.iter().filter(|s| s.basis == Basis::X) {
            for b in l.stabilizers.iter().filter(|s| s.basis == Basis::Z) {
                let overlap = a.support().filter(|s| b.support().any(|t| t == *s)).count();
                assert_eq!(overlap % 2, 0);
            }
        }
    }

    #[test]
    fn logicals_commute_with_opposite_stabilizers() {
        let l = PatchLayout::new(5);
        let lz = l.logical_z_sites();
        let lx = l.logical_x_sites();
        for s in &l.stabilizers {
            let sites: Vec<usize> = s.support().collect();
            let against = if s.basis == Basis::X { &lz } else { &lx };
            let overlap = sites.iter().filter(|q| against.contains(q)).count();
            assert_eq!(overlap % 2, 0, "stabilizer at {:?}", s.pos);
        }
    }

    #[test]
    fn schedule_never_touches_a_site_twice_per_step() {
        let l = PatchLayout::new(7);
        for k in 0..4 {
            let mut used = vec![false; l.num_sites()];
            for s in &l.stabilizers {
                if let Some(q) = s.schedule[k] {
                    assert!(!used[q]);
                    used[q] = true;
                }
            }
        }
    }

    #[test]
    fn rotation_swaps_stabilizer_types() {
        let l = PatchLayout::new(5);
        for s in &l.stabilizers {
            let idx = l.stabilizer_index(l.rotate_pos(s.pos)).expect("rotated position exists");
            let r = &l.stabilizers[idx];
            assert_ne!(r.basis, s.basis);
            let mut img: Vec<usize> = s.support().map(|q| l.rotate_site(q)).collect();
            let mut sup: Vec<usize> = r.support().collect();
            img.sort();
            sup.sort();
            assert_eq!(img, sup);
        }
    }
}
