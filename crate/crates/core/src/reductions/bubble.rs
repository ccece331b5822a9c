//! Sorting the clause positions of the variable occurrences by adjacent swaps.

use super::formula::OccurrenceMap;

pub type Slot = (usize, usize);

/// Records every intermediate order of the textbook bubble sort that takes the
/// occurrences from variable order to clause order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BubbleTrace {
    /// `orders[l]` lists the `(j, t)` slots after `l` swaps.
    pub orders: Vec<Vec<Slot>>,
    /// `positions[l]` lists the `(i, s)` clause positions of `orders[l]`.
    pub positions: Vec<Vec<Slot>>,
    /// Index swapped at step `l`: entries `swap_at[l]` and `swap_at[l] + 1`.
    pub swap_at: Vec<usize>,
    /// `index[l][4j + t]`: where slot `(j, t)` sits in `orders[l]`.
    index: Vec<Vec<usize>>,
}

impl BubbleTrace {
    pub fn new(n: usize, kappa: &OccurrenceMap) -> Self {
        let start: Vec<Slot> = (0..n).flat_map(|j| (0..4).map(move |t| (j, t))).collect();
        let mut positions = vec![start.iter().map(|&(j, t)| kappa.get(j, t)).collect::<Vec<_>>()];
        let mut orders = vec![start];
        let mut swap_at = Vec::new();
        let len = orders[0].len();
        let mut cur_pos = positions[0].clone();
        let mut cur_ord = orders[0].clone();
        for pass in 0..len {
            for p in 0..len.saturating_sub(pass + 1) {
                if cur_pos[p] > cur_pos[p + 1] {
                    cur_pos.swap(p, p + 1);
                    cur_ord.swap(p, p + 1);
                    swap_at.push(p);
                    positions.push(cur_pos.clone());
                    orders.push(cur_ord.clone());
                }
            }
        }
        let index = orders
            .iter()
            .map(|ord| {
                let mut idx = vec![0; ord.len()];
                for (pos, &(j, t)) in ord.iter().enumerate() {
                    idx[4 * j + t] = pos;
                }
                idx
            })
            .collect();
        BubbleTrace {
            orders,
            positions,
            swap_at,
            index,
        }
    }

    /// Number of swaps.
    pub fn k(&self) -> usize {
        self.swap_at.len()
    }

    /// Position of slot `(j, t)` after `l` swaps.
    pub fn iota(&self, l: usize, j: usize, t: usize) -> usize {
        self.index[l][4 * j + t]
    }

    /// Position of the slot that moves right at step `l`.
    pub fn iota_star(&self, l: usize) -> usize {
        self.swap_at[l]
    }

    /// The slot that moves one position right at step `l`.
    pub fn rising(&self, l: usize) -> Slot {
        self.orders[l][self.swap_at[l]]
    }

    /// The slot that moves one position left at step `l`.
    pub fn falling(&self, l: usize) -> Slot {
        self.orders[l][self.swap_at[l] + 1]
    }
}
