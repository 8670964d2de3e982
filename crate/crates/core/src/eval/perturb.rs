use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::table::Table;

/// Shuffles the first `visible_row_count` cells of every column independently.
///
/// Columns are shuffled left to right from one generator seeded with `seed`.
/// Rows past the visible prefix are untouched.
pub fn perturb_columns(table: &Table, visible_row_count: usize, seed: u64) -> Table {
    let visible = visible_row_count.min(table.num_rows());
    let mut rows = table.rows().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for c in 0..table.width() {
        let mut cells: Vec<_> = rows[..visible].iter().map(|r| r[c].clone()).collect();
        cells.shuffle(&mut rng);
        for (row, cell) in rows[..visible].iter_mut().zip(cells) {
            row[c] = cell;
        }
    }
    Table::with_width(table.header().map(<[String]>::to_vec), table.width(), rows)
        .expect("same shape")
}

/// Per-example seed derived from the run seed and the example id.
pub fn example_seed(seed: u64, id: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(id.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}
