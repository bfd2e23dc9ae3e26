use gesturechat_core::laban::{legal_symbols, BodyColumn, Direction, LabanCell, LabanKeyframe, LabanScore, Level};
use proptest::prelude::*;

pub fn symbol() -> impl Strategy<Value = (Direction, Level)> {
    prop::sample::select(legal_symbols().collect::<Vec<_>>())
}

prop_compose! {
    /// Valid scores: a full first pose at 0, then up to five partial
    /// keyframes, with some hold time after the last one.
    pub fn arb_score()(
        first in prop::array::uniform5(symbol()),
        later in prop::collection::vec(
            (0.001f64..2.0, prop::collection::vec(prop::option::of(symbol()), 5)),
            0..6,
        ),
        tail in 0.0f64..1.5,
    ) -> LabanScore {
        let mut keyframes = vec![LabanKeyframe::new(
            0.0,
            BodyColumn::ALL.iter().zip(first).map(|(&c, (d, l))| LabanCell::new(c, d, l).unwrap()),
        ).unwrap()];
        let mut t = 0.0;
        for (gap, cells) in later {
            t += gap;
            let mut cells: Vec<LabanCell> = BodyColumn::ALL
                .iter()
                .zip(cells)
                .filter_map(|(&c, s)| s.map(|(d, l)| LabanCell::new(c, d, l).unwrap()))
                .collect();
            if cells.is_empty() {
                cells.push(LabanCell::new(BodyColumn::Head, Direction::Forward, Level::Low).unwrap());
            }
            keyframes.push(LabanKeyframe::new(t, cells).unwrap());
        }
        LabanScore::new(keyframes, t + tail).unwrap()
    }
}
