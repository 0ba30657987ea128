//! The two reference instances shipped with the crate: four unit discs
//! around a square hub in the plane, and five unit cubes around a ball hub
//! in space.
//!
//! The constructors below build the problems directly; the JSON documents
//! in `data/` encode the same instances for the command-line tool.

use crate::geometry::ConvexSet;
use crate::point::Point;
use crate::problem::{Configuration, Problem, Weights};
use crate::pt;

pub const EXAMPLE1_SPEC: &str = include_str!("../data/example1.json");
pub const EXAMPLE2_SPEC: &str = include_str!("../data/example2.json");

/// Published optimum of the planar instance.
pub const EXAMPLE1_OPTIMAL_OBJECTIVE: f64 = 85.277_273_078_8;

/// Published iteration counts at which the planar instance first stagnated
/// below each tolerance.
pub const EXAMPLE1_CHECKPOINTS: [(f64, usize); 5] = [
    (1e-4, 96),
    (1e-6, 169),
    (1e-8, 1_502),
    (1e-10, 13_544),
    (1e-12, 120_691),
];

pub const EXAMPLE2_CHECKPOINTS: [(f64, usize); 5] = [
    (1e-4, 77),
    (1e-6, 1_059),
    (1e-8, 15_343),
    (1e-10, 228_379),
    (1e-12, 3_389_834),
];

pub fn example1() -> Problem {
    let chain = [(7, -6), (4, 5), (-3, 4), (-6, -4)]
        .into_iter()
        .map(|(x, y)| ConvexSet::ball(pt![x, y], 1.0).expect("unit disc"))
        .collect();
    let hub = ConvexSet::r#box(pt![1, -1], vec![1.0, 1.0]).expect("unit square");
    let weights =
        Weights::new(vec![1.0, 2.0, 2.0, 1.0], vec![2.0, 1.0, 1.0, 2.0]).expect("weights");
    Problem::new(chain, hub, weights).expect("example 1")
}

pub fn example1_initial() -> Configuration {
    Configuration::new(
        vec![pt![8, -6], pt![4, 6], pt![-3, 5], pt![-7, -4]],
        pt![2, -2],
    )
}

/// Published optimal configuration, ten decimals.
pub fn example1_table_solution() -> Configuration {
    Configuration::new(
        vec![
            pt![6.195_259_300_3, -5.406_373_512_8],
            pt![3.298_788_674_7, 4.287_046_511_2],
            pt![-2.424_891_825_3, 3.181_922_627_5],
            pt![-5.163_855_231_2, -3.451_491_179_9],
        ],
        pt![0.0, -1.529_088_546_5],
    )
}

pub fn example2() -> Problem {
    let chain = [(-2, -4, 2), (5, 6, 5), (1, 7, 3), (-4, 2, -3), (6, -6, -2)]
        .into_iter()
        .map(|(x, y, z)| ConvexSet::cube(pt![x, y, z], 1.0).expect("unit cube"))
        .collect();
    let hub = ConvexSet::ball(pt![-1, 2, 1], 1.0).expect("unit ball");
    let weights = Weights::new(
        vec![1.5, 1.1, 1.2, 0.9, 0.8],
        vec![1.0, 1.3, 1.5, 1.0, 0.95],
    )
    .expect("weights");
    Problem::new(chain, hub, weights).expect("example 2")
}

pub fn example2_initial() -> Configuration {
    Configuration::new(
        vec![
            pt![-1, -5, 1],
            pt![4, 7, 6],
            pt![0, 8, 2],
            pt![-5, 3, -4],
            pt![7, -7, -3],
        ],
        pt![-1, 3, 1],
    )
}

pub fn example2_table_solution() -> Configuration {
    Configuration::new(
        vec![
            pt![-1.0, -3.0, 1.553_112_805_7],
            pt![4.0, 5.0, 4.0],
            pt![0.558_795_926_7, 6.0, 2.0],
            pt![-3.0, 2.533_095_511_2, -2.0],
            pt![5.0, -5.0, -1.0],
        ],
        pt![-0.078_560_802_9, 2.364_163_358_3, 1.135_406_257_4],
    )
}

/// Largest coordinate difference between two configurations of equal shape.
pub fn max_coordinate_gap(a: &Configuration, b: &Configuration) -> f64 {
    a.blocks()
        .zip(b.blocks())
        .flat_map(|(p, q): (&Point, &Point)| {
            p.coords()
                .iter()
                .zip(q.coords())
                .map(|(x, y)| (x - y).abs())
                .collect::<Vec<_>>()
        })
        .fold(0.0, f64::max)
}
