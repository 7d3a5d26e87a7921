use std::collections::HashSet;

use expgraph::embed::{distortion_constant, lipschitz_check, mixing_transfer, pigeonhole_applies, refutation_witness, LatticeMap};
use expgraph::bounds::MixingEnvelope;
use expgraph::tree::{GraphSpec, NodeId, Region, Tree};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_map(rng: &mut ChaCha8Rng, dim: usize, depth: u64, spread: i64) -> LatticeMap {
    let t = Tree::new(2).unwrap();
    let mut used = HashSet::new();
    let points: Vec<(NodeId, Vec<i64>)> = t
        .region_nodes(&Region::Generations { count: depth + 1 })
        .unwrap()
        .map(|v| loop {
            let x: Vec<i64> = (0..dim).map(|_| rng.gen_range(-spread..=spread)).collect();
            if used.insert(x.clone()) {
                break (v, x);
            }
        })
        .collect();
    LatticeMap::new(dim, points).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn distortion_bounds_every_pair(seed in any::<u64>(), dim in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let map = random_map(&mut rng, dim, 5, 40);
        let t = Tree::new(2).unwrap();
        let g = GraphSpec::new(t, [(NodeId::new(3, 1).unwrap(), NodeId::new(4, 16).unwrap())]).unwrap();
        let c = distortion_constant(&g, &map);
        prop_assert!(c >= 1.0);
        let nodes: Vec<NodeId> = t.region_nodes(&Region::Generations { count: 6 }).unwrap().collect();
        let pairs: Vec<(NodeId, NodeId)> = (0..300).map(|_| (nodes[rng.gen_range(0..nodes.len())], nodes[rng.gen_range(0..nodes.len())])).collect();
        prop_assert_eq!(lipschitz_check(&g, &map, c, &pairs).unwrap(), None);
    }

    #[test]
    fn transfer_keeps_monotonicity(values in proptest::collection::vec(0.0f64..=1.0, 1..20), c in 1.0f64..6.0) {
        let mut v = values;
        v.sort_by(|a, b| b.total_cmp(a));
        let env = MixingEnvelope::table(v).unwrap();
        let moved = mixing_transfer(&env, c).unwrap();
        prop_assert!((1..80).all(|n| moved.eval(n + 1) <= moved.eval(n)));
    }
}

#[test]
fn row_layout_holds_at_its_distortion() {
    let g = GraphSpec::tree_only(Tree::new(2).unwrap());
    let map = LatticeMap::row_layout(2, 2, 8).unwrap();
    let c = distortion_constant(&g, &map);
    let nodes: Vec<NodeId> = Tree::new(2).unwrap().region_nodes(&Region::Generations { count: 9 }).unwrap().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let pairs: Vec<(NodeId, NodeId)> = (0..1000).map(|_| (nodes[rng.gen_range(0..nodes.len())], nodes[rng.gen_range(0..nodes.len())])).collect();
    assert_eq!(lipschitz_check(&g, &map, c, &pairs).unwrap(), None);
}

#[test]
fn random_maps_are_refuted_once_pigeonhole_applies() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (dim, spread) in [(1usize, 1 << 20), (2, 1 << 10), (3, 1 << 8)] {
        let k = (1..).find(|&k| pigeonhole_applies(2, dim, 1.0, k)).unwrap();
        for _ in 0..3 {
            let map = random_map(&mut rng, dim, k, spread);
            let w = refutation_witness(2, &map, 1.0, k).unwrap().expect("pigeonhole forces a witness");
            assert!(w.image_distance as f64 > w.tree_distance as f64);
            assert_eq!(w.v.generation(), w.w.generation());
        }
    }
}

#[test]
fn compact_map_is_refuted_by_pigeonhole_alone() {
    // packs every generation as tightly as possible; only the counting
    // argument can produce the witness
    let depth = 9;
    let t = Tree::new(2).unwrap();
    let mut points = Vec::new();
    for j in 0..=depth {
        let side = (1u64 << j).isqrt().max(1);
        for k in 1..=1u64 << j {
            let i = k - 1;
            points.push((NodeId::new(j, k).unwrap(), vec![(i % side) as i64, (i / side) as i64 + 1000 * j as i64]));
        }
    }
    let map = LatticeMap::new(2, points).unwrap();
    let w = refutation_witness(2, &map, 1.0, depth).unwrap().unwrap();
    assert!(pigeonhole_applies(2, 2, 1.0, w.generation));
    assert!(t.distance(w.v, w.w).unwrap() < w.image_distance);
}
