mod common;

use std::collections::{BTreeSet, VecDeque};

use common::{three_partition_instances, three_partition_yes, worst_residual_by_cuts};
use survnet::graph::augment_with_sink;
use survnet::instance_gen::{
    format_instance, generate_3partition_graph, generate_random, parse_instance, read_instance, write_instance,
    GenConfig, GenError, ThreePartitionInstance,
};

fn levels(nt: usize) -> [u32; 4] {
    [0.8, 0.6, 0.4, 0.2].map(|f: f64| (f * nt as f64 - 1e-9).ceil() as u32)
}

fn hops_from_root(inst: &survnet::graph::Instance) -> Vec<usize> {
    let mut hops = vec![usize::MAX; inst.n_nodes()];
    hops[inst.root()] = 0;
    let mut queue = VecDeque::from([inst.root()]);
    while let Some(v) = queue.pop_front() {
        for a in inst.out_arcs(v) {
            let h = inst.arcs()[a].head;
            if hops[h] == usize::MAX {
                hops[h] = hops[v] + 1;
                queue.push_back(h);
            }
        }
    }
    hops
}

#[test]
fn seeds_determine_instances() {
    let cfg = GenConfig::new(12, 4, 34, 17);
    let a = generate_random(&cfg).unwrap();
    assert_eq!(format_instance(&a), format_instance(&generate_random(&cfg).unwrap()));
    let other = generate_random(&GenConfig { seed: 18, ..cfg }).unwrap();
    assert_ne!(a, other);
}

#[test]
fn generated_instances_follow_the_recipe() {
    let mut built = 0;
    for seed in 0..40 {
        let nt = 3 + seed as usize % 3;
        let cfg = GenConfig::new(8 + seed as usize % 7, nt, 20 + seed as usize % 21, seed);
        let inst = match generate_random(&cfg) {
            Ok(inst) => inst,
            // sparse graphs often cannot survive two failures
            Err(GenError::RetriesExhausted { .. }) if cfg.target_arc_count < 3 * cfg.n_nodes => continue,
            Err(e) => panic!("{cfg:?}: {e}"),
        };
        built += 1;
        assert_eq!(inst.n_nodes(), cfg.n_nodes);
        assert_eq!(inst.terminals().len(), nt);
        assert!(inst.arcs().len() <= cfg.target_arc_count);
        assert!(!inst.terminals().contains(&inst.root()));

        let lv = levels(nt);
        let hops = hops_from_root(&inst);
        let coords = inst.coords().unwrap();
        for a in inst.arcs() {
            assert!(lv.contains(&a.capacity), "capacity {} not in {lv:?}", a.capacity);
            if hops[a.tail] <= 2 && hops[a.head] <= 2 {
                assert!(a.capacity == lv[0] || a.capacity == lv[1]);
            }
            if a.tail == inst.root() {
                assert!(a.capacity >= lv[1]);
            }
            let (p, q) = (coords[a.tail], coords[a.head]);
            let len = ((p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)).sqrt();
            let expected = len * (1.0 + a.capacity as f64 / nt as f64);
            assert!((a.cost - expected).abs() <= 1e-6);
            assert!(p.0 >= 0.0 && p.0 <= cfg.plane_size && p.1 >= 0.0 && p.1 <= cfg.plane_size);
        }

        // everything selected survives the advertised failure budget
        let aug = augment_with_sink(&inst);
        let all = aug.full_selection();
        let none = vec![false; all.len()];
        assert!(worst_residual_by_cuts(&aug, &all, &none, cfg.max_k) >= nt as u64);
    }
    assert!(built >= 25, "{built}");
}

#[test]
fn both_directions_unless_asked_otherwise() {
    let cfg = GenConfig::new(10, 3, 30, 4);
    let inst = generate_random(&cfg).unwrap();
    let pairs: BTreeSet<(usize, usize)> = inst.arcs().iter().map(|a| (a.tail, a.head)).collect();
    for a in inst.arcs() {
        if a.tail != inst.root() {
            assert!(pairs.contains(&(a.head, a.tail)));
        }
    }
    let one = generate_random(&GenConfig {
        one_directional: true,
        max_k: 0,
        ..cfg
    })
    .unwrap();
    let pairs: BTreeSet<(usize, usize)> = one.arcs().iter().map(|a| (a.tail, a.head)).collect();
    assert!(one.arcs().iter().all(|a| !pairs.contains(&(a.head, a.tail))));
}

#[test]
fn impossible_budgets_give_up_with_a_diagnostic() {
    let cfg = GenConfig {
        max_k: 3,
        max_attempts: 5,
        ..GenConfig::new(8, 4, 9, 1)
    };
    match generate_random(&cfg).unwrap_err() {
        GenError::RetriesExhausted { attempts, k, terminals, .. } => {
            assert_eq!((attempts, k, terminals), (5, 3, 4));
        }
        e => panic!("unexpected {e}"),
    }
    assert!(matches!(generate_random(&GenConfig::new(4, 4, 10, 0)), Err(GenError::InvalidConfig(_))));
}

#[test]
fn files_round_trip() {
    let dir = std::env::temp_dir().join(format!("survnet-gen-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    for seed in 0..10 {
        let inst = generate_random(&GenConfig::new(9, 3, 24, seed)).unwrap();
        let path = dir.join(format!("{seed}.rcsn"));
        write_instance(&inst, &path).unwrap();
        assert_eq!(read_instance(&path).unwrap(), inst);
    }
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn hand_written_file() {
    let text = "RCSN 1\nnode 0 0 0\nnode 1 3 4\nnode 2 6 8  # far\nroot 0\nterminal 1\nterminal 2\n\
                arc 0 0 1 2 10.000000\narc 1 1 2 1 7.500000\n";
    let inst = parse_instance(text).unwrap();
    assert_eq!(inst.n_nodes(), 3);
    assert_eq!(inst.terminals(), &[1, 2]);
    assert_eq!(inst.coords().unwrap()[2], (6.0, 8.0));
    assert_eq!((inst.arcs()[1].tail, inst.arcs()[1].head, inst.arcs()[1].capacity), (1, 2, 1));
    assert!(parse_instance("RCSN 7\n").is_err());
    let e = parse_instance("RCSN 1\nnode 0\nnode 1\nroot 0\narc 0 1 0 1 1.0\n").unwrap_err();
    assert!(e.to_string().contains("enters the root"), "{e}");
    let e = parse_instance("RCSN 1\nnode 0\nnode 2\n").unwrap_err();
    assert!(e.to_string().starts_with("line 3"), "{e}");
}

#[test]
fn reduction_graph_shape() {
    for (m, b) in [(2, 11), (2, 13), (3, 14)] {
        for d in three_partition_instances(m, b).into_iter().take(3) {
            let tp = ThreePartitionInstance::new(m, b, d.clone()).unwrap();
            let (inst, beta) = generate_3partition_graph(&tp).unwrap();
            let n = 1 + m + m * b as usize;
            assert_eq!(inst.n_nodes(), n);
            assert_eq!(beta, b + 1);
            assert_eq!(inst.terminals().len(), n - 1);
            assert!(inst.arcs().iter().all(|a| a.capacity as usize == n - 1 && a.cost == 1.0));
            // r -> v_j, both ways between v and w, both ways to pendants
            let pendants: usize = d.iter().map(|&x| x as usize - 1).sum();
            assert_eq!(inst.arcs().len(), m + 2 * 3 * m * m + 2 * pendants);
            assert_eq!(inst.out_arcs(inst.root()).count(), m);
        }
    }
}

#[test]
fn three_partition_validation() {
    assert!(matches!(
        ThreePartitionInstance::new(2, 11, vec![5, 5, 5, 3, 3, 1]),
        Err(GenError::InvalidThreePartition(_))
    ));
    assert!(ThreePartitionInstance::parse("2,11:5,3,4,3,4").is_err());
    assert!(ThreePartitionInstance::parse("two,11:5,3,4,3,4,3").is_err());
    let tp = ThreePartitionInstance::parse("2, 11: 5,3,4,3,4,3").unwrap();
    assert_eq!(tp.d, vec![5, 3, 4, 3, 4, 3]);
}

#[test]
fn desk_scale_three_partition_catalogue() {
    let mut total = 0;
    let mut no = 0;
    for m in 2..=3 {
        for b in 1..=15 {
            for d in three_partition_instances(m, b) {
                assert!(ThreePartitionInstance::new(m, b, d.clone()).is_ok());
                total += 1;
                if !three_partition_yes(m, b, &d) {
                    no += 1;
                }
            }
        }
    }
    assert_eq!((total, no), (49, 5));
    assert!(three_partition_yes(2, 11, &[5, 3, 4, 3, 4, 3]));
}
