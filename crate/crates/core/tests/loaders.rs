use submax::objectives::{
    generate_synthetic, load_edge_list, load_similarity_csv, write_edge_list, write_similarity_csv,
    Instance, InstanceKind, SyntheticSpec,
};
use submax::{ElementId, Objective, Subset};

fn all_subsets(n: usize) -> impl Iterator<Item = Subset> {
    let ground: Vec<ElementId> = (0..n).map(ElementId).collect();
    (0u64..1 << n).map(move |m| Subset::from_mask(&ground, m))
}

fn reload(inst: &Instance, dir: &std::path::Path) -> Instance {
    let n = inst.ground_size();
    match inst {
        Instance::Image(f) => {
            let path = dir.join("image.csv");
            write_similarity_csv(f.similarity(), std::fs::File::create(&path).unwrap()).unwrap();
            Instance::from_similarity(InstanceKind::Image, load_similarity_csv(&path).unwrap(), 0.0).unwrap()
        }
        Instance::Movie(f) => {
            let path = dir.join("movie.csv");
            write_similarity_csv(f.similarity(), std::fs::File::create(&path).unwrap()).unwrap();
            Instance::from_similarity(InstanceKind::Movie, load_similarity_csv(&path).unwrap(), f.lambda()).unwrap()
        }
        Instance::Revenue(f) => {
            let path = dir.join("revenue.txt");
            write_edge_list(f.graph(), std::fs::File::create(&path).unwrap()).unwrap();
            Instance::from_graph(InstanceKind::Revenue, load_edge_list(&path, Some(n)).unwrap()).unwrap()
        }
        Instance::SyntheticCut(f) => {
            let path = dir.join("cut.txt");
            write_edge_list(f.graph(), std::fs::File::create(&path).unwrap()).unwrap();
            Instance::from_graph(InstanceKind::SyntheticCut, load_edge_list(&path, Some(n)).unwrap()).unwrap()
        }
    }
}

#[test]
fn written_instances_reload_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    for kind in InstanceKind::ALL {
        for seed in 0..3 {
            let n = 10;
            let original = generate_synthetic(kind, &SyntheticSpec::new(n).with_p(0.4), seed).unwrap();
            let loaded = reload(&original, dir.path());
            assert_eq!(loaded.kind(), kind);
            for s in all_subsets(n) {
                assert_eq!(original.value(&s).to_bits(), loaded.value(&s).to_bits(), "{kind} {s:?}");
            }
        }
    }
}

#[test]
fn missing_file_is_an_io_error() {
    let err = load_similarity_csv("/nonexistent/similarity.csv").unwrap_err();
    assert!(matches!(err, submax::Error::Io(_)));
}

#[test]
fn node_count_is_inferred_from_the_largest_id() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.txt");
    std::fs::write(&path, "0,3,0.5\n1,2,1.5\n").unwrap();
    let g = load_edge_list(&path, None).unwrap();
    assert_eq!(g.node_count(), 4);
    assert_eq!(load_edge_list(&path, Some(6)).unwrap().node_count(), 6);
    assert!(load_edge_list(&path, Some(3)).is_err());
}
