use rpcert::lattice::*;

/// theta_sphere with a pair of mirror self-loops, each bounding a monogon
/// that lies entirely on one side.
const LOOPED: &str = "\
name looped_theta
genus 0
[vertices]
u minus
w plus
[edges]
a u w crossing
b u w crossing
c u w crossing
l w w plus
lp u u minus
[mirror]
u w
a a
b b
c c
l lp
[rotation]
u: *a+ c+ b+ lp- lp+
w: *a- l- l+ b- c-
[plaquettes]
a> l< b< lp<   # the big face absorbs the outside of both loops
b> c<
c> a<
l>
lp>
";

#[test]
fn builtin_hand_counts() {
    let t = theta_sphere().unwrap();
    assert_eq!((t.num_vertices(), t.num_edges(), t.num_plaquettes()), (2, 3, 3));
    assert_eq!(t.euler_characteristic(), 2);
    let r = torus_ladder(1).unwrap();
    assert_eq!((r.num_vertices(), r.num_edges(), r.num_plaquettes()), (2, 4, 2));
    assert_eq!(r.euler_characteristic(), 0);
    for g in [t, r, torus_ladder(2).unwrap(), torus_ladder(3).unwrap()] {
        assert!(g.validate().is_empty(), "{}", g.name);
        for v in 0..g.num_vertices() {
            assert_eq!(g.vertex_mirror[g.vertex_mirror[v]], v);
        }
        for e in 0..g.num_edges() {
            assert_eq!(g.edge_mirror[g.edge_mirror[e]], e);
        }
    }
    assert!(torus_ladder(0).is_err());
}

#[test]
fn sign_reverses_under_reflection() {
    for g in [theta_sphere().unwrap(), torus_ladder(2).unwrap()] {
        for v in 0..g.num_vertices() {
            for &leg in &g.rotation[v] {
                let m = g.mirror_leg(leg);
                assert_eq!(g.leg_vertex(m), g.vertex_mirror[v]);
                assert_eq!(MirrorGraph::epsilon(m), !MirrorGraph::epsilon(leg));
                // ε_v(e) = + iff s(e) = v.
                assert_eq!(MirrorGraph::epsilon(leg), g.edges[leg.edge].source == v && leg.end == End::Source);
            }
        }
    }
}

#[test]
fn crossing_splits() {
    let t = theta_sphere().unwrap();
    let s = t.crossing_plaquettes().unwrap();
    assert_eq!(s.iter().map(|x| x.plaquette).collect::<Vec<_>>(), vec![0, 1, 2]);
    let r = torus_ladder(1).unwrap();
    assert_eq!(r.crossing_plaquettes().unwrap().len(), 2);
    for g in [t, r, torus_ladder(2).unwrap()] {
        for sp in g.crossing_plaquettes().unwrap() {
            assert_eq!(sp.minus_vertices.len(), sp.plus_vertices.len());
            for (v, w) in sp.minus_vertices.iter().zip(&sp.plus_vertices) {
                assert_eq!(g.vertex_mirror[*v], *w);
            }
            for (p, f) in sp.minus_passes.iter().zip(&sp.plus_edges) {
                assert_eq!(g.edge_mirror[p.edge], *f);
            }
        }
    }
}

#[test]
fn one_sided_plaquettes_are_excluded() {
    let g = parse_graph(LOOPED).unwrap();
    assert_eq!(g.euler_characteristic(), 2);
    let s = g.crossing_plaquettes().unwrap();
    assert_eq!(s.iter().map(|x| x.plaquette).collect::<Vec<_>>(), vec![0, 1, 2]);
}

fn rules(g: &MirrorGraph) -> Vec<&'static str> {
    g.validate().iter().map(|v| v.rule).collect()
}

#[test]
fn corrupted_orientation_is_named() {
    // Reversing a crossing edge is compatible with θ_P (it is fixed), so
    // reverse a bulk edge and leave its mirror alone.
    let mut g = torus_ladder(2).unwrap();
    assert_eq!(g.edges[2].side, EdgeSide::Plus);
    let e = &mut g.edges[2];
    std::mem::swap(&mut e.source, &mut e.target);
    let v = g.validate();
    assert!(v.iter().any(|x| x.to_string().contains("s∘θ_P = θ_P∘t")), "{v:?}");
}

#[test]
fn vertex_on_the_mirror_is_rejected() {
    let mut g = theta_sphere().unwrap();
    g.vertex_mirror = vec![0, 1];
    assert!(rules(&g).contains(&"vertex_on_mirror"), "{:?}", rules(&g));
}

#[test]
fn other_corruptions() {
    // The anticlockwise walk round a face is not a face.
    let mut g = theta_sphere().unwrap();
    g.plaquettes[0] = g.plaquettes[0].iter().rev().map(|p| Pass { edge: p.edge, forward: !p.forward }).collect();
    assert!(rules(&g).contains(&"face_tracing"), "{:?}", rules(&g));
    let mut g = theta_sphere().unwrap();
    g.plaquettes.pop();
    assert!(!g.validate().is_empty());
    let mut g = torus_ladder(1).unwrap();
    g.rotation[0].swap(0, 1);
    assert!(!g.validate().is_empty());
    let mut g = theta_sphere().unwrap();
    g.edges[0].side = EdgeSide::Plus;
    assert!(!g.validate().is_empty());
}

#[test]
fn text_roundtrip() {
    for g in [theta_sphere().unwrap(), torus_ladder(1).unwrap(), torus_ladder(2).unwrap(), parse_graph(LOOPED).unwrap()] {
        let text = write_graph(&g);
        let back = parse_graph(&text).unwrap();
        assert_eq!(back, g, "{text}");
    }
}

#[test]
fn parse_errors_carry_line_numbers() {
    let bad_edge = LOOPED.replace("c u w crossing", "c u x crossing");
    match parse_graph(&bad_edge) {
        Err(rpcert::Error::Parse { line, .. }) => assert_eq!(line, 9),
        other => panic!("{other:?}"),
    }
    let bad_pass = LOOPED.replace("b> c<", "b> c?");
    match parse_graph(&bad_pass) {
        Err(rpcert::Error::Parse { line, .. }) => assert_eq!(line, 23),
        other => panic!("{other:?}"),
    }
    // Structurally fine text describing an invalid graph hits the gate.
    let bad_face = LOOPED.replace("b> c<\n", "c< b>\nb> c<\n");
    assert!(matches!(parse_graph(&bad_face), Err(rpcert::Error::Graph(_))));
}

#[test]
fn representation_changes_stay_valid() {
    let g = torus_ladder(1).unwrap();
    for v in 0..2 {
        for r in 0..4 {
            assert!(g.reroot_vertex(v, r).validate().is_empty());
        }
    }
    for p in 0..2 {
        for r in 0..4 {
            assert!(g.reroot_walk(p, r).validate().is_empty());
        }
    }
    for e in 0..4 {
        let f = g.flip_edge(e);
        assert!(f.validate().is_empty());
        assert_eq!(f.flip_edge(e), g);
    }
}

#[test]
fn builtin_names() {
    assert_eq!(builtin_graph("theta_sphere".parse().unwrap()).unwrap(), theta_sphere().unwrap());
    assert_eq!(builtin_graph("torus_ladder(2)".parse().unwrap()).unwrap(), torus_ladder(2).unwrap());
}
