use teamsel::heuristics::next_combination;
use teamsel::model::build_gram;
use teamsel::reduction::{
    independence_number, instance_from_graph, min_edges_value, RegularGraph, ReductionSolver,
};
use teamsel::tabu::TabuParams;

fn brute_force_alpha(g: &RegularGraph) -> usize {
    let n = g.n_vertices();
    (0u32..1 << n)
        .filter(|mask| g.edges().iter().all(|&(a, b)| mask >> a & 1 == 0 || mask >> b & 1 == 0))
        .map(|mask| mask.count_ones() as usize)
        .max()
        .unwrap()
}

fn graphs() -> Vec<(String, RegularGraph)> {
    let mut out: Vec<(String, RegularGraph)> = (3..=12).map(|n| (format!("C{n}"), RegularGraph::cycle(n).unwrap())).collect();
    for n in 2..=6 {
        out.push((format!("K{n}"), RegularGraph::complete(n).unwrap()));
    }
    out.push(("circulant(8;1,4)".into(), RegularGraph::circulant(8, &[1, 4]).unwrap()));
    out.push(("circulant(10;1,3)".into(), RegularGraph::circulant(10, &[1, 3]).unwrap()));
    out.push(("circulant(12;2,5)".into(), RegularGraph::circulant(12, &[2, 5]).unwrap()));
    out.push(("petersen".into(), RegularGraph::petersen()));
    out
}

#[test]
fn gram_equals_adjacency_plus_degree() {
    for (name, g) in graphs() {
        let z = instance_from_graph(&g).unwrap();
        let q = build_gram(&z);
        for i in 0..g.n_vertices() {
            for j in 0..g.n_vertices() {
                let shared = g.edges().iter().filter(|&&(a, b)| (a == i || b == i) && (a == j || b == j)).count();
                let dot: f64 = z.row(i).iter().zip(z.row(j)).map(|(a, b)| a * b).sum();
                assert!((dot - 0.5 * shared as f64).abs() <= 1e-12, "{name} ({i},{j})");
                let expected = if i == j { g.degree() as f64 } else if g.is_adjacent(i, j) { 1.0 } else { 0.0 };
                assert!((q.get(i, j) - expected).abs() <= 1e-12, "{name} ({i},{j})");
            }
        }
    }
}

#[test]
fn quadratic_form_counts_inner_edges() {
    for (name, g) in graphs() {
        let n = g.n_vertices();
        let q = build_gram(&instance_from_graph(&g).unwrap());
        for size in 1..=n.min(6) {
            let mut combo: Vec<usize> = (0..size).collect();
            loop {
                let mut x = vec![0.0; n];
                for &i in &combo {
                    x[i] = 1.0;
                }
                let target = 2 * g.inner_edges(&combo) + g.degree() * size;
                // Integer path: shared-edge counts.
                let int_form: usize = combo
                    .iter()
                    .flat_map(|&i| combo.iter().map(move |&j| (i, j)))
                    .map(|(i, j)| if i == j { g.degree() } else { usize::from(g.is_adjacent(i, j)) })
                    .sum();
                assert_eq!(int_form, target, "{name} {combo:?}");
                assert!((q.quad_form(&x) - target as f64).abs() <= 1e-9, "{name} {combo:?}");
                if !next_combination(&mut combo, n) {
                    break;
                }
            }
        }
    }
}

#[test]
fn small_graph_values() {
    let solver = ReductionSolver::default();
    let k3 = RegularGraph::complete(3).unwrap();
    let z = instance_from_graph(&k3).unwrap();
    assert!(z.rows().iter().all(|r| r.iter().filter(|&&v| v > 0.0).count() == 2));
    assert_eq!(min_edges_value(&k3, 1, &solver).unwrap().exact, 2);
    assert_eq!(min_edges_value(&k3, 2, &solver).unwrap().exact, 6);
    let c4 = RegularGraph::cycle(4).unwrap();
    let r = min_edges_value(&c4, 2, &solver).unwrap();
    assert_eq!(r.exact, 4);
    assert!((r.value - 4.0).abs() < 1e-9);
}

#[test]
fn independence_number_matches_brute_force() {
    let solver = ReductionSolver::default();
    for (name, g) in graphs() {
        let expected = brute_force_alpha(&g);
        assert_eq!(independence_number(&g, &solver).unwrap(), expected, "{name}");
    }
}

#[test]
fn tabu_solver_on_reduced_instances() {
    let solver = ReductionSolver::Tabu(TabuParams { seed: 1, ..TabuParams::default() });
    for g in [RegularGraph::cycle(8).unwrap(), RegularGraph::petersen()] {
        let alpha = independence_number(&g, &solver).unwrap();
        assert!(alpha <= brute_force_alpha(&g));
    }
    assert_eq!(independence_number(&RegularGraph::petersen(), &solver).unwrap(), 4);
}
