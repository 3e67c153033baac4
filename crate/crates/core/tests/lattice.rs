use std::time::Instant;

use symchain::chain::{run_chain, ChainOptions, Termination};
use symchain::expr::LinearSpan;
use symchain::lattice::{build_schwinger, expected_constraints, LatticeSpec, Scheme};
use symchain::expr::rat;
use symchain::oracle::{compare_spans, consistency_algorithm};

fn check(spec: &LatticeSpec) {
    let n = spec.sites();
    let m = build_schwinger(spec);
    let start = Instant::now();
    let r = run_chain(&m, &ChainOptions::default()).unwrap();
    let elapsed = start.elapsed();
    assert_eq!(r.constraints.len(), 4 * n, "{}", m.name());
    assert_eq!(r.levels(), 4);
    assert_eq!(r.truncations, [3]);
    assert!(matches!(r.termination, Termination::Nonsingular { level: 4, .. }));
    for k in 1..=4 {
        assert_eq!(r.at_level(k).count(), n);
    }
    let oracle = consistency_algorithm(&m).unwrap();
    let o: Vec<_> = oracle.constraints.iter().map(|c| c.raw.clone()).collect();
    assert!(compare_spans(m.table(), &r.exprs(), &o).unwrap().equal);
    eprintln!("{} {:?} det {:?}", m.name(), elapsed, r.determinant().map(|d| d.to_string()));
}

#[test]
fn central_lattices_close_in_four_levels() {
    for n in [3, 5, 7] {
        let spec = LatticeSpec::unit(n).unwrap();
        check(&spec);
        let m = build_schwinger(&spec);
        let r = run_chain(&m, &ChainOptions::default()).unwrap();
        let expected = expected_constraints(&spec, m.table());
        let mut got = LinearSpan::new(m.table());
        let mut want = LinearSpan::new(m.table());
        for k in 1..=4 {
            for c in r.at_level(k) {
                got.insert(&c.raw).unwrap();
            }
            for e in &expected[k - 1] {
                want.insert(e).unwrap();
            }
            assert_eq!(got, want, "levels 1..={k}, N={n}");
        }
    }
}

#[test]
fn other_spacings_and_schemes() {
    check(&LatticeSpec::new(3, rat(1, 2), Scheme::Central).unwrap());
    check(&LatticeSpec::new(4, rat(1, 1), Scheme::Forward).unwrap());
}
