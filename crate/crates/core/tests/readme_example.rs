//! The library example from the top-level README, kept compiling and
//! honest here. Update both places together.

use belief_bounds::{
    exact, lower_bound, upper_bound, Edge, Evidence, Layers, LowerBoundOpts,
    Network64, NetworkKind, NodeId, OptimizeOpts,
};

#[test]
fn readme_example_runs_as_written() -> belief_bounds::Result<()> {
    let net = Network64::new(
        NetworkKind::Sigmoid,
        3,
        vec![
            Edge { child: NodeId(2), parent: NodeId(0), theta: 1.5 },
            Edge { child: NodeId(2), parent: NodeId(1), theta: -0.7 },
        ],
        vec![(NodeId(0), 0.5), (NodeId(1), 0.5)],
        Some(Layers { l1: vec![NodeId(2)], l2: vec![NodeId(0), NodeId(1)] }),
    )?;
    let ev = Evidence::from_pairs([(NodeId(2), true)]);

    let truth = exact::log_marginal(&net, &ev)?.log_marginal;
    let ub = upper_bound(&net, &ev, &OptimizeOpts::default())?;
    let lb = lower_bound(&net, &ev, None, &LowerBoundOpts::default())?;
    assert!(lb.log_bound - 1e-9 <= truth && truth <= ub.log_bound + 1e-9);
    Ok(())
}
