"""Score a net by the questions it will actually be asked.

The score of a net is the expected squared error of its answers over a
distribution of conditional-probability queries.  This is not the same
thing as being close to the event distribution: the demo's second net has
its internal mechanism completely wrong yet answers the queried
conditionals perfectly, while the event-faithful net scores poorly.
"""

import numpy as np

from querybn import QueryDistribution, QueryPattern, expand_pattern, nll, true_err, true_kl
from querybn.experiments import ex41_bp, ex41_bsq, ex41_distribution, ex41_truth
from querybn.sampling import forward_sample


def main() -> None:
    truth = ex41_truth()
    event_faithful = ex41_bp()   # matches every conditional frequency
    query_perfect = ex41_bsq()   # wrong mechanism, right answers
    dist = ex41_distribution()

    print("query distribution:")
    for q, w in dist.atoms:
        print(f"  {w:.2f}  {q.id()}")

    for name, net in [("event-faithful net", event_faithful),
                      ("query-perfect net", query_perfect)]:
        report = true_err(net, dist, truth)
        print(f"\n{name}: query-weighted squared error = {report.aggregate:.4f}")
        for row in report.rows:
            print(f"    {row.query.id()}: answered {row.hypothesis:.3f}, "
                  f"truth {row.reference:.3f}")

    # likelihood-style scores rank the two nets the other way around
    data = forward_sample(truth, 50_000, seed=0)
    print("\nlog-loss on held-out tuples (lower is better):")
    print(f"  event-faithful: {nll(event_faithful, data):.4f}")
    clamped = query_perfect.with_tables({
        v: np.clip(query_perfect.cpts[v].table, 1e-9, None)
        / np.clip(query_perfect.cpts[v].table, 1e-9, None).sum(axis=1, keepdims=True)
        for v in query_perfect.names})
    print(f"  query-perfect:  {nll(clamped, data):.4f}")
    print("KL to the truth: event-faithful"
          f" {true_kl(event_faithful, truth):.4f} vs query-perfect"
          f" {true_kl(clamped, truth):.4f}")

    # patterns expand into ground queries with uniformly split weight
    pat = QueryPattern(("C",), ("A", "X"), {"A": "1"})
    atoms = expand_pattern(truth, pat, weight=1.0)
    print(f"\npattern with one pinned evidence value expands to {len(atoms)} atoms:")
    for q, w in atoms:
        print(f"  {w:.3f}  {q.id()}")
    drawn = QueryDistribution(atoms).sample(np.random.default_rng(1), size=5)
    print("five sampled queries:", [q.id() for q in drawn])


if __name__ == "__main__":
    main()
