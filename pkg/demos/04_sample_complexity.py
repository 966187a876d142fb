"""How many samples are enough?

Closed-form counts for estimating a net's query score: from labeled
queries alone, from unlabeled queries plus event tuples, and the a-priori
variant when every conditioning event has probability at least lambda.
A seeded Monte-Carlo run then checks the labeled-query guarantee
empirically, and the collection procedure shows how rare evidence inflates
the number of tuples actually drawn.
"""

from querybn import m_d, m_lsq, m_prime_d, m_prime_lsq, m_sq
from querybn.experiments import run_hoeffding
from querybn.sampling import collect_until_matched
from querybn.experiments import ex41_truth


def main() -> None:
    eps, delta = 0.1, 0.05
    msq = m_sq(eps, delta)
    print(f"accuracy eps={eps}, confidence 1-delta={1 - delta}:")
    print(f"  labeled queries needed (M_LSQ):            {m_lsq(eps, delta):>6}")
    print(f"  unlabeled queries needed (M_SQ):           {msq:>6}")
    print(f"  matching tuples per evidence (M'_D):       {m_prime_d(eps, delta, msq):>6}")
    print(f"  total tuples if p(evidence) >= 0.1 (M_D):  {m_d(eps, delta, 0.1):>6}")
    print(f"  labeled queries to *fit* 20 entries over 5 vars (M'_LSQ): "
          f"{m_prime_lsq(eps, delta, 20, 5, 2.0)}")

    print("\ncoverage check of the labeled-query estimate (200 seeded trials):")
    report = run_hoeffding(eps=0.1, delta=0.1, trials=200, seed=0)
    row = report.criteria[0]
    print(f"  fraction of trials off by >= eps: {row.value:.3f} (bound {0.1})")
    print(f"  true score of the fixture hypothesis: {report.scalars['true_err']:.4f}")
    print(f"  largest observed deviation: {report.scalars['max_deviation']:.4f}")

    print("\ncollect-until-matched with quota 200 per evidence pattern:")
    truth = ex41_truth()
    for evidence, label in [({}, "empty evidence"),
                            ({"A": "1"}, "p = 0.5"),
                            ({"A": "1", "X": "1"}, "p = 0.25")]:
        data = collect_until_matched(truth, [evidence], per_evidence=200, seed=7)
        print(f"  {label:>15}: drew {len(data):>5} tuples")


if __name__ == "__main__":
    main()
