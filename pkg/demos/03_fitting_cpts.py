"""Fit CPTs two ways and watch them disagree.

Frequency estimation converges to the event distribution, which is the
wrong target when the structure cannot represent it: on the chain fixture
its query score plateaus at 0.25 no matter how much data it sees.  The
gradient fitter optimizes the query score directly and drives it to zero.

Also shown: the uniform starting point is a stall point of the gradient
(every component is exactly zero there), which is why the fitter defaults
to random Dirichlet restarts.
"""

import numpy as np

from querybn import FitOptions, empirical_err, fit_cpt, flatten_grad, grad, ofe, true_err
from querybn.experiments import (ex41_bp, ex41_distribution, ex41_labeled_queries,
                                 ex41_structure, ex41_truth)
from querybn.sampling import forward_sample


def main() -> None:
    truth = ex41_truth()
    structure = ex41_structure()
    dist = ex41_distribution()
    lqs = ex41_labeled_queries()

    print("frequency estimation (OFE) by sample size:")
    for n in (100, 1_000, 10_000, 100_000):
        data = forward_sample(truth, n, seed=0)
        fitted = ofe(structure, data, alpha=0.0)
        print(f"  n={n:>6}: query score {true_err(fitted, dist, truth).aggregate:.4f}")

    g = flatten_grad(ex41_bp(), grad(ex41_bp(), lqs))
    print("\ngradient at the uniform net, largest component:",
          max(abs(v) for v in g.values()))

    fit = fit_cpt(structure, lqs,
                  FitOptions(init="dirichlet", restarts=10, max_iters=2000, seed=0))
    print(f"\ngradient fitter: final score {fit.err:.2e} "
          f"(winning restart {fit.restart}, converged={fit.converged})")
    accepted = [r for r in fit.trace if r.restart == fit.restart and r.accepted]
    print(f"accepted steps in the winning restart: {len(accepted)}")
    for row in accepted[:5]:
        print(f"  iter {row.iteration:>3}: err {row.err:.6f}, "
              f"|grad| {row.grad_norm:.4f}, step {row.step:g}")

    print("\nfitted conditional for the queried direction:")
    print("  B(C=1|A=1) =", empirical_err(fit.net, lqs).rows[0].hypothesis)
    print("  B(C=1|A=0) =", empirical_err(fit.net, lqs).rows[1].hypothesis)
    print("X row of the fitted net (the mechanism it invented):")
    print(np.round(fit.net.cpts["X"].table, 3))


if __name__ == "__main__":
    main()
