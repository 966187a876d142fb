"""Build a small net by hand, validate it, and ask it questions.

Walks through the core objects: variables with finite domains, a DAG with
ordered parents, one CPT row per parent configuration, and the three ways
to evaluate probabilities (full enumeration, variable elimination, and
the Markov-blanket shortcut for locally-answerable queries).
"""

from querybn import (BayesNet, Dag, StatQuery, Variable, answer, cond_prob,
                     d_separated, enumerate_marginal, marginal, mb_query, validate)


def build_sprinkler() -> BayesNet:
    variables = [
        Variable("rain", ("no", "yes")),
        Variable("sprinkler", ("off", "on")),
        Variable("wet", ("dry", "wet")),
    ]
    dag = Dag.from_edges(
        ["rain", "sprinkler", "wet"],
        [("rain", "sprinkler"), ("rain", "wet"), ("sprinkler", "wet")],
    )
    net = BayesNet.uniform(variables, dag)
    return net.with_tables({
        "rain": [[0.8, 0.2]],
        # rows: rain=no, rain=yes
        "sprinkler": [[0.6, 0.4], [0.99, 0.01]],
        # rows: (rain=no, spr=off), (no, on), (yes, off), (yes, on)
        "wet": [[0.95, 0.05], [0.1, 0.9], [0.2, 0.8], [0.01, 0.99]],
    })


def main() -> None:
    net = build_sprinkler()
    print("violations:", validate(net) or "none")

    full = {"rain": "yes", "sprinkler": "off", "wet": "wet"}
    print(f"\njoint probability of {full}:")
    print("  product of CPT entries:", net.joint_prob(full))
    print("  brute-force enumeration:", enumerate_marginal(net, full))

    print("\np(wet=wet) =", marginal(net, {"wet": "wet"}))
    print("p(rain=yes | wet=wet) =", cond_prob(net, {"rain": "yes"}, {"wet": "wet"}))

    print("\ngraph structure:")
    print("  blanket of sprinkler:", sorted(net.markov_blanket("sprinkler")))
    print("  rain independent of sprinkler given nothing?",
          d_separated(net, {"rain"}, {"sprinkler"}, set()))

    # sprinkler's blanket is {rain, wet}; covering it makes the query local
    q = StatQuery({"sprinkler": "on"}, {"rain": "no", "wet": "wet"})
    print("\nblanket query p(sprinkler=on | rain=no, wet=wet):")
    print("  local arithmetic:", mb_query(net, "sprinkler", "on", q.evidence))
    print("  global inference:", cond_prob(net, q.target, q.evidence))
    print("  dispatcher picks the same value:", answer(net, q))


if __name__ == "__main__":
    main()
