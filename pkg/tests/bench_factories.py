"""Problem factories used by the bench tests through the ``custom`` experiment."""

from gpssm.bench.problems import linear_problem


def failing_problem(cfg, noise, seed, options):
    if seed == options.get("bad_seed", 0):
        raise ValueError(f"seed {seed} is rigged to fail")
    return linear_problem(cfg, noise, seed, options.get("linear"))
