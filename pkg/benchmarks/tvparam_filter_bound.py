"""Best attainable filtering nMSE on the time-varying parameter task.

Batch Gaussian conditioning of theta(t_k) on y_0..y_{k+1} with known
length scales and the dynamics linearized around the true trajectory.
No online, sparse or adaptive approximation is involved, so any filter
working from the same measurements should not beat these numbers by much.

    python benchmarks/tvparam_filter_bound.py --lengthscales 2 8 --horizon 800
"""

import argparse

import numpy as np

from gpssm.bench.data import gen_tvparam


def rbf(t: np.ndarray, lengthscale: float, variance: float) -> np.ndarray:
    return variance * np.exp(-0.5 * (t[:, None] - t[None, :]) ** 2 / lengthscale**2)


def filtering_bound(seed, horizon, dt, lengthscales, variance, amplitude, period, every, x0_var=1.0):
    data = gen_tvparam(seed, horizon, dt, amplitude=amplitude, period=period)
    theta, states, T = data.theta, data.states, horizon
    # Sensitivity of each state to every parameter value and to x0 (last column).
    n = 2 * T + 1
    sens = np.zeros((T, n))
    sens[0, -1] = 1.0
    for k in range(T - 1):
        sens[k + 1] = sens[k] * (1.0 + dt * theta[k, 0])
        sens[k + 1, k] += dt * states[k]
        sens[k + 1, T + k] += dt
    prior = np.zeros((n, n))
    prior[:T, :T] = rbf(data.times, lengthscales[0], variance) + 1e-8 * np.eye(T)
    prior[T:-1, T:-1] = rbf(data.times, lengthscales[1], variance) + 1e-8 * np.eye(T)
    prior[-1, -1] = x0_var
    # State implied by a zero parameter mean under the linearization.
    offset = states - sens @ np.r_[theta[:, 0], theta[:, 1], 0.0]
    sq_err = []
    for k in range(0, T - 1, every):
        H = sens[: k + 2]
        S = H @ prior @ H.T + data.sigma_m**2 * np.eye(k + 2)
        gain = np.linalg.solve(S, data.measurements[: k + 2] - offset[: k + 2])
        mean = prior[[k, T + k]] @ H.T @ gain
        sq_err.append((mean - theta[k]) ** 2)
    return np.mean(sq_err, axis=0) / theta[:-1].var(axis=0)


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--horizon", type=int, default=800)
    p.add_argument("--dt", type=float, default=0.05)
    p.add_argument("--lengthscales", type=float, nargs=2, default=[2.0, 8.0])
    p.add_argument("--variance", type=float, default=1.0)
    p.add_argument("--amplitude", type=float, default=1.0)
    p.add_argument("--period", type=float, default=4.0)
    p.add_argument("--every", type=int, default=10, help="evaluate every n-th step")
    a = p.parse_args()
    bound = filtering_bound(
        a.seed, a.horizon, a.dt, a.lengthscales, a.variance, a.amplitude, a.period, a.every
    )
    print(f"filtering nMSE bound: theta1 {bound[0]:.4f}  theta2 {bound[1]:.4f}")


if __name__ == "__main__":
    main()
