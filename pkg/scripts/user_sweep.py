"""SINR against the number of users for central, local and grouped LO generation.

Fits alpha on the local (one PLL per element) curve, then gamma for each
intermediate grouping with alpha held fixed.
"""
from dataclasses import replace

from losim import presets, sim
from losim.lo_arch import architecture_gamma

from _common import parser, save

K_LIST = [1, 2, 4, 8, 16]


def main():
    args = parser(__doc__).parse_args()
    trials = 2 if args.quick else 10
    base = presets.multiuser_config(128, 1, 1, n_trials=trials, seed=args.seed)
    rows, alpha = [], None
    for N in (1, 128, 4, 16, 32):
        cfg = replace(base, arch=replace(base.arch, N=N))
        s = sim.sweep_users(cfg, K_LIST, args.jobs)
        y = s.column("sinr_db")
        if N in (1, 128):
            fit = sim.fit_sinr_model(K_LIST, y, architecture_gamma(cfg.arch))
            if N == 1:
                alpha = fit.value
            note = f"alpha={fit.value:.2f}" if fit.value is not None else "alpha n/a"
        else:
            fit = sim.fit_gamma(K_LIST, y, alpha)
            note = f"gamma={fit.value:.3f}"
        for r, pred in zip(s.rows, fit.predicted_db):
            rows.append({"N": N, **r, "model_sinr_db": pred})
        print(f"N={N:3d}: " + " ".join(f"{v:6.2f}" for v in y) + f"  ({note})")
    save(rows, args.out, "user_sweep", args.seed)


if __name__ == "__main__":
    main()
