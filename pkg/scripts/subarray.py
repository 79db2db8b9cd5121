"""SINR against elements per PLL for 16 users at several angular separations."""
from losim import presets, sim

from _common import parser, save


def main():
    args = parser(__doc__).parse_args()
    trials = 2 if args.quick else 5
    cfg = presets.multiuser_config(128, 1, 16, n_trials=trials, seed=args.seed)
    Ns = [1, 2, 4, 8, 16, 32, 64, 128]
    s = sim.sweep_subarray(cfg, Ns, (5.0, 7.5, 10.0), args.jobs)
    for sep in (5.0, 7.5, 10.0):
        y = [r["sinr_db"] for r in s.rows if r["separation_deg"] == sep]
        print(f"{sep:4.1f} deg: " + " ".join(f"{v:6.2f}" for v in y))
    save(s.rows, args.out, "subarray", args.seed)


if __name__ == "__main__":
    main()
