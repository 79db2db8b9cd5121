"""Single-element SINR against PLL bandwidth, narrow and wide carrier recovery.

Repeats the sweep for three output-referred reference floors to show the
optimum PLL bandwidth moving up as the reference gets cleaner.
"""
from losim import presets, sim

from _common import parser, save

GRID = [1e4, 10**4.5, 1e5, 10**5.5, 1e6, 10**6.5]


def main():
    args = parser(__doc__).parse_args()
    trials = 2 if args.quick else 10
    rows = []
    for ref in (-85.0, -95.0, -105.0):
        for cr_bw in (10e3, 10e6):
            cfg = presets.cr_benefit_config(ref, 1e5, cr_bw, n_trials=trials, seed=args.seed)
            s = sim.sweep_pll_bandwidth(cfg, GRID, args.jobs)
            for r in s.rows:
                rows.append({"ref_out_dbc_hz": ref, "cr_bw_hz": cr_bw, **r})
            best = s.best
            print(f"ref {ref:.0f} dBc/Hz, CR {cr_bw:g} Hz: best PLL BW "
                  f"{best['pll_bw_hz']:.3g} Hz -> {best['sinr_db']:.2f} dB")
    save(rows, args.out, "cr_benefit", args.seed)


if __name__ == "__main__":
    main()
