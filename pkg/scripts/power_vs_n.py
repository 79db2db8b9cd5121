"""Total LO chain power against elements per PLL for 16- and 128-element panels."""
import math

from losim.power_model import PowerModelParams, sweep_power

from _common import parser, save


def main():
    args = parser(__doc__).parse_args()
    rows = []
    for p in (PowerModelParams(), PowerModelParams(M=16, D_X=16.0, D_Y=16.0)):
        curve = sweep_power(p)
        for b in curve.rows:
            rows.append({"M": p.M, "N": b.N, "P_distr_W": b.P_distr_W, "P_vco_W": b.P_vco_W,
                         "P_pll_W": b.P_pll_W, "total_W": b.total_W,
                         "over_min_db": 10 * math.log10(b.total_W / curve.min_W)})
        print(f"M={p.M}: min {curve.min_W * 1e3:.1f} mW at N={curve.argmin}")
        for r in rows[-len(curve.rows):]:
            print(f"  N={r['N']:4d}  {r['total_W'] * 1e3:7.1f} mW  +{r['over_min_db']:.2f} dB")
    save(rows, args.out, "power_vs_n", 0)


if __name__ == "__main__":
    main()
