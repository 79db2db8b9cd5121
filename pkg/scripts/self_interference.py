"""Static gain and residual phase of a 16-element sum with independent Gaussian phase."""
import math

import numpy as np

from losim.rx_dsp import (
    array_sum_stats,
    coherent_gain_predict,
    self_interference_ceiling,
    taylor_residuals,
)

from _common import parser, save


def main():
    args = parser(__doc__).parse_args()
    rng = np.random.default_rng(args.seed)
    M, draws = 16, 20_000 if args.quick else 100_000
    rows = []
    for sigma in np.linspace(0.02, 0.5, 13):
        phi = rng.normal(0.0, sigma, (M, draws))
        st = array_sum_stats(phi)
        _, g = taylor_residuals(phi)
        rows.append({
            "sigma_rad": sigma,
            "static_gain_db": 20 * math.log10(st["static_gain"]),
            "predicted_gain_db": 20 * math.log10(coherent_gain_predict(sigma**2)),
            "phase_var": st["phase_var"],
            "phase_var_pred": sigma**2 / M,
            "ceiling_db": 10 * math.log10(self_interference_ceiling(st["magnitude"])),
            "ceiling_taylor_db": 10 * math.log10(self_interference_ceiling(g)),
        })
        r = rows[-1]
        print(f"sigma {sigma:.2f}: gain {r['static_gain_db']:+.4f} dB "
              f"(pred {r['predicted_gain_db']:+.4f}), SI ceiling {r['ceiling_db']:.1f} dB")
    save(rows, args.out, "self_interference", args.seed)


if __name__ == "__main__":
    main()
