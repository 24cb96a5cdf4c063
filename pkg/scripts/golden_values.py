"""Print the 50-digit reference values of the three-channel toy link used in
the closed-form tests, alongside the double-precision implementation."""
import sys
from pathlib import Path

import mpmath as mp

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from oracles import closed_form_nli_mp  # noqa: E402

from isrs_nli.closed_form import compute_nli  # noqa: E402
from isrs_nli.core import Channel, ChannelPlan, FiberProfile, LinkSpec  # noqa: E402
from isrs_nli.fit import EffectiveParams  # noqa: E402

F = (-0.05, 0.0, 0.05)
ALPHA = 0.046051701859880924
C_R = 0.028
CASES = {
    "gaussian, 1 span": dict(beta3=0.0, n=1, eps=0.0, phi=0.0),
    "64qam, 3 spans": dict(beta3=0.14, n=3, eps=0.05, phi=-13 / 21),
}


def main():
    for name, c in CASES.items():
        ref = closed_form_nli_mp(F, [0.04] * 3, [1e-3] * 3, [c["phi"]] * 3, [ALPHA] * 3,
                                 [ALPHA] * 3, [C_R] * 3, -22.6, c["beta3"], 1.2, 80.0,
                                 c["n"], eps=c["eps"])
        plan = ChannelPlan(tuple(Channel(f, 0.04, 1e-3, c["phi"]) for f in F), 193.4)
        params = [EffectiveParams.from_slope(ALPHA, ALPHA, C_R, f, plan.total_power) for f in F]
        fib = FiberProfile.flat(0.2, beta2=-22.6, beta3=c["beta3"], gamma=1.2, span_length=80.0)
        got = compute_nli(plan, params, LinkSpec(fib, c["n"], c["eps"])).inverse
        print(name)
        for r, g in zip(ref, got):
            print(f"  {mp.nstr(r, 25):>32}  {float(g)!r:>24}  rel {float(abs(g / r - 1)):.1e}")


if __name__ == "__main__":
    main()
