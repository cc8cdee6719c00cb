"""Compare full nonlinear measurements with the Born oracle.

At small eps the scattering pairing is the Born functional plus a correction
of relative size eps^4.  The second part fits that correction: the gap between
the nonlinear pairing and its first Born iterate on the same grid falls like
eps^12, while the Born pairing itself scales like eps^8.
"""

from nlw_inverse import NonlinearitySpec, ScaleParams, measure_hw_sample
from nlw_inverse.born_pipeline import born_scaling_study


def main():
    F = NonlinearitySpec.quintic()
    for alpha in (0.5, 1.0, 2.0):
        p = ScaleParams(alpha, 0.05)
        full, err, _ = measure_hw_sample(F, p, "full_pde")
        oracle, _, _ = measure_hw_sample(F, p)
        print(f"alpha={alpha:3.1f}  full_pde {full:.8f} +- {err:.1e}  oracle {oracle:.8f}")

    rep = born_scaling_study(F, (0.2, 0.1, 0.05))
    for e, d, b in zip(rep.epsilons, rep.differences, rep.pairing_born):
        print(f"eps={e:5.3f}  |full - born| {d:.3e}  born {b:.3e}")
    print(f"fitted slopes: difference {rep.slope:.3f}, born {rep.slope_born:.3f}")


if __name__ == "__main__":
    main()
