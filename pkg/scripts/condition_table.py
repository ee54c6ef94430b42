"""Print the Phi condition report for the shipped profiles and a few power sums."""
from curvflow.speeds import Expm1, Log1p, PowerSum, SumOf, condition_report_phi

PROFILES = {
    "s + s^3": PowerSum([(1, 1), (1, 3)]),
    "s^2 + s^3": PowerSum([(1, 2), (1, 3)]),
    "s^0.5 + s^0.8": PowerSum([(1, 0.5), (1, 0.8)]),
    "s^0.5 + s^2": PowerSum([(1, 0.5), (1, 2)]),
    "log(1+s)": Log1p(),
    "e^s - 1": Expm1(),
    "log(1+s) + s^2": SumOf([Log1p(), PowerSum([(1, 2)])]),
}
FLAGS = ("a", "b", "c", "d_i", "d_ii", "d_iii", "e", "f", "g", "h", "i")


def main():
    print(f"{'profile':<16}" + "".join(f"{k:>6}" for k in FLAGS) + "   eps     c_h")
    for name, phi in PROFILES.items():
        rep = condition_report_phi(phi)
        row = "".join(f"{'y' if getattr(rep, k) else '.':>6}" for k in FLAGS)
        c = rep.empirical_c_for_h
        c = f"{c:.4f}" if isinstance(c, float) else c
        print(f"{name:<16}{row}   {rep.d_ii_eps:.3f}  {c}")


if __name__ == "__main__":
    main()
