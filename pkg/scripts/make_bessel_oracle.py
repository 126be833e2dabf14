"""Regenerate tests/data/bessel_k1_oracle.csv with mpmath at 50 digits.

    python scripts/make_bessel_oracle.py
"""

from pathlib import Path

import mpmath

mpmath.mp.dps = 50
OUT = Path(__file__).resolve().parents[1] / "tests" / "data" / "bessel_k1_oracle.csv"


def main(n=401, lo=0.05, hi=50.0):
    lines = ["x,k1"]
    for j in range(n):
        x = mpmath.mpf(lo) * (mpmath.mpf(hi) / lo) ** (mpmath.mpf(j) / (n - 1))
        xf = float(x)  # tabulate at the exactly representable double
        lines.append(f"{xf!r},{mpmath.nstr(mpmath.besselk(1, mpmath.mpf(xf)), 25)}")
    OUT.write_text("\n".join(lines) + "\n")
    print(f"wrote {OUT} ({n} points)")


if __name__ == "__main__":
    main()
