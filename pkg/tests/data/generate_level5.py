"""Regenerate the weight-6 level-5 newform coefficient files shipped in tracefe/data.

S_6(Gamma_0(5), chi_5) with chi_5 the quadratic character mod 5 is spanned by the
eta quotients eta(z)^9 eta(5z)^3 = q - 9q^2 + ... and eta(z)^3 eta(5z)^9 = q^2 + ...
T_2 acts on this basis with trace 0 and determinant 44, so the two newforms are
f = A + (9 + lam) B with lam = +-2 sqrt(-11).  Their coefficients are x_n + y_n sqrt(-11)
with integers x_n, y_n, written here with 30 significant digits.

Usage: python tests/data/generate_level5.py [N]
"""

import sys
from decimal import Decimal, getcontext
from pathlib import Path

import flint

OUT = Path(__file__).resolve().parents[2] / "src" / "tracefe" / "data"


def euler_product(step: int, power: int, n: int) -> flint.fmpz_poly:
    """prod_{m>=1} (1 - q^{step m})^power to precision q^n, via the pentagonal theorem."""
    c = [0] * n
    m = 0
    while True:
        hit = False
        for mm in ((m, -m) if m else (0,)):
            g = step * mm * (3 * mm - 1) // 2
            if g < n:
                c[g] += -1 if mm % 2 else 1
                hit = True
        if not hit:
            break
        m += 1
    return flint.fmpz_poly(c).pow_trunc(power, n)


def main(n_max: int = 5000) -> None:
    prec = n_max + 1
    A = [0] + [int(x) for x in euler_product(1, 9, prec).mul_low(euler_product(5, 3, prec), prec).coeffs()][: n_max]
    B = [0, 0] + [int(x) for x in euler_product(1, 3, prec).mul_low(euler_product(5, 9, prec), prec).coeffs()][: n_max - 1]
    A += [0] * (prec - len(A))
    B += [0] * (prec - len(B))
    chi = [0, 1, -1, -1, 1]
    for p in (2, 3, 7):
        # T_p-stability of span{A, B} with nebentypus chi_5
        for f in (A, B):
            img = [f[n * p] + (chi[p % 5] * p**5 * f[n // p] if n % p == 0 else 0) for n in range(1, n_max // p + 1)]
            a, b = img[0], img[1] - img[0] * A[2]
            assert all(img[n - 1] == a * A[n] + b * B[n] for n in range(1, n_max // p + 1)), p
    getcontext().prec = 40
    root11 = Decimal(11).sqrt()
    for sign, tag in ((1, "plus"), (-1, "minus")):
        path = OUT / f"level5_weight6_{tag}.txt"
        with path.open("w") as fh:
            fh.write("# weight 6\n# level 5\n# char D=5:2^2\n# normalization hecke\n")
            fh.write(f"# eigenvalue T_2 = {'+' if sign > 0 else '-'}2 sqrt(-11); eta(z)^9 eta(5z)^3 + (9 {'+' if sign > 0 else '-'} 2 sqrt(-11)) eta(z)^3 eta(5z)^9\n")
            for n in range(1, n_max + 1):
                x = A[n] + 9 * B[n]
                y = 2 * sign * B[n]
                im = format((y * root11).quantize(Decimal(1).scaleb(-20)), "f") if y else "0"
                fh.write(f"{n} {x} {im}\n")
        print("wrote", path)


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 5000)
