#!/usr/bin/env python3
"""Independent high-precision oracles for the frozen values used in the C++ tests.

Everything here is computed with mpmath at 50 digits, without reference to
the C++ implementation. Run: python3 tests/oracles/oracles.py
"""
import mpmath as mp

mp.mp.dps = 50


def b(x, beta):
    return (1 - x) * mp.e ** (beta * x) - (1 + x) * mp.e ** (-beta * x)


def m_star(beta):
    beta = mp.mpf(beta)
    return mp.findroot(lambda m: beta * m - mp.atanh(m), (mp.mpf("0.01"), 1 - mp.mpf("1e-12")),
                       solver="anderson")


def K(r, beta):
    a = 2 * beta - 2
    c3 = beta**3 / 3 - beta**2

    def f(x):
        if abs(x) < mp.mpf("1e-12"):
            return -c3 * x / a**2
        return -(b(x, beta) - a * x) / (a * x * b(x, beta))
    return mp.quad(f, [0, r])


def D(r, beta):
    a = 2 * beta - 2
    return K(r, beta) + mp.log(r) / a + mp.log(a / 2) / (2 * a)


def transit(d, r, beta):
    return mp.quad(lambda x: 1 / b(x, beta), [d, r])


def exact_mean_exit(N, beta, n_thr):
    states = list(range(-n_thr + 2, n_thr - 1, 2))
    k = len(states)
    A = mp.zeros(k, k)
    rhs = mp.matrix([-1] * k)
    for i, n in enumerate(states):
        m = mp.mpf(n) / N
        lp = N * (1 - m) / 2 * mp.e ** (beta * m)
        lm = N * (1 + m) / 2 * mp.e ** (-beta * m)
        A[i, i] = -(lp + lm)
        if i + 1 < k:
            A[i, i + 1] = lp
        if i > 0:
            A[i, i - 1] = lm
    u = mp.lu_solve(A, rhs)
    return u[states.index(0)]


def splitmix64_stream(seed, count):
    out = []
    s = seed
    for _ in range(count):
        s = (s + 0x9E3779B97F4A7C15) & (2**64 - 1)
        z = s
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & (2**64 - 1)
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & (2**64 - 1)
        out.append(z ^ (z >> 31))
    return out


def xoshiro256ss_stream(seed, count):
    mask = (1 << 64) - 1
    rotl = lambda x, k: ((x << k) | (x >> (64 - k))) & mask
    s = splitmix64_stream(seed, 4)
    out = []
    for _ in range(count):
        out.append(rotl(s[1] * 5 & mask, 7) * 9 & mask)
        t = s[1] << 17 & mask
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = rotl(s[3], 45)
    return out


def kolmogorov_q(lam):
    return 2 * mp.nsum(lambda k: (-1) ** (k - 1) * mp.e ** (-2 * k**2 * lam**2), [1, mp.inf])


def main():
    print("jump_rates(0.5, N=4, beta=2):", mp.e, 3 / mp.e)
    for beta in (1.01, 1.2, 1.5, 2, 3, 5):
        print(f"m_star({beta}) =", m_star(beta))
    ms = m_star(mp.mpf("1.5"))
    r = ms / 2
    print("R = 0.5 m*(1.5) =", r)
    print("K(0.5 m*(1.5), 1.5) =", K(r, 1.5))
    print("D(0.5 m*(1.5), 1.5) =", D(r, 1.5))
    print("K(0.3, 1.5) =", K(mp.mpf("0.3"), 1.5))
    print("D(0.3, 1.5) =", D(mp.mpf("0.3"), 1.5))
    ms2 = m_star(2)
    print("K(0.5 m*(2), 2) =", K(ms2 / 2, mp.mpf(2)))
    print("K(1e-3, 1.5) =", K(mp.mpf("1e-3"), 1.5))
    print("t(0.1, 0.3, 1.5) =", transit(mp.mpf("0.1"), mp.mpf("0.3"), 1.5))
    print("F(0)-F(m*), beta=1.5:", -mp.log(2) - (-(mp.mpf("1.5") / 2) * ms**2 - mp.fsum([
        -(0.5 + ms / 2) * mp.log(0.5 + ms / 2), -(0.5 - ms / 2) * mp.log(0.5 - ms / 2)])))
    print("limit mean a=1 sigma=1:", (mp.euler + mp.log(2)) / 2)
    print("limit mean check by quadrature:",
          mp.quad(lambda z: -mp.log(abs(z)) * mp.npdf(z), [-mp.inf, 0, mp.inf]))
    print("2(1-Phi(1)) =", 2 * (1 - mp.ncdf(1)))
    print("-ln(Phi^-1(0.75)) =", -mp.log(mp.sqrt(2) * mp.erfinv(mp.mpf("0.5"))))
    print("Phi(1.959964) =", mp.ncdf(mp.mpf("1.959964")))
    print("KolmogorovQ(1.36) =", kolmogorov_q(mp.mpf("1.36")))
    print("gibbs_log_weight(4, N=10, 1.5) =", mp.log(120) + mp.mpf("1.2"))
    n4 = lambda beta: (1 + mp.mpf(3) / 4 * mp.e ** (-beta / 2)) / mp.e ** (beta / 2) + mp.mpf(1) / 4
    print("exact_mean_exit(N=4, n_thr=4, beta=1.5) closed form =", n4(mp.mpf("1.5")),
          " solver:", exact_mean_exit(4, mp.mpf("1.5"), 4))
    print("exact_mean_exit(N=10, beta=1.5, n_thr=6) =", exact_mean_exit(10, mp.mpf("1.5"), 6))
    n_thr50 = 2 * int(mp.ceil(50 * r / 2))
    print("n_thr(N=50, R=0.5m*) =", n_thr50)
    print("exact_mean_exit(N=50, beta=1.5, n_thr) =", exact_mean_exit(50, mp.mpf("1.5"), n_thr50))
    print("splitmix64(0) first outputs:", [hex(v) for v in splitmix64_stream(0, 3)])
    print("splitmix64(42) first outputs:", [hex(v) for v in splitmix64_stream(42, 3)])
    print("xoshiro256** seeded 42 first outputs:", [hex(v) for v in xoshiro256ss_stream(42, 3)])


if __name__ == "__main__":
    main()
