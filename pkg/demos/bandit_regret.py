"""Regret of the intermediary against UCB and explore-then-commit sellers as the horizon grows."""
from pricedisc.bandit import simulate
from pricedisc.generators import pointmass_market


def main():
    m = pointmass_market(scaled=True)
    print("seller      m   regret  non-exploit  majors")
    for seller in ("ucb", "etc"):
        for n in (200, 2_000, 20_000):
            r = simulate(m, seller, 0, n, seed=1, keep_rounds=False)
            print(f"{seller:>6} {n:>6} {r.regret:8.4f} {r.non_exploit:>11} {r.major_explorations:>7}")


if __name__ == "__main__":
    main()
