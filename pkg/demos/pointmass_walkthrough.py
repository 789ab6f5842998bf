"""Solve the three-type point-mass market exactly and show the optimal split."""
from pricedisc.generators import pointmass_market
from pricedisc.lp import optimal_segmentation, rationalize
from pricedisc.segmentation import FixedPrices, Segmentation, TrueMonopoly, evaluate, posterior


def fmt(xs):
    return "(" + ", ".join(str(x) for x in xs) + ")"


def main():
    m = pointmass_market()
    base = evaluate(m, Segmentation.trivial(m), TrueMonopoly(), 0)
    print(f"no segmentation: revenue {base.revenue}, consumer surplus {base.cs}")

    opt = optimal_segmentation(m, 0)
    seg = rationalize(m, opt.segmentation) or opt.segmentation
    for s, p in zip(seg, opt.prices):
        print(f"  weight {s.w}: types {fmt(s.x)} -> values {fmt(posterior(m, s.x).pmf)}, price {p}")
    ev = evaluate(m, seg, FixedPrices(opt.prices), 0)
    print(f"optimal segmentation: revenue {ev.revenue}, consumer surplus {ev.cs}")


if __name__ == "__main__":
    main()
