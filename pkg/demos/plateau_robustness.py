"""Compare how a raw and a robustified segmentation survive a misinformed seller."""
from pricedisc.generators import PLATEAU_EPS_S, plateau_market
from pricedisc.lp import optimal_segmentation
from pricedisc.robustify import audit_robustness, epsilon_schedule, robustify_segmentation
from pricedisc.sample_pipeline import adversarial_belief


def main():
    m = plateau_market()
    opt = optimal_segmentation(m, 0)
    sch = epsilon_schedule(PLATEAU_EPS_S, m.T, m.V)
    rob = robustify_segmentation(m, opt.segmentation, opt.prices, sch)
    print(f"schedule: eps_S={sch.eps_S:g} eps_I={sch.eps_I:.4f} eps_R={sch.eps_R:.3g}")
    print(f"audit passes: {audit_robustness(m, rob).ok}")
    for seed in range(5):
        raw = adversarial_belief(m, PLATEAU_EPS_S, opt.segmentation, 0, seed=seed).drop
        robust = adversarial_belief(m, PLATEAU_EPS_S, rob.robust, 0, seed=seed).drop
        print(f"seed {seed}: surplus drop raw {raw:.4f}, robust {robust:.4f}")


if __name__ == "__main__":
    main()
