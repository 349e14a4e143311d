"""Smoke test for the subjprice extension module.

Build and install first:
    pip install maturin
    maturin build --release -m crates/python/Cargo.toml
    pip install target/wheels/subjprice-*.whl
"""

import math

import subjprice as sp


def close(a, b, tol):
    assert abs(a - b) <= tol, f"{a} != {b} (tol {tol})"


def main():
    terms = sp.MarketTerms(1.0, 0.1, 1.0)
    close(terms.forward(), math.exp(0.1), 1e-15)

    put = sp.price(terms, 0.2, "put", 1.1)
    close(put, 0.07715168112562298, 1e-13)
    call = sp.price(terms, 0.2, "call", 1.1)
    close(call - put, 1.0 - 1.1 * terms.discount(), 1e-12)

    ln = sp.LogNormalDist.from_expected_return(terms, 0.2)
    close(sp.expected_payoff_price(ln, "put", 1.1, terms), put, 1e-9)
    close(sp.implied_vol(terms, "put", 1.1, put), 0.2, 1e-9)
    close(sp.delta(terms, 0.2, "put", 1.1), -0.4508757387154708, 1e-12)

    belief = sp.VolBelief(math.log(0.2), 0.5)
    close(sp.marginal_price(terms, belief, "put", 1.1), 0.08748168091812396, 1e-12)
    close(sum(w for _, w in belief.nodes()), 1.0, 1e-14)
    skew = sp.skew_curve(terms, belief, [0.6, 1.1, 1.6])
    assert skew[0][1] > skew[1][1] < skew[2][1], skew
    rows = sp.price_curve(terms, belief, [0.6, 1.1])
    assert rows[0][2] > rows[0][1]

    me = sp.maxent_fit(0.04, -0.8 * 0.04**1.5, 4.5 * 0.04**2, 1.0, mean_price=math.exp(0.1))
    m = me.moments()
    close(m[1], 0.04, 1e-8)
    assert me.lambda_()[3] < 0
    assert sp.expected_payoff_price(me, "put", 0.75, terms) > sp.price(terms, 0.2, "put", 0.75)

    bull = sp.LogNormalDist.from_growth_rate(terms, 0.15, 0.25)
    insts = [
        ("call", 1.1, sp.price(terms, 0.2, "call", 1.1), -10.0, 10.0),
        ("put", 1.0, sp.price(terms, 0.2, "put", 1.0), -10.0, 10.0),
    ]
    res = sp.optimize(insts, bull, terms, 0.6, 0.15, resolution=21)
    assert res["loss_probability"] <= 0.6 and res["expected_shortfall"] <= 0.15
    assert res["objective"] > 0

    try:
        sp.price(terms, 0.2, "straddle", 1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("unknown kind accepted")

    print(f"subjprice {sp.__version__}: smoke test passed")


if __name__ == "__main__":
    main()
