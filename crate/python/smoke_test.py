"""Smoke test for the gausspaths extension.

Build and install first:
    cd crates/py && maturin build --release -o dist && pip install dist/*.whl
"""

import math

import gausspaths as gp


def main():
    assert gp.jacobi(2, 7) == 1 and gp.jacobi(3, 7) == -1

    fam = gp.family(10_000)
    assert all(c % 4 == 1 for c in fam)
    assert abs(gp.path_eval(fam[0], 1.0) - 1) < 1e-9

    p = gp.path_grid(13, 12)
    assert len(p) == 13 and p.resolution == 12
    assert abs(p.values[-1] - 1) < 1e-9

    sig = gp.EpsilonSignature(5, [1, 1, -1])
    assert sig.primes == [2, 3, 5] and sig.tag() == "eps_p1_p1_m1"
    assert len(gp.EpsilonSignature.all(5)) == 18
    assert gp.EpsilonSignature.of_modulus(13, 5).values == [-1, 1, -1]

    want = 1j * math.sqrt(23) / 22
    assert abs(gp.s_star(1, 23, sig) - want) < 1e-12
    assert gp.find_cusp_points(sig, 30) == [(23, True)]
    rep = gp.cusp_constants(1, 23, sig)
    assert rep["classification"] == "cusp" and abs(rep["delta"]) < 0.5

    shape = gp.ShapeSpec(sig, 1e-6)
    g = shape.grid(256)
    assert g.values[0] == 0 and g.values[-1] == 1
    assert shape.tail_bound <= 1e-6

    s = gp.sample_path(2000, 64, seed=1, signature=sig)
    assert s.values[0] == 0 and s.values[-1] == 1
    assert s.sup_distance(shape.grid(64)) >= 0

    m = gp.limit_moment([0.3], [1], [1], hmax=10_000)
    emp = gp.empirical_moment([0.3], [1], [1], 10_000)
    assert abs(emp - complex(m["value"][0], m["value"][1])) < 1e-3

    dev = gp.estimate_deviation_prob(sig, 10.0, 4, n=1000, r=64)
    assert dev["estimate"] == 0.0

    try:
        gp.EpsilonSignature(5, [0, 1, 1])
    except ValueError:
        pass
    else:
        raise AssertionError("epsilon_2 = 0 accepted")

    print("gausspaths smoke test: ok")


if __name__ == "__main__":
    main()
