import math

import critsde


def test_constants_closed_forms():
    c = critsde.constants()
    assert abs(c["c_grad"] - 2.0 ** -0.5 * math.pi ** 0.75) < 1e-10
    assert abs(c["theta"] - 0.3) < 1e-12
    assert abs(c["c0"] - max(c["c_sup"], c["c_grad"])) < 1e-12


def test_example_drift_norm_scales_linearly():
    n1 = critsde.example_drift_norm(0.25)
    n2 = critsde.example_drift_norm(0.5)
    assert abs(n2 - 2.0 * n1) < 1e-12
    # ||phi||_2 / log 2 for the unit-mass Gaussian profile
    phi_l2 = (2.0 * math.sqrt(math.pi)) ** -0.5
    assert abs(n1 - 0.25 * phi_l2 / math.log(2.0)) < 1e-10


def test_philox_determinism():
    a = critsde.philox_uniform_pair(2026, 7, 11)
    b = critsde.philox_uniform_pair(2026, 7, 11)
    c = critsde.philox_uniform_pair(2026, 7, 12)
    assert a == b
    assert a != c
    assert 0.0 < a[0] <= 1.0 and 0.0 < a[1] <= 1.0


def test_simulate_terminal_brownian():
    xs = critsde.simulate_terminal(20000, 64, seed=1, x0=0.0)
    n = len(xs)
    assert n == 20000
    mean = sum(xs) / n
    var = sum((x - mean) ** 2 for x in xs) / (n - 1)
    assert abs(mean) < 4.0 / math.sqrt(n)
    assert abs(var - 1.0) < 0.1


def test_ks_and_lr():
    a = critsde.simulate_terminal(5000, 64, seed=3)
    b = critsde.simulate_terminal(5000, 64, seed=4)
    shifted = [x + 3.0 for x in a]
    assert critsde.ks_distance(a, a) == 0.0
    assert critsde.ks_distance(a, b) < 0.05
    assert critsde.ks_distance(a, shifted) > 0.8
    # L^2 norm of N(0,1): (2 sqrt(pi))^{-1/2} squared under the proxy power
    big = critsde.simulate_terminal(100000, 64, seed=5)
    exact = (2.0 * math.sqrt(math.pi)) ** -1.0
    assert abs(critsde.lr_norm(big, 2.0) - exact) < 0.05 * exact


def test_zvonkin_roundtrip():
    assert critsde.zvonkin_roundtrip_error() < 1e-6
