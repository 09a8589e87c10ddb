import math

import numpy as np
import pytest

from rdlab.attractor import (
    Norm,
    PointCloud,
    apply_time_map,
    attraction_distance,
    correlation_dimension,
    dimension_bound_check,
    farthest_point_subset,
    find_equilibrium,
    greedy_epsilon_net,
    pairwise_distances,
    sample_attractor,
    transport_net,
)
from rdlab.domain import (
    Field,
    h1_seminorm_values,
    laplacian_eigenvalues,
    lebesgue_norm,
    lebesgue_norm_values,
)
from rdlab.nonlinearity import NonlinearitySpec
from rdlab.profiles import eigenmode_mixture
from rdlab.solver import ProblemSpec, SolverConfig, Trajectory, step

BETA = 20.739208802178716  # bistable threshold with exactly one unstable mode


def bistable_problem(dom):
    return ProblemSpec(
        domain=dom, lam=1.0, f=NonlinearitySpec((-BETA, 0.0, 1.0)), g=None
    )


# ---------------------------------------------------------------------------
# distance matrices
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("norm", [Norm.lp(2.0), Norm.lp(4.0), Norm.h1()])
@pytest.mark.parametrize("method", ["auto", "direct"])
def test_pairwise_distances_match_bruteforce(dom_small, rng, norm, method):
    a = rng.standard_normal((5, *dom_small.shape))
    b = rng.standard_normal((4, *dom_small.shape))
    d = pairwise_distances(dom_small, a, b, norm, method=method)
    assert d.shape == (5, 4)
    for i in range(5):
        for j in range(4):
            diff = a[i] - b[j]
            if norm.kind == "h1":
                want = float(h1_seminorm_values(dom_small, diff))
            else:
                want = float(lebesgue_norm_values(dom_small, diff, norm.gamma))
            assert d[i, j] == pytest.approx(want, rel=1e-10, abs=1e-12)


def test_pairwise_distances_symmetric_zero_diagonal(dom_small, rng):
    a = rng.standard_normal((6, *dom_small.shape))
    d = pairwise_distances(dom_small, a, None, Norm.lp(2.0))
    assert np.all(np.diag(d) == 0.0)
    assert np.allclose(d, d.T)


def test_pairwise_direct_resolves_nearby_states(dom_small, rng):
    # Gram-matrix route loses digits when states are large and close; the
    # direct route must resolve a 1e-12 separation to full precision
    base = 1e3 * rng.standard_normal(dom_small.shape)
    shift = rng.standard_normal(dom_small.shape)
    a = np.stack([base, base + 1e-12 * shift])
    want = 1e-12 * float(lebesgue_norm_values(dom_small, shift, 2.0))
    d = pairwise_distances(dom_small, a, None, Norm.lp(2.0), method="direct")
    assert d[0, 1] == pytest.approx(want, rel=1e-6)


def test_norm_validation():
    with pytest.raises(ValueError):
        Norm(kind="linf")
    with pytest.raises(ValueError):
        Norm.lp(0.5)
    assert Norm.lp(4.0).label == "l4"
    assert Norm.h1().label == "h1"
    assert Norm.h1().requires_envelope


# ---------------------------------------------------------------------------
# point clouds and translation
# ---------------------------------------------------------------------------


def test_point_cloud_validation(dom_small, rng):
    with pytest.raises(ValueError):
        PointCloud(dom_small, rng.standard_normal(dom_small.shape))  # not stacked
    vals = rng.standard_normal((3, *dom_small.shape))
    vals[1, 5] = np.inf
    with pytest.raises(ValueError):
        PointCloud(dom_small, vals)


def test_cloud_translation_preserves_pairwise_distances(dom_small, rng):
    # metric structure is translation-invariant; the shifted cloud must give
    # back the same distance matrix up to rounding in the shift itself
    cloud = PointCloud(dom_small, rng.standard_normal((8, *dom_small.shape)))
    z = Field(dom_small, rng.standard_normal(dom_small.shape))
    moved = cloud.translated(z)
    assert moved.meta["translated"] is True
    for norm in (Norm.lp(2.0), Norm.lp(4.0)):
        d0 = pairwise_distances(dom_small, cloud.values, None, norm, method="direct")
        d1 = pairwise_distances(dom_small, moved.values, None, norm, method="direct")
        assert np.allclose(d0, d1, rtol=1e-12, atol=1e-13)


def test_translation_invariant_dimension(dom_small, rng):
    span = rng.random(120)
    direction = rng.standard_normal(dom_small.shape)
    cloud = PointCloud(dom_small, span[:, None] * direction[None, :])
    z = Field(dom_small, rng.standard_normal(dom_small.shape))
    est = correlation_dimension(cloud, Norm.lp(2.0))
    est_t = correlation_dimension(cloud.translated(z), Norm.lp(2.0))
    assert abs(est.dimension - est_t.dimension) <= 1e-9


# ---------------------------------------------------------------------------
# equilibria
# ---------------------------------------------------------------------------


def test_find_equilibrium_bistable_cubic(dom):
    problem = bistable_problem(dom)
    seed = Field.from_modes(dom, {1: math.sqrt(BETA - 1.0)})
    phi = find_equilibrium(problem, seed, tol=1e-9)
    assert float(np.max(phi.values)) == pytest.approx(3.557775245412756, rel=1e-9)
    assert lebesgue_norm(phi, 2.0) == pytest.approx(2.613691765060251, rel=1e-9)
    # genuine fixed point of the time stepper, not just a small residual
    moved = step(phi, problem, 1e-3, scheme="imex_euler")
    drift = lebesgue_norm_values(dom, moved.values - phi.values, 2.0)
    assert drift <= 1e-10


def test_find_equilibrium_rejects_bad_damping(dom_small):
    problem = bistable_problem(dom_small)
    seed = Field.from_modes(dom_small, {1: 1.0})
    with pytest.raises(ValueError):
        find_equilibrium(problem, seed, damping=0.0)


# ---------------------------------------------------------------------------
# epsilon-nets
# ---------------------------------------------------------------------------


def line_cloud(dom, rng, n=40):
    span = np.sort(rng.random(n))
    direction = Field.from_modes(dom, {1: 1.0})
    unit = direction.values / float(lebesgue_norm(direction, 2.0))
    return PointCloud(dom, span[:, None] * unit[None, :])


def test_greedy_net_covers_and_shrinks(dom_small, rng):
    cloud = line_cloud(dom_small, rng)
    d = pairwise_distances(dom_small, cloud.values, None, Norm.lp(2.0))
    diameter = float(d.max())
    big = greedy_epsilon_net(cloud, diameter + 0.1)
    assert len(big) == 1 and big.verified
    sizes = []
    for eps in (0.5, 0.1, 0.02):
        net = greedy_epsilon_net(cloud, eps)
        assert net.verified
        assert net.covering_radius < eps
        # net points are cloud members
        assert all(np.array_equal(net.values[k], cloud.values[i])
                   for k, i in enumerate(net.indices))
        sizes.append(len(net))
    assert sizes[0] <= sizes[1] <= sizes[2]


def test_greedy_net_rejects_bad_eps(dom_small, rng):
    cloud = line_cloud(dom_small, rng, n=5)
    with pytest.raises(ValueError):
        greedy_epsilon_net(cloud, 0.0)


def test_farthest_point_subset_spreads(dom_small, rng):
    cloud = line_cloud(dom_small, rng, n=60)
    sub = farthest_point_subset(cloud, 10)
    assert len(sub) == 10
    assert sub.meta["farthest_point_subset"] == 10
    d = pairwise_distances(dom_small, sub.values, None, Norm.lp(2.0))
    np.fill_diagonal(d, np.inf)
    # pairwise separation stays on the order of extent / m
    assert d.min() > 0.3 / 10
    # asking for more points than exist returns the cloud itself
    assert farthest_point_subset(cloud, 1000) is cloud


# ---------------------------------------------------------------------------
# attraction distance
# ---------------------------------------------------------------------------


def test_attraction_distance_monotone_tail(dom_small):
    mode = Field.from_modes(dom_small, {1: 1.0})
    cloud = PointCloud(dom_small, np.zeros((1, *dom_small.shape)))
    times = np.linspace(0.0, 1.0, 11)
    # exponential approach: distance strictly decreasing from the start
    decay = np.exp(-3.0 * times)
    tr = Trajectory(dom_small, times, decay[:, None] * mode.values[None, :])
    rep = attraction_distance([tr], cloud)
    assert rep.monotone_from == 0.0
    assert rep.final_distance == pytest.approx(
        math.exp(-3.0) * lebesgue_norm(mode, 2.0), rel=1e-12
    )
    # a transient bump pushes monotone_from to the bump's end
    bump = decay.copy()
    bump[4] = 2.0
    tr2 = Trajectory(dom_small, times, bump[:, None] * mode.values[None, :])
    rep2 = attraction_distance([tr2], cloud)
    assert rep2.monotone_from == pytest.approx(times[4])


def test_attraction_distance_h1_gate(dom_small):
    cloud = PointCloud(dom_small, np.zeros((1, *dom_small.shape)))
    times = np.array([0.0, 1.0])
    tr = Trajectory(dom_small, times, np.zeros((2, *dom_small.shape)))
    with pytest.raises(ValueError, match="envelope"):
        attraction_distance([tr], cloud, Norm.h1())


def test_apply_time_map_linear_decay(dom_small):
    problem = ProblemSpec(domain=dom_small, lam=1.0, f=None, g=None)
    mu1 = laplacian_eigenvalues(dom_small)[0]
    u0 = Field.from_modes(dom_small, {1: 1.0}).values[None, ...]
    out = apply_time_map(problem, u0, 0.5, SolverConfig(dt=1e-4, t_end=0.5))
    want = math.exp(-(1.0 + mu1) * 0.5) * u0
    assert np.allclose(out, want, rtol=1e-6)


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------


def test_sample_attractor_subcritical_collapse(dom_small, cubic):
    # lam = 1 with f' >= -1 keeps the zero state globally stable: every
    # member lands on it and the cloud collapses
    problem = ProblemSpec(domain=dom_small, lam=1.0, f=cubic, g=None)
    cloud = sample_attractor(
        problem, ensemble_size=4, t_spin=2.0, n_samples=3, delta_sample=0.05,
        seed=7, cfg=SolverConfig(dt=1e-3, t_end=3.0),
    )
    assert len(cloud) == 12
    assert cloud.meta["stabilized"]
    radii = lebesgue_norm_values(dom_small, cloud.values, 2.0)
    assert radii.max() < 1e-3


# ---------------------------------------------------------------------------
# transported nets
# ---------------------------------------------------------------------------


def test_transport_net_bistable(dom_small, rng):
    problem = bistable_problem(dom_small)
    # seed states near the two stable wells plus transients
    seeds = [eigenmode_mixture(dom_small, rng, n_modes=3, l2=a)
             for a in np.geomspace(0.05, 2.0, 12)]
    cloud = PointCloud.from_fields(seeds)
    net = greedy_epsilon_net(cloud, 0.5)
    cfg = SolverConfig(dt=1e-3, t_end=1.0)
    rep = transport_net(cloud, net, problem, lip=50.0, exponent=0.5,
                        norm_y=Norm.lp(4.0), cfg=cfg)
    assert rep.n_cloud == 12 and rep.n_net == len(net)
    assert rep.passed and rep.coverage_fraction == 1.0
    assert rep.worst_cover_ratio <= 1.0
    assert np.isfinite(rep.assigned_ratio_max)


def test_transport_net_gates(dom_small, rng):
    problem = bistable_problem(dom_small)
    cloud = line_cloud(dom_small, rng, n=6)
    with pytest.raises(ValueError, match=r"\(0, 1\]"):
        net = greedy_epsilon_net(cloud, 1.5)
        transport_net(cloud, net, problem, lip=1.0, exponent=0.5, norm_y=Norm.lp(4.0))
    net = greedy_epsilon_net(cloud, 0.5)
    with pytest.raises(ValueError, match="envelope"):
        transport_net(cloud, net, problem, lip=1.0, exponent=0.5, norm_y=Norm.h1())


# ---------------------------------------------------------------------------
# correlation dimension
# ---------------------------------------------------------------------------


def test_correlation_dimension_line(dom_small, rng):
    cloud = line_cloud(dom_small, rng, n=400)
    est = correlation_dimension(cloud)
    assert not est.degenerate
    assert est.dimension == pytest.approx(1.0, abs=0.15)
    assert est.n_pairs == 400 * 399 // 2


def test_correlation_dimension_two_points(dom_small):
    mode = Field.from_modes(dom_small, {1: 1.0}).values
    cloud = PointCloud(dom_small, np.stack([0.0 * mode, mode]))
    est = correlation_dimension(cloud)
    assert est.degenerate
    assert est.dimension == 0.0


def test_correlation_dimension_identical_points(dom_small):
    mode = Field.from_modes(dom_small, {1: 1.0}).values
    cloud = PointCloud(dom_small, np.stack([mode, mode, mode]))
    est = correlation_dimension(cloud)
    assert est.degenerate and est.dimension == 0.0


def test_correlation_dimension_h1_gate(dom_small, rng):
    cloud = line_cloud(dom_small, rng, n=10)
    with pytest.raises(ValueError, match="envelope"):
        correlation_dimension(cloud, Norm.h1())
    est = correlation_dimension(cloud, Norm.h1(), f_add_certified=True)
    assert est.norm_label == "h1"


def test_dimension_bound_check_line(dom_small, rng):
    # a line has dimension 1 in every metric here, so each bounding factor
    # must certify against the L2 reference
    cloud = line_cloud(dom_small, rng, n=300)
    rep = dimension_bound_check(cloud, p=4.0, gammas=(4.0,), f_add_certified=True)
    assert rep.estimates["l2"].dimension == pytest.approx(1.0, abs=0.15)
    assert rep.passed
    names = {c["name"] for c in rep.checks}
    assert names == {"l4", "h1"}
    for chk in rep.checks:
        assert chk["passed"], chk["name"]
        assert chk["measured"] <= chk["bound"] + chk["slack"]
