"""Acceptance gate: every criterion runs at its stated tolerance and prints a
final pass/fail line (visible with ``pytest -s``)."""

import time

import numpy as np

from conftest import random_morphism, random_morphism_chain
from ncplab.algebra import basis, mk_shape
from ncplab.channels import (
    congruent_embedding,
    from_linear,
    is_cp,
    is_unital,
    min_choi_eig,
    random_cpu_map,
    transpose_map,
)
from ncplab.covariance import kind_catalog, tracial_collapse_check
from ncplab.gns import build_gns, check_functor_laws, induced_contraction
from ncplab.models import (
    affine_compose,
    affine_pushforward_check,
    congruence_invariance_check,
    fisher_rao_simplex_metric,
    gaussian_fisher_rao_metric,
    gaussian_group_model,
    gaussian_model,
    metric_pullback,
    pure_qubit_sphere_metric,
    qubit_faithful_model,
    qubit_pure_model,
    qubit_qfi_metric,
    simplex_model,
)
from ncplab.states import is_faithful

SHAPES = [mk_shape([2]), mk_shape([3]), mk_shape([1, 1]), mk_shape([2, 1]), mk_shape([2, 3])]


def report(num: int, passed: bool, text: str) -> None:
    print(f"ACCEPTANCE {num} [{'PASS' if passed else 'FAIL'}] {text}")
    assert passed, f"criterion {num}: {text}"


def test_01_gns_contraction_norms():
    start = time.time()
    worst = 0.0
    count = 0
    for trial in range(200):
        shape_a = SHAPES[trial % len(SHAPES)]
        shape_b = SHAPES[(trial // len(SHAPES)) % len(SHAPES)]
        m = random_morphism(
            shape_a, shape_b, seed=trial, faithful=(trial % 3 != 0),
            mix_trace=0.1 if trial % 4 == 0 else 0.0,
        )
        con = induced_contraction(m, build_gns(*m.target), build_gns(*m.source))
        worst = max(worst, con.operator_norm)
        count += 1
    elapsed = time.time() - start
    ok = worst <= 1.0 + 1e-9 and count >= 200 and elapsed < 30.0
    report(
        1,
        ok,
        f"induced GNS maps are contractions: worst norm {worst:.12f} over "
        f"{count} morphisms in {elapsed:.1f}s",
    )


def test_02_functor_laws():
    chains = []
    for seed in range(100):
        shapes = [
            SHAPES[seed % len(SHAPES)],
            SHAPES[(seed + 1) % len(SHAPES)],
            SHAPES[(seed + 2) % len(SHAPES)],
            SHAPES[(seed + 4) % len(SHAPES)],
        ]
        chains.append(random_morphism_chain(shapes, seed=seed))
    rep = check_functor_laws(chains, tol=1e-9)
    ok = (
        rep["max_identity_deviation"] < 1e-9
        and rep["max_composition_deviation"] < 1e-9
    )
    report(
        2,
        ok,
        "functor laws on 100 chains of length 3: identity dev "
        f"{rep['max_identity_deviation']:.2e}, composition dev "
        f"{rep['max_composition_deviation']:.2e}",
    )


def test_03_monotonicity_all_kinds():
    from ncplab.covariance import monotonicity_check

    morphisms = []
    trial = 0
    while len(morphisms) < 100:
        shape_a = SHAPES[trial % len(SHAPES)]
        shape_b = SHAPES[(trial + 3) % len(SHAPES)]
        m = random_morphism(shape_a, shape_b, seed=10_000 + trial, mix_trace=0.15)
        trial += 1
        if is_faithful(m.source[1]) and is_faithful(m.target[1]):
            morphisms.append(m)
    worst = {}
    for kind in kind_catalog():
        w = 0.0
        for i, m in enumerate(morphisms):
            rep = monotonicity_check(kind, m, n_samples=10, seed=i, tol=1e-8)
            w = max(w, rep["exact_max_eig"])
        worst[kind.label] = w
    ok = all(v <= 1.0 + 1e-8 for v in worst.values())
    summary = ", ".join(f"{k}: {v:.10f}" for k, v in worst.items())
    report(3, ok, f"exact monotonicity ratios over 100 faithful morphisms: {summary}")


def test_04_fisher_rao_recovery():
    rng = np.random.default_rng(42)
    worst = 0.0
    for trial in range(50):
        n = 1 + trial % 6
        model = simplex_model(n)
        p = rng.dirichlet(np.ones(n + 1))
        p = 0.85 * p + 0.15 / (n + 1)
        theta = p[:-1]
        g = metric_pullback(model, theta)
        worst = max(worst, float(np.max(np.abs(g - fisher_rao_simplex_metric(theta)))))
    ok = worst <= 1e-9
    report(4, ok, f"simplex pullback vs Fisher-Rao oracle, 50 points n<=6: dev {worst:.2e}")


def test_05_qfi_recovery():
    rng = np.random.default_rng(43)
    model = qubit_faithful_model()
    worst = 0.0
    for _ in range(50):
        theta = np.array(
            [
                rng.uniform(0.05, 0.95),
                rng.uniform(0.15, np.pi - 0.15),
                rng.uniform(0.0, 2.0 * np.pi),
            ]
        )
        g = metric_pullback(model, theta)
        worst = max(worst, float(np.max(np.abs(g - qubit_qfi_metric(*theta)))))
    ok = worst <= 1e-8
    report(5, ok, f"faithful qubit pullback vs QFI oracle, 50 Bloch points: dev {worst:.2e}")


def test_06_fubini_study_proportionality():
    rng = np.random.default_rng(44)
    model = qubit_pure_model()
    worst = 0.0
    for _ in range(50):
        theta = np.array([rng.uniform(0.1, np.pi - 0.1), rng.uniform(0.0, 2.0 * np.pi)])
        g = metric_pullback(model, theta)
        worst = max(worst, float(np.max(np.abs(g - pure_qubit_sphere_metric(*theta)))))
    ok = worst <= 1e-8
    report(
        6,
        ok,
        "pure qubit pullback equals the unit sphere (4x Fubini-Study): "
        f"dev {worst:.2e}",
    )


def test_07_gaussian_model():
    start = time.time()
    mu, sigma = 0.4, 2.0
    theta = np.array([mu, sigma])
    oracle = gaussian_fisher_rao_metric(mu, sigma)
    denom = np.sqrt(np.outer(np.diag(oracle), np.diag(oracle)))
    errs = []
    for bins in (256, 1024, 4096):
        model = gaussian_model(bins, mu - 10.0 * sigma, mu + 10.0 * sigma)
        g = metric_pullback(model, theta)
        errs.append(float(np.max(np.abs(g - oracle) / denom)))
    convergent = errs[0] > errs[1] > errs[2] and errs[2] < 0.01

    push = affine_pushforward_check((1.0, 2.0), (0.3, 1.4), np.linspace(-8.0, 8.0, 1000))
    pointwise = push["max_abs_deviation"] < 1e-12

    composed = affine_compose((1.0, 2.0), (3.0, 4.0)) == (7.0, 8.0)
    gm = gaussian_group_model(1024, -12.0, 12.0)
    width = 24.0 / 1024
    aligned = gm.composition_deviation((4 * width, 1.0), (10 * width, 1.0), np.array([0.0, 1.0]))
    generic = [
        gaussian_group_model(bins, -12.0, 12.0).composition_deviation(
            (0.3, 1.1), (-0.2, 0.9), np.array([0.0, 1.0])
        )
        for bins in (256, 1024)
    ]
    maps_compose = aligned < 1e-12 and generic[0] > generic[1] and generic[1] < 0.01

    elapsed = time.time() - start
    ok = convergent and pointwise and composed and maps_compose and elapsed < 60.0
    report(
        7,
        ok,
        f"gaussian family: rel errors {[f'{e:.2e}' for e in errs]}, pushforward dev "
        f"{push['max_abs_deviation']:.1e}, composed-map gaps aligned {aligned:.1e} / "
        f"generic {generic[1]:.2e}, in {elapsed:.1f}s",
    )


def test_08_congruent_embedding_invariance():
    rng = np.random.default_rng(45)
    model = simplex_model(2)
    worst = 0.0
    for _ in range(20):
        sizes = rng.integers(1, 4, size=3)
        partition = np.repeat(np.arange(3), sizes)
        weights = np.concatenate([rng.dirichlet(np.ones(s)) for s in sizes])
        emb = congruent_embedding(partition, weights)
        thetas = []
        for _ in range(3):
            p = rng.dirichlet(np.ones(3))
            p = 0.85 * p + 0.05
            thetas.append(p[:2])
        rep = congruence_invariance_check(model, emb, thetas, tol=1e-9)
        worst = max(worst, rep["max_metric_deviation"])
    ok = worst <= 1e-9
    report(8, ok, f"Fisher-Rao invariant under 20 random congruent embeddings: dev {worst:.2e}")


def test_09_tracial_collapse():
    rep = tracial_collapse_check(
        [mk_shape([2]), mk_shape([3]), mk_shape([1, 1]), mk_shape([2, 1]), mk_shape([2, 3])],
        n_states=100,
        seed=46,
        tol=1e-9,
    )
    ok = rep["max_deviation"] <= 1e-9
    report(
        9,
        ok,
        "all catalog covariances collapse onto the GNS one on 100 tracial "
        f"states: dev {rep['max_deviation']:.2e}",
    )


def test_10_channel_verification():
    s2 = mk_shape([2])
    transpose_flagged = not is_cp(transpose_map(s2))

    def depolarizing_action(lam):
        cols = []
        for e in basis(s2):
            out = (1.0 - lam) * e.blocks[0] + lam * np.trace(e.blocks[0]) / 2.0 * np.eye(2)
            cols.append(out.ravel())
        return np.column_stack(cols)

    family_ok = True
    for lam in np.linspace(0.0, 2.0, 21):
        phi = from_linear(s2, s2, depolarizing_action(lam))
        family_ok = family_ok and (is_cp(phi) == (min_choi_eig(phi) >= -1e-9))

    random_ok = True
    for trial in range(100):
        src = SHAPES[trial % len(SHAPES)]
        dst = SHAPES[(trial // 7) % len(SHAPES)]
        phi = random_cpu_map(src, dst, seed=trial + 77)
        random_ok = random_ok and is_cp(phi) and is_unital(phi)

    ok = transpose_flagged and family_ok and random_ok
    report(
        10,
        ok,
        f"transpose flagged non-CP: {transpose_flagged}; depolarizing CP range "
        f"matches Choi spectrum: {family_ok}; 100 random Kraus channels CP+unital: {random_ok}",
    )
